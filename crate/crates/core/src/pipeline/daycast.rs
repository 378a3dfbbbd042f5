use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::ingest::{EventKind, EventLog, EventRecord};
use crate::pipeline::PipelineConfig;
use crate::series::{date_to_epoch_day, epoch_day_to_date, BinarySeries, JointSeries};

const DAY: i64 = 86_400;

/// Inclusive run of local calendar days shared by every stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationWindow {
    pub first_day: NaiveDate,
    pub days: usize,
}

impl ObservationWindow {
    pub fn first_epoch_day(&self) -> i64 {
        date_to_epoch_day(self.first_day)
    }

    fn contains(&self, epoch_day: i64) -> bool {
        let first = self.first_epoch_day();
        epoch_day >= first && epoch_day < first + self.days as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedStream {
    pub stream_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Daycast {
    pub window: Option<ObservationWindow>,
    /// Mentions as input, posts as output.
    pub streams: BTreeMap<String, JointSeries>,
    pub dropped: Vec<DroppedStream>,
}

fn local_seconds(r: &EventRecord) -> i64 {
    r.timestamp + 60 * i64::from(r.utc_offset_min)
}

/// Window spanning the first to the last local event day across all streams.
fn span_of(log: &EventLog) -> Option<ObservationWindow> {
    let days = log.records.iter().map(|r| local_seconds(r).div_euclid(DAY));
    let (lo, hi) = days.fold(None, |acc: Option<(i64, i64)>, d| match acc {
        None => Some((d, d)),
        Some((lo, hi)) => Some((lo.min(d), hi.max(d))),
    })?;
    Some(ObservationWindow { first_day: epoch_day_to_date(lo), days: (hi - lo + 1) as usize })
}

/// Bins each stream's posts and mentions on the daily window, one segment per
/// calendar day. Days without events inside the window are kept as quiet days.
pub fn discretize_daycast(log: &EventLog, cfg: &PipelineConfig) -> Result<Daycast> {
    cfg.validate()?;
    let window = cfg.window.or_else(|| span_of(log));
    let mut out = Daycast { window, streams: BTreeMap::new(), dropped: Vec::new() };
    let Some(window) = window else {
        return Ok(out);
    };
    let bpd = cfg.bins_per_day();
    let start = cfg.day_start_seconds();
    let end = start + cfg.window_seconds();
    let delta = i64::from(cfg.delta_seconds);
    let first_day = window.first_epoch_day();
    let train_bins = (cfg.train_weeks * 7 * bpd).min(window.days * bpd);

    let mut by_stream: BTreeMap<&str, Vec<&EventRecord>> = BTreeMap::new();
    for r in &log.records {
        by_stream.entry(r.stream_id.as_str()).or_default().push(r);
    }
    for (id, records) in by_stream {
        let first = records.iter().map(|r| r.timestamp).min().expect("nonempty");
        let last = records.iter().map(|r| r.timestamp).max().expect("nonempty");
        if last - first < DAY {
            out.dropped
                .push(DroppedStream { stream_id: id.to_string(), reason: "events span less than one full day".into() });
            continue;
        }
        let mut posts = vec![0u8; window.days * bpd];
        let mut mentions = vec![0u8; window.days * bpd];
        for r in records {
            let local = local_seconds(r);
            let (day, sod) = (local.div_euclid(DAY), local.rem_euclid(DAY));
            if !window.contains(day) || sod < start || sod >= end {
                continue;
            }
            let bin = (day - first_day) as usize * bpd + ((sod - start) / delta) as usize;
            match r.kind {
                EventKind::Post => posts[bin] = 1,
                EventKind::Mention => mentions[bin] = 1,
            }
        }
        let active = posts[..train_bins].iter().filter(|&&v| v == 1).count();
        if active < cfg.quiescence_threshold {
            out.dropped.push(DroppedStream {
                stream_id: id.to_string(),
                reason: format!("quiescent: {active} active training bins < {}", cfg.quiescence_threshold),
            });
            continue;
        }
        let input = BinarySeries::from_days(mentions, bpd, first_day, cfg.delta_seconds)?;
        let output = BinarySeries::from_days(posts, bpd, first_day, cfg.delta_seconds)?;
        out.streams.insert(id.to_string(), JointSeries::new(input, output)?);
    }
    Ok(out)
}

/// Chronological split at a week boundary: the first `train_weeks` weeks, then
/// the next `test_weeks`. Days past the test span are ignored.
pub fn split_train_test(series: &JointSeries, cfg: &PipelineConfig) -> Result<(JointSeries, JointSeries)> {
    let weeks = series.segments().len() / 7;
    let required = cfg.train_weeks + cfg.test_weeks;
    if weeks < required {
        return Err(Error::InsufficientSpan { available: weeks, required });
    }
    let cut = cfg.train_weeks * 7;
    Ok((series.segment_range(0, cut), series.segment_range(cut, required * 7)))
}
