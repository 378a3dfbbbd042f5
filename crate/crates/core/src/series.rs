//! Daycasted binary series and their calendar bookkeeping.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A contiguous daycasted run of bins belonging to one local calendar day.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySegment {
    pub start: usize,
    pub len: usize,
    /// Local calendar day, counted in days since 1970-01-01.
    pub epoch_day: i64,
}

impl DaySegment {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn date(&self) -> NaiveDate {
        epoch_day_to_date(self.epoch_day)
    }

    /// Day of week with Monday = 0.
    pub fn weekday(&self) -> usize {
        weekday_of(self.epoch_day)
    }
}

pub fn epoch_day_to_date(day: i64) -> NaiveDate {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    if day >= 0 {
        epoch + Days::new(day as u64)
    } else {
        epoch - Days::new(day.unsigned_abs())
    }
}

pub fn date_to_epoch_day(date: NaiveDate) -> i64 {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    (date - epoch).num_days()
}

/// Monday = 0. 1970-01-01 was a Thursday.
pub fn weekday_of(epoch_day: i64) -> usize {
    (epoch_day + 3).rem_euclid(7) as usize
}

/// First Monday on or after the epoch (1970-01-05).
pub const FIRST_MONDAY: i64 = 4;

/// A binary (0/1) series split into equally sized day segments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySeries {
    values: Vec<u8>,
    bin_width_seconds: u32,
    segments: Vec<DaySegment>,
}

impl BinarySeries {
    pub fn new(values: Vec<u8>, bin_width_seconds: u32, segments: Vec<DaySegment>) -> Result<Self> {
        if bin_width_seconds == 0 {
            return Err(Error::InvalidSeries("bin width must be positive".into()));
        }
        if let Some(pos) = values.iter().position(|&v| v > 1) {
            return Err(Error::InvalidSeries(format!("value {} at bin {pos} is not binary", values[pos])));
        }
        let mut cursor = 0;
        for (i, seg) in segments.iter().enumerate() {
            if seg.start != cursor {
                return Err(Error::InvalidSeries(format!(
                    "segment {i} starts at {} but previous segment ends at {cursor}",
                    seg.start
                )));
            }
            if seg.len == 0 || seg.len != segments[0].len {
                return Err(Error::InvalidSeries(format!(
                    "segment {i} has length {} but bins-per-day is {}",
                    seg.len, segments[0].len
                )));
            }
            if i > 0 && seg.epoch_day <= segments[i - 1].epoch_day {
                return Err(Error::InvalidSeries(format!("segment {i} is not in calendar order")));
            }
            cursor = seg.end();
        }
        if cursor != values.len() {
            return Err(Error::InvalidSeries(format!(
                "segments cover {cursor} bins but the series has {}",
                values.len()
            )));
        }
        Ok(Self { values, bin_width_seconds, segments })
    }

    /// One segment spanning the whole series; used for simulated streams.
    pub fn single_segment(values: Vec<u8>, bin_width_seconds: u32) -> Result<Self> {
        let segments = if values.is_empty() {
            Vec::new()
        } else {
            vec![DaySegment { start: 0, len: values.len(), epoch_day: FIRST_MONDAY }]
        };
        Self::new(values, bin_width_seconds, segments)
    }

    /// Chops `values` into consecutive days of `bins_per_day` bins starting at `first_epoch_day`.
    pub fn from_days(
        values: Vec<u8>,
        bins_per_day: usize,
        first_epoch_day: i64,
        bin_width_seconds: u32,
    ) -> Result<Self> {
        if bins_per_day == 0 || values.len() % bins_per_day != 0 {
            return Err(Error::InvalidSeries(format!(
                "{} bins is not a whole number of {bins_per_day}-bin days",
                values.len()
            )));
        }
        let segments = (0..values.len() / bins_per_day)
            .map(|d| DaySegment { start: d * bins_per_day, len: bins_per_day, epoch_day: first_epoch_day + d as i64 })
            .collect();
        Self::new(values, bin_width_seconds, segments)
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bin_width_seconds(&self) -> u32 {
        self.bin_width_seconds
    }

    pub fn segments(&self) -> &[DaySegment] {
        &self.segments
    }

    pub fn bins_per_day(&self) -> Option<usize> {
        self.segments.first().map(|s| s.len)
    }

    pub fn segment_values(&self, seg: &DaySegment) -> &[u8] {
        &self.values[seg.start..seg.end()]
    }

    pub fn active_bins(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    /// Keeps only the listed segments (by position), preserving calendar order.
    pub fn select_segments(&self, indices: &[usize]) -> Self {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut values = Vec::new();
        let mut segments = Vec::with_capacity(sorted.len());
        for &i in &sorted {
            let seg = self.segments[i];
            segments.push(DaySegment { start: values.len(), len: seg.len, epoch_day: seg.epoch_day });
            values.extend_from_slice(self.segment_values(&seg));
        }
        Self { values, bin_width_seconds: self.bin_width_seconds, segments }
    }

    /// Segments `[from, to)` by position.
    pub fn segment_range(&self, from: usize, to: usize) -> Self {
        let idx: Vec<usize> = (from..to.min(self.segments.len())).collect();
        self.select_segments(&idx)
    }

    /// Bin-of-week phase for each bin, using the calendar weekday of its segment.
    pub fn week_phases(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.values.len());
        for seg in &self.segments {
            let base = seg.weekday() * seg.len;
            out.extend((0..seg.len).map(|j| base + j));
        }
        out
    }
}

/// Input (mentions) and output (activity) series on a shared daycast grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointSeries {
    input: BinarySeries,
    output: BinarySeries,
}

impl JointSeries {
    pub fn new(input: BinarySeries, output: BinarySeries) -> Result<Self> {
        if input.bin_width_seconds != output.bin_width_seconds {
            return Err(Error::InvalidSeries("input and output bin widths differ".into()));
        }
        if input.segments != output.segments {
            return Err(Error::InvalidSeries("input and output day segments differ".into()));
        }
        Ok(Self { input, output })
    }

    pub fn input(&self) -> &BinarySeries {
        &self.input
    }

    pub fn output(&self) -> &BinarySeries {
        &self.output
    }

    pub fn segments(&self) -> &[DaySegment] {
        self.output.segments()
    }

    pub fn len(&self) -> usize {
        self.output.len()
    }

    pub fn is_empty(&self) -> bool {
        self.output.is_empty()
    }

    pub fn select_segments(&self, indices: &[usize]) -> Self {
        Self { input: self.input.select_segments(indices), output: self.output.select_segments(indices) }
    }

    pub fn segment_range(&self, from: usize, to: usize) -> Self {
        Self { input: self.input.segment_range(from, to), output: self.output.segment_range(from, to) }
    }
}

/// Borrowed view over either kind of series.
#[derive(Clone, Copy, Debug)]
pub enum SeriesRef<'a> {
    Output(&'a BinarySeries),
    Joint(&'a JointSeries),
}

impl<'a> SeriesRef<'a> {
    pub fn output(&self) -> &'a BinarySeries {
        match self {
            SeriesRef::Output(s) => s,
            SeriesRef::Joint(j) => j.output(),
        }
    }

    pub fn input(&self) -> Option<&'a BinarySeries> {
        match self {
            SeriesRef::Output(_) => None,
            SeriesRef::Joint(j) => Some(j.input()),
        }
    }

    pub fn segments(&self) -> &'a [DaySegment] {
        self.output().segments()
    }
}

impl<'a> From<&'a BinarySeries> for SeriesRef<'a> {
    fn from(s: &'a BinarySeries) -> Self {
        SeriesRef::Output(s)
    }
}

impl<'a> From<&'a JointSeries> for SeriesRef<'a> {
    fn from(s: &'a JointSeries) -> Self {
        SeriesRef::Joint(s)
    }
}
