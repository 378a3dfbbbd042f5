use std::collections::BTreeMap;
use std::f64::consts::TAU;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::Machine;
use crate::parametric::{
    family_to_machine, rng_for, simulate, simulate_transducer, sources, AlternatingRenewalFamily, RenewalFamily,
};
use crate::pipeline::daycast::ObservationWindow;
use crate::pipeline::ingest::{EventKind, EventRecord, LOG_HEADER};
use crate::pipeline::PipelineConfig;
use crate::series::{date_to_epoch_day, weekday_of, BinarySeries, JointSeries};

fn default_weeks() -> usize {
    44
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date")
}

fn default_offsets() -> Vec<i32> {
    vec![0]
}

fn default_mention_rate() -> f64 {
    0.05
}

/// Description of a synthetic corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    #[serde(default = "default_weeks")]
    pub weeks: usize,
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
    /// UTC offsets assigned to streams in turn.
    #[serde(default = "default_offsets")]
    pub utc_offsets_min: Vec<i32>,
    pub groups: Vec<StreamGroup>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamGroup {
    pub count: usize,
    /// Rate of the i.i.d. mention input.
    #[serde(default = "default_mention_rate")]
    pub mention_rate: f64,
    #[serde(flatten)]
    pub generator: Generator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Generator {
    Bernoulli {
        p: f64,
    },
    Renewal {
        head: Vec<f64>,
    },
    ReverseRenewal {
        head: Vec<f64>,
    },
    AlternatingRenewal {
        quiescence: Vec<f64>,
        activity: Vec<f64>,
    },
    /// Logit of the activity rate as a Fourier series over the week.
    Seasonal {
        intercept: f64,
        harmonics: Vec<[f64; 2]>,
    },
    MentionTransducer {
        beta: f64,
        alpha: f64,
        gamma: f64,
    },
    TimeSinceMention {
        p_active: Vec<f64>,
    },
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Bernoulli { .. } => "bernoulli",
            Generator::Renewal { .. } => "renewal",
            Generator::ReverseRenewal { .. } => "reverse_renewal",
            Generator::AlternatingRenewal { .. } => "alternating_renewal",
            Generator::Seasonal { .. } => "seasonal",
            Generator::MentionTransducer { .. } => "mention_transducer",
            Generator::TimeSinceMention { .. } => "time_since_mention",
        }
    }

    fn machine(&self) -> Result<Option<Machine>> {
        Ok(Some(match self {
            Generator::Bernoulli { p } => sources::bernoulli(*p)?,
            Generator::Renewal { head } => family_to_machine(&RenewalFamily::renewal(head.clone())?.into()),
            Generator::ReverseRenewal { head } => family_to_machine(&RenewalFamily::reverse(head.clone())?.into()),
            Generator::AlternatingRenewal { quiescence, activity } => family_to_machine(
                &AlternatingRenewalFamily::new(
                    RenewalFamily::renewal(quiescence.clone())?,
                    RenewalFamily::reverse(activity.clone())?,
                )?
                .into(),
            ),
            Generator::MentionTransducer { beta, alpha, gamma } => sources::mention_transducer(*beta, *alpha, *gamma)?,
            Generator::TimeSinceMention { p_active } => sources::time_since_mention(p_active)?,
            Generator::Seasonal { .. } => return Ok(None),
        }))
    }
}

/// Weekly activity profile of a seasonal generator.
fn seasonal_profile(intercept: f64, harmonics: &[[f64; 2]], period: usize) -> Vec<f64> {
    (0..period)
        .map(|t| {
            let theta = TAU * t as f64 / period as f64;
            let eta = harmonics.iter().enumerate().fold(intercept, |acc, (k, [a, b])| {
                let w = (k + 1) as f64 * theta;
                acc + a * w.cos() + b * w.sin()
            });
            1.0 / (1.0 + (-eta).exp())
        })
        .collect()
}

pub struct GeneratedCorpus {
    /// The event log as CSV text.
    pub csv: String,
    /// Window that reproduces `truth` when the log is daycast.
    pub window: ObservationWindow,
    /// Generator name per stream.
    pub families: BTreeMap<String, String>,
    pub truth: BTreeMap<String, JointSeries>,
}

fn stream_seed(seed: u64, index: u64, role: u64) -> u64 {
    let mut rng = rng_for(seed, index.wrapping_mul(4).wrapping_add(role));
    rng.gen()
}

/// Simulates every stream of `spec` on the daycast grid of `cfg` and renders
/// one event per active bin, at the bin centre.
pub fn generate_corpus(spec: &CorpusSpec, cfg: &PipelineConfig, seed: u64) -> Result<GeneratedCorpus> {
    cfg.validate()?;
    if spec.weeks == 0 {
        return Err(Error::InvalidArgument("corpus needs at least one week".into()));
    }
    if spec.utc_offsets_min.is_empty() || spec.utc_offsets_min.iter().any(|o| o.abs() >= 24 * 60) {
        return Err(Error::InvalidArgument("utc offsets must be nonempty and within a day".into()));
    }
    let first_day = date_to_epoch_day(spec.start_date);
    if first_day < 2 {
        return Err(Error::InvalidArgument("start date must be after 1970-01-02".into()));
    }
    let bpd = cfg.bins_per_day();
    let days = spec.weeks * 7;
    let steps = days * bpd;
    let delta = i64::from(cfg.delta_seconds);

    let mut truth = BTreeMap::new();
    let mut families = BTreeMap::new();
    let mut offsets = BTreeMap::new();
    let mut per_family: BTreeMap<&str, usize> = BTreeMap::new();
    let mut index = 0u64;
    for group in &spec.groups {
        if !(0.0..=1.0).contains(&group.mention_rate) {
            return Err(Error::InvalidArgument(format!("mention rate {} is not a probability", group.mention_rate)));
        }
        let machine = group.generator.machine()?;
        let name = group.generator.name();
        for _ in 0..group.count {
            let n = per_family.entry(name).or_default();
            let id = format!("{name}-{n:03}");
            *n += 1;
            let mut rng = rng_for(stream_seed(seed, index, 0), 0);
            let mentions: Vec<u8> = (0..steps).map(|_| u8::from(rng.gen::<f64>() < group.mention_rate)).collect();
            let input = BinarySeries::from_days(mentions, bpd, first_day, cfg.delta_seconds)?;
            let out_seed = stream_seed(seed, index, 1);
            let joint = match (&machine, &group.generator) {
                (Some(m), _) if m.kind().is_transducer() => simulate_transducer(m, &input, out_seed)?,
                (Some(m), _) => {
                    let out = simulate(m, steps, out_seed, None)?;
                    let out = BinarySeries::from_days(out.values().to_vec(), bpd, first_day, cfg.delta_seconds)?;
                    JointSeries::new(input, out)?
                }
                (None, Generator::Seasonal { intercept, harmonics }) => {
                    let profile = seasonal_profile(*intercept, harmonics, 7 * bpd);
                    let mut rng = rng_for(out_seed, 0);
                    let mut values = Vec::with_capacity(steps);
                    for d in 0..days as i64 {
                        let base = weekday_of(first_day + d) * bpd;
                        values.extend((0..bpd).map(|j| u8::from(rng.gen::<f64>() < profile[base + j])));
                    }
                    let out = BinarySeries::from_days(values, bpd, first_day, cfg.delta_seconds)?;
                    JointSeries::new(input, out)?
                }
                (None, _) => unreachable!("only the seasonal generator has no machine"),
            };
            offsets.insert(id.clone(), spec.utc_offsets_min[index as usize % spec.utc_offsets_min.len()]);
            families.insert(id.clone(), name.to_string());
            truth.insert(id, joint);
            index += 1;
        }
    }

    let mut records = Vec::new();
    for (id, joint) in &truth {
        let offset = offsets[id];
        for (kind, series) in [(EventKind::Mention, joint.input()), (EventKind::Post, joint.output())] {
            for seg in series.segments() {
                let day_start = seg.epoch_day * 86_400 + cfg.day_start_seconds();
                for (j, &v) in series.segment_values(seg).iter().enumerate() {
                    if v == 1 {
                        let local = day_start + j as i64 * delta + delta / 2;
                        records.push(EventRecord {
                            stream_id: id.clone(),
                            timestamp: local - 60 * i64::from(offset),
                            kind,
                            utc_offset_min: offset,
                        });
                    }
                }
            }
        }
    }
    records.sort();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LOG_HEADER)?;
    for r in &records {
        w.write_record([
            r.stream_id.as_str(),
            &r.timestamp.to_string(),
            r.kind.as_str(),
            &r.utc_offset_min.to_string(),
        ])?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv output is UTF-8");
    Ok(GeneratedCorpus { csv, window: ObservationWindow { first_day: spec.start_date, days }, families, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{discretize_daycast, ingest_reader};
    use std::path::Path;

    fn spec(groups: Vec<StreamGroup>, weeks: usize) -> CorpusSpec {
        CorpusSpec { weeks, start_date: default_start(), utc_offsets_min: vec![0, -300, 330], groups }
    }

    fn group(generator: Generator) -> StreamGroup {
        StreamGroup { count: 1, mention_rate: 0.1, generator }
    }

    #[test]
    fn round_trip_through_ingest() {
        let s = spec(
            vec![
                group(Generator::Bernoulli { p: 0.2 }),
                group(Generator::MentionTransducer { beta: 0.1, alpha: 0.7, gamma: 0.5 }),
                group(Generator::Seasonal { intercept: -1.0, harmonics: vec![[1.0, 0.0]] }),
            ],
            2,
        );
        let cfg = PipelineConfig::default();
        let g = generate_corpus(&s, &cfg, 7).unwrap();
        let log = ingest_reader(g.csv.as_bytes(), Path::new("g")).unwrap();
        let cfg = PipelineConfig { window: Some(g.window), quiescence_threshold: 0, ..cfg };
        let d = discretize_daycast(&log, &cfg).unwrap();
        assert_eq!(d.streams, g.truth);
    }

    #[test]
    fn invalid_family_cites_invariant() {
        let s = spec(vec![group(Generator::Renewal { head: vec![0.7, 0.5] })], 1);
        let err = generate_corpus(&s, &PipelineConfig::default(), 0).err().unwrap();
        assert!(matches!(err, Error::InvalidFamily(_)), "{err}");
    }

    #[test]
    fn deterministic_bytes() {
        let s = spec(vec![group(Generator::Renewal { head: vec![0.1, 0.3] })], 1);
        let a = generate_corpus(&s, &PipelineConfig::default(), 3).unwrap().csv;
        let b = generate_corpus(&s, &PipelineConfig::default(), 3).unwrap().csv;
        assert_eq!(a, b);
        assert_ne!(a, generate_corpus(&s, &PipelineConfig::default(), 4).unwrap().csv);
    }

    #[test]
    fn profile_is_logistic() {
        let p = seasonal_profile(0.0, &[[1.0, 0.0]], 4);
        assert!((p[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((p[1] - 0.5).abs() < 1e-15);
    }
}
