//! Event-log ingestion, daycasting, corpus generation and end-to-end runs.

mod corpus;
mod daycast;
mod ingest;
mod run;

use chrono::{NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{CVConfig, ModelKind};
use crate::machine::MachineKind;
use crate::reconstruct::{ReconstructionConfig, DEFAULT_ALPHA};
use crate::stats::DEFAULT_MIN_COUNT;

pub use corpus::{generate_corpus, CorpusSpec, GeneratedCorpus, Generator, StreamGroup};
pub use daycast::{discretize_daycast, split_train_test, Daycast, DroppedStream, ObservationWindow};
pub use ingest::{ingest, ingest_reader, EventKind, EventLog, EventRecord, Reject, LOG_HEADER};
pub use run::{evaluate_stream, run_corpus, scores_csv, write_bundle, RunReport, StreamError, StreamOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub delta_seconds: u32,
    /// Local clock time of the first kept bin.
    pub day_start: NaiveTime,
    /// Local clock time ending the window (exclusive).
    pub day_end: NaiveTime,
    pub train_weeks: usize,
    pub test_weeks: usize,
    /// Minimum number of active training bins for a stream to be kept.
    pub quiescence_threshold: usize,
    pub cv: CVConfig,
    pub alpha: f64,
    pub min_count: u64,
    pub models: Vec<ModelKind>,
    /// Fixed calendar window; when absent the span of all events is used.
    pub window: Option<ObservationWindow>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            delta_seconds: 600,
            day_start: NaiveTime::from_hms_opt(9, 0, 0).expect("valid time"),
            day_end: NaiveTime::from_hms_opt(22, 0, 0).expect("valid time"),
            train_weeks: 28,
            test_weeks: 16,
            quiescence_threshold: 50,
            cv: CVConfig::default(),
            alpha: DEFAULT_ALPHA,
            min_count: DEFAULT_MIN_COUNT,
            models: ModelKind::ALL.to_vec(),
            window: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_seconds == 0 {
            return Err(Error::InvalidArgument("bin width must be positive".into()));
        }
        if self.day_end <= self.day_start {
            return Err(Error::InvalidArgument(format!("day window {}..{} is empty", self.day_start, self.day_end)));
        }
        let span = self.window_seconds();
        if span % i64::from(self.delta_seconds) != 0 {
            return Err(Error::InvalidArgument(format!(
                "day window of {span} s is not a multiple of the {} s bin width",
                self.delta_seconds
            )));
        }
        if self.train_weeks == 0 || self.test_weeks == 0 {
            return Err(Error::InvalidArgument("train and test spans need at least one week each".into()));
        }
        if !self.models.contains(&ModelKind::Seasonal) {
            return Err(Error::InvalidArgument("the seasonal baseline is required for scoring".into()));
        }
        self.cv.validate()?;
        self.recon(MachineKind::EpsilonMachine).validate()
    }

    pub fn window_seconds(&self) -> i64 {
        (self.day_end - self.day_start).num_seconds()
    }

    pub fn day_start_seconds(&self) -> i64 {
        i64::from(self.day_start.num_seconds_from_midnight())
    }

    pub fn bins_per_day(&self) -> usize {
        (self.window_seconds() / i64::from(self.delta_seconds)) as usize
    }

    pub fn recon(&self, mode: MachineKind) -> ReconstructionConfig {
        ReconstructionConfig { l_max: self.cv.l_max, alpha: self.alpha, min_count: self.min_count, mode }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_give_78_bins() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.bins_per_day(), 78);
        assert_eq!(cfg.day_start_seconds(), 9 * 3600);
    }

    #[test]
    fn window_must_divide_into_bins() {
        let cfg = PipelineConfig { delta_seconds: 7 * 60, ..PipelineConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
