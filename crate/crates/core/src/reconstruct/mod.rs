//! Causal-state reconstruction for machines and transducers.

mod determinize;
mod states;
mod suffix;

use serde::{Deserialize, Serialize};

pub use determinize::{determinize, determinize_partition};
pub use states::{homogenize, CandidateStateSet};
pub use suffix::{build_suffix_table, HistoryKey, SuffixTable};

use crate::error::{Error, Result};
use crate::machine::{Machine, MachineKind};
use crate::series::{BinarySeries, JointSeries, SeriesRef};
use crate::stats::DEFAULT_MIN_COUNT;

pub const DEFAULT_ALPHA: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub l_max: usize,
    pub alpha: f64,
    pub min_count: u64,
    pub mode: MachineKind,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self { l_max: 3, alpha: DEFAULT_ALPHA, min_count: DEFAULT_MIN_COUNT, mode: MachineKind::EpsilonMachine }
    }
}

impl ReconstructionConfig {
    pub fn new(l_max: usize, mode: MachineKind) -> Self {
        Self { l_max, mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_max == 0 {
            return Err(Error::InvalidArgument("history length must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("significance level {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

fn run(series: SeriesRef<'_>, cfg: &ReconstructionConfig) -> Result<Machine> {
    let table = build_suffix_table(series, cfg)?;
    let set = homogenize(&table, cfg)?;
    determinize(set, &table, cfg)
}

/// Reconstructs an epsilon-machine from an output-only series.
pub fn reconstruct_machine(series: &BinarySeries, cfg: &ReconstructionConfig) -> Result<Machine> {
    if cfg.mode != MachineKind::EpsilonMachine {
        return Err(Error::InvalidArgument(format!("mode {} needs reconstruct_transducer", cfg.mode.as_str())));
    }
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    run(series.into(), cfg)
}

/// Reconstructs a memoryless or memoryful transducer from joint input/output series.
pub fn reconstruct_transducer(series: &JointSeries, cfg: &ReconstructionConfig) -> Result<Machine> {
    if !cfg.mode.is_transducer() {
        return Err(Error::InvalidArgument("transducer reconstruction needs a transducer mode".into()));
    }
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    run(series.into(), cfg)
}

/// Dispatches on the series kind.
pub fn reconstruct(series: SeriesRef<'_>, cfg: &ReconstructionConfig) -> Result<Machine> {
    match series {
        SeriesRef::Output(s) => reconstruct_machine(s, cfg),
        SeriesRef::Joint(j) if cfg.mode == MachineKind::EpsilonMachine => reconstruct_machine(j.output(), cfg),
        SeriesRef::Joint(j) => reconstruct_transducer(j, cfg),
    }
}
