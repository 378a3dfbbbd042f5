//! Computational-mechanics toolkit for binary event streams: causal-state
//! reconstruction, renewal families, seasonal baselines, predictive scoring
//! and architecture classification.

pub mod classify;
pub mod error;
pub mod evaluate;
pub mod machine;
pub mod parametric;
pub mod pipeline;
pub mod reconstruct;
pub mod seasonal;
pub mod serialize;
pub mod series;
pub mod stats;

pub use classify::{classify, classify_machine, classify_transducer, ArchitectureFamily, ArchitectureReport};
pub use error::{Error, Result};
pub use evaluate::{etv, filter_predict, score, EvaluationRecord, ModelKind, Prediction};
pub use machine::{Alphabet, Machine, MachineBuilder, MachineKind, StateId, StationaryDistribution, Symbol};
pub use reconstruct::{reconstruct, reconstruct_machine, reconstruct_transducer, ReconstructionConfig};
pub use seasonal::{fit_seasonal, SeasonalModel};
pub use serialize::{serialize_machine, MachineFormat};
pub use series::{BinarySeries, DaySegment, JointSeries, SeriesRef};
pub use stats::{g_statistic, g_test, CountVector, Decision, TestOutcome};
