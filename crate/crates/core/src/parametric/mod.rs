//! Generative reference models and samplers.

mod family;
mod simulate;
pub mod sources;

pub use family::{family_to_machine, interevent_pmf, AlternatingRenewalFamily, Family, RenewalFamily, RenewalKind};
pub use simulate::{bernoulli_series, rng_for, seasonal_sampler, simulate, simulate_transducer, SIMULATED_BIN_WIDTH};
