//! Benchmark fixtures.

use cmech_core::parametric::{bernoulli_series, simulate, simulate_transducer, sources};
use cmech_core::{BinarySeries, JointSeries};

/// Golden-mean output series of `steps` symbols.
pub fn golden_mean_series(steps: usize) -> BinarySeries {
    let m = sources::golden_mean(0.5).expect("valid parameter");
    simulate(&m, steps, 7, None).expect("simulation succeeds")
}

/// Mention-driven transducer output on i.i.d. input with rate 0.1.
pub fn mention_series(steps: usize) -> JointSeries {
    let m = sources::mention_transducer(0.1, 0.7, 0.5).expect("valid parameters");
    let input = bernoulli_series(0.1, steps, 8).expect("valid rate");
    simulate_transducer(&m, &input, 9).expect("simulation succeeds")
}
