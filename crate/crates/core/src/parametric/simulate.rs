//! Seeded sampling from machines and seasonal profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::machine::{Machine, MachineKind, StateId, Symbol};
use crate::series::{BinarySeries, JointSeries, FIRST_MONDAY};

/// Default bin width attached to simulated series.
pub const SIMULATED_BIN_WIDTH: u32 = 600;

/// ChaCha8 generator seeded from `seed`, on an independent `stream`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left u above the cumulative sum: take the last positive entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Samples `steps` outputs from `m`, starting in a stationary state. Transducers
/// read their input from `input`, which must hold at least `steps` bins.
pub fn simulate(m: &Machine, steps: usize, seed: u64, input: Option<&BinarySeries>) -> Result<BinarySeries> {
    let inputs = match (m.kind(), input) {
        (MachineKind::EpsilonMachine, _) => None,
        (_, None) => return Err(Error::InvalidArgument("transducer simulation needs an input series".into())),
        (_, Some(y)) if y.len() < steps => {
            return Err(Error::InvalidArgument(format!("input has {} bins, need {steps}", y.len())));
        }
        (_, Some(y)) => Some(y.values()),
    };
    let mut rng = rng_for(seed, 0);
    let pi = m.stationary_distribution()?;
    let mut state: StateId = draw(&mut rng, &pi.weights);
    let n_out = m.outputs().len() as Symbol;
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let x = draw(&mut rng, m.emissions(state)) as Symbol;
        out.push(x);
        let sym = match (m.kind(), inputs) {
            (MachineKind::EpsilonMachine, _) => x,
            (MachineKind::TransducerMemoryful, Some(y)) => y[t] * n_out + x,
            (MachineKind::TransducerMemoryless, Some(y)) => y[t],
            _ => unreachable!("inputs checked above"),
        };
        state = m.transition(state, sym).ok_or_else(|| {
            Error::InvalidMachine(format!("state {state} has no transition on '{}'", m.alphabet().label(sym)))
        })?;
    }
    BinarySeries::single_segment(out, SIMULATED_BIN_WIDTH)
}

/// Runs a transducer over `input` and returns the joint series on the input's day grid.
pub fn simulate_transducer(m: &Machine, input: &BinarySeries, seed: u64) -> Result<JointSeries> {
    let out = simulate(m, input.len(), seed, Some(input))?;
    let out = BinarySeries::new(out.values().to_vec(), input.bin_width_seconds(), input.segments().to_vec())?;
    JointSeries::new(input.clone(), out)
}

/// I.i.d. Bernoulli(`p`) series.
pub fn bernoulli_series(p: f64, steps: usize, seed: u64) -> Result<BinarySeries> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("{p} is not a probability")));
    }
    let mut rng = rng_for(seed, 0);
    let values = (0..steps).map(|_| u8::from(rng.gen::<f64>() < p)).collect();
    BinarySeries::single_segment(values, SIMULATED_BIN_WIDTH)
}

/// Independent draws `X_t ~ Bernoulli(profile[t mod len])` over `weeks` periods.
/// When the profile length is a multiple of 7 the result is split into days
/// starting on a Monday.
pub fn seasonal_sampler(profile: &[f64], weeks: usize, seed: u64) -> Result<BinarySeries> {
    if profile.is_empty() {
        return Err(Error::InvalidArgument("empty profile".into()));
    }
    if let Some(p) = profile.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("profile value {p} outside [0, 1]")));
    }
    let mut rng = rng_for(seed, 0);
    let mut values = Vec::with_capacity(profile.len() * weeks);
    for _ in 0..weeks {
        values.extend(profile.iter().map(|&p| u8::from(rng.gen::<f64>() < p)));
    }
    if profile.len() % 7 == 0 {
        BinarySeries::from_days(values, profile.len() / 7, FIRST_MONDAY, SIMULATED_BIN_WIDTH)
    } else {
        BinarySeries::single_segment(values, SIMULATED_BIN_WIDTH)
    }
}
