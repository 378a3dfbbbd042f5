//! Named reference sources with known causal structure.

use crate::error::{Error, Result};
use crate::machine::{Alphabet, Machine, MachineBuilder, MachineKind, Symbol};

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {p} is not a probability")))
    }
}

fn finish(b: MachineBuilder) -> Machine {
    let m = b.build().expect("reference sources are valid by construction");
    let n = m.num_states();
    m.with_synchronizing_suffixes(n + 1)
}

fn bern(p1: f64) -> Vec<f64> {
    vec![1.0 - p1, p1]
}

/// Transitions for every output symbol with positive probability.
fn wire(b: &mut MachineBuilder, from: usize, emissions: &[f64], targets: [usize; 2]) {
    for (x, &to) in targets.iter().enumerate() {
        if emissions[x] > 0.0 {
            b.transition(from, x as Symbol, to);
        }
    }
}

/// I.i.d. process emitting 1 with probability `p`.
pub fn bernoulli(p: f64) -> Result<Machine> {
    check_prob("p", p)?;
    let mut b = MachineBuilder::epsilon_machine();
    let e = bern(p);
    let s = b.state(e.clone());
    wire(&mut b, s, &e, [s, s]);
    Ok(finish(b))
}

/// No two consecutive 1s; after a 0 a 1 follows with probability `p`.
pub fn golden_mean(p: f64) -> Result<Machine> {
    check_prob("p", p)?;
    let mut b = MachineBuilder::epsilon_machine();
    let free = b.state(bern(p));
    let forced = b.state(bern(0.0));
    wire(&mut b, free, &bern(p), [free, forced]);
    wire(&mut b, forced, &bern(0.0), [free, free]);
    Ok(finish(b))
}

/// Runs of 1s have even length; between them 0s are i.i.d. with a 1 starting
/// a pair with probability `p`.
pub fn even_process(p: f64) -> Result<Machine> {
    check_prob("p", p)?;
    let mut b = MachineBuilder::epsilon_machine();
    let even = b.state(bern(p));
    let odd = b.state(bern(1.0));
    wire(&mut b, even, &bern(p), [even, odd]);
    wire(&mut b, odd, &bern(1.0), [even, even]);
    Ok(finish(b))
}

/// Order-2 Markov chain; `p_one[code]` is P(1 | last two symbols), code = 2*older + newer.
pub fn order2_markov(p_one: [f64; 4]) -> Result<Machine> {
    for p in p_one {
        check_prob("p", p)?;
    }
    let mut b = MachineBuilder::epsilon_machine();
    for p in p_one {
        b.state(bern(p));
    }
    for (code, p) in p_one.iter().enumerate() {
        let newer = code & 1;
        wire(&mut b, code, &bern(*p), [newer << 1, (newer << 1) | 1]);
    }
    Ok(finish(b))
}

/// Three-state memoryful transducer: the state is the most recent joint
/// symbol, with both mentioned symbols merged into one state.
/// Emits 1 with probability `beta` after (0,0), `alpha` after (0,1) and
/// `gamma` after any mention.
pub fn mention_transducer(beta: f64, alpha: f64, gamma: f64) -> Result<Machine> {
    check_prob("beta", beta)?;
    check_prob("alpha", alpha)?;
    check_prob("gamma", gamma)?;
    let mut b = MachineBuilder::new(MachineKind::TransducerMemoryful, Alphabet::binary_joint(), Alphabet::binary());
    let quiet = b.state(bern(beta));
    let active = b.state(bern(alpha));
    let mentioned = b.state(bern(gamma));
    b.label(quiet, "(0,0)").label(active, "(0,1)").label(mentioned, "(1,*)");
    for (s, p) in [(quiet, beta), (active, alpha), (mentioned, gamma)] {
        let e = bern(p);
        for y in 0..2u8 {
            for x in 0..2u8 {
                if e[usize::from(x)] == 0.0 {
                    continue;
                }
                let to = match (y, x) {
                    (1, _) => mentioned,
                    (0, 0) => quiet,
                    _ => active,
                };
                b.transition(s, y * 2 + x, to);
            }
        }
    }
    Ok(finish(b))
}

/// Memoryless transducer counting bins since the last mention; state `k`
/// emits 1 with probability `p_active[k]`, the last state absorbing longer gaps.
pub fn time_since_mention(p_active: &[f64]) -> Result<Machine> {
    if p_active.is_empty() {
        return Err(Error::InvalidArgument("need at least one state".into()));
    }
    for &p in p_active {
        check_prob("p", p)?;
    }
    let mut b = MachineBuilder::new(MachineKind::TransducerMemoryless, Alphabet::binary(), Alphabet::binary());
    for &p in p_active {
        b.state(bern(p));
    }
    let last = p_active.len() - 1;
    for k in 0..=last {
        b.transition(k, 1, 0).transition(k, 0, (k + 1).min(last));
    }
    Ok(finish(b))
}

/// Memoryful transducer whose output copies the previous input.
pub fn copy_channel() -> Machine {
    let mut b = MachineBuilder::new(MachineKind::TransducerMemoryful, Alphabet::binary_joint(), Alphabet::binary());
    let zero = b.state(bern(0.0));
    let one = b.state(bern(1.0));
    for (s, x) in [(zero, 0u8), (one, 1u8)] {
        b.transition(s, x, zero).transition(s, 2 + x, one);
    }
    finish(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mean_stationary() {
        let pi = golden_mean(0.5).unwrap().stationary_distribution().unwrap();
        assert!((pi.weights[0] - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn sources_synchronize() {
        assert_eq!(golden_mean(0.5).unwrap().history_length(), Some(1));
        assert_eq!(order2_markov([0.1, 0.5, 0.7, 0.9]).unwrap().history_length(), Some(2));
        assert_eq!(mention_transducer(0.1, 0.7, 0.5).unwrap().history_length(), Some(1));
        assert_eq!(time_since_mention(&[0.5, 0.2, 0.05]).unwrap().history_length(), Some(2));
    }

    #[test]
    fn even_process_needs_a_zero_to_synchronize() {
        let m = even_process(0.5).unwrap();
        assert!(m.suffix_map().get(&vec![1, 1, 1]).is_none());
        assert_eq!(m.suffix_map().get(&vec![1, 1, 0]), Some(&0));
    }

    #[test]
    fn out_of_range_parameters() {
        assert!(bernoulli(1.5).is_err());
        assert!(mention_transducer(0.1, -0.1, 0.5).is_err());
    }
}
