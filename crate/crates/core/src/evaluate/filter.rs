//! Longest-suffix state filtering and per-bin activity predictions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{history_symbol, Machine, MachineKind, StateId, Symbol};
use crate::series::{BinarySeries, SeriesRef};

/// Policy tag for bins scored before the filter has a unique state.
pub const UNSYNC_POLICY: &str = "stationary-mixture";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Probability assigned to activity (symbol 1) in each bin.
    pub probs: Vec<f64>,
    /// Whether the filter had resolved a unique state for the bin.
    pub synchronized: Vec<bool>,
}

impl Prediction {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Fully synchronized prediction from raw probabilities.
    pub fn from_probs(probs: Vec<f64>) -> Self {
        let synchronized = vec![true; probs.len()];
        Self { probs, synchronized }
    }

    pub fn sync_fraction(&self) -> f64 {
        if self.synchronized.is_empty() {
            return 0.0;
        }
        self.synchronized.iter().filter(|&&s| s).count() as f64 / self.synchronized.len() as f64
    }
}

/// Empirical total variation `(1/T) sum_t |[x_t = 1] - p(1, t)|`.
pub fn etv(observed: &BinarySeries, pred: &Prediction) -> Result<f64> {
    etv_values(observed.values(), &pred.probs)
}

pub fn etv_values(observed: &[u8], probs: &[f64]) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::EmptySeries);
    }
    if observed.len() != probs.len() {
        return Err(Error::InvalidArgument(format!("{} observations but {} predictions", observed.len(), probs.len())));
    }
    let total: f64 = observed.iter().zip(probs).map(|(&x, &p)| (f64::from(x) - p).abs()).sum();
    Ok(total / observed.len() as f64)
}

/// What a suffix of the observed past says about the current state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Resolution {
    State(StateId),
    Ambiguous,
}

struct SuffixIndex {
    n_sym: usize,
    depth: usize,
    table: HashMap<(usize, usize), Resolution>,
}

impl SuffixIndex {
    fn new(m: &Machine) -> Self {
        let n_sym = m.alphabet().len();
        let depth = m.history_length().unwrap_or(0);
        let mut table = HashMap::new();
        for (h, &s) in m.suffix_map() {
            for k in 0..=h.len() {
                let code = h[h.len() - k..].iter().fold(0usize, |acc, &a| acc * n_sym + usize::from(a));
                table
                    .entry((k, code))
                    .and_modify(|r| {
                        if *r != Resolution::State(s) {
                            *r = Resolution::Ambiguous;
                        }
                    })
                    .or_insert(Resolution::State(s));
            }
        }
        Self { n_sym, depth, table }
    }

    /// Longest observed suffix decides; an ambiguous suffix stops the search.
    fn resolve(&self, code: usize, available: usize) -> Option<StateId> {
        for k in (0..=available.min(self.depth)).rev() {
            let c = code % self.n_sym.pow(k as u32);
            match self.table.get(&(k, c)) {
                Some(Resolution::State(s)) => return Some(*s),
                Some(Resolution::Ambiguous) => return None,
                None => continue,
            }
        }
        None
    }
}

fn history_symbols(m: &Machine, series: SeriesRef<'_>) -> Result<Vec<Symbol>> {
    let kind = m.kind();
    let n_out = m.outputs().len();
    if n_out != 2 {
        return Err(Error::AlphabetMismatch(format!("machine has {n_out} output symbols, series is binary")));
    }
    let output = series.output().values();
    match (kind, series.input()) {
        (MachineKind::EpsilonMachine, _) => Ok(output.to_vec()),
        (_, None) => Err(Error::AlphabetMismatch(format!("{} needs an input series", kind.as_str()))),
        (_, Some(input)) => {
            if m.num_inputs() != 2 {
                return Err(Error::AlphabetMismatch("machine input alphabet is not binary".into()));
            }
            Ok(input.values().iter().zip(output).map(|(&y, &x)| history_symbol(kind, y, x, n_out)).collect())
        }
    }
}

/// Predicts every bin from the strict past within its day segment.
pub fn filter_predict(m: &Machine, series: SeriesRef<'_>) -> Result<Prediction> {
    let symbols = history_symbols(m, series)?;
    let index = SuffixIndex::new(m);
    let mixture = m.mixture_emission(&m.stationary_distribution()?)[1];
    let single = (m.num_states() == 1).then_some(0);
    let modulus = index.n_sym.pow(index.depth as u32).max(1);

    let mut probs = Vec::with_capacity(symbols.len());
    let mut synchronized = Vec::with_capacity(symbols.len());
    for seg in series.segments() {
        let mut state: Option<StateId> = single;
        let mut code = 0usize;
        for (i, &a) in symbols[seg.start..seg.end()].iter().enumerate() {
            if state.is_none() {
                state = index.resolve(code, i);
            }
            match state {
                Some(s) => {
                    probs.push(m.emission(s, 1));
                    synchronized.push(true);
                    state = m.transition(s, a).or(single);
                }
                None => {
                    probs.push(mixture);
                    synchronized.push(false);
                }
            }
            code = (code * index.n_sym + usize::from(a)) % modulus;
        }
    }
    Ok(Prediction { probs, synchronized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parametric::sources;
    use crate::series::JointSeries;

    fn series(bits: &[u8]) -> BinarySeries {
        BinarySeries::single_segment(bits.to_vec(), 600).unwrap()
    }

    #[test]
    fn etv_hand_values() {
        let obs = series(&[1, 0, 1]);
        let e = etv(&obs, &Prediction::from_probs(vec![0.8, 0.3, 0.6])).unwrap();
        assert!((e - 0.3).abs() < 1e-15);
        assert_eq!(etv(&obs, &Prediction::from_probs(vec![1.0, 0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(etv(&obs, &Prediction::from_probs(vec![0.5; 3])).unwrap(), 0.5);
        assert!(etv_values(&[], &[]).is_err());
    }

    #[test]
    fn bernoulli_is_constant_and_synced() {
        let m = sources::bernoulli(0.3).unwrap();
        let p = filter_predict(&m, (&series(&[0, 1, 1, 0, 1])).into()).unwrap();
        assert!(p.probs.iter().all(|&q| (q - 0.3).abs() < 1e-15));
        assert!(p.synchronized.iter().all(|&s| s));
    }

    #[test]
    fn golden_mean_forbids_one_after_one() {
        let m = sources::golden_mean(0.5).unwrap();
        let p = filter_predict(&m, (&series(&[0, 0, 1, 0, 0, 1, 0])).into()).unwrap();
        // Bin 0 has no past: stationary mixture 1/3.
        assert!(!p.synchronized[0]);
        assert!((p.probs[0] - 1.0 / 3.0).abs() < 1e-9);
        assert_eq!(p.probs[3], 0.0);
        assert_eq!(p.probs[6], 0.0);
        assert_eq!(p.probs[1], 0.5);
        assert_eq!(p.probs[4], 0.5);
    }

    #[test]
    fn forbidden_symbol_desynchronizes() {
        let m = sources::golden_mean(0.5).unwrap();
        let p = filter_predict(&m, (&series(&[0, 1, 1, 0])).into()).unwrap();
        assert!(p.synchronized[2]);
        // "1 1" is impossible: the next bin resolves again from the suffix "1".
        assert!(p.synchronized[3]);
        assert_eq!(p.probs[3], 0.0);
    }

    #[test]
    fn mention_moves_to_gamma_state() {
        let m = sources::mention_transducer(0.1, 0.7, 0.5).unwrap();
        let y = series(&[0, 0, 1, 0, 0]);
        let x = series(&[0, 0, 0, 1, 0]);
        let joint = JointSeries::new(y, x).unwrap();
        let p = filter_predict(&m, (&joint).into()).unwrap();
        assert_eq!(p.probs[3], 0.5);
        assert_eq!(p.probs[2], 0.1);
        assert_eq!(p.probs[4], 0.7);
    }

    #[test]
    fn transducer_needs_joint_series() {
        let m = sources::copy_channel();
        assert!(matches!(filter_predict(&m, (&series(&[0, 1])).into()), Err(Error::AlphabetMismatch(_))));
    }
}
