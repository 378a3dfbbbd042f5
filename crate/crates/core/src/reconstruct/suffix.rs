//! Suffix counting within day segments.

use crate::error::{Error, Result};
use crate::machine::{history_symbol, MachineKind, Symbol};
use crate::reconstruct::ReconstructionConfig;
use crate::series::SeriesRef;
use crate::stats::CountVector;

/// Largest dense table (histories per level) the counter will allocate.
const MAX_LEVEL_SIZE: usize = 1 << 22;

/// Identifies a history by its length and base-|A| code, oldest symbol most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryKey {
    pub len: usize,
    pub code: usize,
}

/// Counts of every history of length `0..=l_max` together with the joint
/// (next history symbol, next output) that followed it. Only positions at
/// offset `>= l_max` inside a day segment are counted, so every level sees the
/// same positions and `count(h) = sum_a count(a h)` holds exactly.
#[derive(Clone, Debug)]
pub struct SuffixTable {
    mode: MachineKind,
    l_max: usize,
    n_hist: usize,
    n_out: usize,
    levels: Vec<Vec<u64>>,
    input_counts: Vec<u64>,
}

impl SuffixTable {
    pub fn mode(&self) -> MachineKind {
        self.mode
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// Size of the history alphabet.
    pub fn history_alphabet_len(&self) -> usize {
        self.n_hist
    }

    pub fn output_alphabet_len(&self) -> usize {
        self.n_out
    }

    fn stride(&self) -> usize {
        self.n_hist * self.n_out
    }

    pub fn level_size(&self, len: usize) -> usize {
        self.n_hist.pow(len as u32)
    }

    fn cell(&self, key: HistoryKey) -> &[u64] {
        let stride = self.stride();
        &self.levels[key.len][key.code * stride..(key.code + 1) * stride]
    }

    /// Number of times the history occurred.
    pub fn count(&self, key: HistoryKey) -> u64 {
        self.cell(key).iter().sum()
    }

    /// Next-output counts following the history.
    pub fn next_outputs(&self, key: HistoryKey) -> CountVector {
        let mut out = vec![0; self.n_out];
        for (i, &c) in self.cell(key).iter().enumerate() {
            out[i % self.n_out] += c;
        }
        CountVector::new(out)
    }

    /// How often the history was followed by history symbol `sym`.
    pub fn next_symbol_count(&self, key: HistoryKey, sym: Symbol) -> u64 {
        let s = usize::from(sym) * self.n_out;
        self.cell(key)[s..s + self.n_out].iter().sum()
    }

    /// Empirical input-symbol frequencies over every bin (transducer modes).
    pub fn input_marginal(&self) -> Option<Vec<f64>> {
        let total: u64 = self.input_counts.iter().sum();
        if total == 0 {
            return None;
        }
        Some(self.input_counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    /// Code of `a h` (prepending an older symbol).
    pub fn extend_past(&self, key: HistoryKey, a: Symbol) -> HistoryKey {
        HistoryKey { len: key.len + 1, code: usize::from(a) * self.level_size(key.len) + key.code }
    }

    /// Code of `h a` (appending a newer symbol).
    pub fn extend_future(&self, key: HistoryKey, a: Symbol) -> HistoryKey {
        HistoryKey { len: key.len + 1, code: key.code * self.n_hist + usize::from(a) }
    }

    /// Drops the oldest symbol of `h a` so the result keeps `key.len`.
    pub fn shift(&self, key: HistoryKey, a: Symbol) -> HistoryKey {
        let size = self.level_size(key.len);
        HistoryKey { len: key.len, code: (key.code * self.n_hist + usize::from(a)) % size.max(1) }
    }

    pub fn decode(&self, key: HistoryKey) -> Vec<Symbol> {
        let mut out = vec![0; key.len];
        let mut code = key.code;
        for slot in out.iter_mut().rev() {
            *slot = (code % self.n_hist) as Symbol;
            code /= self.n_hist;
        }
        out
    }

    pub fn encode(&self, history: &[Symbol]) -> HistoryKey {
        let code = history.iter().fold(0usize, |acc, &s| acc * self.n_hist + usize::from(s));
        HistoryKey { len: history.len(), code }
    }

    /// Observed histories of the given length, in code order.
    pub fn observed(&self, len: usize) -> impl Iterator<Item = HistoryKey> + '_ {
        (0..self.level_size(len)).map(move |code| HistoryKey { len, code }).filter(|&k| self.count(k) > 0)
    }
}

/// History symbols and outputs for a series under the given mode.
pub(crate) fn encode_series(series: SeriesRef<'_>, mode: MachineKind) -> Result<(Vec<Symbol>, usize)> {
    let output = series.output();
    let n_out = 2;
    let hist = match (mode, series.input()) {
        (MachineKind::EpsilonMachine, _) => output.values().to_vec(),
        (_, Some(input)) => {
            input.values().iter().zip(output.values()).map(|(&y, &x)| history_symbol(mode, y, x, n_out)).collect()
        }
        (_, None) => {
            return Err(Error::AlphabetMismatch(format!("{} needs an input series", mode.as_str())));
        }
    };
    let n_hist = match mode {
        MachineKind::EpsilonMachine | MachineKind::TransducerMemoryless => 2,
        MachineKind::TransducerMemoryful => 4,
    };
    Ok((hist, n_hist))
}

pub fn build_suffix_table(series: SeriesRef<'_>, cfg: &ReconstructionConfig) -> Result<SuffixTable> {
    cfg.validate()?;
    let (hist, n_hist) = encode_series(series, cfg.mode)?;
    let output = series.output();
    let n_out = 2;
    let l_max = cfg.l_max;
    if n_hist.checked_pow(l_max as u32).is_none_or(|s| s > MAX_LEVEL_SIZE) {
        return Err(Error::InvalidArgument(format!("history length {l_max} is too large for this alphabet")));
    }
    let stride = n_hist * n_out;
    let mut levels: Vec<Vec<u64>> = (0..=l_max).map(|k| vec![0; n_hist.pow(k as u32) * stride]).collect();
    let mods: Vec<usize> = (0..=l_max).map(|k| n_hist.pow(k as u32)).collect();
    let mut input_counts = vec![0u64; 2];
    let mut counted = false;
    for seg in series.segments() {
        if let Some(input) = series.input() {
            for &y in input.segment_values(seg) {
                input_counts[usize::from(y)] += 1;
            }
        }
        if seg.len <= l_max {
            continue;
        }
        counted = true;
        let h = &hist[seg.start..seg.end()];
        let x = output.segment_values(seg);
        let mut code = 0usize;
        for &s in &h[..l_max] {
            code = (code * n_hist + usize::from(s)) % mods[l_max];
        }
        for t in l_max..seg.len {
            let next = usize::from(h[t]) * n_out + usize::from(x[t]);
            for k in 0..=l_max {
                levels[k][(code % mods[k]) * stride + next] += 1;
            }
            code = (code * n_hist + usize::from(h[t])) % mods[l_max];
        }
    }
    if !counted {
        return Err(Error::InsufficientData(format!("no day segment is longer than the history length {l_max}")));
    }
    Ok(SuffixTable { mode: cfg.mode, l_max, n_hist, n_out, levels, input_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{BinarySeries, DaySegment};

    fn cfg(l_max: usize) -> ReconstructionConfig {
        ReconstructionConfig { l_max, ..ReconstructionConfig::default() }
    }

    #[test]
    fn hand_enumeration_single_segment() {
        let s = BinarySeries::single_segment(vec![0, 1, 0, 1], 600).unwrap();
        let t = build_suffix_table((&s).into(), &cfg(1)).unwrap();
        let zero = t.encode(&[0]);
        let one = t.encode(&[1]);
        assert_eq!(t.count(zero), 2);
        assert_eq!(t.next_outputs(zero).counts(), &[0, 2]);
        assert_eq!(t.count(one), 1);
        assert_eq!(t.next_outputs(one).counts(), &[1, 0]);
    }

    #[test]
    fn no_counting_across_segments() {
        let segs = vec![DaySegment { start: 0, len: 2, epoch_day: 0 }, DaySegment { start: 2, len: 2, epoch_day: 1 }];
        let s = BinarySeries::new(vec![0, 1, 0, 1], 600, segs).unwrap();
        let t = build_suffix_table((&s).into(), &cfg(1)).unwrap();
        assert_eq!(t.next_outputs(t.encode(&[0])).counts(), &[0, 2]);
        assert_eq!(t.count(t.encode(&[1])), 0);
    }

    #[test]
    fn short_segments_are_insufficient() {
        let s = BinarySeries::from_days(vec![0, 1, 0, 1], 2, 0, 600).unwrap();
        let err = build_suffix_table((&s).into(), &cfg(2)).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn transducer_needs_input() {
        let s = BinarySeries::single_segment(vec![0, 1, 0, 1], 600).unwrap();
        let c = ReconstructionConfig { mode: MachineKind::TransducerMemoryful, ..cfg(1) };
        assert!(matches!(build_suffix_table((&s).into(), &c), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn key_arithmetic() {
        let s = BinarySeries::single_segment(vec![0, 1, 1, 0, 1], 600).unwrap();
        let t = build_suffix_table((&s).into(), &cfg(3)).unwrap();
        let h = t.encode(&[0, 1, 1]);
        assert_eq!(t.decode(h), vec![0, 1, 1]);
        assert_eq!(t.decode(t.extend_past(h, 1)), vec![1, 0, 1, 1]);
        assert_eq!(t.decode(t.extend_future(h, 0)), vec![0, 1, 1, 0]);
        assert_eq!(t.decode(t.shift(h, 0)), vec![1, 1, 0]);
    }
}
