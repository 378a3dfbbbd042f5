//! Candidate causal states and the homogenization pass.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::machine::{StateId, Symbol};
use crate::reconstruct::suffix::{HistoryKey, SuffixTable};
use crate::reconstruct::ReconstructionConfig;
use crate::stats::{g_test, CountVector};

#[derive(Clone, Debug, PartialEq, Eq)]
struct CandidateState {
    members: BTreeSet<HistoryKey>,
    pooled: CountVector,
}

/// A partition of the histories considered so far into candidate states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateStateSet {
    n_hist: usize,
    n_out: usize,
    states: Vec<CandidateState>,
    owner: BTreeMap<HistoryKey, StateId>,
}

impl CandidateStateSet {
    fn new(table: &SuffixTable) -> Self {
        Self {
            n_hist: table.history_alphabet_len(),
            n_out: table.output_alphabet_len(),
            states: Vec::new(),
            owner: BTreeMap::new(),
        }
    }

    /// Builds a set from explicit groups of histories (oldest symbol first).
    pub fn from_partition(table: &SuffixTable, groups: &[Vec<Vec<Symbol>>]) -> Result<Self> {
        let mut set = Self::new(table);
        for group in groups {
            let s = set.push_state();
            for h in group {
                if h.len() > table.l_max() || h.iter().any(|&a| usize::from(a) >= set.n_hist) {
                    return Err(Error::InvalidArgument(format!("history {h:?} is not valid for this table")));
                }
                let key = table.encode(h);
                if set.owner.contains_key(&key) {
                    return Err(Error::InvalidArgument(format!("history {h:?} appears in two states")));
                }
                set.insert(table, s, key);
            }
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn pooled(&self, s: StateId) -> &CountVector {
        &self.states[s].pooled
    }

    pub fn state_of(&self, key: HistoryKey) -> Option<StateId> {
        self.owner.get(&key).copied()
    }

    pub fn state_of_history(&self, history: &[Symbol]) -> Option<StateId> {
        self.state_of(self.encode(history))
    }

    pub fn members(&self, s: StateId) -> impl Iterator<Item = HistoryKey> + '_ {
        self.states[s].members.iter().copied()
    }

    pub(crate) fn members_of_len(&self, s: StateId, len: usize) -> Vec<HistoryKey> {
        self.members(s).filter(|k| k.len == len).collect()
    }

    /// Member histories of state `s`, decoded, shortest first.
    pub fn histories(&self, s: StateId) -> Vec<Vec<Symbol>> {
        self.members(s).map(|k| self.decode(k)).collect()
    }

    /// Whether every state of `self` lies inside a single state of `coarser`.
    pub fn refines(&self, coarser: &CandidateStateSet) -> bool {
        self.states.iter().all(|st| {
            let owners: BTreeSet<Option<StateId>> = st.members.iter().map(|&k| coarser.state_of(k)).collect();
            owners.len() <= 1 && !owners.contains(&None)
        })
    }

    fn encode(&self, history: &[Symbol]) -> HistoryKey {
        let code = history.iter().fold(0usize, |acc, &s| acc * self.n_hist + usize::from(s));
        HistoryKey { len: history.len(), code }
    }

    fn decode(&self, key: HistoryKey) -> Vec<Symbol> {
        let mut out = vec![0; key.len];
        let mut code = key.code;
        for slot in out.iter_mut().rev() {
            *slot = (code % self.n_hist) as Symbol;
            code /= self.n_hist;
        }
        out
    }

    pub(crate) fn push_state(&mut self) -> StateId {
        self.states.push(CandidateState { members: BTreeSet::new(), pooled: CountVector::zeros(self.n_out) });
        self.states.len() - 1
    }

    pub(crate) fn insert(&mut self, table: &SuffixTable, s: StateId, key: HistoryKey) {
        self.states[s].pooled.merge(&table.next_outputs(key));
        self.states[s].members.insert(key);
        self.owner.insert(key, s);
    }

    pub(crate) fn move_history(&mut self, table: &SuffixTable, key: HistoryKey, to: StateId) {
        if let Some(from) = self.owner.get(&key).copied() {
            self.states[from].pooled.subtract(&table.next_outputs(key));
            self.states[from].members.remove(&key);
        }
        self.insert(table, to, key);
    }
}

/// Grows histories from length 0 to `l_max`, placing each one-symbol
/// extension with its parent, with the best-matching other state, or in a
/// new state of its own.
pub fn homogenize(table: &SuffixTable, cfg: &ReconstructionConfig) -> Result<CandidateStateSet> {
    cfg.validate()?;
    if table.mode() != cfg.mode || table.l_max() != cfg.l_max {
        return Err(Error::InvalidArgument("suffix table was built with a different configuration".into()));
    }
    let mut set = CandidateStateSet::new(table);
    let root = set.push_state();
    set.insert(table, root, HistoryKey { len: 0, code: 0 });

    for len in 0..cfg.l_max {
        let mut s = 0;
        while s < set.len() {
            for parent in set.members_of_len(s, len) {
                for a in 0..table.history_alphabet_len() as Symbol {
                    let child = table.extend_past(parent, a);
                    if table.count(child) == 0 {
                        continue;
                    }
                    let target = place(&set, table, cfg, s, child)?;
                    let target = target.unwrap_or_else(|| set.push_state());
                    set.insert(table, target, child);
                }
            }
            s += 1;
        }
    }
    Ok(set)
}

/// Chooses where `child` goes; `None` means a fresh state.
fn place(
    set: &CandidateStateSet,
    table: &SuffixTable,
    cfg: &ReconstructionConfig,
    parent: StateId,
    child: HistoryKey,
) -> Result<Option<StateId>> {
    if table.count(child) < cfg.min_count {
        return Ok(Some(parent));
    }
    let observed = table.next_outputs(child);
    if g_test(&observed, &set.pooled(parent).distribution(), cfg.alpha)?.accepted() {
        return Ok(Some(parent));
    }
    let mut best: Option<(StateId, f64)> = None;
    for other in (0..set.len()).filter(|&o| o != parent) {
        let outcome = g_test(&observed, &set.pooled(other).distribution(), cfg.alpha)?;
        if outcome.accepted() && best.is_none_or(|(_, p)| outcome.p_value > p) {
            best = Some((other, outcome.p_value));
        }
    }
    Ok(best.map(|(s, _)| s))
}
