//! Unifilar stochastic automata: epsilon-machines and epsilon-transducers.
//!
//! A [`Machine`] has states `0..n`, a per-state emission distribution over
//! output symbols, and a partial deterministic transition map keyed by
//! transition symbols. For an epsilon-machine the transition alphabet is the
//! output alphabet. A memoryful transducer moves on joint input/output pairs
//! (symbol index `y * |X| + x`), a memoryless one on input symbols alone. In
//! both transducer kinds the input is exogenous, so only the output carries
//! a modelled probability.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u8;
pub type StateId = usize;

/// Emission normalisation tolerance enforced at construction.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Synchronisation policy recorded on reconstructed machines.
pub const LONGEST_SUFFIX: &str = "longest-suffix";

/// Ordered set of distinct symbol labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidMachine("alphabet must be non-empty".into()));
        }
        if symbols.len() > usize::from(Symbol::MAX) + 1 {
            return Err(Error::InvalidMachine("alphabet too large".into()));
        }
        let distinct: BTreeSet<&String> = symbols.iter().collect();
        if distinct.len() != symbols.len() {
            return Err(Error::InvalidMachine("alphabet symbols must be distinct".into()));
        }
        Ok(Self { symbols })
    }

    /// `{0, 1}`.
    pub fn binary() -> Self {
        Self { symbols: vec!["0".into(), "1".into()] }
    }

    /// Joint input/output pairs `y|x` over binary input and output, in `y * 2 + x` order.
    pub fn binary_joint() -> Self {
        Self { symbols: vec!["0|0".into(), "0|1".into(), "1|0".into(), "1|1".into()] }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn label(&self, s: Symbol) -> &str {
        &self.symbols[usize::from(s)]
    }

    pub fn index_of(&self, label: &str) -> Option<Symbol> {
        self.symbols.iter().position(|s| s == label).map(|i| i as Symbol)
    }

    pub fn labels(&self) -> &[String] {
        &self.symbols
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineKind {
    EpsilonMachine,
    TransducerMemoryless,
    TransducerMemoryful,
}

impl MachineKind {
    pub fn is_transducer(self) -> bool {
        !matches!(self, MachineKind::EpsilonMachine)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MachineKind::EpsilonMachine => "epsilon_machine",
            MachineKind::TransducerMemoryless => "transducer_memoryless",
            MachineKind::TransducerMemoryful => "transducer_memoryful",
        }
    }
}

/// History symbol seen by a machine of `kind` for the bin with input `y` and output `x`.
pub fn history_symbol(kind: MachineKind, y: u8, x: u8, n_outputs: usize) -> Symbol {
    match kind {
        MachineKind::EpsilonMachine => x,
        MachineKind::TransducerMemoryful => y * n_outputs as u8 + x,
        MachineKind::TransducerMemoryless => y,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub weights: Vec<f64>,
    pub tolerance: f64,
}

impl StationaryDistribution {
    pub fn weight(&self, s: StateId) -> f64 {
        self.weights[s]
    }
}

/// Unifilar stochastic finite automaton; immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Machine {
    kind: MachineKind,
    alphabet: Alphabet,
    outputs: Alphabet,
    emissions: Vec<Vec<f64>>,
    transitions: BTreeMap<(StateId, Symbol), StateId>,
    suffix_map: BTreeMap<Vec<Symbol>, StateId>,
    sync_policy: Option<String>,
    input_marginal: Option<Vec<f64>>,
    labels: BTreeMap<StateId, String>,
}

/// Assembles a [`Machine`]; all invariants are checked in [`MachineBuilder::build`].
#[derive(Clone, Debug)]
pub struct MachineBuilder {
    kind: MachineKind,
    alphabet: Alphabet,
    outputs: Alphabet,
    emissions: Vec<Vec<f64>>,
    transitions: Vec<(StateId, Symbol, StateId)>,
    suffix_map: Vec<(Vec<Symbol>, StateId)>,
    sync_policy: Option<String>,
    input_marginal: Option<Vec<f64>>,
    labels: BTreeMap<StateId, String>,
}

impl MachineBuilder {
    pub fn new(kind: MachineKind, alphabet: Alphabet, outputs: Alphabet) -> Self {
        Self {
            kind,
            alphabet,
            outputs,
            emissions: Vec::new(),
            transitions: Vec::new(),
            suffix_map: Vec::new(),
            sync_policy: None,
            input_marginal: None,
            labels: BTreeMap::new(),
        }
    }

    /// Binary epsilon-machine builder.
    pub fn epsilon_machine() -> Self {
        Self::new(MachineKind::EpsilonMachine, Alphabet::binary(), Alphabet::binary())
    }

    /// Adds a state with the given emission distribution and returns its id.
    pub fn state(&mut self, emissions: Vec<f64>) -> StateId {
        self.emissions.push(emissions);
        self.emissions.len() - 1
    }

    pub fn transition(&mut self, from: StateId, symbol: Symbol, to: StateId) -> &mut Self {
        self.transitions.push((from, symbol, to));
        self
    }

    pub fn suffix(&mut self, history: Vec<Symbol>, state: StateId) -> &mut Self {
        self.suffix_map.push((history, state));
        self
    }

    pub fn sync_policy(&mut self, policy: impl Into<String>) -> &mut Self {
        self.sync_policy = Some(policy.into());
        self
    }

    pub fn input_marginal(&mut self, marginal: Vec<f64>) -> &mut Self {
        self.input_marginal = Some(marginal);
        self
    }

    pub fn label(&mut self, state: StateId, label: impl Into<String>) -> &mut Self {
        self.labels.insert(state, label.into());
        self
    }

    pub fn build(self) -> Result<Machine> {
        let bad = |msg: String| Err(Error::InvalidMachine(msg));
        let n = self.emissions.len();
        if n == 0 {
            return bad("machine must have at least one state".into());
        }
        let n_out = self.outputs.len();
        match self.kind {
            MachineKind::EpsilonMachine if self.alphabet != self.outputs => {
                return bad("epsilon-machine transition and emission alphabets must coincide".into());
            }
            MachineKind::TransducerMemoryful if self.alphabet.len() % n_out != 0 => {
                return bad("joint alphabet size must be a multiple of the output alphabet size".into());
            }
            _ => {}
        }
        for (s, e) in self.emissions.iter().enumerate() {
            if e.len() != n_out {
                return bad(format!("normalization: state {s} has {} emission entries, expected {n_out}", e.len()));
            }
            if e.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return bad(format!("normalization: state {s} has a negative or non-finite emission probability"));
            }
            let total: f64 = e.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return bad(format!("normalization: state {s} emissions sum to {total}"));
            }
        }
        let mut transitions = BTreeMap::new();
        for &(from, sym, to) in &self.transitions {
            if from >= n || to >= n {
                return bad(format!("transition {from} -> {to} references an unknown state"));
            }
            if usize::from(sym) >= self.alphabet.len() {
                return bad(format!("transition from {from} uses unknown symbol index {sym}"));
            }
            if let Some(prev) = transitions.insert((from, sym), to) {
                if prev != to {
                    return bad(format!(
                        "unifilarity: state {from} has two successors on '{}'",
                        self.alphabet.label(sym)
                    ));
                }
                return bad(format!("unifilarity: duplicate transition from {from} on '{}'", self.alphabet.label(sym)));
            }
        }
        let mut suffix_map = BTreeMap::new();
        let mut history_len = None;
        for (h, s) in self.suffix_map {
            if s >= n {
                return bad(format!("partition: suffix maps to unknown state {s}"));
            }
            if h.iter().any(|&c| usize::from(c) >= self.alphabet.len()) {
                return bad("partition: suffix uses an unknown symbol".into());
            }
            match history_len {
                None => history_len = Some(h.len()),
                Some(l) if l != h.len() => {
                    return bad("partition: suffix map histories must share one length".into());
                }
                _ => {}
            }
            if suffix_map.insert(h, s).is_some() {
                return bad("partition: a history maps to more than one state".into());
            }
        }
        if let Some(m) = &self.input_marginal {
            let n_in = match self.kind {
                MachineKind::EpsilonMachine => return bad("input marginal on an epsilon-machine".into()),
                MachineKind::TransducerMemoryful => self.alphabet.len() / n_out,
                MachineKind::TransducerMemoryless => self.alphabet.len(),
            };
            if m.len() != n_in || m.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return bad("input marginal has the wrong shape".into());
            }
            if (m.iter().sum::<f64>() - 1.0).abs() > NORMALIZATION_TOL {
                return bad("normalization: input marginal does not sum to 1".into());
            }
        }
        if let Some((&s, _)) = self.labels.iter().find(|(&s, _)| s >= n) {
            return bad(format!("label attached to unknown state {s}"));
        }
        Ok(Machine {
            kind: self.kind,
            alphabet: self.alphabet,
            outputs: self.outputs,
            emissions: self.emissions,
            transitions,
            suffix_map,
            sync_policy: self.sync_policy,
            input_marginal: self.input_marginal,
            labels: self.labels,
        })
    }
}

impl Machine {
    pub fn builder(kind: MachineKind, alphabet: Alphabet, outputs: Alphabet) -> MachineBuilder {
        MachineBuilder::new(kind, alphabet, outputs)
    }

    /// Rebuilds a builder holding this machine's contents.
    pub fn to_builder(&self) -> MachineBuilder {
        MachineBuilder {
            kind: self.kind,
            alphabet: self.alphabet.clone(),
            outputs: self.outputs.clone(),
            emissions: self.emissions.clone(),
            transitions: self.transitions.iter().map(|(&(f, s), &t)| (f, s, t)).collect(),
            suffix_map: self.suffix_map.iter().map(|(h, &s)| (h.clone(), s)).collect(),
            sync_policy: self.sync_policy.clone(),
            input_marginal: self.input_marginal.clone(),
            labels: self.labels.clone(),
        }
    }

    pub fn kind(&self) -> MachineKind {
        self.kind
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn outputs(&self) -> &Alphabet {
        &self.outputs
    }

    pub fn num_inputs(&self) -> usize {
        match self.kind {
            MachineKind::EpsilonMachine => 0,
            MachineKind::TransducerMemoryful => self.alphabet.len() / self.outputs.len(),
            MachineKind::TransducerMemoryless => self.alphabet.len(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.emissions.len()
    }

    pub fn emissions(&self, s: StateId) -> &[f64] {
        &self.emissions[s]
    }

    pub fn emission(&self, s: StateId, out: Symbol) -> f64 {
        self.emissions[s][usize::from(out)]
    }

    pub fn transition(&self, s: StateId, sym: Symbol) -> Option<StateId> {
        self.transitions.get(&(s, sym)).copied()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, Symbol, StateId)> + '_ {
        self.transitions.iter().map(|(&(f, s), &t)| (f, s, t))
    }

    pub fn suffix_map(&self) -> &BTreeMap<Vec<Symbol>, StateId> {
        &self.suffix_map
    }

    /// Length of the histories in the suffix map, if any.
    pub fn history_length(&self) -> Option<usize> {
        self.suffix_map.keys().next().map(Vec::len)
    }

    pub fn sync_policy(&self) -> Option<&str> {
        self.sync_policy.as_deref()
    }

    pub fn input_marginal(&self) -> Option<&[f64]> {
        self.input_marginal.as_deref()
    }

    pub fn label(&self, s: StateId) -> Option<&str> {
        self.labels.get(&s).map(String::as_str)
    }

    pub fn labels(&self) -> &BTreeMap<StateId, String> {
        &self.labels
    }

    /// Output symbol carried by a transition symbol, when the transition fixes one.
    pub fn output_of(&self, sym: Symbol) -> Option<Symbol> {
        match self.kind {
            MachineKind::EpsilonMachine => Some(sym),
            MachineKind::TransducerMemoryful => Some(sym % self.outputs.len() as Symbol),
            MachineKind::TransducerMemoryless => None,
        }
    }

    pub fn input_of(&self, sym: Symbol) -> Option<Symbol> {
        match self.kind {
            MachineKind::EpsilonMachine => None,
            MachineKind::TransducerMemoryful => Some(sym / self.outputs.len() as Symbol),
            MachineKind::TransducerMemoryless => Some(sym),
        }
    }

    fn input_weight(&self, y: Symbol) -> f64 {
        match &self.input_marginal {
            Some(m) => m[usize::from(y)],
            None => 1.0 / self.num_inputs() as f64,
        }
    }

    /// Probability that a transition on `sym` is taken from `s`; inputs weighted
    /// by the recorded input marginal (uniform when absent).
    pub fn symbol_probability(&self, s: StateId, sym: Symbol) -> f64 {
        match self.kind {
            MachineKind::EpsilonMachine => self.emission(s, sym),
            MachineKind::TransducerMemoryful => {
                let n_out = self.outputs.len() as Symbol;
                self.input_weight(sym / n_out) * self.emission(s, sym % n_out)
            }
            MachineKind::TransducerMemoryless => self.input_weight(sym),
        }
    }

    /// Row-stochastic state-to-state matrix. Mass on symbols without a defined
    /// transition is redistributed over the defined ones; a state with no
    /// usable transition gets a self-loop.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.num_states();
        let mut mat = vec![vec![0.0; n]; n];
        for (s, row) in mat.iter_mut().enumerate() {
            let mut mass = 0.0;
            for sym in 0..self.alphabet.len() as Symbol {
                if let Some(t) = self.transition(s, sym) {
                    let p = self.symbol_probability(s, sym);
                    row[t] += p;
                    mass += p;
                }
            }
            if mass > 0.0 {
                row.iter_mut().for_each(|v| *v /= mass);
            } else {
                row[s] = 1.0;
            }
        }
        mat
    }

    /// States belonging to terminal strongly connected components of the
    /// positive-probability transition graph, excluding isolated states
    /// without any outgoing transition.
    pub fn recurrent_states(&self) -> Vec<StateId> {
        let n = self.num_states();
        let mut graph = DiGraph::<(), ()>::with_capacity(n, self.transitions.len());
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        let mut has_out = vec![false; n];
        for (s, sym, t) in self.transitions() {
            if self.symbol_probability(s, sym) > 0.0 {
                graph.update_edge(nodes[s], nodes[t], ());
                has_out[s] = true;
            }
        }
        terminal_components(&graph, &has_out)
    }

    pub fn stationary_distribution(&self) -> Result<StationaryDistribution> {
        const CAP: usize = 1_000_000;
        const TOL: f64 = 1e-13;
        let n = self.num_states();
        let mut recurrent = self.recurrent_states();
        if recurrent.is_empty() {
            // Every state is a dead end; fall back to all states.
            recurrent = (0..n).collect();
        }
        let mat = self.transition_matrix();
        let mut pi = vec![0.0; n];
        for &s in &recurrent {
            pi[s] = 1.0 / recurrent.len() as f64;
        }
        let mut next = vec![0.0; n];
        for _ in 0..CAP {
            // Lazy chain: same fixed point, aperiodic.
            next.iter_mut().zip(&pi).for_each(|(nv, p)| *nv = 0.5 * p);
            for (s, row) in mat.iter().enumerate() {
                let w = 0.5 * pi[s];
                if w == 0.0 {
                    continue;
                }
                for (t, &p) in row.iter().enumerate() {
                    next[t] += w * p;
                }
            }
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut pi, &mut next);
            if diff < TOL {
                let mut weights = vec![0.0; n];
                let total: f64 = recurrent.iter().map(|&s| pi[s]).sum();
                for &s in &recurrent {
                    weights[s] = pi[s] / total;
                }
                return Ok(StationaryDistribution { weights, tolerance: TOL });
            }
        }
        Err(Error::NonConvergence { cap: CAP })
    }

    /// Stationary mixture of the state emission distributions.
    pub fn mixture_emission(&self, stationary: &StationaryDistribution) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs.len()];
        for (s, w) in stationary.weights.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(&self.emissions[s]) {
                *o += w * p;
            }
        }
        out
    }

    /// Suffix map built from synchronising words: each allowed word of length
    /// `len` whose possible end states (starting from all recurrent states)
    /// collapse to one state. Returns the smallest `len <= max_len` for which
    /// every allowed word synchronises, or the partial map at `max_len`.
    pub fn synchronizing_suffixes(&self, max_len: usize) -> (usize, BTreeMap<Vec<Symbol>, StateId>) {
        let recurrent: BTreeSet<StateId> = self.recurrent_states().into_iter().collect();
        let k = self.alphabet.len();
        // Frontier of (word, possible states), grown one symbol at a time.
        let mut frontier: Vec<(Vec<Symbol>, BTreeSet<StateId>)> = vec![(Vec::new(), recurrent)];
        let mut map = BTreeMap::new();
        for len in 1..=max_len.max(1) {
            let mut next = Vec::new();
            for (word, states) in &frontier {
                for sym in 0..k as Symbol {
                    let succ: BTreeSet<StateId> = states
                        .iter()
                        .filter(|&&s| self.symbol_probability(s, sym) > 0.0)
                        .filter_map(|&s| self.transition(s, sym))
                        .collect();
                    if succ.is_empty() {
                        continue;
                    }
                    let mut w = word.clone();
                    w.push(sym);
                    next.push((w, succ));
                }
            }
            frontier = next;
            map = frontier
                .iter()
                .filter(|(_, s)| s.len() == 1)
                .map(|(w, s)| (w.clone(), *s.iter().next().expect("singleton")))
                .collect();
            if map.len() == frontier.len() || len >= max_len {
                return (len, map);
            }
        }
        (max_len, map)
    }

    /// Copy of this machine carrying a synchronising-word suffix map and the
    /// longest-suffix policy, so it can be used for filtering.
    pub fn with_synchronizing_suffixes(&self, max_len: usize) -> Machine {
        let (_, map) = self.synchronizing_suffixes(max_len);
        let mut b = self.to_builder();
        b.suffix_map = map.into_iter().collect();
        b.sync_policy = Some(LONGEST_SUFFIX.into());
        b.build().expect("suffix map derived from a valid machine")
    }

    /// Copy with a different input marginal (transducers only).
    pub fn with_input_marginal(&self, marginal: Vec<f64>) -> Result<Machine> {
        let mut b = self.to_builder();
        b.input_marginal = Some(marginal);
        b.build()
    }

    /// Exact probabilities of all output words of length `len` under the
    /// stationary epsilon-machine, indexed by the base-|X| word code
    /// (oldest symbol most significant).
    pub fn word_distribution(&self, len: usize) -> Result<Vec<f64>> {
        if self.kind != MachineKind::EpsilonMachine {
            return Err(Error::AlphabetMismatch("word distributions need an epsilon-machine".into()));
        }
        let pi = self.stationary_distribution()?;
        let k = self.alphabet.len();
        let n = self.num_states();
        // Forward mass per (word code, state).
        let mut layer: Vec<Vec<f64>> = vec![pi.weights.clone()];
        for _ in 0..len {
            let mut next = vec![vec![0.0; n]; layer.len() * k];
            for (code, mass) in layer.iter().enumerate() {
                for (s, &m) in mass.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    for sym in 0..k as Symbol {
                        let p = self.emission(s, sym);
                        if p == 0.0 {
                            continue;
                        }
                        if let Some(t) = self.transition(s, sym) {
                            next[code * k + usize::from(sym)][t] += m * p;
                        }
                    }
                }
            }
            layer = next;
        }
        Ok(layer.iter().map(|m| m.iter().sum()).collect())
    }
}

pub(crate) fn terminal_components(graph: &DiGraph<(), ()>, has_out: &[bool]) -> Vec<StateId> {
    let sccs = tarjan_scc(graph);
    let mut comp_of = vec![0usize; graph.node_count()];
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            comp_of[v.index()] = c;
        }
    }
    let mut out = Vec::new();
    for (c, members) in sccs.iter().enumerate() {
        let closed = members.iter().all(|v| graph.neighbors(*v).all(|w| comp_of[w.index()] == c));
        let live = members.iter().any(|v| has_out[v.index()]);
        if closed && live {
            out.extend(members.iter().map(|v| v.index()));
        }
    }
    out.sort_unstable();
    out
}
