//! Splitting candidate states until transitions are deterministic.

use std::collections::BTreeMap;

use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::machine::{terminal_components, Alphabet, Machine, MachineKind, StateId, Symbol, LONGEST_SUFFIX};
use crate::reconstruct::states::CandidateStateSet;
use crate::reconstruct::suffix::{HistoryKey, SuffixTable};
use crate::reconstruct::ReconstructionConfig;
use crate::stats::{g_test, CountVector};

/// Histories that define a state's outgoing transitions: its members of
/// length `l_max - 1`, or failing those its length-`l_max` members read as a
/// sliding window.
fn sources(set: &CandidateStateSet, s: StateId, l_max: usize) -> (Vec<HistoryKey>, bool) {
    let shorter = set.members_of_len(s, l_max - 1);
    if !shorter.is_empty() {
        return (shorter, false);
    }
    (set.members_of_len(s, l_max), true)
}

fn successor(
    set: &CandidateStateSet,
    table: &SuffixTable,
    key: HistoryKey,
    a: Symbol,
    window: bool,
) -> Option<StateId> {
    let next = if window {
        if table.next_symbol_count(key, a) == 0 {
            return None;
        }
        table.shift(key, a)
    } else {
        table.extend_future(key, a)
    };
    if table.count(next) == 0 {
        return None;
    }
    set.state_of(next)
}

/// Groups the sources of `s` by their successor on `a`, in order of first appearance.
fn successor_groups(
    set: &CandidateStateSet,
    table: &SuffixTable,
    s: StateId,
    a: Symbol,
    l_max: usize,
) -> Vec<(StateId, Vec<HistoryKey>)> {
    let (src, window) = sources(set, s, l_max);
    let mut groups: Vec<(StateId, Vec<HistoryKey>)> = Vec::new();
    for key in src {
        if let Some(t) = successor(set, table, key, a, window) {
            match groups.iter_mut().find(|(g, _)| *g == t) {
                Some((_, members)) => members.push(key),
                None => groups.push((t, vec![key])),
            }
        }
    }
    groups
}

/// Splits states until each has at most one successor per symbol. Only ever
/// refines the input partition.
pub fn determinize_partition(
    mut set: CandidateStateSet,
    table: &SuffixTable,
    cfg: &ReconstructionConfig,
) -> CandidateStateSet {
    'restart: loop {
        for s in 0..set.len() {
            for a in 0..table.history_alphabet_len() as Symbol {
                let groups = successor_groups(&set, table, s, a, cfg.l_max);
                if groups.len() > 1 {
                    for (_, members) in groups.into_iter().skip(1) {
                        let fresh = set.push_state();
                        for key in members {
                            set.move_history(table, key, fresh);
                            // Past extensions that stayed with their parent follow it.
                            if key.len < cfg.l_max {
                                for b in 0..table.history_alphabet_len() as Symbol {
                                    let child = table.extend_past(key, b);
                                    if set.state_of(child) == Some(s) {
                                        set.move_history(table, child, fresh);
                                    }
                                }
                            }
                        }
                    }
                    continue 'restart;
                }
            }
        }
        return set;
    }
}

/// Determinizes, drops transient states and assembles the machine.
pub fn determinize(set: CandidateStateSet, table: &SuffixTable, cfg: &ReconstructionConfig) -> Result<Machine> {
    cfg.validate()?;
    if table.mode() != cfg.mode || table.l_max() != cfg.l_max {
        return Err(Error::InvalidArgument("suffix table was built with a different configuration".into()));
    }
    let set = determinize_partition(set, table, cfg);
    let n = set.len();
    let n_sym = table.history_alphabet_len();

    let mut edges: BTreeMap<(StateId, Symbol), StateId> = BTreeMap::new();
    for s in 0..n {
        for a in 0..n_sym as Symbol {
            if let Some(&(t, _)) = successor_groups(&set, table, s, a, cfg.l_max).first() {
                edges.insert((s, a), t);
            }
        }
    }
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    let mut has_out = vec![false; n];
    for (&(s, _), &t) in &edges {
        graph.update_edge(nodes[s], nodes[t], ());
        has_out[s] = true;
    }
    let recurrent = terminal_components(&graph, &has_out);
    if recurrent.is_empty() {
        return Ok(single_state(table, cfg));
    }
    let new_id: BTreeMap<StateId, StateId> = recurrent.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let emissions: Vec<Vec<f64>> = recurrent.iter().map(|&s| state_emission(&set, table, cfg, s)).collect();
    let mut b = Machine::builder(cfg.mode, history_alphabet(cfg.mode), Alphabet::binary());
    for e in &emissions {
        b.state(e.clone());
    }
    for (&(s, a), &t) in &edges {
        if let (Some(&from), Some(&to)) = (new_id.get(&s), new_id.get(&t)) {
            b.transition(from, a, to);
        }
    }
    for key in table.observed(cfg.l_max) {
        let state = match set.state_of(key).and_then(|s| new_id.get(&s).copied()) {
            Some(s) => s,
            None => closest_state(&table.next_outputs(key), &emissions, cfg.alpha)?,
        };
        b.suffix(table.decode(key), state);
    }
    b.sync_policy(LONGEST_SUFFIX);
    if cfg.mode.is_transducer() {
        if let Some(m) = table.input_marginal() {
            b.input_marginal(m);
        }
    }
    b.build()
}

/// Next-output distribution pooled over the state's longest members, which
/// partition the counted positions.
fn state_emission(set: &CandidateStateSet, table: &SuffixTable, cfg: &ReconstructionConfig, s: StateId) -> Vec<f64> {
    let mut counts = CountVector::zeros(table.output_alphabet_len());
    for key in set.members_of_len(s, cfg.l_max) {
        counts.merge(&table.next_outputs(key));
    }
    if counts.total() == 0 {
        counts = set.pooled(s).clone();
    }
    counts.distribution()
}

/// Recurrent state whose emission best explains `observed` (largest p-value, lowest id on ties).
fn closest_state(observed: &CountVector, emissions: &[Vec<f64>], alpha: f64) -> Result<StateId> {
    let mut best: Option<(StateId, f64, f64)> = None;
    for (s, e) in emissions.iter().enumerate() {
        let out = g_test(observed, e, alpha)?;
        let better = match best {
            None => true,
            Some((_, p, g)) => out.p_value > p || (out.p_value == p && out.statistic < g),
        };
        if better {
            best = Some((s, out.p_value, out.statistic));
        }
    }
    Ok(best.map_or(0, |(s, _, _)| s))
}

pub(crate) fn history_alphabet(mode: MachineKind) -> Alphabet {
    match mode {
        MachineKind::TransducerMemoryful => Alphabet::binary_joint(),
        _ => Alphabet::binary(),
    }
}

/// Fallback when no closed class survives: one state with the overall next-output distribution.
fn single_state(table: &SuffixTable, cfg: &ReconstructionConfig) -> Machine {
    let root = HistoryKey { len: 0, code: 0 };
    let mut b = Machine::builder(cfg.mode, history_alphabet(cfg.mode), Alphabet::binary());
    let s = b.state(table.next_outputs(root).distribution());
    for a in 0..table.history_alphabet_len() as Symbol {
        if table.next_symbol_count(root, a) > 0 {
            b.transition(s, a, s);
        }
    }
    for key in table.observed(cfg.l_max) {
        b.suffix(table.decode(key), s);
    }
    b.sync_policy(LONGEST_SUFFIX);
    if cfg.mode.is_transducer() {
        if let Some(m) = table.input_marginal() {
            b.input_marginal(m);
        }
    }
    b.build().expect("single-state machine is always valid")
}
