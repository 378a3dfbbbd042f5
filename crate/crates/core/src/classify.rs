//! Architecture taxonomy of reconstructed machines and transducers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{Machine, MachineKind, StateId, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureFamily {
    Bernoulli,
    Renewal,
    ReverseRenewal,
    AlternatingRenewal,
    TransducerRenewalLike,
    TransducerAltRenewalLike,
    Other,
}

impl ArchitectureFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchitectureFamily::Bernoulli => "bernoulli",
            ArchitectureFamily::Renewal => "renewal",
            ArchitectureFamily::ReverseRenewal => "reverse_renewal",
            ArchitectureFamily::AlternatingRenewal => "alternating_renewal",
            ArchitectureFamily::TransducerRenewalLike => "transducer_renewal_like",
            ArchitectureFamily::TransducerAltRenewalLike => "transducer_alt_renewal_like",
            ArchitectureFamily::Other => "other",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureReport {
    pub family: ArchitectureFamily,
    pub order: Option<usize>,
    pub state_count: usize,
    pub topological_complexity: f64,
    /// Every family whose structural rule the machine passes, most specific first.
    pub satisfies: Vec<ArchitectureFamily>,
    /// Run-chain lengths keyed by `symbol` (machines) or `preceding>current` pair (transducers).
    pub chain_lengths: BTreeMap<String, usize>,
    /// Self-loop probability at the end of each run chain, keyed like `chain_lengths`.
    pub tail_ratios: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// Recurrent part of a machine as plain transition lists.
struct Graph {
    states: Vec<StateId>,
    n_sym: usize,
    next: BTreeMap<(StateId, Symbol), StateId>,
}

impl Graph {
    fn new(m: &Machine) -> Self {
        let mut states = m.recurrent_states();
        if states.is_empty() {
            states = (0..m.num_states()).collect();
        }
        let keep: BTreeSet<StateId> = states.iter().copied().collect();
        let next = m
            .transitions()
            .filter(|&(s, sym, t)| keep.contains(&s) && keep.contains(&t) && m.symbol_probability(s, sym) > 0.0)
            .map(|(s, sym, t)| ((s, sym), t))
            .collect();
        Self { states, n_sym: m.alphabet().len(), next }
    }

    fn step(&self, set: &BTreeSet<StateId>, sym: Symbol) -> BTreeSet<StateId> {
        set.iter().filter_map(|&s| self.next.get(&(s, sym)).copied()).collect()
    }

    fn entered_on(&self, sym: Symbol) -> BTreeSet<StateId> {
        self.next.iter().filter(|((_, a), _)| *a == sym).map(|(_, &t)| t).collect()
    }

    /// States entered on some symbol other than `sym`.
    fn entered_on_other(&self, sym: Symbol) -> BTreeSet<StateId> {
        (0..self.n_sym as Symbol).filter(|&a| a != sym).flat_map(|a| self.entered_on(a)).collect()
    }

    /// All nonempty sets reachable from `start` by one or more `sym` steps.
    fn run_images(&self, start: &BTreeSet<StateId>, sym: Symbol) -> Vec<BTreeSet<StateId>> {
        let mut seen = Vec::new();
        let mut cur = self.step(start, sym);
        while !cur.is_empty() && !seen.contains(&cur) {
            seen.push(cur.clone());
            cur = self.step(&cur, sym);
        }
        seen
    }

    /// Whether the last `k` completed-or-current runs always determine the state.
    fn order_holds(&self, k: usize) -> bool {
        let mut level: BTreeSet<(BTreeSet<StateId>, Symbol)> = BTreeSet::new();
        for a in 0..self.n_sym as Symbol {
            for img in self.run_images(&self.entered_on_other(a), a) {
                level.insert((img, a));
            }
        }
        for _ in 1..k {
            let mut next = BTreeSet::new();
            for (set, prev) in &level {
                for b in (0..self.n_sym as Symbol).filter(|b| b != prev) {
                    for img in self.run_images(set, b) {
                        next.insert((img, b));
                    }
                }
            }
            level = next;
        }
        level.iter().all(|(set, _)| set.len() <= 1)
    }

    /// Smallest order in `1..=max_order` that holds.
    fn smallest_order(&self, max_order: usize) -> Option<usize> {
        (1..=max_order.max(1)).find(|&k| self.order_holds(k))
    }

    /// Length and terminal of the chain followed on `sym` from `start`.
    fn chain(&self, start: StateId, sym: Symbol) -> (usize, StateId, bool) {
        let mut visited = vec![start];
        let mut cur = start;
        while let Some(&t) = self.next.get(&(cur, sym)) {
            if t == cur {
                return (visited.len() - 1, cur, true);
            }
            if visited.contains(&t) {
                return (visited.len() - 1, cur, false);
            }
            visited.push(t);
            cur = t;
        }
        (visited.len() - 1, cur, false)
    }
}

fn base_report(n: usize) -> ArchitectureReport {
    ArchitectureReport {
        family: ArchitectureFamily::Other,
        order: None,
        state_count: n,
        topological_complexity: (n as f64).log2(),
        satisfies: Vec::new(),
        chain_lengths: BTreeMap::new(),
        tail_ratios: BTreeMap::new(),
        notes: Vec::new(),
    }
}

fn check_binary(m: &Machine) -> Result<()> {
    if m.outputs().len() != 2 {
        return Err(Error::AlphabetMismatch("classification needs a binary output alphabet".into()));
    }
    let inputs_ok = match m.kind() {
        MachineKind::EpsilonMachine => m.alphabet().len() == 2,
        MachineKind::TransducerMemoryless => m.alphabet().len() == 2,
        MachineKind::TransducerMemoryful => m.alphabet().len() == 4,
    };
    if !inputs_ok {
        return Err(Error::AlphabetMismatch("classification needs a binary input alphabet".into()));
    }
    Ok(())
}

fn max_order(m: &Machine) -> usize {
    m.history_length().unwrap_or(m.num_states()).max(1)
}

/// Chains started from the unique entry point of each symbol's run.
fn record_chains(m: &Machine, g: &Graph, report: &mut ArchitectureReport, key: impl Fn(Symbol, Symbol) -> String) {
    for sym in 0..g.n_sym as Symbol {
        for prev in (0..g.n_sym as Symbol).filter(|&p| p != sym) {
            let starts = g.step(&g.entered_on(prev), sym);
            if let Some(&start) = starts.iter().next().filter(|_| starts.len() == 1) {
                let (len, end, looped) = g.chain(start, sym);
                let k = key(prev, sym);
                report.chain_lengths.insert(k.clone(), len);
                if looped {
                    report.tail_ratios.insert(k, m.symbol_probability(end, sym) / symbol_mass(m, end));
                }
            }
        }
    }
}

fn symbol_mass(m: &Machine, s: StateId) -> f64 {
    (0..m.alphabet().len() as Symbol).map(|a| m.symbol_probability(s, a)).sum::<f64>().max(f64::MIN_POSITIVE)
}

pub fn classify_machine(m: &Machine) -> Result<ArchitectureReport> {
    if m.kind() != MachineKind::EpsilonMachine {
        return Err(Error::InvalidArgument("classify_machine needs an epsilon-machine".into()));
    }
    check_binary(m)?;
    let g = Graph::new(m);
    let mut report = base_report(g.states.len());
    if g.states.len() == 1 {
        report.family = ArchitectureFamily::Bernoulli;
        report.order = Some(0);
        report.satisfies = vec![
            ArchitectureFamily::Bernoulli,
            ArchitectureFamily::Renewal,
            ArchitectureFamily::ReverseRenewal,
            ArchitectureFamily::AlternatingRenewal,
        ];
        record_chains(m, &g, &mut report, |_, x| x.to_string());
        return Ok(report);
    }
    if g.order_holds(1) {
        if g.entered_on(1).len() == 1 {
            report.satisfies.push(ArchitectureFamily::Renewal);
        }
        if g.entered_on(0).len() == 1 {
            report.satisfies.push(ArchitectureFamily::ReverseRenewal);
        }
        report.satisfies.push(ArchitectureFamily::AlternatingRenewal);
        report.family = report.satisfies[0];
        report.order = Some(1);
        record_chains(m, &g, &mut report, |_, x| x.to_string());
        return Ok(report);
    }
    match g.smallest_order(max_order(m)) {
        Some(k) => {
            report.family = ArchitectureFamily::AlternatingRenewal;
            report.order = Some(k);
            report.satisfies.push(ArchitectureFamily::AlternatingRenewal);
        }
        None => report.notes.push(format!("no run order up to {} determines the state", max_order(m))),
    }
    Ok(report)
}

pub fn classify_transducer(m: &Machine) -> Result<ArchitectureReport> {
    if !m.kind().is_transducer() {
        return Err(Error::InvalidArgument("classify_transducer needs a transducer".into()));
    }
    check_binary(m)?;
    let g = Graph::new(m);
    let mut report = base_report(g.states.len());
    if g.states.len() == 1 {
        report.family = ArchitectureFamily::Bernoulli;
        report.order = Some(0);
        report.satisfies = vec![ArchitectureFamily::Bernoulli];
        return Ok(report);
    }
    match m.kind() {
        MachineKind::TransducerMemoryless => classify_memoryless(m, &g, &mut report),
        _ => classify_memoryful(m, &g, &mut report),
    }
    Ok(report)
}

/// A unique state entered on a mention, from which unmentioned steps walk a
/// chain covering every recurrent state.
fn classify_memoryless(m: &Machine, g: &Graph, report: &mut ArchitectureReport) {
    let reset = g.entered_on(1);
    if reset.len() == 1 {
        let start = *reset.iter().next().expect("one element");
        let (len, end, looped) = g.chain(start, 0);
        if looped && len + 1 == g.states.len() {
            report.family = ArchitectureFamily::TransducerRenewalLike;
            report.order = Some(1);
            report.satisfies.push(ArchitectureFamily::TransducerRenewalLike);
            report.chain_lengths.insert("1>0".into(), len);
            report.tail_ratios.insert("1>0".into(), m.emission(end, 1));
            return;
        }
    }
    generalized(m, g, report);
}

fn pair_label(m: &Machine, sym: Symbol) -> String {
    let y = m.input_of(sym).expect("memoryful symbols carry an input");
    let x = m.output_of(sym).expect("memoryful symbols carry an output");
    format!("({y},{x})")
}

fn classify_memoryful(m: &Machine, g: &Graph, report: &mut ArchitectureReport) {
    if !g.order_holds(1) {
        generalized(m, g, report);
        return;
    }
    let bound = max_order(m) * 4 * 3;
    if g.states.len() > bound {
        report.notes.push(format!("{} states exceed the quadrant bound {bound}", g.states.len()));
        generalized(m, g, report);
        return;
    }
    report.family = ArchitectureFamily::TransducerAltRenewalLike;
    report.order = Some(1);
    report.satisfies.push(ArchitectureFamily::TransducerAltRenewalLike);
    record_chains(m, g, report, |p, q| format!("{}>{}", pair_label(m, p), pair_label(m, q)));

    let n = g.n_sym as Symbol;
    let quadrants: Vec<BTreeSet<StateId>> = (0..n).map(|q| g.entered_on(q)).collect();
    for q in 0..n {
        let starts: BTreeSet<StateId> = (0..n).filter(|&p| p != q).flat_map(|p| g.step(&g.entered_on(p), q)).collect();
        if starts.len() == 1 && !quadrants[usize::from(q)].is_empty() {
            report.notes.push(format!("thirds collapsed in quadrant {}", pair_label(m, q)));
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let (qa, qb) = (&quadrants[usize::from(a)], &quadrants[usize::from(b)]);
            if !qa.is_empty() && qa == qb {
                report.notes.push(format!("quadrants {} and {} merged", pair_label(m, a), pair_label(m, b)));
            }
        }
    }
}

fn generalized(m: &Machine, g: &Graph, report: &mut ArchitectureReport) {
    match g.smallest_order(max_order(m)) {
        Some(k) => {
            report.family = ArchitectureFamily::TransducerAltRenewalLike;
            report.order = Some(k);
            report.satisfies.push(ArchitectureFamily::TransducerAltRenewalLike);
        }
        None => {
            report.family = ArchitectureFamily::Other;
            report.notes.push(format!("no run order up to {} determines the state", max_order(m)));
        }
    }
}

/// Dispatches on the machine kind.
pub fn classify(m: &Machine) -> Result<ArchitectureReport> {
    if m.kind().is_transducer() {
        classify_transducer(m)
    } else {
        classify_machine(m)
    }
}

/// Whether the order-`k` run test holds; exposed for property tests.
pub fn run_order_holds(m: &Machine, k: usize) -> bool {
    Graph::new(m).order_holds(k)
}

/// One cell of the order-by-model aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSummaryRow {
    pub model: MachineKind,
    /// Order as a number, or `other` when no order was found.
    pub order: String,
    pub count: usize,
    /// Share of this model's machines; computed from the counts.
    pub proportion: f64,
}

/// Counts machines per (model kind, order). Rows are sorted by model, then by
/// order with `other` last.
pub fn summarize_architectures<'a>(
    items: impl IntoIterator<Item = (MachineKind, &'a ArchitectureReport)>,
) -> Vec<ArchitectureSummaryRow> {
    let mut counts: BTreeMap<(MachineKind, Option<usize>), usize> = BTreeMap::new();
    for (kind, r) in items {
        let order = if r.family == ArchitectureFamily::Other { None } else { r.order };
        *counts.entry((kind, order)).or_default() += 1;
    }
    let mut totals: BTreeMap<MachineKind, usize> = BTreeMap::new();
    for (&(kind, _), &n) in &counts {
        *totals.entry(kind).or_default() += n;
    }
    let mut rows: Vec<_> = counts.into_iter().collect();
    rows.sort_by_key(|&((kind, order), _)| (kind, order.is_none(), order));
    rows.into_iter()
        .map(|((model, order), count)| ArchitectureSummaryRow {
            model,
            order: order.map_or_else(|| "other".to_string(), |k| k.to_string()),
            count,
            proportion: count as f64 / totals[&model] as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parametric::{family_to_machine, sources, AlternatingRenewalFamily, RenewalFamily};

    #[test]
    fn single_state_is_bernoulli() {
        let r = classify_machine(&sources::bernoulli(0.3).unwrap()).unwrap();
        assert_eq!(r.family, ArchitectureFamily::Bernoulli);
        assert_eq!(r.order, Some(0));
        assert_eq!(r.topological_complexity, 0.0);
    }

    #[test]
    fn renewal_chain() {
        let m = family_to_machine(&RenewalFamily::renewal(vec![0.1, 0.3, 0.3]).unwrap().into());
        let r = classify_machine(&m).unwrap();
        assert_eq!(r.family, ArchitectureFamily::Renewal);
        assert_eq!(r.order, Some(1));
        assert_eq!(r.state_count, 3);
        assert_eq!(r.topological_complexity, 3f64.log2());
        assert!(r.satisfies.contains(&ArchitectureFamily::AlternatingRenewal));
        assert!((r.tail_ratios["0"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reverse_and_alternating() {
        let m = family_to_machine(&RenewalFamily::reverse(vec![0.2, 0.3, 0.3]).unwrap().into());
        assert_eq!(classify_machine(&m).unwrap().family, ArchitectureFamily::ReverseRenewal);
        let a = AlternatingRenewalFamily::new(
            RenewalFamily::renewal(vec![0.1, 0.4, 0.3]).unwrap(),
            RenewalFamily::reverse(vec![0.5, 0.2]).unwrap(),
        )
        .unwrap();
        let r = classify_machine(&family_to_machine(&a.into())).unwrap();
        assert_eq!(r.family, ArchitectureFamily::AlternatingRenewal);
        assert_eq!(r.order, Some(1));
    }

    #[test]
    fn order_two_markov_is_order_one() {
        // Within a run only "length one" versus "longer" matters.
        let m = sources::order2_markov([0.1, 0.6, 0.35, 0.85]).unwrap();
        let r = classify_machine(&m).unwrap();
        assert_eq!(r.family, ArchitectureFamily::AlternatingRenewal);
        assert_eq!(r.order, Some(1));
    }

    #[test]
    fn previous_run_length_needs_order_two() {
        // The quiet-run hazard depends on whether the preceding active run was short.
        let mut b = crate::machine::MachineBuilder::epsilon_machine();
        let a1 = b.state(vec![0.6, 0.4]);
        let a2 = b.state(vec![0.4, 0.6]);
        let qs = b.state(vec![0.5, 0.5]);
        let ql = b.state(vec![0.9, 0.1]);
        b.transition(a1, 1, a2).transition(a1, 0, qs).transition(a2, 1, a2).transition(a2, 0, ql);
        b.transition(qs, 0, qs).transition(qs, 1, a1).transition(ql, 0, ql).transition(ql, 1, a1);
        let m = b.build().unwrap();
        let r = classify_machine(&m).unwrap();
        assert_eq!(r.family, ArchitectureFamily::AlternatingRenewal);
        assert_eq!(r.order, Some(2));
        assert!(!run_order_holds(&m, 1));
        assert!(run_order_holds(&m, 3));
    }

    #[test]
    fn mention_transducer_collapses() {
        let r = classify_transducer(&sources::mention_transducer(0.1, 0.7, 0.5).unwrap()).unwrap();
        assert_eq!(r.family, ArchitectureFamily::TransducerAltRenewalLike);
        assert_eq!(r.order, Some(1));
        assert!(r.notes.iter().any(|n| n == "quadrants (1,0) and (1,1) merged"), "{:?}", r.notes);
        assert_eq!(r.notes.iter().filter(|n| n.starts_with("thirds collapsed")).count(), 4);
    }

    #[test]
    fn time_since_mention_chain() {
        let r = classify_transducer(&sources::time_since_mention(&[0.6, 0.4, 0.2, 0.1]).unwrap()).unwrap();
        assert_eq!(r.family, ArchitectureFamily::TransducerRenewalLike);
        assert_eq!(r.chain_lengths["1>0"], 3);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        assert!(classify_machine(&sources::copy_channel()).is_err());
        assert!(classify_transducer(&sources::bernoulli(0.5).unwrap()).is_err());
    }
}
