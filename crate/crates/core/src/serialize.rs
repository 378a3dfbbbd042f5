//! Native JSON and Graphviz DOT renderings of [`Machine`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{Alphabet, Machine, MachineKind, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MachineFormat {
    NativeJson,
    Dot,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineDoc {
    kind: MachineKind,
    alphabet: Alphabet,
    output_alphabet: Alphabet,
    states: Vec<StateDoc>,
    transitions: Vec<TransitionDoc>,
    suffix_map: Vec<SuffixDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sync_policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_marginal: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    id: usize,
    emissions: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionDoc {
    from: usize,
    symbol: String,
    to: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuffixDoc {
    history: Vec<String>,
    state: usize,
}

pub fn serialize_machine(m: &Machine, format: MachineFormat) -> Vec<u8> {
    match format {
        MachineFormat::NativeJson => to_json(m).into_bytes(),
        MachineFormat::Dot => to_dot(m).into_bytes(),
    }
}

pub fn to_json(m: &Machine) -> String {
    let outputs = m.outputs();
    let alphabet = m.alphabet();
    let doc = MachineDoc {
        kind: m.kind(),
        alphabet: alphabet.clone(),
        output_alphabet: outputs.clone(),
        states: (0..m.num_states())
            .map(|s| StateDoc {
                id: s,
                emissions: m
                    .emissions(s)
                    .iter()
                    .enumerate()
                    .map(|(o, &p)| (outputs.label(o as Symbol).to_string(), p))
                    .collect(),
                label: m.label(s).map(str::to_string),
            })
            .collect(),
        transitions: m
            .transitions()
            .map(|(from, sym, to)| TransitionDoc { from, symbol: alphabet.label(sym).to_string(), to })
            .collect(),
        suffix_map: m
            .suffix_map()
            .iter()
            .map(|(h, &state)| SuffixDoc { history: h.iter().map(|&c| alphabet.label(c).to_string()).collect(), state })
            .collect(),
        sync_policy: m.sync_policy().map(str::to_string),
        input_marginal: m.input_marginal().map(<[f64]>::to_vec),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("machine documents always serialise");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<Machine> {
    let doc: MachineDoc = serde_json::from_str(text)?;
    let n = doc.states.len();
    let mut emissions = vec![None; n];
    let mut b = Machine::builder(doc.kind, doc.alphabet.clone(), doc.output_alphabet.clone());
    for st in &doc.states {
        if st.id >= n || emissions[st.id].is_some() {
            return Err(Error::InvalidMachine(format!("state ids must be 0..{n} without repeats (saw {})", st.id)));
        }
        let mut e = vec![0.0; doc.output_alphabet.len()];
        for (sym, &p) in &st.emissions {
            let o = doc
                .output_alphabet
                .index_of(sym)
                .ok_or_else(|| Error::InvalidMachine(format!("state {} emits unknown symbol '{sym}'", st.id)))?;
            e[usize::from(o)] = p;
        }
        emissions[st.id] = Some(e);
        if let Some(l) = &st.label {
            b.label(st.id, l.clone());
        }
    }
    for e in emissions {
        b.state(e.expect("every id filled"));
    }
    let sym = |label: &str| {
        doc.alphabet
            .index_of(label)
            .ok_or_else(|| Error::InvalidMachine(format!("unknown transition symbol '{label}'")))
    };
    for t in &doc.transitions {
        b.transition(t.from, sym(&t.symbol)?, t.to);
    }
    for entry in &doc.suffix_map {
        let h = entry.history.iter().map(|l| sym(l)).collect::<Result<Vec<_>>>()?;
        b.suffix(h, entry.state);
    }
    if let Some(p) = doc.sync_policy {
        b.sync_policy(p);
    }
    if let Some(mg) = doc.input_marginal {
        b.input_marginal(mg);
    }
    b.build()
}

/// Probability formatted with at most four decimals, trailing zeros trimmed.
pub fn format_probability(p: f64) -> String {
    let s = format!("{p:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn to_dot(m: &Machine) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", m.kind().as_str());
    out.push_str("  rankdir=LR;\n  node [shape=circle];\n");
    for s in 0..m.num_states() {
        let label = match m.label(s) {
            Some(l) => format!("{s}\\n{l}"),
            None => s.to_string(),
        };
        let _ = writeln!(out, "  {s} [label=\"{label}\"];");
    }
    let outputs = m.outputs();
    for (from, sym, to) in m.transitions() {
        let sym_label = m.alphabet().label(sym);
        match m.kind() {
            MachineKind::EpsilonMachine => {
                let p = format_probability(m.emission(from, sym));
                let _ = writeln!(out, "  {from} -> {to} [label=\"{sym_label} : {p}\"];");
            }
            MachineKind::TransducerMemoryful => {
                let x = m.output_of(sym).expect("memoryful symbols carry an output");
                let p = format_probability(m.emission(from, x));
                let _ = writeln!(out, "  {from} -> {to} [label=\"{sym_label} : {p}\"];");
            }
            MachineKind::TransducerMemoryless => {
                for x in 0..outputs.len() as Symbol {
                    let p = format_probability(m.emission(from, x));
                    let _ = writeln!(out, "  {from} -> {to} [label=\"{sym_label}|{} : {p}\"];", outputs.label(x));
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
