use cmech_core::classify::{run_order_holds, summarize_architectures};
use cmech_core::parametric::{
    bernoulli_series, family_to_machine, rng_for, simulate, simulate_transducer, sources, AlternatingRenewalFamily,
    RenewalFamily,
};
use cmech_core::{
    classify, classify_machine, classify_transducer, reconstruct_machine, reconstruct_transducer, Alphabet,
    ArchitectureFamily, Machine, MachineKind, ReconstructionConfig,
};
use rand::Rng;

fn reconstructed(m: &Machine, steps: usize, l_max: usize, seed: u64) -> Machine {
    let s = simulate(m, steps, seed, None).unwrap();
    reconstruct_machine(&s, &ReconstructionConfig::new(l_max, MachineKind::EpsilonMachine)).unwrap()
}

#[test]
fn reconstructed_renewal_keeps_family_and_tail() {
    let fam = RenewalFamily::renewal(vec![0.1, 0.3, 0.3]).unwrap();
    let m = reconstructed(&family_to_machine(&fam.clone().into()), 300_000, 3, 1);
    let r = classify_machine(&m).unwrap();
    assert_eq!(r.family, ArchitectureFamily::Renewal);
    assert_eq!(r.order, Some(1));
    assert_eq!(r.state_count, 3);
    assert!((r.tail_ratios["0"] - fam.lambda_tail()).abs() < 0.02, "{:?}", r.tail_ratios);
}

#[test]
fn reconstructed_alternating_keeps_family() {
    let fam = AlternatingRenewalFamily::new(
        RenewalFamily::renewal(vec![0.3, 0.2, 0.25]).unwrap(),
        RenewalFamily::reverse(vec![0.6, 0.3]).unwrap(),
    )
    .unwrap();
    let m = reconstructed(&family_to_machine(&fam.into()), 300_000, 4, 2);
    let r = classify_machine(&m).unwrap();
    assert_eq!(r.family, ArchitectureFamily::AlternatingRenewal);
    assert_eq!(r.order, Some(1));
}

#[test]
fn bernoulli_data_gives_order_zero() {
    let m = reconstructed(&sources::bernoulli(0.2).unwrap(), 100_000, 3, 3);
    let r = classify(&m).unwrap();
    assert_eq!(r.family, ArchitectureFamily::Bernoulli);
    assert_eq!(r.order, Some(0));
    assert_eq!(r.topological_complexity, 0.0);
}

#[test]
fn reconstructed_fig8_transducer_is_collapsed() {
    let truth = sources::mention_transducer(0.1, 0.7, 0.5).unwrap();
    let input = bernoulli_series(0.1, 300_000, 8).unwrap();
    let joint = simulate_transducer(&truth, &input, 9).unwrap();
    let m = reconstruct_transducer(&joint, &ReconstructionConfig::new(2, MachineKind::TransducerMemoryful)).unwrap();
    let r = classify_transducer(&m).unwrap();
    assert_eq!(r.family, ArchitectureFamily::TransducerAltRenewalLike);
    assert_eq!(r.state_count, 3);
    assert!(r.notes.iter().any(|n| n == "quadrants (1,0) and (1,1) merged"), "{:?}", r.notes);
}

fn random_memoryful(states: usize, seed: u64) -> Machine {
    let mut rng = rng_for(seed, 0xc1a5);
    let mut b = Machine::builder(MachineKind::TransducerMemoryful, Alphabet::binary_joint(), Alphabet::binary());
    for _ in 0..states {
        let p: f64 = rng.gen_range(0.05..0.95);
        b.state(vec![1.0 - p, p]);
    }
    for s in 0..states {
        for sym in 0..4u8 {
            b.transition(s, sym, rng.gen_range(0..states));
        }
    }
    b.input_marginal(vec![0.7, 0.3]);
    b.build().unwrap()
}

// Brute-force search for a six-state transducer whose quadrants do not
// split into chains; the run-order checker is then run exhaustively on it.
#[test]
fn random_transducer_without_run_structure_is_other() {
    let found = (0..10_000u64)
        .map(|seed| random_memoryful(6, seed))
        .find(|m| m.recurrent_states().len() == 6 && (1..=6).all(|k| !run_order_holds(m, k)))
        .expect("a counterexample exists among random machines");
    let r = classify_transducer(&found).unwrap();
    assert_eq!(r.family, ArchitectureFamily::Other);
    assert_eq!(r.order, None);
    assert_eq!(r.state_count, 6);
}

#[test]
fn summary_counts_orders() {
    let bern = classify(&sources::bernoulli(0.4).unwrap()).unwrap();
    let ren = classify(&family_to_machine(&RenewalFamily::renewal(vec![0.2, 0.5]).unwrap().into())).unwrap();
    let rows = summarize_architectures([
        (MachineKind::EpsilonMachine, &bern),
        (MachineKind::EpsilonMachine, &bern),
        (MachineKind::EpsilonMachine, &ren),
    ]);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].order.as_str(), rows[0].count), ("0", 2));
    assert!((rows[0].proportion - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!((rows[1].order.as_str(), rows[1].count), ("1", 1));
}
