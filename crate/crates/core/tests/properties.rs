use std::collections::BTreeSet;
use std::path::Path;

use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use cmech_core::classify::{run_order_holds, ArchitectureFamily};
use cmech_core::evaluate::{etv_values, filter_predict, score};
use cmech_core::parametric::{family_to_machine, AlternatingRenewalFamily, RenewalFamily};
use cmech_core::pipeline::{
    discretize_daycast, generate_corpus, ingest_reader, CorpusSpec, Generator, ObservationWindow, PipelineConfig,
    StreamGroup,
};
use cmech_core::serialize::{from_json, to_json};
use cmech_core::series::epoch_day_to_date;
use cmech_core::stats::chi_squared_sf;
use cmech_core::{
    classify_machine, g_statistic, g_test, reconstruct_machine, BinarySeries, CountVector, Machine, MachineBuilder,
    MachineKind, ReconstructionConfig, SeriesRef,
};

const CASES: u32 = 1000;

fn config() -> ProptestConfig {
    ProptestConfig { cases: CASES, ..ProptestConfig::default() }
}

/// Random binary epsilon-machine: every positive-probability symbol has a successor.
fn arb_machine() -> impl Strategy<Value = Machine> {
    (1usize..=6)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.01f64..0.99], n),
                proptest::collection::vec(0..n, 2 * n),
            )
        })
        .prop_map(|(n, p1, targets)| {
            let mut b = MachineBuilder::epsilon_machine();
            for &p in &p1 {
                b.state(vec![1.0 - p, p]);
            }
            for s in 0..n {
                for sym in 0..2u8 {
                    let p = if sym == 1 { p1[s] } else { 1.0 - p1[s] };
                    if p > 0.0 {
                        b.transition(s, sym, targets[2 * s + usize::from(sym)]);
                    }
                }
            }
            b.build().unwrap()
        })
}

/// Renewal head built from hazards bounded away from 0 and 1.
fn arb_head() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.05f64..0.95, 1..=4).prop_map(|hazards| {
        let mut surv = 1.0;
        hazards
            .iter()
            .map(|h| {
                let p = surv * h;
                surv -= p;
                p
            })
            .collect()
    })
}

fn g_oracle(counts: &[u64], reference: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut g = 0.0;
    for i in 0..counts.len() {
        if counts[i] > 0 {
            let expected = n as f64 * reference[i];
            g += counts[i] as f64 * (counts[i] as f64 / expected).ln();
        }
    }
    2.0 * g
}

fn arb_counts_and_reference() -> impl Strategy<Value = (Vec<u64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|k| {
        (
            proptest::collection::vec(0u64..500, k),
            proptest::collection::vec(0.01f64..1.0, k).prop_map(|w| {
                let t: f64 = w.iter().sum();
                w.into_iter().map(|x| x / t).collect::<Vec<_>>()
            }),
        )
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn machine_invariants_and_json_round_trip(m in arb_machine()) {
        // Unifilarity: at most one successor per (state, symbol).
        let keys: Vec<_> = m.transitions().map(|(s, a, _)| (s, a)).collect();
        let unique: BTreeSet<_> = keys.iter().copied().collect();
        prop_assert_eq!(keys.len(), unique.len());
        for s in 0..m.num_states() {
            prop_assert!((m.emissions(s).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let synced = m.with_synchronizing_suffixes(m.num_states() + 1);
        // Partition: every history has one state and all share one length.
        let lens: BTreeSet<usize> = synced.suffix_map().keys().map(Vec::len).collect();
        prop_assert!(lens.len() <= 1);
        for (h, &s) in synced.suffix_map() {
            prop_assert!(s < m.num_states());
            prop_assert!(h.iter().all(|&c| c < 2));
        }
        prop_assert_eq!(from_json(&to_json(&synced)).unwrap(), synced);
    }

    #[test]
    fn stationary_distribution_is_fixed(m in arb_machine()) {
        let pi = m.stationary_distribution().unwrap();
        let p = m.transition_matrix();
        prop_assert!((pi.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (t, &w) in pi.weights.iter().enumerate() {
            let flow: f64 = (0..m.num_states()).map(|s| pi.weights[s] * p[s][t]).sum();
            prop_assert!((flow - w).abs() < 1e-8, "state {}: {} vs {}", t, flow, w);
        }
    }

    #[test]
    fn reconstruction_partitions_observed_histories(
        values in proptest::collection::vec(0u8..2, 30..400),
        l in 1usize..=3,
    ) {
        let s = BinarySeries::single_segment(values.clone(), 600).unwrap();
        let cfg = ReconstructionConfig { min_count: 2, ..ReconstructionConfig::new(l, MachineKind::EpsilonMachine) };
        let m = reconstruct_machine(&s, &cfg).unwrap();
        for st in 0..m.num_states() {
            prop_assert!((m.emissions(st).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        if m.num_states() > 1 {
            // Every history followed by a symbol in the data is assigned.
            for w in values.windows(l + 1) {
                prop_assert!(m.suffix_map().contains_key(&w[..l]), "missing {:?}", &w[..l]);
            }
        }
        let a = filter_predict(&m, SeriesRef::Output(&s)).unwrap();
        let b = filter_predict(&m, SeriesRef::Output(&s)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn g_statistic_matches_scratch_and_statrs((counts, reference) in arb_counts_and_reference()) {
        let g = g_statistic(&CountVector::new(counts.clone()), &reference);
        prop_assert!((g - g_oracle(&counts, &reference)).abs() < 1e-9 * g.max(1.0));
        prop_assert!(g >= 0.0);
        let dof = (reference.len() - 1) as f64;
        let oracle = ChiSquared::new(dof).unwrap().sf(g);
        prop_assert!((chi_squared_sf(g, dof) - oracle).abs() < 1e-9, "{} vs {}", chi_squared_sf(g, dof), oracle);
        let strict = g_test(&CountVector::new(counts.clone()), &reference, 0.01).unwrap();
        let loose = g_test(&CountVector::new(counts), &reference, 0.1).unwrap();
        prop_assert!((0.0..=1.0).contains(&strict.p_value));
        prop_assert!(!loose.accepted() || strict.accepted());
    }

    #[test]
    fn proportional_counts_give_zero(k in 2usize..6, scale in 1u64..50) {
        let counts = vec![scale; k];
        let g = g_statistic(&CountVector::new(counts), &vec![1.0 / k as f64; k]);
        prop_assert!(g.abs() < 1e-9);
    }

    #[test]
    fn renewal_families_round_trip_through_classifier(head in arb_head(), reverse in any::<bool>()) {
        let fam = if reverse { RenewalFamily::reverse(head.clone()) } else { RenewalFamily::renewal(head.clone()) }.unwrap();
        let m = family_to_machine(&fam.into());
        let r = classify_machine(&m).unwrap();
        let expected = if reverse { ArchitectureFamily::ReverseRenewal } else { ArchitectureFamily::Renewal };
        if head.len() == 1 {
            prop_assert_eq!(r.family, ArchitectureFamily::Bernoulli);
            prop_assert_eq!(r.order, Some(0));
        } else {
            prop_assert!(r.satisfies.contains(&expected), "{:?}", r);
            prop_assert_eq!(r.order, Some(1));
            prop_assert_eq!(r.state_count, head.len());
            // Subset law: renewal and reverse renewal are alternating renewal at order 1.
            prop_assert!(r.satisfies.contains(&ArchitectureFamily::AlternatingRenewal));
            prop_assert!(run_order_holds(&m, 1));
        }
        prop_assert_eq!(r.topological_complexity, (r.state_count as f64).log2());
    }

    #[test]
    fn alternating_families_round_trip(q in arb_head(), a in arb_head()) {
        let fam = AlternatingRenewalFamily::new(
            RenewalFamily::renewal(q).unwrap(),
            RenewalFamily::reverse(a).unwrap(),
        ).unwrap();
        let m = family_to_machine(&fam.into());
        let r = classify_machine(&m).unwrap();
        prop_assert!(r.satisfies.contains(&ArchitectureFamily::AlternatingRenewal));
        prop_assert_eq!(r.order, Some(1));
        prop_assert_eq!(r.state_count, m.recurrent_states().len());
    }

    #[test]
    fn run_order_is_monotone(m in arb_machine()) {
        let holds: Vec<bool> = (1..=6).map(|k| run_order_holds(&m, k)).collect();
        for k in 1..holds.len() {
            prop_assert!(!holds[k - 1] || holds[k], "order {} holds but {} does not", k, k + 1);
        }
        let r = classify_machine(&m).unwrap();
        prop_assert_eq!(r.family == ArchitectureFamily::Bernoulli, r.state_count == 1 && r.order == Some(0));
        if matches!(r.family, ArchitectureFamily::Renewal | ArchitectureFamily::ReverseRenewal) {
            prop_assert!(run_order_holds(&m, 1));
        }
        prop_assert_eq!(r.state_count, m.recurrent_states().len());
    }

    #[test]
    fn etv_is_bounded_and_permutation_invariant(
        pairs in proptest::collection::vec((0u8..2, 0.0f64..=1.0), 1..200),
        rot in 0usize..200,
    ) {
        let (x, p): (Vec<u8>, Vec<f64>) = pairs.iter().copied().unzip();
        let e = etv_values(&x, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        let mut perm = pairs.clone();
        perm.rotate_left(rot % pairs.len());
        perm.reverse();
        let (x2, p2): (Vec<u8>, Vec<f64>) = perm.into_iter().unzip();
        prop_assert!((etv_values(&x2, &p2).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn score_identities(s in 0.0f64..1.0, m in 0.0f64..1.0) {
        let v = score(s, m);
        prop_assert_eq!(v > 1.0, m < s);
        prop_assert_eq!(v == 1.0, m == s);
        if m > 0.0 {
            prop_assert!((v * m - s).abs() < 1e-12);
        }
    }

    #[test]
    fn daycasting_bin_count_law(
        delta_idx in 0usize..4,
        start_h in 0u32..12,
        len_h in 1u32..12,
        offset in -720i32..720,
        days in 2usize..5,
        events in proptest::collection::vec((0i64..6 * 86_400, any::<bool>()), 2..60),
    ) {
        let delta = [300u32, 600, 900, 1800][delta_idx];
        let cfg = PipelineConfig {
            delta_seconds: delta,
            day_start: chrono::NaiveTime::from_hms_opt(start_h, 0, 0).unwrap(),
            day_end: chrono::NaiveTime::from_hms_opt(start_h + len_h, 0, 0).unwrap(),
            quiescence_threshold: 0,
            train_weeks: 1,
            window: Some(ObservationWindow { first_day: epoch_day_to_date(20), days }),
            ..PipelineConfig::default()
        };
        let base = 19 * 86_400;
        let mut text = String::from("stream_id,timestamp,kind,utc_offset_min\n");
        for (t, mention) in &events {
            text.push_str(&format!("s,{},{},{offset}\n", base + t, if *mention { "mention" } else { "post" }));
        }
        // Anchors guarantee a span of more than one day.
        text.push_str(&format!("s,{base},mention,{offset}\ns,{},mention,{offset}\n", base + 7 * 86_400));
        let log = ingest_reader(text.as_bytes(), Path::new("p")).unwrap();
        let d = discretize_daycast(&log, &cfg).unwrap();
        let series = &d.streams["s"];
        let bpd = (len_h * 3600 / delta) as usize;
        prop_assert_eq!(series.output().len(), days * bpd);
        prop_assert!(series.segments().iter().all(|seg| seg.len == bpd));
        // Independent oracle: which (day, bin) cells hold a post.
        let mut expected = BTreeSet::new();
        for r in log.records.iter().filter(|r| r.kind == cmech_core::pipeline::EventKind::Post) {
            let local = r.timestamp + 60 * i64::from(offset);
            let day = local.div_euclid(86_400) - 20;
            let sod = local.rem_euclid(86_400) - i64::from(start_h) * 3600;
            if (0..days as i64).contains(&day) && (0..i64::from(len_h) * 3600).contains(&sod) {
                expected.insert(day as usize * bpd + (sod / i64::from(delta)) as usize);
            }
        }
        let got: BTreeSet<usize> = series.output().values().iter().enumerate().filter(|(_, &v)| v == 1).map(|(i, _)| i).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn generated_corpus_round_trips(
        p in 0.05f64..0.6,
        offset in -720i32..720,
        seed in any::<u64>(),
    ) {
        let spec = CorpusSpec {
            weeks: 1,
            start_date: chrono::NaiveDate::from_ymd_opt(2024, 3, 4).unwrap(),
            utc_offsets_min: vec![offset],
            groups: vec![StreamGroup { count: 1, mention_rate: 0.2, generator: Generator::Bernoulli { p } }],
        };
        let cfg = PipelineConfig { quiescence_threshold: 0, ..PipelineConfig::default() };
        let g = generate_corpus(&spec, &cfg, seed).unwrap();
        let log = ingest_reader(g.csv.as_bytes(), Path::new("g")).unwrap();
        let d = discretize_daycast(&log, &PipelineConfig { window: Some(g.window), ..cfg }).unwrap();
        prop_assert_eq!(d.streams, g.truth);
    }
}
