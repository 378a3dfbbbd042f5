use cmech_core::parametric::rng_for;
use cmech_core::{g_test, CountVector};
use rand::Rng;

// Draws `n` symbols from `reference` and tests them against it.
fn null_rejection_rate(reference: &[f64], n: usize, trials: usize, seed: u64) -> f64 {
    let mut rng = rng_for(seed, 0);
    let mut rejected = 0;
    for _ in 0..trials {
        let mut counts = vec![0u64; reference.len()];
        for _ in 0..n {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut idx = reference.len() - 1;
            for (i, p) in reference.iter().enumerate() {
                acc += p;
                if u < acc {
                    idx = i;
                    break;
                }
            }
            counts[idx] += 1;
        }
        if !g_test(&CountVector::new(counts), reference, 0.05).unwrap().accepted() {
            rejected += 1;
        }
    }
    rejected as f64 / trials as f64
}

#[test]
fn type_one_rate_binary() {
    let rate = null_rejection_rate(&[0.3, 0.7], 200, 2000, 1);
    assert!((0.03..=0.07).contains(&rate), "{rate}");
}

#[test]
fn type_one_rate_four_symbols() {
    let rate = null_rejection_rate(&[0.1, 0.2, 0.3, 0.4], 300, 2000, 2);
    assert!((0.03..=0.07).contains(&rate), "{rate}");
}

// Noncentrality 2n KL((0.6, 0.4) || (0.7, 0.3)) is about 45 at n = 1000, so the
// power against the 10.83 critical value is about 0.9997.
#[test]
fn power_against_shifted_reference() {
    let mut rng = rng_for(3, 0);
    let mut rejected = 0;
    for _ in 0..200 {
        let ones = (0..1000).filter(|_| rng.gen::<f64>() < 0.4).count() as u64;
        if !g_test(&CountVector::new(vec![1000 - ones, ones]), &[0.7, 0.3], 0.001).unwrap().accepted() {
            rejected += 1;
        }
    }
    assert!(rejected >= 197, "{rejected}/200");
}
