//! Likelihood-ratio (G) goodness-of-fit test against a fixed reference distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum history count below which no test is run.
pub const DEFAULT_MIN_COUNT: u64 = 5;

/// Per-symbol counts of observed next symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn zeros(n: usize) -> Self {
        Self { counts: vec![0; n], total: 0 }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn add(&mut self, i: usize, n: u64) {
        self.counts[i] += n;
        self.total += n;
    }

    pub fn merge(&mut self, other: &CountVector) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn subtract(&mut self, other: &CountVector) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a -= b;
        }
        self.total -= other.total;
    }

    /// Relative frequencies; uniform when empty.
    pub fn distribution(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![1.0 / self.counts.len() as f64; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / self.total as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestOutcome {
    pub decision: Decision,
    pub p_value: f64,
    pub statistic: f64,
}

impl TestOutcome {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

/// `G = 2 sum n_x ln(n_x / (N p_x))`, with `0 ln 0 = 0`. Infinite when an
/// observed symbol has zero reference probability.
pub fn g_statistic(observed: &CountVector, reference: &[f64]) -> f64 {
    if observed.total == 0 {
        return 0.0;
    }
    let n = observed.total as f64;
    let mut g = 0.0;
    for (&c, &p) in observed.counts.iter().zip(reference) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return f64::INFINITY;
        }
        let c = c as f64;
        g += c * (c / (n * p)).ln();
    }
    (2.0 * g).max(0.0)
}

pub fn g_test(observed: &CountVector, reference: &[f64], alpha: f64) -> Result<TestOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("significance level {alpha} outside (0, 1)")));
    }
    if observed.counts.len() != reference.len() {
        return Err(Error::AlphabetMismatch("count vector and reference differ in size".into()));
    }
    let dof = reference.len().saturating_sub(1);
    let statistic = g_statistic(observed, reference);
    let p_value = if dof == 0 {
        1.0
    } else if statistic.is_infinite() {
        0.0
    } else {
        chi_squared_sf(statistic, dof as f64)
    };
    let decision = if p_value < alpha { Decision::Reject } else { Decision::Accept };
    Ok(TestOutcome { decision, p_value, statistic })
}

/// Upper tail of the chi-squared distribution.
pub fn chi_squared_sf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(0.5 * dof, 0.5 * x)
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_ITER: usize = 10_000;

/// Regularised upper incomplete gamma `Q(a, x) = Gamma(a, x) / Gamma(a)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Lanczos approximation (g = 7, n = 9), accurate to ~1e-15 for a > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
