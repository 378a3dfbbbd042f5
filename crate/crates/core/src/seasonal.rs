//! Periodic inhomogeneous Bernoulli baseline on the logit scale.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::BinarySeries;

pub const DEFAULT_HARMONICS: std::ops::RangeInclusive<usize> = 1..=12;
pub const DEFAULT_PENALTIES: [f64; 10] = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6];

const IRLS_MAX_ITER: usize = 200;
const IRLS_TOL: f64 = 1e-10;
const ETA_BOUND: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonalModel {
    pub intercept: f64,
    /// Cosine and sine coefficients, interleaved per harmonic.
    pub basis_coefficients: Vec<f64>,
    pub harmonics: usize,
    pub period_bins: usize,
    pub bins_per_day: usize,
    pub smoothing: f64,
    pub gcv: f64,
    pub edf: f64,
    /// Constant fit to an all-0 or all-1 training series.
    pub degenerate: bool,
    pub fitted_profile: Vec<f64>,
}

impl SeasonalModel {
    /// Probability for bin-of-week `t` (taken modulo the period).
    pub fn predict(&self, t: usize) -> f64 {
        self.fitted_profile[t % self.period_bins]
    }

    /// Per-bin probabilities for a daycasted series, phased by calendar weekday.
    pub fn predict_series(&self, series: &BinarySeries) -> Result<Vec<f64>> {
        if series.bins_per_day().is_some_and(|b| b != self.bins_per_day) {
            return Err(Error::InvalidArgument(format!(
                "series has {} bins per day but the model was fitted on {}",
                series.bins_per_day().unwrap_or(0),
                self.bins_per_day
            )));
        }
        Ok(series.week_phases().into_iter().map(|t| self.predict(t)).collect())
    }

    /// Linear predictor at bin-of-week `t` before clipping.
    pub fn linear_predictor(&self, t: usize) -> f64 {
        let row = basis_row(t % self.period_bins, self.period_bins, self.harmonics);
        self.intercept + row[1..].iter().zip(&self.basis_coefficients).map(|(x, b)| x * b).sum::<f64>()
    }

    /// CSV with columns `bin_of_week,p`.
    pub fn write_profile_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_of_week", "p"])?;
        for (t, p) in self.fitted_profile.iter().enumerate() {
            w.write_record([t.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn seasonal_predict(m: &SeasonalModel, t: usize) -> f64 {
    m.predict(t)
}

fn basis_row(phase: usize, period: usize, harmonics: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(1 + 2 * harmonics);
    row.push(1.0);
    let theta = TAU * phase as f64 / period as f64;
    for k in 1..=harmonics {
        let a = theta * k as f64;
        row.push(a.cos());
        row.push(a.sin());
    }
    row
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Per-phase trials and successes.
struct PhaseCounts {
    period: usize,
    bins_per_day: usize,
    trials: Vec<f64>,
    ones: Vec<f64>,
    total: f64,
}

fn aggregate(train: &BinarySeries) -> Result<PhaseCounts> {
    let bpd = train.bins_per_day().ok_or(Error::EmptySeries)?;
    let segs = train.segments();
    let span = (segs[segs.len() - 1].epoch_day - segs[0].epoch_day + 1) as usize;
    if span < 14 {
        return Err(Error::InsufficientSpan { available: span, required: 14 });
    }
    let period = 7 * bpd;
    let mut trials = vec![0.0; period];
    let mut ones = vec![0.0; period];
    for (phase, &x) in train.week_phases().into_iter().zip(train.values()) {
        trials[phase] += 1.0;
        ones[phase] += f64::from(x);
    }
    Ok(PhaseCounts { period, bins_per_day: bpd, trials, ones, total: train.len() as f64 })
}

struct Fit {
    beta: DVector<f64>,
    deviance: f64,
    edf: f64,
}

/// Bernoulli deviance of `y` ones in `n` bins at probability `mu`, i.e. the
/// per-bin deviance summed over the phase (saturated log-likelihood is 0).
fn bernoulli_deviance(y: f64, n: f64, mu: f64) -> f64 {
    let term = |obs: f64, p: f64| if obs > 0.0 { obs * p.ln() } else { 0.0 };
    -2.0 * (term(y, mu) + term(n - y, 1.0 - mu))
}

fn irls(counts: &PhaseCounts, harmonics: usize, penalty: f64) -> Result<Fit> {
    let p = 1 + 2 * harmonics;
    let rows: Vec<usize> = (0..counts.period).filter(|&t| counts.trials[t] > 0.0).collect();
    let basis: Vec<Vec<f64>> = rows.iter().map(|&t| basis_row(t, counts.period, harmonics)).collect();
    let x = DMatrix::from_fn(rows.len(), p, |i, j| basis[i][j]);
    let mut pen = DVector::zeros(p);
    for k in 1..=harmonics {
        let w = penalty * (k as f64).powi(4);
        pen[2 * k - 1] = w;
        pen[2 * k] = w;
    }
    let mean = counts.ones.iter().sum::<f64>() / counts.total;
    let mut beta = DVector::zeros(p);
    beta[0] = logit(mean.clamp(1e-6, 1.0 - 1e-6));
    let mut gram = DMatrix::zeros(p, p);
    for _ in 0..IRLS_MAX_ITER {
        let eta = &x * &beta;
        let mut w = DVector::zeros(rows.len());
        let mut z = DVector::zeros(rows.len());
        for (i, &t) in rows.iter().enumerate() {
            let e = eta[i].clamp(-ETA_BOUND, ETA_BOUND);
            let mu = sigmoid(e);
            let v = (mu * (1.0 - mu)).max(1e-12);
            w[i] = counts.trials[t] * v;
            z[i] = e + (counts.ones[t] / counts.trials[t] - mu) / v;
        }
        let mut xtw = x.transpose();
        for (i, wi) in w.iter().enumerate() {
            xtw.column_mut(i).scale_mut(*wi);
        }
        gram = &xtw * &x;
        let mut lhs = gram.clone();
        for j in 0..p {
            lhs[(j, j)] += pen[j];
        }
        let rhs = &xtw * &z;
        let chol =
            lhs.cholesky().ok_or_else(|| Error::InvalidArgument("seasonal design is not positive definite".into()))?;
        let next = chol.solve(&rhs);
        let step = (&next - &beta).amax();
        beta = next;
        if step < IRLS_TOL {
            break;
        }
    }
    let mut lhs = gram.clone();
    for j in 0..p {
        lhs[(j, j)] += pen[j];
    }
    let inv = lhs
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("seasonal design is not positive definite".into()))?
        .inverse();
    let edf = (inv * &gram).trace();
    let eta = &x * &beta;
    let deviance = rows
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            bernoulli_deviance(counts.ones[t], counts.trials[t], sigmoid(eta[i].clamp(-ETA_BOUND, ETA_BOUND)))
        })
        .sum();
    Ok(Fit { beta, deviance, edf })
}

fn build_model(counts: &PhaseCounts, harmonics: usize, penalty: f64, fit: &Fit, gcv: f64) -> SeasonalModel {
    let floor = 1.0 / (2.0 * counts.total);
    let mut m = SeasonalModel {
        intercept: fit.beta[0],
        basis_coefficients: fit.beta.iter().skip(1).copied().collect(),
        harmonics,
        period_bins: counts.period,
        bins_per_day: counts.bins_per_day,
        smoothing: penalty,
        gcv,
        edf: fit.edf,
        degenerate: false,
        fitted_profile: Vec::new(),
    };
    m.fitted_profile = (0..counts.period).map(|t| sigmoid(m.linear_predictor(t)).clamp(floor, 1.0 - floor)).collect();
    m
}

fn degenerate_model(counts: &PhaseCounts) -> Option<SeasonalModel> {
    let ones: f64 = counts.ones.iter().sum();
    if ones > 0.0 && ones < counts.total {
        return None;
    }
    let floor = 1.0 / (2.0 * counts.total);
    let p = if ones == 0.0 { floor } else { 1.0 - floor };
    Some(SeasonalModel {
        intercept: logit(p),
        basis_coefficients: Vec::new(),
        harmonics: 0,
        period_bins: counts.period,
        bins_per_day: counts.bins_per_day,
        smoothing: 0.0,
        gcv: 0.0,
        edf: 1.0,
        degenerate: true,
        fitted_profile: vec![p; counts.period],
    })
}

/// Fits one (harmonics, penalty) combination.
pub fn fit_seasonal_fixed(train: &BinarySeries, harmonics: usize, penalty: f64) -> Result<SeasonalModel> {
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(Error::InvalidArgument(format!("penalty {penalty} must be finite and nonnegative")));
    }
    let counts = aggregate(train)?;
    if let Some(m) = degenerate_model(&counts) {
        return Ok(m);
    }
    let fit = irls(&counts, harmonics, penalty)?;
    let gcv = gcv_score(&fit, counts.total);
    Ok(build_model(&counts, harmonics, penalty, &fit, gcv))
}

/// Inflation of the effective degrees of freedom in the GCV denominator.
pub const GCV_GAMMA: f64 = 1.4;

fn gcv_score(fit: &Fit, n: f64) -> f64 {
    let denom = 1.0 - GCV_GAMMA * fit.edf / n;
    fit.deviance / (denom * denom)
}

/// Selects harmonics and penalty by generalized cross-validation; the first
/// grid entry wins ties.
pub fn fit_seasonal(train: &BinarySeries, harmonics_grid: &[usize], penalty_grid: &[f64]) -> Result<SeasonalModel> {
    if harmonics_grid.is_empty() || penalty_grid.is_empty() {
        return Err(Error::InvalidArgument("empty seasonal search grid".into()));
    }
    if let Some(p) = penalty_grid.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidArgument(format!("penalty {p} must be finite and nonnegative")));
    }
    let counts = aggregate(train)?;
    if let Some(m) = degenerate_model(&counts) {
        return Ok(m);
    }
    let mut best: Option<(f64, usize, f64, Fit)> = None;
    for &k in harmonics_grid {
        if 1 + 2 * k > counts.period {
            continue;
        }
        for &pen in penalty_grid {
            let fit = irls(&counts, k, pen)?;
            let score = gcv_score(&fit, counts.total);
            if best.as_ref().is_none_or(|(s, ..)| score < *s) {
                best = Some((score, k, pen, fit));
            }
        }
    }
    let (gcv, k, pen, fit) =
        best.ok_or_else(|| Error::InvalidArgument("no harmonic count fits the weekly period".into()))?;
    Ok(build_model(&counts, k, pen, &fit, gcv))
}

/// Grid-default fit.
pub fn fit_seasonal_default(train: &BinarySeries) -> Result<SeasonalModel> {
    let harmonics: Vec<usize> = DEFAULT_HARMONICS.collect();
    fit_seasonal(train, &harmonics, &DEFAULT_PENALTIES)
}
