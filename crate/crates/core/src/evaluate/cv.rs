//! Day-segment K-fold cross-validation, history-length selection and scores.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::filter::{etv, filter_predict, Prediction, UNSYNC_POLICY};
use crate::machine::{Machine, MachineKind};
use crate::parametric::rng_for;
use crate::reconstruct::{reconstruct, ReconstructionConfig};
use crate::seasonal::{fit_seasonal, fit_seasonal_fixed, SeasonalModel, DEFAULT_HARMONICS, DEFAULT_PENALTIES};
use crate::series::{JointSeries, SeriesRef};

/// RNG stream reserved for fold assignment.
const FOLD_STREAM: u64 = 0x5f0d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Seasonal,
    EpsilonMachine,
    TransducerMemoryless,
    TransducerMemoryful,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Seasonal,
        ModelKind::EpsilonMachine,
        ModelKind::TransducerMemoryless,
        ModelKind::TransducerMemoryful,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Seasonal => "seasonal",
            ModelKind::EpsilonMachine => "epsilon_machine",
            ModelKind::TransducerMemoryless => "transducer_memoryless",
            ModelKind::TransducerMemoryful => "transducer_memoryful",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn machine_kind(self) -> Option<MachineKind> {
        match self {
            ModelKind::Seasonal => None,
            ModelKind::EpsilonMachine => Some(MachineKind::EpsilonMachine),
            ModelKind::TransducerMemoryless => Some(MachineKind::TransducerMemoryless),
            ModelKind::TransducerMemoryful => Some(MachineKind::TransducerMemoryful),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVConfig {
    pub folds: usize,
    pub seed: u64,
    pub l_min: usize,
    pub l_max: usize,
}

impl Default for CVConfig {
    fn default() -> Self {
        Self { folds: 5, seed: 0, l_min: 1, l_max: 6 }
    }
}

impl CVConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.l_min == 0 || self.l_min > self.l_max {
            return Err(Error::InvalidArgument(format!("bad history range {}..={}", self.l_min, self.l_max)));
        }
        Ok(())
    }
}

/// A fitted predictor of either family.
#[derive(Clone, Debug, PartialEq)]
pub enum FittedModel {
    Seasonal(SeasonalModel),
    Machine(Machine),
}

impl FittedModel {
    pub fn predict(&self, series: SeriesRef<'_>) -> Result<Prediction> {
        match self {
            FittedModel::Seasonal(m) => Ok(Prediction::from_probs(m.predict_series(series.output())?)),
            FittedModel::Machine(m) => filter_predict(m, series),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub stream_id: String,
    pub model: ModelKind,
    /// Chosen history length; `None` for the seasonal model.
    pub l_max: Option<usize>,
    pub fold_etv: Vec<f64>,
    pub cv_etv: f64,
    pub test_etv: f64,
    /// Seasonal test ETV over this model's test ETV, once scored.
    pub score: Option<f64>,
    pub unsync_policy: String,
}

/// Mean held-out ETV for each candidate history length; `None` marks a
/// length with at least one failed fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub folds: Vec<usize>,
    pub per_length: Vec<(usize, Option<Vec<f64>>)>,
    pub chosen: usize,
}

impl CvOutcome {
    pub fn mean_etv(&self, l: usize) -> Option<f64> {
        self.per_length
            .iter()
            .find(|(k, _)| *k == l)
            .and_then(|(_, v)| v.as_ref())
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Seeded assignment of day segments to folds: a shuffled order dealt round-robin.
pub fn assign_folds(days: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..days).collect();
    order.shuffle(&mut rng_for(seed, FOLD_STREAM));
    let mut fold_of = vec![0; days];
    for (pos, &day) in order.iter().enumerate() {
        fold_of[day] = pos % folds;
    }
    fold_of
}

/// Segment indices (in, out) of fold `k`.
fn split_fold(fold_of: &[usize], k: usize) -> (Vec<usize>, Vec<usize>) {
    (0..fold_of.len()).partition(|&d| fold_of[d] != k)
}

enum Owned {
    Output(crate::series::BinarySeries),
    Joint(JointSeries),
}

impl Owned {
    fn select(series: SeriesRef<'_>, idx: &[usize]) -> Self {
        match series {
            SeriesRef::Output(s) => Owned::Output(s.select_segments(idx)),
            SeriesRef::Joint(j) => Owned::Joint(j.select_segments(idx)),
        }
    }

    fn as_ref(&self) -> SeriesRef<'_> {
        match self {
            Owned::Output(s) => s.into(),
            Owned::Joint(j) => j.into(),
        }
    }
}

fn check_series(series: SeriesRef<'_>, kind: ModelKind) -> Result<()> {
    if series.output().is_empty() {
        return Err(Error::EmptySeries);
    }
    if kind.machine_kind().is_some_and(MachineKind::is_transducer) && series.input().is_none() {
        return Err(Error::AlphabetMismatch(format!("{} needs an input series", kind.as_str())));
    }
    Ok(())
}

fn fit_machine(series: SeriesRef<'_>, kind: MachineKind, l: usize, recon: &ReconstructionConfig) -> Result<Machine> {
    let cfg = ReconstructionConfig { l_max: l, mode: kind, ..*recon };
    reconstruct(series, &cfg)
}

/// Runs the (history length × fold) grid for a machine model and picks the
/// length with the smallest mean held-out ETV (smaller length on ties).
pub fn cross_validate(
    series: SeriesRef<'_>,
    kind: ModelKind,
    cv: &CVConfig,
    recon: &ReconstructionConfig,
) -> Result<CvOutcome> {
    cv.validate()?;
    check_series(series, kind)?;
    let machine_kind = kind
        .machine_kind()
        .ok_or_else(|| Error::InvalidArgument("the seasonal model is tuned by GCV, not by history length".into()))?;
    let days = series.segments().len();
    if days < cv.folds {
        return Err(Error::InsufficientData(format!("{days} days cannot fill {} folds", cv.folds)));
    }
    let fold_of = assign_folds(days, cv.folds, cv.seed);
    let cells: Vec<(usize, usize)> = (cv.l_min..=cv.l_max).flat_map(|l| (0..cv.folds).map(move |k| (l, k))).collect();
    let results: Vec<Option<f64>> = cells
        .par_iter()
        .map(|&(l, k)| {
            let (train_idx, test_idx) = split_fold(&fold_of, k);
            let train = Owned::select(series, &train_idx);
            let test = Owned::select(series, &test_idx);
            let m = fit_machine(train.as_ref(), machine_kind, l, recon).ok()?;
            let pred = filter_predict(&m, test.as_ref()).ok()?;
            etv(test.as_ref().output(), &pred).ok()
        })
        .collect();
    let mut per_length = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (i, l) in (cv.l_min..=cv.l_max).enumerate() {
        let row = &results[i * cv.folds..(i + 1) * cv.folds];
        let valid: Option<Vec<f64>> = row.iter().copied().collect();
        if let Some(v) = &valid {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            if best.is_none_or(|(_, b)| mean < b) {
                best = Some((l, mean));
            }
        }
        per_length.push((l, valid));
    }
    let (chosen, _) = best.ok_or(Error::NoValidHistoryLength)?;
    Ok(CvOutcome { folds: fold_of, per_length, chosen })
}

/// Cross-validates, refits on all training days and scores the test days.
pub fn evaluate_model(
    stream_id: &str,
    train: SeriesRef<'_>,
    test: SeriesRef<'_>,
    kind: ModelKind,
    cv: &CVConfig,
    recon: &ReconstructionConfig,
) -> Result<(EvaluationRecord, FittedModel)> {
    check_series(test, kind)?;
    let (l_max, fold_etv, model) = match kind.machine_kind() {
        None => {
            let harmonics: Vec<usize> = DEFAULT_HARMONICS.collect();
            let model = fit_seasonal(train.output(), &harmonics, &DEFAULT_PENALTIES)?;
            let fold_etv = seasonal_fold_etv(train, &model, cv)?;
            (None, fold_etv, FittedModel::Seasonal(model))
        }
        Some(mk) => {
            let out = cross_validate(train, kind, cv, recon)?;
            let fold_etv = out
                .per_length
                .iter()
                .find(|(l, _)| *l == out.chosen)
                .and_then(|(_, v)| v.clone())
                .expect("chosen length has valid folds");
            let m = fit_machine(train, mk, out.chosen, recon)?;
            (Some(out.chosen), fold_etv, FittedModel::Machine(m))
        }
    };
    let test_etv = etv(test.output(), &model.predict(test)?)?;
    let cv_etv = fold_etv.iter().sum::<f64>() / fold_etv.len().max(1) as f64;
    let record = EvaluationRecord {
        stream_id: stream_id.to_string(),
        model: kind,
        l_max,
        fold_etv,
        cv_etv,
        test_etv,
        score: None,
        unsync_policy: UNSYNC_POLICY.to_string(),
    };
    Ok((record, model))
}

/// Held-out ETV of the seasonal model refitted on each fold complement with the
/// smoothing chosen on the full training span.
fn seasonal_fold_etv(train: SeriesRef<'_>, chosen: &SeasonalModel, cv: &CVConfig) -> Result<Vec<f64>> {
    cv.validate()?;
    let output = train.output();
    let days = output.segments().len();
    if days < cv.folds {
        return Err(Error::InsufficientData(format!("{days} days cannot fill {} folds", cv.folds)));
    }
    let fold_of = assign_folds(days, cv.folds, cv.seed);
    (0..cv.folds)
        .map(|k| {
            let (train_idx, test_idx) = split_fold(&fold_of, k);
            let fit = fit_seasonal_fixed(&output.select_segments(&train_idx), chosen.harmonics, chosen.smoothing)?;
            let held = output.select_segments(&test_idx);
            etv(&held, &Prediction::from_probs(fit.predict_series(&held)?))
        })
        .collect()
}

/// Sentinel reported when a model's test ETV is 0 but the seasonal one's is not.
pub const INFINITE_SCORE: f64 = f64::INFINITY;

/// `ETV(seasonal) / ETV(model)`.
pub fn score(seasonal_etv: f64, model_etv: f64) -> f64 {
    if model_etv == 0.0 {
        if seasonal_etv == 0.0 {
            1.0
        } else {
            INFINITE_SCORE
        }
    } else {
        seasonal_etv / model_etv
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub stream_id: String,
    pub records: Vec<EvaluationRecord>,
    /// `(a, b, score(a) > score(b))` for every ordered pair of non-seasonal models.
    pub pairwise: Vec<(ModelKind, ModelKind, bool)>,
}

/// Scores every record of one stream against its seasonal record.
pub fn score_models(records: &[EvaluationRecord]) -> Result<ScoreTable> {
    let seasonal = records
        .iter()
        .find(|r| r.model == ModelKind::Seasonal)
        .ok_or_else(|| Error::InvalidArgument("score table needs a seasonal record".into()))?;
    let mut scored: Vec<EvaluationRecord> = records.to_vec();
    scored.sort_by_key(|r| r.model);
    for r in &mut scored {
        r.score = Some(score(seasonal.test_etv, r.test_etv));
    }
    let mut pairwise = Vec::new();
    for a in scored.iter().filter(|r| r.model != ModelKind::Seasonal) {
        for b in scored.iter().filter(|r| r.model != ModelKind::Seasonal && r.model != a.model) {
            pairwise.push((a.model, b.model, a.score > b.score));
        }
    }
    Ok(ScoreTable { stream_id: seasonal.stream_id.clone(), records: scored, pairwise })
}
