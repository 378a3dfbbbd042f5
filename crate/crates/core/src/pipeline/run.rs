use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, summarize_architectures, ArchitectureReport};
use crate::error::Result;
use crate::evaluate::{evaluate_model, score_models, FittedModel, ModelKind, ScoreTable, UNSYNC_POLICY};
use crate::machine::Machine;
use crate::pipeline::daycast::{discretize_daycast, split_train_test, Daycast, DroppedStream};
use crate::pipeline::ingest::{ingest, EventLog, Reject};
use crate::pipeline::PipelineConfig;
use crate::seasonal::SeasonalModel;
use crate::serialize::to_json;
use crate::series::{JointSeries, SeriesRef};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamError {
    pub stream_id: String,
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamOutcome {
    pub stream_id: String,
    pub table: ScoreTable,
    pub seasonal: Option<SeasonalModel>,
    pub machines: Vec<(ModelKind, Machine, ArchitectureReport)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub retained: Vec<String>,
    pub dropped: Vec<DroppedStream>,
    pub quarantined: Vec<StreamError>,
    pub rejects: usize,
}

/// Splits, fits every configured model, scores against the seasonal baseline
/// and classifies the fitted machines.
pub fn evaluate_stream(
    stream_id: &str,
    series: &JointSeries,
    cfg: &PipelineConfig,
) -> std::result::Result<StreamOutcome, StreamError> {
    let fail = |stage: &str, e: crate::error::Error| StreamError {
        stream_id: stream_id.to_string(),
        stage: stage.to_string(),
        message: e.to_string(),
    };
    let (train, test) = split_train_test(series, cfg).map_err(|e| fail("split", e))?;
    let mut records = Vec::new();
    let mut seasonal = None;
    let mut machines = Vec::new();
    for &kind in &cfg.models {
        let recon = cfg.recon(kind.machine_kind().unwrap_or(crate::MachineKind::EpsilonMachine));
        let (record, fitted) =
            evaluate_model(stream_id, SeriesRef::Joint(&train), SeriesRef::Joint(&test), kind, &cfg.cv, &recon)
                .map_err(|e| fail(&format!("evaluate:{}", kind.as_str()), e))?;
        records.push(record);
        match fitted {
            FittedModel::Seasonal(m) => seasonal = Some(m),
            FittedModel::Machine(m) => {
                let report = classify(&m).map_err(|e| fail(&format!("classify:{}", kind.as_str()), e))?;
                machines.push((kind, m, report));
            }
        }
    }
    let table = score_models(&records).map_err(|e| fail("score", e))?;
    Ok(StreamOutcome { stream_id: stream_id.to_string(), table, seasonal, machines })
}

/// Ingests, daycasts and evaluates every stream, then writes the report bundle.
pub fn run_corpus(log_path: &Path, cfg: &PipelineConfig, out_dir: &Path) -> Result<RunReport> {
    cfg.validate()?;
    let log = ingest(log_path)?;
    let daycast = discretize_daycast(&log, cfg)?;
    let outcomes: Vec<_> = daycast.streams.par_iter().map(|(id, series)| evaluate_stream(id, series, cfg)).collect();
    let log_name = log_path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    write_bundle(out_dir, cfg, &log_name, &log, &daycast, &outcomes)
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

/// Score table: one row per stream and model.
pub fn scores_csv(outcomes: &[&StreamOutcome]) -> String {
    let mut scores = String::from("stream_id,model,l_max,etv_cv,etv_test,score\n");
    for o in outcomes {
        for r in &o.table.records {
            let _ = writeln!(
                scores,
                "{},{},{},{},{},{}",
                o.stream_id,
                r.model.as_str(),
                r.l_max.map_or_else(String::new, |l| l.to_string()),
                num(r.cv_etv),
                num(r.test_etv),
                r.score.map_or_else(String::new, num)
            );
        }
    }
    scores
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    log: &'a str,
    config: &'a PipelineConfig,
    seed: u64,
    window: &'a Option<crate::pipeline::ObservationWindow>,
    unsync_policy: &'static str,
    rows: usize,
    rejects: &'a [Reject],
    retained: Vec<&'a str>,
    dropped: &'a [DroppedStream],
    quarantined: Vec<&'a StreamError>,
    files: Vec<&'static str>,
    notes: Vec<&'static str>,
}

const BUNDLE_FILES: [&str; 6] =
    ["scores.csv", "pairwise.csv", "architecture.csv", "architecture_summary.csv", "errors.csv", "manifest.json"];

/// Writes every report file. Output depends only on the inputs, never on
/// timing or thread scheduling.
pub fn write_bundle(
    out_dir: &Path,
    cfg: &PipelineConfig,
    log_name: &str,
    log: &EventLog,
    daycast: &Daycast,
    outcomes: &[std::result::Result<StreamOutcome, StreamError>],
) -> Result<RunReport> {
    fs::create_dir_all(out_dir.join("machines"))?;
    fs::create_dir_all(out_dir.join("profiles"))?;
    let ok: Vec<&StreamOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failed: Vec<&StreamError> = outcomes.iter().filter_map(|o| o.as_ref().err()).collect();

    fs::write(out_dir.join("scores.csv"), scores_csv(&ok))?;

    let machine_models: Vec<ModelKind> = cfg.models.iter().copied().filter(|m| *m != ModelKind::Seasonal).collect();
    let mut pairwise = String::from("model");
    for m in &machine_models {
        let _ = write!(pairwise, ",{}", m.as_str());
    }
    pairwise.push_str(",beats_seasonal\n");
    let n = ok.len().max(1) as f64;
    for &a in &machine_models {
        pairwise.push_str(a.as_str());
        for &b in &machine_models {
            if a == b {
                pairwise.push(',');
                continue;
            }
            let wins = ok.iter().filter(|o| o.table.pairwise.contains(&(a, b, true))).count();
            let _ = write!(pairwise, ",{}", num(wins as f64 / n));
        }
        let beats = ok
            .iter()
            .filter(|o| o.table.records.iter().any(|r| r.model == a && r.score.is_some_and(|s| s > 1.0)))
            .count();
        let _ = writeln!(pairwise, ",{}", num(beats as f64 / n));
    }
    fs::write(out_dir.join("pairwise.csv"), pairwise)?;

    let mut arch = String::from("stream_id,model,family,order,state_count,topological_complexity\n");
    for o in &ok {
        for (kind, _, r) in &o.machines {
            let _ = writeln!(
                arch,
                "{},{},{},{},{},{}",
                o.stream_id,
                kind.as_str(),
                r.family.as_str(),
                r.order.map_or_else(String::new, |k| k.to_string()),
                r.state_count,
                num(r.topological_complexity)
            );
        }
    }
    fs::write(out_dir.join("architecture.csv"), arch)?;

    let rows = summarize_architectures(ok.iter().flat_map(|o| o.machines.iter().map(|(_, m, r)| (m.kind(), r))));
    let mut summary = String::from("model,order,count,proportion\n");
    for r in rows {
        let _ = writeln!(summary, "{},{},{},{}", r.model.as_str(), r.order, r.count, num(r.proportion));
    }
    fs::write(out_dir.join("architecture_summary.csv"), summary)?;

    let mut errors = csv::Writer::from_writer(Vec::new());
    errors.write_record(["stream_id", "stage", "message"])?;
    for e in &failed {
        errors.write_record([&e.stream_id, &e.stage, &e.message])?;
    }
    fs::write(out_dir.join("errors.csv"), errors.into_inner().map_err(|e| e.into_error())?)?;

    for o in &ok {
        let stem = file_stem(&o.stream_id);
        for (kind, m, _) in &o.machines {
            fs::write(out_dir.join("machines").join(format!("{stem}.{}.json", kind.as_str())), to_json(m))?;
        }
        if let Some(s) = &o.seasonal {
            let mut buf = Vec::new();
            s.write_profile_csv(&mut buf)?;
            fs::write(out_dir.join("profiles").join(format!("{stem}.csv")), buf)?;
        }
    }

    let report = RunReport {
        retained: ok.iter().map(|o| o.stream_id.clone()).collect(),
        dropped: daycast.dropped.clone(),
        quarantined: failed.iter().map(|&e| e.clone()).collect(),
        rejects: log.rejects.len(),
    };
    let manifest = Manifest {
        tool: "cmech",
        version: env!("CARGO_PKG_VERSION"),
        log: log_name,
        config: cfg,
        seed: cfg.cv.seed,
        window: &daycast.window,
        unsync_policy: UNSYNC_POLICY,
        rows: log.rows,
        rejects: &log.rejects,
        retained: ok.iter().map(|o| o.stream_id.as_str()).collect(),
        dropped: &daycast.dropped,
        quarantined: failed,
        files: BUNDLE_FILES.to_vec(),
        notes: vec![
            "days inside the observation window without events are kept as quiet days",
            "streams use fixed UTC offsets without daylight-saving changes",
        ],
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out_dir.join("manifest.json"), text)?;
    Ok(report)
}
