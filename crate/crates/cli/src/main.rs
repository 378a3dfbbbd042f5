//! `cmech`: command-line front end for the reconstruction and scoring pipeline.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use chrono::{NaiveDate, NaiveTime};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use cmech_core::evaluate::{evaluate_model, CVConfig, FittedModel, ModelKind};
use cmech_core::pipeline::{
    discretize_daycast, evaluate_stream, generate_corpus, ingest, run_corpus, scores_csv, split_train_test, CorpusSpec,
    ObservationWindow, PipelineConfig,
};
use cmech_core::serialize::{from_json, to_dot, to_json};
use cmech_core::{classify, MachineKind, SeriesRef};

/// Spec of the bundled 100-stream synthetic corpus.
const BUNDLED_CORPUS: &str = include_str!("../corpus/synthetic-100.json");

const EXIT_QUARANTINED: u8 = 2;

#[derive(Parser)]
#[command(name = "cmech", version, about = "Causal-state models of binary activity streams")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true, env = "CMECH_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic event log from a corpus spec.
    Generate {
        /// Corpus spec (JSON); the bundled 100-stream spec when omitted.
        #[arg(long, env = "CMECH_SPEC")]
        spec: Option<PathBuf>,
        #[arg(long, env = "CMECH_OUT")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Validate an event log and report rejected rows and retained streams.
    IngestCheck {
        #[arg(long, env = "CMECH_LOG")]
        log: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Fit one model to one stream's training span.
    Fit {
        #[arg(long, env = "CMECH_LOG")]
        log: PathBuf,
        #[arg(long, env = "CMECH_STREAM")]
        stream: String,
        #[arg(long, env = "CMECH_MODEL", value_parser = parse_model)]
        model: ModelKind,
        /// Machine JSON, or the weekly profile CSV for the seasonal model.
        #[arg(long, env = "CMECH_OUT")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Cross-validate and score every stream; prints the score table.
    Score {
        #[arg(long, env = "CMECH_LOG")]
        log: PathBuf,
        #[arg(long, env = "CMECH_OUT")]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Classify the architecture of a machine file.
    Classify {
        #[arg(long, env = "CMECH_MACHINE")]
        machine: PathBuf,
    },
    /// Full pipeline: ingest, fit, score, classify and write the report bundle.
    Run {
        #[arg(long, env = "CMECH_LOG")]
        log: PathBuf,
        #[arg(long, env = "CMECH_OUT")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Render a machine file as Graphviz DOT.
    ExportDot {
        #[arg(long, env = "CMECH_MACHINE")]
        machine: PathBuf,
        #[arg(long, env = "CMECH_OUT")]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Bin width in seconds.
    #[arg(long, env = "CMECH_DELTA_SECONDS", default_value_t = 600)]
    delta_seconds: u32,
    /// Local start of the daily window (HH:MM).
    #[arg(long, env = "CMECH_DAY_START", default_value = "09:00", value_parser = parse_time)]
    day_start: NaiveTime,
    /// Local end of the daily window, exclusive (HH:MM).
    #[arg(long, env = "CMECH_DAY_END", default_value = "22:00", value_parser = parse_time)]
    day_end: NaiveTime,
    #[arg(long, env = "CMECH_TRAIN_WEEKS", default_value_t = 28)]
    train_weeks: usize,
    #[arg(long, env = "CMECH_TEST_WEEKS", default_value_t = 16)]
    test_weeks: usize,
    /// Minimum active training bins for a stream to be kept.
    #[arg(long, env = "CMECH_QUIESCENCE_THRESHOLD", default_value_t = 50)]
    quiescence_threshold: usize,
    #[arg(long, env = "CMECH_FOLDS", default_value_t = 5)]
    folds: usize,
    #[arg(long, env = "CMECH_L_MIN", default_value_t = 1)]
    l_min: usize,
    #[arg(long, env = "CMECH_L_MAX", default_value_t = 6)]
    l_max: usize,
    /// Significance level of the state-splitting test.
    #[arg(long, env = "CMECH_ALPHA", default_value_t = cmech_core::reconstruct::DEFAULT_ALPHA)]
    alpha: f64,
    /// Histories seen fewer times are never tested.
    #[arg(long, env = "CMECH_MIN_COUNT", default_value_t = cmech_core::stats::DEFAULT_MIN_COUNT)]
    min_count: u64,
    /// Comma-separated models to fit; the seasonal baseline is required.
    #[arg(long, env = "CMECH_MODELS", value_delimiter = ',', value_parser = parse_model,
          default_value = "seasonal,epsilon_machine,transducer_memoryless,transducer_memoryful")]
    models: Vec<ModelKind>,
    /// First local day of a fixed observation window (YYYY-MM-DD).
    #[arg(long, env = "CMECH_WINDOW_START", requires = "window_days")]
    window_start: Option<NaiveDate>,
    /// Length of the fixed observation window in days.
    #[arg(long, env = "CMECH_WINDOW_DAYS", requires = "window_start")]
    window_days: Option<usize>,
    /// Seed for fold assignment and corpus generation.
    #[arg(long, env = "CMECH_SEED", default_value_t = 0)]
    seed: u64,
}

impl ConfigArgs {
    fn pipeline(&self) -> Result<PipelineConfig> {
        let cfg = PipelineConfig {
            delta_seconds: self.delta_seconds,
            day_start: self.day_start,
            day_end: self.day_end,
            train_weeks: self.train_weeks,
            test_weeks: self.test_weeks,
            quiescence_threshold: self.quiescence_threshold,
            cv: CVConfig { folds: self.folds, seed: self.seed, l_min: self.l_min, l_max: self.l_max },
            alpha: self.alpha,
            min_count: self.min_count,
            models: self.models.clone(),
            window: match (self.window_start, self.window_days) {
                (Some(first_day), Some(days)) => Some(ObservationWindow { first_day, days }),
                _ => None,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_time(s: &str) -> Result<NaiveTime, String> {
    NaiveTime::parse_from_str(s, "%H:%M")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M:%S"))
        .map_err(|e| format!("'{s}' is not a clock time: {e}"))
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = ModelKind::ALL.iter().map(|m| m.as_str()).collect();
        format!("unknown model '{s}' (expected one of {})", names.join(", "))
    })
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => emit(text),
    }
}

/// Writes to stdout; a closed pipe (as in `cmech classify ... | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn read_machine(path: &Path) -> Result<cmech_core::Machine> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Generate { spec, out, config } => {
            let text = match &spec {
                Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                None => BUNDLED_CORPUS.to_string(),
            };
            let spec: CorpusSpec = serde_json::from_str(&text).context("parsing corpus spec")?;
            let cfg = config.pipeline()?;
            let corpus = generate_corpus(&spec, &cfg, config.seed)?;
            fs::write(&out, corpus.csv).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} streams to {}", corpus.truth.len(), out.display());
        }
        Command::IngestCheck { log, config } => {
            let cfg = config.pipeline()?;
            let events = ingest(&log)?;
            let daycast = discretize_daycast(&events, &cfg)?;
            let summary = serde_json::json!({
                "rows": events.rows,
                "records": events.records.len(),
                "rejects": events.rejects,
                "streams": events.stream_ids().len(),
                "window": daycast.window,
                "retained": daycast.streams.keys().collect::<Vec<_>>(),
                "dropped": daycast.dropped,
            });
            emit(&format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
        }
        Command::Fit { log, stream, model, out, config } => {
            let cfg = config.pipeline()?;
            let daycast = discretize_daycast(&ingest(&log)?, &cfg)?;
            let series =
                daycast.streams.get(&stream).ok_or_else(|| anyhow!("stream '{stream}' is absent or was dropped"))?;
            let (train, test) = split_train_test(series, &cfg)?;
            let recon = cfg.recon(model.machine_kind().unwrap_or(MachineKind::EpsilonMachine));
            let (record, fitted) =
                evaluate_model(&stream, SeriesRef::Joint(&train), SeriesRef::Joint(&test), model, &cfg.cv, &recon)?;
            match fitted {
                FittedModel::Machine(m) => fs::write(&out, to_json(&m))?,
                FittedModel::Seasonal(s) => s.write_profile_csv(fs::File::create(&out)?)?,
            }
            emit(&format!("{}\n", serde_json::to_string_pretty(&record)?))?;
        }
        Command::Score { log, out, config } => {
            let cfg = config.pipeline()?;
            let daycast = discretize_daycast(&ingest(&log)?, &cfg)?;
            let outcomes: Vec<_> = daycast.streams.par_iter().map(|(id, s)| evaluate_stream(id, s, &cfg)).collect();
            let mut failed = 0;
            for e in outcomes.iter().filter_map(|o| o.as_ref().err()) {
                eprintln!("{}: {} failed: {}", e.stream_id, e.stage, e.message);
                failed += 1;
            }
            let ok: Vec<_> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
            write_or_print(out.as_deref(), &scores_csv(&ok))?;
            if failed > 0 {
                return Ok(EXIT_QUARANTINED);
            }
        }
        Command::Classify { machine } => {
            let report = classify(&read_machine(&machine)?)?;
            emit(&format!("{}\n", serde_json::to_string_pretty(&report)?))?;
        }
        Command::Run { log, out, config } => {
            let cfg = config.pipeline()?;
            let report = run_corpus(&log, &cfg, &out)?;
            eprintln!(
                "{} streams scored, {} dropped, {} quarantined; report in {}",
                report.retained.len(),
                report.dropped.len(),
                report.quarantined.len(),
                out.display()
            );
            if !report.quarantined.is_empty() {
                return Ok(EXIT_QUARANTINED);
            }
        }
        Command::ExportDot { machine, out } => {
            write_or_print(out.as_deref(), &to_dot(&read_machine(&machine)?))?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
