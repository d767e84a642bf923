//! `revsignal` command-line tool.
//!
//! Exit codes: 0 on success, 1 when input data fails validation (or any
//! other runtime failure), 2 for plan and usage errors.

mod table;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use revsignal::corpus::{filter_corpus, load_corpus_dir, write_corpus_dir, Corpus, CorpusError, FilterConfig, SECONDS_PER_DAY};
use revsignal::examples::{
    build_examples, build_examples_between, make_windows, undersample, ExampleOptions, Phase, SamplingConfig, Task,
};
use revsignal::features::{FeatureSelector, FeatureSet};
use revsignal::learners::{
    default_grid, grid_search, load_model, save_model, train, Algorithm, Family, LearnError, ModelSpec, Scoring,
};
use revsignal::metrics::{classification_report, regression_report};
use revsignal::runner::{
    prepare, run_rq1, run_rq2, run_rq3, write_timings, ExperimentPlan, ExperimentReport, Rq2Report, RunnerError,
    TaskChoice,
};
use revsignal::synth::{generate, write_synth, SynthConfig};

use table::{write_examples, Table};

#[derive(Parser)]
#[command(name = "revsignal", version, about = "Reviewer participation and feedback prediction from review history")]
struct Cli {
    /// Experiment plan (JSON); synth reads a generator config instead.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the one in the plan.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArg {
    /// Directory holding reviews.ndjson, org.ndjson and modules.ndjson.
    #[arg(long, env = "REVSIGNAL_CORPUS_DIR")]
    corpus: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a corpus.
    Validate {
        #[command(flatten)]
        corpus: CorpusArg,
    },
    /// Apply the cleaning rules and write the surviving corpus to --out.
    Filter {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long, default_value_t = 5000)]
        max_loc: u64,
        #[arg(long, default_value_t = 30)]
        max_duration_days: i64,
        #[arg(long)]
        keep_bots: bool,
    },
    /// Feature matrix of every (review, candidate) pair created in a range.
    Featurize {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Epoch seconds; defaults to the first review.
        #[arg(long)]
        from: Option<i64>,
        /// Epoch seconds, exclusive; defaults to after the last review.
        #[arg(long)]
        to: Option<i64>,
        /// Start of the counted history; defaults to --from.
        #[arg(long)]
        history_start: Option<i64>,
    },
    /// Labelled examples of one window phase.
    Examples {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long, value_enum, default_value_t = TaskArg::Participation)]
        task: TaskArg,
        /// Training timeframe in 30-day months.
        #[arg(long, default_value_t = 12)]
        timeframe: u32,
        /// Test period length in months.
        #[arg(long, default_value_t = 3)]
        period: u32,
        /// Index of the window, counting test periods from the start.
        #[arg(long, default_value_t = 0)]
        window: usize,
        #[arg(long, value_enum, default_value_t = PhaseArg::Train)]
        phase: PhaseArg,
        /// Undersampling rate for participation training examples.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        include_nonparticipants: bool,
    },
    /// Fit a model on an examples file and save it to --out.
    Train {
        #[arg(long)]
        examples: PathBuf,
        #[arg(long)]
        family: String,
        /// A feature set name (ALL, CO, ...) or comma-separated feature names.
        #[arg(long, default_value = "ALL")]
        features: String,
        /// Hyperparameter as name=value; repeatable.
        #[arg(long = "param")]
        params: Vec<String>,
        /// Examples file for a grid search over the default grid.
        #[arg(long, conflicts_with = "params")]
        validation: Option<PathBuf>,
    },
    /// Score an examples file with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        examples: PathBuf,
    },
    /// Metrics of a saved model on a labelled examples file.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        examples: PathBuf,
    },
    /// Recursive feature elimination and importance measures for one task.
    Select {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        family: String,
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Generate a synthetic corpus with ground truth into --out.
    Synth {
        #[arg(long, value_enum, default_value_t = Preset::Planted)]
        preset: Preset,
        /// Intercept of the constant preset.
        #[arg(long, default_value_t = -2.0)]
        intercept: f64,
    },
    /// Feature set × algorithm × rate sweep.
    Rq1 {
        #[command(flatten)]
        corpus: CorpusArg,
    },
    /// Feature selection with the best RQ1 configuration.
    Rq2 {
        #[command(flatten)]
        corpus: CorpusArg,
    },
    /// Timeframe × period grid.
    Rq3 {
        #[command(flatten)]
        corpus: CorpusArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Participation,
    Feedback,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Participation => Task::Participation,
            TaskArg::Feedback => Task::Feedback,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Planted,
    Stationary,
    Constant,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn plan(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn other(e: impl std::fmt::Display) -> Self {
        Self::validation(e.to_string())
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::validation(format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<RunnerError> for Failure {
    fn from(e: RunnerError) -> Self {
        if e.is_plan_error() {
            Self::plan(e.to_string())
        } else {
            Self::validation(e.to_string())
        }
    }
}

impl From<LearnError> for Failure {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::UnknownFamily(_) | LearnError::BadHyperparameter(_) => Self::plan(e.to_string()),
            _ => Self::validation(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate { corpus } => {
            let plan = load_plan(cli)?;
            let c = load(cli, &plan, corpus)?;
            for id in c.recomputed_loc() {
                log::warn!("changed_loc of {id} recomputed from its files");
            }
            let (first, last) = c.span().unwrap_or((0, 0));
            println!(
                "ok: {} reviews, {} developers, {} modules, {} assignments, reviews created {first}..{last}",
                c.reviews().len(),
                c.developers().len(),
                c.modules().len(),
                c.assignments().len(),
            );
            Ok(())
        }
        Command::Filter { corpus, max_loc, max_duration_days, keep_bots } => {
            let out = require_out(cli)?;
            let plan = load_plan(cli)?;
            let c = load(cli, &plan, corpus)?;
            let rules = FilterConfig {
                max_loc: *max_loc,
                max_duration_secs: max_duration_days * SECONDS_PER_DAY,
                keep_bots: *keep_bots,
                ..FilterConfig::default()
            };
            let kept = filter_corpus(&c, &rules);
            write_corpus_dir(&kept, out)?;
            eprintln!("kept {} of {} reviews", kept.reviews().len(), c.reviews().len());
            Ok(())
        }
        Command::Featurize { corpus, from, to, history_start } => {
            let mut plan = load_plan(cli)?;
            plan.apply_filter = false;
            let c = load(cli, &plan, corpus)?;
            let p = prepare(&c, &plan)?;
            let from = from.unwrap_or(p.span.0);
            let to = to.unwrap_or(p.span.1);
            let opts = ExampleOptions { include_nonparticipants: true, ..ExampleOptions::new(Task::Participation) };
            let ex = build_examples_between(&p.corpus, &p.index, from, to, history_start.unwrap_or(from), opts);
            write_examples(cli.out.as_deref(), &ex, false)
        }
        Command::Examples { corpus, task, timeframe, period, window, phase, rate, include_nonparticipants } => {
            let mut plan = load_plan(cli)?;
            plan.apply_filter = false;
            let c = load(cli, &plan, corpus)?;
            let p = prepare(&c, &plan)?;
            let w = make_windows(p.span, *timeframe, window + 1, *period).map_err(|e| Failure::plan(e.to_string()))?[*window];
            let task = Task::from(*task);
            let opts = ExampleOptions { task, include_nonparticipants: *include_nonparticipants };
            let phase = match phase {
                PhaseArg::Train => Phase::Train,
                PhaseArg::Test => Phase::Test,
            };
            let mut ex = build_examples(&p.corpus, &p.index, &w, phase, opts);
            if let Some(rate) = rate {
                if task == Task::Participation && phase == Phase::Train {
                    let seed = cli.seed.unwrap_or(plan.seed);
                    ex = undersample(&ex, &SamplingConfig { rate: *rate, seed }).map_err(|e| Failure::plan(e.to_string()))?;
                }
            }
            write_examples(cli.out.as_deref(), &ex, true)
        }
        Command::Train { examples, family, features, params, validation } => {
            let out = require_out(cli)?;
            let family: Family = family.parse()?;
            let columns = feature_columns(features)?;
            let t = Table::read(examples)?;
            let x = t.matrix(&columns)?;
            let y = t.column(target(family))?;
            let seed = cli.seed.unwrap_or(0);
            let spec = match validation {
                Some(v) => {
                    let vt = Table::read(v)?;
                    let (vx, vy) = (vt.matrix(&columns)?, vt.column(target(family))?);
                    let g = grid_search(&default_grid(family), seed, (&x, &y), (&vx, &vy), Scoring::for_family(family))?;
                    eprintln!("best {} with validation score {:.4}", g.best.algorithm.describe(), g.best_score);
                    g.best
                }
                None => ModelSpec::new(Algorithm::from_params(family, &parse_params(params)?)?, seed),
            };
            let model = train(&spec, &x, &y)?;
            for w in &model.warnings {
                log::warn!("{w:?}");
            }
            save_model(&model, out)?;
            Ok(())
        }
        Command::Predict { model, examples } => {
            let m = load_model(model)?;
            let t = Table::read(examples)?;
            let x = t.matrix(&m.columns)?;
            let scores = m.predict_scores(&x)?;
            let mut w = csv::Writer::from_writer(table::sink(cli.out.as_deref())?);
            w.write_record(["review_id", "candidate_id", "score"]).map_err(Failure::other)?;
            for ((r, c), s) in t.ids.iter().zip(&scores) {
                w.write_record([r.as_str(), c.as_str(), &s.to_string()]).map_err(Failure::other)?;
            }
            w.flush().map_err(Failure::other)
        }
        Command::Evaluate { model, examples } => {
            let m = load_model(model)?;
            let t = Table::read(examples)?;
            let x = t.matrix(&m.columns)?;
            let report = if m.is_classifier() {
                let labels: Vec<bool> = t.column("participated")?.iter().map(|&v| v > 0.5).collect();
                let scores = m.predict_scores(&x)?;
                let preds: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
                serde_json::to_value(classification_report(&labels, &preds, &scores).map_err(Failure::other)?)
            } else {
                let y = t.column("log_feedback")?;
                serde_json::to_value(regression_report(&y, &m.predict_values(&x)?).map_err(Failure::other)?)
            }
            .map_err(Failure::other)?;
            let text = serde_json::to_string_pretty(&report).map_err(Failure::other)? + "\n";
            use std::io::Write;
            table::sink(cli.out.as_deref())?.write_all(text.as_bytes()).map_err(Failure::other)
        }
        Command::Select { corpus, task, family, rate } => {
            let mut plan = load_plan(cli)?;
            let task = Task::from(*task);
            let choice = Some(TaskChoice { family: family.parse()?, rate: *rate, features: None });
            plan.tasks = vec![task];
            match task {
                Task::Participation => plan.participation = choice,
                Task::Feedback => plan.feedback = choice,
            }
            let c = load(cli, &plan, corpus)?;
            let p = prepare(&c, &plan)?;
            let report = run_rq2(&p, &plan, None, cli.jobs)?;
            if let Some(dir) = &cli.out {
                report.write(dir, "select")?;
            }
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Synth { preset, intercept } => {
            let out = require_out(cli)?;
            let mut cfg = match &cli.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
                    serde_json::from_str(&text).map_err(|e| Failure::plan(format!("{}: {e}", path.display())))?
                }
                None => match preset {
                    Preset::Planted => SynthConfig::planted(),
                    Preset::Stationary => SynthConfig::stationary(),
                    Preset::Constant => SynthConfig::constant(*intercept),
                },
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let (corpus, truth) = generate(&cfg).map_err(Failure::plan)?;
            write_synth(out, &cfg, &corpus, &truth)?;
            eprintln!(
                "wrote {} reviews and {} pairs to {}, Bayes AUPRC {:.4}",
                corpus.reviews().len(),
                truth.pairs.len(),
                out.display(),
                truth.bayes_auprc
            );
            Ok(())
        }
        Command::Rq1 { corpus } => {
            let (plan, p, out) = experiment(cli, corpus)?;
            let (report, timings) = run_rq1(&p, &plan, cli.jobs)?;
            report.write(&out, "rq1")?;
            write_timings(&out, "rq1", &timings)?;
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Rq2 { corpus } => {
            let (plan, p, out) = experiment(cli, corpus)?;
            let rq1 = previous(&out.join("rq1.json"), |p| ExperimentReport::load_json(p))?;
            let report = run_rq2(&p, &plan, rq1.as_ref(), cli.jobs)?;
            report.write(&out, "rq2")?;
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Rq3 { corpus } => {
            let (plan, p, out) = experiment(cli, corpus)?;
            let rq1 = previous(&out.join("rq1.json"), |p| ExperimentReport::load_json(p))?;
            let rq2 = previous(&out.join("rq2.json"), |p| Rq2Report::load_json(p))?;
            let (report, timings) = run_rq3(&p, &plan, rq1.as_ref(), rq2.as_ref(), cli.jobs)?;
            report.write(&out, "rq3")?;
            write_timings(&out, "rq3", &timings)?;
            print!("{}", report.to_text());
            Ok(())
        }
    }
}

fn load_plan(cli: &Cli) -> Result<ExperimentPlan, Failure> {
    let mut plan = match &cli.config {
        Some(path) => ExperimentPlan::load(path)?,
        None => ExperimentPlan::default(),
    };
    if let Some(s) = cli.seed {
        plan.seed = s;
    }
    Ok(plan)
}

/// Corpus from --corpus, the environment, or the plan, in that order.
fn load(cli: &Cli, plan: &ExperimentPlan, arg: &CorpusArg) -> Result<Corpus, Failure> {
    let dir = arg
        .corpus
        .clone()
        .or_else(|| plan.corpus_dir.clone())
        .ok_or_else(|| Failure::plan("no corpus: pass --corpus or set REVSIGNAL_CORPUS_DIR"))?;
    log::info!("loading corpus from {} (jobs {})", dir.display(), cli.jobs);
    Ok(load_corpus_dir(dir)?)
}

fn experiment(cli: &Cli, arg: &CorpusArg) -> Result<(ExperimentPlan, revsignal::runner::Prepared, PathBuf), Failure> {
    let plan = load_plan(cli)?;
    let out = cli
        .out
        .clone()
        .or_else(|| plan.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let c = load(cli, &plan, arg)?;
    let p = prepare(&c, &plan)?;
    Ok((plan, p, out))
}

/// A report left by an earlier stage, if there is one.
fn previous<T>(path: &Path, read: impl FnOnce(&Path) -> Result<T, RunnerError>) -> Result<Option<T>, Failure> {
    if path.exists() {
        Ok(Some(read(path)?))
    } else {
        Ok(None)
    }
}

fn require_out(cli: &Cli) -> Result<&Path, Failure> {
    cli.out.as_deref().ok_or_else(|| Failure::plan("--out is required"))
}

fn target(family: Family) -> &'static str {
    if family.is_classifier() {
        "participated"
    } else {
        "log_feedback"
    }
}

fn feature_columns(spec: &str) -> Result<Vec<String>, Failure> {
    let selector: FeatureSelector = match spec.parse::<FeatureSet>() {
        Ok(set) => set.into(),
        Err(_) => {
            let names: Vec<&str> = spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            FeatureSelector::from_names("custom", &names).map_err(|e| Failure::plan(e.to_string()))?
        }
    };
    if selector.is_empty() {
        return Err(Failure::plan("no features selected"));
    }
    Ok(selector.names().into_iter().map(str::to_string).collect())
}

fn parse_params(params: &[String]) -> Result<BTreeMap<String, f64>, Failure> {
    params
        .iter()
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| Failure::plan(format!("expected name=value, got {p:?}")))?;
            let v = match v.trim() {
                "none" => f64::INFINITY,
                v => v.parse().map_err(|_| Failure::plan(format!("bad value in {p:?}")))?,
            };
            Ok((k.trim().to_string(), v))
        })
        .collect()
}
