use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use procsem::eval::{MatchingMode, ScoreReport};
use procsem::pipeline::{self, BaselineKind, PromptMode, RunConfig};
use procsem::promptgen::Templates;
use procsem::synth::SynthParams;
use procsem::{Split, Task};

#[derive(Parser)]
#[command(
    name = "procsem",
    version,
    about = "Process-behaviour benchmark pipeline over JSON-Lines files"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// JSON file with run settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Task to generate (repeatable); `all` for every task.
    #[arg(long, global = true, value_parser = parse_tasks)]
    task: Vec<Vec<Task>>,
    #[arg(long, global = true)]
    shots: Option<usize>,
    #[arg(long, global = true)]
    min_log_size: Option<usize>,
    #[arg(long, global = true)]
    noise_prob: Option<f64>,
    #[arg(long, global = true)]
    max_retries: Option<usize>,
    /// Train, validation and test shares, e.g. `0.7,0.2,0.1`.
    #[arg(long, global = true, value_parser = parse_ratios)]
    ratios: Option<[f64; 3]>,
    #[arg(long, global = true, value_enum)]
    matching_mode: Option<Matching>,
    #[arg(long, global = true)]
    max_sequences: Option<usize>,
    /// Compare only off-diagonal footprint cells when scoring.
    #[arg(long, global = true)]
    no_diagonal: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Matching {
    #[value(alias = "case_sensitive")]
    CaseSensitive,
    #[value(alias = "case_insensitive")]
    CaseInsensitive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    #[value(alias = "random_class")]
    RandomClass,
    #[value(alias = "random_footprint")]
    RandomFootprint,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Icl,
    Ft,
}

#[derive(Args)]
struct SplitFilter {
    /// Split assignment file written by `split`.
    #[arg(long)]
    split_file: Option<PathBuf>,
    /// Keep only records of this split.
    #[arg(long, requires = "split_file")]
    split: Option<Split>,
}

impl SplitFilter {
    fn get(&self) -> Result<Option<(&Path, Split)>> {
        match (&self.split_file, self.split) {
            (Some(f), Some(s)) => Ok(Some((f.as_path(), s))),
            (None, None) => Ok(None),
            (Some(_), None) => bail!("--split-file needs --split"),
            (None, Some(_)) => bail!("--split needs --split-file"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic corpus of random process trees.
    Synth {
        #[arg(long, default_value_t = 100)]
        models: usize,
        /// Redraw trees that allow a sequence shorter than this.
        #[arg(long, default_value_t = 0)]
        min_trace_len: usize,
        /// Redraw trees whose language is larger than this.
        #[arg(long, default_value_t = 10_080)]
        max_language: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Admit or reject corpus models; writes admitted.jsonl and rejections.jsonl.
    Validate {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play out every admitted model and print corpus statistics.
    Playout {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate task datasets as <task>.jsonl files.
    Gen {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign models to train, validation and test.
    Split {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render few-shot prompts or fine-tuning pairs.
    Prompts {
        dataset: PathBuf,
        #[arg(long)]
        split_file: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Records to render; defaults to test for icl and train for ft.
        #[arg(long)]
        target: Option<Split>,
        /// Directory with <task>.txt files replacing the bundled templates.
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write predictions of a random baseline.
    Baseline {
        dataset: PathBuf,
        #[arg(long, value_enum)]
        kind: Baseline,
        #[command(flatten)]
        filter: SplitFilter,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a prediction file against a dataset.
    Score {
        dataset: PathBuf,
        predictions: PathBuf,
        #[command(flatten)]
        filter: SplitFilter,
        /// Also write the reports to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_tasks(s: &str) -> Result<Vec<Task>, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Task::ALL.to_vec());
    }
    s.split(',').map(str::parse).collect()
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|_| "expected three comma-separated numbers".to_string())
}

fn run_config(g: &GlobalOpts) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.shots {
        cfg.shots = Some(v);
    }
    if let Some(v) = g.min_log_size {
        cfg.min_log_size = v;
    }
    if let Some(v) = g.noise_prob {
        cfg.noise_prob = v;
    }
    if let Some(v) = g.max_retries {
        cfg.max_retries = v;
    }
    if let Some(v) = g.ratios {
        cfg.ratios = v;
    }
    if let Some(v) = g.max_sequences {
        cfg.max_sequences = v;
    }
    if let Some(m) = g.matching_mode {
        cfg.matching_mode = match m {
            Matching::CaseSensitive => MatchingMode::CaseSensitive,
            Matching::CaseInsensitive => MatchingMode::CaseInsensitive,
        };
    }
    if g.no_diagonal {
        cfg.include_diagonal = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<T: Serialize>(summary: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(summary)?) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn print_table(reports: &[ScoreReport]) {
    eprintln!(
        "{:<6} {:>8} {:<24} {:>8} {:>8} {:>8}",
        "task", "records", "metric", "value", "other", "failed"
    );
    for r in reports {
        let metric = serde_json::to_value(r.metric_name).unwrap_or_default();
        eprintln!(
            "{:<6} {:>8} {:<24} {:>8.4} {:>8} {:>8}",
            r.task.to_string(),
            r.n_records,
            metric.as_str().unwrap_or(""),
            r.value,
            r.other_mode_value.map(|v| format!("{v:.4}")).unwrap_or_default(),
            r.n_parse_failures,
        );
    }
}

/// Returns whether the command finished with partial failures.
fn run(cli: Cli) -> Result<bool> {
    let cfg = run_config(&cli.global)?;
    let tasks: Vec<Task> = if cli.global.task.is_empty() {
        Task::ALL.to_vec()
    } else {
        let mut t: Vec<Task> = cli.global.task.concat();
        t.sort();
        t.dedup();
        t
    };
    match cli.command {
        Command::Synth {
            models,
            min_trace_len,
            max_language,
            out,
        } => {
            let params = SynthParams {
                n_models: models,
                min_trace_len,
                max_sequences: max_language,
            };
            emit(&pipeline::cmd_synth(&params, cfg.seed, &out)?)?;
            Ok(false)
        }
        Command::Validate { corpus, out } => {
            let s = pipeline::cmd_validate(&corpus, &cfg, &out)?;
            emit(&s)?;
            Ok(s.partial)
        }
        Command::Playout { corpus, out } => {
            let s = pipeline::cmd_playout(&corpus, &cfg, &out)?;
            emit(&s)?;
            Ok(s.partial)
        }
        Command::Gen { corpus, out } => {
            let s = pipeline::cmd_gen(&corpus, &tasks, &cfg, &out)?;
            emit(&s)?;
            Ok(s.partial)
        }
        Command::Split { corpus, out } => {
            let s = pipeline::cmd_split(&corpus, &cfg, &out)?;
            emit(&s)?;
            Ok(s.partial)
        }
        Command::Prompts {
            dataset,
            split_file,
            mode,
            target,
            templates,
            out,
        } => {
            let templates = match templates {
                Some(dir) => Templates::with_overrides(&dir)?,
                None => Templates::default(),
            };
            let mode = match mode {
                Mode::Icl => PromptMode::Icl,
                Mode::Ft => PromptMode::Ft,
            };
            let s = pipeline::cmd_prompts(&dataset, &split_file, mode, target, &templates, &cfg, &out)?;
            emit(&s)?;
            Ok(s.partial)
        }
        Command::Baseline {
            dataset,
            kind,
            filter,
            out,
        } => {
            let kind = match kind {
                Baseline::RandomClass => BaselineKind::RandomClass,
                Baseline::RandomFootprint => BaselineKind::RandomFootprint,
            };
            emit(&pipeline::cmd_baseline(&dataset, kind, filter.get()?, cfg.seed, &out)?)?;
            Ok(false)
        }
        Command::Score {
            dataset,
            predictions,
            filter,
            out,
        } => {
            let reports = pipeline::cmd_score(&dataset, &predictions, filter.get()?, &cfg)?;
            print_table(&reports);
            if let Some(out) = out {
                procsem::io::write_json(&out, &reports)?;
            }
            emit(&reports)?;
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
