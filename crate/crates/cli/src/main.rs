//! `moocflow`: clickstream behavior modeling and grade prediction.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use moocflow_cli::{commands, config::RunConfig, FORMAT_VERSIONS};

#[derive(Parser, Debug)]
#[command(
    name = "moocflow",
    version,
    about = "Model learner behavior from clickstream logs and predict course outcomes.",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Root directory for run outputs.
    #[arg(long, global = true, default_value = "runs", value_name = "DIR")]
    out_root: PathBuf,

    /// Override any config key (repeatable), e.g. --set epochs=5.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Base seed for every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Behavior-model state count (K).
    #[arg(long = "k", global = true, value_name = "K")]
    n_states: Option<usize>,

    /// Training epochs.
    #[arg(long, global = true)]
    epochs: Option<usize>,

    /// Clickstream format: csv or jsonl.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Args, Debug)]
struct CourseInputs {
    /// Clickstream file (student_id,timestamp,click_type).
    #[arg(long, value_name = "FILE")]
    clicks: PathBuf,
    /// Category map CSV (raw_prefix,category,super_group).
    #[arg(long, value_name = "FILE")]
    map: PathBuf,
    /// Grades CSV (student_id,grade).
    #[arg(long, value_name = "FILE")]
    grades: PathBuf,
    /// Fitted behavior model JSON (required for state features).
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic course (clicks, grades, ground truth).
    Synth,
    /// Parse a clickstream, map categories, and segment sessions.
    Ingest {
        #[arg(long, value_name = "FILE")]
        clicks: PathBuf,
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
    },
    /// Fit a multinomial mixture model over sessions.
    FitMmm {
        #[arg(long, value_name = "FILE")]
        clicks: PathBuf,
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
    },
    /// Fit a hidden Markov model over session sequences.
    FitHmm {
        #[arg(long, value_name = "FILE")]
        clicks: PathBuf,
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
    },
    /// Decode session-state sequences with a fitted behavior model.
    Decode {
        #[arg(long, value_name = "FILE")]
        clicks: PathBuf,
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
    },
    /// Dump per-student token sequences for one feature set.
    Extract {
        #[command(flatten)]
        inputs: CourseInputs,
        /// raw, category, or state.
        #[arg(long)]
        feature_set: String,
        /// Prefix dimension (course_days, student_days, n_clicks, n_states).
        #[arg(long)]
        dimension: Option<String>,
        /// Prefix value (integer or All).
        #[arg(long)]
        value: Option<String>,
    },
    /// Rank indicative n-grams per outcome class.
    AnalyzeNgrams {
        #[command(flatten)]
        inputs: CourseInputs,
        #[arg(long)]
        feature_set: String,
    },
    /// Train one classifier on the training split.
    Train {
        #[command(flatten)]
        inputs: CourseInputs,
        #[arg(long)]
        feature_set: String,
        /// lstm, svm_c, svm_l, or mlp.
        #[arg(long)]
        classifier: String,
        #[arg(long)]
        dimension: Option<String>,
        #[arg(long)]
        value: Option<String>,
    },
    /// Evaluate a saved classifier, or compare two with a t-test.
    Evaluate {
        #[command(flatten)]
        inputs: CourseInputs,
        /// Saved classifier JSON to score against this dataset.
        #[arg(long, value_name = "FILE")]
        classifier: Option<PathBuf>,
        /// Two classifier kinds to compare over seeded repeats, e.g. lstm,svm_c.
        #[arg(long, value_name = "A,B")]
        compare: Option<String>,
        #[arg(long)]
        feature_set: Option<String>,
        #[arg(long)]
        dimension: Option<String>,
        #[arg(long)]
        value: Option<String>,
    },
    /// Run the full prefix experiment grid and emit the results table.
    Grid {
        #[command(flatten)]
        inputs: CourseInputs,
    },
    /// Train on course A, evaluate on 100% of course B (state features).
    Transfer {
        #[arg(long, value_name = "FILE")]
        clicks_a: PathBuf,
        #[arg(long, value_name = "FILE")]
        grades_a: PathBuf,
        #[arg(long, value_name = "FILE")]
        clicks_b: PathBuf,
        #[arg(long, value_name = "FILE")]
        grades_b: PathBuf,
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
    },
    /// Render accuracy-vs-prefix SVG charts from a results CSV.
    Plot {
        #[arg(long, value_name = "FILE")]
        results: PathBuf,
    },
    /// Print format-version identifiers for all emitted files.
    Version,
}

fn config_keys_help() -> String {
    let mut out = String::from("Config keys (via --set key=value or a --config file):\n");
    for (key, default, doc) in RunConfig::describe() {
        out.push_str(&format!("  {key:<22} default {default:<18} {doc}\n"));
    }
    out
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for pair in &cli.sets {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("--set wants KEY=VALUE, got '{pair}'"))?;
        cfg.set(key.trim(), value)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(threads) = cli.threads {
        cfg.set("threads", &threads.to_string())?;
    }
    if let Some(k) = cli.n_states {
        cfg.set("n_states", &k.to_string())?;
    }
    if let Some(epochs) = cli.epochs {
        cfg.set("epochs", &epochs.to_string())?;
    }
    if let Some(format) = &cli.format {
        cfg.set("format", format)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .ok();
    }
    let out = &cli.out_root;
    match &cli.command {
        Command::Synth => commands::cmd_synth(&cfg, out)?,
        Command::Ingest { clicks, map } => commands::cmd_ingest(&cfg, clicks, map, out)?,
        Command::FitMmm { clicks, map } => commands::cmd_fit(&cfg, "mmm", clicks, map, out)?,
        Command::FitHmm { clicks, map } => commands::cmd_fit(&cfg, "hmm", clicks, map, out)?,
        Command::Decode { clicks, map, model } => {
            commands::cmd_decode(&cfg, clicks, map, model, out)?
        }
        Command::Extract {
            inputs,
            feature_set,
            dimension,
            value,
        } => commands::cmd_extract(
            &cfg,
            &inputs.clicks,
            &inputs.map,
            &inputs.grades,
            inputs.model.as_deref(),
            feature_set,
            dimension.as_deref(),
            value.as_deref(),
            out,
        )?,
        Command::AnalyzeNgrams {
            inputs,
            feature_set,
        } => commands::cmd_analyze_ngrams(
            &cfg,
            &inputs.clicks,
            &inputs.map,
            &inputs.grades,
            inputs.model.as_deref(),
            feature_set,
            out,
        )?,
        Command::Train {
            inputs,
            feature_set,
            classifier,
            dimension,
            value,
        } => commands::cmd_train(
            &cfg,
            &inputs.clicks,
            &inputs.map,
            &inputs.grades,
            inputs.model.as_deref(),
            feature_set,
            classifier,
            dimension.as_deref(),
            value.as_deref(),
            out,
        )?,
        Command::Evaluate {
            inputs,
            classifier,
            compare,
            feature_set,
            dimension,
            value,
        } => commands::cmd_evaluate(
            &cfg,
            &inputs.clicks,
            &inputs.map,
            &inputs.grades,
            inputs.model.as_deref(),
            classifier.as_deref(),
            compare.as_deref(),
            feature_set.as_deref(),
            dimension.as_deref(),
            value.as_deref(),
            out,
        )?,
        Command::Grid { inputs } => commands::cmd_grid(
            &cfg,
            &inputs.clicks,
            &inputs.map,
            &inputs.grades,
            inputs.model.as_deref(),
            out,
        )?,
        Command::Transfer {
            clicks_a,
            grades_a,
            clicks_b,
            grades_b,
            map,
            model,
        } => commands::cmd_transfer(
            &cfg, clicks_a, grades_a, clicks_b, grades_b, map, model, out,
        )?,
        Command::Plot { results } => commands::cmd_plot(&cfg, results, out)?,
        Command::Version => {
            for (name, version) in FORMAT_VERSIONS {
                println!("{name}={version}");
            }
            return Ok(());
        }
    };
    Ok(())
}

fn main() -> ExitCode {
    let matches = Cli::command()
        .after_help(config_keys_help())
        .after_long_help(config_keys_help())
        .get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(err) => err.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One machine-readable error line on stderr.
            eprintln!("{}", serde_json::json!({ "error": format!("{err:#}") }));
            ExitCode::FAILURE
        }
    }
}
