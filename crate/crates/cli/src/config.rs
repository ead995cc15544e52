//! Flat `key=value` run configuration. Defaults < config file < CLI flags;
//! the fully resolved config is echoed into every output directory and the
//! directory name carries its content hash.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use moocflow_core::behavior::FitConfig;
use moocflow_core::classifiers::TrainConfig;
use moocflow_core::evaluation::{GridSpec, ModelKind, PipelineConfig};
use moocflow_core::features::{FeatureSet, PrefixDimension, PrefixValue};
use moocflow_core::ingest::LogFormat;
use sha2::{Digest, Sha256};

macro_rules! run_config {
    ($( $field:ident : $ty:ty = $default:expr , $doc:expr ; )+) => {
        /// Every tunable of every stage, as one flat key set.
        #[derive(Clone, Debug, PartialEq)]
        pub struct RunConfig {
            $( pub $field: $ty, )+
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $( $field: $default, )+ }
            }
        }

        impl RunConfig {
            /// Apply one `key=value` override.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $( stringify!($field) => {
                        self.$field = value
                            .trim()
                            .parse::<$ty>()
                            .with_context(|| format!("bad value '{value}' for key '{key}'"))?;
                    } )+
                    _ => bail!("unknown config key '{key}'"),
                }
                Ok(())
            }

            /// The resolved config as stable `key=value` text.
            pub fn to_kv_string(&self) -> String {
                let mut out = String::new();
                $( let _ = writeln!(out, "{}={}", stringify!($field), self.$field); )+
                out
            }

            /// (key, default, doc) rows for `--help`-style listings.
            pub fn describe() -> Vec<(&'static str, String, &'static str)> {
                let d = RunConfig::default();
                vec![ $( (stringify!($field), d.$field.to_string(), $doc), )+ ]
            }
        }
    };
}

run_config! {
    seed: u64 = 0, "base seed for every stochastic stage";
    threads: usize = 0, "worker threads (0 = all cores)";
    deterministic: bool = true, "deterministic-mode marker; reductions are fixed-order either way";
    format: String = "csv".into(), "clickstream format: csv or jsonl";
    gap_seconds: i64 = 3600, "inactivity gap that closes a session";
    min_clicks: u64 = 101, "minimum total clicks per kept student";
    label_threshold: f64 = 0.0, "grade threshold; label 1 iff grade > threshold";
    course_start_ts: i64 = -1, "course start epoch seconds (-1 = earliest event)";
    n_states: usize = 10, "behavior model states (K)";
    max_iter: usize = 200, "EM iteration cap";
    tol: f64 = 1e-6, "relative log-likelihood change that stops EM";
    epsilon: f64 = 1e-8, "probability floor for fitted rows";
    n_starts: usize = 3, "independent EM starts; best final log-likelihood wins";
    learning_rate: f64 = 1e-3, "optimizer step size";
    beta1: f64 = 0.9, "Adam first-moment decay";
    beta2: f64 = 0.999, "Adam second-moment decay";
    adam_eps: f64 = 1e-8, "Adam denominator stabilizer";
    epochs: usize = 20, "training epochs";
    batch_size: usize = 32, "minibatch size";
    dropout: f64 = 0.5, "inverted dropout on the pooled LSTM vector";
    max_seq_len: usize = 2000, "training keeps each sequence's earliest tokens up to this";
    embed_dim: usize = 32, "LSTM embedding width";
    hidden_dim: usize = 64, "LSTM hidden width";
    mlp_hidden: usize = 100, "MLP hidden width";
    svm_lambda: f64 = 1e-4, "SVM L2 regularization";
    svm_epochs: usize = 100, "SVM subgradient passes (decoupled from epochs)";
    train_frac: f64 = 0.8, "train share of the within-course split";
    repeats: usize = 10, "seeded repetitions per significance sample";
    top_k: usize = 5, "entries per class in n-gram reports";
    ngram_n: usize = 3, "n-gram order for analyze-ngrams";
    feature_sets: String = "raw,category,state".into(), "grid feature families";
    models: String = "lstm,svm_c,svm_l".into(), "grid classifiers";
    course_days_values: String = "7,18,35,All".into(), "course-days prefix grid";
    student_days_values: String = "7,18,35,All".into(), "student-days prefix grid";
    n_clicks_values: String = "100,1000,1959,All".into(), "click-count prefix grid";
    n_states_values: String = "10,25,50,All".into(), "state-count prefix grid";
    synth_students: usize = 2000, "students generated by synth";
    synth_preset: String = "default".into(), "synth preset: default, well-separated, order-only";
}

impl RunConfig {
    /// Load overrides from a `key=value` file (# starts a comment).
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {} is not key=value", lineno + 1))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn log_format(&self) -> Result<LogFormat> {
        match self.format.as_str() {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" => Ok(LogFormat::Jsonl),
            other => bail!("unknown clickstream format '{other}'"),
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            n_states: self.n_states,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            epsilon: self.epsilon,
            n_starts: self.n_starts,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            adam_eps: self.adam_eps,
            epochs: self.epochs,
            batch_size: self.batch_size,
            dropout: self.dropout,
            seed: self.seed,
            max_seq_len: self.max_seq_len,
            deterministic: self.deterministic,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            mlp_hidden: self.mlp_hidden,
            svm_lambda: self.svm_lambda,
            svm_epochs: self.svm_epochs,
        }
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            gap_seconds: self.gap_seconds,
            min_clicks: self.min_clicks,
            label_threshold: self.label_threshold,
            course_start_ts: (self.course_start_ts >= 0).then_some(self.course_start_ts),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let feature_sets = parse_list(&self.feature_sets, |s| Ok(FeatureSet::parse(s)))?;
        let models = parse_list(&self.models, |s| Ok(ModelKind::parse(s)))?;
        Ok(GridSpec {
            dimensions: vec![
                (
                    PrefixDimension::CourseDays,
                    parse_values(&self.course_days_values)?,
                ),
                (
                    PrefixDimension::StudentDays,
                    parse_values(&self.student_days_values)?,
                ),
                (
                    PrefixDimension::NClicks,
                    parse_values(&self.n_clicks_values)?,
                ),
                (
                    PrefixDimension::NStates,
                    parse_values(&self.n_states_values)?,
                ),
            ],
            feature_sets,
            models,
        })
    }
}

fn parse_list<T>(text: &str, parse: impl Fn(&str) -> Result<Option<T>>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match parse(part)? {
            Some(v) => out.push(v),
            None => bail!("cannot parse list entry '{part}'"),
        }
    }
    if out.is_empty() {
        bail!("empty list '{text}'");
    }
    Ok(out)
}

pub fn parse_values(text: &str) -> Result<Vec<PrefixValue>> {
    parse_list(text, |part| {
        if part.eq_ignore_ascii_case("all") {
            Ok(Some(PrefixValue::All))
        } else {
            let v: u64 = part
                .parse()
                .with_context(|| format!("bad prefix value '{part}'"))?;
            Ok(Some(PrefixValue::Value(v)))
        }
    })
}

/// Content hash of the resolved config plus the invocation line.
pub fn run_hash(config_echo: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(config_echo.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(16);
    for b in &digest[..8] {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_kv_text() {
        let cfg = RunConfig::default();
        let text = cfg.to_kv_string();
        let mut parsed = RunConfig::default();
        for line in text.lines() {
            let (k, v) = line.split_once('=').unwrap();
            parsed.set(k, v).unwrap();
        }
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("no_such_key", "1").is_err());
        assert!(cfg.set("seed", "not_a_number").is_err());
    }

    #[test]
    fn hash_changes_with_content() {
        let a = run_hash("seed=0\n");
        let b = run_hash("seed=1\n");
        assert_ne!(a, b);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn grid_spec_parses_value_lists() {
        let cfg = RunConfig::default();
        let grid = cfg.grid_spec().unwrap();
        assert_eq!(grid.dimensions.len(), 4);
        assert_eq!(grid.feature_sets.len(), 3);
        assert_eq!(grid.dimensions[0].1.len(), 4);
        assert!(matches!(grid.dimensions[0].1[3], PrefixValue::All));
    }
}
