//! Labeling, filtering, splitting, the prefix experiment grid,
//! cross-course transfer, and significance testing.

pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorModel;
use crate::classifiers::{
    count_features, linear_svm_train, lstm_train, mlp_train, predict_label, ClassifierInput,
    DatasetRef, FeatureKind, TrainConfig, TrainedClassifier,
};
use crate::error::{Error, Result};
use crate::features::{
    build_sequence, length_feature, truncate_prefix, FeatureSet, PrefixDimension, PrefixSpec,
    PrefixValue, SequenceSample,
};
use crate::ingest::{
    apply_categories, build_vocab, segment_sessions, CategoryMap, ParsedLog, Session, Vocabulary,
};

pub use stats::{students_t_test, SignificanceResult};

/// 1 iff the grade strictly exceeds the threshold.
pub fn make_label(grade: f64, threshold: f64) -> u8 {
    u8::from(grade > threshold)
}

/// Filtering summary, by exclusion reason.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub no_grade: usize,
    pub too_few_clicks: usize,
}

impl ExclusionReport {
    pub fn total(&self) -> usize {
        self.no_grade + self.too_few_clicks
    }
}

/// Minimal per-student facts needed by the filter.
#[derive(Clone, Debug)]
pub struct StudentStats {
    pub student_id: String,
    pub grade: Option<f64>,
    pub total_clicks: u64,
}

/// Keep students with a grade and at least `min_clicks` total clicks.
/// Returns kept indices (input order) and exclusion counts by reason.
pub fn filter_students(stats: &[StudentStats], min_clicks: u64) -> (Vec<usize>, ExclusionReport) {
    let mut kept = Vec::new();
    let mut report = ExclusionReport::default();
    for (i, s) in stats.iter().enumerate() {
        if s.grade.is_none() {
            report.no_grade += 1;
        } else if s.total_clicks < min_clicks {
            report.too_few_clicks += 1;
        } else {
            kept.push(i);
        }
    }
    (kept, report)
}

/// Everything known about one kept student.
#[derive(Clone, Debug)]
pub struct StudentRecord {
    pub student_id: String,
    pub grade: f64,
    pub label: u8,
    pub total_clicks: u64,
    pub sessions: Vec<Session>,
    pub raw: SequenceSample,
    pub category: SequenceSample,
    /// Present once sessions are decoded by a behavior model.
    pub state: Option<SequenceSample>,
}

/// A fully assembled course, ready for experiments.
#[derive(Clone, Debug)]
pub struct CourseData {
    pub name: String,
    pub records: Vec<StudentRecord>,
    pub raw_vocab: Vocabulary,
    pub n_categories: usize,
    /// State count of the decoding model, when states were decoded.
    pub n_states: Option<usize>,
    pub course_start_ts: i64,
    pub exclusions: ExclusionReport,
}

impl CourseData {
    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Share of the bigger class; the floor any constant predictor reaches.
    pub fn majority_floor(&self) -> f64 {
        let pos = self.records.iter().filter(|r| r.label == 1).count();
        let n = self.records.len().max(1);
        (pos as f64 / n as f64).max(1.0 - pos as f64 / n as f64)
    }

    /// A new course holding only the chosen records (used for transfer
    /// evaluation on a held-out subset).
    pub fn subset(&self, indices: &[usize], name: &str) -> CourseData {
        CourseData {
            name: name.to_string(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            raw_vocab: self.raw_vocab.clone(),
            n_categories: self.n_categories,
            n_states: self.n_states,
            course_start_ts: self.course_start_ts,
            exclusions: self.exclusions,
        }
    }

    pub fn vocab_size(&self, feature_set: FeatureSet) -> Result<usize> {
        match feature_set {
            FeatureSet::Raw => Ok(self.raw_vocab.size()),
            FeatureSet::Category => Ok(self.n_categories),
            FeatureSet::State => self.n_states.ok_or_else(|| {
                Error::invalid_input("state features not decoded; supply a behavior model")
            }),
        }
    }
}

/// Stage-composition settings for [`assemble_course`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub gap_seconds: i64,
    /// Students below this click total are excluded (default 101).
    pub min_clicks: u64,
    /// Grade threshold for the binary label (strictly-greater rule).
    pub label_threshold: f64,
    /// Course start override; defaults to the earliest event timestamp.
    pub course_start_ts: Option<i64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gap_seconds: 3600,
            min_clicks: 101,
            label_threshold: 0.0,
            course_start_ts: None,
        }
    }
}

/// Compose ingestion into experiment-ready records: categorize, segment,
/// label, filter, build raw/category (and optionally state) sequences.
pub fn assemble_course(
    name: &str,
    mut parsed: ParsedLog,
    map: &CategoryMap,
    grades: &BTreeMap<String, f64>,
    state_model: Option<&BehaviorModel>,
    cfg: &PipelineConfig,
) -> Result<CourseData> {
    if let Some(model) = state_model {
        if model.n_categories() != map.n_categories() {
            return Err(Error::invalid_input(format!(
                "behavior model has {} categories but the map has {}",
                model.n_categories(),
                map.n_categories()
            )));
        }
    }
    apply_categories(&mut parsed.students, map);
    let course_start_ts = cfg.course_start_ts.unwrap_or_else(|| {
        parsed
            .students
            .iter()
            .flat_map(|s| s.events.first())
            .map(|e| e.timestamp)
            .min()
            .unwrap_or(0)
    });

    let stats: Vec<StudentStats> = parsed
        .students
        .iter()
        .map(|s| StudentStats {
            student_id: s.student_id.clone(),
            grade: grades.get(&s.student_id).copied(),
            total_clicks: s.events.len() as u64,
        })
        .collect();
    let (kept, exclusions) = filter_students(&stats, cfg.min_clicks);

    let raw_vocab = build_vocab(
        kept.iter()
            .flat_map(|&i| parsed.students[i].events.iter())
            .map(|e| e.raw_type.as_str()),
    );

    let mut records = Vec::with_capacity(kept.len());
    for &i in &kept {
        let student = &parsed.students[i];
        let grade = stats[i].grade.expect("filter kept only graded students");
        let label = make_label(grade, cfg.label_threshold);
        let sessions = segment_sessions(student, cfg.gap_seconds, map.n_categories())?;
        let raw = build_sequence(
            student,
            &sessions,
            FeatureSet::Raw,
            &raw_vocab,
            None,
            label,
            course_start_ts,
        )?;
        let category = build_sequence(
            student,
            &sessions,
            FeatureSet::Category,
            &raw_vocab,
            None,
            label,
            course_start_ts,
        )?;
        let state = match state_model {
            Some(model) => Some(build_sequence(
                student,
                &sessions,
                FeatureSet::State,
                &raw_vocab,
                Some(model),
                label,
                course_start_ts,
            )?),
            None => None,
        };
        records.push(StudentRecord {
            student_id: student.student_id.clone(),
            grade,
            label,
            total_clicks: stats[i].total_clicks,
            sessions,
            raw,
            category,
            state,
        });
    }
    Ok(CourseData {
        name: name.to_string(),
        records,
        raw_vocab,
        n_categories: map.n_categories(),
        n_states: state_model.map(|m| m.n_states()),
        course_start_ts,
        exclusions,
    })
}

/// Train/test index split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded uniform shuffle, then the first `ceil(n * train_frac)` indices
/// train and the rest test. Disjoint and covering by construction.
pub fn split_students(n: usize, train_frac: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid_input("train_frac must be in (0, 1)"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let n_train = ((n as f64) * train_frac).ceil() as usize;
    let test = order.split_off(n_train.min(n));
    Ok(SplitIndices { train: order, test })
}

/// Fraction of exact matches.
pub fn evaluate_accuracy(preds: &[u8], labels: &[u8]) -> Result<f64> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(Error::invalid_input(format!(
            "prediction/label length mismatch: {} vs {}",
            preds.len(),
            labels.len()
        )));
    }
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Classifier families the grid can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lstm,
    SvmCounts,
    SvmLength,
    Mlp,
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<ModelKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lstm" => Some(ModelKind::Lstm),
            "svm_c" | "svm_counts" => Some(ModelKind::SvmCounts),
            "svm_l" | "svm_length" => Some(ModelKind::SvmLength),
            "mlp" => Some(ModelKind::Mlp),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Lstm => "lstm",
            ModelKind::SvmCounts => "svm_c",
            ModelKind::SvmLength => "svm_l",
            ModelKind::Mlp => "mlp",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Train,
    Val,
    Test,
    Transfer,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Train => "train",
            SplitKind::Val => "val",
            SplitKind::Test => "test",
            SplitKind::Transfer => "transfer",
        })
    }
}

/// One row of the results table.
#[derive(Clone, Debug)]
pub struct ExperimentCell {
    pub course: String,
    pub dimension: PrefixDimension,
    pub value: PrefixValue,
    pub feature_set: FeatureSet,
    pub model: ModelKind,
    pub split: SplitKind,
    pub seed: u64,
    pub accuracy: f64,
    pub n: usize,
    /// Samples dropped from this cell because their prefix was empty.
    pub excluded_empty: usize,
}

/// The experiment grid: dimension value lists, feature families, models.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub dimensions: Vec<(PrefixDimension, Vec<PrefixValue>)>,
    pub feature_sets: Vec<FeatureSet>,
    pub models: Vec<ModelKind>,
}

impl Default for GridSpec {
    fn default() -> Self {
        let days = vec![
            PrefixValue::Value(7),
            PrefixValue::Value(18),
            PrefixValue::Value(35),
            PrefixValue::All,
        ];
        let clicks = vec![
            PrefixValue::Value(100),
            PrefixValue::Value(1000),
            PrefixValue::Value(1959),
            PrefixValue::All,
        ];
        let states = vec![
            PrefixValue::Value(10),
            PrefixValue::Value(25),
            PrefixValue::Value(50),
            PrefixValue::All,
        ];
        GridSpec {
            dimensions: vec![
                (PrefixDimension::CourseDays, days.clone()),
                (PrefixDimension::StudentDays, days),
                (PrefixDimension::NClicks, clicks),
                (PrefixDimension::NStates, states),
            ],
            feature_sets: vec![FeatureSet::Raw, FeatureSet::Category, FeatureSet::State],
            models: vec![ModelKind::Lstm, ModelKind::SvmCounts, ModelKind::SvmLength],
        }
    }
}

impl GridSpec {
    /// Every valid (dimension, value, feature_set, model) combination, in
    /// emission order. Invalid pairs (e.g. click counts on state features)
    /// are skipped here, matching the blank table cells.
    pub fn valid_cells(&self) -> Vec<(PrefixDimension, PrefixValue, FeatureSet, ModelKind)> {
        let mut cells = Vec::new();
        for (dim, values) in &self.dimensions {
            for value in values {
                for fs in &self.feature_sets {
                    if !dim.valid_for(*fs) {
                        continue;
                    }
                    for model in &self.models {
                        cells.push((*dim, *value, *fs, *model));
                    }
                }
            }
        }
        cells
    }
}

fn sample_of(record: &StudentRecord, fs: FeatureSet) -> Result<&SequenceSample> {
    match fs {
        FeatureSet::Raw => Ok(&record.raw),
        FeatureSet::Category => Ok(&record.category),
        FeatureSet::State => record.state.as_ref().ok_or_else(|| {
            Error::invalid_input("state features not decoded; supply a behavior model")
        }),
    }
}

/// Truncated samples for a set of records; empty prefixes are dropped and
/// counted.
fn truncate_set(
    course: &CourseData,
    indices: &[usize],
    fs: FeatureSet,
    spec: &PrefixSpec,
) -> Result<(Vec<SequenceSample>, usize)> {
    let mut out = Vec::with_capacity(indices.len());
    let mut excluded = 0usize;
    for &i in indices {
        let sample = sample_of(&course.records[i], fs)?;
        match truncate_prefix(sample, spec)? {
            Some(s) => out.push(s),
            None => excluded += 1,
        }
    }
    Ok((out, excluded))
}

/// Train one classifier family on cell samples.
pub fn train_cell_model(
    kind: ModelKind,
    samples: &[SequenceSample],
    vocab_size: usize,
    cfg: &TrainConfig,
) -> Result<TrainedClassifier> {
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    match kind {
        ModelKind::Lstm => {
            let sequences: Vec<Vec<u32>> = samples.iter().map(|s| s.tokens.clone()).collect();
            let (params, _) = lstm_train(
                DatasetRef {
                    sequences: &sequences,
                    labels: &labels,
                },
                vocab_size,
                cfg,
                None,
            )?;
            Ok(TrainedClassifier::Lstm(params))
        }
        ModelKind::SvmCounts => {
            let features = count_features(samples, vocab_size);
            Ok(TrainedClassifier::Linear(linear_svm_train(
                &features,
                &labels,
                FeatureKind::Counts,
                cfg,
            )?))
        }
        ModelKind::SvmLength => {
            let features: Vec<Vec<f64>> = samples
                .iter()
                .map(|s| length_feature(s).iter().map(|&v| v as f64).collect())
                .collect();
            Ok(TrainedClassifier::Linear(linear_svm_train(
                &features,
                &labels,
                FeatureKind::Length,
                cfg,
            )?))
        }
        ModelKind::Mlp => {
            let features = count_features(samples, vocab_size);
            let (model, _) = mlp_train(&features, &labels, cfg)?;
            Ok(TrainedClassifier::Mlp(model))
        }
    }
}

/// Accuracy of a trained classifier on cell samples.
pub fn eval_cell_model(
    model: &TrainedClassifier,
    kind: ModelKind,
    samples: &[SequenceSample],
    vocab_size: usize,
) -> Result<f64> {
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let preds: Vec<u8> = match kind {
        ModelKind::Lstm => samples
            .iter()
            .map(|s| predict_label(model, ClassifierInput::Tokens(&s.tokens)))
            .collect::<Result<_>>()?,
        ModelKind::SvmCounts | ModelKind::Mlp => {
            let features = count_features(samples, vocab_size);
            features
                .iter()
                .map(|f| predict_label(model, ClassifierInput::Vector(f)))
                .collect::<Result<_>>()?
        }
        ModelKind::SvmLength => samples
            .iter()
            .map(|s| {
                let f: Vec<f64> = length_feature(s).iter().map(|&v| v as f64).collect();
                predict_label(model, ClassifierInput::Vector(&f))
            })
            .collect::<Result<_>>()?,
    };
    evaluate_accuracy(&preds, &labels)
}

/// Run every valid grid cell: truncate both splits, train on the training
/// split, and report train and test accuracy rows per cell.
pub fn run_experiment_grid(
    course: &CourseData,
    split: &SplitIndices,
    grid: &GridSpec,
    cfg: &TrainConfig,
) -> Result<Vec<ExperimentCell>> {
    let mut cells = Vec::new();
    for (dim, value, fs, model_kind) in grid.valid_cells() {
        let spec = PrefixSpec::new(dim, value)?;
        let vocab_size = course.vocab_size(fs)?;
        let (train_samples, train_excluded) = truncate_set(course, &split.train, fs, &spec)?;
        let (test_samples, test_excluded) = truncate_set(course, &split.test, fs, &spec)?;
        if train_samples.is_empty() || test_samples.is_empty() {
            return Err(Error::invalid_input(format!(
                "cell {dim}={value} {fs} has an empty split after truncation"
            )));
        }
        let model = train_cell_model(model_kind, &train_samples, vocab_size, cfg)?;
        let train_acc = eval_cell_model(&model, model_kind, &train_samples, vocab_size)?;
        let test_acc = eval_cell_model(&model, model_kind, &test_samples, vocab_size)?;
        cells.push(ExperimentCell {
            course: course.name.clone(),
            dimension: dim,
            value,
            feature_set: fs,
            model: model_kind,
            split: SplitKind::Train,
            seed: cfg.seed,
            accuracy: train_acc,
            n: train_samples.len(),
            excluded_empty: train_excluded,
        });
        cells.push(ExperimentCell {
            course: course.name.clone(),
            dimension: dim,
            value,
            feature_set: fs,
            model: model_kind,
            split: SplitKind::Test,
            seed: cfg.seed,
            accuracy: test_acc,
            n: test_samples.len(),
            excluded_empty: test_excluded,
        });
    }
    Ok(cells)
}

/// Cross-course transfer: train each state-feature cell on course A's
/// training split, then evaluate on 100% of course B (whose sessions were
/// decoded with A's behavior model during assembly).
pub fn transfer_evaluate(
    course_a: &CourseData,
    split_a: &SplitIndices,
    course_b: &CourseData,
    grid: &GridSpec,
    cfg: &TrainConfig,
) -> Result<Vec<ExperimentCell>> {
    if course_a.n_categories != course_b.n_categories {
        return Err(Error::invalid_input(format!(
            "category dimension mismatch: {} vs {}",
            course_a.n_categories, course_b.n_categories
        )));
    }
    if course_a.n_states.is_none() || course_a.n_states != course_b.n_states {
        return Err(Error::invalid_input(
            "both courses must be decoded with the same behavior model",
        ));
    }
    let all_b: Vec<usize> = (0..course_b.records.len()).collect();
    let mut cells = Vec::new();
    for (dim, value, fs, model_kind) in grid.valid_cells() {
        if fs != FeatureSet::State {
            continue;
        }
        let spec = PrefixSpec::new(dim, value)?;
        let vocab_size = course_a.vocab_size(fs)?;
        let (train_samples, _) = truncate_set(course_a, &split_a.train, fs, &spec)?;
        let (b_samples, b_excluded) = truncate_set(course_b, &all_b, fs, &spec)?;
        if train_samples.is_empty() || b_samples.is_empty() {
            return Err(Error::invalid_input(format!(
                "transfer cell {dim}={value} has an empty sample set"
            )));
        }
        let model = train_cell_model(model_kind, &train_samples, vocab_size, cfg)?;
        let acc = eval_cell_model(&model, model_kind, &b_samples, vocab_size)?;
        cells.push(ExperimentCell {
            course: course_b.name.clone(),
            dimension: dim,
            value,
            feature_set: fs,
            model: model_kind,
            split: SplitKind::Transfer,
            seed: cfg.seed,
            accuracy: acc,
            n: b_samples.len(),
            excluded_empty: b_excluded,
        });
    }
    Ok(cells)
}

/// Accuracies of one cell configuration over `repeats` seeded
/// train/evaluate runs (seeds `cfg.seed + r`). Input to the t-test.
pub fn repeated_accuracies(
    course: &CourseData,
    split: &SplitIndices,
    fs: FeatureSet,
    spec: &PrefixSpec,
    kind: ModelKind,
    cfg: &TrainConfig,
    repeats: usize,
) -> Result<Vec<f64>> {
    let vocab_size = course.vocab_size(fs)?;
    let (train_samples, _) = truncate_set(course, &split.train, fs, spec)?;
    let (test_samples, _) = truncate_set(course, &split.test, fs, spec)?;
    (0..repeats)
        .map(|r| {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = cfg.seed + r as u64;
            let model = train_cell_model(kind, &train_samples, vocab_size, &run_cfg)?;
            eval_cell_model(&model, kind, &test_samples, vocab_size)
        })
        .collect()
}

/// Write rows as `course,dimension,value,feature_set,model,split,seed,accuracy,n`.
pub fn write_results_csv<W: Write>(out: &mut W, cells: &[ExperimentCell]) -> Result<()> {
    writeln!(
        out,
        "course,dimension,value,feature_set,model,split,seed,accuracy,n"
    )?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.course,
            c.dimension,
            c.value,
            c.feature_set,
            c.model,
            c.split,
            c.seed,
            c.accuracy,
            c.n
        )?;
    }
    Ok(())
}

/// Read back a results CSV written by [`write_results_csv`].
pub fn read_results_csv<R: std::io::Read>(source: R) -> Result<Vec<ExperimentCell>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 9 {
            return Err(Error::invalid_input("results row needs 9 fields"));
        }
        let dimension = PrefixDimension::parse(&record[1])
            .ok_or_else(|| Error::invalid_input(format!("bad dimension '{}'", &record[1])))?;
        let value = if record[2].eq_ignore_ascii_case("all") {
            PrefixValue::All
        } else {
            PrefixValue::Value(
                record[2]
                    .parse()
                    .map_err(|_| Error::invalid_input(format!("bad value '{}'", &record[2])))?,
            )
        };
        let feature_set = FeatureSet::parse(&record[3])
            .ok_or_else(|| Error::invalid_input(format!("bad feature set '{}'", &record[3])))?;
        let model = ModelKind::parse(&record[4])
            .ok_or_else(|| Error::invalid_input(format!("bad model '{}'", &record[4])))?;
        let split = match record[5].to_ascii_lowercase().as_str() {
            "train" => SplitKind::Train,
            "val" => SplitKind::Val,
            "test" => SplitKind::Test,
            "transfer" => SplitKind::Transfer,
            other => return Err(Error::invalid_input(format!("bad split '{other}'"))),
        };
        cells.push(ExperimentCell {
            course: record[0].to_string(),
            dimension,
            value,
            feature_set,
            model,
            split,
            seed: record[6]
                .parse()
                .map_err(|_| Error::invalid_input("bad seed"))?,
            accuracy: record[7]
                .parse()
                .map_err(|_| Error::invalid_input("bad accuracy"))?,
            n: record[8]
                .parse()
                .map_err(|_| Error::invalid_input("bad n"))?,
            excluded_empty: 0,
        });
    }
    Ok(cells)
}

/// One significance comparison row.
#[derive(Clone, Debug)]
pub struct SignificanceRow {
    pub config_a: String,
    pub config_b: String,
    pub result: SignificanceResult,
}

/// Write rows as `config_a,config_b,t,df,p,significant@0.05`.
pub fn write_significance_csv<W: Write>(out: &mut W, rows: &[SignificanceRow]) -> Result<()> {
    writeln!(out, "config_a,config_b,t,df,p,significant@0.05")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.config_a,
            row.config_b,
            row.result.t_statistic,
            row.result.degrees_of_freedom,
            row.result.p_value,
            row.result.significant_at(0.05)
        )?;
    }
    Ok(())
}
