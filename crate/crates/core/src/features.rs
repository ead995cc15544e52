//! Per-student feature sequences and prefix truncation.
//!
//! Three token families: raw click types, click categories (one token per
//! click), and session states (one token per session, decoded by a fitted
//! behavior model and timestamped by session start). Prefixes cut along
//! four dimensions: days since course start, days since the student's first
//! click, click count, and state count.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorModel;
use crate::error::{Error, Result};
use crate::ingest::{Session, StudentEvents, Vocabulary};

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Raw,
    Category,
    State,
}

impl FeatureSet {
    pub fn parse(s: &str) -> Option<FeatureSet> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Some(FeatureSet::Raw),
            "category" => Some(FeatureSet::Category),
            "state" => Some(FeatureSet::State),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSet::Raw => "raw",
            FeatureSet::Category => "category",
            FeatureSet::State => "state",
        })
    }
}

/// One student's token sequence under a chosen feature set.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSample {
    pub student_id: String,
    pub feature_set: FeatureSet,
    pub tokens: Vec<u32>,
    /// Per-token epoch seconds; session start times for state features.
    pub token_ts: Vec<i64>,
    pub label: u8,
    pub course_start_ts: i64,
    pub first_click_ts: i64,
}

impl SequenceSample {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Build one student's sequence sample.
///
/// Raw and category features take one token per click; state features take
/// one token per session, decoded with `state_model` (Viterbi for an HMM,
/// per-session MLE assignment for an MMM).
pub fn build_sequence(
    student: &StudentEvents,
    sessions: &[Session],
    feature_set: FeatureSet,
    vocab: &Vocabulary,
    state_model: Option<&BehaviorModel>,
    label: u8,
    course_start_ts: i64,
) -> Result<SequenceSample> {
    let (tokens, token_ts): (Vec<u32>, Vec<i64>) = match feature_set {
        FeatureSet::Raw => {
            if student.events.is_empty() {
                return Err(Error::invalid_input(format!(
                    "student {} has no events",
                    student.student_id
                )));
            }
            let mut tokens = Vec::with_capacity(student.events.len());
            let mut ts = Vec::with_capacity(student.events.len());
            for e in &student.events {
                let id = vocab.id(&e.raw_type).ok_or_else(|| {
                    Error::invalid_input(format!("raw type '{}' not in vocabulary", e.raw_type))
                })?;
                tokens.push(id);
                ts.push(e.timestamp);
            }
            (tokens, ts)
        }
        FeatureSet::Category => {
            if student.events.is_empty() {
                return Err(Error::invalid_input(format!(
                    "student {} has no events",
                    student.student_id
                )));
            }
            let mut tokens = Vec::with_capacity(student.events.len());
            let mut ts = Vec::with_capacity(student.events.len());
            for e in &student.events {
                let id = e.category_id.ok_or_else(|| {
                    Error::invalid_input("events must be categorized before feature extraction")
                })?;
                tokens.push(id);
                ts.push(e.timestamp);
            }
            (tokens, ts)
        }
        FeatureSet::State => {
            if sessions.is_empty() {
                return Err(Error::invalid_input(format!(
                    "student {} has no sessions",
                    student.student_id
                )));
            }
            let model = state_model.ok_or_else(|| {
                Error::invalid_input("state features need a fitted behavior model")
            })?;
            let counts: Vec<Vec<u64>> = sessions.iter().map(|s| s.counts.clone()).collect();
            let states = model.decode(&counts)?;
            let tokens = states.iter().map(|&s| s as u32).collect();
            let ts = sessions.iter().map(|s| s.start_ts).collect();
            (tokens, ts)
        }
    };
    let first_click_ts = token_ts[0];
    Ok(SequenceSample {
        student_id: student.student_id.clone(),
        feature_set,
        tokens,
        token_ts,
        label,
        course_start_ts,
        first_click_ts,
    })
}

/// Truncation axis for prefix experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixDimension {
    CourseDays,
    StudentDays,
    NClicks,
    NStates,
}

impl PrefixDimension {
    pub const ALL: [PrefixDimension; 4] = [
        PrefixDimension::CourseDays,
        PrefixDimension::StudentDays,
        PrefixDimension::NClicks,
        PrefixDimension::NStates,
    ];

    pub fn parse(s: &str) -> Option<PrefixDimension> {
        match s.trim().to_ascii_lowercase().as_str() {
            "course_days" => Some(PrefixDimension::CourseDays),
            "student_days" => Some(PrefixDimension::StudentDays),
            "n_clicks" => Some(PrefixDimension::NClicks),
            "n_states" => Some(PrefixDimension::NStates),
            _ => None,
        }
    }

    /// Whether this dimension applies to the given feature family.
    pub fn valid_for(self, feature_set: FeatureSet) -> bool {
        match self {
            PrefixDimension::CourseDays | PrefixDimension::StudentDays => true,
            PrefixDimension::NClicks => {
                matches!(feature_set, FeatureSet::Raw | FeatureSet::Category)
            }
            PrefixDimension::NStates => matches!(feature_set, FeatureSet::State),
        }
    }
}

impl fmt::Display for PrefixDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrefixDimension::CourseDays => "course_days",
            PrefixDimension::StudentDays => "student_days",
            PrefixDimension::NClicks => "n_clicks",
            PrefixDimension::NStates => "n_states",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrefixValue {
    Value(u64),
    All,
}

impl fmt::Display for PrefixValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrefixValue::Value(v) => write!(f, "{v}"),
            PrefixValue::All => f.write_str("All"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrefixSpec {
    pub dimension: PrefixDimension,
    pub value: PrefixValue,
}

impl PrefixSpec {
    pub fn new(dimension: PrefixDimension, value: PrefixValue) -> Result<Self> {
        if let PrefixValue::Value(v) = value {
            if v < 1 {
                return Err(Error::invalid_input("prefix value must be >= 1"));
            }
        }
        Ok(PrefixSpec { dimension, value })
    }
}

/// Keep the part of a sample visible under `spec`. Returns `None` when the
/// prefix is empty; the caller excludes such samples from the experiment
/// cell and reports the count.
pub fn truncate_prefix(
    sample: &SequenceSample,
    spec: &PrefixSpec,
) -> Result<Option<SequenceSample>> {
    if !spec.dimension.valid_for(sample.feature_set) {
        return Err(Error::invalid_input(format!(
            "dimension {} does not apply to {} features",
            spec.dimension, sample.feature_set
        )));
    }
    let keep = match (spec.dimension, spec.value) {
        (_, PrefixValue::All) => sample.tokens.len(),
        (PrefixDimension::CourseDays, PrefixValue::Value(d)) => {
            let cutoff = sample.course_start_ts + SECONDS_PER_DAY * d as i64;
            sample.token_ts.partition_point(|&ts| ts <= cutoff)
        }
        (PrefixDimension::StudentDays, PrefixValue::Value(d)) => {
            let cutoff = sample.first_click_ts + SECONDS_PER_DAY * d as i64;
            sample.token_ts.partition_point(|&ts| ts <= cutoff)
        }
        (PrefixDimension::NClicks, PrefixValue::Value(n))
        | (PrefixDimension::NStates, PrefixValue::Value(n)) => {
            (n as usize).min(sample.tokens.len())
        }
    };
    if keep == 0 {
        return Ok(None);
    }
    let mut out = sample.clone();
    out.tokens.truncate(keep);
    out.token_ts.truncate(keep);
    Ok(Some(out))
}

/// Token multiplicities over a vocabulary of size `vocab_size`.
pub fn count_vector(sample: &SequenceSample, vocab_size: usize) -> Vec<u64> {
    let mut counts = vec![0u64; vocab_size];
    for &t in &sample.tokens {
        assert!(
            (t as usize) < vocab_size,
            "token {t} outside vocabulary of size {vocab_size}"
        );
        counts[t as usize] += 1;
    }
    counts
}

/// The clickstream-length feature: a single-entry vector.
pub fn length_feature(sample: &SequenceSample) -> Vec<u64> {
    vec![sample.tokens.len() as u64]
}

/// One ranked n-gram with per-class rates.
#[derive(Clone, Debug, PartialEq)]
pub struct NgramEntry {
    pub ngram: Vec<u32>,
    /// Total occurrences across the ranked class's students.
    pub frequency: u64,
    /// frequency / number of students in the ranked class.
    pub rate_per_student: f64,
    /// Same rate measured in the other class.
    pub other_class_rate: f64,
}

impl NgramEntry {
    pub fn rate_diff(&self) -> f64 {
        self.rate_per_student - self.other_class_rate
    }
}

/// Per-class top n-grams ranked by within-class frequency.
#[derive(Clone, Debug)]
pub struct NgramReport {
    pub n: usize,
    /// Index 0 holds low graders (label 0), index 1 high graders.
    pub per_class: [Vec<NgramEntry>; 2],
    pub students_per_class: [usize; 2],
}

fn ngram_counts(samples: &[&SequenceSample], n: usize) -> HashMap<Vec<u32>, u64> {
    let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
    for s in samples {
        if s.tokens.len() < n {
            continue;
        }
        for window in s.tokens.windows(n) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

/// Rank n-grams by total within-class frequency; ties break on token order.
/// A class with no samples gets an empty list.
pub fn ngram_indicative(samples: &[SequenceSample], n: usize, top_k: usize) -> Result<NgramReport> {
    if n < 1 {
        return Err(Error::invalid_input("n must be >= 1"));
    }
    if let Some(first) = samples.first() {
        if samples.iter().any(|s| s.feature_set != first.feature_set) {
            return Err(Error::invalid_input("samples must share one feature set"));
        }
    }
    let by_class: [Vec<&SequenceSample>; 2] = [
        samples.iter().filter(|s| s.label == 0).collect(),
        samples.iter().filter(|s| s.label == 1).collect(),
    ];
    let counts = [ngram_counts(&by_class[0], n), ngram_counts(&by_class[1], n)];
    let students = [by_class[0].len(), by_class[1].len()];

    let mut per_class: [Vec<NgramEntry>; 2] = [Vec::new(), Vec::new()];
    for class in 0..2 {
        if students[class] == 0 {
            continue;
        }
        let other = 1 - class;
        let mut ranked: Vec<(&Vec<u32>, u64)> =
            counts[class].iter().map(|(k, &v)| (k, v)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        per_class[class] = ranked
            .into_iter()
            .take(top_k)
            .map(|(ngram, freq)| {
                let other_freq = counts[other].get(ngram).copied().unwrap_or(0);
                NgramEntry {
                    ngram: ngram.clone(),
                    frequency: freq,
                    rate_per_student: freq as f64 / students[class] as f64,
                    other_class_rate: if students[other] > 0 {
                        other_freq as f64 / students[other] as f64
                    } else {
                        0.0
                    },
                }
            })
            .collect();
    }
    Ok(NgramReport {
        n,
        per_class,
        students_per_class: students,
    })
}

/// Per-state category-unigram rankings: for every state, the top categories
/// among each class's clicks that fall in sessions decoded to that state.
pub fn per_state_unigrams(
    students: &[(&[Session], &[usize], u8)],
    n_states: usize,
    n_categories: usize,
    top_k: usize,
) -> Vec<[Vec<(u32, u64)>; 2]> {
    let mut counts = vec![[vec![0u64; n_categories], vec![0u64; n_categories]]; n_states];
    for (sessions, states, label) in students {
        for (session, &state) in sessions.iter().zip(states.iter()) {
            let bucket = &mut counts[state][*label as usize];
            for (c, &n) in session.counts.iter().enumerate() {
                bucket[c] += n;
            }
        }
    }
    counts
        .into_iter()
        .map(|per_class| {
            let rank = |v: Vec<u64>| -> Vec<(u32, u64)> {
                let mut pairs: Vec<(u32, u64)> = v
                    .into_iter()
                    .enumerate()
                    .filter(|(_, n)| *n > 0)
                    .map(|(c, n)| (c as u32, n))
                    .collect();
                pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                pairs.truncate(top_k);
                pairs
            };
            let [c0, c1] = per_class;
            [rank(c0), rank(c1)]
        })
        .collect()
}

/// Write one experiment cell's samples as `student_id,label,length,tokens`
/// (tokens as space-separated integer ids).
pub fn write_feature_dump<W: Write>(out: &mut W, samples: &[SequenceSample]) -> Result<()> {
    writeln!(out, "student_id,label,length,tokens")?;
    for s in samples {
        let tokens: Vec<String> = s.tokens.iter().map(|t| t.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{}",
            s.student_id,
            s.label,
            s.tokens.len(),
            tokens.join(" ")
        )?;
    }
    Ok(())
}

/// Write the ranked n-gram report as `class,rank,ngram,frequency,rate_per_student`.
/// With a vocabulary, n-gram tokens print as names; otherwise as ids.
pub fn write_ngram_csv<W: Write>(
    out: &mut W,
    report: &NgramReport,
    vocab: Option<&Vocabulary>,
) -> Result<()> {
    writeln!(out, "class,rank,ngram,frequency,rate_per_student")?;
    for class in 0..2 {
        for (rank, entry) in report.per_class[class].iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                class,
                rank + 1,
                format_ngram(&entry.ngram, vocab),
                entry.frequency,
                entry.rate_per_student
            )?;
        }
    }
    Ok(())
}

/// Companion table with the per-class rate difference for each listed n-gram.
pub fn write_ngram_rate_diff_csv<W: Write>(
    out: &mut W,
    report: &NgramReport,
    vocab: Option<&Vocabulary>,
) -> Result<()> {
    writeln!(out, "class,rank,ngram,rate_own,rate_other,rate_diff")?;
    for class in 0..2 {
        for (rank, entry) in report.per_class[class].iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                class,
                rank + 1,
                format_ngram(&entry.ngram, vocab),
                entry.rate_per_student,
                entry.other_class_rate,
                entry.rate_diff()
            )?;
        }
    }
    Ok(())
}

fn format_ngram(ngram: &[u32], vocab: Option<&Vocabulary>) -> String {
    let parts: Vec<String> = ngram
        .iter()
        .map(|&t| match vocab {
            Some(v) if (t as usize) < v.size() => v.token(t).to_string(),
            _ => t.to_string(),
        })
        .collect();
    parts.join(" ")
}
