//! One function per CLI subcommand. Each creates a hash-named run
//! directory, writes its artifacts there, and returns the directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use moocflow_core::behavior::{
    hmm_fit, mmm_fit, summarize_behaviors, transition_report, BehaviorModel, BehaviorModelFile,
};
use moocflow_core::classifiers::{vocab_fingerprint, ClassifierFile, TrainedClassifier};
use moocflow_core::evaluation::{
    eval_cell_model, repeated_accuracies, run_experiment_grid, split_students, students_t_test,
    train_cell_model, transfer_evaluate, write_results_csv, write_significance_csv, CourseData,
    ModelKind, SignificanceRow,
};
use moocflow_core::features::{
    ngram_indicative, per_state_unigrams, truncate_prefix, write_feature_dump, write_ngram_csv,
    write_ngram_rate_diff_csv, FeatureSet, PrefixDimension, PrefixSpec, PrefixValue,
    SequenceSample,
};
use moocflow_core::ingest::{build_vocab, CategoryMap, Vocabulary};
use moocflow_core::synthgen::{
    generate_course, generate_order_only_pair, GeneratorSpec, OrderOnlySpec,
};

use crate::config::RunConfig;
use crate::data;
use crate::plot;
use crate::runs::RunDir;

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn cmd_synth(cfg: &RunConfig, out_root: &Path) -> Result<PathBuf> {
    let run = RunDir::create(out_root, "synth", cfg, &[])?;
    let (course, spec_json) = match cfg.synth_preset.as_str() {
        "default" => {
            let mut spec = GeneratorSpec::default_course(cfg.seed);
            spec.n_students = cfg.synth_students;
            (
                generate_course(&spec)?,
                serde_json::to_string_pretty(&spec)?,
            )
        }
        "well-separated" => {
            let spec = GeneratorSpec::well_separated(
                cfg.n_states,
                (2 * cfg.n_states).max(6),
                cfg.synth_students,
                20.0,
                cfg.seed,
            );
            (
                generate_course(&spec)?,
                serde_json::to_string_pretty(&spec)?,
            )
        }
        "order-only" => {
            let spec = OrderOnlySpec {
                seed: cfg.seed,
                n_pairs: (cfg.synth_students / 2).max(1),
                ..OrderOnlySpec::default()
            };
            (
                generate_order_only_pair(&spec)?,
                serde_json::to_string_pretty(&spec)?,
            )
        }
        other => bail!("unknown synth preset '{other}'"),
    };
    run.write("clicks.csv", &course.clickstream_csv)?;
    run.write("grades.csv", &course.grades_csv)?;
    run.write("truth.json", serde_json::to_string(&course.sidecar)?)?;
    run.write("category_map.csv", course.category_map.to_csv_string())?;
    run.write("generator_spec.json", spec_json)?;
    println!(
        "synth: {} students -> {}",
        course.sidecar.students.len(),
        run.path.display()
    );
    Ok(run.path)
}

pub fn cmd_ingest(
    cfg: &RunConfig,
    clicks: &Path,
    map_path: &Path,
    out_root: &Path,
) -> Result<PathBuf> {
    let run = RunDir::create(
        out_root,
        "ingest",
        cfg,
        &[("clicks", &path_str(clicks)), ("map", &path_str(map_path))],
    )?;
    let map = data::load_map(map_path)?;
    let parsed = data::load_clickstream(cfg, clicks)?;
    let malformed = parsed.malformed_rows;
    let n_students = parsed.students.len();
    let n_events = parsed.total_events();

    let mut students = parsed.students;
    moocflow_core::ingest::apply_categories(&mut students, &map);
    let mut sessions_csv = String::from("student_id,start_ts,end_ts,n_clicks\n");
    let mut n_sessions = 0usize;
    for student in &students {
        let sessions =
            moocflow_core::ingest::segment_sessions(student, cfg.gap_seconds, map.n_categories())?;
        for s in &sessions {
            let _ = writeln!(
                sessions_csv,
                "{},{},{},{}",
                s.student_id,
                s.start_ts,
                s.end_ts,
                s.clicks.len()
            );
        }
        n_sessions += sessions.len();
    }
    let vocab = build_vocab(
        students
            .iter()
            .flat_map(|s| s.events.iter())
            .map(|e| e.raw_type.as_str()),
    );
    run.write("sessions.csv", sessions_csv)?;
    run.write(
        "ingest_stats.json",
        serde_json::to_string_pretty(&serde_json::json!({
            "students": n_students,
            "events": n_events,
            "malformed_rows": malformed,
            "sessions": n_sessions,
            "raw_vocab_size": vocab.size(),
            "categories": map.n_categories(),
        }))?,
    )?;
    println!(
        "ingest: {n_students} students, {n_events} events, {n_sessions} sessions, {malformed} malformed rows -> {}",
        run.path.display()
    );
    Ok(run.path)
}

fn write_fit_reports(
    run: &RunDir,
    map: &CategoryMap,
    model: &BehaviorModel,
    trace_logliks: &[f64],
) -> Result<()> {
    let mut trace_csv = String::from("iteration,loglik\n");
    for (i, ll) in trace_logliks.iter().enumerate() {
        let _ = writeln!(trace_csv, "{i},{ll}");
    }
    run.write("fit_trace.csv", trace_csv)?;

    let emit = match model {
        BehaviorModel::Mmm(p) => &p.emit,
        BehaviorModel::Hmm(p) => &p.emit,
    };
    let summary = summarize_behaviors(emit, map)?;
    let mut behaviors_csv = String::from("state,lecture,quiz,forum,class,wiki\n");
    for state in 0..summary.rows() {
        let row = summary.row(state);
        let _ = writeln!(
            behaviors_csv,
            "{state},{},{},{},{},{}",
            row[0], row[1], row[2], row[3], row[4]
        );
    }
    run.write("behaviors.csv", behaviors_csv)?;

    if let BehaviorModel::Hmm(params) = model {
        let report = transition_report(params);
        let mut init_csv = String::from("state,probability\n");
        for (s, p) in report.init.iter().enumerate() {
            let _ = writeln!(init_csv, "{s},{p}");
        }
        run.write("initial_probs.csv", init_csv)?;
        let mut trans_csv = String::from("from,to,probability\n");
        for i in 0..report.trans.rows() {
            for j in 0..report.trans.cols() {
                let _ = writeln!(trans_csv, "{i},{j},{}", report.trans.at(i, j));
            }
        }
        run.write("transitions.csv", trans_csv)?;
        let mut top_csv = String::from("state,rank,to,probability\n");
        for (s, tops) in report.top_outgoing.iter().enumerate() {
            for (rank, (to, p)) in tops.iter().enumerate() {
                let _ = writeln!(top_csv, "{s},{},{to},{p}", rank + 1);
            }
        }
        run.write("top_transitions.csv", top_csv)?;
    }
    Ok(())
}

pub fn cmd_fit(
    cfg: &RunConfig,
    kind: &str,
    clicks: &Path,
    map_path: &Path,
    out_root: &Path,
) -> Result<PathBuf> {
    let command = format!("fit-{kind}");
    let run = RunDir::create(
        out_root,
        &command,
        cfg,
        &[("clicks", &path_str(clicks)), ("map", &path_str(map_path))],
    )?;
    let map = data::load_map(map_path)?;
    let (_, sequences, _) = data::session_sequences(cfg, clicks, &map)?;
    if sequences.is_empty() {
        bail!("no sessions found in {}", clicks.display());
    }
    let fit_cfg = cfg.fit_config();
    let (model, trace) = match kind {
        "mmm" => {
            let sessions: Vec<Vec<u64>> = sequences.into_iter().flatten().collect();
            let (params, trace) = mmm_fit(&sessions, &fit_cfg)?;
            (BehaviorModel::Mmm(params), trace)
        }
        "hmm" => {
            let (params, trace) = hmm_fit(&sequences, &fit_cfg)?;
            (BehaviorModel::Hmm(params), trace)
        }
        other => bail!("unknown behavior model kind '{other}'"),
    };
    let file = BehaviorModelFile::from_model(
        &model,
        map.category_names().to_vec(),
        cfg.seed,
        trace.final_loglik(),
    );
    run.write("model.json", serde_json::to_string(&file)?)?;
    write_fit_reports(&run, &map, &model, &trace.logliks)?;
    println!(
        "fit-{kind}: K={} converged={} iterations={} loglik={} restarts={} -> {}",
        cfg.n_states,
        trace.converged,
        trace.iterations(),
        trace.final_loglik(),
        trace.restarts,
        run.path.display()
    );
    Ok(run.path)
}

pub fn cmd_decode(
    cfg: &RunConfig,
    clicks: &Path,
    map_path: &Path,
    model_path: &Path,
    out_root: &Path,
) -> Result<PathBuf> {
    let run = RunDir::create(
        out_root,
        "decode",
        cfg,
        &[
            ("clicks", &path_str(clicks)),
            ("map", &path_str(map_path)),
            ("model", &path_str(model_path)),
        ],
    )?;
    let map = data::load_map(map_path)?;
    let model = data::load_behavior_model(model_path)?;
    if model.n_categories() != map.n_categories() {
        bail!(
            "model categories ({}) do not match the map ({})",
            model.n_categories(),
            map.n_categories()
        );
    }
    let (ids, sequences, starts) = data::session_sequences(cfg, clicks, &map)?;
    let mut csv = String::from("student_id,states,session_starts\n");
    for ((id, seq), start) in ids.iter().zip(&sequences).zip(&starts) {
        let states = model.decode(seq)?;
        let states_s: Vec<String> = states.iter().map(|s| s.to_string()).collect();
        let starts_s: Vec<String> = start.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(csv, "{id},{},{}", states_s.join(" "), starts_s.join(" "));
    }
    run.write("states.csv", csv)?;
    println!("decode: {} students -> {}", ids.len(), run.path.display());
    Ok(run.path)
}

fn parse_feature_set(s: &str) -> Result<FeatureSet> {
    FeatureSet::parse(s).ok_or_else(|| anyhow!("unknown feature set '{s}' (raw, category, state)"))
}

fn parse_prefix(dimension: Option<&str>, value: Option<&str>) -> Result<Option<PrefixSpec>> {
    match (dimension, value) {
        (None, None) => Ok(None),
        (Some(d), Some(v)) => {
            let dim =
                PrefixDimension::parse(d).ok_or_else(|| anyhow!("unknown dimension '{d}'"))?;
            let value = if v.eq_ignore_ascii_case("all") {
                PrefixValue::All
            } else {
                PrefixValue::Value(v.parse().with_context(|| format!("bad value '{v}'"))?)
            };
            Ok(Some(PrefixSpec::new(dim, value)?))
        }
        _ => bail!("--dimension and --value must be given together"),
    }
}

fn cell_samples(
    course: &CourseData,
    indices: &[usize],
    fs: FeatureSet,
    spec: Option<&PrefixSpec>,
) -> Result<(Vec<SequenceSample>, usize)> {
    let mut out = Vec::new();
    let mut excluded = 0usize;
    for &i in indices {
        let record = &course.records[i];
        let sample = match fs {
            FeatureSet::Raw => &record.raw,
            FeatureSet::Category => &record.category,
            FeatureSet::State => record
                .state
                .as_ref()
                .ok_or_else(|| anyhow!("state features need --model"))?,
        };
        match spec {
            Some(spec) => match truncate_prefix(sample, spec)? {
                Some(s) => out.push(s),
                None => excluded += 1,
            },
            None => out.push(sample.clone()),
        }
    }
    Ok((out, excluded))
}

fn display_vocab(course: &CourseData, map: &CategoryMap, fs: FeatureSet) -> Option<Vocabulary> {
    match fs {
        FeatureSet::Raw => Some(course.raw_vocab.clone()),
        FeatureSet::Category => Some(build_vocab(map.category_names().iter().map(String::as_str))),
        FeatureSet::State => None,
    }
}

fn feature_vocab_hash(course: &CourseData, fs: FeatureSet) -> Result<String> {
    Ok(match fs {
        FeatureSet::Raw => vocab_fingerprint(course.raw_vocab.tokens()),
        FeatureSet::Category => {
            let names: Vec<String> = (0..course.n_categories).map(|i| i.to_string()).collect();
            vocab_fingerprint(&names)
        }
        FeatureSet::State => {
            let n = course.vocab_size(FeatureSet::State)?;
            let names: Vec<String> = (0..n).map(|i| format!("state{i}")).collect();
            vocab_fingerprint(&names)
        }
    })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_extract(
    cfg: &RunConfig,
    clicks: &Path,
    map_path: &Path,
    grades: &Path,
    model_path: Option<&Path>,
    feature_set: &str,
    dimension: Option<&str>,
    value: Option<&str>,
    out_root: &Path,
) -> Result<PathBuf> {
    let mut inputs = vec![
        ("clicks", path_str(clicks)),
        ("map", path_str(map_path)),
        ("grades", path_str(grades)),
        ("feature_set", feature_set.to_string()),
    ];
    if let Some(m) = model_path {
        inputs.push(("model", path_str(m)));
    }
    if let (Some(d), Some(v)) = (dimension, value) {
        inputs.push(("dimension", d.to_string()));
        inputs.push(("value", v.to_string()));
    }
    let input_refs: Vec<(&str, &str)> = inputs.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let run = RunDir::create(out_root, "extract", cfg, &input_refs)?;

    let fs = parse_feature_set(feature_set)?;
    let map = data::load_map(map_path)?;
    let model = model_path.map(data::load_behavior_model).transpose()?;
    let course = data::load_course("course", cfg, clicks, &map, grades, model.as_ref())?;
    let spec = parse_prefix(dimension, value)?;
    let all: Vec<usize> = (0..course.records.len()).collect();
    let (samples, excluded) = cell_samples(&course, &all, fs, spec.as_ref())?;

    let mut buf = Vec::new();
    write_feature_dump(&mut buf, &samples)?;
    run.write("features.csv", buf)?;
    if let Some(vocab) = display_vocab(&course, &map, fs) {
        run.write("vocab.json", serde_json::to_string(&vocab)?)?;
    }
    run.write(
        "extract_meta.json",
        serde_json::to_string_pretty(&serde_json::json!({
            "feature_set": fs.to_string(),
            "samples": samples.len(),
            "excluded_empty_prefix": excluded,
            "excluded_no_grade": course.exclusions.no_grade,
            "excluded_too_few_clicks": course.exclusions.too_few_clicks,
            "vocab_size": course.vocab_size(fs)?,
        }))?,
    )?;
    println!(
        "extract: {} samples ({} empty prefixes dropped) -> {}",
        samples.len(),
        excluded,
        run.path.display()
    );
    Ok(run.path)
}

pub fn cmd_analyze_ngrams(
    cfg: &RunConfig,
    clicks: &Path,
    map_path: &Path,
    grades: &Path,
    model_path: Option<&Path>,
    feature_set: &str,
    out_root: &Path,
) -> Result<PathBuf> {
    let mut inputs = vec![
        ("clicks", path_str(clicks)),
        ("map", path_str(map_path)),
        ("grades", path_str(grades)),
        ("feature_set", feature_set.to_string()),
    ];
    if let Some(m) = model_path {
        inputs.push(("model", path_str(m)));
    }
    let input_refs: Vec<(&str, &str)> = inputs.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let run = RunDir::create(out_root, "analyze-ngrams", cfg, &input_refs)?;

    let fs = parse_feature_set(feature_set)?;
    let map = data::load_map(map_path)?;
    let model = model_path.map(data::load_behavior_model).transpose()?;
    let course = data::load_course("course", cfg, clicks, &map, grades, model.as_ref())?;
    let all: Vec<usize> = (0..course.records.len()).collect();
    let (samples, _) = cell_samples(&course, &all, fs, None)?;
    let vocab = display_vocab(&course, &map, fs);

    for n in [1usize, cfg.ngram_n] {
        let report = ngram_indicative(&samples, n, cfg.top_k)?;
        let mut buf = Vec::new();
        write_ngram_csv(&mut buf, &report, vocab.as_ref())?;
        run.write(&format!("ngram_{n}_report.csv"), buf)?;
        let mut buf = Vec::new();
        write_ngram_rate_diff_csv(&mut buf, &report, vocab.as_ref())?;
        run.write(&format!("ngram_{n}_rate_diff.csv"), buf)?;
        if n == cfg.ngram_n {
            break;
        }
    }

    // Per-state unigram rankings need decoded sessions.
    if let Some(model) = &model {
        let decoded: Vec<(usize, Vec<usize>)> = course
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let counts: Vec<Vec<u64>> = r.sessions.iter().map(|s| s.counts.clone()).collect();
                Ok((i, model.decode(&counts)?))
            })
            .collect::<Result<_>>()?;
        let students: Vec<(&[moocflow_core::ingest::Session], &[usize], u8)> = decoded
            .iter()
            .map(|(i, states)| {
                (
                    course.records[*i].sessions.as_slice(),
                    states.as_slice(),
                    course.records[*i].label,
                )
            })
            .collect();
        let per_state =
            per_state_unigrams(&students, model.n_states(), map.n_categories(), cfg.top_k);
        let mut csv = String::from("state,class,rank,category,frequency\n");
        for (state, classes) in per_state.iter().enumerate() {
            for (class, ranked) in classes.iter().enumerate() {
                for (rank, (cat, freq)) in ranked.iter().enumerate() {
                    let _ = writeln!(
                        csv,
                        "{state},{class},{},{},{freq}",
                        rank + 1,
                        map.category_name(*cat)
                    );
                }
            }
        }
        run.write("per_state_unigrams.csv", csv)?;
    }
    println!(
        "analyze-ngrams: {} samples -> {}",
        samples.len(),
        run.path.display()
    );
    Ok(run.path)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_train(
    cfg: &RunConfig,
    clicks: &Path,
    map_path: &Path,
    grades: &Path,
    model_path: Option<&Path>,
    feature_set: &str,
    classifier: &str,
    dimension: Option<&str>,
    value: Option<&str>,
    out_root: &Path,
) -> Result<PathBuf> {
    let mut inputs = vec![
        ("clicks", path_str(clicks)),
        ("map", path_str(map_path)),
        ("grades", path_str(grades)),
        ("feature_set", feature_set.to_string()),
        ("classifier", classifier.to_string()),
    ];
    if let Some(m) = model_path {
        inputs.push(("model", path_str(m)));
    }
    if let (Some(d), Some(v)) = (dimension, value) {
        inputs.push(("dimension", d.to_string()));
        inputs.push(("value", v.to_string()));
    }
    let input_refs: Vec<(&str, &str)> = inputs.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let run = RunDir::create(out_root, "train", cfg, &input_refs)?;

    let fs = parse_feature_set(feature_set)?;
    let kind = ModelKind::parse(classifier)
        .ok_or_else(|| anyhow!("unknown classifier '{classifier}' (lstm, svm_c, svm_l, mlp)"))?;
    let map = data::load_map(map_path)?;
    let model = model_path.map(data::load_behavior_model).transpose()?;
    let course = data::load_course("course", cfg, clicks, &map, grades, model.as_ref())?;
    let split = split_students(course.records.len(), cfg.train_frac, cfg.seed)?;
    let spec = parse_prefix(dimension, value)?;
    let (train_samples, _) = cell_samples(&course, &split.train, fs, spec.as_ref())?;
    let (test_samples, _) = cell_samples(&course, &split.test, fs, spec.as_ref())?;
    let vocab_size = course.vocab_size(fs)?;

    let train_cfg = cfg.train_config();
    let trained = train_cell_model(kind, &train_samples, vocab_size, &train_cfg)?;
    let train_acc = eval_cell_model(&trained, kind, &train_samples, vocab_size)?;
    let test_acc = eval_cell_model(&trained, kind, &test_samples, vocab_size)?;

    let file = ClassifierFile::from_model(
        &trained,
        fs.to_string(),
        feature_vocab_hash(&course, fs)?,
        train_cfg.clone(),
    );
    run.write("classifier.json", serde_json::to_string(&file)?)?;

    // The LSTM and MLP trainers produce per-epoch traces; re-train cheaply
    // is wasteful, so the summary carries the final accuracies and the log
    // holds per-epoch stats when available.
    let trace = match kind {
        ModelKind::Lstm => {
            let sequences: Vec<Vec<u32>> = train_samples.iter().map(|s| s.tokens.clone()).collect();
            let labels: Vec<u8> = train_samples.iter().map(|s| s.label).collect();
            let val_sequences: Vec<Vec<u32>> =
                test_samples.iter().map(|s| s.tokens.clone()).collect();
            let val_labels: Vec<u8> = test_samples.iter().map(|s| s.label).collect();
            let (_, trace) = moocflow_core::classifiers::lstm_train(
                moocflow_core::classifiers::DatasetRef {
                    sequences: &sequences,
                    labels: &labels,
                },
                vocab_size,
                &train_cfg,
                Some(moocflow_core::classifiers::DatasetRef {
                    sequences: &val_sequences,
                    labels: &val_labels,
                }),
            )?;
            Some(trace)
        }
        ModelKind::Mlp => {
            let features = moocflow_core::classifiers::count_features(&train_samples, vocab_size);
            let labels: Vec<u8> = train_samples.iter().map(|s| s.label).collect();
            let (_, trace) = moocflow_core::classifiers::mlp_train(&features, &labels, &train_cfg)?;
            Some(trace)
        }
        _ => None,
    };
    let mut buf = Vec::new();
    match trace {
        Some(trace) => trace.write_csv(&mut buf)?,
        None => {
            use std::io::Write as _;
            writeln!(buf, "epoch,mean_loss,train_acc,val_acc")?;
        }
    }
    run.write("training_log.csv", buf)?;
    run.write(
        "train_summary.json",
        serde_json::to_string_pretty(&serde_json::json!({
            "classifier": kind.to_string(),
            "feature_set": fs.to_string(),
            "train_accuracy": train_acc,
            "test_accuracy": test_acc,
            "n_train": train_samples.len(),
            "n_test": test_samples.len(),
        }))?,
    )?;
    println!(
        "train: {kind} on {fs} features, train acc {train_acc:.4}, test acc {test_acc:.4} -> {}",
        run.path.display()
    );
    Ok(run.path)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_evaluate(
    cfg: &RunConfig,
    clicks: &Path,
    map_path: &Path,
    grades: &Path,
    model_path: Option<&Path>,
    classifier_path: Option<&Path>,
    compare: Option<&str>,
    feature_set: Option<&str>,
    dimension: Option<&str>,
    value: Option<&str>,
    out_root: &Path,
) -> Result<PathBuf> {
    let mut inputs = vec![
        ("clicks", path_str(clicks)),
        ("map", path_str(map_path)),
        ("grades", path_str(grades)),
    ];
    if let Some(m) = model_path {
        inputs.push(("model", path_str(m)));
    }
    if let Some(c) = classifier_path {
        inputs.push(("classifier", path_str(c)));
    }
    if let Some(c) = compare {
        inputs.push(("compare", c.to_string()));
    }
    if let Some(f) = feature_set {
        inputs.push(("feature_set", f.to_string()));
    }
    if let (Some(d), Some(v)) = (dimension, value) {
        inputs.push(("dimension", d.to_string()));
        inputs.push(("value", v.to_string()));
    }
    let input_refs: Vec<(&str, &str)> = inputs.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let run = RunDir::create(out_root, "evaluate", cfg, &input_refs)?;

    let map = data::load_map(map_path)?;
    let model = model_path.map(data::load_behavior_model).transpose()?;
    let course = data::load_course("course", cfg, clicks, &map, grades, model.as_ref())?;
    let spec = parse_prefix(dimension, value)?;

    if let Some(classifier_path) = classifier_path {
        // Evaluate a saved classifier on 100% of this dataset.
        let text = std::fs::read_to_string(classifier_path)?;
        let file: ClassifierFile = serde_json::from_str(&text)?;
        let fs = parse_feature_set(&file.feature_set)?;
        let kind = match file.kind.as_str() {
            "lstm" => ModelKind::Lstm,
            "mlp" => ModelKind::Mlp,
            "svm" => match file.feature_kind.as_deref() {
                Some("length") => ModelKind::SvmLength,
                _ => ModelKind::SvmCounts,
            },
            other => bail!("unknown classifier kind '{other}'"),
        };
        if file.vocab_hash != feature_vocab_hash(&course, fs)? {
            bail!("classifier was trained against a different vocabulary");
        }
        let trained: TrainedClassifier = file.into_model()?;
        let all: Vec<usize> = (0..course.records.len()).collect();
        let (samples, excluded) = cell_samples(&course, &all, fs, spec.as_ref())?;
        let vocab_size = course.vocab_size(fs)?;
        let accuracy = eval_cell_model(&trained, kind, &samples, vocab_size)?;
        run.write(
            "evaluation.json",
            serde_json::to_string_pretty(&serde_json::json!({
                "classifier": kind.to_string(),
                "feature_set": fs.to_string(),
                "accuracy": accuracy,
                "n": samples.len(),
                "excluded_empty_prefix": excluded,
            }))?,
        )?;
        println!(
            "evaluate: accuracy {accuracy:.4} on {} samples -> {}",
            samples.len(),
            run.path.display()
        );
        return Ok(run.path);
    }

    let compare = compare.ok_or_else(|| anyhow!("evaluate needs --classifier or --compare a,b"))?;
    let (kind_a, kind_b) = {
        let mut parts = compare.split(',').map(str::trim);
        let a = parts
            .next()
            .and_then(ModelKind::parse)
            .ok_or_else(|| anyhow!("--compare wants two classifiers, e.g. lstm,svm_c"))?;
        let b = parts
            .next()
            .and_then(ModelKind::parse)
            .ok_or_else(|| anyhow!("--compare wants two classifiers, e.g. lstm,svm_c"))?;
        (a, b)
    };
    let fs =
        parse_feature_set(feature_set.ok_or_else(|| anyhow!("--compare needs --feature-set"))?)?;
    let spec = spec.unwrap_or(PrefixSpec {
        dimension: PrefixDimension::CourseDays,
        value: PrefixValue::All,
    });
    let split = split_students(course.records.len(), cfg.train_frac, cfg.seed)?;
    let train_cfg = cfg.train_config();
    let acc_a = repeated_accuracies(&course, &split, fs, &spec, kind_a, &train_cfg, cfg.repeats)?;
    let acc_b = repeated_accuracies(&course, &split, fs, &spec, kind_b, &train_cfg, cfg.repeats)?;
    let result = students_t_test(&acc_a, &acc_b)?;
    let config_of = |kind: ModelKind| format!("{fs}:{kind}:{}={}", spec.dimension, spec.value);
    let rows = vec![SignificanceRow {
        config_a: config_of(kind_a),
        config_b: config_of(kind_b),
        result: result.clone(),
    }];
    let mut buf = Vec::new();
    write_significance_csv(&mut buf, &rows)?;
    run.write("significance.csv", buf)?;
    run.write(
        "accuracy_samples.json",
        serde_json::to_string_pretty(&serde_json::json!({
            "repeats": cfg.repeats,
            "config_a": config_of(kind_a),
            "config_b": config_of(kind_b),
            "accuracies_a": acc_a,
            "accuracies_b": acc_b,
            "t": result.t_statistic,
            "df": result.degrees_of_freedom,
            "p": result.p_value,
        }))?,
    )?;
    println!(
        "evaluate: {} vs {} over {} repeats, t={:.4}, p={:.6} -> {}",
        kind_a,
        kind_b,
        cfg.repeats,
        result.t_statistic,
        result.p_value,
        run.path.display()
    );
    Ok(run.path)
}

pub fn cmd_grid(
    cfg: &RunConfig,
    clicks: &Path,
    map_path: &Path,
    grades: &Path,
    model_path: Option<&Path>,
    out_root: &Path,
) -> Result<PathBuf> {
    let mut inputs = vec![
        ("clicks", path_str(clicks)),
        ("map", path_str(map_path)),
        ("grades", path_str(grades)),
    ];
    if let Some(m) = model_path {
        inputs.push(("model", path_str(m)));
    }
    let input_refs: Vec<(&str, &str)> = inputs.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let run = RunDir::create(out_root, "grid", cfg, &input_refs)?;

    let map = data::load_map(map_path)?;
    let model = model_path.map(data::load_behavior_model).transpose()?;
    let grid = cfg.grid_spec()?;
    if grid.feature_sets.contains(&FeatureSet::State) && model.is_none() {
        bail!("the grid includes state features; pass --model <behavior model>");
    }
    let course = data::load_course("course", cfg, clicks, &map, grades, model.as_ref())?;
    let split = split_students(course.records.len(), cfg.train_frac, cfg.seed)?;
    let cells = run_experiment_grid(&course, &split, &grid, &cfg.train_config())?;

    // Combinations like click-count prefixes on state features are
    // invalid and stay blank; record how many were skipped.
    let all_combos: usize = grid
        .dimensions
        .iter()
        .map(|(_, values)| values.len() * grid.feature_sets.len() * grid.models.len())
        .sum();
    let skipped = all_combos - grid.valid_cells().len();

    let mut buf = Vec::new();
    write_results_csv(&mut buf, &cells)?;
    run.write("results.csv", buf)?;
    run.write(
        "grid_meta.json",
        serde_json::to_string_pretty(&serde_json::json!({
            "students": course.records.len(),
            "train": split.train.len(),
            "test": split.test.len(),
            "majority_floor": course.majority_floor(),
            "cells": cells.len(),
            "skipped_invalid_combinations": skipped,
            "excluded_empty_prefix_total": cells.iter().map(|c| c.excluded_empty).sum::<usize>(),
        }))?,
    )?;
    println!(
        "grid: {} result rows over {} students -> {}",
        cells.len(),
        course.records.len(),
        run.path.display()
    );
    Ok(run.path)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_transfer(
    cfg: &RunConfig,
    clicks_a: &Path,
    grades_a: &Path,
    clicks_b: &Path,
    grades_b: &Path,
    map_path: &Path,
    model_path: &Path,
    out_root: &Path,
) -> Result<PathBuf> {
    let run = RunDir::create(
        out_root,
        "transfer",
        cfg,
        &[
            ("clicks_a", &path_str(clicks_a)),
            ("grades_a", &path_str(grades_a)),
            ("clicks_b", &path_str(clicks_b)),
            ("grades_b", &path_str(grades_b)),
            ("map", &path_str(map_path)),
            ("model", &path_str(model_path)),
        ],
    )?;
    let map = data::load_map(map_path)?;
    let model = data::load_behavior_model(model_path)?;
    let course_a = data::load_course("course_a", cfg, clicks_a, &map, grades_a, Some(&model))?;
    let course_b = data::load_course("course_b", cfg, clicks_b, &map, grades_b, Some(&model))?;
    let split_a = split_students(course_a.records.len(), cfg.train_frac, cfg.seed)?;
    let cells = transfer_evaluate(
        &course_a,
        &split_a,
        &course_b,
        &cfg.grid_spec()?,
        &cfg.train_config(),
    )?;

    let mut buf = Vec::new();
    write_results_csv(&mut buf, &cells)?;
    run.write("transfer_results.csv", buf)?;
    println!(
        "transfer: {} cells evaluated on {} held-out students -> {}",
        cells.len(),
        course_b.records.len(),
        run.path.display()
    );
    Ok(run.path)
}

pub fn cmd_plot(cfg: &RunConfig, results: &Path, out_root: &Path) -> Result<PathBuf> {
    let run = RunDir::create(out_root, "plot", cfg, &[("results", &path_str(results))])?;
    let file = std::fs::File::open(results)
        .with_context(|| format!("cannot open {}", results.display()))?;
    let cells = moocflow_core::evaluation::read_results_csv(std::io::BufReader::new(file))?;
    let charts = plot::plot_results(&cells);
    if charts.is_empty() {
        bail!("no test or transfer rows to plot in {}", results.display());
    }
    for (name, svg) in &charts {
        run.write(name, svg)?;
    }
    println!("plot: {} charts -> {}", charts.len(), run.path.display());
    Ok(run.path)
}
