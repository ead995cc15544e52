//! Input loading shared by the commands.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use moocflow_core::behavior::{BehaviorModel, BehaviorModelFile};
use moocflow_core::evaluation::{assemble_course, CourseData};
use moocflow_core::ingest::{parse_grades, parse_log, CategoryMap, ParsedLog};

use crate::config::RunConfig;

pub fn load_map(path: &Path) -> Result<CategoryMap> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(CategoryMap::from_csv(BufReader::new(file))?)
}

pub fn load_clickstream(cfg: &RunConfig, path: &Path) -> Result<ParsedLog> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(parse_log(BufReader::new(file), cfg.log_format()?)?)
}

pub fn load_grades(path: &Path) -> Result<(BTreeMap<String, f64>, usize)> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(parse_grades(BufReader::new(file))?)
}

pub fn load_behavior_model(path: &Path) -> Result<BehaviorModel> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let parsed: BehaviorModelFile = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("{} is not a behavior model file", path.display()))?;
    Ok(parsed.into_model()?)
}

/// Ingest + assemble a full course from its declared files.
pub fn load_course(
    name: &str,
    cfg: &RunConfig,
    clicks: &Path,
    map: &CategoryMap,
    grades: &Path,
    model: Option<&BehaviorModel>,
) -> Result<CourseData> {
    let parsed = load_clickstream(cfg, clicks)?;
    let (grades, _) = load_grades(grades)?;
    Ok(assemble_course(
        name,
        parsed,
        map,
        &grades,
        model,
        &cfg.pipeline_config(),
    )?)
}

/// Session count-vector sequences per student, for behavior fitting.
pub fn session_sequences(
    cfg: &RunConfig,
    clicks: &Path,
    map: &CategoryMap,
) -> Result<(Vec<String>, Vec<Vec<Vec<u64>>>, Vec<Vec<i64>>)> {
    let mut parsed = load_clickstream(cfg, clicks)?;
    moocflow_core::ingest::apply_categories(&mut parsed.students, map);
    let mut ids = Vec::new();
    let mut sequences = Vec::new();
    let mut starts = Vec::new();
    for student in &parsed.students {
        let sessions =
            moocflow_core::ingest::segment_sessions(student, cfg.gap_seconds, map.n_categories())?;
        if sessions.is_empty() {
            continue;
        }
        ids.push(student.student_id.clone());
        starts.push(sessions.iter().map(|s| s.start_ts).collect());
        sequences.push(sessions.into_iter().map(|s| s.counts).collect());
    }
    Ok((ids, sequences, starts))
}
