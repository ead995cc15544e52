//! Clickstream parsing, category mapping, and session segmentation.
//!
//! A session is a maximal run of one student's clicks in which no two
//! consecutive clicks are separated by more than `gap_seconds` (default one
//! hour). A gap of exactly `gap_seconds` stays inside the session.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inactivity gap (seconds) that closes a session.
pub const DEFAULT_GAP_SECONDS: i64 = 3600;

/// One timestamped, typed action by one student.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClickEvent {
    pub student_id: String,
    /// Epoch seconds, UTC.
    pub timestamp: i64,
    /// Raw click identifier (URL-like path).
    pub raw_type: String,
    /// Category index, `None` until [`apply_categories`] runs.
    pub category_id: Option<u32>,
}

/// All events of one student, time-ordered (stable on equal timestamps).
#[derive(Clone, Debug)]
pub struct StudentEvents {
    pub student_id: String,
    pub events: Vec<ClickEvent>,
}

/// Input format accepted by [`parse_log`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

/// Parsed clickstream, grouped per student (sorted by student id).
#[derive(Debug)]
pub struct ParsedLog {
    pub students: Vec<StudentEvents>,
    /// Rows skipped because they did not parse.
    pub malformed_rows: usize,
}

impl ParsedLog {
    pub fn total_events(&self) -> usize {
        self.students.iter().map(|s| s.events.len()).sum()
    }
}

#[derive(Deserialize)]
struct RawRow {
    student_id: String,
    timestamp: serde_json::Value,
    click_type: String,
}

fn row_to_event(student_id: String, timestamp: &str, click_type: String) -> Option<ClickEvent> {
    let ts: i64 = timestamp.trim().parse().ok()?;
    if ts < 0 || student_id.is_empty() || click_type.is_empty() {
        return None;
    }
    Some(ClickEvent {
        student_id,
        timestamp: ts,
        raw_type: click_type,
        category_id: None,
    })
}

/// Parse a clickstream log into per-student, time-sorted event groups.
///
/// Malformed rows are skipped and counted; ties on timestamp preserve input
/// order. An unreadable source is fatal.
pub fn parse_log<R: Read>(source: R, format: LogFormat) -> Result<ParsedLog> {
    let mut grouped: BTreeMap<String, Vec<ClickEvent>> = BTreeMap::new();
    let mut malformed = 0usize;

    match format {
        LogFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(source);
            for record in reader.records() {
                let record = record?;
                let event = if record.len() == 3 {
                    row_to_event(record[0].to_string(), &record[1], record[2].to_string())
                } else {
                    None
                };
                match event {
                    Some(e) => grouped.entry(e.student_id.clone()).or_default().push(e),
                    None => malformed += 1,
                }
            }
        }
        LogFormat::Jsonl => {
            let reader = BufReader::new(source);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: Option<ClickEvent> =
                    serde_json::from_str::<RawRow>(&line).ok().and_then(|row| {
                        let ts = match &row.timestamp {
                            serde_json::Value::Number(n) => n.as_i64()?.to_string(),
                            serde_json::Value::String(s) => s.clone(),
                            _ => return None,
                        };
                        row_to_event(row.student_id, &ts, row.click_type)
                    });
                match parsed {
                    Some(e) => grouped.entry(e.student_id.clone()).or_default().push(e),
                    None => malformed += 1,
                }
            }
        }
    }

    let students = grouped
        .into_iter()
        .map(|(student_id, mut events)| {
            events.sort_by_key(|e| e.timestamp);
            StudentEvents { student_id, events }
        })
        .collect();

    Ok(ParsedLog {
        students,
        malformed_rows: malformed,
    })
}

/// The five coarse activity groups used for behavior summaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuperGroup {
    Lecture,
    Quiz,
    Forum,
    Class,
    Wiki,
}

impl SuperGroup {
    pub const ALL: [SuperGroup; 5] = [
        SuperGroup::Lecture,
        SuperGroup::Quiz,
        SuperGroup::Forum,
        SuperGroup::Class,
        SuperGroup::Wiki,
    ];

    pub fn parse(s: &str) -> Option<SuperGroup> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lecture" => Some(SuperGroup::Lecture),
            "quiz" => Some(SuperGroup::Quiz),
            "forum" => Some(SuperGroup::Forum),
            "class" => Some(SuperGroup::Class),
            "wiki" => Some(SuperGroup::Wiki),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            SuperGroup::Lecture => 0,
            SuperGroup::Quiz => 1,
            SuperGroup::Forum => 2,
            SuperGroup::Class => 3,
            SuperGroup::Wiki => 4,
        }
    }
}

impl fmt::Display for SuperGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SuperGroup::Lecture => "lecture",
            SuperGroup::Quiz => "quiz",
            SuperGroup::Forum => "forum",
            SuperGroup::Class => "class",
            SuperGroup::Wiki => "wiki",
        };
        f.write_str(s)
    }
}

/// Maps raw click types to categories by longest-prefix match, with a
/// fallback category for unmapped types.
#[derive(Clone, Debug)]
pub struct CategoryMap {
    categories: Vec<String>,
    super_groups: Vec<SuperGroup>,
    /// (raw prefix, category index), in input order.
    entries: Vec<(String, u32)>,
    fallback: u32,
}

impl CategoryMap {
    /// Build and validate a map. `entries` are (raw_prefix, category_name);
    /// `categories` are (name, super_group) in output order.
    pub fn new(
        categories: Vec<(String, SuperGroup)>,
        entries: Vec<(String, String)>,
        fallback: &str,
    ) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::invalid_input("category map has no categories"));
        }
        let mut seen = HashSet::new();
        for (name, _) in &categories {
            if !seen.insert(name.clone()) {
                return Err(Error::invalid_input(format!("duplicate category '{name}'")));
            }
        }
        let index: HashMap<&str, u32> = categories
            .iter()
            .enumerate()
            .map(|(i, (name, _))| (name.as_str(), i as u32))
            .collect();
        let fallback_id = *index.get(fallback).ok_or_else(|| {
            Error::invalid_input(format!(
                "fallback category '{fallback}' not in category list"
            ))
        })?;
        let mut resolved = Vec::with_capacity(entries.len());
        let mut prefixes = HashSet::new();
        for (prefix, target) in entries {
            if prefix.is_empty() {
                return Err(Error::invalid_input("empty raw prefix"));
            }
            if !prefixes.insert(prefix.clone()) {
                return Err(Error::invalid_input(format!(
                    "duplicate raw prefix '{prefix}'"
                )));
            }
            let id = *index.get(target.as_str()).ok_or_else(|| {
                Error::invalid_input(format!("entry target '{target}' not in category list"))
            })?;
            resolved.push((prefix, id));
        }
        let (names, groups) = categories.into_iter().unzip();
        Ok(CategoryMap {
            categories: names,
            super_groups: groups,
            entries: resolved,
            fallback: fallback_id,
        })
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn category_names(&self) -> &[String] {
        &self.categories
    }

    pub fn category_name(&self, id: u32) -> &str {
        &self.categories[id as usize]
    }

    pub fn super_group(&self, id: u32) -> SuperGroup {
        self.super_groups[id as usize]
    }

    pub fn fallback_id(&self) -> u32 {
        self.fallback
    }

    /// First raw prefix mapped to a category, if any (used when
    /// synthesizing raw types for a category).
    pub fn prefix_for(&self, category_id: u32) -> Option<&str> {
        self.entries
            .iter()
            .find(|(_, id)| *id == category_id)
            .map(|(prefix, _)| prefix.as_str())
    }

    /// Category of a raw click type: the longest matching prefix, else the
    /// fallback. Pure function of `raw_type`.
    pub fn category_of(&self, raw_type: &str) -> u32 {
        let mut best: Option<(usize, u32)> = None;
        for (prefix, id) in &self.entries {
            if raw_type.starts_with(prefix.as_str())
                && best.map_or(true, |(len, _)| prefix.len() > len)
            {
                best = Some((prefix.len(), *id));
            }
        }
        best.map_or(self.fallback, |(_, id)| id)
    }

    /// Read the `raw_prefix,category,super_group` CSV (one `__fallback__`
    /// row names the fallback category).
    pub fn from_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(source);
        let mut categories: Vec<(String, SuperGroup)> = Vec::new();
        let mut seen: HashMap<String, SuperGroup> = HashMap::new();
        let mut entries = Vec::new();
        let mut fallback: Option<String> = None;
        for record in reader.records() {
            let record = record?;
            if record.len() != 3 {
                return Err(Error::invalid_input(format!(
                    "category map row needs 3 fields, got {}",
                    record.len()
                )));
            }
            let (prefix, category, group_s) = (&record[0], &record[1], &record[2]);
            let group = SuperGroup::parse(group_s)
                .ok_or_else(|| Error::invalid_input(format!("unknown super group '{group_s}'")))?;
            match seen.get(category) {
                None => {
                    seen.insert(category.to_string(), group);
                    categories.push((category.to_string(), group));
                }
                Some(&g) if g != group => {
                    return Err(Error::invalid_input(format!(
                        "category '{category}' mapped to two super groups"
                    )));
                }
                _ => {}
            }
            if prefix == "__fallback__" {
                fallback = Some(category.to_string());
            } else {
                entries.push((prefix.to_string(), category.to_string()));
            }
        }
        let fallback =
            fallback.ok_or_else(|| Error::invalid_input("category map has no __fallback__ row"))?;
        CategoryMap::new(categories, entries, &fallback)
    }

    /// Write the map back in its CSV exchange format.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("raw_prefix,category,super_group\n");
        for (prefix, id) in &self.entries {
            out.push_str(&format!(
                "{prefix},{},{}\n",
                self.categories[*id as usize], self.super_groups[*id as usize]
            ));
        }
        out.push_str(&format!(
            "__fallback__,{},{}\n",
            self.categories[self.fallback as usize], self.super_groups[self.fallback as usize]
        ));
        out
    }

    /// The built-in example taxonomy: 46 categories over the five activity
    /// groups (10 lecture, 10 quiz, 10 forum, 8 class, 8 wiki). Raw types
    /// are matched by URL-path prefix; unmapped types fall back to
    /// `class_index` (generic site browsing).
    pub fn example() -> Self {
        let table: &[(&str, &str, SuperGroup)] = &[
            ("lecture/view", "lecture_view", SuperGroup::Lecture),
            ("lecture/download", "lecture_download", SuperGroup::Lecture),
            ("lecture/pause", "lecture_pause", SuperGroup::Lecture),
            ("lecture/resume", "lecture_resume", SuperGroup::Lecture),
            ("lecture/seek", "lecture_seek", SuperGroup::Lecture),
            ("lecture/subtitle", "lecture_subtitle", SuperGroup::Lecture),
            ("lecture/speed", "lecture_speed", SuperGroup::Lecture),
            ("lecture/complete", "lecture_complete", SuperGroup::Lecture),
            ("lecture/index", "lecture_index", SuperGroup::Lecture),
            ("lecture/annotate", "lecture_annotate", SuperGroup::Lecture),
            ("quiz/view", "quiz_view", SuperGroup::Quiz),
            ("quiz/attempt", "quiz_attempt", SuperGroup::Quiz),
            ("quiz/start", "quiz_start", SuperGroup::Quiz),
            ("quiz/submit", "quiz_submit", SuperGroup::Quiz),
            ("quiz/feedback", "quiz_feedback", SuperGroup::Quiz),
            ("quiz/certificate", "quiz_certificate", SuperGroup::Quiz),
            ("quiz/lateday", "quiz_late_day", SuperGroup::Quiz),
            ("quiz/index", "quiz_index", SuperGroup::Quiz),
            ("quiz/save", "quiz_save_draft", SuperGroup::Quiz),
            ("quiz/review", "quiz_review", SuperGroup::Quiz),
            ("forum/index", "forum_index", SuperGroup::Forum),
            ("forum/thread", "forum_thread", SuperGroup::Forum),
            ("forum/post", "forum_post", SuperGroup::Forum),
            ("forum/reply", "forum_reply", SuperGroup::Forum),
            ("forum/vote", "forum_vote", SuperGroup::Forum),
            ("forum/search", "forum_search", SuperGroup::Forum),
            ("forum/profile", "forum_profile", SuperGroup::Forum),
            ("forum/subscribe", "forum_subscribe", SuperGroup::Forum),
            ("forum/tag", "forum_tag", SuperGroup::Forum),
            ("forum/moderate", "forum_moderate", SuperGroup::Forum),
            ("class/index", "class_index", SuperGroup::Class),
            (
                "class/announcement",
                "class_announcement",
                SuperGroup::Class,
            ),
            ("class/syllabus", "class_syllabus", SuperGroup::Class),
            ("class/grades", "class_grades", SuperGroup::Class),
            ("class/settings", "class_settings", SuperGroup::Class),
            ("class/email", "class_email", SuperGroup::Class),
            ("class/calendar", "class_calendar", SuperGroup::Class),
            ("class/about", "class_about", SuperGroup::Class),
            ("wiki/view", "wiki_view", SuperGroup::Wiki),
            ("wiki/edit", "wiki_edit", SuperGroup::Wiki),
            ("wiki/history", "wiki_history", SuperGroup::Wiki),
            ("wiki/search", "wiki_search", SuperGroup::Wiki),
            ("wiki/index", "wiki_index", SuperGroup::Wiki),
            ("wiki/link", "wiki_link", SuperGroup::Wiki),
            ("wiki/upload", "wiki_upload", SuperGroup::Wiki),
            ("wiki/discuss", "wiki_discuss", SuperGroup::Wiki),
        ];
        let categories = table
            .iter()
            .map(|(_, name, group)| (name.to_string(), *group))
            .collect();
        let entries = table
            .iter()
            .map(|(prefix, name, _)| (prefix.to_string(), name.to_string()))
            .collect();
        CategoryMap::new(categories, entries, "class_index").expect("built-in map is valid")
    }
}

/// Set `category_id` on every event. Unmapped raw types get the fallback.
pub fn apply_categories(students: &mut [StudentEvents], map: &CategoryMap) {
    let mut cache: HashMap<String, u32> = HashMap::new();
    for student in students {
        for event in &mut student.events {
            let id = *cache
                .entry(event.raw_type.clone())
                .or_insert_with(|| map.category_of(&event.raw_type));
            event.category_id = Some(id);
        }
    }
}

/// A maximal click run with inter-click gaps at most the split threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Session {
    pub student_id: String,
    pub start_ts: i64,
    pub end_ts: i64,
    /// Category id per click, in click order.
    pub clicks: Vec<u32>,
    /// Per-category click counts (length = number of categories).
    pub counts: Vec<u64>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }
}

/// Split one student's time-sorted, categorized events into sessions.
/// A split happens between events i and i+1 iff their gap exceeds
/// `gap_seconds` strictly; exactly `gap_seconds` stays in-session.
pub fn segment_sessions(
    student: &StudentEvents,
    gap_seconds: i64,
    n_categories: usize,
) -> Result<Vec<Session>> {
    if gap_seconds <= 0 {
        return Err(Error::invalid_input("gap_seconds must be positive"));
    }
    let events = &student.events;
    if events.is_empty() {
        return Ok(Vec::new());
    }

    let mut sessions = Vec::new();
    let mut start = 0usize;
    for i in 0..events.len() {
        let is_last = i + 1 == events.len();
        let splits_after = !is_last && events[i + 1].timestamp - events[i].timestamp > gap_seconds;
        if is_last || splits_after {
            let slice = &events[start..=i];
            let mut clicks = Vec::with_capacity(slice.len());
            let mut counts = vec![0u64; n_categories];
            for e in slice {
                let id = e.category_id.ok_or_else(|| {
                    Error::invalid_input(format!(
                        "event for student {} has no category; run apply_categories first",
                        student.student_id
                    ))
                })?;
                if (id as usize) >= n_categories {
                    return Err(Error::invalid_input(format!(
                        "category id {id} out of range (C = {n_categories})"
                    )));
                }
                clicks.push(id);
                counts[id as usize] += 1;
            }
            sessions.push(Session {
                student_id: student.student_id.clone(),
                start_ts: slice[0].timestamp,
                end_ts: slice[slice.len() - 1].timestamp,
                clicks,
                counts,
            });
            start = i + 1;
        }
    }
    Ok(sessions)
}

/// Bijective token-to-id map, ids assigned by first occurrence.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    /// Rebuild the lookup index (after deserialization).
    pub fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }
}

/// Assign contiguous ids 0..n in first-occurrence order.
pub fn build_vocab<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> Vocabulary {
    let mut vocab = Vocabulary::default();
    for token in tokens {
        if !vocab.index.contains_key(token) {
            let id = vocab.tokens.len() as u32;
            vocab.index.insert(token.to_string(), id);
            vocab.tokens.push(token.to_string());
        }
    }
    vocab
}

/// Parse the `student_id,grade` CSV. Grades outside [0, 100] or otherwise
/// malformed rows are skipped and counted.
pub fn parse_grades<R: Read>(source: R) -> Result<(BTreeMap<String, f64>, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let mut grades = BTreeMap::new();
    let mut malformed = 0usize;
    for record in reader.records() {
        let record = record?;
        let parsed = if record.len() == 2 {
            record[1]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|g| (0.0..=100.0).contains(g))
        } else {
            None
        };
        match parsed {
            Some(g) if !record[0].is_empty() => {
                grades.insert(record[0].to_string(), g);
            }
            _ => malformed += 1,
        }
    }
    Ok((grades, malformed))
}
