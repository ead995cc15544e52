//! Seeded synthetic-course generator.
//!
//! Students belong to archetypes; each archetype is an HMM over session
//! states whose emissions are category multinomials. Click timestamps are
//! laid out so session boundaries land exactly where intended: within-session
//! gaps stay at or below one hour, between-session gaps strictly exceed it.
//! Grades correlate with archetype, so the default threshold-0 labeling is
//! meaningful. Regenerating with the same spec is byte-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::behavior::HmmParams;
use crate::error::{Error, Result};
use crate::ingest::{CategoryMap, SuperGroup};
use crate::numeric::{derive_seed, Matrix};

/// Grade sampler for one archetype.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum GradeDistribution {
    /// `scale * Beta(alpha, beta)`, floored just above zero.
    Positive { alpha: f64, beta: f64, scale: f64 },
    /// Exactly zero with probability `zero_prob`, else a small positive
    /// `scale * Beta(alpha, beta)`.
    ZeroInflated {
        zero_prob: f64,
        alpha: f64,
        beta: f64,
        scale: f64,
    },
}

impl GradeDistribution {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            GradeDistribution::Positive { alpha, beta, scale } => {
                let d = Beta::new(alpha, beta).expect("beta params");
                (scale * d.sample(rng)).clamp(0.01, 100.0)
            }
            GradeDistribution::ZeroInflated {
                zero_prob,
                alpha,
                beta,
                scale,
            } => {
                if rng.gen::<f64>() < zero_prob {
                    0.0
                } else {
                    let d = Beta::new(alpha, beta).expect("beta params");
                    (scale * d.sample(rng)).clamp(0.5, 100.0)
                }
            }
        }
    }
}

/// One behavioral archetype: an HMM over session states plus a grade law.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArchetypeSpec {
    pub share: f64,
    pub init: Vec<f64>,
    pub trans: Vec<Vec<f64>>,
    pub emit: Vec<Vec<f64>>,
    pub grade: GradeDistribution,
}

impl ArchetypeSpec {
    /// The archetype's dynamics as model parameters (for re-scoring).
    pub fn to_hmm_params(&self) -> HmmParams {
        HmmParams {
            init: self.init.clone(),
            trans: Matrix::from_rows(self.trans.clone()),
            emit: Matrix::from_rows(self.emit.clone()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub n_students: usize,
    pub n_categories: usize,
    pub k_true: usize,
    pub archetypes: Vec<ArchetypeSpec>,
    pub course_start_ts: i64,
    /// Exponential mean of the student's join delay, in days.
    pub join_delay_mean_days: f64,
    /// Sessions per student: lognormal (ln-space median and sd).
    pub sessions_log_median: f64,
    pub sessions_log_sd: f64,
    pub max_sessions: usize,
    /// Clicks per session: lognormal.
    pub clicks_log_median: f64,
    pub clicks_log_sd: f64,
    pub max_clicks_per_session: usize,
    /// Within-session inter-click gap, seconds (lognormal, clamped to range).
    pub within_gap_range: (i64, i64),
    pub within_gap_log_median: f64,
    pub within_gap_log_sd: f64,
    /// Between-session gap beyond the one-hour threshold: exponential mean
    /// in days, added to 3601 s.
    pub between_gap_mean_days: f64,
    /// Distinct raw-type variants generated per category.
    pub raw_variants_per_category: u32,
    /// Use the built-in 46-category example map; otherwise a synthetic
    /// map with `n_categories` categories.
    pub use_example_map: bool,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_students == 0 || self.k_true == 0 || self.n_categories < 2 {
            return Err(Error::invalid_input("degenerate generator spec"));
        }
        let share_sum: f64 = self.archetypes.iter().map(|a| a.share).sum();
        if (share_sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid_input("archetype shares must sum to 1"));
        }
        for a in &self.archetypes {
            check_stochastic(&a.init, self.k_true, "init")?;
            if a.trans.len() != self.k_true || a.emit.len() != self.k_true {
                return Err(Error::invalid_input("archetype matrix row count != k_true"));
            }
            for row in &a.trans {
                check_stochastic(row, self.k_true, "trans")?;
            }
            for row in &a.emit {
                check_stochastic(row, self.n_categories, "emit")?;
            }
        }
        if self.max_sessions == 0 || self.max_clicks_per_session == 0 {
            return Err(Error::invalid_input("zero-click sessions are infeasible"));
        }
        if self.within_gap_range.0 < 1 || self.within_gap_range.1 < self.within_gap_range.0 {
            return Err(Error::invalid_input("bad within-session gap range"));
        }
        Ok(())
    }

    /// The benchmark course: 2000 students, 46 categories, 10 true states,
    /// two archetypes (high graders drift into quiz/forum sessions, low
    /// graders stay with lectures and browsing), label balance near 55/45.
    pub fn default_course(seed: u64) -> Self {
        let k = 10;
        let c = 46;
        let map = CategoryMap::example();
        // Per-state super-group mixes. States 0-3 and 8 form the shared
        // early cluster; 4-7 and 9 are the quiz/forum cluster high graders
        // drift into.
        let group_mix: [[f64; 5]; 10] = [
            // lecture, quiz, forum, class, wiki
            [0.15, 0.03, 0.02, 0.70, 0.10], // 0 browsing
            [0.78, 0.05, 0.02, 0.10, 0.05], // 1 lecture
            [0.70, 0.10, 0.02, 0.13, 0.05], // 2 lecture (second mix)
            [0.65, 0.05, 0.05, 0.15, 0.10], // 3 lecture + reading around
            [0.45, 0.40, 0.03, 0.10, 0.02], // 4 lecture + quiz
            [0.10, 0.75, 0.05, 0.08, 0.02], // 5 quiz
            [0.10, 0.45, 0.35, 0.08, 0.02], // 6 quiz + forum
            [0.05, 0.10, 0.70, 0.10, 0.05], // 7 forum
            [0.20, 0.03, 0.02, 0.35, 0.40], // 8 wiki / browsing
            [0.05, 0.25, 0.45, 0.20, 0.05], // 9 forum + class
        ];
        let emit: Vec<Vec<f64>> = (0..k)
            .map(|s| emission_from_group_mix(&map, &group_mix[s], s))
            .collect();

        let early = [0usize, 1, 2, 3, 8];
        let late = [4usize, 5, 6, 7, 9];
        let shared_init = {
            let mut init = vec![0.0; k];
            init[0] = 0.55;
            init[1] = 0.15;
            init[2] = 0.15;
            init[3] = 0.05;
            init[8] = 0.10;
            init
        };
        // High graders advance from the early cluster into quiz/forum
        // sessions and stay there; low graders rarely leave the early one.
        let high_trans = cluster_transitions(k, &early, &late, 0.30, 0.85);
        let low_trans = cluster_transitions(k, &early, &late, 0.05, 0.30);

        GeneratorSpec {
            seed,
            n_students: 2000,
            n_categories: c,
            k_true: k,
            archetypes: vec![
                ArchetypeSpec {
                    share: 0.5,
                    init: shared_init.clone(),
                    trans: high_trans,
                    emit: emit.clone(),
                    grade: GradeDistribution::Positive {
                        alpha: 5.0,
                        beta: 2.0,
                        scale: 100.0,
                    },
                },
                ArchetypeSpec {
                    share: 0.5,
                    init: shared_init,
                    trans: low_trans,
                    emit,
                    grade: GradeDistribution::ZeroInflated {
                        zero_prob: 0.9,
                        alpha: 2.0,
                        beta: 8.0,
                        scale: 50.0,
                    },
                },
            ],
            course_start_ts: 1_357_000_000,
            join_delay_mean_days: 4.0,
            sessions_log_median: 13.0,
            sessions_log_sd: 1.068,
            max_sessions: 150,
            clicks_log_median: 12.0,
            clicks_log_sd: 0.6,
            max_clicks_per_session: 120,
            within_gap_range: (1, 3600),
            within_gap_log_median: 30.0,
            within_gap_log_sd: 1.2,
            between_gap_mean_days: 1.3,
            raw_variants_per_category: 40,
            use_example_map: true,
        }
    }

    /// Well-separated single-archetype spec with disjoint emission
    /// supports (state j owns its own slice of categories). Used by the
    /// parameter-recovery suites.
    pub fn well_separated(
        k: usize,
        n_categories: usize,
        n_students: usize,
        mean_sessions: f64,
        seed: u64,
    ) -> Self {
        assert!(n_categories >= 2 * k, "need >= 2 categories per state");
        let slice = n_categories / k;
        let emit: Vec<Vec<f64>> = (0..k)
            .map(|s| {
                let mut row = vec![0.0; n_categories];
                let start = s * slice;
                let end = if s + 1 == k {
                    n_categories
                } else {
                    start + slice
                };
                let width = end - start;
                for (offset, slot) in row[start..end].iter_mut().enumerate() {
                    // Mildly peaked within the slice.
                    *slot = (width - offset) as f64;
                }
                let total: f64 = row.iter().sum();
                for v in &mut row {
                    *v /= total;
                }
                row
            })
            .collect();
        let mut init = vec![1.0 / k as f64; k];
        init[0] += 1.0 - init.iter().sum::<f64>();
        let trans: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let mut row = vec![0.25 / (k as f64 - 1.0).max(1.0); k];
                row[i] = 0.75;
                let total: f64 = row.iter().sum();
                for v in &mut row {
                    *v /= total;
                }
                row
            })
            .collect();
        GeneratorSpec {
            seed,
            n_students,
            n_categories,
            k_true: k,
            archetypes: vec![ArchetypeSpec {
                share: 1.0,
                init,
                trans,
                emit,
                grade: GradeDistribution::Positive {
                    alpha: 2.0,
                    beta: 2.0,
                    scale: 100.0,
                },
            }],
            course_start_ts: 1_357_000_000,
            join_delay_mean_days: 2.0,
            sessions_log_median: mean_sessions,
            sessions_log_sd: 0.3,
            max_sessions: 80,
            clicks_log_median: 10.0,
            clicks_log_sd: 0.4,
            max_clicks_per_session: 60,
            within_gap_range: (1, 3600),
            within_gap_log_median: 30.0,
            within_gap_log_sd: 1.0,
            between_gap_mean_days: 1.0,
            raw_variants_per_category: 5,
            use_example_map: false,
        }
    }

    pub fn category_map(&self) -> CategoryMap {
        if self.use_example_map {
            CategoryMap::example()
        } else {
            synthetic_category_map(self.n_categories)
        }
    }
}

fn check_stochastic(row: &[f64], len: usize, what: &str) -> Result<()> {
    if row.len() != len {
        return Err(Error::invalid_input(format!("{what} row length mismatch")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&x| x < 0.0) {
        return Err(Error::invalid_input(format!(
            "{what} row is not stochastic"
        )));
    }
    Ok(())
}

/// Spread a 5-way super-group mix over the map's concrete categories with a
/// geometric falloff inside each group; `rotation` varies the peak between
/// states sharing a group.
fn emission_from_group_mix(map: &CategoryMap, mix: &[f64; 5], rotation: usize) -> Vec<f64> {
    let c = map.n_categories();
    let mut row = vec![0.0; c];
    for (g, group) in SuperGroup::ALL.iter().enumerate() {
        let members: Vec<usize> = (0..c)
            .filter(|&i| map.super_group(i as u32) == *group)
            .collect();
        let m = members.len();
        let mut weights = vec![0.0; m];
        for (j, w) in weights.iter_mut().enumerate() {
            let pos = (j + rotation) % m;
            *w = 0.6f64.powi(pos as i32) + 0.02;
        }
        let total: f64 = weights.iter().sum();
        for (j, &cat) in members.iter().enumerate() {
            row[cat] = mix[g] * weights[j] / total;
        }
    }
    let total: f64 = row.iter().sum();
    for v in &mut row {
        *v /= total;
    }
    row
}

/// Row-stochastic transitions over two state clusters: from the early
/// cluster, advance into the late cluster with `p_advance`; from the late
/// cluster, stay there with `p_stay_late`. Within-cluster mass favors
/// self-transitions.
fn cluster_transitions(
    k: usize,
    early: &[usize],
    late: &[usize],
    p_advance: f64,
    p_stay_late: f64,
) -> Vec<Vec<f64>> {
    let spread = |row: &mut [f64], members: &[usize], mass: f64, this: usize| {
        let self_mass = if members.contains(&this) {
            mass * 0.45
        } else {
            0.0
        };
        let others: Vec<usize> = members.iter().copied().filter(|&m| m != this).collect();
        if members.contains(&this) {
            row[this] += self_mass;
        }
        let rest = mass - self_mass;
        for &m in &others {
            row[m] += rest / others.len() as f64;
        }
    };
    (0..k)
        .map(|i| {
            let mut row = vec![0.0; k];
            if early.contains(&i) {
                spread(&mut row, late, p_advance, i);
                spread(&mut row, early, 1.0 - p_advance, i);
            } else {
                spread(&mut row, late, p_stay_late, i);
                spread(&mut row, early, 1.0 - p_stay_late, i);
            }
            let total: f64 = row.iter().sum();
            for v in &mut row {
                *v /= total;
            }
            row
        })
        .collect()
}

/// A generated category map for non-46-category specs: one prefix per
/// category, super groups assigned round-robin.
pub fn synthetic_category_map(n_categories: usize) -> CategoryMap {
    let categories: Vec<(String, SuperGroup)> = (0..n_categories)
        .map(|c| (format!("cat{c:02}"), SuperGroup::ALL[c % 5]))
        .collect();
    let entries: Vec<(String, String)> = (0..n_categories)
        .map(|c| (format!("cat{c:02}/a"), format!("cat{c:02}")))
        .collect();
    CategoryMap::new(categories, entries, "cat00").expect("synthetic map is valid")
}

/// Ground truth for one generated student.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudentTruth {
    pub student_id: String,
    pub archetype: usize,
    pub grade: f64,
    pub states: Vec<usize>,
    /// Session start timestamps, parallel to `states`.
    pub session_starts: Vec<i64>,
    /// Matched-pair id for order-only courses.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pair: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub course_start_ts: i64,
    pub students: Vec<StudentTruth>,
}

/// A generated course in the ingest module's exchange formats.
#[derive(Clone, Debug)]
pub struct SyntheticCourse {
    pub clickstream_csv: String,
    pub grades_csv: String,
    pub sidecar: GroundTruth,
    pub category_map: CategoryMap,
}

struct Timeline {
    t: i64,
    within_gap: LogNormal<f64>,
    within_range: (i64, i64),
    between_gap: Exp<f64>,
}

impl Timeline {
    fn next_click_gap(&mut self, rng: &mut ChaCha8Rng) -> i64 {
        let raw = self.within_gap.sample(rng).round() as i64;
        raw.clamp(self.within_range.0, self.within_range.1)
    }

    fn next_session_gap(&mut self, rng: &mut ChaCha8Rng) -> i64 {
        3601 + (self.between_gap.sample(rng) * 86_400.0).round() as i64
    }
}

fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

fn lognormal_count(rng: &mut ChaCha8Rng, median: f64, sd: f64, max: usize) -> usize {
    let d = LogNormal::new(median.ln(), sd).expect("lognormal params");
    (d.sample(rng).round() as usize).clamp(1, max)
}

/// Raw click type for a category: the map's prefix plus a long-tailed
/// item-variant suffix, giving many distinct raw types per category.
fn raw_type_for(rng: &mut ChaCha8Rng, map: &CategoryMap, category: usize, variants: u32) -> String {
    let prefix = map
        .prefix_for(category as u32)
        .expect("every category has a prefix");
    let mut v = 0u32;
    while v + 1 < variants && rng.gen::<f64>() < 0.55 {
        v += 1;
    }
    format!("{prefix}?item={v}")
}

/// Generate one course: clickstream CSV, grades CSV, and the ground-truth
/// sidecar. Deterministic for a fixed spec (per-student derived seeds).
pub fn generate_course(spec: &GeneratorSpec) -> Result<SyntheticCourse> {
    spec.validate()?;
    let map = spec.category_map();
    if map.n_categories() != spec.n_categories {
        return Err(Error::invalid_input(format!(
            "category map size {} != spec n_categories {}",
            map.n_categories(),
            spec.n_categories
        )));
    }

    let mut clicks = String::from("student_id,timestamp,click_type\n");
    let mut grades = String::from("student_id,grade\n");
    let mut students = Vec::with_capacity(spec.n_students);

    for i in 0..spec.n_students {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, i as u64));
        let student_id = format!("s{i:05}");

        let archetype = {
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            let mut chosen = spec.archetypes.len() - 1;
            for (a, arch) in spec.archetypes.iter().enumerate() {
                cum += arch.share;
                if u < cum {
                    chosen = a;
                    break;
                }
            }
            chosen
        };
        let arch = &spec.archetypes[archetype];

        let n_sessions = lognormal_count(
            &mut rng,
            spec.sessions_log_median,
            spec.sessions_log_sd,
            spec.max_sessions,
        );
        let mut states: Vec<usize> = Vec::with_capacity(n_sessions);
        for t in 0..n_sessions {
            let s = if t == 0 {
                sample_categorical(&mut rng, &arch.init)
            } else {
                sample_categorical(&mut rng, &arch.trans[states[t - 1]])
            };
            states.push(s);
        }

        let join_delay = Exp::new(1.0 / spec.join_delay_mean_days.max(1e-9))
            .expect("exp rate")
            .sample(&mut rng);
        let mut timeline = Timeline {
            t: spec.course_start_ts + (join_delay * 86_400.0).round() as i64,
            within_gap: LogNormal::new(spec.within_gap_log_median.ln(), spec.within_gap_log_sd)
                .expect("lognormal params"),
            within_range: spec.within_gap_range,
            between_gap: Exp::new(1.0 / spec.between_gap_mean_days.max(1e-9)).expect("exp rate"),
        };

        let mut session_starts = Vec::with_capacity(n_sessions);
        for (t, &state) in states.iter().enumerate() {
            if t > 0 {
                timeline.t += timeline.next_session_gap(&mut rng);
            }
            session_starts.push(timeline.t);
            let n_clicks = lognormal_count(
                &mut rng,
                spec.clicks_log_median,
                spec.clicks_log_sd,
                spec.max_clicks_per_session,
            );
            for c in 0..n_clicks {
                if c > 0 {
                    timeline.t += timeline.next_click_gap(&mut rng);
                }
                let category = sample_categorical(&mut rng, &arch.emit[state]);
                let raw = raw_type_for(&mut rng, &map, category, spec.raw_variants_per_category);
                clicks.push_str(&format!("{student_id},{},{raw}\n", timeline.t));
            }
        }

        let grade = arch.grade.sample(&mut rng);
        grades.push_str(&format!("{student_id},{grade}\n"));
        students.push(StudentTruth {
            student_id,
            archetype,
            grade,
            states,
            session_starts,
            pair: None,
        });
    }

    Ok(SyntheticCourse {
        clickstream_csv: clicks,
        grades_csv: grades,
        sidecar: GroundTruth {
            seed: spec.seed,
            course_start_ts: spec.course_start_ts,
            students,
        },
        category_map: map,
    })
}

/// Spec for the order-only matched-pair dataset: both members of a pair
/// share the same multiset of session types; class 1 runs quiz-type
/// sessions first, class 0 runs lecture-type sessions first.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderOnlySpec {
    pub seed: u64,
    pub n_pairs: usize,
    /// Sessions of each type per pair, sampled uniformly in this range.
    pub sessions_per_type: (usize, usize),
    pub clicks_log_median: f64,
    pub clicks_log_sd: f64,
    pub max_clicks_per_session: usize,
    pub course_start_ts: i64,
}

impl Default for OrderOnlySpec {
    fn default() -> Self {
        OrderOnlySpec {
            seed: 0,
            n_pairs: 1000,
            sessions_per_type: (3, 8),
            clicks_log_median: 14.0,
            clicks_log_sd: 0.4,
            max_clicks_per_session: 80,
            course_start_ts: 1_357_000_000,
        }
    }
}

/// The order-only dataset uses four categories: two quiz-flavored and two
/// lecture-flavored, with disjoint session-type supports.
pub fn order_only_category_map() -> CategoryMap {
    synthetic_category_map(4)
}

const ORDER_ONLY_EMITS: [[f64; 4]; 2] = [
    [0.65, 0.35, 0.0, 0.0], // quiz-type sessions
    [0.0, 0.0, 0.65, 0.35], // lecture-type sessions
];

/// Generate the matched-pair course. Student `p2i(p)a` (class 1, quiz
/// first) and `p2i(p)b` (class 0, the reverse order) share session-type
/// counts exactly, so any count-based feature is identical within a pair.
pub fn generate_order_only_pair(spec: &OrderOnlySpec) -> Result<SyntheticCourse> {
    if spec.n_pairs == 0 {
        return Err(Error::invalid_input("need at least one pair"));
    }
    if spec.sessions_per_type.0 < 1 || spec.sessions_per_type.1 < spec.sessions_per_type.0 {
        return Err(Error::invalid_input("bad sessions_per_type range"));
    }
    let map = order_only_category_map();
    let mut clicks = String::from("student_id,timestamp,click_type\n");
    let mut grades = String::from("student_id,grade\n");
    let mut students = Vec::with_capacity(spec.n_pairs * 2);

    for p in 0..spec.n_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, p as u64));
        let n_quiz = rng.gen_range(spec.sessions_per_type.0..=spec.sessions_per_type.1);
        let n_lecture = rng.gen_range(spec.sessions_per_type.0..=spec.sessions_per_type.1);

        for (member, class) in [("a", 1u8), ("b", 0u8)] {
            let student_id = format!("p{p:05}{member}");
            // Session types: class 1 = quiz block then lecture block,
            // class 0 = the reverse. Same multiset either way.
            let types: Vec<usize> = if class == 1 {
                std::iter::repeat(0)
                    .take(n_quiz)
                    .chain(std::iter::repeat(1).take(n_lecture))
                    .collect()
            } else {
                std::iter::repeat(1)
                    .take(n_lecture)
                    .chain(std::iter::repeat(0).take(n_quiz))
                    .collect()
            };
            let mut member_rng =
                ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, (p as u64) << 1 | (class as u64)));
            let mut timeline = Timeline {
                t: spec.course_start_ts
                    + (Exp::new(0.5f64).expect("exp rate").sample(&mut member_rng) * 86_400.0)
                        .round() as i64,
                within_gap: LogNormal::new(20.0f64.ln(), 0.8).expect("lognormal params"),
                within_range: (1, 3600),
                between_gap: Exp::new(1.0).expect("exp rate"),
            };
            let mut session_starts = Vec::with_capacity(types.len());
            for (t, &ty) in types.iter().enumerate() {
                if t > 0 {
                    timeline.t += timeline.next_session_gap(&mut member_rng);
                }
                session_starts.push(timeline.t);
                let n_clicks = lognormal_count(
                    &mut member_rng,
                    spec.clicks_log_median,
                    spec.clicks_log_sd,
                    spec.max_clicks_per_session,
                );
                for c in 0..n_clicks {
                    if c > 0 {
                        timeline.t += timeline.next_click_gap(&mut member_rng);
                    }
                    let category = sample_categorical(&mut member_rng, &ORDER_ONLY_EMITS[ty]);
                    let raw = raw_type_for(&mut member_rng, &map, category, 6);
                    clicks.push_str(&format!("{student_id},{},{raw}\n", timeline.t));
                }
            }
            let grade = if class == 1 { 80.0 } else { 0.0 };
            grades.push_str(&format!("{student_id},{grade}\n"));
            students.push(StudentTruth {
                student_id,
                archetype: class as usize,
                grade,
                states: types,
                session_starts,
                pair: Some(p as u64),
            });
        }
    }

    Ok(SyntheticCourse {
        clickstream_csv: clicks,
        grades_csv: grades,
        sidecar: GroundTruth {
            seed: spec.seed,
            course_start_ts: spec.course_start_ts,
            students,
        },
        category_map: map,
    })
}
