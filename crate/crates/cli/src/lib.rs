//! Library surface of the `moocflow` command-line tool, exposed so the
//! integration and acceptance suites can drive the same code paths.

pub mod commands;
pub mod config;
pub mod data;
pub mod plot;
pub mod runs;

pub use config::RunConfig;

/// Format-version identifiers for every emitted file kind.
pub const FORMAT_VERSIONS: &[(&str, u32)] = &[
    ("clickstream_csv", 1),
    ("grades_csv", 1),
    ("category_map_csv", 1),
    ("behavior_model_json", 1),
    ("classifier_json", 1),
    ("feature_dump_csv", 1),
    ("ngram_report_csv", 1),
    ("training_log_csv", 1),
    ("results_csv", 1),
    ("significance_csv", 1),
    ("ground_truth_json", 1),
    ("fit_trace_csv", 1),
    ("plot_svg", 1),
    ("config_echo", 1),
];
