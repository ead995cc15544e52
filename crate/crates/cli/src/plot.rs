//! Accuracy-vs-prefix SVG line charts from a results table, one chart per
//! dimension with one polyline per (feature set, model) series.

use std::collections::BTreeMap;

use moocflow_core::evaluation::{ExperimentCell, SplitKind};
use moocflow_core::features::PrefixValue;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#17becf",
];

fn value_order(values: &mut Vec<PrefixValue>) {
    values.sort_by_key(|v| match v {
        PrefixValue::Value(n) => (*n as i64, 0),
        PrefixValue::All => (i64::MAX, 1),
    });
    values.dedup();
}

/// Render every dimension found in `cells` (test and transfer rows) as a
/// chart. Returns (file name, svg text) pairs.
pub fn plot_results(cells: &[ExperimentCell]) -> Vec<(String, String)> {
    let mut by_dimension: BTreeMap<String, Vec<&ExperimentCell>> = BTreeMap::new();
    for cell in cells {
        if matches!(cell.split, SplitKind::Test | SplitKind::Transfer) {
            by_dimension
                .entry(cell.dimension.to_string())
                .or_default()
                .push(cell);
        }
    }
    by_dimension
        .into_iter()
        .map(|(dim, cells)| {
            let svg = render_dimension(&dim, &cells);
            (format!("accuracy_vs_{dim}.svg"), svg)
        })
        .collect()
}

fn render_dimension(dimension: &str, cells: &[&ExperimentCell]) -> String {
    let mut values: Vec<PrefixValue> = cells.iter().map(|c| c.value).collect();
    value_order(&mut values);
    let x_of = |v: &PrefixValue| -> f64 {
        let idx = values.iter().position(|u| u == v).unwrap_or(0);
        let span = (values.len().max(2) - 1) as f64;
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * idx as f64 / span
    };

    let mut series: BTreeMap<String, Vec<(PrefixValue, f64)>> = BTreeMap::new();
    for cell in cells {
        series
            .entry(format!(
                "{} {} ({})",
                cell.feature_set, cell.model, cell.split
            ))
            .or_default()
            .push((cell.value, cell.accuracy));
    }

    let accs: Vec<f64> = cells.iter().map(|c| c.accuracy).collect();
    let y_min = (accs.iter().copied().fold(f64::INFINITY, f64::min) - 0.05).max(0.0);
    let y_max = (accs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 0.05).min(1.0);
    let y_span = (y_max - y_min).max(1e-6);
    let y_of = |acc: f64| -> f64 {
        HEIGHT - MARGIN_B - (HEIGHT - MARGIN_T - MARGIN_B) * (acc - y_min) / y_span
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"15\">accuracy vs {dimension}</text>\n",
        MARGIN_L
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    // X ticks.
    for v in &values {
        let x = x_of(v);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{v}</text>\n",
            HEIGHT - MARGIN_B + 20.0
        ));
    }
    // Y ticks at tenths inside the range.
    let mut tick = (y_min * 10.0).ceil() / 10.0;
    while tick <= y_max + 1e-9 {
        let y = y_of(tick);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{tick:.1}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0
        ));
        tick += 0.1;
    }

    for (i, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut ordered: Vec<(PrefixValue, f64)> = points.clone();
        ordered.sort_by_key(|(v, _)| values.iter().position(|u| u == v).unwrap_or(0));
        let coords: Vec<String> = ordered
            .iter()
            .map(|(v, acc)| format!("{:.2},{:.2}", x_of(v), y_of(*acc)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            coords.join(" ")
        ));
        for (v, acc) in &ordered {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                x_of(v),
                y_of(*acc)
            ));
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            WIDTH - MARGIN_R + 12.0,
            ly
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>\n",
            WIDTH - MARGIN_R + 28.0,
            ly + 9.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
