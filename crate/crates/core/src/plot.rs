//! Standalone SVG charts rendered straight from the results CSV; no
//! display server or external plotting dependency.

use std::path::{Path, PathBuf};

use crate::error::{JsdmError, Result};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 220.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
    "#bcbd22", "#7f7f7f",
];

#[derive(Debug, Clone)]
struct Row {
    scenario: String,
    scheme: String,
    k: f64,
    param_alpha: String,
    param_gamma: String,
    rate: f64,
    feedback: f64,
}

fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| JsdmError::Config("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let idx = |name: &str| -> Result<usize> {
        cols.iter()
            .position(|&c| c == name)
            .ok_or_else(|| JsdmError::Config(format!("CSV missing column {name}")))
    };
    let (i_sc, i_sch, i_k, i_a, i_g, i_rate, i_fb) = (
        idx("scenario")?,
        idx("scheme")?,
        idx("K")?,
        idx("param_alpha")?,
        idx("param_gamma")?,
        idx("mean_sum_rate_bits")?,
        idx("mean_feedback_units")?,
    );
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| JsdmError::Config(format!("CSV line {}: bad number {s:?}", n + 2)))
        };
        rows.push(Row {
            scenario: f[i_sc].to_string(),
            scheme: f[i_sch].to_string(),
            k: parse(f[i_k])?,
            param_alpha: f[i_a].to_string(),
            param_gamma: f[i_g].to_string(),
            rate: parse(f[i_rate])?,
            feedback: parse(f[i_fb])?,
        });
    }
    Ok(rows)
}

fn series_key(r: &Row) -> String {
    let mut key = format!("{} {}", r.scenario, r.scheme);
    if !r.param_alpha.is_empty() {
        key.push_str(&format!(" a={}", r.param_alpha));
    }
    if !r.param_gamma.is_empty() {
        key.push_str(&format!(" g={}", r.param_gamma));
    }
    key
}

fn render_chart(title: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.0))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.1))
        .collect();
    let (x_lo, x_hi) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(1.0, f64::max),
    );
    let (mut y_lo, mut y_hi) = (
        ys.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0),
        ys.iter().cloned().fold(0.0, f64::max),
    );
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    y_hi *= 1.05;
    y_lo *= if y_lo < 0.0 { 1.05 } else { 1.0 };
    let log_x = x_hi / x_lo.max(1e-12) > 20.0;
    let tx = |x: f64| -> f64 {
        let (a, b) = if log_x {
            (x_lo.ln(), x_hi.ln())
        } else {
            (x_lo, x_hi)
        };
        let v = if log_x { x.ln() } else { x };
        let span = (b - a).max(1e-12);
        MARGIN_L + (v - a) / span * (WIDTH - MARGIN_L - MARGIN_R)
    };
    let ty = |y: f64| -> f64 {
        HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B)
    };
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        title
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
    // Tick labels and gridlines.
    for i in 0..=5 {
        let y = y_lo + (y_hi - y_lo) * i as f64 / 5.0;
        let py = ty(y);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{py:.1}\" x2=\"{}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>\n",
            WIDTH - MARGIN_R
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{y:.1}</text>\n",
            MARGIN_L - 6.0,
            py + 4.0
        ));
    }
    let mut x_ticks: Vec<f64> = xs.clone();
    x_ticks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    x_ticks.dedup();
    for &x in &x_ticks {
        let px = tx(x);
        svg.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{x}</text>\n",
            HEIGHT - MARGIN_B + 18.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">K</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        y_label
    ));
    // Series polylines, markers, legend.
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", tx(x), ty(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            path.join(" ")
        ));
        for &(x, y) in pts {
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                tx(x),
                ty(y)
            ));
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 34.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{name}</text>\n",
            WIDTH - MARGIN_R + 40.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Renders one chart for the sum rate and one for the feedback load from
/// a results CSV. Returns the written file paths.
pub fn plot_csv(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(csv_path)?;
    let rows = parse_csv(&text)?;
    if rows.is_empty() {
        return Err(JsdmError::Config("CSV contains no data rows".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    let mut outputs = Vec::new();
    for (suffix, y_label, pick) in [
        (
            "rate",
            "mean sum rate [bits/channel use]",
            (|r: &Row| r.rate) as fn(&Row) -> f64,
        ),
        ("feedback", "mean feedback [units]", |r: &Row| r.feedback),
    ] {
        // Stable series order: first appearance in the file.
        let mut order: Vec<String> = Vec::new();
        for r in &rows {
            let key = series_key(r);
            if !order.contains(&key) {
                order.push(key);
            }
        }
        let series: Vec<(String, Vec<(f64, f64)>)> = order
            .iter()
            .map(|key| {
                let mut pts: Vec<(f64, f64)> = rows
                    .iter()
                    .filter(|r| &series_key(r) == key)
                    .map(|r| (r.k, pick(r)))
                    .collect();
                pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                (key.clone(), pts)
            })
            .collect();
        let svg = render_chart(stem, y_label, &series);
        let path = out_dir.join(format!("{stem}-{suffix}.svg"));
        std::fs::write(&path, svg)?;
        outputs.push(path);
    }
    Ok(outputs)
}
