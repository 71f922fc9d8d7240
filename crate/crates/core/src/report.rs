//! Renderers for run artifacts. Every function here is a pure function of
//! its arguments, so identical runs give byte-identical files.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::corpus::Summary;
use crate::curate::{RcCurve, Scored, ScoredSet, SweepRow};
use crate::error::{Error, LineError, Result};
use crate::eval::{FoldCounts, MetricReport};

pub const SWEEP_HEADER: &str = "threshold,p_y_lt_0,p_y_0_05,p_y_ge_1,throwout_rate,good_to_bad_ratio,n_accepted";

/// Four decimals, or `nan`.
pub fn fmt4(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.4}")
    }
}

fn fmt_full(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x}")
    }
}

pub fn sweep_row_line(r: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        fmt_full(r.threshold),
        fmt4(r.p_neg),
        fmt4(r.p_mid),
        fmt4(r.p_good),
        fmt4(r.throwout),
        fmt4(r.ratio),
        r.n_accepted
    )
}

pub fn render_sweep_csv(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("no sweep rows to render"));
    }
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&sweep_row_line(r));
        s.push('\n');
    }
    Ok(s)
}

fn parse_cell(cell: &str) -> std::result::Result<f64, String> {
    match cell.trim() {
        "nan" => Ok(f64::NAN),
        c => c.parse().map_err(|_| format!("'{c}' is not a number")),
    }
}

/// Inverse of [`render_sweep_csv`], up to the 4-decimal rounding.
pub fn parse_sweep_csv(text: &str, path: &Path) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    let mut errors = Vec::new();
    if lines.next() != Some(SWEEP_HEADER) {
        errors.push(LineError {
            line: 1,
            message: format!("expected header {SWEEP_HEADER}"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let parsed = (|| {
            if cells.len() != 7 {
                return Err(format!("expected 7 cells, got {}", cells.len()));
            }
            let f: Vec<f64> = cells[..6].iter().map(|c| parse_cell(c)).collect::<std::result::Result<_, _>>()?;
            let n = cells[6].trim().parse::<usize>().map_err(|_| "bad n_accepted".to_string())?;
            Ok(SweepRow {
                threshold: f[0],
                p_neg: f[1],
                p_mid: f[2],
                p_good: f[3],
                throwout: f[4],
                ratio: f[5],
                n_accepted: n,
            })
        })();
        match parsed {
            Ok(r) => rows.push(r),
            Err(message) => errors.push(LineError { line: i + 2, message }),
        }
    }
    if errors.is_empty() {
        Ok(rows)
    } else {
        Err(Error::Input {
            path: path.to_path_buf(),
            errors,
        })
    }
}

pub fn render_rcc_csv(curve: &RcCurve) -> String {
    let mut s = String::from("throwout,ratio\n");
    for (x, y) in &curve.points {
        let _ = writeln!(s, "{},{}", fmt_full(*x), fmt_full(*y));
    }
    s
}

pub fn render_predictions_csv(scored: &ScoredSet) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::invalid(format!("writing predictions: {e}"));
    w.write_record(["context_id", "score", "gold"]).map_err(to_err)?;
    for e in scored.entries() {
        w.write_record([e.id.as_str(), &fmt_full(e.score), &fmt_full(e.gold)])
            .map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("writing predictions: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads `context_id,score,gold`, reporting every bad line.
pub fn read_predictions_csv<R: Read>(reader: R, path: &Path) -> Result<ScoredSet> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let mut errors = Vec::new();
    match rdr.headers() {
        Ok(h) if h.iter().eq(["context_id", "score", "gold"]) => {}
        _ => errors.push(LineError {
            line: 1,
            message: "expected header context_id,score,gold".into(),
        }),
    }
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let parsed = rec.map_err(|e| e.to_string()).and_then(|r| {
            if r.len() != 3 {
                return Err(format!("expected 3 cells, got {}", r.len()));
            }
            let score = parse_cell(&r[1])?;
            let gold = parse_cell(&r[2])?;
            if !score.is_finite() || !gold.is_finite() {
                return Err("score and gold must be finite".into());
            }
            Ok(Scored {
                id: r[0].to_string(),
                score,
                gold,
            })
        });
        match parsed {
            Ok(s) if !seen.insert(s.id.clone()) => errors.push(LineError {
                line,
                message: format!("duplicate context id '{}'", s.id),
            }),
            Ok(s) => entries.push(s),
            Err(message) => errors.push(LineError { line, message }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Input {
            path: path.to_path_buf(),
            errors,
        });
    }
    ScoredSet::new(entries)
}

pub const METRICS_HEADER: &str = "model,n,rmse,r2,pearson_r,spearman_rho";

pub fn render_metrics_csv(rows: &[(&str, MetricReport)]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for (name, m) in rows {
        let _ = writeln!(
            s,
            "{name},{},{},{},{},{}",
            m.n,
            fmt4(m.rmse),
            fmt4(m.r2),
            fmt4(m.pearson_r),
            fmt4(m.spearman_rho)
        );
    }
    s
}

/// Model x (RMSE, R²) table. The prior-work random-forest row is a fixed
/// published reference, never recomputed.
pub fn render_metrics_md(rows: &[(&str, MetricReport)]) -> String {
    let mut s = String::from("| Model | RMSE | R² |\n|---|---:|---:|\n");
    for (name, m) in rows {
        let _ = writeln!(s, "| {name} | {:.2} | {:.2} |", m.rmse, m.r2);
    }
    s.push_str("| RF, prior work (published reference, not recomputed) | 0.36 | 0.18 |\n");
    s
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Standalone SVG with one polyline per curve, the AUC of each in the
/// legend, and a dashed vertical marker at `reference_throwout`.
pub fn render_rcc_svg(curves: &[(&str, &RcCurve)], reference_throwout: f64) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::invalid("no curves to plot"));
    }
    if let Some((name, _)) = curves.iter().find(|(_, c)| c.points.len() < 2) {
        return Err(Error::invalid(format!("curve '{name}' has fewer than 2 points")));
    }
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 20.0, 20.0, 55.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let y_max = curves
        .iter()
        .flat_map(|(_, c)| c.points.iter().map(|p| p.1))
        .fold(0.0f64, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let sx = |x: f64| left + x.clamp(0.0, 1.0) * pw;
    let sy = |y: f64| top + ph - (y / y_max).clamp(0.0, 1.0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    // axes and ticks
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}"/></g>"#,
        l = left,
        r = left + pw,
        t = top,
        b = top + ph
    );
    for i in 0..=5 {
        let fx = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.1}</text>"#,
            sx(fx),
            top + ph + 16.0,
            fx
        );
        let fy = y_max * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
            left - 6.0,
            sy(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">throwout rate</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">good-to-bad ratio</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    // reference marker
    let rx = sx(reference_throwout);
    let _ = writeln!(
        s,
        r#"<line class="reference" x1="{rx:.1}" y1="{top:.1}" x2="{rx:.1}" y2="{:.1}" stroke="gray" stroke-dasharray="4 3"/>"#,
        top + ph
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" fill="gray">{:.0}% throwout</text>"#,
        rx + 4.0,
        top + 12.0,
        reference_throwout * 100.0
    );
    for (i, (name, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 14.0 + 16.0 * i as f64;
        let lx = left + 12.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{} (AUC={:.1})</text></g>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            lx + 24.0,
            ly,
            xml_escape(name),
            curve.auc
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Everything the markdown report shows. Each number also exists in one of
/// the CSV files beside it.
#[derive(Debug, Clone)]
pub struct RunReport<'a> {
    pub model_spec: String,
    pub summary: &'a Summary,
    pub config_toml: &'a str,
    pub seed: u64,
    pub sweep: &'a [SweepRow],
    pub curve: Option<&'a RcCurve>,
    pub reference: Option<SweepRow>,
    pub reference_throwout: f64,
    pub metrics: &'a [(&'a str, MetricReport)],
    pub folds: &'a [FoldCounts],
    pub warnings: &'a [String],
}

pub fn render_report_md(run: &RunReport<'_>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Context curation run: {}\n", run.model_spec);
    let _ = writeln!(s, "Seed: {}\n", run.seed);
    s.push_str("## Corpus\n\n```text\n");
    s.push_str(&run.summary.render());
    s.push_str("\n```\n\n");

    s.push_str("## Folds\n\n| fold | train | test |\n|---:|---:|---:|\n");
    for f in run.folds {
        let _ = writeln!(s, "| {} | {} | {} |", f.fold, f.n_train, f.n_test);
    }
    s.push_str("\nAssignment: [folds.csv](folds.csv). Predictions: [predictions.csv](predictions.csv).\n\n");

    let _ = writeln!(s, "## Reference point ({:.0}% throwout)\n", run.reference_throwout * 100.0);
    match &run.reference {
        Some(r) => {
            s.push_str("| threshold | throwout rate | good-to-bad ratio | # accepted |\n|---:|---:|---:|---:|\n");
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |\n",
                fmt_full(r.threshold),
                fmt4(r.throwout),
                fmt4(r.ratio),
                r.n_accepted
            );
        }
        None => s.push_str("No sweep rows.\n\n"),
    }

    s.push_str("## Threshold sweep\n\n");
    s.push_str("| threshold | P(Y<0) | P(Y∈[0,0.5)) | P(Y≥1) | throwout rate | good-to-bad ratio | # accepted |\n");
    s.push_str("|---:|---:|---:|---:|---:|---:|---:|\n");
    let n = run.sweep.len();
    let excerpt: Vec<usize> = if n <= 12 {
        (0..n).collect()
    } else {
        (0..5).chain(n - 5..n).collect()
    };
    for (j, &i) in excerpt.iter().enumerate() {
        if j > 0 && i != excerpt[j - 1] + 1 {
            s.push_str("| … | | | | | | |\n");
        }
        let r = &run.sweep[i];
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} |",
            fmt_full(r.threshold),
            fmt4(r.p_neg),
            fmt4(r.p_mid),
            fmt4(r.p_good),
            fmt4(r.throwout),
            fmt4(r.ratio),
            r.n_accepted
        );
    }
    s.push_str("\nFull table: [sweep.csv](sweep.csv).\n\n");

    s.push_str("## Retention-competency curve\n\n");
    match run.curve {
        Some(c) => {
            let _ = writeln!(
                s,
                "AUC = {} over {} points. Points: [rcc.csv](rcc.csv). Plot: [rcc.svg](rcc.svg).\n",
                fmt4(c.auc),
                c.points.len()
            );
        }
        None => s.push_str("Not enough finite points for a curve.\n\n"),
    }

    s.push_str("## Regression metrics\n\n");
    s.push_str(&render_metrics_md(run.metrics));
    s.push_str("\nR² uses the evaluated set's own gold mean as the baseline.\n\n");
    s.push_str("## Correlation\n\n| model | Pearson r | Spearman ρ |\n|---|---:|---:|\n");
    for (name, m) in run.metrics {
        let _ = writeln!(s, "| {name} | {} | {} |", fmt4(m.pearson_r), fmt4(m.spearman_rho));
    }
    s.push_str("\nFull metrics: [metrics.csv](metrics.csv).\n\n");

    if !run.warnings.is_empty() {
        s.push_str("## Warnings\n\n");
        for w in run.warnings {
            let _ = writeln!(s, "- {w}");
        }
        s.push('\n');
    }

    s.push_str("## Configuration\n\n```toml\n");
    s.push_str(run.config_toml);
    if !run.config_toml.ends_with('\n') {
        s.push('\n');
    }
    s.push_str("```\n");
    s
}

/// Writes `contents` to `dir/name`.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(&path, e))
}
