//! Record and profile emission: CSV (round-trippable, byte-deterministic)
//! and a self-contained SVG chart for profile curves.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use almton::diagnostics::AuditReport;

use crate::profile::ProfileCurve;
use crate::{BenchError, Result, TrialRecord};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Render trial records as CSV with the fixed header
/// `problem,start_0..start_{d-1},solver,success,metric,reason,grad_norm,seed`.
/// All records must share one dimension.
pub fn records_to_csv(records: &[TrialRecord]) -> Result<String> {
    let dim = records.first().map(|r| r.start.len()).unwrap_or(2);
    if records.iter().any(|r| r.start.len() != dim) {
        return Err(BenchError::Config(
            "records mix start dimensions; emit them separately".into(),
        ));
    }
    let mut out = String::from("problem");
    for i in 0..dim {
        write!(out, ",start_{i}").expect("string write");
    }
    out.push_str(",solver,success,metric,reason,grad_norm,seed\n");
    for r in records {
        out.push_str(&r.problem);
        for v in &r.start {
            write!(out, ",{}", fmt_f64(*v)).expect("string write");
        }
        writeln!(
            out,
            ",{},{},{},{},{},{}",
            r.solver,
            r.success,
            fmt_f64(r.metric),
            r.reason,
            fmt_f64(r.grad_norm),
            r.seed
        )
        .expect("string write");
    }
    Ok(out)
}

pub fn write_records_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    fs::write(path, records_to_csv(records)?).map_err(io_err(path))
}

fn parse_f64(field: &str, line_no: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| BenchError::Parse(format!("line {line_no}: bad float `{field}`")))
}

/// Parse records back from CSV text, skipping `#`-prefixed comment rows
/// (audit appendices).
pub fn records_from_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| BenchError::Parse("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let dim = cols
        .iter()
        .filter(|c| c.starts_with("start_"))
        .count();
    if dim == 0 || cols.len() != dim + 7 {
        return Err(BenchError::Parse(format!("unrecognized header `{header}`")));
    }
    let mut records = Vec::new();
    for (no, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != dim + 7 {
            return Err(BenchError::Parse(format!(
                "line {no}: expected {} fields, got {}",
                dim + 7,
                f.len()
            )));
        }
        let start = f[1..1 + dim]
            .iter()
            .map(|s| parse_f64(s, no))
            .collect::<Result<Vec<f64>>>()?;
        records.push(TrialRecord {
            problem: f[0].to_string(),
            start,
            solver: f[1 + dim].to_string(),
            success: f[2 + dim] == "true",
            metric: parse_f64(f[3 + dim], no)?,
            reason: f[4 + dim].to_string(),
            grad_norm: parse_f64(f[5 + dim], no)?,
            seed: f[6 + dim]
                .parse()
                .map_err(|_| BenchError::Parse(format!("line {no}: bad seed")))?,
        });
    }
    Ok(records)
}

pub fn read_records_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    records_from_csv(&text)
}

/// Append audit rows to an existing run CSV as comment lines, so the file
/// still parses as records.
pub fn append_audit_rows(path: &Path, report: &AuditReport) -> Result<()> {
    let mut text = fs::read_to_string(path).map_err(io_err(path))?;
    if !text.ends_with('\n') {
        text.push('\n');
    }
    for row in report.csv_rows() {
        text.push_str(&row);
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Profile curves as long-format CSV: `solver,tau,rho`.
pub fn profiles_to_csv(curves: &[ProfileCurve]) -> String {
    let mut out = String::from("solver,tau,rho\n");
    for c in curves {
        for (tau, rho) in c.taus.iter().zip(&c.rho) {
            writeln!(out, "{},{},{}", c.solver, fmt_f64(*tau), fmt_f64(*rho))
                .expect("string write");
        }
    }
    out
}

pub fn write_profiles_csv(path: &Path, curves: &[ProfileCurve]) -> Result<()> {
    fs::write(path, profiles_to_csv(curves)).map_err(io_err(path))
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Render profile curves as a self-contained SVG step chart with a log-scale
/// ratio axis.
pub fn profiles_to_svg(curves: &[ProfileCurve]) -> String {
    let (w, h) = (760.0, 480.0);
    let (ml, mr, mt, mb) = (60.0, 180.0, 20.0, 50.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;

    let tau_max = curves
        .iter()
        .flat_map(|c| c.taus.iter())
        .copied()
        .fold(1.0f64, f64::max)
        .max(10.0);
    let log_max = tau_max.log10();
    let x_of = |tau: f64| ml + plot_w * (tau.max(1.0).log10() / log_max).min(1.0);
    let y_of = |rho: f64| mt + plot_h * (1.0 - rho);

    let mut svg = String::new();
    write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .expect("string write");
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);

    // Axes.
    write!(
        svg,
        r#"<line x1="{ml}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{ml}" y1="{mt}" x2="{ml}" y2="{y0}" stroke="black"/>"#,
        y0 = mt + plot_h,
        x1 = ml + plot_w,
    )
    .expect("string write");

    // Log-decade ticks on the ratio axis.
    let mut decade = 1.0f64;
    while decade <= tau_max * (1.0 + 1e-12) {
        let x = x_of(decade);
        write!(
            svg,
            r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="black"/><text x="{x}" y="{yt}" font-size="12" text-anchor="middle">{decade}</text>"#,
            y0 = mt + plot_h,
            y1 = mt + plot_h + 6.0,
            yt = mt + plot_h + 22.0,
        )
        .expect("string write");
        decade *= 10.0;
    }
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let y = y_of(frac);
        write!(
            svg,
            r#"<line x1="{x0}" y1="{y}" x2="{ml}" y2="{y}" stroke="black"/><text x="{xt}" y="{yt}" font-size="12" text-anchor="end">{frac}</text>"#,
            x0 = ml - 6.0,
            xt = ml - 10.0,
            yt = y + 4.0,
        )
        .expect("string write");
    }
    write!(
        svg,
        r#"<text x="{x}" y="{y}" font-size="13" text-anchor="middle">performance ratio (log scale)</text>"#,
        x = ml + plot_w / 2.0,
        y = h - 10.0,
    )
    .expect("string write");

    // Step curves.
    for (idx, curve) in curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = String::new();
        let mut prev_rho = 0.0;
        write!(points, "{},{} ", x_of(1.0), y_of(0.0)).expect("string write");
        for (tau, rho) in curve.taus.iter().zip(&curve.rho) {
            write!(points, "{},{} ", x_of(*tau), y_of(prev_rho)).expect("string write");
            write!(points, "{},{} ", x_of(*tau), y_of(*rho)).expect("string write");
            prev_rho = *rho;
        }
        write!(points, "{},{}", ml + plot_w, y_of(prev_rho)).expect("string write");
        write!(
            svg,
            r#"<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.8"/>"#
        )
        .expect("string write");
        let ly = mt + 16.0 + 18.0 * idx as f64;
        write!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{lx2}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{lt}" y="{lyt}" font-size="12">{name}</text>"#,
            lx = ml + plot_w + 12.0,
            lx2 = ml + plot_w + 36.0,
            lt = ml + plot_w + 42.0,
            lyt = ly + 4.0,
            name = curve.solver,
        )
        .expect("string write");
    }
    svg.push_str("</svg>");
    svg
}

pub fn write_profiles_svg(path: &Path, curves: &[ProfileCurve]) -> Result<()> {
    fs::write(path, profiles_to_svg(curves)).map_err(io_err(path))
}
