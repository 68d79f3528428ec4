//! CSV parsing and figure generation: per-method calibration plots, the
//! all-methods overlay, and the efficiency-vs-dimension panel.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;

use lrps_core::proposals::ProposalKind;

use crate::calibrate::{CSV_HEADER, CSV_SCHEMA_LINE};
use crate::svg::{Marker, Plot, MARKERS, PALETTE};
use crate::{fail, EXIT_OK};

#[derive(Args)]
pub struct ReportArgs {
    /// Calibration CSV produced by `lrpslab calibrate`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Directory for the SVG figures (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub method: String,
    pub geometry: String,
    pub d: usize,
    pub n_steps: usize,
    pub mean_evals_per_iter: f64,
    pub accepted: bool,
}

/// Parse a calibration CSV, reporting the 1-based line number on any defect.
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, line)) if line == CSV_SCHEMA_LINE => {}
        Some((i, line)) => {
            return Err(format!(
                "line {}: expected `{CSV_SCHEMA_LINE}`, found `{line}`",
                i + 1
            ))
        }
        None => return Err("line 1: empty file".to_string()),
    }
    match lines.next() {
        Some((_, line)) if line == CSV_HEADER => {}
        Some((i, _)) => return Err(format!("line {}: unexpected header", i + 1)),
        None => return Err("line 2: missing header".to_string()),
    }

    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(format!(
                "line {lineno}: expected 13 fields, found {}",
                fields.len()
            ));
        }
        let parse_usize = |idx: usize, name: &str| {
            fields[idx]
                .parse::<usize>()
                .map_err(|_| format!("line {lineno}: bad {name} `{}`", fields[idx]))
        };
        let parse_f64 = |idx: usize, name: &str| {
            fields[idx]
                .parse::<f64>()
                .map_err(|_| format!("line {lineno}: bad {name} `{}`", fields[idx]))
        };
        rows.push(ReportRow {
            method: fields[0].to_string(),
            geometry: fields[1].to_string(),
            d: parse_usize(2, "dimension")?,
            n_steps: parse_usize(4, "n_steps")?,
            mean_evals_per_iter: parse_f64(9, "mean_evals_per_iter")?,
            accepted: match fields[10] {
                "true" => true,
                "false" => false,
                other => return Err(format!("line {lineno}: bad accepted flag `{other}`")),
            },
        });
    }
    if rows.is_empty() {
        return Err("no data rows".to_string());
    }
    Ok(rows)
}

pub fn cmd_report(args: ReportArgs) -> u8 {
    let text = match std::fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => return fail(&format!("cannot read {}: {e}", args.input.display())),
    };
    let rows = match parse_csv(&text) {
        Ok(r) => r,
        Err(e) => return fail(&format!("{}: {e}", args.input.display())),
    };
    if let Err(e) = std::fs::create_dir_all(&args.out_dir) {
        return fail(&format!("cannot create {}: {e}", args.out_dir.display()));
    }

    let mut methods: Vec<&str> = Vec::new();
    for row in &rows {
        if !methods.contains(&row.method.as_str()) {
            methods.push(&row.method);
        }
    }

    for method in &methods {
        let method_rows: Vec<&ReportRow> = rows.iter().filter(|r| r.method == *method).collect();
        let svg = method_calibration_figure(method, &method_rows);
        if let Err(e) = write_figure(&args.out_dir, &format!("{method}_calibration.svg"), &svg) {
            return fail(&e);
        }
    }
    let svg = overlay_figure(&methods, &rows);
    if let Err(e) = write_figure(&args.out_dir, "all_calibration.svg", &svg) {
        return fail(&e);
    }
    let svg = efficiency_figure(&methods, &rows);
    if let Err(e) = write_figure(&args.out_dir, "efficiency.svg", &svg) {
        return fail(&e);
    }
    eprintln!(
        "wrote {} figures to {}",
        methods.len() + 2,
        args.out_dir.display()
    );
    EXIT_OK
}

fn write_figure(dir: &Path, name: &str, body: &str) -> Result<(), String> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn style_for(method: &str) -> (&'static str, Marker) {
    let idx = ProposalKind::ALL
        .iter()
        .position(|k| k.id() == method)
        .unwrap_or(0);
    (PALETTE[idx % PALETTE.len()], MARKERS[idx % MARKERS.len()])
}

/// Final accepted step count per problem, keyed by dimension (the curve the
/// doubling search settled on). The last accepted row per geometry wins.
fn accepted_curve(rows: &[&ReportRow]) -> Vec<(f64, f64)> {
    let mut per_geometry: BTreeMap<(usize, &str), &ReportRow> = BTreeMap::new();
    for row in rows {
        if row.accepted {
            per_geometry.insert((row.d, row.geometry.as_str()), row);
        }
    }
    per_geometry
        .values()
        .map(|r| (r.d as f64, r.n_steps as f64))
        .collect()
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        (1.0, 2.0)
    } else {
        (lo, hi)
    }
}

fn method_calibration_figure(method: &str, rows: &[&ReportRow]) -> String {
    let x_range = bounds(rows.iter().map(|r| r.d as f64));
    let y_range = bounds(rows.iter().map(|r| r.n_steps as f64));
    let mut plot = Plot::new(
        &format!("{method}: accepted step counts"),
        "dimension d",
        "N_steps",
        x_range,
        y_range,
        2.0,
        2.0,
    );
    let (color, marker) = style_for(method);

    let curve = accepted_curve(rows);
    if !curve.is_empty() {
        // minimal linear law k·d clearing every accepted point
        let k = curve
            .iter()
            .map(|&(d, n)| (n / d).ceil() as usize)
            .max()
            .unwrap_or(1) as f64;
        plot.polyline(
            &[(x_range.0, k * x_range.0), (x_range.1, k * x_range.1)],
            "#333333",
            true,
        );
        plot.legend_entry(&format!("k·d with k={k:.0}"), "#333333", Marker::Cross);
        plot.polyline(&curve, color, false);
    }
    for row in rows {
        if row.accepted {
            plot.marker(marker, row.d as f64, row.n_steps as f64, color, "acc");
        } else {
            plot.marker(
                Marker::Cross,
                row.d as f64,
                row.n_steps as f64,
                "#c44e52",
                "rej",
            );
        }
    }
    plot.legend_entry("accepted", color, marker);
    plot.legend_entry("rejected", "#c44e52", Marker::Cross);
    plot.render()
}

fn overlay_figure(methods: &[&str], rows: &[ReportRow]) -> String {
    let x_range = bounds(rows.iter().map(|r| r.d as f64));
    let y_range = bounds(rows.iter().map(|r| r.n_steps as f64));
    let mut plot = Plot::new(
        "Accepted step counts, all samplers",
        "dimension d",
        "N_steps",
        x_range,
        y_range,
        2.0,
        2.0,
    );
    for method in methods {
        let method_rows: Vec<&ReportRow> = rows.iter().filter(|r| r.method == *method).collect();
        let curve = accepted_curve(&method_rows);
        let (color, marker) = style_for(method);
        plot.polyline(&curve, color, false);
        for &(d, n) in &curve {
            plot.marker(marker, d, n, color, "acc");
        }
        plot.legend_entry(method, color, marker);
    }
    plot.render()
}

fn efficiency_figure(methods: &[&str], rows: &[ReportRow]) -> String {
    let accepted: Vec<&ReportRow> = rows.iter().filter(|r| r.accepted).collect();
    let x_range = bounds(accepted.iter().map(|r| r.d as f64));
    let y_range = bounds(accepted.iter().map(|r| 1.0 / r.mean_evals_per_iter));
    let mut plot = Plot::new(
        "Efficiency of calibrated samplers",
        "dimension d",
        "model evaluations per iteration (inverse)",
        x_range,
        y_range,
        2.0,
        10.0,
    );

    // 1/d guide through the best dimension-corrected efficiency
    let c = accepted
        .iter()
        .map(|r| r.d as f64 / r.mean_evals_per_iter)
        .fold(f64::NEG_INFINITY, f64::max);
    if c.is_finite() {
        plot.polyline(
            &[(x_range.0, c / x_range.0), (x_range.1, c / x_range.1)],
            "#999999",
            true,
        );
        plot.legend_entry("1/d guide", "#999999", Marker::Cross);
    }

    for method in methods {
        let mut per_problem: BTreeMap<(usize, &str), f64> = BTreeMap::new();
        for row in accepted.iter().filter(|r| r.method == *method) {
            per_problem.insert(
                (row.d, row.geometry.as_str()),
                1.0 / row.mean_evals_per_iter,
            );
        }
        let points: Vec<(f64, f64)> = per_problem
            .iter()
            .map(|(&(d, _), &eff)| (d as f64, eff))
            .collect();
        let (color, marker) = style_for(method);
        plot.polyline(&points, color, false);
        for &(d, eff) in &points {
            plot.marker(marker, d, eff, color, "eff");
        }
        plot.legend_entry(method, color, marker);
    }
    plot.render()
}
