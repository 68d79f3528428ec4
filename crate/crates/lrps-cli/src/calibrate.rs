//! The calibration sweep command: doubling searches per method across a
//! problem suite, streamed into a fixed-schema CSV.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;

use lrps_core::calibration::{
    calibrate_method, desk_suite, full_suite, summarize_scaling, CalibrationRow, ScalingSummary,
    SweepSettings,
};
use lrps_core::proposals::ProposalKind;

use crate::{fail, EXIT_ERROR, EXIT_OK};

pub const CSV_SCHEMA_LINE: &str = "# schema=1";
pub const CSV_HEADER: &str = "method,geometry,d,K,n_steps,n_collected,ks_stat,p_value,stuck_count,mean_evals_per_iter,accepted,seed,wall_seconds";

#[derive(Args)]
pub struct CalibrateArgs {
    /// Comma-separated method ids, or `all`.
    #[arg(long, default_value = "all")]
    methods: String,
    /// Problem suite: `full` (the six standard setups) or `desk` (reduced
    /// scale: shell2, pyramid4, gauss16 at K=200).
    #[arg(long, default_value = "full")]
    suite: String,
    /// Largest step count the doubling search may try.
    #[arg(long, default_value_t = 1024)]
    cap: usize,
    /// Output CSV path.
    #[arg(long, default_value = "calibration.csv")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; methods calibrate concurrently. Defaults to the
    /// LRPSLAB_JOBS environment variable, then to available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Re-run accepted configurations with this many fresh seeds; demote on
    /// any rejection.
    #[arg(long, default_value_t = 0)]
    repeats: usize,
}

pub fn cmd_calibrate(args: CalibrateArgs) -> u8 {
    let methods = match parse_methods(&args.methods) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    let (problems, mut settings) = match args.suite.as_str() {
        "full" => (full_suite(), SweepSettings::full_scale()),
        "desk" => (desk_suite(), SweepSettings::desk_scale()),
        other => return fail(&format!("unknown suite `{other}` (valid: full, desk)")),
    };
    settings.cap = args.cap;
    settings.seed = args.seed;
    settings.repeats = args.repeats;

    let jobs = args
        .jobs
        .or_else(|| {
            std::env::var("LRPSLAB_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => return fail(&format!("cannot build thread pool: {e}")),
    };

    let started = Instant::now();
    // Methods run concurrently; each search is sequential by definition.
    // Results are written afterwards in the requested method order, so the
    // file content is independent of scheduling.
    let results: Vec<Result<Vec<CalibrationRow>, String>> = pool.install(|| {
        methods
            .par_iter()
            .map(|&method| {
                let rows =
                    calibrate_method(method, &problems, &settings).map_err(|e| e.to_string())?;
                eprintln!("calibrated {method} ({} configurations)", rows.len());
                Ok(rows)
            })
            .collect()
    });

    let mut all_rows: Vec<Vec<CalibrationRow>> = Vec::with_capacity(results.len());
    for result in results {
        match result {
            Ok(rows) => all_rows.push(rows),
            Err(e) => return fail(&e),
        }
    }
    let summaries: Vec<ScalingSummary> = all_rows
        .iter()
        .map(|rows| summarize_scaling(rows))
        .collect();

    match write_csv(&args.out, &all_rows, &summaries) {
        Ok(()) => {
            eprintln!(
                "wrote {} in {:.2}s",
                args.out.display(),
                started.elapsed().as_secs_f64()
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn parse_methods(list: &str) -> Result<Vec<ProposalKind>, String> {
    if list == "all" {
        return Ok(ProposalKind::ALL.to_vec());
    }
    let mut methods = Vec::new();
    for part in list.split(',') {
        let kind: ProposalKind = part.trim().parse()?;
        if !methods.contains(&kind) {
            methods.push(kind);
        }
    }
    if methods.is_empty() {
        return Err("no methods given".into());
    }
    Ok(methods)
}

/// One CSV data line. Wall time is pinned to zero: report content is
/// byte-deterministic for a fixed seed; timing goes to stderr.
pub fn format_row(row: &CalibrationRow) -> String {
    format!(
        "{},{},{},{},{},{},{:.6},{:.6e},{},{:.6},{},{},0.000",
        row.method,
        row.geometry,
        row.d,
        row.live_points,
        row.n_steps,
        row.n_collected,
        row.verdict.ks_statistic,
        row.verdict.p_value,
        row.verdict.stuck_count,
        row.mean_evals_per_iter,
        row.accepted,
        row.seed
    )
}

fn format_summary(s: &ScalingSummary) -> String {
    let eff = match s.min_eff_times_d_pct {
        Some(v) => format!("{v:.2}"),
        None => "--".to_string(),
    };
    let k = if s.converged {
        s.k.to_string()
    } else {
        format!(">{}", s.k)
    };
    format!(
        "# summary method={} k={} converged={} min_eff_times_d_pct={}",
        s.method, k, s.converged, eff
    )
}

fn write_csv(
    path: &PathBuf,
    all_rows: &[Vec<CalibrationRow>],
    summaries: &[ScalingSummary],
) -> Result<(), String> {
    let mut body = String::new();
    body.push_str(CSV_SCHEMA_LINE);
    body.push('\n');
    body.push_str(CSV_HEADER);
    body.push('\n');
    for rows in all_rows {
        for row in rows {
            body.push_str(&format_row(row));
            body.push('\n');
        }
    }
    for summary in summaries {
        body.push_str(&format_summary(summary));
        body.push('\n');
    }
    let mut file =
        std::fs::File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    file.write_all(body.as_bytes())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}
