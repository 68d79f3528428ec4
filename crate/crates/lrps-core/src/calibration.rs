//! Calibration of the number of steps per iteration.
//!
//! For one method, problems are run in order of increasing dimension.
//! Starting from the step count accepted for the previous problem (1 for the
//! first), the shrinkage test is run and the step count doubled on rejection
//! until it accepts or the cap is exceeded. Because the accepted count is
//! carried forward, the resulting `N_steps(d)` curve is conservative and
//! monotone by construction.

use serde::Serialize;

use crate::geometry::Geometry;
use crate::proposals::ProposalKind;
use crate::runner::{run_shrinkage, RunConfig, RunError};
use crate::shrinkage::{evaluate_record, ShrinkageError, TestVerdict};

#[derive(Debug, Clone, thiserror::Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Shrinkage(#[from] ShrinkageError),
}

/// The six standard setups, ordered by (dimension, id).
pub fn full_suite() -> Vec<String> {
    [
        "shell2",
        "pyramid4",
        "shell8",
        "gauss16",
        "pyramid16",
        "gauss100",
    ]
    .map(String::from)
    .to_vec()
}

/// Reduced suite for desk-scale runs, same ordering rule.
pub fn desk_suite() -> Vec<String> {
    ["shell2", "pyramid4", "gauss16"].map(String::from).to_vec()
}

/// Sort geometry ids by (dimension, id), the calibration sweep order.
pub fn order_problems(ids: &mut [String]) -> Result<(), RunError> {
    let mut keyed: Vec<(usize, String)> = Vec::with_capacity(ids.len());
    for id in ids.iter() {
        keyed.push((Geometry::from_id(id)?.dim(), id.clone()));
    }
    keyed.sort();
    for (slot, (_, id)) in ids.iter_mut().zip(keyed) {
        *slot = id;
    }
    Ok(())
}

/// Harness parameters shared by every trial of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSettings {
    pub live_points: usize,
    pub n_collect: usize,
    pub warmup: usize,
    /// Largest step count tried; the doubling grid stops here.
    pub cap: usize,
    pub seed: u64,
    /// Re-run accepted configurations with this many fresh seeds and demote
    /// them if any repeat rejects. 0 reproduces the single-seed protocol.
    pub repeats: usize,
}

impl SweepSettings {
    /// Full-scale protocol: K = 400, 25·K samples after a 3·K warm-up.
    pub fn full_scale() -> Self {
        Self {
            live_points: 400,
            n_collect: 10_000,
            warmup: 1_200,
            cap: 1_024,
            seed: 0,
            repeats: 0,
        }
    }

    /// Desk-scale protocol: K = 200, 12.5·K samples.
    pub fn desk_scale() -> Self {
        Self {
            live_points: 200,
            n_collect: 2_500,
            warmup: 600,
            cap: 1_024,
            seed: 0,
            repeats: 0,
        }
    }
}

/// Outcome of one tested (method, geometry, n_steps, seed) configuration.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationRow {
    pub method: ProposalKind,
    pub geometry: String,
    pub d: usize,
    pub live_points: usize,
    pub n_steps: usize,
    pub n_collected: usize,
    pub verdict: TestVerdict,
    pub mean_evals_per_iter: f64,
    pub accepted: bool,
    pub seed: u64,
}

/// Scaling factor of a calibrated method: the smallest integer k with
/// `k·d ≥ accepted N_steps` on every problem.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingSummary {
    pub method: ProposalKind,
    pub k: usize,
    /// False when some problem never accepted below the cap; `k` is then a
    /// lower bound.
    pub converged: bool,
    /// Lowest dimension-corrected efficiency ε·d across problems, percent.
    /// Absent when not converged.
    pub min_eff_times_d_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub tested: Vec<usize>,
    pub accepted: Option<usize>,
}

/// Double `n` from `start` until `trial` accepts or the next doubling would
/// leave the cap.
pub fn doubling_search<E>(
    start: usize,
    cap: usize,
    mut trial: impl FnMut(usize) -> Result<bool, E>,
) -> Result<SearchOutcome, E> {
    assert!(start >= 1 && cap >= start);
    let mut tested = Vec::new();
    let mut n = start;
    while n <= cap {
        tested.push(n);
        if trial(n)? {
            return Ok(SearchOutcome {
                tested,
                accepted: Some(n),
            });
        }
        n *= 2;
    }
    Ok(SearchOutcome {
        tested,
        accepted: None,
    })
}

/// Calibrate one method over `problems` (already ordered by dimension),
/// recording every tested configuration. On cap exhaustion the problem is
/// left unconverged and the cap is carried to the next problem's start.
pub fn calibrate_method(
    method: ProposalKind,
    problems: &[String],
    settings: &SweepSettings,
) -> Result<Vec<CalibrationRow>, CalibrationError> {
    let mut rows = Vec::new();
    let mut start = 1usize;
    for geometry in problems {
        let d = Geometry::from_id(geometry).map_err(RunError::from)?.dim();
        let outcome = doubling_search(start, settings.cap, |n_steps| {
            let mut accepted = true;
            for repeat in 0..=settings.repeats {
                let row = run_trial(method, geometry, d, n_steps, settings, repeat as u64)?;
                accepted = accepted && row.accepted;
                rows.push(row);
                if !accepted {
                    break;
                }
            }
            Ok::<bool, CalibrationError>(accepted)
        })?;
        start = outcome.accepted.unwrap_or(settings.cap);
    }
    Ok(rows)
}

fn run_trial(
    method: ProposalKind,
    geometry: &str,
    d: usize,
    n_steps: usize,
    settings: &SweepSettings,
    seed_offset: u64,
) -> Result<CalibrationRow, CalibrationError> {
    let cfg = RunConfig {
        geometry: geometry.to_string(),
        method,
        n_steps,
        live_points: settings.live_points,
        n_collect: settings.n_collect,
        warmup: settings.warmup,
        seed: settings.seed.wrapping_add(seed_offset),
        restart_length: None,
    };
    let rec = run_shrinkage(&cfg)?;
    let verdict = evaluate_record(&rec, settings.live_points)?;
    let accepted = verdict.accepted;
    Ok(CalibrationRow {
        method,
        geometry: geometry.to_string(),
        d,
        live_points: settings.live_points,
        n_steps,
        n_collected: rec.log_volumes.len(),
        mean_evals_per_iter: rec.mean_evals_per_iter(),
        verdict,
        accepted,
        seed: cfg.seed,
    })
}

/// The final accepted row per geometry, in first-tested order. With repeats
/// the last accepted row for a problem is the one the search settled on.
pub fn accepted_per_problem(rows: &[CalibrationRow]) -> Vec<&CalibrationRow> {
    let mut order: Vec<&str> = Vec::new();
    for row in rows {
        if !order.contains(&row.geometry.as_str()) {
            order.push(&row.geometry);
        }
    }
    order
        .into_iter()
        .filter_map(|g| rows.iter().rev().find(|r| r.geometry == g && r.accepted))
        .collect()
}

/// Summarize a single method's rows into its scaling factor and worst
/// dimension-corrected efficiency.
pub fn summarize_scaling(rows: &[CalibrationRow]) -> ScalingSummary {
    assert!(!rows.is_empty(), "cannot summarize an empty sweep");
    let method = rows[0].method;
    debug_assert!(rows.iter().all(|r| r.method == method));

    let mut problems: Vec<&str> = Vec::new();
    for row in rows {
        if !problems.contains(&row.geometry.as_str()) {
            problems.push(&row.geometry);
        }
    }

    let mut k = 0usize;
    let mut converged = true;
    let mut min_eff: Option<f64> = None;
    for geometry in problems {
        let best = rows
            .iter()
            .rev()
            .find(|r| r.geometry == geometry && r.accepted);
        match best {
            Some(row) => {
                k = k.max(row.n_steps.div_ceil(row.d));
                let eff_d = row.d as f64 / row.mean_evals_per_iter * 100.0;
                min_eff = Some(min_eff.map_or(eff_d, |m: f64| m.min(eff_d)));
            }
            None => {
                // Failed at the cap: the true factor exceeds the largest
                // tested grid point; report the power-of-two lower bound.
                let max_tested = rows
                    .iter()
                    .filter(|r| r.geometry == geometry)
                    .map(|r| r.n_steps)
                    .max()
                    .unwrap_or(1);
                let row = rows.iter().find(|r| r.geometry == geometry).unwrap();
                k = k.max(max_tested.div_ceil(row.d).next_power_of_two());
                converged = false;
            }
        }
    }
    ScalingSummary {
        method,
        k,
        converged,
        min_eff_times_d_pct: if converged { min_eff } else { None },
    }
}
