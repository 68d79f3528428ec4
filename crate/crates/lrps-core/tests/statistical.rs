//! Cross-module statistical properties of the harness: the oracle's
//! probability-integral transform, seeded reproducibility of whole runs,
//! and the interplay of records with the verdict machinery.

use lrps_core::proposals::ProposalKind;
use lrps_core::runner::{run_shrinkage, run_shrinkage_oracle, RunConfig};
use lrps_core::shrinkage::{evaluate_record, volume_ratios};

/// Under the exact sampler the transformed ratios u = t^K are uniform:
/// their first two moments must match 1/2 and 1/12 within three standard
/// errors.
#[test]
fn oracle_transformed_ratios_have_uniform_moments() {
    let k = 150usize;
    let mut cfg = RunConfig::new("gauss16", ProposalKind::CubeSlice).with_live_points(k);
    cfg.n_collect = 8000;
    cfg.seed = 21;
    let rec = run_shrinkage_oracle(&cfg).unwrap();
    let us: Vec<f64> = volume_ratios(&rec)
        .unwrap()
        .into_iter()
        .map(|t| t.powf(k as f64))
        .collect();
    let n = us.len() as f64;

    let mean: f64 = us.iter().sum::<f64>() / n;
    // sd of the sample mean of U(0,1) is 1/sqrt(12 n)
    let mean_se = (1.0 / 12.0f64).sqrt() / n.sqrt();
    assert!(
        (mean - 0.5).abs() <= 3.0 * mean_se,
        "mean {mean} vs 0.5 (se {mean_se})"
    );

    let var: f64 = us.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / (n - 1.0);
    // var of the sample variance of U(0,1): (mu4 - sigma^4)/n with
    // mu4 = 1/80, sigma^2 = 1/12
    let var_se = ((1.0 / 80.0 - 1.0 / 144.0) / n).sqrt();
    assert!(
        (var - 1.0 / 12.0).abs() <= 3.0 * var_se,
        "variance {var} vs 1/12 (se {var_se})"
    );
}

/// The whole pipeline — run, ratios, verdict — replays bit-identically for
/// a fixed config, and distinct methods draw from independent streams.
#[test]
fn pipeline_replays_and_streams_are_method_specific() {
    let mut cfg = RunConfig::new("shell2", ProposalKind::DeMix).with_live_points(60);
    cfg.warmup = 120;
    cfg.restart_length = Some(400);
    cfg.n_collect = 600;
    cfg.n_steps = 2;
    cfg.seed = 33;
    let a = run_shrinkage(&cfg).unwrap();
    let b = run_shrinkage(&cfg).unwrap();
    assert_eq!(a, b);
    let va = evaluate_record(&a, cfg.live_points).unwrap();
    let vb = evaluate_record(&b, cfg.live_points).unwrap();
    assert_eq!(va, vb);

    let mut other = cfg.clone();
    other.method = ProposalKind::DeHarm;
    let c = run_shrinkage(&other).unwrap();
    assert_ne!(
        a.log_volumes, c.log_volumes,
        "streams must differ by method"
    );
}

/// Stuck bookkeeping flows through to the verdict: the pyramid with
/// single-step axis chains produces stuck iterations, and the verdict must
/// reject regardless of the KS number.
#[test]
fn stuck_chains_reach_the_verdict() {
    let mut cfg = RunConfig::new("pyramid16", ProposalKind::CubeSlice).with_live_points(80);
    cfg.n_collect = 1500;
    cfg.seed = 2;
    let rec = run_shrinkage(&cfg).unwrap();
    assert!(
        rec.stuck_count > 0,
        "expected stuck iterations at n_steps=1"
    );
    let verdict = evaluate_record(&rec, cfg.live_points).unwrap();
    assert_eq!(verdict.stuck_count, rec.stuck_count);
    assert!(!verdict.accepted);
}
