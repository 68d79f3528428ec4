//! The shrinkage verification test.
//!
//! For an unbiased likelihood-restricted prior sampler, the volume ratio
//! `t_i = V_{i+1}/V_i` between consecutive discarded points is Beta(K,1)
//! distributed. `u_i = t_i^K` is then uniform on (0,1], which a one-sample
//! two-sided Kolmogorov–Smirnov test checks. A configuration is accepted
//! only if the KS p-value reaches 0.01 *and* no chain ever got stuck.

use serde::Serialize;

use crate::runner::ShrinkageRecord;

/// Configurations are rejected when the KS p-value falls below this.
pub const REJECTION_P_VALUE: f64 = 0.01;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ShrinkageError {
    #[error("need at least 2 recorded volumes to form a ratio, got {0}")]
    TooFewVolumes(usize),
    #[error("empty ratio sample")]
    EmptyInput,
    #[error("volume ratio {0} outside (0, 1]")]
    RatioOutOfRange(f64),
}

/// Outcome of the shrinkage test for one run.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TestVerdict {
    /// Number of ratios tested.
    pub n: usize,
    /// Two-sided KS distance between the transformed ratios and U(0,1).
    pub ks_statistic: f64,
    pub p_value: f64,
    /// Iterations whose chain never moved; any makes the verdict a rejection.
    pub stuck_count: u64,
    /// `p_value >= 0.01` and `stuck_count == 0`.
    pub accepted: bool,
}

/// Consecutive volume ratios `exp(logV_{i+1} - logV_i)` of a record.
/// Restart boundaries do not contribute a ratio.
pub fn volume_ratios(rec: &ShrinkageRecord) -> Result<Vec<f64>, ShrinkageError> {
    if rec.log_volumes.len() < 2 {
        return Err(ShrinkageError::TooFewVolumes(rec.log_volumes.len()));
    }
    let mut ratios = Vec::with_capacity(rec.log_volumes.len().saturating_sub(1));
    let mut offset = 0;
    for &len in &rec.segment_lengths {
        let seg = &rec.log_volumes[offset..offset + len];
        for pair in seg.windows(2) {
            ratios.push((pair[1] - pair[0]).exp());
        }
        offset += len;
    }
    Ok(ratios)
}

/// Beta(K,1) shrinkage test: map each ratio through the null CDF `t^K` and
/// KS-test the result against uniformity. A ratio of exactly 1 (no volume
/// change) is legal input; stuck chains are handled by the separate
/// movement rule via `stuck_count`.
pub fn ks_uniform_test(
    ratios: &[f64],
    live_points: usize,
    stuck_count: u64,
) -> Result<TestVerdict, ShrinkageError> {
    if ratios.is_empty() {
        return Err(ShrinkageError::EmptyInput);
    }
    let k = live_points as f64;
    let mut us: Vec<f64> = Vec::with_capacity(ratios.len());
    for &t in ratios {
        if !(t > 0.0 && t <= 1.0) {
            return Err(ShrinkageError::RatioOutOfRange(t));
        }
        us.push(t.powf(k));
    }
    us.sort_unstable_by(|a, b| a.total_cmp(b));

    let n = us.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &u) in us.iter().enumerate() {
        d = d.max(u - i as f64 / nf).max((i + 1) as f64 / nf - u);
    }
    // Stephens' finite-n correction to the asymptotic Kolmogorov law.
    let lambda = d * (nf.sqrt() + 0.12 + 0.11 / nf.sqrt());
    let p_value = kolmogorov_p(lambda);
    Ok(TestVerdict {
        n,
        ks_statistic: d,
        p_value,
        stuck_count,
        accepted: p_value >= REJECTION_P_VALUE && stuck_count == 0,
    })
}

/// Ratios plus KS test for a full record, wiring in its stuck count.
pub fn evaluate_record(
    rec: &ShrinkageRecord,
    live_points: usize,
) -> Result<TestVerdict, ShrinkageError> {
    let ratios = volume_ratios(rec)?;
    ks_uniform_test(&ratios, live_points, rec.stuck_count)
}

/// Complementary CDF of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² λ²)`.
pub fn kolmogorov_p(lambda: f64) -> f64 {
    if lambda <= 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=10_000u32 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        if term < 1e-14 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(log_volumes: Vec<f64>, segment_lengths: Vec<usize>) -> ShrinkageRecord {
        let n = log_volumes.len();
        ShrinkageRecord {
            log_volumes,
            evals_per_iter: vec![1; n],
            stuck_count: 0,
            iterations_run: n as u64,
            segment_lengths,
        }
    }

    #[test]
    fn ratios_of_consecutive_volumes() {
        let rec = record(vec![0.0, -0.1, -0.3], vec![3]);
        let r = volume_ratios(&rec).unwrap();
        assert_eq!(r.len(), 2);
        assert_relative_eq!(r[0], (-0.1f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(r[1], (-0.2f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn no_ratio_across_restart_boundaries() {
        let rec = record(vec![0.0, -1.0, -0.2, -1.4], vec![2, 2]);
        let r = volume_ratios(&rec).unwrap();
        assert_eq!(r.len(), 2);
        assert_relative_eq!(r[0], (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(r[1], (-1.2f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn too_few_volumes_is_an_error() {
        let rec = record(vec![0.0], vec![1]);
        assert_eq!(volume_ratios(&rec), Err(ShrinkageError::TooFewVolumes(1)));
    }

    #[test]
    fn equal_volumes_give_unit_ratios_and_rejection() {
        let rec = record(vec![-1.0; 200], vec![200]);
        let ratios = volume_ratios(&rec).unwrap();
        assert!(ratios.iter().all(|&t| t == 1.0));
        let verdict = ks_uniform_test(&ratios, 100, 0).unwrap();
        assert!(!verdict.accepted);
        assert!(verdict.p_value < 1e-6);
    }

    #[test]
    fn centered_grid_has_tiny_statistic_and_p_near_one() {
        // u_i = (i - 0.5)/n is the best possible uniform sample: D = 1/(2n).
        let n = 100;
        let us: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let verdict = ks_uniform_test(&us, 1, 0).unwrap();
        assert_relative_eq!(verdict.ks_statistic, 0.005, epsilon = 1e-12);
        assert!(verdict.p_value > 0.9999);
        assert!(verdict.accepted);
    }

    #[test]
    fn degenerate_sample_is_rejected() {
        let k = 100usize;
        let t = 0.5f64.powf(1.0 / k as f64);
        let ratios = vec![t; 200];
        let verdict = ks_uniform_test(&ratios, k, 0).unwrap();
        assert_relative_eq!(verdict.ks_statistic, 0.5, epsilon = 1e-9);
        assert!(verdict.p_value < 1e-6);
        assert!(!verdict.accepted);
    }

    #[test]
    fn stuck_chains_force_rejection_even_with_good_ratios() {
        let n = 1000;
        let us: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let verdict = ks_uniform_test(&us, 1, 3).unwrap();
        assert!(verdict.p_value > 0.9);
        assert!(!verdict.accepted);
    }

    #[test]
    fn ratio_domain_is_enforced() {
        assert_eq!(
            ks_uniform_test(&[0.5, 1.2], 10, 0),
            Err(ShrinkageError::RatioOutOfRange(1.2))
        );
        assert_eq!(
            ks_uniform_test(&[0.0], 10, 0),
            Err(ShrinkageError::RatioOutOfRange(0.0))
        );
        assert_eq!(ks_uniform_test(&[], 10, 0), Err(ShrinkageError::EmptyInput));
    }

    /// Independent route to the Kolmogorov CDF via the Jacobi-theta form,
    /// `K(λ) = (√(2π)/λ) Σ_{odd k} exp(-k²π²/(8λ²))`.
    fn kolmogorov_p_theta(lambda: f64) -> f64 {
        let mut sum = 0.0;
        let mut k = 1u32;
        loop {
            let term = (-(k as f64 * std::f64::consts::PI).powi(2) / (8.0 * lambda * lambda)).exp();
            sum += term;
            if term < 1e-16 || k > 9999 {
                break;
            }
            k += 2;
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    }

    #[test]
    fn kolmogorov_series_agrees_with_theta_form() {
        for i in 0..60 {
            let lambda = 0.4 + i as f64 * 0.05;
            let a = kolmogorov_p(lambda);
            let b = kolmogorov_p_theta(lambda);
            assert!(
                (a - b).abs() < 1e-10,
                "p mismatch at λ={lambda}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn kolmogorov_known_values() {
        // Q(λ) at the classic critical points.
        assert!((kolmogorov_p(1.36) - 0.049).abs() < 2e-3);
        assert!((kolmogorov_p(1.63) - 0.010).abs() < 1e-3);
        assert!(kolmogorov_p(0.2) > 0.999999);
        assert_eq!(kolmogorov_p(1e-6), 1.0);
        assert!(kolmogorov_p(5.0) < 1e-10);
    }

    #[test]
    fn p_value_is_decreasing_in_the_statistic() {
        let n = 1000usize;
        let mut prev = f64::INFINITY;
        for i in 1..=50 {
            let d = i as f64 * 0.01;
            let lambda = d * ((n as f64).sqrt() + 0.12 + 0.11 / (n as f64).sqrt());
            let p = kolmogorov_p(lambda);
            assert!(p <= prev);
            if p > 1e-12 && prev < 1.0 {
                assert!(p < prev, "not strictly decreasing at D={d}");
            }
            prev = p;
        }
    }

    #[test]
    fn inflated_ratios_increase_the_statistic() {
        // Under-shrinkage (every ratio pushed toward 1) must look worse.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let k = 50usize;
        let ratios: Vec<f64> = (0..10_000)
            .map(|_| rng.random::<f64>().powf(1.0 / k as f64))
            .collect();
        let base = ks_uniform_test(&ratios, k, 0).unwrap();
        let inflated: Vec<f64> = ratios.iter().map(|t| (t * 1.002).min(1.0)).collect();
        let biased = ks_uniform_test(&inflated, k, 0).unwrap();
        assert!(
            biased.ks_statistic > base.ks_statistic,
            "D {} -> {}",
            base.ks_statistic,
            biased.ks_statistic
        );
    }

    #[test]
    fn uniform_samples_pass_at_the_nominal_rate() {
        // Smoke version of the self-test criterion: 100 uniform samples of
        // size 1000 should almost all be accepted.
        let mut rejects = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
            let us: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
            let v = ks_uniform_test(&us, 1, 0).unwrap();
            if !v.accepted {
                rejects += 1;
            }
        }
        assert!(rejects <= 5, "{rejects}/100 uniform samples rejected");
    }
}
