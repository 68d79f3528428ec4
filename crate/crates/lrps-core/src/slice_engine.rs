//! One slice-sampling step along a given direction.
//!
//! Stepping-out with doubling: the point at `t = L, 2L, 4L, …` is tested
//! until it leaves the restricted prior, the same for negative `t`. A point
//! is then drawn uniformly on `(t-, t+)`; rejections shrink the interval
//! toward the start (bisection-style, exact for convex slices) until a point
//! above the threshold is accepted.
//!
//! Every log-likelihood call on an in-support point is counted; support
//! checks are free geometry tests. The guess length `L` adapts by ±10%
//! depending on whether the stepping-out phase had to expand the initial
//! `[-L, L]` bracket at all.

use rand::Rng;

use crate::proposals::{LiveSet, ProposalState};
use crate::Model;

/// Combined step-out/shrink operations allowed per slice step before the
/// chain is declared stuck. Degenerate directions from collapsed covariances
/// must terminate.
pub const STEP_OP_CAP: u64 = 1_000_000;

/// Interval widths below this count as collapsed onto the start point.
pub const MIN_INTERVAL_WIDTH: f64 = 1e-300;

/// The adaptive guess length for the stepping-out bracket. One per run,
/// carried across nested-sampling iterations; updated only by the ±10% rule.
#[derive(Debug, Clone)]
pub struct AdaptiveLength {
    length: f64,
}

impl AdaptiveLength {
    /// The initial guess length is 1.
    pub fn new() -> Self {
        Self { length: 1.0 }
    }

    pub fn with_length(length: f64) -> Self {
        assert!(length > 0.0);
        Self { length }
    }

    pub fn value(&self) -> f64 {
        self.length
    }

    fn update(&mut self, expanded: bool) {
        self.length *= if expanded { 1.1 } else { 0.9 };
    }
}

impl Default for AdaptiveLength {
    fn default() -> Self {
        Self::new()
    }
}

/// Result of one slice step or one chained run of steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceOutcome {
    pub end_point: Vec<f64>,
    pub end_loglike: f64,
    /// Model evaluations spent (stepping-out probes plus interval draws that
    /// landed in support).
    pub evals: u64,
    /// Whether `end_point` differs from the start of the step/chain.
    pub moved: bool,
}

/// Test `start + t·direction` against the restricted prior. Returns the
/// point and its log-likelihood if it lies inside, bumping `evals` for every
/// in-support evaluation.
fn probe<M: Model + ?Sized>(
    model: &M,
    start: &[f64],
    direction: &[f64],
    t: f64,
    threshold: f64,
    evals: &mut u64,
) -> Option<(Vec<f64>, f64)> {
    let y: Vec<f64> = start
        .iter()
        .zip(direction)
        .map(|(&s, &v)| s + t * v)
        .collect();
    if y.iter().any(|c| !c.is_finite()) || !model.in_support(&y) {
        return None;
    }
    *evals += 1;
    let loglike = model.log_likelihood(&y);
    if loglike > threshold {
        Some((y, loglike))
    } else {
        None
    }
}

/// One slice step from `start` along `direction`, restricted to
/// `log L > threshold`.
///
/// `start` must lie inside the restricted prior and `direction` must be
/// nonzero. On cap exhaustion or interval collapse the start point is
/// returned with `moved = false` (the stuck signal).
pub fn slice_step<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    start: &[f64],
    start_loglike: f64,
    direction: &[f64],
    threshold: f64,
    len: &mut AdaptiveLength,
    rng: &mut R,
) -> SliceOutcome {
    // Plateau likelihoods (the pyramid's max-norm) produce exact ties
    // between live points, so a start can sit exactly on the threshold
    // after a tied discard. The step then only moves if the slice crosses
    // better ground.
    debug_assert!(start_loglike >= threshold, "start below the threshold");
    debug_assert!(direction.iter().any(|&v| v != 0.0), "zero direction");

    let mut evals = 0u64;
    let mut ops = 0u64;
    let stuck = |evals: u64| SliceOutcome {
        end_point: start.to_vec(),
        end_loglike: start_loglike,
        evals,
        moved: false,
    };

    // Stepping out with doubling, separately for each sign.
    let mut expansions = 0u32;
    let mut bounds = [len.value(), -len.value()];
    for t in &mut bounds {
        loop {
            ops += 1;
            if ops > STEP_OP_CAP {
                return stuck(evals);
            }
            if probe(model, start, direction, *t, threshold, &mut evals).is_some() {
                expansions += 1;
                *t *= 2.0;
            } else {
                break;
            }
        }
    }
    let [mut t_plus, mut t_minus] = bounds;
    len.update(expansions > 0);

    // Uniform draw on (t-, t+), shrinking toward the start on rejection.
    loop {
        ops += 1;
        if ops > STEP_OP_CAP {
            return stuck(evals);
        }
        let width = t_plus - t_minus;
        if width.is_nan() || width <= MIN_INTERVAL_WIDTH {
            return stuck(evals);
        }
        let t = t_minus + rng.random::<f64>() * width;
        match probe(model, start, direction, t, threshold, &mut evals) {
            Some((end_point, end_loglike)) => {
                debug_assert!(end_loglike > threshold && model.in_support(&end_point));
                let moved = end_point != start;
                return SliceOutcome {
                    end_point,
                    end_loglike,
                    evals,
                    moved,
                };
            }
            None => {
                if t < 0.0 {
                    t_minus = t;
                } else if t > 0.0 {
                    t_plus = t;
                }
                // t == 0 reproduces the start, which is inside; unreachable
                // here. NaN t (from infinite bounds) changes nothing and the
                // op cap terminates.
            }
        }
    }
}

/// Chain `n_steps` slice steps, one fresh proposal direction per step; the
/// whole chain is one nested-sampling iteration.
///
/// Evaluations are summed; `moved` reports whether the final point differs
/// from the chain's original start. A failed direction proposal ends the
/// chain early (stuck signal).
#[allow(clippy::too_many_arguments)]
pub fn run_chain<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    start: &[f64],
    start_loglike: f64,
    n_steps: usize,
    proposal: &mut ProposalState,
    live: &LiveSet,
    threshold: f64,
    len: &mut AdaptiveLength,
    rng: &mut R,
) -> SliceOutcome {
    assert!(n_steps >= 1, "a chain needs at least one step");
    let mut current = start.to_vec();
    let mut current_loglike = start_loglike;
    let mut evals = 0u64;
    for _ in 0..n_steps {
        let Some(direction) = proposal.propose_direction(&current, live, rng) else {
            break;
        };
        let out = slice_step(
            model,
            &current,
            current_loglike,
            &direction,
            threshold,
            len,
            rng,
        );
        evals += out.evals;
        current = out.end_point;
        current_loglike = out.end_loglike;
    }
    let moved = current != start;
    SliceOutcome {
        end_point: current,
        end_loglike: current_loglike,
        evals,
        moved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use crate::proposals::{LiveSet, ProposalKind, ProposalState};
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::cell::Cell;

    /// Replays a fixed sequence of uniform draws through the RngCore
    /// interface (`random::<f64>()` reads the top 53 bits of a u64).
    struct ScriptedRng {
        words: Vec<u64>,
        next: usize,
    }

    impl ScriptedRng {
        fn uniforms(us: &[f64]) -> Self {
            Self {
                words: us
                    .iter()
                    .map(|&u| ((u * (1u64 << 53) as f64) as u64) << 11)
                    .collect(),
                next: 0,
            }
        }
    }

    impl RngCore for ScriptedRng {
        fn next_u32(&mut self) -> u32 {
            (self.next_u64() >> 32) as u32
        }

        fn next_u64(&mut self) -> u64 {
            let w = self.words[self.next];
            self.next += 1;
            w
        }

        fn fill_bytes(&mut self, dst: &mut [u8]) {
            for chunk in dst.chunks_mut(8) {
                let w = self.next_u64().to_le_bytes();
                chunk.copy_from_slice(&w[..chunk.len()]);
            }
        }
    }

    /// 1-d test target with `log L = -|x|`, unbounded support.
    struct Vee;

    impl Model for Vee {
        fn dim(&self) -> usize {
            1
        }
        fn log_likelihood(&self, x: &[f64]) -> f64 {
            -x[0].abs()
        }
        fn in_support(&self, _x: &[f64]) -> bool {
            true
        }
    }

    /// Same likelihood on support [-0.5, 0.5] only.
    struct BoundedVee;

    impl Model for BoundedVee {
        fn dim(&self) -> usize {
            1
        }
        fn log_likelihood(&self, x: &[f64]) -> f64 {
            -x[0].abs()
        }
        fn in_support(&self, x: &[f64]) -> bool {
            x[0].abs() <= 0.5
        }
    }

    struct CountingModel<M> {
        inner: M,
        calls: Cell<u64>,
    }

    impl<M: Model> Model for CountingModel<M> {
        fn dim(&self) -> usize {
            self.inner.dim()
        }
        fn log_likelihood(&self, x: &[f64]) -> f64 {
            self.calls.set(self.calls.get() + 1);
            self.inner.log_likelihood(x)
        }
        fn in_support(&self, x: &[f64]) -> bool {
            self.inner.in_support(x)
        }
    }

    #[test]
    fn hand_traced_step() {
        // Stepping out tests x=1 (at the threshold, outside) and x=-1
        // (outside); the scripted draw t=0.5 is accepted. Three evaluations,
        // no expansion, so L shrinks.
        let mut len = AdaptiveLength::new();
        let mut rng = ScriptedRng::uniforms(&[0.75]); // t = -1 + 0.75*2 = 0.5
        let out = slice_step(&Vee, &[0.0], 0.0, &[1.0], -1.0, &mut len, &mut rng);
        assert_eq!(out.end_point, vec![0.5]);
        assert_eq!(out.end_loglike, -0.5);
        assert_eq!(out.evals, 3);
        assert!(out.moved);
        assert!((len.value() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn draws_are_confined_to_the_bracket() {
        // u = 0.05 maps to t = -0.9, inside the slab, accepted immediately.
        let mut len = AdaptiveLength::new();
        let mut rng = ScriptedRng::uniforms(&[0.05]);
        let out = slice_step(&Vee, &[0.0], 0.0, &[1.0], -1.0, &mut len, &mut rng);
        assert!((out.end_point[0] - -0.9).abs() < 1e-12);
        assert_eq!(out.evals, 3);
        assert!(out.moved);
    }

    #[test]
    fn expansion_grows_the_guess_length() {
        // Slice is (-4, 4): probes at 1, 2 are inside, 4 is outside; same
        // mirrored. L grows because the initial bracket had to expand.
        let mut len = AdaptiveLength::new();
        let mut rng = ScriptedRng::uniforms(&[0.625]); // t = -4 + 0.625*8 = 1
        let out = slice_step(&Vee, &[0.0], 0.0, &[1.0], -4.0, &mut len, &mut rng);
        assert_eq!(out.evals, 7);
        assert_eq!(out.end_point, vec![1.0]);
        assert!((len.value() - 1.1).abs() < 1e-15);
    }

    #[test]
    fn out_of_support_probes_cost_no_evaluations() {
        // Both first probes leave the support: zero evaluations there, L
        // shrinks, and only the accepted draw is charged.
        let mut len = AdaptiveLength::new();
        let mut rng = ScriptedRng::uniforms(&[0.75]); // t = 0.5, on the support edge
        let out = slice_step(&BoundedVee, &[0.0], 0.0, &[1.0], -1.0, &mut len, &mut rng);
        assert_eq!(out.evals, 1);
        assert_eq!(out.end_point, vec![0.5]);
        assert!((len.value() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn reversing_the_direction_mirrors_the_trace() {
        // y = start + t·v is invariant under (v, t) -> (-v, -t); mirroring
        // the uniform draws (u -> 1-u) reproduces the same end point.
        struct Asym;
        impl Model for Asym {
            fn dim(&self) -> usize {
                1
            }
            fn log_likelihood(&self, x: &[f64]) -> f64 {
                if x[0] > 0.0 {
                    -x[0] / 2.0
                } else {
                    x[0]
                }
            }
            fn in_support(&self, _x: &[f64]) -> bool {
                true
            }
        }
        let us = [0.9, 0.2, 0.6];
        let mirrored: Vec<f64> = us.iter().map(|u| 1.0 - u).collect();
        let mut len_a = AdaptiveLength::new();
        let mut len_b = AdaptiveLength::new();
        let mut rng_a = ScriptedRng::uniforms(&us);
        let mut rng_b = ScriptedRng::uniforms(&mirrored);
        let a = slice_step(&Asym, &[0.0], 0.0, &[1.0], -1.0, &mut len_a, &mut rng_a);
        let b = slice_step(&Asym, &[0.0], 0.0, &[-1.0], -1.0, &mut len_b, &mut rng_b);
        assert_eq!(a.end_point, b.end_point);
        assert_eq!(a.evals, b.evals);
        assert_eq!(len_a.value(), len_b.value());
    }

    #[test]
    fn flat_likelihood_hits_the_op_cap_and_reports_stuck() {
        struct Flat;
        impl Model for Flat {
            fn dim(&self) -> usize {
                1
            }
            fn log_likelihood(&self, _x: &[f64]) -> f64 {
                0.0
            }
            fn in_support(&self, _x: &[f64]) -> bool {
                true
            }
        }
        let mut len = AdaptiveLength::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = slice_step(&Flat, &[0.0], 0.0, &[1.0], -1.0, &mut len, &mut rng);
        assert!(!out.moved);
        assert_eq!(out.end_point, vec![0.0]);
    }

    #[test]
    fn interval_collapse_reports_stuck() {
        // Only the start point itself is above the threshold; the interval
        // shrinks to nothing around it.
        struct Spike;
        impl Model for Spike {
            fn dim(&self) -> usize {
                1
            }
            fn log_likelihood(&self, x: &[f64]) -> f64 {
                if x[0] == 0.0 {
                    0.0
                } else {
                    -2.0
                }
            }
            fn in_support(&self, _x: &[f64]) -> bool {
                true
            }
        }
        let mut len = AdaptiveLength::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = slice_step(&Spike, &[0.0], 0.0, &[1.0], -1.0, &mut len, &mut rng);
        assert!(!out.moved);
        assert_eq!(out.end_point, vec![0.0]);
    }

    #[test]
    fn evaluation_count_matches_a_counting_wrapper() {
        let model = CountingModel {
            inner: Geometry::hyperpyramid(4),
            calls: Cell::new(0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut len = AdaptiveLength::new();
        let start = vec![0.5; 4];
        let mut total_reported = 0;
        for _ in 0..200 {
            let dir = crate::linalg::sample_unit_sphere(4, &mut rng);
            let out = slice_step(&model, &start, 0.0, &dir, -0.25, &mut len, &mut rng);
            total_reported += out.evals;
        }
        assert_eq!(total_reported, model.calls.get());
    }

    #[test]
    fn single_step_chain_reduces_to_slice_step() {
        let g = Geometry::hyperpyramid(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let live = LiveSet::from_prior(&g, 10, &mut rng);
        let start = vec![0.5, 0.5];

        let mut rng_a = ChaCha8Rng::seed_from_u64(5);
        let mut rng_b = rng_a.clone();
        let mut prop_a = ProposalState::new(ProposalKind::CubeSlice);
        let mut prop_b = prop_a.clone();
        let mut len_a = AdaptiveLength::new();
        let mut len_b = AdaptiveLength::new();

        let chained = run_chain(
            &g,
            &start,
            0.0,
            1,
            &mut prop_a,
            &live,
            -0.3,
            &mut len_a,
            &mut rng_a,
        );
        let dir = prop_b.propose_direction(&start, &live, &mut rng_b).unwrap();
        let direct = slice_step(&g, &start, 0.0, &dir, -0.3, &mut len_b, &mut rng_b);
        assert_eq!(chained, direct);
        assert_eq!(len_a.value(), len_b.value());
    }

    #[test]
    fn chain_evals_are_the_sum_of_step_evals() {
        let g = Geometry::hyperpyramid(4);
        let model = CountingModel {
            inner: g.clone(),
            calls: Cell::new(0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let live = LiveSet::from_prior(&g, 20, &mut rng);
        let mut prop = ProposalState::new(ProposalKind::CubeHarm);
        let mut len = AdaptiveLength::new();
        let out = run_chain(
            &model, &[0.5; 4], 0.0, 16, &mut prop, &live, -0.25, &mut len, &mut rng,
        );
        assert_eq!(out.evals, model.calls.get());
        assert!(out.evals >= 16);
    }

    #[test]
    fn chains_end_above_the_threshold() {
        let g = Geometry::hyperpyramid(4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let live = LiveSet::from_prior(&g, 20, &mut rng);
        let mut prop = ProposalState::new(ProposalKind::CubeSlice);
        let mut len = AdaptiveLength::new();
        let threshold = -0.3;
        for _ in 0..1000 {
            let start = g.sample_restricted(threshold, &mut rng).unwrap();
            let ll = g.log_likelihood(&start);
            let out = run_chain(
                &g, &start, ll, 2, &mut prop, &live, threshold, &mut len, &mut rng,
            );
            assert!(out.end_loglike > threshold);
            assert!(g.in_support(&out.end_point));
        }
    }
}
