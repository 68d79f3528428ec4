//! The ten direction-proposal strategies.
//!
//! Each produces a slice direction from the chain's current point, the live
//! points and (for the region-* family) a covariance snapshot of the live
//! points. Directions carry scale where the method defines one: differential
//! vectors keep the distance between live points, region directions carry
//! the √eigenvalue of their principal axis, sphere directions are unit.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Geometry;
use crate::linalg::{
    gram_schmidt, sample_covariance, sample_unit_ball, sample_unit_sphere, CovarianceSnapshot,
};

/// Retries for degenerate raw batches before giving up on a Gram–Schmidt
/// prepared sequence.
const ORTHO_RETRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProposalKind {
    /// Slice along a uniformly random coordinate axis.
    #[serde(rename = "cube-slice")]
    CubeSlice,
    /// Slice along a uniformly random principal axis of the live-point
    /// covariance, scaled by √eigenvalue.
    #[serde(rename = "region-slice")]
    RegionSlice,
    /// Principal axes in descending-eigenvalue order, cycling.
    #[serde(rename = "region-seq-slice")]
    RegionSeqSlice,
    /// Hit-and-run: uniform direction from the unit sphere.
    #[serde(rename = "cube-harm")]
    CubeHarm,
    /// Whitened hit-and-run: covariance square root applied to a uniform
    /// unit-ball draw.
    #[serde(rename = "region-harm")]
    RegionHarm,
    /// d sphere directions orthogonalized by Gram–Schmidt, used in order.
    #[serde(rename = "cube-ortho-harm")]
    CubeOrthoHarm,
    /// d ball draws orthogonalized in whitened space, then mapped through
    /// the covariance square root, used in order.
    #[serde(rename = "region-ortho-harm")]
    RegionOrthoHarm,
    /// Difference vector of a random pair of distinct live points.
    #[serde(rename = "de-harm")]
    DeHarm,
    /// Pair difference with all but one random coordinate zeroed.
    #[serde(rename = "de1")]
    De1,
    /// Fair coin between de-harm and region-slice at each step.
    #[serde(rename = "de-mix")]
    DeMix,
}

impl ProposalKind {
    pub const ALL: [ProposalKind; 10] = [
        ProposalKind::CubeSlice,
        ProposalKind::RegionSlice,
        ProposalKind::RegionSeqSlice,
        ProposalKind::CubeHarm,
        ProposalKind::RegionHarm,
        ProposalKind::CubeOrthoHarm,
        ProposalKind::RegionOrthoHarm,
        ProposalKind::DeHarm,
        ProposalKind::De1,
        ProposalKind::DeMix,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            ProposalKind::CubeSlice => "cube-slice",
            ProposalKind::RegionSlice => "region-slice",
            ProposalKind::RegionSeqSlice => "region-seq-slice",
            ProposalKind::CubeHarm => "cube-harm",
            ProposalKind::RegionHarm => "region-harm",
            ProposalKind::CubeOrthoHarm => "cube-ortho-harm",
            ProposalKind::RegionOrthoHarm => "region-ortho-harm",
            ProposalKind::DeHarm => "de-harm",
            ProposalKind::De1 => "de1",
            ProposalKind::DeMix => "de-mix",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == s)
    }

    /// Whether the strategy consumes the live-point covariance snapshot
    /// (the region-* family, plus de-mix for its region-slice half).
    pub fn needs_covariance(&self) -> bool {
        matches!(
            self,
            ProposalKind::RegionSlice
                | ProposalKind::RegionSeqSlice
                | ProposalKind::RegionHarm
                | ProposalKind::RegionOrthoHarm
                | ProposalKind::DeMix
        )
    }

    /// Whether the strategy needs at least 3 live points (the de-* pair
    /// draws exclude the chain's current point).
    pub fn needs_pairs(&self) -> bool {
        matches!(
            self,
            ProposalKind::DeHarm | ProposalKind::De1 | ProposalKind::DeMix
        )
    }
}

impl fmt::Display for ProposalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ProposalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProposalKind::parse(s).ok_or_else(|| {
            let ids: Vec<&str> = ProposalKind::ALL.iter().map(|k| k.id()).collect();
            format!("unknown method `{s}` (valid: {})", ids.join(", "))
        })
    }
}

/// The K live points and their log-likelihoods.
#[derive(Debug, Clone)]
pub struct LiveSet {
    pub points: Vec<Vec<f64>>,
    pub loglikes: Vec<f64>,
}

impl LiveSet {
    pub fn new(points: Vec<Vec<f64>>, loglikes: Vec<f64>) -> Self {
        assert!(points.len() >= 2, "need at least 2 live points");
        assert_eq!(points.len(), loglikes.len());
        Self { points, loglikes }
    }

    /// Draw K exact prior samples from a geometry.
    pub fn from_prior<R: Rng + ?Sized>(g: &Geometry, k: usize, rng: &mut R) -> Self {
        let points: Vec<Vec<f64>> = (0..k).map(|_| g.sample_prior(rng)).collect();
        let loglikes = points.iter().map(|p| g.log_likelihood(p)).collect();
        Self::new(points, loglikes)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the lowest log-likelihood; ties break to the lowest index.
    pub fn worst_index(&self) -> usize {
        let mut worst = 0;
        for (i, &ll) in self.loglikes.iter().enumerate().skip(1) {
            if ll < self.loglikes[worst] {
                worst = i;
            }
        }
        worst
    }
}

/// Per-run mutable state of one proposal strategy: the covariance snapshot
/// for region-* kinds, the queue of prepared directions for the sequenced
/// kinds, and the cycling axis cursor.
#[derive(Debug, Clone)]
pub struct ProposalState {
    kind: ProposalKind,
    snapshot: Option<CovarianceSnapshot>,
    /// Prepared directions, consumed in order, refilled only when empty.
    pending: VecDeque<Vec<f64>>,
    axis_cursor: usize,
    /// Covariance refreshes that failed and kept the previous snapshot.
    pub covariance_warnings: u64,
}

impl ProposalState {
    pub fn new(kind: ProposalKind) -> Self {
        Self {
            kind,
            snapshot: None,
            pending: VecDeque::new(),
            axis_cursor: 0,
            covariance_warnings: 0,
        }
    }

    pub fn kind(&self) -> ProposalKind {
        self.kind
    }

    pub fn snapshot(&self) -> Option<&CovarianceSnapshot> {
        self.snapshot.as_ref()
    }

    /// Recompute the covariance snapshot from the live points (region-*
    /// family only; other kinds are left untouched). Prepared region
    /// directions are flushed and the sequential axis cursor restarts at the
    /// largest eigenvalue. A degenerate covariance keeps the previous
    /// snapshot and counts a warning.
    pub fn refresh_snapshot(&mut self, live: &LiveSet, epoch: usize) {
        if !self.kind.needs_covariance() {
            return;
        }
        match sample_covariance(&live.points) {
            Ok(mut snap) => {
                snap.epoch = epoch;
                self.snapshot = Some(snap);
            }
            Err(_) => {
                self.covariance_warnings += 1;
            }
        }
        self.pending.clear();
        self.axis_cursor = 0;
    }

    /// Produce a nonzero slice direction, or `None` when the strategy is
    /// stuck (degenerate pairs or batches, or a missing snapshot).
    pub fn propose_direction<R: Rng + ?Sized>(
        &mut self,
        current: &[f64],
        live: &LiveSet,
        rng: &mut R,
    ) -> Option<Vec<f64>> {
        let d = current.len();
        match self.kind {
            ProposalKind::CubeSlice => Some(axis_direction(d, rng.random_range(0..d))),
            ProposalKind::RegionSlice => self.region_slice(d, rng),
            ProposalKind::RegionSeqSlice => {
                let snap = self.snapshot.as_ref()?;
                let axis = self.axis_cursor % d;
                self.axis_cursor = (self.axis_cursor + 1) % d;
                Some(snap.scaled_principal_axis(axis))
            }
            ProposalKind::CubeHarm => Some(sample_unit_sphere(d, rng)),
            ProposalKind::RegionHarm => {
                let snap = self.snapshot.as_ref()?;
                Some(snap.apply_sqrt(&sample_unit_ball(d, rng)))
            }
            ProposalKind::CubeOrthoHarm => {
                if self.pending.is_empty() {
                    for _ in 0..ORTHO_RETRIES {
                        let raw: Vec<Vec<f64>> =
                            (0..d).map(|_| sample_unit_sphere(d, rng)).collect();
                        if let Ok(batch) = gram_schmidt(&raw) {
                            self.pending.extend(batch);
                            break;
                        }
                    }
                }
                self.pending.pop_front()
            }
            ProposalKind::RegionOrthoHarm => {
                let snap = self.snapshot.as_ref()?;
                if self.pending.is_empty() {
                    for _ in 0..ORTHO_RETRIES {
                        let raw: Vec<Vec<f64>> = (0..d).map(|_| sample_unit_ball(d, rng)).collect();
                        if let Ok(batch) = gram_schmidt(&raw) {
                            self.pending
                                .extend(batch.iter().map(|w| snap.apply_sqrt(w)));
                            break;
                        }
                    }
                }
                self.pending.pop_front()
            }
            ProposalKind::DeHarm => de_direction(current, live, rng, None),
            ProposalKind::De1 => {
                let axis = rng.random_range(0..d);
                de_direction(current, live, rng, Some(axis))
            }
            ProposalKind::DeMix => {
                if rng.random::<bool>() {
                    de_direction(current, live, rng, None)
                } else {
                    self.region_slice(d, rng)
                }
            }
        }
    }

    fn region_slice<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Option<Vec<f64>> {
        let snap = self.snapshot.as_ref()?;
        Some(snap.scaled_principal_axis(rng.random_range(0..d)))
    }
}

/// Unit vector along coordinate `axis`.
fn axis_direction(d: usize, axis: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[axis] = 1.0;
    v
}

/// Zero every component except `axis`.
fn restrict_to_axis(mut diff: Vec<f64>, axis: usize) -> Vec<f64> {
    for (i, v) in diff.iter_mut().enumerate() {
        if i != axis {
            *v = 0.0;
        }
    }
    diff
}

/// Differential-evolution direction: the difference of a random pair of
/// distinct live points, excluding any live point equal to the chain's
/// current position. With `keep_axis` set, all other components are zeroed.
/// Pairs are redrawn up to K² times before signalling stuck.
fn de_direction<R: Rng + ?Sized>(
    current: &[f64],
    live: &LiveSet,
    rng: &mut R,
    keep_axis: Option<usize>,
) -> Option<Vec<f64>> {
    let k = live.len();
    for _ in 0..k * k {
        let a = rng.random_range(0..k);
        let b = rng.random_range(0..k);
        if a == b {
            continue;
        }
        let (pa, pb) = (&live.points[a], &live.points[b]);
        if pa[..] == *current || pb[..] == *current {
            continue;
        }
        let diff: Vec<f64> = pa.iter().zip(pb).map(|(&x, &y)| x - y).collect();
        let diff = match keep_axis {
            Some(axis) => restrict_to_axis(diff, axis),
            None => diff,
        };
        if diff.iter().any(|&v| v != 0.0) {
            return Some(diff);
        }
    }
    None
}
