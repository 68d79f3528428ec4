//! Test geometries with analytic enclosed volume.
//!
//! Three families, each available at any dimension: a correlated Gaussian
//! (ellipsoidal contours), a hyperpyramid (difficult convex contours:
//! concentric cubes), and a Gaussian shell (non-convex annular contours).
//! For each, the log of the prior volume enclosed above a likelihood
//! threshold is known in closed form, which is what makes the shrinkage
//! test possible.
//!
//! All volumes are handled in log space — `(2λ)^100` underflows long before
//! the interesting part of a run ends.

use rand::Rng;

use crate::linalg::sample_unit_ball;
use crate::Model;

/// Correlation of the Gaussian setup's covariance (unit diagonal).
pub const GAUSS_RHO: f64 = 0.95;
/// Mahalanobis radius of the ellipsoid the Gaussian run starts from.
pub const GAUSS_INIT_RADIUS: f64 = 1.0;
/// Center of the pyramid and shell problems in every coordinate.
pub const CUBE_CENTER: f64 = 0.5;
/// Shell radius.
pub const SHELL_RADIUS: f64 = 0.4;
/// Shell width parameter.
pub const SHELL_WIDTH: f64 = 0.004;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("unknown geometry id `{0}` (expected gauss<d>, pyramid<d> or shell<d>, e.g. gauss16)")]
    UnknownId(String),
    #[error("unknown geometry kind `{0}` (expected gauss, pyramid or shell)")]
    UnknownKind(String),
    #[error("geometry dimension must be at least 1")]
    ZeroDimension,
    #[error("log-likelihood {0} exceeds the geometry maximum 0")]
    AboveMaximum(f64),
    #[error("level set at log-likelihood {0} has zero volume")]
    EmptyLevelSet(f64),
    #[error("threshold {0} is outside the exactly-sampleable range")]
    ThresholdOutOfRange(f64),
    #[error("no exact constrained sampler for geometry `{0}`")]
    NoExactSampler(String),
}

/// One test problem: a log-likelihood over a uniform prior, with analytic
/// enclosed volume and exact prior sampling.
///
/// Immutable after construction; operations are pure apart from the
/// samplers, which draw only from their passed-in random stream.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Centered Gaussian with covariance `Σ_ij = ρ` off-diagonal, unit
    /// diagonal, on unbounded support. Runs start from an exact uniform
    /// population inside the Mahalanobis-`init_radius` ellipsoid; the
    /// problem is self-similar, so shrinkage statistics do not depend on
    /// that choice.
    CorrelatedGaussian {
        d: usize,
        rho: f64,
        init_radius: f64,
    },
    /// `log L = -max_i |x_i - 1/2|` on the unit cube. Contours are
    /// concentric cubes of side `2λ`, so `V = (2λ)^d` exactly.
    Hyperpyramid { d: usize },
    /// `log L = -((‖x - 1/2‖² - R²) / w)²` on the unit cube. Contours are
    /// annuli that become thinner as the threshold rises; not self-similar.
    GaussianShell { d: usize, radius: f64, width: f64 },
}

impl Geometry {
    pub fn correlated_gaussian(d: usize) -> Self {
        Geometry::CorrelatedGaussian {
            d,
            rho: GAUSS_RHO,
            init_radius: GAUSS_INIT_RADIUS,
        }
    }

    pub fn hyperpyramid(d: usize) -> Self {
        Geometry::Hyperpyramid { d }
    }

    pub fn gaussian_shell(d: usize) -> Self {
        Geometry::GaussianShell {
            d,
            radius: SHELL_RADIUS,
            width: SHELL_WIDTH,
        }
    }

    /// Parse a geometry id such as `gauss16`, `pyramid4` or `shell8`.
    /// Any positive dimension is accepted, not just the six named setups.
    pub fn from_id(id: &str) -> Result<Self, GeometryError> {
        for (prefix, make) in [
            (
                "gauss",
                Geometry::correlated_gaussian as fn(usize) -> Geometry,
            ),
            ("pyramid", Geometry::hyperpyramid),
            ("shell", Geometry::gaussian_shell),
        ] {
            if let Some(rest) = id.strip_prefix(prefix) {
                let d: usize = rest
                    .parse()
                    .map_err(|_| GeometryError::UnknownId(id.to_string()))?;
                if d == 0 {
                    return Err(GeometryError::ZeroDimension);
                }
                return Ok(make(d));
            }
        }
        Err(GeometryError::UnknownId(id.to_string()))
    }

    /// Generic `--geometry kind --dim d` form. Accepts both the short ids
    /// and the descriptive kind names.
    pub fn from_kind_dim(kind: &str, d: usize) -> Result<Self, GeometryError> {
        if d == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        match kind {
            "gauss" | "correlated-gaussian" => Ok(Geometry::correlated_gaussian(d)),
            "pyramid" | "hyperpyramid" => Ok(Geometry::hyperpyramid(d)),
            "shell" | "gaussian-shell" => Ok(Geometry::gaussian_shell(d)),
            other => Err(GeometryError::UnknownKind(other.to_string())),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Geometry::CorrelatedGaussian { d, .. } => format!("gauss{d}"),
            Geometry::Hyperpyramid { d } => format!("pyramid{d}"),
            Geometry::GaussianShell { d, .. } => format!("shell{d}"),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Geometry::CorrelatedGaussian { d, .. }
            | Geometry::Hyperpyramid { d }
            | Geometry::GaussianShell { d, .. } => d,
        }
    }

    /// The supremum of the log-likelihood (attained at the center for the
    /// pyramid/Gaussian and on the shell radius for the shell).
    pub fn max_log_likelihood(&self) -> f64 {
        0.0
    }

    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        match *self {
            Geometry::CorrelatedGaussian { d, rho, .. } => -0.5 * mahalanobis_sq(x, d, rho),
            Geometry::Hyperpyramid { .. } => {
                let mut worst = 0.0f64;
                for &xi in x {
                    worst = worst.max((xi - CUBE_CENTER).abs());
                }
                -worst
            }
            Geometry::GaussianShell { radius, width, .. } => {
                let r2: f64 = x.iter().map(|&xi| (xi - CUBE_CENTER).powi(2)).sum();
                let t = (r2 - radius * radius) / width;
                -(t * t)
            }
        }
    }

    /// Log of the prior volume enclosed above `loglike`, up to a single
    /// additive constant per geometry (only ratios are consumed).
    pub fn log_enclosed_volume(&self, loglike: f64) -> Result<f64, GeometryError> {
        if loglike > self.max_log_likelihood() {
            return Err(GeometryError::AboveMaximum(loglike));
        }
        match *self {
            Geometry::CorrelatedGaussian { d, .. } => {
                // Ellipsoid of Mahalanobis radius m = sqrt(-2 loglike): V ∝ m^d.
                if loglike == 0.0 {
                    return Err(GeometryError::EmptyLevelSet(loglike));
                }
                Ok(d as f64 * 0.5 * (-2.0 * loglike).ln())
            }
            Geometry::Hyperpyramid { d } => {
                let half_side = -loglike;
                if half_side == 0.0 {
                    return Err(GeometryError::EmptyLevelSet(loglike));
                }
                Ok(d as f64 * (2.0 * half_side).ln())
            }
            Geometry::GaussianShell { d, radius, width } => {
                if loglike == 0.0 {
                    return Err(GeometryError::EmptyLevelSet(loglike));
                }
                let s = (-loglike).sqrt();
                let outer_sq = radius * radius + width * s;
                let inner_sq = (radius * radius - width * s).max(0.0);
                // log(r+^d - r-^d), computed in logs: the shells get thin.
                let dl = d as f64;
                let log_outer = dl * 0.5 * outer_sq.ln();
                if inner_sq == 0.0 {
                    Ok(log_outer)
                } else {
                    let log_ratio = dl * 0.5 * (inner_sq.ln() - outer_sq.ln());
                    Ok(log_outer + (-log_ratio.exp()).ln_1p())
                }
            }
        }
    }

    pub fn in_support(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Geometry::CorrelatedGaussian { .. } => true,
            Geometry::Hyperpyramid { .. } | Geometry::GaussianShell { .. } => {
                x.iter().all(|&v| (0.0..=1.0).contains(&v))
            }
        }
    }

    /// Exact draw from the initialization region: the unit cube for the
    /// pyramid and shell, the Mahalanobis-`init_radius` ellipsoid for the
    /// Gaussian (uniform-ball draw mapped through the covariance square
    /// root).
    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            Geometry::CorrelatedGaussian {
                d,
                rho,
                init_radius,
            } => {
                let ball = sample_unit_ball(d, rng);
                apply_sqrt_cov(&ball, rho, init_radius)
            }
            Geometry::Hyperpyramid { d } | Geometry::GaussianShell { d, .. } => {
                (0..d).map(|_| rng.random::<f64>()).collect()
            }
        }
    }

    /// Whether [`Geometry::sample_restricted`] is available.
    pub fn supports_exact_restricted(&self) -> bool {
        !matches!(self, Geometry::GaussianShell { .. })
    }

    /// Exact uniform draw from the prior restricted to `log L > threshold`.
    /// Available for the Gaussian (uniform in the threshold ellipsoid) and
    /// the pyramid (uniform in the threshold cube); the shell has no exact
    /// constrained sampler.
    pub fn sample_restricted<R: Rng + ?Sized>(
        &self,
        threshold: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>, GeometryError> {
        match *self {
            Geometry::CorrelatedGaussian { d, rho, .. } => {
                if threshold >= 0.0 {
                    return Err(GeometryError::ThresholdOutOfRange(threshold));
                }
                let m = (-2.0 * threshold).sqrt();
                let ball = sample_unit_ball(d, rng);
                Ok(apply_sqrt_cov(&ball, rho, m))
            }
            Geometry::Hyperpyramid { d } => {
                let half_side = -threshold;
                if !(0.0..=CUBE_CENTER).contains(&half_side) || half_side == 0.0 {
                    return Err(GeometryError::ThresholdOutOfRange(threshold));
                }
                Ok((0..d)
                    .map(|_| CUBE_CENTER + half_side * (2.0 * rng.random::<f64>() - 1.0))
                    .collect())
            }
            Geometry::GaussianShell { .. } => Err(GeometryError::NoExactSampler(self.id())),
        }
    }

    /// Iteration cap after which a shell run restarts from fresh prior
    /// samples, so runs never enter the regime where the annulus leaves the
    /// unit cube. `None` for the self-similar geometries.
    pub fn default_restart_length(&self) -> Option<usize> {
        match *self {
            Geometry::GaussianShell { d, .. } => Some(if d < 8 { 3000 } else { 6000 }),
            _ => None,
        }
    }
}

impl Model for Geometry {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn log_likelihood(&self, x: &[f64]) -> f64 {
        self.log_likelihood(x)
    }

    fn in_support(&self, x: &[f64]) -> bool {
        self.in_support(x)
    }
}

/// `xᵀ Σ⁻¹ x` for the equicorrelation matrix `Σ = (1-ρ)I + ρ11ᵀ`, using its
/// closed-form inverse.
fn mahalanobis_sq(x: &[f64], d: usize, rho: f64) -> f64 {
    let sum: f64 = x.iter().sum();
    let sq: f64 = x.iter().map(|v| v * v).sum();
    let c = rho / (1.0 + (d as f64 - 1.0) * rho);
    (sq - c * sum * sum) / (1.0 - rho)
}

/// `scale · Σ^{1/2} u` via the closed-form symmetric square root of the
/// equicorrelation matrix: eigenvalue `1+(d-1)ρ` along the diagonal
/// direction, `1-ρ` on its complement.
fn apply_sqrt_cov(u: &[f64], rho: f64, scale: f64) -> Vec<f64> {
    let d = u.len() as f64;
    let low = (1.0 - rho).sqrt();
    let high = (1.0 + (d - 1.0) * rho).sqrt();
    let shift = (high - low) / d * u.iter().sum::<f64>();
    u.iter().map(|&ui| scale * (low * ui + shift)).collect()
}
