//! Average assignment maps.

mod bspline;
mod quad;
pub mod su2;

pub use bspline::{BSplineDensity, Side};
pub use quad::GaussRule;
pub use su2::{aam_su2_pm, aam_su2_state, PmCurve, PmMethod, PmValues};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::{make_bns_channel, make_partial_trace_channel};
use crate::error::{Error, Result};
use crate::linalg::{c, BlochVector, CMatrix, DensityMatrix};

/// Smallest `rho00` accepted by the detector assignments.
pub const EPS_DIV: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum AssignmentMethod {
    AamPure,
    AamMixed { d_e: usize },
    Mep,
}

impl std::fmt::Display for AssignmentMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AssignmentMethod::AamPure => write!(f, "aam-pure"),
            AssignmentMethod::AamMixed { d_e } => write!(f, "aam-mixed(dE={d_e})"),
            AssignmentMethod::Mep => write!(f, "mep"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssignmentResult {
    pub state: DensityMatrix,
    pub method: AssignmentMethod,
    /// `||Lambda[state] - rho||_1`.
    pub residual: f64,
    pub prior_env_dim: usize,
    /// Numerical error estimate of the assignment entries (0 for closed forms).
    pub error_estimate: f64,
}

/// `rho (x) I/d_E`; the same for pure and mixed priors.
pub fn aam_partial_trace(rho: &DensityMatrix, d_e: usize) -> Result<AssignmentResult> {
    if d_e == 0 {
        return Err(Error::InvalidParameter("environment dimension must be at least 1".into()));
    }
    let state = rho.kron(&DensityMatrix::maximally_mixed(d_e));
    let residual = make_partial_trace_channel(rho.dim(), d_e).residual(&state, rho)?;
    Ok(AssignmentResult {
        state,
        method: AssignmentMethod::AamPure,
        residual,
        prior_env_dim: d_e,
        error_estimate: 0.0,
    })
}

/// Entries of the symmetric detector pattern: `psi00`, the row-0 entries,
/// the remaining diagonal and the off-diagonal block entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BnsPattern {
    pub circle: f64,
    pub triangle: Complex64,
    pub diamond: f64,
    pub square: f64,
}

impl BnsPattern {
    pub fn to_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(self.circle, 0.0);
        for l in 1..4 {
            m[(0, l)] = self.triangle;
            m[(l, 0)] = self.triangle.conj();
            for k in 1..4 {
                m[(l, k)] = if l == k { c(self.diamond, 0.0) } else { c(self.square, 0.0) };
            }
        }
        m
    }

    /// Reads the pattern back from a matrix with the detector symmetry.
    pub fn from_matrix(m: &CMatrix) -> Self {
        let tri = (m[(0, 1)] + m[(0, 2)] + m[(0, 3)]) / 3.0;
        let dia = (m[(1, 1)].re + m[(2, 2)].re + m[(3, 3)].re) / 3.0;
        let sq = (m[(1, 2)].re + m[(1, 3)].re + m[(2, 3)].re) / 3.0;
        Self {
            circle: m[(0, 0)].re,
            triangle: tri,
            diamond: dia,
            square: sq,
        }
    }
}

fn check_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.dim(),
        });
    }
    let rho00 = rho.get(0, 0).re;
    if rho00 < EPS_DIV {
        return Err(Error::SingularEffectiveState {
            rho00,
            threshold: EPS_DIV,
        });
    }
    Ok(())
}

/// `□` of the mixed-prior detector assignment; `d_e = 1` is the pure prior.
pub fn bns_square(rho: &DensityMatrix, d_e: f64) -> f64 {
    let rho00 = rho.get(0, 0).re;
    let rho11 = rho.get(1, 1).re;
    let off = rho.get(0, 1).norm_sqr();
    d_e / (3.0 * d_e - 1.0) * off / rho00 - rho11 / (3.0 * (3.0 * d_e - 1.0))
}

fn bns_assignment(rho: &DensityMatrix, d_e: usize, method: AssignmentMethod) -> Result<AssignmentResult> {
    check_qubit(rho)?;
    if d_e == 0 {
        return Err(Error::InvalidParameter("environment dimension must be at least 1".into()));
    }
    let pattern = BnsPattern {
        circle: rho.get(0, 0).re,
        triangle: rho.get(0, 1) / 3f64.sqrt(),
        diamond: rho.get(1, 1).re / 3.0,
        square: bns_square(rho, d_e as f64),
    };
    let state = DensityMatrix::from_matrix_unchecked(pattern.to_matrix());
    let residual = make_bns_channel().residual(&state, rho)?;
    Ok(AssignmentResult {
        state,
        method,
        residual,
        prior_env_dim: d_e,
        error_estimate: 0.0,
    })
}

pub fn aam_bns_pure(rho: &DensityMatrix) -> Result<AssignmentResult> {
    bns_assignment(rho, 1, AssignmentMethod::AamPure)
}

pub fn aam_bns_mixed(rho: &DensityMatrix, d_e: usize) -> Result<AssignmentResult> {
    let method = if d_e == 1 {
        AssignmentMethod::AamPure
    } else {
        AssignmentMethod::AamMixed { d_e }
    };
    bns_assignment(rho, d_e, method)
}

/// `a = (d_E - 1) / (2 (3 d_E - 1))`, half the support of the distance law.
pub fn bns_prior_scale(d_e: f64) -> f64 {
    (d_e - 1.0) / (2.0 * (3.0 * d_e - 1.0))
}

/// Trace distance between mixed- and pure-prior detector assignments.
pub fn bns_prior_distance(rho: BlochVector, d_e: usize) -> Result<f64> {
    // rho00 = (1 + z)/2
    let rho00 = 0.5 * (1.0 + rho.z);
    if rho00 < EPS_DIV {
        return Err(Error::SingularEffectiveState {
            rho00,
            threshold: EPS_DIV,
        });
    }
    Ok(bns_prior_scale(d_e as f64) * (1.0 - rho.norm_sqr()) / (1.0 + rho.z))
}

/// Density of the prior distance for effective states uniform in the Bloch ball.
/// Accepts `d_e = f64::INFINITY` for the limiting law.
pub fn bns_prior_distance_pdf(delta: f64, d_e: f64) -> Result<f64> {
    let a = prior_scale_checked(d_e)?;
    if !(0.0..=2.0 * a).contains(&delta) {
        return Ok(0.0);
    }
    Ok(3.0 * (delta - 2.0 * a).powi(2) / (8.0 * a.powi(3)))
}

pub fn bns_prior_distance_cdf(delta: f64, d_e: f64) -> Result<f64> {
    let a = prior_scale_checked(d_e)?;
    Ok(if delta <= 0.0 {
        0.0
    } else if delta >= 2.0 * a {
        1.0
    } else {
        1.0 - (2.0 * a - delta).powi(3) / (8.0 * a.powi(3))
    })
}

fn prior_scale_checked(d_e: f64) -> Result<f64> {
    if !(d_e >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "distance law needs d_E >= 2 (got {d_e}); d_E = 1 gives a point mass at 0"
        )));
    }
    Ok(if d_e.is_infinite() { 1.0 / 6.0 } else { bns_prior_scale(d_e) })
}
