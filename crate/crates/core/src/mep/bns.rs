//! Closed-form Gibbs states of the detector channel.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use super::{MepOptions, MepSolution, MULTIPLIER_CAP_PER_DIM};
use crate::aam::BnsPattern;
use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;

/// `sinh(l)/l` and `(cosh(l) - sinh(l)/l)/l^2`, with series near zero.
fn shape_functions(l: f64) -> (f64, f64) {
    if l < 1e-3 {
        let l2 = l * l;
        (1.0 + l2 / 6.0 + l2 * l2 / 120.0, 1.0 / 3.0 + l2 / 30.0 + l2 * l2 / 840.0)
    } else {
        let s = l.sinh() / l;
        (s, (l.cosh() - s) / (l * l))
    }
}

/// Gibbs state of `-(lx X + ly Y + lz Z)` with `X, Y, Z` the lifted Paulis,
/// in the symmetric detector pattern.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BnsGibbs {
    pub lambda: [f64; 3],
    /// Partition function `Z = 2 (cosh l + e^lz)`.
    pub z: f64,
    pub log_z: f64,
    pub pattern: BnsPattern,
    /// Effective Bloch vector of the state.
    pub bloch: [f64; 3],
}

pub fn bns_gibbs_pattern(lambda: [f64; 3]) -> BnsGibbs {
    let [lx, ly, lz] = lambda;
    let l = (lx * lx + ly * ly + lz * lz).sqrt();
    let (s, _) = shape_functions(l);
    // everything is scaled by exp(-l_max) to stay finite
    let shift = l.max(lz);
    let cosh = 0.5 * ((l - shift).exp() + (-l - shift).exp());
    let sinh_over = if l < 1e-3 { s * (-shift).exp() } else { 0.5 * ((l - shift).exp() - (-l - shift).exp()) / l };
    let ez = (lz - shift).exp();
    let zs = 2.0 * (cosh + ez);
    let circle = (cosh - lz * sinh_over) / zs;
    let triangle = -Complex64::new(lx, -ly) * sinh_over / (3f64.sqrt() * zs);
    let square = (cosh + lz * sinh_over - ez) / (3.0 * zs);
    let pattern = BnsPattern {
        circle,
        triangle,
        diamond: (1.0 - circle) / 3.0,
        square,
    };
    let bloch = [
        -2.0 * lx * sinh_over / zs,
        -2.0 * ly * sinh_over / zs,
        -2.0 * (lz * sinh_over + ez) / zs,
    ];
    let log_z = zs.ln() + shift;
    BnsGibbs {
        lambda,
        z: log_z.exp(),
        log_z,
        pattern,
        bloch,
    }
}

/// Hessian of `ln Z`.
fn hessian(g: &BnsGibbs) -> Matrix3<f64> {
    let [lx, ly, lz] = g.lambda;
    let lv = Vector3::new(lx, ly, lz);
    let l = lv.norm();
    let (s, c2) = shape_functions(l);
    let shift = g.log_z;
    let scale = (-shift).exp();
    let mut d2 = Matrix3::identity() * s + lv * lv.transpose() * c2;
    d2 *= 2.0 * scale;
    d2[(2, 2)] += 2.0 * (lz - shift).exp();
    let grad = -Vector3::new(g.bloch[0], g.bloch[1], g.bloch[2]);
    d2 - grad * grad.transpose()
}

fn dual_objective(g: &BnsGibbs, r: &Vector3<f64>) -> f64 {
    g.log_z + Vector3::new(g.lambda[0], g.lambda[1], g.lambda[2]).dot(r)
}

/// Detector-channel MEP: Newton on the convex dual `ln Z + lambda . r`.
pub fn mep_bns(rho: &DensityMatrix, opts: &MepOptions) -> Result<MepSolution> {
    let b = rho.bloch()?;
    let r = Vector3::new(b.x, b.y, b.z);
    let cap = MULTIPLIER_CAP_PER_DIM * 4.0;
    let mut lam = Vector3::zeros();
    let mut g = bns_gibbs_pattern([0.0; 3]);
    let mut boundary = false;
    let residual = |g: &BnsGibbs| {
        (0..3).fold(0.0_f64, |m, i| m.max((g.bloch[i] - r[i]).abs()))
    };
    let mut iterations = 0;
    while residual(&g) > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence(Box::new(solution(&g, residual(&g), iterations, false, boundary))));
        }
        iterations += 1;
        let grad = r - Vector3::new(g.bloch[0], g.bloch[1], g.bloch[2]);
        let h = hessian(&g);
        let step = match h.cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -grad,
        };
        let f0 = dual_objective(&g, &r);
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let mut trial = lam + step * t;
            let capped = trial.norm() > cap;
            if capped {
                trial *= cap / trial.norm();
            }
            let gt = bns_gibbs_pattern([trial[0], trial[1], trial[2]]);
            let ft = dual_objective(&gt, &r);
            // near the optimum f is flat to round-off, so fall back on the residual
            let armijo = ft <= f0 + 1e-4 * t * slope || capped && ft < f0;
            if armijo || ft <= f0 + 1e-14 * f0.abs().max(1.0) && residual(&gt) < (1.0 - 1e-4 * t) * residual(&g) {
                next = Some((trial, gt, capped));
                break;
            }
            t *= 0.5;
        }
        match next {
            Some((trial, gt, capped)) => {
                let stalled = capped && boundary && (lam - trial).norm() < 1e-12;
                lam = trial;
                g = gt;
                boundary |= capped;
                if stalled {
                    break;
                }
            }
            None => break,
        }
    }
    let res = residual(&g);
    let converged = res <= opts.tol;
    if !converged && !boundary {
        return Err(Error::NonConvergence(Box::new(solution(&g, res, iterations, false, boundary))));
    }
    Ok(solution(&g, res, iterations, converged, boundary))
}

fn solution(g: &BnsGibbs, residual: f64, iterations: usize, converged: bool, boundary: bool) -> MepSolution {
    let state = DensityMatrix::from_matrix_unchecked(g.pattern.to_matrix());
    MepSolution {
        entropy: state.entropy(),
        state,
        multipliers: g.lambda.to_vec(),
        log_partition: g.log_z,
        residual,
        iterations,
        converged,
        boundary,
    }
}
