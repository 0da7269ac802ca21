//! Maximum-entropy assignments `psi = exp(-sum_i lambda_i Lambda*[O_i]) / Z`.

mod bns;
mod su2;

pub use bns::{bns_gibbs_pattern, mep_bns, BnsGibbs};
pub use su2::{brillouin, brillouin_inverse, mep_su2, su2_partition};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::channels::CoarseGrainingChannel;
use crate::error::{Error, Result};
use crate::linalg::{c, eigh, hermitian_part, pauli, CMatrix, DensityMatrix};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;
/// Multiplier norm cap per unit of Hilbert-space dimension.
pub const MULTIPLIER_CAP_PER_DIM: f64 = 50.0;

#[derive(Clone, Copy, Debug)]
pub struct MepOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MepOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MepSolution {
    pub state: DensityMatrix,
    pub multipliers: Vec<f64>,
    /// Natural log of the partition function `Z`.
    pub log_partition: f64,
    /// von Neumann entropy in nats.
    pub entropy: f64,
    /// `max_i |tr(O_i Lambda[state]) - o_i|`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the multipliers hit the cap (near-pure targets): the exact
    /// state is a limit not attained at finite multipliers.
    pub boundary: bool,
}

impl MepSolution {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("solution is serializable")
    }
}

/// Gibbs state of `-sum_i lambda_i H_i` and its log-partition function.
pub fn gibbs_state(lifted: &[CMatrix], lambda: &[f64]) -> (DensityMatrix, f64) {
    let g = gibbs(lifted, lambda);
    (g.state(), g.log_z)
}

pub fn log_partition(lifted: &[CMatrix], lambda: &[f64]) -> f64 {
    gibbs(lifted, lambda).log_z
}

struct Gibbs {
    exponents: DVector<f64>,
    vectors: CMatrix,
    weights: DVector<f64>,
    log_z: f64,
}

impl Gibbs {
    fn state(&self) -> DensityMatrix {
        let n = self.weights.len();
        let scaled = CMatrix::from_fn(n, n, |i, k| self.vectors[(i, k)] * self.weights[k]);
        DensityMatrix::from_matrix_unchecked(hermitian_part(&(&scaled * self.vectors.adjoint())))
    }

    /// `<H>` for each lifted observable.
    fn expectations(&self, lifted: &[CMatrix]) -> Vec<f64> {
        lifted
            .iter()
            .map(|h| {
                let hh = self.vectors.adjoint() * h * &self.vectors;
                (0..self.weights.len()).map(|a| self.weights[a] * hh[(a, a)].re).sum()
            })
            .collect()
    }

    /// Kubo-Mori covariance `-d<H_i>/d lambda_k`.
    fn covariance(&self, lifted: &[CMatrix], means: &[f64]) -> DMatrix<f64> {
        let n = self.weights.len();
        let rotated: Vec<CMatrix> = lifted.iter().map(|h| self.vectors.adjoint() * h * &self.vectors).collect();
        let mut kernel = DMatrix::zeros(n, n);
        let max_e = self.exponents.max();
        for a in 0..n {
            for b in 0..n {
                let (ea, eb) = (self.exponents[a], self.exponents[b]);
                kernel[(a, b)] = if (ea - eb).abs() < 1e-10 {
                    0.5 * (self.weights[a] + self.weights[b])
                } else {
                    // divided difference of exp, shifted by the largest exponent
                    ((ea - max_e).exp() - (eb - max_e).exp()) / (ea - eb) * ((max_e - self.log_z).exp())
                };
            }
        }
        let m = lifted.len();
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for k in i..m {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc += kernel[(a, b)] * (rotated[i][(a, b)] * rotated[k][(b, a)]).re;
                    }
                }
                let v = acc - means[i] * means[k];
                cov[(i, k)] = v;
                cov[(k, i)] = v;
            }
        }
        cov
    }
}

fn gibbs(lifted: &[CMatrix], lambda: &[f64]) -> Gibbs {
    let n = lifted[0].nrows();
    let mut x = CMatrix::zeros(n, n);
    for (h, &l) in lifted.iter().zip(lambda) {
        x -= h * c(l, 0.0);
    }
    let (exponents, vectors) = eigh(&x);
    let max_e = exponents.max();
    let shifted: DVector<f64> = exponents.map(|e| (e - max_e).exp());
    let sum = shifted.sum();
    Gibbs {
        weights: shifted / sum,
        log_z: max_e + sum.ln(),
        exponents,
        vectors,
    }
}

fn residual_of(means: &[f64], targets: &[f64]) -> Vec<f64> {
    means.iter().zip(targets).map(|(m, o)| m - o).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Pseudo-inverse solve of a symmetric PSD system.
fn psd_solve(a: &DMatrix<f64>, b: &[f64]) -> DVector<f64> {
    let eig = a.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cutoff = scale * 1e-13;
    let rhs = DVector::from_column_slice(b);
    let proj = eig.eigenvectors.transpose() * rhs;
    let mut out = DVector::zeros(b.len());
    for k in 0..b.len() {
        let lam = eig.eigenvalues[k];
        if lam > cutoff {
            out += eig.eigenvectors.column(k) * (proj[k] / lam);
        }
    }
    out
}

/// Newton solve of `tr(Lambda*[O_i] psi) = o_i` over the multipliers.
pub fn mep_generic(
    channel: &CoarseGrainingChannel,
    observables: &[CMatrix],
    targets: &[f64],
    opts: &MepOptions,
) -> Result<MepSolution> {
    if observables.len() != targets.len() || observables.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: observables.len(),
            found: targets.len(),
        });
    }
    let lifted = channel.dual_all(observables)?;
    let cap = MULTIPLIER_CAP_PER_DIM * channel.in_dim() as f64;
    let m = lifted.len();
    let mut lambda = vec![0.0; m];
    let mut g = gibbs(&lifted, &lambda);
    let mut means = g.expectations(&lifted);
    let mut f = residual_of(&means, targets);
    let mut boundary = false;
    let mut iterations = 0;
    let finish = |g: &Gibbs, lambda: Vec<f64>, f: &[f64], iterations: usize, converged: bool, boundary: bool| MepSolution {
        state: g.state(),
        entropy: g.state().entropy(),
        multipliers: lambda,
        log_partition: g.log_z,
        residual: max_abs(f),
        iterations,
        converged,
        boundary,
    };

    while max_abs(&f) > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence(Box::new(finish(&g, lambda, &f, iterations, false, boundary))));
        }
        iterations += 1;
        let cov = g.covariance(&lifted, &means);
        let step = psd_solve(&cov, &f);
        let f0 = norm_sq(&f);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = lambda.iter().zip(step.iter()).map(|(l, s)| l + t * s).collect();
            let norm = norm_sq(&trial).sqrt();
            let capped = norm > cap;
            if capped {
                trial.iter_mut().for_each(|v| *v *= cap / norm);
            }
            let gt = gibbs(&lifted, &trial);
            let mt = gt.expectations(&lifted);
            let ft = residual_of(&mt, targets);
            if norm_sq(&ft) <= (1.0 - 1e-4 * t) * f0 || capped && norm_sq(&ft) < f0 {
                accepted = Some((trial, gt, mt, ft, capped));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((l, gt, mt, ft, capped)) => {
                let stalled = capped && boundary && (f0 - norm_sq(&ft)) < 1e-14 * f0.max(1e-300);
                lambda = l;
                g = gt;
                means = mt;
                f = ft;
                boundary |= capped;
                if stalled {
                    break;
                }
            }
            None => {
                let sol = finish(&g, lambda, &f, iterations, false, boundary);
                if boundary {
                    return Ok(sol);
                }
                return Err(Error::InfeasibleTargets(Box::new(sol)));
            }
        }
    }
    let converged = max_abs(&f) <= opts.tol;
    Ok(finish(&g, lambda, &f, iterations, converged, boundary))
}

/// Tomographic qubit targets `(tr(rho sigma_x), tr(rho sigma_y), tr(rho sigma_z))`.
pub fn qubit_targets(rho: &DensityMatrix) -> Result<(Vec<CMatrix>, Vec<f64>)> {
    let b = rho.bloch()?;
    Ok((pauli().to_vec(), b.to_array().to_vec()))
}

/// Tomographic targets for a general effective state: the Hermitian basis
/// elements orthogonal to the identity.
pub fn tomographic_targets(rho: &DensityMatrix) -> (Vec<CMatrix>, Vec<f64>) {
    let d = rho.dim();
    let mut obs = Vec::new();
    // traceless diagonal generators
    for k in 1..d {
        let mut m = CMatrix::zeros(d, d);
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            m[(i, i)] = c(1.0 / norm, 0.0);
        }
        m[(k, k)] = c(-(k as f64) / norm, 0.0);
        obs.push(m);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut sym = CMatrix::zeros(d, d);
            sym[(i, j)] = c(s, 0.0);
            sym[(j, i)] = c(s, 0.0);
            let mut asym = CMatrix::zeros(d, d);
            asym[(i, j)] = c(0.0, -s);
            asym[(j, i)] = c(0.0, s);
            obs.push(sym);
            obs.push(asym);
        }
    }
    let targets = obs.iter().map(|o| rho.expectation(o)).collect();
    (obs, targets)
}

/// Solves the MEP problem for a tomographically known effective state.
pub fn mep_for_state(channel: &CoarseGrainingChannel, rho: &DensityMatrix, opts: &MepOptions) -> Result<MepSolution> {
    let (obs, targets) = if rho.dim() == 2 {
        qubit_targets(rho)?
    } else {
        tomographic_targets(rho)
    };
    mep_generic(channel, &obs, &targets, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_bns_channel, make_partial_trace_channel, make_su2_channel};
    use crate::linalg::{trace_distance, uniform_bloch_ball, BlochVector, Spin};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partial_trace_gives_product_with_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d_e in [2, 3, 4] {
            let ch = make_partial_trace_channel(2, d_e);
            for _ in 0..10 {
                let rho = uniform_bloch_ball(&mut rng).to_density();
                let sol = mep_for_state(&ch, &rho, &MepOptions::default()).unwrap();
                assert!(sol.converged && sol.residual < 1e-10);
                let expect = rho.kron(&DensityMatrix::maximally_mixed(d_e));
                assert!(trace_distance(&sol.state, &expect).unwrap() < 1e-8);
            }
        }
    }

    #[test]
    fn bns_at_maximally_mixed() {
        let sol = mep_for_state(&make_bns_channel(), &DensityMatrix::maximally_mixed(2), &MepOptions::default()).unwrap();
        let expect = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (k, v) in expect.iter().enumerate() {
            assert!((sol.state.get(k, k).re - v).abs() < 1e-10);
        }
        assert!((sol.multipliers[2] + 0.5 * 3f64.ln()).abs() < 1e-9);
        assert!(sol.multipliers[0].abs() < 1e-12 && sol.multipliers[1].abs() < 1e-12);
        // exp(-lambda_z diag(1,-1,-1,-1)) / Z reproduces it
        let lz = -0.5 * 3f64.ln();
        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![c(-lz, 0.0), c(lz, 0.0), c(lz, 0.0), c(lz, 0.0)]));
        let e = crate::linalg::hermitian_exp(&d).unwrap();
        let z = e.trace().re;
        assert!(((e / c(z, 0.0)) - sol.state.matrix()).camax() < 1e-10);
    }

    #[test]
    fn spin_half_identity_channel() {
        let ch = make_su2_channel(Spin::from_twice(1).unwrap());
        let rho = BlochVector::new(0.2, 0.5, -0.4).unwrap().to_density();
        let sol = mep_for_state(&ch, &rho, &MepOptions::default()).unwrap();
        assert!(trace_distance(&sol.state, &rho).unwrap() < 1e-10);
    }

    #[test]
    fn gibbs_consistency_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let ch = make_bns_channel();
        let lifted = ch.dual_all(&pauli()).unwrap();
        for _ in 0..20 {
            let lam: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (psi, _) = gibbs_state(&lifted, &lam);
            let h = 1e-6;
            for i in 0..3 {
                let mut up = lam.clone();
                let mut dn = lam.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (log_partition(&lifted, &up) - log_partition(&lifted, &dn)) / (2.0 * h);
                let exact = -(&lifted[i] * psi.matrix()).trace().re;
                assert!((fd - exact).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn covariance_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ch = make_su2_channel(Spin::from_twice(3).unwrap());
        let lifted = ch.dual_all(&pauli()).unwrap();
        let lam: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = gibbs(&lifted, &lam);
        let means = g.expectations(&lifted);
        let cov = g.covariance(&lifted, &means);
        let h = 1e-6;
        for k in 0..3 {
            let mut up = lam.clone();
            let mut dn = lam.clone();
            up[k] += h;
            dn[k] -= h;
            let mu = gibbs(&lifted, &up).expectations(&lifted);
            let md = gibbs(&lifted, &dn).expectations(&lifted);
            for i in 0..3 {
                let fd = -(mu[i] - md[i]) / (2.0 * h);
                assert!((fd - cov[(i, k)]).abs() < 1e-7, "{fd} vs {}", cov[(i, k)]);
            }
        }
    }

    #[test]
    fn near_pure_target_reports_boundary() {
        let ch = make_bns_channel();
        let rho = BlochVector::new(0.0, 0.0, 1.0).unwrap().to_density();
        let sol = mep_for_state(&ch, &rho, &MepOptions::default()).unwrap();
        assert!(sol.residual < 1e-6);
        let fine = BlochVector::new(0.3, 0.0, 0.4).unwrap().to_density();
        let sol2 = mep_for_state(&ch, &fine, &MepOptions::default()).unwrap();
        assert!(!sol2.boundary && sol2.converged);
    }

    #[test]
    fn json_export() {
        let sol = mep_for_state(&make_bns_channel(), &DensityMatrix::maximally_mixed(2), &MepOptions::default()).unwrap();
        let v = sol.to_json();
        assert!(v["multipliers"].is_array());
        assert!(v["state"][0][0].is_array());
        assert!(v["entropy"].is_number());
    }

    #[test]
    fn general_tomographic_targets() {
        let rho = DensityMatrix::maximally_mixed(3);
        let (obs, t) = tomographic_targets(&rho);
        assert_eq!(obs.len(), 8);
        assert!(t.iter().all(|v| v.abs() < 1e-15));
        let ch = make_partial_trace_channel(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let rho = crate::linalg::induced_mixed(3, 3, &mut rng);
        let sol = mep_for_state(&ch, &rho, &MepOptions::default()).unwrap();
        let expect = rho.kron(&DensityMatrix::maximally_mixed(2));
        assert!(trace_distance(&sol.state, &expect).unwrap() < 1e-8);
    }
}
