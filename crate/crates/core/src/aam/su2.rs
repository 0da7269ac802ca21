//! Average assignment for the angular-momentum channel.
//!
//! The probabilities `p_m(r)` follow from inverting the Radon transform of the
//! distribution of `<J_n>/j`: along any axis the diagonal weights of a random
//! state are Dirichlet distributed, so the projected densities are B-splines
//! with knots at `m/j`. The second derivative of those splines, weighted by
//! `|d^j_{mn}|^2` and integrated over directions, gives the unnormalized
//! weights exactly up to round-off.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::bspline::{BSplineDensity, Side};
use super::quad::GaussRule;
use super::{AssignmentMethod, AssignmentResult};
use crate::channels::make_su2_channel;
use crate::error::{Error, Result};
use crate::linalg::{angular_momentum, c, wigner_d_squared_poly, BlochVector, CMatrix, DensityMatrix, Spin};
use crate::montecarlo::{su2_symmetric_estimate, McConfig, Prior};

/// Default tolerance on the estimated error of each `p_m`.
pub const DEFAULT_QUAD_TOL: f64 = 1e-7;
/// Below this radius the uniform distribution is returned.
pub const SMALL_RADIUS: f64 = 1e-6;

const ROUNDING_SAFETY: f64 = 64.0;

#[derive(Clone, Debug)]
pub enum PmMethod {
    Quadrature,
    MonteCarlo(McConfig),
}

#[derive(Clone, Debug, Serialize)]
pub struct PmValues {
    /// Indexed by `m = j, j-1, ..., -j`.
    pub p: Vec<f64>,
    pub error_estimate: f64,
    /// Present for the Monte Carlo path.
    pub stderr: Option<Vec<f64>>,
    pub n_accepted: Option<u64>,
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

struct Accumulator {
    sum: f64,
    abs: f64,
}

impl Accumulator {
    fn new() -> Self {
        Self { sum: 0.0, abs: 0.0 }
    }

    fn add(&mut self, v: f64) {
        self.sum += v;
        self.abs += v.abs();
    }

    fn condition(&self) -> f64 {
        if self.sum == 0.0 {
            f64::INFINITY
        } else {
            self.abs / self.sum.abs()
        }
    }
}

fn quadrature_pm(spin: Spin, d_e: usize, r: f64, tol: f64) -> Result<PmValues> {
    let d = spin.dim();
    let j = spin.j();
    let levels: Vec<f64> = (0..d).map(|k| spin.m(k) / j).collect();
    let polys: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|m| (0..d).map(|n| wigner_d_squared_poly(spin, m, n)).collect())
        .collect();
    let deg = spin.twice() as usize;
    let q_max = deg.saturating_sub(2);

    let mut bulk: Vec<Accumulator> = (0..d).map(|_| Accumulator::new()).collect();
    let mut tail: Vec<Accumulator> = (0..d).map(|_| Accumulator::new()).collect();

    for n in 0..d {
        let mut knots: Vec<f64> = levels.iter().flat_map(|&l| std::iter::repeat_n(l, d_e)).collect();
        knots.push(levels[n]);
        let spline = BSplineDensity::new(knots);
        let breakpoints = spline.breakpoints();

        // bulk form: (1/r) int_{-r}^{r} P(t/r) M''(t) dt, plus the M' jumps
        let rule = GaussRule::for_degree(deg + spline.degree().saturating_sub(2));
        let mut cuts: Vec<f64> = breakpoints.iter().map(|&(v, _)| v).filter(|v| v.abs() < r).collect();
        cuts.push(-r);
        cuts.push(r);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut samples: Vec<(f64, f64)> = Vec::new();
        for w in cuts.windows(2) {
            for (t, wt) in rule.mapped(w[0], w[1]) {
                samples.push((t / r, wt * spline.eval(t, 2, Side::Right) / r));
            }
        }
        for &(tau, mult) in &breakpoints {
            if tau.abs() < r {
                let jump = spline.derivative_jump(tau, mult);
                if jump != 0.0 {
                    samples.push((tau / r, jump / r));
                }
            }
        }

        // tail form: iterated antiderivatives from the outside
        let (upper, _) = spline.tails(r, q_max);
        let (_, lower) = spline.tails(-r, q_max);
        let u_terms: Vec<f64> = (1..=deg + 1)
            .map(|k| match k {
                1 => spline.eval(r, 1, Side::Right),
                2 => spline.value(r),
                _ => {
                    let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                    s * upper[k - 3]
                }
            })
            .collect();
        let l_terms: Vec<f64> = (1..=deg + 1)
            .map(|k| match k {
                1 => spline.eval(-r, 1, Side::Left),
                2 => spline.eval(-r, 0, Side::Left),
                _ => lower[k - 3],
            })
            .collect();

        for m in 0..d {
            let poly = &polys[m][n];
            for &(u, w) in &samples {
                bulk[m].add(-w * poly_eval(poly, u));
            }
            let mut dpoly = poly.clone();
            let mut rpow = 1.0 / r;
            for k in 0..=deg {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                let hi = poly_eval(&dpoly, 1.0) * u_terms[k];
                let lo = poly_eval(&dpoly, -1.0) * l_terms[k];
                tail[m].add(-s * rpow * hi);
                tail[m].add(s * rpow * lo);
                dpoly = poly_derivative(&dpoly);
                rpow /= r;
            }
        }
    }

    let mut h = vec![0.0; d];
    let mut rel_err = vec![0.0; d];
    for m in 0..d {
        let (cb, ct) = (bulk[m].condition(), tail[m].condition());
        let (val, cond) = if cb <= ct { (bulk[m].sum, cb) } else { (tail[m].sum, ct) };
        h[m] = val;
        rel_err[m] = cond * f64::EPSILON * ROUNDING_SAFETY;
    }
    let total: f64 = h.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            estimate: f64::INFINITY,
            tol,
        });
    }

    // normalization cross-check against the unbiased projected density
    let unbiased = BSplineDensity::new(levels.iter().flat_map(|&l| std::iter::repeat_n(l, d_e)).collect());
    let reference = -2.0 * d as f64 * unbiased.eval(r, 1, Side::Right) / r;
    let norm_defect = if reference != 0.0 { (total / reference - 1.0).abs() } else { 0.0 };

    let p: Vec<f64> = h.iter().map(|v| v / total).collect();
    let spread: f64 = h.iter().zip(&rel_err).map(|(v, e)| (v * e).abs()).sum::<f64>() / total;
    let estimate = p
        .iter()
        .zip(&rel_err)
        .map(|(pm, e)| (pm * e).abs() + spread)
        .fold(norm_defect, f64::max);
    if !(estimate <= tol) {
        return Err(Error::QuadratureNonConvergence { estimate, tol });
    }
    Ok(PmValues {
        p,
        error_estimate: estimate,
        stderr: None,
        n_accepted: None,
    })
}

/// Weights `p_m(r)` of the average assignment in the `J_r` eigenbasis.
pub fn aam_su2_pm(spin: Spin, d_e: usize, r: f64, method: &PmMethod, tol: f64) -> Result<PmValues> {
    if d_e == 0 {
        return Err(Error::InvalidParameter("environment dimension must be at least 1".into()));
    }
    if !(0.0..=1.0 + 1e-12).contains(&r) {
        return Err(Error::RadiusOutOfRange(r));
    }
    let r = r.min(1.0);
    let d = spin.dim();
    let exact = |p: Vec<f64>| PmValues {
        p,
        error_estimate: 0.0,
        stderr: None,
        n_accepted: None,
    };
    if let PmMethod::MonteCarlo(config) = method {
        let prior = if d_e == 1 { Prior::Pure } else { Prior::Mixed { d_e } };
        let est = su2_symmetric_estimate(spin, &[r], config, prior).pop().expect("one radius")?;
        return Ok(PmValues {
            p: (0..d).map(|k| est.mean_state.get(k, k).re).collect(),
            error_estimate: config.epsilon,
            stderr: Some((0..d).map(|k| est.stderr_re[(k, k)]).collect()),
            n_accepted: Some(est.n_accepted),
        });
    }
    if spin.twice() == 1 {
        // identity channel: the assignment is rho itself
        return Ok(exact(vec![0.5 * (1.0 + r), 0.5 * (1.0 - r)]));
    }
    if r < SMALL_RADIUS {
        return Ok(exact(vec![1.0 / d as f64; d]));
    }
    if r == 1.0 {
        let mut p = vec![0.0; d];
        p[0] = 1.0;
        return Ok(exact(p));
    }
    quadrature_pm(spin, d_e, r, tol)
}

/// `sum_m p_m |m_n><m_n|` in the basis aligned with `r_vec`.
pub fn diagonal_in_direction(spin: Spin, p: &[f64], direction: [f64; 3]) -> DensityMatrix {
    let ops = angular_momentum(spin);
    let rot = ops.align_z_to(direction);
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(p.len(), p.iter().map(|&v| c(v, 0.0))));
    DensityMatrix::from_matrix_unchecked(crate::linalg::hermitian_part(&(&rot * diag * rot.adjoint())))
}

pub fn aam_su2_state(spin: Spin, d_e: usize, r_vec: BlochVector, method: &PmMethod, tol: f64) -> Result<AssignmentResult> {
    let method_tag = if d_e == 1 {
        AssignmentMethod::AamPure
    } else {
        AssignmentMethod::AamMixed { d_e }
    };
    let channel = make_su2_channel(spin);
    let rho = r_vec.to_density();
    let r = r_vec.norm();
    let (state, error_estimate) = if r == 0.0 {
        (DensityMatrix::maximally_mixed(spin.dim()), 0.0)
    } else {
        let pm = aam_su2_pm(spin, d_e, r, method, tol)?;
        (diagonal_in_direction(spin, &pm.p, r_vec.to_array()), pm.error_estimate)
    };
    let residual = channel.residual(&state, &rho)?;
    Ok(AssignmentResult {
        state,
        method: method_tag,
        residual,
        prior_env_dim: d_e,
        error_estimate,
    })
}

/// `p_m(r)` on a grid, rows indexed by `m = j..-j`.
#[derive(Clone, Debug, Serialize)]
pub struct PmCurve {
    pub spin: Spin,
    pub d_e: usize,
    pub r_grid: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub max_error_estimate: f64,
}

impl PmCurve {
    pub fn compute(spin: Spin, d_e: usize, r_grid: &[f64], tol: f64) -> Result<Self> {
        let cols: Vec<PmValues> = r_grid
            .par_iter()
            .map(|&r| aam_su2_pm(spin, d_e, r, &PmMethod::Quadrature, tol))
            .collect::<Result<_>>()?;
        Ok(Self::from_columns(spin, d_e, r_grid, &cols))
    }

    pub fn from_columns(spin: Spin, d_e: usize, r_grid: &[f64], cols: &[PmValues]) -> Self {
        let d = spin.dim();
        let p = (0..d).map(|m| cols.iter().map(|col| col.p[m]).collect()).collect();
        let max_error_estimate = cols.iter().map(|c| c.error_estimate).fold(0.0, f64::max);
        Self {
            spin,
            d_e,
            r_grid: r_grid.to_vec(),
            p,
            max_error_estimate,
        }
    }

    /// CSV with header `m,r,p`, `r` to 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,r,p\n");
        for (k, row) in self.p.iter().enumerate() {
            let m = self.spin.m(k);
            for (r, p) in self.r_grid.iter().zip(row) {
                out.push_str(&format!("{m},{},{p:e}\n", format_sig(*r, 12)));
            }
        }
        out
    }
}

/// `x` with `sig` significant digits, trailing zeros trimmed.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spin(twice: u32) -> Spin {
        Spin::from_twice(twice).unwrap()
    }

    fn pm(twice: u32, d_e: usize, r: f64) -> Vec<f64> {
        aam_su2_pm(spin(twice), d_e, r, &PmMethod::Quadrature, DEFAULT_QUAD_TOL).unwrap().p
    }

    #[test]
    fn matches_reference_values_for_three_halves() {
        // reference values cross-checked against epsilon-ball sampling
        let p = pm(3, 1, 0.5);
        let expect = [0.639_062_5, 0.067_187_5, 0.198_437_5, 0.095_312_5];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-6, "{p:?}");
        }
        let p2 = pm(3, 2, 0.5);
        let expect2 = [0.5922, 0.1644, 0.1448, 0.0987];
        for (a, b) in p2.iter().zip(expect2) {
            assert!((a - b).abs() < 1e-4, "{p2:?}");
        }
    }

    #[test]
    fn normalization_and_constraint() {
        for twice in [2, 3, 5, 7, 9] {
            for d_e in [1, twice as usize + 1] {
                for i in 1..20 {
                    let r = i as f64 / 20.0;
                    let p = pm(twice, d_e, r);
                    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    assert!(p.iter().all(|&v| v > -1e-10), "j={twice}/2 dE={d_e} r={r}: {p:?}");
                    // <J_z>/j must equal r
                    let s = spin(twice);
                    let mean: f64 = p.iter().enumerate().map(|(k, v)| v * s.m(k)).sum::<f64>() / s.j();
                    assert!((mean - r).abs() < 1e-8, "j={twice}/2 dE={d_e} r={r}: {mean}");
                }
            }
        }
    }

    #[test]
    fn endpoints() {
        let p0 = pm(5, 1, 0.0);
        assert!(p0.iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-15));
        let p1 = pm(5, 3, 1.0);
        assert_eq!(p1[0], 1.0);
        assert!(pm(3, 1, 0.999)[0] > 0.95);
        let tiny = pm(3, 1, 1e-4);
        assert!(tiny.iter().all(|&v| (v - 0.25).abs() < 1e-3));
        assert!(aam_su2_pm(spin(3), 1, 1.2, &PmMethod::Quadrature, 1e-7).is_err());
    }

    #[test]
    fn spin_one_with_derivative_jumps() {
        for r in [0.2, 0.5, 0.8] {
            let p = pm(2, 1, r);
            assert!((p[0] - p[2] - r).abs() < 1e-10, "{p:?}");
        }
    }

    #[test]
    fn large_environment_stays_accurate() {
        let p = aam_su2_pm(spin(7), 32, 0.5, &PmMethod::Quadrature, DEFAULT_QUAD_TOL).unwrap();
        let s = spin(7);
        let mean: f64 = p.p.iter().enumerate().map(|(k, v)| v * s.m(k)).sum::<f64>() / s.j();
        assert!((mean - 0.5).abs() < 1e-8);
        assert!(p.error_estimate < DEFAULT_QUAD_TOL);
    }

    #[test]
    fn state_covariance_and_trivial_cases() {
        let s = spin(3);
        let ops = angular_momentum(s);
        let r = BlochVector::new(0.2, -0.3, 0.4).unwrap();
        let a = aam_su2_state(s, 1, r, &PmMethod::Quadrature, 1e-7).unwrap();
        assert!(a.residual < 1e-8);
        let axis = [0.6, 0.0, 0.8];
        let theta = 0.9;
        let rot = ops.rotation(axis, theta);
        let rot2 = angular_momentum(spin(1)).rotation(axis, theta);
        let moved = r.to_density().conjugate_by(&rot2).bloch().unwrap();
        let b = aam_su2_state(s, 1, moved, &PmMethod::Quadrature, 1e-7).unwrap();
        let expect = a.state.conjugate_by(&rot);
        assert!((b.state.matrix() - expect.matrix()).camax() < 1e-8);

        let zero = aam_su2_state(s, 2, BlochVector::origin(), &PmMethod::Quadrature, 1e-7).unwrap();
        assert_eq!(zero.state, DensityMatrix::maximally_mixed(4));
        let north = BlochVector::new(0.0, 0.0, 1.0).unwrap();
        let half = aam_su2_state(spin(1), 1, north, &PmMethod::Quadrature, 1e-7).unwrap();
        assert!((half.state.matrix() - north.to_density().matrix()).camax() < 1e-15);
    }

    #[test]
    fn curve_csv() {
        let curve = PmCurve::compute(spin(3), 1, &[0.0, 0.5, 1.0 / 3.0], 1e-7).unwrap();
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("m,r,p"));
        assert!(csv.contains("1.5,0.333333333333,"));
        assert_eq!(csv.lines().count(), 1 + 4 * 3);
        assert_eq!(format_sig(0.25, 12), "0.25");
    }
}
