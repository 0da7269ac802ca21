//! Maximum-entropy assignment for the angular-momentum channel.
//!
//! The lifted observables are `J_i / j`, so the solution is a thermal state
//! `exp(lambda n.J / j) / Z` and the mean polarization is the Brillouin
//! function of `lambda`.

use super::{MepSolution, MULTIPLIER_CAP_PER_DIM};
use crate::aam::su2::diagonal_in_direction;
use crate::error::{Error, Result};
use crate::linalg::{BlochVector, Spin};

const PURE_EDGE: f64 = 1e-12;

/// Normalized Boltzmann weights `p_m ~ exp(lambda m / j)` and `ln Z`.
fn weights(spin: Spin, lambda: f64) -> (Vec<f64>, f64) {
    let j = spin.j();
    let x: Vec<f64> = spin.m_values().iter().map(|m| lambda * m / j).collect();
    let top = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = x.iter().map(|v| (v - top).exp()).collect();
    let s: f64 = w.iter().sum();
    (w.iter().map(|v| v / s).collect(), top + s.ln())
}

/// `<m>/j` for weights `exp(lambda m / j)`.
pub fn brillouin(spin: Spin, lambda: f64) -> f64 {
    let j = spin.j();
    let l = lambda.abs();
    let value = if l < 1e-3 {
        let a = j + 0.5;
        (j + 1.0) / (3.0 * j) * l - (a.powi(4) - 1.0 / 16.0) / (45.0 * j.powi(4)) * l.powi(3)
    } else if l < 1.0 {
        // the coth form cancels badly here
        let (p, _) = weights(spin, l);
        p.iter().zip(spin.m_values()).map(|(p, m)| p * m / j).sum()
    } else {
        let a = j + 0.5;
        (a / (a * l / j).tanh() - 0.5 / (l / (2.0 * j)).tanh()) / j
    };
    value.copysign(lambda)
}

fn brillouin_slope(spin: Spin, lambda: f64) -> f64 {
    let j = spin.j();
    let (p, _) = weights(spin, lambda);
    let ms = spin.m_values();
    let mean: f64 = p.iter().zip(&ms).map(|(p, m)| p * m / j).sum();
    let sq: f64 = p.iter().zip(&ms).map(|(p, m)| p * (m / j).powi(2)).sum();
    (sq - mean * mean).max(0.0)
}

/// Solves `brillouin(spin, lambda) = r` for `|r| < 1`.
pub fn brillouin_inverse(spin: Spin, r: f64) -> Result<f64> {
    if !r.is_finite() || r.abs() >= 1.0 - PURE_EDGE {
        return Err(Error::RadiusOutOfRange(r));
    }
    let target = r.abs();
    if target == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while brillouin(spin, hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-8 * hi {
        let mid = 0.5 * (lo + hi);
        if brillouin(spin, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut lam = 0.5 * (lo + hi);
    for _ in 0..20 {
        let slope = brillouin_slope(spin, lam);
        if slope <= 0.0 {
            break;
        }
        let next = lam - (brillouin(spin, lam) - target) / slope;
        // stay inside the bisection bracket (slightly widened)
        if !(lo - 1e-8 * hi..=hi + 1e-8 * hi).contains(&next) {
            break;
        }
        let done = (next - lam).abs() <= 1e-15 * lam.max(1.0);
        lam = next;
        if done {
            break;
        }
    }
    Ok(lam.copysign(r))
}

/// `Z = sum_m exp(lambda m / j) = sinh((j+1/2) lambda / j) / sinh(lambda / (2j))`.
pub fn su2_partition(spin: Spin, lambda: f64) -> f64 {
    weights(spin, lambda).1.exp()
}

/// MEP for the angular-momentum channel given the effective Bloch vector.
pub fn mep_su2(spin: Spin, r_vec: BlochVector) -> Result<MepSolution> {
    let d = spin.dim();
    let r = r_vec.norm();
    let dir = if r > 0.0 {
        r_vec.scaled(1.0 / r).to_array()
    } else {
        [0.0, 0.0, 1.0]
    };
    let (lambda, boundary) = if r >= 1.0 - PURE_EDGE {
        (MULTIPLIER_CAP_PER_DIM * d as f64, true)
    } else {
        (brillouin_inverse(spin, r)?, false)
    };
    let (p, log_z) = if boundary {
        let mut p = vec![0.0; d];
        p[0] = 1.0;
        (p, weights(spin, lambda).1)
    } else {
        weights(spin, lambda)
    };
    let state = diagonal_in_direction(spin, &p, dir);
    let achieved = p.iter().zip(spin.m_values()).map(|(p, m)| p * m / spin.j()).sum::<f64>();
    let residual = dir
        .iter()
        .zip(r_vec.to_array())
        .fold(0.0_f64, |acc, (n, ri)| acc.max((achieved * n - ri).abs()));
    Ok(MepSolution {
        entropy: -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>(),
        state,
        multipliers: dir.iter().map(|n| -lambda * n).collect(),
        log_partition: log_z,
        residual,
        iterations: 0,
        converged: !boundary,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::make_su2_channel;
    use crate::mep::{mep_for_state, MepOptions};
    use crate::linalg::trace_distance;

    #[test]
    fn brillouin_forms_agree() {
        for twice in 1..=9 {
            let spin = Spin::from_twice(twice).unwrap();
            for &l in &[1e-4, 5e-4, 2e-3, 0.5, 0.999, 1.0, 3.0, 40.0] {
                let (p, _) = weights(spin, l);
                let direct: f64 = p.iter().zip(spin.m_values()).map(|(p, m)| p * m / spin.j()).sum();
                assert!((brillouin(spin, l) - direct).abs() < 1e-12, "j={} l={l}", spin);
                assert!((brillouin(spin, -l) + direct).abs() < 1e-12);
            }
        }
        let half = Spin::from_twice(1).unwrap();
        assert!((brillouin(half, 0.7) - 0.7f64.tanh()).abs() < 1e-14);
    }

    #[test]
    fn partition_closed_form() {
        let spin = Spin::from_twice(5).unwrap();
        let j = spin.j();
        for &l in &[0.3, 2.0] {
            let closed = ((j + 0.5) * l / j).sinh() / (l / (2.0 * j)).sinh();
            assert!((su2_partition(spin, l) / closed - 1.0).abs() < 1e-13);
        }
        assert!((su2_partition(spin, 0.0) - 6.0).abs() < 1e-13);
    }

    #[test]
    fn inverse_round_trip() {
        for twice in [1, 2, 3, 7, 20] {
            let spin = Spin::from_twice(twice).unwrap();
            for &r in &[-0.9, -1e-5, 1e-7, 0.1, 0.5, 0.99, 0.999999] {
                let lam = brillouin_inverse(spin, r).unwrap();
                assert!((brillouin(spin, lam) - r).abs() < 1e-12, "j={spin} r={r}");
            }
        }
        assert!(brillouin_inverse(Spin::from_twice(2).unwrap(), 1.0).is_err());
    }

    #[test]
    fn agrees_with_generic_solver() {
        let spin = Spin::from_twice(3).unwrap();
        let channel = make_su2_channel(spin);
        let opts = MepOptions::default();
        for r in [BlochVector::new(0.1, -0.2, 0.3).unwrap(), BlochVector::new(0.0, 0.0, -0.8).unwrap()] {
            let closed = mep_su2(spin, r).unwrap();
            assert!(closed.residual < 1e-12);
            let generic = mep_for_state(&channel, &r.to_density(), &opts).unwrap();
            assert!(trace_distance(&closed.state, &generic.state).unwrap() < 1e-8);
            assert!((closed.entropy - generic.entropy).abs() < 1e-8);
        }
    }

    #[test]
    fn edge_cases() {
        let spin = Spin::from_twice(4).unwrap();
        let mixed = mep_su2(spin, BlochVector::origin()).unwrap();
        assert!((mixed.state.matrix() - crate::linalg::DensityMatrix::maximally_mixed(5).matrix()).camax() < 1e-14);
        let pure = mep_su2(spin, BlochVector::new(0.0, 1.0, 0.0).unwrap()).unwrap();
        assert!(pure.boundary && !pure.converged);
        assert!((pure.state.purity() - 1.0).abs() < 1e-12);
        let ops = crate::linalg::angular_momentum(spin);
        assert!((pure.state.expectation(&ops.jy) - 2.0).abs() < 1e-12);
    }
}
