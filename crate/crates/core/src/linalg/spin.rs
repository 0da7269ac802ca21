use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{c, unitary_exp, CMatrix};
use crate::error::{Error, Result};

/// Half-integer spin, stored as `2j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::InvalidSpin("0".into()));
        }
        Ok(Self { twice })
    }

    /// Accepts `j` as a float; `2j` must be a positive integer.
    pub fn from_f64(j: f64) -> Result<Self> {
        let t = 2.0 * j;
        if !(t >= 1.0) || (t - t.round()).abs() > 1e-9 || t > 1e6 {
            return Err(Error::InvalidSpin(j.to_string()));
        }
        Self::from_twice(t.round() as u32)
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn j(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// Hilbert-space dimension `2j + 1`.
    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// Magnetic quantum number of basis index `k`: `m = j - k`.
    pub fn m(self, k: usize) -> f64 {
        self.j() - k as f64
    }

    pub fn m_values(self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.m(k)).collect()
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for Spin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidSpin(s.to_string());
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "2" => Self::from_twice(num),
                "1" => Self::from_twice(2 * num),
                _ => Err(bad()),
            }
        } else {
            Self::from_f64(s.parse().map_err(|_| bad())?)
        }
    }
}

impl Serialize for Spin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.j())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = f64::deserialize(d)?;
        Spin::from_f64(j).map_err(serde::de::Error::custom)
    }
}

/// Spin-j angular momentum components in the `|j, m>` basis, `m = j, ..., -j`.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub spin: Spin,
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
}

pub fn angular_momentum(spin: Spin) -> SpinOperators {
    let d = spin.dim();
    let j = spin.j();
    let mut jz = CMatrix::zeros(d, d);
    let mut jp = CMatrix::zeros(d, d);
    for k in 0..d {
        let m = spin.m(k);
        jz[(k, k)] = c(m, 0.0);
        if k > 0 {
            // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, and |m+1> has index k-1
            jp[(k - 1, k)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * c(0.5, 0.0);
    let jy = (&jp - &jm) * c(0.0, -0.5);
    SpinOperators { spin, jx, jy, jz }
}

impl SpinOperators {
    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    /// `n . J` for a (not necessarily unit) vector `n`.
    pub fn along(&self, n: [f64; 3]) -> CMatrix {
        &self.jx * c(n[0], 0.0) + &self.jy * c(n[1], 0.0) + &self.jz * c(n[2], 0.0)
    }

    pub fn casimir(&self) -> CMatrix {
        &self.jx * &self.jx + &self.jy * &self.jy + &self.jz * &self.jz
    }

    /// `exp(-i theta n.J)` for unit `n`.
    pub fn rotation(&self, axis: [f64; 3], theta: f64) -> CMatrix {
        unitary_exp(&self.along(axis), theta)
    }

    /// Unitary `R = exp(-i phi Jz) exp(-i theta Jy)` carrying `z` onto the
    /// direction `n`, so `R |m> ` is the `m` eigenvector of `n.J`.
    pub fn align_z_to(&self, n: [f64; 3]) -> CMatrix {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if norm == 0.0 {
            return CMatrix::identity(self.dim(), self.dim());
        }
        let theta = (n[2] / norm).clamp(-1.0, 1.0).acos();
        let phi = n[1].atan2(n[0]);
        let rz = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|k| num_complex::Complex64::from_polar(1.0, -phi * self.spin.m(k))),
        ));
        rz * unitary_exp(&self.jy, theta)
    }
}

/// Convenience wrapper: `exp(-i theta n.J)` for spin `spin`.
pub fn rotation(spin: Spin, axis: [f64; 3], theta: f64) -> CMatrix {
    angular_momentum(spin).rotation(axis, theta)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Power-basis coefficients in `u = cos(beta)` of `|d^j_{m'm}(beta)|^2`,
/// with `m' = j - row` and `m = j - col`. Degree at most `2j`.
pub fn wigner_d_squared_poly(spin: Spin, row: usize, col: usize) -> Vec<f64> {
    let t = spin.twice;
    let (a, b) = (row as u32, col as u32);
    assert!(a <= t && b <= t, "index out of range for spin {spin}");
    let prefactor = (factorial(t - a) * factorial(a) * factorial(t - b) * factorial(b)).sqrt();
    // d = sum_s w_s c^(A - 2s) s^(B + 2s), A = 2j + m - m', B = m' - m
    let s_lo = a.saturating_sub(b);
    let s_hi = a.min(t - b);
    let big_a = t + a - b;
    let big_b = i64::from(b) - i64::from(a);
    let weights: Vec<(u32, f64)> = (s_lo..=s_hi)
        .map(|s| {
            let sign = if (i64::from(s) + big_b).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let den = factorial(t - b - s) * factorial(s) * factorial((big_b + i64::from(s)) as u32) * factorial(a - s);
            (s, sign * prefactor / den)
        })
        .collect();
    let mut poly = vec![0.0; t as usize + 1];
    for &(s, ws) in &weights {
        for &(r, wr) in &weights {
            // C^p S^q with C = (1+u)/2, S = (1-u)/2, p + q = 2j
            let p = big_a - s - r;
            let q = t - p;
            let scale = ws * wr / 2f64.powi(t as i32);
            for i in 0..=p {
                for k in 0..=q {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    poly[(i + k) as usize] += scale * binomial(p, i) * binomial(q, k) * sign;
                }
            }
        }
    }
    poly
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use approx::assert_abs_diff_eq;

    fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
        a * b - b * a
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("3/2".parse::<Spin>().unwrap().twice(), 3);
        assert_eq!("1.5".parse::<Spin>().unwrap().twice(), 3);
        assert_eq!("2".parse::<Spin>().unwrap().twice(), 4);
        assert_eq!(Spin::from_twice(7).unwrap().to_string(), "7/2");
        assert_eq!(Spin::from_twice(2).unwrap().to_string(), "1");
        assert!("0.3".parse::<Spin>().is_err());
        assert!("0".parse::<Spin>().is_err());
        assert!("-1/2".parse::<Spin>().is_err());
    }

    #[test]
    fn spin_half_is_half_pauli() {
        let ops = angular_momentum(Spin::from_twice(1).unwrap());
        let [sx, sy, sz] = pauli();
        let h = c(0.5, 0.0);
        assert_abs_diff_eq!((&ops.jx - sx * h).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((&ops.jy - sy * h).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((&ops.jz - sz * h).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn spin_one_jz() {
        let ops = angular_momentum(Spin::from_twice(2).unwrap());
        for (k, m) in [1.0, 0.0, -1.0].iter().enumerate() {
            assert_eq!(ops.jz[(k, k)].re, *m);
        }
    }

    #[test]
    fn commutators_and_casimir_up_to_31_halves() {
        for twice in 1..=31 {
            let spin = Spin::from_twice(twice).unwrap();
            let ops = angular_momentum(spin);
            let i = c(0.0, 1.0);
            let tol = 1e-10;
            assert!((commutator(&ops.jx, &ops.jy) - &ops.jz * i).camax() < tol);
            assert!((commutator(&ops.jy, &ops.jz) - &ops.jx * i).camax() < tol);
            assert!((commutator(&ops.jz, &ops.jx) - &ops.jy * i).camax() < tol);
            let j = spin.j();
            let target = CMatrix::identity(spin.dim(), spin.dim()) * c(j * (j + 1.0), 0.0);
            assert!((ops.casimir() - target).camax() < tol);
        }
    }

    #[test]
    fn casimir_three_halves() {
        let ops = angular_momentum(Spin::from_twice(3).unwrap());
        let target = CMatrix::identity(4, 4) * c(15.0 / 4.0, 0.0);
        assert!((ops.casimir() - target).camax() < 1e-12);
    }

    #[test]
    fn wigner_poly_matches_rotation_matrix() {
        for twice in 1..=9 {
            let spin = Spin::from_twice(twice).unwrap();
            let ops = angular_momentum(spin);
            for beta in [0.0, 0.4, 1.3, 2.2, std::f64::consts::PI] {
                let d = unitary_exp(&ops.jy, beta);
                let u: f64 = f64::cos(beta);
                for a in 0..spin.dim() {
                    let mut col_sum = 0.0;
                    for b in 0..spin.dim() {
                        let poly = wigner_d_squared_poly(spin, a, b);
                        let val: f64 = poly.iter().rev().fold(0.0, |acc, &co| acc * u + co);
                        assert_abs_diff_eq!(val, d[(a, b)].norm_sqr(), epsilon = 1e-10);
                        col_sum += val;
                    }
                    assert_abs_diff_eq!(col_sum, 1.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn align_z_maps_jz_to_direction() {
        let ops = angular_momentum(Spin::from_twice(3).unwrap());
        let n = [0.3, -0.5, 0.2];
        let norm = (0.09f64 + 0.25 + 0.04).sqrt();
        let unit = [n[0] / norm, n[1] / norm, n[2] / norm];
        let r = ops.align_z_to(n);
        let rotated = &r * &ops.jz * r.adjoint();
        assert!((rotated - ops.along(unit)).camax() < 1e-12);
    }
}
