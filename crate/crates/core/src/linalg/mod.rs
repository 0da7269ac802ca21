//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Every matrix function of a Hermitian operator (exp, log, abs) goes through
//! a single eigendecomposition primitive, [`eigh`].

mod random;
mod spin;

pub use random::{haar_pure, induced_mixed, uniform_bloch_ball};
pub use spin::{angular_momentum, rotation, wigner_d_squared_poly, Spin, SpinOperators};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance for the Hermiticity and unit-trace checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-10;

pub(crate) const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Pauli matrices `[sigma_x, sigma_y, sigma_z]`.
pub fn pauli() -> [CMatrix; 3] {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

/// Largest entrywise deviation `|M_ij - conj(M_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let defect = hermiticity_defect(m);
    if defect > tol {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> DVector<f64> {
    eigh(m).0
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let weighted = DMatrix::from_fn(vals.len(), vals.len(), |i, k| vecs[(i, k)] * f(vals[k]));
    &weighted * vecs.adjoint()
}

/// Matrix exponential of a Hermitian matrix.
pub fn hermitian_exp(h: &CMatrix) -> Result<CMatrix> {
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    ensure_hermitian(h, HERMITIAN_TOL * scale)?;
    Ok(hermitian_function(h, f64::exp))
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = eigh(h);
    let phased = DMatrix::from_fn(vals.len(), vals.len(), |i, k| {
        vecs[(i, k)] * Complex64::from_polar(1.0, -t * vals[k])
    });
    &phased * vecs.adjoint()
}

/// Trace norm `sum |lambda_i|` of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    if m.nrows() == 2 {
        // closed form for 2x2: eigenvalues t/2 +- sqrt(d^2 + |b|^2)
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = m[(0, 1)];
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let mid = 0.5 * (a + d);
        return (mid + half_gap).abs() + (mid - half_gap).abs();
    }
    eigvalsh(m).iter().map(|v| v.abs()).sum()
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(0.5 * trace_norm_hermitian(&(a.matrix() - b.matrix())))
}

/// Which tensor factor `partial_trace` removes. States are ordered system ⊗ environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceOut {
    Environment,
    System,
}

/// Partial trace of a `d_s * d_e` operator.
pub fn partial_trace_matrix(m: &CMatrix, d_s: usize, d_e: usize, which: TraceOut) -> Result<CMatrix> {
    if m.nrows() != d_s * d_e || !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: d_s * d_e,
            found: m.nrows(),
        });
    }
    Ok(match which {
        TraceOut::Environment => CMatrix::from_fn(d_s, d_s, |i, j| {
            (0..d_e).map(|k| m[(i * d_e + k, j * d_e + k)]).sum()
        }),
        TraceOut::System => CMatrix::from_fn(d_e, d_e, |a, b| {
            (0..d_s).map(|i| m[(i * d_e + a, i * d_e + b)]).sum()
        }),
    })
}

pub fn partial_trace(state: &DensityMatrix, d_s: usize, d_e: usize, which: TraceOut) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(state.matrix(), d_s, d_e, which)?;
    Ok(DensityMatrix::from_matrix_unchecked(hermitian_part(&reduced)))
}

/// Hermitian, unit-trace, positive semidefinite complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_hermitian(&m, HERMITIAN_TOL)?;
        let tr = m.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = eigvalsh(&m).min();
        if min < PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { m })
    }

    /// Symmetrizes and rescales to unit trace before validating.
    pub fn normalized(m: CMatrix) -> Result<Self> {
        let h = hermitian_part(&m);
        let tr = h.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState(format!("trace {tr} cannot be normalized")));
        }
        Self::new(h / c(tr, 0.0))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: identity(dim) / c(dim as f64, 0.0),
        }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self { m: v * v.adjoint() }
    }

    pub fn basis_projector(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = c(1.0, 0.0);
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        eigvalsh(&self.m)
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            m: self.m.kronecker(&other.m),
        }
    }

    /// `tr(rho * O)`, real part.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        (&self.m * op).trace().re
    }

    pub fn conjugate_by(&self, u: &CMatrix) -> DensityMatrix {
        DensityMatrix {
            m: hermitian_part(&(u * &self.m * u.adjoint())),
        }
    }

    /// Bloch vector of a qubit state.
    pub fn bloch(&self) -> Result<BlochVector> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        let off = self.m[(0, 1)];
        Ok(BlochVector {
            x: 2.0 * off.re,
            y: -2.0 * off.im,
            z: self.m[(0, 0)].re - self.m[(1, 1)].re,
        })
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::io::matrix_to_nested(&self.m).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let m = crate::io::matrix_from_nested(&rows).map_err(serde::de::Error::custom)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    pub fn new(amps: CVector) -> Result<Self> {
        let n = amps.norm_squared();
        if (n - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("squared norm {n}, expected 1")));
        }
        Ok(Self { amps })
    }

    pub fn normalized(amps: CVector) -> Result<Self> {
        let n = amps.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Ok(Self { amps: amps / c(n, 0.0) })
    }

    pub(crate) fn new_unchecked(amps: CVector) -> Self {
        Self { amps }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = CVector::zeros(dim);
        amps[k] = c(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// Qubit state in the convention `rho = (I + r . sigma) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        if !(v.norm_sqr() <= 1.0 + HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!("Bloch vector norm {} exceeds 1", v.norm())));
        }
        Ok(v)
    }

    pub const fn origin() -> Self {
        Self { x: 0.0, y: 0.0, z: 0.0 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.5 * (1.0 + self.z), 0.0),
                c(0.5 * self.x, -0.5 * self.y),
                c(0.5 * self.x, 0.5 * self.y),
                c(0.5 * (1.0 - self.z), 0.0),
            ],
        );
        DensityMatrix::from_matrix_unchecked(m)
    }
}

impl std::str::FromStr for BlochVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParameter(format!("Bloch vector '{s}': {e}")))?;
        match parts.as_slice() {
            [x, y, z] => BlochVector::new(*x, *y, *z),
            _ => Err(Error::InvalidParameter(format!(
                "Bloch vector '{s}' needs three comma-separated components"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bell() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        PureState::new(v).unwrap().to_density()
    }

    #[test]
    fn trace_distance_basics() {
        let rho = BlochVector::new(0.3, -0.2, 0.5).unwrap().to_density();
        assert_abs_diff_eq!(trace_distance(&rho, &rho).unwrap(), 0.0, epsilon = 1e-15);
        let zero = DensityMatrix::basis_projector(2, 0);
        let one = DensityMatrix::basis_projector(2, 1);
        assert_abs_diff_eq!(trace_distance(&zero, &one).unwrap(), 1.0, epsilon = 1e-15);
        assert!(trace_distance(&zero, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        let z = CMatrix::zeros(3, 3);
        assert_abs_diff_eq!((hermitian_exp(&z).unwrap() - identity(3)).norm(), 0.0, epsilon = 1e-14);
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.7, 0.0), c(-1.3, 0.0)]));
        let e = hermitian_exp(&d).unwrap();
        assert_abs_diff_eq!(e[(0, 0)].re, 0.7f64.exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(e[(1, 1)].re, (-1.3f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(e[(0, 1)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(hermitian_exp(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn partial_trace_of_product_and_bell() {
        let rho = BlochVector::new(0.1, 0.4, -0.3).unwrap().to_density();
        let sigma = DensityMatrix::maximally_mixed(3);
        let prod = rho.kron(&sigma);
        let back = partial_trace(&prod, 2, 3, TraceOut::Environment).unwrap();
        assert_abs_diff_eq!((back.matrix() - rho.matrix()).norm(), 0.0, epsilon = 1e-15);
        let env = partial_trace(&prod, 2, 3, TraceOut::System).unwrap();
        assert_abs_diff_eq!((env.matrix() - sigma.matrix()).norm(), 0.0, epsilon = 1e-15);

        for which in [TraceOut::Environment, TraceOut::System] {
            let r = partial_trace(&bell(), 2, 2, which).unwrap();
            assert_abs_diff_eq!((r.matrix() - identity(2) * c(0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
        }
        assert!(partial_trace(&prod, 3, 3, TraceOut::Environment).is_err());
    }

    #[test]
    fn density_validation() {
        let bad_trace = identity(2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let not_psd = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(not_psd).is_err());
        assert!(DensityMatrix::new(bell().into_matrix()).is_ok());
    }

    #[test]
    fn bloch_round_trip_and_convention() {
        let b = BlochVector::new(0.3, -0.4, 0.2).unwrap();
        let rho = b.to_density();
        // rho01 = (x - i y)/2
        assert_abs_diff_eq!(rho.get(0, 1).re, 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.get(0, 1).im, 0.2, epsilon = 1e-15);
        let [sx, sy, sz] = pauli();
        assert_abs_diff_eq!(rho.expectation(&sx), b.x, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.expectation(&sy), b.y, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.expectation(&sz), b.z, epsilon = 1e-15);
        let back = rho.bloch().unwrap();
        assert_abs_diff_eq!(back.z, b.z, epsilon = 1e-15);
        assert_eq!((back.x, back.y), (b.x, b.y));
        assert!(BlochVector::new(1.0, 0.1, 0.0).is_err());
        assert_eq!("0, 0,0.7".parse::<BlochVector>().unwrap(), BlochVector::new(0.0, 0.0, 0.7).unwrap());
    }

    #[test]
    fn json_round_trip_validates() {
        let rho = BlochVector::new(0.3, -0.2, 0.5).unwrap().to_density();
        let json = serde_json::to_string(&rho).unwrap();
        assert!(json.starts_with("[[["));
        let back: DensityMatrix = serde_json::from_str(&json).unwrap();
        assert!((back.matrix() - rho.matrix()).camax() < 1e-15);
        assert!(serde_json::from_str::<DensityMatrix>("[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]").is_err());
    }

    #[test]
    fn entropy_of_mixed_and_pure() {
        assert_abs_diff_eq!(DensityMatrix::maximally_mixed(4).entropy(), 4f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(bell().entropy(), 0.0, epsilon = 1e-12);
    }
}
