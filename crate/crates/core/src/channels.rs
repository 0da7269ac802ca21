//! Coarse-graining channels as real transfer matrices over Hermitian operator bases.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ComplexMatrixRepr;
use crate::linalg::{
    angular_momentum, c, hermitian_part, identity, induced_mixed, pauli, trace_norm_hermitian, unitary_exp,
    CMatrix, DensityMatrix, Spin,
};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Number of Hermitian basis elements for dimension `n`.
fn basis_len(n: usize) -> usize {
    n * n
}

/// Coordinates of a Hermitian matrix in the orthonormal basis
/// `{E_kk, (E_ij + E_ji)/sqrt2, i(E_ij - E_ji)/sqrt2 : i < j}`.
pub fn hermitian_coords(m: &CMatrix) -> DVector<f64> {
    let n = m.nrows();
    let mut v = DVector::zeros(basis_len(n));
    for k in 0..n {
        v[k] = m[(k, k)].re;
    }
    let mut idx = n;
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            // use the Hermitian average so tiny asymmetries do not leak
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            v[idx] = s2 * z.re;
            v[idx + 1] = s2 * z.im;
            idx += 2;
        }
    }
    v
}

/// Inverse of [`hermitian_coords`].
pub fn from_hermitian_coords(v: &DVector<f64>, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = c(v[k], 0.0);
    }
    let mut idx = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = c(v[idx], v[idx + 1]) * SQRT_HALF;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            idx += 2;
        }
    }
    m
}

/// Basis element `k` of the Hermitian basis in dimension `n`.
pub fn hermitian_basis_element(n: usize, k: usize) -> CMatrix {
    let mut v = DVector::zeros(basis_len(n));
    v[k] = 1.0;
    from_hermitian_coords(&v, n)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    PartialTrace { d_s: usize, d_e: usize },
    Bns,
    Su2 { spin: Spin },
    Custom { name: String },
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelKind::PartialTrace { d_s, d_e } => write!(f, "ptrace(dS={d_s},dE={d_e})"),
            ChannelKind::Bns => write!(f, "bns"),
            ChannelKind::Su2 { spin } => write!(f, "su2(j={spin})"),
            ChannelKind::Custom { name } => write!(f, "custom({name})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoarseGrainingChannel {
    kind: ChannelKind,
    in_dim: usize,
    out_dim: usize,
    /// `out_dim^2 x in_dim^2`, acting on Hermitian coordinates.
    transfer: DMatrix<f64>,
}

impl CoarseGrainingChannel {
    /// Builds the channel from its action on matrix units `|i><j|`.
    pub fn from_matrix_units(
        kind: ChannelKind,
        in_dim: usize,
        out_dim: usize,
        action: impl Fn(usize, usize) -> CMatrix,
    ) -> Self {
        let units: Vec<Vec<CMatrix>> = (0..in_dim)
            .map(|i| (0..in_dim).map(|j| action(i, j)).collect())
            .collect();
        let mut transfer = DMatrix::zeros(basis_len(out_dim), basis_len(in_dim));
        for b in 0..basis_len(in_dim) {
            let e = hermitian_basis_element(in_dim, b);
            let mut image = CMatrix::zeros(out_dim, out_dim);
            for i in 0..in_dim {
                for j in 0..in_dim {
                    let w = e[(i, j)];
                    if w != c(0.0, 0.0) {
                        image += &units[i][j] * w;
                    }
                }
            }
            transfer.set_column(b, &hermitian_coords(&image));
        }
        Self {
            kind,
            in_dim,
            out_dim,
            transfer,
        }
    }

    pub fn from_transfer(kind: ChannelKind, in_dim: usize, out_dim: usize, transfer: DMatrix<f64>) -> Result<Self> {
        if transfer.nrows() != basis_len(out_dim) || transfer.ncols() != basis_len(in_dim) {
            return Err(Error::DimensionMismatch {
                expected: basis_len(out_dim) * basis_len(in_dim),
                found: transfer.len(),
            });
        }
        Ok(Self {
            kind,
            in_dim,
            out_dim,
            transfer,
        })
    }

    pub fn kind(&self) -> &ChannelKind {
        &self.kind
    }

    pub fn label(&self) -> String {
        self.kind.to_string()
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn transfer(&self) -> &DMatrix<f64> {
        &self.transfer
    }

    /// Forward action on a Hermitian matrix.
    pub fn forward_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.in_dim || !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: m.nrows(),
            });
        }
        Ok(from_hermitian_coords(&(&self.transfer * hermitian_coords(m)), self.out_dim))
    }

    pub fn forward(&self, psi: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_matrix_unchecked(self.forward_matrix(psi.matrix())?))
    }

    /// Trace-dual action on a Hermitian observable.
    pub fn dual(&self, o: &CMatrix) -> Result<CMatrix> {
        if o.nrows() != self.out_dim || !o.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                found: o.nrows(),
            });
        }
        Ok(from_hermitian_coords(&(self.transfer.transpose() * hermitian_coords(o)), self.in_dim))
    }

    /// Lifted observables `Lambda*[O_i]` for a list of effective observables.
    pub fn dual_all(&self, obs: &[CMatrix]) -> Result<Vec<CMatrix>> {
        obs.iter().map(|o| self.dual(o)).collect()
    }

    /// Trace norm `||Lambda[psi] - rho||_1`.
    pub fn residual(&self, psi: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
        let out = self.forward_matrix(psi.matrix())?;
        if rho.dim() != self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                found: rho.dim(),
            });
        }
        Ok(trace_norm_hermitian(&(out - rho.matrix())))
    }

    pub fn to_json(&self) -> ChannelJson {
        let complex = self.transfer.map(|x| c(x, 0.0));
        ChannelJson {
            label: self.label(),
            kind: self.kind.clone(),
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            transfer: ComplexMatrixRepr::from(&complex),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelJson {
    pub label: String,
    pub kind: ChannelKind,
    pub in_dim: usize,
    pub out_dim: usize,
    pub transfer: ComplexMatrixRepr,
}

impl ChannelJson {
    pub fn into_channel(self) -> Result<CoarseGrainingChannel> {
        let m = self.transfer.to_matrix()?;
        if let Some(z) = m.iter().find(|z| z.im != 0.0) {
            return Err(Error::InvalidParameter(format!("transfer entry {z} is not real")));
        }
        CoarseGrainingChannel::from_transfer(self.kind, self.in_dim, self.out_dim, m.map(|z| z.re))
    }
}

fn unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = c(1.0, 0.0);
    m
}

/// Trace over the environment factor of `d_s x d_e`.
pub fn make_partial_trace_channel(d_s: usize, d_e: usize) -> CoarseGrainingChannel {
    CoarseGrainingChannel::from_matrix_units(ChannelKind::PartialTrace { d_s, d_e }, d_s * d_e, d_s, |a, b| {
        let (i, k) = (a / d_e, a % d_e);
        let (j, l) = (b / d_e, b % d_e);
        if k == l {
            unit(d_s, i, j)
        } else {
            CMatrix::zeros(d_s, d_s)
        }
    })
}

/// Image of `|a><b|` under the blurred-and-saturated detector, basis `|00>,|01>,|10>,|11>`.
pub fn bns_table(a: usize, b: usize) -> CMatrix {
    let s = 1.0 / 3f64.sqrt();
    match (a, b) {
        (0, 0) => unit(2, 0, 0),
        (0, _) => unit(2, 0, 1) * c(s, 0.0),
        (_, 0) => unit(2, 1, 0) * c(s, 0.0),
        (x, y) if x == y => unit(2, 1, 1),
        _ => CMatrix::zeros(2, 2),
    }
}

pub fn make_bns_channel() -> CoarseGrainingChannel {
    CoarseGrainingChannel::from_matrix_units(ChannelKind::Bns, 4, 2, bns_table)
}

/// Deviation of a 4 -> 2 channel from the compact detector form
/// `[[psi00, (psi01+psi02+psi03)/sqrt3], [.., psi11+psi22+psi33]]`,
/// probed on the full Hermitian basis.
pub fn bns_compact_form_defect(channel: &CoarseGrainingChannel) -> Result<f64> {
    let s = 1.0 / 3f64.sqrt();
    let mut worst = 0.0_f64;
    for k in 0..16 {
        let psi = hermitian_basis_element(4, k);
        let out = channel.forward_matrix(&psi)?;
        let off = (psi[(0, 1)] + psi[(0, 2)] + psi[(0, 3)]) * s;
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[psi[(0, 0)], off, off.conj(), psi[(1, 1)] + psi[(2, 2)] + psi[(3, 3)]],
        );
        worst = worst.max((out - expect).camax());
    }
    Ok(worst)
}

/// `Lambda_J[psi] = (I + (1/j) sum_i tr(psi J_i) sigma_i) / 2`.
pub fn make_su2_channel(spin: Spin) -> CoarseGrainingChannel {
    let ops = angular_momentum(spin);
    let j = spin.j();
    let sigma = pauli();
    let js = [&ops.jx, &ops.jy, &ops.jz];
    CoarseGrainingChannel::from_matrix_units(ChannelKind::Su2 { spin }, spin.dim(), 2, |a, b| {
        let mut out = if a == b { identity(2) * c(0.5, 0.0) } else { CMatrix::zeros(2, 2) };
        for (ji, si) in js.iter().zip(sigma.iter()) {
            // tr(|a><b| J) = J_ba
            out += si * (ji[(b, a)] * c(0.5 / j, 0.0));
        }
        out
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SymmetryCheck {
    pub passed: bool,
    pub max_residual: f64,
}

/// Samples `n` random states and measures `max ||Lambda[U psi U†] - Lambda[psi]||_1`.
pub fn check_symmetry<R: Rng + ?Sized>(
    channel: &CoarseGrainingChannel,
    u: &CMatrix,
    n_samples: usize,
    rng: &mut R,
) -> Result<SymmetryCheck> {
    if u.nrows() != channel.in_dim() {
        return Err(Error::DimensionMismatch {
            expected: channel.in_dim(),
            found: u.nrows(),
        });
    }
    let d = channel.in_dim();
    let mut worst = 0.0_f64;
    for _ in 0..n_samples {
        let psi = induced_mixed(d, d, rng);
        let moved = psi.conjugate_by(u);
        let a = channel.forward_matrix(moved.matrix())?;
        let b = channel.forward_matrix(psi.matrix())?;
        worst = worst.max(trace_norm_hermitian(&(a - b)));
    }
    Ok(SymmetryCheck {
        passed: worst < 1e-10,
        max_residual: worst,
    })
}

/// A random symmetry of the detector channel: `1 (+) V` where `V` acts on
/// `span{|01>,|10>,|11>}` and fixes `(|01>+|10>+|11>)/sqrt3`.
pub fn random_bns_symmetry<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let s = 1.0 / 3f64.sqrt();
    let v = DVector::from_vec(vec![c(s, 0.0), c(s, 0.0), c(s, 0.0)]);
    let proj = identity(3) - &v * v.adjoint();
    let g = CMatrix::from_fn(3, 3, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let h = &proj * hermitian_part(&g) * &proj;
    let block = unitary_exp(&h, rng.random_range(0.5..3.0));
    let mut u = identity(4);
    for i in 0..3 {
        for j in 0..3 {
            u[(i + 1, j + 1)] = block[(i, j)];
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_pure, BlochVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
        hermitian_part(&CMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
    }

    fn all_channels() -> Vec<CoarseGrainingChannel> {
        vec![
            make_partial_trace_channel(2, 3),
            make_partial_trace_channel(3, 2),
            make_bns_channel(),
            make_su2_channel(Spin::from_twice(1).unwrap()),
            make_su2_channel(Spin::from_twice(3).unwrap()),
            make_su2_channel(Spin::from_twice(6).unwrap()),
        ]
    }

    #[test]
    fn coords_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian(5, &mut rng);
        let back = from_hermitian_coords(&hermitian_coords(&h), 5);
        assert!((back - &h).camax() < 1e-15);
        // orthonormality: tr(E_a E_b) = delta_ab
        for a in 0..9 {
            for b in 0..9 {
                let t = (hermitian_basis_element(3, a) * hermitian_basis_element(3, b)).trace();
                assert!((t.re - if a == b { 1.0 } else { 0.0 }).abs() < 1e-15 && t.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn trace_preservation_duality_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for ch in all_channels() {
            for _ in 0..100 {
                let psi = induced_mixed(ch.in_dim(), 2, &mut rng);
                let out = ch.forward(&psi).unwrap();
                assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
                assert!(out.eigenvalues().min() > -1e-12, "{} not positive", ch.label());
                let o = random_hermitian(ch.out_dim(), &mut rng);
                let lhs = (&o * out.matrix()).trace().re;
                let rhs = (ch.dual(&o).unwrap() * psi.matrix()).trace().re;
                assert!((lhs - rhs).abs() < 1e-10);
            }
            assert!((ch.dual(&identity(ch.out_dim())).unwrap() - identity(ch.in_dim())).camax() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_examples() {
        let ch = make_partial_trace_channel(2, 2);
        let rho = BlochVector::new(0.2, 0.3, -0.4).unwrap().to_density();
        let out = ch.forward(&rho.kron(&DensityMatrix::maximally_mixed(2))).unwrap();
        assert!((out.matrix() - rho.matrix()).camax() < 1e-15);
        let [_, _, sz] = pauli();
        let lifted = ch.dual(&sz).unwrap();
        assert!((lifted - sz.kronecker(&identity(2))).camax() < 1e-15);
    }

    #[test]
    fn bns_table_examples() {
        let ch = make_bns_channel();
        assert!(bns_compact_form_defect(&ch).unwrap() < 1e-15);
        let one = DensityMatrix::basis_projector(2, 1).into_matrix();
        for k in [1, 2, 3] {
            let out = ch.forward(&DensityMatrix::basis_projector(4, k)).unwrap();
            assert!((out.matrix() - &one).camax() < 1e-15);
        }
        let out = ch.forward(&DensityMatrix::basis_projector(4, 0)).unwrap();
        assert!((out.matrix() - DensityMatrix::basis_projector(2, 0).matrix()).camax() < 1e-15);
        let mixed = ch.forward(&DensityMatrix::maximally_mixed(4)).unwrap();
        assert!((mixed.get(0, 0).re - 0.25).abs() < 1e-15 && (mixed.get(1, 1).re - 0.75).abs() < 1e-15);
        assert!(ch.forward(&DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn bns_duals() {
        let ch = make_bns_channel();
        let [sx, _, sz] = pauli();
        let lz = ch.dual(&sz).unwrap();
        let expect = CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)]));
        assert!((lz - expect).camax() < 1e-15);
        let lx = ch.dual(&sx).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for l in 1..4 {
            assert!((lx[(0, l)].re - s).abs() < 1e-15 && (lx[(l, 0)].re - s).abs() < 1e-15);
        }
        assert!(lx[(1, 2)].norm() < 1e-15);
    }

    #[test]
    fn bns_is_not_a_partial_trace() {
        let ch = make_bns_channel();
        let a = ch.forward(&DensityMatrix::basis_projector(4, 1)).unwrap();
        let b = ch.forward(&DensityMatrix::basis_projector(4, 2)).unwrap();
        assert_eq!(a, b);
        let pt = make_partial_trace_channel(2, 2);
        let a2 = pt.forward(&DensityMatrix::basis_projector(4, 1)).unwrap();
        let b2 = pt.forward(&DensityMatrix::basis_projector(4, 2)).unwrap();
        assert_ne!(a2, b2);
    }

    #[test]
    fn su2_examples() {
        let spin = Spin::from_twice(3).unwrap();
        let ch = make_su2_channel(spin);
        let mixed = ch.forward(&DensityMatrix::maximally_mixed(4)).unwrap();
        assert!((mixed.matrix() - identity(2) * c(0.5, 0.0)).camax() < 1e-15);
        let top = ch.forward(&DensityMatrix::basis_projector(4, 0)).unwrap();
        assert!((top.matrix() - DensityMatrix::basis_projector(2, 0).matrix()).camax() < 1e-15);
        let ops = angular_momentum(spin);
        let [sx, sy, sz] = pauli();
        for (s, j) in [(sx, &ops.jx), (sy, &ops.jy), (sz, &ops.jz)] {
            assert!((ch.dual(&s).unwrap() - j * c(1.0 / spin.j(), 0.0)).camax() < 1e-14);
        }

        let half = make_su2_channel(Spin::from_twice(1).unwrap());
        let rho = BlochVector::new(0.1, -0.6, 0.3).unwrap().to_density();
        assert!((half.forward(&rho).unwrap().matrix() - rho.matrix()).camax() < 1e-15);
    }

    #[test]
    fn su2_rotational_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for twice in [2, 3, 5] {
            let spin = Spin::from_twice(twice).unwrap();
            let ch = make_su2_channel(spin);
            let ops = angular_momentum(spin);
            let half = angular_momentum(Spin::from_twice(1).unwrap());
            for _ in 0..100 {
                let psi = induced_mixed(spin.dim(), 3, &mut rng);
                let n = crate::linalg::uniform_bloch_ball(&mut rng);
                let axis = n.scaled(1.0 / n.norm()).to_array();
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let r = ops.rotation(axis, theta);
                let r2 = half.rotation(axis, theta);
                let lhs = ch.forward(&psi.conjugate_by(&r)).unwrap();
                let rhs = ch.forward(&psi).unwrap().conjugate_by(&r2);
                assert!(trace_norm_hermitian(&(lhs.matrix() - rhs.matrix())) < 1e-10);
            }
        }
    }

    #[test]
    fn symmetry_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pt = make_partial_trace_channel(2, 2);
        let ue = unitary_exp(&random_hermitian(2, &mut rng), 1.0);
        let u = identity(2).kronecker(&ue);
        assert!(check_symmetry(&pt, &u, 50, &mut rng).unwrap().passed);

        let bns = make_bns_channel();
        let sym = random_bns_symmetry(&mut rng);
        let r = check_symmetry(&bns, &sym, 50, &mut rng).unwrap();
        assert!(r.passed, "residual {}", r.max_residual);

        let mut swap = CMatrix::zeros(4, 4);
        swap[(0, 1)] = c(1.0, 0.0);
        swap[(1, 0)] = c(1.0, 0.0);
        swap[(2, 2)] = c(1.0, 0.0);
        swap[(3, 3)] = c(1.0, 0.0);
        assert!(!check_symmetry(&bns, &swap, 50, &mut rng).unwrap().passed);
        assert!(check_symmetry(&bns, &identity(3), 1, &mut rng).is_err());
    }

    #[test]
    fn json_round_trip() {
        let ch = make_su2_channel(Spin::from_twice(3).unwrap());
        let json = serde_json::to_string(&ch.to_json()).unwrap();
        let back: ChannelJson = serde_json::from_str(&json).unwrap();
        let ch2 = back.into_channel().unwrap();
        assert_eq!(ch2.transfer(), ch.transfer());
        assert_eq!(ch2.kind(), ch.kind());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = haar_pure(4, &mut rng).to_density();
        assert_eq!(ch.forward(&psi).unwrap(), ch2.forward(&psi).unwrap());
    }
}
