use rand::Rng;
use rand_distr::StandardNormal;

use super::{c, BlochVector, CMatrix, CVector, DensityMatrix, PureState};

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
pub fn haar_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    loop {
        let v = CVector::from_fn(dim, |_, _| complex_gaussian(rng));
        let n = v.norm();
        if n > 1e-300 {
            return PureState::new_unchecked(v / c(n, 0.0));
        }
    }
}

/// State induced on `dim` by a Haar-random purification with environment `d_e`.
pub fn induced_mixed<R: Rng + ?Sized>(dim: usize, d_e: usize, rng: &mut R) -> DensityMatrix {
    let psi = haar_pure(dim * d_e, rng);
    // amplitude psi[i * d_e + k] viewed as a dim x d_e matrix G; tr_E |psi><psi| = G G†
    let g = CMatrix::from_row_slice(dim, d_e, psi.amplitudes().as_slice());
    DensityMatrix::from_matrix_unchecked(super::hermitian_part(&(&g * g.adjoint())))
}

/// Uniform point in the unit ball.
pub fn uniform_bloch_ball<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let x: f64 = rng.random_range(-1.0..1.0);
        let y: f64 = rng.random_range(-1.0..1.0);
        let z: f64 = rng.random_range(-1.0..1.0);
        if x * x + y * y + z * z <= 1.0 {
            return BlochVector { x, y, z };
        }
    }
}
