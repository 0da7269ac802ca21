//! Rejection sampling over the set of fine-grained states compatible with
//! an effective state up to a trace-norm tolerance.
//!
//! Proposals are split into a fixed number of shards, each with its own
//! generator seeded `seed + shard`, so results do not depend on the thread
//! count.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::aam::{aam_bns_mixed, aam_partial_trace, aam_su2_state, bns_prior_distance, PmMethod};
use crate::channels::{ChannelKind, CoarseGrainingChannel};
use crate::error::{Error, Result};
use crate::io::matrix_to_nested;
use crate::linalg::{
    angular_momentum, c, eigh, haar_pure, induced_mixed, trace_distance, trace_norm_hermitian, uniform_bloch_ball,
    BlochVector, CMatrix, DensityMatrix, Spin,
};
use crate::mep::{mep_bns, mep_for_state, mep_su2, MepOptions};
use crate::stats::Histogram;

pub const DEFAULT_EPSILON: f64 = 0.025;
pub const SHARDS: u64 = 64;
/// Largest purification dimension `D * d_E` sampled for mixed priors.
pub const PURIFICATION_CAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "prior", rename_all = "snake_case")]
pub enum Prior {
    Pure,
    Mixed { d_e: usize },
}

impl Prior {
    pub fn env_dim(self) -> usize {
        match self {
            Prior::Pure => 1,
            Prior::Mixed { d_e } => d_e,
        }
    }

    fn check(self, dim: usize) -> Result<()> {
        match self {
            Prior::Mixed { d_e: 0 } => Err(Error::InvalidParameter("environment dimension must be at least 1".into())),
            Prior::Mixed { d_e } if dim * d_e > PURIFICATION_CAP => Err(Error::DimensionCap {
                found: dim * d_e,
                cap: PURIFICATION_CAP,
            }),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, dim: usize, rng: &mut R) -> DensityMatrix {
        match self {
            Prior::Pure => haar_pure(dim, rng).to_density(),
            Prior::Mixed { d_e } => induced_mixed(dim, d_e, rng),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct McConfig {
    pub epsilon: f64,
    pub n_proposed: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(epsilon: f64, n_proposed: u64, seed: u64) -> Self {
        Self {
            epsilon,
            n_proposed,
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive (got {})", self.epsilon)));
        }
        if self.n_proposed == 0 {
            return Err(Error::InvalidParameter("need at least one proposal".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SampleEstimate {
    pub mean_state: DensityMatrix,
    pub n_proposed: u64,
    pub n_accepted: u64,
    pub epsilon: f64,
    /// Standard errors of the real and imaginary parts of each entry.
    pub stderr_re: DMatrix<f64>,
    pub stderr_im: DMatrix<f64>,
    pub seed: u64,
    /// `(sum w)^2 / sum w^2`; equals `n_accepted` for unweighted sampling.
    pub effective_samples: f64,
}

impl SampleEstimate {
    pub fn acceptance_rate(&self) -> f64 {
        self.n_accepted as f64 / self.n_proposed as f64
    }

    /// Larger of the real and imaginary standard errors per entry.
    pub fn entrywise_stderr(&self) -> DMatrix<f64> {
        self.stderr_re.zip_map(&self.stderr_im, f64::max)
    }

    /// Largest `|target - mean| / (k stderr + slack)` over entries; `<= 1` means agreement.
    pub fn worst_ratio(&self, target: &CMatrix, k: f64, slack: f64) -> f64 {
        let m = self.mean_state.matrix();
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let d = target[(i, j)] - m[(i, j)];
                worst = worst
                    .max(d.re.abs() / (k * self.stderr_re[(i, j)] + slack))
                    .max(d.im.abs() / (k * self.stderr_im[(i, j)] + slack));
            }
        }
        worst
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
        };
        serde_json::json!({
            "mean_state": matrix_to_nested(self.mean_state.matrix()),
            "n_proposed": self.n_proposed,
            "n_accepted": self.n_accepted,
            "acceptance_rate": self.acceptance_rate(),
            "effective_samples": self.effective_samples,
            "epsilon": self.epsilon,
            "stderr_re": rows(&self.stderr_re),
            "stderr_im": rows(&self.stderr_im),
            "seed": self.seed,
        })
    }
}

/// Weighted first and second moments of accepted matrices.
#[derive(Clone, Debug)]
struct Moments {
    count: u64,
    sw: f64,
    sw2: f64,
    swx: DMatrix<f64>,
    swy: DMatrix<f64>,
    sw2x: DMatrix<f64>,
    sw2y: DMatrix<f64>,
    sw2x2: DMatrix<f64>,
    sw2y2: DMatrix<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        let z = DMatrix::zeros(dim, dim);
        Self {
            count: 0,
            sw: 0.0,
            sw2: 0.0,
            swx: z.clone(),
            swy: z.clone(),
            sw2x: z.clone(),
            sw2y: z.clone(),
            sw2x2: z.clone(),
            sw2y2: z,
        }
    }

    fn add(&mut self, w: f64, m: &CMatrix) {
        self.count += 1;
        self.sw += w;
        self.sw2 += w * w;
        let w2 = w * w;
        for (k, z) in m.iter().enumerate() {
            self.swx[k] += w * z.re;
            self.swy[k] += w * z.im;
            self.sw2x[k] += w2 * z.re;
            self.sw2y[k] += w2 * z.im;
            self.sw2x2[k] += w2 * z.re * z.re;
            self.sw2y2[k] += w2 * z.im * z.im;
        }
    }

    fn merge(&mut self, o: &Moments) {
        self.count += o.count;
        self.sw += o.sw;
        self.sw2 += o.sw2;
        self.swx += &o.swx;
        self.swy += &o.swy;
        self.sw2x += &o.sw2x;
        self.sw2y += &o.sw2y;
        self.sw2x2 += &o.sw2x2;
        self.sw2y2 += &o.sw2y2;
    }

    fn finish(&self, config: &McConfig) -> Result<SampleEstimate> {
        if self.count == 0 || self.sw <= 0.0 {
            return Err(Error::ZeroAcceptance {
                n_proposed: config.n_proposed,
                rate_upper_bound: 3.0 / config.n_proposed as f64,
            });
        }
        let dim = self.swx.nrows();
        let mean_re = &self.swx / self.sw;
        let mean_im = &self.swy / self.sw;
        // delta-method variance of a ratio estimator
        let var = |s2: f64, s1: f64, mu: f64| ((s2 - 2.0 * mu * s1 + mu * mu * self.sw2) / (self.sw * self.sw)).max(0.0);
        let stderr_re = DMatrix::from_fn(dim, dim, |i, j| var(self.sw2x2[(i, j)], self.sw2x[(i, j)], mean_re[(i, j)]).sqrt());
        let stderr_im = DMatrix::from_fn(dim, dim, |i, j| var(self.sw2y2[(i, j)], self.sw2y[(i, j)], mean_im[(i, j)]).sqrt());
        let mean = CMatrix::from_fn(dim, dim, |i, j| c(mean_re[(i, j)], mean_im[(i, j)]));
        Ok(SampleEstimate {
            mean_state: DensityMatrix::normalized(crate::linalg::hermitian_part(&mean))?,
            n_proposed: config.n_proposed,
            n_accepted: self.count,
            epsilon: config.epsilon,
            stderr_re,
            stderr_im,
            seed: config.seed,
            effective_samples: self.sw * self.sw / self.sw2,
        })
    }
}

/// Runs `propose` `n_proposed` times over seeded shards; one accumulator per target.
fn run_sharded<F>(config: &McConfig, dim: usize, n_targets: usize, propose: F) -> Vec<Moments>
where
    F: Fn(&mut ChaCha8Rng, &mut [Moments]) + Sync,
{
    let base = config.n_proposed / SHARDS;
    let extra = config.n_proposed % SHARDS;
    let shards: Vec<Vec<Moments>> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(s));
            let mut acc = vec![Moments::new(dim); n_targets];
            let n = base + u64::from(s < extra);
            for _ in 0..n {
                propose(&mut rng, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::new(dim); n_targets];
    for shard in &shards {
        for (t, m) in total.iter_mut().zip(shard) {
            t.merge(m);
        }
    }
    total
}

fn check_target(channel: &CoarseGrainingChannel, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != channel.out_dim() {
        return Err(Error::DimensionMismatch {
            expected: channel.out_dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// Mean of prior samples `psi` with `||Lambda[psi] - rho||_1 <= epsilon`.
pub fn rejection_estimate(
    channel: &CoarseGrainingChannel,
    rho: &DensityMatrix,
    config: &McConfig,
    prior: Prior,
) -> Result<SampleEstimate> {
    rejection_estimate_batch(channel, std::slice::from_ref(rho), config, prior)
        .pop()
        .expect("one target")
}

/// Like [`rejection_estimate`] but tests every proposal against all targets,
/// so one proposal database serves the whole batch.
pub fn rejection_estimate_batch(
    channel: &CoarseGrainingChannel,
    targets: &[DensityMatrix],
    config: &McConfig,
    prior: Prior,
) -> Vec<Result<SampleEstimate>> {
    let setup = config
        .check()
        .and_then(|_| prior.check(channel.in_dim()))
        .and_then(|_| targets.iter().try_for_each(|t| check_target(channel, t)));
    if let Err(e) = setup {
        let msg = e.to_string();
        return targets
            .iter()
            .map(|_| Err(Error::InvalidParameter(msg.clone())))
            .collect();
    }
    let dim = channel.in_dim();
    let eps = config.epsilon;
    let moments = run_sharded(config, dim, targets.len(), |rng, acc| {
        let psi = prior.sample(dim, rng);
        let out = channel.forward_matrix(psi.matrix()).expect("dimensions checked");
        for (t, a) in targets.iter().zip(acc.iter_mut()) {
            if trace_norm_hermitian(&(&out - t.matrix())) <= eps {
                a.add(1.0, psi.matrix());
            }
        }
    });
    moments.iter().map(|m| m.finish(config)).collect()
}

/// Accepted samples themselves (at most `keep`), for entropy comparisons.
pub fn rejection_samples(
    channel: &CoarseGrainingChannel,
    rho: &DensityMatrix,
    config: &McConfig,
    prior: Prior,
    keep: usize,
) -> Result<Vec<DensityMatrix>> {
    config.check()?;
    prior.check(channel.in_dim())?;
    check_target(channel, rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::new();
    for _ in 0..config.n_proposed {
        let psi = prior.sample(channel.in_dim(), &mut rng);
        if channel.residual(&psi, rho)? <= config.epsilon {
            out.push(psi);
            if out.len() >= keep {
                break;
            }
        }
    }
    Ok(out)
}

/// Rotation precomputations for spin `j`: `exp(-i t J_y)` via the `J_y` eigenbasis.
struct Rotations {
    m: Vec<f64>,
    jy_vals: DVector<f64>,
    jy_vecs: CMatrix,
    ops: crate::linalg::SpinOperators,
}

impl Rotations {
    fn new(spin: Spin) -> Self {
        let ops = angular_momentum(spin);
        let (jy_vals, jy_vecs) = eigh(&ops.jy);
        Self {
            m: spin.m_values(),
            jy_vals,
            jy_vecs,
            ops,
        }
    }

    fn rz(&self, phi: f64) -> DVector<num_complex::Complex64> {
        DVector::from_iterator(self.m.len(), self.m.iter().map(|m| num_complex::Complex64::from_polar(1.0, -phi * m)))
    }

    fn ry(&self, theta: f64) -> CMatrix {
        let phases = self.jy_vals.map(|v| num_complex::Complex64::from_polar(1.0, -theta * v));
        let mut scaled = self.jy_vecs.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[k];
        }
        &scaled * self.jy_vecs.adjoint()
    }

    /// `Rz(phi) Ry(theta) Rz(alpha)`.
    fn euler(&self, phi: f64, theta: f64, alpha: f64) -> CMatrix {
        let mut u = self.ry(theta);
        let left = self.rz(phi);
        let right = self.rz(alpha);
        for i in 0..u.nrows() {
            for j in 0..u.ncols() {
                u[(i, j)] *= left[i] * right[j];
            }
        }
        u
    }
}

fn polar_angles(v: [f64; 3]) -> (f64, f64) {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    ((v[2] / n).clamp(-1.0, 1.0).acos(), v[1].atan2(v[0]))
}

/// Rejection estimate for the angular-momentum channel with targets along `z`,
/// averaged analytically over rotations.
///
/// The prior is rotation invariant, so each proposal `psi` stands for its
/// whole orbit `g psi g^dag`. The accepted fraction of the orbit is the area
/// of the spherical cap of directions within `epsilon` of the target, and a
/// random rotation from that cap replaces the accept/reject coin. This is the
/// same estimator as plain rejection with far lower variance.
pub fn su2_symmetric_estimate(
    spin: Spin,
    radii: &[f64],
    config: &McConfig,
    prior: Prior,
) -> Vec<Result<SampleEstimate>> {
    let dim = spin.dim();
    if let Err(e) = config.check().and_then(|_| prior.check(dim)) {
        let msg = e.to_string();
        return radii.iter().map(|_| Err(Error::InvalidParameter(msg.clone()))).collect();
    }
    let rot = Rotations::new(spin);
    let j = spin.j();
    let eps = config.epsilon;
    let moments = run_sharded(config, dim, radii.len(), |rng, acc| {
        let psi = prior.sample(dim, rng);
        let v = [
            psi.expectation(&rot.ops.jx) / j,
            psi.expectation(&rot.ops.jy) / j,
            psi.expectation(&rot.ops.jz) / j,
        ];
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let mut undo: Option<CMatrix> = None;
        for (&r, a) in radii.iter().zip(acc.iter_mut()) {
            if (s - r).abs() > eps {
                continue;
            }
            let c0 = if s * r == 0.0 {
                -1.0
            } else {
                ((s * s + r * r - eps * eps) / (2.0 * s * r)).clamp(-1.0, 1.0)
            };
            let w = 0.5 * (1.0 - c0);
            if w <= 0.0 {
                continue;
            }
            let undo = undo.get_or_insert_with(|| {
                if s == 0.0 {
                    crate::linalg::identity(dim)
                } else {
                    let (theta, phi) = polar_angles(v);
                    rot.euler(phi, theta, 0.0).adjoint()
                }
            });
            let cos_t: f64 = rng.random_range(c0..=1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let alpha: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let g = rot.euler(phi, cos_t.clamp(-1.0, 1.0).acos(), alpha) * &*undo;
            let tau = &g * psi.matrix() * g.adjoint();
            a.add(w, &tau);
        }
    });
    moments.iter().map(|m| m.finish(config)).collect()
}

/// Prior distances `Delta` of uniformly drawn effective states and their histogram.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceSamples {
    pub d_e: usize,
    pub samples: Vec<f64>,
    pub histogram: Histogram,
}

/// Draws effective states uniformly from the Bloch ball and bins the
/// detector-channel distance between mixed- and pure-prior assignments.
pub fn distance_histogram_pure_vs_mixed<R: Rng + ?Sized>(
    d_e: usize,
    n_states: usize,
    bins: usize,
    rng: &mut R,
) -> Result<DistanceSamples> {
    if d_e < 2 {
        return Err(Error::InvalidParameter(format!("distance law needs d_E >= 2 (got {d_e})")));
    }
    let mut samples = Vec::with_capacity(n_states);
    while samples.len() < n_states {
        let b = uniform_bloch_ball(rng);
        // z = -1 is a null set; skip the numerically singular sliver
        if let Ok(delta) = bns_prior_distance(b, d_e) {
            samples.push(delta);
        }
    }
    let hi = 2.0 * crate::aam::bns_prior_scale(d_e as f64);
    let histogram = Histogram::from_samples(&samples, 0.0, hi, bins);
    Ok(DistanceSamples {
        d_e,
        samples,
        histogram,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub bloch: [f64; 3],
    pub delta: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceScan {
    pub channel: String,
    pub prior: Prior,
    pub rows: Vec<ScanRow>,
}

impl DistanceScan {
    fn valid(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().filter_map(|r| r.delta)
    }

    pub fn n_valid(&self) -> usize {
        self.valid().count()
    }

    pub fn mean(&self) -> f64 {
        self.valid().sum::<f64>() / self.n_valid().max(1) as f64
    }

    pub fn max(&self) -> f64 {
        self.valid().fold(0.0, f64::max)
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.valid().collect()
    }
}

fn mep_aam_distance(channel: &CoarseGrainingChannel, prior: Prior, rho: &DensityMatrix, quad_tol: f64) -> Result<f64> {
    let opts = MepOptions::default();
    let d_e = prior.env_dim();
    let (aam, mep) = match channel.kind() {
        ChannelKind::PartialTrace { d_e: env, .. } => (
            aam_partial_trace(rho, *env)?.state,
            mep_for_state(channel, rho, &opts)?.state,
        ),
        ChannelKind::Bns => (aam_bns_mixed(rho, d_e)?.state, mep_bns(rho, &opts)?.state),
        ChannelKind::Su2 { spin } => {
            let b = rho.bloch()?;
            (
                aam_su2_state(*spin, d_e, b, &PmMethod::Quadrature, quad_tol)?.state,
                mep_su2(*spin, b)?.state,
            )
        }
        ChannelKind::Custom { name } => {
            return Err(Error::InvalidParameter(format!("no average assignment for custom channel {name}")))
        }
    };
    trace_distance(&aam, &mep)
}

/// `Delta' = D(MEP, AAM)` for each effective state; failures are kept as rows
/// and excluded from the aggregates.
pub fn mep_aam_distance_scan(
    channel: &CoarseGrainingChannel,
    prior: Prior,
    states: &[DensityMatrix],
    quad_tol: f64,
) -> DistanceScan {
    let rows = states
        .par_iter()
        .map(|rho| {
            let bloch = rho.bloch().map(|b| b.to_array()).unwrap_or([f64::NAN; 3]);
            match mep_aam_distance(channel, prior, rho, quad_tol) {
                Ok(d) => ScanRow {
                    bloch,
                    delta: Some(d),
                    error: None,
                },
                Err(e) => ScanRow {
                    bloch,
                    delta: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    DistanceScan {
        channel: channel.label(),
        prior,
        rows,
    }
}

/// Effective states `r z` for a radial scan.
pub fn radial_states(r_grid: &[f64]) -> Vec<DensityMatrix> {
    r_grid
        .iter()
        .map(|&r| BlochVector { x: 0.0, y: 0.0, z: r }.to_density())
        .collect()
}

/// `n` effective states uniform in the Bloch ball.
pub fn uniform_states<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<DensityMatrix> {
    (0..n).map(|_| uniform_bloch_ball(rng).to_density()).collect()
}
