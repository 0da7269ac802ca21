//! Average work for the driven Hamiltonian `H(t) = gamma cos(omega t) J_z^2`.
//!
//! The initial state is the assignment of an effective qubit state through
//! the angular-momentum channel. All assignments of a state along `z` are
//! diagonal in `J_z`, so they commute with `H` and the work is
//! `gamma (cos(omega tau) - 1) tr(psi J_z^2)`.

use serde::Serialize;

use crate::aam::{aam_su2_state, PmMethod};
use crate::error::{Error, Result};
use crate::linalg::{angular_momentum, BlochVector, CMatrix, DensityMatrix, Spin};
use crate::mep::mep_su2;

/// Commutator norm above which the work formula is flagged.
pub const COMMUTATION_TOL: f64 = 1e-8;
pub const DEFAULT_GRID_POINTS: usize = 101;

fn jz_squared(spin: Spin) -> CMatrix {
    let jz = angular_momentum(spin).jz;
    &jz * &jz
}

/// Largest entry of `[psi, J_z^2]`.
pub fn commutator_defect(psi: &DensityMatrix, spin: Spin) -> Result<f64> {
    check_dim(psi, spin)?;
    let h = jz_squared(spin);
    Ok((psi.matrix() * &h - &h * psi.matrix()).camax())
}

fn check_dim(psi: &DensityMatrix, spin: Spin) -> Result<()> {
    if psi.dim() != spin.dim() {
        return Err(Error::DimensionMismatch {
            expected: spin.dim(),
            found: psi.dim(),
        });
    }
    Ok(())
}

/// `gamma (cos(omega tau) - 1) tr(psi J_z^2)`.
pub fn average_work(psi0: &DensityMatrix, spin: Spin, gamma: f64, omega_tau: f64) -> Result<f64> {
    check_dim(psi0, spin)?;
    Ok(work_from_moment(psi0.expectation(&jz_squared(spin)), gamma, omega_tau))
}

fn work_from_moment(jz2: f64, gamma: f64, omega_tau: f64) -> f64 {
    // + 0.0 turns -0.0 into 0.0 at full periods
    gamma * (omega_tau.cos() - 1.0) * jz2 + 0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkMethod {
    AamPure,
    AamMixed,
    Mep,
}

impl WorkMethod {
    pub const ALL: [WorkMethod; 3] = [WorkMethod::AamPure, WorkMethod::AamMixed, WorkMethod::Mep];

    pub fn label(self) -> &'static str {
        match self {
            WorkMethod::AamPure => "aam-pure",
            WorkMethod::AamMixed => "aam-mixed",
            WorkMethod::Mep => "mep",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkScenario {
    pub spin: Spin,
    pub gamma: f64,
    pub omega_tau: Vec<f64>,
    pub initial_bloch: BlochVector,
    pub methods: Vec<WorkMethod>,
    /// Environment dimension of the mixed prior; `2j + 1` when `None`.
    pub d_e: Option<usize>,
    pub quad_tol: f64,
}

impl WorkScenario {
    /// `rho_0 = (I + 0.7 sigma_z)/2`, all methods, 101 points on `[0, 2 pi]`.
    pub fn standard(spin: Spin) -> Self {
        Self {
            spin,
            gamma: 1.0,
            omega_tau: phase_grid(DEFAULT_GRID_POINTS),
            initial_bloch: BlochVector { x: 0.0, y: 0.0, z: 0.7 },
            methods: WorkMethod::ALL.to_vec(),
            d_e: None,
            quad_tol: crate::aam::su2::DEFAULT_QUAD_TOL,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive (got {})", self.gamma)));
        }
        if self.initial_bloch.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidState("initial Bloch vector outside the unit ball".into()));
        }
        Ok(())
    }
}

/// `n` equally spaced phases from 0 to `2 pi` inclusive.
pub fn phase_grid(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n).map(|k| k as f64 / (n - 1) as f64 * std::f64::consts::TAU).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkCurve {
    pub method: WorkMethod,
    /// `tr(psi J_z^2)`.
    pub jz2: f64,
    pub commutator_defect: f64,
    pub work_over_gamma: Vec<f64>,
}

impl WorkCurve {
    pub fn commutes(&self) -> bool {
        self.commutator_defect <= COMMUTATION_TOL
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkTable {
    pub spin: Spin,
    pub omega_tau: Vec<f64>,
    pub curves: Vec<WorkCurve>,
}

impl WorkTable {
    pub fn curve(&self, method: WorkMethod) -> Option<&WorkCurve> {
        self.curves.iter().find(|c| c.method == method)
    }

    /// Curves whose state fails the commutation check.
    pub fn warnings(&self) -> Vec<String> {
        self.curves
            .iter()
            .filter(|c| !c.commutes())
            .map(|c| {
                format!(
                    "{} state does not commute with Jz^2 (defect {:.3e}); work formula applied anyway",
                    c.method.label(),
                    c.commutator_defect
                )
            })
            .collect()
    }

    /// Columns `method,j,omega_tau,W_over_gamma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,j,omega_tau,W_over_gamma\n");
        for c in &self.curves {
            for (phase, w) in self.omega_tau.iter().zip(&c.work_over_gamma) {
                out.push_str(&format!("{},{},{:.12},{:.12e}\n", c.method.label(), self.spin.j(), phase, w));
            }
        }
        out
    }
}

pub fn assigned_state(scenario: &WorkScenario, method: WorkMethod) -> Result<DensityMatrix> {
    let spin = scenario.spin;
    let b = scenario.initial_bloch;
    let tol = scenario.quad_tol;
    Ok(match method {
        WorkMethod::AamPure => aam_su2_state(spin, 1, b, &PmMethod::Quadrature, tol)?.state,
        WorkMethod::AamMixed => {
            let d_e = scenario.d_e.unwrap_or(spin.dim());
            aam_su2_state(spin, d_e, b, &PmMethod::Quadrature, tol)?.state
        }
        WorkMethod::Mep => mep_su2(spin, b)?.state,
    })
}

/// Work curves of each method's assigned initial state.
pub fn work_comparison(scenario: &WorkScenario) -> Result<WorkTable> {
    scenario.validate()?;
    let h = jz_squared(scenario.spin);
    let curves = scenario
        .methods
        .iter()
        .map(|&method| {
            let psi = assigned_state(scenario, method)?;
            let jz2 = psi.expectation(&h);
            Ok(WorkCurve {
                method,
                jz2,
                commutator_defect: commutator_defect(&psi, scenario.spin)?,
                work_over_gamma: scenario.omega_tau.iter().map(|&p| work_from_moment(jz2, 1.0, p)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WorkTable {
        spin: scenario.spin,
        omega_tau: scenario.omega_tau.clone(),
        curves,
    })
}
