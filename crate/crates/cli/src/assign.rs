use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use serde_json::{json, Value};

use qassign_core::aam::{aam_bns_mixed, aam_bns_pure, aam_partial_trace, aam_su2_state, AssignmentResult, BnsPattern, PmMethod};
use qassign_core::channels::make_partial_trace_channel;
use qassign_core::io::{matrix_from_nested, matrix_to_nested, ComplexMatrixRepr};
use qassign_core::linalg::{BlochVector, CMatrix, DensityMatrix, Spin};
use qassign_core::mep::{mep_bns, mep_for_state, mep_su2, MepOptions, MepSolution};

use crate::config::RunConfig;
use crate::Usage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ChannelArg {
    Ptrace,
    Bns,
    Su2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    AamPure,
    AamMixed,
    Mep,
}

#[derive(Clone, Debug, clap::Args)]
pub struct AssignArgs {
    pub channel: ChannelArg,
    pub method: MethodArg,
    /// Environment dimension (partial trace, or the mixed prior).
    #[arg(long = "de")]
    pub d_e: Option<usize>,
    /// Spin quantum number for the angular-momentum channel, e.g. 1.5.
    #[arg(long)]
    pub j: Option<f64>,
    /// Effective qubit state as a Bloch vector `x,y,z`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "rho_file")]
    pub bloch: Option<String>,
    /// JSON file holding the effective density matrix.
    #[arg(long)]
    pub rho_file: Option<std::path::PathBuf>,
}

/// Nested `[re, im]` rows with negative zeros cleared.
fn nested(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    let mut rows = matrix_to_nested(m);
    for z in rows.iter_mut().flatten() {
        z[0] += 0.0;
        z[1] += 0.0;
    }
    rows
}

pub fn label<T: clap::ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Nested(Vec<Vec<[f64; 2]>>),
    Flat(ComplexMatrixRepr),
}

fn parse_bloch(s: &str) -> Result<BlochVector> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Usage(format!("bad --bloch value {s:?}: {e}")))?;
    let [x, y, z] = parts[..] else {
        return Err(Usage(format!("--bloch needs three components, got {}", parts.len())).into());
    };
    Ok(BlochVector::new(x, y, z)?)
}

fn read_rho(path: &Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: MatrixFile = serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let m = match parsed {
        MatrixFile::Nested(rows) => matrix_from_nested(&rows)?,
        MatrixFile::Flat(repr) => repr.to_matrix()?,
    };
    Ok(DensityMatrix::new(m)?)
}

fn effective_state(args: &AssignArgs) -> Result<DensityMatrix> {
    match (&args.bloch, &args.rho_file) {
        (Some(b), None) => Ok(parse_bloch(b)?.to_density()),
        (None, Some(p)) => read_rho(p),
        _ => Err(Usage("give the effective state with --bloch or --rho-file".into()).into()),
    }
}

fn require_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 2 {
        return Err(Usage(format!("this channel takes a qubit state, got dimension {}", rho.dim())).into());
    }
    Ok(())
}

fn spin_arg(j: Option<f64>) -> Result<Spin> {
    let j = j.ok_or_else(|| Usage("the su2 channel needs --j".into()))?;
    Ok(Spin::from_f64(j)?)
}

enum Outcome {
    Aam(AssignmentResult),
    Mep(MepSolution),
}

fn compute(args: &AssignArgs, rho: &DensityMatrix, cfg: &RunConfig) -> Result<(Outcome, Value)> {
    let opts = MepOptions {
        tol: cfg.solver_tol,
        ..MepOptions::default()
    };
    let mixed_env = |default: usize| -> Result<usize> {
        let d = args.d_e.unwrap_or(default);
        if d == 0 {
            return Err(Usage("--de must be at least 1".into()).into());
        }
        Ok(d)
    };
    Ok(match args.channel {
        ChannelArg::Ptrace => {
            let d_e = args.d_e.ok_or_else(|| Usage("the ptrace channel needs --de".into()))?;
            let params = json!({ "d_s": rho.dim(), "d_e": d_e });
            let out = match args.method {
                MethodArg::AamPure | MethodArg::AamMixed => Outcome::Aam(aam_partial_trace(rho, d_e)?),
                MethodArg::Mep => {
                    if d_e == 0 {
                        return Err(Usage("--de must be at least 1".into()).into());
                    }
                    Outcome::Mep(mep_for_state(&make_partial_trace_channel(rho.dim(), d_e), rho, &opts)?)
                }
            };
            (out, params)
        }
        ChannelArg::Bns => {
            require_qubit(rho)?;
            match args.method {
                MethodArg::AamPure => (Outcome::Aam(aam_bns_pure(rho)?), json!({})),
                MethodArg::AamMixed => {
                    let d_e = mixed_env(2)?;
                    (Outcome::Aam(aam_bns_mixed(rho, d_e)?), json!({ "d_e": d_e }))
                }
                MethodArg::Mep => (Outcome::Mep(mep_bns(rho, &opts)?), json!({})),
            }
        }
        ChannelArg::Su2 => {
            require_qubit(rho)?;
            let spin = spin_arg(args.j)?;
            let b = rho.bloch()?;
            let tol = cfg.quadrature_tol;
            match args.method {
                MethodArg::AamPure => (
                    Outcome::Aam(aam_su2_state(spin, 1, b, &PmMethod::Quadrature, tol)?),
                    json!({ "j": spin.to_string() }),
                ),
                MethodArg::AamMixed => {
                    let d_e = mixed_env(spin.dim())?;
                    (
                        Outcome::Aam(aam_su2_state(spin, d_e, b, &PmMethod::Quadrature, tol)?),
                        json!({ "j": spin.to_string(), "d_e": d_e }),
                    )
                }
                MethodArg::Mep => (Outcome::Mep(mep_su2(spin, b)?), json!({ "j": spin.to_string() })),
            }
        }
    })
}

/// Runs one assignment and returns the JSON document describing it.
pub fn run(args: &AssignArgs, cfg: &RunConfig) -> Result<Value> {
    let rho = effective_state(args)?;
    let (outcome, params) = compute(args, &rho, cfg)?;
    let channel = label(&args.channel);
    let mut doc = json!({
        "meta": crate::output::meta(cfg, &[]),
        "channel": channel,
        "parameters": params,
        "input": nested(rho.matrix()),
    });
    let state = match &outcome {
        Outcome::Aam(r) => {
            doc["method"] = json!(r.method.to_string());
            doc["residual"] = json!(r.residual);
            doc["prior_env_dim"] = json!(r.prior_env_dim);
            doc["error_estimate"] = json!(r.error_estimate);
            &r.state
        }
        Outcome::Mep(s) => {
            doc["method"] = json!("mep");
            doc["residual"] = json!(s.residual);
            doc["multipliers"] = json!(s.multipliers);
            doc["log_partition"] = json!(s.log_partition);
            doc["iterations"] = json!(s.iterations);
            doc["converged"] = json!(s.converged);
            doc["boundary"] = json!(s.boundary);
            &s.state
        }
    };
    doc["state"] = json!(nested(state.matrix()));
    doc["entropy"] = json!(state.entropy());
    doc["purity"] = json!(state.purity());
    if args.channel == ChannelArg::Bns {
        let p = BnsPattern::from_matrix(state.matrix());
        doc["pattern"] = json!({
            "circle": p.circle,
            "triangle": [p.triangle.re + 0.0, p.triangle.im + 0.0],
            "diamond": p.diamond,
            "square": p.square,
        });
    }
    Ok(doc)
}
