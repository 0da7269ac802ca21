//! Data behind each figure of the comparison study, as tables.

use anyhow::{bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use qassign_core::aam::{aam_bns_mixed, aam_bns_pure, aam_su2_pm, bns_prior_distance_pdf, bns_prior_scale, PmMethod};
use qassign_core::channels::{make_bns_channel, make_su2_channel};
use qassign_core::linalg::{trace_distance, BlochVector, DensityMatrix, Spin};
use qassign_core::mep::mep_su2;
use qassign_core::montecarlo::{
    distance_histogram_pure_vs_mixed, mep_aam_distance_scan, radial_states, rejection_estimate_batch, su2_symmetric_estimate,
    uniform_states, McConfig, Prior,
};
use qassign_core::stats::Histogram;
use qassign_core::thermo::{work_comparison, WorkScenario};
use qassign_core::validation::TABLE_ONE;

use crate::config::RunConfig;
use crate::output::{num, Table};

pub struct FigureData {
    pub tables: Vec<(String, Table)>,
    pub parameters: Value,
}

pub const SUPPORTED: [u32; 10] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

/// Environment dimension standing in for the infinite limit.
const LARGE_ENV: usize = 1_000_000;

fn spin(twice: u32) -> Spin {
    Spin::from_twice(twice).expect("positive spin")
}

fn prior_for(d_e: usize) -> Prior {
    if d_e == 1 {
        Prior::Pure
    } else {
        Prior::Mixed { d_e }
    }
}

fn radius_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

pub fn build(n: u32, cfg: &RunConfig) -> Result<FigureData> {
    match n {
        2 => prior_distance(cfg),
        3 => detector_mep_distance(cfg),
        4 => pm_curves(cfg, false),
        5 => pm_curves(cfg, true),
        6 => mep_curves(),
        7 => su2_distance_by_j(cfg),
        8 => su2_distance_by_env(cfg),
        9 => work(cfg),
        10 => detector_error_bars(cfg),
        11 => su2_error_bars(cfg),
        _ => bail!("unsupported figure {n}; choose one of {SUPPORTED:?}"),
    }
}

fn histogram_rows(table: &mut Table, d_e: usize, h: &Histogram) {
    for k in 0..h.counts.len() {
        table.push(vec![d_e.to_string(), num(h.center(k)), num(h.density(k))]);
    }
}

fn prior_distance(cfg: &RunConfig) -> Result<FigureData> {
    let envs = [2usize, 3, 4, 8, LARGE_ENV];
    let n_states = 100_000;
    let bins = 50;
    let mut analytic = Table::new(&["d_e", "delta", "pdf"]);
    let mut empirical = Table::new(&["d_e", "delta", "density"]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for &d_e in &envs {
        let hi = 2.0 * bns_prior_scale(d_e as f64);
        for k in 0..=200 {
            let delta = hi * k as f64 / 200.0;
            analytic.push(vec![d_e.to_string(), num(delta), num(bns_prior_distance_pdf(delta, d_e as f64)?)]);
        }
        let h = distance_histogram_pure_vs_mixed(d_e, n_states, bins, &mut rng)?;
        histogram_rows(&mut empirical, d_e, &h.histogram);
    }
    Ok(FigureData {
        tables: vec![("analytic".into(), analytic), ("histogram".into(), empirical)],
        parameters: json!({ "d_e": envs, "n_states": n_states, "bins": bins }),
    })
}

fn detector_mep_distance(cfg: &RunConfig) -> Result<FigureData> {
    let envs = [1usize, 4, 8, 16, LARGE_ENV];
    let n_states = 20_000;
    let bins = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let states = uniform_states(n_states, &mut rng);
    let channel = make_bns_channel();
    let scans: Vec<_> = envs
        .iter()
        .map(|&d_e| mep_aam_distance_scan(&channel, prior_for(d_e), &states, cfg.quadrature_tol))
        .collect();
    let hi = scans.iter().map(|s| s.max()).fold(0.0, f64::max) * 1.000_001;
    let mut table = Table::new(&["d_e", "delta_prime", "density"]);
    let mut excluded = Vec::new();
    for (&d_e, scan) in envs.iter().zip(&scans) {
        let h = Histogram::from_samples(&scan.deltas(), 0.0, hi, bins);
        histogram_rows(&mut table, d_e, &h);
        excluded.push(scan.rows.len() - scan.n_valid());
    }
    Ok(FigureData {
        tables: vec![("histogram".into(), table)],
        parameters: json!({ "d_e": envs, "n_states": n_states, "bins": bins, "excluded_rows": excluded }),
    })
}

fn pm_curves(cfg: &RunConfig, mixed: bool) -> Result<FigureData> {
    let grid = radius_grid(51);
    let mut table = Table::new(&["j", "d_e", "m", "r", "p"]);
    let mut max_err: f64 = 0.0;
    for twice in [3, 5, 7, 9] {
        let s = spin(twice);
        let d_e = if mixed { s.dim() } else { 1 };
        for &r in &grid {
            let pm = aam_su2_pm(s, d_e, r, &PmMethod::Quadrature, cfg.quadrature_tol)?;
            max_err = max_err.max(pm.error_estimate);
            for (k, p) in pm.p.iter().enumerate() {
                table.push(vec![s.to_string(), d_e.to_string(), s.m(k).to_string(), num(r), num(*p)]);
            }
        }
    }
    Ok(FigureData {
        tables: vec![("pm".into(), table)],
        parameters: json!({ "j": ["3/2", "5/2", "7/2", "9/2"], "d_e": if mixed { "2j+1" } else { "1" }, "r_points": grid.len(), "max_error_estimate": max_err }),
    })
}

fn mep_curves() -> Result<FigureData> {
    let grid = radius_grid(51);
    let mut table = Table::new(&["j", "m", "r", "p"]);
    for twice in [3, 5, 7, 9] {
        let s = spin(twice);
        for &r in &grid {
            let sol = mep_su2(s, BlochVector { x: 0.0, y: 0.0, z: r })?;
            for k in 0..s.dim() {
                table.push(vec![s.to_string(), s.m(k).to_string(), num(r), num(sol.state.get(k, k).re)]);
            }
        }
    }
    Ok(FigureData {
        tables: vec![("pm".into(), table)],
        parameters: json!({ "j": ["3/2", "5/2", "7/2", "9/2"], "r_points": grid.len() }),
    })
}

fn distance_rows(table: &mut Table, s: Spin, d_e: usize, grid: &[f64], quad_tol: f64) {
    let scan = mep_aam_distance_scan(&make_su2_channel(s), prior_for(d_e), &radial_states(grid), quad_tol);
    for (r, row) in grid.iter().zip(&scan.rows) {
        let delta = row.delta.map(num).unwrap_or_else(|| "nan".into());
        table.push(vec![s.to_string(), d_e.to_string(), num(*r), delta]);
    }
}

fn su2_distance_by_j(cfg: &RunConfig) -> Result<FigureData> {
    let grid = radius_grid(51);
    let mut table = Table::new(&["j", "d_e", "r", "delta_prime"]);
    for twice in [3, 5, 7, 9] {
        let s = spin(twice);
        for d_e in [1, s.dim()] {
            distance_rows(&mut table, s, d_e, &grid, cfg.quadrature_tol);
        }
    }
    Ok(FigureData {
        tables: vec![("delta_prime".into(), table)],
        parameters: json!({ "j": ["3/2", "5/2", "7/2", "9/2"], "d_e": ["1", "2j+1"], "r_points": grid.len() }),
    })
}

fn su2_distance_by_env(cfg: &RunConfig) -> Result<FigureData> {
    let grid = radius_grid(51);
    let s = spin(7);
    let envs = [1usize, 2, 4, 8, 16, 32];
    let mut table = Table::new(&["j", "d_e", "r", "delta_prime"]);
    for &d_e in &envs {
        distance_rows(&mut table, s, d_e, &grid, cfg.quadrature_tol);
    }
    let mut inset = Table::new(&["j", "d_e", "r", "delta_prime"]);
    for d_e in [1usize, 2, 4, 8, 16, 32, 64] {
        distance_rows(&mut inset, s, d_e, &[0.5], cfg.quadrature_tol);
    }
    Ok(FigureData {
        tables: vec![("delta_prime".into(), table), ("saturation".into(), inset)],
        parameters: json!({ "j": "7/2", "d_e": envs, "r_points": grid.len(), "inset_r": 0.5 }),
    })
}

fn work(cfg: &RunConfig) -> Result<FigureData> {
    let mut table = Table::new(&["method", "j", "omega_tau", "W_over_gamma"]);
    let mut warnings = Vec::new();
    for twice in [3, 5, 7] {
        let mut scenario = WorkScenario::standard(spin(twice));
        scenario.quad_tol = cfg.quadrature_tol;
        let result = work_comparison(&scenario)?;
        warnings.extend(result.warnings());
        for c in &result.curves {
            for (phase, w) in result.omega_tau.iter().zip(&c.work_over_gamma) {
                table.push(vec![c.method.label().into(), spin(twice).to_string(), num(*phase), num(*w)]);
            }
        }
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(FigureData {
        tables: vec![("work".into(), table)],
        parameters: json!({ "j": ["3/2", "5/2", "7/2"], "initial_bloch": [0.0, 0.0, 0.7], "gamma": 1.0, "grid_points": 101, "warnings": warnings }),
    })
}

fn trace_norm(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    Ok(2.0 * trace_distance(a, b)?)
}

fn detector_error_bars(cfg: &RunConfig) -> Result<FigureData> {
    let channel = make_bns_channel();
    let rhos: Vec<DensityMatrix> = TABLE_ONE
        .iter()
        .map(|b| BlochVector { x: b[0], y: b[1], z: b[2] }.to_density())
        .collect();
    let config = McConfig::new(cfg.epsilon, cfg.proposals, cfg.seed);
    let pure_mc = rejection_estimate_batch(&channel, &rhos, &config, Prior::Pure);
    let mixed_mc = rejection_estimate_batch(&channel, &rhos, &config, Prior::Mixed { d_e: 2 });
    let mut table = Table::new(&["state", "x", "y", "z", "accepted_pure", "accepted_mixed", "total_error", "prior_gap"]);
    for (k, rho) in rhos.iter().enumerate() {
        let pure = aam_bns_pure(rho)?.state;
        let mixed = aam_bns_mixed(rho, 2)?.state;
        let (Ok(p), Ok(m)) = (&pure_mc[k], &mixed_mc[k]) else {
            bail!("state {k}: no proposals accepted; increase proposals");
        };
        let total = trace_norm(&p.mean_state, &pure)? + trace_norm(&m.mean_state, &mixed)?;
        let b = TABLE_ONE[k];
        table.push(vec![
            k.to_string(),
            num(b[0]),
            num(b[1]),
            num(b[2]),
            p.n_accepted.to_string(),
            m.n_accepted.to_string(),
            num(total),
            num(trace_norm(&pure, &mixed)?),
        ]);
    }
    Ok(FigureData {
        tables: vec![("bars".into(), table)],
        parameters: json!({ "epsilon": cfg.epsilon, "proposals": cfg.proposals, "mixed_d_e": 2 }),
    })
}

fn su2_error_bars(cfg: &RunConfig) -> Result<FigureData> {
    let s = spin(3);
    let radii: Vec<f64> = (0..10).map(|k| (2 * k + 1) as f64 / 20.0).collect();
    let config = McConfig::new(cfg.epsilon, cfg.proposals, cfg.seed);
    let pure_mc = su2_symmetric_estimate(s, &radii, &config, Prior::Pure);
    let mixed_mc = su2_symmetric_estimate(s, &radii, &config, Prior::Mixed { d_e: 2 });
    let mut table = Table::new(&["r", "effective_pure", "effective_mixed", "total_error", "prior_gap"]);
    for (k, &r) in radii.iter().enumerate() {
        let diag = |d_e| -> Result<DensityMatrix> {
            let p = aam_su2_pm(s, d_e, r, &PmMethod::Quadrature, cfg.quadrature_tol)?.p;
            Ok(qassign_core::aam::su2::diagonal_in_direction(s, &p, [0.0, 0.0, 1.0]))
        };
        let (pure, mixed) = (diag(1)?, diag(2)?);
        let (Ok(p), Ok(m)) = (&pure_mc[k], &mixed_mc[k]) else {
            bail!("r = {r}: no proposals accepted; increase proposals");
        };
        let total = trace_norm(&p.mean_state, &pure)? + trace_norm(&m.mean_state, &mixed)?;
        table.push(vec![
            num(r),
            format!("{:.1}", p.effective_samples),
            format!("{:.1}", m.effective_samples),
            num(total),
            num(trace_norm(&pure, &mixed)?),
        ]);
    }
    Ok(FigureData {
        tables: vec![("bars".into(), table)],
        parameters: json!({ "j": "3/2", "epsilon": cfg.epsilon, "proposals": cfg.proposals, "mixed_d_e": 2 }),
    })
}
