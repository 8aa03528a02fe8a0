//! Experiment dispatch. Every sweep point is computed in closed form and
//! cross-checked against the matrix pipeline; a mismatch aborts the run
//! with [`CliError::Numerical`].

use std::f64::consts::{FRAC_PI_2, PI};

use corrwork_core::qubit::{
    apply_protocol, beta_out_of_weight, build_ucorr, mutual_info_temps, work_bound, work_cost_params, UnitaryParams,
};
use corrwork_core::qudit::{find_phases_for_target, solve_eta, uniform_global_unitary, validate_local_gibbs};
use corrwork_core::thermal::{mutual_information, thermal_state};
use corrwork_core::work::{
    covariance_decomposition, distribution_moments, fluctuations_closed_form, published_param_variance,
    ttm_distribution,
};
use corrwork_core::{DensityMatrix, Error as CoreError, Hamiltonian, InverseTemperature, LogBase};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::{format_number, CsvDataset, Field};

/// Agreement required between closed forms and the matrix pipeline.
pub const PIPELINE_TOL: f64 = 1e-9;

const MAX_QUDIT_COLUMNS: usize = 4;

fn breach(msg: String) -> CliError {
    CliError::Numerical(msg)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CORRWORK_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("CORRWORK_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

/// Ordered parallel map; the first error in input order wins.
fn par_map<T, R, F>(pool: &rayon::ThreadPool, items: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Sync + Send,
{
    pool.install(|| items.into_par_iter().map(f).collect::<Vec<_>>()).into_iter().collect()
}

/// Mixing weights `s_k = k/(n−1)`; the output temperature is uniform in
/// `tanh(β_out ω/2)` because that is linear in `s`.
fn weights(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
}

fn finite(b: f64) -> InverseTemperature {
    InverseTemperature::Finite(b)
}

/// Two-qubit quantities at one member of the δ = 0 family.
#[derive(Clone, Copy, Debug)]
struct QubitPoint {
    beta_out: f64,
    w: f64,
    info: f64,
    sigma_w: f64,
    delta_sigma_e: f64,
}

fn qubit_point(beta_in: f64, omega: f64, s: f64, base: LogBase) -> Result<QubitPoint> {
    let bi = finite(beta_in);
    let p = UnitaryParams::correlating(s.sqrt().asin(), 0.0)?;
    let beta_out = match s {
        0.0 => beta_in,
        1.0 => -beta_in,
        _ => beta_out_of_weight(bi, omega, s).value(),
    };
    let bo = finite(beta_out);
    let w = work_cost_params(bi, omega, &p);
    let info = mutual_info_temps(bi, bo, omega, base);
    let var = fluctuations_closed_form(bi, bo, omega)?;

    let h = Hamiltonian::new(omega, 2)?;
    let rho = thermal_state(&h, bi);
    let u = build_ucorr(&p);
    let out = apply_protocol(&rho, &u)?;
    let w_num = out.expectation(&h.matrix())? - rho.expectation(&h.matrix())?;
    let info_num = mutual_information(&out, base)?;
    let (_, var_num) = distribution_moments(&ttm_distribution(&rho, &u, &h, corrwork_core::work::DEFAULT_MERGE_TOL * omega)?);
    let stats = covariance_decomposition(&rho, &u, &h)?;
    for (name, closed, numeric) in [("W", w, w_num), ("I", info, info_num), ("var(W)", var, var_num)] {
        let scale = if name == "var(W)" { omega * omega } else { 1.0 };
        if (closed - numeric).abs() > PIPELINE_TOL * scale.max(1.0) {
            return Err(breach(format!(
                "{name} closed form {closed} vs pipeline {numeric} at β_in={beta_in}, s={s}"
            )));
        }
    }
    let bound = work_bound(bi, omega);
    if beta_in * w - info < -PIPELINE_TOL || w > bound + 1e-12 {
        return Err(breach(format!("bound violated at β_in={beta_in}, s={s}: W={w}, I={info}, bound={bound}")));
    }
    Ok(QubitPoint { beta_out, w, info, sigma_w: var.max(0.0).sqrt(), delta_sigma_e: stats.delta_sigma_e })
}

fn qubit_sweep(pool: &rayon::ThreadPool, cfg: &ExperimentConfig, skip_idle: bool) -> Result<Vec<(f64, QubitPoint)>> {
    let mut jobs = Vec::new();
    for &beta in &cfg.beta_in_list {
        for s in weights(cfg.grid_resolution) {
            if skip_idle && s == 0.0 {
                continue;
            }
            jobs.push((beta, s));
        }
    }
    let (omega, base) = (cfg.omega, cfg.log_base);
    par_map(pool, jobs, |(beta, s)| Ok((beta, qubit_point(beta, omega, s, base)?)))
}

fn fig1(pool: &rayon::ThreadPool, cfg: &ExperimentConfig, ds: &mut CsvDataset) -> Result<()> {
    *ds = CsvDataset::new(&["beta_in", "beta_out", "I", "W", "W_bound"]);
    let points = qubit_sweep(pool, cfg, false)?;
    // Increasing β_out within each curve.
    for chunk in points.chunks(cfg.grid_resolution) {
        for (beta, p) in chunk.iter().rev() {
            let bound = work_bound(finite(*beta), cfg.omega);
            ds.push(vec![(*beta).into(), p.beta_out.into(), p.info.into(), p.w.into(), bound.into()]);
        }
    }
    Ok(())
}

fn fig2(pool: &rayon::ThreadPool, cfg: &ExperimentConfig, ds: &mut CsvDataset) -> Result<()> {
    *ds = CsvDataset::new(&["beta_in", "delta", "theta", "W"]);
    let n = cfg.grid_resolution;
    let mut jobs = Vec::new();
    for &beta in &cfg.beta_in_list {
        let plane = cfg.omega * finite(beta).tanh_half(cfg.omega);
        ds.provenance.push(format!("max_mi_plane_W(beta_in={beta}) = {}", format_number(plane)));
        for delta in grid(-FRAC_PI_2, FRAC_PI_2, n) {
            for theta in grid(0.0, FRAC_PI_2, n) {
                jobs.push((beta, delta, theta));
            }
        }
    }
    let omega = cfg.omega;
    let rows = par_map(pool, jobs, |(beta, delta, theta)| {
        let bi = finite(beta);
        let w = work_cost_params(bi, omega, &UnitaryParams::correlating(theta, delta)?);
        if w > work_bound(bi, omega) + 1e-12 || w < -1e-15 {
            return Err(breach(format!("W={w} outside [0, bound] at δ={delta}, θ={theta}")));
        }
        Ok(vec![beta.into(), delta.into(), theta.into(), w.into()])
    })?;
    rows.into_iter().for_each(|r| ds.push(r));
    Ok(())
}

fn fig3(pool: &rayon::ThreadPool, cfg: &ExperimentConfig, ds: &mut CsvDataset) -> Result<()> {
    *ds = CsvDataset::new(&["beta_in", "beta_out", "W", "delta_I", "sigma_W", "ratio"]);
    ds.provenance.push("curves ordered by increasing W; the W = 0 point is omitted".into());
    for (beta, p) in qubit_sweep(pool, cfg, true)? {
        ds.push(vec![beta.into(), p.beta_out.into(), p.w.into(), p.info.into(), p.sigma_w.into(), (p.sigma_w / p.w).into()]);
    }
    Ok(())
}

fn fig4(pool: &rayon::ThreadPool, cfg: &ExperimentConfig, ds: &mut CsvDataset) -> Result<()> {
    *ds = CsvDataset::new(&["beta_in", "beta_out", "W", "sigma_W"]);
    for (beta, p) in qubit_sweep(pool, cfg, false)? {
        ds.push(vec![beta.into(), p.beta_out.into(), p.w.into(), p.sigma_w.into()]);
    }
    Ok(())
}

fn fig5(pool: &rayon::ThreadPool, cfg: &ExperimentConfig, ds: &mut CsvDataset) -> Result<()> {
    *ds = CsvDataset::new(&["beta_in", "beta_out", "W", "delta_I", "delta_sigma_E", "delta_sigma_E_over_W"]);
    ds.provenance.push("curves ordered by increasing W; the W = 0 point is omitted".into());
    for (beta, p) in qubit_sweep(pool, cfg, true)? {
        ds.push(vec![
            beta.into(),
            p.beta_out.into(),
            p.w.into(),
            p.info.into(),
            p.delta_sigma_e.into(),
            (p.delta_sigma_e / p.w).into(),
        ]);
    }
    Ok(())
}

fn qudit_row(cfg: &ExperimentConfig, d: usize, beta: f64, target: f64) -> Result<Vec<Field>> {
    let h = Hamiltonian::new(cfg.omega, d)?;
    let transform = solve_eta(finite(beta), finite(target), h.local_energies())?;
    let mut eta: Vec<Field> = transform.eta.iter().map(|&e| Field::Num(e)).collect();
    eta.resize(MAX_QUDIT_COLUMNS, Field::Empty);

    let (reached, achieved, residual, coherence, status) =
        match find_phases_for_target(finite(beta), finite(target), d, cfg.omega, cfg.optimizer_tol) {
            Ok(sol) => {
                let u = uniform_global_unitary(&sol.rotation)?;
                let rho = thermal_state(&h, finite(beta));
                let out = DensityMatrix::new(rho.matrix().conjugate_by(&u)?, (d, d))?;
                let report = validate_local_gibbs(&out, cfg.omega, d, Some(&u))?;
                let achieved = sol.beta_out_achieved.value();
                if !report.passed() || achieved.abs() > beta * (1.0 + 1e-9) {
                    return Err(breach(format!(
                        "qudit output failed validation at d={d}, β_in={beta}, target={target}: {report:?}"
                    )));
                }
                let coherence = report.coherence_a.max(report.coherence_b);
                (true, Field::Num(achieved), sol.eta_residual, Field::Num(coherence), "ok")
            }
            Err(CoreError::Infeasible(_)) => (false, Field::Empty, f64::NAN, Field::Empty, "infeasible"),
            Err(CoreError::OptimizerFailed { best_residual, .. }) => {
                (false, Field::Empty, best_residual, Field::Empty, "unreachable")
            }
            Err(e) => return Err(e.into()),
        };
    let mut row = vec![d.into(), beta.into(), target.into(), transform.feasible.into(), reached.into(), achieved];
    row.extend(eta);
    row.push(if residual.is_nan() { Field::Empty } else { Field::Num(residual) });
    row.push(coherence);
    row.push(Field::Text(status.into()));
    Ok(row)
}

fn qudit(pool: &rayon::ThreadPool, cfg: &ExperimentConfig, ds: &mut CsvDataset) -> Result<()> {
    *ds = CsvDataset::new(&[
        "d",
        "beta_in",
        "beta_out_target",
        "feasible",
        "reached",
        "beta_out_achieved",
        "eta_0",
        "eta_1",
        "eta_2",
        "eta_3",
        "eta_residual",
        "max_local_coherence",
        "status",
    ]);
    ds.provenance.push(
        "infeasible: no circulant doubly stochastic map; unreachable: feasible map not realized by a circulant rotation"
            .into(),
    );
    let dims: Vec<usize> = cfg.d.map_or(vec![2, 3, 4], |d| vec![d]);
    let mut jobs = Vec::new();
    for &d in &dims {
        for &beta in &cfg.beta_in_list {
            let targets = match cfg.beta_out {
                Some(t) => vec![t],
                None => grid(-1.5 * beta, 1.5 * beta, cfg.grid_resolution),
            };
            jobs.extend(targets.into_iter().map(|t| (d, beta, t)));
        }
    }
    for row in par_map(pool, jobs, |(d, beta, t)| qudit_row(cfg, d, beta, t))? {
        ds.push(row);
    }
    Ok(())
}

fn dist(cfg: &ExperimentConfig, ds: &mut CsvDataset) -> Result<()> {
    *ds = CsvDataset::new(&["beta_in", "theta", "delta", "W", "probability"]);
    let h = Hamiltonian::new(cfg.omega, 2)?;
    let u = build_ucorr(&UnitaryParams::correlating(cfg.theta, cfg.delta)?);
    for &beta in &cfg.beta_in_list {
        let dist = ttm_distribution(&thermal_state(&h, finite(beta)), &u, &h, cfg.merge_tol * cfg.omega)?;
        let total: f64 = dist.probabilities().iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(breach(format!("work probabilities sum to {total} at β_in={beta}")));
        }
        for (w, p) in dist.iter() {
            ds.push(vec![beta.into(), cfg.theta.into(), cfg.delta.into(), w.into(), p.into()]);
        }
    }
    Ok(())
}

fn errata(pool: &rayon::ThreadPool, cfg: &ExperimentConfig, ds: &mut CsvDataset) -> Result<()> {
    *ds = CsvDataset::new(&["beta_in", "theta", "delta", "printed", "oracle", "closed_form", "discrepancy"]);
    let omega = cfg.omega;
    let point = |beta: f64, theta: f64, delta: f64| -> Result<(f64, f64, f64)> {
        let p = UnitaryParams::correlating(theta, delta)?;
        let h = Hamiltonian::new(omega, 2)?;
        let rho = thermal_state(&h, finite(beta));
        let dist = ttm_distribution(&rho, &build_ucorr(&p), &h, corrwork_core::work::DEFAULT_MERGE_TOL * omega)?;
        let (_, oracle) = distribution_moments(&dist);
        let bo = beta_out_of_weight(finite(beta), omega, p.mixing_weight());
        let closed = fluctuations_closed_form(finite(beta), bo, omega)?;
        if (oracle - closed).abs() > PIPELINE_TOL * (omega * omega).max(1.0) {
            return Err(breach(format!("closed-form variance {closed} vs measured {oracle} at θ={theta}, δ={delta}")));
        }
        Ok((published_param_variance(beta, omega, &p), oracle, closed))
    };

    let (printed, oracle, _) = point(1.0, PI / 4.0, 0.0)?;
    ds.provenance.push(format!(
        "reference beta_in=1 theta=pi/4 delta=0: printed = {}, oracle = {}, discrepancy = {}",
        format_number(printed),
        format_number(oracle),
        format_number((printed - oracle).abs())
    ));

    let n = cfg.grid_resolution;
    let mut jobs = Vec::new();
    for &beta in &cfg.beta_in_list {
        for theta in grid(0.0, FRAC_PI_2, n) {
            for delta in grid(-FRAC_PI_2, FRAC_PI_2, n) {
                jobs.push((beta, theta, delta));
            }
        }
    }
    let rows = par_map(pool, jobs, |(beta, theta, delta)| {
        let (printed, oracle, closed) = point(beta, theta, delta)?;
        Ok(vec![
            Field::from(beta),
            theta.into(),
            delta.into(),
            printed.into(),
            oracle.into(),
            closed.into(),
            (printed - oracle).abs().into(),
        ])
    })?;
    let mismatches = rows.iter().filter(|r| r[6].as_f64().is_some_and(|x| x > PIPELINE_TOL)).count();
    ds.provenance.push(format!("points with discrepancy above {PIPELINE_TOL:e}: {mismatches} of {}", rows.len()));
    rows.into_iter().for_each(|r| ds.push(r));
    Ok(())
}

/// Runs the configured experiment. Infeasible or unreachable qudit targets
/// are reported as rows; failed internal cross-checks are errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<CsvDataset> {
    cfg.validate()?;
    let pool = thread_pool()?;
    let mut ds = CsvDataset::default();
    match cfg.experiment {
        Experiment::Fig1 => fig1(&pool, cfg, &mut ds)?,
        Experiment::Fig2 => fig2(&pool, cfg, &mut ds)?,
        Experiment::Fig3 => fig3(&pool, cfg, &mut ds)?,
        Experiment::Fig4 => fig4(&pool, cfg, &mut ds)?,
        Experiment::Fig5 => fig5(&pool, cfg, &mut ds)?,
        Experiment::Qudit => qudit(&pool, cfg, &mut ds)?,
        Experiment::Dist => dist(cfg, &mut ds)?,
        Experiment::Errata => errata(&pool, cfg, &mut ds)?,
    }
    let mut provenance = cfg.echo();
    provenance.append(&mut ds.provenance);
    ds.provenance = provenance;
    Ok(ds)
}
