//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};

use corrwork::{run_experiment, Experiment, ExperimentConfig};
use corrwork_core::linalg::validate_unitary;
use corrwork_core::qubit::{
    analytic_final_state, apply_protocol, beta_out_of_params, build_ucorr, mutual_info_temps, work_bound,
    work_cost_params, UnitaryParams,
};
use corrwork_core::qudit::{
    assemble_from_rotations, circulant_unitary, find_phases_for_target, solve_eta, stochasticity_residual,
    subspace_transfer_matrices, uniform_global_unitary, validate_local_gibbs,
};
use corrwork_core::thermal::{local_inverse_temperature, mutual_information, thermal_state};
use corrwork_core::work::{
    covariance_decomposition, distribution_moments, fluctuations_closed_form, published_param_variance,
    ttm_distribution, work_operator_moments, DEFAULT_MERGE_TOL,
};
use corrwork_core::{ComplexMatrix, DensityMatrix, Error, Hamiltonian, InverseTemperature, LogBase, Subsystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const BETAS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

fn b(x: f64) -> InverseTemperature {
    InverseTemperature::Finite(x)
}

fn angle_grid() -> Vec<(f64, f64)> {
    let axis: Vec<f64> = (0..9).map(|k| -FRAC_PI_2 + k as f64 * PI / 8.0).collect();
    axis.iter().flat_map(|&t| axis.iter().map(move |&d| (t, d))).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: Error) -> String {
    err.to_string()
}

fn analytic_numeric_agreement() -> Outcome {
    let h = Hamiltonian::new(1.0, 2).map_err(e)?;
    let (mut state_dev, mut obs_dev) = (0.0f64, 0.0f64);
    for beta in BETAS {
        let rho = thermal_state(&h, b(beta));
        let e_in = rho.expectation(&h.matrix()).map_err(e)?;
        for (theta, delta) in angle_grid() {
            let p = UnitaryParams::correlating(theta, delta).map_err(e)?;
            let out = apply_protocol(&rho, &build_ucorr(&p)).map_err(e)?;
            let analytic = analytic_final_state(b(beta), 1.0, &p).map_err(e)?.to_matrix();
            state_dev = state_dev.max(analytic.max_abs_diff(out.matrix()));

            let bo = beta_out_of_params(b(beta), 1.0, &p);
            let fitted = local_inverse_temperature(&out.reduced(Subsystem::A).map_err(e)?, 1.0).map_err(e)?;
            let w_num = out.expectation(&h.matrix()).map_err(e)? - e_in;
            let i_num = mutual_information(&out, LogBase::E).map_err(e)?;
            obs_dev = obs_dev
                .max((fitted.value() - bo.value()).abs())
                .max((w_num - work_cost_params(b(beta), 1.0, &p)).abs())
                .max((i_num - mutual_info_temps(b(beta), bo, 1.0, LogBase::E)).abs());
        }
    }
    ensure(state_dev <= 1e-12, || format!("final state deviates by {state_dev:e}"))?;
    ensure(obs_dev <= 1e-9, || format!("β_out/W/I deviate by {obs_dev:e}"))?;
    Ok(format!("405 points; state dev {state_dev:.1e}, observable dev {obs_dev:.1e}"))
}

fn fluctuation_closed_form() -> Outcome {
    let h = Hamiltonian::new(1.0, 2).map_err(e)?;
    let mut dev = 0.0f64;
    for beta in BETAS {
        let rho = thermal_state(&h, b(beta));
        for (theta, delta) in angle_grid() {
            let p = UnitaryParams::correlating(theta, delta).map_err(e)?;
            let dist = ttm_distribution(&rho, &build_ucorr(&p), &h, DEFAULT_MERGE_TOL).map_err(e)?;
            let (_, var) = distribution_moments(&dist);
            let closed = fluctuations_closed_form(b(beta), beta_out_of_params(b(beta), 1.0, &p), 1.0).map_err(e)?;
            dev = dev.max((var - closed).abs());
        }
    }
    ensure(dev <= 1e-9, || format!("closed form vs TTM variance deviates by {dev:e}"))?;

    // Maximal mixing: σ_W = ω, W = ω tanh(β_in ω/2).
    for beta in [0.1, 1.0, 4.0, 100.0] {
        let rho = thermal_state(&h, b(beta));
        let u = build_ucorr(&UnitaryParams::correlating(FRAC_PI_4, 0.0).map_err(e)?);
        let (mean, var) = distribution_moments(&ttm_distribution(&rho, &u, &h, DEFAULT_MERGE_TOL).map_err(e)?);
        let sigma = var.sqrt();
        ensure((sigma - 1.0).abs() <= 1e-12, || format!("σ_W = {sigma} at β_out = 0, β_in = {beta}"))?;
        ensure((mean - (beta / 2.0).tanh()).abs() <= 1e-12, || format!("W = {mean} at β_out = 0, β_in = {beta}"))?;
        let coth = 1.0 / (beta / 2.0).tanh();
        ensure((sigma / mean - coth).abs() <= 1e-12 * coth, || format!("ratio {} vs coth {coth}", sigma / mean))?;
    }

    let mut cfg = ExperimentConfig::new(Experiment::Fig3);
    cfg.beta_in_list = vec![100.0, 1.0, 0.1];
    let ds = run_experiment(&cfg).map_err(|x| x.to_string())?;
    let beta_col = ds.column_index("beta_in").unwrap();
    let info_col = ds.column_index("delta_I").unwrap();
    let ratio_col = ds.column_index("ratio").unwrap();
    let mut ratios = Vec::new();
    for beta in [100.0, 1.0, 0.1] {
        let best = ds
            .rows
            .iter()
            .filter(|r| r[beta_col].as_f64() == Some(beta))
            .max_by(|x, y| x[info_col].as_f64().unwrap().total_cmp(&y[info_col].as_f64().unwrap()))
            .ok_or("empty fig3 curve")?;
        ratios.push(best[ratio_col].as_f64().unwrap());
    }
    ensure((ratios[0] - 1.0).abs() <= 1e-4, || format!("ratio at β_in = 100 is {}", ratios[0]))?;
    ensure(ratios.windows(2).all(|w| w[0] < w[1]), || format!("ratios not increasing: {ratios:?}"))?;
    Ok(format!("variance dev {dev:.1e}; max-ΔI ratios {:.6}, {:.6}, {:.6}", ratios[0], ratios[1], ratios[2]))
}

fn moment_scheme_equivalence() -> Outcome {
    let mut dev = 0.0f64;
    let mut checks = 0;
    let h = Hamiltonian::new(1.0, 2).map_err(e)?;
    for beta in BETAS {
        let rho = thermal_state(&h, b(beta));
        for (theta, delta) in angle_grid() {
            let u = build_ucorr(&UnitaryParams::new(theta, delta, 0.4 * theta, -delta).map_err(e)?);
            let (m1, v1) = distribution_moments(&ttm_distribution(&rho, &u, &h, DEFAULT_MERGE_TOL).map_err(e)?);
            let (m2, v2) = work_operator_moments(&rho, &u, &h).map_err(e)?;
            let s = covariance_decomposition(&rho, &u, &h).map_err(e)?;
            dev = dev
                .max((m1 - m2).abs())
                .max((v1 - v2).abs())
                .max((s.sigma_ei_sq + s.sigma_ef_sq - 2.0 * s.cov - v1).abs());
            checks += 1;
        }
    }
    // Thermal qutrit pairs, which have degenerate global levels.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h3 = Hamiltonian::new(1.0, 3).map_err(e)?;
    for _ in 0..20 {
        let rho = thermal_state(&h3, b(rng.random_range(0.1..3.0)));
        let rotations: Vec<_> = (0..3)
            .map(|_| circulant_unitary(&(0..3).map(|_| rng.random_range(0.0..TAU)).collect::<Vec<_>>()))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let u = assemble_from_rotations(&rotations, 3).map_err(e)?;
        let (m1, v1) = distribution_moments(&ttm_distribution(&rho, &u, &h3, DEFAULT_MERGE_TOL).map_err(e)?);
        let (m2, v2) = work_operator_moments(&rho, &u, &h3).map_err(e)?;
        let s = covariance_decomposition(&rho, &u, &h3).map_err(e)?;
        dev = dev
            .max((m1 - m2).abs())
            .max((v1 - v2).abs())
            .max((s.sigma_ei_sq + s.sigma_ef_sq - 2.0 * s.cov - v1).abs());
        checks += 1;
    }
    ensure(dev <= 1e-12, || format!("moment schemes differ by {dev:e}"))?;
    Ok(format!("{checks} thermal inputs; max dev {dev:.1e}"))
}

fn bounds() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut points = 0;
    let mut record = |beta: f64, w: f64, i: f64, bound: f64| -> Result<(), String> {
        points += 1;
        let slack = (beta * w - i).min(bound - w);
        worst = worst.min(slack);
        ensure(beta * w - i >= -1e-9 && w <= bound + 1e-9, || {
            format!("β_in={beta}: W={w}, I={i}, bound={bound}")
        })
    };
    for beta in BETAS {
        for (theta, delta) in angle_grid() {
            let p = UnitaryParams::correlating(theta, delta).map_err(e)?;
            let bo = beta_out_of_params(b(beta), 1.0, &p);
            record(
                beta,
                work_cost_params(b(beta), 1.0, &p),
                mutual_info_temps(b(beta), bo, 1.0, LogBase::E),
                work_bound(b(beta), 1.0),
            )?;
        }
    }
    for experiment in [Experiment::Fig1, Experiment::Fig3] {
        let mut cfg = ExperimentConfig::new(experiment);
        cfg.beta_in_list = vec![100.0, 4.0, 1.0, 0.1];
        let ds = run_experiment(&cfg).map_err(|x| x.to_string())?;
        let col = |n: &str| ds.column_index(if n == "I" && experiment == Experiment::Fig3 { "delta_I" } else { n });
        let (cb, cw, ci) = (col("beta_in").unwrap(), col("W").unwrap(), col("I").unwrap());
        for r in &ds.rows {
            let beta = r[cb].as_f64().unwrap();
            record(beta, r[cw].as_f64().unwrap(), r[ci].as_f64().unwrap(), work_bound(b(beta), 1.0))?;
        }
    }
    let h = Hamiltonian::new(1.0, 2).map_err(e)?;
    for beta in BETAS {
        let p = UnitaryParams::correlating(FRAC_PI_2, 0.0).map_err(e)?;
        let w = work_cost_params(b(beta), 1.0, &p);
        let bound = work_bound(b(beta), 1.0);
        let out = apply_protocol(&thermal_state(&h, b(beta)), &build_ucorr(&p)).map_err(e)?;
        let i = mutual_information(&out, LogBase::E).map_err(e)?;
        ensure((w - bound).abs() <= 1e-9 && i.abs() <= 1e-9, || {
            format!("bound not attained at θ=π/2: W={w}, bound={bound}, I={i}")
        })?;
    }
    Ok(format!("{points} sweep points; min slack {worst:.1e}; bound attained with I = 0"))
}

fn identity_and_endpoints() -> Outcome {
    let h = Hamiltonian::new(1.0, 2).map_err(e)?;
    for beta in BETAS.iter().copied().chain([100.0]) {
        let rho = thermal_state(&h, b(beta));
        for delta in [0.0, 0.7, -1.3] {
            let p = UnitaryParams::correlating(0.0, delta).map_err(e)?;
            let u = build_ucorr(&p);
            let out = apply_protocol(&rho, &u).map_err(e)?;
            let w = out.expectation(&h.matrix()).map_err(e)? - rho.expectation(&h.matrix()).map_err(e)?;
            let (_, var) = distribution_moments(&ttm_distribution(&rho, &u, &h, DEFAULT_MERGE_TOL).map_err(e)?);
            let i = mutual_information(&out, LogBase::E).map_err(e)?;
            ensure(w.abs() <= 1e-12 && var.max(0.0).sqrt() <= 1e-12 && i.abs() <= 1e-12, || {
                format!("θ=0 at β_in={beta}: W={w}, σ_W²={var}, I={i}")
            })?;
            ensure(work_cost_params(b(beta), 1.0, &p) == 0.0, || "closed-form W nonzero at θ=0".into())?;
        }
        let swap = UnitaryParams::correlating(FRAC_PI_2, 0.0).map_err(e)?;
        let bo = beta_out_of_params(b(beta), 1.0, &swap).value();
        ensure((bo + beta).abs() <= 1e-10, || format!("β_out = {bo} at θ=π/2 for β_in={beta}"))?;
        if beta <= 5.0 {
            let out = apply_protocol(&rho, &build_ucorr(&swap)).map_err(e)?;
            let fitted = local_inverse_temperature(&out.reduced(Subsystem::A).map_err(e)?, 1.0).map_err(e)?;
            ensure((fitted.value() + beta).abs() <= 1e-10, || format!("fitted β_out = {fitted} at θ=π/2"))?;
        }
    }
    Ok("θ=0 is idle; θ=π/2, δ=0 inverts β_in".into())
}

fn appendix_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let (mut coherence, mut stochastic) = (0.0f64, 0.0f64);
    for d in 2..=4 {
        let h = Hamiltonian::new(1.0, d).map_err(e)?;
        for _ in 0..200 {
            let rho = thermal_state(&h, b(rng.random_range(0.05..5.0)));
            let rotations: Vec<_> = (0..d)
                .map(|_| circulant_unitary(&(0..d).map(|_| rng.random_range(0.0..TAU)).collect::<Vec<_>>()))
                .collect::<Result<_, _>>()
                .map_err(e)?;
            let u = assemble_from_rotations(&rotations, d).map_err(e)?;
            ensure(validate_unitary(&u, 1e-12).passed, || "assembled unitary not unitary".into())?;
            let out = DensityMatrix::new(rho.matrix().conjugate_by(&u).map_err(e)?, (d, d)).map_err(e)?;
            let report = validate_local_gibbs(&out, 1.0, d, Some(&u)).map_err(e)?;
            coherence = coherence.max(report.coherence_a).max(report.coherence_b);
            for t in subspace_transfer_matrices(&u, d).map_err(e)? {
                let (sums, min_entry) = stochasticity_residual(&t);
                stochastic = stochastic.max(sums).max((-min_entry).max(0.0));
            }
        }
    }
    ensure(coherence < 1e-10, || format!("local coherence {coherence:e}"))?;
    ensure(stochastic <= 1e-10, || format!("transfer matrices off doubly stochastic by {stochastic:e}"))?;

    let mut mixing = 0.0f64;
    for d in 2..=4 {
        let sol = find_phases_for_target(b(1.0), b(0.0), d, 1.0, 1e-10).map_err(e)?;
        let h = Hamiltonian::new(1.0, d).map_err(e)?;
        let u = uniform_global_unitary(&sol.rotation).map_err(e)?;
        let out = DensityMatrix::new(thermal_state(&h, b(1.0)).matrix().conjugate_by(&u).map_err(e)?, (d, d))
            .map_err(e)?;
        let mixed = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
        for keep in [Subsystem::A, Subsystem::B] {
            mixing = mixing.max(out.reduced(keep).map_err(e)?.matrix().max_abs_diff(&mixed));
        }
    }
    ensure(mixing <= 1e-8, || format!("β_out = 0 targets miss the maximally mixed state by {mixing:e}"))?;

    let h = Hamiltonian::new(1.0, 2).map_err(e)?;
    let mut reduction = 0.0f64;
    for beta in [0.3, 1.0, 2.5] {
        let rho = thermal_state(&h, b(beta));
        for frac in [-1.0, -0.5, 0.0, 0.6] {
            let target = b(beta * frac);
            let sol = find_phases_for_target(b(beta), target, 2, 1.0, 1e-10).map_err(e)?;
            let u = uniform_global_unitary(&sol.rotation).map_err(e)?;
            let out = DensityMatrix::new(rho.matrix().conjugate_by(&u).map_err(e)?, (2, 2)).map_err(e)?;
            let w = out.expectation(&h.matrix()).map_err(e)? - rho.expectation(&h.matrix()).map_err(e)?;
            let i = mutual_information(&out, LogBase::E).map_err(e)?;
            let (_, var) = distribution_moments(&ttm_distribution(&rho, &u, &h, DEFAULT_MERGE_TOL).map_err(e)?);
            let w_ref = corrwork_core::qubit::work_cost_temps(b(beta), target, 1.0).map_err(e)?;
            let i_ref = mutual_info_temps(b(beta), target, 1.0, LogBase::E);
            let s_ref = fluctuations_closed_form(b(beta), target, 1.0).map_err(e)?.sqrt();
            reduction = reduction.max((w - w_ref).abs()).max((i - i_ref).abs()).max((var.sqrt() - s_ref).abs());
        }
    }
    ensure(reduction <= 1e-9, || format!("d=2 appendix pipeline deviates from qubit formulas by {reduction:e}"))?;

    let mut flagged = 0;
    for d in 2..=4 {
        let h = Hamiltonian::new(1.0, d).map_err(e)?;
        for target in [-2.0, -1.5, -1.01, 1.01, 1.5, 2.0] {
            let t = solve_eta(b(1.0), b(target), h.local_energies()).map_err(e)?;
            ensure(!t.feasible, || format!("|β_out| > β_in reported feasible at d={d}, target={target}"))?;
            match find_phases_for_target(b(1.0), b(target), d, 1.0, 1e-10) {
                Err(Error::Infeasible(_)) => flagged += 1,
                other => return Err(format!("target {target} at d={d} not flagged: {other:?}")),
            }
        }
    }
    Ok(format!(
        "coherence {coherence:.1e}, stochastic dev {stochastic:.1e}, mixing dev {mixing:.1e}, d=2 dev {reduction:.1e}, {flagged} infeasible targets flagged"
    ))
}

fn errata_reproduction() -> Outcome {
    let p = UnitaryParams::correlating(FRAC_PI_4, 0.0).map_err(e)?;
    let printed = published_param_variance(1.0, 1.0, &p);
    let h = Hamiltonian::new(1.0, 2).map_err(e)?;
    let dist = ttm_distribution(&thermal_state(&h, b(1.0)), &build_ucorr(&p), &h, DEFAULT_MERGE_TOL).map_err(e)?;
    let (_, oracle) = distribution_moments(&dist);
    ensure(printed == 0.0, || format!("printed expression gives {printed}, expected 0"))?;
    ensure((oracle - 1.0).abs() <= 1e-9, || format!("oracle variance {oracle}, expected 1"))?;

    let cfg = ExperimentConfig::new(Experiment::Errata);
    let first = run_experiment(&cfg).and_then(|d| d.to_bytes()).map_err(|x| x.to_string())?;
    let second = run_experiment(&cfg).and_then(|d| d.to_bytes()).map_err(|x| x.to_string())?;
    ensure(first == second, || "errata report not deterministic".into())?;
    let text = String::from_utf8(first).map_err(|x| x.to_string())?;
    ensure(
        text.contains("printed = 0.00000000000e0, oracle = 1.00000000000e0, discrepancy = 1.00000000000e0"),
        || "errata report lacks the reference discrepancy".into(),
    )?;
    Ok(format!("printed {printed}, oracle {oracle:.12}; report reproducible"))
}

fn determinism() -> Outcome {
    let mut sizes = Vec::new();
    for &experiment in Experiment::all() {
        let cfg = ExperimentConfig::new(experiment);
        let a = run_experiment(&cfg).and_then(|d| d.to_bytes()).map_err(|x| x.to_string())?;
        let b = run_experiment(&cfg).and_then(|d| d.to_bytes()).map_err(|x| x.to_string())?;
        ensure(a == b, || format!("{experiment} output differs between runs"))?;
        sizes.push(format!("{experiment}:{}B", a.len()));
    }
    Ok(sizes.join(" "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("analytic-numeric agreement", analytic_numeric_agreement),
        ("fluctuation closed form", fluctuation_closed_form),
        ("moment-scheme equivalence", moment_scheme_equivalence),
        ("bounds", bounds),
        ("identity and endpoint cases", identity_and_endpoints),
        ("qudit pipeline", appendix_pipeline),
        ("errata reproduction", errata_reproduction),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
