//! Subcommand implementations. Each resolves its keys (recording defaults in
//! the config so the manifest is complete), runs, and writes its run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use bnls::evolution::{evolve_observed, EvolveConfig, TrajectoryOutcome, Verdict};
use bnls::functionals::{evaluate_all, in_m_omega, rescale, sample_check_proposition_with_tol, ScalingExpansion, Q_SIGN_TOL};
use bnls::groundstate::{certify_profile, default_starts, solve, solve_multistart, CertifyTolerances, GroundStateResult, InitialGuess, SolverConfig};
use bnls::instability::{run_instability, InstabilityConfig, Preset};
use bnls::io::{read_snapshot, write_json, write_series, write_snapshot};
use bnls::virial::{build_cutoff, RateComparison};
use bnls::{Field64, Grid64, Params64};

use crate::config::{Command, Config, Value, GRID_KEYS, PARAM_KEYS};
use crate::manifest::RunDir;
use crate::CliError;

pub fn run(cmd: Command, mut cfg: Config, config_path: Option<&Path>) -> Result<(), CliError> {
    match cmd {
        Command::Groundstate => cfg.require(&[&PARAM_KEYS[..], &GRID_KEYS[..]].concat(), cmd)?,
        Command::Evolve => {
            cfg.require(&PARAM_KEYS, cmd)?;
            if cfg.str("initial.kind") == Some("snapshot") {
                cfg.require(&["initial.path"], cmd)?;
            } else {
                cfg.require(&GRID_KEYS, cmd)?;
            }
        }
        Command::Instability => {
            if !cfg.contains("instability.preset") {
                cfg.require(&[&PARAM_KEYS[..], &GRID_KEYS[..]].concat(), cmd)?;
            }
        }
        Command::Identities => cfg.require(&["identities.snapshot"], cmd)?,
        Command::Proposition => cfg.require(&[&PARAM_KEYS[..], &GRID_KEYS[..]].concat(), cmd)?,
    }
    let dir = PathBuf::from(cfg.resolve_str("output.dir", "out"));
    cfg.resolve_count("run.threads", 0)?;
    let mut rd = RunDir::create(&dir)?;
    if let Some(p) = config_path {
        rd.input(p);
    }
    let outcome = match cmd {
        Command::Groundstate => groundstate(&mut cfg, &mut rd),
        Command::Evolve => evolve(&mut cfg, &mut rd),
        Command::Instability => instability(&mut cfg, &mut rd),
        Command::Identities => identities(&mut cfg, &mut rd),
        Command::Proposition => proposition(&mut cfg, &mut rd),
    };
    let code = match &outcome {
        Ok(()) => 0,
        Err(e) => e.exit_code(),
    };
    // Validation failures happen before anything is computed; other failures
    // keep whatever was written, with a manifest saying how the run ended.
    if !matches!(outcome, Err(CliError::Validation(_))) {
        std::fs::write(rd.output("config.toml"), cfg.to_toml()).map_err(|e| CliError::Io(e.to_string()))?;
        rd.finish(cmd.name(), &cfg, code)?;
    }
    outcome
}

fn params_from(cfg: &Config, base: Option<Params64>) -> Result<Params64, CliError> {
    let dim = match (cfg.int("params.dim"), base) {
        (Some(d), _) if d >= 1 => d as usize,
        (Some(d), _) => return Err(CliError::Validation(format!("params.dim = {d} must be at least 1"))),
        (None, Some(b)) => b.dim,
        (None, None) => return Err(CliError::Validation("params.dim is required".into())),
    };
    let get = |k: &str, fallback: Option<f64>| {
        cfg.float(k)
            .or(fallback)
            .ok_or_else(|| CliError::Validation(format!("{k} is required")))
    };
    Ok(Params64::new(
        get("params.gamma", base.map(|b| b.gamma))?,
        get("params.mu", base.map(|b| b.mu))?,
        get("params.omega", base.map(|b| b.omega))?,
        get("params.sigma", base.map(|b| b.sigma))?,
        dim,
    )?)
}

fn record_params(cfg: &mut Config, p: &Params64) {
    cfg.set("params.gamma", Value::Float(p.gamma));
    cfg.set("params.mu", Value::Float(p.mu));
    cfg.set("params.omega", Value::Float(p.omega));
    cfg.set("params.sigma", Value::Float(p.sigma));
    cfg.set("params.dim", Value::Int(p.dim as i64));
}

fn grid_from(cfg: &mut Config, default_dim: usize) -> Result<Grid64, CliError> {
    let dim = cfg.resolve_count("grid.dim", default_dim)?;
    let n = cfg.resolve_count("grid.points", 0)?;
    let l = cfg
        .float("grid.half_width")
        .ok_or_else(|| CliError::Validation("grid.half_width is required".into()))?;
    Ok(Grid64::new(dim, n, l)?)
}

fn solver_from(cfg: &mut Config, grid: &Grid64) -> Result<SolverConfig<f64>, CliError> {
    let points = cfg.resolve_count("solver.points", grid.points_per_axis())?;
    let mut s = SolverConfig::new(Grid64::new(grid.dim(), points, grid.half_width())?);
    s.max_iters = cfg.resolve_count("solver.max_iters", s.max_iters)?;
    s.residual_tol = cfg.resolve_float("solver.residual_tol", s.residual_tol);
    s.stabilizer_exponent = cfg.float("solver.stabilizer_exponent");
    s.initial_guess = InitialGuess::Gaussian {
        width: cfg.resolve_float("solver.guess_width", 1.0),
        amplitude: cfg.resolve_float("solver.guess_amplitude", 1.0),
    };
    Ok(s)
}

fn evolve_from(cfg: &mut Config, base: EvolveConfig<f64>) -> Result<EvolveConfig<f64>, CliError> {
    let e = EvolveConfig {
        dt: cfg.resolve_float("evolve.dt", base.dt),
        t_end: cfg.resolve_float("evolve.t_end", base.t_end),
        sample_every: cfg.resolve_count("evolve.sample_every", base.sample_every)?,
        blowup_threshold: cfg.resolve_float("evolve.blowup_threshold", base.blowup_threshold),
        dealias: cfg.resolve_bool("evolve.dealias", base.dealias),
        adapt: cfg.resolve_bool("evolve.adapt", base.adapt),
        local_error_tol: cfg.resolve_float("evolve.local_error_tol", base.local_error_tol),
    };
    e.validate()?;
    Ok(e)
}

struct Solved {
    result: GroundStateResult<f64>,
    /// Profile on the requested grid.
    profile: Field64,
    runs: serde_json::Value,
}

fn solve_ground_state(cfg: &mut Config, p: &Params64, grid: &Grid64) -> Result<Solved, CliError> {
    let solver = solver_from(cfg, grid)?;
    solver.validate()?;
    let starts = cfg.resolve_count("solver.multistart", 1)?;
    let (result, runs) = if starts > 1 {
        let (best, all) = solve_multistart(p, &solver, &default_starts(starts)).map_err(|e| match e {
            bnls::Error::Precondition(m) => CliError::Numerical(m),
            other => other.into(),
        })?;
        let runs = all
            .iter()
            .map(|r| match r {
                Ok(r) => json!({
                    "converged": r.converged,
                    "residual": r.residual,
                    "iterations": r.iterations,
                    "action": r.report.action,
                }),
                Err(e) => json!({ "error": e.to_string() }),
            })
            .collect();
        (best, runs)
    } else {
        (solve(p, &solver)?, serde_json::Value::Null)
    };
    let profile = if result.profile.grid().same_as(grid) {
        result.profile.clone()
    } else {
        result.profile.resample(grid)?
    };
    Ok(Solved { result, profile, runs })
}

fn solver_summary(s: &Solved) -> serde_json::Value {
    json!({
        "converged": s.result.converged,
        "residual": s.result.residual,
        "iterations": s.result.iterations,
        "points_per_axis": s.result.profile.grid().points_per_axis(),
        "report": s.result.report,
        "identity_defects": s.result.identity_defects,
        "multistart": s.runs,
    })
}

fn params_json(p: &Params64) -> serde_json::Value {
    json!({
        "params": p,
        "classification": p.describe(),
        "regime": p.regime(),
        "instability_class": p.instability_class(),
        "radial_symmetry_guaranteed": p.radial_symmetry_guaranteed(),
    })
}

fn not_converged(s: &Solved) -> CliError {
    CliError::Numerical(format!(
        "ground-state solve stopped after {} iterations with residual {:.3e}",
        s.result.iterations, s.result.residual
    ))
}

fn groundstate(cfg: &mut Config, rd: &mut RunDir) -> Result<(), CliError> {
    let p = params_from(cfg, None)?;
    let grid = grid_from(cfg, p.dim)?;
    log::info!("{}", p.describe());
    let solved = solve_ground_state(cfg, &p, &grid)?;
    write_snapshot(&solved.profile, &p, &rd.output("profile.bin"))?;
    let cert = certify_profile(&solved.profile, &p, &CertifyTolerances::default())?;
    write_json(
        &json!({
            "model": params_json(&p),
            "solver": solver_summary(&solved),
            "certificate": cert,
            "d_omega_note": "the ground-state energy estimate is E_omega of the computed profile, an upper estimate of d_omega",
        }),
        &rd.output("groundstate.json"),
    )?;
    rd.note("converged", solved.result.converged);
    rd.note("certificate_accepted", cert.accepted);
    rd.note("ground_state_energy_estimate", cert.ground_state_energy_estimate);
    if !solved.result.converged {
        return Err(not_converged(&solved));
    }
    if !cert.accepted {
        return Err(CliError::Numerical(format!("certificate rejected: {}", cert.failures.join("; "))));
    }
    log::info!(
        "certified: E_omega = {:.12e}, residual {:.3e}",
        cert.ground_state_energy_estimate,
        solved.result.residual
    );
    Ok(())
}

fn trajectory_json(traj: &TrajectoryOutcome<f64>) -> serde_json::Value {
    let mut v = serde_json::to_value(TrajectoryOutcome {
        samples: Vec::new(),
        final_state: None,
        ..traj.clone()
    })
    .expect("trajectory serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("samples");
        obj.insert("sample_count".into(), json!(traj.samples.len()));
    }
    v
}

fn evolve(cfg: &mut Config, rd: &mut RunDir) -> Result<(), CliError> {
    let kind = cfg.resolve_str("initial.kind", "gaussian");
    let (u0, p) = match kind.as_str() {
        "snapshot" => {
            let path = PathBuf::from(cfg.str("initial.path").unwrap_or_default());
            let (u, snap_params) = read_snapshot::<f64>(&path)?;
            rd.input(&path);
            let g = u.grid().clone();
            for (k, want) in [
                ("grid.dim", g.dim() as i64),
                ("grid.points", g.points_per_axis() as i64),
            ] {
                if let Some(got) = cfg.int(k) {
                    if got != want {
                        return Err(CliError::Validation(format!("{k} = {got} but the snapshot has {want}")));
                    }
                }
            }
            if let Some(l) = cfg.float("grid.half_width") {
                if l != g.half_width() {
                    return Err(CliError::Validation(format!(
                        "grid.half_width = {l} but the snapshot has {}",
                        g.half_width()
                    )));
                }
            }
            cfg.set("grid.dim", Value::Int(g.dim() as i64));
            cfg.set("grid.points", Value::Int(g.points_per_axis() as i64));
            cfg.set("grid.half_width", Value::Float(g.half_width()));
            (u, params_from(cfg, Some(snap_params))?)
        }
        "gaussian" => {
            let p = params_from(cfg, None)?;
            let grid = grid_from(cfg, p.dim)?;
            let a = cfg.resolve_float("initial.amplitude", 1.0);
            let w = cfg.resolve_float("initial.width", 1.0);
            if !(w > 0.0) {
                return Err(CliError::Validation(format!("initial.width = {w} must be positive")));
            }
            (Field64::from_radial(&grid, |r| a * (-r * r / (2.0 * w * w)).exp()), p)
        }
        "ground_state" => {
            let p = params_from(cfg, None)?;
            let grid = grid_from(cfg, p.dim)?;
            let solved = solve_ground_state(cfg, &p, &grid)?;
            if !solved.result.converged {
                return Err(not_converged(&solved));
            }
            (solved.profile, p)
        }
        other => {
            return Err(CliError::Validation(format!(
                "initial.kind = {other:?}; expected gaussian, ground_state or snapshot"
            )))
        }
    };
    record_params(cfg, &p);
    let lambda = cfg.resolve_float("initial.lambda", 1.0);
    let u0 = if lambda == 1.0 { u0 } else { rescale(&u0, lambda)? };
    let ecfg = evolve_from(cfg, EvolveConfig::default())?;
    let radii = cfg.floats("virial.radii").map(<[f64]>::to_vec).unwrap_or_default();
    cfg.set("virial.radii", Value::FloatList(radii.clone()));
    let cutoffs = radii
        .iter()
        .map(|&r| build_cutoff(r, u0.grid()))
        .collect::<Result<Vec<_>, _>>()?;
    let every = cfg.resolve_count("evolve.snapshot_every", 0)?;
    write_snapshot(&u0, &p, &rd.output("initial.bin"))?;

    let dir = rd.dir.clone();
    let mut snapshots = Vec::new();
    let mut index = 0usize;
    let traj = evolve_observed(&u0, &p, &ecfg, &cutoffs, |_, psi| {
        if every > 0 && index % every == 0 {
            let name = format!("snapshot_{index:06}.bin");
            write_snapshot(psi, &p, &dir.join(&name))?;
            snapshots.push(name);
        }
        index += 1;
        Ok(())
    })?;
    for name in &snapshots {
        rd.output(name);
    }
    write_series(&traj.samples, &radii, &rd.output("series.csv"))?;
    if let Some(psi) = &traj.final_state {
        write_snapshot(psi, &p, &rd.output("final.bin"))?;
    }
    write_json(
        &json!({
            "model": params_json(&p),
            "initial_kind": kind,
            "initial_lambda": lambda,
            "outcome": trajectory_json(&traj),
        }),
        &rd.output("outcome.json"),
    )?;
    rd.note("verdict", traj.verdict);
    rd.note("t_final", traj.t_final);
    log::info!("verdict {} at t = {:.6e}", traj.verdict, traj.t_final);
    if traj.verdict == Verdict::Poisoned {
        return Err(CliError::Numerical(format!("trajectory poisoned at t = {:.6e}", traj.t_final)));
    }
    Ok(())
}

fn write_comparison(c: &RateComparison<f64>, path: &Path) -> Result<(), CliError> {
    let mut s = String::from("t,rate,rate_fd,eight_q,slack,excess\n");
    for r in &c.samples {
        writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t,
            r.rate,
            r.rate_fd,
            r.eight_q,
            r.slack,
            r.rate - r.eight_q
        )
        .expect("writing to a String");
    }
    std::fs::write(path, s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn instability(cfg: &mut Config, rd: &mut RunDir) -> Result<(), CliError> {
    let (p, base) = match cfg.str("instability.preset") {
        Some(name) => {
            let preset = Preset::from_name(name).ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                CliError::Validation(format!("unknown preset {name:?}; expected one of {}", names.join(", ")))
            })?;
            let base = InstabilityConfig::from_preset(preset)?;
            cfg.set("instability.preset", Value::Str(preset.name().to_string()));
            log::info!("preset {}: {}", preset.name(), preset.setup().note);
            (params_from(cfg, Some(preset.params()))?, Some(base))
        }
        None => (params_from(cfg, None)?, None),
    };
    record_params(cfg, &p);
    let mut icfg = match base {
        Some(b) => {
            let dim = cfg.resolve_count("grid.dim", b.grid.dim())?;
            let n = cfg.resolve_count("grid.points", b.grid.points_per_axis())?;
            let l = cfg.resolve_float("grid.half_width", b.grid.half_width());
            let grid = Grid64::new(dim, n, l)?;
            cfg.resolve_count("solver.points", b.solver.grid.points_per_axis())?;
            let solver = solver_from(cfg, &grid)?;
            let evolve = evolve_from(cfg, b.evolve.clone())?;
            InstabilityConfig { grid, solver, evolve, ..b }
        }
        None => {
            let grid = grid_from(cfg, p.dim)?;
            let solver = solver_from(cfg, &grid)?;
            let evolve = evolve_from(cfg, EvolveConfig::default())?;
            InstabilityConfig::new(grid, solver, evolve)
        }
    };
    icfg.lambda = cfg.resolve_float("instability.lambda", icfg.lambda);
    if let Some(r) = cfg.floats("virial.radii") {
        icfg.radii = r.to_vec();
    }
    cfg.set("virial.radii", Value::FloatList(icfg.radii.clone()));
    icfg.calibration_t_end = cfg.resolve_float("instability.calibration_t_end", icfg.calibration_t_end);
    icfg.sign_tol = cfg.resolve_float("instability.sign_tol", icfg.sign_tol);
    icfg.drift_budget = cfg.resolve_float("instability.drift_budget", icfg.drift_budget);
    icfg.gap_tol = cfg.resolve_float("instability.gap_tol", icfg.gap_tol);
    icfg.validate()?;
    log::info!("{}", p.describe());

    let exp = run_instability(&p, &icfg)?;
    write_series(&exp.trajectory.samples, &icfg.radii, &rd.output("series.csv"))?;
    for c in &exp.virial_comparison {
        write_comparison(c, &rd.output(&format!("virial_R{}.csv", c.radius)))?;
    }
    let mut report = serde_json::to_value(&exp).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(obj) = report.as_object_mut() {
        obj.insert("trajectory".into(), trajectory_json(&exp.trajectory));
        if let Some(serde_json::Value::Array(cs)) = obj.get_mut("virial_comparison") {
            for c in cs.iter_mut().filter_map(|c| c.as_object_mut()) {
                c.remove("samples");
            }
        }
    }
    write_json(&report, &rd.output("experiment.json"))?;
    rd.note("verdict", exp.trajectory.verdict);
    rd.note("classification", &exp.classification.summary);
    rd.note("falsifying", exp.falsifying);
    log::info!("{}", exp.classification.summary);
    if exp.falsifying {
        return Err(CliError::Falsifying(exp.falsifying_reasons.join("; ")));
    }
    Ok(())
}

fn identities(cfg: &mut Config, rd: &mut RunDir) -> Result<(), CliError> {
    let path = PathBuf::from(cfg.str("identities.snapshot").unwrap_or_default());
    let (u, snap_params) = read_snapshot::<f64>(&path)?;
    rd.input(&path);
    let p = params_from(cfg, Some(snap_params))?;
    record_params(cfg, &p);
    let report = evaluate_all(&u, &p)?;
    let cert = certify_profile(&u, &p, &CertifyTolerances::default())?;
    let lambda0 = ScalingExpansion::new(&report, &p).lambda0();
    let in_m = in_m_omega(&u, &p, Q_SIGN_TOL)?;
    write_json(
        &json!({
            "model": params_json(&p),
            "points_per_axis": u.grid().points_per_axis(),
            "half_width": u.grid().half_width(),
            "report": report,
            "identity_defects": report.identity_defects(&p),
            "energy0_on_solutions": report.energy0_on_solutions(&p),
            "in_m_omega": in_m,
            "lambda0": lambda0.as_ref().ok(),
            "lambda0_error": lambda0.as_ref().err().map(|e| e.to_string()),
            "certificate": cert,
        }),
        &rd.output("identities.json"),
    )?;
    rd.note("identity_defects", report.identity_defects(&p));
    rd.note("certificate_accepted", cert.accepted);
    Ok(())
}

fn proposition(cfg: &mut Config, rd: &mut RunDir) -> Result<(), CliError> {
    let p = params_from(cfg, None)?;
    let grid = grid_from(cfg, p.dim)?;
    let n = cfg.resolve_count("proposition.samples", 200)?;
    let seed = cfg.resolve_count("proposition.seed", 7)? as u64;
    let tol = cfg.resolve_float("proposition.tol", 1e-6);
    let solved = solve_ground_state(cfg, &p, &grid)?;
    if !solved.result.converged {
        return Err(not_converged(&solved));
    }
    write_snapshot(&solved.profile, &p, &rd.output("profile.bin"))?;
    let report = sample_check_proposition_with_tol(&solved.profile, &p, n, seed, tol)?;
    write_json(
        &json!({
            "model": params_json(&p),
            "solver": solver_summary(&solved),
            "proposition": report,
        }),
        &rd.output("proposition.json"),
    )?;
    rd.note("samples_kept", report.samples_kept);
    rd.note("violations", report.violations);
    rd.note("inconclusive", report.inconclusive);
    if report.inconclusive {
        log::warn!("no sample landed in M_omega; the check is inconclusive");
    }
    if report.violations > 0 {
        return Err(CliError::Falsifying(format!(
            "{} of {} kept samples have E_omega below the ground-state estimate",
            report.violations, report.samples_kept
        )));
    }
    log::info!("{} samples kept, no violations", report.samples_kept);
    Ok(())
}
