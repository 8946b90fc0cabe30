use std::io::Write;
use std::path::Path;

use morse_sturm::focal::{self, TrialOutcome};
use morse_sturm::geometry::{self, GeodesicSeed, SubmanifoldGerm};
use morse_sturm::indexform::{self, Mesh};
use morse_sturm::problem::{self, MorseSturmProblem};
use morse_sturm::solver::{self, TimelikeWitness};
use morse_sturm::{Error, Tolerances, WitnessSeed, DEFAULT_MESH_SCHEDULE};
use nalgebra::{DMatrix, DVector};

use crate::{
    Cli, Command, Failure, Options, TrivializeArgs, DEFAULT_EPS, DEFAULT_MESH, DEFAULT_SEED,
    DEFAULT_TRIALS, DEFAULT_T_GRID,
};

pub fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.show_config {
        return emit(&cli.opts, show_config(&cli.opts)?.into_bytes());
    }
    let Some(command) = &cli.command else {
        return Err(Failure { code: 1, message: "no subcommand given (see --help)".into() });
    };
    let opts = &cli.opts;
    let tol = opts.tolerances()?;
    match command {
        Command::Focal { input, traces } => cmd_focal(opts, &tol, input, traces.as_deref()),
        Command::Verify { input } => cmd_verify(opts, &tol, input),
        Command::Evolve { input, jumps } => cmd_evolve(opts, &tol, input, jumps.as_deref()),
        Command::Maslov { input } => cmd_maslov(opts, &tol, input),
        Command::Perturb { input } => cmd_perturb(opts, &tol, input),
        Command::Trivialize(args) => cmd_trivialize(opts, &tol, args),
    }
}

fn show_config(opts: &Options) -> Result<String, Failure> {
    let tol = opts.tolerances()?;
    let config = serde_json::json!({
        "tolerances": tol,
        "mesh": opts.mesh.unwrap_or(DEFAULT_MESH),
        "mesh_schedule": schedule(opts),
        "t_grid": opts.t_grid.as_deref().unwrap_or(DEFAULT_T_GRID),
        "seed": opts.seed.unwrap_or(DEFAULT_SEED),
        "eps": opts.eps.unwrap_or(DEFAULT_EPS),
        "trials": opts.trials.unwrap_or(DEFAULT_TRIALS),
        "verify_perturbation": {"eps": indexform::ROBUST_EPS, "trials": indexform::ROBUST_TRIALS},
        "geometry": {
            "h_fd": geometry::H_FD,
            "samples": geometry::TRIVIALIZE_SAMPLES,
            "curvature_symmetry_tol": geometry::CURVATURE_SYMMETRY_TOL,
            "charts": geometry::BUILTIN_CHARTS,
        },
    });
    Ok(serde_json::to_string_pretty(&config).expect("config serializes") + "\n")
}

/// `--mesh m` gives the schedule `m, 2m, 4m, 8m, 16m`.
fn schedule(opts: &Options) -> Vec<usize> {
    match opts.mesh {
        Some(m) => (0..DEFAULT_MESH_SCHEDULE.len()).map(|i| m << i).collect(),
        None => DEFAULT_MESH_SCHEDULE.to_vec(),
    }
}

/// Writes to `--output` or stdout in one go.
fn emit(opts: &Options, bytes: Vec<u8>) -> Result<(), Failure> {
    match &opts.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn load_valid(path: &Path, tol: &Tolerances) -> Result<MorseSturmProblem, Failure> {
    let p = problem::load(path)?;
    let violations = problem::validate(&p, tol);
    if violations.is_empty() {
        return Ok(p);
    }
    let mut message = format!("{} failed validation:", path.display());
    for v in &violations {
        message.push_str(&format!("\n  {} (margin {:.3e}): {}", v.invariant, v.margin, v.detail));
    }
    Err(Failure { code: 1, message })
}

fn witness(p: &MorseSturmProblem, tol: &Tolerances) -> Result<Option<TimelikeWitness>, Failure> {
    match &p.y_seed {
        Some(_) => Ok(Some(solver::solve_witness(p, tol)?)),
        None => Ok(None),
    }
}

fn cmd_focal(opts: &Options, tol: &Tolerances, input: &Path, traces: Option<&Path>) -> Result<(), Failure> {
    let p = load_valid(input, tol)?;
    let scan = focal::scan_problem(&p, tol)?;
    let mut out = Vec::new();
    scan.write_table(&mut out, tol)?;
    if let Some(path) = traces {
        let mut t = Vec::new();
        scan.write_traces(&mut t)?;
        std::fs::write(path, t)?;
    }
    emit(opts, out)
}

fn cmd_verify(opts: &Options, tol: &Tolerances, input: &Path) -> Result<(), Failure> {
    let p = load_valid(input, tol)?;
    let w = witness(&p, tol)?;
    let report = indexform::verify(&p, w.as_ref(), &schedule(opts), tol)?;
    emit(opts, report.to_json().into_bytes())?;
    if report.residual != 0 {
        return Err(Failure { code: 5, message: format!("index formula residual is {}", report.residual) });
    }
    Ok(())
}

fn cmd_evolve(opts: &Options, tol: &Tolerances, input: &Path, jumps: Option<&Path>) -> Result<(), Failure> {
    let p = load_valid(input, tol)?;
    let ts = indexform::parse_t_grid(opts.t_grid.as_deref().unwrap_or(DEFAULT_T_GRID))?;
    let mesh = Mesh::uniform(opts.mesh.unwrap_or(DEFAULT_MESH))?;
    let w = witness(&p, tol)?;
    let scan = focal::scan_problem(&p, tol)?;
    let trace = indexform::evolution_trace(&p, w.as_ref(), &mesh, &ts, Some(&scan), tol)?;
    let mut out = Vec::new();
    trace.write_csv(&mut out, &mesh, tol)?;
    let mut jump_table = Vec::new();
    trace.write_jumps(&mut jump_table)?;
    match jumps {
        Some(path) => std::fs::write(path, jump_table)?,
        None => {
            out.push(b'\n');
            out.extend(jump_table);
        }
    }
    emit(opts, out)
}

fn cmd_maslov(opts: &Options, tol: &Tolerances, input: &Path) -> Result<(), Failure> {
    let p = load_valid(input, tol)?;
    let mut out = Vec::new();
    match opts.eps {
        Some(eps) if eps > 0.0 => {
            let trials = opts.trials.unwrap_or(DEFAULT_TRIALS);
            let seed = opts.seed.unwrap_or(DEFAULT_SEED);
            let robust = focal::maslov_robust(&p, eps, trials, seed, tol)?;
            writeln!(out, "# eps={eps:e} trials={trials} seed={seed}")?;
            robust.write_table(&mut out)?;
            writeln!(out, "\nmaslov\n{}", robust.value)?;
        }
        _ => {
            let scan = focal::scan_problem(&p, tol)?;
            let value = focal::maslov_index(&scan)?;
            writeln!(
                out,
                "# tol_rank={:e} tol_eig={:e} refine_tol={:e}",
                tol.tol_rank, tol.tol_eig, tol.refine_tol
            )?;
            writeln!(out, "maslov\n{value}")?;
        }
    }
    emit(opts, out)
}

/// Trials are compared with the unperturbed Maslov index. When `t = 1` is
/// focal that index is undefined, the focal instant may leave or enter the
/// interval under perturbation, and only the validity of every trial is
/// required.
fn cmd_perturb(opts: &Options, tol: &Tolerances, input: &Path) -> Result<(), Failure> {
    let p = load_valid(input, tol)?;
    let eps = opts.eps.unwrap_or(DEFAULT_EPS);
    let n = opts.trials.unwrap_or(DEFAULT_TRIALS);
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let base = focal::scan_problem(&p, tol)?;
    let trials = focal::perturbation_trials(&p, eps, n, seed, tol)?;

    let mut out = Vec::new();
    writeln!(
        out,
        "# eps={eps:e} trials={n} seed={seed} tol_rank={:e} tol_eig={:e} refine_tol={:e}",
        tol.tol_rank, tol.tol_eig, tol.refine_tol
    )?;
    focal::write_trials(&mut out, &trials)?;

    let rejected = trials.iter().filter(|t| matches!(t.outcome, TrialOutcome::Rejected(_))).count();
    let values: Vec<i64> = trials
        .iter()
        .filter_map(|t| match t.outcome {
            TrialOutcome::Value(v) => Some(v),
            _ => None,
        })
        .collect();
    let failure = match focal::maslov_index(&base) {
        Err(Error::EndpointFocal) => {
            writeln!(out, "\n# unperturbed problem is focal at t = 1; Maslov index undefined")?;
            writeln!(out, "agreement,base,valid_trials\nn/a,n/a,{}", n - rejected)?;
            (rejected > 0).then(|| format!("{rejected} perturbed problems failed validation"))
        }
        Err(e) => return Err(e.into()),
        Ok(v) => {
            let unanimous = !values.is_empty() && values.iter().all(|x| *x == v);
            writeln!(out, "\nagreement,base,valid_trials\n{unanimous},{v},{}", n - rejected)?;
            (!unanimous || rejected > 0).then(|| format!("trials {values:?} do not all match {v}"))
        }
    };
    emit(opts, out)?;
    match failure {
        Some(message) => Err(Failure { code: 2, message }),
        None => Ok(()),
    }
}

fn parse_vector(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure { code: 1, message: format!("cannot parse vector {s:?}") })
}

fn cmd_trivialize(opts: &Options, tol: &Tolerances, args: &TrivializeArgs) -> Result<(), Failure> {
    let chart = geometry::builtin_chart(&args.chart).ok_or_else(|| Failure {
        code: 1,
        message: format!("unknown chart {:?}; built-ins are {:?}", args.chart, geometry::BUILTIN_CHARTS),
    })?;
    let n = chart.dim();
    let bad = |what: &str| Failure { code: 1, message: format!("{what} must have {n} components") };

    let x0 = args.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    let v0 = args.v0.clone().unwrap_or_else(|| {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        v
    });
    if x0.len() != n {
        return Err(bad("--x0"));
    }
    if v0.len() != n {
        return Err(bad("--v0"));
    }
    let tangents = args.tangent.iter().map(|s| parse_vector(s)).collect::<Result<Vec<_>, _>>()?;
    if tangents.iter().any(|v| v.len() != n) {
        return Err(bad("--tangent"));
    }
    let k = tangents.len();
    let basis = DMatrix::from_fn(n, k, |i, j| tangents[j][i]);
    let shape = match &args.shape {
        Some(s) if s.len() == k * k => DMatrix::from_row_slice(k, k, s),
        Some(_) => {
            return Err(Failure { code: 1, message: format!("--shape must have {} entries", k * k) })
        }
        None => DMatrix::zeros(k, k),
    };
    let y_seed = match &args.y0 {
        Some(y) if y.len() == n => {
            let vel = args.y0_velocity.clone().unwrap_or_else(|| vec![0.0; n]);
            if vel.len() != n {
                return Err(bad("--y0-velocity"));
            }
            Some(WitnessSeed { value: DVector::from_vec(y.clone()), velocity: DVector::from_vec(vel) })
        }
        Some(_) => return Err(bad("--y0")),
        None => None,
    };

    let seed = GeodesicSeed { x0: DVector::from_vec(x0), v0: DVector::from_vec(v0), t_len: args.t_len };
    let germ = SubmanifoldGerm { tangent_basis: basis, second_fundamental: shape };
    let mut p = geometry::trivialize_chart(chart.as_ref(), &seed, &germ, y_seed, tol)?;
    if let serde_json::Value::Object(map) = &mut p.meta {
        map.insert("tolerances".into(), serde_json::to_value(tol).expect("tolerances serialize"));
    }
    emit(opts, problem::to_json_string(&p).into_bytes())
}
