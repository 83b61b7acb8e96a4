//! Command-line front end: stationary states, spectral scans, inequality
//! suites, evolution runs and the verification battery, with plot-ready
//! CSV output and reproducible key=value reports.

// Negated comparisons like !(x > 0.0) reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand};
use ks_radial::error::KsError;
use ks_radial::evolve;
use ks_radial::forms;
use ks_radial::grid::RadialGrid;
use ks_radial::ode::OdeOptions;
use ks_radial::profile::solve_stationary;
use ks_radial::spectrum::{find_k1_eigenvalues, find_radial_eigenvalues, ModeLabel};
use ks_radial::verify::{run_suite, SuiteOutcome, VerifyConfig, SUITE_NAMES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

const TAU: f64 = std::f64::consts::TAU;
const CRITICAL_MASS: f64 = 8.0 * std::f64::consts::PI;

#[derive(Parser)]
#[command(
    name = "ksr",
    about = "Radial chemotaxis toolkit in self-similar variables",
    version
)]
struct Cli {
    /// Optional key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct Common {
    /// Total mass M in (0, 8*pi).
    #[arg(long)]
    mass: Option<f64>,
    /// Truncation point of the computational domain in s = r^2.
    #[arg(long)]
    s_max: Option<f64>,
    /// Geometric spacing ratio of the grid.
    #[arg(long)]
    ratio: Option<f64>,
    /// Node count; switches to a uniform grid when given.
    #[arg(long)]
    nodes: Option<usize>,
    /// Integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Time step of evolution runs.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time of evolution runs.
    #[arg(long)]
    t_end: Option<f64>,
    /// Seed for randomized suites.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the stationary state for one mass and write its profile.
    Stationary(Common),
    /// Lowest eigenvalues of the linearized operator at one mass.
    Spectrum(Common),
    /// Sweep the lowest branches of both sectors over a mass grid.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Mass grid a:b:n (n masses from a to b).
        #[arg(long)]
        mass_grid: Option<String>,
    },
    /// Quadratic-form inequality battery on seeded random perturbations.
    Forms(Common),
    /// Evolve a dilation-perturbed state and fit the decay rates.
    Evolve(Common),
    /// Run the verification suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Run a single named suite instead of all of them.
        #[arg(long)]
        suite: Option<String>,
    },
}

/// Effective settings after merging defaults, config file and flags.
struct Settings {
    mass: f64,
    s_max: f64,
    ratio: f64,
    nodes: Option<usize>,
    tol: f64,
    dt: f64,
    t_end: f64,
    seed: u64,
    out: Option<PathBuf>,
    mass_grid: (f64, f64, usize),
}

fn parse_config(path: &PathBuf) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {} is not key=value: {line}", idx + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn lookup<T: FromStr>(
    flag: Option<T>,
    cfg: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, String> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| format!("config value {key}={raw} does not parse")),
        None => Ok(default),
    }
}

fn parse_mass_grid(spec: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("mass grid {spec} is not of the form a:b:n"));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| format!("bad mass {}", parts[0]))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| format!("bad mass {}", parts[1]))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| format!("bad count {}", parts[2]))?;
    if n == 0 || !(a > 0.0) || !(b > a) {
        return Err(format!("mass grid {spec} must satisfy 0 < a < b, n > 0"));
    }
    Ok((a, b, n))
}

fn merge(
    common: &Common,
    mass_grid: Option<&String>,
    cfg: &HashMap<String, String>,
) -> Result<Settings, String> {
    let grid_spec = match mass_grid {
        Some(s) => s.clone(),
        None => cfg
            .get("mass_grid")
            .cloned()
            .unwrap_or_else(|| "0.5:25:20".to_string()),
    };
    Ok(Settings {
        mass: lookup(common.mass, cfg, "mass", 10.0)?,
        s_max: lookup(common.s_max, cfg, "s_max", 400.0)?,
        ratio: lookup(common.ratio, cfg, "ratio", 1.02)?,
        nodes: match common.nodes {
            Some(n) => Some(n),
            None => cfg
                .get("nodes")
                .map(|v| v.parse().map_err(|_| format!("bad nodes {v}")))
                .transpose()?,
        },
        tol: lookup(common.tol, cfg, "tol", 1e-10)?,
        dt: lookup(common.dt, cfg, "dt", 1e-3)?,
        t_end: lookup(common.t_end, cfg, "t_end", 6.0)?,
        seed: lookup(common.seed, cfg, "seed", 1)?,
        out: common
            .out
            .clone()
            .or_else(|| cfg.get("out").map(PathBuf::from)),
        mass_grid: parse_mass_grid(&grid_spec)?,
    })
}

fn make_grid(st: &Settings) -> Result<RadialGrid, KsError> {
    match st.nodes {
        Some(n) => RadialGrid::uniform(1e-6, st.s_max, n),
        None => RadialGrid::geometric(1e-6, st.s_max, st.ratio),
    }
}

fn check_mass(mass: f64) -> Result<(), String> {
    if !(mass > 0.0 && mass < CRITICAL_MASS) {
        return Err(format!(
            "mass {mass} is outside the subcritical range (0, 8*pi = {CRITICAL_MASS:.6})"
        ));
    }
    Ok(())
}

fn ode_opts(st: &Settings) -> OdeOptions {
    OdeOptions {
        abs_tol: st.tol,
        rel_tol: st.tol,
        ..OdeOptions::default()
    }
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<(), KsError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(KsError::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn label_name(label: ModeLabel) -> &'static str {
    match label {
        ModeLabel::Kernel => "kernel",
        ModeLabel::Dilation => "dilation",
        ModeLabel::Translation => "translation",
        ModeLabel::Numeric => "numeric",
    }
}

fn cmd_stationary(st: &Settings) -> Result<(), KsError> {
    let grid = make_grid(st)?;
    let p = solve_stationary(st.mass, &grid, st.tol, &ode_opts(st))?;
    let mut csv = String::from("s,phi,dphi,n_inf,f00\n");
    for i in 0..grid.len() {
        writeln!(
            csv,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            grid.nodes()[i],
            p.phi[i],
            p.dphi[i],
            p.n_inf_at(i),
            p.f00[i]
        )
        .unwrap();
    }
    emit(st.out.as_ref(), &csv)?;
    println!("mass={:.17e}", p.mass);
    println!("slope={:.17e}", p.slope);
    println!("central_density={:.17e}", p.central_density());
    println!("tail_exponent={:.17e}", p.mass / TAU);
    Ok(())
}

fn cmd_spectrum(st: &Settings) -> Result<(), KsError> {
    let grid = make_grid(st)?;
    let p = solve_stationary(st.mass, &grid, st.tol, &ode_opts(st))?;
    let k0 = find_radial_eigenvalues(&p, 5.0, 3, &ode_opts(st))?;
    let k1 = find_k1_eigenvalues(&p, 3.0, 2, &ode_opts(st))?;
    let mut csv = String::from("mass,k,index,lambda,residual,label\n");
    for (modes, k) in [(&k0, 0), (&k1, 1)] {
        for (j, mode) in modes.iter().enumerate() {
            writeln!(
                csv,
                "{:.17e},{k},{j},{:.17e},{:.17e},{}",
                st.mass,
                mode.eigenvalue,
                mode.residual,
                label_name(mode.label)
            )
            .unwrap();
        }
    }
    emit(st.out.as_ref(), &csv)
}

fn cmd_scan(st: &Settings) -> Result<(), KsError> {
    let grid = make_grid(st)?;
    let (lo, hi, count) = st.mass_grid;
    let mut csv = String::from("mass,k,index,lambda,residual,status\n");
    let mut failures = 0usize;
    for i in 0..count {
        let m = if count == 1 {
            lo
        } else {
            lo + (hi - lo) * (i as f64 + 0.5) / count as f64
        };
        let row = |csv: &mut String, k: usize, j: usize, lambda: f64, res: f64| {
            writeln!(csv, "{m:.17e},{k},{j},{lambda:.17e},{res:.17e},ok").unwrap();
        };
        let attempt = (|| -> Result<(), KsError> {
            let p = solve_stationary(m, &grid, st.tol, &ode_opts(st))?;
            let k0 = find_radial_eigenvalues(&p, 3.0, 2, &ode_opts(st))?;
            let k1 = find_k1_eigenvalues(&p, 2.0, 1, &ode_opts(st))?;
            let lowest = k0
                .iter()
                .filter(|e| e.eigenvalue > 1e-3)
                .take(1)
                .collect::<Vec<_>>();
            for (j, mode) in lowest.iter().enumerate() {
                row(&mut csv, 0, j, mode.eigenvalue, mode.residual);
            }
            for (j, mode) in k1.iter().enumerate() {
                row(&mut csv, 1, j, mode.eigenvalue, mode.residual);
            }
            Ok(())
        })();
        if let Err(e) = attempt {
            failures += 1;
            writeln!(csv, "{m:.17e},,,,,failed: {e}").unwrap();
        }
    }
    emit(st.out.as_ref(), &csv)?;
    if failures * 10 > count {
        return Err(KsError::LinearSolveFailure(format!(
            "{failures} of {count} scan rows failed"
        )));
    }
    Ok(())
}

fn cmd_forms(st: &Settings) -> Result<(), KsError> {
    let grid = make_grid(st)?;
    let p = solve_stationary(st.mass, &grid, st.tol, &ode_opts(st))?;
    let lambda = ks_radial::spectrum::poincare_constant(&p, 0)?
        .lambda
        .min(ks_radial::spectrum::poincare_constant(&p, 1)?.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
    let mut csv =
        String::from("draw,q1,q2,l2_weighted,ratio,margin_q1,margin_radial,margin_poincare\n");
    let mut violations = 0usize;
    let draws = 200;
    for d in 0..draws {
        let pert = forms::random_perturbation(&p, &mut rng);
        let rep = forms::check_inequalities(&p, &pert, lambda)?;
        if !rep.all_hold() {
            violations += 1;
        }
        writeln!(
            csv,
            "{d},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            rep.q1,
            rep.q2,
            rep.l2_weighted,
            rep.ratio,
            rep.margins[0],
            rep.margins[1],
            rep.margins[2]
        )
        .unwrap();
    }
    emit(st.out.as_ref(), &csv)?;
    println!("lambda={lambda:.17e}");
    println!("draws={draws}");
    println!("violations={violations}");
    if violations > 0 {
        return Err(KsError::FormPrecondition(format!(
            "{violations} of {draws} draws violated an inequality"
        )));
    }
    Ok(())
}

fn cmd_evolve(st: &Settings) -> Result<(), KsError> {
    let grid = make_grid(st)?;
    let p = solve_stationary(st.mass, &grid, st.tol, &ode_opts(st))?;
    let steady = evolve::steady_state(&p)?;
    let initial = evolve::dilated_initial(grid.nodes(), &steady, 1e-3);
    let every = ((st.t_end / st.dt) as usize / 200).max(1);
    let trace = evolve::run(&p, &initial, st.t_end, st.dt, every)?;
    let mut csv = String::from("t,q1,weighted_l2,mass_defect,min_density\n");
    for i in 0..trace.times.len() {
        writeln!(
            csv,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            trace.times[i],
            trace.q1[i],
            trace.weighted_l2[i],
            trace.mass_defect[i],
            trace.min_density[i]
        )
        .unwrap();
    }
    emit(st.out.as_ref(), &csv)?;
    let window = (0.5 * st.t_end, st.t_end);
    let fit_q1 = evolve::decay_rate(&trace.times, &trace.q1, window)?;
    let fit_l2 = evolve::decay_rate(&trace.times, &trace.weighted_l2, window)?;
    println!("q1_rate={:.17e}", fit_q1.rate);
    println!("weighted_l2_rate={:.17e}", fit_l2.rate);
    Ok(())
}

fn cmd_verify(st: &Settings, suite: Option<&String>) -> Result<bool, KsError> {
    let cfg = VerifyConfig {
        grid: make_grid(st)?,
        seed: st.seed,
        ode_tol: st.tol,
        dt: st.dt,
        t_end: st.t_end,
        perturbations: 200,
        trials: 50,
    };
    let outcomes: Vec<SuiteOutcome> = match suite {
        Some(name) => vec![run_suite(name, &cfg)?],
        None => SUITE_NAMES
            .iter()
            .map(|n| run_suite(n, &cfg))
            .collect::<Result<_, _>>()?,
    };
    let mut report = String::new();
    let mut all = true;
    for o in &outcomes {
        all &= o.passed;
        writeln!(
            report,
            "{}={}",
            o.name,
            if o.passed { "pass" } else { "fail" }
        )
        .unwrap();
        for d in &o.details {
            writeln!(report, "{}.{}", o.name, d).unwrap();
        }
    }
    writeln!(report, "all={}", if all { "pass" } else { "fail" }).unwrap();
    emit(st.out.as_ref(), &report)?;
    if st.out.is_some() {
        // Mirror the one-line verdicts on stdout for interactive use.
        for o in &outcomes {
            println!("{}={}", o.name, if o.passed { "pass" } else { "fail" });
        }
    }
    Ok(all)
}

fn run() -> Result<(), (u8, String)> {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => parse_config(path).map_err(|e| (2, e))?,
        None => HashMap::new(),
    };
    let usage = |e: String| (2u8, e);
    let numeric = |e: KsError| match e {
        KsError::MassOutOfRange(_) | KsError::InvalidParameter { .. } | KsError::InvalidGrid(_) => {
            (2u8, e.to_string())
        }
        other => (1u8, other.to_string()),
    };
    match &cli.command {
        Command::Stationary(c) => {
            let st = merge(c, None, &cfg).map_err(usage)?;
            check_mass(st.mass).map_err(usage)?;
            cmd_stationary(&st).map_err(numeric)
        }
        Command::Spectrum(c) => {
            let st = merge(c, None, &cfg).map_err(usage)?;
            check_mass(st.mass).map_err(usage)?;
            cmd_spectrum(&st).map_err(numeric)
        }
        Command::Scan { common, mass_grid } => {
            let st = merge(common, mass_grid.as_ref(), &cfg).map_err(usage)?;
            check_mass(st.mass_grid.0).map_err(usage)?;
            check_mass(st.mass_grid.1).map_err(usage)?;
            cmd_scan(&st).map_err(numeric)
        }
        Command::Forms(c) => {
            let st = merge(c, None, &cfg).map_err(usage)?;
            check_mass(st.mass).map_err(usage)?;
            cmd_forms(&st).map_err(numeric)
        }
        Command::Evolve(c) => {
            let st = merge(c, None, &cfg).map_err(usage)?;
            check_mass(st.mass).map_err(usage)?;
            cmd_evolve(&st).map_err(numeric)
        }
        Command::Verify { common, suite } => {
            let st = merge(common, None, &cfg).map_err(usage)?;
            let all = cmd_verify(&st, suite.as_ref()).map_err(numeric)?;
            if !all {
                return Err((1, "verification suites failed".to_string()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
