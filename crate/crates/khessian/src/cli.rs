//! Command-line front end: wires configs to the solver, the f-auditor, the
//! geometry checks and the lab experiments, and owns the artifact layout
//! `output_dir/{solution.field, solution.mask, report.json, series.csv}`.
//!
//! Exit codes: 0 success, 2 input error, 3 convergence failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::condh::{self, RhsSpec};
use crate::config::{parse_domain, ConfigError, RunConfig};
use crate::expr::Expr;
use crate::geometry::{is_k1_convex, DomainSpec};
use crate::grid::GridField;
use crate::lab;
use crate::solver::{self, SolveError, SolveOpts};

const EXIT_OK: i32 = 0;
const EXIT_INPUT: i32 = 2;
const EXIT_CONVERGENCE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "khessian",
    about = "Dirichlet solver and auditors for k-Hessian equations S_k[u] = f"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration file (flat key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set problem.theta=1e-4 (JSON values).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid points per axis.
    #[arg(long = "grid-m", global = true)]
    grid_m: Option<usize>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one regularized problem S_k[u] = f + theta.
    Solve,
    /// Run the theta-continuation path (requires `schedule` in the config).
    Path,
    /// Audit the right-hand side f against the two structural inequalities.
    CheckF {
        /// Expression for f; falls back to problem.f from the config.
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Check (k-1)-convexity of the domain boundary.
    CheckDomain {
        /// Domain spec, e.g. "ball(0,0,0; 1)"; falls back to the config.
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Built-in smoke test on the closed-form ball example.
    Validate,
    /// Run a named sampling experiment.
    Lab {
        /// One of: concavity, maclaurin, theta-independence.
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 100000)]
        samples: usize,
    },
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Audit(#[from] condh::CondhError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeomError),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Input(String),
    #[error("path stage at theta={0} failed: {1}")]
    PathStage(f64, String),
    #[error("validation failed:\n{0}")]
    Validation(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Solve(e) => match e {
                SolveError::DampingExhausted { .. }
                | SolveError::MaxIterations { .. }
                | SolveError::Linear(_) => EXIT_CONVERGENCE,
                _ => EXIT_INPUT,
            },
            CliError::PathStage(..) | CliError::Validation(_) => EXIT_CONVERGENCE,
            _ => EXIT_INPUT,
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::parse(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let log = |key: &str, val: &str| {
        if !cli.quiet {
            println!("override: {key} = {val}");
        }
    };
    for kv in &cli.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--set needs KEY=VALUE, got {kv:?}")))?;
        cfg.set(key.trim(), value)?;
        log(key.trim(), value.trim());
    }
    if let Some(m) = cli.grid_m {
        cfg.grid_m = Some(m);
        log("grid.m", &m.to_string());
    }
    if let Some(t) = cli.theta {
        cfg.theta = Some(t);
        log("problem.theta", &t.to_string());
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
        log("seed", &s.to_string());
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir = Some(dir.display().to_string());
        log("output.dir", &dir.display().to_string());
    }
    Ok(cfg)
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(cfg.output_dir.clone().unwrap_or_else(|| "out".to_string()));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_report(dir: &Path, report: &serde_json::Value) -> Result<(), CliError> {
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn save_solution(dir: &Path, u: &GridField) -> Result<(), CliError> {
    u.save(&dir.join("solution.field"), &dir.join("solution.mask"))?;
    Ok(())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Solve => cmd_solve(&cli, &cfg),
        Command::Path => cmd_path(&cli, &cfg),
        Command::CheckF { f, k } => cmd_check_f(&cli, &cfg, f.as_deref(), *k),
        Command::CheckDomain { domain, k, samples } => {
            cmd_check_domain(&cli, &cfg, domain.as_deref(), *k, *samples)
        }
        Command::Validate => cmd_validate(&cli, &cfg),
        Command::Lab {
            name,
            n,
            k,
            samples,
        } => cmd_lab(&cli, &cfg, name, *n, *k, *samples),
    }
}

fn cmd_solve(cli: &Cli, cfg: &RunConfig) -> Result<i32, CliError> {
    let p = cfg.to_problem()?;
    let g = cfg.to_grid(&p.domain)?;
    let (u, rep) = solver::solve(&p, &g, None, &SolveOpts::default())?;
    let dir = output_dir(cfg)?;
    save_solution(&dir, &u)?;
    let proxy = solver::c11_proxy(&u);
    write_report(
        &dir,
        &json!({
            "command": "solve",
            "config": cfg.emit(),
            "report": rep,
            "c11_proxy": proxy,
        }),
    )?;
    let mut csv = String::from("iteration,residual\n");
    for (i, r) in rep.residual_history.iter().enumerate() {
        writeln!(csv, "{i},{r:.16e}").unwrap();
    }
    fs::write(dir.join("series.csv"), csv)?;
    if !cli.quiet {
        println!(
            "solved: {} Newton iterations, final residual {:.3e}, c11 proxy {:.6}",
            rep.iterations,
            rep.final_residual,
            proxy.value()
        );
        for w in &rep.warnings {
            println!("warning: {w}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_path(cli: &Cli, cfg: &RunConfig) -> Result<i32, CliError> {
    let p = cfg.to_problem()?;
    let g = cfg.to_grid(&p.domain)?;
    let schedule = cfg
        .schedule
        .clone()
        .ok_or(ConfigError::Missing("schedule"))?;
    let report = solver::path(&p, &g, &schedule, &SolveOpts::default())?;
    let dir = output_dir(cfg)?;
    if let Some(u) = report.solutions.last() {
        save_solution(&dir, u)?;
    }
    write_report(
        &dir,
        &json!({
            "command": "path",
            "config": cfg.emit(),
            "stages": report.stages,
            "failure": report.failure.as_ref().map(|(t, e)| json!({"theta": t, "error": e})),
        }),
    )?;
    let mut csv = String::from("theta,c11_proxy,residual,l1_residual_to_f\n");
    for s in &report.stages {
        writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            s.theta, s.c11_proxy, s.final_residual, s.l1_residual_to_f
        )
        .unwrap();
    }
    fs::write(dir.join("series.csv"), csv)?;
    if !cli.quiet {
        for s in &report.stages {
            println!(
                "theta {:.3e}: {} iterations, residual {:.3e}, c11 {:.6}, L1 defect {:.3e}",
                s.theta, s.iterations, s.final_residual, s.c11_proxy, s.l1_residual_to_f
            );
        }
    }
    if let Some((t, e)) = report.failure {
        return Err(CliError::PathStage(t, e));
    }
    Ok(EXIT_OK)
}

fn cmd_check_f(
    cli: &Cli,
    cfg: &RunConfig,
    f_flag: Option<&str>,
    k_flag: Option<usize>,
) -> Result<i32, CliError> {
    let f_text = f_flag
        .map(|s| s.to_string())
        .or_else(|| cfg.f.clone())
        .ok_or(ConfigError::Missing("problem.f"))?;
    let k = k_flag.or(cfg.k).ok_or(ConfigError::Missing("problem.k"))?;
    let expr = Expr::parse(&f_text).map_err(|source| ConfigError::BadExpr {
        key: "problem.f",
        source,
    })?;
    let arity = expr.arity().max(1);
    let spec = RhsSpec::expression(expr, k);
    // Audit over the domain bounding box if a domain is configured, else a
    // default symmetric box.
    let domain = match &cfg.domain {
        Some(_) => Some(cfg.to_domain()?),
        None => None,
    };
    let grid = match &domain {
        Some(d) => cfg.to_grid(d)?,
        None => crate::grid::Grid::cube(-1.2, 1.2, cfg.grid_m.unwrap_or(21), arity)?,
    };
    let audit = condh::audit(&spec, &grid, None)?;
    let probe = condh::root_regularity_probe(&spec, &grid)?;
    let dir = output_dir(cfg)?;
    write_report(
        &dir,
        &json!({
            "command": "check-f",
            "f": f_text,
            "k": k,
            "audit": audit,
            "root_regularity": probe,
        }),
    )?;
    if !cli.quiet {
        println!(
            "c0_gradient = {:.6}, c0_hessian = {:.3e}, degenerate points {} (failures {})",
            audit.c0_gradient,
            audit.c0_hessian,
            audit.degenerate_points_checked,
            audit.degenerate_failures
        );
        println!(
            "f^(1/k): Lipschitz ~ {:.6}, c11 proxy growth exponent {:.3}",
            probe.lipschitz_estimate, probe.c11_proxy_growth_exponent
        );
    }
    Ok(EXIT_OK)
}

fn cmd_check_domain(
    cli: &Cli,
    cfg: &RunConfig,
    domain_flag: Option<&str>,
    k_flag: Option<usize>,
    samples: usize,
) -> Result<i32, CliError> {
    let domain = match domain_flag {
        Some(text) => parse_domain(text)?,
        None => cfg.to_domain()?,
    };
    let k = k_flag.or(cfg.k).ok_or(ConfigError::Missing("problem.k"))?;
    let report = is_k1_convex(&domain, k, samples)?;
    let dir = output_dir(cfg)?;
    write_report(
        &dir,
        &json!({
            "command": "check-domain",
            "k": k,
            "convexity": report,
        }),
    )?;
    if !cli.quiet {
        println!(
            "({}-1)-convexity: {} (margin {:.6}, {} samples)",
            k,
            if report.pass { "pass" } else { "FAIL" },
            report.margin,
            report.samples
        );
    }
    Ok(EXIT_OK)
}

/// The built-in ball example: S_2[u] = 45 r² on the unit ball with u = 0 on
/// the boundary has the closed form u = r³ − 1.
fn ball_example(theta: f64) -> solver::ProblemSpec {
    solver::ProblemSpec {
        k: 2,
        domain: DomainSpec::ball(vec![0.0; 3], 1.0),
        f: RhsSpec::expression(Expr::parse("45*(x1^2+x2^2+x3^2)").unwrap(), 2),
        phi: Expr::parse("0").unwrap(),
        theta,
    }
}

fn cmd_validate(cli: &Cli, cfg: &RunConfig) -> Result<i32, CliError> {
    let m = cfg.grid_m.unwrap_or(33);
    let theta = cfg.theta.unwrap_or(1e-6);
    let p = ball_example(theta);
    let g = crate::grid::Grid::cube(-1.2, 1.2, m, 3)?;
    let mut rows: Vec<(String, bool, String)> = Vec::new();

    let (u, rep) = solver::solve(&p, &g, None, &SolveOpts::default())?;
    let err = u
        .interior_indices()
        .map(|idx| {
            let x = g.point(idx);
            let exact = x.iter().map(|v| v * v).sum::<f64>().powf(1.5) - 1.0;
            (u.value(idx) - exact).abs()
        })
        .fold(0.0f64, f64::max);
    rows.push((
        "solve: sup error vs r^3 - 1 <= 1e-2".into(),
        err <= 1e-2,
        format!("{err:.3e} ({} iterations)", rep.iterations),
    ));

    let audit = condh::audit(&p.f, &g, None)?;
    let expect = 6.0 * 5f64.sqrt();
    let rel = (audit.c0_gradient - expect).abs() / expect;
    rows.push((
        "audit: c0_gradient = 6*sqrt(5) within 1e-3".into(),
        rel <= 1e-3,
        format!("{:.6} (rel err {:.1e})", audit.c0_gradient, rel),
    ));
    rows.push((
        "audit: c0_hessian = 0 within 1e-9".into(),
        audit.c0_hessian.abs() <= 1e-9,
        format!("{:.3e}", audit.c0_hessian),
    ));

    let conv = is_k1_convex(&p.domain, p.k, 2000)?;
    rows.push((
        "geometry: unit ball 1-convex with margin 2".into(),
        conv.pass && (conv.margin - 2.0).abs() <= 1e-8,
        format!("margin {:.9}", conv.margin),
    ));

    let mut table = String::new();
    let mut all_pass = true;
    for (name, pass, detail) in &rows {
        all_pass &= pass;
        writeln!(
            table,
            "[{}] {name}: {detail}",
            if *pass { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    if !cli.quiet {
        print!("{table}");
    }
    let dir = output_dir(cfg)?;
    save_solution(&dir, &u)?;
    write_report(
        &dir,
        &json!({
            "command": "validate",
            "grid_m": m,
            "theta": theta,
            "checks": rows.iter().map(|(name, pass, detail)| json!({
                "name": name, "pass": pass, "detail": detail,
            })).collect::<Vec<_>>(),
            "all_pass": all_pass,
        }),
    )?;
    if all_pass {
        Ok(EXIT_OK)
    } else {
        Err(CliError::Validation(table))
    }
}

fn cmd_lab(
    cli: &Cli,
    cfg: &RunConfig,
    name: &str,
    n: usize,
    k: usize,
    samples: usize,
) -> Result<i32, CliError> {
    let seed = cfg.seed.unwrap_or(1);
    let dir = output_dir(cfg)?;
    let report = match name {
        "concavity" => {
            let r = lab::concavity_experiment(n, k, samples, seed);
            if !cli.quiet {
                println!(
                    "concavity: {} violations in {} samples, worst gap {:.3e}",
                    r.violations, r.samples, r.worst_gap
                );
            }
            json!({"command": "lab", "name": name, "report": r})
        }
        "maclaurin" => {
            let r = lab::maclaurin_constant_experiment(n, k, samples, seed);
            if !cli.quiet {
                println!(
                    "maclaurin: min ratio {:.6} vs analytic bound {:.6} ({} violations)",
                    r.min_ratio, r.analytic_bound, r.violations
                );
            }
            json!({"command": "lab", "name": name, "report": r})
        }
        "theta-independence" => {
            let p = cfg.to_problem()?;
            let g = cfg.to_grid(&p.domain)?;
            let schedule = cfg
                .schedule
                .clone()
                .unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]);
            let r = lab::theta_independence_experiment(&p, &g, &schedule, &SolveOpts::default())?;
            if !cli.quiet {
                println!("theta independence: c11 max/min = {:.6}", r.max_over_min);
            }
            let mut csv = String::from("theta,c11_proxy\n");
            for (t, c) in schedule.iter().zip(&r.c11_series) {
                writeln!(csv, "{t:.16e},{c:.16e}").unwrap();
            }
            fs::write(dir.join("series.csv"), csv)?;
            json!({"command": "lab", "name": name, "seed": seed, "report": r})
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown experiment {other:?}; expected concavity, maclaurin or theta-independence"
            )))
        }
    };
    write_report(&dir, &report)?;
    Ok(EXIT_OK)
}
