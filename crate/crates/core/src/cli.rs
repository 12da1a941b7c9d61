//! Command-line orchestration: subcommands over a JSON run configuration,
//! deterministic artifacts, and classified exit codes.

use crate::config::RunConfig;
use crate::continuation::{self, Branch, ContinuationConfig};
use crate::diagnostics;
use crate::dispersion;
use crate::error::{Error, Result};
use crate::laminar;
use crate::output::{self, Manifest};
use crate::physical;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_BAD_CONFIG: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;
pub const EXIT_NO_BIFURCATION: i32 = 4;
pub const EXIT_NEWTON_FAILED: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "deepwave",
    about = "Branches of periodic deep-water waves with piecewise smooth vorticity"
)]
pub struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true, default_value = "deepwave.json")]
    pub config: PathBuf,

    /// Override the configured output directory.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the vorticity function against the admissibility hypotheses.
    Check,
    /// Tabulate the laminar flow at a given lambda.
    Laminar(LaminarArgs),
    /// Locate the bifurcation point; optionally scan mu(lambda) first.
    Dispersion(DispersionArgs),
    /// Continue the nontrivial branch from the bifurcation point.
    Branch,
    /// Track the bifurcation point along the regularization schedule.
    Homotopy,
    /// Reconstruct physical fields at one branch point.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Args)]
pub struct LaminarArgs {
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    /// Scan range as lo:hi:n before root finding.
    #[arg(long)]
    pub scan: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Branch point index to reconstruct.
    #[arg(long, default_value_t = 0)]
    pub point: usize,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json(_) => EXIT_BAD_CONFIG,
        Error::Admissibility(_) => EXIT_INADMISSIBLE,
        Error::NoBifurcation(_) => EXIT_NO_BIFURCATION,
        Error::NewtonFailure { .. } => EXIT_NEWTON_FAILED,
        _ => EXIT_INTERNAL,
    }
}

/// Parses arguments from the process environment and runs; returns the
/// process exit code.
pub fn run_from_env() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_CONFIG } else { EXIT_OK };
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn parse_scan(scan: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = scan.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "scan must be lo:hi:n, got '{scan}'"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad scan lower bound '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad scan upper bound '{}'", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("bad scan count '{}'", parts[2])))?;
    if !(lo < hi) || n < 2 {
        return Err(Error::Config(format!(
            "scan needs lo < hi and n >= 2, got '{scan}'"
        )));
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

fn run_branch_for_cli(
    cfg: &RunConfig,
    cont: &ContinuationConfig,
) -> Result<(crate::vorticity::VorticitySpec, crate::operator::Grid2D, Branch)> {
    let spec = cfg.build_spec()?;
    let grid = cfg.build_grid(&spec)?;
    let branch = continuation::run_branch(&spec, &grid, cfg.gravity, cont)?;
    Ok((spec, grid, branch))
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = RunConfig::load(&cli.config)?;
    let mut overrides = Vec::new();
    let out_dir = match &cli.output_dir {
        Some(dir) => {
            overrides.push(format!("output_dir={}", dir.display()));
            dir.clone()
        }
        None => PathBuf::from(&cfg.output_dir),
    };
    let command_name = match &cli.command {
        Command::Check => "check",
        Command::Laminar(_) => "laminar",
        Command::Dispersion(_) => "dispersion",
        Command::Branch => "branch",
        Command::Homotopy => "homotopy",
        Command::Reconstruct(_) => "reconstruct",
    };
    match &cli.command {
        Command::Laminar(args) => overrides.push(format!("lambda={}", args.lambda)),
        Command::Dispersion(args) => {
            if let Some(scan) = &args.scan {
                overrides.push(format!("scan={scan}"));
            }
        }
        Command::Reconstruct(args) => overrides.push(format!("point={}", args.point)),
        _ => {}
    }
    let mut manifest = Manifest::new(
        command_name,
        &cli.config.display().to_string(),
        overrides,
    );

    let code = match &cli.command {
        Command::Check => {
            let spec = cfg.build_spec()?;
            let report = spec.check_admissible(cfg.gravity)?;
            let body = serde_json::to_vec_pretty(&report)?;
            manifest.write(&out_dir, "admissibility.json", &body)?;
            if report.pass() {
                EXIT_OK
            } else {
                eprintln!(
                    "vorticity fails the admissibility hypotheses: margin {:.6e}",
                    report.margin
                );
                EXIT_INADMISSIBLE
            }
        }
        Command::Laminar(args) => {
            let spec = cfg.build_spec()?;
            let grid = cfg.build_grid(&spec)?;
            let flow =
                laminar::LaminarFlow::new(&spec, args.lambda, cfg.gravity, grid.p_nodes())?;
            let residual = laminar::verify_laminar(&spec, &flow, cfg.gravity)?;
            let csv = output::laminar_csv(grid.p_nodes(), &flow.height, &flow.height_p);
            manifest.write(&out_dir, "laminar.csv", csv.as_bytes())?;
            let body = serde_json::to_vec_pretty(&serde_json::json!({
                "lambda": args.lambda,
                "wave_speed": laminar::wave_speed(args.lambda, spec.gamma_limit())?,
                "ode_residual_max": residual.ode_max,
                "surface_residual": residual.surface,
            }))?;
            manifest.write(&out_dir, "laminar_report.json", &body)?;
            EXIT_OK
        }
        Command::Dispersion(args) => {
            let spec = cfg.build_spec()?;
            let grid = cfg.build_grid(&spec)?;
            let g1 = grid.p_grid();
            if let Some(scan) = &args.scan {
                let lambdas = parse_scan(scan)?;
                let rows =
                    dispersion::mu_scan(&spec, cfg.dispersion.epsilon, &g1, cfg.gravity, &lambdas)?;
                manifest.write(&out_dir, "dispersion_scan.csv", output::scan_csv(&rows).as_bytes())?;
            }
            let point = dispersion::find_bifurcation_in(
                &spec,
                cfg.dispersion.epsilon,
                cfg.gravity,
                &g1,
                cfg.dispersion.mode_k,
                cfg.dispersion.bracket,
            )?;
            let mu_dot = dispersion::mu_derivative(&point, &spec, cfg.gravity)?;
            let (lhs, rhs) = dispersion::transversality(&point, &spec, cfg.gravity)?;
            let body = serde_json::to_vec_pretty(&serde_json::json!({
                "lambda_star": point.lambda,
                "epsilon": point.epsilon,
                "mu": point.mu,
                "mu_derivative": mu_dot,
                "transversality_pairing": lhs,
                "transversality_closed_form": rhs,
            }))?;
            manifest.write(&out_dir, "dispersion.json", &body)?;
            EXIT_OK
        }
        Command::Branch => {
            let cont = cfg.continuation.build()?;
            let (_, _, branch) = run_branch_for_cli(&cfg, &cont)?;
            manifest.write(&out_dir, "branch.csv", output::branch_csv(&branch).as_bytes())?;
            EXIT_OK
        }
        Command::Homotopy => {
            let spec = cfg.build_spec()?;
            let grid = cfg.build_grid(&spec)?;
            let cont = cfg.continuation.build()?;
            let table = continuation::epsilon_homotopy(
                &spec,
                cfg.gravity,
                &grid.p_grid(),
                &cont.epsilon_schedule,
            )?;
            manifest.write(&out_dir, "homotopy.csv", output::homotopy_csv(&table).as_bytes())?;
            EXIT_OK
        }
        Command::Reconstruct(args) => {
            let cont = cfg.continuation.build()?;
            let (spec, grid, branch) = run_branch_for_cli(&cfg, &cont)?;
            let point = branch.points.get(args.point).ok_or_else(|| {
                Error::Domain(format!(
                    "branch has {} points, no index {}",
                    branch.points.len(),
                    args.point
                ))
            })?;
            let wave =
                physical::reconstruct(&spec, &grid, &point.state, cfg.gravity, cfg.p_atm)?;
            manifest.write(&out_dir, "profile.csv", output::profile_csv(&wave).as_bytes())?;
            manifest.write(&out_dir, "field.csv", output::field_csv(&wave).as_bytes())?;
            let bernoulli = diagnostics::bernoulli_inequality(&wave, &spec, cfg.gravity)?;
            let body = serde_json::to_vec_pretty(&serde_json::json!({
                "point": args.point,
                "lambda": point.lambda,
                "wave_speed": wave.c,
                "stagnation_margin": wave.stagnation_margin,
                "bernoulli_max_lhs": bernoulli,
            }))?;
            manifest.write(&out_dir, "reconstruct_report.json", &body)?;
            EXIT_OK
        }
    };
    manifest.finish(&out_dir)?;
    Ok(code)
}
