//! Command-line front end: figure-preset and config-file sweeps, the oracle
//! audit, and single-point evaluation.

use clap::{Args, Parser, Subcommand};
use sgc_cavity::config::{self, LabeledSweep, RunConfig};
use sgc_cavity::oracle::FockConfig;
use sgc_cavity::sweep::{audit_csv, run_audit, run_sweep, secular_pipeline, sweep_csv, SweepRow};
use sgc_cavity::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sgc-cavity",
    about = "Steady-state two-mode entanglement from a driven V-type atom with SGC",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write a CSV table.
    Sweep(SweepArgs),
    /// Compare the secular pipeline against the brute-force oracle.
    Audit(AuditArgs),
    /// Evaluate the pipeline at a single parameter point.
    Point(PointArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Figure preset: fig2, fig3, fig5 or fig6.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML configuration file with [system] and [sweep] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for cell evaluation.
    #[arg(long)]
    workers: Option<usize>,
    /// Exit with code 2 when any cell carries a non-empty flag.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct AuditArgs {
    /// TOML configuration file; [fock] section provides defaults.
    #[arg(long)]
    config: PathBuf,
    /// Fock truncation of mode 1.
    #[arg(long)]
    fock_n1: Option<usize>,
    /// Fock truncation of mode 2.
    #[arg(long)]
    fock_n2: Option<usize>,
    /// Integrator step (units of 1/gamma1).
    #[arg(long)]
    dt: Option<f64>,
    /// Integration horizon.
    #[arg(long)]
    tmax: Option<f64>,
    /// Convergence threshold on ||drho/dt||_F.
    #[arg(long)]
    tol: Option<f64>,
    /// Re-run the oracle at truncation N+1 and flag moment shifts above 2%.
    #[arg(long)]
    check_truncation: bool,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Exit with code 2 when any row carries a non-empty flag.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct PointArgs {
    /// TOML configuration file with a [system] section.
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Point(args) => cmd_point(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Io(_) | Error::Configuration(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn install_workers(workers: Option<usize>) -> sgc_cavity::Result<()> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> sgc_cavity::Result<ExitCode> {
    install_workers(args.workers)?;
    let sweeps: Vec<LabeledSweep> = match (&args.preset, &args.config) {
        (Some(name), None) => config::preset(name)?,
        (None, Some(path)) => {
            let cfg = config::load_config(path)?;
            let spec = cfg.sweep.ok_or_else(|| {
                Error::Config("configuration file lacks a [sweep] section".into())
            })?;
            vec![LabeledSweep {
                label: "config".into(),
                spec,
            }]
        }
        _ => {
            return Err(Error::Config(
                "exactly one of --preset or --config is required".into(),
            ))
        }
    };

    let mut runs: Vec<(LabeledSweep, Vec<SweepRow>)> = Vec::new();
    for sweep in sweeps {
        let rows = run_sweep(&sweep.spec)?;
        runs.push((sweep, rows));
    }
    let flagged = runs
        .iter()
        .flat_map(|(_, rows)| rows)
        .filter(|r| !r.flags.is_empty())
        .count();
    std::fs::write(&args.out, sweep_csv(&runs))?;
    let cells: usize = runs.iter().map(|(_, r)| r.len()).sum();
    println!(
        "wrote {} cells to {} ({} flagged)",
        cells,
        args.out.display(),
        flagged
    );
    Ok(if args.strict && flagged > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_audit(args: AuditArgs) -> sgc_cavity::Result<ExitCode> {
    let cfg: RunConfig = config::load_config(&args.config)?;
    let defaults = cfg.fock.unwrap_or(FockConfig {
        n1: 4,
        n2: 4,
        dt: 4e-4,
        t_max: 250.0,
        tol: 1.0,
    });
    let fock = FockConfig {
        n1: args.fock_n1.unwrap_or(defaults.n1),
        n2: args.fock_n2.unwrap_or(defaults.n2),
        dt: args.dt.unwrap_or(defaults.dt),
        t_max: args.tmax.unwrap_or(defaults.t_max),
        tol: args.tol.unwrap_or(defaults.tol),
    };
    fock.validate(&cfg.params)?;
    let rows = run_audit(&cfg.params, &fock, args.check_truncation)?;
    let flagged = rows.iter().filter(|r| !r.flags.is_empty()).count();
    std::fs::write(&args.out, audit_csv(&cfg.params, &fock, &rows))?;
    println!(
        "wrote {} audit rows to {} ({} flagged)",
        rows.len(),
        args.out.display(),
        flagged
    );
    Ok(if args.strict && flagged > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_point(args: PointArgs) -> sgc_cavity::Result<ExitCode> {
    let cfg = config::load_config(&args.config)?;
    let res = secular_pipeline(&cfg.params, cfg.coupling)?;
    println!("coupling configuration: {}", cfg.coupling.label());
    println!("abar   = {:.12e}", res.coeffs.abar_mean());
    println!("dbar   = {:.12e}", res.coeffs.dbar_eff());
    println!("margin = {:.12e}", res.stability.margin);
    println!("n      = {:.12e}", res.report.n);
    println!("m      = {:.12e}", res.report.m);
    println!("c      = {:.12e}", res.report.c);
    println!("a^2    = {:.12e}", res.report.a_sq);
    println!("sigma  = {:.12e}", res.report.sigma);
    println!("upsilon = {:.12e}", res.report.upsilon);
    println!("entangled = {}", res.report.entangled);
    println!("stable    = {}", res.report.stable);
    Ok(ExitCode::SUCCESS)
}
