use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use mgspectral::checks;
use mgspectral::config::RunConfig;
use mgspectral::runner;

/// Magneto-geostrophic active scalar solver and stability toolkit.
#[derive(Parser, Debug)]
#[command(name = "mgspectral", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Configuration file (`[section]` / `key = value` text).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory; overrides `run.out` from the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads; MGSPECTRAL_THREADS takes precedence.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time-step the equation and write norm series and checkpoints.
    Simulate(Common),
    /// Growth rate and bounds for one (k1, k2) or a box of them.
    Eigen(Common),
    /// Regime scan of the growth rate against a small parameter.
    Scan(Common),
    /// Dissipation and distance to the non-diffusive run over several diffusivities.
    KappaSweep(Common),
    /// Picard iteration of the integral form.
    MildSolve(Common),
    /// Run the invariant suite and print a verdict table.
    Check(Common),
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("MGSPECTRAL_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("MGSPECTRAL_THREADS = {v:?} is not a positive integer"))?;
            if n == 0 {
                bail!("MGSPECTRAL_THREADS must be >= 1");
            }
            Ok(Some(n))
        }
        _ => match flag {
            Some(0) => bail!("--threads must be >= 1"),
            other => Ok(other),
        },
    }
}

fn load_config(path: Option<&Path>, required: bool) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None if required => bail!("--config FILE is required for this subcommand"),
        None => Ok(RunConfig::default()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{}", RunConfig::default().to_text());
        return Ok(ExitCode::SUCCESS);
    }
    let Some(command) = cli.command else {
        bail!("no subcommand given; see --help");
    };
    let common = match &command {
        Command::Simulate(c)
        | Command::Eigen(c)
        | Command::Scan(c)
        | Command::KappaSweep(c)
        | Command::MildSolve(c)
        | Command::Check(c) => c,
    };
    if let Some(n) = thread_count(common.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let is_check = matches!(command, Command::Check(_));
    let cfg = load_config(common.config.as_deref(), !is_check)?;
    let explicit_out = common.out.is_some();
    let out = common.out.clone().unwrap_or_else(|| cfg.run.out.clone());

    match command {
        Command::Simulate(_) => {
            let s = runner::simulate(&cfg, &out)?;
            println!(
                "simulated t = {} -> {} in {} steps ({:.2} s); outputs in {}",
                s.t_start,
                s.t_final,
                s.steps,
                s.wall_seconds,
                out.display()
            );
            if s.cfl_warning {
                eprintln!("warning: CFL number exceeded 1 during the run");
            }
        }
        Command::Eigen(_) => {
            let rows = runner::eigen(&cfg, &out)?;
            for r in rows.iter().take(10) {
                let sigma = r.sigma_star.map_or(runner::NO_ROOT.to_string(), |s| format!("{s:.10}"));
                println!(
                    "k = ({}, {}): sigma* = {sigma}, bounds [{:.6}, {:.6}]",
                    r.k1, r.k2, r.sigma_lower, r.sigma_upper
                );
            }
            println!("{} rows written to {}", rows.len(), out.join("eigen.csv").display());
        }
        Command::Scan(_) => {
            let s = runner::scan(&cfg, &out)?;
            for r in &s.rows {
                let sigma = r.sigma_star.map_or(runner::NO_ROOT.to_string(), |v| format!("{v:.6}"));
                println!(
                    "eps_nu = {:e}, eps_kappa = {:e}: argmax ({}, {}), lower bound {:.6}, sigma* {sigma}",
                    r.eps_nu, r.eps_kappa, r.k1, r.k2, r.sigma_lower
                );
            }
            println!("fitted exponent: {:.4}", s.fitted_exponent);
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::KappaSweep(_) => {
            let s = runner::kappa_sweep(&cfg, &out)?;
            for (k, d) in s.kappa.iter().zip(&s.dissipation) {
                println!("eps_kappa = {k:e}: dissipation {d:.6e}");
            }
            println!("dissipation strictly decreasing: {}", s.dissipation_decreasing);
        }
        Command::MildSolve(_) => {
            let s = runner::mild_solve(&cfg, &out)?;
            println!(
                "{} (T = {}, residual {:.2e}, {} halvings)",
                s.message, s.horizon, s.residual, s.halvings
            );
        }
        Command::Check(_) => {
            let verdicts = checks::run_all(|v| {
                eprintln!("{} {}", if v.passed { "ok  " } else { "FAIL" }, v.name);
            });
            print!("{}", checks::format_table(&verdicts));
            let failed = verdicts.iter().filter(|v| !v.passed).count();
            let total: f64 = verdicts.iter().map(|v| v.seconds).sum();
            println!("{} of {} checks passed in {total:.1} s", verdicts.len() - failed, verdicts.len());
            // the suite writes nothing unless asked to
            if explicit_out {
                std::fs::create_dir_all(&out)?;
                std::fs::write(out.join("check.json"), serde_json::to_string_pretty(&verdicts)? + "\n")?;
            }
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
