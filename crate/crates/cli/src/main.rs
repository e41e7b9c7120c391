use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use edh_cli::app::{EvolveOptions, InitialState, Session};
use edh_cli::{selftest, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "edh", version, about = "Eigenstate decoherence scans for spin-1/2 Heisenberg graphs")]
struct Cli {
    /// Model file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also write SVG scatter plots for witness scans.
    #[arg(long, global = true)]
    plot: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full spectrum with sector and degeneracy group of every eigenstate.
    Spectrum,
    /// Pairwise eigenstate matrix elements of one operator.
    WitnessScan {
        #[arg(long, default_value = "W")]
        operator: String,
    },
    /// Subsystem witness, purity and trace error after a quench.
    Evolve {
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value = "W")]
        operator: String,
        /// cat | eigenstate:<n> | file:<path>
        #[arg(long, default_value = "cat")]
        initial: InitialState,
    },
    /// Spectrum, all scans, the cat quench, a summary and a manifest.
    Report {
        /// Also dump tr_B |n><m| as `rdm_<n>_<m>.csv`; repeatable.
        #[arg(long = "rdm", value_name = "N:M", value_parser = parse_pair)]
        rdm: Vec<(usize, usize)>,
    },
    /// Compare fast paths against dense references on small systems.
    Selftest,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected N:M")?;
    Ok((
        a.parse().map_err(|_| format!("invalid label `{a}`"))?,
        b.parse().map_err(|_| format!("invalid label `{b}`"))?,
    ))
}

fn session(cli: &Cli) -> CliResult<Session> {
    let config = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config <path> is required for this command".into()))?;
    Session::open(config, cli.out.as_deref(), cli.plot)
}

fn run(cli: &Cli) -> CliResult<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Spectrum => {
            let mut s = session(cli)?;
            let es = s.spectrum()?;
            println!("{} eigenpairs written to {}", es.len(), s.out.path("spectrum.csv").display());
        }
        Command::WitnessScan { operator } => {
            let mut s = session(cli)?;
            let es = s.solve()?;
            let o = s.witness_scan(&es, operator)?;
            println!(
                "{} records ({} pairs zero by selection rule) written to {}",
                o.scan.records.len(),
                o.scan.structurally_zero,
                s.out.root().display()
            );
            if let Some(p) = &o.profile {
                println!(
                    "lowest-bin median {:.4e}, mid-gap median {:.4e}, low-gap Spearman {}",
                    p.lowest_median,
                    p.window_median,
                    p.low_gap_spearman.map_or("undefined".into(), |r| format!("{r:.4}"))
                );
            }
        }
        Command::Evolve {
            tmax,
            steps,
            operator,
            initial,
        } => {
            let mut s = session(cli)?;
            let es = s.solve()?;
            let o = s.evolve(
                &es,
                &EvolveOptions {
                    operator: operator.clone(),
                    initial: initial.clone(),
                    tmax: *tmax,
                    steps: *steps,
                },
            )?;
            match o.tau {
                Some(t) => println!("tau = {t} (first time w drops to w(0)/e)"),
                None => println!("tau not reached on the time grid"),
            }
        }
        Command::Report { rdm } => {
            let mut s = session(cli)?;
            s.report(rdm)?;
            println!("report written to {}", s.out.root().display());
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
