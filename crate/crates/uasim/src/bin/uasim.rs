//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 oracle-check
//! failure, 3 physicality violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use uasim::config::{self, Command, RunConfig};
use uasim::error::Error;
use uasim::report;

#[derive(Parser, Debug)]
#[command(
    name = "uasim",
    about = "Passive-unitary averaging simulator for two-mode squeezed vacuum channels",
    disable_help_subcommand = true
)]
struct Cli {
    /// One of: table1, sweep, shot, oracle-check, asymptotic
    #[arg(long)]
    command: String,

    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,

    /// Number of rails the squeezed arm is split over
    #[arg(long)]
    n: Option<usize>,

    /// Input squeezing parameter (conflicts with --input-db)
    #[arg(long, conflicts_with = "input_db")]
    r: Option<f64>,

    /// Input squeezing in dB, converted via 10 log10 e^{2r}
    #[arg(long)]
    input_db: Option<f64>,

    /// Phase noise variance per rail
    #[arg(long)]
    variance: Option<f64>,

    /// Monte Carlo shot count; 0 selects the analytic engine
    #[arg(long)]
    shots: Option<usize>,

    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,

    /// Correlation-angle convention: paper or derived
    #[arg(long)]
    convention: Option<String>,

    /// Ensemble weighting: unweighted or heralded
    #[arg(long)]
    weighting: Option<String>,

    /// Fock-space photon cutoff for oracle checks
    #[arg(long)]
    cutoff: Option<u8>,

    /// Output format: csv or json
    #[arg(long)]
    format: Option<String>,

    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    /// Comma-separated explicit phases for the shot command
    #[arg(long)]
    phases: Option<String>,

    /// Comma-separated n grid for sweeps
    #[arg(long)]
    n_list: Option<String>,

    /// Comma-separated variance grid for sweeps
    #[arg(long)]
    v_list: Option<String>,
}

fn build_config(cli: &Cli) -> uasim::Result<RunConfig> {
    let command: Command = cli.command.parse()?;
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &cli.config {
        let map = config::parse_config_file(path)?;
        config::apply_config_map(&mut cfg, &map)?;
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(r) = cli.r {
        cfg.r = r;
    }
    if let Some(db) = cli.input_db {
        cfg.r = config::db_to_r(db);
    }
    if let Some(v) = cli.variance {
        cfg.v = v;
    }
    if let Some(shots) = cli.shots {
        cfg.shots = shots;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(c) = &cli.convention {
        cfg.convention = c.parse()?;
    }
    if let Some(w) = &cli.weighting {
        cfg.weighting = w.parse()?;
    }
    if let Some(cutoff) = cli.cutoff {
        cfg.cutoff = cutoff;
    }
    if let Some(f) = &cli.format {
        cfg.format = f.parse()?;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    let parse_list = |text: &str| -> uasim::Result<Vec<f64>> {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| Error::Config(format!("bad list entry `{s}`: {e}")))
            })
            .collect()
    };
    if let Some(p) = &cli.phases {
        cfg.phases = Some(parse_list(p)?);
    }
    if let Some(list) = &cli.n_list {
        cfg.n_list = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| Error::Config(format!("bad list entry `{s}`: {e}")))
            })
            .collect::<uasim::Result<_>>()?;
    }
    if let Some(list) = &cli.v_list {
        cfg.v_list = parse_list(list)?;
    }
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Unphysical { .. } | Error::NotSymplectic { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, everything else is usage
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match report::execute(&cfg) {
        Ok((text, code)) => {
            if let Some(path) = &cfg.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            } else {
                print!("{text}");
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
