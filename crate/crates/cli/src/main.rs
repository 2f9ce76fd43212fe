//! `tasep-lk`: mean-field profiles, domain walls, sensitivities and lattice
//! simulations for TASEP with Langmuir kinetics.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input, 3 unresolved
//! profile, 4 no wall where one is required, 5 simulation not stationary.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, RunConfig};
use output::{Failure, Sink};

#[derive(Parser)]
#[command(
    name = "tasep-lk",
    version,
    about = "TASEP with Langmuir kinetics: mean-field theory and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; flags override its values. Output metadata files work too.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (default: stdout, with metadata on stderr).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Reduced attachment rate Omega_a = N omega_a.
    #[arg(long, allow_negative_numbers = true)]
    omega_a: Option<f64>,
    /// Reduced detachment rate Omega_d = N omega_d.
    #[arg(long, allow_negative_numbers = true)]
    omega_d: Option<f64>,
}

#[derive(Args)]
struct Lattice {
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Default: max(10 N, 5 N / min(Omega_a, Omega_d)).
    #[arg(long)]
    burn_in: Option<f64>,
    /// Default: 200 N.
    #[arg(long)]
    measure_time: Option<f64>,
    /// Averaging blocks for the standard errors (default 50).
    #[arg(long)]
    blocks: Option<usize>,
    /// empty, full or product.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    initial_density: Option<f64>,
    #[arg(long)]
    stationarity_threshold: Option<f64>,
    /// Independent runs with seeds seed, seed+1, ...; the profile is their mean.
    #[arg(long)]
    replicas: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Composite mean-field profile as `x,rho,branch`.
    Profile {
        #[command(flatten)]
        common: Common,
        /// Grid points on [0, 1] (default 101).
        #[arg(long)]
        points: Option<usize>,
    },
    /// Domain-wall position, densities and height.
    Wall {
        #[command(flatten)]
        common: Common,
    },
    /// Existence test with the positions it compared.
    Exist {
        #[command(flatten)]
        common: Common,
    },
    /// Analytic wall derivatives next to central finite differences.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Finite-difference step (default 1e-4 for k, 1e-5 otherwise).
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Wall position and height along one parameter.
    Scan {
        #[command(flatten)]
        common: Common,
        /// omega_d (K fixed), k (Omega_d fixed), alpha or beta.
        #[arg(long)]
        parameter: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        /// Samples including both ends (default 41).
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Stochastic lattice simulation; writes `site,x,density`.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lattice: Lattice,
    },
    /// Distance between a simulated profile and the mean-field profile.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lattice: Lattice,
        /// CSV written by `simulate`; without it a simulation is run.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Half-width around x_s left out of the comparison (default 0.05).
        #[arg(long)]
        exclusion: Option<f64>,
    },
}

impl Common {
    fn flags(&self) -> RunConfig {
        RunConfig {
            alpha: self.alpha,
            beta: self.beta,
            omega_a: self.omega_a,
            omega_d: self.omega_d,
            format: self.format,
            ..Default::default()
        }
    }
}

impl Lattice {
    fn flags(self, base: RunConfig) -> RunConfig {
        RunConfig {
            sites: self.sites,
            seed: self.seed,
            burn_in: self.burn_in,
            measure_time: self.measure_time,
            blocks: self.blocks,
            initial: self.initial,
            initial_density: self.initial_density,
            stationarity_threshold: self.stationarity_threshold,
            replicas: self.replicas,
            ..base
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let (name, common, flags) = match command {
        Command::Profile { common, points } => {
            let flags = RunConfig {
                points,
                ..common.flags()
            };
            ("profile", common, flags)
        }
        Command::Wall { common } => {
            let flags = common.flags();
            ("wall", common, flags)
        }
        Command::Exist { common } => {
            let flags = common.flags();
            ("exist", common, flags)
        }
        Command::Sensitivity { common, fd_step } => {
            let flags = RunConfig {
                fd_step,
                ..common.flags()
            };
            ("sensitivity", common, flags)
        }
        Command::Scan {
            common,
            parameter,
            from,
            to,
            steps,
        } => {
            let flags = RunConfig {
                parameter,
                from,
                to,
                steps,
                ..common.flags()
            };
            ("scan", common, flags)
        }
        Command::Simulate { common, lattice } => {
            let flags = lattice.flags(common.flags());
            ("simulate", common, flags)
        }
        Command::Compare {
            common,
            lattice,
            profile,
            exclusion,
        } => {
            let flags = RunConfig {
                profile,
                exclusion,
                ..lattice.flags(common.flags())
            };
            ("compare", common, flags)
        }
    };
    let mut cfg = RunConfig::resolve(name, common.config.as_deref(), flags)?;
    let sink = Sink::new(common.output);
    match name {
        "profile" => commands::profile(&mut cfg, &sink),
        "wall" => commands::wall(&mut cfg, &sink, false),
        "exist" => commands::wall(&mut cfg, &sink, true),
        "sensitivity" => commands::sensitivity(&mut cfg, &sink),
        "scan" => commands::scan(&mut cfg, &sink),
        "simulate" => commands::simulate(&mut cfg, &sink),
        "compare" => commands::compare(&mut cfg, &sink),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            failure.report();
            failure.exit_code()
        }
    }
}
