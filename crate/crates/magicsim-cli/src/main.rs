//! Command-line front end for the gradient-coupling simulator.

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{EvolveFrame, Invocation};

#[derive(Parser)]
#[command(
    name = "magicsim",
    version,
    about = "Trapped-ion spin-motion dynamics under static and dynamic \
             magnetic-field gradients"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the JSON system configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to ./out, or $MAGICSIM_OUT when set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render every output twice and fail unless the bytes are identical.
    #[arg(long)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium positions and normal modes of the ion crystal.
    Modes {
        #[command(flatten)]
        common: Common,
    },
    /// Coupling constants: ε, sideband Rabi frequencies, and the J matrix.
    Couplings {
        #[command(flatten)]
        common: Common,
    },
    /// Propagate the ground state and emit a trajectory of observables.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Picture to propagate in: lab | dressed | rwa.
        #[arg(long, default_value = "lab")]
        frame: String,
        /// Comma-separated subset of populations | sz | n | norm.
        #[arg(long)]
        observable: Option<String>,
    },
    /// Certify lab-frame vs dressed-frame agreement for a dynamic field.
    Equivalence {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the coupling scalars across one swept parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of gradient | nu_axial | n_ions | fock_cutoff.
        #[arg(long)]
        param: String,
        /// Comma-separated values (Hz for nu_axial, T/m for gradient).
        #[arg(long)]
        values: String,
    },
}

fn out_dir(common: &Common) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os("MAGICSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("./out"))
}

fn main() {
    // Single-threaded BLAS keeps repeated runs bit-identical regardless of
    // the host's core count.
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Modes { common } => commands::execute(
            &Invocation {
                subcommand: "modes",
                config_path: &common.config,
                out_dir: out_dir(common),
                seedless: common.seedless,
            },
            |system| commands::render_modes(system).map(|p| (p, 0)),
        ),
        Command::Couplings { common } => commands::execute(
            &Invocation {
                subcommand: "couplings",
                config_path: &common.config,
                out_dir: out_dir(common),
                seedless: common.seedless,
            },
            |system| commands::render_couplings(system).map(|p| (p, 0)),
        ),
        Command::Evolve { common, frame, observable } => {
            let frame: Result<EvolveFrame, _> = frame.parse();
            match frame {
                Err(e) => {
                    eprintln!("magicsim evolve: {e}");
                    e.exit_code()
                }
                Ok(frame) => commands::execute(
                    &Invocation {
                        subcommand: "evolve",
                        config_path: &common.config,
                        out_dir: out_dir(common),
                        seedless: common.seedless,
                    },
                    |system| {
                        commands::render_evolve(system, frame, observable.as_deref())
                            .map(|p| (p, 0))
                    },
                ),
            }
        }
        Command::Equivalence { common } => commands::execute(
            &Invocation {
                subcommand: "equivalence",
                config_path: &common.config,
                out_dir: out_dir(common),
                seedless: common.seedless,
            },
            |system| {
                commands::render_equivalence(system)
                    .map(|(p, passes)| (p, if passes { 0 } else { 5 }))
            },
        ),
        Command::Sweep { common, param, values } => commands::execute(
            &Invocation {
                subcommand: "sweep",
                config_path: &common.config,
                out_dir: out_dir(common),
                seedless: common.seedless,
            },
            |system| commands::render_sweep(system, param, values).map(|p| (p, 0)),
        ),
    };
    std::process::exit(code);
}
