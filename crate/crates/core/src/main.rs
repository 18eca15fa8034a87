use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swepinn::cli::{self, Command};

#[derive(Parser)]
#[command(
    name = "swepinn",
    about = "Differentiable finite-volume training toolkit for the 2D shallow water equations",
    version
)]
struct TopLevel {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct CommonArgs {
    /// Case configuration file.
    config: PathBuf,
    /// Dotted-path overrides, e.g. `train.adam_steps=200`.
    overrides: Vec<String>,
    /// Output directory (overrides [case] output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed: sets network.seed, train.seed_sampling = seed+1 and
    /// data.seed_noise = seed+2.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Generate the case mesh, audit it, and write the mesh file.
    MeshGen(CommonArgs),
    /// Run the forward finite-volume solver and export its trajectory.
    Teacher(CommonArgs),
    /// Train the surrogate (standard two-phase or windowed).
    Train(CommonArgs),
    /// Evaluate a checkpoint against a named reference.
    Eval(CommonArgs),
    /// Sweep the momentum-scaling loss landscape of a checkpoint.
    Landscape(CommonArgs),
    /// Compare the training gradient against central finite differences.
    Gradcheck(CommonArgs),
}

fn main() -> ExitCode {
    let top = TopLevel::parse();
    let (command, args) = match top.command {
        Sub::MeshGen(a) => (Command::MeshGen, a),
        Sub::Teacher(a) => (Command::Teacher, a),
        Sub::Train(a) => (Command::Train, a),
        Sub::Eval(a) => (Command::Eval, a),
        Sub::Landscape(a) => (Command::Landscape, a),
        Sub::Gradcheck(a) => (Command::Gradcheck, a),
    };
    match cli::run(command, &args.config, &args.overrides, args.out, args.seed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.json_record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
