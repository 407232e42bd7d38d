//! Command-line companion for the gap-soliton workbench: model files,
//! dispersion tables, edge extraction, envelope reduction, direct solves,
//! and convergence sweeps.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use gapsol_core::{EdgeSide, SolveOptions};

#[derive(Parser)]
#[command(
    name = "gapsol",
    version,
    about = "Gap solitons in d-dimensional coupled-mode systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Lower,
    Upper,
}

impl From<SideArg> for EdgeSide {
    fn from(side: SideArg) -> EdgeSide {
        match side {
            SideArg::Lower => EdgeSide::Lower,
            SideArg::Upper => EdgeSide::Upper,
        }
    }
}

fn parse_pair(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got {text:?}"));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([x, y])
}

#[derive(Args)]
struct IterationArgs {
    /// Relative sup-norm residual target for the fixed-point iteration.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap before the run is declared divergent.
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Under-relaxation factor in (0, 1]; 1 is the plain update.
    #[arg(long, default_value_t = 1.0)]
    relax: f64,
    /// Zero spectral modes above two-thirds of the bandwidth each pass.
    #[arg(long)]
    dealias: bool,
}

impl IterationArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            relax: self.relax,
            dealias: self.dealias,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate or generate model files
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Sample the dispersion relation on a wavevector box
    Bands {
        model: PathBuf,
        /// Half-width of the sampling box [-K, K]^d (default: velocity- and
        /// coupling-scaled).
        #[arg(long = "box")]
        box_half_width: Option<f64>,
        /// Sample points per axis (default: 4097 in 1D, 129 otherwise).
        #[arg(long)]
        n: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Locate a gap edge and export its data
    Edge {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = SideArg::Lower)]
        side: SideArg,
        #[arg(long = "box")]
        box_half_width: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reduce to the effective envelope equation and solve its ground state
    Nls {
        /// Edge data produced by `gapsol edge`.
        edge: PathBuf,
        /// Model file; the cubic tensor is not stored in the edge data.
        #[arg(long)]
        model: PathBuf,
        /// Detuning magnitude; the sign follows the edge side.
        #[arg(long, default_value_t = 1.0)]
        omega1: f64,
        /// Negate every cubic coefficient before the reduction.
        #[arg(long = "flip-nonlinearity")]
        flip_nonlinearity: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Refine the asymptotic ansatz into a gap soliton at one ε
    Solve {
        model: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        omega1: f64,
        #[arg(long = "flip-nonlinearity")]
        flip_nonlinearity: bool,
        #[arg(long, value_enum, default_value_t = SideArg::Lower)]
        side: SideArg,
        /// Grid points per axis.
        #[arg(long, default_value_t = 160)]
        n: usize,
        /// Box half-width in units of the envelope width 1/ε.
        #[arg(long = "box-mult", default_value_t = 3.0)]
        box_mult: f64,
        #[command(flatten)]
        iteration: IterationArgs,
        /// Field table destination; diagnostics go to <stem>.diagnostics.json.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the convergence study E(ε) = sup|B − B_app| over an ε list
    Sweep {
        model: PathBuf,
        /// Comma-separated, strictly decreasing ε values.
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
        eps: Vec<f64>,
        /// Use the six-value list 0.2,0.1,0.05,0.025,0.0125,0.00625.
        #[arg(long = "full-sweep")]
        full_sweep: bool,
        #[arg(long, default_value_t = 1.0)]
        omega1: f64,
        #[arg(long = "flip-nonlinearity")]
        flip_nonlinearity: bool,
        #[arg(long, value_enum, default_value_t = SideArg::Lower)]
        side: SideArg,
        #[arg(long, default_value_t = 160)]
        n: usize,
        #[arg(long = "box-mult", default_value_t = 3.0)]
        box_mult: f64,
        #[command(flatten)]
        iteration: IterationArgs,
        /// Additionally dump solution and ansatz fields at this ε.
        #[arg(long = "dump-field")]
        dump_field: Option<f64>,
        /// Report directory (convergence.csv, convergence.json, loglog.dat).
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum ModelAction {
    /// Parse a model file and run every invariant check
    Validate { file: PathBuf },
    /// Write the four-mode crossing-wavepacket example
    Example {
        #[arg(long, default_value_t = 2.0)]
        alpha1: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha2: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha3: f64,
        /// First wavepacket velocity, e.g. "0,1".
        #[arg(long, value_parser = parse_pair, default_value = "0,1")]
        v: [f64; 2],
        /// Second wavepacket velocity, e.g. "1,0".
        #[arg(long, value_parser = parse_pair, default_value = "1,0")]
        w: [f64; 2],
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Model { action } => match action {
            ModelAction::Validate { file } => commands::model_validate(&file),
            ModelAction::Example { alpha1, alpha2, alpha3, v, w, output } => {
                commands::model_example(alpha1, alpha2, alpha3, v, w, &output)
            }
        },
        Command::Bands { model, box_half_width, n, output } => {
            commands::bands(&model, box_half_width, n, &output)
        }
        Command::Edge { model, side, box_half_width, n, output } => {
            commands::edge(&model, side.into(), box_half_width, n, &output)
        }
        Command::Nls { edge, model, omega1, flip_nonlinearity, output } => {
            commands::nls(&edge, &model, omega1, flip_nonlinearity, &output)
        }
        Command::Solve {
            model,
            eps,
            omega1,
            flip_nonlinearity,
            side,
            n,
            box_mult,
            iteration,
            output,
        } => {
            let settings = commands::SolveSettings {
                eps,
                omega1,
                flip: flip_nonlinearity,
                side: side.into(),
                grid_points: n,
                box_mult,
                options: iteration.options(),
            };
            commands::solve(&model, &settings, &output)
        }
        Command::Sweep {
            model,
            eps,
            full_sweep,
            omega1,
            flip_nonlinearity,
            side,
            n,
            box_mult,
            iteration,
            dump_field,
            output,
        } => {
            let eps_list = if full_sweep {
                vec![0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625]
            } else {
                eps
            };
            let settings = commands::SweepSettings {
                eps_list,
                omega1,
                flip: flip_nonlinearity,
                side: side.into(),
                grid_points: n,
                box_mult,
                options: iteration.options(),
                dump_field,
            };
            commands::sweep(&model, &settings, &output)
        }
    }
}
