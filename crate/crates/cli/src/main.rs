use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tuckerlite::factor::DEFAULT_RANK_TOL;
use tuckerlite::GeneratorSpec;
use tuckerlite_cli::commands::{
    self, BenchArgs, CpArgs, DecomposeArgs, Input, MeigArgs, NormsArgs, RunReport, Suite, ZeigArgs,
};
use tuckerlite_cli::{save_tensor, Failure};

/// Tucker cores of dense tensors, and rank, norm and eigenvalue
/// computations carried out on the core.
#[derive(Parser)]
#[command(name = "tuckerlite", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Core shape, Tucker ranks, reconstruction residual, norm constants.
    Decompose {
        #[command(flatten)]
        input: InputArgs,
        /// Use the symmetric decomposition (one shared factor).
        #[arg(long)]
        symmetric: bool,
        /// Relative rank tolerance.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Z-eigenpairs of a symmetric tensor.
    Zeig {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        route: Route,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        /// Absolute certification tolerance (default 1e-8·max(1, ‖T‖_F)).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// M-eigenpairs of a partial symmetric 4-way tensor.
    Meig {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        route: Route,
        #[arg(long, default_value_t = 32)]
        starts: usize,
        /// Absolute certification tolerance (default 1e-8·max(1, ‖T‖_F)).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// CP decomposition of the core, lifted, checked against the error bound.
    Cp {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        symmetric: bool,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Frobenius norms of tensor and core with the sandwich constants.
    Norms {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        symmetric: bool,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Direct vs via-core timing on a suite of instances.
    Bench {
        #[arg(long, value_enum, default_value_t = SuiteArg::Examples)]
        suite: SuiteArg,
        /// Timing rows per instance.
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, env = "TUCKERLITE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Write a generated tensor to a file.
    Generate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, short, value_name = "PATH")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Tensor file (`{"shape": [...], "data": [...]}`).
    #[arg(conflicts_with = "gen")]
    input: Option<PathBuf>,
    /// Built-in generator instead of a file.
    #[arg(long)]
    gen: Option<String>,
    #[arg(long, requires = "gen")]
    dim: Option<usize>,
    #[arg(long, requires = "gen")]
    order: Option<usize>,
    /// Core dimension for the planted generator.
    #[arg(long, requires = "gen")]
    core_dim: Option<usize>,
    /// Seed for generators and solvers.
    #[arg(long, env = "TUCKERLITE_SEED", default_value_t = 0)]
    seed: u64,
}

impl InputArgs {
    fn resolve(&self) -> Result<Input, Failure> {
        match (&self.input, &self.gen) {
            (Some(p), None) => Ok(Input::File(p.clone())),
            (None, Some(name)) => {
                let mut spec = GeneratorSpec::with_defaults(name)?;
                spec.dim = self.dim.unwrap_or(spec.dim);
                spec.order = self.order.unwrap_or(spec.order);
                spec = spec.with_param("seed", self.seed as f64);
                if let Some(c) = self.core_dim {
                    spec = spec.with_param("core_dim", c as f64);
                }
                Ok(Input::Gen(spec))
            }
            _ => Err(Failure::Validation(
                "give either a tensor file or --gen NAME".into(),
            )),
        }
    }
}

#[derive(Args)]
#[group(multiple = false)]
struct Route {
    /// Solve on the tensor itself.
    #[arg(long)]
    direct: bool,
    /// Solve on the core and lift (default).
    #[arg(long)]
    via_core: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Examples,
    Random,
}

fn finish(report: RunReport, csv: Option<PathBuf>) -> Result<(), Failure> {
    print!("{}", report.render());
    if let Some(path) = csv {
        report.csv_table().write_csv(&path)?;
    }
    report.status()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Decompose {
            input,
            symmetric,
            tol,
            csv,
        } => {
            let src = input.resolve()?;
            let t = src.load()?;
            let args = DecomposeArgs {
                symmetric,
                rank_tol: tol,
            };
            finish(commands::decompose(&t, &src, &args)?, csv)
        }
        Command::Zeig {
            input,
            route,
            starts,
            tol,
            rank_tol,
            csv,
        } => {
            let src = input.resolve()?;
            let t = src.load()?;
            let args = ZeigArgs {
                direct: route.direct,
                starts,
                seed: input.seed,
                certify_tol: tol,
                rank_tol,
            };
            finish(commands::zeig(&t, &src, &args)?, csv)
        }
        Command::Meig {
            input,
            route,
            starts,
            tol,
            rank_tol,
            csv,
        } => {
            let src = input.resolve()?;
            let t = src.load()?;
            let args = MeigArgs {
                direct: route.direct,
                starts,
                seed: input.seed,
                certify_tol: tol,
                rank_tol,
            };
            finish(commands::meig(&t, &src, &args)?, csv)
        }
        Command::Cp {
            input,
            rank,
            symmetric,
            tol,
            csv,
        } => {
            let src = input.resolve()?;
            let t = src.load()?;
            let args = CpArgs {
                rank,
                seed: input.seed,
                symmetric,
                rank_tol: tol,
            };
            finish(commands::cp(&t, &src, &args)?, csv)
        }
        Command::Norms {
            input,
            symmetric,
            tol,
            csv,
        } => {
            let src = input.resolve()?;
            let t = src.load()?;
            finish(
                commands::norms(
                    &t,
                    &src,
                    &NormsArgs {
                        symmetric,
                        rank_tol: tol,
                    },
                )?,
                csv,
            )
        }
        Command::Bench {
            suite,
            reps,
            starts,
            seed,
            tol,
            csv,
        } => {
            let suite = match suite {
                SuiteArg::Examples => Suite::Examples,
                SuiteArg::Random => Suite::Random,
            };
            let args = BenchArgs {
                suite,
                reps,
                starts,
                seed,
                rank_tol: tol,
            };
            finish(commands::bench(&args)?, csv)
        }
        Command::Generate { input, out } => {
            let src = input.resolve()?;
            let t = src.load()?;
            save_tensor(&t, &out, Some(src.describe()))?;
            println!(
                "wrote {} ({})",
                out.display(),
                commands::shape_string(t.shape())
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
