use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stochad::estimators::estimate_delta;
use stochad::experiment::{density_diagnostics, sweep_text_table, write_sweep_csv};
use stochad::{
    run_experiment, width_sweep, BlackScholesParams, DensityMethod, DigitalOption, EstimatorSpec,
    ExperimentConfig, ShiftConvention, TableSetup, WidthMode,
};

#[derive(Parser)]
#[command(version, about = "Digital option deltas by adjoint differentiation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One delta estimate on one seed.
    Delta {
        #[arg(long, value_enum, default_value_t = Method::Regression)]
        estimator: Method,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        table: TableArgs,
    },
    /// Value, bias, standard deviation and improvement over repeated seeds.
    Table {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        table: TableArgs,
        #[arg(long, env = "STOCHAD_REPEATS", default_value_t = stochad::experiment::DEFAULT_REPEATS)]
        repeats: usize,
        #[arg(long, default_value = "table.csv")]
        out: PathBuf,
    },
    /// Per-seed deltas for several window widths.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.05,0.025")]
        widths: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        table: TableArgs,
        #[arg(long, env = "STOCHAD_REPEATS", default_value_t = 100)]
        repeats: usize,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Empirical density samples of the trigger with the fitted curve.
    Density {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, env = "STOCHAD_WPHI", default_value_t = 0.5)]
        wphi: f64,
        #[arg(long, env = "STOCHAD_M", default_value_t = 2)]
        m: usize,
        #[arg(long, default_value = "density.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, env = "STOCHAD_PATHS", default_value_t = stochad::experiment::DEFAULT_PATHS)]
    paths: usize,
    /// Seed of the first repeat; repeat k uses seed + k.
    #[arg(long, env = "STOCHAD_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, env = "STOCHAD_W", default_value_t = 0.05)]
    w: f64,
    #[arg(long, env = "STOCHAD_WPHI", default_value_t = 0.5)]
    wphi: f64,
    #[arg(long, env = "STOCHAD_M", default_value_t = 2)]
    m: usize,
    #[arg(long, env = "STOCHAD_WIDTH_MODE", value_enum, default_value_t = WidthArg::Stddev)]
    width_mode: WidthArg,
    #[arg(long, env = "STOCHAD_DENSITY_METHOD", value_enum, default_value_t = DensityArg::Distribution)]
    density_method: DensityArg,
    #[arg(long, env = "STOCHAD_FD_SHIFT", value_enum, default_value_t = ShiftArg::Half)]
    fd_shift_convention: ShiftArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Fd,
    StochAd,
    Regression,
    Lr,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum)]
enum WidthArg {
    Stddev,
    Absolute,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityArg {
    Density,
    Distribution,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShiftArg {
    Half,
    Full,
}

impl TableArgs {
    fn setup(&self) -> TableSetup {
        TableSetup {
            width_mode: match self.width_mode {
                WidthArg::Stddev => WidthMode::StdDevs,
                WidthArg::Absolute => WidthMode::Absolute,
            },
            density: match self.density_method {
                DensityArg::Density => DensityMethod::Density,
                DensityArg::Distribution => DensityMethod::Distribution,
            },
            shift_convention: match self.fd_shift_convention {
                ShiftArg::Half => ShiftConvention::Half,
                ShiftArg::Full => ShiftConvention::Full,
            },
            ..TableSetup::new(self.w, self.wphi, self.m)
        }
    }
}

fn config(setup: &TableSetup, run: &RunArgs, repeats: usize) -> ExperimentConfig {
    ExperimentConfig::reference(setup)
        .with_paths(run.paths)
        .with_repeats(repeats)
        .with_base_seed(run.seed)
}

fn create(path: &Path) -> stochad::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> stochad::Result<()> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Delta {
            estimator,
            run,
            table,
        } => {
            let setup = table.setup();
            let specs = setup.estimators();
            let spec: &EstimatorSpec = &specs[match estimator {
                Method::Fd => 0,
                Method::StochAd => 1,
                Method::Regression => 2,
                Method::Lr => 3,
                Method::Analytic => 4,
            }];
            let params = BlackScholesParams::reference();
            let delta = estimate_delta(
                spec,
                &params,
                &DigitalOption::reference(),
                run.paths,
                run.seed,
            )?;
            writeln!(stdout, "estimator,seed,delta")?;
            writeln!(stdout, "{},{},{delta:.6}", spec.label, run.seed)?;
        }
        Command::Table {
            run,
            table,
            repeats,
            out,
        } => {
            let stats = run_experiment(&config(&table.setup(), &run, repeats))?;
            stats.write_csv(create(&out)?)?;
            for warning in stats.warnings.iter().take(10) {
                eprintln!("warning: {warning}");
            }
            write!(stdout, "{}", stats.text_table())?;
        }
        Command::Sweep {
            widths,
            run,
            table,
            repeats,
            out,
        } => {
            let setup = table.setup();
            let rows = width_sweep(&config(&setup, &run, repeats), &setup, &widths)?;
            write_sweep_csv(&rows, create(&out)?)?;
            write!(stdout, "{}", sweep_text_table(&rows))?;
        }
        Command::Density { run, wphi, m, out } => {
            let params = BlackScholesParams::reference();
            let diag = density_diagnostics(
                &params,
                &DigitalOption::reference(),
                run.paths,
                run.seed,
                wphi,
                m,
            )?;
            diag.write_csv(create(&out)?)?;
            writeln!(
                stdout,
                "samples {}  half-width {:.6}  d*(0) {:.6}",
                diag.rows.len(),
                diag.half_width,
                diag.d_star
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
