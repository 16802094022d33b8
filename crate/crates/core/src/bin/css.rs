use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use active_css::datagen::{self, SyntheticSpec};
use active_css::experiment::{run_experiment, ExperimentConfig, ExperimentReport};
use active_css::{CssError, DenseMatrix, ErrorReport};

#[derive(Parser)]
#[command(name = "css", version, about = "Column subset selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep described by a TOML file.
    Run {
        config: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides `seed_base`.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV destination; timings go to `<PATH>.timing.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the observation rates, comma separated.
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<usize>,
        /// Add a uniform column-sampling arm.
        #[arg(long)]
        uniform: bool,
    },
    /// Generate a synthetic matrix from a TOML file or inline `key=value,...`.
    Gen {
        spec: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report the errors of a column selection.
    Eval {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum, default_value_t = MatrixKind::Dense)]
        kind: MatrixKind,
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<usize>,
        /// Rank of the reference approximation; defaults to the column count.
        #[arg(long)]
        k: Option<usize>,
        /// Column indices start at 1.
        #[arg(long)]
        one_based: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixKind {
    Dense,
    Sign,
    Genotype,
    Pgm,
}

fn exit_code(err: &CssError) -> ExitCode {
    match err {
        CssError::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn config_error(err: CssError) -> CssError {
    match err {
        CssError::Config(_) => err,
        other => CssError::Config(other.to_string()),
    }
}

fn print_summary(report: &ExperimentReport) {
    println!("{:<14} {:>6} {:>4} {:>4} {:>14} {:>14} {:>10}", "algorithm", "alpha", "s", "k", "median_error", "oracle_error", "ok");
    for s in &report.summary {
        println!(
            "{:<14} {:>6} {:>4} {:>4} {:>14.6e} {:>14.6e} {:>10}",
            s.algorithm,
            s.alpha,
            s.s,
            s.k,
            s.selection_error,
            s.oracle_error,
            format!("{}/{}", s.succeeded, s.trials)
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: &Path,
    jobs: usize,
    seed: Option<u64>,
    out: Option<PathBuf>,
    alpha: Option<Vec<f64>>,
    trials: Option<usize>,
    uniform: bool,
) -> Result<(), CssError> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    if let Some(seed) = seed {
        cfg.seed_base = seed;
    }
    if let Some(alpha) = alpha {
        cfg.missing_rates = alpha;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    cfg.include_uniform |= uniform;
    if jobs == 0 {
        return Err(CssError::Config("--jobs must be at least 1".into()));
    }
    cfg.validate()?;
    let report = run_experiment(&cfg, jobs)?;
    for (row, msg) in report.failures() {
        eprintln!("warning: {} alpha={} seed={} failed: {msg}", row.algorithm, row.alpha, row.seed);
    }
    match out.or(cfg.output) {
        Some(path) => {
            let timing = report.write(&path)?;
            print_summary(&report);
            eprintln!("wrote {} and {}", path.display(), timing.display());
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn parse_spec(spec: &str) -> Result<SyntheticSpec, CssError> {
    let text = if Path::new(spec).is_file() {
        fs::read_to_string(spec)?
    } else {
        spec.split(',').map(str::trim).collect::<Vec<_>>().join("\n")
    };
    let parsed: SyntheticSpec = toml::from_str(&text).map_err(|e| CssError::Config(e.to_string()))?;
    parsed.validate().map_err(config_error)?;
    Ok(parsed)
}

fn gen(spec: &str, out: &Path) -> Result<(), CssError> {
    let spec = parse_spec(spec)?;
    let m = datagen::generate(&spec)?;
    datagen::write_dense(out, &m)?;
    eprintln!("wrote {}x{} matrix to {}", m.rows(), m.cols(), out.display());
    Ok(())
}

fn load(path: &Path, kind: MatrixKind) -> Result<DenseMatrix, CssError> {
    match kind {
        MatrixKind::Dense => datagen::read_dense(path),
        MatrixKind::Sign => datagen::load_sign_matrix(path),
        MatrixKind::Genotype => datagen::load_genotypes(path),
        MatrixKind::Pgm => datagen::load_grayscale(path),
    }
}

fn eval(matrix: &Path, kind: MatrixKind, columns: &[usize], k: Option<usize>, one_based: bool) -> Result<(), CssError> {
    let m = load(matrix, kind)?;
    let indices: Vec<usize> = columns
        .iter()
        .map(|&c| {
            let c = if one_based {
                c.checked_sub(1).ok_or_else(|| CssError::Config("column 0 with --one-based".into()))?
            } else {
                c
            };
            if c >= m.cols() {
                return Err(CssError::Config(format!("column {c} out of range for {} columns", m.cols())));
            }
            Ok(c)
        })
        .collect::<Result<_, _>>()?;
    let k = k.unwrap_or(indices.len()).clamp(1, m.rows().min(m.cols()));
    let c = m.select_columns(indices.iter());
    let report = ErrorReport::compute(&m, &c, None, k)?;
    println!("columns              {indices:?}");
    println!("selection_error      {:e}", report.selection_error);
    println!("oracle_error (k={k})  {:e}", report.oracle_error);
    println!("relative_ratio       {}", report.relative_ratio);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            jobs,
            seed,
            out,
            alpha,
            trials,
            uniform,
        } => run(&config, jobs, seed, out, alpha, trials, uniform),
        Command::Gen { spec, out } => gen(&spec, &out),
        Command::Eval {
            matrix,
            kind,
            columns,
            k,
            one_based,
        } => eval(&matrix, kind, &columns, k, one_based),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
