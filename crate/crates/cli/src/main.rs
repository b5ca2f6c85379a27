use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use riesz_core::energy::min_pairwise_distance;
use riesz_core::experiment::{
    error_json, exit_code, run, thread_pool, ExperimentConfig, ExperimentKind, SearchSettings, SCHEMA,
};
use riesz_core::fractal::{moran_dimension, parse_real, FractalSource};
use riesz_core::minimizer::{best_packing, minimize, SearchOptions, Strategy};
use riesz_core::{Error, Fractal, Result};

/// Riesz energy experiments on self-similar fractals.
#[derive(Parser)]
#[command(name = "riesz", version)]
struct Cli {
    /// Worker threads (overrides RIESZ_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Similarity dimension from contraction ratios or a fractal.
    Dimension {
        /// Comma-separated ratios, e.g. `1/3,1/3`.
        #[arg(long, conflicts_with = "fractal")]
        ratios: Option<String>,
        #[arg(long)]
        fractal: Option<String>,
    },
    /// Near-minimal N-point configuration.
    Minimize {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        search: SearchArgs,
        /// Write the configuration to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best packing over grid nodes.
    Pack {
        #[arg(long)]
        fractal: String,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized energies along N = M^k n0.
    GeometricLimit {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 1)]
        n0: usize,
        #[arg(long, default_value_t = 8)]
        k_max: u32,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized energies binned by the fractional part of log_M N.
    GCurve {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 16)]
        bins: usize,
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic liminf/limsup gap certificate.
    Gap {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cell counts and separation of near-minimizers.
    Weakstar {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        range: Range,
        /// Explicit sizes, comma-separated (instead of a range).
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
        #[arg(long, default_value_t = 2)]
        cell_depth: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks that minimized energies grow with N.
    Monotonicity {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a JSON experiment file.
    Run {
        config: PathBuf,
        /// Output directory (overrides the file's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes gnuplot tables for a finished run directory.
    PlotData { dir: PathBuf },
    /// Prints the experiment JSON schema.
    Schema,
}

#[derive(Args)]
struct Problem {
    /// Catalog name (`cantor(1/3)`), inline JSON, or a JSON file.
    #[arg(long)]
    fractal: String,
    #[arg(long)]
    s: f64,
}

#[derive(Args)]
struct Range {
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Depth of the initial grid.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Largest subset enumeration allowed.
    #[arg(long)]
    budget: Option<u64>,
    /// Accepted local moves allowed per search.
    #[arg(long)]
    moves: Option<usize>,
    /// exhaustive, local-search or lift-seeded.
    #[arg(long)]
    strategy: Option<Strategy>,
}

impl SearchArgs {
    fn settings(&self) -> SearchSettings {
        let d = SearchSettings::default();
        SearchSettings {
            depth: self.depth.unwrap_or(d.depth),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            restarts: self.restarts.unwrap_or(d.restarts),
            moves_budget: self.moves.unwrap_or(d.moves_budget),
            strategy: self.strategy.unwrap_or(d.strategy),
            enumeration_budget: self.budget.unwrap_or(d.enumeration_budget),
        }
    }

    fn options(&self) -> SearchOptions {
        let s = self.settings();
        SearchOptions {
            depth: s.depth,
            max_depth: s.max_depth,
            restarts: s.restarts,
            moves_budget: s.moves_budget,
            seed: self.seed,
            strategy: s.strategy,
            enumeration_budget: s.enumeration_budget,
        }
    }
}

fn fractal_source(text: &str) -> Result<FractalSource> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    let path = PathBuf::from(trimmed);
    if path.is_file() {
        return Ok(serde_json::from_str(&fs::read_to_string(path)?)?);
    }
    Ok(FractalSource::Catalog(trimmed.to_string()))
}

fn experiment(problem: &Problem, kind: ExperimentKind, search: Option<&SearchArgs>) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::new(fractal_source(&problem.fractal)?, problem.s, kind);
    if let Some(search) = search {
        c.seed = search.seed;
        c.search = search.settings();
    }
    Ok(c)
}

fn summary_of(mut config: ExperimentConfig, out: Option<PathBuf>) -> Result<Value> {
    config.out = out;
    // Round-trip through the schema so flags get the same checks as files.
    let config = ExperimentConfig::from_value(serde_json::to_value(&config)?)?;
    Ok(run(&config)?.summary)
}

fn execute(command: Command) -> Result<Value> {
    match command {
        Command::Dimension { ratios, fractal } => {
            let ratios: Vec<f64> = match (ratios, fractal) {
                (Some(list), _) => list.split(',').map(parse_real).collect::<Result<_>>()?,
                (None, Some(f)) => fractal_source(&f)?.build()?.ratios(),
                (None, None) => return Err(Error::Usage("give --ratios or --fractal".into())),
            };
            Ok(json!({"ratios": ratios, "dimension": moran_dimension(&ratios)?}))
        }
        Command::Minimize {
            problem,
            n,
            search,
            out,
        } => {
            let fractal: Fractal = fractal_source(&problem.fractal)?.build()?;
            let result = minimize(&fractal, n, problem.s, &search.options())?;
            if let Some(path) = &out {
                result.config.write_csv(fs::File::create(path)?)?;
            }
            Ok(json!({
                "fractal": fractal.label(),
                "n": n,
                "s": problem.s,
                "strategy": result.strategy.name(),
                "certified": result.certified,
                "energy_ordered_pairs": result.record.energy,
                "normalized_energy": result.record.normalized,
                "min_distance": min_pairwise_distance(&result.config)?,
                "iterations": result.iterations,
                "addresses": result.addresses().iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            }))
        }
        Command::Pack {
            fractal,
            n,
            search,
            out,
        } => {
            let fractal = fractal_source(&fractal)?.build()?;
            let opts = search.options();
            let result = best_packing(&fractal, n, opts.depth, &opts)?;
            if let Some(path) = &out {
                result.config.write_csv(fs::File::create(path)?)?;
            }
            Ok(json!({
                "fractal": fractal.label(),
                "n": n,
                "min_distance": result.delta,
                "certified": result.certified,
                "iterations": result.iterations,
                "points": result.config.coords(),
            }))
        }
        Command::GeometricLimit {
            problem,
            n0,
            k_max,
            search,
            out,
        } => {
            let mut c = experiment(&problem, ExperimentKind::GeometricLimit, Some(&search))?;
            c.n0 = Some(n0);
            c.k_max = Some(k_max);
            summary_of(c, out)
        }
        Command::GCurve {
            problem,
            bins,
            range,
            search,
            out,
        } => {
            let mut c = experiment(&problem, ExperimentKind::GCurve, Some(&search))?;
            c.bins = Some(bins);
            c.n_min = range.n_min;
            c.n_max = range.n_max;
            summary_of(c, out)
        }
        Command::Gap { problem, out } => summary_of(experiment(&problem, ExperimentKind::Gap, None)?, out),
        Command::Weakstar {
            problem,
            range,
            n_values,
            cell_depth,
            search,
            out,
        } => {
            let mut c = experiment(&problem, ExperimentKind::Weakstar, Some(&search))?;
            c.n_min = range.n_min;
            c.n_max = range.n_max;
            c.n_values = n_values;
            c.cell_depth = Some(cell_depth);
            summary_of(c, out)
        }
        Command::Monotonicity {
            problem,
            range,
            search,
            out,
        } => {
            let mut c = experiment(&problem, ExperimentKind::Monotonicity, Some(&search))?;
            c.n_min = range.n_min;
            c.n_max = range.n_max;
            summary_of(c, out)
        }
        Command::Run { config, out } => {
            let mut c = ExperimentConfig::from_json(&fs::read_to_string(&config)?)?;
            if out.is_some() {
                c.out = out;
            }
            Ok(run(&c)?.summary)
        }
        Command::PlotData { dir } => {
            let files = riesz_core::plot::emit_plot_data(&dir)?;
            Ok(json!({"files": files}))
        }
        Command::Schema => Ok(serde_json::from_str(SCHEMA)?),
    }
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("{}", error_json(err));
    ExitCode::from(exit_code(err) as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Error::Usage(e.to_string().trim().to_string())),
    };
    let pool = match thread_pool(cli.threads) {
        Ok(pool) => pool,
        Err(e) => return fail(&e),
    };
    match pool.install(|| execute(cli.command)) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("JSON values serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
