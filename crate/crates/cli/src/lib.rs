//! `sfcoeff`: command-line front end for the square-free coefficient threshold laboratory.
//!
//! [`run`] parses arguments, merges the configuration, runs one subcommand inside a
//! dedicated thread pool and writes a single artifact. See the README for the grammar.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sfcoeff_core::Parallelism;

mod commands;
pub mod config;
pub mod report;

use config::{Format, Overrides, RunConfig};

pub const TOOL: &str = concat!("sfcoeff ", env!("CARGO_PKG_VERSION"));

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(sfcoeff_core::Error),
}

impl From<sfcoeff_core::Error> for Failure {
    fn from(e: sfcoeff_core::Error) -> Self {
        Failure::Compute(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(e.into())
    }
}

#[derive(Parser, Debug)]
#[command(name = "sfcoeff", version, about = "Square-free Fourier coefficient thresholds for cusp forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file with defaults for any option; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the artifact here instead of standard output
    #[arg(long, short, global = true)]
    pub output: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run every loop on the calling thread
    #[arg(long, global = true)]
    pub sequential: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct FormArgs {
    /// Weight(s), comma separated where a list is accepted
    #[arg(long = "k", value_delimiter = ',')]
    pub k: Vec<u32>,
    /// Level(s)
    #[arg(long = "N", value_delimiter = ',')]
    pub level: Vec<u64>,
}

#[derive(Args, Debug, Default)]
pub struct ThresholdArgs {
    /// Form specification, e.g. `delta`, `3*delta-5*delta@2`, `eta(1^2,11^2)`
    #[arg(long)]
    pub spec: Option<String>,
    /// Newform file supplying `dataI` atoms
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub search_limit: Option<usize>,
    /// Coefficients used for decompositions and printed expansions
    #[arg(long)]
    pub prec: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct PairArgs {
    /// First form: built-in label, index among built-in forms of (k, N), or `dataI`
    #[arg(long)]
    pub f: Option<String>,
    /// Second form, same syntax
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub data: Option<String>,
    /// Bump sharpness β
    #[arg(long)]
    pub beta: Option<f64>,
    /// Mellin quadrature tolerance
    #[arg(long)]
    pub weight_tolerance: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub x_points: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print echelon bases (level 1) or the known oldform/newform basis (level N)
    Basis {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long)]
        prec: Option<usize>,
    },
    /// Compute newform records of weight k and level dividing N
    Eigen {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long)]
        prec: Option<usize>,
        /// Also save the records in the newform file format
        #[arg(long)]
        nf_output: Option<String>,
    },
    /// Smallest square-free index with nonzero coefficient, with bounds
    Sfmin {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        threshold: ThresholdArgs,
    },
    /// Diagonal weighted square-free sum fit S(x) ≈ Cx + Kx^c
    Asymp {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Prime cutoff for the predicted constant C
        #[arg(long)]
        c_cutoff: Option<u64>,
    },
    /// Off-diagonal weighted sum growth fit
    Cross {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Direct weighted sum against the Mellin contour integral
    Oracle {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        pair: PairArgs,
        /// Values of x, comma separated
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        #[arg(long)]
        p_cutoff: Option<u64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        sigma0: Option<f64>,
    },
    /// Threshold reports over a grid of (k, N, spec)
    Scan {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        threshold: ThresholdArgs,
        /// Entries `k:N:spec` separated by `;`, added to the k × N product
        #[arg(long)]
        grid: Option<String>,
    },
    /// Theorem bound against the legacy bound
    Bounds {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        a0: Option<f64>,
    },
    /// Check the invariants of every record in a newform file
    Validate {
        #[arg(long)]
        data: Option<String>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Basis { .. } => "basis",
            Command::Eigen { .. } => "eigen",
            Command::Sfmin { .. } => "sfmin",
            Command::Asymp { .. } => "asymp",
            Command::Cross { .. } => "cross",
            Command::Oracle { .. } => "oracle",
            Command::Scan { .. } => "scan",
            Command::Bounds { .. } => "bounds",
            Command::Validate { .. } => "validate",
        }
    }

    fn overrides(&self, o: &mut Overrides) -> Result<(), Failure> {
        let form = |o: &mut Overrides, f: &FormArgs| {
            o.set_list("k", &f.k);
            o.set_list("N", &f.level);
        };
        let threshold = |o: &mut Overrides, t: &ThresholdArgs| {
            o.set("spec", t.spec.clone());
            o.set("data", t.data.clone());
            o.set("eps", t.eps);
            o.set("a0", t.a0);
            o.set("search_limit", t.search_limit);
            o.set("prec", t.prec);
        };
        let pair = |o: &mut Overrides, p: &PairArgs| {
            o.set("f", p.f.clone());
            o.set("g", p.g.clone());
            o.set("data", p.data.clone());
            o.set("beta", p.beta);
            o.set("weight_tolerance", p.weight_tolerance);
        };
        let grid = |o: &mut Overrides, g: &GridArgs| {
            o.set("x_min", g.x_min);
            o.set("x_max", g.x_max);
            o.set("x_points", g.x_points);
        };
        match self {
            Command::Basis { form: f, prec } => {
                form(o, f);
                o.set("prec", *prec);
            }
            Command::Eigen { form: f, prec, nf_output } => {
                form(o, f);
                o.set("prec", *prec);
                o.set("nf_output", nf_output.clone());
            }
            Command::Sfmin { form: f, threshold: t } => {
                form(o, f);
                threshold(o, t);
            }
            Command::Asymp { form: f, pair: p, grid: g, c_cutoff } => {
                form(o, f);
                pair(o, p);
                grid(o, g);
                o.set("c_cutoff", *c_cutoff);
            }
            Command::Cross { form: f, pair: p, grid: g } => {
                form(o, f);
                pair(o, p);
                grid(o, g);
            }
            Command::Oracle { form: f, pair: p, x, p_cutoff, t_max, sigma0 } => {
                form(o, f);
                pair(o, p);
                o.set_list("x", x);
                o.set("p_cutoff", *p_cutoff);
                o.set("t_max", *t_max);
                o.set("sigma0", *sigma0);
            }
            Command::Scan { form: f, threshold: t, grid } => {
                form(o, f);
                threshold(o, t);
                if let Some(g) = grid {
                    o.set_list("grid", &config::parse_grid(g).map_err(Failure::Usage)?);
                }
            }
            Command::Bounds { form: f, eps, a0 } => {
                form(o, f);
                o.set("eps", *eps);
                o.set("a0", *a0);
            }
            Command::Validate { data, tolerance } => {
                o.set("data", data.clone());
                o.set("validation_tolerance", *tolerance);
            }
        }
        Ok(())
    }
}

/// Parses and merges the configuration without running anything.
pub fn resolve<I, T>(args: I) -> Result<(RunConfig, Execution), Failure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut o = Overrides::default();
    o.set("output", cli.output.clone());
    o.set("format", cli.format);
    o.set("seed", cli.seed);
    cli.command.overrides(&mut o)?;
    let config = RunConfig::merge(cli.command.name(), cli.config.as_deref(), o)?;
    Ok((config, Execution { threads: cli.threads.unwrap_or(0), sequential: cli.sequential }))
}

/// How to run; never affects the output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Execution {
    pub threads: usize,
    pub sequential: bool,
}

/// Runs `sfcoeff` with the given arguments (including the program name) and returns the
/// exit status. The artifact goes to `--output` or `stdout`; diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    // help and version are not errors
    if let Err(e) = Cli::try_parse_from(&args) {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    }
    let outcome = resolve(&args).and_then(|(config, exec)| execute(&config, exec).map(|text| (config, text)));
    match outcome {
        Ok((config, text)) => {
            let written = match &config.output {
                Some(path) => std::fs::write(path, text.as_bytes()),
                None => stdout.write_all(text.as_bytes()),
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(e) => report_failure(Failure::Compute(e.into()), stderr),
            }
        }
        Err(f) => report_failure(f, stderr),
    }
}

fn report_failure(f: Failure, stderr: &mut dyn Write) -> i32 {
    match f {
        Failure::Usage(msg) => {
            let _ = writeln!(stderr, "{}", msg.trim_end());
            EXIT_USAGE
        }
        Failure::Compute(e) => {
            let doc = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            let _ = writeln!(stderr, "{doc}");
            EXIT_COMPUTATION
        }
    }
}

/// Runs one resolved configuration and returns the rendered artifact.
pub fn execute(config: &RunConfig, exec: Execution) -> Result<String, Failure> {
    let par = if exec.sequential { Parallelism::Sequential } else { Parallelism::Parallel };
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(exec.threads)
            .build()
            .map_err(|e| Failure::Compute(sfcoeff_core::Error::InternalInconsistency(format!("thread pool: {e}"))))?;
        pool.install(|| commands::dispatch(config, par))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = exec.threads;
        commands::dispatch(config, par)
    }
}
