//! `betacorona` command-line driver.
//!
//! Exit codes: 0 on success, 1 on invalid input, arguments or parameters,
//! 2 when a `verify --baseline` comparison fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use betacorona::corona::CoronaParams;
use betacorona::generate;
use betacorona::lattice::LatticeParams;
use betacorona::measure::io;
use betacorona::pipeline::{self, KernelChoice, PipelineConfig};
use betacorona::verify::{AnalysisReport, Baseline};
use betacorona::WeightedPointMeasure;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "betacorona", version, about = "Multiscale analysis of weighted point measures")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated measure to a CSV or JSON file.
    Generate(GenerateArgs),
    /// Growth constant, annulus tails, β bounds and Jones integrals.
    Analyze(RunArgs),
    /// Build the lattice and report its invariants.
    Lattice(RunArgs),
    /// Build the corona decomposition and audit it.
    Corona(RunArgs),
    /// Run every operator check, optionally against a baseline.
    Verify(VerifyArgs),
    /// Capacity lower bound from the input measure.
    Capacity(RunArgs),
    /// Load a measure and write it back, converting between formats.
    Dump {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Segment,
    LipschitzGraph,
    Cantor4,
    SquareArea,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Point count (segment, lipschitz-graph) or grid side (square-area).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Cantor generation.
    #[arg(long, default_value_t = 4)]
    generation: u32,
    #[arg(long, default_value_t = 0.5)]
    slope_amp: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Riesz,
    Cauchy,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Require the strict lattice regime A0 > 5000 C0
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    a_stop: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 4)]
    scales_per_octave: u32,
    #[arg(long, default_value_t = 2)]
    eps_per_octave: u32,
    /// Override the resolution radius of the input.
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long, value_enum, default_value_t = KernelArg::Riesz)]
    kernel: KernelArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 20)]
    balls: usize,
    /// Include every lattice cell in the report.
    #[arg(long)]
    dump_cells: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Baseline to compare the check ratios against.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Write the ratios of this run as a new baseline.
    #[arg(long)]
    write_baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    baseline_tol: f64,
}

enum Outcome {
    Done,
    BaselineFailed,
}

fn load_measure(args: &RunArgs) -> Result<(WeightedPointMeasure, PipelineConfig)> {
    let mut mu = io::load(&args.input).with_context(|| format!("cannot load {}", args.input.display()))?;
    if let Some(r) = args.r_min {
        mu = mu.with_r_min(r)?;
    }
    let mut cfg = PipelineConfig::new(&args.input.display().to_string(), mu.n());
    let base = LatticeParams::relaxed(mu.n());
    cfg.lattice = LatticeParams {
        c0: args.c0.unwrap_or(base.c0),
        a0: args.a0.unwrap_or(base.a0),
        max_depth: args.max_depth.unwrap_or(base.max_depth),
        relaxed: !args.strict,
    };
    let corona = CoronaParams::default();
    cfg.corona = CoronaParams {
        a_stop: args.a_stop.unwrap_or(corona.a_stop),
        tau: args.tau.unwrap_or(corona.tau),
    };
    cfg.scales_per_octave = args.scales_per_octave;
    cfg.eps_per_octave = args.eps_per_octave;
    cfg.kernel = match args.kernel {
        KernelArg::Riesz => KernelChoice::Riesz,
        KernelArg::Cauchy => KernelChoice::Cauchy,
    };
    cfg.seed = args.seed;
    cfg.samples = args.samples;
    cfg.balls = args.balls;
    cfg.dump_cells = args.dump_cells;
    Ok((mu, cfg))
}

fn emit(report: &AnalysisReport, output: Option<&Path>) -> Result<()> {
    let text = report.to_json()?;
    match output {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Generate(g) => {
            let mu = match g.kind {
                Kind::Segment => generate::segment(g.n)?,
                Kind::LipschitzGraph => generate::lipschitz_graph(g.n, g.slope_amp, g.seed)?,
                Kind::Cantor4 => generate::cantor4(g.generation)?,
                Kind::SquareArea => generate::square_area(g.n)?,
            };
            io::save(&mu, &g.output)?;
        }
        Command::Dump { input, output } => {
            let mu = io::load(&input).with_context(|| format!("cannot load {}", input.display()))?;
            io::save(&mu, &output)?;
        }
        Command::Analyze(a) => {
            let (mu, cfg) = load_measure(&a)?;
            emit(&pipeline::analyze(&mu, &cfg)?, a.output.as_deref())?;
        }
        Command::Lattice(a) => {
            let (mu, cfg) = load_measure(&a)?;
            emit(&pipeline::lattice(&mu, &cfg)?.0, a.output.as_deref())?;
        }
        Command::Corona(a) => {
            let (mu, cfg) = load_measure(&a)?;
            emit(&pipeline::corona(&mu, &cfg)?.0, a.output.as_deref())?;
        }
        Command::Capacity(a) => {
            let (mu, cfg) = load_measure(&a)?;
            emit(&pipeline::capacity(&mu, &cfg)?, a.output.as_deref())?;
        }
        Command::Verify(v) => {
            let (mu, cfg) = load_measure(&v.run)?;
            let baseline = match &v.baseline {
                Some(p) => {
                    let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
                    Some(Baseline::from_json(&text).with_context(|| format!("invalid baseline {}", p.display()))?)
                }
                None => None,
            };
            if !(v.baseline_tol >= 0.0) {
                bail!("baseline tolerance must be nonnegative");
            }
            let mut report = pipeline::verify(&mu, &cfg)?;
            let ok = baseline.as_ref().is_none_or(|b| report.compare(b));
            if let Some(p) = &v.write_baseline {
                let text = Baseline::from_report(&report, v.baseline_tol).to_json()?;
                fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display()))?;
            }
            emit(&report, v.run.output.as_deref())?;
            if !ok {
                for row in report.baseline.iter().flatten().filter(|r| !r.pass) {
                    eprintln!(
                        "baseline mismatch: {} expected {} got {:?} (tolerance {})",
                        row.name, row.expected, row.actual, row.rel_tol
                    );
                }
                return Ok(Outcome::BaselineFailed);
            }
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::BaselineFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
