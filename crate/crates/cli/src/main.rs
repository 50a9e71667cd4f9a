use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use thermoinv::model::{DEFAULT_COUNT, DEFAULT_HT, DEFAULT_T0, DEFAULT_T_START, DEFAULT_X0};
use thermoinv::rules::LadderConfig;
use thermoinv_cli::commands::{self, PipelineSettings, MEASUREMENTS_FILE};
use thermoinv_cli::manifest::RunManifest;
use thermoinv_cli::settings::{
    GenerateSettings, MethodArg, ModeArg, NormArg, ProblemSettings, ReconstructSettings, RuleArg, SchemeArg, SourceArg,
};

const EXIT_USAGE: u8 = 2;
const EXIT_SINGULAR: u8 = 3;

/// Reconstruct the stationary heat source of a 1D bar from temperature data.
#[derive(Parser)]
#[command(name = "thermoinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate noisy measurements of the forward problem.
    Generate(GenerateArgs),
    /// Recover the source from a measurement file.
    Reconstruct(ReconstructArgs),
    /// Write figure CSVs and SVGs for previous runs.
    Report(ReportArgs),
    /// Generate, reconstruct and report all three schemes.
    Pipeline(PipelineArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::FixedTime)]
    scheme: SchemeArg,
    /// True source profile [default: box]
    #[arg(long, value_enum)]
    source: Option<SourceArg>,
    /// Sensor position (fixed-point scheme).
    #[arg(long, default_value_t = DEFAULT_X0)]
    x0: f64,
    /// Snapshot time (fixed-time scheme).
    #[arg(long, default_value_t = DEFAULT_T0)]
    t0: f64,
    /// First reading time (time-swept schemes).
    #[arg(long, default_value_t = DEFAULT_T_START)]
    t_start: f64,
    /// Time between readings (time-swept schemes).
    #[arg(long, default_value_t = DEFAULT_HT)]
    ht: f64,
    #[arg(long, default_value_t = DEFAULT_COUNT)]
    n_data: usize,
    /// Sine-series truncation.
    #[arg(long, default_value_t = 100)]
    n_series: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Physical)]
    mode: ModeArg,
    #[arg(long, default_value_t = 1.0)]
    diffusion: f64,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    #[arg(long, env = "THERMOINV_SEED", default_value_t = 0)]
    seed: u64,
}

impl ProblemArgs {
    fn settings(&self) -> ProblemSettings {
        ProblemSettings {
            scheme: self.scheme,
            source: self.source.unwrap_or(SourceArg::Box),
            x0: self.x0,
            t0: self.t0,
            t_start: self.t_start,
            ht: self.ht,
            n_data: self.n_data,
            n_series: self.n_series,
            mode: self.mode,
            diffusion: self.diffusion,
            length: self.length,
            seed: self.seed,
        }
    }

    /// `base` with every flag given on the command line applied on top.
    fn overlay(&self, mut base: ProblemSettings, m: &ArgMatches) -> ProblemSettings {
        let given = |id: &str| m.value_source(id) == Some(ValueSource::CommandLine);
        macro_rules! take {
            ($($field:ident),*) => {$(
                if given(stringify!($field)) {
                    base.$field = self.$field;
                }
            )*};
        }
        take!(scheme, x0, t0, t_start, ht, n_data, n_series, mode, diffusion, length, seed);
        if let Some(source) = self.source {
            base.source = source;
        }
        base
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Noise bound δ; each value is perturbed by δ·r, r uniform in [-1, 1].
    #[arg(long, default_value_t = 1e-4)]
    noise: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Interior reconstruction nodes J.
    #[arg(long, default_value_t = DEFAULT_COUNT)]
    n_grid: usize,
    #[arg(long, default_value_t = LadderConfig::DEFAULT_MAX_STEPS)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = NormArg::Rms)]
    discrepancy_norm: NormArg,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Use the listed quadrature weights instead of the swept-coordinate step.
    #[arg(long)]
    paper_weights: bool,
    /// Discrepancy test on the raw euclidean residual against δ.
    #[arg(long)]
    paper_exact: bool,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Measurement CSV [default: <out>/measurements.csv]
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Tikhonov)]
    method: MethodArg,
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
    /// Fixed regularization parameter (tikhonov without --rule).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_start: Option<f64>,
    #[arg(long)]
    alpha_factor: Option<f64>,
    /// Noise bound for the discrepancy rule [default: the generating --noise]
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory, or a directory of run directories.
    #[arg(long, default_value = "out")]
    input: PathBuf,
    /// [default: <input>/figures]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 1e-4)]
    noise: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    /// [default: the manifest's directory]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn reconstruct_settings(args: &ReconstructArgs, m: &ArgMatches) -> Result<ReconstructSettings> {
    let data = args.data.clone().unwrap_or_else(|| args.out.join(MEASUREMENTS_FILE));
    let recorded = commands::sibling_generate_settings(&data)?;
    let (problem, truth, noise) = match recorded {
        Some(g) => (args.problem.overlay(g.problem, m), true, Some(g.noise)),
        None => (args.problem.settings(), args.problem.source.is_some(), None),
    };
    // an absolute data path keeps the manifest replayable from anywhere
    let data = data
        .canonicalize()
        .with_context(|| format!("cannot open {}", data.display()))?;
    Ok(ReconstructSettings {
        problem,
        data,
        n_grid: args.solver.n_grid,
        method: args.method,
        rule: args.rule,
        alpha: args.alpha,
        alpha_start: args.alpha_start,
        alpha_factor: args.alpha_factor,
        max_steps: args.solver.max_steps,
        discrepancy_norm: args.solver.discrepancy_norm,
        tau: args.solver.tau,
        paper_weights: args.solver.paper_weights,
        paper_exact: args.solver.paper_exact,
        delta: args.delta.or(noise.filter(|&d| d > 0.0)),
        truth,
    })
}

fn print_diagnostics(manifest: &RunManifest) {
    let Some(d) = &manifest.diagnostics else { return };
    let show = |v: Option<f64>| v.map_or("n/a".to_owned(), |v| format!("{v:.6e}"));
    println!(
        "condition {}  alpha {}  residual {}  relative error {}{}",
        d.condition.map_or("inf".to_owned(), |v| format!("{v:.6e}")),
        show(d.chosen_alpha),
        show(d.residual_norm),
        show(d.relative_error),
        if d.singular { "  [singular]" } else { "" }
    );
}

fn run(cli: Cli, matches: &ArgMatches) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(args) => {
            let settings = GenerateSettings {
                problem: args.problem.settings(),
                noise: args.noise,
            };
            commands::generate(&settings, &args.out)?;
            println!("wrote {}", args.out.join(MEASUREMENTS_FILE).display());
        }
        Command::Reconstruct(args) => {
            let sub = matches.subcommand_matches("reconstruct").expect("reconstruct matches");
            let settings = reconstruct_settings(&args, sub)?;
            let outcome = commands::reconstruct(&settings, &args.out)?;
            print_diagnostics(&outcome.manifest);
            if outcome.singular {
                eprintln!("warning: naive inversion is numerically singular; output written but meaningless");
                return Ok(ExitCode::from(EXIT_SINGULAR));
            }
        }
        Command::Report(args) => {
            let out = args.out.unwrap_or_else(|| args.input.join(commands::FIGURES_DIR));
            let written = commands::report(&args.input, &out)?;
            println!("wrote {} files to {}", written.len(), out.display());
        }
        Command::Pipeline(args) => {
            let problem = args.problem.settings();
            let settings = PipelineSettings {
                reconstruct: ReconstructSettings {
                    problem: problem.clone(),
                    data: PathBuf::new(),
                    n_grid: args.solver.n_grid,
                    method: MethodArg::Tikhonov,
                    rule: None,
                    alpha: None,
                    alpha_start: None,
                    alpha_factor: None,
                    max_steps: args.solver.max_steps,
                    discrepancy_norm: args.solver.discrepancy_norm,
                    tau: args.solver.tau,
                    paper_weights: args.solver.paper_weights,
                    paper_exact: args.solver.paper_exact,
                    delta: None,
                    truth: true,
                },
                problem,
                noise: args.noise,
            };
            let rows = commands::pipeline(&settings, &args.out)?;
            println!(
                "{:<12} {:<12} {:>14} {:>14} {:>14}",
                "scheme", "method", "alpha", "condition", "rel. error"
            );
            for r in rows {
                let show = |v: Option<f64>| v.map_or("n/a".to_owned(), |v| format!("{v:.4e}"));
                println!(
                    "{:<12} {:<12} {:>14} {:>14} {:>14}",
                    r.scheme.name(),
                    r.tag,
                    show(r.diagnostics.chosen_alpha),
                    r.diagnostics.condition.map_or("inf".to_owned(), |v| format!("{v:.4e}")),
                    show(r.diagnostics.relative_error)
                );
            }
        }
        Command::Replay(args) => {
            let manifest = RunManifest::read(&args.manifest)?;
            let out = args
                .out
                .unwrap_or_else(|| args.manifest.parent().unwrap_or(Path::new(".")).to_path_buf());
            let result = commands::replay(&manifest, &out)?;
            print_diagnostics(&result);
            println!("replayed into {}", out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli, &matches) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
