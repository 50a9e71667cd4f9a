//! The commands behind the binary. Each takes fully resolved settings, so the
//! same code serves direct invocation, the pipeline and manifest replay.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};

use thermoinv::direct::{apply_noise, generate_data};
use thermoinv::inversion::{condition_estimate, naive_reconstruct, residual_norm, Reconstruction, TikhonovSolver};
use thermoinv::kernel::assemble_with_weights;
use thermoinv::model::{discretize_source, make_grid, NoiseSpec, SamplePoint, SchemeKind};
use thermoinv::rules::{discrepancy_rule, oracle_distance_rule, RuleTrace};

use crate::io::{self, FigureRow};
use crate::manifest::{finite, CommandEcho, Diagnostics, RunManifest, MANIFEST_FILE};
use crate::plot::{self, PlotSpec};
use crate::settings::{GenerateSettings, MethodArg, ProblemSettings, ReconstructSettings, RuleArg, SchemeArg};

pub const MEASUREMENTS_FILE: &str = "measurements.csv";
pub const FIGURES_DIR: &str = "figures";

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Synthesizes noisy measurements into `out/measurements.csv`.
pub fn generate(settings: &GenerateSettings, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let problem = &settings.problem;
    let config = problem.config()?;
    let scheme = problem.scheme()?;
    let noise = NoiseSpec::new(settings.noise, problem.seed).context("invalid --noise")?;
    let clean = generate_data(&problem.source.function(), &scheme, &config)?;
    let data = apply_noise(&clean, &noise);

    create_dir(out)?;
    io::write_measurements(&out.join(MEASUREMENTS_FILE), &data)?;
    let mut manifest = RunManifest::new(CommandEcho::Generate(settings.clone()));
    manifest.artifacts.push(MEASUREMENTS_FILE.into());
    manifest.elapsed_ms = elapsed_ms(start);
    manifest.write(&out.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// The generate settings recorded next to a measurement file, if any.
pub fn sibling_generate_settings(data: &Path) -> Result<Option<GenerateSettings>> {
    let path = data.parent().unwrap_or(Path::new(".")).join(MANIFEST_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    match RunManifest::read(&path)?.echo {
        CommandEcho::Generate(g) => Ok(Some(g)),
        CommandEcho::Reconstruct(_) => Ok(None),
    }
}

pub struct ReconstructOutcome {
    pub manifest: RunManifest,
    pub singular: bool,
}

fn relative_error(f: &[f64], f_true: &[f64]) -> Option<f64> {
    let (mut diff, mut base) = (0.0, 0.0);
    for (a, b) in f.iter().zip(f_true) {
        diff += (a - b) * (a - b);
        base += b * b;
    }
    finite((diff / base).sqrt())
}

/// Inverts the measurements in `settings.data`; writes the reconstruction,
/// the ladder trace for rule-based runs, and `manifest_<tag>.json`.
pub fn reconstruct(settings: &ReconstructSettings, out: &Path) -> Result<ReconstructOutcome> {
    let start = Instant::now();
    let problem = &settings.problem;
    let rows = io::read_measurements(&settings.data)?;
    let config = problem.config()?;
    let scheme = problem.scheme_with_count(rows.points.len())?;
    let grid = make_grid(settings.n_grid, problem.length).context("invalid --n-grid")?;
    let kernel = assemble_with_weights(&rows.points, &grid, &scheme, &config, settings.weights())?;
    let f_true = settings
        .truth
        .then(|| discretize_source(&problem.source.function(), &grid));
    let u = &rows.values;
    let criterion = settings.criterion();
    let tag = settings.tag();

    let mut diagnostics = Diagnostics::default();
    let mut trace: Option<RuleTrace> = None;
    let estimate: Reconstruction = match (settings.method, settings.rule) {
        (MethodArg::Naive, _) => {
            if settings.rule.is_some() || settings.alpha.is_some() {
                bail!("--rule and --alpha only apply to --method tikhonov");
            }
            naive_reconstruct(&kernel, u)?
        }
        (MethodArg::Tikhonov, None) => {
            let Some(alpha) = settings.alpha else {
                bail!("--method tikhonov needs --rule or --alpha");
            };
            TikhonovSolver::new(&kernel)?.solve(u, alpha)?
        }
        (MethodArg::Tikhonov, Some(rule)) => {
            if settings.alpha.is_some() {
                bail!("--alpha conflicts with --rule");
            }
            let ladder = settings.ladder(rule)?;
            let t = match rule {
                RuleArg::Oracle => {
                    let Some(f_true) = &f_true else {
                        bail!("the oracle rule needs the true source (generate manifest or --source)");
                    };
                    oracle_distance_rule(&kernel, u, f_true, &ladder)?
                }
                RuleArg::Discrepancy => {
                    let Some(delta) = settings.delta else {
                        bail!("the discrepancy rule needs --delta (or a generate manifest recording --noise)");
                    };
                    diagnostics.discrepancy_threshold = Some(criterion.threshold(delta, u.len()));
                    discrepancy_rule(&kernel, u, delta, &criterion, &ladder)?
                }
            };
            diagnostics.rule_status = Some(t.status.as_str().to_owned());
            diagnostics.ladder_steps = Some(t.steps.len());
            let chosen = t.chosen_reconstruction.clone();
            trace = Some(t);
            chosen
        }
    };

    let values = estimate.values();
    diagnostics.condition = finite(match settings.method {
        MethodArg::Naive => estimate.diagnostics().condition,
        MethodArg::Tikhonov => condition_estimate(&kernel),
    });
    diagnostics.singular = estimate.diagnostics().singular;
    if settings.method == MethodArg::Tikhonov {
        diagnostics.chosen_alpha = Some(estimate.alpha());
    }
    diagnostics.residual_norm = finite(residual_norm(&kernel, values, u, criterion.norm)?);
    diagnostics.relative_error = f_true.as_deref().and_then(|t| relative_error(values, t));

    create_dir(out)?;
    let mut manifest = RunManifest::new(CommandEcho::Reconstruct(settings.clone()));
    let recon_file = format!("reconstruction_{tag}.csv");
    io::write_reconstruction(&out.join(&recon_file), grid.nodes(), values, f_true.as_deref())?;
    manifest.artifacts.push(recon_file);
    if let Some(t) = &trace {
        let trace_file = format!("trace_{tag}.csv");
        io::write_trace(&out.join(&trace_file), &t.steps)?;
        manifest.artifacts.push(trace_file);
    }
    manifest.diagnostics = Some(diagnostics);
    manifest.elapsed_ms = elapsed_ms(start);
    manifest.write(&out.join(format!("manifest_{tag}.json")))?;
    Ok(ReconstructOutcome {
        singular: manifest.diagnostics.as_ref().is_some_and(|d| d.singular),
        manifest,
    })
}

/// Re-runs the command recorded in a manifest into `out`.
pub fn replay(manifest: &RunManifest, out: &Path) -> Result<RunManifest> {
    match &manifest.echo {
        CommandEcho::Generate(g) => generate(g, out),
        CommandEcho::Reconstruct(r) => Ok(reconstruct(r, out)?.manifest),
    }
}

/// Settings shared by the three reconstructions of a pipeline run.
#[derive(Clone, Debug)]
pub struct PipelineSettings {
    pub problem: ProblemSettings,
    pub noise: f64,
    pub reconstruct: ReconstructSettings,
}

#[derive(Clone, Debug)]
pub struct PipelineRow {
    pub scheme: SchemeArg,
    pub tag: &'static str,
    pub diagnostics: Diagnostics,
}

/// Generates, reconstructs (naive, oracle, discrepancy) and reports every
/// scheme into `out/<scheme>/` and `out/figures/`.
pub fn pipeline(settings: &PipelineSettings, out: &Path) -> Result<Vec<PipelineRow>> {
    let mut rows = Vec::new();
    for scheme in SchemeArg::ALL {
        let dir = out.join(scheme.name());
        let problem = ProblemSettings {
            scheme,
            ..settings.problem.clone()
        };
        generate(
            &GenerateSettings {
                problem: problem.clone(),
                noise: settings.noise,
            },
            &dir,
        )?;
        let data = dir.join(MEASUREMENTS_FILE).canonicalize()?;
        let mut runs = vec![(MethodArg::Naive, None), (MethodArg::Tikhonov, Some(RuleArg::Oracle))];
        if settings.noise > 0.0 {
            runs.push((MethodArg::Tikhonov, Some(RuleArg::Discrepancy)));
        } else {
            eprintln!("note: --noise 0, skipping the discrepancy rule");
        }
        for (method, rule) in runs {
            let r = ReconstructSettings {
                problem: problem.clone(),
                data: data.clone(),
                method,
                rule,
                alpha: None,
                delta: Some(settings.noise),
                truth: true,
                ..settings.reconstruct.clone()
            };
            let outcome = reconstruct(&r, &dir)?;
            rows.push(PipelineRow {
                scheme,
                tag: r.tag(),
                diagnostics: outcome.manifest.diagnostics.unwrap_or_default(),
            });
        }
    }
    report(out, &out.join(FIGURES_DIR))?;
    Ok(rows)
}

struct Run {
    name: String,
    dir: PathBuf,
}

fn find_runs(input: &Path) -> Result<Vec<Run>> {
    if !input.is_dir() {
        bail!("{} is not a directory", input.display());
    }
    let mut runs = Vec::new();
    if input.join(MEASUREMENTS_FILE).is_file() {
        let name = input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into());
        runs.push(Run {
            name,
            dir: input.to_path_buf(),
        });
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join(MEASUREMENTS_FILE).is_file())
        .collect();
    subdirs.sort();
    for dir in subdirs {
        let name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        runs.push(Run { name, dir });
    }
    Ok(runs)
}

/// Scheme of a run: from its generate manifest, else from the sample layout.
fn run_scheme(run: &Run, points: &[SamplePoint]) -> Result<SchemeKind> {
    if let Some(g) = sibling_generate_settings(&run.dir.join(MEASUREMENTS_FILE))? {
        return Ok(g.problem.scheme.kind());
    }
    let same = |v: &dyn Fn(&SamplePoint) -> f64| points.iter().all(|p| v(p) == v(&points[0]));
    Ok(if same(&|p| p.x) {
        SchemeKind::FixedPoint
    } else if same(&|p| p.t) {
        SchemeKind::FixedTime
    } else {
        SchemeKind::RandomPoints
    })
}

fn write_figure(
    out: &Path,
    stem: &str,
    rows: &[FigureRow],
    spec: &PlotSpec<'_>,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let csv_path = out.join(format!("{stem}.csv"));
    io::write_figure(&csv_path, rows)?;
    // the SVG is drawn from what was written, not from memory
    let svg = plot::render(&io::read_figure(&csv_path)?, spec)?;
    let svg_path = out.join(format!("{stem}.svg"));
    fs::write(&svg_path, svg).with_context(|| format!("cannot write {}", svg_path.display()))?;
    written.push(csv_path);
    written.push(svg_path);
    Ok(())
}

const RECONSTRUCTION_FIGURES: [(&str, &str, &str); 3] = [
    ("fig2", "naive", "Naive inversion"),
    ("fig3", "oracle", "Tikhonov, alpha by distance to the true source"),
    ("fig4", "discrepancy", "Tikhonov, alpha by the discrepancy principle"),
];

/// Figure bundle: data curves per run (`fig1_*`) and, where the matching
/// reconstruction exists, naive (`fig2_*`), oracle (`fig3_*`) and
/// discrepancy (`fig4_*`) estimates over the true source.
pub fn report(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let runs = find_runs(input)?;
    if runs.is_empty() {
        bail!(
            "no {MEASUREMENTS_FILE} found in {} or its subdirectories",
            input.display()
        );
    }
    create_dir(out)?;
    let mut written = Vec::new();
    for run in &runs {
        let data = io::read_measurements(&run.dir.join(MEASUREMENTS_FILE))?;
        let kind = run_scheme(run, &data.points)?;
        let (x_label, coordinate): (&str, fn(&SamplePoint) -> f64) = match kind {
            SchemeKind::FixedTime => ("x", |p| p.x),
            SchemeKind::FixedPoint | SchemeKind::RandomPoints => ("t", |p| p.t),
        };
        let rows: Vec<FigureRow> = data
            .points
            .iter()
            .zip(&data.values)
            .map(|(p, u)| FigureRow {
                series: "u".into(),
                x: io::number(coordinate(p)),
                y: io::number(*u),
            })
            .collect();
        let title = format!("Measurements, {} ({})", kind.as_str(), run.name);
        let scatter: &[&str] = if kind == SchemeKind::RandomPoints { &["u"] } else { &[] };
        let spec = PlotSpec {
            title: &title,
            x_label,
            y_label: "u",
            scatter,
            reference: &[],
        };
        write_figure(out, &format!("fig1_{}", run.name), &rows, &spec, &mut written)?;

        for (fig, tag, caption) in RECONSTRUCTION_FIGURES {
            let path = run.dir.join(format!("reconstruction_{tag}.csv"));
            if !path.is_file() {
                continue;
            }
            let recon = io::read_reconstruction(&path)?;
            let mut rows: Vec<FigureRow> = recon
                .nodes
                .iter()
                .zip(&recon.f_hat)
                .map(|(s, f)| FigureRow {
                    series: "f_hat".into(),
                    x: io::number(*s),
                    y: io::number(*f),
                })
                .collect();
            if let Some(truth) = &recon.f_true {
                rows.extend(recon.nodes.iter().zip(truth).map(|(s, f)| FigureRow {
                    series: "f_true".into(),
                    x: io::number(*s),
                    y: io::number(*f),
                }));
            }
            let title = format!("{caption} ({})", run.name);
            let spec = PlotSpec {
                title: &title,
                x_label: "s",
                y_label: "f",
                scatter: &[],
                reference: &["f_true"],
            };
            write_figure(out, &format!("{fig}_{}", run.name), &rows, &spec, &mut written)?;
        }
    }
    Ok(written)
}
