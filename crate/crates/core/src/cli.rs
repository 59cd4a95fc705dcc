//! The `dgs` command-line tool.
//!
//! Every subcommand reads manifests, writes its declared artifacts into
//! `--out` and echoes its settings into each JSON report. Exit status is 0 on
//! success, 2 for invalid input and 1 when a computation fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{RunConfig, DEFAULT_POOL_FACTOR};
use crate::dag::kmeans::{DEFAULT_MAX_ITERS, DEFAULT_RESTARTS};
use crate::dag::schedule::{
    DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_STEPS, DEFAULT_TRAIN_STEPS,
};
use crate::dag::{
    cluster_dataset, dag_run, reverse_sample, ClusterParams, DagConfig, GuidanceSpec,
    GuidanceTarget, Mixture, MixtureSource, NoiseSchedule, SigmaKind, DEFAULT_T_STOP,
};
use crate::distribution::{
    histogram, kde_curve, predefined_plan, scale_to_ipc, Bandwidth, DifficultyHistogram,
};
use crate::error::{Error, Result};
use crate::manifest::{check_manifest, load_manifest_as, write_manifest, Manifest, Role};
use crate::metrics::{bias_report, diversity, representativeness, ClassBias, VectorSet};
use crate::plot::{curve_csv, render_svg, slug, Series};
use crate::sampler::{
    dgs_run, DeficitRule, DgsConfig, PlanShape, SamplingPolicy, SamplingReport, Strategy,
};
use crate::smoothing::{
    smooth_dataset, SmoothingReport, ThresholdGrid, DEFAULT_GRID_MAX_PERCENT, DEFAULT_LAMBDA,
};
use crate::synthetic::{generate, FixtureSpec};

#[derive(Debug, Parser)]
#[command(
    name = "dgs",
    version,
    about = "Difficulty-guided sampling for dataset distillation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smoothing weight between staying close to the original histogram (1) and flattening it (0).
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Largest clip size per side, in percent of the class size.
    #[arg(long, default_value_t = DEFAULT_GRID_MAX_PERCENT)]
    pub grid_max_percent: u32,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a manifest and report every problem found.
    Validate { manifest: PathBuf },
    /// Per-class difficulty histograms, and sampling plans with --ipc.
    Dist(DistArgs),
    /// Smooth per-class difficulty distributions.
    Smooth(SmoothArgs),
    /// Sample a distilled dataset from an image pool.
    Sample(SampleArgs),
    /// Representativeness, diversity and difficulty-bias metrics.
    Metrics(MetricsArgs),
    /// Difficulty-aware guidance.
    #[command(subcommand)]
    Dag(DagCommand),
    /// KDE curves and SVG charts of difficulty distributions.
    Plot(PlotArgs),
    /// Write a synthetic original/pool pair with a known difficulty bias.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct DistArgs {
    pub manifest: PathBuf,
    /// Also write per-class sampling plans for this budget.
    #[arg(long)]
    pub ipc: Option<u64>,
    #[arg(long, default_value = "scale")]
    pub shape: PlanShape,
    /// Histogram smoothed difficulties instead of raw ones.
    #[arg(long)]
    pub smoothed: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub ipc: u64,
    #[arg(long, default_value = "scale")]
    pub shape: PlanShape,
    #[arg(long, default_value = "seeded-random")]
    pub strategy: Strategy,
    #[arg(long, default_value = "adjacent-spill")]
    pub deficit_rule: DeficitRule,
    /// Sample on raw difficulties.
    #[arg(long)]
    pub no_smoothing: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub original: PathBuf,
    /// Generated, pooled or distilled manifest to score.
    #[arg(long)]
    pub generated: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum DagCommand {
    /// Cluster each class's latents per difficulty interval.
    Cluster(ClusterArgs),
    /// Run the guided reverse sampler on a Gaussian mixture.
    Simulate(SimulateArgs),
    /// Generate a distilled latent set, one guided run per center.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub ipc: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct GuidanceArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda_gui: f64,
    /// Guidance runs while t >= t_stop; steps + 1 disables it.
    #[arg(long, default_value_t = DEFAULT_T_STOP)]
    pub t_stop: usize,
    /// Number of denoising steps.
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long, default_value = "posterior")]
    pub sigma: SigmaKind,
    #[arg(long, default_value = "predicted")]
    pub target: GuidanceTarget,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Mixture config JSON.
    #[arg(long)]
    pub mixture: PathBuf,
    /// Guidance center as comma-separated coordinates; defaults to the first component mean.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Option<Vec<f64>>,
    /// Number of runs; run i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub samples: u64,
    /// Run without guidance.
    #[arg(long)]
    pub unguided: bool,
    #[command(flatten)]
    pub guidance: GuidanceArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub ipc: u64,
    /// Shared mixture config; by default each class uses its own latents.
    #[arg(long)]
    pub mixture: Option<PathBuf>,
    /// Component std of the per-class empirical mixture.
    #[arg(long, default_value_t = 0.1)]
    pub mixture_std: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[command(flatten)]
    pub guidance: GuidanceArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Add curves of the smoothed distributions.
    #[arg(long)]
    pub smoothed: bool,
    /// Grid points per curve.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Kernel bandwidth; Silverman's rule when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 500)]
    pub per_class: usize,
    #[arg(long, default_value_t = 50)]
    pub ipc: u64,
    #[arg(long, default_value_t = DEFAULT_POOL_FACTOR)]
    pub pool_factor: u64,
    #[arg(long, default_value_t = 0)]
    pub latent_dim: usize,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `args` (program name first) and runs the command, returning the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Validate { manifest } => Ok(cmd_validate(&manifest)),
        Command::Dist(a) => cmd_dist(&a).map(|_| 0),
        Command::Smooth(a) => cmd_smooth(&a).map(|_| 0),
        Command::Sample(a) => cmd_sample(&a).map(|_| 0),
        Command::Metrics(a) => cmd_metrics(&a).map(|_| 0),
        Command::Dag(DagCommand::Cluster(a)) => cmd_dag_cluster(&a).map(|_| 0),
        Command::Dag(DagCommand::Simulate(a)) => cmd_dag_simulate(&a).map(|_| 0),
        Command::Dag(DagCommand::Generate(a)) => cmd_dag_generate(&a).map(|_| 0),
        Command::Plot(a) => cmd_plot(&a).map(|_| 0),
        Command::Fixture(a) => cmd_fixture(&a).map(|_| 0),
    }
}

#[derive(Serialize)]
struct ValidationOutcome<'a> {
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    items: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    latent_dim: Option<usize>,
    errors: &'a [String],
}

fn print_json<T: Serialize>(value: &T) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

/// Prints a JSON verdict on stdout; 0 when valid, 2 otherwise.
pub fn cmd_validate(path: &Path) -> i32 {
    match check_manifest(path, Role::Original) {
        Ok(m) => {
            let outcome = ValidationOutcome {
                valid: true,
                items: Some(m.items.len()),
                classes: Some(m.labels().len()),
                latent_dim: Some(m.latent_dim),
                errors: &[],
            };
            print_json(&outcome);
            0
        }
        Err(errors) => {
            let outcome = ValidationOutcome {
                valid: false,
                items: None,
                classes: None,
                latent_dim: None,
                errors: &errors,
            };
            print_json(&outcome);
            eprintln!("{}: {} problem(s)", path.display(), errors.len());
            2
        }
    }
}

impl Common {
    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::validation(format!(
                "--lambda {} is outside [0, 1]",
                self.lambda
            )));
        }
        ThresholdGrid::percent_steps(self.grid_max_percent, 1)
            .map_err(|e| Error::validation(e.to_string()))?;
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))
    }

    fn grid(&self) -> ThresholdGrid {
        ThresholdGrid::percent_steps(self.grid_max_percent, 1).expect("checked")
    }

    fn config(&self, command: &str) -> RunConfig {
        RunConfig {
            lambda: self.lambda,
            grid_max_percent: self.grid_max_percent,
            seed: self.seed,
            ..RunConfig::new(command)
        }
    }

    fn json_only(&self, command: &str) -> Result<()> {
        if self.format == Format::Csv {
            return Err(Error::validation(format!(
                "`{command}` only writes JSON reports"
            )));
        }
        Ok(())
    }
}

fn load(path: &Path, role: Role) -> Result<Manifest> {
    load_manifest_as(path, role)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::validation(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn histogram_csv(rows: &[DifficultyHistogram]) -> String {
    let mut out = String::from("label,i0,i1,i2,i3,i4,i5,i6,i7,i8,i9,total\n");
    for h in rows {
        let counts: Vec<String> = h.counts.iter().map(u64::to_string).collect();
        writeln!(out, "{},{},{}", h.label, counts.join(","), h.total).expect("string write");
    }
    out
}

fn class_histograms(
    manifest: &Manifest,
    smoothing: Option<&SmoothingReport>,
) -> Result<Vec<DifficultyHistogram>> {
    match smoothing {
        Some(report) => report
            .classes
            .iter()
            .map(|c| histogram(c.label.clone(), c.transformed.iter().copied()))
            .collect(),
        None => manifest
            .by_label()
            .into_iter()
            .map(|(label, items)| histogram(label, items.iter().map(|it| it.difficulty)))
            .collect(),
    }
}

pub fn cmd_dist(a: &DistArgs) -> Result<()> {
    a.common.check()?;
    let manifest = load(&a.manifest, Role::Original)?;
    let smoothing = if a.smoothed {
        Some(smooth_dataset(
            &manifest,
            a.common.lambda,
            &a.common.grid(),
        )?)
    } else {
        None
    };
    let hists = class_histograms(&manifest, smoothing.as_ref())?;
    let mut config = a.common.config("dist");
    config.shape = a.shape.to_string();
    config.ipc = a.ipc;
    config.smoothing = Some(a.smoothed);

    let plans = match a.ipc {
        Some(ipc) => Some(
            hists
                .iter()
                .map(|h| match a.shape {
                    PlanShape::Scale => scale_to_ipc(h, ipc),
                    PlanShape::Predefined(s) => predefined_plan(h.label.clone(), s, ipc),
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };

    match a.common.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                histograms: &'a [DifficultyHistogram],
            }
            write_json(
                &a.common.out.join("histograms.json"),
                &Report {
                    config: &config,
                    body: Body { histograms: &hists },
                },
            )?;
            if let Some(plans) = &plans {
                #[derive(Serialize)]
                struct Plans<'a> {
                    plans: &'a [crate::distribution::SamplingPlan],
                }
                write_json(
                    &a.common.out.join("plans.json"),
                    &Report {
                        config: &config,
                        body: Plans { plans },
                    },
                )?;
            }
        }
        Format::Csv => {
            write_text(&a.common.out.join("histograms.csv"), &histogram_csv(&hists))?;
            if let Some(plans) = &plans {
                let mut out = String::from("label,i0,i1,i2,i3,i4,i5,i6,i7,i8,i9,ipc\n");
                for p in plans {
                    let t: Vec<String> = p.targets.iter().map(u64::to_string).collect();
                    writeln!(out, "{},{},{}", p.label, t.join(","), p.ipc).expect("string write");
                }
                write_text(&a.common.out.join("plans.csv"), &out)?;
            }
        }
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_smooth(a: &SmoothArgs) -> Result<()> {
    a.common.check()?;
    let manifest = load(&a.manifest, Role::Original)?;
    let report = smooth_dataset(&manifest, a.common.lambda, &a.common.grid())?;
    for c in &report.classes {
        if let Some(w) = &c.warning {
            eprintln!("warning: class {:?} {w}", c.label);
        }
    }
    let config = a.common.config("smooth");
    let rows = report.rows();
    match a.common.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                classes: &'a [crate::smoothing::SmoothingRow],
            }
            write_json(
                &a.common.out.join("smoothing_report.json"),
                &Report {
                    config: &config,
                    body: Body { classes: &rows },
                },
            )?;
        }
        Format::Csv => {
            let mut out = String::from(
                "label,b,t,lambda,objective,kl_to_original,kl_to_uniform,degenerate\n",
            );
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.label,
                    r.b,
                    r.t,
                    r.lambda,
                    opt(r.objective),
                    opt(r.kl_to_original),
                    opt(r.kl_to_uniform),
                    r.degenerate
                )
                .expect("string write");
            }
            write_text(&a.common.out.join("smoothing_report.csv"), &out)?;
        }
    }
    write_manifest(
        &report.augment(&manifest)?,
        a.common.out.join("smoothed.jsonl"),
    )
}

pub fn cmd_sample(a: &SampleArgs) -> Result<()> {
    a.common.check()?;
    a.common.json_only("sample")?;
    if a.ipc == 0 {
        return Err(Error::validation("--ipc must be positive"));
    }
    let original = load(&a.original, Role::Original)?;
    let pool = load(&a.pool, Role::Pool)?;
    let config = DgsConfig {
        ipc: a.ipc,
        lambda: a.common.lambda,
        grid: a.common.grid(),
        shape: a.shape,
        templates: Default::default(),
        policy: SamplingPolicy {
            strategy: a.strategy,
            seed: a.common.seed,
            deficit_rule: a.deficit_rule,
        },
        smoothing: !a.no_smoothing,
    };
    let out = dgs_run(&original, &pool, &config)?;
    let mut run = a.common.config("sample");
    run.shape = a.shape.to_string();
    run.ipc = Some(a.ipc);
    run.strategy = Some(a.strategy.to_string());
    run.deficit_rule = Some(a.deficit_rule.to_string());
    run.smoothing = Some(!a.no_smoothing);
    write_manifest(&out.distilled, a.common.out.join("distilled.jsonl"))?;
    write_json::<Report<&SamplingReport>>(
        &a.common.out.join("sampling_report.json"),
        &Report {
            config: &run,
            body: &out.report,
        },
    )
}

#[derive(Serialize)]
struct ScoredItem<'a> {
    id: &'a str,
    label: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct ClassAggregate<'a> {
    label: &'a str,
    aggregate: f64,
}

#[derive(Serialize)]
struct MetricSummary<'a> {
    per_item: Vec<ScoredItem<'a>>,
    aggregate: f64,
    per_class: Vec<ClassAggregate<'a>>,
}

#[derive(Serialize)]
struct MetricsBody<'a> {
    representativeness: Option<MetricSummary<'a>>,
    diversity: Option<MetricSummary<'a>>,
    bias: Vec<ClassBias>,
}

fn fold_summary<'a>(
    parts: Vec<(&'a str, Vec<&'a str>, crate::metrics::ItemScores)>,
    lowest: bool,
) -> MetricSummary<'a> {
    let mut per_item = Vec::new();
    let mut per_class = Vec::new();
    let mut aggregate = if lowest {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    for (label, ids, scores) in parts {
        for (id, value) in ids.into_iter().zip(scores.per_item) {
            per_item.push(ScoredItem { id, label, value });
        }
        aggregate = if lowest {
            aggregate.min(scores.aggregate)
        } else {
            aggregate.max(scores.aggregate)
        };
        per_class.push(ClassAggregate {
            label,
            aggregate: scores.aggregate,
        });
    }
    MetricSummary {
        per_item,
        aggregate,
        per_class,
    }
}

pub fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    a.common.check()?;
    a.common.json_only("metrics")?;
    let original = load(&a.original, Role::Original)?;
    let generated = load(&a.generated, Role::Distilled)?;
    let bias = bias_report(&original, &generated)?;

    let (representativeness_summary, diversity_summary) =
        if original.latent_dim > 0 && generated.latent_dim > 0 {
            let originals = original.by_label();
            let mut rep_parts = Vec::new();
            let mut div_parts = Vec::new();
            for (label, items) in generated.by_label() {
                let ids: Vec<&str> = items.iter().map(|it| it.id.as_str()).collect();
                let gen = VectorSet::from_items(&items)?;
                let memory = VectorSet::from_items(&originals[label])?;
                rep_parts.push((label, ids.clone(), representativeness(&gen, &memory)?));
                if gen.len() >= 2 {
                    div_parts.push((label, ids, diversity(&gen)?));
                }
            }
            (
                Some(fold_summary(rep_parts, true)),
                (!div_parts.is_empty()).then(|| fold_summary(div_parts, false)),
            )
        } else {
            (None, None)
        };

    let config = a.common.config("metrics");
    write_json(
        &a.common.out.join("metrics.json"),
        &Report {
            config: &config,
            body: MetricsBody {
                representativeness: representativeness_summary,
                diversity: diversity_summary,
                bias,
            },
        },
    )
}

impl GuidanceArgs {
    fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::respaced_linear(
            DEFAULT_TRAIN_STEPS,
            self.steps,
            DEFAULT_BETA_START,
            DEFAULT_BETA_END,
        )
        .map_err(|e| Error::validation(format!("--steps: {e}")))
    }

    fn check(&self) -> Result<()> {
        if !(self.lambda_gui >= 0.0 && self.lambda_gui.is_finite()) {
            return Err(Error::validation(format!(
                "--lambda-gui {} must be nonnegative",
                self.lambda_gui
            )));
        }
        if self.t_stop > self.steps + 1 {
            return Err(Error::validation(format!(
                "--t-stop {} exceeds steps + 1",
                self.t_stop
            )));
        }
        Ok(())
    }

    fn annotate(&self, config: &mut RunConfig) {
        config.lambda_gui = Some(self.lambda_gui);
        config.t_stop = Some(self.t_stop);
        config.steps = Some(self.steps);
    }
}

pub fn cmd_dag_cluster(a: &ClusterArgs) -> Result<()> {
    a.common.check()?;
    a.common.json_only("dag cluster")?;
    let original = load(&a.original, Role::Original)?;
    let params = ClusterParams {
        seed: a.common.seed,
        max_iters: a.max_iters,
        restarts: a.restarts,
    };
    let classes = cluster_dataset(&original, a.ipc, &params)?;
    let mut config = a.common.config("dag cluster");
    config.ipc = Some(a.ipc);
    #[derive(Serialize)]
    struct Body<'a> {
        classes: &'a [crate::dag::ClassClusters],
    }
    write_json(
        &a.common.out.join("centers.json"),
        &Report {
            config: &config,
            body: Body { classes: &classes },
        },
    )
}

pub fn cmd_dag_simulate(a: &SimulateArgs) -> Result<()> {
    a.common.check()?;
    a.guidance.check()?;
    let schedule = a.guidance.schedule()?;
    let mixture = Mixture::load(&a.mixture)?;
    let center = a
        .center
        .clone()
        .unwrap_or_else(|| mixture.components[0].mean.clone());
    if center.len() != mixture.dim {
        return Err(Error::validation(format!(
            "--center has {} coordinates, mixture dim is {}",
            center.len(),
            mixture.dim
        )));
    }
    let spec = GuidanceSpec {
        center,
        lambda_gui: a.guidance.lambda_gui,
        t_stop: a.guidance.t_stop,
        sigma: a.guidance.sigma,
        target: a.guidance.target,
    };
    let guidance = (!a.unguided).then_some(&spec);
    let first = reverse_sample(&schedule, &mixture, guidance, a.common.seed)?;
    write_text(&a.common.out.join("trajectory.csv"), &first.to_csv())?;
    if a.samples > 1 {
        let mut out = String::from("sample");
        for i in 0..mixture.dim {
            write!(out, ",z{i}").expect("string write");
        }
        out.push('\n');
        for i in 0..a.samples {
            let run = if i == 0 {
                first.clone()
            } else {
                reverse_sample(&schedule, &mixture, guidance, a.common.seed.wrapping_add(i))?
            };
            write!(out, "{i}").expect("string write");
            for x in run.final_sample() {
                write!(out, ",{x}").expect("string write");
            }
            out.push('\n');
        }
        write_text(&a.common.out.join("samples.csv"), &out)?;
    }
    Ok(())
}

pub fn cmd_dag_generate(a: &GenerateArgs) -> Result<()> {
    a.common.check()?;
    a.common.json_only("dag generate")?;
    a.guidance.check()?;
    let original = load(&a.original, Role::Original)?;
    let mixture = match &a.mixture {
        Some(path) => MixtureSource::Shared(Mixture::load(path)?),
        None => MixtureSource::Empirical { std: a.mixture_std },
    };
    let config = DagConfig {
        ipc: a.ipc,
        lambda_gui: a.guidance.lambda_gui,
        t_stop: a.guidance.t_stop,
        sigma: a.guidance.sigma,
        target: a.guidance.target,
        schedule: a.guidance.schedule()?,
        mixture,
        cluster: ClusterParams {
            seed: a.common.seed,
            max_iters: a.max_iters,
            restarts: a.restarts,
        },
    };
    let out = dag_run(&original, &config)?;
    write_manifest(&out.generated, a.common.out.join("generated.jsonl"))?;
    let mut run = a.common.config("dag generate");
    run.ipc = Some(a.ipc);
    a.guidance.annotate(&mut run);
    #[derive(Serialize)]
    struct Body<'a> {
        classes: &'a [crate::dag::ClassClusters],
    }
    write_json(
        &a.common.out.join("dag_report.json"),
        &Report {
            config: &run,
            body: Body {
                classes: &out.clusters,
            },
        },
    )
}

pub fn cmd_plot(a: &PlotArgs) -> Result<()> {
    a.common.check()?;
    let bandwidth = match a.bandwidth {
        Some(h) if h.is_nan() || h <= 0.0 => {
            return Err(Error::validation(format!(
                "--bandwidth {h} must be positive"
            )))
        }
        Some(h) => Bandwidth::Fixed(h),
        None => Bandwidth::Auto,
    };
    let original = load(&a.original, Role::Original)?;
    let pool = a.pool.as_deref().map(|p| load(p, Role::Pool)).transpose()?;
    if let Some(p) = &pool {
        if p.labels() != original.labels() {
            return Err(Error::validation("original and pool label sets differ"));
        }
    }

    let grid = a.common.grid();
    let mut datasets: Vec<(&str, &str, &Manifest, Option<SmoothingReport>)> =
        vec![("original", "#1f77b4", &original, None)];
    if let Some(p) = &pool {
        datasets.push(("pool", "#d62728", p, None));
    }
    if a.smoothed {
        let mut smoothed = Vec::new();
        for (name, _, m, _) in &datasets {
            let color = if *name == "original" {
                "#2ca02c"
            } else {
                "#ff7f0e"
            };
            let report = smooth_dataset(m, a.common.lambda, &grid)?;
            smoothed.push((
                if *name == "original" {
                    "original_smoothed"
                } else {
                    "pool_smoothed"
                },
                color,
                *m,
                Some(report),
            ));
        }
        datasets.extend(smoothed);
    }

    #[derive(Serialize)]
    struct ClassFiles {
        label: String,
        svg: String,
        curves: Vec<String>,
    }
    let mut index = Vec::new();
    for (i, label) in original.labels().iter().enumerate() {
        let stem = format!("{i:03}_{}", slug(label));
        let mut hists = Vec::new();
        let mut curves = Vec::new();
        let mut files = Vec::new();
        for (name, _, manifest, smoothing) in &datasets {
            let values: Vec<f64> = match smoothing {
                Some(r) => r.class(label).expect("same labels").transformed.clone(),
                None => manifest
                    .class_items(label)
                    .iter()
                    .map(|it| it.difficulty)
                    .collect(),
            };
            let curve = kde_curve(&values, bandwidth, a.points)?;
            let file = format!("{stem}_{name}.csv");
            write_text(&a.common.out.join(&file), &curve_csv(&curve))?;
            files.push(file);
            hists.push(histogram(label.clone(), values)?);
            curves.push(curve);
        }
        let series: Vec<Series> = datasets
            .iter()
            .zip(hists.iter().zip(&curves))
            .map(|((name, color, _, _), (h, c))| Series {
                name,
                color,
                histogram: h,
                curve: c,
            })
            .collect();
        let svg = format!("{stem}.svg");
        write_text(&a.common.out.join(&svg), &render_svg(label, &series))?;
        index.push(ClassFiles {
            label: label.clone(),
            svg,
            curves: files,
        });
    }
    let config = a.common.config("plot");
    #[derive(Serialize)]
    struct Body {
        classes: Vec<ClassFiles>,
    }
    write_json(
        &a.common.out.join("plot_index.json"),
        &Report {
            config: &config,
            body: Body { classes: index },
        },
    )
}

pub fn cmd_fixture(a: &FixtureArgs) -> Result<()> {
    a.common.check()?;
    a.common.json_only("fixture")?;
    let spec = FixtureSpec {
        classes: a.classes,
        original_per_class: a.per_class,
        ipc: a.ipc,
        pool_factor: a.pool_factor,
        latent_dim: a.latent_dim,
        seed: a.common.seed,
        ..FixtureSpec::default()
    };
    let fixture = generate(&spec).map_err(|e| Error::validation(e.to_string()))?;
    write_manifest(&fixture.original, a.common.out.join("original.jsonl"))?;
    write_manifest(&fixture.pool, a.common.out.join("pool.jsonl"))?;
    let mut config = a.common.config("fixture");
    config.ipc = Some(a.ipc);
    config.pool_factor = a.pool_factor;
    write_json(
        &a.common.out.join("truth.json"),
        &Report {
            config: &config,
            body: &fixture.truth,
        },
    )
}
