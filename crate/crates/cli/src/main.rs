//! `rrzip` command-line front end.
//!
//! Exit status: 0 on success, 1 on input or configuration errors, 2 when the
//! optimizer did not converge (the partial report is still written).

mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rrzip::design::{build_q_matrix, mom_prevalence, RRDesign};
use rrzip::diagnostics::{self, Binning, DiagnosticsReport};
use rrzip::distributions::poisson_approx_report;
use rrzip::simulation::{self, SimScenario};
use rrzip::{fit, DataFormat, Dataset, DesignConfig, Error, FitOptions, FitResult, ModelKind, ModelSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "rrzip", version, about = "Zero-inflated Poisson randomized-response models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and report estimates and summary diagnostics.
    Fit(FitArgs),
    /// Fit a model and add residual grids and effect sizes.
    Diagnose(DiagnoseArgs),
    /// Generate a synthetic dataset or run a parameter-recovery study.
    Simulate(SimulateArgs),
    /// Compare the exact sum-score distribution with its Poisson approximation.
    ApproxCheck(ApproxArgs),
}

#[derive(Args, Clone)]
struct EstimationArgs {
    #[arg(long)]
    tol_grad: Option<f64>,
    #[arg(long)]
    tol_step: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    max_starts: Option<usize>,
    #[arg(long)]
    rel_step: Option<f64>,
    #[arg(long)]
    hessian_rel_step: Option<f64>,
    /// Seed for restart perturbations and simulation.
    #[arg(long, env = "RRZIP_SEED")]
    seed: Option<u64>,
}

impl EstimationArgs {
    fn options(&self) -> FitOptions {
        let mut o = FitOptions::default();
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { o.$f = v; })* };
        }
        set!(tol_grad, tol_step, max_iter, max_starts, rel_step, hessian_rel_step, seed);
        o
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Directory for report files (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report on stdout instead of the text report.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Clone)]
struct FitArgs {
    /// Design JSON: {p_yes_given_1, p_yes_given_0, m_items} or {dice: {force_yes, force_no}, m_items}.
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "freq")]
    format: DataFormat,
    #[arg(long)]
    model: ModelKind,
    /// Rate predictors; `col` for numeric, `col=level` for a dummy.
    #[arg(long, value_delimiter = ',')]
    x: Vec<String>,
    /// Self-protection predictors.
    #[arg(long, value_delimiter = ',')]
    z: Vec<String>,
    #[command(flatten)]
    estimation: EstimationArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    fit: FitArgs,
    /// Predictors for residual grids (default: every model predictor).
    #[arg(long, value_delimiter = ',')]
    residuals: Vec<String>,
    /// Sum scores pooled into one residual column, e.g. `4,5`. Repeatable.
    #[arg(long)]
    collapse: Vec<String>,
    /// `qN` for N quantile bins or a comma list of cut points. Predictors with
    /// at most ten distinct values use one row per value by default.
    #[arg(long)]
    bins: Option<String>,
    /// Report empty predictor categories instead of failing.
    #[arg(long)]
    allow_empty_cells: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Run a recovery study with this many replicates instead of writing one
    /// dataset.
    #[arg(long)]
    replicates: Option<usize>,
    #[command(flatten)]
    estimation: EstimationArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ApproxArgs {
    /// Comma-separated item prevalences.
    #[arg(long, value_delimiter = ',', conflicts_with = "items")]
    prevalences: Vec<f64>,
    /// JSON with `yes_counts` and `n` (needs --design), or `prevalences`.
    #[arg(long)]
    items: Option<PathBuf>,
    #[arg(long)]
    design: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Configuration echoed into every report.
#[derive(Debug, Clone, Serialize)]
struct ResolvedConfig {
    command: &'static str,
    design_file: PathBuf,
    design: RRDesign,
    data_file: PathBuf,
    format: DataFormat,
    model: ModelKind,
    x: Vec<String>,
    z: Vec<String>,
    options: FitOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnose: Option<DiagnoseConfig>,
}

#[derive(Debug, Clone, Serialize)]
struct DiagnoseConfig {
    residuals: Vec<String>,
    collapse: Vec<Vec<usize>>,
    bins: Option<String>,
    allow_empty_cells: bool,
}

#[derive(Debug, Serialize)]
struct FitReport {
    schema_version: u32,
    config: ResolvedConfig,
    converged: bool,
    fit: FitResult,
    diagnostics: Option<DiagnosticsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics_error: Option<String>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_outputs(out: &OutputArgs, stem: &str, json: &str, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = &out.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join(format!("{stem}.json")), json)?;
        fs::write(dir.join(format!("{stem}.txt")), text)?;
    }
    if out.json {
        println!("{json}");
    } else {
        print!("{text}");
    }
    Ok(())
}

fn parse_collapse(groups: &[String]) -> anyhow::Result<Vec<Vec<usize>>> {
    groups
        .iter()
        .map(|g| {
            g.split(',')
                .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad --collapse cell `{s}`")))
                .collect()
        })
        .collect()
}

fn parse_bins(spec: &str) -> anyhow::Result<Binning> {
    if let Some(n) = spec.strip_prefix('q') {
        let n: usize = n.parse().with_context(|| format!("bad quantile count in --bins `{spec}`"))?;
        if n == 0 {
            bail!("--bins needs at least one quantile bin");
        }
        return Ok(Binning::Quantiles(n));
    }
    let cuts = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad cut point `{s}`")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(Binning::Cuts(cuts))
}

struct Prepared {
    config: ResolvedConfig,
    dataset: Dataset,
    spec: ModelSpec,
}

fn prepare(args: &FitArgs, command: &'static str) -> anyhow::Result<Prepared> {
    let design_cfg: DesignConfig = read_json(&args.design)?;
    let dataset = Dataset::read(&args.data, args.format).with_context(|| format!("reading {}", args.data.display()))?;
    let design = design_cfg.resolve(dataset.item_count)?;
    if let Some(items) = dataset.item_count {
        if items != design.m_items() {
            bail!("data has {items} item columns but the design has m_items = {}", design.m_items());
        }
    }
    let spec = ModelSpec::new(args.model, design, args.x.clone(), args.z.clone())?;
    Ok(Prepared {
        config: ResolvedConfig {
            command,
            design_file: args.design.clone(),
            design,
            data_file: args.data.clone(),
            format: args.format,
            model: args.model,
            x: args.x.clone(),
            z: args.z.clone(),
            options: args.estimation.options(),
            diagnose: None,
        },
        dataset,
        spec,
    })
}

/// Fits and builds the report. `Ok(false)` means the optimizer did not
/// converge and the report holds the partial fit.
fn run_fit(args: &FitArgs, diag: Option<&DiagnoseArgs>) -> anyhow::Result<bool> {
    let command = if diag.is_some() { "diagnose" } else { "fit" };
    let mut p = prepare(args, command)?;
    let observations = p.dataset.observations(&p.spec)?;
    let q = build_q_matrix(&p.spec.design);
    let opts = p.config.options;

    let (fit, converged) = match fit(&p.spec, &observations, &q, &opts) {
        Ok(f) => (f, true),
        Err(Error::NonConvergence { partial, .. }) => (*partial, false),
        Err(e) => return Err(e.into()),
    };

    let mut predictor_sds = BTreeMap::new();
    for name in p.spec.lambda_predictors.iter().chain(&p.spec.sp_predictors) {
        let values = p.dataset.predictor(&name.parse()?)?;
        predictor_sds.insert(name.clone(), rrzip::data::sample_sd(&values));
    }

    let mut diagnostics_error = None;
    let mut diagnostics = match DiagnosticsReport::build(&fit, &observations, &predictor_sds) {
        Ok(d) => Some(d),
        Err(e) => {
            diagnostics_error = Some(e.to_string());
            None
        }
    };

    if let Some(d) = diag {
        let collapse = parse_collapse(&d.collapse)?;
        let binning = d.bins.as_deref().map(parse_bins).transpose()?;
        let mut names = d.residuals.clone();
        if names.is_empty() {
            for n in p.spec.lambda_predictors.iter().chain(&p.spec.sp_predictors) {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        let mut grids = Vec::new();
        if names.is_empty() {
            let values = vec![1.0; observations.len()];
            grids.push(diagnostics::residuals_by_predictor(
                &fit,
                &observations,
                "all",
                &values,
                &Binning::Levels(vec![1.0]),
                &collapse,
                d.allow_empty_cells,
            )?);
        }
        for name in &names {
            let values = p.dataset.predictor(&name.parse()?)?;
            let b = binning.clone().unwrap_or_else(|| diagnostics::default_binning(&values));
            grids.push(diagnostics::residuals_by_predictor(
                &fit,
                &observations,
                name,
                &values,
                &b,
                &collapse,
                d.allow_empty_cells,
            )?);
        }
        if let (Some(out), true) = (&args.output.out, !grids.is_empty()) {
            fs::create_dir_all(out)?;
            for g in &grids {
                let file = fs::File::create(out.join(format!("residuals_{}.csv", sanitize(&g.predictor))))?;
                g.write_csv(file)?;
            }
        }
        if let Some(rep) = diagnostics.as_mut() {
            rep.residuals = grids;
        }
        p.config.diagnose = Some(DiagnoseConfig {
            residuals: names,
            collapse,
            bins: d.bins.clone(),
            allow_empty_cells: d.allow_empty_cells,
        });
    }

    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        config: p.config,
        converged,
        fit,
        diagnostics,
        diagnostics_error,
    };
    let json = serde_json::to_string_pretty(&report)?;
    let text = report::fit_text(&report.fit, report.diagnostics.as_ref(), converged);
    write_outputs(&args.output, command, &json, &text)?;
    if !converged {
        eprintln!("warning: optimizer did not converge; partial report written");
    }
    Ok(converged)
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

#[derive(Serialize)]
struct SimulateReport<'a, T: Serialize> {
    schema_version: u32,
    scenario: &'a SimScenario,
    options: &'a FitOptions,
    replicates: usize,
    summary: T,
}

fn run_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let mut scenario: SimScenario = read_json(&args.scenario)?;
    if let Some(seed) = args.estimation.seed {
        scenario.seed = seed;
    }
    let opts = args.estimation.options();
    match args.replicates {
        None => {
            let data = simulation::generate(&scenario)?;
            match &args.output.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    data.dataset.write_individual_csv(fs::File::create(dir.join("data.csv"))?)?;
                    let truth = serde_json::to_string_pretty(&serde_json::json!({
                        "schema_version": SCHEMA_VERSION,
                        "scenario": &scenario,
                        "truth": &data.truth,
                    }))?;
                    fs::write(dir.join("truth.json"), truth)?;
                    eprintln!("wrote {} respondents to {}", scenario.n, dir.join("data.csv").display());
                }
                None => data.dataset.write_individual_csv(std::io::stdout().lock())?,
            }
        }
        Some(reps) => {
            let summary = simulation::recovery_study(&scenario, reps, &opts)?;
            let report = SimulateReport {
                schema_version: SCHEMA_VERSION,
                scenario: &scenario,
                options: &opts,
                replicates: reps,
                summary: &summary,
            };
            let json = serde_json::to_string_pretty(&report)?;
            write_outputs(&args.output, "recovery", &json, &summary.to_table())?;
        }
    }
    Ok(())
}

#[derive(serde::Deserialize)]
struct ItemFile {
    #[serde(default)]
    yes_counts: Option<Vec<u64>>,
    #[serde(default)]
    n: Option<u64>,
    #[serde(default)]
    prevalences: Option<Vec<f64>>,
}

fn run_approx(args: &ApproxArgs) -> anyhow::Result<()> {
    let mut mom = None;
    let prevalences = match &args.items {
        None if args.prevalences.is_empty() => bail!("give --prevalences or --items"),
        None => args.prevalences.clone(),
        Some(path) => {
            let items: ItemFile = read_json(path)?;
            match (&items.yes_counts, items.n, &args.design) {
                (Some(counts), Some(n), Some(design_path)) => {
                    let cfg: DesignConfig = read_json(design_path)?;
                    let design = cfg.resolve(Some(counts.len()))?;
                    let est = counts
                        .iter()
                        .map(|&y| mom_prevalence(y, n, &design))
                        .collect::<Result<Vec<_>, _>>()?;
                    let p = est.iter().map(|e| e.estimate).collect();
                    mom = Some(est);
                    p
                }
                _ => items
                    .prevalences
                    .context("item file needs `prevalences`, or `yes_counts` and `n` with --design")?,
            }
        }
    };
    let rep = poisson_approx_report(&prevalences)?;
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "prevalences": &prevalences,
        "moment_estimates": &mom,
        "report": &rep,
    }))?;
    write_outputs(&args.output, "approx", &json, &report::approx_text(&prevalences, mom.as_deref(), &rep))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(a) => run_fit(a, None),
        Command::Diagnose(d) => run_fit(&d.fit, Some(d)),
        Command::Simulate(a) => run_simulate(a).map(|_| true),
        Command::ApproxCheck(a) => run_approx(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
