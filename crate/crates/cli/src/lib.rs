//! Argument parsing and subcommands of the `chebslide` binary.

use std::fs;
use std::path::{Path, PathBuf};

use chebslide::demo::{self, DemoFixture};
use chebslide::risk::{generate_synthetic_history, write_pnl_csv, ScenarioSet, SyntheticSpec, BASE_HORIZON};
use chebslide::workflow::{sweep, write_sweep_csv, Experiment, PcaDims, RunSettings};
use chebslide::{Error, Market, Portfolio, Result, ShockedPricer, SliderDocument};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "chebslide", version, about = "Expected shortfall by full revaluation and by orthogonal Chebyshev sliders")]
pub struct Cli {
    /// Worker threads for scenario evaluation (0 = all cores).
    #[arg(long, global = true, env = "CHEBSLIDE_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Brute force vs. slider on one configuration; writes report.json.
    Run(RunArgs),
    /// One row per (PCA dims, slider tuple) pair; writes sweep.csv.
    Sweep(SweepArgs),
    /// Rolling mean/variance ratios of slider to brute P&L; writes backtest.csv.
    Backtest(BacktestArgs),
    /// Runs a built-in demo, or writes its fixture files.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Portfolio JSON.
    #[arg(long, requires = "market", conflicts_with = "demo")]
    pub portfolio: Option<PathBuf>,
    /// Market JSON (curves and optional vol surface).
    #[arg(long, requires = "portfolio", conflicts_with = "demo")]
    pub market: Option<PathBuf>,
    /// Scenario CSV: `label` column then one column per risk factor.
    #[arg(long, conflicts_with_all = ["synthetic", "demo"])]
    pub scenarios: Option<PathBuf>,
    /// Synthetic history spec JSON, used with --seed.
    #[arg(long, conflicts_with = "demo")]
    pub synthetic: Option<PathBuf>,
    /// Seed for synthetic histories.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use a built-in demo book and shock model (swaps, swaptions).
    #[arg(long)]
    pub demo: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SurrogateArgs {
    /// Kept PCA components: a total (split rates/vols) or `rates=K,vols=K`.
    #[arg(long, default_value = "3")]
    pub pca: String,
    /// Slider tuple, e.g. `1x3`, `3,1x17` or `1x*` to fill the PCA dimension.
    #[arg(long, default_value = "1x*")]
    pub slider: String,
    /// Chebyshev points per dimension.
    #[arg(long, default_value_t = chebslide::slider::DEFAULT_POINTS_PER_DIM)]
    pub points: usize,
    /// ES confidence level.
    #[arg(long, default_value_t = chebslide::risk::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Comma-separated liquidity horizons (10d, 60d).
    #[arg(long, default_value = BASE_HORIZON, value_delimiter = ',')]
    pub horizons: Vec<String>,
    /// Also write per-scenario P&L (brute, PCA-repriced, slider) CSVs.
    #[arg(long)]
    pub diagnostic: bool,
    /// Build one slider per trade instead of one for the portfolio.
    #[arg(long)]
    pub per_trade: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub surrogate: SurrogateArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub surrogate: SurrogateArgs,
    /// Semicolon-separated PCA dimensions, e.g. `3;5;10;20`.
    #[arg(long, default_value = "3;5;10;20")]
    pub dims: String,
    /// Semicolon-separated slider tuples.
    #[arg(long, default_value = "1x*;2,1x*;3,1x*")]
    pub tuples: String,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub surrogate: SurrogateArgs,
    /// Rolling window length in scenarios.
    #[arg(long, default_value_t = 250)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Demo name: swaps or swaptions.
    pub name: String,
    /// Write market.json, portfolio.json and synthetic.json here and exit.
    #[arg(long)]
    pub write_fixtures: Option<PathBuf>,
    /// Override the demo's PCA dimension.
    #[arg(long)]
    pub pca: Option<String>,
    /// Override the demo's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub diagnostic: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Machine-readable error printed on stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

pub fn error_json(err: &Error) -> String {
    let report = ErrorReport {
        kind: err.kind().to_string(),
        message: err.to_string(),
        exit_code: exit_code(err),
    };
    serde_json::json!({ "error": report }).to_string()
}

/// Sets the size of the global scenario-evaluation pool. Only the first
/// call in a process has an effect.
pub fn configure_threads(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(&a.input, &a.surrogate),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Backtest(a) => cmd_backtest(a),
        Command::Demo(a) => cmd_demo(a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Configuration(format!("cannot read {what} '{}': {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loaded book and history, ready to become an [`Experiment`].
pub struct Inputs {
    pub pricer: ShockedPricer,
    pub scenarios: ScenarioSet,
    pub seed: Option<u64>,
    pub source: String,
}

fn synthetic_inputs(portfolio: Portfolio, market: Market, spec: &SyntheticSpec, seed: u64, source: String) -> Result<Inputs> {
    let pricer = ShockedPricer::new(portfolio, market)?;
    let scenarios = generate_synthetic_history(spec, seed)?;
    Ok(Inputs { pricer, scenarios, seed: Some(seed), source })
}

pub fn load_inputs(a: &InputArgs) -> Result<Inputs> {
    if let Some(name) = &a.demo {
        let f = demo::fixture(name)?;
        let seed = a.seed.unwrap_or(f.seed);
        return synthetic_inputs(f.portfolio, f.market, &f.synthetic, seed, format!("demo:{name}"));
    }
    let (Some(pp), Some(mp)) = (&a.portfolio, &a.market) else {
        return Err(Error::Configuration("give --portfolio and --market, or --demo".into()));
    };
    let portfolio = Portfolio::from_json(
        &fs::read_to_string(pp)
            .map_err(|e| Error::Configuration(format!("cannot read portfolio '{}': {e}", pp.display())))?,
    )?;
    let market = Market::from_json(
        &fs::read_to_string(mp)
            .map_err(|e| Error::Configuration(format!("cannot read market '{}': {e}", mp.display())))?,
    )?;
    match (&a.scenarios, &a.synthetic) {
        (Some(path), None) => {
            let file = fs::File::open(path)
                .map_err(|e| Error::Configuration(format!("cannot read scenarios '{}': {e}", path.display())))?;
            let scenarios = ScenarioSet::read_csv(file, BASE_HORIZON)?;
            let pricer = ShockedPricer::new(portfolio, market)?;
            Ok(Inputs { pricer, scenarios, seed: None, source: format!("csv:{}", file_name(path)) })
        }
        (None, Some(path)) => {
            let spec: SyntheticSpec = read_json(path, "synthetic spec")?;
            let seed = a
                .seed
                .ok_or_else(|| Error::Configuration("--synthetic needs --seed".into()))?;
            synthetic_inputs(portfolio, market, &spec, seed, format!("synthetic:{}", file_name(path)))
        }
        _ => Err(Error::Configuration("give exactly one of --scenarios or --synthetic".into())),
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn settings(s: &SurrogateArgs) -> Result<RunSettings> {
    Ok(RunSettings {
        pca: s.pca.parse()?,
        slider: s.slider.clone(),
        points: s.points,
        alpha: s.alpha,
        horizons: s.horizons.iter().map(|h| h.trim().to_string()).collect(),
        diagnostic: s.diagnostic,
        per_trade: s.per_trade,
    })
}

fn experiment(inputs: Inputs, horizons: &[String]) -> Result<Experiment> {
    Experiment::new(inputs.pricer, inputs.scenarios, horizons, inputs.seed, &inputs.source)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Configuration(format!("cannot create output directory '{}': {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn run_and_write(exp: &Experiment, settings: &RunSettings, out: &Path) -> Result<()> {
    prepare_out(out)?;
    let result = exp.run(settings)?;
    write_json(&out.join("report.json"), &result.report)?;
    if let [slider] = result.sliders.as_slice() {
        SliderDocument::new(slider.clone(), exp.pricer().factor_names()).save(&out.join("slider.json"))?;
    }
    for d in &result.diagnostics {
        let file = fs::File::create(out.join(format!("pnl_{}.csv", d.horizon)))?;
        write_pnl_csv(file, &d.labels, &d.columns())?;
    }
    Ok(())
}

pub fn cmd_run(input: &InputArgs, surrogate: &SurrogateArgs) -> Result<()> {
    let settings = settings(surrogate)?;
    let exp = experiment(load_inputs(input)?, &settings.horizons)?;
    run_and_write(&exp, &settings, &surrogate.out)
}

fn split_list(s: &str) -> Vec<String> {
    s.split(';').map(str::trim).filter(|t| !t.is_empty()).map(str::to_string).collect()
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let base = settings(&a.surrogate)?;
    let dims = split_list(&a.dims)
        .iter()
        .map(|d| d.parse::<PcaDims>())
        .collect::<Result<Vec<_>>>()?;
    let tuples = split_list(&a.tuples);
    if dims.is_empty() || tuples.is_empty() {
        return Err(Error::Configuration("sweep needs at least one dimension and one tuple".into()));
    }
    let exp = experiment(load_inputs(&a.input)?, &base.horizons)?;
    let rows = sweep(&exp, &base, &dims, &tuples);
    prepare_out(&a.surrogate.out)?;
    write_sweep_csv(fs::File::create(a.surrogate.out.join("sweep.csv"))?, &rows)
}

pub fn cmd_backtest(a: &BacktestArgs) -> Result<()> {
    let settings = settings(&a.surrogate)?;
    let inputs = load_inputs(&a.input)?;
    if a.window == 0 || a.window > inputs.scenarios.len() {
        return Err(Error::Configuration(format!(
            "backtest window {} must lie in 1..={}",
            a.window,
            inputs.scenarios.len()
        )));
    }
    let exp = experiment(inputs, &[BASE_HORIZON.to_string()])?;
    let series = exp.backtest(&settings, a.window)?;
    prepare_out(&a.surrogate.out)?;
    series.write_csv(fs::File::create(a.surrogate.out.join("backtest.csv"))?)
}

/// Writes the three fixture files of a demo.
pub fn write_fixtures(f: &DemoFixture, dir: &Path) -> Result<()> {
    prepare_out(dir)?;
    write_json(&dir.join("market.json"), &f.market)?;
    write_json(&dir.join("portfolio.json"), &f.portfolio)?;
    write_json(&dir.join("synthetic.json"), &f.synthetic)
}

pub fn cmd_demo(a: &DemoArgs) -> Result<()> {
    let f = demo::fixture(&a.name)?;
    if let Some(dir) = &a.write_fixtures {
        return write_fixtures(&f, dir);
    }
    let settings = RunSettings {
        pca: a.pca.as_deref().unwrap_or(&f.pca).parse()?,
        horizons: f.horizons.clone(),
        diagnostic: a.diagnostic,
        ..RunSettings::default()
    };
    let seed = a.seed.unwrap_or(f.seed);
    let inputs = synthetic_inputs(f.portfolio, f.market, &f.synthetic, seed, format!("demo:{}", a.name))?;
    let exp = experiment(inputs, &settings.horizons)?;
    run_and_write(&exp, &settings, &a.out)
}
