//! Brute force against orthogonal sliders, end to end: revalue a book on a
//! shock history, build the surrogate once on the 10-day shocks, and compare
//! ES across liquidity horizons.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cheb1d::Evaluation;
use crate::error::{Error, Result};
use crate::orthopca::{OrthogonalSlider, PcaBlock, PcaBlockSpec, ReducedSpace};
use crate::pricers::{Pricer, RiskFactor, ShockedPricer};
use crate::risk::{
    apply_liquidity_horizon, pnl_from_values, revalue, rolling_ratio_backtest, CallAccounting,
    EsReport, PnlDistribution, PnlSource, RatioBacktestSeries, ReportEcho, ScenarioSet,
    BASE_HORIZON,
};
use crate::slider::{SliderConfig, DEFAULT_POINTS_PER_DIM};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Which factors a liquidity horizon shocks. `10d` shocks everything;
/// `60d` shocks vols only, with rates held at the base shock.
pub fn horizon_factors(tag: &str, factors: &[RiskFactor]) -> Result<Vec<String>> {
    let pick = |keep: fn(&RiskFactor) -> bool| {
        factors.iter().filter(|f| keep(f)).map(|f| f.name.clone()).collect()
    };
    match tag {
        "10d" => Ok(pick(|_| true)),
        "60d" => Ok(pick(RiskFactor::is_vol)),
        _ => Err(Error::Configuration(format!(
            "unknown liquidity horizon '{tag}' (expected 10d or 60d)"
        ))),
    }
}

/// Kept PCA components: a total split over the rate and vol blocks, or an
/// explicit count per block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PcaDims {
    Total(usize),
    PerBlock(Vec<(String, usize)>),
}

impl FromStr for PcaDims {
    type Err = Error;

    /// `20` or `rates=10,vols=10`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Configuration(format!("cannot parse PCA dimensions '{s}'"));
        if let Ok(k) = s.trim().parse() {
            return Ok(PcaDims::Total(k));
        }
        s.split(',')
            .map(|part| {
                let (name, k) = part.split_once('=').ok_or_else(bad)?;
                Ok((name.trim().to_string(), k.trim().parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>>>()
            .map(PcaDims::PerBlock)
    }
}

impl std::fmt::Display for PcaDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PcaDims::Total(k) => write!(f, "{k}"),
            PcaDims::PerBlock(v) => {
                let parts: Vec<String> = v.iter().map(|(n, k)| format!("{n}={k}")).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// PCA blocks `rates` and `vols` (when present). A total is split with the
/// larger half going to rates.
pub fn pca_blocks(dims: &PcaDims, factors: &[RiskFactor]) -> Result<PcaBlockSpec> {
    let indices = |keep: fn(&RiskFactor) -> bool| -> Vec<usize> {
        factors.iter().enumerate().filter(|(_, f)| keep(f)).map(|(i, _)| i).collect()
    };
    let groups: Vec<(&str, Vec<usize>)> = [("rates", indices(RiskFactor::is_rate)), ("vols", indices(RiskFactor::is_vol))]
        .into_iter()
        .filter(|(_, ix)| !ix.is_empty())
        .collect();
    let ks: Vec<usize> = match dims {
        PcaDims::Total(k) => {
            if *k < groups.len() {
                return Err(Error::Configuration(format!(
                    "PCA dimension {k} cannot cover {} factor blocks",
                    groups.len()
                )));
            }
            let first = k - k / groups.len() * (groups.len() - 1);
            (0..groups.len()).map(|i| if i == 0 { first } else { k / groups.len() }).collect()
        }
        PcaDims::PerBlock(v) => {
            let mut ks = Vec::new();
            for (name, _) in &groups {
                let k = v.iter().find(|(n, _)| n == name).map(|(_, k)| *k).ok_or_else(|| {
                    Error::Configuration(format!("no PCA dimension given for block '{name}'"))
                })?;
                ks.push(k);
            }
            if let Some((n, _)) = v.iter().find(|(n, _)| !groups.iter().any(|(g, _)| g == n)) {
                return Err(Error::Configuration(format!("unknown PCA block '{n}'")));
            }
            ks
        }
    };
    Ok(PcaBlockSpec::new(
        groups
            .into_iter()
            .zip(ks)
            .map(|((name, indices), k)| PcaBlock {
                name: name.to_string(),
                indices,
                k,
            })
            .collect(),
    ))
}

/// Surrogate settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub pca: PcaDims,
    /// Slider tuple; a `*` repeat fills up to the PCA dimension.
    pub slider: String,
    pub points: usize,
    pub alpha: f64,
    pub horizons: Vec<String>,
    /// Also reprice `T⁻¹(T(x))` to separate PCA from interpolation error.
    pub diagnostic: bool,
    /// One slider per trade instead of one for the portfolio.
    pub per_trade: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            pca: PcaDims::Total(3),
            slider: "1x*".into(),
            points: DEFAULT_POINTS_PER_DIM,
            alpha: crate::risk::DEFAULT_ALPHA,
            horizons: vec![BASE_HORIZON.to_string()],
            diagnostic: false,
            per_trade: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEcho {
    pub name: String,
    pub factors: usize,
    pub k: usize,
    pub explained_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub scenario_source: String,
    pub factor_count: usize,
    pub trade_count: usize,
    pub pca_blocks: Vec<BlockEcho>,
    pub slider_config: String,
    pub points_per_dim: usize,
    pub alpha: f64,
    pub per_trade: bool,
    /// `portfolio` or `trade`: the unit the call counts are in.
    pub call_unit: String,
    pub base_value: f64,
    pub build_calls: u64,
    pub diagnostic_calls: u64,
    pub vol_floor_events: u64,
    pub horizons: Vec<EsReport>,
}

/// Per-scenario P&L of every evaluator for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonDiagnostic {
    pub horizon: String,
    pub labels: Vec<String>,
    pub brute: PnlDistribution,
    pub pca_repriced: Option<PnlDistribution>,
    pub slider: PnlDistribution,
}

impl HorizonDiagnostic {
    pub fn columns(&self) -> Vec<&PnlDistribution> {
        let mut c = vec![&self.brute];
        c.extend(self.pca_repriced.as_ref());
        c.push(&self.slider);
        c
    }
}

pub struct RunOutput {
    pub report: RunReport,
    pub sliders: Vec<OrthogonalSlider>,
    pub diagnostics: Vec<HorizonDiagnostic>,
}

struct BruteHorizon {
    tag: String,
    scenarios: ScenarioSet,
    pnl: PnlDistribution,
}

/// A book, its shock history and cached full revaluations, shared by every
/// surrogate configuration tried against it.
pub struct Experiment {
    pricer: ShockedPricer,
    scenarios: ScenarioSet,
    base_shock: Vec<f64>,
    seed: Option<u64>,
    source: String,
    base_value: f64,
    brute: Vec<BruteHorizon>,
    brute_calls: u64,
}

impl Experiment {
    /// Revalues the book on every scenario of every horizon. The scenario
    /// factors must match the pricer's factors name for name.
    pub fn new(
        pricer: ShockedPricer,
        scenarios: ScenarioSet,
        horizons: &[String],
        seed: Option<u64>,
        source: &str,
    ) -> Result<Self> {
        scenarios.validate()?;
        let names = pricer.factor_names();
        if scenarios.factor_names != names {
            return Err(Error::Configuration(format!(
                "scenario factors do not match the market's {} risk factors",
                names.len()
            )));
        }
        if horizons.is_empty() {
            return Err(Error::Configuration("no liquidity horizons requested".into()));
        }
        let base_shock = vec![0.0; names.len()];
        let base_value = pricer.price(&base_shock)?;
        let mut brute = Vec::new();
        let mut brute_calls = 0;
        for tag in horizons {
            if brute.iter().any(|b: &BruteHorizon| &b.tag == tag) {
                return Err(Error::Configuration(format!("horizon '{tag}' requested twice")));
            }
            let shocked = horizon_factors(tag, pricer.factors())?;
            let scen = apply_liquidity_horizon(&scenarios, &shocked, &base_shock, tag)?;
            let before = pricer.portfolio_calls();
            let values = revalue(|x| pricer.price(x), &scen)?;
            let spent = pricer.portfolio_calls() - before;
            debug_assert_eq!(spent, scen.len() as u64);
            brute_calls = spent;
            brute.push(BruteHorizon {
                tag: tag.clone(),
                pnl: pnl_from_values(&values, base_value, PnlSource::Brute)?,
                scenarios: scen,
            });
        }
        Ok(Experiment {
            pricer,
            scenarios,
            base_shock,
            seed,
            source: source.to_string(),
            base_value,
            brute,
            brute_calls,
        })
    }

    pub fn pricer(&self) -> &ShockedPricer {
        &self.pricer
    }

    pub fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    /// Portfolio valuations per horizon of full revaluation.
    pub fn brute_calls_per_horizon(&self) -> u64 {
        self.brute_calls
    }

    pub fn brute_pnl(&self, horizon: &str) -> Result<&PnlDistribution> {
        self.brute
            .iter()
            .find(|b| b.tag == horizon)
            .map(|b| &b.pnl)
            .ok_or_else(|| Error::Lookup(format!("horizon '{horizon}' was not revalued")))
    }

    /// Fits PCA on the 10-day shocks, builds the slider(s) and compares
    /// against the cached brute force on every horizon.
    pub fn run(&self, settings: &RunSettings) -> Result<RunOutput> {
        for tag in &settings.horizons {
            self.brute_pnl(tag)?;
        }
        if !(settings.alpha > 0.0 && settings.alpha < 1.0) {
            return Err(Error::Configuration(format!(
                "alpha must lie in (0, 1), got {}",
                settings.alpha
            )));
        }
        let factors = self.pricer.factors();
        let spec = pca_blocks(&settings.pca, factors)?;
        let config = SliderConfig::parse_with_total(&settings.slider, spec.reduced_dimension())?
            .with_points(settings.points);
        let space = ReducedSpace::fit(&self.scenarios.shocks, &spec, &self.base_shock)?;

        let p = &self.pricer;
        let trades = p.portfolio().trade_count();
        let counter = |per_trade: bool| if per_trade { p.trade_calls() } else { p.portfolio_calls() };
        let unit = settings.per_trade;
        let before = counter(unit);
        let sliders = if settings.per_trade {
            (0..trades)
                .map(|t| {
                    OrthogonalSlider::build_on(space.clone(), |y| p.price_trade(t, y), &config, &self.base_shock)
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![OrthogonalSlider::build_on(space.clone(), |y| p.price(y), &config, &self.base_shock)?]
        };
        let build_calls = counter(unit) - before;
        let brute_calls = if unit { self.brute_calls * trades as u64 } else { self.brute_calls };

        let evaluate = |x: &[f64]| -> Result<Evaluation> {
            let mut total = Evaluation { value: 0.0, clamped: false };
            for s in &sliders {
                let e = s.evaluate(x)?;
                total.value += e.value;
                total.clamped |= e.clamped;
            }
            Ok(total)
        };
        let slider_base = evaluate(&self.base_shock)?.value;
        // diagnostic repricing is counted in portfolio valuations
        let mut diagnostic_calls = 0;
        let pca_base = if settings.diagnostic {
            diagnostic_calls += 1;
            Some(p.price(&space.round_trip(&self.base_shock)?)?)
        } else {
            None
        };

        let echo = |tag: &str| ReportEcho {
            horizon: tag.to_string(),
            pca_dims: spec.blocks.iter().map(|b| b.k).collect(),
            slider_config: config.to_string(),
            points_per_dim: vec![settings.points; config.slide_dims.len()],
            alpha: settings.alpha,
        };
        let mut reports = Vec::new();
        let mut diagnostics = Vec::new();
        for tag in &settings.horizons {
            let bh = self.brute.iter().find(|b| &b.tag == tag).expect("checked above");
            let eval_before = counter(unit);
            let evals: Vec<Result<Evaluation>> = bh.scenarios.shocks.par_iter().map(|x| evaluate(x)).collect();
            let evals = evals
                .into_iter()
                .enumerate()
                .map(|(index, r)| r.map_err(|e| Error::Scenario { index, source: Box::new(e) }))
                .collect::<Result<Vec<_>>>()?;
            let incremental_calls = counter(unit) - eval_before;
            let clamped = evals.iter().filter(|e| e.clamped).count();
            let values: Vec<f64> = evals.iter().map(|e| e.value).collect();
            let slider_pnl = pnl_from_values(&values, slider_base, PnlSource::Slider)?;

            let pca_pnl = match pca_base {
                Some(base) => {
                    let d0 = p.portfolio_calls();
                    let v = revalue(|x| p.price(&space.round_trip(x)?), &bh.scenarios)?;
                    diagnostic_calls += p.portfolio_calls() - d0;
                    Some(pnl_from_values(&v, base, PnlSource::PcaRepriced)?)
                }
                None => None,
            };
            let built_here = tag == BASE_HORIZON;
            let calls = CallAccounting {
                build_calls: if built_here { build_calls } else { 0 },
                brute_calls,
                incremental_calls,
            };
            let mut r = EsReport::compute(echo(tag), &bh.pnl, &slider_pnl, pca_pnl.as_ref(), calls, clamped)?;
            r.slider_reused = !built_here;
            reports.push(r);
            if settings.diagnostic {
                diagnostics.push(HorizonDiagnostic {
                    horizon: tag.clone(),
                    labels: bh.scenarios.labels.clone(),
                    brute: bh.pnl.clone(),
                    pca_repriced: pca_pnl,
                    slider: slider_pnl,
                });
            }
        }

        let report = RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            scenario_source: self.source.clone(),
            factor_count: factors.len(),
            trade_count: trades,
            pca_blocks: spec
                .blocks
                .iter()
                .zip(space.models())
                .map(|(b, m)| BlockEcho {
                    name: b.name.clone(),
                    factors: b.indices.len(),
                    k: b.k,
                    explained_ratio: m.explained_ratio(),
                })
                .collect(),
            slider_config: config.to_string(),
            points_per_dim: settings.points,
            alpha: settings.alpha,
            per_trade: settings.per_trade,
            call_unit: if unit { "trade" } else { "portfolio" }.to_string(),
            base_value: self.base_value,
            build_calls,
            diagnostic_calls,
            vol_floor_events: p.floor_events(),
            horizons: reports,
        };
        Ok(RunOutput {
            report,
            sliders,
            diagnostics,
        })
    }

    /// Rolling ratios of slider to brute 10-day P&L.
    pub fn backtest(&self, settings: &RunSettings, window: usize) -> Result<RatioBacktestSeries> {
        let ht = self.brute_pnl(BASE_HORIZON)?;
        if window == 0 || window > ht.len() {
            return Err(Error::Argument(format!(
                "backtest window {window} must lie in 1..={}",
                ht.len()
            )));
        }
        let settings = RunSettings {
            horizons: vec![BASE_HORIZON.to_string()],
            diagnostic: true,
            ..settings.clone()
        };
        let out = self.run(&settings)?;
        let rt = &out.diagnostics[0].slider;
        rolling_ratio_backtest(&ht.values, &rt.values, window)
    }
}

/// One row of a configuration sweep; failed cells carry the error instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pca: String,
    pub slider: String,
    pub horizon: String,
    pub relative_error: Option<f64>,
    pub savings: Option<f64>,
    pub correlation: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub es_brute: Option<f64>,
    pub es_slider: Option<f64>,
    pub build_calls: Option<u64>,
    pub error_kind: Option<String>,
    pub error: Option<String>,
}

/// Runs every (PCA dims, slider tuple) pair; a failing cell is recorded and
/// the sweep moves on.
pub fn sweep(experiment: &Experiment, base: &RunSettings, dims: &[PcaDims], tuples: &[String]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for d in dims {
        for t in tuples {
            let settings = RunSettings {
                pca: d.clone(),
                slider: t.clone(),
                diagnostic: false,
                ..base.clone()
            };
            match experiment.run(&settings) {
                Ok(out) => rows.extend(out.report.horizons.iter().map(|r| SweepRow {
                    pca: d.to_string(),
                    slider: t.clone(),
                    horizon: r.horizon.clone(),
                    relative_error: r.relative_error,
                    savings: Some(r.savings),
                    correlation: r.correlation,
                    ks_p_value: Some(r.ks_p_value),
                    es_brute: Some(r.es_brute),
                    es_slider: Some(r.es_slider),
                    build_calls: Some(r.calls.build_calls),
                    error_kind: None,
                    error: None,
                })),
                Err(e) => rows.push(SweepRow {
                    pca: d.to_string(),
                    slider: t.clone(),
                    horizon: String::new(),
                    relative_error: None,
                    savings: None,
                    correlation: None,
                    ks_p_value: None,
                    es_brute: None,
                    es_slider: None,
                    build_calls: None,
                    error_kind: Some(e.kind().to_string()),
                    error: Some(e.to_string()),
                }),
            }
        }
    }
    rows
}

pub fn write_sweep_csv<W: std::io::Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
