//! Scenario generation, P&L distributions, expected shortfall and the
//! statistics used to compare a surrogate against full revaluation.
//!
//! Losses are negative P&L throughout; ES is reported as a positive number.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.975;

/// Horizon tag of full-revaluation scenarios.
pub const BASE_HORIZON: &str = "10d";

/// Tail-size rule recorded in reports.
pub const ES_CONVENTION: &str = "ceil((1-alpha)*s) worst P&L values, ties by index";

/// Ratio definitions recorded with backtest output.
pub const RATIO_FORMULA: &str = "mean(rt)/mean(ht); var(rt)/var(ht), population variance per window";

/// Rows of additive shocks over named risk factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub labels: Vec<String>,
    pub shocks: Vec<Vec<f64>>,
    pub factor_names: Vec<String>,
    pub horizon: String,
}

impl ScenarioSet {
    pub fn new(
        labels: Vec<String>,
        shocks: Vec<Vec<f64>>,
        factor_names: Vec<String>,
        horizon: &str,
    ) -> Result<Self> {
        let s = ScenarioSet {
            labels,
            shocks,
            factor_names,
            horizon: horizon.to_string(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shocks.is_empty() {
            return Err(Error::Argument("scenario set has no rows".into()));
        }
        if self.labels.len() != self.shocks.len() {
            return Err(Error::Argument(format!(
                "{} labels for {} scenarios",
                self.labels.len(),
                self.shocks.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.factor_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Argument(format!("duplicate risk factor '{dup}'")));
        }
        let n = self.factor_names.len();
        for (i, row) in self.shocks.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Argument(format!(
                    "scenario {i} has {} values, expected {n}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Argument(format!(
                    "scenario {i} has a non-finite value for '{}'",
                    self.factor_names[j]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.shocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shocks.is_empty()
    }

    pub fn factor_count(&self) -> usize {
        self.factor_names.len()
    }

    pub fn factor_index(&self, name: &str) -> Result<usize> {
        self.factor_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Lookup(format!("unknown risk factor '{name}'")))
    }

    /// First `count` rows.
    pub fn head(&self, count: usize) -> ScenarioSet {
        let count = count.min(self.len());
        ScenarioSet {
            labels: self.labels[..count].to_vec(),
            shocks: self.shocks[..count].to_vec(),
            factor_names: self.factor_names.clone(),
            horizon: self.horizon.clone(),
        }
    }

    /// Reads a CSV whose header is `label` followed by factor names.
    pub fn read_csv<R: Read>(reader: R, horizon: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("label") {
            return Err(Error::Argument("scenario CSV must start with a 'label' column".into()));
        }
        let factor_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut labels = Vec::new();
        let mut shocks = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            labels.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        Error::Argument(format!("scenario row {i}: cannot parse '{v}' as a number"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            shocks.push(row);
        }
        Self::new(labels, shocks, factor_names, horizon)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["label".to_string()];
        header.extend(self.factor_names.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.shocks) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, horizon: &str) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, horizon)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Within-block correlation structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockCorrelation {
    /// Every off-diagonal entry equals `rho`.
    Equi { rho: f64 },
    /// `floor + (1 − floor)·exp(−|x_i − x_j| / length)` over `coordinates`
    /// (e.g. tenors), one per factor.
    Exponential {
        coordinates: Vec<f64>,
        length: f64,
        #[serde(default)]
        floor: f64,
    },
    /// Correlation of `L Lᵀ + nugget·I`, with `loadings` holding one row
    /// of factor loadings per risk factor.
    Factors {
        loadings: Vec<Vec<f64>>,
        #[serde(default)]
        nugget: f64,
    },
    /// Full matrix given row by row.
    Explicit { matrix: Vec<Vec<f64>> },
}

/// Per-factor or common volatility of a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VolScale {
    Uniform(f64),
    PerFactor(Vec<f64>),
}

/// A group of factors sharing one correlation structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorBlock {
    pub names: Vec<String>,
    pub vol: VolScale,
    pub correlation: BlockCorrelation,
}

/// Description of a synthetic Gaussian shock history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub blocks: Vec<FactorBlock>,
    /// Correlation between factors of different blocks.
    #[serde(default)]
    pub cross_correlation: f64,
    pub count: usize,
}

impl SyntheticSpec {
    pub fn factor_names(&self) -> Vec<String> {
        self.blocks.iter().flat_map(|b| b.names.iter().cloned()).collect()
    }

    fn vols(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for b in &self.blocks {
            match &b.vol {
                VolScale::Uniform(v) => out.extend(std::iter::repeat_n(*v, b.names.len())),
                VolScale::PerFactor(v) => {
                    if v.len() != b.names.len() {
                        return Err(Error::Parameter(format!(
                            "{} vols for a block of {} factors",
                            v.len(),
                            b.names.len()
                        )));
                    }
                    out.extend(v)
                }
            }
        }
        if out.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter("vol scales must be finite and non-negative".into()));
        }
        Ok(out)
    }

    /// The full correlation matrix implied by the blocks.
    pub fn correlation_matrix(&self) -> Result<DMatrix<f64>> {
        let n: usize = self.blocks.iter().map(|b| b.names.len()).sum();
        let mut c = DMatrix::from_element(n, n, self.cross_correlation);
        let mut off = 0;
        for b in &self.blocks {
            let m = b.names.len();
            for i in 0..m {
                for j in 0..m {
                    c[(off + i, off + j)] = if i == j {
                        1.0
                    } else {
                        block_entry(&b.correlation, i, j, m)?
                    };
                }
            }
            off += m;
        }
        if c.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::Parameter("correlations must lie in [-1, 1]".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if c[(i, j)] != c[(j, i)] {
                    return Err(Error::Parameter("correlation matrix is not symmetric".into()));
                }
            }
        }
        Ok(c)
    }
}

fn block_entry(kind: &BlockCorrelation, i: usize, j: usize, m: usize) -> Result<f64> {
    match kind {
        BlockCorrelation::Equi { rho } => Ok(*rho),
        BlockCorrelation::Exponential {
            coordinates,
            length,
            floor,
        } => {
            if coordinates.len() != m || !(*length > 0.0) {
                return Err(Error::Parameter(
                    "exponential correlation needs one coordinate per factor and a positive length".into(),
                ));
            }
            let d = (coordinates[i] - coordinates[j]).abs();
            Ok(floor + (1.0 - floor) * (-d / length).exp())
        }
        BlockCorrelation::Factors { loadings, nugget } => {
            if loadings.len() != m || !(*nugget >= 0.0) {
                return Err(Error::Parameter(format!(
                    "factor correlation needs {m} loading rows and a non-negative nugget"
                )));
            }
            let cov = |a: usize, b: usize| -> f64 {
                let dot: f64 = loadings[a].iter().zip(&loadings[b]).map(|(x, y)| x * y).sum();
                dot + if a == b { *nugget } else { 0.0 }
            };
            let (vi, vj) = (cov(i, i), cov(j, j));
            if !(vi > 0.0 && vj > 0.0) {
                return Err(Error::Parameter("factor model gives a zero-variance factor".into()));
            }
            Ok(cov(i, j) / (vi * vj).sqrt())
        }
        BlockCorrelation::Explicit { matrix } => {
            if matrix.len() != m || matrix.iter().any(|r| r.len() != m) {
                return Err(Error::Parameter(format!("explicit correlation must be {m}x{m}")));
            }
            Ok(matrix[i][j])
        }
    }
}

/// Square-root factor `L` with `L Lᵀ = C`, from the eigendecomposition.
fn correlation_root(c: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = c.nrows();
    let eig = SymmetricEigen::new(c);
    let tol = 1e-10 * n as f64;
    if let Some(l) = eig.eigenvalues.iter().find(|&&l| l < -tol) {
        return Err(Error::Parameter(format!(
            "correlation matrix is not positive semi-definite (eigenvalue {l:.3e})"
        )));
    }
    let mut root = eig.eigenvectors;
    for (j, l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        root.column_mut(j).scale_mut(s);
    }
    Ok(root)
}

/// Gaussian shock history with the block correlation of `spec`,
/// deterministic in `seed`.
pub fn generate_synthetic_history(spec: &SyntheticSpec, seed: u64) -> Result<ScenarioSet> {
    if spec.count == 0 {
        return Err(Error::Parameter("scenario count must be positive".into()));
    }
    let names = spec.factor_names();
    let n = names.len();
    if n == 0 {
        return Err(Error::Parameter("synthetic spec declares no factors".into()));
    }
    let vols = spec.vols()?;
    let root = correlation_root(spec.correlation_matrix()?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; n];
    let mut shocks = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        z.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        let row: Vec<f64> = (0..n)
            .map(|i| vols[i] * (0..n).map(|j| root[(i, j)] * z[j]).sum::<f64>())
            .collect();
        shocks.push(row);
    }
    let labels = (0..spec.count).map(|i| format!("s{i:05}")).collect();
    ScenarioSet::new(labels, shocks, names, BASE_HORIZON)
}

/// Freezes every factor outside `shocked` at its base-shock value.
pub fn apply_liquidity_horizon(
    scen: &ScenarioSet,
    shocked: &[String],
    base_shock: &[f64],
    horizon: &str,
) -> Result<ScenarioSet> {
    if base_shock.len() != scen.factor_count() {
        return Err(Error::Argument(format!(
            "base shock has {} values, scenarios have {} factors",
            base_shock.len(),
            scen.factor_count()
        )));
    }
    let mut keep = vec![false; scen.factor_count()];
    for name in shocked {
        keep[scen.factor_index(name)?] = true;
    }
    let shocks = scen
        .shocks
        .iter()
        .map(|row| {
            row.iter()
                .zip(base_shock)
                .zip(&keep)
                .map(|((&x, &b), &k)| if k { x } else { b })
                .collect()
        })
        .collect();
    Ok(ScenarioSet {
        labels: scen.labels.clone(),
        shocks,
        factor_names: scen.factor_names.clone(),
        horizon: horizon.to_string(),
    })
}

/// Which evaluator produced a P&L vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PnlSource {
    Brute,
    PcaRepriced,
    Slider,
}

impl PnlSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PnlSource::Brute => "brute",
            PnlSource::PcaRepriced => "pca_repriced",
            PnlSource::Slider => "slider",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnlDistribution {
    pub values: Vec<f64>,
    pub source: PnlSource,
}

impl PnlDistribution {
    pub fn new(values: Vec<f64>, source: PnlSource) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "{} P&L is non-finite at scenario {i}",
                source.as_str()
            )));
        }
        Ok(PnlDistribution { values, source })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Values of every scenario, evaluated in parallel and returned in scenario
/// order. The lowest failing index is reported.
pub fn revalue<F>(value: F, scen: &ScenarioSet) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let results: Vec<Result<f64>> = scen.shocks.par_iter().map(|s| value(s)).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Scenario {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// `value(shock_i) − value(base_shock)` for every scenario.
pub fn pnl_distribution<F>(
    value: F,
    scen: &ScenarioSet,
    base_shock: &[f64],
    source: PnlSource,
) -> Result<PnlDistribution>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let base = value(base_shock)?;
    let values = revalue(&value, scen)?;
    pnl_from_values(&values, base, source)
}

pub fn pnl_from_values(values: &[f64], base: f64, source: PnlSource) -> Result<PnlDistribution> {
    PnlDistribution::new(values.iter().map(|v| v - base).collect(), source)
}

/// Number of tail observations averaged at level `alpha`: `⌈(1 − α)s⌉`,
/// at least one. Products that land within rounding of an integer count as
/// that integer, so 0.99 on 100 scenarios gives 1 rather than 2.
pub fn tail_size(alpha: f64, s: usize) -> usize {
    let raw = (1.0 - alpha) * s as f64;
    let near = raw.round();
    let k = if (raw - near).abs() <= 1e-9 * near.max(1.0) { near } else { raw.ceil() };
    (k as usize).clamp(1, s)
}

/// Negative mean of the worst `⌈(1 − α)s⌉` P&L values.
pub fn expected_shortfall(pnl: &[f64], alpha: f64) -> Result<f64> {
    if pnl.is_empty() {
        return Err(Error::Argument("expected shortfall of an empty distribution".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if pnl.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("P&L contains non-finite values".into()));
    }
    let k = tail_size(alpha, pnl.len());
    let mut order: Vec<usize> = (0..pnl.len()).collect();
    order.sort_by(|&a, &b| pnl[a].total_cmp(&pnl[b]).then(a.cmp(&b)));
    let sum: f64 = order[..k].iter().map(|&i| pnl[i]).sum();
    Ok(-sum / k as f64)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Argument(format!(
            "correlation needs two samples of equal length >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Numerical("correlation undefined for a zero-variance sample".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("KS test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Argument("KS samples must be finite".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (na, nb) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        // step past every copy of the smaller value in both samples
        let v = x[i].min(y[j]);
        while i < na && x[i] == v {
            i += 1;
        }
        while j < nb && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(ne.sqrt() * d),
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    use std::f64::consts::PI;
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi theta form of the CDF, fast for small λ
        let c = -PI * PI / (8.0 * lambda * lambda);
        let sum: f64 = (1..=10)
            .map(|k| ((2 * k - 1) as f64).powi(2) * c)
            .map(f64::exp)
            .sum();
        (1.0 - (2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let sum: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// `1 − build/brute`, floored at 0; 0 when there were no brute calls.
pub fn savings(build_calls: u64, brute_calls: u64) -> f64 {
    if brute_calls == 0 {
        return 0.0;
    }
    (1.0 - build_calls as f64 / brute_calls as f64).max(0.0)
}

/// Rolling ratios of risk-theoretical to hypothetical P&L statistics.
/// `None` marks windows whose hypothetical denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioBacktestSeries {
    pub window: usize,
    pub formula: String,
    pub mean_ratio: Vec<Option<f64>>,
    pub variance_ratio: Vec<Option<f64>>,
}

impl RatioBacktestSeries {
    pub fn len(&self) -> usize {
        self.mean_ratio.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_ratio.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["window_end", "mean_ratio", "variance_ratio"])?;
        let cell = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:?}"));
        for (i, (m, v)) in self.mean_ratio.iter().zip(&self.variance_ratio).enumerate() {
            w.write_record([(i + self.window - 1).to_string(), cell(*m), cell(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn rolling_ratio_backtest(
    hypothetical: &[f64],
    risk_theoretical: &[f64],
    window: usize,
) -> Result<RatioBacktestSeries> {
    if hypothetical.len() != risk_theoretical.len() {
        return Err(Error::Argument("backtest series differ in length".into()));
    }
    if window == 0 || window > hypothetical.len() {
        return Err(Error::Argument(format!(
            "window {window} must lie in 1..={}",
            hypothetical.len()
        )));
    }
    let pop_var = |x: &[f64]| {
        let m = mean(x);
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
    };
    let ratio = |num: f64, den: f64| (den != 0.0).then(|| num / den);
    let mut mean_ratio = Vec::new();
    let mut variance_ratio = Vec::new();
    for start in 0..=hypothetical.len() - window {
        let ht = &hypothetical[start..start + window];
        let rt = &risk_theoretical[start..start + window];
        mean_ratio.push(ratio(mean(rt), mean(ht)));
        variance_ratio.push(ratio(pop_var(rt), pop_var(ht)));
    }
    Ok(RatioBacktestSeries {
        window,
        formula: RATIO_FORMULA.to_string(),
        mean_ratio,
        variance_ratio,
    })
}

/// Pricer-call accounting for one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallAccounting {
    /// Calls spent building the surrogate for this horizon.
    pub build_calls: u64,
    /// Calls spent on full revaluation of the scenarios.
    pub brute_calls: u64,
    /// Calls beyond the build needed to evaluate the surrogate here.
    pub incremental_calls: u64,
}

/// Brute force against surrogate for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsReport {
    pub horizon: String,
    pub scenario_count: usize,
    pub alpha: f64,
    pub es_convention: String,
    pub pca_dims: Vec<usize>,
    pub slider_config: String,
    pub points_per_dim: Vec<usize>,
    pub es_brute: f64,
    pub es_slider: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub es_pca_repriced: Option<f64>,
    /// `None` when the brute-force ES is zero.
    pub relative_error: Option<f64>,
    pub savings: f64,
    pub calls: CallAccounting,
    pub correlation: Option<f64>,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Scenarios whose projection fell outside the slider box.
    pub clamped_scenarios: usize,
    /// Set when the surrogate was built for another horizon and reused.
    #[serde(default)]
    pub slider_reused: bool,
}

/// Configuration echoed into a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEcho {
    pub horizon: String,
    pub pca_dims: Vec<usize>,
    pub slider_config: String,
    pub points_per_dim: Vec<usize>,
    pub alpha: f64,
}

impl EsReport {
    /// Compares the surrogate P&L against brute force. A zero-variance P&L
    /// leaves the correlation undefined rather than failing the report.
    pub fn compute(
        echo: ReportEcho,
        brute: &PnlDistribution,
        slider: &PnlDistribution,
        pca_repriced: Option<&PnlDistribution>,
        calls: CallAccounting,
        clamped_scenarios: usize,
    ) -> Result<Self> {
        if brute.len() != slider.len() {
            return Err(Error::Argument("brute and slider P&L differ in length".into()));
        }
        let es_brute = expected_shortfall(&brute.values, echo.alpha)?;
        let es_slider = expected_shortfall(&slider.values, echo.alpha)?;
        let es_pca_repriced = pca_repriced
            .map(|p| expected_shortfall(&p.values, echo.alpha))
            .transpose()?;
        let correlation = match correlation(&brute.values, &slider.values) {
            Ok(c) => Some(c),
            Err(Error::Numerical(_)) => None,
            Err(e) => return Err(e),
        };
        let ks = ks_two_sample(&brute.values, &slider.values)?;
        let spent = calls.build_calls + calls.incremental_calls;
        Ok(EsReport {
            horizon: echo.horizon,
            scenario_count: brute.len(),
            alpha: echo.alpha,
            es_convention: ES_CONVENTION.to_string(),
            pca_dims: echo.pca_dims,
            slider_config: echo.slider_config,
            points_per_dim: echo.points_per_dim,
            es_brute,
            es_slider,
            es_pca_repriced,
            relative_error: relative_error(es_brute, es_slider),
            savings: savings(spent, calls.brute_calls),
            calls,
            correlation,
            ks_statistic: ks.statistic,
            ks_p_value: ks.p_value,
            clamped_scenarios,
            slider_reused: false,
        })
    }
}

pub fn relative_error(reference: f64, approx: f64) -> Option<f64> {
    (reference != 0.0).then(|| (approx - reference).abs() / reference.abs())
}

/// Writes per-scenario P&L columns side by side.
pub fn write_pnl_csv<W: Write>(writer: W, labels: &[String], columns: &[&PnlDistribution]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["label".to_string()];
    header.extend(columns.iter().map(|c| c.source.as_str().to_string()));
    w.write_record(&header)?;
    let mut seen = HashMap::new();
    for c in columns {
        if c.len() != labels.len() {
            return Err(Error::Argument("P&L column length differs from label count".into()));
        }
        if seen.insert(c.source, ()).is_some() {
            return Err(Error::Argument(format!("duplicate {} column", c.source.as_str())));
        }
    }
    for (i, label) in labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend(columns.iter().map(|c| format!("{:?}", c.values[i])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equi_spec(n: usize, rho: f64, vol: f64, count: usize) -> SyntheticSpec {
        SyntheticSpec {
            blocks: vec![FactorBlock {
                names: (0..n).map(|i| format!("r{i}")).collect(),
                vol: VolScale::Uniform(vol),
                correlation: BlockCorrelation::Equi { rho },
            }],
            cross_correlation: 0.0,
            count,
        }
    }

    #[test]
    fn es_hand_count() {
        let mut pnl = vec![0.0; 100];
        pnl[3] = -10.0;
        pnl[50] = -20.0;
        pnl[99] = -30.0;
        assert_eq!(expected_shortfall(&pnl, 0.975).unwrap(), 20.0);
        assert_eq!(expected_shortfall(&[4.5; 17], 0.9).unwrap(), -4.5);
        assert_eq!(tail_size(0.975, 250), 7);
        assert_eq!(tail_size(0.99, 100), 1);
        assert_eq!(tail_size(0.975, 3131), 79);
        assert!(expected_shortfall(&[], 0.975).is_err());
        assert!(expected_shortfall(&[1.0], 1.0).is_err());
    }

    #[test]
    fn synthetic_is_seeded() {
        let spec = equi_spec(5, 0.5, 0.01, 40);
        let a = generate_synthetic_history(&spec, 7).unwrap();
        let b = generate_synthetic_history(&spec, 7).unwrap();
        let c = generate_synthetic_history(&spec, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.shocks, c.shocks);
    }

    #[test]
    fn zero_vol_gives_zero_shocks() {
        let s = generate_synthetic_history(&equi_spec(4, 0.9, 0.0, 10), 1).unwrap();
        assert!(s.shocks.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn non_psd_rejected() {
        // three factors cannot be pairwise correlated at -0.9
        let spec = equi_spec(3, -0.9, 1.0, 10);
        assert!(matches!(generate_synthetic_history(&spec, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn equicorrelated_pca_concentration() {
        use crate::orthopca::PcaModel;
        // eigenvalues of the 40x40 equicorrelation: 1 + 39ρ once, 1 − ρ 39 times
        let (n, rho) = (40, 0.95);
        let analytic = (1.0 + (n - 1) as f64 * rho + 2.0 * (1.0 - rho)) / n as f64;
        assert!(analytic >= 0.95);
        let s = generate_synthetic_history(&equi_spec(n, rho, 0.01, 3131), 11).unwrap();
        let m = PcaModel::fit(&s.shocks, 3).unwrap();
        assert!(m.explained_ratio() >= 0.95, "{}", m.explained_ratio());
        assert!((m.explained_ratio() - analytic).abs() < 0.01);
    }

    #[test]
    fn horizon_freezes_unshocked_columns() {
        let s = generate_synthetic_history(&equi_spec(4, 0.3, 1.0, 20), 3).unwrap();
        let base = vec![0.1, 0.2, 0.3, 0.4];
        let all = apply_liquidity_horizon(&s, &s.factor_names, &base, "10d").unwrap();
        assert_eq!(all.shocks, s.shocks);
        let some = apply_liquidity_horizon(&s, &["r1".to_string(), "r3".into()], &base, "60d").unwrap();
        assert_eq!(some.horizon, "60d");
        for (row, orig) in some.shocks.iter().zip(&s.shocks) {
            assert_eq!((row[0], row[2]), (0.1, 0.3));
            assert_eq!((row[1], row[3]), (orig[1], orig[3]));
        }
        let none = apply_liquidity_horizon(&s, &[], &base, "120d").unwrap();
        assert!(none.shocks.iter().all(|r| r == &base));
        assert!(matches!(
            apply_liquidity_horizon(&s, &["zz".to_string()], &base, "60d"),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn pnl_of_base_rows_is_zero() {
        let s = ScenarioSet::new(vec!["a".into(), "b".into()], vec![vec![1.0, 2.0]; 2], vec!["x".into(), "y".into()], "10d")
            .unwrap();
        let p = pnl_distribution(|x| Ok(x[0].exp() * x[1]), &s, &[1.0, 2.0], PnlSource::Brute).unwrap();
        assert_eq!(p.values, vec![0.0, 0.0]);
    }

    #[test]
    fn scenario_errors_carry_index() {
        let s = ScenarioSet::new(
            (0..5).map(|i| i.to_string()).collect(),
            (0..5).map(|i| vec![i as f64]).collect(),
            vec!["x".into()],
            "10d",
        )
        .unwrap();
        let err = revalue(
            |x| if x[0] >= 2.0 { Err(Error::ModelDomain("neg".into())) } else { Ok(x[0]) },
            &s,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Scenario { index: 2, .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn correlation_identities() {
        let a = [1.0, 4.0, 2.0, 8.0, 5.0];
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let aff: Vec<f64> = a.iter().map(|x| 2.0 * x + 3.0).collect();
        assert!((correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((correlation(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!((correlation(&a, &aff).unwrap() - 1.0).abs() < 1e-15);
        assert!(correlation(&a, &[1.0; 5]).is_err());
    }

    #[test]
    fn ks_examples() {
        let a = [3.0, 1.0, 2.0, 5.0];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[1.5, 2.5, 3.5]).unwrap();
        assert!((r.statistic - 1.0 / 3.0).abs() < 1e-15);
        let lo: Vec<f64> = (0..50).map(f64::from).collect();
        let hi: Vec<f64> = (100..150).map(f64::from).collect();
        let r = ks_two_sample(&lo, &hi).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-6);
        assert!(ks_two_sample(&[], &a).is_err());
    }

    #[test]
    fn kolmogorov_branches_agree() {
        use std::f64::consts::PI;
        // both series evaluated on either side of the switch
        for lambda in [0.6, 0.9, 1.1, 1.18, 1.3, 1.6] {
            let alt: f64 = 2.0
                * (1..=200)
                    .map(|k| {
                        let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                        s * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
                    })
                    .sum::<f64>();
            let theta = 1.0
                - (2.0 * PI).sqrt() / lambda
                    * (1..=40)
                        .map(|k| (-((2 * k - 1) as f64).powi(2) * PI * PI / (8.0 * lambda * lambda)).exp())
                        .sum::<f64>();
            assert!((alt - theta).abs() < 1e-10, "{lambda}: {alt} vs {theta}");
            assert!((kolmogorov_survival(lambda) - alt).abs() < 1e-10);
        }
        // tabulated critical value: P(K > 1.3581) = 0.05
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn savings_examples() {
        assert!((savings(16, 3131) - 0.99489).abs() < 1e-5);
        assert_eq!(savings(3131, 3131), 0.0);
        assert_eq!(savings(0, 3131), 1.0);
        assert_eq!(savings(5000, 3131), 0.0);
    }

    #[test]
    fn ratio_backtest_scaling() {
        let ht: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64 - 4.0).collect();
        let r = rolling_ratio_backtest(&ht, &ht, 10).unwrap();
        assert_eq!(r.len(), 21);
        assert!(r.variance_ratio.iter().all(|v| v.is_none_or(|x| (x - 1.0).abs() < 1e-12)));
        assert!(r.mean_ratio.iter().all(|v| v.is_none_or(|x| (x - 1.0).abs() < 1e-12)));
        let rt: Vec<f64> = ht.iter().map(|x| 2.0 * x).collect();
        let r = rolling_ratio_backtest(&ht, &rt, 10).unwrap();
        for (m, v) in r.mean_ratio.iter().zip(&r.variance_ratio) {
            if let Some(m) = m {
                assert!((m - 2.0).abs() < 1e-12);
            }
            assert!((v.unwrap() - 4.0).abs() < 1e-12);
        }
        assert!(rolling_ratio_backtest(&ht, &ht, 0).is_err());
        assert!(rolling_ratio_backtest(&ht, &ht, 31).is_err());
        let flat = rolling_ratio_backtest(&[0.0; 5], &[1.0; 5], 2).unwrap();
        assert!(flat.mean_ratio.iter().all(Option::is_none));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = generate_synthetic_history(&equi_spec(3, 0.2, 0.013, 25), 5).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = ScenarioSet::read_csv(buf.as_slice(), "10d").unwrap();
        assert_eq!(back, s);
        assert!(ScenarioSet::read_csv("x,a\n1,2\n".as_bytes(), "10d").is_err());
        assert!(ScenarioSet::read_csv("label,a,a\n1,2,3\n".as_bytes(), "10d").is_err());
        assert!(ScenarioSet::read_csv("label,a\n1,abc\n".as_bytes(), "10d").is_err());
    }

    #[test]
    fn report_identity() {
        let brute = PnlDistribution::new((0..200).map(|i| ((i * 37) % 101) as f64 - 50.0).collect(), PnlSource::Brute).unwrap();
        let slider = PnlDistribution::new(brute.values.iter().map(|v| 1.01 * v + 0.1).collect(), PnlSource::Slider).unwrap();
        let echo = ReportEcho {
            horizon: "10d".into(),
            pca_dims: vec![3],
            slider_config: "1x3".into(),
            points_per_dim: vec![5],
            alpha: 0.975,
        };
        let calls = CallAccounting { build_calls: 16, brute_calls: 200, incremental_calls: 0 };
        let r = EsReport::compute(echo, &brute, &slider, None, calls, 0).unwrap();
        let recomputed = (r.es_slider - r.es_brute).abs() / r.es_brute.abs();
        assert!((r.relative_error.unwrap() - recomputed).abs() <= 1e-12);
        assert!((r.savings - 0.92).abs() < 1e-15);
    }
}
