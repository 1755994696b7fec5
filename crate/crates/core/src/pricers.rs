//! Reference pricers: a discounting swap pricer and Black-76 European
//! swaptions on continuously compounded zero curves.
//!
//! Shocks are absolute additive moves on curve zero rates and surface vols,
//! in decimal units. Shocked vols are floored at [`VOL_FLOOR`].

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const MARKET_SCHEMA_VERSION: u32 = 1;
pub const PORTFOLIO_SCHEMA_VERSION: u32 = 1;

/// Lower bound applied to shocked implied vols.
pub const VOL_FLOOR: f64 = 1e-4;

/// Something that prices a shock vector. Implementations must be pure in the
/// shock so that concurrent use is safe.
pub trait Pricer: Send + Sync {
    fn price(&self, shock: &[f64]) -> Result<f64>;

    /// Length of the shock vectors this pricer accepts.
    fn factor_count(&self) -> usize;
}

impl<P: Pricer + ?Sized> Pricer for &P {
    fn price(&self, shock: &[f64]) -> Result<f64> {
        (**self).price(shock)
    }

    fn factor_count(&self) -> usize {
        (**self).factor_count()
    }
}

/// Adapts a closure into a [`Pricer`].
pub struct FnPricer<F> {
    f: F,
    factors: usize,
}

impl<F> FnPricer<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(factors: usize, f: F) -> Self {
        FnPricer { f, factors }
    }
}

impl<F> Pricer for FnPricer<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn price(&self, shock: &[f64]) -> Result<f64> {
        check_len(shock, self.factors)?;
        Ok((self.f)(shock))
    }

    fn factor_count(&self) -> usize {
        self.factors
    }
}

/// Counts every call made through it.
pub struct InstrumentedPricer<P> {
    inner: P,
    calls: AtomicU64,
}

impl<P: Pricer> InstrumentedPricer<P> {
    pub fn new(inner: P) -> Self {
        InstrumentedPricer {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::SeqCst);
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Pricer> Pricer for InstrumentedPricer<P> {
    fn price(&self, shock: &[f64]) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.price(shock)
    }

    fn factor_count(&self) -> usize {
        self.inner.factor_count()
    }
}

fn check_len(shock: &[f64], expected: usize) -> Result<()> {
    if shock.len() != expected {
        return Err(Error::Argument(format!(
            "shock has {} factors, pricer expects {expected}",
            shock.len()
        )));
    }
    Ok(())
}

/// Zero curve with continuously compounded rates at increasing tenors.
/// Discount factors are interpolated log-linearly, anchored at `P(0) = 1`,
/// and extrapolated with the last segment's forward rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCurve {
    pub tenors: Vec<f64>,
    pub zero_rates: Vec<f64>,
}

impl ZeroCurve {
    pub fn new(tenors: Vec<f64>, zero_rates: Vec<f64>) -> Result<Self> {
        let c = ZeroCurve { tenors, zero_rates };
        c.validate()?;
        Ok(c)
    }

    pub fn flat(rate: f64, tenors: Vec<f64>) -> Result<Self> {
        let n = tenors.len();
        Self::new(tenors, vec![rate; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.tenors.is_empty() || self.tenors.len() != self.zero_rates.len() {
            return Err(Error::Configuration(
                "zero curve needs matching, non-empty tenor and rate lists".into(),
            ));
        }
        if self.tenors[0] <= 0.0 || self.tenors.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Configuration(
                "zero curve tenors must be positive and strictly increasing".into(),
            ));
        }
        if self.zero_rates.iter().chain(&self.tenors).any(|v| !v.is_finite()) {
            return Err(Error::Configuration("zero curve has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn discount(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let ts = &self.tenors;
        let rs = &self.zero_rates;
        let log_df = |i: usize| -rs[i] * ts[i];
        let i = ts.partition_point(|&x| x < t);
        let ln = if i == 0 {
            // between the origin and the first tenor
            log_df(0) * t / ts[0]
        } else if i < ts.len() {
            let (t0, t1) = (ts[i - 1], ts[i]);
            let w = (t - t0) / (t1 - t0);
            log_df(i - 1) * (1.0 - w) + log_df(i) * w
        } else {
            let last = ts.len() - 1;
            let (t0, l0) = if last == 0 { (0.0, 0.0) } else { (ts[last - 1], log_df(last - 1)) };
            let slope = (log_df(last) - l0) / (ts[last] - t0);
            log_df(last) + slope * (t - ts[last])
        };
        ln.exp()
    }
}

/// Lognormal implied vols on an expiry × underlying-tenor grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSurface {
    pub expiries: Vec<f64>,
    pub tenors: Vec<f64>,
    /// `vols[i][j]` for `expiries[i]`, `tenors[j]`.
    pub vols: Vec<Vec<f64>>,
}

impl VolSurface {
    pub fn new(expiries: Vec<f64>, tenors: Vec<f64>, vols: Vec<Vec<f64>>) -> Result<Self> {
        let s = VolSurface { expiries, tenors, vols };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = |a: &[f64]| !a.is_empty() && a.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&self.expiries) || !increasing(&self.tenors) {
            return Err(Error::Configuration("vol surface axes must be strictly increasing".into()));
        }
        if self.vols.len() != self.expiries.len()
            || self.vols.iter().any(|r| r.len() != self.tenors.len())
        {
            return Err(Error::Configuration("vol grid shape does not match its axes".into()));
        }
        if self.vols.iter().flatten().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::Configuration("vols must be positive and finite".into()));
        }
        Ok(())
    }

    /// Bilinear interpolation, flat beyond the grid.
    pub fn vol(&self, expiry: f64, tenor: f64) -> f64 {
        let (i0, i1, wi) = bracket(&self.expiries, expiry);
        let (j0, j1, wj) = bracket(&self.tenors, tenor);
        let v = &self.vols;
        (1.0 - wi) * ((1.0 - wj) * v[i0][j0] + wj * v[i0][j1])
            + wi * ((1.0 - wj) * v[i1][j0] + wj * v[i1][j1])
    }
}

fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
    let last = axis.len() - 1;
    if x <= axis[0] {
        return (0, 0, 0.0);
    }
    if x >= axis[last] {
        return (last, last, 0.0);
    }
    let i = axis.partition_point(|&a| a <= x);
    let (a, b) = (axis[i - 1], axis[i]);
    (i - 1, i, (x - a) / (b - a))
}

/// Pay or receive the fixed leg; for options, payer or receiver swaption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Payer,
    Receiver,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Payer => 1.0,
            Direction::Receiver => -1.0,
        }
    }
}

/// Fixed-for-floating swap. A negative notional is a short position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapTrade {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub notional: f64,
    pub fixed_rate: f64,
    /// Accrual start in years; 0 for spot-starting swaps.
    #[serde(default)]
    pub start: f64,
    pub maturity: f64,
    /// Payment period in years: 0.25, 0.5 or 1.
    pub frequency: f64,
    pub direction: Direction,
    pub discount_curve: String,
    pub forecast_curve: String,
}

impl SwapTrade {
    pub fn validate(&self) -> Result<()> {
        if !(self.maturity > 0.0 && self.maturity > self.start && self.start >= 0.0) {
            return Err(Error::Configuration(format!(
                "swap must mature after its start ({} .. {})",
                self.start, self.maturity
            )));
        }
        if ![0.25, 0.5, 1.0].contains(&self.frequency) {
            return Err(Error::Configuration(format!(
                "swap frequency {} not in {{0.25, 0.5, 1}}",
                self.frequency
            )));
        }
        if !self.notional.is_finite() || !self.fixed_rate.is_finite() {
            return Err(Error::Configuration("swap notional and rate must be finite".into()));
        }
        Ok(())
    }

    /// Payment times from `start` to `maturity`, rolled back from maturity;
    /// a short first period absorbs any remainder.
    pub fn schedule(&self, start: f64) -> Vec<f64> {
        let mut times = Vec::new();
        let mut t = self.maturity;
        while t > start + 1e-9 {
            times.push(t);
            t -= self.frequency;
        }
        times.reverse();
        times
    }
}

/// European swaption on a forward-starting swap from `expiry` to the
/// underlying's maturity. A negative underlying notional is a short option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwaptionTrade {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub expiry: f64,
    pub underlying: SwapTrade,
    pub strike: f64,
    pub option: Direction,
}

impl SwaptionTrade {
    pub fn validate(&self) -> Result<()> {
        self.underlying.validate()?;
        if !(self.expiry > 0.0 && self.underlying.maturity > self.expiry) {
            return Err(Error::Configuration(format!(
                "swaption expiry {} must be positive and before maturity {}",
                self.expiry, self.underlying.maturity
            )));
        }
        Ok(())
    }
}

/// Curves by id plus an optional vol surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Market {
    #[serde(default = "market_schema")]
    pub schema_version: u32,
    pub curves: BTreeMap<String, ZeroCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vol_surface: Option<VolSurface>,
}

fn market_schema() -> u32 {
    MARKET_SCHEMA_VERSION
}

fn portfolio_schema() -> u32 {
    PORTFOLIO_SCHEMA_VERSION
}

impl Market {
    pub fn new(curves: BTreeMap<String, ZeroCurve>, vol_surface: Option<VolSurface>) -> Self {
        Market {
            schema_version: MARKET_SCHEMA_VERSION,
            curves,
            vol_surface,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MARKET_SCHEMA_VERSION {
            return Err(Error::Configuration(format!(
                "unsupported market schema version {}",
                self.schema_version
            )));
        }
        self.curves.values().try_for_each(ZeroCurve::validate)?;
        if let Some(s) = &self.vol_surface {
            s.validate()?;
        }
        Ok(())
    }

    pub fn curve(&self, id: &str) -> Result<&ZeroCurve> {
        self.curves
            .get(id)
            .ok_or_else(|| Error::Lookup(format!("no curve named '{id}'")))
    }

    pub fn surface(&self) -> Result<&VolSurface> {
        self.vol_surface
            .as_ref()
            .ok_or_else(|| Error::Lookup("market has no vol surface".into()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Market = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Swaps and swaptions priced as one book.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Portfolio {
    #[serde(default = "portfolio_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub swaps: Vec<SwapTrade>,
    #[serde(default)]
    pub swaptions: Vec<SwaptionTrade>,
}

impl Portfolio {
    pub fn new(swaps: Vec<SwapTrade>, swaptions: Vec<SwaptionTrade>) -> Self {
        Portfolio {
            schema_version: PORTFOLIO_SCHEMA_VERSION,
            swaps,
            swaptions,
        }
    }

    pub fn trade_count(&self) -> usize {
        self.swaps.len() + self.swaptions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != PORTFOLIO_SCHEMA_VERSION {
            return Err(Error::Configuration(format!(
                "unsupported portfolio schema version {}",
                self.schema_version
            )));
        }
        self.swaps.iter().try_for_each(SwapTrade::validate)?;
        self.swaptions.iter().try_for_each(SwaptionTrade::validate)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Portfolio = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Value of trade `index`, swaps first then swaptions.
    pub fn price_trade(&self, index: usize, market: &Market) -> Result<f64> {
        if let Some(s) = self.swaps.get(index) {
            return price_swap(s, market);
        }
        match self.swaptions.get(index - self.swaps.len()) {
            Some(o) => price_swaption_black(o, market),
            None => Err(Error::Argument(format!("no trade with index {index}"))),
        }
    }

    pub fn value(&self, market: &Market) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.swaps {
            total += price_swap(s, market)?;
        }
        for o in &self.swaptions {
            total += price_swaption_black(o, market)?;
        }
        Ok(total)
    }

    /// Single-trade sub-portfolio.
    pub fn single(&self, index: usize) -> Result<Portfolio> {
        if let Some(s) = self.swaps.get(index) {
            return Ok(Portfolio::new(vec![s.clone()], vec![]));
        }
        match self.swaptions.get(index - self.swaps.len()) {
            Some(o) => Ok(Portfolio::new(vec![], vec![o.clone()])),
            None => Err(Error::Argument(format!("no trade with index {index}"))),
        }
    }
}

/// Floating and fixed-leg building blocks of a swap between `start` and the
/// swap's maturity: (Σ discounted forward coupons, annuity).
fn legs(trade: &SwapTrade, start: f64, market: &Market) -> Result<(f64, f64)> {
    let disc = market.curve(&trade.discount_curve)?;
    let fwd = market.curve(&trade.forecast_curve)?;
    let mut float = 0.0;
    let mut annuity = 0.0;
    let mut prev = start;
    let mut prev_fwd_df = fwd.discount(start);
    for t in trade.schedule(start) {
        let tau = t - prev;
        let fwd_df = fwd.discount(t);
        let df = disc.discount(t);
        float += (prev_fwd_df / fwd_df - 1.0) * df;
        annuity += tau * df;
        prev = t;
        prev_fwd_df = fwd_df;
    }
    Ok((float, annuity))
}

/// Present value of a swap; payer = floating minus fixed.
pub fn price_swap(trade: &SwapTrade, market: &Market) -> Result<f64> {
    let (float, annuity) = legs(trade, trade.start, market)?;
    Ok(trade.direction.sign() * trade.notional * (float - trade.fixed_rate * annuity))
}

/// Fixed rate that prices the swap at zero.
pub fn par_rate(trade: &SwapTrade, market: &Market) -> Result<f64> {
    let (float, annuity) = legs(trade, trade.start, market)?;
    Ok(float / annuity)
}

/// Fixed-leg annuity `Σ τ_i P(t_i)` of the swap.
pub fn annuity(trade: &SwapTrade, market: &Market) -> Result<f64> {
    Ok(legs(trade, trade.start, market)?.1)
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Undiscounted Black-76 call (`payer`) or put on a forward.
pub fn black76(forward: f64, strike: f64, std_dev: f64, option: Direction) -> Result<f64> {
    if !(forward > 0.0) {
        return Err(Error::ModelDomain(format!(
            "lognormal model needs a positive forward, got {forward}"
        )));
    }
    let intrinsic = match option {
        Direction::Payer => (forward - strike).max(0.0),
        Direction::Receiver => (strike - forward).max(0.0),
    };
    if strike <= 0.0 {
        // a non-positive strike is always exercised under a lognormal forward
        return Ok(match option {
            Direction::Payer => forward - strike,
            Direction::Receiver => 0.0,
        });
    }
    if std_dev <= 0.0 {
        return Ok(intrinsic);
    }
    let d1 = (forward / strike).ln() / std_dev + 0.5 * std_dev;
    let d2 = d1 - std_dev;
    Ok(match option {
        Direction::Payer => forward * norm_cdf(d1) - strike * norm_cdf(d2),
        Direction::Receiver => strike * norm_cdf(-d2) - forward * norm_cdf(-d1),
    })
}

/// Black-76 swaption value: `N · A · Black(F, K, σ√T)` with the vol read
/// from the surface at (expiry, maturity − expiry).
pub fn price_swaption_black(trade: &SwaptionTrade, market: &Market) -> Result<f64> {
    let surface = market.surface()?;
    let u = &trade.underlying;
    let (float, annuity) = legs(u, trade.expiry, market)?;
    let forward = float / annuity;
    let vol = surface.vol(trade.expiry, u.maturity - trade.expiry);
    let undiscounted = black76(forward, trade.strike, vol * trade.expiry.sqrt(), trade.option)
        .map_err(|e| match e {
            Error::ModelDomain(m) => Error::ModelDomain(format!(
                "swaption {}: {m}",
                trade.id.as_deref().unwrap_or("?")
            )),
            e => e,
        })?;
    Ok(u.notional * annuity * undiscounted)
}

/// What a shock coordinate moves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FactorKind {
    Rate { curve: String, tenor_index: usize },
    Vol { expiry_index: usize, tenor_index: usize },
}

/// Named shock coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskFactor {
    pub name: String,
    pub kind: FactorKind,
}

impl RiskFactor {
    pub fn is_rate(&self) -> bool {
        matches!(self.kind, FactorKind::Rate { .. })
    }

    pub fn is_vol(&self) -> bool {
        matches!(self.kind, FactorKind::Vol { .. })
    }
}

/// Risk factors of a market: every curve node (curves in id order), then
/// every surface node in row-major (expiry, tenor) order.
pub fn risk_factors(market: &Market) -> Vec<RiskFactor> {
    let mut out = Vec::new();
    for (id, c) in &market.curves {
        for (i, t) in c.tenors.iter().enumerate() {
            out.push(RiskFactor {
                name: format!("{id}:{t}y"),
                kind: FactorKind::Rate {
                    curve: id.clone(),
                    tenor_index: i,
                },
            });
        }
    }
    if let Some(s) = &market.vol_surface {
        for (i, e) in s.expiries.iter().enumerate() {
            for (j, t) in s.tenors.iter().enumerate() {
                out.push(RiskFactor {
                    name: format!("vol:{e}yx{t}y"),
                    kind: FactorKind::Vol {
                        expiry_index: i,
                        tenor_index: j,
                    },
                });
            }
        }
    }
    out
}

/// Applies an additive shock; returns the shocked market and how many vols
/// hit the floor.
pub fn apply_shock(market: &Market, factors: &[RiskFactor], shock: &[f64]) -> Result<(Market, usize)> {
    check_len(shock, factors.len())?;
    if let Some(v) = shock.iter().find(|v| !v.is_finite()) {
        return Err(Error::Argument(format!("shock contains non-finite value {v}")));
    }
    let mut m = market.clone();
    let mut floored = 0;
    for (f, &dx) in factors.iter().zip(shock) {
        match &f.kind {
            FactorKind::Rate { curve, tenor_index } => {
                let c = m
                    .curves
                    .get_mut(curve)
                    .ok_or_else(|| Error::Lookup(format!("no curve named '{curve}'")))?;
                c.zero_rates[*tenor_index] += dx;
            }
            FactorKind::Vol {
                expiry_index,
                tenor_index,
            } => {
                let s = m
                    .vol_surface
                    .as_mut()
                    .ok_or_else(|| Error::Lookup("market has no vol surface".into()))?;
                let v = &mut s.vols[*expiry_index][*tenor_index];
                *v += dx;
                if *v < VOL_FLOOR {
                    *v = VOL_FLOOR;
                    floored += 1;
                }
            }
        }
    }
    Ok((m, floored))
}

/// Portfolio value as a function of the shock vector.
///
/// Keeps three linearizable counters: portfolio valuations, trade
/// pricings, and floored-vol events.
pub struct ShockedPricer {
    portfolio: Portfolio,
    market: Market,
    factors: Vec<RiskFactor>,
    portfolio_calls: AtomicU64,
    trade_calls: AtomicU64,
    floor_events: AtomicU64,
}

impl ShockedPricer {
    pub fn new(portfolio: Portfolio, market: Market) -> Result<Self> {
        portfolio.validate()?;
        market.validate()?;
        for s in portfolio.swaps.iter().chain(portfolio.swaptions.iter().map(|o| &o.underlying)) {
            market.curve(&s.discount_curve)?;
            market.curve(&s.forecast_curve)?;
        }
        if !portfolio.swaptions.is_empty() {
            market.surface()?;
        }
        let factors = risk_factors(&market);
        Ok(ShockedPricer {
            portfolio,
            market,
            factors,
            portfolio_calls: AtomicU64::new(0),
            trade_calls: AtomicU64::new(0),
            floor_events: AtomicU64::new(0),
        })
    }

    pub fn portfolio(&self) -> &Portfolio {
        &self.portfolio
    }

    pub fn market(&self) -> &Market {
        &self.market
    }

    pub fn factors(&self) -> &[RiskFactor] {
        &self.factors
    }

    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }

    pub fn portfolio_calls(&self) -> u64 {
        self.portfolio_calls.load(Ordering::SeqCst)
    }

    pub fn trade_calls(&self) -> u64 {
        self.trade_calls.load(Ordering::SeqCst)
    }

    pub fn floor_events(&self) -> u64 {
        self.floor_events.load(Ordering::SeqCst)
    }

    pub fn reset_counters(&self) {
        self.portfolio_calls.store(0, Ordering::SeqCst);
        self.trade_calls.store(0, Ordering::SeqCst);
        self.floor_events.store(0, Ordering::SeqCst);
    }

    fn shocked(&self, shock: &[f64]) -> Result<Market> {
        let (m, floored) = apply_shock(&self.market, &self.factors, shock)?;
        if floored > 0 {
            self.floor_events.fetch_add(floored as u64, Ordering::SeqCst);
        }
        Ok(m)
    }

    /// Value of one trade under the shock; counts as one trade pricing.
    pub fn price_trade(&self, index: usize, shock: &[f64]) -> Result<f64> {
        let m = self.shocked(shock)?;
        self.trade_calls.fetch_add(1, Ordering::SeqCst);
        self.portfolio.price_trade(index, &m)
    }
}

impl Pricer for ShockedPricer {
    fn price(&self, shock: &[f64]) -> Result<f64> {
        let m = self.shocked(shock)?;
        self.portfolio_calls.fetch_add(1, Ordering::SeqCst);
        self.trade_calls
            .fetch_add(self.portfolio.trade_count() as u64, Ordering::SeqCst);
        self.portfolio.value(&m)
    }

    fn factor_count(&self) -> usize {
        self.factors.len()
    }
}

/// Build the shock-vector → portfolio-value function for a book.
pub fn shocked_pricer(portfolio: Portfolio, market: Market) -> Result<ShockedPricer> {
    ShockedPricer::new(portfolio, market)
}

/// One trade of a [`ShockedPricer`] as a pricer in its own right.
pub struct TradePricer<'a> {
    book: &'a ShockedPricer,
    index: usize,
}

impl<'a> TradePricer<'a> {
    pub fn new(book: &'a ShockedPricer, index: usize) -> Result<Self> {
        if index >= book.portfolio.trade_count() {
            return Err(Error::Argument(format!("no trade with index {index}")));
        }
        Ok(TradePricer { book, index })
    }
}

impl Pricer for TradePricer<'_> {
    fn price(&self, shock: &[f64]) -> Result<f64> {
        self.book.price_trade(self.index, shock)
    }

    fn factor_count(&self) -> usize {
        self.book.factor_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tenors() -> Vec<f64> {
        vec![0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0]
    }

    fn flat_market(rate: f64) -> Market {
        let mut curves = BTreeMap::new();
        curves.insert("disc".to_string(), ZeroCurve::flat(rate, tenors()).unwrap());
        Market::new(curves, None)
    }

    fn swap(fixed: f64, maturity: f64, freq: f64, dir: Direction) -> SwapTrade {
        SwapTrade {
            id: None,
            notional: 1e6,
            fixed_rate: fixed,
            start: 0.0,
            maturity,
            frequency: freq,
            direction: dir,
            discount_curve: "disc".into(),
            forecast_curve: "disc".into(),
        }
    }

    fn sloped_market() -> Market {
        let t = tenors();
        let disc: Vec<f64> = t.iter().map(|x| 0.02 + 0.001 * x.ln().max(0.0)).collect();
        let fwd: Vec<f64> = disc.iter().map(|r| r + 0.0025).collect();
        let mut curves = BTreeMap::new();
        curves.insert("ois".to_string(), ZeroCurve::new(t.clone(), disc).unwrap());
        curves.insert("libor".to_string(), ZeroCurve::new(t, fwd).unwrap());
        let surface = VolSurface::new(
            vec![0.5, 1.0, 5.0],
            vec![1.0, 5.0, 10.0],
            vec![vec![0.3, 0.28, 0.25], vec![0.29, 0.27, 0.24], vec![0.25, 0.23, 0.21]],
        )
        .unwrap();
        Market::new(curves, Some(surface))
    }

    #[test]
    fn log_linear_discounting() {
        let c = ZeroCurve::new(vec![1.0, 2.0], vec![0.01, 0.03]).unwrap();
        assert_eq!(c.discount(0.0), 1.0);
        assert!((c.discount(1.0) - (-0.01f64).exp()).abs() < 1e-15);
        assert!((c.discount(2.0) - (-0.06f64).exp()).abs() < 1e-15);
        // midpoint: ln DF linear between -0.01 and -0.06
        assert!((c.discount(1.5) - (-0.035f64).exp()).abs() < 1e-15);
        // before the first tenor: flat zero rate
        assert!((c.discount(0.5) - (-0.005f64).exp()).abs() < 1e-15);
        // flat forward beyond the last tenor: slope -0.05 per year
        assert!((c.discount(3.0) - (-0.11f64).exp()).abs() < 1e-15);
        assert!(ZeroCurve::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn swap_at_par_is_worthless() {
        let m = sloped_market();
        for (mat, freq) in [(5.0, 1.0), (7.25, 0.5), (12.0, 0.25)] {
            let mut s = swap(0.0, mat, freq, Direction::Payer);
            s.discount_curve = "ois".into();
            s.forecast_curve = "libor".into();
            s.fixed_rate = par_rate(&s, &m).unwrap();
            assert!(price_swap(&s, &m).unwrap().abs() <= 1e-9 * s.notional);
        }
    }

    #[test]
    fn zero_curve_zero_rate() {
        let m = flat_market(0.0);
        assert_eq!(price_swap(&swap(0.0, 5.0, 1.0, Direction::Payer), &m).unwrap(), 0.0);
    }

    #[test]
    fn five_year_payer_fixture() {
        // independent cash-flow sum: 1e6 · ((1 − e^{−0.1}) − 0.01 Σ_{i=1..5} e^{−0.02 i})
        let expected = 48055.51785938125;
        let pv = price_swap(&swap(0.01, 5.0, 1.0, Direction::Payer), &flat_market(0.02)).unwrap();
        assert!((pv - expected).abs() < 1e-6, "{pv}");
        let rv = price_swap(&swap(0.01, 5.0, 1.0, Direction::Receiver), &flat_market(0.02)).unwrap();
        assert_eq!(rv, -pv);
    }

    #[test]
    fn schedule_with_stub() {
        let s = swap(0.0, 2.25, 0.5, Direction::Payer);
        let times = s.schedule(0.0);
        assert_eq!(times.len(), 5);
        assert!((times[0] - 0.25).abs() < 1e-12);
        assert_eq!(*times.last().unwrap(), 2.25);
        assert!(SwapTrade { frequency: 0.3, ..s.clone() }.validate().is_err());
        assert!(SwapTrade { maturity: 0.0, ..s }.validate().is_err());
    }

    #[test]
    fn missing_curve_is_lookup_error() {
        let mut s = swap(0.01, 5.0, 1.0, Direction::Payer);
        s.forecast_curve = "nope".into();
        assert!(matches!(price_swap(&s, &flat_market(0.02)), Err(Error::Lookup(_))));
        assert!(matches!(
            ShockedPricer::new(Portfolio::new(vec![s], vec![]), flat_market(0.02)),
            Err(Error::Lookup(_))
        ));
    }

    fn swaption(strike: f64, option: Direction) -> SwaptionTrade {
        let mut u = swap(strike, 6.0, 0.5, Direction::Payer);
        u.discount_curve = "ois".into();
        u.forecast_curve = "libor".into();
        SwaptionTrade {
            id: Some("x".into()),
            expiry: 1.0,
            underlying: u,
            strike,
            option,
        }
    }

    fn forward_and_annuity(o: &SwaptionTrade, m: &Market) -> (f64, f64) {
        let (float, ann) = legs(&o.underlying, o.expiry, m).unwrap();
        (float / ann, ann)
    }

    #[test]
    fn put_call_parity() {
        let m = sloped_market();
        for k in [0.01, 0.025, 0.04] {
            let p = price_swaption_black(&swaption(k, Direction::Payer), &m).unwrap();
            let r = price_swaption_black(&swaption(k, Direction::Receiver), &m).unwrap();
            let (f, a) = forward_and_annuity(&swaption(k, Direction::Payer), &m);
            assert!(((p - r) - 1e6 * a * (f - k)).abs() <= 1e-10 * 1e6 * a);
        }
    }

    #[test]
    fn zero_vol_is_intrinsic() {
        let m = sloped_market();
        let o = swaption(0.015, Direction::Payer);
        let (f, a) = forward_and_annuity(&o, &m);
        assert!(f > 0.015);
        let mut tiny = m.clone();
        for row in &mut tiny.vol_surface.as_mut().unwrap().vols {
            row.iter_mut().for_each(|v| *v = 1e-9);
        }
        let pv = price_swaption_black(&o, &tiny).unwrap();
        assert!((pv - 1e6 * a * (f - 0.015)).abs() < 1e-6);
        assert!((black76(0.03, 0.02, 0.0, Direction::Payer).unwrap() - 0.01).abs() < 1e-17);
        assert_eq!(black76(0.03, 0.02, 0.0, Direction::Receiver).unwrap(), 0.0);
    }

    #[test]
    fn atm_black_expansion() {
        // σ√T = 0.2·√0.5; reference from numerical integration of the
        // lognormal payoff: 0.0016911593339104989
        let (f, sd) = (0.03, 0.2 * 0.5f64.sqrt());
        let v = black76(f, f, sd, Direction::Payer).unwrap();
        assert!((v - 0.0016911593339104989).abs() < 1e-15);
        // leading-order expansion F·σ√T/√(2π)
        assert!((v - f * sd * 0.3989422804014327).abs() < 2e-3 * v);
    }

    #[test]
    fn non_positive_forward_is_model_error() {
        assert!(matches!(black76(-0.01, 0.02, 0.1, Direction::Payer), Err(Error::ModelDomain(_))));
        let m = sloped_market();
        let factors = risk_factors(&m);
        let shock: Vec<f64> = factors.iter().map(|f| if f.is_rate() { -0.1 } else { 0.0 }).collect();
        let (shocked, _) = apply_shock(&m, &factors, &shock).unwrap();
        assert!(matches!(
            price_swaption_black(&swaption(0.02, Direction::Payer), &shocked),
            Err(Error::ModelDomain(_))
        ));
    }

    #[test]
    fn bilinear_vol_lookup() {
        let s = sloped_market().vol_surface.unwrap();
        assert_eq!(s.vol(1.0, 5.0), 0.27);
        assert!((s.vol(0.75, 1.0) - 0.295).abs() < 1e-15);
        assert!((s.vol(3.0, 7.5) - (0.5 * (0.27 + 0.24) * 0.5 + 0.5 * (0.23 + 0.21) * 0.5)).abs() < 1e-15);
        assert_eq!(s.vol(0.1, 50.0), 0.25);
    }

    fn book() -> ShockedPricer {
        let m = sloped_market();
        let mut s1 = swap(0.024, 5.0, 1.0, Direction::Payer);
        s1.discount_curve = "ois".into();
        s1.forecast_curve = "libor".into();
        let mut s2 = s1.clone();
        s2.direction = Direction::Receiver;
        s2.maturity = 10.0;
        let p = Portfolio::new(vec![s1, s2], vec![swaption(0.025, Direction::Payer), swaption(0.02, Direction::Receiver)]);
        ShockedPricer::new(p, m).unwrap()
    }

    #[test]
    fn zero_shock_is_base_value() {
        let b = book();
        let base = b.portfolio().value(b.market()).unwrap();
        assert_eq!(b.price(&vec![0.0; b.factor_count()]).unwrap(), base);
        assert_eq!(b.portfolio_calls(), 1);
        assert_eq!(b.trade_calls(), 4);
    }

    #[test]
    fn factor_layout() {
        let b = book();
        let f = b.factors();
        assert_eq!(f.len(), 2 * 10 + 9);
        assert!(f[..20].iter().all(RiskFactor::is_rate));
        assert!(f[20..].iter().all(RiskFactor::is_vol));
        assert_eq!(f[0].name, "libor:0.5y");
        assert_eq!(f[20].name, "vol:0.5yx1y");
        assert!(matches!(b.price(&[0.0; 3]), Err(Error::Argument(_))));
    }

    #[test]
    fn vol_floor_counted() {
        let b = book();
        let shock: Vec<f64> = b.factors().iter().map(|f| if f.is_vol() { -1.0 } else { 0.0 }).collect();
        assert!(b.price(&shock).is_ok());
        assert_eq!(b.floor_events(), 9);
    }

    #[test]
    fn parallel_bp_matches_pv01() {
        let m = sloped_market();
        let mut s = swap(0.024, 10.0, 0.5, Direction::Payer);
        s.discount_curve = "ois".into();
        s.forecast_curve = "libor".into();
        let ann = annuity(&s, &m).unwrap();
        let b = ShockedPricer::new(Portfolio::new(vec![s.clone()], vec![]), m).unwrap();
        let n = b.factor_count();
        let base = b.price(&vec![0.0; n]).unwrap();
        let up = b.price(&vec![1e-4; n]).unwrap();
        // payer gains roughly notional · annuity · 1bp
        let pv01 = s.notional * ann * 1e-4;
        assert!(((up - base) - pv01).abs() <= 0.01 * pv01, "{} vs {}", up - base, pv01);
    }

    #[test]
    fn instrumented_counts() {
        let p = InstrumentedPricer::new(FnPricer::new(2, |x| x[0] + x[1]));
        for _ in 0..7 {
            p.price(&[1.0, 2.0]).unwrap();
        }
        assert_eq!(p.call_count(), 7);
        assert!(p.price(&[1.0]).is_err());
        assert_eq!(p.call_count(), 8);
    }

    #[test]
    fn deterministic_prices() {
        let b = book();
        let shock: Vec<f64> = (0..b.factor_count()).map(|i| 1e-4 * (i as f64).sin()).collect();
        let a = b.price(&shock).unwrap();
        let c = b.price(&shock).unwrap();
        assert_eq!(a.to_bits(), c.to_bits());
    }

    #[test]
    fn json_round_trip() {
        let b = book();
        let pj = b.portfolio().to_json().unwrap();
        assert_eq!(&Portfolio::from_json(&pj).unwrap(), b.portfolio());
        let mj = b.market().to_json().unwrap();
        assert_eq!(&Market::from_json(&mj).unwrap(), b.market());
        let bad = mj.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(Market::from_json(&bad).is_err());
    }
}
