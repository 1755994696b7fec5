//! Synthetic desk-scale setups: a swaps book driven by two zero curves and a
//! swaptions book that adds a lognormal vol surface.
//!
//! Everything is generated from a seed. The shock histories are Gaussian
//! with smooth factor structure: rate curves move mostly in level, slope and
//! curvature, while the vol surface carries about nine comparable modes, so
//! keeping too few vol components loses a visible part of the P&L.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricers::{
    par_rate, risk_factors, Direction, FactorKind, Market, Portfolio, SwapTrade, SwaptionTrade, VolSurface, ZeroCurve,
};
use crate::risk::{BlockCorrelation, FactorBlock, SyntheticSpec, VolScale};

pub const CURVE_TENORS: [f64; 20] = [
    0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 40.0,
];
pub const VOL_EXPIRIES: [f64; 8] = [0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0];
pub const VOL_TENORS: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];

/// A complete demo: market, book, shock model and the suggested run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoFixture {
    pub name: String,
    pub seed: u64,
    pub market: Market,
    pub portfolio: Portfolio,
    pub synthetic: SyntheticSpec,
    /// Suggested PCA dimension and horizons.
    pub pca: String,
    pub horizons: Vec<String>,
}

pub const DEMO_NAMES: [&str; 2] = ["swaps", "swaptions"];

pub fn fixture(name: &str) -> Result<DemoFixture> {
    match name {
        "swaps" => Ok(swaps()),
        "swaptions" => Ok(swaptions()),
        _ => Err(Error::Configuration(format!(
            "unknown demo '{name}' (expected one of {})",
            DEMO_NAMES.join(", ")
        ))),
    }
}

fn base_market(with_vols: bool) -> Market {
    let ois: Vec<f64> = CURVE_TENORS.iter().map(|t| 0.025 + 0.01 * (1.0 - (-t / 5.0).exp())).collect();
    let libor: Vec<f64> = CURVE_TENORS
        .iter()
        .zip(&ois)
        .map(|(t, r)| r + 0.002 + 0.0005 * (1.0 - (-t / 3.0).exp()))
        .collect();
    let mut curves = BTreeMap::new();
    curves.insert("ois".to_string(), ZeroCurve { tenors: CURVE_TENORS.to_vec(), zero_rates: ois });
    curves.insert("libor".to_string(), ZeroCurve { tenors: CURVE_TENORS.to_vec(), zero_rates: libor });
    let surface = with_vols.then(|| VolSurface {
        expiries: VOL_EXPIRIES.to_vec(),
        tenors: VOL_TENORS.to_vec(),
        vols: VOL_EXPIRIES
            .iter()
            .map(|e| VOL_TENORS.iter().map(|t| 0.18 + 0.10 * (-e / 3.0).exp() + 0.03 * (-t / 5.0).exp()).collect())
            .collect(),
    });
    Market::new(curves, surface)
}

/// Position of `t` on a log axis scaled to [0, 1].
fn log_position(t: f64, axis: &[f64]) -> f64 {
    let (lo, hi) = (axis[0].ln(), axis[axis.len() - 1].ln());
    (t.ln() - lo) / (hi - lo)
}

/// Rate loadings: cosine modes in log tenor shared by both curves, plus a
/// basis mode moving the curves against each other. Returns names, loading
/// rows and per-factor vols.
fn rate_rows(market: &Market, mode_weights: &[f64], basis: f64, vol: f64) -> (Vec<String>, Vec<Vec<f64>>, Vec<f64>) {
    let mut names = Vec::new();
    let mut loadings = Vec::new();
    let mut vols = Vec::new();
    for f in risk_factors(market).iter().filter(|f| f.is_rate()) {
        let FactorKind::Rate { curve, tenor_index } = &f.kind else { unreachable!() };
        let t = CURVE_TENORS[*tenor_index];
        let x = log_position(t, &CURVE_TENORS);
        let mut row: Vec<f64> = mode_weights.iter().enumerate().map(|(k, w)| w * (k as f64 * PI * x).cos()).collect();
        row.push(if curve == "libor" { basis } else { -basis });
        names.push(f.name.clone());
        loadings.push(row);
        // short rates move a little more
        vols.push(vol * (0.8 + 0.4 * (-t / 3.0).exp()));
    }
    (names, loadings, vols)
}

/// Vol loadings: products of cosine modes in log expiry and log tenor.
fn vol_rows(market: &Market, modes: &[(usize, usize, f64)]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut names = Vec::new();
    let mut loadings = Vec::new();
    for f in risk_factors(market).iter().filter(|f| f.is_vol()) {
        let FactorKind::Vol { expiry_index, tenor_index } = f.kind else { unreachable!() };
        let u = log_position(VOL_EXPIRIES[expiry_index], &VOL_EXPIRIES);
        let v = log_position(VOL_TENORS[tenor_index], &VOL_TENORS);
        names.push(f.name.clone());
        loadings.push(
            modes
                .iter()
                .map(|&(p, q, w)| w * (p as f64 * PI * u).cos() * (q as f64 * PI * v).cos())
                .collect(),
        );
    }
    (names, loadings)
}

const RATE_MODES: [f64; 5] = [1.0, 0.45, 0.2, 0.06, 0.03];

/// Loading of every vol on the rate level mode.
const VOL_RATE_LINK: f64 = 0.8;

/// 635 swaps, 40 rate factors, 3,131 scenarios.
pub fn swaps() -> DemoFixture {
    let seed = 3131;
    let market = base_market(false);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let swaps = (0..635).map(|i| random_swap(&mut rng, &market, i)).collect();
    let synthetic = SyntheticSpec {
        blocks: vec![{
            let (names, loadings, vols) = rate_rows(&market, &RATE_MODES, 0.05, 0.0025);
            FactorBlock {
                names,
                vol: VolScale::PerFactor(vols),
                correlation: BlockCorrelation::Factors { loadings, nugget: 1e-4 },
            }
        }],
        cross_correlation: 0.0,
        count: 3131,
    };
    DemoFixture {
        name: "swaps".into(),
        seed,
        market,
        portfolio: Portfolio::new(swaps, vec![]),
        synthetic,
        pca: "3".into(),
        horizons: vec!["10d".into()],
    }
}

/// 425 swaptions, mostly straddles, on 40 rate and 40 vol factors; 3,108
/// scenarios.
pub fn swaptions() -> DemoFixture {
    let seed = 3108;
    let market = base_market(true);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut options: Vec<SwaptionTrade> = (0..213).flat_map(|i| random_straddle(&mut rng, &market, i)).collect();
    options.truncate(425);
    let vol_modes = [
        (0, 0, 1.0),
        (1, 0, 0.97),
        (0, 1, 0.94),
        (1, 1, 0.91),
        (2, 0, 0.88),
        (0, 2, 0.85),
        (2, 1, 0.82),
        (1, 2, 0.79),
        (3, 0, 0.76),
        (2, 2, 0.73),
    ];
    // One joint block: vols also load on the rate level mode, which gives a
    // moderate rate-vol correlation while keeping the matrix PSD.
    let (mut names, rate_loadings, mut vols) = rate_rows(&market, &RATE_MODES, 0.05, 0.0015);
    let (vol_names, vol_loadings) = vol_rows(&market, &vol_modes);
    let (nr, nv) = (RATE_MODES.len() + 1, vol_modes.len());
    let mut loadings: Vec<Vec<f64>> = rate_loadings
        .into_iter()
        .map(|mut r| {
            r.resize(nr + nv, 0.0);
            r
        })
        .collect();
    for row in vol_loadings {
        let mut r = vec![0.0; nr];
        r[0] = VOL_RATE_LINK;
        r.extend(row);
        loadings.push(r);
    }
    names.extend(vol_names);
    vols.extend(std::iter::repeat_n(0.02, loadings.len() - vols.len()));
    let synthetic = SyntheticSpec {
        blocks: vec![FactorBlock {
            names,
            vol: VolScale::PerFactor(vols),
            correlation: BlockCorrelation::Factors { loadings, nugget: 1e-4 },
        }],
        cross_correlation: 0.0,
        count: 3108,
    };
    DemoFixture {
        name: "swaptions".into(),
        seed,
        market,
        portfolio: Portfolio::new(vec![], options),
        synthetic,
        pca: "20".into(),
        horizons: vec!["10d".into(), "60d".into()],
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

fn random_swap(rng: &mut ChaCha8Rng, market: &Market, i: usize) -> SwapTrade {
    let maturity = pick(rng, &[1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0]);
    let forecast = pick(rng, &["libor", "libor", "ois"]);
    let mut s = SwapTrade {
        id: Some(format!("SW{i:04}")),
        notional: round_to(rng.random_range(1e6..5e7), 1e5),
        fixed_rate: 0.0,
        start: 0.0,
        maturity,
        frequency: pick(rng, &[0.25, 0.5, 1.0]),
        direction: pick(rng, &[Direction::Payer, Direction::Receiver]),
        discount_curve: "ois".into(),
        forecast_curve: forecast.into(),
    };
    let par = par_rate(&s, market).expect("demo curves are present");
    s.fixed_rate = round_to(par + rng.random_range(-0.01..0.01), 1e-5);
    s
}

/// A straddle: payer and receiver on the same underlying and strike, so
/// the pair is close to delta-neutral and mostly carries vega. Strikes sit
/// within 10% of the forward.
fn random_straddle(rng: &mut ChaCha8Rng, market: &Market, i: usize) -> [SwaptionTrade; 2] {
    let expiry = pick(rng, &[0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0]);
    let tenor = pick(rng, &[1.0, 2.0, 5.0, 10.0, 15.0, 20.0]);
    let long = rng.random_bool(0.5);
    let mut underlying = SwapTrade {
        id: None,
        notional: round_to(rng.random_range(1e6..5e7), 1e5) * if long { 1.0 } else { -1.0 },
        fixed_rate: 0.0,
        start: expiry,
        maturity: expiry + tenor,
        frequency: pick(rng, &[0.5, 1.0]),
        direction: Direction::Payer,
        discount_curve: "ois".into(),
        forecast_curve: "libor".into(),
    };
    let forward = par_rate(&underlying, market).expect("demo curves are present");
    let strike = round_to(forward * (1.0 + rng.random_range(-0.1..0.1)), 1e-5);
    underlying.fixed_rate = strike;
    [Direction::Payer, Direction::Receiver].map(|option| SwaptionTrade {
        id: Some(format!("SO{i:04}{}", if option == Direction::Payer { 'P' } else { 'R' })),
        expiry,
        underlying: SwapTrade { direction: option, ..underlying.clone() },
        strike,
        option,
    })
}
