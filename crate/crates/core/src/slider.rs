//! Chebyshev sliders.
//!
//! A slider partitions the input coordinates into slides. Each slide is a
//! low-dimensional Chebyshev tensor of `f` restricted to its coordinates,
//! every other coordinate frozen at the pivot `z`. With `v = f(z)` the
//! approximation is
//!
//! ```text
//! f(x) ≈ v + Σ_i (s_i(x restricted to slide i) − v)
//! ```
//!
//! Building costs one call for the pivot plus one call per node of each
//! slide mesh.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cheb1d::Evaluation;
use crate::chebtensor::{build_mesh, ChebyshevTensor, HyperRectangle};
use crate::error::{Error, Result};

/// Default number of Chebyshev points per slide dimension.
pub const DEFAULT_POINTS_PER_DIM: usize = 5;

/// Chebyshev points per dimension, shared by all slides or given per slide.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointsPerDim {
    Uniform(usize),
    PerSlide(Vec<usize>),
}

impl Default for PointsPerDim {
    fn default() -> Self {
        PointsPerDim::Uniform(DEFAULT_POINTS_PER_DIM)
    }
}

/// Slide dimensions, points per dimension and an optional coordinate order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliderConfig {
    pub slide_dims: Vec<usize>,
    #[serde(default)]
    pub points: PointsPerDim,
    /// Input coordinates in the order slides consume them. `None` means
    /// `0..n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
}

impl SliderConfig {
    pub fn new(slide_dims: Vec<usize>) -> Self {
        SliderConfig {
            slide_dims,
            points: PointsPerDim::default(),
            permutation: None,
        }
    }

    /// `{1, 1, …, 1}` over `n` coordinates.
    pub fn all_ones(n: usize) -> Self {
        Self::new(vec![1; n])
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = PointsPerDim::Uniform(points);
        self
    }

    pub fn with_points_per_slide(mut self, points: Vec<usize>) -> Self {
        self.points = PointsPerDim::PerSlide(points);
        self
    }

    pub fn with_permutation(mut self, permutation: Vec<usize>) -> Self {
        self.permutation = Some(permutation);
        self
    }

    pub fn input_dimension(&self) -> usize {
        self.slide_dims.iter().sum()
    }

    /// Parses a tuple such as `3,1x17`, where a trailing `*` repeat count
    /// (`2,1x*`) fills up to `total` coordinates.
    pub fn parse_with_total(s: &str, total: usize) -> Result<Self> {
        let body = strip_braces(s);
        let mut dims = Vec::new();
        let mut fill = None;
        for (pos, tok) in body.split(',').map(str::trim).enumerate() {
            if tok.is_empty() {
                return Err(Error::Configuration(format!("empty entry in slider tuple '{s}'")));
            }
            match tok.split_once(['x', 'X']) {
                Some((d, "*")) => {
                    if fill.is_some() {
                        return Err(Error::Configuration(format!(
                            "slider tuple '{s}' has more than one '*' repeat"
                        )));
                    }
                    fill = Some((pos, parse_dim(d, s)?));
                    dims.push(Vec::new());
                }
                Some((d, count)) => {
                    let d = parse_dim(d, s)?;
                    let count: usize = count.parse().map_err(|_| {
                        Error::Configuration(format!("bad repeat count '{count}' in '{s}'"))
                    })?;
                    dims.push(vec![d; count]);
                }
                None => dims.push(vec![parse_dim(tok, s)?]),
            }
        }
        if let Some((pos, d)) = fill {
            let fixed: usize = dims.iter().flatten().sum();
            let rest = total.checked_sub(fixed).filter(|r| r % d == 0).ok_or_else(|| {
                Error::Configuration(format!(
                    "slider tuple '{s}' cannot be filled to {total} coordinates"
                ))
            })?;
            dims[pos] = vec![d; rest / d];
        }
        let config = Self::new(dims.into_iter().flatten().collect());
        if config.input_dimension() != total {
            return Err(Error::Configuration(format!(
                "slider tuple '{s}' covers {} coordinates, expected {total}",
                config.input_dimension()
            )));
        }
        Ok(config)
    }

    /// Mesh shape of every slide.
    pub fn slide_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let points: Vec<usize> = match &self.points {
            PointsPerDim::Uniform(p) => vec![*p; self.slide_dims.len()],
            PointsPerDim::PerSlide(p) => {
                if p.len() != self.slide_dims.len() {
                    return Err(Error::Configuration(format!(
                        "{} per-slide point counts for {} slides",
                        p.len(),
                        self.slide_dims.len()
                    )));
                }
                p.clone()
            }
        };
        if points.contains(&0) {
            return Err(Error::Configuration("points per dimension must be positive".into()));
        }
        Ok(self
            .slide_dims
            .iter()
            .zip(points)
            .map(|(&d, p)| vec![p; d])
            .collect())
    }

    /// Pricer calls needed to build: `1 + Σ_i ∏(slide i mesh shape)`.
    pub fn build_cost(&self) -> Result<usize> {
        Ok(1 + self
            .slide_shapes()?
            .iter()
            .map(|s| s.iter().product::<usize>())
            .sum::<usize>())
    }

    fn validate(&self, n: usize) -> Result<Vec<usize>> {
        if self.slide_dims.is_empty() || self.slide_dims.contains(&0) {
            return Err(Error::Configuration(
                "slide dimensions must be a non-empty list of positive integers".into(),
            ));
        }
        if self.input_dimension() != n {
            return Err(Error::Configuration(format!(
                "slide dimensions sum to {}, function has {n} inputs",
                self.input_dimension()
            )));
        }
        let order: Vec<usize> = match &self.permutation {
            None => (0..n).collect(),
            Some(p) => {
                let mut seen = vec![false; n];
                for &c in p {
                    if c >= n || std::mem::replace(&mut seen[c], true) {
                        return Err(Error::Configuration(format!(
                            "permutation {p:?} is not a permutation of 0..{n}"
                        )));
                    }
                }
                if p.len() != n {
                    return Err(Error::Configuration(format!(
                        "permutation {p:?} is not a permutation of 0..{n}"
                    )));
                }
                p.clone()
            }
        };
        Ok(order)
    }
}

fn strip_braces(s: &str) -> &str {
    let t = s.trim();
    t.strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .unwrap_or(t)
}

fn parse_dim(tok: &str, whole: &str) -> Result<usize> {
    match tok.trim().parse::<usize>() {
        Ok(d) if d > 0 => Ok(d),
        _ => Err(Error::Configuration(format!(
            "bad slide dimension '{tok}' in slider tuple '{whole}'"
        ))),
    }
}

impl FromStr for SliderConfig {
    type Err = Error;

    /// Parses explicit tuples (`1x20`, `3,1x17`, `{2,1,1}`); `*` repeats need
    /// [`SliderConfig::parse_with_total`].
    fn from_str(s: &str) -> Result<Self> {
        if s.contains('*') {
            return Err(Error::Configuration(format!(
                "slider tuple '{s}' uses '*' and needs a known total dimension"
            )));
        }
        let total = strip_braces(s)
            .split(',')
            .map(|tok| match tok.trim().split_once(['x', 'X']) {
                Some((d, c)) => Ok(parse_dim(d, s)? * c.trim().parse::<usize>().map_err(|_| {
                    Error::Configuration(format!("bad repeat count '{c}' in '{s}'"))
                })?),
                None => parse_dim(tok, s),
            })
            .sum::<Result<usize>>()?;
        Self::parse_with_total(s, total)
    }
}

impl fmt::Display for SliderConfig {
    /// Run-length form, e.g. `3,1x17`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut i = 0;
        while i < self.slide_dims.len() {
            let d = self.slide_dims[i];
            let run = self.slide_dims[i..].iter().take_while(|&&x| x == d).count();
            if !first {
                f.write_str(",")?;
            }
            first = false;
            if run > 1 {
                write!(f, "{d}x{run}")?;
            } else {
                write!(f, "{d}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// One slide: a tensor over a subset of the input coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slide {
    coord_indices: Vec<usize>,
    tensor: ChebyshevTensor,
}

impl Slide {
    pub fn coord_indices(&self) -> &[usize] {
        &self.coord_indices
    }

    pub fn tensor(&self) -> &ChebyshevTensor {
        &self.tensor
    }

    pub fn build_calls(&self) -> usize {
        self.tensor.mesh().total_points()
    }
}

/// A built Chebyshev slider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slider {
    pivot: Vec<f64>,
    pivot_value: f64,
    slides: Vec<Slide>,
    domain: HyperRectangle,
    build_call_count: usize,
}

impl Slider {
    /// Builds a slider for an infallible `f`.
    pub fn build<F>(
        f: F,
        domain: &HyperRectangle,
        pivot: &[f64],
        config: &SliderConfig,
    ) -> Result<Self>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut f = f;
        Self::try_build(|x| Ok(f(x)), domain, pivot, config)
    }

    /// Builds a slider for a fallible `f`.
    ///
    /// Slides take coordinates in configuration order: the first slide takes
    /// the first `slide_dims[0]` coordinates (after the optional
    /// permutation), and so on.
    pub fn try_build<F>(
        mut f: F,
        domain: &HyperRectangle,
        pivot: &[f64],
        config: &SliderConfig,
    ) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let n = domain.dimension();
        let order = config.validate(n)?;
        if pivot.len() != n {
            return Err(Error::Precondition(format!(
                "pivot has {} coordinates, domain has {n}",
                pivot.len()
            )));
        }
        if !domain.contains(pivot) {
            return Err(Error::Precondition(format!("pivot {pivot:?} lies outside the domain")));
        }
        let shapes = config.slide_shapes()?;

        let pivot_value = f(pivot)?;
        if !pivot_value.is_finite() {
            return Err(Error::Sampling {
                location: "pivot".into(),
                value: pivot_value,
            });
        }
        let mut calls = 1;
        let mut slides = Vec::with_capacity(shapes.len());
        let mut start = 0;
        let mut point = pivot.to_vec();
        for (&dim, shape) in config.slide_dims.iter().zip(&shapes) {
            let coords = order[start..start + dim].to_vec();
            start += dim;
            let mesh = build_mesh(&domain.select(&coords)?, shape)?;
            let tensor = ChebyshevTensor::try_build(mesh, |y| {
                for (&c, &v) in coords.iter().zip(y) {
                    point[c] = v;
                }
                let r = f(&point);
                for &c in &coords {
                    point[c] = pivot[c];
                }
                r
            })?;
            calls += tensor.mesh().total_points();
            slides.push(Slide {
                coord_indices: coords,
                tensor,
            });
        }

        Ok(Slider {
            pivot: pivot.to_vec(),
            pivot_value,
            slides,
            domain: domain.clone(),
            build_call_count: calls,
        })
    }

    pub fn pivot(&self) -> &[f64] {
        &self.pivot
    }

    pub fn pivot_value(&self) -> f64 {
        self.pivot_value
    }

    pub fn slides(&self) -> &[Slide] {
        &self.slides
    }

    pub fn domain(&self) -> &HyperRectangle {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    /// Pricer calls spent building, pivot included.
    pub fn build_call_count(&self) -> usize {
        self.build_call_count
    }

    /// Slide dimensions in build order.
    pub fn slide_dims(&self) -> Vec<usize> {
        self.slides.iter().map(|s| s.coord_indices.len()).collect()
    }

    /// `v + Σ_i (s_i(x) − v)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        if x.len() != self.dimension() {
            return Err(Error::Argument(format!(
                "point has {} coordinates, slider is {}-dimensional",
                x.len(),
                self.dimension()
            )));
        }
        let v = self.pivot_value;
        let mut acc = v;
        let mut clamped = false;
        let mut sub = Vec::new();
        for slide in &self.slides {
            sub.clear();
            sub.extend(slide.coord_indices.iter().map(|&c| x[c]));
            let e = slide.tensor.evaluate(&sub)?;
            clamped |= e.clamped;
            acc += e.value - v;
        }
        Ok(Evaluation { value: acc, clamped })
    }

    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x).map(|e| e.value)
    }

    /// Structural checks for a deserialized slider.
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let n = self.dimension();
        if self.pivot.len() != n || !self.domain.contains(&self.pivot) {
            return Err(Error::Configuration("pivot inconsistent with domain".into()));
        }
        if !self.pivot_value.is_finite() {
            return Err(Error::Configuration("pivot value is not finite".into()));
        }
        let mut seen = vec![false; n];
        for slide in &self.slides {
            if slide.coord_indices.len() != slide.tensor.dimension() {
                return Err(Error::Configuration("slide coordinates do not match its tensor".into()));
            }
            let grids = slide.tensor.mesh().grids();
            for (&c, g) in slide.coord_indices.iter().zip(grids) {
                if c >= n || std::mem::replace(&mut seen[c], true) {
                    return Err(Error::Configuration(format!(
                        "coordinate {c} is claimed by more than one slide or out of range"
                    )));
                }
                g.validate()?;
                if g.domain() != self.domain.dims()[c] {
                    return Err(Error::Configuration(format!(
                        "slide grid domain for coordinate {c} differs from the slider domain"
                    )));
                }
            }
            ChebyshevTensor::from_values(slide.tensor.mesh().clone(), slide.tensor.values().to_vec())?;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Configuration("slides do not cover every coordinate".into()));
        }
        let expected = 1 + self.slides.iter().map(Slide::build_calls).sum::<usize>();
        if expected != self.build_call_count {
            return Err(Error::Configuration(format!(
                "build call count {} inconsistent with slide meshes ({expected})",
                self.build_call_count
            )));
        }
        Ok(())
    }
}

/// Pricer calls spent building `slider`.
pub fn slider_call_count(slider: &Slider) -> usize {
    slider.build_call_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube(n: usize) -> HyperRectangle {
        HyperRectangle::cube(-1.0, 1.0, n).unwrap()
    }

    #[test]
    fn parse_tuples() {
        let c: SliderConfig = "1x20".parse().unwrap();
        assert_eq!(c.slide_dims, vec![1; 20]);
        let c: SliderConfig = "3,1x17".parse().unwrap();
        assert_eq!(c.input_dimension(), 20);
        assert_eq!(c.slide_dims[0], 3);
        assert_eq!(c.to_string(), "3,1x17");
        let c: SliderConfig = "{2,1,1}".parse().unwrap();
        assert_eq!(c.slide_dims, vec![2, 1, 1]);
        assert_eq!(c.to_string(), "2,1x2");
        let c = SliderConfig::parse_with_total("2,1x*", 5).unwrap();
        assert_eq!(c.slide_dims, vec![2, 1, 1, 1]);
        let c = SliderConfig::parse_with_total("3,1x*", 3).unwrap();
        assert_eq!(c.slide_dims, vec![3]);
        assert!(SliderConfig::parse_with_total("3,1x*", 2).is_err());
        assert!(SliderConfig::parse_with_total("1x4", 5).is_err());
        assert!("0,1".parse::<SliderConfig>().is_err());
        assert!("1x*".parse::<SliderConfig>().is_err());
        assert!("a".parse::<SliderConfig>().is_err());
    }

    #[test]
    fn build_cost_examples() {
        let ones = SliderConfig::all_ones(20);
        assert_eq!(ones.build_cost().unwrap(), 101);
        let two: SliderConfig = "2,1x18".parse().unwrap();
        assert_eq!(two.build_cost().unwrap(), 1 + 25 + 18 * 5);
        let three: SliderConfig = "3,1x17".parse().unwrap();
        assert_eq!(three.build_cost().unwrap(), 1 + 125 + 17 * 5);
    }

    #[test]
    fn twenty_ones_counts_calls() {
        let mut calls = 0;
        let s = Slider::build(
            |x| {
                calls += 1;
                x.iter().map(|v| v.sin()).sum()
            },
            &cube(20),
            &[0.0; 20],
            &SliderConfig::all_ones(20),
        )
        .unwrap();
        assert_eq!(calls, 101);
        assert_eq!(slider_call_count(&s), 101);
    }

    #[test]
    fn single_slide_is_full_tensor() {
        let mut calls = 0;
        let f = |x: &[f64]| (x[0] * x[1] + x[2]).exp();
        let s = Slider::build(
            |x| {
                calls += 1;
                f(x)
            },
            &cube(3),
            &[0.1, 0.2, -0.3],
            &SliderConfig::new(vec![3]).with_points(10),
        )
        .unwrap();
        assert_eq!(calls, 1001);
        assert_eq!(s.build_call_count(), 1001);
        let x = [0.4, -0.7, 0.25];
        assert!((s.value_at(&x).unwrap() - f(&x)).abs() < 1e-8);
    }

    #[test]
    fn restrictions_of_sum() {
        let s = Slider::build(
            |x| x[0] + x[1],
            &cube(2),
            &[0.25, -0.5],
            &SliderConfig::all_ones(2),
        )
        .unwrap();
        let (a, b) = (&s.slides()[0], &s.slides()[1]);
        assert_eq!(a.coord_indices(), &[0]);
        assert_eq!(b.coord_indices(), &[1]);
        for (x, v) in a.tensor().mesh().grids()[0].nodes().iter().zip(a.tensor().values()) {
            assert_eq!(*v, x + -0.5);
        }
        for (y, v) in b.tensor().mesh().grids()[0].nodes().iter().zip(b.tensor().values()) {
            assert_eq!(*v, 0.25 + y);
        }
    }

    #[test]
    fn additive_function_exact_at_point() {
        let s = Slider::build(|x| x[0] + x[1], &cube(2), &[0.0, 0.0], &SliderConfig::all_ones(2)).unwrap();
        assert!((s.value_at(&[0.3, 0.4]).unwrap() - 0.7).abs() <= 1e-12);
    }

    #[test]
    fn cross_term_is_missed() {
        let s = Slider::build(|x| x[0] * x[1], &cube(2), &[0.0, 0.0], &SliderConfig::all_ones(2)).unwrap();
        assert_eq!(s.value_at(&[1.0, 1.0]).unwrap(), 0.0);
        let s = Slider::build(|x| x[0] * x[1], &cube(2), &[0.0, 0.0], &SliderConfig::new(vec![2])).unwrap();
        assert!((s.value_at(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pivot_returns_pivot_value() {
        // z at the centre of the box: with an odd point count it is a node of
        // every slide grid, so each slide returns v there.
        let f = |x: &[f64]| (x[0] - x[1] * x[2]).cos() + x[3] * x[3];
        let z = [0.3, -0.2, 0.7, 0.1];
        let domain = HyperRectangle::from_bounds(&[(0.3 - 0.5, 0.3 + 0.5), (-0.2 - 1.0, -0.2 + 1.0), (0.7 - 0.25, 0.7 + 0.25), (0.1 - 2.0, 0.1 + 2.0)]).unwrap();
        for cfg in ["1x4", "2,1,1", "3,1", "4", "2,2"] {
            for points in [3, 5, 9] {
                let s = Slider::build(f, &domain, &z, &cfg.parse::<SliderConfig>().unwrap().with_points(points)).unwrap();
                let v = s.value_at(&z).unwrap();
                assert!((v - f(&z)).abs() <= 1e-12 * f(&z).abs(), "{cfg}");
                assert_eq!(s.pivot_value(), f(&z));
            }
        }
    }

    #[test]
    fn off_node_pivot_error_is_interpolation_error() {
        let f = |x: &[f64]| (x[0] - x[1]).exp();
        let z = [0.3, -0.2];
        let s = Slider::build(f, &cube(2), &z, &SliderConfig::all_ones(2).with_points(12)).unwrap();
        assert!((s.value_at(&z).unwrap() - f(&z)).abs() < 1e-9);
    }

    #[test]
    fn permutation_assigns_coordinates() {
        let cfg = SliderConfig::new(vec![2, 1]).with_permutation(vec![2, 0, 1]);
        let s = Slider::build(|x| x[0] * x[2] + x[1], &cube(3), &[0.0; 3], &cfg).unwrap();
        assert_eq!(s.slides()[0].coord_indices(), &[2, 0]);
        assert_eq!(s.slides()[1].coord_indices(), &[1]);
        assert!((s.value_at(&[0.5, 0.3, -0.4]).unwrap() - (-0.2 + 0.3)).abs() < 1e-14);
        let bad = SliderConfig::new(vec![2, 1]).with_permutation(vec![0, 0, 1]);
        assert!(Slider::build(|_| 0.0, &cube(3), &[0.0; 3], &bad).is_err());
    }

    #[test]
    fn configuration_errors() {
        let f = |_: &[f64]| 1.0;
        assert!(matches!(
            Slider::build(f, &cube(3), &[0.0; 3], &SliderConfig::all_ones(2)),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(
            Slider::build(f, &cube(2), &[0.0, 2.0], &SliderConfig::all_ones(2)),
            Err(Error::Precondition(_))
        ));
        let s = Slider::build(f, &cube(2), &[0.0, 0.0], &SliderConfig::all_ones(2)).unwrap();
        assert!(matches!(s.evaluate(&[0.0]), Err(Error::Argument(_))));
        let per = SliderConfig::new(vec![1, 1]).with_points_per_slide(vec![3]);
        assert!(Slider::build(f, &cube(2), &[0.0, 0.0], &per).is_err());
    }

    #[test]
    fn per_slide_points() {
        let cfg = SliderConfig::new(vec![2, 1]).with_points_per_slide(vec![4, 7]);
        let mut calls = 0;
        let s = Slider::build(
            |x| {
                calls += 1;
                x[0] + x[1] + x[2]
            },
            &cube(3),
            &[0.0; 3],
            &cfg,
        )
        .unwrap();
        assert_eq!(calls, 1 + 16 + 7);
        assert_eq!(s.build_call_count(), cfg.build_cost().unwrap());
        s.validate().unwrap();
    }

    #[test]
    fn partition_covers_all_coordinates() {
        for cfg in ["1x6", "2,1x4", "3,1x3", "3,3", "6", "2,2,2"] {
            let cfg: SliderConfig = cfg.parse().unwrap();
            let s = Slider::build(|x| x.iter().sum(), &cube(6), &[0.0; 6], &cfg).unwrap();
            let mut all: Vec<usize> = s.slides().iter().flat_map(|sl| sl.coord_indices().to_vec()).collect();
            all.sort_unstable();
            assert_eq!(all, (0..6).collect::<Vec<_>>());
            s.validate().unwrap();
        }
    }

    #[test]
    fn refinement_helps_with_pair_interaction() {
        let n = 6;
        let f = |x: &[f64]| (x[0] * x[1]).sin() + x.iter().skip(2).map(|v| v.exp()).sum::<f64>() + x[0];
        let z = vec![0.1; n];
        let ones = Slider::build(f, &cube(n), &z, &SliderConfig::all_ones(n)).unwrap();
        let two = Slider::build(f, &cube(n), &z, &SliderConfig::parse_with_total("2,1x*", n).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut e1, mut e2) = (0.0f64, 0.0f64);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            e1 = e1.max((ones.value_at(&x).unwrap() - f(&x)).abs());
            e2 = e2.max((two.value_at(&x).unwrap() - f(&x)).abs());
        }
        assert!(e2 <= e1, "{e2} > {e1}");
        assert!(e2 < 1e-2);
    }

    proptest! {
        #[test]
        fn additive_polynomials_reproduced(
            coeffs in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 5), 5),
            x in proptest::collection::vec(-1.5f64..2.0, 5),
            z in proptest::collection::vec(-1.5f64..2.0, 5),
            cfg_idx in 0usize..5,
        ) {
            let cfgs = ["1x5", "2,1x3", "3,1x2", "2,3", "5"];
            let poly = |c: &[f64], t: f64| c.iter().rev().fold(0.0, |a, k| a * t + k);
            let f = |p: &[f64]| p.iter().zip(&coeffs).map(|(&t, c)| poly(c, t)).sum::<f64>();
            let domain = HyperRectangle::cube(-1.5, 2.0, 5).unwrap();
            let s = Slider::build(f, &domain, &z, &cfgs[cfg_idx].parse().unwrap()).unwrap();
            let (a, e) = (s.value_at(&x).unwrap(), f(&x));
            let scale = e.abs().max(coeffs.iter().flatten().map(|c| c.abs()).sum::<f64>());
            prop_assert!((a - e).abs() <= 1e-11 * scale.max(1.0), "{} vs {}", a, e);
        }
    }
}
