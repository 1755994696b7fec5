//! PCA reduction of risk-factor shocks and orthogonal Chebyshev sliders.
//!
//! Each block of risk factors (rates, vols, ...) gets its own PCA model. The
//! slider lives on the concatenated reduced coordinates `y` and samples
//! `g(y) = pricer(T⁻¹ y)`, where `T⁻¹` scatters every block's reconstruction
//! back into the full shock vector.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cheb1d::{Domain1D, Evaluation};
use crate::chebtensor::HyperRectangle;
use crate::error::{Error, Result};
use crate::slider::{Slider, SliderConfig};

/// Relative padding applied to each reduced-coordinate range.
pub const DOMAIN_PADDING: f64 = 0.01;

/// Centered PCA model: `project(x) = C (x − μ)`, `reconstruct(y) = μ + Cᵀ y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `k` rows of length `n`, orthonormal, by descending explained variance.
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
    total_variance: f64,
    /// Set when the training data has no variance at all.
    zero_variance: bool,
}

impl PcaModel {
    /// Fits the top-`k` principal directions of the centered rows of `data`.
    ///
    /// Components are the leading right singular vectors of the centered
    /// data, each flipped so that its largest-magnitude entry is positive.
    /// Variances use the `s − 1` denominator.
    pub fn fit(data: &[Vec<f64>], k: usize) -> Result<Self> {
        let s = data.len();
        if s < 2 {
            return Err(Error::Parameter(format!("PCA needs at least 2 samples, got {s}")));
        }
        let n = data[0].len();
        if n == 0 || data.iter().any(|r| r.len() != n) {
            return Err(Error::Argument("PCA rows must share a non-zero length".into()));
        }
        if k == 0 || k > n.min(s) {
            return Err(Error::Parameter(format!(
                "cannot keep {k} components from {s} samples of dimension {n}"
            )));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Argument("PCA data contains non-finite values".into()));
        }

        let mut mean = vec![0.0; n];
        for row in data {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= s as f64);

        let centered = DMatrix::from_fn(s, n, |i, j| data[i][j] - mean[j]);
        let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / (s - 1) as f64;
        let svd = centered.svd(false, true);
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::Numerical("SVD did not produce right singular vectors".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .expect("finite singular values")
                .then(a.cmp(&b))
        });

        let mut components = Vec::with_capacity(k);
        let mut explained_variance = Vec::with_capacity(k);
        for &i in order.iter().take(k) {
            let mut row: Vec<f64> = v_t.row(i).iter().copied().collect();
            let lead = row
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(bi, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bi, bv) })
                .0;
            if row[lead] < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            let sv = svd.singular_values[i];
            components.push(row);
            explained_variance.push(sv * sv / (s - 1) as f64);
        }

        Ok(PcaModel {
            mean,
            components,
            explained_variance,
            total_variance,
            zero_variance: total_variance == 0.0,
        })
    }

    pub fn input_dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dimension(&self) -> usize {
        self.components.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    pub fn is_zero_variance(&self) -> bool {
        self.zero_variance
    }

    /// Fraction of total variance captured by the kept components.
    pub fn explained_ratio(&self) -> f64 {
        if self.total_variance == 0.0 {
            return 1.0;
        }
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dimension() {
            return Err(Error::Argument(format!(
                "vector of length {} projected with a {}-dimensional PCA model",
                x.len(),
                self.input_dimension()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect())
    }

    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.output_dimension() {
            return Err(Error::Argument(format!(
                "{} reduced coordinates for a model with {} components",
                y.len(),
                self.output_dimension()
            )));
        }
        let mut x = self.mean.clone();
        for (c, &w) in self.components.iter().zip(y) {
            for (xi, ci) in x.iter_mut().zip(c) {
                *xi += w * ci;
            }
        }
        Ok(x)
    }

    /// Mean squared reconstruction error per row.
    pub fn reconstruction_mse(&self, data: &[Vec<f64>]) -> Result<f64> {
        let mut total = 0.0;
        for row in data {
            let back = self.reconstruct(&self.project(row)?)?;
            total += row.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        Ok(total / data.len().max(1) as f64)
    }

    fn validate(&self) -> Result<()> {
        let n = self.input_dimension();
        if self.components.is_empty()
            || self.components.iter().any(|c| c.len() != n)
            || self.explained_variance.len() != self.components.len()
        {
            return Err(Error::Configuration("PCA model shapes are inconsistent".into()));
        }
        Ok(())
    }
}

/// Fit a PCA model keeping `k` components.
pub fn fit_pca(data: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    PcaModel::fit(data, k)
}

/// A named group of risk-factor coordinates reduced by its own PCA model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcaBlock {
    pub name: String,
    pub indices: Vec<usize>,
    pub k: usize,
}

/// Partition of the risk factors into PCA blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcaBlockSpec {
    pub blocks: Vec<PcaBlock>,
}

impl PcaBlockSpec {
    pub fn new(blocks: Vec<PcaBlock>) -> Self {
        PcaBlockSpec { blocks }
    }

    /// One block over all `n` coordinates.
    pub fn single(name: &str, n: usize, k: usize) -> Self {
        PcaBlockSpec {
            blocks: vec![PcaBlock {
                name: name.to_string(),
                indices: (0..n).collect(),
                k,
            }],
        }
    }

    pub fn reduced_dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.k).sum()
    }

    /// Checks the blocks are disjoint, non-empty and cover `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::Configuration("PCA block spec has no blocks".into()));
        }
        let mut seen = vec![false; n];
        for b in &self.blocks {
            if b.k == 0 {
                return Err(Error::Configuration(format!("block '{}' keeps zero components", b.name)));
            }
            if b.indices.is_empty() {
                return Err(Error::Configuration(format!("block '{}' has no coordinates", b.name)));
            }
            for &i in &b.indices {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Configuration(format!(
                        "coordinate {i} of block '{}' is out of range or shared",
                        b.name
                    )));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Configuration(format!(
                "coordinate {missing} is not assigned to any PCA block"
            )));
        }
        Ok(())
    }
}

/// Fitted per-block PCA models plus the box on the reduced coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSpace {
    blocks: Vec<PcaBlock>,
    models: Vec<PcaModel>,
    n_factors: usize,
    domain: HyperRectangle,
}

impl ReducedSpace {
    /// Fits one model per block on that block's columns of `shocks` and
    /// sizes the reduced box from the projected training data.
    ///
    /// Each reduced coordinate spans `[min, max]` of the projected training
    /// shocks and of the projected `base_shock`, widened on both sides by
    /// [`DOMAIN_PADDING`] of its range.
    pub fn fit(shocks: &[Vec<f64>], spec: &PcaBlockSpec, base_shock: &[f64]) -> Result<Self> {
        let n = base_shock.len();
        if shocks.iter().any(|r| r.len() != n) {
            return Err(Error::Argument(format!(
                "training shocks and base shock must all have length {n}"
            )));
        }
        spec.validate(n)?;
        let models = spec
            .blocks
            .iter()
            .map(|b| {
                let cols: Vec<Vec<f64>> = shocks
                    .iter()
                    .map(|r| b.indices.iter().map(|&i| r[i]).collect())
                    .collect();
                PcaModel::fit(&cols, b.k).map_err(|e| match e {
                    Error::Parameter(m) => Error::Parameter(format!("block '{}': {m}", b.name)),
                    e => e,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut space = ReducedSpace {
            blocks: spec.blocks.clone(),
            models,
            n_factors: n,
            // replaced below once the ranges are known
            domain: HyperRectangle::cube(-1.0, 1.0, spec.reduced_dimension())?,
        };
        let d = space.dimension();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for row in shocks.iter().map(Vec::as_slice).chain(std::iter::once(base_shock)) {
            let y = space.project_unchecked(row)?;
            for ((l, h), v) in lo.iter_mut().zip(hi.iter_mut()).zip(y) {
                *l = l.min(v);
                *h = h.max(v);
            }
        }
        let dims = lo
            .into_iter()
            .zip(hi)
            .map(|(l, h)| {
                let range = h - l;
                let pad = if range > 0.0 {
                    DOMAIN_PADDING * range
                } else {
                    (1e-3 * l.abs()).max(1e-8)
                };
                Domain1D::new(l - pad, h + pad)
            })
            .collect::<Result<Vec<_>>>()?;
        space.domain = HyperRectangle::new(dims)?;
        Ok(space)
    }

    pub fn blocks(&self) -> &[PcaBlock] {
        &self.blocks
    }

    pub fn models(&self) -> &[PcaModel] {
        &self.models
    }

    /// Number of original risk factors.
    pub fn factor_count(&self) -> usize {
        self.n_factors
    }

    /// Number of reduced coordinates, `Σ k`.
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.k).sum()
    }

    pub fn domain(&self) -> &HyperRectangle {
        &self.domain
    }

    /// Concatenated per-block projections.
    pub fn project(&self, shock: &[f64]) -> Result<Vec<f64>> {
        if shock.len() != self.n_factors {
            return Err(Error::Argument(format!(
                "shock has {} factors, expected {}",
                shock.len(),
                self.n_factors
            )));
        }
        self.project_unchecked(shock)
    }

    fn project_unchecked(&self, shock: &[f64]) -> Result<Vec<f64>> {
        let mut y = Vec::with_capacity(self.dimension());
        let mut part = Vec::new();
        for (b, m) in self.blocks.iter().zip(&self.models) {
            part.clear();
            part.extend(b.indices.iter().map(|&i| shock[i]));
            y.extend(m.project(&part)?);
        }
        Ok(y)
    }

    /// `T⁻¹`: scatters per-block reconstructions into a full shock vector.
    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dimension() {
            return Err(Error::Argument(format!(
                "{} reduced coordinates, expected {}",
                y.len(),
                self.dimension()
            )));
        }
        let mut x = vec![0.0; self.n_factors];
        let mut start = 0;
        for (b, m) in self.blocks.iter().zip(&self.models) {
            let part = m.reconstruct(&y[start..start + b.k])?;
            for (&i, v) in b.indices.iter().zip(part) {
                x[i] = v;
            }
            start += b.k;
        }
        Ok(x)
    }

    /// `T⁻¹(T(shock))`, the shock as the PCA models see it.
    pub fn round_trip(&self, shock: &[f64]) -> Result<Vec<f64>> {
        self.reconstruct(&self.project(shock)?)
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.len() != self.models.len() {
            return Err(Error::Configuration("one PCA model per block required".into()));
        }
        PcaBlockSpec::new(self.blocks.clone()).validate(self.n_factors)?;
        for (b, m) in self.blocks.iter().zip(&self.models) {
            m.validate()?;
            if m.input_dimension() != b.indices.len() || m.output_dimension() != b.k {
                return Err(Error::Configuration(format!(
                    "PCA model for block '{}' does not match the block",
                    b.name
                )));
            }
        }
        self.domain.validate()?;
        if self.domain.dimension() != self.dimension() {
            return Err(Error::Configuration("reduced domain has the wrong dimension".into()));
        }
        Ok(())
    }
}

/// A Chebyshev slider built on PCA-reduced coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalSlider {
    space: ReducedSpace,
    slider: Slider,
    base_shock: Vec<f64>,
}

impl OrthogonalSlider {
    /// Fits the PCA blocks on `shocks` and builds the slider over
    /// `g(y) = pricer(T⁻¹ y)`, pivoted at the projection of `base_shock`.
    pub fn build<P>(
        pricer: P,
        shocks: &[Vec<f64>],
        spec: &PcaBlockSpec,
        config: &SliderConfig,
        base_shock: &[f64],
    ) -> Result<Self>
    where
        P: FnMut(&[f64]) -> Result<f64>,
    {
        if config.input_dimension() != spec.reduced_dimension() {
            return Err(Error::Configuration(format!(
                "slider tuple covers {} coordinates, PCA blocks keep {}",
                config.input_dimension(),
                spec.reduced_dimension()
            )));
        }
        let space = ReducedSpace::fit(shocks, spec, base_shock)?;
        Self::build_on(space, pricer, config, base_shock)
    }

    /// Builds on already fitted PCA models, e.g. one slider per trade.
    pub fn build_on<P>(
        space: ReducedSpace,
        mut pricer: P,
        config: &SliderConfig,
        base_shock: &[f64],
    ) -> Result<Self>
    where
        P: FnMut(&[f64]) -> Result<f64>,
    {
        if config.input_dimension() != space.dimension() {
            return Err(Error::Configuration(format!(
                "slider tuple covers {} coordinates, PCA blocks keep {}",
                config.input_dimension(),
                space.dimension()
            )));
        }
        let pivot = space.project(base_shock)?;
        let slider = {
            let space = &space;
            Slider::try_build(
                |y| pricer(&space.reconstruct(y)?),
                space.domain(),
                &pivot,
                config,
            )?
        };
        Ok(OrthogonalSlider {
            space,
            slider,
            base_shock: base_shock.to_vec(),
        })
    }

    pub fn space(&self) -> &ReducedSpace {
        &self.space
    }

    pub fn slider(&self) -> &Slider {
        &self.slider
    }

    pub fn base_shock(&self) -> &[f64] {
        &self.base_shock
    }

    pub fn build_call_count(&self) -> usize {
        self.slider.build_call_count()
    }

    /// Projects the shock block by block and evaluates the slider. The
    /// result is flagged when the projection left the fitted box.
    pub fn evaluate(&self, shock: &[f64]) -> Result<Evaluation> {
        let y = self.space.project(shock)?;
        self.slider.evaluate(&y)
    }

    pub fn value_at(&self, shock: &[f64]) -> Result<f64> {
        self.evaluate(shock).map(|e| e.value)
    }

    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        self.slider.validate()?;
        if self.slider.domain() != self.space.domain() {
            return Err(Error::Configuration("slider domain differs from the reduced box".into()));
        }
        if self.base_shock.len() != self.space.factor_count() {
            return Err(Error::Configuration("base shock has the wrong length".into()));
        }
        Ok(())
    }
}

/// Free-function form of [`OrthogonalSlider::build`].
pub fn build_orthogonal_slider<P>(
    pricer: P,
    shocks: &[Vec<f64>],
    spec: &PcaBlockSpec,
    config: &SliderConfig,
    base_shock: &[f64],
) -> Result<OrthogonalSlider>
where
    P: FnMut(&[f64]) -> Result<f64>,
{
    OrthogonalSlider::build(pricer, shocks, spec, config, base_shock)
}
