//! Tensor-product Chebyshev interpolation on hyper-rectangles.
//!
//! Values live in a row-major array indexed by the node multi-index, so the
//! last coordinate varies fastest. Evaluation collapses one dimension at a
//! time with one-dimensional barycentric calls until a scalar remains.

use serde::{Deserialize, Serialize};

use crate::cheb1d::{barycentric, ChebyshevGrid, Domain1D, Evaluation};
use crate::error::{Error, Result};

/// Cartesian product of closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRectangle {
    dims: Vec<Domain1D>,
}

impl HyperRectangle {
    pub fn new(dims: Vec<Domain1D>) -> Result<Self> {
        let b = HyperRectangle { dims };
        b.validate()?;
        Ok(b)
    }

    /// Box from `(lo, hi)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let dims = bounds
            .iter()
            .map(|&(lo, hi)| Domain1D::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    /// `[lo, hi]^dimension`.
    pub fn cube(lo: f64, hi: f64, dimension: usize) -> Result<Self> {
        Self::new(vec![Domain1D::new(lo, hi)?; dimension])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::Domain("hyper-rectangle needs at least one dimension".into()));
        }
        self.dims.iter().try_for_each(Domain1D::validate)
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[Domain1D] {
        &self.dims
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims.len() && self.dims.iter().zip(x).all(|(d, &v)| d.contains(v))
    }

    /// Sub-box over the given coordinates, in the order given.
    pub fn select(&self, coords: &[usize]) -> Result<HyperRectangle> {
        let dims = coords
            .iter()
            .map(|&c| {
                self.dims.get(c).copied().ok_or_else(|| {
                    Error::Argument(format!("coordinate {c} outside a {}-d box", self.dims.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }
}

/// Cartesian mesh of per-dimension Chebyshev grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevMesh {
    grids: Vec<ChebyshevGrid>,
}

impl ChebyshevMesh {
    /// One grid per box dimension with the requested number of points.
    pub fn new(domain: &HyperRectangle, points_per_dim: &[usize]) -> Result<Self> {
        if points_per_dim.len() != domain.dimension() {
            return Err(Error::Configuration(format!(
                "{} point counts given for a {}-dimensional box",
                points_per_dim.len(),
                domain.dimension()
            )));
        }
        let grids = domain
            .dims()
            .iter()
            .zip(points_per_dim)
            .map(|(&d, &m)| ChebyshevGrid::with_points(m, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChebyshevMesh { grids })
    }

    pub fn from_grids(grids: Vec<ChebyshevGrid>) -> Result<Self> {
        if grids.is_empty() {
            return Err(Error::Configuration("mesh needs at least one grid".into()));
        }
        grids.iter().try_for_each(ChebyshevGrid::validate)?;
        Ok(ChebyshevMesh { grids })
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.grids.len()
    }

    #[inline]
    pub fn grids(&self) -> &[ChebyshevGrid] {
        &self.grids
    }

    pub fn shape(&self) -> Vec<usize> {
        self.grids.iter().map(ChebyshevGrid::len).collect()
    }

    /// Product of the per-dimension point counts.
    pub fn total_points(&self) -> usize {
        self.grids.iter().map(ChebyshevGrid::len).product()
    }

    pub fn domain(&self) -> HyperRectangle {
        HyperRectangle {
            dims: self.grids.iter().map(ChebyshevGrid::domain).collect(),
        }
    }

    /// Mesh node at a multi-index.
    pub fn node(&self, index: &[usize]) -> Vec<f64> {
        self.grids
            .iter()
            .zip(index)
            .map(|(g, &i)| g.nodes()[i])
            .collect()
    }

    /// Row-major flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        self.grids
            .iter()
            .zip(index)
            .fold(0, |acc, (g, &i)| acc * g.len() + i)
    }

    /// Multi-indices in row-major (storage) order.
    pub fn indices(&self) -> MultiIndexIter {
        MultiIndexIter {
            shape: self.shape(),
            next: Some(vec![0; self.grids.len()]),
        }
    }
}

/// Build a mesh over `domain` with `points_per_dim[i]` nodes along dimension `i`.
pub fn build_mesh(domain: &HyperRectangle, points_per_dim: &[usize]) -> Result<ChebyshevMesh> {
    ChebyshevMesh::new(domain, points_per_dim)
}

/// Odometer over a shape, last index fastest.
pub struct MultiIndexIter {
    shape: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for MultiIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carried = true;
        for d in (0..succ.len()).rev() {
            succ[d] += 1;
            if succ[d] < self.shape[d] {
                carried = false;
                break;
            }
            succ[d] = 0;
        }
        if !carried {
            self.next = Some(succ);
        }
        Some(current)
    }
}

/// Order in which dimensions are collapsed during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollapseOrder {
    /// Last dimension first; the default and the cheaper path since the
    /// collapsed axis is contiguous in storage.
    LastFirst,
    FirstFirst,
}

/// Node values of a function on a [`ChebyshevMesh`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevTensor {
    mesh: ChebyshevMesh,
    values: Vec<f64>,
}

impl ChebyshevTensor {
    /// Samples `f` once per mesh node.
    pub fn build<F>(mesh: ChebyshevMesh, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> f64,
    {
        Self::try_build(mesh, |x| Ok(f(x)))
    }

    /// Samples a fallible `f` once per mesh node; the first error aborts.
    pub fn try_build<F>(mesh: ChebyshevMesh, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let mut values = Vec::with_capacity(mesh.total_points());
        let mut point = vec![0.0; mesh.dimension()];
        for index in mesh.indices() {
            for ((p, g), &i) in point.iter_mut().zip(mesh.grids()).zip(&index) {
                *p = g.nodes()[i];
            }
            let v = f(&point)?;
            if !v.is_finite() {
                return Err(Error::Sampling {
                    location: format!("mesh index {index:?} (x = {point:?})"),
                    value: v,
                });
            }
            values.push(v);
        }
        Ok(ChebyshevTensor { mesh, values })
    }

    /// Wraps precomputed row-major values.
    pub fn from_values(mesh: ChebyshevMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.total_points() {
            return Err(Error::Argument(format!(
                "mesh of shape {:?} needs {} values, got {}",
                mesh.shape(),
                mesh.total_points(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let index = mesh.indices().nth(pos).unwrap_or_default();
            return Err(Error::Sampling {
                location: format!("mesh index {index:?}"),
                value: values[pos],
            });
        }
        Ok(ChebyshevTensor { mesh, values })
    }

    #[inline]
    pub fn mesh(&self) -> &ChebyshevMesh {
        &self.mesh
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.mesh.dimension()
    }

    pub fn value_at_index(&self, index: &[usize]) -> f64 {
        self.values[self.mesh.offset(index)]
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.evaluate_in_order(x, CollapseOrder::LastFirst)
    }

    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x).map(|e| e.value)
    }

    pub fn evaluate_in_order(&self, x: &[f64], order: CollapseOrder) -> Result<Evaluation> {
        let (point, clamped) = self.prepare(x)?;
        let value = self.reduce(&point, order, barycentric);
        Ok(Evaluation { value, clamped })
    }

    /// Evaluates while counting one-dimensional barycentric calls into `calls`.
    pub fn evaluate_counted(&self, x: &[f64], calls: &mut usize) -> Result<Evaluation> {
        let (point, clamped) = self.prepare(x)?;
        let value = self.reduce(&point, CollapseOrder::LastFirst, |n, v, t| {
            *calls += 1;
            barycentric(n, v, t)
        });
        Ok(Evaluation { value, clamped })
    }

    fn prepare(&self, x: &[f64]) -> Result<(Vec<f64>, bool)> {
        if x.len() != self.dimension() {
            return Err(Error::Argument(format!(
                "point has {} coordinates, tensor is {}-dimensional",
                x.len(),
                self.dimension()
            )));
        }
        let mut clamped = false;
        let point = x
            .iter()
            .zip(self.mesh.grids())
            .map(|(&v, g)| {
                if !v.is_finite() {
                    return Err(Error::Argument(format!("coordinate {v} is not finite")));
                }
                let (c, moved) = g.domain().clamp(v);
                clamped |= moved;
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((point, clamped))
    }

    fn reduce<E>(&self, x: &[f64], order: CollapseOrder, mut eval1d: E) -> f64
    where
        E: FnMut(&[f64], &[f64], f64) -> f64,
    {
        let grids = self.mesh.grids();
        let mut shape = self.mesh.shape();
        let mut current = self.values.clone();
        let mut scratch = Vec::new();
        let dims: Vec<usize> = match order {
            CollapseOrder::LastFirst => (0..grids.len()).rev().collect(),
            CollapseOrder::FirstFirst => (0..grids.len()).collect(),
        };
        // `dims` lists original axes; track where each still sits in `shape`.
        let mut alive: Vec<usize> = (0..grids.len()).collect();
        for axis in dims {
            let pos = alive.iter().position(|&a| a == axis).expect("axis alive");
            let m = shape[pos];
            let inner: usize = shape[pos + 1..].iter().product();
            let outer: usize = shape[..pos].iter().product();
            let nodes = grids[axis].nodes();
            let mut next = Vec::with_capacity(outer * inner);
            for o in 0..outer {
                let base = o * m * inner;
                for i in 0..inner {
                    let v = if inner == 1 {
                        eval1d(nodes, &current[base..base + m], x[axis])
                    } else {
                        scratch.clear();
                        scratch.extend((0..m).map(|j| current[base + j * inner + i]));
                        eval1d(nodes, &scratch, x[axis])
                    };
                    next.push(v);
                }
            }
            current = next;
            shape.remove(pos);
            alive.remove(pos);
        }
        current[0]
    }
}

/// Number of one-dimensional barycentric evaluations performed by one tensor
/// evaluation collapsing the last dimension first:
/// `m1·…·m(d−1) + m1·…·m(d−2) + … + m1 + 1`.
pub fn eval_call_count(shape: &[usize]) -> usize {
    if shape.is_empty() {
        return 0;
    }
    let mut total = 0;
    let mut prefix = 1;
    for &m in &shape[..shape.len() - 1] {
        prefix *= m;
        total += prefix;
    }
    total + 1
}
