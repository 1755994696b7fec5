//! One-dimensional Chebyshev interpolation.
//!
//! Nodes are the Chebyshev points of the second kind (extrema of `T_n`)
//! mapped affinely onto `[lo, hi]` and stored in ascending order. The
//! interpolant keeps only node values and is evaluated with the barycentric
//! formula, whose weights for these nodes are `(-1)^j` halved at both ends.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` with `lo < hi`, both finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain1D {
    lo: f64,
    hi: f64,
}

impl Domain1D {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let d = Domain1D { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Domain(format!(
                "bounds must be finite, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.lo >= self.hi {
            return Err(Error::Domain(format!(
                "lower bound {} must be below upper bound {}",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Clamps `x` into the interval, reporting whether it moved.
    #[inline]
    pub fn clamp(&self, x: f64) -> (f64, bool) {
        if x < self.lo {
            (self.lo, true)
        } else if x > self.hi {
            (self.hi, true)
        } else {
            (x, false)
        }
    }

    #[inline]
    fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    #[inline]
    fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// The `n + 1` Chebyshev points of degree `n` on a [`Domain1D`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevGrid {
    degree: usize,
    domain: Domain1D,
    nodes: Vec<f64>,
}

impl ChebyshevGrid {
    /// Builds the grid `cos(jπ/n)`, j = 0..n, mapped onto `domain`, ascending.
    ///
    /// The reference nodes are computed as `sin(π(2j − n)/(2n))`, which equals
    /// `−cos(jπ/n)` and is exactly antisymmetric in floating point, so grids
    /// on symmetric domains satisfy `x_j == −x_{n−j}` bit for bit. Domain
    /// endpoints are always nodes; degree 0 gives the midpoint.
    pub fn new(degree: usize, domain: Domain1D) -> Result<Self> {
        domain.validate()?;
        let nodes = if degree == 0 {
            vec![domain.midpoint()]
        } else {
            let n = degree as f64;
            let (mid, half) = (domain.midpoint(), domain.half_width());
            let mut nodes: Vec<f64> = (0..=degree)
                .map(|j| {
                    let t = (PI * (2.0 * j as f64 - n) / (2.0 * n)).sin();
                    mid + half * t
                })
                .collect();
            nodes[0] = domain.lo;
            nodes[degree] = domain.hi;
            nodes
        };
        Ok(ChebyshevGrid {
            degree,
            domain,
            nodes,
        })
    }

    /// Grid with `points` nodes (degree `points − 1`).
    pub fn with_points(points: usize, domain: Domain1D) -> Result<Self> {
        if points == 0 {
            return Err(Error::Configuration(
                "a Chebyshev grid needs at least one point".into(),
            ));
        }
        Self::new(points - 1, domain)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn domain(&self) -> Domain1D {
        self.domain
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Checks that the stored nodes are the ones this degree and domain
    /// generate. Used after deserialization.
    pub fn validate(&self) -> Result<()> {
        let fresh = ChebyshevGrid::new(self.degree, self.domain)?;
        if fresh.nodes != self.nodes {
            return Err(Error::Configuration(
                "grid nodes do not match their degree and domain".into(),
            ));
        }
        Ok(())
    }
}

/// Chebyshev points of degree `n` on `domain`.
pub fn chebyshev_points(n: usize, domain: Domain1D) -> Result<ChebyshevGrid> {
    ChebyshevGrid::new(n, domain)
}

/// Value returned by an interpolant together with the out-of-domain flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Set when at least one coordinate lay outside its domain and was
    /// clamped to the nearest endpoint before evaluation.
    pub clamped: bool,
}

/// Barycentric evaluation on an ascending Chebyshev grid.
///
/// `x` must be finite; callers clamp beforehand. Exact node hits return the
/// stored value.
#[inline]
pub(crate) fn barycentric(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    debug_assert_eq!(nodes.len(), values.len());
    let n = nodes.len() - 1;
    if n == 0 {
        return values[0];
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (&xj, &vj)) in nodes.iter().zip(values).enumerate() {
        let diff = x - xj;
        if diff == 0.0 {
            return vj;
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            w *= 0.5;
        }
        let t = w / diff;
        num += t * vj;
        den += t;
    }
    num / den
}

/// Chebyshev interpolant stored as node values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevInterpolant1D {
    grid: ChebyshevGrid,
    values: Vec<f64>,
}

impl ChebyshevInterpolant1D {
    /// Samples `f` once per node.
    pub fn build<F>(grid: ChebyshevGrid, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> f64,
    {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::from_values(grid, values)
    }

    pub fn from_values(grid: ChebyshevGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some((j, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Sampling {
                location: format!("node {} (x = {})", j, grid.nodes()[j]),
                value: v,
            });
        }
        Ok(ChebyshevInterpolant1D { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &ChebyshevGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Evaluates the interpolant at `x`, clamping to the domain when needed.
    pub fn evaluate(&self, x: f64) -> Result<Evaluation> {
        if !x.is_finite() {
            return Err(Error::Argument(format!("evaluation point {x} is not finite")));
        }
        let (x, clamped) = self.grid.domain().clamp(x);
        Ok(Evaluation {
            value: barycentric(self.grid.nodes(), &self.values, x),
            clamped,
        })
    }

    /// Like [`evaluate`](Self::evaluate) but drops the clamp flag.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        self.evaluate(x).map(|e| e.value)
    }
}

/// Bernstein-ellipse parameters for the analytic convergence bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundParams {
    /// Ellipse radius, strictly above 1.
    pub rho: f64,
    /// Bound on `|f|` inside the ellipse.
    pub sup_bound: f64,
}

/// `4 M ρ^(−n) / (ρ − 1)`: sup-norm error bound for the degree-`n`
/// interpolant of a function analytic in the Bernstein ellipse of radius ρ.
pub fn error_bound(params: ErrorBoundParams, n: usize) -> Result<f64> {
    let ErrorBoundParams { rho, sup_bound } = params;
    if !(rho.is_finite() && rho > 1.0) {
        return Err(Error::Parameter(format!("rho must exceed 1, got {rho}")));
    }
    if !(sup_bound.is_finite() && sup_bound >= 0.0) {
        return Err(Error::Parameter(format!(
            "sup bound must be non-negative, got {sup_bound}"
        )));
    }
    Ok(4.0 * sup_bound * rho.powi(-(n as i32)) / (rho - 1.0))
}
