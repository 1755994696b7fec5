//! Shared setup for the benchmarks.

use chebslide::cheb1d::{ChebyshevGrid, ChebyshevInterpolant1D, Domain1D};
use chebslide::chebtensor::{build_mesh, ChebyshevTensor, HyperRectangle};
use chebslide::demo;
use chebslide::risk::{generate_synthetic_history, ScenarioSet};
use chebslide::{OrthogonalSlider, PcaBlockSpec, Pricer, ShockedPricer, SliderConfig};

/// Degree-9 interpolant of `exp` on [-1, 1].
pub fn degree_nine() -> ChebyshevInterpolant1D {
    let grid = ChebyshevGrid::new(9, Domain1D::new(-1.0, 1.0).unwrap()).unwrap();
    ChebyshevInterpolant1D::build(grid, f64::exp).unwrap()
}

/// 10×10×10 tensor of `exp(x + y + z)` on the unit cube.
pub fn cube_tensor() -> ChebyshevTensor {
    let mesh = build_mesh(&HyperRectangle::cube(-1.0, 1.0, 3).unwrap(), &[10, 10, 10]).unwrap();
    ChebyshevTensor::build(mesh, |x| (x[0] + x[1] + x[2]).exp()).unwrap()
}

/// Swaps-demo slider (PCA 3, tuple 1x3) and its 3,131 scenarios.
pub fn swaps_slider() -> (OrthogonalSlider, ScenarioSet) {
    let f = demo::swaps();
    let scen = generate_synthetic_history(&f.synthetic, f.seed).unwrap();
    let pricer = ShockedPricer::new(f.portfolio, f.market).unwrap();
    let base = vec![0.0; pricer.factor_count()];
    let slider = OrthogonalSlider::build(
        |x| pricer.price(x),
        &scen.shocks,
        &PcaBlockSpec::single("rates", base.len(), 3),
        &SliderConfig::all_ones(3),
        &base,
    )
    .unwrap();
    (slider, scen)
}
