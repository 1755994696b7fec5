//! Chebyshev interpolation, Chebyshev sliders on PCA-reduced coordinates and
//! a harness comparing them against full revaluation for expected shortfall.

pub mod cheb1d;
pub mod chebtensor;
pub mod demo;
pub mod document;
pub mod error;
pub mod orthopca;
pub mod pricers;
pub mod risk;
pub mod slider;
pub mod workflow;

pub use cheb1d::{ChebyshevGrid, ChebyshevInterpolant1D, Domain1D, Evaluation};
pub use chebtensor::{ChebyshevMesh, ChebyshevTensor, HyperRectangle};
pub use document::SliderDocument;
pub use error::{Error, Result};
pub use orthopca::{OrthogonalSlider, PcaBlock, PcaBlockSpec, PcaModel, ReducedSpace};
pub use pricers::{InstrumentedPricer, Market, Portfolio, Pricer, ShockedPricer};
pub use risk::{EsReport, PnlDistribution, ScenarioSet, SyntheticSpec};
pub use slider::{Slider, SliderConfig};
pub use workflow::{Experiment, RunReport, RunSettings};
