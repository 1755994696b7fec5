//! Versioned on-disk form of a built orthogonal slider.
//!
//! Floats are written with round-trip precision so a reloaded slider
//! evaluates bit-identically to the one that was saved.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopca::OrthogonalSlider;

pub const SLIDER_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliderDocument {
    pub schema_version: u32,
    pub tool_version: String,
    /// Risk-factor names in shock-vector order.
    pub factor_names: Vec<String>,
    pub slider: OrthogonalSlider,
}

impl SliderDocument {
    pub fn new(slider: OrthogonalSlider, factor_names: Vec<String>) -> Self {
        SliderDocument {
            schema_version: SLIDER_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            factor_names,
            slider,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SLIDER_SCHEMA_VERSION {
            return Err(Error::Configuration(format!(
                "unsupported slider schema version {}",
                self.schema_version
            )));
        }
        self.slider.validate()?;
        if self.factor_names.len() != self.slider.base_shock().len() {
            return Err(Error::Configuration(format!(
                "{} factor names for a slider over {} factors",
                self.factor_names.len(),
                self.slider.base_shock().len()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SliderDocument = serde_json::from_str(s)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
