//! From a model configuration to assembled operators.

use std::sync::Arc;

use crate::boundary::{BoundaryDiscretization, Curve, Resolution};
use crate::error::{Error, Result};
use crate::greens::GreenKernel;
use crate::layerops::{assemble, far_field_of, FarField, LayerOperatorSet};
use crate::model::{build_model, CylinderModel, ModelConfig, RegionSpec};
use crate::spectrum::{eigensystem, CrossSectionSpectrum};

/// Validated model with its spectrum and Green's function.
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: CylinderModel,
    pub region: RegionSpec,
    pub spectrum: Arc<CrossSectionSpectrum>,
    pub kernel: Arc<GreenKernel>,
}

impl Setup {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        let (model, region) = build_model(cfg)?;
        let spectrum = Arc::new(eigensystem(&model)?);
        let kernel = Arc::new(GreenKernel::new(Arc::clone(&spectrum)));
        Ok(Self { model, region, spectrum, kernel })
    }

    /// Discretizes the region and assembles the layer operators.
    pub fn operators(&self, res: &Resolution) -> Result<Arc<LayerOperatorSet>> {
        if self.region.curves.is_empty() {
            return Err(Error::InvalidModel("the model has no boundary curves".into()));
        }
        let disc = BoundaryDiscretization::new(&self.model, &self.region, res, self.spectrum.ground_state())?;
        Ok(Arc::new(assemble(&self.kernel, &disc)?))
    }

    /// Cross-section at infinity of the graph curves, if any.
    pub fn far_field(&self, res: &Resolution) -> Result<Option<FarField>> {
        let disc = BoundaryDiscretization::new(&self.model, &self.region, res, self.spectrum.ground_state())?;
        far_field_of(&self.kernel, &disc)
    }
}

/// Assembles the operators of `kernel` on the given curves.
pub fn operators_for(kernel: &GreenKernel, curves: &[Curve], res: &Resolution) -> Result<Arc<LayerOperatorSet>> {
    let disc = BoundaryDiscretization::from_curves(kernel.circumference(), curves, res, kernel.spectrum().ground_state())?;
    Ok(Arc::new(assemble(kernel, &disc)?))
}
