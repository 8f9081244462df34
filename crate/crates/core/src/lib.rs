//! Layer potentials for `Delta + V` on the flat cylinder `R x S^1`.
//!
//! The crate builds the Green's function of the cylinder from the
//! cross-section spectrum, discretizes boundary curves, assembles the single
//! and double layer operators and solves the Dirichlet problem. The indicial
//! family `S_tau`, `K_tau` on the cross-section is available on its own for
//! the uniform bounds and the Rellich identities.

pub mod acceptance;
pub mod boundary;
pub mod dirichlet;
pub mod error;
pub mod greens;
pub mod layerops;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod quadrature;
pub mod special;
pub mod spectrum;
pub mod taufamily;

pub use boundary::{Bump, Curve, Resolution, Side};
pub use dirichlet::{DirichletSolution, Representation};
pub use error::{Error, Result};
pub use greens::GreenKernel;
pub use layerops::{Density, LayerOperatorSet};
pub use model::{CurveConfig, ModelConfig, Point, Potential, Vector};
pub use pipeline::Setup;
pub use spectrum::CrossSectionSpectrum;
pub use taufamily::ArcDomain;
