//! Illuminant estimation from the derivative colors of the brightest
//! regions of an image.
//!
//! The pipeline is: drop saturated pixels, keep the top τ% by intensity,
//! erode to at most η% of the frame, collect second-order Gaussian responses
//! whose chromaticities are all in (0, 1), project to rg and take the densest
//! sample under a Gaussian kernel of bandwidth `h`.

mod extract;
mod kde;
mod selection;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use extract::{extract_derivative_colors, DerivativeColor, DerivativeColorSet, TINY_SUM_FACTOR};
pub use kde::{density_at, kde_argmax, kde_argmax_reference, TIE_TOLERANCE, TRUNCATION_BANDWIDTHS};
pub use selection::{clip_saturated, intensity, select_bright_regions, BrightRegion};

use crate::color::{ChromaticityPoint, Illuminant};
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, LinearImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcsParams {
    /// Percent of usable pixels initially marked bright.
    pub tau: f64,
    /// Percent of all pixels allowed to survive erosion.
    pub eta: f64,
    pub sigmas: Vec<f64>,
    pub bandwidth: f64,
    /// Values at or above this are clipped. `None` uses the full code range
    /// of the image's bit depth (no clipping for float images).
    pub saturation_level: Option<f64>,
}

impl Default for DcsParams {
    fn default() -> Self {
        Self {
            tau: 5.0,
            eta: 2.0,
            sigmas: vec![1.0, 2.0],
            bandwidth: 0.03,
            saturation_level: None,
        }
    }
}

impl DcsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.tau.is_finite() && 0.0 < self.eta && self.eta <= self.tau && self.tau <= 100.0)
        {
            return Err(Error::invalid(format!(
                "need 0 < eta <= tau <= 100, got eta={} tau={}",
                self.eta, self.tau
            )));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::invalid(format!("bandwidth must be > 0, got {}", self.bandwidth)));
        }
        if self.sigmas.is_empty() {
            return Err(Error::invalid("at least one scale is required"));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(format!("scales must be > 0, got {s}")));
        }
        if let Some(level) = self.saturation_level {
            if !(level > 0.0) {
                return Err(Error::invalid(format!("saturation level must be > 0, got {level}")));
            }
        }
        Ok(())
    }

    /// The clipping level that applies to `image`.
    pub fn saturation_for(&self, image: &LinearImage) -> Option<f64> {
        self.saturation_level.or_else(|| image.bit_depth().max_code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Warning {
    /// Erosion emptied or stalled before the η% target was met.
    DegradedSelection,
    /// No derivative colors survived; the estimate is the gray-world mean of
    /// the bright region.
    GrayWorldFallback,
}

impl Warning {
    pub fn tag(self) -> &'static str {
        match self {
            Warning::DegradedSelection => "degraded_selection",
            Warning::GrayWorldFallback => "gray_world_fallback",
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone)]
pub struct DcsEstimate {
    pub illuminant: Illuminant,
    /// The densest sample; `None` after a gray-world fallback.
    pub chromaticity: Option<ChromaticityPoint>,
    /// The rg cloud fed to the density estimate.
    pub points: Vec<ChromaticityPoint>,
    pub region: BrightRegion,
    pub num_derivative_colors: usize,
    pub warnings: Vec<Warning>,
}

impl DcsEstimate {
    pub fn is_degraded(&self) -> bool {
        !self.warnings.is_empty()
    }

    pub fn flags(&self) -> String {
        self.warnings.iter().map(|w| w.tag()).collect::<Vec<_>>().join(";")
    }
}

/// Runs the full estimator. Pixels set in `exclusion` take no part in the
/// bright-region selection, and any filter footprint touching them is
/// discarded.
pub fn estimate(image: &LinearImage, params: &DcsParams, exclusion: Option<&BinaryMask>) -> Result<DcsEstimate> {
    params.validate()?;
    if let Some(ex) = exclusion {
        ex.check_dims(image.dims())?;
    }
    let mut usable = match params.saturation_for(image) {
        Some(level) => clip_saturated(image, level),
        None => BinaryMask::new(image.width(), image.height(), true),
    };
    if let Some(ex) = exclusion {
        usable = usable.and_not(ex)?;
    }
    if usable.is_empty() {
        return Err(Error::UnrecoverableInput("every pixel is saturated or excluded".into()));
    }

    let region = select_bright_regions(image, params, &usable)?;
    let mut warnings = Vec::new();
    if region.degraded {
        warnings.push(Warning::DegradedSelection);
    }

    match extract_derivative_colors(image, &region.mask, params, exclusion) {
        Ok(set) => {
            let points = set.points();
            let z = kde_argmax(&points, params.bandwidth)?;
            Ok(DcsEstimate {
                illuminant: Illuminant::from_chromaticity(z)?,
                chromaticity: Some(z),
                num_derivative_colors: set.len(),
                points,
                region,
                warnings,
            })
        }
        Err(Error::NoDerivativeColors) => {
            let mut sum = [0.0; 3];
            for i in region.mask.indices() {
                let p = image.pixels()[i];
                for k in 0..3 {
                    sum[k] += p[k];
                }
            }
            warnings.push(Warning::GrayWorldFallback);
            Ok(DcsEstimate {
                illuminant: Illuminant::from_rgb(sum)?,
                chromaticity: None,
                points: Vec::new(),
                num_derivative_colors: 0,
                region,
                warnings,
            })
        }
        Err(e) => Err(e),
    }
}
