//! Illuminant vectors and rg-chromaticity points.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the unit-sum constraint.
pub const UNIT_SUM_TOLERANCE: f64 = 1e-9;

/// Unit-sum RGB color of a light source, each component strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Illuminant {
    rgb: [f64; 3],
}

impl Illuminant {
    /// Builds an illuminant from components that already sum to one.
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        let rgb = [r, g, b];
        if rgb.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v < 1.0)) {
            return Err(Error::invalid(format!(
                "illuminant components must lie in (0, 1), got ({r}, {g}, {b})"
            )));
        }
        let sum = r + g + b;
        if (sum - 1.0).abs() > UNIT_SUM_TOLERANCE {
            return Err(Error::invalid(format!("illuminant must sum to 1, got {sum}")));
        }
        Ok(Self { rgb })
    }

    /// Normalizes an arbitrary positive RGB triple to unit sum.
    pub fn from_rgb(rgb: [f64; 3]) -> Result<Self> {
        if rgb.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::DegenerateInput(format!(
                "cannot normalize ({}, {}, {}) to an illuminant",
                rgb[0], rgb[1], rgb[2]
            )));
        }
        let sum = rgb[0] + rgb[1] + rgb[2];
        Self::new(rgb[0] / sum, rgb[1] / sum, rgb[2] / sum)
    }

    /// Rebuilds the illuminant from its rg chromaticity: `(r, g, 1 - r - g)`.
    pub fn from_chromaticity(point: ChromaticityPoint) -> Result<Self> {
        Self::new(point.r, point.g, 1.0 - point.r - point.g)
    }

    /// The neutral (equal-energy) illuminant.
    pub fn neutral() -> Self {
        Self {
            rgb: [1.0 / 3.0; 3],
        }
    }

    pub fn rgb(&self) -> [f64; 3] {
        self.rgb
    }

    pub fn r(&self) -> f64 {
        self.rgb[0]
    }

    pub fn g(&self) -> f64 {
        self.rgb[1]
    }

    pub fn b(&self) -> f64 {
        self.rgb[2]
    }

    pub fn chromaticity(&self) -> ChromaticityPoint {
        ChromaticityPoint {
            r: self.rgb[0],
            g: self.rgb[1],
        }
    }
}

impl TryFrom<[f64; 3]> for Illuminant {
    type Error = Error;

    fn try_from(rgb: [f64; 3]) -> Result<Self> {
        Self::new(rgb[0], rgb[1], rgb[2])
    }
}

impl From<Illuminant> for [f64; 3] {
    fn from(s: Illuminant) -> Self {
        s.rgb
    }
}

impl fmt::Display for Illuminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.rgb[0], self.rgb[1], self.rgb[2])
    }
}

/// A point `(c_r, c_g)` of the open rg-chromaticity simplex.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChromaticityPoint {
    pub r: f64,
    pub g: f64,
}

impl ChromaticityPoint {
    pub fn new(r: f64, g: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0 && g > 0.0 && g < 1.0 && r + g < 1.0) {
            return Err(Error::invalid(format!("({r}, {g}) is outside the open rg simplex")));
        }
        Ok(Self { r, g })
    }

    /// Lexicographic order on `(r, g)`.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.r.total_cmp(&other.r).then(self.g.total_cmp(&other.g))
    }
}

/// Chromaticities `v_k / sum(v)`, or `None` unless all three lie in (0, 1).
pub fn chromaticities(v: [f64; 3]) -> Option<[f64; 3]> {
    let sum = v[0] + v[1] + v[2];
    if sum == 0.0 || !sum.is_finite() {
        return None;
    }
    let c = [v[0] / sum, v[1] / sum, v[2] / sum];
    c.iter().all(|&ck| ck > 0.0 && ck < 1.0).then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn illuminant_validation() {
        assert!(Illuminant::new(0.4, 0.35, 0.25).is_ok());
        assert!(Illuminant::new(0.5, 0.5, 0.0).is_err());
        assert!(Illuminant::new(0.5, 0.5, 0.1).is_err());
        let s = Illuminant::from_rgb([2.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.rgb(), [0.5, 0.25, 0.25]);
    }

    #[test]
    fn derivative_color_definition() {
        assert!(chromaticities([0.5, 0.6, -0.1]).is_none());
        assert!(chromaticities([0.0, 0.0, 0.0]).is_none());
        // sign of the whole vector does not matter
        assert_eq!(chromaticities([-1.0, -2.0, -1.0]), Some([0.25, 0.5, 0.25]));
    }

    #[test]
    fn simplex_membership() {
        assert!(ChromaticityPoint::new(0.5, 0.5).is_err());
        assert!(ChromaticityPoint::new(0.3, 0.3).is_ok());
    }
}
