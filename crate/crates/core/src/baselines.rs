//! Minkowski-norm estimators: gray-world, white-patch, shades-of-gray,
//! general gray-world and first/second-order gray-edge.
//!
//! Each channel is reduced to `(sum |d^n I_sigma|^p)^(1/p)` over the usable
//! pixels and the triple is normalized to unit sum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::color::Illuminant;
use crate::error::{Error, Result};
use crate::filters::{gaussian_derivative_taps, gaussian_half_width, separable_correlate};
use crate::raster::{BinaryMask, LinearImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiParams {
    /// Derivative order: 0, 1 or 2.
    pub order: u8,
    /// Minkowski norm `p >= 1`; `f64::INFINITY` takes the channel maximum.
    pub norm: f64,
    /// Gaussian scale; 0 means no smoothing and is only allowed for order 0.
    pub sigma: f64,
    /// Values at or above this are excluded; defaults to the bit-depth ceiling.
    pub saturation_level: Option<f64>,
}

impl MinkowskiParams {
    pub fn new(order: u8, norm: f64, sigma: f64) -> Result<Self> {
        let p = Self {
            order,
            norm,
            sigma,
            saturation_level: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn gray_world() -> Self {
        Self::new(0, 1.0, 0.0).unwrap()
    }

    pub fn white_patch() -> Self {
        Self::new(0, f64::INFINITY, 0.0).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.order > 2 {
            return Err(Error::invalid(format!("derivative order must be 0, 1 or 2, got {}", self.order)));
        }
        if !(self.norm >= 1.0) {
            return Err(Error::invalid(format!("Minkowski norm must be >= 1, got {}", self.norm)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.order > 0 && self.sigma == 0.0 {
            return Err(Error::invalid("derivative estimators need sigma > 0"));
        }
        Ok(())
    }
}

/// Named members of the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MinkowskiPreset {
    GrayWorld,
    WhitePatch,
    ShadesOfGray,
    GeneralGrayWorld,
    GrayEdge1,
    GrayEdge2,
}

impl MinkowskiPreset {
    pub const ALL: [MinkowskiPreset; 6] = [
        MinkowskiPreset::GrayWorld,
        MinkowskiPreset::WhitePatch,
        MinkowskiPreset::ShadesOfGray,
        MinkowskiPreset::GeneralGrayWorld,
        MinkowskiPreset::GrayEdge1,
        MinkowskiPreset::GrayEdge2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MinkowskiPreset::GrayWorld => "gw",
            MinkowskiPreset::WhitePatch => "wp",
            MinkowskiPreset::ShadesOfGray => "sog",
            MinkowskiPreset::GeneralGrayWorld => "gg",
            MinkowskiPreset::GrayEdge1 => "ge1",
            MinkowskiPreset::GrayEdge2 => "ge2",
        }
    }

    pub fn order(self) -> u8 {
        match self {
            MinkowskiPreset::GrayEdge1 => 1,
            MinkowskiPreset::GrayEdge2 => 2,
            _ => 0,
        }
    }

    /// Parameters used when none are given: p = 6 and sigma = 2 where the
    /// preset has them.
    pub fn default_params(self) -> MinkowskiParams {
        let (n, p, s) = match self {
            MinkowskiPreset::GrayWorld => (0, 1.0, 0.0),
            MinkowskiPreset::WhitePatch => (0, f64::INFINITY, 0.0),
            MinkowskiPreset::ShadesOfGray => (0, 6.0, 0.0),
            MinkowskiPreset::GeneralGrayWorld => (0, 6.0, 2.0),
            MinkowskiPreset::GrayEdge1 => (1, 6.0, 2.0),
            MinkowskiPreset::GrayEdge2 => (2, 6.0, 2.0),
        };
        MinkowskiParams::new(n, p, s).unwrap()
    }

    /// Applies overrides, keeping the parameters the preset fixes.
    pub fn params(self, norm: Option<f64>, sigma: Option<f64>) -> Result<MinkowskiParams> {
        let mut p = self.default_params();
        match self {
            MinkowskiPreset::GrayWorld | MinkowskiPreset::WhitePatch => {
                if norm.is_some() || sigma.is_some() {
                    return Err(Error::invalid(format!("{} takes no parameters", self.name())));
                }
            }
            MinkowskiPreset::ShadesOfGray => {
                if sigma.is_some() {
                    return Err(Error::invalid("sog takes no sigma"));
                }
                p.norm = norm.unwrap_or(p.norm);
            }
            _ => {
                p.norm = norm.unwrap_or(p.norm);
                p.sigma = sigma.unwrap_or(p.sigma);
            }
        }
        p.validate()?;
        Ok(p)
    }

    /// Norms and scales tried when searching for the best setting.
    pub fn sweep(self) -> Vec<MinkowskiParams> {
        let norms: Vec<f64> = (1..=14).map(f64::from).collect();
        let mut out = Vec::new();
        match self {
            MinkowskiPreset::GrayWorld | MinkowskiPreset::WhitePatch => out.push(self.default_params()),
            MinkowskiPreset::ShadesOfGray => {
                for &p in &norms {
                    out.push(MinkowskiParams::new(0, p, 0.0).unwrap());
                }
            }
            _ => {
                let lowest = if self == MinkowskiPreset::GeneralGrayWorld { 0 } else { 1 };
                for s in lowest..=4 {
                    for &p in &norms {
                        out.push(MinkowskiParams::new(self.order(), p, f64::from(s)).unwrap());
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for MinkowskiPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MinkowskiPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MinkowskiPreset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown baseline '{s}'")))
    }
}

/// Per-channel magnitudes `|d^n I_sigma|` at every pixel whose support is in
/// frame and free of saturated or excluded pixels.
pub fn channel_magnitudes(
    image: &LinearImage,
    order: u8,
    sigma: f64,
    saturation_level: Option<f64>,
    exclusion: Option<&BinaryMask>,
) -> Result<[Vec<f64>; 3]> {
    let (w, h) = image.dims();
    let level = saturation_level.or_else(|| image.bit_depth().max_code());
    let mut blocked = match level {
        Some(l) => BinaryMask::from_vec(w, h, image.pixels().iter().map(|p| p.iter().any(|&v| v >= l)).collect())?,
        None => BinaryMask::new(w, h, false),
    };
    if let Some(ex) = exclusion {
        ex.check_dims((w, h))?;
        blocked = BinaryMask::from_vec(
            w,
            h,
            blocked.as_slice().iter().zip(ex.as_slice()).map(|(a, b)| *a || *b).collect(),
        )?;
    }

    if sigma == 0.0 {
        if order != 0 {
            return Err(Error::invalid("derivative estimators need sigma > 0"));
        }
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for (p, &b) in image.pixels().iter().zip(blocked.as_slice()) {
            if !b {
                for k in 0..3 {
                    out[k].push(p[k]);
                }
            }
        }
        return Ok(out);
    }

    let r = gaussian_half_width(sigma);
    if 2 * r + 1 > w || 2 * r + 1 > h {
        return Err(Error::invalid(format!("sigma {sigma} support does not fit a {w}x{h} image")));
    }
    let reach = blocked.dilate_square(r);
    let keep: Vec<usize> = (r..h - r)
        .flat_map(|y| (r..w - r).map(move |x| y * w + x))
        .filter(|&i| !reach.as_slice()[i])
        .collect();

    let g0 = gaussian_derivative_taps(sigma, 0)?;
    let g1 = gaussian_derivative_taps(sigma, 1)?;
    let g2 = gaussian_derivative_taps(sigma, 2)?;
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for (k, slot) in out.iter_mut().enumerate() {
        let plane = image.plane(k);
        let mags: Vec<f64> = match order {
            0 => {
                let (s, _, _) = separable_correlate(&plane, w, h, &g0, &g0)?;
                keep.iter().map(|&i| s[i].abs()).collect()
            }
            1 => {
                let (ix, _, _) = separable_correlate(&plane, w, h, &g1, &g0)?;
                let (iy, _, _) = separable_correlate(&plane, w, h, &g0, &g1)?;
                keep.iter().map(|&i| ix[i].hypot(iy[i])).collect()
            }
            _ => {
                let (ixx, _, _) = separable_correlate(&plane, w, h, &g2, &g0)?;
                let (iyy, _, _) = separable_correlate(&plane, w, h, &g0, &g2)?;
                let (ixy, _, _) = separable_correlate(&plane, w, h, &g1, &g1)?;
                keep.iter()
                    .map(|&i| (ixx[i] * ixx[i] + iyy[i] * iyy[i] + 2.0 * ixy[i] * ixy[i]).sqrt())
                    .collect()
            }
        };
        *slot = if order > 0 {
            // a flat plane leaves round-off of this order behind
            let floor = 1e-12 * image.max_value();
            mags.into_iter().map(|m| if m <= floor { 0.0 } else { m }).collect()
        } else {
            mags
        };
    }
    Ok(out)
}

/// `(sum v^p)^(1/p)`, or the maximum for infinite `p`.
pub fn minkowski_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().copied().fold(0.0, f64::max);
    }
    if p == 1.0 {
        return values.iter().sum();
    }
    // factor out the maximum so large p cannot overflow
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    max * values.iter().map(|v| (v / max).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Normalizes per-channel statistics into an illuminant.
pub fn illuminant_from_magnitudes(mags: &[Vec<f64>; 3], p: f64) -> Result<Illuminant> {
    if mags[0].is_empty() {
        return Err(Error::UnrecoverableInput("no usable pixels for the baseline statistic".into()));
    }
    let stat = [
        minkowski_norm(&mags[0], p),
        minkowski_norm(&mags[1], p),
        minkowski_norm(&mags[2], p),
    ];
    if stat.iter().any(|&s| s <= 0.0) {
        return Err(Error::DegenerateInput(format!(
            "Minkowski statistic ({}, {}, {}) has a zero channel",
            stat[0], stat[1], stat[2]
        )));
    }
    Illuminant::from_rgb(stat)
}

pub fn minkowski_estimate(image: &LinearImage, params: &MinkowskiParams, exclusion: Option<&BinaryMask>) -> Result<Illuminant> {
    params.validate()?;
    let mags = channel_magnitudes(image, params.order, params.sigma, params.saturation_level, exclusion)?;
    illuminant_from_magnitudes(&mags, params.norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured() -> LinearImage {
        LinearImage::from_fn(40, 36, |x, y| {
            let t = ((x * 31 + y * 17) % 23) as f64 / 23.0;
            [0.2 + t, 0.1 + 0.5 * (x as f64 * 0.4).sin().abs(), 0.3 + 0.2 * ((y * 3) % 7) as f64]
        })
        .unwrap()
    }

    #[test]
    fn gray_world_of_uniform_image() {
        let img = LinearImage::filled(10, 10, [0.2, 0.3, 0.5]).unwrap();
        let e = minkowski_estimate(&img, &MinkowskiParams::gray_world(), None).unwrap();
        for (a, b) in e.rgb().iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn white_patch_takes_the_maximum() {
        let img = LinearImage::from_fn(8, 8, |x, y| if (x, y) == (3, 4) { [1.0; 3] } else { [0.1; 3] }).unwrap();
        let e = minkowski_estimate(&img, &MinkowskiParams::white_patch(), None).unwrap();
        assert_eq!(e.rgb(), [1.0 / 3.0; 3]);
    }

    #[test]
    fn shades_of_gray_p1_is_gray_world() {
        let img = textured();
        let sog = minkowski_estimate(&img, &MinkowskiPreset::ShadesOfGray.params(Some(1.0), None).unwrap(), None).unwrap();
        let gw = minkowski_estimate(&img, &MinkowskiParams::gray_world(), None).unwrap();
        assert_eq!(sog, gw);
    }

    #[test]
    fn gray_edge_on_constant_image_is_degenerate() {
        let img = LinearImage::filled(20, 20, [0.4, 0.4, 0.2]).unwrap();
        for preset in [MinkowskiPreset::GrayEdge1, MinkowskiPreset::GrayEdge2] {
            assert!(matches!(
                minkowski_estimate(&img, &preset.default_params(), None),
                Err(Error::DegenerateInput(_))
            ));
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(MinkowskiParams::new(0, 0.5, 0.0).is_err());
        assert!(MinkowskiParams::new(1, 2.0, 0.0).is_err());
        assert!(MinkowskiParams::new(3, 2.0, 1.0).is_err());
        assert!(MinkowskiPreset::GrayWorld.params(Some(2.0), None).is_err());
        assert!("ge3".parse::<MinkowskiPreset>().is_err());
        assert_eq!("GE2".parse::<MinkowskiPreset>().unwrap(), MinkowskiPreset::GrayEdge2);
    }

    #[test]
    fn excluded_and_saturated_pixels_are_ignored() {
        let img = LinearImage::from_fn(6, 6, |x, _| if x == 0 { [250.0, 1.0, 1.0] } else { [1.0, 2.0, 1.0] })
            .unwrap()
            .with_bit_depth(crate::raster::BitDepth::Eight);
        let ex = BinaryMask::from_fn(6, 6, |x, _| x == 0);
        let e = minkowski_estimate(&img, &MinkowskiParams::white_patch(), Some(&ex)).unwrap();
        assert_eq!(e.rgb(), [0.25, 0.5, 0.25]);
        let p = MinkowskiParams {
            saturation_level: Some(200.0),
            ..MinkowskiParams::white_patch()
        };
        assert_eq!(minkowski_estimate(&img, &p, None).unwrap().rgb(), [0.25, 0.5, 0.25]);
    }

    #[test]
    fn sweep_sizes() {
        assert_eq!(MinkowskiPreset::ShadesOfGray.sweep().len(), 14);
        assert_eq!(MinkowskiPreset::GeneralGrayWorld.sweep().len(), 70);
        assert_eq!(MinkowskiPreset::GrayEdge1.sweep().len(), 56);
    }
}
