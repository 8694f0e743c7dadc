use rayon::prelude::*;

use super::selection::intensity;
use super::DcsParams;
use crate::color::{chromaticities, ChromaticityPoint};
use crate::error::{Error, Result};
use crate::filters::{respond_at, FootprintGuard, GaussianOperator};
use crate::raster::{BinaryMask, LinearImage};

/// Relative floor on `|sum J|`, scaled by the mean bright-region intensity.
pub const TINY_SUM_FACTOR: f64 = 1e-12;

/// A filter response whose three chromaticities all lie in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeColor {
    pub j: [f64; 3],
    pub x: usize,
    pub y: usize,
    pub operator: GaussianOperator,
    pub sigma: f64,
}

impl DerivativeColor {
    pub fn chromaticities(&self) -> [f64; 3] {
        let s = self.j[0] + self.j[1] + self.j[2];
        [self.j[0] / s, self.j[1] / s, self.j[2] / s]
    }

    pub fn point(&self) -> ChromaticityPoint {
        let c = self.chromaticities();
        ChromaticityPoint { r: c[0], g: c[1] }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DerivativeColorSet {
    pub items: Vec<DerivativeColor>,
}

impl DerivativeColorSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn points(&self) -> Vec<ChromaticityPoint> {
        self.items.iter().map(DerivativeColor::point).collect()
    }
}

/// Collects the derivative colors of `f_xx`, `f_yy`, `f_xy` at every scale
/// in `params.sigmas`, restricted to `region` and to pixels whose kernel
/// footprint stays inside the frame and clear of `exclusion`.
///
/// Responses are evaluated only where they can be kept; each one is the
/// same value a full-frame [`crate::filters::convolve`] would produce.
pub fn extract_derivative_colors(
    image: &LinearImage,
    region: &BinaryMask,
    params: &DcsParams,
    exclusion: Option<&BinaryMask>,
) -> Result<DerivativeColorSet> {
    params.validate()?;
    region.check_dims(image.dims())?;
    let sites: Vec<usize> = region.indices().collect();
    if sites.is_empty() {
        return Err(Error::invalid("bright region is empty"));
    }
    let mean_intensity = sites.iter().map(|&i| intensity(image.pixels()[i])).sum::<f64>() / sites.len() as f64;
    let tiny = TINY_SUM_FACTOR * mean_intensity;

    let (w, h) = image.dims();
    let jobs: Vec<(f64, GaussianOperator)> = params
        .sigmas
        .iter()
        .flat_map(|&s| GaussianOperator::ALL.into_iter().map(move |op| (s, op)))
        .collect();
    let per_job: Vec<Result<Vec<DerivativeColor>>> = jobs
        .par_iter()
        .map(|&(sigma, operator)| {
            let kernel = operator.kernel(sigma)?;
            if kernel.width() > w || kernel.height() > h {
                return Err(Error::invalid(format!("sigma {sigma} kernel does not fit a {w}x{h} image")));
            }
            let guard = FootprintGuard::new(w, h, &kernel, exclusion)?;
            let mut out = Vec::new();
            for &i in &sites {
                let (x, y) = (i % w, i / w);
                if !guard.is_valid(x, y) {
                    continue;
                }
                let j = respond_at(image, &kernel, x, y);
                let sum = j[0] + j[1] + j[2];
                if !(sum.abs() >= tiny) {
                    continue;
                }
                let Some(c) = chromaticities(j) else {
                    continue;
                };
                if c[0] + c[1] >= 1.0 {
                    continue;
                }
                out.push(DerivativeColor {
                    j,
                    x,
                    y,
                    operator,
                    sigma,
                });
            }
            Ok(out)
        })
        .collect();
    let mut items = Vec::new();
    for r in per_job {
        items.extend(r?);
    }
    if items.is_empty() {
        return Err(Error::NoDerivativeColors);
    }
    Ok(DerivativeColorSet { items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::convolve;

    #[test]
    fn constant_image_has_no_derivative_colors() {
        let img = LinearImage::filled(40, 40, [0.2, 0.3, 0.5]).unwrap();
        let region = BinaryMask::new(40, 40, true);
        assert!(matches!(
            extract_derivative_colors(&img, &region, &DcsParams::default(), None),
            Err(Error::NoDerivativeColors)
        ));
    }

    #[test]
    fn sparse_responses_match_full_convolution() {
        let img = LinearImage::from_fn(48, 40, |x, y| {
            let t = ((x * 7 + y * 13) % 17) as f64;
            [1.0 + t, 2.0 + 0.5 * t, 1.5 + (x as f64 * 0.3).sin()]
        })
        .unwrap();
        let region = BinaryMask::from_fn(48, 40, |x, y| (x + y) % 3 == 0);
        let set = extract_derivative_colors(&img, &region, &DcsParams::default(), None).unwrap();
        assert!(!set.is_empty());
        for item in set.items.iter().take(200) {
            let k = item.operator.kernel(item.sigma).unwrap();
            let full = convolve(&img, &k, None).unwrap();
            assert!(full.is_valid(item.x, item.y));
            assert_eq!(full.get(item.x, item.y), item.j);
        }
    }

    #[test]
    fn every_item_satisfies_the_definition() {
        let img = LinearImage::from_fn(48, 48, |x, y| {
            let d = ((x as f64 - 24.0).powi(2) + (y as f64 - 20.0).powi(2)) / 60.0;
            [0.3 + (-d).exp(), 0.5 + 0.2 * (x as f64 / 5.0).cos().abs(), 0.2 + 0.8 * (-d).exp()]
        })
        .unwrap();
        let region = BinaryMask::new(48, 48, true);
        let set = extract_derivative_colors(&img, &region, &DcsParams::default(), None).unwrap();
        for item in &set.items {
            let c = item.chromaticities();
            assert!(c.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }
}
