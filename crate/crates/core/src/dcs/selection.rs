//! Bright-region selection: saturation clipping, top-τ% ranking and
//! erosion down to at most η% of the frame.

use super::DcsParams;
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, LinearImage};

/// Pixels whose every channel is strictly below `level`.
pub fn clip_saturated(image: &LinearImage, level: f64) -> BinaryMask {
    let (w, h) = image.dims();
    let bits = image.pixels().iter().map(|p| p.iter().all(|&v| v < level)).collect();
    BinaryMask::from_vec(w, h, bits).expect("mask matches image")
}

/// Brightness used for ranking: the channel sum.
#[inline]
pub fn intensity(p: [f64; 3]) -> f64 {
    p[0] + p[1] + p[2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrightRegion {
    /// Final selection after erosion.
    pub mask: BinaryMask,
    /// The top-τ% mask before any erosion.
    pub initial: BinaryMask,
    pub erosion_steps: usize,
    /// Erosion emptied the mask (or stalled) before reaching the η% target;
    /// `mask` is the last non-empty step.
    pub degraded: bool,
}

/// `ceil(percent% * count)`, tolerant of float noise in the product.
pub(crate) fn percent_ceil(percent: f64, count: usize) -> usize {
    let exact = percent * count as f64 / 100.0;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Marks the top τ% of usable pixels by intensity, then erodes with a 3x3
/// element until no more than η% of all pixels remain.
///
/// Ties at the τ-th percentile are admitted in row-major order until exactly
/// `ceil(τ% * usable)` pixels are marked.
pub fn select_bright_regions(image: &LinearImage, params: &DcsParams, usable: &BinaryMask) -> Result<BrightRegion> {
    params.validate()?;
    usable.check_dims(image.dims())?;
    let (w, h) = image.dims();
    let total = w * h;
    let n_usable = usable.count();
    let required = percent_ceil(params.eta, total).max(1);
    if n_usable < required {
        return Err(Error::UnrecoverableInput(format!(
            "{n_usable} usable pixels, at least {required} needed"
        )));
    }

    let mut ranked: Vec<(usize, f64)> = usable.indices().map(|i| (i, intensity(image.pixels()[i]))).collect();
    // stable: equal intensities keep row-major order
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let keep = percent_ceil(params.tau, n_usable).clamp(1, n_usable);
    let mut bits = vec![false; total];
    for &(i, _) in &ranked[..keep] {
        bits[i] = true;
    }
    let initial = BinaryMask::from_vec(w, h, bits)?;

    let within_target = |count: usize| (count as f64) * 100.0 <= params.eta * total as f64;
    let mut mask = initial.clone();
    let mut count = mask.count();
    let mut steps = 0;
    let mut degraded = false;
    while !within_target(count) {
        let next = mask.erode3x3();
        let next_count = next.count();
        if next_count == 0 || next_count == count {
            degraded = true;
            break;
        }
        mask = next;
        count = next_count;
        steps += 1;
    }
    Ok(BrightRegion {
        mask,
        initial,
        erosion_steps: steps,
        degraded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(tau: f64, eta: f64) -> DcsParams {
        DcsParams {
            tau,
            eta,
            ..DcsParams::default()
        }
    }

    #[test]
    fn saturation_is_closed_at_the_top() {
        let img = LinearImage::new(
            3,
            1,
            vec![[10.0, 10.0, 10.0], [4095.0, 0.0, 0.0], [4094.9, 4094.0, 1.0]],
            crate::raster::BitDepth::Twelve,
        )
        .unwrap();
        let m = clip_saturated(&img, 4095.0);
        assert_eq!(m.as_slice(), &[true, false, true]);
        let dark = LinearImage::filled(4, 4, [0.0; 3]).unwrap();
        assert_eq!(clip_saturated(&dark, 1.0).count(), 16);
    }

    #[test]
    fn percent_rounding() {
        assert_eq!(percent_ceil(5.0, 100), 5);
        assert_eq!(percent_ceil(5.0, 101), 6);
        assert_eq!(percent_ceil(2.0, 10000), 200);
        assert_eq!(percent_ceil(0.07, 10000), 7);
    }

    #[test]
    fn uniform_image_ties_break_row_major() {
        let img = LinearImage::filled(10, 10, [1.0; 3]).unwrap();
        let usable = BinaryMask::new(10, 10, true);
        let r = select_bright_regions(&img, &params(5.0, 5.0), &usable).unwrap();
        assert_eq!(r.initial.indices().collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        assert_eq!(r.erosion_steps, 0);
        assert_eq!(r.mask, r.initial);
    }

    #[test]
    fn loop_guard_when_already_within_target() {
        // 20x20 frame, 5% = 20 pixels: a 4x5 blob is brightest
        let img = LinearImage::from_fn(20, 20, |x, y| {
            if (5..10).contains(&x) && (5..9).contains(&y) {
                [5.0; 3]
            } else {
                [1.0 + (x + y) as f64 * 1e-3; 3]
            }
        })
        .unwrap();
        let usable = BinaryMask::new(20, 20, true);
        let r = select_bright_regions(&img, &params(5.0, 5.0), &usable).unwrap();
        assert_eq!(r.erosion_steps, 0);
        assert_eq!(r.mask.count(), 20);
        assert!(r.mask.get(5, 5) && r.mask.get(9, 8));
    }

    #[test]
    fn erosion_removes_specks() {
        let img = LinearImage::from_fn(40, 40, |x, y| {
            let blob = (10..22).contains(&x) && (10..22).contains(&y);
            let speck = (x % 7 == 3) && (y % 9 == 2) && !(8..24).contains(&x);
            if blob || speck {
                [9.0; 3]
            } else {
                [1.0; 3]
            }
        })
        .unwrap();
        let usable = BinaryMask::new(40, 40, true);
        let r = select_bright_regions(&img, &params(12.0, 5.0), &usable).unwrap();
        assert!(r.erosion_steps >= 1);
        assert!(r.mask.is_subset_of(&r.initial));
        for i in r.mask.indices() {
            let (x, y) = (i % 40, i / 40);
            assert!((10..22).contains(&x) && (10..22).contains(&y));
        }
    }

    #[test]
    fn erosion_to_empty_falls_back() {
        // scattered isolated bright pixels only: the first erosion empties the mask
        let img = LinearImage::from_fn(30, 30, |x, y| if x % 3 == 0 && y % 3 == 0 { [5.0; 3] } else { [1.0; 3] })
            .unwrap();
        let usable = BinaryMask::new(30, 30, true);
        let r = select_bright_regions(&img, &params(11.0, 2.0), &usable).unwrap();
        assert!(r.degraded);
        assert_eq!(r.erosion_steps, 0);
        assert_eq!(r.mask, r.initial);
    }

    #[test]
    fn too_few_usable_pixels() {
        let img = LinearImage::filled(10, 10, [1.0; 3]).unwrap();
        let usable = BinaryMask::new(10, 10, false);
        assert!(matches!(
            select_bright_regions(&img, &params(5.0, 2.0), &usable),
            Err(Error::UnrecoverableInput(_))
        ));
    }
}
