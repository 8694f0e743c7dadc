//! Differential stencils and the linear filtering that turns an image into
//! a derivative structure `J = I (x) f`.
//!
//! Filtering is cross-correlation, `J(x, y) = sum_ij f(i, j) I(x + i, y + j)`
//! with `(i, j)` measured from the kernel anchor. No padding is applied:
//! any output whose footprint overhangs the frame or touches an excluded
//! pixel is flagged invalid instead of extrapolated.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, LinearImage};

/// Largest tolerated tap sum for a differential kernel.
pub const ZERO_SUM_TOLERANCE: f64 = 1e-9;

/// A 2-D zero-sum stencil with odd side lengths, anchored at its center.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    taps: Vec<f64>,
    // (dx, dy, weight) for every non-zero tap in row-major order
    support: Vec<(isize, isize, f64)>,
}

impl Kernel {
    pub fn new(width: usize, height: usize, taps: Vec<f64>) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::invalid(format!("kernel sides must be odd, got {width}x{height}")));
        }
        if taps.len() != width * height {
            return Err(Error::invalid("kernel tap count does not match its dimensions"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("kernel taps must be finite"));
        }
        let sum: f64 = taps.iter().sum();
        if sum.abs() >= ZERO_SUM_TOLERANCE {
            return Err(Error::invalid(format!("differential kernel taps sum to {sum}, not 0")));
        }
        let (ax, ay) = ((width / 2) as isize, (height / 2) as isize);
        let support = taps
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != 0.0)
            .map(|(i, &t)| ((i % width) as isize - ax, (i / width) as isize - ay, t))
            .collect();
        Ok(Self {
            width,
            height,
            taps,
            support,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Anchor (center) in tap coordinates.
    pub fn anchor(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    /// Half-widths of the footprint along x and y.
    pub fn radius(&self) -> (usize, usize) {
        self.anchor()
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap at an offset from the anchor.
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let (ax, ay) = self.anchor();
        let x = ax as isize + dx;
        let y = ay as isize + dy;
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            return 0.0;
        }
        self.taps[y as usize * self.width + x as usize]
    }

    pub fn tap_sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    fn fits(&self, width: usize, height: usize) -> bool {
        self.width <= width && self.height <= height
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.taps.chunks(self.width) {
            let cells: Vec<String> = row.iter().map(|t| format!("{t:>10.5}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// The 3x3 Laplacian-style stencil `[0 -1 0; -1 4 -1; 0 -1 0]`.
pub fn laplacian_f1() -> Kernel {
    #[rustfmt::skip]
    let taps = vec![
         0.0, -1.0,  0.0,
        -1.0,  4.0, -1.0,
         0.0, -1.0,  0.0,
    ];
    Kernel::new(3, 3, taps).expect("static stencil")
}

/// The 7x7 cross stencil with arms `(-1, 6, -15)` and center 40, a
/// sixth-order difference along both axes.
pub fn cross_f2() -> Kernel {
    const ARM: [f64; 7] = [-1.0, 6.0, -15.0, 40.0, -15.0, 6.0, -1.0];
    let mut taps = vec![0.0; 49];
    for (i, &v) in ARM.iter().enumerate() {
        taps[3 * 7 + i] = v;
        taps[i * 7 + 3] = v;
    }
    Kernel::new(7, 7, taps).expect("static stencil")
}

/// The three second-order Gaussian operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GaussianOperator {
    Xx,
    Yy,
    Xy,
}

impl GaussianOperator {
    pub const ALL: [GaussianOperator; 3] = [GaussianOperator::Xx, GaussianOperator::Yy, GaussianOperator::Xy];

    /// Continuous operator value at `(x, y)` with multiplicative constants
    /// dropped:
    ///
    /// * `f_xx = (1 - x^2/s^2) exp(-x^2 / 2s^2)`
    /// * `f_yy = (1 - y^2/s^2) exp(-y^2 / 2s^2)`
    /// * `f_xy = x y exp(-(x^2 + y^2) / 2s^2)`
    pub fn sample(self, x: f64, y: f64, sigma: f64) -> f64 {
        let s2 = sigma * sigma;
        match self {
            GaussianOperator::Xx => (1.0 - x * x / s2) * (-x * x / (2.0 * s2)).exp(),
            GaussianOperator::Yy => (1.0 - y * y / s2) * (-y * y / (2.0 * s2)).exp(),
            GaussianOperator::Xy => x * y * (-(x * x + y * y) / (2.0 * s2)).exp(),
        }
    }

    /// Discretized, zero-sum kernel at scale `sigma`.
    pub fn kernel(self, sigma: f64) -> Result<Kernel> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
        }
        let r = gaussian_half_width(sigma);
        let side = 2 * r + 1;
        if self == GaussianOperator::Yy {
            // exact transpose, so swapping image axes swaps the two responses bit-for-bit
            let xx = GaussianOperator::Xx.kernel(sigma)?;
            let taps = (0..side * side).map(|i| xx.taps()[(i % side) * side + i / side]).collect();
            return Kernel::new(side, side, taps);
        }
        let mut taps = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                let x = i as f64 - r as f64;
                let y = j as f64 - r as f64;
                taps.push(self.sample(x, y, sigma));
            }
        }
        let mean = taps.iter().sum::<f64>() / taps.len() as f64;
        taps.iter_mut().for_each(|t| *t -= mean);
        Kernel::new(side, side, taps)
    }

    pub fn name(self) -> &'static str {
        match self {
            GaussianOperator::Xx => "xx",
            GaussianOperator::Yy => "yy",
            GaussianOperator::Xy => "xy",
        }
    }
}

/// Half-width `ceil(3 sigma)` of the sampled Gaussian support.
pub fn gaussian_half_width(sigma: f64) -> usize {
    (3.0 * sigma).ceil().max(1.0) as usize
}

/// `(f_xx, f_yy, f_xy)` at scale `sigma`, each re-centered to zero sum.
pub fn gaussian_second_kernels(sigma: f64) -> Result<(Kernel, Kernel, Kernel)> {
    Ok((
        GaussianOperator::Xx.kernel(sigma)?,
        GaussianOperator::Yy.kernel(sigma)?,
        GaussianOperator::Xy.kernel(sigma)?,
    ))
}

/// Signed per-channel filter response plus the flags of outputs whose
/// footprint lies fully inside the frame and clear of excluded pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeStructure {
    width: usize,
    height: usize,
    values: Vec<[f64; 3]>,
    valid: BinaryMask,
}

impl DerivativeStructure {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn valid_mask(&self) -> &BinaryMask {
        &self.valid
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.values[y * self.width + x]
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid.get(x, y)
    }
}

/// Answers "does this footprint touch the frame edge or an excluded pixel"
/// in constant time via a summed-area table.
#[derive(Debug, Clone)]
pub struct FootprintGuard {
    width: usize,
    height: usize,
    rx: usize,
    ry: usize,
    // (w + 1) x (h + 1) prefix sums of the exclusion mask
    prefix: Option<Vec<u32>>,
}

impl FootprintGuard {
    pub fn new(width: usize, height: usize, kernel: &Kernel, exclusion: Option<&BinaryMask>) -> Result<Self> {
        let prefix = match exclusion {
            Some(mask) => {
                mask.check_dims((width, height))?;
                let stride = width + 1;
                let mut p = vec![0u32; stride * (height + 1)];
                for y in 0..height {
                    let mut row = 0u32;
                    for x in 0..width {
                        row += mask.get(x, y) as u32;
                        p[(y + 1) * stride + x + 1] = p[y * stride + x + 1] + row;
                    }
                }
                Some(p)
            }
            None => None,
        };
        let (rx, ry) = kernel.radius();
        Ok(Self {
            width,
            height,
            rx,
            ry,
            prefix,
        })
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        if x < self.rx || y < self.ry || x + self.rx >= self.width || y + self.ry >= self.height {
            return false;
        }
        match &self.prefix {
            None => true,
            Some(p) => {
                let stride = self.width + 1;
                let (x0, y0) = (x - self.rx, y - self.ry);
                let (x1, y1) = (x + self.rx + 1, y + self.ry + 1);
                let sum = p[y1 * stride + x1] + p[y0 * stride + x0] - p[y0 * stride + x1] - p[y1 * stride + x0];
                sum == 0
            }
        }
    }
}

/// Filter response at one pixel. The caller guarantees the footprint is in
/// bounds. Both the full-frame and the sparse paths go through here, so
/// their results are bit-identical.
#[inline]
pub fn respond_at(image: &LinearImage, kernel: &Kernel, x: usize, y: usize) -> [f64; 3] {
    let w = image.width() as isize;
    let px = image.pixels();
    let mut acc = [0.0f64; 3];
    for &(dx, dy, t) in &kernel.support {
        let p = px[((y as isize + dy) * w + x as isize + dx) as usize];
        acc[0] += t * p[0];
        acc[1] += t * p[1];
        acc[2] += t * p[2];
    }
    acc
}

/// Filters every channel of `image` with `kernel`. Outputs are zero where
/// the validity flag is false.
pub fn convolve(image: &LinearImage, kernel: &Kernel, exclusion: Option<&BinaryMask>) -> Result<DerivativeStructure> {
    let (w, h) = image.dims();
    if !kernel.fits(w, h) {
        return Err(Error::invalid(format!(
            "{}x{} kernel does not fit a {w}x{h} image",
            kernel.width(),
            kernel.height()
        )));
    }
    let guard = FootprintGuard::new(w, h, kernel, exclusion)?;
    let rows: Vec<(Vec<[f64; 3]>, Vec<bool>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut vals = vec![[0.0; 3]; w];
            let mut ok = vec![false; w];
            for x in 0..w {
                if guard.is_valid(x, y) {
                    vals[x] = respond_at(image, kernel, x, y);
                    ok[x] = true;
                }
            }
            (vals, ok)
        })
        .collect();
    let mut values = Vec::with_capacity(w * h);
    let mut flags = Vec::with_capacity(w * h);
    for (v, f) in rows {
        values.extend(v);
        flags.extend(f);
    }
    Ok(DerivativeStructure {
        width: w,
        height: h,
        values,
        valid: BinaryMask::from_vec(w, h, flags)?,
    })
}

/// Sampled 1-D Gaussian derivative of order 0, 1 or 2 on `[-ceil(3s), ceil(3s)]`.
///
/// Order 0 sums to one; orders 1 and 2 are the analytic derivatives of the
/// normalized order-0 taps, with order 2 re-centered to zero sum.
pub fn gaussian_derivative_taps(sigma: f64, order: u8) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    let r = gaussian_half_width(sigma) as isize;
    let s2 = sigma * sigma;
    let g: Vec<f64> = (-r..=r).map(|x| (-(x * x) as f64 / (2.0 * s2)).exp()).collect();
    let norm: f64 = g.iter().sum();
    let g: Vec<f64> = g.iter().map(|v| v / norm).collect();
    let taps = match order {
        0 => g,
        1 => (-r..=r).zip(&g).map(|(x, v)| -(x as f64) / s2 * v).collect(),
        2 => {
            let t: Vec<f64> = (-r..=r)
                .zip(&g)
                .map(|(x, v)| ((x * x) as f64 / (s2 * s2) - 1.0 / s2) * v)
                .collect();
            let mean = t.iter().sum::<f64>() / t.len() as f64;
            t.iter().map(|v| v - mean).collect()
        }
        _ => return Err(Error::invalid(format!("derivative order {order} not supported"))),
    };
    Ok(taps)
}

/// Separable correlation of a single plane: `col_taps` along y applied to
/// the result of `row_taps` along x. Returns the filtered plane and the
/// half-widths `(rx, ry)` of the invalid border.
pub fn separable_correlate(
    plane: &[f64],
    width: usize,
    height: usize,
    row_taps: &[f64],
    col_taps: &[f64],
) -> Result<(Vec<f64>, usize, usize)> {
    if row_taps.len() % 2 == 0 || col_taps.len() % 2 == 0 {
        return Err(Error::invalid("separable taps must have odd length"));
    }
    let rx = row_taps.len() / 2;
    let ry = col_taps.len() / 2;
    if row_taps.len() > width || col_taps.len() > height {
        return Err(Error::invalid("separable kernel does not fit the image"));
    }
    let mut tmp = vec![0.0; width * height];
    tmp.par_chunks_mut(width).enumerate().for_each(|(y, out)| {
        let row = &plane[y * width..(y + 1) * width];
        for x in rx..width - rx {
            out[x] = row_taps.iter().enumerate().map(|(i, t)| t * row[x + i - rx]).sum();
        }
    });
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, o)| {
        if y < ry || y + ry >= height {
            return;
        }
        for x in rx..width - rx {
            o[x] = col_taps
                .iter()
                .enumerate()
                .map(|(j, t)| t * tmp[(y + j - ry) * width + x])
                .sum();
        }
    });
    Ok((out, rx, ry))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_taps() {
        let k = laplacian_f1();
        assert_eq!(k.at(0, 0), 4.0);
        assert_eq!(k.at(1, 0), -1.0);
        assert_eq!(k.at(-1, -1), 0.0);
        assert_eq!(k.tap_sum(), 0.0);
    }

    #[test]
    fn f2_taps() {
        let k = cross_f2();
        assert_eq!(k.at(0, 0), 40.0);
        assert_eq!(k.at(1, 0), -15.0);
        assert_eq!(k.at(0, -2), 6.0);
        assert_eq!(k.at(-3, 0), -1.0);
        assert_eq!(k.at(1, 1), 0.0);
        assert_eq!(k.tap_sum(), 0.0);
    }

    #[test]
    fn gaussian_raw_samples() {
        assert_eq!(GaussianOperator::Xx.sample(0.0, 2.0, 1.0), 1.0);
        assert_eq!(GaussianOperator::Xx.sample(1.0, 0.0, 1.0), 0.0);
        assert_eq!(GaussianOperator::Xy.sample(0.0, 1.7, 1.3), 0.0);
        assert_eq!(GaussianOperator::Yy.sample(3.0, 0.0, 2.0), 1.0);
    }

    #[test]
    fn gaussian_kernels_are_zero_sum_and_sized() {
        for sigma in [0.5, 1.0, 1.5, 2.0, 3.3] {
            let (xx, yy, xy) = gaussian_second_kernels(sigma).unwrap();
            let side = 2 * (3.0 * sigma as f64).ceil() as usize + 1;
            for k in [&xx, &yy, &xy] {
                assert_eq!(k.width(), side);
                assert!(k.tap_sum().abs() < ZERO_SUM_TOLERANCE);
            }
            // f_yy is the transpose of f_xx
            for dy in -2..=2 {
                for dx in -2..=2 {
                    assert_eq!(xx.at(dx, dy), yy.at(dy, dx));
                }
            }
        }
        assert_eq!(gaussian_second_kernels(2.0).unwrap().0.width(), 13);
    }

    #[test]
    fn gaussian_rejects_non_positive_sigma() {
        assert!(gaussian_second_kernels(0.0).is_err());
        assert!(gaussian_second_kernels(-1.0).is_err());
        assert!(gaussian_derivative_taps(0.0, 1).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(Kernel::new(2, 3, vec![0.0; 6]).is_err());
        assert!(Kernel::new(3, 1, vec![1.0, 1.0, 1.0]).is_err());
        assert!(Kernel::new(3, 1, vec![1.0, -2.0, 1.0]).is_ok());
    }

    #[test]
    fn kernel_larger_than_image_is_rejected() {
        let img = LinearImage::filled(5, 5, [1.0; 3]).unwrap();
        assert!(convolve(&img, &cross_f2(), None).is_err());
    }

    #[test]
    fn constant_image_gives_zero_response() {
        let img = LinearImage::filled(20, 20, [0.3, 0.5, 0.7]).unwrap();
        for k in [laplacian_f1(), cross_f2(), GaussianOperator::Xy.kernel(1.0).unwrap()] {
            let j = convolve(&img, &k, None).unwrap();
            for (v, ok) in j.values().iter().zip(j.valid_mask().as_slice()) {
                if *ok {
                    assert!(v.iter().all(|c| c.abs() < 1e-12), "{v:?}");
                }
            }
        }
    }

    #[test]
    fn border_and_exclusion_invalidate() {
        let img = LinearImage::filled(11, 11, [1.0; 3]).unwrap();
        let mut ex = BinaryMask::new(11, 11, false);
        ex.set(7, 5, true);
        let j = convolve(&img, &laplacian_f1(), Some(&ex)).unwrap();
        let v = j.valid_mask();
        assert!(!v.get(0, 5) && !v.get(10, 5) && !v.get(5, 0));
        assert!(v.get(1, 1));
        assert!(!v.get(6, 5) && !v.get(8, 6) && !v.get(7, 4));
        assert!(v.get(5, 5));
    }

    #[test]
    fn separable_gaussian_preserves_constants() {
        let plane = vec![2.0; 30 * 30];
        let g = gaussian_derivative_taps(1.5, 0).unwrap();
        let (out, rx, ry) = separable_correlate(&plane, 30, 30, &g, &g).unwrap();
        assert!((out[15 * 30 + 15] - 2.0).abs() < 1e-12);
        assert_eq!((rx, ry), (5, 5));
        let d = gaussian_derivative_taps(1.5, 1).unwrap();
        let (out, _, _) = separable_correlate(&plane, 30, 30, &d, &g).unwrap();
        assert!(out[15 * 30 + 15].abs() < 1e-12);
    }
}
