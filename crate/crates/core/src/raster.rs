//! Pixel containers shared by every module: three-channel linear rasters
//! and boolean masks of the same geometry.

use crate::error::{Error, Result};

/// Depth of the container an image was decoded from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Twelve,
    Sixteen,
    Float,
}

impl BitDepth {
    /// Largest representable code value, `None` for float rasters.
    pub fn max_code(self) -> Option<f64> {
        match self {
            BitDepth::Eight => Some(255.0),
            BitDepth::Twelve => Some(4095.0),
            BitDepth::Sixteen => Some(65535.0),
            BitDepth::Float => None,
        }
    }
}

/// A width x height raster of non-negative linear RGB values, stored
/// row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
    bit_depth: BitDepth,
}

impl LinearImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>, bit_depth: BitDepth) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be non-zero"));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "pixel buffer holds {} values, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        if let Some(bad) = pixels.iter().flatten().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!("pixel value {bad} is negative or not finite")));
        }
        Ok(Self {
            width,
            height,
            pixels,
            bit_depth,
        })
    }

    /// Uniform image of a single color.
    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height], BitDepth::Float)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels, BitDepth::Float)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn with_bit_depth(mut self, bit_depth: BitDepth) -> Self {
        self.bit_depth = bit_depth;
        self
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    /// One channel as a contiguous plane.
    pub fn plane(&self, channel: usize) -> Vec<f64> {
        self.pixels.iter().map(|p| p[channel]).collect()
    }

    /// Multiplies every value by `factor` (which must be non-negative).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::invalid(format!("scale factor {factor} must be finite and >= 0")));
        }
        let pixels = self
            .pixels
            .iter()
            .map(|p| [p[0] * factor, p[1] * factor, p[2] * factor])
            .collect();
        Ok(Self {
            pixels,
            ..self.clone()
        })
    }

    /// Applies a per-pixel map. The result is re-validated.
    pub fn map(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.pixels.iter().map(|&p| f(p)).collect(),
            self.bit_depth,
        )
    }

    /// Largest value over all channels.
    pub fn max_value(&self) -> f64 {
        self.pixels.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// A width x height boolean grid aligned with an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::invalid(format!(
                "mask holds {} flags, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn and(&self, other: &BinaryMask) -> Result<Self> {
        self.check_dims(other.dims())?;
        Ok(Self {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect(),
            ..*self
        })
    }

    pub fn and_not(&self, other: &BinaryMask) -> Result<Self> {
        self.check_dims(other.dims())?;
        Ok(Self {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && !*b).collect(),
            ..*self
        })
    }

    pub fn not(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
            ..*self
        }
    }

    /// True if every set flag of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    pub fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::invalid(format!(
                "mask is {}x{}, expected {}x{}",
                self.width, self.height, dims.0, dims.1
            )));
        }
        Ok(())
    }

    /// Indices (row-major) of the set flags.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    /// One erosion step with a 3x3 all-true structuring element. Pixels
    /// beyond the border count as set, so regions touching the frame are
    /// not eaten from outside.
    pub fn erode3x3(&self) -> Self {
        let (w, h) = self.dims();
        let mut out = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                if !self.bits[y * w + x] {
                    continue;
                }
                let mut keep = true;
                'nb: for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        if !self.bits[ny * w + nx] {
                            keep = false;
                            break 'nb;
                        }
                    }
                }
                out[y * w + x] = keep;
            }
        }
        Self {
            bits: out,
            ..*self
        }
    }

    /// Square (Chebyshev) dilation by `radius` pixels, clipped to the frame.
    pub fn dilate_square(&self, radius: usize) -> Self {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = self.dims();
        // separable max filter: rows, then columns
        let mut rows = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                if self.bits[y * w + x] {
                    let lo = x.saturating_sub(radius);
                    let hi = (x + radius).min(w - 1);
                    rows[y * w + lo..=y * w + hi].iter_mut().for_each(|b| *b = true);
                }
            }
        }
        let mut out = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                if rows[y * w + x] {
                    let lo = y.saturating_sub(radius);
                    let hi = (y + radius).min(h - 1);
                    for ny in lo..=hi {
                        out[ny * w + x] = true;
                    }
                }
            }
        }
        Self { bits: out, ..*self }
    }
}
