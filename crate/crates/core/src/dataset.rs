//! Image and manifest IO: decoding to linear rasters, black-level handling,
//! checker masks and per-image result files.
//!
//! A manifest holds one image per line, tab-separated:
//!
//! ```text
//! # path        s_r   s_g   s_b   black  saturation  [region]
//! img/001.png   0.40  0.33  0.27  128    3692        10 10 50 50
//! ```
//!
//! The optional region is either an inclusive rectangle `x0 y0 x1 y1` or a
//! polygon given as three or more `x y` vertex pairs. A saturation of `inf`
//! disables clipping (float images). Paths are relative to the manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Rgb};

use crate::color::{Illuminant, UNIT_SUM_TOLERANCE};
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, BitDepth, LinearImage};

/// Ground truths further than this from unit sum are rejected.
pub const NORMALIZE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum ExclusionRegion {
    /// Inclusive pixel rectangle.
    Rect { x0: usize, y0: usize, x1: usize, y1: usize },
    /// Closed polygon in pixel coordinates; pixel centers inside are excluded.
    Polygon(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// The path as written in the manifest, used as the image id.
    pub id: String,
    pub image_path: PathBuf,
    pub ground_truth: Illuminant,
    pub black_level: f64,
    /// Raw code value at which the sensor clips, before black subtraction.
    pub saturation_level: f64,
    pub exclusion: Option<ExclusionRegion>,
    /// Non-fatal notes raised while parsing (e.g. a renormalized ground truth).
    pub warnings: Vec<String>,
}

impl ManifestEntry {
    /// Clipping level after black subtraction; `None` when unbounded.
    pub fn effective_saturation(&self) -> Option<f64> {
        if self.saturation_level.is_finite() {
            Some(self.saturation_level - self.black_level)
        } else {
            None
        }
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Accepts a ground truth that is unit-sum to 1e-9, renormalizes one within
/// 1e-3 (returning a warning) and rejects anything else.
pub fn checked_ground_truth(rgb: [f64; 3]) -> std::result::Result<(Illuminant, Option<String>), String> {
    let sum = rgb[0] + rgb[1] + rgb[2];
    if !sum.is_finite() {
        return Err("ground truth is not finite".into());
    }
    let off = (sum - 1.0).abs();
    if off <= UNIT_SUM_TOLERANCE {
        return Illuminant::new(rgb[0], rgb[1], rgb[2]).map(|s| (s, None)).map_err(|e| e.to_string());
    }
    if off <= NORMALIZE_TOLERANCE {
        let s = Illuminant::from_rgb(rgb).map_err(|e| e.to_string())?;
        return Ok((s, Some(format!("ground truth sums to {sum}; normalized"))));
    }
    Err(format!("ground truth sums to {sum}, not 1"))
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields: Vec<&str> = line.split('\t').map(str::trim).filter(|f| !f.is_empty()).collect();
        if fields.len() == 1 {
            fields = line.split_whitespace().collect();
        }
        if fields.len() < 6 {
            return Err(parse_err(path, line_no, format!("expected at least 6 fields, found {}", fields.len())));
        }
        let id = fields[0].to_string();
        let nums: Vec<f64> = fields[1..]
            .iter()
            .flat_map(|f| f.split_whitespace())
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(path, line_no, format!("'{f}' is not a number"))))
            .collect::<Result<_>>()?;
        if nums.len() < 5 {
            return Err(parse_err(path, line_no, "missing numeric fields"));
        }
        let (ground_truth, warning) =
            checked_ground_truth([nums[0], nums[1], nums[2]]).map_err(|m| parse_err(path, line_no, m))?;
        let black_level = nums[3];
        if !(black_level.is_finite() && black_level >= 0.0) {
            return Err(parse_err(path, line_no, format!("black level must be >= 0, got {black_level}")));
        }
        let saturation_level = nums[4];
        if !(saturation_level > black_level) {
            return Err(parse_err(path, line_no, "saturation level must exceed the black level"));
        }
        let region = &nums[5..];
        let exclusion = match region.len() {
            0 => None,
            4 => {
                let c: Vec<usize> = region
                    .iter()
                    .map(|&v| {
                        if v >= 0.0 && v.fract() == 0.0 {
                            Ok(v as usize)
                        } else {
                            Err(parse_err(path, line_no, format!("rectangle coordinate {v} is not a pixel index")))
                        }
                    })
                    .collect::<Result<_>>()?;
                if c[0] > c[2] || c[1] > c[3] {
                    return Err(parse_err(path, line_no, "rectangle corners are out of order"));
                }
                Some(ExclusionRegion::Rect {
                    x0: c[0],
                    y0: c[1],
                    x1: c[2],
                    y1: c[3],
                })
            }
            k if k >= 6 && k % 2 == 0 => Some(ExclusionRegion::Polygon(region.chunks(2).map(|p| (p[0], p[1])).collect())),
            k => return Err(parse_err(path, line_no, format!("region needs 4 or an even number >= 6 of values, got {k}"))),
        };
        out.push(ManifestEntry {
            image_path: base.join(&id),
            id,
            ground_truth,
            black_level,
            saturation_level,
            exclusion,
            warnings: warning.into_iter().collect(),
        });
    }
    Ok(out)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path)
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn decode_err(path: &Path, message: impl ToString) -> Error {
    Error::Decode {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Reads a raster as raw code values (no normalization, no black offset).
pub fn decode_image(path: &Path) -> Result<LinearImage> {
    if extension(path) == "pfm" {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        return read_pfm(&bytes).map_err(|m| decode_err(path, m));
    }
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => decode_err(path, other),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let buf = img.to_rgb8();
            let px = buf.pixels().map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect();
            LinearImage::new(w, h, px, BitDepth::Eight)
        }
        DynamicImage::ImageRgb32F(_) | DynamicImage::ImageRgba32F(_) => {
            let buf = img.to_rgb32f();
            let px = buf.pixels().map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect();
            LinearImage::new(w, h, px, BitDepth::Float)
        }
        _ => {
            let buf = img.to_rgb16();
            let px = buf.pixels().map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect();
            LinearImage::new(w, h, px, BitDepth::Sixteen)
        }
    }
}

/// Subtracts `black_level` from every value, clamping at zero.
pub fn subtract_black(image: &LinearImage, black_level: f64) -> Result<LinearImage> {
    if !(black_level.is_finite() && black_level >= 0.0) {
        return Err(Error::invalid(format!("black level must be >= 0, got {black_level}")));
    }
    if black_level == 0.0 {
        return Ok(image.clone());
    }
    image.map(|p| p.map(|v| (v - black_level).max(0.0)))
}

/// Decodes `path` and removes the entry's black offset.
pub fn load_image(path: &Path, entry: &ManifestEntry) -> Result<LinearImage> {
    let raw = decode_image(path)?;
    if let Some(region) = &entry.exclusion {
        check_region(region, raw.dims())?;
    }
    subtract_black(&raw, entry.black_level)
}

/// Writes `image` in the container implied by the extension. Integer
/// containers get rounded code values clamped to the image's bit depth
/// (16 bits for 12-bit images); float images are scaled so their maximum
/// maps to the top 16-bit code.
pub fn save_image(path: &Path, image: &LinearImage) -> Result<()> {
    let ext = extension(path);
    if ext == "pfm" {
        let bytes = write_pfm(image);
        return fs::write(path, bytes).map_err(|e| Error::io(path, e));
    }
    if !matches!(ext.as_str(), "png" | "tif" | "tiff" | "ppm" | "pnm") {
        return Err(Error::invalid(format!("unsupported output format '{ext}'")));
    }
    let (w, h) = (image.width() as u32, image.height() as u32);
    let dynamic = match image.bit_depth() {
        BitDepth::Eight => {
            let data = image.pixels().iter().flat_map(|p| p.map(|v| v.round().clamp(0.0, 255.0) as u8)).collect();
            DynamicImage::ImageRgb8(ImageBuffer::<Rgb<u8>, Vec<u8>>::from_raw(w, h, data).expect("buffer size"))
        }
        depth => {
            let scale = match depth {
                BitDepth::Float => {
                    let m = image.max_value();
                    if m > 0.0 {
                        65535.0 / m
                    } else {
                        1.0
                    }
                }
                _ => 1.0,
            };
            let data = image
                .pixels()
                .iter()
                .flat_map(|p| p.map(|v| (v * scale).round().clamp(0.0, 65535.0) as u16))
                .collect();
            DynamicImage::ImageRgb16(ImageBuffer::<Rgb<u16>, Vec<u16>>::from_raw(w, h, data).expect("buffer size"))
        }
    };
    dynamic.save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => decode_err(path, other),
    })
}

/// Parses a color PFM (`PF`) file. Rows are stored bottom-up; a negative
/// scale marks little-endian floats.
pub fn read_pfm(bytes: &[u8]) -> std::result::Result<LinearImage, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PFM header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "PF" {
        return Err(format!("unsupported PFM type '{magic}' (only color PF is read)"));
    }
    let w: usize = token()?.parse().map_err(|_| "bad PFM width")?;
    let h: usize = token()?.parse().map_err(|_| "bad PFM height")?;
    let scale: f64 = token()?.parse().map_err(|_| "bad PFM scale")?;
    // exactly one whitespace byte separates the header from the data
    let data = &bytes[pos + 1..];
    let need = w * h * 3 * 4;
    if data.len() < need {
        return Err(format!("PFM data holds {} bytes, expected {need}", data.len()));
    }
    let little = scale < 0.0;
    let mut px = vec![[0.0; 3]; w * h];
    for (i, chunk) in data[..need].chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) } as f64;
        let (pixel, ch) = (i / 3, i % 3);
        let (x, row) = (pixel % w, pixel / w);
        px[(h - 1 - row) * w + x][ch] = v;
    }
    LinearImage::new(w, h, px, BitDepth::Float).map_err(|e| e.to_string())
}

/// Serializes `image` as a little-endian color PFM.
pub fn write_pfm(image: &LinearImage) -> Vec<u8> {
    let (w, h) = image.dims();
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 12);
    for row in (0..h).rev() {
        for x in 0..w {
            for v in image.get(x, row) {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    out
}

/// Serializes a single-channel plane as a little-endian grayscale PFM (`Pf`).
/// Non-finite values are written as-is.
pub fn write_pfm_plane(width: usize, height: usize, plane: &[f64]) -> Result<Vec<u8>> {
    if plane.len() != width * height {
        return Err(Error::invalid(format!("plane holds {} values, expected {width}x{height}", plane.len())));
    }
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    for row in (0..height).rev() {
        for v in &plane[row * width..(row + 1) * width] {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

fn check_region(region: &ExclusionRegion, (w, h): (usize, usize)) -> Result<()> {
    match region {
        ExclusionRegion::Rect { x0, y0, x1, y1 } => {
            if x0 > x1 || y0 > y1 || *x1 >= w || *y1 >= h {
                return Err(Error::OutOfBounds(format!(
                    "rectangle ({x0},{y0})-({x1},{y1}) outside a {w}x{h} image"
                )));
            }
        }
        ExclusionRegion::Polygon(vs) => {
            if vs.len() < 3 {
                return Err(Error::invalid("polygon needs at least three vertices"));
            }
            if let Some((x, y)) = vs
                .iter()
                .find(|(x, y)| !(*x >= 0.0 && *y >= 0.0 && *x <= (w - 1) as f64 && *y <= (h - 1) as f64))
            {
                return Err(Error::OutOfBounds(format!("vertex ({x},{y}) outside a {w}x{h} image")));
            }
        }
    }
    Ok(())
}

/// Even-odd test of the point `(px, py)` against a closed polygon.
fn inside_polygon(vs: &[(f64, f64)], px: f64, py: f64) -> bool {
    let mut inside = false;
    let mut j = vs.len() - 1;
    for i in 0..vs.len() {
        let (xi, yi) = vs[i];
        let (xj, yj) = vs[j];
        if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Rasterizes a region (true = excluded) and grows it by `radius` pixels in
/// every direction.
pub fn rasterize_region(region: &ExclusionRegion, dims: (usize, usize), radius: usize) -> Result<BinaryMask> {
    check_region(region, dims)?;
    let (w, h) = dims;
    let mask = match region {
        ExclusionRegion::Rect { x0, y0, x1, y1 } => {
            BinaryMask::from_fn(w, h, |x, y| (*x0..=*x1).contains(&x) && (*y0..=*y1).contains(&y))
        }
        ExclusionRegion::Polygon(vs) => BinaryMask::from_fn(w, h, |x, y| inside_polygon(vs, x as f64, y as f64)),
    };
    Ok(mask.dilate_square(radius))
}

/// The entry's checker mask dilated by `radius`; all-false without a region.
pub fn build_exclusion_mask(entry: &ManifestEntry, dims: (usize, usize), radius: usize) -> Result<BinaryMask> {
    match &entry.exclusion {
        None => Ok(BinaryMask::new(dims.0, dims.1, false)),
        Some(r) => rasterize_region(r, dims, radius),
    }
}

/// Von Kries correction: channel k is divided by `3 * s_k`, so light of
/// color `estimate` becomes neutral.
pub fn white_balance(image: &LinearImage, estimate: &Illuminant) -> Result<LinearImage> {
    let s = estimate.rgb();
    if s.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("white balance needs positive estimate components"));
    }
    let gain = s.map(|v| 1.0 / (3.0 * v));
    image.map(|p| [p[0] * gain[0], p[1] * gain[1], p[2] * gain[2]])
}

/// One line of a per-image results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub image_id: String,
    pub method: String,
    /// `None` when the method failed on this image.
    pub error_degrees: Option<f64>,
    pub flags: String,
}

pub const RESULTS_HEADER: &str = "image_id,method,error_degrees,flags";

/// Quotes a CSV field when it holds a comma, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Splits one CSV record, honoring double-quoted fields.
pub(crate) fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

pub fn format_results_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in rows {
        let err = r.error_degrees.map(|e| e.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{},{}\n", csv_field(&r.image_id), csv_field(&r.method), err, csv_field(&r.flags)));
    }
    s
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(format_results_csv(rows).as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (n == 0 && line.starts_with("image_id")) {
            continue;
        }
        let f = split_csv_line(line);
        if f.len() != 4 {
            return Err(parse_err(path, n + 1, format!("expected 4 fields, found {}", f.len())));
        }
        let error_degrees = if f[2].is_empty() {
            None
        } else {
            Some(f[2].parse().map_err(|_| parse_err(path, n + 1, format!("'{}' is not a number", f[2])))?)
        };
        rows.push(ResultRow {
            image_id: f[0].clone(),
            method: f[1].clone(),
            error_degrees,
            flags: f[3].clone(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(text: &str) -> Result<Vec<ManifestEntry>> {
        parse_manifest(text, Path::new("/data/set/manifest.tsv"))
    }

    #[test]
    fn empty_manifest() {
        assert!(manifest("").unwrap().is_empty());
        assert!(manifest("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn manifest_fields() {
        let e = manifest("a/img.png\t0.4\t0.3\t0.3\t128\t3692\t10 10 50 50\n").unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].image_path, PathBuf::from("/data/set/a/img.png"));
        assert_eq!(e[0].ground_truth.rgb(), [0.4, 0.3, 0.3]);
        assert!(e[0].warnings.is_empty());
        assert_eq!(e[0].effective_saturation(), Some(3692.0 - 128.0));
        assert_eq!(
            e[0].exclusion,
            Some(ExclusionRegion::Rect { x0: 10, y0: 10, x1: 50, y1: 50 })
        );
        let p = manifest("h.pfm 0.3 0.3 0.4 0 inf 1 1 5 1 3 4").unwrap();
        assert_eq!(p[0].effective_saturation(), None);
        assert!(matches!(&p[0].exclusion, Some(ExclusionRegion::Polygon(v)) if v.len() == 3));
    }

    #[test]
    fn ground_truth_tolerance() {
        let e = manifest("x.png\t0.4\t0.3005\t0.3\t0\t255").unwrap();
        assert_eq!(e[0].warnings.len(), 1);
        let s = e[0].ground_truth.rgb();
        assert!((s[0] + s[1] + s[2] - 1.0).abs() < 1e-12);
        match manifest("ok.png\t0.4\t0.3\t0.3\t0\t255\nx.png\t0.4\t0.32\t0.3\t0\t255") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_lines() {
        assert!(manifest("x.png\t0.4\t0.3").is_err());
        assert!(manifest("x.png\t0.4\t0.3\t0.3\t0\t255\t1 2 3").is_err());
        assert!(manifest("x.png\t0.4\t0.3\t0.3\t-1\t255").is_err());
        assert!(manifest("x.png\tq\t0.3\t0.3\t0\t255").is_err());
    }

    #[test]
    fn rectangle_dilation() {
        let r = ExclusionRegion::Rect { x0: 10, y0: 10, x1: 50, y1: 50 };
        let m = rasterize_region(&r, (80, 70), 7).unwrap();
        for y in 0..70 {
            for x in 0..80 {
                let expect = (3..=57).contains(&x) && (3..=57).contains(&y);
                assert_eq!(m.get(x, y), expect, "({x},{y})");
            }
        }
        let out = ExclusionRegion::Rect { x0: 10, y0: 10, x1: 80, y1: 50 };
        assert!(matches!(rasterize_region(&out, (80, 70), 0), Err(Error::OutOfBounds(_))));
    }

    #[test]
    fn polygon_raster() {
        let tri = ExclusionRegion::Polygon(vec![(0.0, 0.0), (8.0, 0.0), (0.0, 8.0)]);
        let m = rasterize_region(&tri, (10, 10), 0).unwrap();
        assert!(m.get(1, 1));
        assert!(m.get(3, 3));
        assert!(!m.get(5, 5));
        assert!(!m.get(9, 9));
    }

    #[test]
    fn black_level() {
        let img = LinearImage::new(2, 1, vec![[100.0, 128.0, 300.0], [0.0, 129.0, 4000.0]], BitDepth::Sixteen).unwrap();
        let out = subtract_black(&img, 128.0).unwrap();
        assert_eq!(out.pixels(), &[[0.0, 0.0, 172.0], [0.0, 1.0, 3872.0]]);
        assert_eq!(subtract_black(&img, 0.0).unwrap(), img);
    }

    #[test]
    fn pfm_round_trip() {
        let img = LinearImage::from_fn(5, 3, |x, y| [x as f64 * 0.5, y as f64 + 0.25, 1.5]).unwrap();
        let back = read_pfm(&write_pfm(&img)).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn grayscale_pfm_layout() {
        let bytes = write_pfm_plane(2, 2, &[1.0, 2.0, 3.0, f64::INFINITY]).unwrap();
        let header = b"Pf\n2 2\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        let data = &bytes[header.len()..];
        // bottom row first
        assert_eq!(f32::from_le_bytes(data[0..4].try_into().unwrap()), 3.0);
        assert_eq!(f32::from_le_bytes(data[4..8].try_into().unwrap()), f32::INFINITY);
        assert!(write_pfm_plane(3, 2, &[0.0; 4]).is_err());
    }

    #[test]
    fn white_balance_rules() {
        let img = LinearImage::filled(3, 3, [0.4, 0.35, 0.25]).unwrap();
        let same = white_balance(&img, &Illuminant::neutral()).unwrap();
        for (a, b) in same.pixels().iter().zip(img.pixels()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-15);
            }
        }
        let s = Illuminant::new(0.4, 0.35, 0.25).unwrap();
        let gray = white_balance(&img, &s).unwrap();
        for p in gray.pixels() {
            assert!((p[0] - p[1]).abs() < 1e-15 && (p[1] - p[2]).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_quoting() {
        let rows = vec![ResultRow {
            image_id: "a,\"b\"".into(),
            method: "dcs".into(),
            error_degrees: Some(1.25),
            flags: String::new(),
        }];
        let text = format_results_csv(&rows);
        let line = text.lines().nth(1).unwrap();
        let f = split_csv_line(line);
        assert_eq!(f, vec!["a,\"b\"", "dcs", "1.25", ""]);
    }
}
