//! Synthetic dichromatic scenes.
//!
//! A sphere seen by an orthographic camera is shaded with a Lambertian body
//! term and a Torrance–Sparrow interface term. Every pixel obeys
//! `I(x) = m_d(x) D(x) + m_s(x) S`, and the two magnitudes are kept as
//! separate fields so the effect of a differential operator on each can be
//! measured directly.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::color::{chromaticities, Illuminant};
use crate::error::{Error, Result};
use crate::eval::angular_error;
use crate::filters::{respond_at, FootprintGuard, Kernel};
use crate::raster::{BinaryMask, BitDepth, LinearImage};

const UNIT_TOLERANCE: f64 = 1e-9;

/// Diffuse magnitude `k_d L max(cos psi, 0)`.
pub fn lambert_magnitude(k_d: f64, light_intensity: f64, psi: f64) -> Result<f64> {
    if !(k_d.is_finite() && k_d >= 0.0) {
        return Err(Error::invalid(format!("diffuse albedo must be >= 0, got {k_d}")));
    }
    if !(light_intensity.is_finite() && light_intensity > 0.0) {
        return Err(Error::invalid(format!("light intensity must be > 0, got {light_intensity}")));
    }
    if !(0.0..=PI).contains(&psi) {
        return Err(Error::invalid(format!("incidence angle {psi} outside [0, pi]")));
    }
    Ok(k_d * light_intensity * psi.cos().max(0.0))
}

/// Specular magnitude `(F G / cos theta) exp(-alpha^2 / 2 phi^2)`.
///
/// `theta` is the normal/view angle, `alpha` the normal/half-vector angle
/// and `phi` the surface roughness.
pub fn torrance_sparrow_magnitude(fresnel: f64, geometric: f64, theta: f64, alpha: f64, roughness: f64) -> Result<f64> {
    if !(roughness.is_finite() && roughness > 0.0) {
        return Err(Error::invalid(format!("roughness must be > 0, got {roughness}")));
    }
    if !(fresnel >= 0.0 && geometric >= 0.0) {
        return Err(Error::invalid("Fresnel and attenuation factors must be >= 0"));
    }
    if !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!("view angle {theta} must lie in [0, pi/2)")));
    }
    if !alpha.is_finite() {
        return Err(Error::invalid("half-vector angle must be finite"));
    }
    Ok(fresnel * geometric / theta.cos() * (-alpha * alpha / (2.0 * roughness * roughness)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    /// Center in pixel coordinates (x right, y down).
    pub center: [f64; 2],
    pub radius: f64,
}

/// Four object colors assigned by quadrant around `split`, in the order
/// top-left, top-right, bottom-left, bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantAlbedo {
    pub split: [f64; 2],
    pub colors: [[f64; 3]; 4],
}

impl QuadrantAlbedo {
    pub fn color_at(&self, x: f64, y: f64) -> [f64; 3] {
        let right = x >= self.split[0];
        let bottom = y >= self.split[1];
        self.colors[(bottom as usize) * 2 + right as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub sphere: Sphere,
    /// Unit-sum object color `D`.
    pub object_color: [f64; 3],
    /// Overrides `object_color` per quadrant when present.
    #[serde(default)]
    pub patches: Option<QuadrantAlbedo>,
    /// Unit-sum illuminant color `S`.
    pub illuminant: [f64; 3],
    pub diffuse_albedo: f64,
    pub light_intensity: f64,
    pub roughness: f64,
    #[serde(default = "one")]
    pub fresnel: f64,
    #[serde(default = "one")]
    pub geometric: f64,
    pub light_direction: [f64; 3],
    pub view_direction: [f64; 3],
}

fn one() -> f64 {
    1.0
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = dot(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn check_unit_sum(name: &str, c: [f64; 3]) -> Result<()> {
    if c.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || ((c[0] + c[1] + c[2]) - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::invalid(format!("{name} must be non-negative and sum to 1, got {c:?}")));
    }
    Ok(())
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self::glossy_sphere()
    }
}

impl SceneConfig {
    /// Uniformly colored glossy sphere, lit and viewed head-on. Under `f_1`
    /// its magnitude-derivative ratios stay below 10 while `f_2` pushes
    /// them past 500.
    pub fn glossy_sphere() -> Self {
        Self {
            width: 256,
            height: 256,
            sphere: Sphere {
                center: [127.5, 127.5],
                radius: 100.0,
            },
            object_color: [0.3, 0.4, 0.3],
            patches: None,
            illuminant: [0.4, 0.35, 0.25],
            diffuse_albedo: 1.0,
            light_intensity: 1.0,
            roughness: 0.2,
            fresnel: 0.3,
            geometric: 1.0,
            light_direction: [0.0, 0.0, 1.0],
            view_direction: [0.0, 0.0, 1.0],
        }
    }

    /// The glossy sphere with a stronger, tighter lobe (`F = 1`, `phi = 0.1`):
    /// the highlight dominates the diffuse term over most of the bright region.
    pub fn strong_lobe_sphere() -> Self {
        let mut c = Self::glossy_sphere();
        c.fresnel = 1.0;
        c.roughness = 0.1;
        c
    }

    /// Same geometry with `D = S`: every pixel is a multiple of the illuminant.
    pub fn achromatic_sphere() -> Self {
        let mut c = Self::glossy_sphere();
        c.object_color = c.illuminant;
        c
    }

    /// Glossy sphere with four distinct object colors and an oblique light,
    /// so the highlight sits inside one patch.
    pub fn four_patch_sphere() -> Self {
        let mut c = Self::glossy_sphere();
        c.patches = Some(QuadrantAlbedo {
            split: c.sphere.center,
            colors: [[0.55, 0.3, 0.15], [0.2, 0.5, 0.3], [0.25, 0.3, 0.45], [0.3, 0.4, 0.3]],
        });
        c.light_direction = normalize([0.7, 0.7, 1.0]);
        c.fresnel = 1.0;
        c.roughness = 0.1;
        c
    }

    pub const PRESETS: [&'static str; 4] = ["glossy", "strong-lobe", "achromatic", "four-patch"];

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "glossy" => Ok(Self::glossy_sphere()),
            "strong-lobe" => Ok(Self::strong_lobe_sphere()),
            "achromatic" => Ok(Self::achromatic_sphere()),
            "four-patch" => Ok(Self::four_patch_sphere()),
            _ => Err(Error::invalid(format!(
                "unknown scene preset '{name}' (expected one of {})",
                Self::PRESETS.join(", ")
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_sum("object color", self.object_color)?;
        if let Some(p) = &self.patches {
            for c in &p.colors {
                check_unit_sum("patch color", *c)?;
            }
        }
        Illuminant::new(self.illuminant[0], self.illuminant[1], self.illuminant[2])?;
        if !(self.sphere.radius.is_finite() && self.sphere.radius > 0.0) {
            return Err(Error::invalid("sphere radius must be > 0"));
        }
        for (name, d) in [("light direction", self.light_direction), ("view direction", self.view_direction)] {
            if (dot(d, d).sqrt() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::invalid(format!("{name} must have unit norm, got {d:?}")));
            }
        }
        let h = [
            self.light_direction[0] + self.view_direction[0],
            self.light_direction[1] + self.view_direction[1],
            self.light_direction[2] + self.view_direction[2],
        ];
        if dot(h, h) < 1e-12 {
            return Err(Error::invalid("light and view directions are opposite"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image dimensions must be non-zero"));
        }
        let [cx, cy] = self.sphere.center;
        let r = self.sphere.radius;
        if cx - r < 0.0 || cy - r < 0.0 || cx + r > (self.width - 1) as f64 || cy + r > (self.height - 1) as f64 {
            return Err(Error::invalid(format!(
                "sphere at ({cx}, {cy}) with radius {r} leaves the {}x{} frame",
                self.width, self.height
            )));
        }
        lambert_magnitude(self.diffuse_albedo, self.light_intensity, 0.0)?;
        torrance_sparrow_magnitude(self.fresnel, self.geometric, 0.0, 0.0, self.roughness)?;
        Ok(())
    }

    pub fn object_color_at(&self, x: f64, y: f64) -> [f64; 3] {
        match &self.patches {
            Some(p) => p.color_at(x, y),
            None => self.object_color,
        }
    }
}

/// A rendered scene with its separated reflection components.
#[derive(Debug, Clone)]
pub struct DichromaticRender {
    pub config: SceneConfig,
    pub composite: LinearImage,
    pub diffuse_component: LinearImage,
    pub specular_component: LinearImage,
    pub m_d_field: Vec<f64>,
    pub m_s_field: Vec<f64>,
    /// Object color `D(x)` at every pixel (background included).
    pub object_color_field: Vec<[f64; 3]>,
}

impl DichromaticRender {
    pub fn width(&self) -> usize {
        self.config.width
    }

    pub fn height(&self) -> usize {
        self.config.height
    }

    pub fn illuminant(&self) -> [f64; 3] {
        self.config.illuminant
    }

    /// Pixels covered by the sphere.
    pub fn object_mask(&self) -> BinaryMask {
        let (w, h) = (self.width(), self.height());
        BinaryMask::from_vec(
            w,
            h,
            self.m_d_field
                .iter()
                .zip(&self.m_s_field)
                .map(|(d, s)| *d > 0.0 || *s > 0.0)
                .collect(),
        )
        .expect("field size matches frame")
    }
}

/// Cosine below which a surface point is treated as lying on the silhouette.
const SILHOUETTE_COS: f64 = 1e-6;

pub fn render(config: &SceneConfig) -> Result<DichromaticRender> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let v = config.view_direction;
    let l = config.light_direction;
    let half = normalize([l[0] + v[0], l[1] + v[1], l[2] + v[2]]);
    // image-plane axes of the orthographic camera
    let up = if v[1].abs() < 0.9 { [0.0, 1.0, 0.0] } else { [1.0, 0.0, 0.0] };
    let u1 = normalize(cross(up, v));
    let u2 = cross(v, u1);
    let [cx, cy] = config.sphere.center;
    let radius = config.sphere.radius;
    let s = config.illuminant;

    let n_px = w * h;
    let mut m_d = vec![0.0; n_px];
    let mut m_s = vec![0.0; n_px];
    let mut d_field = Vec::with_capacity(n_px);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            d_field.push(config.object_color_at(fx, fy));
            let a = (fx - cx) / radius;
            let b = (fy - cy) / radius;
            let rho2 = a * a + b * b;
            if rho2 >= 1.0 {
                continue;
            }
            let c = (1.0 - rho2).sqrt();
            if c < SILHOUETTE_COS {
                continue;
            }
            let n = [
                a * u1[0] + b * u2[0] + c * v[0],
                a * u1[1] + b * u2[1] + c * v[1],
                a * u1[2] + b * u2[2] + c * v[2],
            ];
            let psi = dot(n, l).clamp(-1.0, 1.0).acos();
            let theta = c.min(1.0).acos();
            let alpha = dot(n, half).clamp(-1.0, 1.0).acos();
            let i = y * w + x;
            m_d[i] = lambert_magnitude(config.diffuse_albedo, config.light_intensity, psi)?;
            m_s[i] = torrance_sparrow_magnitude(config.fresnel, config.geometric, theta, alpha, config.roughness)?;
        }
    }

    let diffuse: Vec<[f64; 3]> = m_d
        .iter()
        .zip(&d_field)
        .map(|(m, d)| [m * d[0], m * d[1], m * d[2]])
        .collect();
    let specular: Vec<[f64; 3]> = m_s.iter().map(|m| [m * s[0], m * s[1], m * s[2]]).collect();
    let composite: Vec<[f64; 3]> = diffuse
        .iter()
        .zip(&specular)
        .map(|(d, s)| [d[0] + s[0], d[1] + s[1], d[2] + s[2]])
        .collect();

    Ok(DichromaticRender {
        config: config.clone(),
        composite: LinearImage::new(w, h, composite, BitDepth::Float)?,
        diffuse_component: LinearImage::new(w, h, diffuse, BitDepth::Float)?,
        specular_component: LinearImage::new(w, h, specular, BitDepth::Float)?,
        m_d_field: m_d,
        m_s_field: m_s,
        object_color_field: d_field,
    })
}

/// Magnitude-derivative ratio at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// The diffuse derivative vanishes (or carries the illuminant's color)
    /// while the total derivative does not.
    Infinite,
    /// No derivative at all, or the kernel footprint leaves the frame.
    Undefined,
}

impl Ratio {
    pub fn finite(self) -> Option<f64> {
        match self {
            Ratio::Finite(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RatioMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<Ratio>,
}

impl RatioMap {
    pub fn get(&self, x: usize, y: usize) -> Ratio {
        self.values[y * self.width + x]
    }

    pub fn finite_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|r| r.finite())
    }

    pub fn max_finite(&self) -> Option<f64> {
        self.finite_values().fold(None, |m, r| Some(m.map_or(r, |m: f64| m.max(r))))
    }

    /// Single-channel raster: finite ratios as-is, `+inf` and `NaN` for the
    /// two sentinels.
    pub fn to_plane(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|r| match r {
                Ratio::Finite(v) => *v,
                Ratio::Infinite => f64::INFINITY,
                Ratio::Undefined => f64::NAN,
            })
            .collect()
    }
}

fn l1(v: [f64; 3]) -> f64 {
    v[0].abs() + v[1].abs() + v[2].abs()
}

fn same_color(a: [f64; 3], b: [f64; 3]) -> bool {
    a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// Per-pixel `|dm_s| / |dm_d|` after filtering each reflection component
/// with `kernel`.
///
/// Magnitude derivatives are the L1 norms of the filtered component vectors;
/// since `D` and `S` sum to one this is exactly `|f * m_d|` and `|f * m_s|`
/// over a uniformly colored footprint, and it also accounts for the color
/// change across patch boundaries.
pub fn ratio_map(render: &DichromaticRender, kernel: &Kernel) -> Result<RatioMap> {
    let (w, h) = (render.width(), render.height());
    if kernel.width() > w || kernel.height() > h {
        return Err(Error::invalid("kernel does not fit the render"));
    }
    let s = render.illuminant();
    let chromatic = BinaryMask::from_vec(
        w,
        h,
        render.object_color_field.iter().map(|d| !same_color(*d, s)).collect(),
    )?;
    let frame = FootprintGuard::new(w, h, kernel, None)?;
    let achromatic = FootprintGuard::new(w, h, kernel, Some(&chromatic))?;
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            if !frame.is_valid(x, y) {
                values.push(Ratio::Undefined);
                continue;
            }
            let ds = l1(respond_at(&render.specular_component, kernel, x, y));
            let dd = l1(respond_at(&render.diffuse_component, kernel, x, y));
            let ratio = if achromatic.is_valid(x, y) || dd == 0.0 {
                if ds == 0.0 && dd == 0.0 {
                    Ratio::Undefined
                } else {
                    Ratio::Infinite
                }
            } else {
                Ratio::Finite(ds / dd)
            };
            values.push(ratio);
        }
    }
    Ok(RatioMap {
        width: w,
        height: h,
        values,
    })
}

/// One derivative color of the composite, taken on its own as an
/// illuminant estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub x: usize,
    pub y: usize,
    pub ratio: f64,
    /// Angle between the derivative color's chromaticity and `S`, degrees.
    pub error_degrees: f64,
}

/// Angular error of every derivative color of the filtered composite
/// against the true illuminant, paired with its finite ratio.
pub fn error_vs_ratio(render: &DichromaticRender, kernel: &Kernel) -> Result<Vec<RatioSample>> {
    let map = ratio_map(render, kernel)?;
    let s = render.illuminant();
    let mut out = Vec::new();
    for y in 0..render.height() {
        for x in 0..render.width() {
            let Ratio::Finite(ratio) = map.get(x, y) else {
                continue;
            };
            let j = respond_at(&render.composite, kernel, x, y);
            if let Some(c) = chromaticities(j) {
                out.push(RatioSample {
                    x,
                    y,
                    ratio,
                    error_degrees: angular_error(c, s)?,
                });
            }
        }
    }
    Ok(out)
}

/// Ratio bin edges used for the error-vs-ratio table.
pub const DEFAULT_RATIO_EDGES: [f64; 9] = [0.0, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, f64::INFINITY];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_error: f64,
    pub max_error: f64,
}

/// Groups samples into `[edges[i], edges[i + 1])`; empty bins are dropped.
pub fn bin_by_ratio(samples: &[RatioSample], edges: &[f64]) -> Vec<RatioBin> {
    edges
        .windows(2)
        .filter_map(|e| {
            let errs: Vec<f64> = samples
                .iter()
                .filter(|s| s.ratio >= e[0] && s.ratio < e[1])
                .map(|s| s.error_degrees)
                .collect();
            (!errs.is_empty()).then(|| RatioBin {
                lower: e[0],
                upper: e[1],
                count: errs.len(),
                mean_error: errs.iter().sum::<f64>() / errs.len() as f64,
                max_error: errs.iter().copied().fold(0.0, f64::max),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{cross_f2, laplacian_f1};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn lambert_examples() {
        assert!(close(lambert_magnitude(1.0, 1.0, 0.0).unwrap(), 1.0));
        assert!(close(lambert_magnitude(0.5, 2.0, PI / 3.0).unwrap(), 0.5));
        assert_eq!(lambert_magnitude(1.0, 1.0, 2.0 * PI / 3.0).unwrap(), 0.0);
        assert!(lambert_magnitude(-0.1, 1.0, 0.0).is_err());
        assert!(lambert_magnitude(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn torrance_sparrow_examples() {
        assert_eq!(torrance_sparrow_magnitude(1.0, 1.0, 0.0, 0.0, 0.1).unwrap(), 1.0);
        assert!(close(torrance_sparrow_magnitude(1.0, 1.0, 0.0, 0.1, 0.1).unwrap(), (-0.5f64).exp()));
        assert_eq!(torrance_sparrow_magnitude(0.0, 1.0, 0.3, 0.0, 0.2).unwrap(), 0.0);
        assert!(matches!(
            torrance_sparrow_magnitude(1.0, 1.0, FRAC_PI_2, 0.0, 0.1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            torrance_sparrow_magnitude(1.0, 1.0, 0.0, 0.0, 0.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn render_rejects_bad_geometry() {
        let mut c = SceneConfig::glossy_sphere();
        c.sphere.radius = 200.0;
        assert!(render(&c).is_err());
        let mut c = SceneConfig::glossy_sphere();
        c.light_direction = [0.0, 0.0, 2.0];
        assert!(render(&c).is_err());
        let mut c = SceneConfig::glossy_sphere();
        c.object_color = [0.5, 0.5, 0.5];
        assert!(render(&c).is_err());
    }

    #[test]
    fn zero_fresnel_composite_is_diffuse() {
        let mut c = SceneConfig::glossy_sphere();
        c.fresnel = 0.0;
        let r = render(&c).unwrap();
        assert_eq!(r.composite, r.diffuse_component);
    }

    #[test]
    fn background_is_black_and_lobe_is_central() {
        let r = render(&SceneConfig::glossy_sphere()).unwrap();
        assert_eq!(r.composite.get(0, 0), [0.0; 3]);
        let (imax, _) = r
            .m_s_field
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let (x, y) = (imax % 256, imax / 256);
        assert!((x as i64 - 127).abs() <= 1 && (y as i64 - 127).abs() <= 1);
    }

    #[test]
    fn four_patch_partition_is_piecewise_constant() {
        let c = SceneConfig::four_patch_sphere();
        let r = render(&c).unwrap();
        let p = c.patches.unwrap();
        assert_eq!(r.object_color_field[10 * 256 + 10], p.colors[0]);
        assert_eq!(r.object_color_field[10 * 256 + 250], p.colors[1]);
        assert_eq!(r.object_color_field[250 * 256 + 10], p.colors[2]);
        assert_eq!(r.object_color_field[250 * 256 + 250], p.colors[3]);
    }

    #[test]
    fn achromatic_ratios_are_infinite() {
        let r = render(&SceneConfig::achromatic_sphere()).unwrap();
        let map = ratio_map(&r, &laplacian_f1()).unwrap();
        assert_eq!(map.finite_values().count(), 0);
        assert_eq!(map.get(128, 128), Ratio::Infinite);
        assert_eq!(map.get(2, 2), Ratio::Undefined);
    }

    #[test]
    fn border_pixels_are_undefined() {
        let r = render(&SceneConfig::glossy_sphere()).unwrap();
        let map = ratio_map(&r, &cross_f2()).unwrap();
        assert_eq!(map.get(2, 128), Ratio::Undefined);
        assert!(matches!(map.get(128, 128), Ratio::Finite(_)));
    }

    #[test]
    fn binning_drops_empty_bins() {
        let s = |ratio, e| RatioSample {
            x: 0,
            y: 0,
            ratio,
            error_degrees: e,
        };
        let bins = bin_by_ratio(&[s(0.5, 4.0), s(0.7, 2.0), s(50.0, 0.1)], &DEFAULT_RATIO_EDGES);
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[0].mean_error, 3.0);
        assert_eq!(bins[1].lower, 30.0);
    }
}
