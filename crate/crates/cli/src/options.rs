use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use dcs_core::baselines::{MinkowskiParams, MinkowskiPreset};
use dcs_core::dataset::{rasterize_region, ExclusionRegion};
use dcs_core::dcs::{self, DcsEstimate};
use dcs_core::filters::gaussian_half_width;
use dcs_core::{DcsParams, Illuminant, LinearImage};

/// Flags shared by `estimate` and `benchmark`, one per estimator parameter.
#[derive(Debug, Clone, Args)]
pub struct DcsFlags {
    /// TOML file with any of: tau, eta, sigmas, bandwidth, saturation_level.
    /// Flags given on the command line take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Percent of usable pixels initially marked bright.
    #[arg(long)]
    pub tau: Option<f64>,

    /// Percent of the frame kept after erosion. `benchmark` also accepts a
    /// sweep `A:B` or `A:B:STEP`.
    #[arg(long, value_name = "ETA")]
    pub eta: Option<String>,

    /// Gaussian scales, comma separated.
    #[arg(long = "sigma", value_delimiter = ',', value_name = "S1,S2,..")]
    pub sigmas: Vec<f64>,

    /// Kernel bandwidth of the rg density estimate.
    #[arg(long)]
    pub bandwidth: Option<f64>,

    /// Channel value treated as clipped, after black subtraction.
    #[arg(long, value_name = "LEVEL")]
    pub saturation_level: Option<f64>,
}

impl DcsFlags {
    /// Resolved parameters plus the list of η values requested.
    pub fn resolve(&self) -> Result<(DcsParams, Vec<f64>)> {
        let mut params = match &self.config {
            Some(path) => load_config(path)?,
            None => DcsParams::default(),
        };
        if let Some(t) = self.tau {
            params.tau = t;
        }
        if !self.sigmas.is_empty() {
            params.sigmas = self.sigmas.clone();
        }
        if let Some(b) = self.bandwidth {
            params.bandwidth = b;
        }
        if let Some(s) = self.saturation_level {
            params.saturation_level = Some(s);
        }
        let etas = match &self.eta {
            Some(spec) => parse_eta(spec)?,
            None => vec![params.eta],
        };
        params.eta = etas[0];
        for &eta in &etas {
            DcsParams { eta, ..params.clone() }.validate()?;
        }
        Ok((params, etas))
    }
}

pub fn load_config(path: &Path) -> Result<DcsParams> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let params: DcsParams = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok(params)
}

/// `2`, `1:4` (unit steps) or `1:4:0.5`.
pub fn parse_eta(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad eta value '{p}'")))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = match parts[..] {
        [v] => return Ok(vec![v]),
        [lo, hi] => (lo, hi, 1.0),
        [lo, hi, step] => (lo, hi, step),
        _ => bail!("eta sweep must look like A:B or A:B:STEP"),
    };
    if !(step > 0.0) || !(hi >= lo) {
        bail!("eta sweep {spec} is empty");
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// An estimator as named on the command line: `dcs`, `dcs:eta=4`, `gw`,
/// `ge1:p=6:sigma=2`, ...
#[derive(Debug, Clone)]
pub enum Method {
    Dcs { label: String, params: DcsParams },
    Minkowski { label: String, preset: MinkowskiPreset, params: MinkowskiParams },
}

pub struct Outcome {
    pub illuminant: Illuminant,
    pub flags: String,
    pub dcs: Option<DcsEstimate>,
}

fn parse_number(key: &str, value: &str) -> Result<f64> {
    if matches!(value, "inf" | "Inf" | "INF") {
        return Ok(f64::INFINITY);
    }
    value.parse::<f64>().with_context(|| format!("bad value for {key}: '{value}'"))
}

fn fmt_param(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

impl Method {
    /// Parses a method spec. `base` supplies the DCs parameters that the spec
    /// does not override.
    pub fn parse(spec: &str, base: &DcsParams) -> Result<Self> {
        let mut parts = spec.split(':');
        let name = parts.next().unwrap_or("").trim();
        let mut overrides = Vec::new();
        for kv in parts {
            let (k, v) = kv.split_once('=').with_context(|| format!("expected key=value in '{spec}'"))?;
            overrides.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        if name.eq_ignore_ascii_case("dcs") {
            let mut params = base.clone();
            for (k, v) in &overrides {
                let x = parse_number(k, v)?;
                match k.as_str() {
                    "tau" => params.tau = x,
                    "eta" => params.eta = x,
                    "bandwidth" | "h" => params.bandwidth = x,
                    "sigma" => params.sigmas = vec![x],
                    _ => bail!("dcs has no parameter '{k}'"),
                }
            }
            params.validate()?;
            let label = if overrides.is_empty() {
                "dcs".to_string()
            } else {
                let inner: Vec<String> = overrides.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("dcs({})", inner.join(","))
            };
            return Ok(Method::Dcs { label, params });
        }
        let preset: MinkowskiPreset = name.parse()?;
        let (mut norm, mut sigma) = (None, None);
        for (k, v) in &overrides {
            let x = parse_number(k, v)?;
            match k.as_str() {
                "p" | "norm" => norm = Some(x),
                "sigma" => sigma = Some(x),
                _ => bail!("{name} has no parameter '{k}'"),
            }
        }
        let params = preset.params(norm, sigma)?;
        let label = if overrides.is_empty() {
            preset.name().to_string()
        } else {
            minkowski_label(preset, &params)
        };
        Ok(Method::Minkowski { label, preset, params })
    }

    pub fn label(&self) -> &str {
        match self {
            Method::Dcs { label, .. } | Method::Minkowski { label, .. } => label,
        }
    }

    /// Runs the estimator. `saturation` is the clipping level of `image` as
    /// loaded; `region` is the undilated exclusion area.
    pub fn run(&self, image: &LinearImage, saturation: Option<f64>, region: Option<&ExclusionRegion>) -> Result<Outcome> {
        match self {
            Method::Dcs { params, .. } => {
                let mut params = params.clone();
                params.saturation_level = params.saturation_level.or(saturation);
                let radius = params.sigmas.iter().map(|&s| gaussian_half_width(s)).max().unwrap_or(0);
                let mask = region.map(|r| rasterize_region(r, image.dims(), radius)).transpose()?;
                let est = dcs::estimate(image, &params, mask.as_ref())?;
                Ok(Outcome {
                    illuminant: est.illuminant,
                    flags: est.flags(),
                    dcs: Some(est),
                })
            }
            Method::Minkowski { params, .. } => {
                let mut params = params.clone();
                params.saturation_level = params.saturation_level.or(saturation);
                // the baseline grows the mask by its own filter support
                let mask = region.map(|r| rasterize_region(r, image.dims(), 0)).transpose()?;
                let illuminant = dcs_core::baselines::minkowski_estimate(image, &params, mask.as_ref())?;
                Ok(Outcome {
                    illuminant,
                    flags: String::new(),
                    dcs: None,
                })
            }
        }
    }
}

pub fn minkowski_label(preset: MinkowskiPreset, params: &MinkowskiParams) -> String {
    match preset {
        MinkowskiPreset::GrayWorld | MinkowskiPreset::WhitePatch => preset.name().to_string(),
        MinkowskiPreset::ShadesOfGray => format!("sog(p={})", fmt_param(params.norm)),
        _ => format!("{}(p={},sigma={})", preset.name(), fmt_param(params.norm), fmt_param(params.sigma)),
    }
}

/// Splits a comma-separated method list. Parameters use the
/// `ge1:p=6:sigma=2` form; report labels such as `ge1(p=6,sigma=2)` are not
/// accepted as input.
pub fn parse_methods(list: &str, base: &DcsParams) -> Result<Vec<Method>> {
    let methods: Vec<Method> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Method::parse(s, base))
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        bail!("no methods given");
    }
    Ok(methods)
}

/// Builds the rayon pool used for per-image work.
pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

/// Parses `x0,y0,x1,y1` (inclusive pixel rectangle).
pub fn parse_rect(s: &str) -> Result<ExclusionRegion> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad rectangle coordinate '{p}'")))
        .collect::<Result<_>>()?;
    let [x0, y0, x1, y1] = v[..] else {
        bail!("rectangle needs four values x0,y0,x1,y1");
    };
    if x0 > x1 || y0 > y1 {
        bail!("rectangle corners are out of order");
    }
    Ok(ExclusionRegion::Rect { x0, y0, x1, y1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_specs() {
        assert_eq!(parse_eta("2").unwrap(), vec![2.0]);
        assert_eq!(parse_eta("1:4").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(parse_eta("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(parse_eta("4:1").is_err());
        assert!(parse_eta("1:2:3:4").is_err());
        assert!(parse_eta("x").is_err());
    }

    #[test]
    fn method_specs() {
        let base = DcsParams::default();
        let m = Method::parse("dcs", &base).unwrap();
        assert_eq!(m.label(), "dcs");
        let m = Method::parse("dcs:eta=4", &base).unwrap();
        assert_eq!(m.label(), "dcs(eta=4)");
        match m {
            Method::Dcs { params, .. } => assert_eq!(params.eta, 4.0),
            _ => panic!("expected dcs"),
        }
        assert!(Method::parse("dcs:eta=9", &base).is_err());

        let m = Method::parse("GE1:p=3:sigma=1", &base).unwrap();
        assert_eq!(m.label(), "ge1(p=3,sigma=1)");
        match m {
            Method::Minkowski { params, .. } => {
                assert_eq!((params.order, params.norm, params.sigma), (1, 3.0, 1.0));
            }
            _ => panic!("expected a baseline"),
        }
        assert!(Method::parse("gw:p=2", &base).is_err());
        assert!(Method::parse("nope", &base).is_err());
        assert_eq!(parse_methods("dcs, gw,ge2", &base).unwrap().len(), 3);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("p.toml");
        std::fs::write(&cfg, "tau = 8\neta = 3\nsigmas = [2.0]\n").unwrap();
        let flags = DcsFlags {
            config: Some(cfg),
            tau: None,
            eta: Some("1".into()),
            sigmas: vec![],
            bandwidth: Some(0.05),
            saturation_level: None,
        };
        let (p, etas) = flags.resolve().unwrap();
        assert_eq!((p.tau, p.eta, p.bandwidth), (8.0, 1.0, 0.05));
        assert_eq!(p.sigmas, vec![2.0]);
        assert_eq!(etas, vec![1.0]);

        std::fs::write(dir.path().join("bad.toml"), "tau = 5\nwidth = 3\n").unwrap();
        assert!(load_config(&dir.path().join("bad.toml")).is_err());
    }

    #[test]
    fn rectangles() {
        assert_eq!(
            parse_rect("1,2,3,4").unwrap(),
            ExclusionRegion::Rect { x0: 1, y0: 2, x1: 3, y1: 4 }
        );
        assert!(parse_rect("3,2,1,4").is_err());
        assert!(parse_rect("1,2,3").is_err());
    }
}
