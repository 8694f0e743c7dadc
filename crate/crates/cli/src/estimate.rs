use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use dcs_core::dataset::{self, load_manifest, subtract_black, ExclusionRegion};
use dcs_core::eval::angular_error;

use crate::format::sig6;
use crate::options::{parse_rect, DcsFlags, Method};

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Linear RGB image (PNG, TIFF, PPM or PFM).
    pub image: PathBuf,

    /// `dcs` or a baseline such as `gw`, `wp`, `sog:p=6`, `ge1:p=6:sigma=2`.
    #[arg(long, default_value = "dcs")]
    pub method: String,

    #[command(flatten)]
    pub dcs: DcsFlags,

    /// Code value subtracted from every channel before estimation.
    #[arg(long, default_value_t = 0.0)]
    pub black_level: f64,

    /// Inclusive rectangle `x0,y0,x1,y1` ignored by the estimator.
    #[arg(long, value_name = "X0,Y0,X1,Y1")]
    pub exclude: Option<String>,

    /// Manifest to take black level, saturation, exclusion and ground truth
    /// from. The entry is matched by `--id`, or by the image path.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    #[arg(long, requires = "manifest")]
    pub id: Option<String>,

    /// Write the white-balanced image (format from the extension).
    #[arg(long, value_name = "OUT")]
    pub correct: Option<PathBuf>,

    /// Write the rg derivative-color cloud as CSV.
    #[arg(long, value_name = "OUT")]
    pub dump_chroma: Option<PathBuf>,
}

pub fn run(args: &EstimateArgs) -> Result<()> {
    let (base, etas) = args.dcs.resolve()?;
    if etas.len() != 1 {
        bail!("estimate takes a single eta, not a sweep");
    }
    let method = Method::parse(&args.method, &base)?;

    let entry = match &args.manifest {
        Some(path) => {
            let entries = load_manifest(path)?;
            let found = match &args.id {
                Some(id) => entries.into_iter().find(|e| &e.id == id),
                None => {
                    let target = std::fs::canonicalize(&args.image).ok();
                    entries
                        .into_iter()
                        .find(|e| target.is_some() && std::fs::canonicalize(&e.image_path).ok() == target)
                }
            };
            Some(found.with_context(|| format!("no entry for {} in {}", args.image.display(), path.display()))?)
        }
        None => None,
    };

    let raw = dataset::decode_image(&args.image)?;
    let black = entry.as_ref().map_or(args.black_level, |e| e.black_level);
    let image = subtract_black(&raw, black)?;
    let saturation = match &entry {
        Some(e) => e.effective_saturation(),
        None => raw.bit_depth().max_code().map(|m| m - black),
    };
    let region: Option<ExclusionRegion> = match (&args.exclude, &entry) {
        (Some(s), _) => Some(parse_rect(s)?),
        (None, Some(e)) => e.exclusion.clone(),
        (None, None) => None,
    };

    if let Some(e) = &entry {
        for w in &e.warnings {
            eprintln!("warning: {}: {w}", e.id);
        }
    }

    let outcome = method.run(&image, saturation, region.as_ref())?;
    for w in outcome.flags.split(';').filter(|w| !w.is_empty()) {
        eprintln!("warning: {w}");
    }

    let s = outcome.illuminant;
    let c = s.chromaticity();
    let mut out = String::new();
    writeln!(out, "method        {}", method.label())?;
    writeln!(out, "illuminant    {} {} {}", sig6(s.r()), sig6(s.g()), sig6(s.b()))?;
    writeln!(out, "chromaticity  {} {}", sig6(c.r), sig6(c.g))?;
    if let Some(est) = &outcome.dcs {
        writeln!(out, "bright pixels {}", est.region.mask.count())?;
        writeln!(out, "derivatives   {}", est.num_derivative_colors)?;
    }
    if let Some(e) = &entry {
        let err = angular_error(e.ground_truth.rgb(), s.rgb())?;
        writeln!(out, "error_degrees {}", sig6(err))?;
    }
    print!("{out}");

    if let Some(path) = &args.correct {
        let balanced = dataset::white_balance(&image, &s)?;
        dataset::save_image(path, &balanced)?;
    }
    if let Some(path) = &args.dump_chroma {
        let Some(est) = &outcome.dcs else {
            bail!("--dump-chroma needs the dcs method");
        };
        let mut csv = String::from("r,g\n");
        for z in &est.points {
            writeln!(csv, "{},{}", z.r, z.g)?;
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
