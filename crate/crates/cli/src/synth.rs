use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use dcs_core::dataset::{write_pfm, write_pfm_plane};
use dcs_core::filters::{cross_f2, laplacian_f1, Kernel};
use dcs_core::synth::{self, Ratio, SceneConfig, DEFAULT_RATIO_EDGES};

use crate::format::sig6;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Operator {
    /// 3x3 Laplacian.
    F1,
    /// 7x7 cross.
    F2,
}

impl Operator {
    fn kernel(self) -> Kernel {
        match self {
            Operator::F1 => laplacian_f1(),
            Operator::F2 => cross_f2(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Built-in scene: glossy, strong-lobe, achromatic or four-patch.
    #[arg(long, default_value = "glossy", conflicts_with = "scene")]
    pub preset: String,

    /// Scene description in TOML (the fields of a scene config).
    #[arg(long, value_name = "FILE")]
    pub scene: Option<PathBuf>,

    /// Derivative operator used for the ratio map.
    #[arg(long, value_enum, default_value = "f2")]
    pub operator: Operator,

    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let config = match &args.scene {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<SceneConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => SceneConfig::preset(&args.preset)?,
    };
    let render = synth::render(&config)?;
    let kernel = args.operator.kernel();
    let map = synth::ratio_map(&render, &kernel)?;
    let samples = synth::error_vs_ratio(&render, &kernel)?;
    let bins = synth::bin_by_ratio(&samples, &DEFAULT_RATIO_EDGES);

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write(&args.out, "composite.pfm", &write_pfm(&render.composite))?;
    write(&args.out, "diffuse.pfm", &write_pfm(&render.diffuse_component))?;
    write(&args.out, "specular.pfm", &write_pfm(&render.specular_component))?;
    write(&args.out, "ratio.pfm", &write_pfm_plane(map.width, map.height, &map.to_plane())?)?;

    let mut csv = String::from("x,y,ratio\n");
    for y in 0..map.height {
        for x in 0..map.width {
            match map.get(x, y) {
                Ratio::Finite(r) => writeln!(csv, "{x},{y},{r}")?,
                Ratio::Infinite => writeln!(csv, "{x},{y},inf")?,
                Ratio::Undefined => writeln!(csv, "{x},{y},undefined")?,
            }
        }
    }
    write(&args.out, "ratio.csv", csv.as_bytes())?;

    let mut csv = String::from("x,y,ratio,error_degrees\n");
    for s in &samples {
        writeln!(csv, "{},{},{},{}", s.x, s.y, s.ratio, s.error_degrees)?;
    }
    write(&args.out, "error_vs_ratio.csv", csv.as_bytes())?;

    let mut csv = String::from("lower,upper,count,mean_error,max_error\n");
    for b in &bins {
        writeln!(csv, "{},{},{},{},{}", b.lower, b.upper, b.count, b.mean_error, b.max_error)?;
    }
    write(&args.out, "bins.csv", csv.as_bytes())?;

    let finite = map.finite_values().count();
    let infinite = map.values.iter().filter(|r| matches!(r, Ratio::Infinite)).count();
    println!("finite ratios {finite}, infinite {infinite}");
    // an achromatic scene has no finite ratio anywhere
    println!("max ratio     {}", map.max_finite().map_or("-".to_string(), sig6));
    println!("{:>8} {:>8} {:>7} {:>11} {:>11}", "lower", "upper", "count", "mean_error", "max_error");
    for b in &bins {
        println!(
            "{:>8} {:>8} {:>7} {:>11} {:>11}",
            sig6(b.lower),
            sig6(b.upper),
            b.count,
            sig6(b.mean_error),
            sig6(b.max_error)
        );
    }
    Ok(())
}
