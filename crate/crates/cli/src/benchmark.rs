use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use dcs_core::baselines::MinkowskiPreset;
use dcs_core::dataset::{self, csv_field, load_manifest, ManifestEntry, ResultRow};
use dcs_core::eval::{self, angular_error, summarize, ErrorSummary, WstMatrix};
use rayon::prelude::*;

use crate::format::sig6;
use crate::options::{minkowski_label, parse_methods, thread_pool, DcsFlags, Method};

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Manifest listing images, ground truths, black/saturation levels and
    /// optional checker regions.
    pub manifest: PathBuf,

    /// Comma-separated methods, e.g. `dcs,gw,ge1:p=6:sigma=2`.
    #[arg(long, default_value = "dcs")]
    pub methods: String,

    #[command(flatten)]
    pub dcs: DcsFlags,

    /// Also write the pairwise sign-test matrix.
    #[arg(long)]
    pub wst: bool,

    /// Confidence level of the sign test.
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,

    /// External per-image errors (`image_id,error_degrees`) to include in
    /// the summaries and the sign-test matrix. Repeatable.
    #[arg(long = "import", value_name = "NAME=CSV")]
    pub imports: Vec<String>,

    /// Replace each baseline by its best setting over the parameter grid
    /// (lowest median error on this manifest).
    #[arg(long)]
    pub optimal_baselines: bool,

    /// Output directory for the report files.
    #[arg(long, short, default_value = "benchmark-out")]
    pub out: PathBuf,

    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, env = "DCS_JOBS")]
    pub jobs: Option<usize>,
}

/// One method as it appears in the report, possibly chosen from several
/// parameter settings after the run.
struct Group {
    variants: Vec<Method>,
    /// Set when the variants are a baseline's parameter grid.
    preset: Option<MinkowskiPreset>,
}

struct Cell {
    error: Option<f64>,
    flags: String,
    seconds: f64,
}

pub struct MethodSummary {
    pub method: String,
    pub failed: usize,
    pub summary: Option<ErrorSummary>,
}

/// Everything a benchmark run writes.
pub struct RunReport {
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<MethodSummary>,
    /// `(image_id, method, seconds)`.
    pub timings: Vec<(String, String, f64)>,
    pub wst: Option<WstMatrix>,
}

impl RunReport {
    /// Recomputes every summary from the rows and compares bit for bit.
    pub fn verify(&self) -> Result<()> {
        for s in &self.summaries {
            let mine: Vec<&ResultRow> = self.rows.iter().filter(|r| r.method == s.method).collect();
            let errors: Vec<f64> = mine.iter().filter_map(|r| r.error_degrees).collect();
            let failed = mine.len() - errors.len();
            let again = if errors.is_empty() { None } else { Some(summarize(&errors)?) };
            ensure!(
                failed == s.failed && again == s.summary,
                "summary for {} does not match its rows",
                s.method
            );
        }
        Ok(())
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,count,failed,median,mean,trimean,best25,worst25\n");
        for s in &self.summaries {
            match &s.summary {
                Some(e) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        csv_field(&s.method),
                        e.count, s.failed, e.median, e.mean, e.trimean, e.best25, e.worst25
                    );
                }
                None => {
                    let _ = writeln!(out, "{},0,{},,,,,", csv_field(&s.method), s.failed);
                }
            }
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("image_id,method,seconds\n");
        for (id, m, t) in &self.timings {
            let _ = writeln!(out, "{},{},{t}", csv_field(id), csv_field(m));
        }
        out
    }

    /// Human-readable summary table, six significant digits.
    pub fn summary_text(&self) -> String {
        let width = self.summaries.iter().map(|s| s.method.len()).max().unwrap_or(6).max(6);
        let mut out = format!(
            "{:width$}  {:>5} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
            "method", "count", "failed", "median", "mean", "trimean", "best25", "worst25"
        );
        for s in &self.summaries {
            let (count, cols) = match &s.summary {
                Some(e) => (e.count, [e.median, e.mean, e.trimean, e.best25, e.worst25].map(sig6)),
                None => (0, std::array::from_fn(|_| "-".to_string())),
            };
            let _ = writeln!(
                out,
                "{:width$}  {:>5} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9}",
                s.method, count, s.failed, cols[0], cols[1], cols[2], cols[3], cols[4]
            );
        }
        out
    }
}

fn with_param(label: &str, param: &str) -> String {
    match label.strip_suffix(')') {
        Some(head) => format!("{head},{param})"),
        None => format!("{label}({param})"),
    }
}

fn build_groups(args: &BenchmarkArgs) -> Result<Vec<Group>> {
    let (base, etas) = args.dcs.resolve()?;
    let mut groups = Vec::new();
    for method in parse_methods(&args.methods, &base)? {
        match method {
            Method::Dcs { label, params } if etas.len() > 1 => {
                for &eta in &etas {
                    let mut p = params.clone();
                    p.eta = eta;
                    p.validate()?;
                    groups.push(Group {
                        variants: vec![Method::Dcs {
                            label: with_param(&label, &format!("eta={eta}")),
                            params: p,
                        }],
                        preset: None,
                    });
                }
            }
            Method::Minkowski { preset, .. } if args.optimal_baselines => {
                let variants = preset
                    .sweep()
                    .into_iter()
                    .map(|params| Method::Minkowski {
                        label: minkowski_label(preset, &params),
                        preset,
                        params,
                    })
                    .collect();
                groups.push(Group {
                    variants,
                    preset: Some(preset),
                });
            }
            m => groups.push(Group {
                variants: vec![m],
                preset: None,
            }),
        }
    }
    let mut seen = std::collections::HashSet::new();
    for g in &groups {
        let name = g.preset.map_or_else(|| g.variants[0].label().to_string(), |p| p.name().to_string());
        if !seen.insert(name.clone()) {
            bail!("method {name} is listed twice");
        }
    }
    Ok(groups)
}

fn run_image(entry: &ManifestEntry, methods: &[&Method], saturation_override: Option<f64>) -> Vec<Cell> {
    let image = match dataset::load_image(&entry.image_path, entry) {
        Ok(img) => img,
        Err(e) => {
            let flags = format!("failed: {e}");
            return methods
                .iter()
                .map(|_| Cell {
                    error: None,
                    flags: flags.clone(),
                    seconds: 0.0,
                })
                .collect();
        }
    };
    let saturation = saturation_override.or_else(|| entry.effective_saturation());
    methods
        .iter()
        .map(|m| {
            let start = Instant::now();
            let result = m
                .run(&image, saturation, entry.exclusion.as_ref())
                .and_then(|o| Ok((angular_error(entry.ground_truth.rgb(), o.illuminant.rgb())?, o.flags)));
            let seconds = start.elapsed().as_secs_f64();
            match result {
                Ok((err, flags)) => Cell {
                    error: Some(err),
                    flags,
                    seconds,
                },
                Err(e) => Cell {
                    error: None,
                    flags: format!("failed: {e}"),
                    seconds,
                },
            }
        })
        .collect()
}

fn median_of(cells: &[&Cell]) -> Option<f64> {
    let errors: Vec<f64> = cells.iter().filter_map(|c| c.error).collect();
    summarize(&errors).ok().map(|s| s.median)
}

fn parse_import(spec: &str) -> Result<(String, PathBuf)> {
    let (name, path) = spec.split_once('=').with_context(|| format!("--import expects NAME=CSV, got '{spec}'"))?;
    ensure!(!name.trim().is_empty(), "--import needs a method name");
    Ok((name.trim().to_string(), PathBuf::from(path.trim())))
}

pub fn execute(args: &BenchmarkArgs) -> Result<RunReport> {
    let groups = build_groups(args)?;
    let entries = load_manifest(&args.manifest)?;
    ensure!(!entries.is_empty(), "{} lists no images", args.manifest.display());
    for e in &entries {
        for w in &e.warnings {
            eprintln!("warning: {}: {w}", e.id);
        }
    }
    let imports: Vec<(String, PathBuf)> = args.imports.iter().map(|s| parse_import(s)).collect::<Result<_>>()?;
    if args.wst || !imports.is_empty() {
        ensure!(
            args.confidence > 0.0 && args.confidence < 1.0,
            "confidence must lie in (0, 1)"
        );
    }

    let flat: Vec<&Method> = groups.iter().flat_map(|g| g.variants.iter()).collect();
    let saturation_override = args.dcs.saturation_level;
    let pool = thread_pool(args.jobs)?;
    let cells: Vec<Vec<Cell>> =
        pool.install(|| entries.par_iter().map(|e| run_image(e, &flat, saturation_override)).collect());

    // choose one variant per group
    let mut chosen = Vec::new();
    let mut offset = 0;
    for g in &groups {
        let n = g.variants.len();
        let mut best = 0;
        if n > 1 {
            let mut best_median = f64::INFINITY;
            for v in 0..n {
                let column: Vec<&Cell> = cells.iter().map(|row| &row[offset + v]).collect();
                if let Some(m) = median_of(&column) {
                    if m < best_median {
                        best_median = m;
                        best = v;
                    }
                }
            }
        }
        chosen.push((offset + best, g.variants[best].label().to_string()));
        offset += n;
    }

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (entry, row) in entries.iter().zip(&cells) {
        for (col, label) in &chosen {
            let c = &row[*col];
            rows.push(ResultRow {
                image_id: entry.id.clone(),
                method: label.clone(),
                error_degrees: c.error,
                flags: c.flags.clone(),
            });
            timings.push((entry.id.clone(), label.clone(), c.seconds));
        }
    }

    let mut method_names: Vec<String> = chosen.iter().map(|(_, l)| l.clone()).collect();
    for (name, path) in &imports {
        ensure!(!method_names.contains(name), "imported method {name} clashes with a method of this run");
        for rec in eval::read_error_csv(path)? {
            rows.push(ResultRow {
                image_id: rec.image_id,
                method: name.clone(),
                error_degrees: Some(rec.error_degrees),
                flags: "imported".into(),
            });
        }
        method_names.push(name.clone());
    }

    let mut summaries = Vec::new();
    for m in &method_names {
        let mine: Vec<&ResultRow> = rows.iter().filter(|r| &r.method == m).collect();
        let errors: Vec<f64> = mine.iter().filter_map(|r| r.error_degrees).collect();
        summaries.push(MethodSummary {
            method: m.clone(),
            failed: mine.len() - errors.len(),
            summary: if errors.is_empty() { None } else { Some(summarize(&errors)?) },
        });
    }

    // too few paired images is not worth losing the rest of the report over
    let wst = if args.wst {
        match sign_test_matrix(&entries, &rows, &method_names, args.confidence) {
            Ok(w) => Some(w),
            Err(e) => {
                eprintln!("warning: no sign-test matrix: {e:#}");
                None
            }
        }
    } else {
        None
    };

    let report = RunReport {
        rows,
        summaries,
        timings,
        wst,
    };
    report.verify()?;
    Ok(report)
}

/// Pairs errors over the images every method succeeded on, in manifest order.
fn sign_test_matrix(entries: &[ManifestEntry], rows: &[ResultRow], methods: &[String], confidence: f64) -> Result<WstMatrix> {
    let mut by_method: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in rows {
        if let Some(e) = r.error_degrees {
            by_method.entry(&r.method).or_default().insert(&r.image_id, e);
        }
    }
    let empty = BTreeMap::new();
    let common: Vec<&str> = entries
        .iter()
        .map(|e| e.id.as_str())
        .filter(|id| methods.iter().all(|m| by_method.get(m.as_str()).unwrap_or(&empty).contains_key(id)))
        .collect();
    if common.len() < entries.len() {
        eprintln!(
            "warning: sign tests use the {} of {} images every method has an error for",
            common.len(),
            entries.len()
        );
    }
    ensure!(!common.is_empty(), "no image has an error for every method; cannot build the sign-test matrix");
    let lists: Vec<Vec<f64>> = methods
        .iter()
        .map(|m| common.iter().map(|id| by_method[m.as_str()][id]).collect())
        .collect();
    let refs: Vec<&Vec<f64>> = lists.iter().collect();
    Ok(eval::wst_matrix_ordered(methods, &refs, confidence)?)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

pub fn run(args: &BenchmarkArgs) -> Result<()> {
    let report = execute(args)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    dataset::write_results_csv(&args.out.join("rows.csv"), &report.rows)?;
    write(&args.out, "summary.csv", &report.summary_csv())?;
    write(&args.out, "timing.csv", &report.timing_csv())?;
    print!("{}", report.summary_text());
    if let Some(w) = &report.wst {
        write(&args.out, "wst.csv", &w.to_csv())?;
        write(&args.out, "wst.txt", &w.to_text())?;
        println!();
        print!("{}", w.to_text());
    }
    let failed: usize = report.summaries.iter().map(|s| s.failed).sum();
    if failed > 0 {
        eprintln!("warning: {failed} image runs failed; see rows.csv");
    }
    let total: f64 = report.timings.iter().map(|t| t.2).sum();
    if !report.timings.is_empty() {
        println!("mean seconds per image and method: {}", sig6(total / report.timings.len() as f64));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_gain_parameters() {
        assert_eq!(with_param("dcs", "eta=1"), "dcs(eta=1)");
        assert_eq!(with_param("dcs(tau=3)", "eta=2"), "dcs(tau=3,eta=2)");
    }

    #[test]
    fn verify_catches_a_tampered_summary() {
        let rows = vec![
            ResultRow {
                image_id: "a".into(),
                method: "m".into(),
                error_degrees: Some(1.0),
                flags: String::new(),
            },
            ResultRow {
                image_id: "b".into(),
                method: "m".into(),
                error_degrees: None,
                flags: "failed: x".into(),
            },
        ];
        let mut report = RunReport {
            summaries: vec![MethodSummary {
                method: "m".into(),
                failed: 1,
                summary: Some(summarize(&[1.0]).unwrap()),
            }],
            rows,
            timings: vec![],
            wst: None,
        };
        report.verify().unwrap();
        report.summaries[0].failed = 0;
        assert!(report.verify().is_err());
    }
}
