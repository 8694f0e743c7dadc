//! Mode of a Parzen (Gaussian-kernel) density over rg-chromaticity samples.
//!
//! The density of every sample is `p(z_i) = (1/n) sum_j exp(-|z_i - z_j|^2 / 2h^2)`
//! and the estimate is the sample with the largest density. Densities within
//! a relative [`TIE_TOLERANCE`] of the maximum are tied; the tie goes to the
//! lexicographically smallest `(c_r, c_g)`.
//!
//! [`kde_argmax`] deduplicates samples and, for large inputs, prunes with a
//! kernel truncated at `5h` on a spatial grid. Every sample that could still
//! reach the maximum once the truncated tail is added back is re-evaluated
//! exactly, so the result is the same as [`kde_argmax_reference`].

use std::collections::HashMap;

use rayon::prelude::*;

use crate::color::ChromaticityPoint;
use crate::error::{Error, Result};

/// Relative density difference below which two samples count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Kernel cut-off of the accelerated path, in bandwidths.
pub const TRUNCATION_BANDWIDTHS: f64 = 5.0;

/// Unique-sample count above which the grid path is used.
const GRID_THRESHOLD: usize = 256;

fn check(points: &[ChromaticityPoint], h: f64) -> Result<()> {
    if points.is_empty() {
        return Err(Error::invalid("density mode of an empty point set"));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid(format!("bandwidth must be > 0, got {h}")));
    }
    Ok(())
}

#[inline]
fn sq_dist(a: ChromaticityPoint, b: ChromaticityPoint) -> f64 {
    let dr = a.r - b.r;
    let dg = a.g - b.g;
    dr * dr + dg * dg
}

/// Density of `z` under the samples `points`.
pub fn density_at(z: ChromaticityPoint, points: &[ChromaticityPoint], h: f64) -> f64 {
    let k = 1.0 / (2.0 * h * h);
    points.iter().map(|&p| (-sq_dist(z, p) * k).exp()).sum::<f64>() / points.len() as f64
}

/// Applies the tie rule to `(point, density)` candidates.
fn pick(candidates: impl Iterator<Item = (ChromaticityPoint, f64)> + Clone) -> ChromaticityPoint {
    let max = candidates.clone().map(|(_, d)| d).fold(f64::NEG_INFINITY, f64::max);
    let floor = max * (1.0 - TIE_TOLERANCE);
    candidates
        .filter(|(_, d)| *d >= floor)
        .map(|(p, _)| p)
        .min_by(|a, b| a.lex_cmp(b))
        .expect("at least one candidate reaches the maximum")
}

/// Direct O(n^2) evaluation at every sample.
pub fn kde_argmax_reference(points: &[ChromaticityPoint], h: f64) -> Result<ChromaticityPoint> {
    check(points, h)?;
    let densities: Vec<f64> = points.par_iter().map(|&z| density_at(z, points, h)).collect();
    Ok(pick(points.iter().copied().zip(densities.iter().copied())))
}

/// Distinct samples with their multiplicities, in lexicographic order.
fn dedup(points: &[ChromaticityPoint]) -> (Vec<ChromaticityPoint>, Vec<f64>) {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.lex_cmp(b));
    let mut unique: Vec<ChromaticityPoint> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for p in sorted {
        match unique.last() {
            Some(last) if last.lex_cmp(&p).is_eq() => *weights.last_mut().unwrap() += 1.0,
            _ => {
                unique.push(p);
                weights.push(1.0);
            }
        }
    }
    (unique, weights)
}

fn weighted_density(z: ChromaticityPoint, unique: &[ChromaticityPoint], weights: &[f64], n: f64, k: f64) -> f64 {
    unique
        .iter()
        .zip(weights)
        .map(|(&p, &w)| w * (-sq_dist(z, p) * k).exp())
        .sum::<f64>()
        / n
}

/// Sample of maximal density.
pub fn kde_argmax(points: &[ChromaticityPoint], h: f64) -> Result<ChromaticityPoint> {
    check(points, h)?;
    let n = points.len() as f64;
    let k = 1.0 / (2.0 * h * h);
    let (unique, weights) = dedup(points);

    if unique.len() <= GRID_THRESHOLD {
        let d: Vec<f64> = unique.iter().map(|&z| weighted_density(z, &unique, &weights, n, k)).collect();
        return Ok(pick(unique.iter().copied().zip(d.iter().copied())));
    }

    let cutoff = TRUNCATION_BANDWIDTHS * h;
    let cutoff2 = cutoff * cutoff;
    let cell_of = |p: ChromaticityPoint| ((p.r / cutoff).floor() as i64, (p.g / cutoff).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in unique.iter().enumerate() {
        grid.entry(cell_of(p)).or_default().push(i);
    }

    let truncated: Vec<f64> = unique
        .par_iter()
        .map(|&z| {
            let (cx, cy) = cell_of(z);
            let mut acc = 0.0;
            for gx in cx - 1..=cx + 1 {
                for gy in cy - 1..=cy + 1 {
                    if let Some(members) = grid.get(&(gx, gy)) {
                        for &j in members {
                            let d2 = sq_dist(z, unique[j]);
                            if d2 <= cutoff2 {
                                acc += weights[j] * (-d2 * k).exp();
                            }
                        }
                    }
                }
            }
            acc / n
        })
        .collect();

    // the dropped tail contributes less than exp(-cutoff^2 / 2h^2) to any density
    let tail = (-(TRUNCATION_BANDWIDTHS * TRUNCATION_BANDWIDTHS) / 2.0).exp();
    let best = truncated.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = best * (1.0 - 2.0 * TIE_TOLERANCE) - tail;
    let candidates: Vec<usize> = (0..unique.len()).filter(|&i| truncated[i] >= floor).collect();
    let exact: Vec<f64> = candidates
        .par_iter()
        .map(|&i| weighted_density(unique[i], &unique, &weights, n, k))
        .collect();
    Ok(pick(candidates.iter().map(|&i| unique[i]).zip(exact.iter().copied())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(r: f64, g: f64) -> ChromaticityPoint {
        ChromaticityPoint { r, g }
    }

    #[test]
    fn single_point() {
        assert_eq!(kde_argmax(&[pt(0.2, 0.3)], 0.03).unwrap(), pt(0.2, 0.3));
    }

    #[test]
    fn dominant_mode() {
        let mut pts = vec![pt(0.33, 0.33); 99];
        pts.push(pt(0.8, 0.1));
        assert_eq!(kde_argmax(&pts, 0.03).unwrap(), pt(0.33, 0.33));
        assert_eq!(kde_argmax_reference(&pts, 0.03).unwrap(), pt(0.33, 0.33));
    }

    #[test]
    fn symmetric_tie_goes_to_smallest() {
        let pts = vec![pt(0.3, 0.3), pt(0.5, 0.2), pt(0.3, 0.3), pt(0.5, 0.2)];
        assert_eq!(kde_argmax(&pts, 0.03).unwrap(), pt(0.3, 0.3));
        assert_eq!(kde_argmax_reference(&pts, 0.03).unwrap(), pt(0.3, 0.3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(kde_argmax(&[], 0.03).is_err());
        assert!(kde_argmax(&[pt(0.2, 0.2)], 0.0).is_err());
    }

    #[test]
    fn grid_path_matches_reference_on_clusters() {
        let mut pts = Vec::new();
        for i in 0..600 {
            let t = i as f64 * 0.618_033_988_75;
            let (dr, dg) = ((t * 6.283).sin() * 0.02 * (t % 1.0), (t * 6.283).cos() * 0.02 * (t % 1.0));
            if i % 5 < 3 {
                pts.push(pt(0.35 + dr, 0.33 + dg));
            } else {
                pts.push(pt(0.2 + dr, 0.5 + dg));
            }
        }
        assert_eq!(kde_argmax(&pts, 0.03).unwrap(), kde_argmax_reference(&pts, 0.03).unwrap());
    }
}
