//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use dcs_core::synth::{QuadrantAlbedo, SceneConfig, Sphere};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Brute-force Parzen mode: evaluates the density at every sample in input
/// order and applies the tie rule (relative 1e-9, then smallest (r, g)).
pub fn brute_force_mode(points: &[(f64, f64)], h: f64) -> (f64, f64) {
    let n = points.len() as f64;
    let mut dens = Vec::with_capacity(points.len());
    for &(zr, zg) in points {
        let mut s = 0.0;
        for &(r, g) in points {
            let d2 = (zr - r) * (zr - r) + (zg - g) * (zg - g);
            s += (-d2 / (2.0 * h * h)).exp();
        }
        dens.push(s / n);
    }
    let max = dens.iter().cloned().fold(f64::MIN, f64::max);
    let mut best: Option<(f64, f64)> = None;
    for (i, &d) in dens.iter().enumerate() {
        if d >= max * (1.0 - 1e-9) {
            let p = points[i];
            best = match best {
                None => Some(p),
                Some(b) if p.0 < b.0 || (p.0 == b.0 && p.1 < b.1) => Some(p),
                keep => keep,
            };
        }
    }
    best.unwrap()
}

/// Row `n` of Pascal's triangle in exact integers (valid for n <= 125).
pub fn pascal_row(n: usize) -> Vec<u128> {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// Two-sided exact sign-test p-value from integer binomial coefficients.
pub fn sign_test_p_value(wins_a: usize, wins_b: usize) -> f64 {
    let n = wins_a + wins_b;
    if n == 0 {
        return 1.0;
    }
    let row = pascal_row(n);
    let k = wins_a.min(wins_b);
    let tail: u128 = row[..=k].iter().sum();
    (2.0 * tail as f64 / 2f64.powi(n as i32)).min(1.0)
}

/// Angle between two RGB vectors in degrees, computed via atan2 of the
/// cross and dot products rather than arccos.
pub fn angle_degrees(a: [f64; 3], b: [f64; 3]) -> f64 {
    let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let cross = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    cross.atan2(dot).to_degrees()
}

/// Sizes of 8-connected components of `bits` (w x h, row-major).
pub fn component_sizes(bits: &[bool], w: usize, h: usize) -> Vec<(usize, Vec<usize>)> {
    let mut seen = vec![false; bits.len()];
    let mut out = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push((members.len(), members));
    }
    out
}

fn random_unit_sum(rng: &mut ChaCha8Rng, lo: f64) -> [f64; 3] {
    let v = [rng.gen_range(lo..1.0), rng.gen_range(lo..1.0), rng.gen_range(lo..1.0)];
    let s = v[0] + v[1] + v[2];
    [v[0] / s, v[1] / s, v[2] / s]
}

/// A random but well-formed sphere scene, 96x96 or larger.
pub fn random_scene(rng: &mut ChaCha8Rng) -> SceneConfig {
    let size = rng.gen_range(96..=160);
    let radius = rng.gen_range(0.25..0.45) * size as f64;
    let margin = radius + 1.0;
    let center = [
        rng.gen_range(margin..(size as f64 - 1.0 - margin)),
        rng.gen_range(margin..(size as f64 - 1.0 - margin)),
    ];
    let tilt = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), 1.0];
    let n = (tilt[0] * tilt[0] + tilt[1] * tilt[1] + 1.0f64).sqrt();
    let patches = if rng.gen_bool(0.5) {
        Some(QuadrantAlbedo {
            split: center,
            colors: [
                random_unit_sum(rng, 0.1),
                random_unit_sum(rng, 0.1),
                random_unit_sum(rng, 0.1),
                random_unit_sum(rng, 0.1),
            ],
        })
    } else {
        None
    };
    SceneConfig {
        width: size,
        height: size,
        sphere: Sphere { center, radius },
        object_color: random_unit_sum(rng, 0.1),
        patches,
        illuminant: random_unit_sum(rng, 0.2),
        diffuse_albedo: rng.gen_range(0.3..1.5),
        light_intensity: rng.gen_range(0.5..2.0),
        roughness: rng.gen_range(0.05..0.3),
        fresnel: rng.gen_range(0.2..1.5),
        geometric: 1.0,
        light_direction: [tilt[0] / n, tilt[1] / n, 1.0 / n],
        view_direction: [0.0, 0.0, 1.0],
    }
}

/// Random rg point sets for density-mode checks. `kind` selects the shape:
/// 0 clustered, 1 uniform, 2 duplicated lattice (exact ties), 3 translated
/// twin clusters (ties up to rounding).
pub fn random_point_set(rng: &mut ChaCha8Rng, kind: usize, max_n: usize) -> Vec<(f64, f64)> {
    let n = rng.gen_range(1..=max_n);
    let in_simplex = |r: f64, g: f64| r > 0.0 && g > 0.0 && r + g < 1.0;
    let mut pts = Vec::with_capacity(n);
    match kind {
        0 => {
            let k = rng.gen_range(1..=4);
            let centers: Vec<(f64, f64, f64)> = (0..k)
                .map(|_| (rng.gen_range(0.15..0.5), rng.gen_range(0.15..0.45), rng.gen_range(0.005..0.06)))
                .collect();
            while pts.len() < n {
                let (cr, cg, s) = centers[rng.gen_range(0..k)];
                // Box-Muller
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let m = (-2.0 * u1.ln()).sqrt() * s;
                let (r, g) = (cr + m * (6.283185307179586 * u2).cos(), cg + m * (6.283185307179586 * u2).sin());
                if in_simplex(r, g) {
                    pts.push((r, g));
                }
            }
        }
        1 => {
            while pts.len() < n {
                let (r, g) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                if in_simplex(r, g) {
                    pts.push((r, g));
                }
            }
        }
        2 => {
            // far-apart sites with equal multiplicity: densities tie exactly
            let all = [(0.6, 0.2), (0.2, 0.6), (0.2, 0.2), (0.45, 0.45)];
            let k = rng.gen_range(1..=all.len());
            let reps = (n / k).max(1);
            let sites = &all[..k];
            for _ in 0..reps {
                pts.extend_from_slice(sites);
            }
        }
        _ => {
            let half = (n / 2).max(1);
            let offset = (0.3, 0.0);
            let mut cluster = Vec::new();
            while cluster.len() < half {
                let (r, g) = (0.15 + rng.gen_range(-0.04..0.04), 0.4 + rng.gen_range(-0.04..0.04));
                cluster.push((r, g));
            }
            for &(r, g) in &cluster {
                pts.push((r, g));
                pts.push((r + offset.0, g + offset.1));
            }
        }
    }
    // shuffle so input order carries no information
    for i in (1..pts.len()).rev() {
        let j = rng.gen_range(0..=i);
        pts.swap(i, j);
    }
    pts
}
