//! Evaluation protocol: angular error, the five summary statistics, the
//! paired sign test and the win/significance (WST) matrix.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::dataset::csv_field;
use crate::error::{Error, Result};

/// Angle in degrees between two RGB vectors; scale invariant.
pub fn angular_error(truth: [f64; 3], estimate: [f64; 3]) -> Result<f64> {
    let na = (truth[0] * truth[0] + truth[1] * truth[1] + truth[2] * truth[2]).sqrt();
    let nb = (estimate[0] * estimate[0] + estimate[1] * estimate[1] + estimate[2] * estimate[2]).sqrt();
    if !(na > 0.0 && nb > 0.0) || !na.is_finite() || !nb.is_finite() {
        return Err(Error::invalid("angular error needs two non-zero finite vectors"));
    }
    let cos = (truth[0] * estimate[0] + truth[1] * estimate[1] + truth[2] * estimate[2]) / (na * nb);
    Ok(cos.clamp(-1.0, 1.0).acos().to_degrees())
}

/// Median, mean, trimean and the best/worst quarter means, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub trimean: f64,
    pub best25: f64,
    pub worst25: f64,
}

fn sorted_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Lower and upper Tukey hinges. For odd `n` both halves include the median.
fn hinges(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len();
    if n == 1 {
        return (sorted[0], sorted[0]);
    }
    let (lower, upper) = if n % 2 == 1 {
        (&sorted[..=n / 2], &sorted[n / 2..])
    } else {
        (&sorted[..n / 2], &sorted[n / 2..])
    };
    (sorted_median(lower), sorted_median(upper))
}

pub fn summarize(errors: &[f64]) -> Result<ErrorSummary> {
    if errors.is_empty() {
        return Err(Error::invalid("cannot summarize an empty error list"));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("error list contains non-finite values"));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = sorted_median(&sorted);
    let (q1, q3) = hinges(&sorted);
    let quarter = n.div_ceil(4);
    let mean_of = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Ok(ErrorSummary {
        count: n,
        median,
        mean: mean_of(&sorted),
        trimean: (q1 + 2.0 * median + q3) / 4.0,
        best25: mean_of(&sorted[..quarter]),
        worst25: mean_of(&sorted[n - quarter..]),
    })
}

/// Outcome of a paired sign test between methods `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTestResult {
    /// `+1` if `a` has significantly lower errors, `-1` if higher, else 0.
    pub verdict: i8,
    pub confidence: f64,
    pub wins_a: usize,
    pub wins_b: usize,
    pub p_value: f64,
}

/// Minimum number of paired samples accepted by [`sign_test`].
pub const MIN_SIGN_TEST_SAMPLES: usize = 6;

/// `P(X <= k)` for `X ~ Binomial(n, 1/2)`, summed in log space.
pub fn binomial_half_cdf(k: usize, n: usize) -> f64 {
    if k >= n {
        return 1.0;
    }
    let ln_half_n = n as f64 * std::f64::consts::LN_2;
    let mut ln_choose = 0.0f64; // ln C(n, 0)
    let mut total = 0.0;
    for i in 0..=k {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        total += (ln_choose - ln_half_n).exp();
    }
    total.min(1.0)
}

/// Two-sided exact binomial sign test on `sign(a_i - b_i)`, ties dropped.
pub fn sign_test(errors_a: &[f64], errors_b: &[f64], confidence: f64) -> Result<SignTestResult> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::invalid(format!(
            "sign test needs paired samples, got {} and {}",
            errors_a.len(),
            errors_b.len()
        )));
    }
    if errors_a.len() < MIN_SIGN_TEST_SAMPLES {
        return Err(Error::invalid(format!(
            "sign test needs at least {MIN_SIGN_TEST_SAMPLES} pairs, got {}",
            errors_a.len()
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let mut wins_a = 0;
    let mut wins_b = 0;
    for (a, b) in errors_a.iter().zip(errors_b) {
        if a < b {
            wins_a += 1;
        } else if b < a {
            wins_b += 1;
        }
    }
    let n = wins_a + wins_b;
    let p_value = if n == 0 {
        1.0
    } else {
        (2.0 * binomial_half_cdf(wins_a.min(wins_b), n)).min(1.0)
    };
    let alpha = 1.0 - confidence;
    let verdict = if p_value < alpha {
        if wins_a > wins_b {
            1
        } else {
            -1
        }
    } else {
        0
    };
    Ok(SignTestResult {
        verdict,
        confidence,
        wins_a,
        wins_b,
        p_value,
    })
}

/// Pairwise sign-test verdicts and per-method scores.
#[derive(Debug, Clone, PartialEq)]
pub struct WstMatrix {
    pub methods: Vec<String>,
    /// `verdicts[i][j]` compares method `i` against method `j`.
    pub verdicts: Vec<Vec<i8>>,
    /// Number of `+1` entries in each row.
    pub scores: Vec<usize>,
}

pub fn wst_matrix(method_errors: &BTreeMap<String, Vec<f64>>, confidence: f64) -> Result<WstMatrix> {
    let methods: Vec<String> = method_errors.keys().cloned().collect();
    let lists: Vec<&Vec<f64>> = method_errors.values().collect();
    wst_matrix_ordered(&methods, &lists, confidence)
}

/// Same as [`wst_matrix`] with an explicit method order.
pub fn wst_matrix_ordered(methods: &[String], lists: &[&Vec<f64>], confidence: f64) -> Result<WstMatrix> {
    if methods.len() != lists.len() {
        return Err(Error::invalid("one error list per method is required"));
    }
    let k = methods.len();
    let mut verdicts = vec![vec![0i8; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = sign_test(lists[i], lists[j], confidence)?.verdict;
            verdicts[i][j] = v;
            verdicts[j][i] = -v;
        }
    }
    let scores = verdicts.iter().map(|row| row.iter().filter(|&&v| v == 1).count()).collect();
    Ok(WstMatrix {
        methods: methods.to_vec(),
        verdicts,
        scores,
    })
}

impl WstMatrix {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("method");
        for m in &self.methods {
            s.push(',');
            s.push_str(&csv_field(m));
        }
        s.push_str(",score\n");
        for (i, m) in self.methods.iter().enumerate() {
            s.push_str(&csv_field(m));
            for v in &self.verdicts[i] {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{}", self.scores[i]);
        }
        s
    }

    /// Column-aligned table with numbered headers.
    pub fn to_text(&self) -> String {
        let width = self.methods.iter().map(|m| m.len()).max().unwrap_or(0) + 6;
        let mut s = format!("{:width$}", "");
        for i in 0..self.methods.len() {
            let _ = write!(s, "{:>5}", format!("({})", i + 1));
        }
        s.push_str("  score\n");
        for (i, m) in self.methods.iter().enumerate() {
            let _ = write!(s, "{:width$}", format!("({}) {m}", i + 1));
            for v in &self.verdicts[i] {
                let _ = write!(s, "{v:>5}");
            }
            let _ = writeln!(s, "  {:>5}", self.scores[i]);
        }
        s
    }
}

/// One `image_id, error_degrees` row.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub image_id: String,
    pub error_degrees: f64,
}

/// Reads an `image_id,error_degrees` CSV. A header line is skipped if its
/// second field is not numeric.
pub fn read_error_csv(path: &Path) -> Result<Vec<ErrorRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (id, value) = line
            .split_once(',')
            .ok_or_else(|| parse_err("expected `image_id,error_degrees`".into()))?;
        match value.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(ErrorRecord {
                image_id: id.trim().to_string(),
                error_degrees: v,
            }),
            Ok(v) => return Err(parse_err(format!("non-finite error {v}"))),
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(e) => return Err(parse_err(format!("bad error value {value:?}: {e}"))),
        }
    }
    Ok(out)
}

pub fn write_error_csv(path: &Path, records: &[ErrorRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let mut body = String::from("image_id,error_degrees\n");
    for r in records {
        let _ = writeln!(body, "{},{}", r.image_id, r.error_degrees);
    }
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}
