//! Tables of zeta-zero ordinates and the statistics computed from them:
//! counting, Riemann–von Mangoldt comparison, pair correlation, close pairs
//! and the regular/irregular partition of zeros into short windows.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, ParseError, Result};
use crate::quadrature;

/// Sorted positive ordinates γ of zeros ½ + iγ.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroTable {
    ordinates: Vec<f64>,
    source_id: String,
}

impl ZeroTable {
    /// Build a table from in-memory ordinates (synthetic fixtures included).
    /// Requires a strictly increasing, positive, nonempty list.
    pub fn from_ordinates(ordinates: Vec<f64>, source_id: impl Into<String>) -> Result<Self> {
        let source_id = source_id.into();
        let err = |source| LabError::Parse {
            path: source_id.clone(),
            source,
        };
        if ordinates.is_empty() {
            return Err(err(ParseError::Empty));
        }
        for (i, &g) in ordinates.iter().enumerate() {
            if !(g > 0.0) || !g.is_finite() {
                return Err(err(ParseError::NonPositive { line: i + 1 }));
            }
            if i > 0 && g <= ordinates[i - 1] {
                return Err(err(ParseError::NotAscending { line: i + 1 }));
            }
        }
        Ok(Self {
            ordinates,
            source_id,
        })
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.ordinates.last().expect("table is nonempty")
    }

    /// Ordinates in `(0, t]`.
    pub fn up_to(&self, t: f64) -> &[f64] {
        &self.ordinates[..self.ordinates.partition_point(|&g| g <= t)]
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_max()).contains(&t) {
            return Err(LabError::OutOfRange {
                what: "t",
                value: t,
                lo: 0.0,
                hi: self.t_max(),
            });
        }
        Ok(())
    }

    /// N(t): number of ordinates ≤ t.
    pub fn count_zeros(&self, t: f64) -> Result<usize> {
        self.check_t(t)?;
        Ok(self.ordinates.partition_point(|&g| g <= t))
    }

    /// Ordered pairs (γ, γ′), both ≤ t, with γ − γ′ in
    /// `[2πa/log t, 2πb/log t]`, against the form-factor prediction.
    pub fn pair_correlation(&self, t: f64, a: f64, b: f64) -> Result<PairCorrelation> {
        if !(a > 0.0 && a < b) {
            return Err(LabError::domain(format!(
                "pair correlation window needs 0 < a < b, got a={a}, b={b}"
            )));
        }
        self.check_t(t)?;
        if t <= 1.0 {
            return Err(LabError::domain("pair correlation needs t > 1"));
        }
        let zs = self.up_to(t);
        let log_t = t.ln();
        let lo = 2.0 * PI * a / log_t;
        let hi = 2.0 * PI * b / log_t;
        let observed = count_pairs_in_window(zs, lo, hi);
        let form_factor_integral = montgomery_form_factor_integral(a, b)?;
        let predicted = form_factor_integral * t * log_t / PI;
        let with_conjugates = CONJUGATE_FACTOR * observed as f64;
        Ok(PairCorrelation {
            t,
            a,
            b,
            observed,
            predicted,
            form_factor_integral,
            conjugate_factor: CONJUGATE_FACTOR,
            ratio: with_conjugates / predicted,
            unfolded: unfolded_pair_correlation(zs, a, b, form_factor_integral),
        })
    }

    /// Ordered pairs (γ, γ′), both ≤ t, with |γ − γ′| ≤ w/log t. The
    /// diagonal is included.
    pub fn close_pair_count(&self, t: f64, w: f64) -> Result<u64> {
        self.check_t(t)?;
        if !(w > 0.0) || t <= 1.0 {
            return Err(LabError::domain("close pair count needs w > 0 and t > 1"));
        }
        let zs = self.up_to(t);
        let h = w / t.ln();
        let mut total = 0u64;
        let mut lo = 0usize;
        let mut hi = 0usize;
        for &g in zs {
            while zs[lo] < g - h {
                lo += 1;
            }
            while hi < zs.len() && zs[hi] <= g + h {
                hi += 1;
            }
            total += (hi - lo) as u64;
        }
        Ok(total)
    }

    /// Split the zeros in `[0, t]` into windows `[j/log t, (j+1)/log t)`;
    /// windows holding more than `c_param·k_param` zeros go to `n2`.
    pub fn partition_zeros(&self, t: f64, k_param: f64, c_param: f64) -> Result<ZeroPartition> {
        self.check_t(t)?;
        if t < 10.0 {
            return Err(LabError::domain("partition needs t >= 10"));
        }
        if !(k_param >= 1.0 && c_param >= 1.0) {
            return Err(LabError::domain(
                "partition needs k_param >= 1 and c_param >= 1",
            ));
        }
        let zs = self.up_to(t);
        let len = 1.0 / t.ln();
        let cap = c_param * k_param;
        let mut n1 = Vec::with_capacity(zs.len());
        let mut n2 = Vec::new();
        let mut start = 0usize;
        while start < zs.len() {
            let window = (zs[start] / len).floor();
            let mut end = start + 1;
            while end < zs.len() && (zs[end] / len).floor() == window {
                end += 1;
            }
            let target = if (end - start) as f64 > cap {
                &mut n2
            } else {
                &mut n1
            };
            target.extend(start..end);
            start = end;
        }
        let n_t = zs.len();
        let n2_fraction = if n_t == 0 {
            0.0
        } else {
            n2.len() as f64 / n_t as f64
        };
        let n2_bound_holds = (n2.len() as f64) <= n_t as f64 / (200.0 * k_param);
        Ok(ZeroPartition {
            n1,
            n2,
            interval_length: len,
            k_param,
            c_param,
            t,
            n2_fraction,
            n2_bound_holds,
        })
    }
}

/// The table format stores each zero once; ordered pairs over positive
/// ordinates are doubled to compare against a count over |γ|, |γ′| ≤ T.
pub const CONJUGATE_FACTOR: f64 = 2.0;

/// Literal form factor printed alongside the standard one in reports.
pub const LITERAL_FORM_FACTOR_NOTE: &str =
    "1-(sin(pi u)/u)^2 as printed; the standard 1-(sin(pi u)/(pi u))^2 is used";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PairCorrelation {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    /// Ordered pairs of positive ordinates in the window.
    pub observed: u64,
    /// ∫_a^b (1 − (sin πu/πu)²) du · t log t / π.
    pub predicted: f64,
    pub form_factor_integral: f64,
    pub conjugate_factor: f64,
    /// `conjugate_factor · observed / predicted`.
    pub ratio: f64,
    pub unfolded: UnfoldedPairCorrelation,
}

/// Same statistic after rescaling each ordinate by the smooth counting
/// function, so that mean spacing is 1 at every height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct UnfoldedPairCorrelation {
    pub observed: u64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ZeroPartition {
    /// Indices (into the table) of zeros in sparse windows.
    pub n1: Vec<usize>,
    /// Indices of zeros in crowded windows.
    pub n2: Vec<usize>,
    pub interval_length: f64,
    pub k_param: f64,
    pub c_param: f64,
    pub t: f64,
    pub n2_fraction: f64,
    /// `|n2| ≤ N(t)/(200·k_param)`.
    pub n2_bound_holds: bool,
}

/// Parse a table from any reader. `source_id` labels errors and the table.
pub fn parse_zero_table<R: Read>(reader: R, source_id: &str) -> Result<ZeroTable> {
    let err = |source| LabError::Parse {
        path: source_id.to_string(),
        source,
    };
    let mut ordinates: Vec<f64> = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| LabError::Io {
            path: source_id.into(),
            source: e,
        })?;
        let text = line.trim();
        if text.starts_with('#') {
            continue;
        }
        if text.is_empty() {
            return Err(err(ParseError::BlankLine { line: lineno }));
        }
        let value: f64 = text.parse().map_err(|_| {
            err(ParseError::NonNumeric {
                line: lineno,
                text: text.to_string(),
            })
        })?;
        if !value.is_finite() {
            return Err(err(ParseError::NonNumeric {
                line: lineno,
                text: text.to_string(),
            }));
        }
        if value <= 0.0 {
            return Err(err(ParseError::NonPositive { line: lineno }));
        }
        match ordinates.last() {
            None if !(value > 14.0 && value < 14.3) => {
                return Err(err(ParseError::FirstOrdinate {
                    line: lineno,
                    value,
                }));
            }
            Some(&prev) if value <= prev => {
                return Err(err(ParseError::NotAscending { line: lineno }));
            }
            _ => {}
        }
        ordinates.push(value);
    }
    if ordinates.is_empty() {
        return Err(err(ParseError::Empty));
    }
    Ok(ZeroTable {
        ordinates,
        source_id: source_id.to_string(),
    })
}

pub fn load_zero_table(path: impl AsRef<Path>) -> Result<ZeroTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LabError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let id = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_zero_table(file, &id).map_err(|e| match e {
        LabError::Parse { source, .. } => LabError::Parse {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Riemann–von Mangoldt main term. `refined` selects
/// `(t/2π)log(t/2π) − t/2π + 7/8`; otherwise `t log t / 2π`.
pub fn riemann_von_mangoldt(t: f64, refined: bool) -> Result<f64> {
    if refined {
        if !(t > 0.0) {
            return Err(LabError::domain(format!(
                "refined N(t) needs t > 0, got {t}"
            )));
        }
        let u = t / (2.0 * PI);
        Ok(u * u.ln() - u + 0.875)
    } else {
        if !(t > 1.0) {
            return Err(LabError::domain(format!(
                "asymptotic N(t) needs t > 1, got {t}"
            )));
        }
        Ok(t * t.ln() / (2.0 * PI))
    }
}

/// `∫_a^b (1 − (sin πu/(πu))²) du`.
pub fn montgomery_form_factor_integral(a: f64, b: f64) -> Result<f64> {
    quadrature::integrate(
        |u| {
            let s = if u == 0.0 {
                1.0
            } else {
                (PI * u).sin() / (PI * u)
            };
            1.0 - s * s
        },
        a,
        b,
        1e-8,
    )
}

/// Count ordered pairs `(i, j)` with `zs[i] − zs[j] ∈ [lo, hi]`, `zs` sorted.
fn count_pairs_in_window(zs: &[f64], lo: f64, hi: f64) -> u64 {
    let mut total = 0u64;
    // For each i: j with zs[i]-hi <= zs[j] <= zs[i]-lo, a monotone window.
    let mut left = 0usize;
    let mut right = 0usize;
    for &g in zs {
        while left < zs.len() && zs[left] < g - hi {
            left += 1;
        }
        while right < zs.len() && zs[right] <= g - lo {
            right += 1;
        }
        if right > left {
            total += (right - left) as u64;
        }
    }
    total
}

/// Smooth zero-counting function used for unfolding.
fn smooth_count(t: f64) -> f64 {
    let u = t / (2.0 * PI);
    u * u.ln() - u + 0.875
}

fn unfolded_pair_correlation(zs: &[f64], a: f64, b: f64, integral: f64) -> UnfoldedPairCorrelation {
    let unfolded: Vec<f64> = zs.iter().map(|&g| smooth_count(g)).collect();
    let observed = count_pairs_in_window(&unfolded, a, b);
    // Ordered pairs over positive ordinates with unit mean spacing.
    let predicted = integral * zs.len() as f64;
    UnfoldedPairCorrelation {
        observed,
        predicted,
        ratio: if predicted > 0.0 {
            observed as f64 / predicted
        } else {
            0.0
        },
    }
}

/// Largest number of the sorted `points` inside any closed window of the
/// given length.
pub fn max_window_count(points: &[f64], length: f64) -> usize {
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..points.len() {
        while points[hi] - points[lo] > length {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIRST: [f64; 10] = [
        14.134725142,
        21.022039639,
        25.010857580,
        30.424876126,
        32.935061588,
        37.586178159,
        40.918719012,
        43.327073281,
        48.005150881,
        49.773832478,
    ];

    fn small() -> ZeroTable {
        ZeroTable::from_ordinates(FIRST.to_vec(), "first10").unwrap()
    }

    fn parse(text: &str) -> Result<ZeroTable> {
        parse_zero_table(text.as_bytes(), "inline")
    }

    #[test]
    fn parses_comments_and_values() {
        let t = parse("# header\n14.134725142\n21.022039639\n").unwrap();
        assert_eq!(t.ordinates()[0], 14.134725142);
        assert_eq!(t.len(), 2);
        assert_eq!(t.t_max(), 21.022039639);
    }

    #[test]
    fn empty_table_is_rejected() {
        let e = parse("").unwrap_err();
        assert!(e.to_string().contains("no ordinates"), "{e}");
        let e = parse("# only a comment\n").unwrap_err();
        assert!(e.to_string().contains("no ordinates"));
    }

    #[test]
    fn descending_line_is_named() {
        let e = ZeroTable::from_ordinates(vec![15.0, 14.0], "x").unwrap_err();
        assert!(e.to_string().contains("not ascending at line 2"), "{e}");
        let e = parse("14.1\n21.0\n20.0\n").unwrap_err();
        assert!(e.to_string().contains("not ascending at line 3"), "{e}");
    }

    #[test]
    fn non_numeric_line_is_named() {
        let e = parse("14.1\nabc\n").unwrap_err();
        assert!(matches!(
            e,
            LabError::Parse {
                source: ParseError::NonNumeric { line: 2, .. },
                ..
            }
        ));
    }

    #[test]
    fn blank_line_and_bad_first_ordinate() {
        assert!(matches!(
            parse("14.1\n\n21.0\n").unwrap_err(),
            LabError::Parse {
                source: ParseError::BlankLine { line: 2 },
                ..
            }
        ));
        assert!(matches!(
            parse("15.0\n").unwrap_err(),
            LabError::Parse {
                source: ParseError::FirstOrdinate { .. },
                ..
            }
        ));
    }

    #[test]
    fn counting() {
        let t = small();
        assert_eq!(t.count_zeros(14.0).unwrap(), 0);
        assert_eq!(t.count_zeros(15.0).unwrap(), 1);
        assert_eq!(t.count_zeros(FIRST[3]).unwrap(), 4);
        assert!(t.count_zeros(60.0).is_err());
    }

    #[test]
    fn count_is_right_continuous() {
        let t = small();
        for (i, &g) in FIRST.iter().enumerate() {
            assert_eq!(t.count_zeros(g).unwrap(), i + 1);
            assert_eq!(t.count_zeros(g - 1e-9).unwrap(), i);
        }
    }

    #[test]
    fn von_mangoldt_forms() {
        let v = riemann_von_mangoldt(100.0, false).unwrap();
        assert!((v - 100.0 * 100f64.ln() / (2.0 * PI)).abs() < 1e-12);
        assert!((v - 73.29).abs() < 0.01);
        let r = riemann_von_mangoldt(2.0 * PI, true).unwrap();
        assert!((r + 0.125).abs() < 1e-12);
        let r100 = riemann_von_mangoldt(100.0, true).unwrap();
        assert!((r100 - 29.0).abs() < 1.0);
        assert!(riemann_von_mangoldt(0.0, true).is_err());
        assert!(riemann_von_mangoldt(1.0, false).is_err());
    }

    #[test]
    fn pair_correlation_rejects_degenerate_window() {
        assert!(small().pair_correlation(49.0, 1.0, 1.0).is_err());
        assert!(small().pair_correlation(49.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn pair_correlation_brute_force_three_zeros() {
        let t = small();
        let (a, b) = (0.01, 5.0);
        let pc = t.pair_correlation(30.0, a, b).unwrap();
        // Exhaustive enumeration over the 3×3 ordered pairs (6 off-diagonal).
        let zs = &FIRST[..3];
        let (lo, hi) = (2.0 * PI * a / 30f64.ln(), 2.0 * PI * b / 30f64.ln());
        let mut brute = 0;
        for &g in zs {
            for &h in zs {
                let d = g - h;
                if d >= lo && d <= hi {
                    brute += 1;
                }
            }
        }
        assert_eq!(pc.observed, brute);
        assert_eq!(brute, 2);
    }

    #[test]
    fn form_factor_integral_half_to_one() {
        // Composite Simpson oracle with 20 000 panels.
        let n = 20_000;
        let (a, b) = (0.5, 1.0);
        let h = (b - a) / n as f64;
        let f = |u: f64| 1.0 - ((PI * u).sin() / (PI * u)).powi(2);
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        let oracle = s * h / 3.0;
        let got = montgomery_form_factor_integral(a, b).unwrap();
        assert!((got - oracle).abs() < 1e-10);
        assert!((got - 0.436).abs() < 1e-3, "{got}");
    }

    #[test]
    fn close_pairs_diagonal_only() {
        let t = small();
        assert_eq!(t.close_pair_count(t.t_max(), 1e-6).unwrap(), 10);
    }

    #[test]
    fn close_pairs_brute_force() {
        let t = small();
        let h = 2.0 / 30f64.ln();
        let zs = &FIRST[..3];
        let brute = zs
            .iter()
            .flat_map(|g| zs.iter().map(move |k| (g - k).abs()))
            .filter(|d| *d <= h)
            .count() as u64;
        assert_eq!(t.close_pair_count(30.0, 2.0).unwrap(), brute);
    }

    #[test]
    fn partition_with_huge_k_keeps_everything() {
        let t = small();
        let p = t.partition_zeros(t.t_max(), 1e6, 1.0).unwrap();
        assert!(p.n2.is_empty());
        assert_eq!(p.n1, (0..10).collect::<Vec<_>>());
        assert!(p.n2_bound_holds);
    }

    #[test]
    fn crowded_window_goes_to_n2() {
        // Ten ordinates within one window of length 1/log 100 ≈ 0.217.
        let mut zs: Vec<f64> = (0..10).map(|i| 50.0 + 0.01 * i as f64).collect();
        zs.extend([60.0, 70.0, 80.0, 100.0]);
        let t = ZeroTable::from_ordinates(zs, "synthetic").unwrap();
        let len = 1.0 / 100f64.ln();
        assert_eq!((50.0 / len).floor(), (50.09 / len).floor());
        let p = t.partition_zeros(100.0, 5.0, 1.0).unwrap();
        assert_eq!(p.n2, (0..10).collect::<Vec<_>>());
        assert_eq!(p.n1, vec![10, 11, 12, 13]);
        assert!(!p.n2_bound_holds);
    }

    #[test]
    fn max_window() {
        assert_eq!(max_window_count(&[0.0, 0.1, 0.2, 1.0], 0.2), 3);
        assert_eq!(max_window_count(&[], 1.0), 0);
    }
}
