//! Exponential sums over zero ordinates, the truncated explicit formula for
//! ψ(x) − x, and the detection and pigeonhole steps that turn a large value
//! of ψ(x) − x into a large zero sum at some height T.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::chebyshev_psi::prime_power_base;
use crate::error::{LabError, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::phase::cis_phase;
use crate::summation::ComplexSum;
use crate::zero_table::ZeroTable;

/// Threshold coefficient of the detection lemma, `8π`.
pub const DETECTION_COEFF: f64 = 8.0 * PI;
/// Threshold coefficient used when the detection step is reinvoked inside
/// the main reduction, `1/10`.
pub const REDUCTION_COEFF: f64 = 0.1;

/// Prefix sums `S(x, γ_i) = Σ_{j ≤ i} x^{iγ_j}` over a table.
#[derive(Debug, Clone)]
pub struct ExpSumSeries {
    x: f64,
    ordinates: Vec<f64>,
    partial: Vec<Complex64>,
}

impl ExpSumSeries {
    /// Prefix sums over all ordinates `≤ t`.
    pub fn new(table: &ZeroTable, x: f64, t: f64) -> Result<Self> {
        if !(x >= 1.0) || !x.is_finite() {
            return Err(LabError::domain(format!(
                "exponential sum needs x >= 1, got {x}"
            )));
        }
        if t > table.t_max() {
            return Err(LabError::OutOfRange {
                what: "t",
                value: t,
                lo: 0.0,
                hi: table.t_max(),
            });
        }
        let zs = table.up_to(t);
        let log_x = x.ln();
        let mut acc = ComplexSum::new();
        let partial = zs
            .iter()
            .map(|&g| {
                acc.add(cis_phase(g, log_x));
                acc.value()
            })
            .collect();
        Ok(Self {
            x,
            ordinates: zs.to_vec(),
            partial,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn partial(&self) -> &[Complex64] {
        &self.partial
    }

    /// `S(x, t)`; zero below the first ordinate.
    pub fn at(&self, t: f64) -> Complex64 {
        match self.ordinates.partition_point(|&g| g <= t) {
            0 => Complex64::new(0.0, 0.0),
            n => self.partial[n - 1],
        }
    }
}

/// `Σ_{0<γ≤t} x^{iγ}`.
pub fn exp_sum(table: &ZeroTable, x: f64, t: f64) -> Result<Complex64> {
    let series = ExpSumSeries::new(table, x, t)?;
    Ok(series.partial.last().copied().unwrap_or_default())
}

/// `Σ_{0<|γ|≤t} x^{iγ}/(½+iγ)` with each conjugate pair added explicitly.
pub fn paired_zero_sum(table: &ZeroTable, x: f64, t: f64) -> Complex64 {
    let log_x = x.ln();
    let mut acc = ComplexSum::new();
    for &g in table.up_to(t) {
        let w = cis_phase(g, log_x);
        acc.add(w / Complex64::new(0.5, g));
        acc.add(w.conj() / Complex64::new(0.5, -g));
    }
    acc.value()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct TruncatedFormula {
    pub x: f64,
    pub t_cut: f64,
    /// Approximation to ψ(x) − x.
    pub value: f64,
    /// `x^{1/2} (log x·t_cut)² / t_cut`.
    pub truncation_bound: f64,
    pub zeros_used: usize,
    pub empty_sum: bool,
    /// Set when x lies within 1e-6 of a prime power, where ψ jumps.
    pub near_prime_power: bool,
}

/// `−2 x^{1/2} Re Σ_{0<γ≤t_cut} x^{iγ}/(½+iγ) − log 2π − ½ log(1 − x^{−2})`.
pub fn truncated_psi_error(table: &ZeroTable, x: f64, t_cut: f64) -> Result<TruncatedFormula> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(LabError::domain(format!(
            "explicit formula needs x >= 2, got {x}"
        )));
    }
    if t_cut > table.t_max() {
        return Err(LabError::OutOfRange {
            what: "t_cut",
            value: t_cut,
            lo: 0.0,
            hi: table.t_max(),
        });
    }
    let log_x = x.ln();
    let zs = table.up_to(t_cut);
    let mut acc = ComplexSum::new();
    for &g in zs {
        acc.add(cis_phase(g, log_x) / Complex64::new(0.5, g));
    }
    let constant = -(TAU.ln()) - 0.5 * (-x.powi(-2)).ln_1p();
    let value = -2.0 * x.sqrt() * acc.value().re + constant;
    let n = x.round();
    let near_prime_power = (x - n).abs() <= 1e-6 && prime_power_base(n as u64).is_some();
    let truncation_bound = if t_cut > 0.0 {
        x.sqrt() * (x * t_cut).ln().powi(2) / t_cut
    } else {
        f64::INFINITY
    };
    Ok(TruncatedFormula {
        x,
        t_cut,
        value,
        truncation_bound,
        zeros_used: zs.len(),
        empty_sum: zs.is_empty(),
        near_prime_power,
    })
}

/// `1 − α² − β`.
pub fn delta_ab(alpha: f64, beta: f64) -> f64 {
    1.0 - alpha * alpha - beta
}

/// Height window `[X^{α(2πε)^{1/2}}, (log X) X^{1/2}]`.
pub fn t_window(big_x: f64, eps: f64, alpha: f64) -> (f64, f64) {
    let lo = big_x.powf(alpha * (TAU * eps).sqrt());
    let hi = big_x.ln() * big_x.sqrt();
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct TxReport {
    pub x: f64,
    pub big_x: f64,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub threshold_coeff: f64,
    /// Height window after intersection with the table range.
    pub window_lo: f64,
    pub window_hi: f64,
    /// Heights t in the window with `|S(x,t)| ≥ threshold_coeff·ε·β·N(t)`.
    pub t_set: IntervalUnion,
    /// `∫_{t_set} dt/t`.
    pub log_integral: f64,
    pub delta_ab: f64,
    /// `2πε·δ(α,β)·log X`.
    pub rhs: f64,
    /// Whether `log_integral ≥ rhs`; reported, not asserted.
    pub inequality_holds: bool,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(LabError::domain(format!(
            "{name} must lie in (0, 1), got {v}"
        )));
    }
    Ok(())
}

fn clipped_window(table: &ZeroTable, big_x: f64, eps: f64, alpha: f64) -> Result<(f64, f64)> {
    let (need_lo, need_hi) = t_window(big_x, eps, alpha);
    let hi = need_hi.min(table.t_max());
    if !(need_lo < hi) {
        return Err(LabError::TableTooShort {
            need_lo,
            need_hi,
            t_max: table.t_max(),
        });
    }
    Ok((need_lo, hi))
}

/// Exact T_x on `[lo, hi]`: both `|S|` and `N` are constant between
/// consecutive ordinates.
fn t_set_in_window(series: &ExpSumSeries, lo: f64, hi: f64, thr: f64) -> IntervalUnion {
    let zs = &series.ordinates;
    let mut idx = zs.partition_point(|&g| g <= lo);
    let mut start = lo;
    let mut out = Vec::new();
    loop {
        let end = zs.get(idx).copied().unwrap_or(f64::INFINITY).min(hi);
        let (s, n) = match idx {
            0 => (0.0, 0.0),
            i => (series.partial[i - 1].norm(), i as f64),
        };
        if end > start && s >= thr * n {
            out.push(Interval::new(start, end));
        }
        if end >= hi {
            break;
        }
        start = end;
        idx += 1;
    }
    IntervalUnion::from_sorted(out)
}

/// Resolve the detection set T_x for one x.
pub fn detect_tx(
    table: &ZeroTable,
    x: f64,
    big_x: f64,
    eps: f64,
    alpha: f64,
    beta: f64,
    threshold_coeff: f64,
) -> Result<TxReport> {
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    if !(eps > 0.0) {
        return Err(LabError::domain(format!("eps must be positive, got {eps}")));
    }
    if !(big_x > 1.0) {
        return Err(LabError::domain("big_x must exceed 1"));
    }
    let (lo, hi) = clipped_window(table, big_x, eps, alpha)?;
    let series = ExpSumSeries::new(table, x, hi)?;
    Ok(tx_from_series(
        &series,
        big_x,
        eps,
        alpha,
        beta,
        threshold_coeff,
        lo,
        hi,
    ))
}

#[allow(clippy::too_many_arguments)]
fn tx_from_series(
    series: &ExpSumSeries,
    big_x: f64,
    eps: f64,
    alpha: f64,
    beta: f64,
    threshold_coeff: f64,
    lo: f64,
    hi: f64,
) -> TxReport {
    let t_set = t_set_in_window(series, lo, hi, threshold_coeff * eps * beta);
    let log_integral = t_set.log_measure();
    let d = delta_ab(alpha, beta);
    let rhs = TAU * eps * d * big_x.ln();
    TxReport {
        x: series.x,
        big_x,
        eps,
        alpha,
        beta,
        threshold_coeff,
        window_lo: lo,
        window_hi: hi,
        t_set,
        log_integral,
        delta_ab: d,
        rhs,
        inequality_holds: log_integral >= rhs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PigeonholeReport {
    pub big_x: f64,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub threshold_coeff: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub grid_points: usize,
    pub t_star: f64,
    pub x0: Vec<f64>,
    pub xs_count: usize,
    /// `|x0| / |xs|`.
    pub fraction: f64,
    /// `ε·δ(α,β)`.
    pub benchmark: f64,
    /// `ε·δ(α,β)/100`.
    pub benchmark_reduced: f64,
}

/// Minimum size of the log-uniform candidate grid for T.
pub const PIGEONHOLE_GRID: usize = 1000;

/// Pick the height T in the window lying in the most sets T_x.
#[allow(clippy::too_many_arguments)]
pub fn pigeonhole_t(
    table: &ZeroTable,
    xs: &[f64],
    big_x: f64,
    eps: f64,
    alpha: f64,
    beta: f64,
    threshold_coeff: f64,
    grid_points: usize,
) -> Result<PigeonholeReport> {
    if xs.is_empty() {
        return Err(LabError::domain("pigeonhole needs at least one x"));
    }
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    if !(eps > 0.0) {
        return Err(LabError::domain(format!("eps must be positive, got {eps}")));
    }
    let (lo, hi) = clipped_window(table, big_x, eps, alpha)?;
    let sets: Vec<IntervalUnion> = xs
        .par_iter()
        .map(|&x| {
            let series = ExpSumSeries::new(table, x, hi)?;
            Ok(tx_from_series(&series, big_x, eps, alpha, beta, threshold_coeff, lo, hi).t_set)
        })
        .collect::<Result<_>>()?;
    let n = grid_points.max(PIGEONHOLE_GRID);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut best = (0usize, lo);
    for i in 0..n {
        let t = if i + 1 == n {
            hi
        } else {
            (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()
        };
        let count = sets.iter().filter(|s| s.contains(t)).count();
        if count > best.0 {
            best = (count, t);
        }
    }
    let t_star = best.1;
    let x0: Vec<f64> = xs
        .iter()
        .zip(&sets)
        .filter(|(_, s)| s.contains(t_star))
        .map(|(&x, _)| x)
        .collect();
    let bench = eps * delta_ab(alpha, beta);
    Ok(PigeonholeReport {
        big_x,
        eps,
        alpha,
        beta,
        threshold_coeff,
        window_lo: lo,
        window_hi: hi,
        grid_points: n,
        t_star,
        fraction: x0.len() as f64 / xs.len() as f64,
        x0,
        xs_count: xs.len(),
        benchmark: bench,
        benchmark_reduced: bench / 100.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIRST: [f64; 10] = [
        14.134_725_142,
        21.022_039_639,
        25.010_857_580,
        30.424_876_126,
        32.935_061_588,
        37.586_178_159,
        40.918_719_012,
        43.327_073_281,
        48.005_150_881,
        49.773_832_478,
    ];

    fn small() -> ZeroTable {
        ZeroTable::from_ordinates(FIRST.to_vec(), "first ten").unwrap()
    }

    #[test]
    fn sum_at_one_counts() {
        let t = small();
        let s = exp_sum(&t, 1.0, 40.0).unwrap();
        assert_eq!(s, Complex64::new(6.0, 0.0));
        assert_eq!(exp_sum(&t, 5.0, 14.0).unwrap(), Complex64::new(0.0, 0.0));
        assert!(exp_sum(&t, 0.5, 20.0).is_err());
    }

    #[test]
    fn sum_at_e_two_pi_matches_direct() {
        let t = small();
        let x = TAU.exp();
        let got = exp_sum(&t, x, 30.0).unwrap();
        let want: Complex64 = FIRST[..3]
            .iter()
            .map(|&g| {
                let th = TAU * (g - g.floor());
                Complex64::new(th.cos(), th.sin())
            })
            .sum();
        assert!((got - want).norm() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn consecutive_partials_differ_by_unit() {
        let t = small();
        let s = ExpSumSeries::new(&t, 1234.5, t.t_max()).unwrap();
        for w in s.partial().windows(2) {
            assert!(((w[1] - w[0]).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_formula_is_constants() {
        let r = truncated_psi_error(&small(), 100.0, 14.0).unwrap();
        assert!(r.empty_sum);
        assert!((r.value + 1.83783).abs() < 1e-5, "{}", r.value);
    }

    #[test]
    fn prime_power_warning() {
        assert!(
            truncated_psi_error(&small(), 8.0, 40.0)
                .unwrap()
                .near_prime_power
        );
        assert!(
            !truncated_psi_error(&small(), 8.5, 40.0)
                .unwrap()
                .near_prime_power
        );
    }

    #[test]
    fn conjugate_pairs_cancel_imaginary_part() {
        let z = paired_zero_sum(&small(), 777.7, 50.0);
        assert!(z.im.abs() < 1e-12, "{}", z.im);
    }

    #[test]
    fn x_one_fills_window_iff_threshold_small() {
        let zs: Vec<f64> = (0..4000).map(|i| 14.1 + 0.5 * i as f64).collect();
        let t = ZeroTable::from_ordinates(zs, "grid").unwrap();
        let (big_x, eps, alpha) = (1e8, 0.01, 0.9);
        let full = detect_tx(&t, 1.0, big_x, eps, alpha, 0.5, 100.0).unwrap();
        assert_eq!(full.t_set.component_count, 1);
        assert!((full.t_set.total_measure - (full.window_hi - full.window_lo)).abs() < 1e-9);
        assert!(full.window_lo > 14.1);
        let none = detect_tx(&t, 1.0, big_x, eps, alpha, 0.5, 400.1).unwrap();
        assert!(none.t_set.is_empty());
        assert_eq!(none.log_integral, 0.0);
    }

    #[test]
    fn short_table_is_reported() {
        let e = detect_tx(&small(), 3.0, 1e6, 0.05, 0.9, 0.1, DETECTION_COEFF).unwrap_err();
        assert!(matches!(e, LabError::TableTooShort { .. }), "{e}");
    }

    #[test]
    fn pigeonhole_identical_xs() {
        let zs: Vec<f64> = (0..4000)
            .map(|i| 14.1 + 0.5 * i as f64 + (i as f64).sqrt())
            .collect();
        let t = ZeroTable::from_ordinates(zs, "grid").unwrap();
        let xs = vec![1500.5; 4];
        let r = pigeonhole_t(&t, &xs, 1e4, 0.01, 0.5, 0.5, 0.1, 1000).unwrap();
        assert!(r.x0.is_empty() || r.x0.len() == 4);
        assert!(pigeonhole_t(&t, &[], 1e4, 0.01, 0.5, 0.5, 0.1, 1000).is_err());
    }
}
