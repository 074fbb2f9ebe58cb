//! Exact Chebyshev function ψ(x) = Σ_{n≤x} Λ(n) and statistics of the
//! error term ψ(x) − x.
//!
//! ψ is a right-continuous step function with a jump of `log p` at every
//! prime power `p^k`. Everything here works piecewise on the intervals
//! between consecutive jumps, where ψ is constant: measures of exceptional
//! sets come from exact threshold crossings, and moments integrate
//! `|c − x|^k` in closed form.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::summation::CompensatedSum;

/// Λ(n): `log p` when `n = p^k`, else 0.
pub fn mangoldt(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(LabError::domain("mangoldt(0) is undefined"));
    }
    Ok(prime_power_base(n).map_or(0.0, |p| (p as f64).ln()))
}

/// The prime `p` if `n = p^k` with `k ≥ 1`.
pub fn prime_power_base(n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    let p = smallest_prime_factor(n);
    let mut m = n;
    while m.is_multiple_of(p) {
        m /= p;
    }
    (m == 1).then_some(p)
}

fn smallest_prime_factor(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return d;
        }
        d += 2;
    }
    n
}

/// Sieve parameters for [`build_psi_series_with`].
#[derive(Debug, Clone, Copy)]
pub struct SieveConfig {
    pub segment_len: u64,
    /// Upper bound on the memory the assembled series may use.
    pub memory_budget_bytes: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            segment_len: 1 << 18,
            memory_budget_bytes: 2 << 30,
        }
    }
}

/// Primes up to `limit` by a segmented sieve of Eratosthenes. Segments are
/// sieved independently and concatenated in index order.
pub fn primes_up_to(limit: u64, segment_len: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let root = (limit as f64).sqrt() as u64 + 1;
    let mut small = vec![true; (root + 1) as usize];
    small[0] = false;
    small[1] = false;
    let mut i = 2usize;
    while i * i <= root as usize {
        if small[i] {
            let mut j = i * i;
            while j <= root as usize {
                small[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    let base: Vec<u64> = (2..=root).filter(|&p| small[p as usize]).collect();
    let seg = segment_len.max(1024);
    let n_segments = (limit - 1).div_ceil(seg);
    let chunks: Vec<Vec<u64>> = (0..n_segments)
        .into_par_iter()
        .map(|s| {
            let lo = 2 + s * seg;
            let hi = (lo + seg - 1).min(limit);
            let mut mark = vec![true; (hi - lo + 1) as usize];
            for &p in &base {
                if p * p > hi {
                    break;
                }
                let first = (lo.div_ceil(p) * p).max(p * p);
                let mut m = first;
                while m <= hi {
                    mark[(m - lo) as usize] = false;
                    m += p;
                }
            }
            mark.iter()
                .enumerate()
                .filter(|(_, &keep)| keep)
                .map(|(off, _)| lo + off as u64)
                .collect()
        })
        .collect();
    chunks.concat()
}

/// ψ as a step function on `[1, limit_x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSeries {
    limit_x: u64,
    jump_points: Vec<u64>,
    jump_values: Vec<f64>,
    /// ψ at each jump point (inclusive).
    cumulative: Vec<f64>,
}

pub fn build_psi_series(limit_x: u64) -> Result<PsiSeries> {
    build_psi_series_with(limit_x, SieveConfig::default())
}

pub fn build_psi_series_with(limit_x: u64, config: SieveConfig) -> Result<PsiSeries> {
    if limit_x == 0 {
        return Err(LabError::domain("psi series needs limit_x >= 1"));
    }
    // ~ x/log x jumps, 24 bytes each, plus the sieve segment.
    let est_jumps = if limit_x < 100 {
        100.0
    } else {
        1.3 * limit_x as f64 / (limit_x as f64).ln()
    };
    let est_bytes = est_jumps * 24.0 + config.segment_len as f64 + (limit_x as f64).sqrt() * 9.0;
    if est_bytes > config.memory_budget_bytes as f64 {
        return Err(LabError::Resource(format!(
            "psi series to {limit_x} needs ~{:.1} MiB, budget is {:.1} MiB; lower --limit or raise the memory budget",
            est_bytes / (1 << 20) as f64,
            config.memory_budget_bytes as f64 / (1 << 20) as f64
        )));
    }
    let primes = primes_up_to(limit_x, config.segment_len);
    let mut jumps: Vec<(u64, f64)> = Vec::with_capacity(primes.len() + 64);
    for &p in &primes {
        let lp = (p as f64).ln();
        let mut q = p;
        loop {
            jumps.push((q, lp));
            match q.checked_mul(p) {
                Some(next) if next <= limit_x => q = next,
                _ => break,
            }
        }
    }
    jumps.sort_unstable_by_key(|j| j.0);
    let mut acc = CompensatedSum::new();
    let mut cumulative = Vec::with_capacity(jumps.len());
    for &(_, v) in &jumps {
        acc.add(v);
        cumulative.push(acc.value());
    }
    let (jump_points, jump_values) = jumps.into_iter().unzip();
    Ok(PsiSeries {
        limit_x,
        jump_points,
        jump_values,
        cumulative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ErrorSample {
    pub x: f64,
    pub psi_x: f64,
    /// ψ(x) − x.
    pub err: f64,
    /// err / (x^{1/2} (log x)^2).
    pub normalized: f64,
}

impl ErrorSample {
    /// `|err|·8π / (x^{1/2}(log x)^2)`.
    pub fn schoenfeld_ratio(&self) -> f64 {
        self.normalized.abs() * 8.0 * PI
    }
}

fn power_log_scale(x: f64) -> f64 {
    let l = x.ln();
    x.sqrt() * l * l
}

impl PsiSeries {
    pub fn limit_x(&self) -> u64 {
        self.limit_x
    }

    pub fn jump_points(&self) -> &[u64] {
        &self.jump_points
    }

    pub fn jump_values(&self) -> &[f64] {
        &self.jump_values
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// ψ(⌊x⌋); zero below 2.
    pub fn psi(&self, x: f64) -> f64 {
        let idx = self.jump_points.partition_point(|&p| (p as f64) <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// ψ at an integer.
    pub fn psi_at(&self, n: u64) -> f64 {
        let idx = self.jump_points.partition_point(|&p| p <= n);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    fn check_x(&self, what: &'static str, x: f64, lo: f64) -> Result<()> {
        if !(x >= lo && x <= self.limit_x as f64) {
            return Err(LabError::OutOfRange {
                what,
                value: x,
                lo,
                hi: self.limit_x as f64,
            });
        }
        Ok(())
    }

    fn sample_with_psi(x: f64, psi_x: f64) -> ErrorSample {
        let err = psi_x - x;
        ErrorSample {
            x,
            psi_x,
            err,
            normalized: err / power_log_scale(x),
        }
    }

    pub fn error_term(&self, x: f64) -> Result<ErrorSample> {
        self.check_x("x", x, 2.0)?;
        Ok(Self::sample_with_psi(x, self.psi(x)))
    }

    /// Maximal Schoenfeld ratio over jump points in `[lo, hi]`, checking
    /// both ψ at the jump and its left limit.
    pub fn schoenfeld_scan(&self, lo: f64, hi: f64) -> Result<SchoenfeldScan> {
        self.check_x("lo", lo, 2.0)?;
        self.check_x("hi", hi, lo)?;
        let start = self.jump_points.partition_point(|&p| (p as f64) < lo);
        let end = self.jump_points.partition_point(|&p| (p as f64) <= hi);
        let mut worst: Option<ErrorSample> = None;
        for i in start..end {
            let x = self.jump_points[i] as f64;
            let left = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
            for psi_x in [self.cumulative[i], left] {
                let s = Self::sample_with_psi(x, psi_x);
                if worst.is_none_or(|w| s.normalized.abs() > w.normalized.abs()) {
                    worst = Some(s);
                }
            }
        }
        let worst = worst.ok_or_else(|| LabError::domain("no jump points in range"))?;
        Ok(SchoenfeldScan {
            lo,
            hi,
            jump_points_checked: end - start,
            max_ratio: worst.schoenfeld_ratio(),
            argmax: worst,
        })
    }

    /// Pieces `[u, v]` of `[lo, hi]` on which ψ is constant, with that value.
    fn pieces(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let start = self.jump_points.partition_point(|&p| (p as f64) <= lo);
        let end = self.jump_points.partition_point(|&p| (p as f64) < hi);
        let first_val = if start == 0 {
            0.0
        } else {
            self.cumulative[start - 1]
        };
        let mut breaks = Vec::with_capacity(end - start + 2);
        breaks.push((lo, first_val));
        for i in start..end {
            breaks.push((self.jump_points[i] as f64, self.cumulative[i]));
        }
        breaks.push((hi, f64::NAN));
        (0..breaks.len() - 1).map(move |i| (breaks[i].0, breaks[i + 1].0, breaks[i].1))
    }

    /// `{x ∈ [lo, hi] : |ψ(x) − x| ≥ threshold(x)}` as an exact interval
    /// union, with one witness per component.
    fn exceptional_set(
        &self,
        lo: f64,
        hi: f64,
        thr: &Threshold,
    ) -> (IntervalUnion, Vec<ErrorSample>) {
        let mut parts: Vec<Interval> = Vec::new();
        let mut witnesses: Vec<ErrorSample> = Vec::new();
        let mut best: Option<ErrorSample> = None;
        let mut last_hi = f64::NEG_INFINITY;
        for (u, v, c) in self.pieces(lo, hi) {
            if v <= u {
                continue;
            }
            for iv in piece_superlevel(u, v, c, thr) {
                if iv.lo > last_hi + crate::interval::MERGE_TOL {
                    if let Some(b) = best.take() {
                        witnesses.push(b);
                    }
                }
                last_hi = iv.hi;
                // The right end of a piece carries the left limit of ψ there.
                let right_x = if iv.hi == v && v < hi {
                    iv.hi.next_down()
                } else {
                    iv.hi
                };
                for (x, psi_x) in [(iv.lo, c), (right_x, c)] {
                    let mut s = Self::sample_with_psi(x, psi_x);
                    s.normalized = s.err / thr.scale(x);
                    if best.is_none_or(|b| s.normalized.abs() > b.normalized.abs()) {
                        best = Some(s);
                    }
                }
                parts.push(iv);
            }
        }
        if let Some(b) = best {
            witnesses.push(b);
        }
        // Report witnesses with the standard x^{1/2}(log x)^2 normalization.
        for w in &mut witnesses {
            w.normalized = w.err / power_log_scale(w.x);
        }
        (IntervalUnion::from_sorted(parts), witnesses)
    }

    /// Exact measure of `{x ∈ [x_lo, x_hi] : |ψ(x) − x| ≥ eps·x^{1/2}(log x)^2}`
    /// plus a greedy `x_hi^{sep_exponent}`-separated subset of witnesses.
    pub fn large_value_scan(
        &self,
        x_lo: f64,
        x_hi: f64,
        eps: f64,
        sep_exponent: f64,
    ) -> Result<LargeValueScan> {
        if !(eps >= 0.0) {
            return Err(LabError::domain(format!("eps must be >= 0, got {eps}")));
        }
        if !(0.0..=1.0).contains(&sep_exponent) {
            return Err(LabError::domain("sep_exponent must lie in [0, 1]"));
        }
        self.check_x("x_lo", x_lo, 2.0)?;
        self.check_x("x_hi", x_hi, x_lo)?;
        if x_hi <= x_lo {
            return Err(LabError::domain("large value scan needs x_lo < x_hi"));
        }
        let thr = Threshold::PowerLog { coeff: eps };
        let (set, witnesses) = self.exceptional_set(x_lo, x_hi, &thr);
        let spacing = x_hi.powf(sep_exponent);
        let separated_subset = greedy_separated(witnesses.iter().map(|w| w.x), spacing);
        Ok(LargeValueScan {
            x_lo,
            x_hi,
            eps,
            sep_exponent,
            spacing,
            measure_estimate: set.total_measure,
            component_count: set.component_count,
            witnesses,
            separated_subset,
        })
    }

    /// `∫_2^{limit_x} |ψ(x) − x|^k dx` in closed form per piece, against
    /// `(2k²/π)^k · limit_x^{k+1}`.
    pub fn wintner_moment(&self, limit_x: f64, k: u32) -> Result<WintnerMoment> {
        if k == 0 || k % 2 == 1 {
            return Err(LabError::domain(format!(
                "moment order must be even and positive, got {k}"
            )));
        }
        self.check_x("limit_x", limit_x, 2.0)?;
        let kk = k as i32;
        let mut acc = CompensatedSum::new();
        for (u, v, c) in self.pieces(2.0, limit_x) {
            // ∫_u^v (x − c)^k dx for even k.
            acc.add(((v - c).powi(kk + 1) - (u - c).powi(kk + 1)) / (kk + 1) as f64);
        }
        let moment = acc.value();
        let kf = k as f64;
        let log_bound = kf * (2.0 * kf * kf / PI).ln() + (kf + 1.0) * limit_x.ln();
        let bound = log_bound.exp();
        Ok(WintnerMoment {
            limit_x,
            k,
            moment,
            bound,
            ratio: (moment.ln() - log_bound).exp(),
            normalized: moment / limit_x.powi(kk),
        })
    }

    /// `∫ dx/x` over `{x ∈ [16, limit_x] : |ψ(x) − x| ≥ c·x^{1/2}(log log x)^2}`.
    pub fn log_measure_exceptional(&self, limit_x: f64, c: f64) -> Result<f64> {
        if !(c >= 0.0) {
            return Err(LabError::domain("c must be >= 0"));
        }
        self.check_x("limit_x", limit_x, 16.0)?;
        let (set, _) = self.exceptional_set(16.0, limit_x, &Threshold::LogLog { coeff: c });
        Ok(set.log_measure())
    }

    /// Normalized histogram of `(ψ(e^u) − e^u)/e^{u/2}` on a uniform u-grid
    /// over `[log 2, u_max]`.
    pub fn empirical_distribution(&self, u_max: f64, bins: usize) -> Result<Histogram> {
        let u_min = 2f64.ln();
        if !(u_max > u_min) {
            return Err(LabError::domain(format!(
                "u_max must exceed log 2, got {u_max}"
            )));
        }
        if bins == 0 {
            return Err(LabError::domain("bins must be >= 1"));
        }
        if u_max.exp() > self.limit_x as f64 * (1.0 + 1e-12) {
            return Err(LabError::OutOfRange {
                what: "exp(u_max)",
                value: u_max.exp(),
                lo: 2.0,
                hi: self.limit_x as f64,
            });
        }
        let points = HISTOGRAM_GRID_POINTS.max(bins);
        let step = (u_max - u_min) / (points - 1) as f64;
        let values: Vec<f64> = (0..points)
            .map(|i| self.normalized_at_log(u_min + i as f64 * step))
            .collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0
        };
        let mut counts = vec![0u64; bins];
        for &v in &values {
            counts[bin_index(v, lo, width, bins)] += 1;
        }
        let mass = counts.iter().map(|&c| c as f64 / points as f64).collect();
        Ok(Histogram {
            u_min,
            u_max,
            grid_points: points,
            grid_density: (points - 1) as f64 / (u_max - u_min),
            lo,
            bin_width: width,
            counts,
            mass,
        })
    }

    /// `(ψ(e^u) − e^u)/e^{u/2}` with e^u snapped to an integer when within
    /// rounding of one.
    pub fn normalized_at_log(&self, u: f64) -> f64 {
        let mut x = u.exp();
        let r = x.round();
        if (x - r).abs() <= 1e-9 * x {
            x = r;
        }
        (self.psi(x) - x) / x.sqrt()
    }

    /// Write the `x,psi` checkpoint CSV (one row per jump point).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# limit_x={}", self.limit_x)?;
        writeln!(out, "x,psi")?;
        for (x, psi) in self.jump_points.iter().zip(&self.cumulative) {
            writeln!(out, "{x},{psi}")?;
        }
        Ok(())
    }

    /// Read a checkpoint CSV. Jump sizes are recomputed from the jump
    /// positions; ψ values are taken verbatim.
    pub fn read_csv<R: Read>(input: R) -> Result<PsiSeries> {
        let bad = |msg: String| LabError::domain(format!("psi cache: {msg}"));
        let mut lines = BufReader::new(input).lines();
        let mut next = || -> Result<Option<String>> {
            lines.next().transpose().map_err(|e| LabError::Io {
                path: "psi cache".into(),
                source: e,
            })
        };
        let header = next()?.ok_or_else(|| bad("empty file".into()))?;
        let limit_x: u64 = header
            .strip_prefix("# limit_x=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad(format!("bad header {header:?}")))?;
        if next()?.as_deref() != Some("x,psi") {
            return Err(bad("missing x,psi column header".into()));
        }
        let mut series = PsiSeries {
            limit_x,
            jump_points: Vec::new(),
            jump_values: Vec::new(),
            cumulative: Vec::new(),
        };
        let mut lineno = 2;
        while let Some(line) = next()? {
            lineno += 1;
            let (xs, ps) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("line {lineno}: expected x,psi")))?;
            let x: u64 = xs
                .parse()
                .map_err(|_| bad(format!("line {lineno}: bad x")))?;
            let psi: f64 = ps
                .parse()
                .map_err(|_| bad(format!("line {lineno}: bad psi")))?;
            let p = prime_power_base(x)
                .ok_or_else(|| bad(format!("line {lineno}: {x} is not a prime power")))?;
            if series.jump_points.last().is_some_and(|&prev| prev >= x) || x > limit_x {
                return Err(bad(format!("line {lineno}: jump points out of order")));
            }
            series.jump_points.push(x);
            series.jump_values.push((p as f64).ln());
            series.cumulative.push(psi);
        }
        Ok(series)
    }
}

const HISTOGRAM_GRID_POINTS: usize = 20_000;

fn bin_index(v: f64, lo: f64, width: f64, bins: usize) -> usize {
    (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1)
}

/// Greedy left-to-right selection with pairwise gaps ≥ `spacing`.
pub fn greedy_separated(xs: impl IntoIterator<Item = f64>, spacing: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = xs.into_iter().collect();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for x in sorted {
        if out.last().is_none_or(|&l| x - l >= spacing) {
            out.push(x);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SchoenfeldScan {
    pub lo: f64,
    pub hi: f64,
    pub jump_points_checked: usize,
    pub max_ratio: f64,
    pub argmax: ErrorSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct LargeValueScan {
    pub x_lo: f64,
    pub x_hi: f64,
    pub eps: f64,
    pub sep_exponent: f64,
    /// Required gap `x_hi^{sep_exponent}` of the separated subset.
    pub spacing: f64,
    pub measure_estimate: f64,
    pub component_count: usize,
    /// One sample per component of the exceptional set, at its largest
    /// normalized error among component endpoints.
    pub witnesses: Vec<ErrorSample>,
    pub separated_subset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct WintnerMoment {
    pub limit_x: f64,
    pub k: u32,
    pub moment: f64,
    pub bound: f64,
    pub ratio: f64,
    /// moment / limit_x^k.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Histogram {
    pub u_min: f64,
    pub u_max: f64,
    pub grid_points: usize,
    /// Grid points per unit of u.
    pub grid_density: f64,
    /// Left edge of the first bin.
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn bin_of(&self, v: f64) -> usize {
        bin_index(v, self.lo, self.bin_width, self.counts.len())
    }
}

/// Threshold profiles `coeff·g(x)` for the exceptional-set scans. Both `g`
/// are increasing; `g'` is monotone on each side of `inflection`.
#[derive(Debug, Clone, Copy)]
enum Threshold {
    /// g(x) = x^{1/2}(log x)^2, g' increasing below e^{2√2}, decreasing above.
    PowerLog { coeff: f64 },
    /// g(x) = x^{1/2}(log log x)^2 on x ≥ 16, g' decreasing.
    LogLog { coeff: f64 },
}

impl Threshold {
    fn scale(&self, x: f64) -> f64 {
        match self {
            Threshold::PowerLog { .. } => power_log_scale(x),
            Threshold::LogLog { .. } => {
                let m = x.ln().ln();
                x.sqrt() * m * m
            }
        }
    }

    fn value(&self, x: f64) -> f64 {
        match *self {
            Threshold::PowerLog { coeff } | Threshold::LogLog { coeff } => coeff * self.scale(x),
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match *self {
            Threshold::PowerLog { coeff } => {
                let l = x.ln();
                coeff * (l * l + 4.0 * l) / (2.0 * x.sqrt())
            }
            Threshold::LogLog { coeff } => {
                let l = x.ln();
                let m = l.ln();
                coeff * (0.5 * m * m + 2.0 * m / l) / x.sqrt()
            }
        }
    }

    fn inflection(&self) -> Option<f64> {
        match self {
            Threshold::PowerLog { .. } => Some((2.0 * std::f64::consts::SQRT_2).exp()),
            Threshold::LogLog { .. } => None,
        }
    }
}

const BISECT_TOL: f64 = 1e-9;

/// Root of a monotone function with a sign change on `[a, b]`.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa_nonneg = f(a) >= 0.0;
    while b - a > BISECT_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) >= 0.0) == fa_nonneg {
            a = m;
        } else {
            b = m;
        }
    }
    if fa_nonneg {
        a
    } else {
        b
    }
}

/// Superlevel set `{h ≥ 0}` of a monotone `h` on `[a, b]`.
fn monotone_superlevel(h: &impl Fn(f64) -> f64, a: f64, b: f64, out: &mut Vec<Interval>) {
    let (ha, hb) = (h(a) >= 0.0, h(b) >= 0.0);
    match (ha, hb) {
        (true, true) => out.push(Interval::new(a, b)),
        (false, false) => {}
        (true, false) => out.push(Interval::new(a, bisect(h, a, b))),
        (false, true) => out.push(Interval::new(bisect(h, a, b), b)),
    }
}

/// Superlevel set of `h` on `[a, b]` where `h'` is monotone: split at the
/// critical point if `h'` changes sign, then treat each side as monotone.
fn unimodal_superlevel(
    h: &impl Fn(f64) -> f64,
    dh: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    out: &mut Vec<Interval>,
) {
    let (da, db) = (dh(a), dh(b));
    if (da >= 0.0) == (db >= 0.0) {
        monotone_superlevel(h, a, b, out);
        return;
    }
    let crit = bisect(dh, a, b);
    let mut tmp = Vec::new();
    monotone_superlevel(h, a, crit, &mut tmp);
    monotone_superlevel(h, crit, b, &mut tmp);
    merge_into(tmp, out);
}

fn merge_into(parts: Vec<Interval>, out: &mut Vec<Interval>) {
    for iv in parts {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi + crate::interval::MERGE_TOL => {
                last.hi = last.hi.max(iv.hi)
            }
            _ => out.push(iv),
        }
    }
}

/// `{x ∈ [u, v] : |c − x| ≥ thr(x)}` for constant `c`.
fn piece_superlevel(u: f64, v: f64, c: f64, thr: &Threshold) -> Vec<Interval> {
    let mut out = Vec::new();
    // Left of c: c − x − thr(x) is strictly decreasing.
    if u < c {
        let h = |x: f64| c - x - thr.value(x);
        monotone_superlevel(&h, u, v.min(c), &mut out);
    }
    // Right of c: x − c − thr(x), with derivative 1 − thr'(x) monotone on
    // each side of the inflection point.
    if v > c {
        let a = u.max(c);
        let h = |x: f64| x - c - thr.value(x);
        let dh = |x: f64| 1.0 - thr.deriv(x);
        let mut parts = Vec::new();
        match thr.inflection() {
            Some(s) if a < s && s < v => {
                unimodal_superlevel(&h, &dh, a, s, &mut parts);
                unimodal_superlevel(&h, &dh, s, v, &mut parts);
            }
            _ => unimodal_superlevel(&h, &dh, a, v, &mut parts),
        }
        merge_into(parts, &mut out);
    }
    out
}
