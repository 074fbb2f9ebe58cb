//! Concentration of points into a shifted rank-1 Bohr set, Hölder
//! amplification to rank k, and the end-to-end pipeline that chains every
//! step from large values of ψ(x) − x down to the final inequality.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::bohr_geometry::{
    average_measure_experiment, interval_extension_check, AverageParams, BohrSpec,
};
use crate::chebyshev_psi::{ErrorSample, PsiSeries};
use crate::error::{LabError, Result};
use crate::explicit_formula::{delta_ab, pigeonhole_t, REDUCTION_COEFF};
use crate::phase::{dist_to_int, e_turns, frac};
use crate::summation::ComplexSum;
use crate::zero_table::ZeroTable;

/// Default absolute constant C in `ε < δ/C` and `ρ = ε/C`.
pub const DEFAULT_C: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ConcentrationInstance {
    pub points: Vec<f64>,
    pub t: f64,
    pub freq: f64,
    pub delta: f64,
    pub eps: f64,
    pub c_const: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct HypothesisFlags {
    /// `α T ≥ 2/δ`.
    pub alpha_cond: bool,
    /// `|Σ e(α x_j)| ≥ δ N`.
    pub large_sum: bool,
    /// `ε < δ/C`.
    pub eps_cond: bool,
    pub alpha_t: f64,
    pub sum_modulus: f64,
}

impl HypothesisFlags {
    pub fn all(&self) -> bool {
        self.alpha_cond && self.large_sum && self.eps_cond
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ConcentrationResult {
    pub beta_star: f64,
    /// Points with `‖α x_j + β*‖ ≤ ε`.
    pub achieved: usize,
    /// `2ε(1 + δ/16) N`.
    pub threshold: f64,
    pub threshold_met: bool,
    pub flags: HypothesisFlags,
    /// True when some hypothesis failed and the search ran for exploration.
    pub report_only: bool,
    pub refined: bool,
    pub candidates_evaluated: usize,
    /// `achieved / (2εN)`.
    pub density_ratio: f64,
}

impl ConcentrationInstance {
    pub fn flags(&self) -> HypothesisFlags {
        let n = self.points.len() as f64;
        let mut acc = ComplexSum::new();
        for &x in &self.points {
            acc.add(e_turns(self.freq * x));
        }
        let sum_modulus = acc.value().norm();
        let alpha_t = self.freq * self.t;
        HypothesisFlags {
            alpha_cond: alpha_t >= 2.0 / self.delta,
            large_sum: sum_modulus >= self.delta * n,
            eps_cond: self.eps < self.delta / self.c_const,
            alpha_t,
            sum_modulus,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(LabError::domain("concentration needs at least one point"));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(LabError::domain(format!(
                "eps must lie in (0, 1/2), got {}",
                self.eps
            )));
        }
        if !(self.delta > 0.0) || !(self.c_const > 0.0) || !(self.t > 0.0) {
            return Err(LabError::domain(
                "concentration needs delta, C and T positive",
            ));
        }
        if !self.freq.is_finite() {
            return Err(LabError::domain("frequency must be finite"));
        }
        Ok(())
    }
}

/// Sorted fractional parts `{α x_j}` for window counting.
struct CircularCounter {
    u: Vec<f64>,
    eps: f64,
}

impl CircularCounter {
    fn new(points: &[f64], freq: f64, eps: f64) -> Self {
        let mut u: Vec<f64> = points.iter().map(|&x| frac(freq * x)).collect();
        u.sort_by(f64::total_cmp);
        Self { u, eps }
    }

    fn below(&self, v: f64) -> usize {
        self.u.partition_point(|&w| w <= v)
    }

    fn strictly_below(&self, v: f64) -> usize {
        self.u.partition_point(|&w| w < v)
    }

    /// Points with `u` within `eps` of `c` on the circle.
    fn count(&self, beta: f64) -> usize {
        let c = frac(-beta);
        let (lo, hi) = (c - self.eps, c + self.eps);
        let mut n = self.below(hi.min(1.0)) - self.strictly_below(lo.max(0.0));
        if lo < 0.0 {
            n += self.u.len() - self.strictly_below(lo + 1.0);
        }
        if hi > 1.0 {
            n += self.below(hi - 1.0);
        }
        n
    }
}

fn best_phase(
    counter: &CircularCounter,
    candidates: impl Iterator<Item = f64>,
) -> (f64, usize, usize) {
    let mut best = (0.0, 0usize);
    let mut seen = 0;
    for b in candidates {
        seen += 1;
        let n = counter.count(b);
        if n > best.1 || (n == best.1 && b < best.0) {
            best = (b, n);
        }
    }
    (best.0, best.1, seen)
}

fn grid(step: f64) -> impl Iterator<Item = f64> {
    let n = (1.0 / step).ceil() as usize;
    (0..n).map(move |i| i as f64 * step).filter(|&b| b < 1.0)
}

/// Find the shift β whose rank-1 Bohr set `‖α x + β‖ ≤ ε` holds the most
/// points.
pub fn concentrate(instance: &ConcentrationInstance) -> Result<ConcentrationResult> {
    instance.validate()?;
    let flags = instance.flags();
    let counter = CircularCounter::new(&instance.points, instance.freq, instance.eps);
    let critical: Vec<f64> = instance
        .points
        .iter()
        .map(|&x| frac(-instance.freq * x))
        .collect();
    let (mut beta, found, mut seen) = best_phase(
        &counter,
        grid(instance.eps / 8.0).chain(critical.iter().copied()),
    );
    let n = instance.points.len() as f64;
    let threshold = 2.0 * instance.eps * (1.0 + instance.delta / 16.0) * n;
    let mut refined = false;
    if flags.all() && (found as f64) < threshold {
        let (b, f, s) = best_phase(&counter, grid(instance.eps / 64.0));
        seen += s;
        refined = true;
        if f > found || (f == found && b < beta) {
            beta = b;
        }
    }
    let achieved = instance
        .points
        .iter()
        .filter(|&&x| dist_to_int(instance.freq * x + beta) <= instance.eps)
        .count();
    Ok(ConcentrationResult {
        beta_star: beta,
        achieved,
        threshold,
        threshold_met: achieved as f64 >= threshold,
        flags,
        report_only: !flags.all(),
        refined,
        candidates_evaluated: seen,
        density_ratio: achieved as f64 / (2.0 * instance.eps * n),
    })
}

/// Membership of every zero in `‖(log x/2π)γ + β‖ ≤ ρ`, packed into words.
fn membership_bits(zeros: &[f64], freq: f64, phase: f64, radius: f64) -> Vec<u64> {
    let mut bits = vec![0u64; zeros.len().div_ceil(64)];
    for (i, &g) in zeros.iter().enumerate() {
        if dist_to_int(freq * g + phase) <= radius {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    bits
}

fn tuple_count(sets: &[Vec<u64>], tuple: &[usize]) -> u64 {
    let words = sets[tuple[0]].len();
    (0..words)
        .map(|w| {
            tuple
                .iter()
                .fold(u64::MAX, |acc, &j| acc & sets[j][w])
                .count_ones() as u64
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct TupleCount {
    pub tuple: Vec<usize>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct HolderOptions {
    /// Enumerate every tuple when `|xs|^k` is at most this.
    pub exhaustive_limit: u64,
    pub samples: usize,
    pub seed: u64,
    /// Keep per-tuple counts in the result when at most this many tuples.
    pub keep_tuples: usize,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self {
            exhaustive_limit: 1_000_000,
            samples: 20_000,
            seed: 0,
            keep_tuples: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct HolderResult {
    pub k: u32,
    pub witnesses: usize,
    pub zeros: usize,
    pub density_boost: f64,
    /// `log((2ρ)^k (1+θ)^k |X|^k |N_1|)`.
    pub lhs_log: f64,
    /// Sum over tuples of the common Bohr-set count, or its sampled estimate.
    pub rhs: f64,
    pub rhs_log: f64,
    pub rhs_std_error: f64,
    pub exhaustive: bool,
    pub tuples_evaluated: u64,
    /// The phases are the concentration outputs, so `rhs` bounds the
    /// lemma's max over phases from below.
    pub rhs_label: String,
    pub lhs_le_rhs: bool,
    pub per_tuple: Vec<TupleCount>,
}

/// Compare `(2ρ)^k (1+θ)^k |X|^k |N_1|` with
/// `Σ_{x_1..x_k} |{γ ∈ N_1 : ‖log x_j γ/2π + β(x_j)‖ ≤ ρ ∀j}|`.
pub fn holder_amplify(
    xs: &[f64],
    phases: &[f64],
    zeros_n1: &[f64],
    radius: f64,
    k: u32,
    density_boost: f64,
    opts: &HolderOptions,
) -> Result<HolderResult> {
    if xs.is_empty() || xs.len() != phases.len() {
        return Err(LabError::domain(
            "amplification needs one phase per witness",
        ));
    }
    if k == 0 {
        return Err(LabError::domain("k must be at least 1"));
    }
    if !(radius > 0.0 && radius < 0.5) {
        return Err(LabError::domain("radius must lie in (0, 1/2)"));
    }
    if xs.iter().any(|&x| !(x > 1.0)) {
        return Err(LabError::domain("witnesses must exceed 1"));
    }
    let sets: Vec<Vec<u64>> = xs
        .iter()
        .zip(phases)
        .map(|(&x, &b)| membership_bits(zeros_n1, x.ln() / TAU, b, radius))
        .collect();
    let m = xs.len();
    let total = (m as f64).powi(k as i32);
    let exhaustive = total <= opts.exhaustive_limit as f64;
    let decode = |mut idx: u64| -> Vec<usize> {
        (0..k)
            .map(|_| {
                let j = (idx % m as u64) as usize;
                idx /= m as u64;
                j
            })
            .collect()
    };
    let (tuples, counts): (Vec<Vec<usize>>, Vec<u64>) = if exhaustive {
        (0..total as u64)
            .into_par_iter()
            .map(|i| {
                let t = decode(i);
                let c = tuple_count(&sets, &t);
                (t, c)
            })
            .unzip()
    } else {
        (0..opts.samples.max(1) as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(i);
                let t: Vec<usize> = (0..k).map(|_| rng.gen_range(0..m)).collect();
                let c = tuple_count(&sets, &t);
                (t, c)
            })
            .unzip()
    };
    let n = counts.len() as f64;
    let sum: u64 = counts.iter().sum();
    let (rhs, rhs_std_error) = if exhaustive {
        (sum as f64, 0.0)
    } else {
        let mean = sum as f64 / n;
        let var = counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        (total * mean, total * (var / n).sqrt())
    };
    let kf = k as f64;
    let lhs_log = kf * (2.0 * radius).ln()
        + kf * density_boost.ln_1p()
        + kf * (m as f64).ln()
        + (zeros_n1.len() as f64).ln();
    let rhs_log = if rhs > 0.0 { rhs.ln() } else { f64::MIN };
    let per_tuple = if tuples.len() <= opts.keep_tuples {
        tuples
            .into_iter()
            .zip(&counts)
            .map(|(tuple, &count)| TupleCount { tuple, count })
            .collect()
    } else {
        Vec::new()
    };
    Ok(HolderResult {
        k,
        witnesses: m,
        zeros: zeros_n1.len(),
        density_boost,
        lhs_log,
        rhs,
        rhs_log,
        rhs_std_error,
        exhaustive,
        tuples_evaluated: counts.len() as u64,
        rhs_label: "lower bound at derived phases".to_string(),
        lhs_le_rhs: lhs_log <= rhs_log,
        per_tuple,
    })
}

// ---------------------------------------------------------------------------
// Pipeline

fn default_c() -> f64 {
    DEFAULT_C
}
fn default_a() -> f64 {
    1.0
}
fn default_k_max() -> u32 {
    8
}
fn default_k_bohr() -> u32 {
    2
}
fn default_threshold() -> f64 {
    REDUCTION_COEFF
}
fn default_partition_c() -> f64 {
    1.0
}
fn default_surrogates() -> usize {
    48
}
fn default_samples() -> usize {
    20_000
}
fn default_bohr_trials() -> usize {
    16
}
fn default_beta_grid() -> usize {
    4
}
fn default_grid() -> usize {
    1000
}
fn default_seed() -> u64 {
    0x5eed
}

/// Pipeline configuration. `x` is the scale X; large values are sought on
/// `[X, 2X]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub x: f64,
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_c")]
    pub c_const: f64,
    /// Constant A in the choice of k.
    #[serde(default = "default_a")]
    pub a_const: f64,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    /// Rank used for the Bohr-set measure experiments.
    #[serde(default = "default_k_bohr")]
    pub k_bohr_max: u32,
    /// Coefficient of `ε β N(t)` in the detection threshold.
    #[serde(default = "default_threshold")]
    pub threshold_coeff: f64,
    /// Constant C of the zero partition (windows hold at most C·K zeros).
    #[serde(default = "default_partition_c")]
    pub partition_c: f64,
    /// Number of surrogate witnesses used when the scan finds none.
    #[serde(default = "default_surrogates")]
    pub surrogate_count: usize,
    #[serde(default = "default_samples")]
    pub tuple_samples: usize,
    #[serde(default = "default_bohr_trials")]
    pub bohr_trials: usize,
    #[serde(default = "default_beta_grid")]
    pub beta_grid: usize,
    #[serde(default = "default_grid")]
    pub pigeonhole_grid: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(x: f64, eps: f64, delta: f64) -> Self {
        Self {
            x,
            eps,
            delta,
            c_const: default_c(),
            a_const: default_a(),
            k_max: default_k_max(),
            k_bohr_max: default_k_bohr(),
            threshold_coeff: default_threshold(),
            partition_c: default_partition_c(),
            surrogate_count: default_surrogates(),
            tuple_samples: default_samples(),
            bohr_trials: default_bohr_trials(),
            beta_grid: default_beta_grid(),
            pigeonhole_grid: default_grid(),
            seed: default_seed(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(LabError::domain(format!(
                "eps must lie in (0, 1/2), got {}",
                self.eps
            )));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(LabError::domain(format!(
                "delta must lie in (0, 1/2), got {}",
                self.delta
            )));
        }
        if !(self.x >= 16.0 && self.x.is_finite()) {
            return Err(LabError::domain(format!(
                "X must be at least 16, got {}",
                self.x
            )));
        }
        if !(self.c_const > 0.0 && self.a_const > 0.0 && self.partition_c >= 1.0) {
            return Err(LabError::domain(
                "C and A must be positive, partition_c >= 1",
            ));
        }
        if self.k_max == 0 || self.k_bohr_max == 0 {
            return Err(LabError::domain("k_max and k_bohr_max must be at least 1"));
        }
        if !(self.threshold_coeff > 0.0) {
            return Err(LabError::domain("threshold_coeff must be positive"));
        }
        if self.surrogate_count == 0 || self.tuple_samples == 0 || self.bohr_trials == 0 {
            return Err(LabError::domain("sample counts must be positive"));
        }
        if self.beta_grid < 4 {
            return Err(LabError::domain("beta_grid must be at least 4"));
        }
        Ok(())
    }

    /// `2X`, the top of the scan range.
    pub fn x_hi(&self) -> f64 {
        2.0 * self.x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ReportInputs {
    pub x_lo: f64,
    pub x_hi: f64,
    pub eps: f64,
    pub delta: f64,
    pub table_id: String,
    pub table_size: usize,
    pub table_t_max: f64,
    pub psi_limit: u64,
    pub c_const: f64,
    pub a_const: f64,
    pub k_max: u32,
    pub threshold_coeff: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct DerivedParams {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub eta: f64,
    /// `⌈A log(1/(εδ))/(εδ)⌉`.
    pub k_theory: u64,
    /// `min(k_theory, k_max)`.
    pub k_used: u32,
    pub k_bohr: u32,
    pub sep_exponent: f64,
    /// `K = ⌈1/(εδ)⌉`.
    pub partition_k: f64,
    pub density_boost: f64,
    /// Constant `A = 2 log X / log T`, filled once T is known.
    pub bohr_a_const: Option<f64>,
    /// `δ(α, β) = 1 − α² − β`.
    pub delta_ab: f64,
}

/// Stage result, or the precondition that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Stage<T> {
    Complete { output: T },
    NotReached { failed_precondition: String },
}

impl<T> Stage<T> {
    fn not_reached(why: impl Into<String>) -> Self {
        Stage::NotReached {
            failed_precondition: why.into(),
        }
    }

    pub fn output(&self) -> Option<&T> {
        match self {
            Stage::Complete { output } => Some(output),
            Stage::NotReached { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct LargeValueStage {
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub measure: f64,
    pub component_count: usize,
    pub spacing: f64,
    pub genuine_witnesses: usize,
    pub genuine_separated: usize,
    /// "genuine" when the separated set is nonempty, else "surrogate": the
    /// largest normalized errors at jump points, greedily separated.
    pub witness_kind: String,
    pub witnesses: Vec<ErrorSample>,
    /// Smallest |normalized error| among the witnesses used.
    pub effective_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PigeonholeStage {
    pub t_star: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub x0: Vec<f64>,
    pub fraction: f64,
    pub benchmark: f64,
    pub benchmark_reduced: f64,
    pub meets_benchmark: bool,
    pub meets_reduced_benchmark: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PartitionStage {
    pub t: f64,
    pub k_param: f64,
    pub c_param: f64,
    pub n_t: usize,
    pub n1: usize,
    pub n2: usize,
    pub n2_fraction: f64,
    /// `|N_2| ≤ N(T)/(200K)`.
    pub n2_bound_holds: bool,
    /// `|N_1| ≥ (1 − εβ/200) N(T)`.
    pub n1_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct WitnessConcentration {
    pub x: f64,
    pub beta_x: f64,
    pub achieved: usize,
    pub density_ratio: f64,
    pub threshold_met: bool,
    pub flags: HypothesisFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ConcentrationStage {
    /// Concentration parameter δ used per witness (`εβ/100`).
    pub delta_used: f64,
    pub radius: f64,
    pub per_witness: Vec<WitnessConcentration>,
    pub hypotheses_met: usize,
    pub thresholds_met: usize,
    /// Target surplus `2ρ(1 + εβ/1000)|N_1|`.
    pub target_count: f64,
    pub target_met: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct BohrStage {
    pub k: u32,
    pub eta: f64,
    pub a_const: f64,
    pub extension: Vec<crate::bohr_geometry::ExtensionReport>,
    pub extension_max_ratio: f64,
    pub average: Stage<crate::bohr_geometry::AverageAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct FinalStage {
    /// `k log(1 + εδ/5000)` at the uncapped k.
    pub lhs_log: f64,
    /// `log(ε^{−7/2} δ^{−2})`.
    pub rhs_log: f64,
    pub dominant: String,
    /// Same left side at the capped k.
    pub lhs_log_capped: f64,
    pub dominant_capped: String,
    /// Smallest k for which the left side exceeds the right.
    pub k_crossover: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PipelineStages {
    pub large_values: Stage<LargeValueStage>,
    pub pigeonhole: Stage<PigeonholeStage>,
    pub partition: Stage<PartitionStage>,
    pub concentration: Stage<ConcentrationStage>,
    pub holder: Stage<HolderResult>,
    pub bohr: Stage<BohrStage>,
    pub final_inequality: Stage<FinalStage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ExperimentReport {
    pub report_version: u32,
    pub inputs: ReportInputs,
    pub derived: DerivedParams,
    pub stages: PipelineStages,
    pub notes: Vec<String>,
}

pub const REPORT_VERSION: u32 = 1;

/// Largest |normalized error| at jump points of `[lo, hi]` (both ψ at the
/// jump and its left limit), greedily separated by `spacing`.
fn surrogate_witnesses(
    psi: &PsiSeries,
    lo: f64,
    hi: f64,
    spacing: f64,
    count: usize,
) -> Vec<ErrorSample> {
    let jp = psi.jump_points();
    let cum = psi.cumulative();
    let start = jp.partition_point(|&p| (p as f64) < lo);
    let end = jp.partition_point(|&p| (p as f64) <= hi);
    let mut samples: Vec<ErrorSample> = (start..end)
        .map(|i| {
            let x = jp[i] as f64;
            let scale = x.sqrt() * x.ln().powi(2);
            let left = if i == 0 { 0.0 } else { cum[i - 1] };
            let (psi_x, x_eval) = if (cum[i] - x).abs() >= (left - x).abs() {
                (cum[i], x)
            } else {
                (left, x.next_down())
            };
            let err = psi_x - x_eval;
            ErrorSample {
                x: x_eval,
                psi_x,
                err,
                normalized: err / scale,
            }
        })
        .collect();
    samples.sort_by(|a, b| {
        b.normalized
            .abs()
            .total_cmp(&a.normalized.abs())
            .then(a.x.total_cmp(&b.x))
    });
    let mut chosen: BTreeSet<u64> = BTreeSet::new();
    let mut out = Vec::new();
    for s in samples {
        if out.len() == count {
            break;
        }
        let key = s.x.to_bits();
        let near = |v: Option<&u64>| v.is_some_and(|&b| (f64::from_bits(b) - s.x).abs() < spacing);
        if near(chosen.range(..key).next_back()) || near(chosen.range(key..).next()) {
            continue;
        }
        chosen.insert(key);
        out.push(s);
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x));
    out
}

fn verdict(holds: bool) -> &'static str {
    if holds {
        "left"
    } else {
        "right"
    }
}

/// Run every stage in order. Configuration errors are returned; a failed
/// stage precondition truncates the report at that stage.
pub fn run_pipeline(
    config: &PipelineConfig,
    psi: &PsiSeries,
    table: &ZeroTable,
) -> Result<ExperimentReport> {
    run_pipeline_with(config, psi, table, None)
}

/// As [`run_pipeline`], optionally replacing the scanned witnesses with a
/// fixed set of points in `[X, 2X]`.
pub fn run_pipeline_with(
    config: &PipelineConfig,
    psi: &PsiSeries,
    table: &ZeroTable,
    witnesses: Option<&[f64]>,
) -> Result<ExperimentReport> {
    config.validate()?;
    let (eps, delta) = (config.eps, config.delta);
    let big_x = config.x;
    let x_hi = config.x_hi();
    if (psi.limit_x() as f64) < x_hi {
        return Err(LabError::OutOfRange {
            what: "2X",
            value: x_hi,
            lo: 16.0,
            hi: psi.limit_x() as f64,
        });
    }
    if let Some(w) = witnesses {
        if w.is_empty() || w.iter().any(|&x| !(big_x..=x_hi).contains(&x)) {
            return Err(LabError::domain(
                "fixed witnesses must be a nonempty subset of [X, 2X]",
            ));
        }
    }
    let alpha = 1.0 - delta;
    let beta = delta;
    let ed = eps * delta;
    let k_theory = (config.a_const * (1.0 / ed).ln() / ed).ceil() as u64;
    let k_used = k_theory.min(config.k_max as u64).max(1) as u32;
    let mut derived = DerivedParams {
        alpha,
        beta,
        rho: eps / config.c_const,
        eta: ed / 10_000.0,
        k_theory,
        k_used,
        k_bohr: k_used.min(config.k_bohr_max),
        sep_exponent: 1.0 - (1.0 - 2.0 * delta) * (TAU * eps).sqrt(),
        partition_k: (1.0 / ed).ceil(),
        density_boost: ed / 1000.0,
        bohr_a_const: None,
        delta_ab: delta_ab(alpha, beta),
    };
    let inputs = ReportInputs {
        x_lo: big_x,
        x_hi,
        eps,
        delta,
        table_id: table.source_id().to_string(),
        table_size: table.len(),
        table_t_max: table.t_max(),
        psi_limit: psi.limit_x(),
        c_const: config.c_const,
        a_const: config.a_const,
        k_max: config.k_max,
        threshold_coeff: config.threshold_coeff,
        seed: config.seed,
    };
    let notes = vec![
        "symbol slips in the final inequality are read with epsilon_1 = delta".to_string(),
        "detection threshold coefficient is a parameter: 8*pi (detection lemma) or 1/10 (main reduction)".to_string(),
        "subset fraction benchmarks: eps*delta(alpha,beta) and eps*delta(alpha,beta)/100".to_string(),
        "reference constants only: c' = 2 exp(-c/2 - 1) ~ 0.53517; separated-set bound exp(C/(eps*delta)^2); c' < sqrt(2 pi)".to_string(),
        "holder right side uses the concentration phases: a lower bound for the max over phases".to_string(),
        "Bohr measure experiment brackets the phase max: grid lower bound, Fourier upper bound".to_string(),
    ];
    let mut stages = PipelineStages {
        large_values: Stage::not_reached(PENDING),
        pigeonhole: Stage::not_reached(PENDING),
        partition: Stage::not_reached(PENDING),
        concentration: Stage::not_reached(PENDING),
        holder: Stage::not_reached(PENDING),
        bohr: Stage::not_reached(PENDING),
        final_inequality: Stage::Complete {
            output: final_stage(eps, delta, k_theory, k_used),
        },
    };
    if let Err(why) = execute(config, psi, table, witnesses, &mut derived, &mut stages) {
        stages.mark_pending(&why);
    }
    Ok(ExperimentReport {
        report_version: REPORT_VERSION,
        inputs,
        derived,
        stages,
        notes,
    })
}

const PENDING: &str = "pending";

impl PipelineStages {
    fn mark_pending(&mut self, why: &str) {
        fn mark<T>(s: &mut Stage<T>, why: &str) {
            if matches!(s, Stage::NotReached { failed_precondition } if failed_precondition == PENDING)
            {
                *s = Stage::not_reached(why);
            }
        }
        mark(&mut self.large_values, why);
        mark(&mut self.pigeonhole, why);
        mark(&mut self.partition, why);
        mark(&mut self.concentration, why);
        mark(&mut self.holder, why);
        mark(&mut self.bohr, why);
    }
}

fn execute(
    config: &PipelineConfig,
    psi: &PsiSeries,
    table: &ZeroTable,
    fixed: Option<&[f64]>,
    derived: &mut DerivedParams,
    stages: &mut PipelineStages,
) -> std::result::Result<(), String> {
    let (eps, delta) = (config.eps, config.delta);
    let big_x = config.x;
    let x_hi = config.x_hi();
    let ed = eps * delta;
    let rho = derived.rho;

    // (1) large values on [X, 2X].
    let scan = psi
        .large_value_scan(big_x, x_hi, eps, derived.sep_exponent)
        .map_err(|e| format!("large value scan: {e}"))?;
    let genuine: Vec<ErrorSample> = scan
        .witnesses
        .iter()
        .filter(|w| scan.separated_subset.contains(&w.x))
        .copied()
        .collect();
    let (kind, witnesses) = match fixed {
        Some(xs) => (
            "fixed",
            xs.iter()
                .map(|&x| psi.error_term(x))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| format!("fixed witnesses: {e}"))?,
        ),
        None if genuine.is_empty() => (
            "surrogate",
            surrogate_witnesses(psi, big_x, x_hi, scan.spacing, config.surrogate_count),
        ),
        None => ("genuine", genuine),
    };
    let effective_eps = witnesses
        .iter()
        .map(|w: &ErrorSample| w.normalized.abs())
        .fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = witnesses.iter().map(|w| w.x).collect();
    stages.large_values = Stage::Complete {
        output: LargeValueStage {
            scan_lo: big_x,
            scan_hi: x_hi,
            measure: scan.measure_estimate,
            component_count: scan.component_count,
            spacing: scan.spacing,
            genuine_witnesses: scan.witnesses.len(),
            genuine_separated: scan.separated_subset.len(),
            witness_kind: kind.to_string(),
            effective_eps: if effective_eps.is_finite() {
                effective_eps
            } else {
                0.0
            },
            witnesses,
        },
    };
    if xs.is_empty() {
        return Err("no witnesses in [X, 2X]".to_string());
    }

    // (2) pigeonhole in T.
    let ph = pigeonhole_t(
        table,
        &xs,
        big_x,
        eps,
        derived.alpha,
        derived.beta,
        config.threshold_coeff,
        config.pigeonhole_grid,
    )
    .map_err(|e| format!("pigeonhole: {e}"))?;
    let t_star = ph.t_star;
    let x0 = ph.x0.clone();
    stages.pigeonhole = Stage::Complete {
        output: PigeonholeStage {
            t_star,
            window_lo: ph.window_lo,
            window_hi: ph.window_hi,
            meets_benchmark: ph.fraction >= ph.benchmark,
            meets_reduced_benchmark: ph.fraction >= ph.benchmark_reduced,
            x0: ph.x0,
            fraction: ph.fraction,
            benchmark: ph.benchmark,
            benchmark_reduced: ph.benchmark_reduced,
        },
    };

    // (3) partition of zeros up to T.
    let part = table
        .partition_zeros(t_star, derived.partition_k, config.partition_c)
        .map_err(|e| format!("partition: {e}"))?;
    let zs = table.up_to(t_star);
    let n1: Vec<f64> = part.n1.iter().map(|&i| zs[i]).collect();
    stages.partition = Stage::Complete {
        output: PartitionStage {
            t: t_star,
            k_param: derived.partition_k,
            c_param: config.partition_c,
            n_t: zs.len(),
            n1: part.n1.len(),
            n2: part.n2.len(),
            n2_fraction: part.n2_fraction,
            n2_bound_holds: part.n2_bound_holds,
            n1_bound_holds: part.n1.len() as f64 >= (1.0 - ed / 200.0) * zs.len() as f64,
        },
    };
    if x0.is_empty() {
        return Err("no witness lies in T_x at the chosen T".to_string());
    }
    if n1.is_empty() {
        return Err("N_1 is empty".to_string());
    }

    // (4) concentration per witness.
    let conc_delta = ed / 100.0;
    let per_witness: Vec<WitnessConcentration> = x0
        .par_iter()
        .map(|&x| {
            let inst = ConcentrationInstance {
                points: n1.clone(),
                t: t_star,
                freq: x.ln() / TAU,
                delta: conc_delta,
                eps: rho,
                c_const: config.c_const,
            };
            concentrate(&inst).map(|r| WitnessConcentration {
                x,
                beta_x: r.beta_star,
                achieved: r.achieved,
                density_ratio: r.density_ratio,
                threshold_met: r.threshold_met,
                flags: r.flags,
            })
        })
        .collect::<Result<_>>()
        .map_err(|e| format!("concentration: {e}"))?;
    let target_count = 2.0 * rho * (1.0 + derived.density_boost) * n1.len() as f64;
    let betas: Vec<f64> = per_witness.iter().map(|w| w.beta_x).collect();
    stages.concentration = Stage::Complete {
        output: ConcentrationStage {
            delta_used: conc_delta,
            radius: rho,
            hypotheses_met: per_witness.iter().filter(|w| w.flags.all()).count(),
            thresholds_met: per_witness.iter().filter(|w| w.threshold_met).count(),
            target_met: per_witness
                .iter()
                .filter(|w| w.achieved as f64 >= target_count)
                .count(),
            target_count,
            per_witness,
        },
    };

    // (5) Hölder amplification.
    let holder = holder_amplify(
        &x0,
        &betas,
        &n1,
        rho,
        derived.k_used,
        derived.density_boost,
        &HolderOptions {
            exhaustive_limit: 1_000_000,
            samples: config.tuple_samples,
            seed: config.seed,
            keep_tuples: 64,
        },
    )
    .map_err(|e| format!("amplification: {e}"))?;
    stages.holder = Stage::Complete { output: holder };

    // (6) Bohr-set counting and measure.
    let a_const = 2.0 * big_x.ln() / t_star.ln();
    derived.bohr_a_const = Some(a_const);
    stages.bohr = bohr_stage(
        config,
        &x0,
        &betas,
        &n1,
        t_star,
        rho,
        derived.eta,
        derived.k_bohr,
        a_const,
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bohr_stage(
    config: &PipelineConfig,
    x0: &[f64],
    betas: &[f64],
    n1: &[f64],
    t: f64,
    rho: f64,
    eta: f64,
    k: u32,
    a_const: f64,
) -> Stage<BohrStage> {
    let m = x0.len();
    let mut extension = Vec::new();
    for i in 0..config.bohr_trials.min(m.pow(k)) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xb0b0);
        rng.set_stream(i as u64);
        let idx: Vec<usize> = (0..k).map(|_| rng.gen_range(0..m)).collect();
        let spec = match BohrSpec::new(
            idx.iter().map(|&j| x0[j].ln() / TAU).collect(),
            idx.iter().map(|&j| betas[j]).collect(),
            rho,
            Some(t),
        ) {
            Ok(s) => s,
            Err(e) => return Stage::not_reached(format!("Bohr spec: {e}")),
        };
        match interval_extension_check(&spec, n1, eta, a_const) {
            Ok(r) => extension.push(r),
            Err(e) => return Stage::not_reached(format!("interval extension: {e}")),
        }
    }
    let extension_max_ratio = extension.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let pool: Vec<f64> = x0.iter().map(|&x| x.ln() / TAU).collect();
    let average = match average_measure_experiment(&AverageParams {
        freq_pool: pool,
        k: k as usize,
        radius: rho * (1.0 + eta),
        eta,
        t,
        trials: config.bohr_trials,
        beta_grid: config.beta_grid,
        seed: config.seed,
        r: 2,
        max_order: 2000,
    }) {
        Ok(r) => Stage::Complete {
            output: r.aggregate,
        },
        Err(e) => Stage::not_reached(format!("average measure: {e}")),
    };
    Stage::Complete {
        output: BohrStage {
            k,
            eta,
            a_const,
            extension,
            extension_max_ratio,
            average,
        },
    }
}

fn final_stage(eps: f64, delta: f64, k_theory: u64, k_used: u32) -> FinalStage {
    let per_k = (eps * delta / 5000.0).ln_1p();
    let rhs_log = -3.5 * eps.ln() - 2.0 * delta.ln();
    let lhs_log = k_theory as f64 * per_k;
    let lhs_log_capped = k_used as f64 * per_k;
    FinalStage {
        lhs_log,
        rhs_log,
        dominant: verdict(lhs_log > rhs_log).to_string(),
        lhs_log_capped,
        dominant_capped: verdict(lhs_log_capped > rhs_log).to_string(),
        k_crossover: (rhs_log / per_k).floor() as u64 + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_are_captured() {
        let inst = ConcentrationInstance {
            points: vec![3.7; 50],
            t: 100.0,
            freq: 1.3,
            delta: 0.5,
            eps: 0.004,
            c_const: 100.0,
        };
        let r = concentrate(&inst).unwrap();
        assert_eq!(r.achieved, 50);
        assert!(r.threshold_met);
        assert!(r.flags.large_sum);
    }

    #[test]
    fn small_sum_is_report_only() {
        let points: Vec<f64> = (0..1000).map(|i| i as f64 * 0.1).collect();
        let inst = ConcentrationInstance {
            points,
            t: 100.0,
            freq: 0.37,
            delta: 0.5,
            eps: 0.004,
            c_const: 100.0,
        };
        let r = concentrate(&inst).unwrap();
        assert!(!r.flags.large_sum);
        assert!(r.report_only);
    }

    #[test]
    fn circular_count_matches_direct() {
        let points: Vec<f64> = (0..500)
            .map(|i| (i as f64 * 0.618_033_988_7).fract() * 37.0)
            .collect();
        let c = CircularCounter::new(&points, 1.7, 0.03);
        for b in [0.0, 0.01, 0.5, 0.98, 0.999] {
            let direct = points
                .iter()
                .filter(|&&x| dist_to_int(1.7 * x + b) <= 0.03)
                .count();
            let fast = c.count(b) as i64;
            assert!(
                (fast - direct as i64).abs() <= 1,
                "beta={b}: {fast} vs {direct}"
            );
        }
    }

    #[test]
    fn holder_k1_is_sum_of_counts() {
        let zeros: Vec<f64> = (1..400)
            .map(|i| i as f64 * 0.77 + (i as f64).sqrt())
            .collect();
        let xs = [1000.5, 1234.0, 1500.25];
        let phases = [0.1, 0.7, 0.33];
        let r =
            holder_amplify(&xs, &phases, &zeros, 0.1, 1, 0.0, &HolderOptions::default()).unwrap();
        let direct: usize = xs
            .iter()
            .zip(&phases)
            .map(|(&x, &b)| {
                zeros
                    .iter()
                    .filter(|&&g| dist_to_int(x.ln() / TAU * g + b) <= 0.1)
                    .count()
            })
            .sum();
        assert_eq!(r.rhs, direct as f64);
        assert!(r.exhaustive);
    }

    #[test]
    fn equal_witnesses_share_counts() {
        let zeros: Vec<f64> = (1..300).map(|i| i as f64 * 1.1).collect();
        let xs = [2000.0; 4];
        let phases = [0.2; 4];
        let r1 =
            holder_amplify(&xs, &phases, &zeros, 0.1, 1, 0.0, &HolderOptions::default()).unwrap();
        let r2 =
            holder_amplify(&xs, &phases, &zeros, 0.1, 2, 0.0, &HolderOptions::default()).unwrap();
        let single = r1.per_tuple[0].count;
        assert!(r2.per_tuple.iter().all(|t| t.count == single));
    }

    #[test]
    fn config_rejects_zero_eps() {
        assert!(PipelineConfig::new(1e3, 0.0, 0.1).validate().is_err());
    }

    #[test]
    fn final_inequality_sides() {
        let f = final_stage(0.05, 0.1, 1060, 8);
        assert!((f.rhs_log - (-3.5 * 0.05f64.ln() - 2.0 * 0.1f64.ln())).abs() < 1e-12);
        assert_eq!(f.dominant, "right");
        assert!(f.k_crossover > 1060);
    }

    fn synthetic_table() -> ZeroTable {
        let zs: Vec<f64> = (0..1000)
            .map(|n| 14.134_725 + 0.5 * n as f64 + 0.1 * (n as f64).sin())
            .collect();
        ZeroTable::from_ordinates(zs, "synthetic").unwrap()
    }

    #[test]
    fn synthetic_mini_run_is_complete() {
        let psi = crate::chebyshev_psi::build_psi_series(2000).unwrap();
        let mut cfg = PipelineConfig::new(1000.0, 0.05, 0.1);
        cfg.k_max = 2;
        let fixed = [1009.0, 1201.5, 1500.0, 1999.0];
        let r = run_pipeline_with(&cfg, &psi, &synthetic_table(), Some(&fixed)).unwrap();
        let s = &r.stages;
        assert!(s.large_values.output().is_some());
        assert!(s.pigeonhole.output().is_some(), "{:?}", s.pigeonhole);
        assert!(s.partition.output().is_some());
        assert!(s.concentration.output().is_some(), "{:?}", s.concentration);
        let h = s.holder.output().expect("holder stage");
        assert!(h.exhaustive);
        assert_eq!(h.k, 2);
        assert!(s.bohr.output().is_some(), "{:?}", s.bohr);
        assert!(s.final_inequality.output().is_some());
    }

    #[test]
    fn pipeline_is_deterministic() {
        let psi = crate::chebyshev_psi::build_psi_series(2000).unwrap();
        let cfg = PipelineConfig::new(1000.0, 0.05, 0.1);
        let t = synthetic_table();
        let a = serde_json::to_string(&run_pipeline(&cfg, &psi, &t).unwrap()).unwrap();
        let b = serde_json::to_string(&run_pipeline(&cfg, &psi, &t).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
