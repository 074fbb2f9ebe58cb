//! Rank-k Bohr sets `{x : ‖α_ℓ x + β_ℓ‖ ≤ ρ}`: membership, exact measure of
//! the truncated set as a union of intervals, point counts, and the
//! experiments comparing those against Fourier-side bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::phase::dist_to_int;
use crate::smooth_majorant::{bohr_majorant, smoothed_measure_bound};
use crate::summation::CompensatedSum;
use crate::zero_table::max_window_count;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct BohrSpec {
    pub freqs: Vec<f64>,
    pub phases: Vec<f64>,
    pub radius: f64,
    pub t_trunc: Option<f64>,
}

impl BohrSpec {
    pub fn new(
        freqs: Vec<f64>,
        phases: Vec<f64>,
        radius: f64,
        t_trunc: Option<f64>,
    ) -> Result<Self> {
        if freqs.is_empty() {
            return Err(LabError::domain("Bohr set needs at least one frequency"));
        }
        if freqs.len() != phases.len() {
            return Err(LabError::domain(format!(
                "{} frequencies but {} phases",
                freqs.len(),
                phases.len()
            )));
        }
        if !(radius > 0.0 && radius < 0.5) {
            return Err(LabError::domain(format!(
                "radius must lie in (0, 1/2), got {radius}"
            )));
        }
        if let Some(t) = t_trunc {
            if !(t > 0.0 && t.is_finite()) {
                return Err(LabError::domain(format!(
                    "truncation T must be positive, got {t}"
                )));
            }
        }
        if freqs.iter().chain(&phases).any(|v| !v.is_finite()) {
            return Err(LabError::domain("frequencies and phases must be finite"));
        }
        Ok(Self {
            freqs,
            phases,
            radius,
            t_trunc,
        })
    }

    pub fn rank(&self) -> usize {
        self.freqs.len()
    }

    /// `‖α_ℓ x + β_ℓ‖ ≤ ρ` for every ℓ.
    pub fn contains(&self, x: f64) -> bool {
        self.freqs
            .iter()
            .zip(&self.phases)
            .all(|(&a, &b)| dist_to_int(a * x + b) <= self.radius)
    }

    /// Same frequencies and phases with a different radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(
            self.freqs.clone(),
            self.phases.clone(),
            radius,
            self.t_trunc,
        )
    }

    fn require_t(&self) -> Result<f64> {
        self.t_trunc
            .ok_or_else(|| LabError::domain("operation needs a truncation height T"))
    }
}

/// `{x ∈ [0, t] : ‖freq·x + phase‖ ≤ radius}`.
pub fn constraint_intervals(freq: f64, phase: f64, radius: f64, t: f64) -> Result<IntervalUnion> {
    if freq == 0.0 || !freq.is_finite() {
        return Err(LabError::domain("constraint frequency must be nonzero"));
    }
    if !(radius > 0.0) {
        return Err(LabError::domain("constraint radius must be positive"));
    }
    if radius >= 0.5 {
        return Err(LabError::domain(format!(
            "radius {radius} >= 1/2 makes the constraint vacuous"
        )));
    }
    if !(t > 0.0) {
        return Err(LabError::domain("constraint needs T > 0"));
    }
    let (f, p) = if freq < 0.0 {
        (-freq, -phase)
    } else {
        (freq, phase)
    };
    let n_lo = (p - radius).ceil() as i64;
    let n_hi = (f * t + p + radius).floor() as i64;
    let mut out = Vec::with_capacity((n_hi - n_lo + 1).max(0) as usize);
    for n in n_lo..=n_hi {
        let lo = ((n as f64 - p - radius) / f).max(0.0);
        let hi = ((n as f64 - p + radius) / f).min(t);
        if hi >= lo {
            out.push(Interval::new(lo, hi));
        }
    }
    Ok(IntervalUnion::from_sorted(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct TruncatedMeasure {
    pub measure: f64,
    pub decomposition: IntervalUnion,
}

/// Exact measure of `B(α, β, T; ρ)` by intersecting the per-constraint
/// interval unions.
pub fn truncated_measure(spec: &BohrSpec) -> Result<TruncatedMeasure> {
    let t = spec.require_t()?;
    if let Some(i) = spec.freqs.iter().position(|&a| a == 0.0) {
        return Err(LabError::domain(format!("frequency {i} is zero")));
    }
    let unions = spec
        .freqs
        .iter()
        .zip(&spec.phases)
        .map(|(&a, &b)| constraint_intervals(a, b, spec.radius, t))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&IntervalUnion> = unions.iter().collect();
    let decomposition = IntervalUnion::intersect_all(&refs);
    let lines: Vec<(f64, f64)> = spec
        .freqs
        .iter()
        .zip(&spec.phases)
        .map(|(&a, &b)| if a < 0.0 { (-a, -b) } else { (a, b) })
        .collect();
    let measure = decomposition
        .intervals
        .iter()
        .map(|iv| component_length(iv, &lines, spec.radius))
        .sum::<CompensatedSum>()
        .value();
    Ok(TruncatedMeasure {
        measure,
        decomposition,
    })
}

/// Integer `n` with `x == (n - p + side·ρ)/f` as computed by
/// [`constraint_intervals`].
fn endpoint_index(x: f64, f: f64, p: f64, radius: f64, side: f64) -> Option<i64> {
    let guess = (f * x + p - side * radius).round() as i64;
    (guess - 1..=guess + 1).find(|&n| (n as f64 - p + side * radius) / f == x)
}

/// `hi - lo`, recomputed from the integer indices when both ends come from
/// the same constraint. The direct difference loses about one ulp of `hi`
/// per component, which adds up over long sweeps.
fn component_length(iv: &Interval, lines: &[(f64, f64)], radius: f64) -> f64 {
    for &(f, p) in lines {
        let (Some(n_lo), Some(n_hi)) = (
            endpoint_index(iv.lo, f, p, radius, -1.0),
            endpoint_index(iv.hi, f, p, radius, 1.0),
        ) else {
            continue;
        };
        return ((n_hi - n_lo) as f64 + 2.0 * radius) / f;
    }
    iv.hi - iv.lo
}

pub fn count_members(spec: &BohrSpec, points: &[f64]) -> usize {
    points.iter().filter(|&&x| spec.contains(x)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ExtensionReport {
    pub eta: f64,
    pub a_const: f64,
    pub log_t: f64,
    /// Points of the set lying in `B(α, β; ρ)`.
    pub lhs: usize,
    /// `2ηρ/(A log T)`.
    pub window_length: f64,
    pub window_max: usize,
    /// `μ(B(α, β, T; ρ(1+η)))`.
    pub extended_measure: f64,
    pub extended_components: usize,
    /// `(A log T/(ηρ)) · window_max · extended_measure`.
    pub rhs: f64,
    /// `lhs / rhs`: the measured implied constant.
    pub ratio: f64,
}

/// Compare the Bohr-set point count with the short-interval concentration
/// times the measure of the slightly enlarged Bohr set.
pub fn interval_extension_check(
    spec: &BohrSpec,
    points: &[f64],
    eta: f64,
    a_const: f64,
) -> Result<ExtensionReport> {
    let t = spec.require_t()?;
    if !(eta > 0.0) {
        return Err(LabError::domain("eta must be positive"));
    }
    if !(t > 1.0) {
        return Err(LabError::domain("extension check needs T > 1"));
    }
    let log_t = t.ln();
    let cap = a_const * log_t;
    for (i, &a) in spec.freqs.iter().enumerate() {
        if a.abs() > cap {
            return Err(LabError::Hypothesis(format!(
                "frequency {i} = {a} exceeds A log T = {cap}"
            )));
        }
    }
    let lhs = count_members(spec, points);
    let window_length = 2.0 * eta * spec.radius / cap;
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let window_max = max_window_count(&sorted, window_length);
    let extended = truncated_measure(&spec.with_radius(spec.radius * (1.0 + eta))?)?;
    let rhs = cap / (eta * spec.radius) * window_max as f64 * extended.measure;
    let ratio = if rhs > 0.0 { lhs as f64 / rhs } else { 0.0 };
    Ok(ExtensionReport {
        eta,
        a_const,
        log_t,
        lhs,
        window_length,
        window_max,
        extended_measure: extended.measure,
        extended_components: extended.decomposition.component_count,
        rhs,
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct AverageParams {
    pub freq_pool: Vec<f64>,
    pub k: usize,
    pub radius: f64,
    pub eta: f64,
    pub t: f64,
    pub trials: usize,
    pub beta_grid: usize,
    pub seed: u64,
    /// Smoothing order of the majorant.
    pub r: u32,
    /// Cap on the per-axis order of the Fourier enumeration.
    pub max_order: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct AverageTrial {
    pub tuple: Vec<f64>,
    /// Largest measure over the phase grid: a lower bound for the max.
    pub grid_max: f64,
    /// Phase-free Fourier upper bound on the max.
    pub majorant_bound: f64,
    /// Component count at the maximizing grid phase.
    pub measure_components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct AverageAggregate {
    pub tuples_evaluated: usize,
    pub exhaustive: bool,
    pub mean_grid_max: f64,
    pub mean_majorant_bound: f64,
    /// `(2ρ)^k (1+η)^k T`.
    pub main_term: f64,
    /// `log(1/(ρη))^k T / |Y|`, the secondary term at C = 1.
    pub secondary_unit: f64,
    /// Smallest C for which the mean grid maximum fits the two-term shape.
    pub fitted_c_grid: f64,
    /// Same for the mean majorant bound.
    pub fitted_c_majorant: f64,
    /// `mean_grid_max / main_term`.
    pub grid_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct AverageReport {
    pub params: AverageParams,
    pub per_trial: Vec<AverageTrial>,
    pub aggregate: AverageAggregate,
}

fn check_spacing(pool: &[f64], t: f64) -> Result<()> {
    let mut sorted: Vec<f64> = pool.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min_gap = 1.0 / t;
    for w in sorted.windows(2) {
        if w[1] - w[0] < min_gap {
            return Err(LabError::Hypothesis(format!(
                "frequencies {} and {} are closer than 1/T = {min_gap}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Largest C with `mean ≤ (main + (C·L)^k/|Y|)·T` violated: solves for
/// `C = ((mean/T − main)|Y|)^{1/k} / L`, clamped at zero.
fn fit_constant(mean: f64, t: f64, main: f64, pool: usize, log_term: f64, k: usize) -> f64 {
    let excess = (mean / t - main) * pool as f64;
    if excess <= 0.0 {
        0.0
    } else {
        excess.powf(1.0 / k as f64) / log_term
    }
}

fn tuple_for(index: u64, pool: usize, k: usize) -> Vec<usize> {
    let mut rest = index;
    (0..k)
        .map(|_| {
            let i = (rest % pool as u64) as usize;
            rest /= pool as u64;
            i
        })
        .collect()
}

/// Average of `max_β μ(B(α, β, T; ρ))` over tuples drawn from the pool,
/// bracketed below by a phase grid and above by the smooth majorant.
pub fn average_measure_experiment(params: &AverageParams) -> Result<AverageReport> {
    let p = params;
    if p.freq_pool.is_empty() || p.k == 0 {
        return Err(LabError::domain(
            "experiment needs a nonempty pool and k >= 1",
        ));
    }
    if p.beta_grid < 4 {
        return Err(LabError::domain("beta_grid must be at least 4"));
    }
    if p.trials == 0 {
        return Err(LabError::domain("trials must be positive"));
    }
    if p.freq_pool.contains(&0.0) {
        return Err(LabError::domain("pool frequencies must be nonzero"));
    }
    check_spacing(&p.freq_pool, p.t)?;
    let pool = p.freq_pool.len();
    let total = (pool as f64).powi(p.k as i32);
    let exhaustive = total <= p.trials as f64;
    let count = if exhaustive { total as usize } else { p.trials };
    let grid_phases = (p.beta_grid as f64).powi(p.k as i32) as u64;

    let per_trial = (0..count)
        .into_par_iter()
        .map(|i| {
            let idx = if exhaustive {
                tuple_for(i as u64, pool, p.k)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
                rng.set_stream(i as u64);
                (0..p.k).map(|_| rng.gen_range(0..pool)).collect()
            };
            let tuple: Vec<f64> = idx.iter().map(|&j| p.freq_pool[j]).collect();
            let mut best = (f64::NEG_INFINITY, 0usize);
            for g in 0..grid_phases {
                let phases: Vec<f64> = tuple_for(g, p.beta_grid, p.k)
                    .into_iter()
                    .map(|j| j as f64 / p.beta_grid as f64)
                    .collect();
                let spec = BohrSpec::new(tuple.clone(), phases, p.radius, Some(p.t))?;
                let m = truncated_measure(&spec)?;
                if m.measure > best.0 {
                    best = (m.measure, m.decomposition.component_count);
                }
            }
            let maj = bohr_majorant(&tuple, &vec![0.0; p.k], p.radius, p.eta, p.r)?;
            let bound = smoothed_measure_bound(&maj, p.t, p.max_order, 1_000_000)?;
            Ok(AverageTrial {
                tuple,
                grid_max: best.0,
                majorant_bound: bound.a_prime_measure_upper,
                measure_components: best.1,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = per_trial.len() as f64;
    let mean_grid_max = per_trial.iter().map(|t| t.grid_max).sum::<f64>() / n;
    let mean_majorant_bound = per_trial.iter().map(|t| t.majorant_bound).sum::<f64>() / n;
    let main = (2.0 * p.radius * (1.0 + p.eta)).powi(p.k as i32);
    let log_term = (1.0 / (p.radius * p.eta)).ln();
    let aggregate = AverageAggregate {
        tuples_evaluated: per_trial.len(),
        exhaustive,
        mean_grid_max,
        mean_majorant_bound,
        main_term: main * p.t,
        secondary_unit: log_term.powi(p.k as i32) * p.t / pool as f64,
        fitted_c_grid: fit_constant(mean_grid_max, p.t, main, pool, log_term, p.k),
        fitted_c_majorant: fit_constant(mean_majorant_bound, p.t, main, pool, log_term, p.k),
        grid_ratio: mean_grid_max / (main * p.t),
    };
    Ok(AverageReport {
        params: p.clone(),
        per_trial,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(freqs: &[f64], phases: &[f64], rho: f64, t: f64) -> BohrSpec {
        BohrSpec::new(freqs.to_vec(), phases.to_vec(), rho, Some(t)).unwrap()
    }

    #[test]
    fn membership_examples() {
        let s = spec(&[1.0], &[0.0], 0.1, 10.0);
        assert!(s.contains(5.05));
        assert!(!s.contains(5.3));
        let s2 = spec(&[1.0, 0.5], &[0.0, 0.0], 0.1, 10.0);
        assert!(s2.contains(2.0));
    }

    #[test]
    fn constraint_examples() {
        let u = constraint_intervals(1.0, 0.0, 0.1, 10.0).unwrap();
        assert_eq!(u.component_count, 11);
        assert!((u.total_measure - 2.0).abs() < 1e-12);
        let v = constraint_intervals(0.5, 0.0, 0.1, 10.0).unwrap();
        assert_eq!(v.component_count, 6);
        assert!((v.total_measure - 2.0).abs() < 1e-12);
        assert!(constraint_intervals(1.0, 0.0, 0.5, 10.0).is_err());
    }

    #[test]
    fn negative_frequency_is_mirrored() {
        let a = constraint_intervals(1.3, 0.2, 0.07, 20.0).unwrap();
        let b = constraint_intervals(-1.3, -0.2, 0.07, 20.0).unwrap();
        assert_eq!(a.component_count, b.component_count);
        assert!((a.total_measure - b.total_measure).abs() < 1e-12);
    }

    #[test]
    fn incompatible_constraints_are_empty() {
        let m = truncated_measure(&spec(&[1.0, 1.0], &[0.0, 0.5], 0.1, 10.0)).unwrap();
        assert_eq!(m.measure, 0.0);
    }

    #[test]
    fn rank_one_equals_constraint() {
        let s = spec(&[2f64.sqrt()], &[0.3], 0.05, 100.0);
        let m = truncated_measure(&s).unwrap();
        let c = constraint_intervals(2f64.sqrt(), 0.3, 0.05, 100.0).unwrap();
        assert_eq!(m.decomposition, c);
    }

    #[test]
    fn midpoints_are_members() {
        let s = spec(&[1.0, 2f64.sqrt()], &[0.1, 0.2], 0.1, 50.0);
        let m = truncated_measure(&s).unwrap();
        let mids: Vec<f64> = m
            .decomposition
            .intervals
            .iter()
            .map(Interval::midpoint)
            .collect();
        assert_eq!(count_members(&s, &mids), m.decomposition.component_count);
        assert_eq!(count_members(&s, &[]), 0);
    }

    #[test]
    fn extension_rejects_large_frequency() {
        let s = spec(&[100.0], &[0.0], 0.1, 10.0);
        let e = interval_extension_check(&s, &[1.0], 0.1, 1.0).unwrap_err();
        assert!(e.to_string().contains("frequency 0"), "{e}");
    }

    #[test]
    fn extension_on_empty_points() {
        let s = spec(&[1.0], &[0.0], 0.1, 10.0);
        let r = interval_extension_check(&s, &[], 0.1, 1.0).unwrap();
        assert_eq!(r.lhs, 0);
        assert!(r.rhs >= 0.0);
    }

    fn avg(pool: Vec<f64>, k: usize, t: f64, grid: usize) -> AverageReport {
        average_measure_experiment(&AverageParams {
            freq_pool: pool,
            k,
            radius: 0.1,
            eta: 0.1,
            t,
            trials: 16,
            beta_grid: grid,
            seed: 7,
            r: 2,
            max_order: 2000,
        })
        .unwrap()
    }

    #[test]
    fn rank_one_average_is_two() {
        let r = avg(vec![1.0], 1, 10.0, 4);
        assert!(
            (r.aggregate.mean_grid_max - 2.0).abs() < 1e-9,
            "{:?}",
            r.aggregate
        );
        assert!(r.aggregate.mean_majorant_bound >= r.aggregate.mean_grid_max);
    }

    #[test]
    fn grid_max_grows_with_grid() {
        let pool: Vec<f64> = (1..=6)
            .map(|j| j as f64 / 10.0 + (j * j) as f64 * 1e-3)
            .collect();
        let coarse = avg(pool.clone(), 2, 100.0, 4);
        let fine = avg(pool, 2, 100.0, 16);
        for (a, b) in coarse.per_trial.iter().zip(&fine.per_trial) {
            assert_eq!(a.tuple, b.tuple);
            assert!(b.grid_max >= a.grid_max - 1e-12);
        }
    }

    #[test]
    fn spacing_violation_is_named() {
        let e = average_measure_experiment(&AverageParams {
            freq_pool: vec![1.0, 1.001],
            k: 1,
            radius: 0.1,
            eta: 0.1,
            t: 10.0,
            trials: 4,
            beta_grid: 4,
            seed: 0,
            r: 2,
            max_order: 100,
        })
        .unwrap_err();
        assert!(e.to_string().contains("1.001"), "{e}");
    }
}
