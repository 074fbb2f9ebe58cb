use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use psilab_core::amplifier::{run_pipeline, ExperimentReport, PipelineConfig, Stage};
use psilab_core::bohr_geometry::{
    average_measure_experiment, count_members, interval_extension_check, AverageParams,
    AverageReport, ExtensionReport, TruncatedMeasure,
};
use psilab_core::chebyshev_psi::{Histogram, LargeValueScan, SchoenfeldScan, WintnerMoment};
use psilab_core::explicit_formula::{
    detect_tx, pigeonhole_t, truncated_psi_error, PigeonholeReport, TxReport,
};
use psilab_core::smooth_majorant::VinogradovParams;
use psilab_core::zero_table::{riemann_von_mangoldt, LITERAL_FORM_FACTOR_NOTE};
use psilab_core::{
    build_psi_series, exp_sum, truncated_measure, vinogradov_bump, BohrSpec, Interval, ZeroTable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::cli::{BohrArgs, BumpArgs, PsiSource, RunArgs};
use crate::output::{csv_records, Report};
use crate::sources::{ceil_u64, invalid, load_psi, load_table, psi_cache_path, write_psi};

/// Round to 12 significant digits for human-readable output.
fn display_round(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn table_t(table: &ZeroTable, t: Option<f64>) -> f64 {
    t.unwrap_or_else(|| table.t_max())
}

// ---------------------------------------------------------------- zeros

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct CountRow {
    pub t: f64,
    pub n: usize,
    pub rvm: f64,
    pub rvm_refined: f64,
    /// `n − rvm_refined`.
    pub deviation: f64,
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct ZerosStats {
    pub table_id: String,
    pub zeros: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub rows: Vec<CountRow>,
}

impl Report for ZerosStats {
    const NAME: &'static str = "zeros-stats";

    fn summary(&self) -> Vec<String> {
        let mut v = vec![format!("zeros={} t_max={}", self.zeros, self.t_max)];
        v.extend(self.rows.iter().map(|r| format!("N({})={}", r.t, r.n)));
        v
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        csv_records(out, &self.rows)
    }
}

pub fn zeros_stats(table_path: &Path, ts: &[f64]) -> Result<ZerosStats> {
    let table = load_table(table_path)?;
    let ts = if ts.is_empty() {
        vec![table.t_max()]
    } else {
        ts.to_vec()
    };
    let rows = ts
        .iter()
        .map(|&t| {
            let n = table.count_zeros(t)?;
            let rvm = riemann_von_mangoldt(t, false)?;
            let rvm_refined = riemann_von_mangoldt(t, true)?;
            Ok(CountRow {
                t,
                n,
                rvm,
                rvm_refined,
                deviation: n as f64 - rvm_refined,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ZerosStats {
        table_id: table.source_id().to_string(),
        zeros: table.len(),
        t_min: table.ordinates()[0],
        t_max: table.t_max(),
        rows,
    })
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct PairRow {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub observed: u64,
    pub predicted: f64,
    pub ratio: f64,
    pub unfolded_observed: u64,
    pub unfolded_predicted: f64,
    pub unfolded_ratio: f64,
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct PairCorrelationOut {
    pub table_id: String,
    pub conjugate_factor: f64,
    pub form_factor_note: String,
    pub rows: Vec<PairRow>,
}

impl Report for PairCorrelationOut {
    const NAME: &'static str = "zeros-paircorr";

    fn summary(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "window=({},{}) observed={} predicted={:.1} ratio={:.4} unfolded_ratio={:.4}",
                    r.a, r.b, r.observed, r.predicted, r.ratio, r.unfolded_ratio
                )
            })
            .collect()
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        csv_records(out, &self.rows)
    }
}

pub const DEFAULT_WINDOWS: [(f64, f64); 3] = [(0.25, 0.75), (0.5, 1.0), (1.0, 2.0)];

pub fn zeros_paircorr(
    table_path: &Path,
    t: Option<f64>,
    windows: &[(f64, f64)],
) -> Result<PairCorrelationOut> {
    let table = load_table(table_path)?;
    let t = table_t(&table, t);
    let windows = if windows.is_empty() {
        &DEFAULT_WINDOWS[..]
    } else {
        windows
    };
    let mut rows = Vec::new();
    let mut conjugate_factor = 0.0;
    for &(a, b) in windows {
        let p = table.pair_correlation(t, a, b)?;
        conjugate_factor = p.conjugate_factor;
        rows.push(PairRow {
            t,
            a,
            b,
            observed: p.observed,
            predicted: p.predicted,
            ratio: p.ratio,
            unfolded_observed: p.unfolded.observed,
            unfolded_predicted: p.unfolded.predicted,
            unfolded_ratio: p.unfolded.ratio,
        });
    }
    Ok(PairCorrelationOut {
        table_id: table.source_id().to_string(),
        conjugate_factor,
        form_factor_note: LITERAL_FORM_FACTOR_NOTE.to_string(),
        rows,
    })
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct PartitionOut {
    pub t: f64,
    pub k_param: f64,
    pub c_param: f64,
    pub interval_length: f64,
    pub n_t: usize,
    pub n1: usize,
    pub n2: usize,
    pub n2_fraction: f64,
    pub n2_bound_holds: bool,
}

impl Report for PartitionOut {
    const NAME: &'static str = "zeros-partition";

    fn summary(&self) -> Vec<String> {
        vec![format!(
            "N(T)={} n1={} n2={} n2_fraction={:.3e} bound_holds={}",
            self.n_t, self.n1, self.n2, self.n2_fraction, self.n2_bound_holds
        )]
    }
}

pub fn zeros_partition(table_path: &Path, t: Option<f64>, k: f64, c: f64) -> Result<PartitionOut> {
    let table = load_table(table_path)?;
    let t = table_t(&table, t);
    let p = table.partition_zeros(t, k, c)?;
    Ok(PartitionOut {
        t,
        k_param: p.k_param,
        c_param: p.c_param,
        interval_length: p.interval_length,
        n_t: p.n1.len() + p.n2.len(),
        n1: p.n1.len(),
        n2: p.n2.len(),
        n2_fraction: p.n2_fraction,
        n2_bound_holds: p.n2_bound_holds,
    })
}

// ---------------------------------------------------------------- psi

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct PsiBuild {
    pub limit_x: u64,
    pub checkpoints: usize,
    pub psi_at_limit: f64,
    pub path: String,
}

impl Report for PsiBuild {
    const NAME: &'static str = "psi-build";

    fn summary(&self) -> Vec<String> {
        vec![format!(
            "checkpoints={} limit_x={} psi={} path={}",
            self.checkpoints, self.limit_x, self.psi_at_limit, self.path
        )]
    }
}

pub fn psi_build(limit: u64, out: Option<&Path>, cache_dir: &Path) -> Result<PsiBuild> {
    if limit < 2 {
        return Err(invalid("--limit must be at least 2"));
    }
    let psi = build_psi_series(limit)?;
    let path: PathBuf = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| psi_cache_path(cache_dir, limit));
    write_psi(&path, &psi)?;
    Ok(PsiBuild {
        limit_x: limit,
        checkpoints: psi.jump_points().len(),
        psi_at_limit: psi.psi_at(limit),
        path: path.display().to_string(),
    })
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct PsiScan {
    pub schoenfeld: SchoenfeldScan,
    pub large_values: Option<LargeValueScan>,
}

impl Report for PsiScan {
    const NAME: &'static str = "psi-scan";

    fn summary(&self) -> Vec<String> {
        let s = &self.schoenfeld;
        let mut v = vec![format!(
            "jump_points={} max_ratio={:.6} at x={}",
            s.jump_points_checked, s.max_ratio, s.argmax.x
        )];
        if let Some(l) = &self.large_values {
            v.push(format!(
                "eps={} components={} measure={} witnesses={} separated={}",
                l.eps,
                l.component_count,
                l.measure_estimate,
                l.witnesses.len(),
                l.separated_subset.len()
            ));
        }
        v
    }
}

pub fn psi_scan(
    src: &PsiSource,
    lo: f64,
    hi: f64,
    eps: Option<f64>,
    sep: f64,
    cache: &Path,
) -> Result<PsiScan> {
    if !(lo < hi) {
        return Err(invalid("--lo must be below --hi"));
    }
    let psi = load_psi(src, ceil_u64(hi, "--hi")?, cache)?;
    let schoenfeld = psi.schoenfeld_scan(lo, hi)?;
    let large_values = eps
        .map(|e| psi.large_value_scan(lo, hi, e, sep))
        .transpose()?;
    Ok(PsiScan {
        schoenfeld,
        large_values,
    })
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct MomentOut {
    pub rows: Vec<WintnerMoment>,
}

impl Report for MomentOut {
    const NAME: &'static str = "psi-moment";

    fn summary(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|m| {
                format!(
                    "X={} k={} moment={:.6e} ratio={:.6e} normalized={:.6}",
                    m.limit_x, m.k, m.moment, m.ratio, m.normalized
                )
            })
            .collect()
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        csv_records(out, &self.rows)
    }
}

pub fn psi_moment(src: &PsiSource, xs: &[f64], k: u32, cache: &Path) -> Result<MomentOut> {
    let top = xs.iter().copied().fold(0.0, f64::max);
    let psi = load_psi(src, ceil_u64(top, "--x")?, cache)?;
    let rows = xs
        .iter()
        .map(|&x| psi.wintner_moment(x, k))
        .collect::<Result<_, _>>()?;
    Ok(MomentOut { rows })
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct LogMeasureOut {
    pub limit_x: f64,
    pub c: f64,
    pub log_measure: f64,
    /// `log_measure / log X`.
    pub relative: f64,
}

impl Report for LogMeasureOut {
    const NAME: &'static str = "psi-logmeasure";

    fn summary(&self) -> Vec<String> {
        vec![format!(
            "log_measure={} relative={:.6}",
            self.log_measure, self.relative
        )]
    }
}

pub fn psi_logmeasure(src: &PsiSource, x: f64, c: f64, cache: &Path) -> Result<LogMeasureOut> {
    let psi = load_psi(src, ceil_u64(x, "--x")?, cache)?;
    let log_measure = psi.log_measure_exceptional(x, c)?;
    Ok(LogMeasureOut {
        limit_x: x,
        c,
        log_measure,
        relative: log_measure / x.ln(),
    })
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct BinRow {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub mass: f64,
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct DistOut {
    pub histogram: Histogram,
    pub bins: Vec<BinRow>,
}

impl Report for DistOut {
    const NAME: &'static str = "psi-dist";

    fn summary(&self) -> Vec<String> {
        self.bins
            .iter()
            .map(|b| format!("[{:.4}, {:.4}) {:.6}", b.lo, b.hi, b.mass))
            .collect()
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        csv_records(out, &self.bins)
    }
}

pub fn psi_dist(src: &PsiSource, umax: f64, bins: usize, cache: &Path) -> Result<DistOut> {
    let psi = load_psi(src, ceil_u64(umax.exp(), "exp(--umax)")?, cache)?;
    let h = psi.empirical_distribution(umax, bins)?;
    let rows = h
        .counts
        .iter()
        .zip(&h.mass)
        .enumerate()
        .map(|(i, (&count, &mass))| BinRow {
            lo: h.lo + i as f64 * h.bin_width,
            hi: h.lo + (i + 1) as f64 * h.bin_width,
            count,
            mass,
        })
        .collect();
    Ok(DistOut {
        histogram: h,
        bins: rows,
    })
}

// ---------------------------------------------------------------- explicit

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct SumOut {
    pub x: f64,
    pub t: f64,
    pub zeros_used: usize,
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    /// `modulus / N(t)`.
    pub normalized: f64,
}

impl Report for SumOut {
    const NAME: &'static str = "explicit-sum";

    fn summary(&self) -> Vec<String> {
        vec![format!(
            "S(x,t)={} + {}i |S|={} N(t)={}",
            self.re, self.im, self.modulus, self.zeros_used
        )]
    }
}

pub fn explicit_sum(table_path: &Path, x: f64, t: Option<f64>) -> Result<SumOut> {
    let table = load_table(table_path)?;
    let t = table_t(&table, t);
    let s = exp_sum(&table, x, t)?;
    let n = table.count_zeros(t)?;
    Ok(SumOut {
        x,
        t,
        zeros_used: n,
        re: s.re,
        im: s.im,
        modulus: s.norm(),
        normalized: if n > 0 { s.norm() / n as f64 } else { 0.0 },
    })
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct CompareRow {
    pub x: f64,
    pub t_cut: f64,
    pub formula: f64,
    pub actual: f64,
    pub difference: f64,
    pub bound: f64,
    pub within_bound: bool,
    pub zeros_used: usize,
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct CompareOut {
    pub rows: Vec<CompareRow>,
}

impl Report for CompareOut {
    const NAME: &'static str = "explicit-compare";

    fn summary(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "x={} formula={:.6} actual={:.6} diff={:.3e} bound={:.3e}",
                    r.x, r.formula, r.actual, r.difference, r.bound
                )
            })
            .collect()
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        csv_records(out, &self.rows)
    }
}

pub fn explicit_compare(
    table_path: &Path,
    src: &PsiSource,
    xs: &[f64],
    t_cut: Option<f64>,
    cache: &Path,
) -> Result<CompareOut> {
    let table = load_table(table_path)?;
    let t_cut = table_t(&table, t_cut);
    let top = xs.iter().copied().fold(0.0, f64::max);
    let psi = load_psi(src, ceil_u64(top, "--x")?, cache)?;
    let rows = xs
        .iter()
        .map(|&x| {
            let f = truncated_psi_error(&table, x, t_cut)?;
            let actual = psi.error_term(x)?.err;
            let difference = (f.value - actual).abs();
            Ok(CompareRow {
                x,
                t_cut,
                formula: f.value,
                actual,
                difference,
                bound: f.truncation_bound,
                within_bound: difference <= f.truncation_bound,
                zeros_used: f.zeros_used,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CompareOut { rows })
}

impl Report for TxReport {
    const NAME: &'static str = "explicit-tx";

    fn summary(&self) -> Vec<String> {
        vec![format!(
            "window=[{}, {}] components={} log_integral={} rhs={} holds={}",
            self.window_lo,
            self.window_hi,
            self.t_set.component_count,
            self.log_integral,
            self.rhs,
            self.inequality_holds
        )]
    }
}

#[allow(clippy::too_many_arguments)]
pub fn explicit_tx(
    table_path: &Path,
    x: f64,
    big_x: f64,
    eps: f64,
    alpha: f64,
    beta: f64,
    coeff: f64,
) -> Result<TxReport> {
    let table = load_table(table_path)?;
    Ok(detect_tx(&table, x, big_x, eps, alpha, beta, coeff)?)
}

impl Report for PigeonholeReport {
    const NAME: &'static str = "explicit-pigeonhole";

    fn summary(&self) -> Vec<String> {
        vec![format!(
            "t_star={} x0={} fraction={} benchmark={} benchmark_reduced={}",
            self.t_star,
            self.x0.len(),
            self.fraction,
            self.benchmark,
            self.benchmark_reduced
        )]
    }
}

#[allow(clippy::too_many_arguments)]
pub fn explicit_pigeonhole(
    table_path: &Path,
    xs: &[f64],
    big_x: f64,
    eps: f64,
    alpha: f64,
    beta: f64,
    coeff: f64,
    grid: usize,
) -> Result<PigeonholeReport> {
    let table = load_table(table_path)?;
    Ok(pigeonhole_t(
        &table, xs, big_x, eps, alpha, beta, coeff, grid,
    )?)
}

// ---------------------------------------------------------------- bohr

fn spec_of(a: &BohrArgs) -> Result<BohrSpec> {
    if a.freqs.len() != a.phases.len() {
        return Err(invalid(format!(
            "--freqs has {} values but --phases has {}",
            a.freqs.len(),
            a.phases.len()
        )));
    }
    Ok(BohrSpec::new(
        a.freqs.clone(),
        a.phases.clone(),
        a.rho,
        Some(a.t),
    )?)
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct MeasureOut {
    pub spec: BohrSpec,
    pub measure: f64,
    pub components: usize,
    pub intervals: Vec<Interval>,
}

impl Report for MeasureOut {
    const NAME: &'static str = "bohr-measure";

    fn summary(&self) -> Vec<String> {
        vec![format!(
            "measure={:?} components={}",
            display_round(self.measure),
            self.components
        )]
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        csv_records(out, &self.intervals)
    }
}

pub fn bohr_measure(args: &BohrArgs) -> Result<MeasureOut> {
    let spec = spec_of(args)?;
    let TruncatedMeasure {
        measure,
        decomposition,
    } = truncated_measure(&spec)?;
    Ok(MeasureOut {
        spec,
        measure,
        components: decomposition.component_count,
        intervals: decomposition.intervals,
    })
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct CountOut {
    pub spec: BohrSpec,
    pub table_id: String,
    /// Ordinates up to T.
    pub candidates: usize,
    pub count: usize,
}

impl Report for CountOut {
    const NAME: &'static str = "bohr-count";

    fn summary(&self) -> Vec<String> {
        vec![format!("count={} of {}", self.count, self.candidates)]
    }
}

pub fn bohr_count(args: &BohrArgs, table_path: &Path) -> Result<CountOut> {
    let spec = spec_of(args)?;
    let table = load_table(table_path)?;
    let zs = table.up_to(args.t);
    Ok(CountOut {
        count: count_members(&spec, zs),
        candidates: zs.len(),
        table_id: table.source_id().to_string(),
        spec,
    })
}

impl Report for ExtensionReport {
    const NAME: &'static str = "bohr-extend";

    fn summary(&self) -> Vec<String> {
        vec![format!(
            "window_max={} extended_measure={} lhs={} rhs={} ratio={}",
            self.window_max, self.extended_measure, self.lhs, self.rhs, self.ratio
        )]
    }
}

pub fn bohr_extend(
    args: &BohrArgs,
    table_path: &Path,
    eta: f64,
    a_const: f64,
) -> Result<ExtensionReport> {
    let spec = spec_of(args)?;
    let table = load_table(table_path)?;
    Ok(interval_extension_check(
        &spec,
        table.up_to(args.t),
        eta,
        a_const,
    )?)
}

impl Report for AverageReport {
    const NAME: &'static str = "bohr-average";

    fn summary(&self) -> Vec<String> {
        let a = &self.aggregate;
        vec![format!(
            "tuples={} mean_grid_max={} mean_majorant_bound={} main_term={} grid_ratio={}",
            a.tuples_evaluated, a.mean_grid_max, a.mean_majorant_bound, a.main_term, a.grid_ratio
        )]
    }
}

pub fn bohr_average(params: AverageParams) -> Result<AverageReport> {
    Ok(average_measure_experiment(&params)?)
}

// ---------------------------------------------------------------- majorant

fn bump_params(b: &BumpArgs) -> VinogradovParams {
    VinogradovParams {
        a: b.a,
        b: b.b,
        delta: b.delta,
        r: b.r,
    }
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct MajorantCheck {
    pub params: VinogradovParams,
    pub m_max: i64,
    /// `a_0 = b − a`.
    pub zero_coefficient_ok: bool,
    /// Frequencies `0 < |m| ≤ m_max` violating any of the three decay bounds.
    pub bound_violations: u64,
    pub samples: usize,
    /// Samples where the value leaves `[0, 1]`, is not 1 on the plateau
    /// `[a + Δ/2, b − Δ/2]` or not 0 outside `[a − Δ/2, b + Δ/2]`.
    pub shape_violations: u64,
    pub truncation_order: u64,
    pub certified_tail: f64,
    pub max_truncation_error: f64,
    pub truncation_within_tail: bool,
}

impl Report for MajorantCheck {
    const NAME: &'static str = "majorant-check";

    fn summary(&self) -> Vec<String> {
        vec![
            format!(
                "bound_violations={} shape_violations={} a0_ok={}",
                self.bound_violations, self.shape_violations, self.zero_coefficient_ok
            ),
            format!(
                "order={} tail={:e} max_error={:e} within={}",
                self.truncation_order,
                self.certified_tail,
                self.max_truncation_error,
                self.truncation_within_tail
            ),
        ]
    }
}

pub fn majorant_check(
    bump: &BumpArgs,
    m_max: i64,
    points: usize,
    tol: f64,
    seed: u64,
) -> Result<MajorantCheck> {
    if m_max < 1 || points == 0 || !(tol > 0.0) {
        return Err(invalid("--m-max and --points must be positive, --tol > 0"));
    }
    let params = bump_params(bump);
    let f = vinogradov_bump(params)?;
    let a0 = f.coefficient(0);
    let zero_coefficient_ok = a0.re == params.b - params.a && a0.im == 0.0;
    let bound_violations = (1..=m_max)
        .flat_map(|m| [m, -m])
        .filter(|&m| {
            let c = f.coefficient(m).norm();
            f.coefficient_bounds(m).iter().any(|&b| c > b)
        })
        .count() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..points).map(|_| rng.gen::<f64>()).collect();
    let half = 0.5 * params.delta;
    let center = 0.5 * (params.a + params.b);
    let hw = 0.5 * (params.b - params.a);
    let shape_violations = xs
        .iter()
        .filter(|&&x| {
            let v = f.value(x);
            let d = (x - center - (x - center).round()).abs();
            !(0.0..=1.0).contains(&v)
                || (d <= hw - half && v != 1.0)
                || (d >= hw + half && v != 0.0)
        })
        .count() as u64;
    let order = f.order_for_tail(tol);
    let tail = f.tail_bound(order);
    let truncated = f.truncated_values(&xs, order);
    let max_truncation_error = xs
        .iter()
        .zip(&truncated)
        .map(|(&x, &t)| (t - f.value(x)).abs())
        .fold(0.0, f64::max);
    Ok(MajorantCheck {
        params,
        m_max,
        zero_coefficient_ok,
        bound_violations,
        samples: points,
        shape_violations,
        truncation_order: order,
        certified_tail: tail,
        max_truncation_error,
        truncation_within_tail: max_truncation_error <= tail + 1e-12,
    })
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct CoefficientRow {
    pub m: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct MajorantDump {
    pub params: VinogradovParams,
    pub order: u64,
    pub tail_bound: f64,
    pub coefficients: Vec<CoefficientRow>,
}

impl Report for MajorantDump {
    const NAME: &'static str = "majorant-dump";

    fn summary(&self) -> Vec<String> {
        let mut v = vec![format!(
            "order={} tail_bound={:e}",
            self.order, self.tail_bound
        )];
        v.extend(
            self.coefficients
                .iter()
                .map(|c| format!("{} {} {}", c.m, c.re, c.im)),
        );
        v
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        csv_records(out, &self.coefficients)
    }
}

pub fn majorant_dump(bump: &BumpArgs, order: u64) -> Result<MajorantDump> {
    if order > 10_000_000 {
        return Err(invalid("--order is limited to 1e7"));
    }
    let params = bump_params(bump);
    let f = vinogradov_bump(params)?;
    let o = order as i64;
    let coefficients = (-o..=o)
        .map(|m| {
            let c = f.coefficient(m);
            CoefficientRow {
                m,
                re: c.re,
                im: c.im,
            }
        })
        .collect();
    Ok(MajorantDump {
        params,
        order,
        tail_bound: f.tail_bound(order),
        coefficients,
    })
}

// ---------------------------------------------------------------- experiment

impl Report for ExperimentReport {
    const NAME: &'static str = "experiment-run";

    fn summary(&self) -> Vec<String> {
        fn line<T>(name: &str, s: &Stage<T>, detail: impl FnOnce(&T) -> String) -> String {
            match s {
                Stage::Complete { output } => format!("{name}: {}", detail(output)),
                Stage::NotReached {
                    failed_precondition,
                } => {
                    format!("{name}: not reached ({failed_precondition})")
                }
            }
        }
        let s = &self.stages;
        let d = &self.derived;
        vec![
            format!(
                "X={} eps={} delta={} alpha={} beta={} rho={} eta={:e} k={} (uncapped {})",
                self.inputs.x_lo,
                self.inputs.eps,
                self.inputs.delta,
                d.alpha,
                d.beta,
                d.rho,
                d.eta,
                d.k_used,
                d.k_theory
            ),
            line("large values", &s.large_values, |o| {
                format!(
                    "{} witnesses ({}), components={} measure={}",
                    o.witnesses.len(),
                    o.witness_kind,
                    o.component_count,
                    o.measure
                )
            }),
            line("pigeonhole", &s.pigeonhole, |o| {
                format!(
                    "t_star={} x0={} fraction={}",
                    o.t_star,
                    o.x0.len(),
                    o.fraction
                )
            }),
            line("partition", &s.partition, |o| {
                format!("N(T)={} n1={} n2={}", o.n_t, o.n1, o.n2)
            }),
            line("concentration", &s.concentration, |o| {
                format!(
                    "hypotheses met {}/{}, thresholds met {}",
                    o.hypotheses_met,
                    o.per_witness.len(),
                    o.thresholds_met
                )
            }),
            line("holder", &s.holder, |o| {
                // A zero right-hand side is stored as f64::MIN in place of log 0.
                let rhs_log = if o.rhs > 0.0 {
                    o.rhs_log.to_string()
                } else {
                    "-inf".into()
                };
                format!(
                    "k={} lhs_log={} rhs={} rhs_log={rhs_log}",
                    o.k, o.lhs_log, o.rhs
                )
            }),
            line("bohr", &s.bohr, |o| {
                format!("k={} extension_max_ratio={}", o.k, o.extension_max_ratio)
            }),
            line("final", &s.final_inequality, |o| {
                format!(
                    "lhs_log={} rhs_log={} dominant={} (capped: {})",
                    o.lhs_log, o.rhs_log, o.dominant, o.dominant_capped
                )
            }),
        ]
    }
}

fn read_config(path: &Path) -> Result<PipelineConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| invalid(format!("{}: {}", path.display(), e.replace('\n', " "))))
}

pub fn experiment_run(
    args: &RunArgs,
    seed: u64,
    seed_given: bool,
    cache: &Path,
) -> Result<ExperimentReport> {
    let mut cfg = match &args.config {
        Some(p) => read_config(p)?,
        None => {
            let need = |v: Option<f64>, flag: &str| {
                v.ok_or_else(|| invalid(format!("{flag} is required without --config")))
            };
            let mut c = PipelineConfig::new(
                need(args.x, "--x")?,
                need(args.eps, "--eps")?,
                need(args.delta, "--delta")?,
            );
            c.seed = seed;
            c
        }
    };
    if let Some(v) = args.x {
        cfg.x = v;
    }
    if let Some(v) = args.eps {
        cfg.eps = v;
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.c_const {
        cfg.c_const = v;
    }
    if let Some(v) = args.a_const {
        cfg.a_const = v;
    }
    if let Some(v) = args.k_max {
        cfg.k_max = v;
    }
    if let Some(v) = args.threshold_coeff {
        cfg.threshold_coeff = v;
    }
    if seed_given {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let table = load_table(&args.table.table)?;
    let psi = load_psi(&args.psi, ceil_u64(cfg.x_hi(), "2X")?, cache)?;
    Ok(run_pipeline(&cfg, &psi, &table)?)
}
