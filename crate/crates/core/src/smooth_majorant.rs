//! Smooth periodic majorants of arcs and of Bohr sets.
//!
//! The one-dimensional bump is the indicator of `[a, b]` convolved with `r`
//! uniform kernels on `[-Δ/(2r), Δ/(2r)]`, periodized with period 1. Both its
//! values (an Irwin–Hall CDF difference) and its Fourier coefficients (a box
//! transform times a power of sinc) are available in closed form.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::phase::{dist_to_int, e_turns};
use crate::summation::{CompensatedSum, ComplexSum};

/// Largest smoothing order accepted; the Irwin–Hall alternating sum loses
/// accuracy beyond this.
pub const MAX_ORDER: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct VinogradovParams {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub r: u32,
}

impl VinogradovParams {
    pub fn new(a: f64, b: f64, delta: f64, r: u32) -> Result<Self> {
        let p = Self { a, b, delta, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a, b, delta, r } = *self;
        let fail = |what: &str| Err(LabError::domain(format!("bump parameters violate {what}")));
        if !(a.is_finite() && b.is_finite() && delta.is_finite()) {
            return fail("finiteness");
        }
        if !(delta > 0.0 && delta < 0.5) {
            return fail("0 < delta < 1/2");
        }
        if !(delta <= b - a) {
            return fail("delta <= b - a");
        }
        if !(b - a <= 1.0 - delta) {
            return fail("b - a <= 1 - delta");
        }
        if r == 0 || r > MAX_ORDER {
            return fail(&format!("1 <= r <= {MAX_ORDER}"));
        }
        Ok(())
    }
}

/// CDF of the sum of `r` independent U[0,1] variables.
fn irwin_hall_cdf(u: f64, r: u32) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= r as f64 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for j in 1..=r {
        fact *= j as f64;
    }
    for j in 0..=(u.floor() as u32) {
        let term = binom * (u - j as f64).powi(r as i32);
        sum += if j % 2 == 0 { term } else { -term };
        binom = binom * (r - j) as f64 / (j + 1) as f64;
    }
    (sum / fact).clamp(0.0, 1.0)
}

/// `sin(πy)/(πy)` with the removable singularity filled.
fn sinc(y: f64) -> f64 {
    if y == 0.0 {
        1.0
    } else {
        (PI * y).sin() / (PI * y)
    }
}

/// The periodized smoothed arc with both time-domain and Fourier access.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMajorant {
    params: VinogradovParams,
    center: f64,
    half_width: f64,
    /// Half-width of each uniform smoothing kernel.
    h: f64,
}

/// Construct the smoothed arc for `params`.
pub fn vinogradov_bump(params: VinogradovParams) -> Result<FourierMajorant> {
    params.validate()?;
    Ok(FourierMajorant {
        params,
        center: 0.5 * (params.a + params.b),
        half_width: 0.5 * (params.b - params.a),
        h: params.delta / (2.0 * params.r as f64),
    })
}

impl FourierMajorant {
    pub fn params(&self) -> VinogradovParams {
        self.params
    }

    /// Exact value at `x`.
    pub fn value(&self, x: f64) -> f64 {
        let d = dist_to_int(x - self.center);
        self.value_at_offset(d)
    }

    /// Value at distance `d ∈ [0, ½]` from the arc center.
    fn value_at_offset(&self, d: f64) -> f64 {
        let half_delta = 0.5 * self.params.delta;
        if d <= self.half_width - half_delta {
            return 1.0;
        }
        if d >= self.half_width + half_delta {
            return 0.0;
        }
        let r = self.params.r;
        let cdf = |s: f64| irwin_hall_cdf(s / (2.0 * self.h) + 0.5 * r as f64, r);
        (cdf(self.half_width - d) - cdf(-self.half_width - d)).clamp(0.0, 1.0)
    }

    /// `a_m = e(−m(a+b)/2) · sin(πm(b−a))/(πm) · sinc(mΔ/r)^r`.
    pub fn coefficient(&self, m: i64) -> Complex64 {
        if m == 0 {
            return Complex64::new(self.params.b - self.params.a, 0.0);
        }
        let mf = m as f64;
        let box_part = (PI * mf * (self.params.b - self.params.a)).sin() / (PI * mf);
        let smooth = sinc(mf * 2.0 * self.h).powi(self.params.r as i32);
        e_turns(-mf * self.center) * (box_part * smooth)
    }

    /// The three nonzero-frequency bounds `2(b−a)`, `2/(π|m|)` and
    /// `(2/(π|m|))(r/(π|m|Δ))^r`.
    pub fn coefficient_bounds(&self, m: i64) -> [f64; 3] {
        let VinogradovParams { a, b, delta, r } = self.params;
        let am = (m as f64).abs();
        let base = 2.0 / (PI * am);
        [
            2.0 * (b - a),
            base,
            base * (r as f64 / (PI * am * delta)).powi(r as i32),
        ]
    }

    /// Certified bound on `Σ_{|m|>M} |a_m|`.
    pub fn tail_bound(&self, order: u64) -> f64 {
        if order == 0 {
            return f64::INFINITY;
        }
        let r = self.params.r as f64;
        let q = r / (PI * self.params.delta);
        4.0 / PI * q.powf(r) / (r * (order as f64).powf(r))
    }

    /// Smallest `M` whose tail bound is at most `tol`.
    pub fn order_for_tail(&self, tol: f64) -> u64 {
        let r = self.params.r as f64;
        let q = r / (PI * self.params.delta);
        let m = (4.0 / PI * q.powf(r) / (r * tol))
            .powf(1.0 / r)
            .ceil()
            .max(1.0) as u64;
        let mut m = m;
        while self.tail_bound(m) > tol {
            m += 1;
        }
        m
    }

    /// `a_0 + 2 Re Σ_{m=1}^{M} a_m e(mx)`.
    pub fn truncated_value(&self, x: f64, order: u64) -> f64 {
        let mut acc = CompensatedSum::new();
        for m in 1..=order as i64 {
            acc.add(2.0 * (self.coefficient(m) * e_turns(m as f64 * x)).re);
        }
        self.params.b - self.params.a + acc.value()
    }

    /// [`Self::truncated_value`] at many points with one coefficient table.
    /// Phases advance by multiplication and are resynchronized every 64 terms.
    pub fn truncated_values(&self, xs: &[f64], order: u64) -> Vec<f64> {
        let coeffs: Vec<Complex64> = (1..=order as i64).map(|m| self.coefficient(m)).collect();
        let a0 = self.params.b - self.params.a;
        xs.par_iter()
            .map(|&x| {
                let step = e_turns(x);
                let mut z = step;
                let mut acc = CompensatedSum::new();
                for (i, c) in coeffs.iter().enumerate() {
                    if i % 64 == 0 {
                        z = e_turns((i + 1) as f64 * x);
                    }
                    acc.add(2.0 * (c * z).re);
                    z *= step;
                }
                a0 + acc.value()
            })
            .collect()
    }

    /// Coefficients for `−M ≤ m ≤ M` as CSV rows `m,re,im`.
    pub fn write_coefficients_csv<W: Write>(&self, mut out: W, order: u64) -> std::io::Result<()> {
        writeln!(out, "m,re,im")?;
        let order = order as i64;
        for m in -order..=order {
            let c = self.coefficient(m);
            writeln!(out, "{m},{:?},{:?}", c.re, c.im)?;
        }
        Ok(())
    }
}

/// Product majorant `Π_ℓ Ψ(α_ℓ x + β_ℓ)` of the Bohr set `B(α, β; ρ)`,
/// built from the arc `[−ρ(1+η), ρ(1+η)]` with `Δ = 2ρη`.
#[derive(Debug, Clone, PartialEq)]
pub struct BohrMajorant {
    freqs: Vec<f64>,
    phases: Vec<f64>,
    radius: f64,
    eta: f64,
    bump: FourierMajorant,
}

/// Build the Bohr-set majorant, rejecting `(ρ, η)` for which the arc
/// parameters leave the admissible range.
pub fn bohr_majorant(
    freqs: &[f64],
    phases: &[f64],
    radius: f64,
    eta: f64,
    r: u32,
) -> Result<BohrMajorant> {
    if freqs.is_empty() || freqs.len() != phases.len() {
        return Err(LabError::domain(
            "majorant needs matching, nonempty frequency and phase lists",
        ));
    }
    if !(radius > 0.0 && eta > 0.0) {
        return Err(LabError::domain("majorant needs rho > 0 and eta > 0"));
    }
    let w = radius * (1.0 + eta);
    let params = VinogradovParams::new(-w, w, 2.0 * radius * eta, r)?;
    Ok(BohrMajorant {
        freqs: freqs.to_vec(),
        phases: phases.to_vec(),
        radius,
        eta,
        bump: vinogradov_bump(params)?,
    })
}

impl BohrMajorant {
    pub fn rank(&self) -> usize {
        self.freqs.len()
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn order(&self) -> u32 {
        self.bump.params.r
    }

    pub fn factor(&self) -> &FourierMajorant {
        &self.bump
    }

    pub fn value(&self, x: f64) -> f64 {
        let mut v = 1.0;
        for (&a, &b) in self.freqs.iter().zip(&self.phases) {
            let d = dist_to_int(a * x + b);
            if d <= self.radius {
                continue;
            }
            v *= self.bump.value_at_offset(d);
            if v == 0.0 {
                break;
            }
        }
        v
    }

    /// Per-factor bounds `4ρ(1+η)`, `2/(π|m|)` and `(2/(π|m|))(r/(2π|m|ρη))^r`.
    pub fn coefficient_bounds(&self, m: i64) -> [f64; 3] {
        let am = (m as f64).abs();
        let r = self.order();
        let base = 2.0 / (PI * am);
        [
            4.0 * self.radius * (1.0 + self.eta),
            base,
            base * (r as f64 / (2.0 * PI * am * self.radius * self.eta)).powi(r as i32),
        ]
    }

    /// Coefficient bound used in the remainder:
    /// `min{4ρ(1+η), 2/(π|m|), (2/(π|m|))(r/(π|m|ρη))^r}`, and `a_0` at 0.
    pub fn a_prime(&self, m: i64) -> f64 {
        if m == 0 {
            return 2.0 * self.radius * (1.0 + self.eta);
        }
        let am = (m as f64).abs();
        let r = self.order();
        let base = 2.0 / (PI * am);
        let third = base * (r as f64 / (PI * am * self.radius * self.eta)).powi(r as i32);
        (4.0 * self.radius * (1.0 + self.eta)).min(base).min(third)
    }

    /// Bound on `Σ_{|m|>M} a'_m` by integral comparison against
    /// `min{2/(πx), (2/(πx))(q/x)^r}`, `q = r/(πρη)`.
    fn a_prime_tail(&self, order: u64) -> f64 {
        let r = self.order() as f64;
        let q = r / (PI * self.radius * self.eta);
        let m = order.max(1) as f64;
        let one_side = if m < q {
            2.0 / PI * ((q / m).ln() + 1.0 / r)
        } else {
            2.0 / PI * (q / m).powf(r) / r
        };
        2.0 * one_side
    }
}

/// `f(x) = (sin(πx/2)/(πx/2))²`.
pub fn cutoff_kernel(x: f64) -> f64 {
    sinc(0.5 * x).powi(2)
}

/// `f̂(ξ) = ∫ f(x) e(−ξx) dx = 2·max(0, 1 − 2|ξ|)`, supported in `[−½, ½]`.
pub fn cutoff_transform(xi: f64) -> f64 {
    2.0 * (1.0 - 2.0 * xi.abs()).max(0.0)
}

/// `min_{|x|≤1} f(x) = (2/π)²`.
pub const CUTOFF_MIN: f64 = 4.0 / (PI * PI);

/// `Σ_points Ψ_{α,β}(point)`.
pub fn majorized_count(points: &[f64], majorant: &BohrMajorant) -> f64 {
    points
        .iter()
        .map(|&p| majorant.value(p))
        .sum::<CompensatedSum>()
        .value()
}

/// Fourier-side bound on `μ(B(α, β, T; ρ))` via the smoothed integral
/// `∫ f((t − T/2)/(T/2)) Ψ_{α,β}(t) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SmoothedMeasureBound {
    pub t: f64,
    pub order: u64,
    /// Tuples `m` with `|m·α| < 1/T` enumerated in `[−M, M]^k`.
    pub resonant_tuples: u64,
    /// `T·(2ρ(1+η))^k`.
    pub main_term: f64,
    /// Real part of the enumerated `m ≠ 0` contribution.
    pub remainder: f64,
    /// `T Σ_{m≠0, |m·α|<1/T} Π a'_{m_j}` over the enumerated box.
    pub a_prime_remainder: f64,
    /// Bound on everything outside the box.
    pub tail: f64,
    /// `main_term + remainder + tail`.
    pub smoothed_integral_upper: f64,
    /// `smoothed_integral_upper / (2/π)²`.
    pub measure_upper: f64,
    /// `(main_term + a_prime_remainder + tail) / (2/π)²`.
    pub a_prime_measure_upper: f64,
}

/// Enumerate resonant frequency tuples for the smoothed integral. The box
/// order `M` is the largest with `(2M+1)^{k−1} ≤ budget`, capped at
/// `max_order`.
pub fn smoothed_measure_bound(
    majorant: &BohrMajorant,
    t: f64,
    max_order: u64,
    budget: u64,
) -> Result<SmoothedMeasureBound> {
    if !(t > 0.0) {
        return Err(LabError::domain("smoothed bound needs T > 0"));
    }
    let k = majorant.rank();
    if majorant.freqs.contains(&0.0) {
        return Err(LabError::domain("smoothed bound needs nonzero frequencies"));
    }
    let mut order = max_order.max(1);
    if k > 1 {
        let per_axis = (budget.max(1) as f64).powf(1.0 / (k - 1) as f64);
        order = order.min((((per_axis - 1.0) / 2.0).floor() as u64).max(1));
    }
    let alphas = &majorant.freqs;
    let betas = &majorant.phases;
    let last = k - 1;
    let a_last = alphas[last];
    let half = 0.5 * t;
    let mut remainder = ComplexSum::new();
    let mut a_prime_rem = CompensatedSum::new();
    let mut resonant = 0u64;
    let mut m = vec![-(order as i64); last];
    loop {
        let partial: f64 = m.iter().zip(alphas).map(|(&mi, &a)| mi as f64 * a).sum();
        // |partial + m_k α_k| < 1/T.
        let lo = ((-partial - 1.0 / t) / a_last).min((-partial + 1.0 / t) / a_last);
        let hi = ((-partial - 1.0 / t) / a_last).max((-partial + 1.0 / t) / a_last);
        let mk_lo = (lo.ceil() as i64).max(-(order as i64));
        let mk_hi = (hi.floor() as i64).min(order as i64);
        for mk in mk_lo..=mk_hi {
            if mk == 0 && m.iter().all(|&x| x == 0) {
                continue;
            }
            let lambda = partial + mk as f64 * a_last;
            let kernel = cutoff_transform(lambda * half);
            if kernel == 0.0 {
                continue;
            }
            resonant += 1;
            let mut coeff = Complex64::new(1.0, 0.0);
            let mut bound = 1.0;
            let mut phase = 0.0;
            for (j, &mj) in m.iter().chain(std::iter::once(&mk)).enumerate() {
                coeff *= majorant.bump.coefficient(mj);
                bound *= majorant.a_prime(mj);
                phase += mj as f64 * betas[j];
            }
            let term = coeff * e_turns(phase + lambda * half) * (half * kernel);
            remainder.add(term);
            a_prime_rem.add(t * bound);
        }
        // Odometer over the first k−1 coordinates.
        let mut i = 0;
        while i < last {
            m[i] += 1;
            if m[i] <= order as i64 {
                break;
            }
            m[i] = -(order as i64);
            i += 1;
        }
        if i == last {
            break;
        }
    }
    let a0 = 2.0 * majorant.radius * (1.0 + majorant.eta);
    let main_term = t * a0.powi(k as i32);
    let inner: f64 = a0 + 2.0 * (1..=order).map(|m| majorant.a_prime(m as i64)).sum::<f64>();
    let outer = majorant.a_prime_tail(order);
    let full = inner + outer;
    let tail = t * (k as f64) * outer * full.powi(k as i32 - 1);
    let remainder = remainder.value().re;
    let a_prime_remainder = a_prime_rem.value();
    let smoothed_integral_upper = main_term + remainder + tail;
    Ok(SmoothedMeasureBound {
        t,
        order,
        resonant_tuples: resonant,
        main_term,
        remainder,
        a_prime_remainder,
        tail,
        smoothed_integral_upper,
        measure_upper: smoothed_integral_upper / CUTOFF_MIN,
        a_prime_measure_upper: (main_term + a_prime_remainder + tail) / CUTOFF_MIN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn bump(a: f64, b: f64, d: f64, r: u32) -> FourierMajorant {
        vinogradov_bump(VinogradovParams::new(a, b, d, r).unwrap()).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(VinogradovParams::new(0.0, 0.3, 0.5, 2).is_err());
        assert!(VinogradovParams::new(0.0, 0.01, 0.02, 2).is_err());
        assert!(VinogradovParams::new(0.0, 0.95, 0.1, 2).is_err());
        assert!(VinogradovParams::new(0.0, 0.3, 0.1, 0).is_err());
    }

    #[test]
    fn zeroth_coefficient_is_length() {
        let f = bump(-0.11, 0.11, 0.02, 2);
        assert_eq!(f.coefficient(0).re, 0.11 - -0.11);
    }

    #[test]
    fn plateau_and_vanishing() {
        let f = bump(0.1, 0.4, 0.05, 3);
        assert_eq!(f.value(0.25), 1.0);
        assert_eq!(f.value(0.1 + 0.025), 1.0);
        assert_eq!(f.value(0.4 + 0.025), 0.0);
        assert_eq!(f.value(1.07), 0.0);
        let v = f.value(0.1);
        assert!((v - 0.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn coefficient_example_bound() {
        let f = bump(-0.11, 0.11, 0.02, 2);
        let c = f.coefficient(50).norm();
        let bound = 2.0 / (PI * 50.0) * (2.0 / (PI * 50.0 * 0.02)).powi(2);
        assert!(c <= bound, "{c} > {bound}");
    }

    #[test]
    fn coefficients_match_quadrature() {
        let f = bump(0.05, 0.3, 0.08, 2);
        for m in [1i64, 3, 7] {
            let re = integrate(
                |x| f.value(x) * (2.0 * PI * m as f64 * x).cos(),
                0.0,
                1.0,
                1e-12,
            )
            .unwrap();
            let im = -integrate(
                |x| f.value(x) * (2.0 * PI * m as f64 * x).sin(),
                0.0,
                1.0,
                1e-12,
            )
            .unwrap();
            let c = f.coefficient(m);
            assert!(
                (c.re - re).abs() < 1e-9 && (c.im - im).abs() < 1e-9,
                "m={m}: {c} vs {re}+{im}i"
            );
        }
    }

    #[test]
    fn truncated_series_within_tail() {
        let f = bump(-0.2, 0.15, 0.1, 3);
        let m = f.order_for_tail(1e-6);
        let tail = f.tail_bound(m);
        for i in 0..200 {
            let x = i as f64 / 200.0 + 0.0013;
            assert!((f.truncated_value(x, m) - f.value(x)).abs() <= tail + 1e-12);
        }
    }

    #[test]
    fn batched_truncation_matches_direct() {
        let f = bump(0.1, 0.4, 0.05, 2);
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.0371).collect();
        let batch = f.truncated_values(&xs, 3000);
        for (x, v) in xs.iter().zip(batch) {
            assert!((f.truncated_value(*x, 3000) - v).abs() < 1e-11);
        }
    }

    #[test]
    fn kernel_values() {
        assert_eq!(cutoff_kernel(0.0), 1.0);
        assert!((cutoff_kernel(1.0) - CUTOFF_MIN).abs() < 1e-15);
        assert_eq!(cutoff_transform(1.5), 0.0);
        let total = integrate(cutoff_kernel, -400.0, 400.0, 1e-10).unwrap();
        assert!((total - cutoff_transform(0.0)).abs() < 0.01, "{total}");
    }

    #[test]
    fn majorized_count_example() {
        let maj = bohr_majorant(&[1.0], &[0.0], 0.1, 0.1, 2).unwrap();
        assert_eq!(maj.value(0.05), 1.0);
        assert_eq!(maj.value(0.5), 0.0);
        assert_eq!(majorized_count(&[0.05, 0.5], &maj), 1.0);
        assert_eq!(majorized_count(&[], &maj), 0.0);
        assert_eq!(maj.factor().coefficient(0).re, 2.0 * 0.1 * 1.1);
    }

    #[test]
    fn majorant_hypothesis_failure_names_inequality() {
        let e = bohr_majorant(&[1.0], &[0.0], 0.4, 0.5, 2).unwrap_err();
        assert!(e.to_string().contains("b - a <= 1 - delta"), "{e}");
    }

    #[test]
    fn smoothed_bound_dominates_rank_one_measure() {
        let maj = bohr_majorant(&[1.0], &[0.3], 0.1, 0.1, 2).unwrap();
        let b = smoothed_measure_bound(&maj, 10.0, 1000, 1_000_000).unwrap();
        assert!(b.measure_upper >= 2.0, "{b:?}");
        assert!(b.a_prime_measure_upper >= b.measure_upper - 1e-9);
    }

    #[test]
    fn csv_dump_shape() {
        let f = bump(-0.1, 0.1, 0.05, 2);
        let mut buf = Vec::new();
        f.write_coefficients_csv(&mut buf, 2).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 6);
        assert!(s.starts_with("m,re,im\n-2,"));
    }
}
