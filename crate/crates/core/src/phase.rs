//! Phase reduction for oscillatory sums.
//!
//! Terms like `x^{iγ} = exp(iγ log x)` have phases up to ~1e6 radians at
//! desk scale. The product `γ·log x` is formed exactly as a double-double
//! and reduced modulo 2π against a three-part constant before any
//! trigonometric call.

use std::f64::consts::TAU;

use num_complex::Complex64;

// 2π = TAU_HI + TAU_MID + TAU_LO to ~160 bits. Each fused multiply-add below
// rounds once, after the exact product.
#[allow(clippy::approx_constant, clippy::excessive_precision)]
const TAU_HI: f64 = 6.283_185_307_179_586_232_3;
const TAU_MID: f64 = 2.449_293_598_294_706_4e-16;
#[allow(clippy::excessive_precision)]
const TAU_LO: f64 = -5.989_539_619_436_679_3e-33;

/// Exact product `a*b = hi + lo`.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    (hi, lo)
}

/// Reduce the double-double `hi + lo` into `[-π, π]`.
#[inline]
pub fn reduce_two_pi(hi: f64, lo: f64) -> f64 {
    let n = (hi / TAU).round();
    let r = n.mul_add(-TAU_HI, hi);
    let r = n.mul_add(-TAU_MID, r);
    let r = r + lo;
    n.mul_add(-TAU_LO, r)
}

/// `γ·log x` reduced modulo 2π.
#[inline]
pub fn reduced_phase(gamma: f64, log_x: f64) -> f64 {
    let (hi, lo) = two_prod(gamma, log_x);
    reduce_two_pi(hi, lo)
}

/// `exp(i·γ·log x)` with the phase reduced first.
#[inline]
pub fn cis_phase(gamma: f64, log_x: f64) -> Complex64 {
    let (s, c) = reduced_phase(gamma, log_x).sin_cos();
    Complex64::new(c, s)
}

/// `e(θ) = exp(2πiθ)` for a phase measured in turns.
#[inline]
pub fn e_turns(theta: f64) -> Complex64 {
    let f = theta - theta.round();
    let (s, c) = (TAU * f).sin_cos();
    Complex64::new(c, s)
}

/// Distance from `y` to the nearest integer.
#[inline]
pub fn dist_to_int(y: f64) -> f64 {
    (y - y.round()).abs()
}

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(y: f64) -> f64 {
    let f = y - y.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_split_sums_to_tau() {
        assert_eq!(TAU_HI, TAU);
        assert!(TAU_MID.abs() < 1e-15);
    }

    #[test]
    fn two_prod_is_exact() {
        let a = 74_920.827_498_994;
        let b = 13.815_510_557_964_274;
        let (hi, lo) = two_prod(a, b);
        assert_eq!(hi, a * b);
        assert!(lo.abs() <= hi.abs() * f64::EPSILON);
    }

    #[test]
    fn reduction_matches_small_phase() {
        for &p in &[0.1, 1.0, 3.0, -2.5] {
            assert!((reduce_two_pi(p, 0.0) - p).abs() < 1e-15);
        }
        let r = reduce_two_pi(TAU * 1000.0 + 0.25, 0.0);
        assert!((r - 0.25).abs() < 1e-10);
    }

    #[test]
    fn reduced_phase_tracks_high_precision() {
        // References: exact product of the two binary64 inputs reduced mod 2π
        // in 50-digit arithmetic.
        let cases = [
            (74_920.827_498_994, 1.0e6f64.ln(), 2.668_560_235_284_789_7),
            (7_005.062_866_175, 1000.5f64.ln(), -0.331_586_383_084_620_35),
        ];
        for (gamma, log_x, want) in cases {
            let r = reduced_phase(gamma, log_x);
            assert!((r - want).abs() < 1e-14, "{r} vs {want}");
        }
    }

    #[test]
    fn dist_and_frac() {
        assert!((dist_to_int(5.05) - 0.05).abs() < 1e-12);
        assert!((dist_to_int(-0.7) - 0.3).abs() < 1e-12);
        assert_eq!(frac(-0.25), 0.75);
        assert_eq!(frac(3.0), 0.0);
    }
}
