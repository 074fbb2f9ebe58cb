//! Fixtures shared by the benchmarks.

use std::f64::consts::TAU;

use psilab_core::ZeroTable;

/// `n` ordinates spaced at the mean zero density `log(t/2π)/2π`,
/// starting at the first zero.
pub fn synthetic_table(n: usize) -> ZeroTable {
    let mut t = 14.134_725_142;
    let zs: Vec<f64> = (0..n)
        .map(|_| {
            let g = t;
            t += TAU / (t / TAU).ln().max(0.5);
            g
        })
        .collect();
    ZeroTable::from_ordinates(zs, "synthetic").expect("ascending ordinates")
}
