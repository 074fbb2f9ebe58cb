//! Numerical laboratory for large values of ψ(x) − x: exact Chebyshev
//! function scans, zeta-zero statistics, the truncated explicit formula,
//! Bohr-set geometry, smooth majorants and the amplification pipeline.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod interval;
pub mod phase;
pub mod quadrature;
pub mod summation;

pub mod amplifier;
pub mod bohr_geometry;
pub mod chebyshev_psi;
pub mod explicit_formula;
pub mod smooth_majorant;
pub mod zero_table;

pub use error::{LabError, ParseError, Result};
pub use interval::{Interval, IntervalUnion};
pub use summation::{compensated_sum, CompensatedSum, ComplexSum};

pub use amplifier::{concentrate, holder_amplify, run_pipeline, ExperimentReport, PipelineConfig};
pub use bohr_geometry::{truncated_measure, BohrSpec};
pub use chebyshev_psi::{build_psi_series, mangoldt, ErrorSample, PsiSeries};
pub use explicit_formula::{exp_sum, truncated_psi_error, ExpSumSeries};
pub use smooth_majorant::{
    bohr_majorant, vinogradov_bump, BohrMajorant, FourierMajorant, VinogradovParams,
};
pub use zero_table::{load_zero_table, riemann_von_mangoldt, ZeroPartition, ZeroTable};
