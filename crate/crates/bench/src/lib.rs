//! Shared fixtures for the kernel benchmarks.

use einlab::PrecisionReal;

/// Arguments spread over `[2^-8, 2^8]` for the elementary-function benches.
pub fn sample_points(prec: u32) -> Vec<PrecisionReal> {
    (-8..=8)
        .map(|e| PrecisionReal::from_f64(1.375, prec).mul_pow2(e))
        .collect()
}
