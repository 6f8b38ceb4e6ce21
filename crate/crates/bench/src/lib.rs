//! Shared fixtures for the pipeline benchmarks.

use num_complex::Complex64 as C64;
use qbhatt::fock::{displaced_thermal_with_tol, DensityOperator};

pub const N_BAR: f64 = 1.0;
pub const ZETA: C64 = C64::new(0.3, 0.2);

pub fn state(dim: usize) -> DensityOperator {
    displaced_thermal_with_tol(N_BAR, ZETA, dim, 1e-9).expect("benchmark state builds")
}
