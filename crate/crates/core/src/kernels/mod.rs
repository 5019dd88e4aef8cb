//! Admissible kernels, the integrated kernel and the critical coupling.

mod bessel;
mod kernel;
mod profile;
mod table;

pub use bessel::{bessel_k, bessel_k_scaled};
pub use kernel::{Kernel, KernelSpec};
pub use table::{
    first_moment, gamma_crit, integrated_kernel, q_crit, verify_hypotheses, HypothesisReport, IntegratedKernelTable,
    DEFAULT_TOL,
};
