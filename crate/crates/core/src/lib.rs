//! Numerical laboratory for sharp-interface nonlocal isoperimetric energies on the flat torus.
// Index loops mirror the formulas; negated comparisons deliberately reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod autocorr;
pub mod energy;
pub mod error;
mod fft;
pub mod kernels;
pub mod measure;
pub mod minimize;
pub mod quadrature;
pub mod torus;

pub use energy::{EnergyBreakdown, ShiftWeights, SweepResult};
pub use error::{Error, Result};
pub use kernels::{IntegratedKernelTable, Kernel, KernelSpec};
pub use torus::{BinaryField, PerimeterEstimate, PerimeterMethod, ShapeSpec, TorusGrid};
