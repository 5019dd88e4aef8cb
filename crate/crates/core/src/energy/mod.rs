//! The energy `E = P - gamma * (1/eps) int K_eps(z) int |u(x + z) - u(x)| dx dz`,
//! evaluated directly on the grid and through the radial autocorrelation.

mod analytic;
mod sweep;
mod weights;

use std::fmt;

pub use analytic::{periodic_autocorrelation, radial_autocorrelation};
pub use sweep::{epsilon_sweep, ExtrapolationModel, SweepDiagnostics, SweepMethod, SweepResult};
pub use weights::{ShiftWeights, MASS_TAIL};

use crate::autocorr::{correlation_map, slope_perimeter, RadialCorrelation};
use crate::error::{Error, Result};
use crate::kernels::IntegratedKernelTable;
use crate::quadrature::adaptive;
use crate::torus::{rasterize, BinaryField, PerimeterEstimate, PerimeterMethod, ShapeSpec, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyMethod {
    DirectGrid,
    AutocorrGrid,
    AutocorrAnalytic,
}

impl fmt::Display for EnergyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnergyMethod::DirectGrid => "direct_grid",
            EnergyMethod::AutocorrGrid => "autocorr_grid",
            EnergyMethod::AutocorrAnalytic => "autocorr_analytic",
        })
    }
}

/// One evaluation of the energy. `nonlocal_term` is the subtracted quantity, stored
/// unsigned, so `total = perimeter_term - gamma * nonlocal_term`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub perimeter_term: f64,
    pub nonlocal_term: f64,
    pub total: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub method: EnergyMethod,
    pub perimeter_source: PerimeterMethod,
    /// Bound on truncation error of the nonlocal part, times `gamma`.
    pub uncertainty: f64,
}

impl EnergyBreakdown {
    fn assemble(
        perimeter: &PerimeterEstimate,
        nonlocal: f64,
        gamma: f64,
        eps: f64,
        method: EnergyMethod,
        nonlocal_bound: f64,
    ) -> Self {
        Self {
            perimeter_term: perimeter.value,
            nonlocal_term: nonlocal,
            total: perimeter.value - gamma * nonlocal,
            epsilon: eps,
            gamma,
            method,
            perimeter_source: perimeter.method,
            uncertainty: gamma * nonlocal_bound + perimeter.uncertainty,
        }
    }
}

/// How `sum_x |u(x + z) - u(x)|` is obtained for each lattice shift `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceRoute {
    /// `2 (C_u(0) - C_u(z))` from the autocorrelation.
    Correlation,
    /// Exclusive-or and population count on bit-packed rows.
    Bitwise,
}

/// `sum_x |u(x + z) - u(x)|` as integer counts, indexed by the shift `z`.
pub fn difference_counts(f: &BinaryField, route: DifferenceRoute) -> Result<Vec<u64>> {
    match route {
        DifferenceRoute::Correlation => {
            let m = correlation_map(f);
            let ones = m.base_count();
            Ok(m.overlaps().iter().map(|&o| 2 * (ones - o)).collect())
        }
        DifferenceRoute::Bitwise => bitwise_differences(f),
    }
}

fn bitwise_differences(f: &BinaryField) -> Result<Vec<u64>> {
    let g = f.grid();
    let n = g.n();
    let words = n.div_ceil(64);
    let rows = g.len() / n;
    let cost = g.len() as f64 * rows as f64 * words as f64;
    if cost > 4e9 {
        return Err(Error::InvalidArgument(format!(
            "bitwise differences on a {n}^{} grid would need {cost:.1e} word operations",
            g.dim()
        )));
    }
    let v = f.values();
    // rot[(row * n + s) * words + w]: bit x holds u(x + s, row)
    let mut rot = vec![0u64; rows * n * words];
    for row in 0..rows {
        let base = &v[row * n..(row + 1) * n];
        for s in 0..n {
            let dst = &mut rot[(row * n + s) * words..(row * n + s + 1) * words];
            for x in 0..n {
                if base[(x + s) % n] != 0 {
                    dst[x / 64] |= 1u64 << (x % 64);
                }
            }
        }
    }
    let mut out = vec![0u64; g.len()];
    let row_coords = |row: usize| (row % n, row / n);
    for (z, slot) in out.iter_mut().enumerate() {
        let k0 = z % n;
        let (k1, k2) = row_coords(z / n);
        let mut total = 0u64;
        for row in 0..rows {
            let (c1, c2) = row_coords(row);
            let other = (c1 + k1) % n + n * ((c2 + k2) % n);
            let a = &rot[(row * n) * words..(row * n + 1) * words];
            let b = &rot[(other * n + k0) * words..(other * n + k0 + 1) * words];
            for (x, y) in a.iter().zip(b) {
                total += (x ^ y).count_ones() as u64;
            }
        }
        *slot = total;
    }
    Ok(out)
}

/// `(1/eps) sum_k W(k) h^n D(k)` for difference counts `D` on the torus of the weights.
pub fn nonlocal_from_counts(w: &ShiftWeights, counts: &[u64]) -> f64 {
    let cell = w.h().powi(w.grid().dim() as i32);
    let s: f64 = w.values().iter().zip(counts).map(|(wi, &d)| wi * d as f64).sum();
    s * cell / w.eps()
}

/// Direct evaluation with precomputed weights and a given perimeter.
pub fn energy_direct_with(
    f: &BinaryField,
    w: &ShiftWeights,
    gamma: f64,
    perimeter: &PerimeterEstimate,
    route: DifferenceRoute,
) -> Result<EnergyBreakdown> {
    if f.grid() != w.grid() {
        return Err(Error::InvalidArgument("field and weights live on different grids".into()));
    }
    let counts = difference_counts(f, route)?;
    Ok(direct_from_counts(w, &counts, f.volume_fraction(), gamma, perimeter))
}

pub(crate) fn direct_from_counts(
    w: &ShiftWeights,
    counts: &[u64],
    volume_fraction: f64,
    gamma: f64,
    perimeter: &PerimeterEstimate,
) -> EnergyBreakdown {
    let nl = nonlocal_from_counts(w, counts);
    // mass beyond the explicit sum is approximated as uniform
    let n = w.grid().dim() as i32;
    let bound = 2.0 * (w.uniform_tail() * w.grid().len() as f64).abs() * volume_fraction * w.side().powi(n) / w.eps();
    EnergyBreakdown::assemble(perimeter, nl, gamma, w.eps(), EnergyMethod::DirectGrid, bound)
}

/// Direct evaluation on the unit torus with the slope-fit perimeter of the field.
pub fn energy_direct(f: &BinaryField, table: &IntegratedKernelTable, gamma: f64, eps: f64) -> Result<EnergyBreakdown> {
    check_gamma(gamma)?;
    let w = ShiftWeights::new(table, *f.grid(), eps, 1.0)?;
    let p = field_perimeter(f)?;
    energy_direct_with(f, &w, gamma, &p, DifferenceRoute::Correlation)
}

/// Direct evaluation of a rasterized shape with its exact perimeter.
pub fn shape_energy_direct(
    s: &ShapeSpec,
    grid: TorusGrid,
    table: &IntegratedKernelTable,
    gamma: f64,
    eps: f64,
) -> Result<EnergyBreakdown> {
    check_gamma(gamma)?;
    let f = rasterize(s, grid)?;
    let w = ShiftWeights::new(table, grid, eps, 1.0)?;
    energy_direct_with(&f, &w, gamma, &s.perimeter_estimate(), DifferenceRoute::Correlation)
}

/// Slope-fit perimeter, or zero for the empty and the full field.
fn field_perimeter(f: &BinaryField) -> Result<PerimeterEstimate> {
    let ones = f.count_ones();
    if ones == 0 || ones == f.grid().len() {
        return Ok(PerimeterEstimate { value: 0.0, method: PerimeterMethod::SlopeFit, uncertainty: 0.0 });
    }
    slope_perimeter(f)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} must be finite and >= 0")));
    }
    Ok(())
}

/// Where the radial autocorrelation comes from.
#[derive(Debug, Clone, Copy)]
pub enum CorrelationSource<'a> {
    /// Binned samples, linearly interpolated.
    Grid(&'a RadialCorrelation),
    /// Closed form of a shape on the torus of side `side`, `c_side(r) = side^n c(r / side)`.
    Analytic { shape: &'a ShapeSpec, dim: usize, side: f64 },
}

/// Relative tail mass beyond which the grid route refuses to truncate.
const GRID_TAIL_LIMIT: f64 = 1e-2;

/// `nonlocal = (2 sigma_n / eps) int_0^R rho^{n-1} K_eps(rho) [c(0) - c(rho)] d rho`.
pub fn energy_autocorr(
    src: CorrelationSource<'_>,
    table: &IntegratedKernelTable,
    gamma: f64,
    eps: f64,
    perimeter: &PerimeterEstimate,
) -> Result<EnergyBreakdown> {
    check_gamma(gamma)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps {eps} must be positive")));
    }
    let kernel = table.kernel();
    let n = kernel.dim();
    let sigma = kernel.sigma();
    let k_eps = |rho: f64| eps.powi(-(n as i32)) * kernel.eval_quad(rho / eps);
    let kernel_breaks: Vec<f64> = kernel.breakpoints().iter().map(|b| b * eps).collect();
    let abs_tail = |r: f64| -> Result<f64> {
        if kernel.support_radius().is_some_and(|s| r / eps >= s) {
            return Ok(0.0);
        }
        Ok(kernel.abs_moment_from(r / eps)? / table.abs_mass())
    };
    match src {
        CorrelationSource::Grid(rc) => {
            if rc.dim != n {
                return Err(Error::DimensionMismatch { shape: rc.dim, grid: n });
            }
            let r_max = rc.r_max;
            let tail = abs_tail(r_max)?;
            if tail > GRID_TAIL_LIMIT {
                return Err(Error::Truncation(format!(
                    "c_u known up to r = {r_max} but {tail:.2e} of the kernel mass lies beyond it at eps = {eps}"
                )));
            }
            let c0 = rc.c0;
            let mut breaks = rc.radii.clone();
            breaks.extend_from_slice(&kernel_breaks);
            let f = |rho: f64| rho.powi(n as i32 - 1) * k_eps(rho) * (c0 - rc.interpolate(rho));
            let v = adaptive(f, 0.0, r_max, &breaks, 1e-300, 1e-11).value;
            let nl = 2.0 * sigma / eps * v;
            // Beyond r_max, |c(0) - c| <= c(0)
            let bound = 2.0 * c0 * table.abs_mass() * tail / eps;
            Ok(EnergyBreakdown::assemble(perimeter, nl, gamma, eps, EnergyMethod::AutocorrGrid, bound))
        }
        CorrelationSource::Analytic { shape, dim, side } => {
            if dim != n {
                return Err(Error::DimensionMismatch { shape: dim, grid: n });
            }
            if !(side > 0.0) {
                return Err(Error::InvalidArgument(format!("torus side {side} must be positive")));
            }
            let scale = side.powi(n as i32);
            let c = |rho: f64| radial_autocorrelation(shape, n, rho / side).map(|v| v * scale);
            let c0 = c(0.0)?;
            let r_end = match kernel.support_radius() {
                Some(s) => s * eps,
                None => eps * table.mass_radius(1e-12)?,
            };
            let mut breaks = kernel_breaks.clone();
            if let Some(rp) = shape.polynomial_radius() {
                breaks.push(rp * side);
            }
            if let ShapeSpec::Ball { radius, .. } = shape {
                breaks.push((1.0 - 2.0 * radius) * side);
                breaks.push(2.0 * radius * side);
            }
            // surface the first quadrature failure instead of integrating NaNs
            c(r_end.min(0.5 * side))?;
            let f = |rho: f64| {
                let cv = c(rho).unwrap_or(f64::NAN);
                rho.powi(n as i32 - 1) * k_eps(rho) * (c0 - cv)
            };
            let v = adaptive(f, 0.0, r_end, &breaks, 1e-300, 1e-13).value;
            if !v.is_finite() {
                return Err(Error::InconsistentQuadrature(format!("nonlocal integral for '{shape}' is not finite")));
            }
            let nl = 2.0 * sigma / eps * v;
            let bound = 2.0 * c0 * table.abs_mass() * abs_tail(r_end)? / eps;
            Ok(EnergyBreakdown::assemble(perimeter, nl, gamma, eps, EnergyMethod::AutocorrAnalytic, bound))
        }
    }
}

/// Analytic-path energy of a shape on the unit torus with its exact perimeter.
pub fn shape_energy_analytic(
    s: &ShapeSpec,
    dim: usize,
    table: &IntegratedKernelTable,
    gamma: f64,
    eps: f64,
) -> Result<EnergyBreakdown> {
    let src = CorrelationSource::Analytic { shape: s, dim, side: 1.0 };
    energy_autocorr(src, table, gamma, eps, &s.perimeter_estimate())
}

/// `E_{gamma,0} = (1 - gamma / gamma_crit) P`.
pub fn gamma_limit_energy(p: &PerimeterEstimate, gamma: f64, gamma_crit: f64) -> f64 {
    (1.0 - gamma / gamma_crit) * p.value
}

/// What a lower-bound or scaling check is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Field(&'a BinaryField),
    /// A closed-form shape, evaluated through its exact autocorrelation.
    Shape {
        shape: &'a ShapeSpec,
        dim: usize,
    },
}

/// `E_{gamma,eps} - E_{gamma,0}` with the same perimeter on both sides.
pub fn lower_bound_margin(subject: Subject<'_>, table: &IntegratedKernelTable, gamma: f64, eps: f64) -> Result<f64> {
    let gc = table.gamma_crit();
    if gamma > gc * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("lower bound needs gamma <= gamma_crit = {gc}")));
    }
    let e = match subject {
        Subject::Field(f) => energy_direct(f, table, gamma, eps)?,
        Subject::Shape { shape, dim } => shape_energy_analytic(shape, dim, table, gamma, eps)?,
    };
    let p = PerimeterEstimate { value: e.perimeter_term, method: e.perimeter_source, uncertainty: 0.0 };
    Ok(e.total - gamma_limit_energy(&p, gamma, gc))
}

/// How a shape is evaluated in checks that accept both routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvaluationPath {
    Analytic,
    Grid(TorusGrid),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport {
    pub side: f64,
    /// `E^{(side)}_{gamma,eps}[u_side]` on the side-`side` torus.
    pub lhs: f64,
    /// `side^{n-1} E_{gamma,eps/side}[u]` on the unit torus.
    pub rhs: f64,
    pub discrepancy: f64,
}

/// Compares the energy of the dilated shape on the side-`side` torus with the
/// rescaled unit-torus energy at `eps / side`.
pub fn scaling_identity_check(
    s: &ShapeSpec,
    dim: usize,
    table: &IntegratedKernelTable,
    gamma: f64,
    eps: f64,
    side: f64,
    path: EvaluationPath,
) -> Result<ScalingReport> {
    check_gamma(gamma)?;
    let n = dim as i32;
    let p = s.perimeter();
    let evaluate = |l: f64, e: f64| -> Result<f64> {
        let perim = PerimeterEstimate::analytic(l.powi(n - 1) * p);
        match path {
            EvaluationPath::Analytic => {
                let src = CorrelationSource::Analytic { shape: s, dim, side: l };
                Ok(energy_autocorr(src, table, gamma, e, &perim)?.total)
            }
            EvaluationPath::Grid(grid) => {
                let f = rasterize(s, grid)?;
                let w = ShiftWeights::new(table, grid, e, l)?;
                Ok(energy_direct_with(&f, &w, gamma, &perim, DifferenceRoute::Correlation)?.total)
            }
        }
    };
    let lhs = evaluate(side, eps)?;
    let rhs = if side == 1.0 { lhs } else { side.powi(n - 1) * evaluate(1.0, eps / side)? };
    let discrepancy = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() / rhs.abs().max(lhs.abs()).max(1e-300) };
    Ok(ScalingReport { side, lhs, rhs, discrepancy })
}

#[cfg(test)]
mod tests;
