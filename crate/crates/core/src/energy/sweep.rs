//! Energies of one shape along a decreasing sequence of `eps`, extrapolated to `eps = 0`.

use std::fmt;
use std::io::{self, Write};

use super::{
    difference_counts, direct_from_counts, energy_autocorr, gamma_limit_energy, CorrelationSource, DifferenceRoute,
    EnergyBreakdown, ShiftWeights,
};
use crate::autocorr::analytic_polynomial;
use crate::error::{Error, Result};
use crate::kernels::IntegratedKernelTable;
use crate::torus::{rasterize, Polytope, ShapeSpec, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMethod {
    /// Rasterize on the grid and evaluate directly.
    Grid(TorusGrid),
    /// Closed-form autocorrelation.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtrapolationModel {
    /// Least-squares line in `eps` through the three smallest `eps`.
    RichardsonLinear,
}

impl fmt::Display for ExtrapolationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("richardson_linear")
    }
}

/// Split of the nonlocal term `2 int Phi_eps (-c')` over the polynomial range of `c_u`:
/// `i1` from the linear coefficient, `i2` from the higher ones, `i3` the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepDiagnostics {
    pub epsilon: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by decreasing `eps`.
    pub rows: Vec<EnergyBreakdown>,
    pub extrapolated_limit: f64,
    pub extrapolation_model: ExtrapolationModel,
    /// `(1 - gamma / gamma_crit) P`.
    pub gamma_limit: f64,
    pub gamma_crit: f64,
    pub diagnostics: Vec<SweepDiagnostics>,
}

impl SweepResult {
    /// CSV `epsilon,total,perimeter_term,nonlocal_term` after `# key=value` header lines.
    pub fn write_csv<W: Write>(&self, mut w: W, manifest: &[(String, String)]) -> io::Result<()> {
        for (k, v) in manifest {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "# extrapolation_model={}", self.extrapolation_model)?;
        writeln!(w, "# extrapolated_limit={:.12e}", self.extrapolated_limit)?;
        writeln!(w, "# gamma_limit={:.12e}", self.gamma_limit)?;
        writeln!(w, "epsilon,total,perimeter_term,nonlocal_term")?;
        for r in &self.rows {
            writeln!(w, "{:.12e},{:.12e},{:.12e},{:.12e}", r.epsilon, r.total, r.perimeter_term, r.nonlocal_term)?;
        }
        Ok(())
    }
}

fn is_polytope_like(s: &ShapeSpec) -> bool {
    match s {
        ShapeSpec::Laminate { .. } | ShapeSpec::Polytope(_) => true,
        ShapeSpec::Complement(inner) => is_polytope_like(inner),
        ShapeSpec::Ball { .. } => false,
    }
}

/// Intercept of the least-squares line through `(x, y)`.
fn line_intercept(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    my - sxy / sxx * mx
}

pub fn epsilon_sweep(
    s: &ShapeSpec,
    dim: usize,
    table: &IntegratedKernelTable,
    gamma: f64,
    epsilons: &[f64],
    method: SweepMethod,
) -> Result<SweepResult> {
    if !is_polytope_like(s) {
        return Err(Error::InvalidArgument(format!("sweeps need a polytope or laminate, got '{s}'")));
    }
    if epsilons.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 values of eps, got {}", epsilons.len())));
    }
    let mut eps: Vec<f64> = epsilons.to_vec();
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("eps values must be positive".into()));
    }
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eps.dedup();
    if eps.len() < 3 {
        return Err(Error::InvalidArgument("need at least 3 distinct values of eps".into()));
    }
    let perimeter = s.perimeter_estimate();
    let rows: Vec<Result<EnergyBreakdown>> = match method {
        SweepMethod::Grid(grid) => {
            let f = rasterize(s, grid)?;
            let counts = difference_counts(&f, DifferenceRoute::Correlation)?;
            // resolution is checked up front so the error names the offending pair
            for &e in &eps {
                if e < 8.0 * grid.h() * (1.0 - 1e-12) {
                    return Err(Error::UnderResolved { eps: e, h: grid.h() });
                }
            }
            std::thread::scope(|scope| {
                let handles: Vec<_> = eps
                    .iter()
                    .map(|&e| {
                        let (counts, perimeter, theta) = (&counts, &perimeter, f.volume_fraction());
                        scope.spawn(move || -> Result<EnergyBreakdown> {
                            let w = ShiftWeights::new(table, grid, e, 1.0)?;
                            Ok(direct_from_counts(&w, counts, theta, gamma, perimeter))
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
            })
        }
        SweepMethod::Analytic => std::thread::scope(|scope| {
            let handles: Vec<_> = eps
                .iter()
                .map(|&e| {
                    let perimeter = &perimeter;
                    scope.spawn(move || {
                        energy_autocorr(
                            CorrelationSource::Analytic { shape: s, dim, side: 1.0 },
                            table,
                            gamma,
                            e,
                            perimeter,
                        )
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
        }),
    };
    let rows: Vec<EnergyBreakdown> = rows.into_iter().collect::<Result<_>>()?;
    let tail: Vec<(f64, f64)> = rows[rows.len() - 3..].iter().map(|r| (r.epsilon, r.total)).collect();
    let extrapolated_limit = line_intercept(&tail);
    let gamma_crit = table.gamma_crit();
    let gamma_limit = gamma_limit_energy(&perimeter, gamma, gamma_crit);
    let diagnostics = match analytic_polynomial(s, dim) {
        Some((a, rp)) if !matches!(s, ShapeSpec::Polytope(Polytope::Polygon(_))) => rows
            .iter()
            .map(|r| -> Result<SweepDiagnostics> {
                let e = r.epsilon;
                let i1 = 2.0 * -a[1] * table.phi_eps_moment(0, e, rp)?;
                let mut i2 = 0.0;
                for (j, aj) in a.iter().enumerate().skip(2) {
                    i2 -= 2.0 * j as f64 * aj * table.phi_eps_moment(j as u32 - 1, e, rp)?;
                }
                Ok(SweepDiagnostics { epsilon: e, i1, i2, i3: r.nonlocal_term - i1 - i2 })
            })
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };
    Ok(SweepResult {
        rows,
        extrapolated_limit,
        extrapolation_model: ExtrapolationModel::RichardsonLinear,
        gamma_limit,
        gamma_crit,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_of_exact_line() {
        let pts = [(0.1, 1.3), (0.05, 1.15), (0.025, 1.075)];
        assert!((line_intercept(&pts) - 1.0).abs() < 1e-14);
    }
}
