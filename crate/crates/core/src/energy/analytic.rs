//! Exact periodic autocorrelations of the closed-form shapes at every shift,
//! and their spherical averages beyond the polynomial range.

use std::f64::consts::PI;

use crate::autocorr::analytic_autocorrelation;
use crate::error::{Error, Result};
use crate::quadrature::adaptive;
use crate::torus::{Polytope, ShapeSpec};

/// Overlap of an arc of length `a` with its translate by `t` on the unit circle.
fn arc_overlap(t: f64, a: f64) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    let d = (t - t.round()).abs();
    (a - d).max(0.0) + (a - 1.0 + d).max(0.0)
}

/// Volume of the intersection of two balls of radius `rho` at distance `d`.
fn lens(dim: usize, rho: f64, d: f64) -> f64 {
    if d >= 2.0 * rho {
        return 0.0;
    }
    if dim == 2 {
        2.0 * rho * rho * (d / (2.0 * rho)).acos() - 0.5 * d * (4.0 * rho * rho - d * d).sqrt()
    } else {
        PI / 12.0 * (4.0 * rho + d) * (2.0 * rho - d).powi(2)
    }
}

/// `C_u(z)` on the unit torus for balls, laminates, boxes, the empty set and complements.
pub fn periodic_autocorrelation(s: &ShapeSpec, z: &[f64]) -> Result<f64> {
    match s {
        ShapeSpec::Laminate { axis, theta, stripes } => {
            if *axis >= z.len() {
                return Err(Error::DimensionMismatch { shape: axis + 1, grid: z.len() });
            }
            Ok(arc_overlap(*stripes as f64 * z[*axis], *theta))
        }
        ShapeSpec::Polytope(Polytope::Box { lo, hi }) => {
            if lo.len() != z.len() {
                return Err(Error::DimensionMismatch { shape: lo.len(), grid: z.len() });
            }
            Ok(lo.iter().zip(hi).zip(z).map(|((a, b), t)| arc_overlap(*t, b - a)).product())
        }
        ShapeSpec::Polytope(Polytope::Polygon(v)) if v.is_empty() => Ok(0.0),
        ShapeSpec::Ball { center, radius } => {
            let n = center.len();
            if n != z.len() {
                return Err(Error::DimensionMismatch { shape: n, grid: z.len() });
            }
            let w: Vec<f64> = z.iter().map(|t| t - t.round()).collect();
            let mut total = 0.0;
            for combo in 0..3usize.pow(n as u32) {
                let mut rest = combo;
                let mut d2 = 0.0;
                for wi in &w {
                    let m = (rest % 3) as f64 - 1.0;
                    rest /= 3;
                    d2 += (wi + m).powi(2);
                }
                total += lens(n, *radius, d2.sqrt());
            }
            Ok(total)
        }
        ShapeSpec::Complement(inner) => Ok(1.0 - 2.0 * inner.volume() + periodic_autocorrelation(inner, z)?),
        ShapeSpec::Polytope(Polytope::Polygon(_)) => {
            Err(Error::InvalidArgument(format!("no closed-form periodic autocorrelation for '{s}'")))
        }
    }
}

/// Coordinates along which `C_u` has kinks, with the positions of those kinks on `[0, r]`.
fn kinks(s: &ShapeSpec, dim: usize, r: f64) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); dim];
    let mut push_arc = |axis: usize, scale: f64, a: f64| {
        if a >= 1.0 {
            return;
        }
        let jmax = (r * scale).ceil() as i64 + 1;
        for j in 0..=jmax {
            for v in [j as f64 - a, j as f64, j as f64 + a] {
                let t = v / scale;
                if t > 0.0 && t < r {
                    out[axis].push(t);
                }
            }
        }
    };
    match s {
        ShapeSpec::Laminate { axis, theta, stripes } if *axis < dim => push_arc(*axis, *stripes as f64, *theta),
        ShapeSpec::Polytope(Polytope::Box { lo, hi }) => {
            for (i, (a, b)) in lo.iter().zip(hi).enumerate().take(dim) {
                push_arc(i, 1.0, b - a);
            }
        }
        ShapeSpec::Complement(inner) => return kinks(inner, dim, r),
        _ => {}
    }
    out
}

/// Spherical average of the periodic `C_u` at radius `r`, exact up to quadrature.
///
/// Uses the closed-form polynomial inside its range and an angular quadrature of
/// [`periodic_autocorrelation`] outside it.
pub fn radial_autocorrelation(s: &ShapeSpec, dim: usize, r: f64) -> Result<f64> {
    match analytic_autocorrelation(s, dim, r) {
        Ok(v) => return Ok(v),
        Err(Error::OutOfAnalyticRange { .. }) => {}
        Err(e) => {
            if !matches!(s, ShapeSpec::Polytope(Polytope::Polygon(v)) if v.is_empty()) {
                return Err(e);
            }
        }
    }
    // validate once so the quadrature closures can unwrap
    let probe = vec![0.0; dim];
    periodic_autocorrelation(s, &probe)?;
    let c = |z: &[f64]| periodic_autocorrelation(s, z).unwrap_or(f64::NAN);
    let k = kinks(s, dim, r);
    if dim == 2 {
        let mut breaks: Vec<f64> = k[0].iter().map(|v| (v / r).clamp(-1.0, 1.0).acos()).collect();
        breaks.extend(k[1].iter().map(|v| (v / r).clamp(-1.0, 1.0).asin()));
        let v = adaptive(|p: f64| c(&[r * p.cos(), r * p.sin()]), 0.0, PI / 2.0, &breaks, 1e-300, 1e-13).value;
        Ok(v * 2.0 / PI)
    } else {
        // the axis with most kinks becomes the polar one
        let polar = (0..3).max_by_key(|&i| k[i].len()).unwrap_or(2);
        let (a1, a2) = ((polar + 1) % 3, (polar + 2) % 3);
        let t_breaks: Vec<f64> = k[polar].iter().map(|v| v / r).collect();
        let inner = |p: f64| {
            let (cp, sp) = (p.cos(), p.sin());
            adaptive(
                |t: f64| {
                    let q = r * (1.0 - t * t).max(0.0).sqrt();
                    let mut z = [0.0; 3];
                    z[a1] = q * cp;
                    z[a2] = q * sp;
                    z[polar] = r * t;
                    c(&z)
                },
                0.0,
                1.0,
                &t_breaks,
                1e-300,
                1e-12,
            )
            .value
        };
        let v = adaptive(inner, 0.0, PI / 2.0, &[], 1e-300, 1e-11).value;
        Ok(v * 2.0 / PI)
    }
}
