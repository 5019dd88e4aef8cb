//! Periodic autocorrelation of binary fields, its radial average, and
//! the quantities read off near the origin.

use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::fft::circular_correlation;
use crate::measure::slope_prefactor;
use crate::torus::{BinaryField, PerimeterEstimate, PerimeterMethod, Polytope, ShapeSpec, TorusGrid};

/// `C_u` at every lattice shift, stored as exact overlap counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap {
    grid: TorusGrid,
    overlaps: Vec<u64>,
    ones: u64,
}

impl CorrelationMap {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Number of cells `x` with `u(x) = u(x + z) = 1`, indexed by the shift `z`.
    pub fn overlaps(&self) -> &[u64] {
        &self.overlaps
    }

    pub fn value(&self, shift: usize) -> f64 {
        self.overlaps[shift] as f64 * self.grid.cell_volume()
    }

    pub fn values(&self) -> Vec<f64> {
        let v = self.grid.cell_volume();
        self.overlaps.iter().map(|&c| c as f64 * v).collect()
    }

    /// `C_u(0)`, the volume of the set.
    pub fn base(&self) -> f64 {
        self.ones as f64 * self.grid.cell_volume()
    }

    pub fn base_count(&self) -> u64 {
        self.ones
    }

    /// `h^n sum_x |u(x + z) - u(x)|` through the identity `2 (C(0) - C(z))`.
    pub fn difference_mass(&self, shift: usize) -> f64 {
        2.0 * (self.ones - self.overlaps[shift]) as f64 * self.grid.cell_volume()
    }
}

/// Autocorrelation by fast transform; values are rounded to the exact integer overlap counts.
pub fn correlation_map(f: &BinaryField) -> CorrelationMap {
    let grid = *f.grid();
    let ones = f.count_ones() as u64;
    let overlaps = if ones == 0 {
        vec![0; grid.len()]
    } else if ones as usize == grid.len() {
        vec![ones; grid.len()]
    } else {
        let u: Vec<f64> = f.values().iter().map(|&v| f64::from(v)).collect();
        circular_correlation(&grid, &u, &u).into_iter().map(|c| c.round().max(0.0) as u64).collect()
    };
    CorrelationMap { grid, overlaps, ones }
}

/// Direct shifted-overlap sum, quadratic in the cell count. Intended for small grids.
pub fn correlation_map_direct(f: &BinaryField) -> CorrelationMap {
    let grid = *f.grid();
    let d = grid.dim();
    let v = f.values();
    let overlaps = (0..grid.len())
        .map(|z| {
            let zc = grid.signed_offset(z);
            (0..grid.len())
                .filter(|&x| {
                    let xc = grid.coords(x);
                    v[x] == 1 && v[grid.shifted_index(&xc[..d], &zc[..d])] == 1
                })
                .count() as u64
        })
        .collect();
    CorrelationMap { grid, overlaps, ones: f.count_ones() as u64 }
}

/// Spherical average of `C_u` in radial bins.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialCorrelation {
    /// `radii[0] = 0`; later entries are the mean `|z|` of the shifts in each bin.
    pub radii: Vec<f64>,
    pub c: Vec<f64>,
    /// Standard deviation of `C_u` within each bin.
    pub spread: Vec<f64>,
    pub counts: Vec<usize>,
    pub c0: f64,
    pub dim: usize,
    pub h: f64,
    pub r_max: f64,
    /// Empty bins folded into a neighbor.
    pub merged_bins: usize,
}

/// Default number of radial bins for a grid: four per cell width along the axis.
pub fn default_bins(grid: &TorusGrid) -> usize {
    4 * grid.n()
}

pub fn radial_average(m: &CorrelationMap, bins: usize, r_max: f64) -> Result<RadialCorrelation> {
    if bins < 16 {
        return Err(Error::InvalidArgument(format!("need at least 16 bins, got {bins}")));
    }
    if !(r_max > 0.0 && r_max <= 0.5) {
        return Err(Error::InvalidArgument(format!("r_max {r_max} outside (0, 1/2]")));
    }
    let g = m.grid();
    let h = g.h();
    let d = g.dim();
    let width = r_max / bins as f64;
    let mut sum = vec![0.0f64; bins];
    let mut sum2 = vec![0.0f64; bins];
    let mut rsum = vec![0.0f64; bins];
    let mut cnt = vec![0usize; bins];
    for z in 1..g.len() {
        let o = g.signed_offset(z);
        let r = h * o[..d].iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
        if r > r_max {
            continue;
        }
        let b = ((r / width) as usize).min(bins - 1);
        let v = m.value(z);
        sum[b] += v;
        sum2[b] += v * v;
        rsum[b] += r;
        cnt[b] += 1;
    }
    let mut out = RadialCorrelation {
        radii: vec![0.0],
        c: vec![m.base()],
        spread: vec![0.0],
        counts: vec![1],
        c0: m.base(),
        dim: d,
        h,
        r_max,
        merged_bins: 0,
    };
    for b in 0..bins {
        if cnt[b] == 0 {
            out.merged_bins += 1;
            continue;
        }
        let k = cnt[b] as f64;
        let mean = sum[b] / k;
        out.radii.push(rsum[b] / k);
        out.c.push(mean);
        out.spread.push((sum2[b] / k - mean * mean).max(0.0).sqrt());
        out.counts.push(cnt[b]);
    }
    Ok(out)
}

impl RadialCorrelation {
    /// Piecewise-linear interpolation of the samples; constant beyond the last radius.
    pub fn interpolate(&self, r: f64) -> f64 {
        let i = self.radii.partition_point(|&x| x <= r);
        if i == 0 {
            return self.c0;
        }
        if i == self.radii.len() {
            return *self.c.last().unwrap();
        }
        let (r0, r1) = (self.radii[i - 1], self.radii[i]);
        let t = (r - r0) / (r1 - r0);
        self.c[i - 1] * (1.0 - t) + self.c[i] * t
    }

    /// CSV with header `r,c,count`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "r,c,count")?;
        for ((r, c), k) in self.radii.iter().zip(&self.c).zip(&self.counts) {
            writeln!(w, "{r:.12e},{c:.12e},{k}")?;
        }
        Ok(())
    }
}

/// Weighted least squares line through the samples with `lo <= r <= hi`.
/// Returns `(intercept, slope, slope standard error, samples used)`.
fn weighted_line(rc: &RadialCorrelation, lo: f64, hi: f64) -> (f64, f64, f64, usize) {
    let pts: Vec<(f64, f64, f64)> = rc
        .radii
        .iter()
        .zip(&rc.c)
        .zip(&rc.counts)
        .skip(1)
        .filter(|((r, _), _)| **r >= lo && **r <= hi)
        .map(|((r, c), k)| (*r, *c, *k as f64))
        .collect();
    let k = pts.len();
    if k < 2 {
        return (f64::NAN, f64::NAN, f64::NAN, k);
    }
    let w: f64 = pts.iter().map(|p| p.2).sum();
    let mr = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / w;
    let mc = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / w;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mr).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mr) * (p.1 - mc)).sum();
    let slope = sxy / sxx;
    let icpt = mc - slope * mr;
    let sse: f64 = pts.iter().map(|p| p.2 * (p.1 - icpt - slope * p.0).powi(2)).sum();
    let dof = (k as f64 - 2.0).max(1.0);
    // weights are counts, so normalize by the mean weight
    let sigma2 = sse / dof / (w / k as f64);
    let se = (sigma2 / (sxx / (w / k as f64))).sqrt();
    (icpt, slope, se, k)
}

/// Perimeter from the slope of `c_u` on `[2h, 16h]`.
pub fn perimeter_from_slope(rc: &RadialCorrelation) -> Result<PerimeterEstimate> {
    let (lo, hi) = (2.0 * rc.h, 16.0 * rc.h);
    let (_, slope, se, k) = weighted_line(rc, lo, hi);
    if k < 4 {
        return Err(Error::InsufficientResolution(format!("{k} radial samples in [{lo}, {hi}], need 4")));
    }
    let pre = slope_prefactor(rc.dim);
    Ok(PerimeterEstimate { value: (-slope / pre).max(0.0), method: PerimeterMethod::SlopeFit, uncertainty: se / pre })
}

/// Convenience: slope-fit perimeter of a field.
pub fn slope_perimeter(f: &BinaryField) -> Result<PerimeterEstimate> {
    let m = correlation_map(f);
    // Bins of width h/256 hold one distinct lattice radius each below 20h, so the
    // fit sees every shift with its exact radius and no bin-edge aliasing.
    let h = f.grid().h();
    let r_max = (20.0 * h).min(0.5);
    let bins = (r_max / h * 256.0).round() as usize;
    perimeter_from_slope(&radial_average(&m, bins, r_max)?)
}

// ---------------------------------------------------------------------------
// Closed forms.

/// Spherical averages `E|z_{i_1} ... z_{i_k}|` over the unit sphere for `k` distinct axes.
fn sphere_moment(dim: usize, k: usize) -> f64 {
    match (dim, k) {
        (_, 0) => 1.0,
        (2, 1) => 2.0 / PI,
        (2, 2) => 1.0 / PI,
        (3, 1) => 0.5,
        (3, 2) | (3, 3) => 1.0 / (4.0 * PI),
        _ => unreachable!("sphere moment for dim {dim}, order {k}"),
    }
}

/// Polynomial coefficients `[c0, a_1, ..., a_n]` of the radial autocorrelation
/// near zero, when the shape has one, with the radius below which they hold.
pub fn analytic_polynomial(s: &ShapeSpec, dim: usize) -> Option<(Vec<f64>, f64)> {
    match s {
        ShapeSpec::Laminate { theta, stripes, .. } => {
            let m = *stripes as f64;
            let mut a = vec![0.0; dim + 1];
            a[0] = *theta;
            a[1] = -m * sphere_moment(dim, 1);
            Some((a, theta.min(1.0 - theta) / m))
        }
        ShapeSpec::Polytope(Polytope::Box { lo, hi }) => {
            if lo.len() != dim {
                return None;
            }
            // C(z) = prod_i (a_i - delta_i |z_i|) with delta_i = 0 on full-period axes
            let sides: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
            let mut a = vec![0.0; dim + 1];
            for mask in 0u32..(1 << dim) {
                let k = mask.count_ones() as usize;
                let mut term = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                for (i, &s) in sides.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        if s >= 1.0 {
                            term = 0.0;
                        }
                    } else {
                        term *= s;
                    }
                }
                a[k] += term * sphere_moment(dim, k);
            }
            Some((a, s.polynomial_radius()?))
        }
        ShapeSpec::Complement(inner) => {
            let (mut a, r) = analytic_polynomial(inner, dim)?;
            a[0] += 1.0 - 2.0 * inner.volume();
            Some((a, r))
        }
        _ => None,
    }
}

/// Closed-form `c_u(r)` for balls, laminates, boxes and their complements.
pub fn analytic_autocorrelation(s: &ShapeSpec, dim: usize, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("negative radius {r}")));
    }
    match s {
        ShapeSpec::Ball { center, radius } => {
            if center.len() != dim {
                return Err(Error::DimensionMismatch { shape: center.len(), grid: dim });
            }
            let rho = *radius;
            let limit = 1.0 - 2.0 * rho;
            if r > limit {
                return Err(Error::OutOfAnalyticRange { r, limit });
            }
            if r >= 2.0 * rho {
                return Ok(0.0);
            }
            Ok(if dim == 2 {
                2.0 * rho * rho * (r / (2.0 * rho)).acos() - 0.5 * r * (4.0 * rho * rho - r * r).sqrt()
            } else {
                4.0 / 3.0 * PI * rho.powi(3) * (1.0 - 0.75 * r / rho + r.powi(3) / (16.0 * rho.powi(3)))
            })
        }
        ShapeSpec::Complement(inner) if matches!(**inner, ShapeSpec::Ball { .. }) => {
            Ok(1.0 - 2.0 * inner.volume() + analytic_autocorrelation(inner, dim, r)?)
        }
        _ => {
            let (a, limit) = analytic_polynomial(s, dim)
                .ok_or_else(|| Error::InvalidArgument(format!("no closed-form autocorrelation for '{s}'")))?;
            if r > limit {
                return Err(Error::OutOfAnalyticRange { r, limit });
            }
            Ok(a.iter().rev().fold(0.0, |acc, &x| acc * r + x))
        }
    }
}

// ---------------------------------------------------------------------------
// Small-r polynomial fit.

#[derive(Debug, Clone, PartialEq)]
pub struct SmallRFit {
    /// `a[j - 1]` multiplies `r^j`.
    pub a: Vec<f64>,
    pub c0: f64,
    pub fit_window: (f64, f64),
    pub residual: f64,
    pub condition: f64,
    pub samples: usize,
}

impl SmallRFit {
    pub fn eval(&self, r: f64) -> f64 {
        self.c0 + self.a.iter().rev().fold(0.0, |acc, &x| (acc + x) * r)
    }

    /// CSV with header `j,a_j`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "j,a_j")?;
        writeln!(w, "0,{:.12e}", self.c0)?;
        for (j, a) in self.a.iter().enumerate() {
            writeln!(w, "{},{:.12e}", j + 1, a)?;
        }
        Ok(())
    }
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
fn symmetric_eigenvalues(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let k = m.len();
    for _ in 0..100 {
        let off: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (mrp, mrq) = (m[r][p], m[r][q]);
                    m[r][p] = c * mrp - s * mrq;
                    m[r][q] = s * mrp + c * mrq;
                }
                for r in 0..k {
                    let (mpr, mqr) = (m[p][r], m[q][r]);
                    m[p][r] = c * mpr - s * mqr;
                    m[q][r] = s * mpr + c * mqr;
                }
            }
        }
    }
    (0..k).map(|i| m[i][i]).collect()
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = ((row + 1)..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Count-weighted least squares for `c(r) - c0 = sum_{j=1}^{degree} a_j r^j` on the window.
pub fn fit_small_r_polynomial(rc: &RadialCorrelation, degree: usize, window: (f64, f64)) -> Result<SmallRFit> {
    let (lo, hi) = window;
    if degree == 0 || !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad fit degree {degree} or window {window:?}")));
    }
    let pts: Vec<(f64, f64, f64)> = rc
        .radii
        .iter()
        .zip(&rc.c)
        .zip(&rc.counts)
        .skip(1)
        .filter(|((r, _), _)| **r >= lo && **r <= hi)
        .map(|((r, c), k)| (*r, *c - rc.c0, *k as f64))
        .collect();
    if pts.len() < 2 * degree {
        return Err(Error::InsufficientResolution(format!(
            "{} samples in window {window:?}, need {}",
            pts.len(),
            2 * degree
        )));
    }
    // columns scaled to (r / hi)^j
    let mut ata = vec![vec![0.0; degree]; degree];
    let mut atb = vec![0.0; degree];
    for &(r, y, w) in &pts {
        let t = r / hi;
        let cols: Vec<f64> = (1..=degree).map(|j| t.powi(j as i32)).collect();
        for i in 0..degree {
            atb[i] += w * cols[i] * y;
            for j in 0..degree {
                ata[i][j] += w * cols[i] * cols[j];
            }
        }
    }
    let eig = symmetric_eigenvalues(ata.clone());
    let (emin, emax) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e.abs()), b.max(e.abs())));
    let condition = (emax / emin).sqrt();
    if !condition.is_finite() || condition > 1e8 {
        return Err(Error::IllConditioned(condition));
    }
    let scaled = solve(ata, atb);
    let a: Vec<f64> = scaled.iter().enumerate().map(|(j, x)| x / hi.powi(j as i32 + 1)).collect();
    let fit = SmallRFit { a, c0: rc.c0, fit_window: window, residual: 0.0, condition, samples: pts.len() };
    let w: f64 = pts.iter().map(|p| p.2).sum();
    let sse: f64 = pts.iter().map(|&(r, y, wt)| wt * (fit.eval(r) - rc.c0 - y).powi(2)).sum();
    Ok(SmallRFit { residual: (sse / w).sqrt(), ..fit })
}
