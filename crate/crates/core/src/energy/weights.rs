//! Lattice weights of the rescaled kernel.
//!
//! For a field that is constant on grid cells, `z -> int |u(x + z) - u(x)| dx`
//! is the multilinear interpolant of its values at lattice shifts. Integrating
//! it against `K_eps` therefore reduces exactly to a lattice sum with weights
//! `W(k) = int K_eps(z) prod_i hat(z_i / h - k_i) dz`, summed over periodic images.

use crate::error::{Error, Result};
use crate::kernels::IntegratedKernelTable;
use crate::quadrature::{adaptive, gl};
use crate::torus::TorusGrid;

/// Pieces closer than this many cells to the origin use nested adaptive quadrature.
const NEAR: f64 = 6.0;
/// Cells farther than this use the midpoint rule with a Laplacian correction.
const FAR: f64 = 24.0;
/// Explicit lattice sums stop after this many periods; the rest of the kernel
/// mass is spread uniformly over the torus.
const MAX_PERIODS: f64 = 3.0;
/// Fraction of `int |K|` allowed outside the explicit truncation radius.
pub const MASS_TAIL: f64 = 1e-6;
/// Upper bound on enumerated lattice points.
const MAX_POINTS: f64 = 4e8;

/// Periodized kernel weights `W_per(k)` on a torus of side `side`, indexed like the grid.
#[derive(Debug, Clone)]
pub struct ShiftWeights {
    grid: TorusGrid,
    side: f64,
    eps: f64,
    rho_cut: f64,
    uniform_tail: f64,
    weights: Vec<f64>,
}

impl ShiftWeights {
    /// Weights for `K_eps` on the grid of the side-`side` torus. Requires `eps >= 8h`.
    pub fn new(table: &IntegratedKernelTable, grid: TorusGrid, eps: f64, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidArgument(format!("torus side {side} must be positive")));
        }
        let h = side / grid.n() as f64;
        if !(eps >= 8.0 * h * (1.0 - 1e-12)) {
            return Err(Error::UnderResolved { eps, h });
        }
        let kernel = table.kernel();
        let n = grid.dim();
        let rho_cut = eps * table.mass_radius(MASS_TAIL)?;
        let radius = rho_cut.min(MAX_PERIODS * side);
        let cells = radius / h;
        let points = crate::measure::unit_ball_volume(n) * (cells + 2.0).powi(n as i32);
        if points > MAX_POINTS {
            return Err(Error::Truncation(format!("{points:.2e} lattice shifts needed for eps = {eps} at h = {h}")));
        }

        let scale = eps.powi(-(n as i32));
        let kz = |rc: f64| scale * kernel.eval_fast(h * rc / eps);
        // Laplacian in cell units
        let lap = |rc: f64| scale * (h / eps).powi(2) * kernel.laplacian(h * rc / eps);
        let breaks: Vec<f64> = kernel.breakpoints().iter().map(|b| b * eps / h).collect();
        let cell_volume = h.powi(n as i32);
        let origin = origin_pieces(n, &kz, cell_volume);

        let mut weights = vec![0.0; grid.len()];
        let nn = grid.n() as i64;
        let kmax = cells.ceil() as i64 + 1;
        let mut images: Vec<[i64; 3]> = Vec::with_capacity(48);
        let mut rep = [0i64; 3];
        let mut included = 0.0;
        let mut visit = |k: &[i64], weights: &mut Vec<f64>| {
            let (lo_d, hi_d) = hat_distances(k);
            if lo_d >= cells {
                return;
            }
            let w = cell_weight(k, lo_d, hi_d, &breaks, &origin, &kz, &lap, cell_volume);
            if w == 0.0 {
                return;
            }
            signed_permutations(k, &mut images);
            for img in &images {
                let mut idx = 0usize;
                for i in (0..k.len()).rev() {
                    idx = idx * grid.n() + img[i].rem_euclid(nn) as usize;
                }
                weights[idx] += w;
                included += w;
            }
        };
        if n == 2 {
            for a in 0..=kmax {
                for b in 0..=a {
                    rep[0] = a;
                    rep[1] = b;
                    visit(&rep[..2], &mut weights);
                }
            }
        } else {
            for a in 0..=kmax {
                for b in 0..=a {
                    for c in 0..=b {
                        rep = [a, b, c];
                        visit(&rep, &mut weights);
                    }
                }
            }
        }
        // kernel mass not captured by the explicit sum, spread over the torus
        let uniform_tail = (table.mass() - included) / grid.len() as f64;
        for w in weights.iter_mut() {
            *w += uniform_tail;
        }
        Ok(Self { grid, side, eps, rho_cut, uniform_tail, weights })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Radius enclosing all but `MASS_TAIL` of `int |K_eps|`.
    pub fn rho_cut(&self) -> f64 {
        self.rho_cut
    }

    /// Weight added to every shift for the mass beyond the explicit sum.
    pub fn uniform_tail(&self) -> f64 {
        self.uniform_tail
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    /// Cell spacing on the side-`side` torus.
    pub fn h(&self) -> f64 {
        self.side / self.grid.n() as f64
    }
}

/// Distances from the origin to the nearest and farthest point of the hat support `[k - 1, k + 1]`.
fn hat_distances(k: &[i64]) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for &ki in k {
        let a = (ki.unsigned_abs() as f64 - 1.0).max(0.0);
        let b = ki.unsigned_abs() as f64 + 1.0;
        lo += a * a;
        hi += b * b;
    }
    (lo.sqrt(), hi.sqrt())
}

/// Distinct images of `k` under coordinate permutations and sign changes.
fn signed_permutations(k: &[i64], out: &mut Vec<[i64; 3]>) {
    out.clear();
    let n = k.len();
    let perms: &[[usize; 3]] = if n == 2 {
        &[[0, 1, 2], [1, 0, 2]]
    } else {
        &[[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
    };
    for p in perms {
        for signs in 0..(1u32 << n) {
            let mut v = [0i64; 3];
            for i in 0..n {
                let s = if signs & (1 << i) != 0 { -1 } else { 1 };
                v[i] = s * k[p[i]];
            }
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
}

/// `W(k)` for a single lattice vector (no periodic images), in physical units.
#[allow(clippy::too_many_arguments)]
fn cell_weight(
    k: &[i64],
    lo_d: f64,
    hi_d: f64,
    breaks: &[f64],
    origin: &[f64],
    kz: &dyn Fn(f64) -> f64,
    lap: &dyn Fn(f64) -> f64,
    cell_volume: f64,
) -> f64 {
    let cut = breaks.iter().any(|&b| b > lo_d && b < hi_d);
    if lo_d >= FAR && !cut {
        let r = k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
        // hat has second moment 1/6 per axis
        return cell_volume * (kz(r) + lap(r) / 12.0);
    }
    let n = k.len();
    let mut total = 0.0;
    for signs in 0..(1u32 << n) {
        let mut lo = [0.0f64; 3];
        let mut hi = [0.0f64; 3];
        let mut at_origin = true;
        let mut nonzero = 0;
        for i in 0..n {
            let s = if signs & (1 << i) != 0 { -1 } else { 1 };
            let (a, b) = (k[i], k[i] + s);
            lo[i] = a.min(b) as f64;
            hi[i] = a.max(b) as f64;
            if !(k[i] == 0 || b == 0) {
                at_origin = false;
            }
            if k[i] != 0 {
                nonzero += 1;
            }
        }
        if at_origin {
            total += origin[nonzero];
            continue;
        }
        let (plo, phi) = box_distances(&lo[..n], &hi[..n]);
        let hat = |y: &[f64]| -> f64 {
            let mut w = 1.0;
            for i in 0..n {
                w *= 1.0 - (y[i] - k[i] as f64).abs();
            }
            w
        };
        let f = |y: &[f64]| {
            let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            kz(r) * hat(y)
        };
        let piece_cut = breaks.iter().any(|&b| b > plo && b < phi);
        let v = if plo < NEAR || piece_cut {
            box_integral(&f, &lo[..n], &hi[..n], breaks)
        } else {
            tensor_gauss(&f, &lo[..n], &hi[..n])
        };
        total += cell_volume * v;
    }
    total
}

fn box_distances(lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for (l, h) in lo.iter().zip(hi) {
        let near = if *l > 0.0 {
            *l
        } else if *h < 0.0 {
            -*h
        } else {
            0.0
        };
        let far = l.abs().max(h.abs());
        a += near * near;
        b += far * far;
    }
    (a.sqrt(), b.sqrt())
}

/// Tensor 8-point Gauss-Legendre over a box.
fn tensor_gauss(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64]) -> f64 {
    let g = gl(8);
    let n = lo.len();
    let nodes: Vec<Vec<(f64, f64)>> = (0..n).map(|i| g.mapped(lo[i], hi[i]).collect()).collect();
    let mut acc = 0.0;
    let mut y = [0.0f64; 3];
    let m = nodes[0].len();
    let total = m.pow(n as u32);
    for idx in 0..total {
        let mut rest = idx;
        let mut w = 1.0;
        for i in 0..n {
            let (x, wi) = nodes[i][rest % m];
            rest /= m;
            y[i] = x;
            w *= wi;
        }
        acc += w * f(&y[..n]);
    }
    acc
}

/// Nested adaptive quadrature over a box for integrands that jump on spheres `|y| = b`.
pub(crate) fn box_integral(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], spheres: &[f64]) -> f64 {
    let mut y = [0.0f64; 3];
    nested(f, lo, hi, spheres, 0, &mut y)
}

fn nested(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], spheres: &[f64], d: usize, y: &mut [f64; 3]) -> f64 {
    let n = lo.len();
    let fixed: f64 = y[..d].iter().map(|v| v * v).sum();
    // where a sphere meets the edges of the remaining box
    let mut breaks = Vec::new();
    let inner = n - d - 1;
    for &b in spheres {
        for combo in 0..3usize.pow(inner as u32) {
            let mut rest = combo;
            let mut s = b * b - fixed;
            let mut valid = true;
            for j in d + 1..n {
                let c = match rest % 3 {
                    0 => lo[j],
                    1 => hi[j],
                    _ => {
                        if lo[j] < 0.0 && hi[j] > 0.0 {
                            0.0
                        } else {
                            valid = false;
                            0.0
                        }
                    }
                };
                rest /= 3;
                s -= c * c;
            }
            if valid && s > 0.0 {
                breaks.push(s.sqrt());
                breaks.push(-s.sqrt());
            }
        }
    }
    let mut y_local = *y;
    let g = |t: f64| {
        y_local[d] = t;
        if d + 1 == n {
            f(&y_local[..n])
        } else {
            let mut inner_y = y_local;
            nested(f, lo, hi, spheres, d + 1, &mut inner_y)
        }
    };
    // inner levels run tighter so their noise stays below the outer tolerance
    let rel = 1e-12 * 10f64.powi(inner as i32);
    adaptive(g, lo[d], hi[d], &breaks, 1e-300, rel).value
}

/// Integrals over the unit cube `[0, 1]^n` with a corner at the origin:
/// `S_j = h^n int K_eps(h |u|) prod_{i < j} u_i prod_{i >= j} (1 - u_i) du`.
///
/// Uses the pyramid (Duffy) split `u_m = x`, `u_i = x a_i`, which removes the
/// corner singularity, and `x = v^2` for the radial integral.
fn origin_pieces(n: usize, kz: &dyn Fn(f64) -> f64, cell_volume: f64) -> Vec<f64> {
    let g = gl(16);
    let outer: Vec<(f64, f64)> = g.mapped(0.0, 1.0).collect();
    (0..=n)
        .map(|j| {
            let mut total = 0.0;
            for m in 0..n {
                let mut a = [0.0f64; 3];
                let count = outer.len().pow(n as u32 - 1);
                for idx in 0..count {
                    let mut rest = idx;
                    let mut w = 1.0;
                    for i in 0..n {
                        if i == m {
                            a[i] = 1.0;
                            continue;
                        }
                        let (x, wi) = outer[rest % outer.len()];
                        rest /= outer.len();
                        a[i] = x;
                        w *= wi;
                    }
                    let rho = a[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
                    let radial = |v: f64| {
                        let x = v * v;
                        let mut p = 1.0;
                        for i in 0..n {
                            let u = x * a[i];
                            p *= if i < j { u } else { 1.0 - u };
                        }
                        2.0 * v * x.powi(n as i32 - 1) * kz(x * rho) * p
                    };
                    total += w * adaptive(radial, 0.0, 1.0, &[], 1e-300, 1e-12).value;
                }
            }
            cell_volume * total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{integrated_kernel, Kernel, DEFAULT_TOL};

    #[test]
    fn weights_carry_the_kernel_mass() {
        for spec in ["indicator", "gaussian", "helmholtz", "ring"] {
            let k = Kernel::parse(spec, 2).unwrap();
            let t = integrated_kernel(&k, DEFAULT_TOL).unwrap();
            let g = TorusGrid::new(2, 64).unwrap();
            let w = ShiftWeights::new(&t, g, 0.15, 1.0).unwrap();
            let total: f64 = w.values().iter().sum();
            assert!((total - t.mass()).abs() < 1e-9 * t.abs_mass(), "{spec}: {total}");
            // the explicit sum already holds all but a sliver of it
            let tail = w.uniform_tail() * g.len() as f64;
            assert!(tail.abs() < 2e-6 * t.abs_mass(), "{spec}: tail {tail}");
        }
    }

    #[test]
    fn indicator_weights_match_exact_first_moment() {
        // sum_k W(k) |k h| approximates int K_eps |z| = eps * 2/3 up to hat smoothing
        let k = Kernel::parse("indicator", 2).unwrap();
        let t = integrated_kernel(&k, DEFAULT_TOL).unwrap();
        let g = TorusGrid::new(2, 256).unwrap();
        let eps = 0.1;
        let w = ShiftWeights::new(&t, g, eps, 1.0).unwrap();
        let h = g.h();
        let mut m = 0.0;
        for (i, wi) in w.values().iter().enumerate() {
            let o = g.signed_offset(i);
            let r = h * ((o[0] * o[0] + o[1] * o[1]) as f64).sqrt();
            m += wi * r;
        }
        assert!((m / (eps * 2.0 / 3.0) - 1.0).abs() < 2e-3, "{m}");
    }

    #[test]
    fn origin_pieces_of_constant_kernel() {
        // K = 1: S_j = prod of int u or int (1 - u) = 2^-n
        let s = origin_pieces(3, &|_| 1.0, 1.0);
        for v in s {
            assert!((v - 0.125).abs() < 1e-13, "{v}");
        }
    }

    #[test]
    fn nested_quadrature_measures_quarter_disk() {
        let v = box_integral(
            &|y| if y[0] * y[0] + y[1] * y[1] < 1.0 { 1.0 } else { 0.0 },
            &[0.0, 0.0],
            &[1.0, 1.0],
            &[1.0],
        );
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-10, "{v}");
    }

    #[test]
    fn rejects_under_resolved_eps() {
        let k = Kernel::parse("gaussian", 2).unwrap();
        let t = integrated_kernel(&k, DEFAULT_TOL).unwrap();
        let g = TorusGrid::new(2, 64).unwrap();
        assert!(matches!(ShiftWeights::new(&t, g, 0.05, 1.0), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn permutations_are_distinct() {
        let mut v = Vec::new();
        signed_permutations(&[2, 1], &mut v);
        assert_eq!(v.len(), 8);
        signed_permutations(&[1, 1], &mut v);
        assert_eq!(v.len(), 4);
        signed_permutations(&[0, 0], &mut v);
        assert_eq!(v.len(), 1);
        signed_permutations(&[3, 0, 0], &mut v);
        assert_eq!(v.len(), 6);
    }
}
