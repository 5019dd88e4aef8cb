//! The integrated kernel `Phi(r) = sigma_n int_r^inf rho^{n-1} K(rho) d rho`
//! and the constants derived from it.

use std::io::{self, Write};

use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::measure::critical_prefactor;
use crate::quadrature::{adaptive, gl};

/// Smallest tabulated radius.
const R_MIN: f64 = 1e-6;
const PER_DECADE: f64 = 40.0;
/// Upper end of direct quadrature for power-law tails; beyond it the tail is summed in closed form.
const POWER_TAIL_FROM: f64 = 1e5;

/// Default quadrature tolerance for tables.
pub const DEFAULT_TOL: f64 = 1e-10;

impl Kernel {
    /// Profile used inside quadratures: exact where cheap, tabulated for the fractional family.
    pub(crate) fn eval_quad(&self, r: f64) -> f64 {
        if matches!(self.spec(), super::KernelSpec::Fractional { .. }) {
            self.eval_fast(r)
        } else {
            self.eval(r)
        }
    }

    fn log_breaks(&self) -> Vec<f64> {
        self.breakpoints().into_iter().map(f64::ln).collect()
    }

    /// `sigma_n int_lo^hi rho^{n-1+power} K` (or `|K|`) with the quadrature profile.
    fn moment_between(&self, power: f64, lo: f64, hi: f64, absolute: bool) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let n = self.dim() as f64;
        let sigma = self.sigma();
        let f = |t: f64| {
            let r = t.exp();
            let k = self.eval_quad(r);
            sigma * r.powf(n + power) * if absolute { k.abs() } else { k }
        };
        let t_lo = if lo > 0.0 { lo.ln() } else { self.lower_log_radius(power) };
        adaptive(f, t_lo, hi.ln(), &self.log_breaks(), 1e-300, self.quad_rel_tol()).value
    }

    /// Interpolated profiles are only piecewise smooth, so they get a looser target.
    fn quad_rel_tol(&self) -> f64 {
        if matches!(self.spec(), super::KernelSpec::Fractional { .. }) {
            1e-10
        } else {
            1e-14
        }
    }

    /// `sigma_n int_r^inf rho^{n-1} |K|`.
    pub(crate) fn abs_moment_from(&self, r: f64) -> Result<f64> {
        self.moment_from(0.0, r, true)
    }

    /// `sigma_n int_r^inf rho^{n-1+power} K`, with a closed-form power-law remainder when needed.
    fn moment_from(&self, power: f64, r: f64, absolute: bool) -> Result<f64> {
        if let Some(far) = self.negligible_radius() {
            return Ok(self.moment_between(power, r, far.max(r), absolute));
        }
        let n = self.dim() as f64;
        let start = r.max(POWER_TAIL_FROM);
        let mut total = self.moment_between(power, r, start, absolute);
        // K(rho) = K(R) (rho / R)^p beyond the table
        let p = -self.tail_exponent();
        let exponent = n + power + p;
        if exponent >= 0.0 {
            return Err(Error::DivergentTail(format!("moment of order {} diverges for tail exponent {}", power, -p)));
        }
        let k = self.eval_quad(start);
        let k = if absolute { k.abs() } else { k };
        total += self.sigma() * k * start.powf(n + power) / -exponent;
        Ok(total)
    }
}

/// `Phi` on a log-spaced grid together with its `L^1` norm and the kernel's first moment.
#[derive(Debug, Clone)]
pub struct IntegratedKernelTable {
    kernel: Kernel,
    tol: f64,
    nodes: Vec<f64>,
    phi_nodes: Vec<f64>,
    mass: f64,
    r_cut: f64,
    abs_mass: f64,
    l1_norm: f64,
    first_moment: f64,
    min_phi: f64,
    min_phi_at: f64,
}

/// Outcome of checking the admissibility hypotheses numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub min_phi: f64,
    pub min_phi_at: f64,
    pub evidence: Vec<String>,
}

impl IntegratedKernelTable {
    /// Builds the table without admissibility checks.
    pub fn compute(kernel: &Kernel, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("quadrature tolerance {tol} must be positive")));
        }
        let abs_mass = kernel.moment_between(0.0, 0.0, R_MIN, true) + kernel.moment_from(0.0, R_MIN, true)?;
        let r_cut = match kernel.support_radius() {
            Some(s) => s,
            None => search_radius(|r| kernel.moment_from(0.0, r, true), tol)?,
        };

        let mut nodes = Vec::new();
        let decades = (r_cut / R_MIN).log10();
        let count = (decades * PER_DECADE).ceil() as usize;
        for i in 0..=count {
            nodes.push(R_MIN * 10f64.powf(decades * i as f64 / count as f64));
        }
        // keep panels short on the linear scale for exponential tails
        let mut r = 1.0;
        while r < r_cut && kernel.negligible_radius().is_some() {
            nodes.push(r);
            r += 0.25;
        }
        nodes.extend(kernel.breakpoints().into_iter().filter(|&b| b < r_cut));
        nodes.push(r_cut);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
        *nodes.last_mut().unwrap() = r_cut;

        let tail = kernel.moment_from(0.0, r_cut, false)?;
        let mut phi_nodes = vec![0.0; nodes.len()];
        let mut acc = tail;
        phi_nodes[nodes.len() - 1] = acc;
        for i in (0..nodes.len() - 1).rev() {
            acc += kernel.moment_between(0.0, nodes[i], nodes[i + 1], false);
            phi_nodes[i] = acc;
        }
        let mass = phi_nodes[0] + kernel.moment_between(0.0, 0.0, R_MIN, false);

        let (mut min_phi, mut min_phi_at) = (mass, 0.0);
        for (&r, &p) in nodes.iter().zip(&phi_nodes) {
            if p < min_phi {
                min_phi = p;
                min_phi_at = r;
            }
        }

        let first_moment = first_moment_checked(kernel)?;
        let mut table = Self {
            kernel: kernel.clone(),
            tol,
            nodes,
            phi_nodes,
            mass,
            r_cut,
            abs_mass,
            l1_norm: f64::NAN,
            first_moment,
            min_phi,
            min_phi_at,
        };
        table.l1_norm = table.phi_moment(0, f64::INFINITY)?;
        Ok(table)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `Phi(0)`, the signed mass of the kernel.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `int |K|`.
    pub fn abs_mass(&self) -> f64 {
        self.abs_mass
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn first_moment(&self) -> f64 {
        self.first_moment
    }

    /// Critical coupling from the first moment.
    pub fn gamma_crit(&self) -> f64 {
        critical_prefactor(self.kernel.dim()) / self.first_moment
    }

    /// Critical coupling from `||Phi||_1`.
    pub fn gamma_crit_phi(&self) -> f64 {
        critical_prefactor(self.kernel.dim()) / self.l1_norm
    }

    /// Relative gap between the two routes to the critical coupling.
    pub fn consistency_gap(&self) -> f64 {
        (self.l1_norm - self.first_moment).abs() / self.first_moment.abs()
    }

    pub fn min_phi(&self) -> (f64, f64) {
        (self.min_phi, self.min_phi_at)
    }

    /// Tabulated `(r, Phi(r))` samples, starting with `(0, Phi(0))`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        std::iter::once((0.0, self.mass)).chain(self.nodes.iter().copied().zip(self.phi_nodes.iter().copied()))
    }

    /// `Phi(r)` from the tabulated suffix sums plus one Gauss-Legendre panel.
    pub fn phi(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.mass;
        }
        if r >= self.r_cut {
            if self.kernel.support_radius().is_some_and(|s| r >= s) {
                return 0.0;
            }
            return self.kernel.moment_from(0.0, r, false).unwrap_or(0.0);
        }
        if r < R_MIN {
            return self.phi_nodes[0] + self.kernel.moment_between(0.0, r, R_MIN, false);
        }
        let i = self.nodes.partition_point(|&x| x <= r) - 1;
        let (a, b) = (r, self.nodes[i + 1]);
        self.phi_nodes[i + 1] + self.panel(a, b)
    }

    /// `sigma_n int_a^b rho^{n-1} K` on a panel without interior breakpoints.
    fn panel(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = self.kernel.dim() as f64;
        let sigma = self.kernel.sigma();
        gl(16).integrate(a.ln(), b.ln(), |t| {
            let r = t.exp();
            sigma * r.powf(n) * self.kernel.eval_quad(r)
        })
    }

    /// Cubic Hermite interpolation of the tabulated samples using `Phi' = -sigma r^{n-1} K`.
    pub fn phi_interp(&self, r: f64) -> f64 {
        if r <= R_MIN || r >= self.r_cut {
            return self.phi(r);
        }
        let i = self.nodes.partition_point(|&x| x <= r) - 1;
        let (r0, r1) = (self.nodes[i], self.nodes[i + 1]);
        let (p0, p1) = (self.phi_nodes[i], self.phi_nodes[i + 1]);
        let n = self.kernel.dim() as f64;
        let sigma = self.kernel.sigma();
        // derivatives in t = ln r, from just inside the panel to respect jumps of K
        let inside = |x: f64, toward: f64| x + 1e-12 * (toward - x);
        let m0 = -sigma * r0.powf(n) * self.kernel.eval_quad(inside(r0, r1));
        let m1 = -sigma * r1.powf(n) * self.kernel.eval_quad(inside(r1, r0));
        let dt = r1.ln() - r0.ln();
        let s = (r.ln() - r0.ln()) / dt;
        let (s2, s3) = (s * s, s * s * s);
        p0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + m0 * dt * (s3 - 2.0 * s2 + s)
            + p1 * (-2.0 * s3 + 3.0 * s2)
            + m1 * dt * (s3 - s2)
    }

    /// `Phi_eps(r) = Phi(r / eps) / eps`.
    pub fn phi_eps(&self, r: f64, eps: f64) -> f64 {
        self.phi(r / eps) / eps
    }

    /// `int_0^upper rho^j Phi(rho) d rho` by Gauss-Legendre on the table panels.
    pub fn phi_moment(&self, j: u32, upper: f64) -> Result<f64> {
        let jf = j as f64;
        // Fubini below the first node: int_0^a rho^j Phi = a^{j+1} Phi(a)/(j+1) + int_0^a g rho^{j+1}/(j+1)
        let a = R_MIN.min(upper);
        let mut total = a.powf(jf + 1.0) * self.phi(a) / (jf + 1.0)
            + self.kernel.moment_between(jf + 1.0, 0.0, a, false) / (jf + 1.0);
        let g = gl(16);
        for w in self.nodes.windows(2) {
            let (lo, hi) = (w[0], w[1].min(upper));
            if hi <= lo {
                break;
            }
            let phi_hi = self.phi_nodes_at(w[1]);
            total += g.integrate(lo.ln(), hi.ln(), |t| {
                let r = t.exp();
                r.powf(jf + 1.0) * (phi_hi + self.panel(r, w[1]))
            });
        }
        if upper > self.r_cut {
            // Phi is below the tolerance out here, so a plain adaptive pass suffices for finite ends
            let r = self.r_cut;
            let tail = if let Some(s) = self.kernel.support_radius() {
                if s <= r {
                    0.0
                } else {
                    adaptive(|x| x.powf(jf) * self.phi(x), r, s.min(upper), &[], 1e-300, 1e-12).value
                }
            } else if upper.is_finite() {
                adaptive(|x| x.powf(jf) * self.phi(x), r, upper, &[], 1e-300, 1e-12).value
            } else {
                // int_R^inf rho^j Phi = (1/(j+1)) sigma int_R^inf rho^{n-1} K (rho^{j+1} - R^{j+1})
                (self.kernel.moment_from(jf + 1.0, r, false)?
                    - r.powf(jf + 1.0) * self.kernel.moment_from(0.0, r, false)?)
                    / (jf + 1.0)
            };
            total += tail;
        }
        Ok(total)
    }

    fn phi_nodes_at(&self, r: f64) -> f64 {
        let i = self.nodes.partition_point(|&x| x < r);
        self.phi_nodes[i]
    }

    /// `int_0^upper r^j Phi_eps(r) dr`.
    pub fn phi_eps_moment(&self, j: u32, eps: f64, upper: f64) -> Result<f64> {
        Ok(eps.powi(j as i32) * self.phi_moment(j, upper / eps)?)
    }

    /// Smallest radius whose exterior carries at most `fraction` of `int |K|`.
    pub fn mass_radius(&self, fraction: f64) -> Result<f64> {
        if let Some(s) = self.kernel.support_radius() {
            return Ok(s);
        }
        let target = fraction * self.abs_mass;
        search_radius(|r| self.kernel.moment_from(0.0, r, true), target)
    }

    /// CSV with header `r,phi`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "r,phi")?;
        for (r, p) in self.samples() {
            writeln!(w, "{r:.12e},{p:.12e}")?;
        }
        Ok(())
    }

    /// H1 holds by construction; H2 from convergence of the absolute moments; H3 from the sign of `Phi`.
    pub fn hypotheses(&self) -> HypothesisReport {
        let k = &self.kernel;
        let n = k.dim() as f64;
        let mut evidence = vec!["h1: radial profile by construction".to_string()];
        let alpha = k.singularity_exponent();
        let beta = k.tail_exponent();
        let exponents_ok = alpha < n + 1.0 && beta > n + 1.0;
        let abs_moment = k.moment_between(1.0, 0.0, 1.0, true) + k.moment_from(1.0, 1.0, true).unwrap_or(f64::INFINITY);
        let h2 = exponents_ok && abs_moment.is_finite();
        evidence.push(format!(
            "h2: singularity exponent {alpha}, tail exponent {beta}, sigma int r^n |K| = {abs_moment:.6e}"
        ));
        let h3 = self.min_phi >= -self.tol;
        evidence.push(format!("h3: min Phi = {:.6e} at r = {:.6e}", self.min_phi, self.min_phi_at));
        HypothesisReport { h1: true, h2, h3, min_phi: self.min_phi, min_phi_at: self.min_phi_at, evidence }
    }
}

/// `sigma_n int_0^inf r^n K`, accumulated over doubling shells with a Cauchy check.
fn first_moment_checked(kernel: &Kernel) -> Result<f64> {
    let mut total = kernel.moment_between(1.0, 0.0, 1.0, false);
    if let Some(far) = kernel.negligible_radius() {
        return Ok(total + kernel.moment_between(1.0, 1.0, far.max(1.0), false));
    }
    let mut r = 1.0;
    let mut prev_shell = f64::INFINITY;
    while r < POWER_TAIL_FROM {
        let shell = kernel.moment_between(1.0, r, 2.0 * r, false);
        if r > 16.0 && shell.abs() > prev_shell {
            return Err(Error::DivergentTail(format!("shell sums grow beyond r = {r}")));
        }
        prev_shell = shell.abs();
        total += shell;
        r *= 2.0;
    }
    Ok(total + kernel.moment_from(1.0, r, false)?)
}

/// Smallest `r` (to relative `1e-6`) with `tail(r) <= target`, for a decreasing `tail`.
fn search_radius(tail: impl Fn(f64) -> Result<f64>, target: f64) -> Result<f64> {
    let mut hi = 0.5;
    let mut steps = 0;
    while tail(hi)? > target {
        hi *= 1.5;
        steps += 1;
        if steps > 120 {
            return Err(Error::Truncation(format!("tail mass exceeds {target:e} beyond r = {hi:e}")));
        }
    }
    let mut lo = if steps == 0 { 0.0 } else { hi / 1.5 };
    if steps == 0 {
        // tail already small at 0.5; shrink toward the origin
        while lo == 0.0 {
            let mid = 0.5 * hi;
            if mid < 1e-6 || tail(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if tail(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Table with admissibility and moment checks applied.
pub fn integrated_kernel(kernel: &Kernel, quadrature_tol: f64) -> Result<IntegratedKernelTable> {
    let table = IntegratedKernelTable::compute(kernel, quadrature_tol)?;
    if table.min_phi < -quadrature_tol {
        return Err(Error::KernelInadmissible { min_phi: table.min_phi, at: table.min_phi_at });
    }
    if !(table.first_moment > 0.0) {
        return Err(Error::DegenerateMoment(table.first_moment));
    }
    Ok(table)
}

/// `sigma_n int_0^inf r^n K(r) dr`, equal to `int |z| K(z) dz`.
pub fn first_moment(kernel: &Kernel) -> Result<f64> {
    first_moment_checked(kernel)
}

/// Critical coupling `(n omega_n / (2 omega_{n-1})) / int |z| K`.
pub fn gamma_crit(kernel: &Kernel) -> Result<f64> {
    let m = first_moment(kernel)?;
    if !(m > 0.0) {
        return Err(Error::DegenerateMoment(m));
    }
    Ok(critical_prefactor(kernel.dim()) / m)
}

pub fn verify_hypotheses(kernel: &Kernel) -> HypothesisReport {
    match IntegratedKernelTable::compute(kernel, DEFAULT_TOL) {
        Ok(t) => t.hypotheses(),
        Err(e) => HypothesisReport {
            h1: true,
            h2: false,
            h3: false,
            min_phi: f64::NAN,
            min_phi_at: f64::NAN,
            evidence: vec![format!("table construction failed: {e}")],
        },
    }
}

/// Critical parameter of the diffuse-interface model, `1 - (4 gamma_crit int_0^1 sqrt W)^{-2}`.
pub fn q_crit(gamma_crit: f64, sqrt_w_integral: f64) -> Result<f64> {
    if !(gamma_crit > 0.0) || !(sqrt_w_integral > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "q_crit needs positive inputs, got {gamma_crit} and {sqrt_w_integral}"
        )));
    }
    Ok(1.0 - (4.0 * gamma_crit * sqrt_w_integral).powi(-2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use std::f64::consts::PI;

    fn table(spec: &str, dim: usize) -> IntegratedKernelTable {
        integrated_kernel(&Kernel::parse(spec, dim).unwrap(), DEFAULT_TOL).unwrap()
    }

    #[test]
    fn indicator_closed_forms() {
        for dim in [2usize, 3] {
            let t = table("indicator", dim);
            let n = dim as f64;
            for r in [0.0f64, 1e-7, 0.1, 0.5, 0.99, 1.0, 1.5] {
                let exact = if r < 1.0 { 1.0 - r.powi(dim as i32) } else { 0.0 };
                assert!((t.phi(r) - exact).abs() < 1e-10, "dim {dim} r {r}: {}", t.phi(r));
            }
            assert!((t.l1_norm() - n / (n + 1.0)).abs() < 1e-10);
            assert!((t.first_moment() - n / (n + 1.0)).abs() < 1e-10);
        }
        assert!((table("indicator", 2).gamma_crit() - 0.75 * PI).abs() < 1e-9);
    }

    #[test]
    fn helmholtz_constants() {
        let t2 = table("helmholtz", 2);
        assert!((t2.first_moment() - PI / 2.0).abs() < 1e-8);
        assert!((t2.gamma_crit() - 1.0).abs() < 1e-8);
        assert!(t2.consistency_gap() < 1e-8, "{}", t2.consistency_gap());
        assert!((t2.mass() - 1.0).abs() < 1e-8);
        // Phi(r) = r K_1(r) in two dimensions
        let r = 0.7;
        let k1 = crate::kernels::bessel_k(1.0, r).unwrap();
        assert!((t2.phi(r) - r * k1).abs() < 1e-10);
        let t3 = table("helmholtz", 3);
        assert!((t3.first_moment() - 2.0).abs() < 1e-8);
        assert!((t3.phi(1.3) - 2.3 * (-1.3f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn ring_kernel_phi() {
        let t = table("ring:a=-1,b=0.5", 2);
        for r in [0.0, 0.3, 0.9, 1.2, 1.9] {
            let exact = if r < 1.0 { PI / 2.0 + PI * r * r } else { PI * (4.0 - r * r) / 2.0 };
            assert!((t.phi(r) - exact).abs() < 1e-10, "r {r}");
        }
        assert!((t.first_moment() - 5.0 * PI / 3.0).abs() < 1e-10);
        assert!((t.gamma_crit() - 0.3).abs() < 1e-10);
    }

    #[test]
    fn inadmissible_ring() {
        let k = Kernel::parse("ring:a=-1,b=0.1", 2).unwrap();
        assert!(matches!(integrated_kernel(&k, DEFAULT_TOL), Err(Error::KernelInadmissible { .. })));
        let rep = verify_hypotheses(&k);
        assert!(rep.h1 && rep.h2 && !rep.h3);
        assert!((rep.min_phi - PI * (-1.0 + 0.3)).abs() < 1e-10);
        assert!(verify_hypotheses(&Kernel::parse("ring:a=-1,b=0.5", 2).unwrap()).h3);
    }

    #[test]
    fn gaussian_moment() {
        let t = table("gaussian:s=1", 2);
        assert!((t.first_moment() - (PI / 2.0).sqrt()).abs() < 1e-9);
        assert!(t.consistency_gap() < 1e-8);
    }

    #[test]
    fn interpolation_tracks_exact_phi() {
        let t = table("helmholtz", 2);
        for r in [2e-6, 0.013, 0.4, 2.2, 9.0] {
            assert!((t.phi_interp(r) - t.phi(r)).abs() < 1e-8 * t.mass(), "r {r}");
        }
    }

    #[test]
    fn q_crit_values() {
        assert!((q_crit(1.0, 1.0 / 6.0).unwrap() + 1.25).abs() < 1e-15);
        assert_eq!(q_crit(1.0, 0.25).unwrap(), 0.0);
        assert!((q_crit(2.0, 0.25).unwrap() - 0.75).abs() < 1e-15);
        assert!(q_crit(0.0, 0.25).is_err());
    }

    #[test]
    fn fractional_table_is_normalized() {
        let k = Kernel::new(KernelSpec::Fractional { s: 1.5 }, 3).unwrap();
        let t = IntegratedKernelTable::compute(&k, 1e-6).unwrap();
        assert!((t.mass() - 1.0).abs() < 1e-4, "{}", t.mass());
        assert!(t.hypotheses().h3);
    }
}
