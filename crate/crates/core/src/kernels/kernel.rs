//! Radial kernels and their specifications.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use super::bessel::bessel_k;
use super::profile::{ProfileTable, UniformTable};
use crate::error::{Error, Result};
use crate::measure::{unit_ball_volume, unit_sphere_area};
use crate::quadrature::adaptive;

/// Kernel families, as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// Uniform on the unit ball with unit mass.
    Indicator,
    /// Normalized Gaussian with standard deviation `s` per axis.
    Gaussian { s: f64 },
    /// Value `a` on `[0, 1)` and `b` on `[1, 2)`.
    Ring { a: f64, b: f64 },
    /// Fundamental solution of `K - Laplace K = delta`.
    Helmholtz,
    /// Kernel with Fourier symbol `1 / (1 + (2 pi |xi|)^s)`, `1 < s < 2`.
    Fractional { s: f64 },
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Indicator => write!(f, "indicator"),
            KernelSpec::Gaussian { s } => write!(f, "gaussian:s={s}"),
            KernelSpec::Ring { a, b } => write!(f, "ring:a={a},b={b}"),
            KernelSpec::Helmholtz => write!(f, "helmholtz"),
            KernelSpec::Fractional { s } => write!(f, "fractional:s={s}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, params) = match text.split_once(':') {
            Some((n, p)) => (n.trim(), p.trim()),
            None => (text, ""),
        };
        let mut pairs = Vec::new();
        for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("kernel parameter '{item}' is not key=value")))?;
            let v: f64 =
                v.trim().parse().map_err(|_| Error::Parse(format!("kernel parameter '{item}' is not a number")))?;
            pairs.push((k.trim().to_string(), v));
        }
        let take = |allowed: &[&str]| -> Result<()> {
            match pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
                Some((k, _)) => Err(Error::Parse(format!("unknown parameter '{k}' for kernel '{name}'"))),
                None => Ok(()),
            }
        };
        let get = |k: &str, default: f64| pairs.iter().find(|(p, _)| p == k).map_or(default, |p| p.1);
        let spec = match name {
            "indicator" => {
                take(&[])?;
                KernelSpec::Indicator
            }
            "gaussian" => {
                take(&["s"])?;
                KernelSpec::Gaussian { s: get("s", 1.0) }
            }
            "ring" => {
                take(&["a", "b"])?;
                KernelSpec::Ring { a: get("a", -1.0), b: get("b", 0.5) }
            }
            "helmholtz" => {
                take(&[])?;
                KernelSpec::Helmholtz
            }
            "fractional" => {
                take(&["s"])?;
                KernelSpec::Fractional { s: get("s", 1.5) }
            }
            other => return Err(Error::InvalidKernel(format!("unknown kernel '{other}'"))),
        };
        Ok(spec)
    }
}

/// A radial kernel in dimension 2 or 3.
#[derive(Clone)]
pub struct Kernel {
    spec: KernelSpec,
    dim: usize,
    table: Arc<OnceLock<Option<ProfileTable>>>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel").field("spec", &self.spec).field("dim", &self.dim).finish()
    }
}

impl PartialEq for Kernel {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.dim == other.dim
    }
}

impl Kernel {
    pub fn new(spec: KernelSpec, dim: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        match spec {
            KernelSpec::Gaussian { s } if !(s > 0.0 && s.is_finite()) => {
                return Err(Error::InvalidKernel(format!("gaussian scale {s} must be positive")));
            }
            KernelSpec::Ring { a, b } if !(a.is_finite() && b.is_finite()) => {
                return Err(Error::InvalidKernel("ring values must be finite".into()));
            }
            KernelSpec::Fractional { s } if !(s > 1.0 && s < 2.0) => {
                return Err(Error::InvalidKernel(format!("fractional order {s} outside (1, 2)")));
            }
            _ => {}
        }
        Ok(Self { spec, dim, table: Arc::new(OnceLock::new()) })
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        Self::new(text.parse()?, dim)
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> String {
        self.spec.to_string()
    }

    /// `sigma_n`, the area of the unit sphere.
    pub fn sigma(&self) -> f64 {
        unit_sphere_area(self.dim)
    }

    /// Radius outside of which the kernel vanishes, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match self.spec {
            KernelSpec::Indicator => Some(1.0),
            KernelSpec::Ring { .. } => Some(2.0),
            _ => None,
        }
    }

    /// `alpha` with `|K(r)| <~ r^{-alpha}` near zero; logarithmic singularities report 0.
    pub fn singularity_exponent(&self) -> f64 {
        match self.spec {
            KernelSpec::Helmholtz => self.dim as f64 - 2.0,
            KernelSpec::Fractional { s } => self.dim as f64 - s,
            _ => 0.0,
        }
    }

    /// `beta` with `|K(r)| <~ r^{-beta}` at infinity; infinite for compact or exponential tails.
    pub fn tail_exponent(&self) -> f64 {
        match self.spec {
            KernelSpec::Fractional { s } => self.dim as f64 + s,
            _ => f64::INFINITY,
        }
    }

    /// True when the profile is unbounded at the origin.
    pub fn is_singular(&self) -> bool {
        matches!(self.spec, KernelSpec::Helmholtz | KernelSpec::Fractional { .. })
    }

    /// Radii where the profile jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.spec {
            KernelSpec::Indicator => vec![1.0],
            KernelSpec::Ring { .. } => vec![1.0, 2.0],
            _ => Vec::new(),
        }
    }

    /// Radius beyond which the profile is below `1e-25` of its scale, for
    /// exponentially decaying kernels.
    pub(crate) fn negligible_radius(&self) -> Option<f64> {
        match self.spec {
            KernelSpec::Indicator => Some(1.0),
            KernelSpec::Ring { .. } => Some(2.0),
            KernelSpec::Gaussian { s } => Some(11.0 * s),
            KernelSpec::Helmholtz => Some(60.0),
            KernelSpec::Fractional { .. } => None,
        }
    }

    /// Profile `K(r)` for `r > 0`, evaluated from its closed form or defining integral.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.dim as f64;
        match self.spec {
            KernelSpec::Indicator => {
                if r < 1.0 {
                    1.0 / unit_ball_volume(self.dim)
                } else {
                    0.0
                }
            }
            KernelSpec::Gaussian { s } => (2.0 * PI * s * s).powf(-n / 2.0) * (-r * r / (2.0 * s * s)).exp(),
            KernelSpec::Ring { a, b } => {
                if r < 1.0 {
                    a
                } else if r < 2.0 {
                    b
                } else {
                    0.0
                }
            }
            KernelSpec::Helmholtz => helmholtz(self.dim, r),
            KernelSpec::Fractional { s } => fractional_profile(self.dim, s, r),
        }
    }

    fn profile_table(&self) -> Option<&ProfileTable> {
        self.table
            .get_or_init(|| match self.spec {
                KernelSpec::Helmholtz if self.dim == 2 => Some(ProfileTable {
                    log: UniformTable::build(-12.0 * std::f64::consts::LN_10, 0.0, 64.0, |x| {
                        helmholtz(2, x.exp()).ln()
                    }),
                    linear: Some(UniformTable::build(1.0, 60.0, 128.0, |r| helmholtz(2, r).ln() + r)),
                }),
                KernelSpec::Fractional { s } => Some(ProfileTable {
                    log: UniformTable::build(
                        -8.0 * std::f64::consts::LN_10,
                        5.0 * std::f64::consts::LN_10,
                        18.0,
                        |x| fractional_profile(self.dim, s, x.exp()).ln(),
                    ),
                    linear: None,
                }),
                _ => None,
            })
            .as_ref()
    }

    /// Like [`Kernel::eval`] but served from an interpolation table where one exists.
    pub fn eval_fast(&self, r: f64) -> f64 {
        match self.profile_table().and_then(|t| t.eval(r)) {
            Some((k, _, _)) => k,
            None => self.tail_or_exact(r),
        }
    }

    fn tail_or_exact(&self, r: f64) -> f64 {
        if let (KernelSpec::Fractional { .. }, Some(t)) = (self.spec, self.profile_table()) {
            // power laws outside the tabulated range
            let x = r.ln();
            let upper = x > t.log.x1();
            let (x_end, y_end) = if upper { (t.log.x1(), *t.log.y.last().unwrap()) } else { (t.log.x0, t.log.y[0]) };
            return (y_end + t.log.end_slope(upper) * (x - x_end)).exp();
        }
        self.eval(r)
    }

    /// Laplacian of the radial profile away from the origin and breakpoints.
    pub fn laplacian(&self, r: f64) -> f64 {
        let n = self.dim as f64;
        match self.spec {
            KernelSpec::Indicator | KernelSpec::Ring { .. } => 0.0,
            KernelSpec::Gaussian { s } => self.eval(r) * (r * r / s.powi(4) - n / (s * s)),
            KernelSpec::Helmholtz => self.eval_fast(r),
            KernelSpec::Fractional { .. } => match self.profile_table().and_then(|t| t.eval(r)) {
                Some((_, d1, d2)) => d2 + (n - 1.0) * d1 / r,
                None => {
                    // pure power law r^{p}: Laplacian p (p + n - 2) r^{p - 2}
                    let t = self.profile_table().unwrap();
                    let p = t.log.end_slope(r.ln() > t.log.x1());
                    p * (p + n - 2.0) * self.eval_fast(r) / (r * r)
                }
            },
        }
    }

    /// `ln r` below which `rho^{n+power} K(rho)` is negligible.
    pub(crate) fn lower_log_radius(&self, power: f64) -> f64 {
        let decay = self.dim as f64 + power - self.singularity_exponent();
        (1e-6f64).ln() - 45.0 / decay.max(0.5)
    }
}

fn helmholtz(dim: usize, r: f64) -> f64 {
    if dim == 2 {
        bessel_k(0.0, r).unwrap_or(f64::NAN) / (2.0 * PI)
    } else {
        (-r).exp() / (4.0 * PI * r)
    }
}

/// Stieltjes density of `1 / (1 + lambda^alpha)` on the negative axis.
fn stieltjes_density(alpha: f64, mu: f64) -> f64 {
    let p = mu.powf(alpha);
    let c = (PI * alpha).cos();
    (PI * alpha).sin() / PI * p / (1.0 + 2.0 * p * c + p * p)
}

/// Fractional kernel as a superposition of screened Green's functions:
/// `K(r) = int_0^inf m(mu) G_mu(r) d mu` with `G_mu` the kernel of `(mu - Laplace)^{-1}`.
pub(crate) fn fractional_profile(dim: usize, s: f64, r: f64) -> f64 {
    let alpha = s / 2.0;
    let green = |mu: f64| -> f64 {
        let k = mu.sqrt() * r;
        if dim == 2 {
            if k > 700.0 {
                0.0
            } else {
                bessel_k(0.0, k).unwrap_or(0.0) / (2.0 * PI)
            }
        } else {
            (-k).exp() / (4.0 * PI * r)
        }
    };
    // mu = e^v; the integrand decays like e^{(alpha+1) v} on the left and like
    // exp(-e^{v/2} r) on the right
    let v_hi = 2.0 * (50.0 / r).ln();
    let v_lo = (-2.0 * r.ln()).min(0.0) - 45.0 / (alpha + 1.0);
    let f = |v: f64| {
        let mu = v.exp();
        stieltjes_density(alpha, mu) * mu * green(mu)
    };
    let peak = -2.0 * r.ln();
    adaptive(f, v_lo, v_hi, &[peak, 0.0], 0.0, 1e-12).value
}
