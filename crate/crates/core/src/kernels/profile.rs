//! Tabulated radial profiles for kernels without a cheap closed form.

/// Four-point Lagrange interpolation on uniform samples.
/// Returns the value and first two derivatives with respect to the sample coordinate.
fn lagrange4(y: &[f64], p: f64) -> (f64, f64, f64) {
    let last = y.len() - 1;
    let j = (p.floor() as isize - 1).clamp(0, last as isize - 3) as usize;
    let t = p - j as f64;
    // nodes at 0, 1, 2, 3
    let mut v = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for i in 0..4 {
        let xi = i as f64;
        let others: Vec<f64> = (0..4).filter(|&k| k != i).map(|k| k as f64).collect();
        let denom: f64 = others.iter().map(|&xk| xi - xk).product();
        let (a, b, c) = (t - others[0], t - others[1], t - others[2]);
        let w = a * b * c / denom;
        let w1 = (b * c + a * c + a * b) / denom;
        let w2 = 2.0 * (a + b + c) / denom;
        v += w * y[j + i];
        d1 += w1 * y[j + i];
        d2 += w2 * y[j + i];
    }
    (v, d1, d2)
}

/// Uniform table of `g(x)` on `[x0, x0 + dx (len - 1)]`.
#[derive(Debug, Clone)]
pub(crate) struct UniformTable {
    pub x0: f64,
    pub dx: f64,
    pub y: Vec<f64>,
}

impl UniformTable {
    pub fn build(x0: f64, x1: f64, per_unit: f64, mut g: impl FnMut(f64) -> f64) -> Self {
        let count = ((x1 - x0) * per_unit).ceil() as usize + 1;
        let dx = (x1 - x0) / (count - 1) as f64;
        let y = (0..count).map(|i| g(x0 + dx * i as f64)).collect();
        Self { x0, dx, y }
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.dx * (self.y.len() - 1) as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x0 && x <= self.x1()
    }

    /// Value, first and second derivative in `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let (v, d1, d2) = lagrange4(&self.y, (x - self.x0) / self.dx);
        (v, d1 / self.dx, d2 / (self.dx * self.dx))
    }

    /// Slope of the last or first two samples, for power-law extrapolation.
    pub fn end_slope(&self, upper: bool) -> f64 {
        let k = self.y.len();
        if upper {
            (self.y[k - 1] - self.y[k - 2]) / self.dx
        } else {
            (self.y[1] - self.y[0]) / self.dx
        }
    }
}

/// Radial profile `K(r)` stored as `ln K` against `ln r` near the origin and,
/// optionally, as `ln K + r` against `r` for exponentially decaying tails.
#[derive(Debug, Clone)]
pub(crate) struct ProfileTable {
    pub log: UniformTable,
    pub linear: Option<UniformTable>,
}

impl ProfileTable {
    /// Returns `(K, dK/dr, d2K/dr2)` when `r` lies inside the tabulated range.
    pub fn eval(&self, r: f64) -> Option<(f64, f64, f64)> {
        if let Some(lin) = &self.linear {
            if r >= lin.x0 && lin.contains(r) {
                let (g, g1, g2) = lin.eval(r);
                let k = (g - r).exp();
                let f1 = g1 - 1.0;
                return Some((k, k * f1, k * (g2 + f1 * f1)));
            }
        }
        let x = r.ln();
        if self.log.contains(x) {
            let (f, f1, f2) = self.log.eval(x);
            let k = f.exp();
            let d1 = k * f1 / r;
            let d2 = k * (f2 + f1 * f1 - f1) / (r * r);
            return Some((k, d1, d2));
        }
        None
    }
}
