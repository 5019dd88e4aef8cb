//! Gauss-Legendre rules and an adaptive bisection integrator built on them.

use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like initial guess, refined by Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Mapped nodes and weights for `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub(crate) fn gl(n: usize) -> &'static GaussLegendre {
    static GL4: OnceLock<GaussLegendre> = OnceLock::new();
    static GL8: OnceLock<GaussLegendre> = OnceLock::new();
    static GL16: OnceLock<GaussLegendre> = OnceLock::new();
    static GL20: OnceLock<GaussLegendre> = OnceLock::new();
    match n {
        4 => GL4.get_or_init(|| GaussLegendre::new(4)),
        8 => GL8.get_or_init(|| GaussLegendre::new(8)),
        16 => GL16.get_or_init(|| GaussLegendre::new(16)),
        20 => GL20.get_or_init(|| GaussLegendre::new(20)),
        _ => panic!("no cached Gauss-Legendre rule with {n} points"),
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Panels the adaptive integrator may create before it gives up refining.
const MAX_PANELS: usize = 4000;

struct Panel {
    x0: f64,
    x1: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive bisection with an 8/16-point Gauss-Legendre pair per panel.
///
/// The panel with the largest `|I16 - I8|` is split until the summed estimate drops below
/// `max(abs_tol, rel_tol int |f|)` or the panel budget runs out. `breaks` are interior
/// points where the integrand may be non-smooth; they are used as initial panel edges.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0, panels: 0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut edges = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);

    let g8 = gl(8);
    let g16 = gl(16);
    let min_width = 1e-15 * (hi - lo);
    let mut panel = |x0: f64, x1: f64, scale: &mut f64| {
        let mut i8 = 0.0;
        let mut i16 = 0.0;
        let mut abs16 = 0.0;
        for (x, w) in g8.mapped(x0, x1) {
            i8 += w * f(x);
        }
        for (x, w) in g16.mapped(x0, x1) {
            let v = f(x);
            i16 += w * v;
            abs16 += w * v.abs();
        }
        *scale += abs16;
        Panel { x0, x1, value: i16, error: (i16 - i8).abs() }
    };
    let mut scale = 0.0;
    let mut heap = std::collections::BinaryHeap::new();
    let mut done = Vec::new();
    for w in edges.windows(2) {
        heap.push(panel(w[0], w[1], &mut scale));
    }
    let mut count = heap.len();
    let target = abs_tol.max(rel_tol * scale);
    let mut total_err: f64 = heap.iter().map(|p: &Panel| p.error).sum();
    while total_err > target && count < MAX_PANELS {
        let Some(worst) = heap.pop() else { break };
        if worst.x1 - worst.x0 <= min_width {
            done.push(worst);
            continue;
        }
        let xm = 0.5 * (worst.x0 + worst.x1);
        let mut unused = 0.0;
        let left = panel(worst.x0, xm, &mut unused);
        let right = panel(xm, worst.x1, &mut unused);
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
    }
    let (value, error) = heap.iter().chain(done.iter()).fold((0.0, 0.0), |acc, p| (acc.0 + p.value, acc.1 + p.error));
    Integral { value: sign * value, error, panels: count }
}
