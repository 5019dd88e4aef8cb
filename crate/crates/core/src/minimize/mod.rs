//! Volume-conserving swap annealing of the grid energy.
//!
//! The energy of a cell field is a quadratic form in its cells. With
//! `A(k) = p(k) - (gamma / eps) W(k)`, where `W` are the shift weights of the direct
//! route and `p` the pair weights of a slope-fit perimeter with the intercept pinned,
//!
//! `E = 2 h^n [ |u| sum_k A(k) - sum_x u(x) H(x) ]`,  `H(x) = sum_k A(k) u(x + k)`.
//!
//! Exchanging a 1-cell `a` with a 0-cell `b` changes it by
//! `-4 h^n [H(b) - H(a) - A(b - a)]`, and `H` is patched in one pass over the shifts.

mod classify;

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use classify::{classify_minimizer, isoperimetric_quotient, Classification};

use crate::energy::{difference_counts, direct_from_counts, DifferenceRoute, EnergyBreakdown, ShiftWeights};
use crate::error::{Error, Result};
use crate::fft::weighted_sum_field;
use crate::kernels::IntegratedKernelTable;
use crate::measure::slope_prefactor;
use crate::torus::{BinaryField, PerimeterEstimate, PerimeterMethod, TorusGrid};

/// Relative mismatch allowed between the tracked and the recomputed energy.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

/// Proposal attempts per step before the step counts as idle.
const PROPOSAL_TRIES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealConfig {
    pub steps: u64,
    /// Initial temperature `T0`.
    pub t0: f64,
    /// Geometric decay per step, `T = T0 decay^step`.
    pub decay: f64,
    /// Largest lattice distance (max norm) between exchanged cells.
    pub swap_distance: usize,
    pub seed: u64,
    /// Steps between energy recomputations and snapshots.
    pub record_every: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self { steps: 200_000, t0: 2e-3, decay: 0.99997, swap_distance: 4, seed: 0, record_every: 10_000 }
    }
}

impl AnnealConfig {
    /// `steps = 0` is accepted and leaves the field untouched.
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::InvalidArgument(format!("initial temperature must be positive, got {}", self.t0)));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidArgument(format!("decay must lie in (0, 1), got {}", self.decay)));
        }
        if self.swap_distance == 0 {
            return Err(Error::InvalidArgument("swap distance must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        Ok(())
    }

    fn temperature(&self, step: u64) -> f64 {
        self.t0 * self.decay.powf(step as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub energy: EnergyBreakdown,
    pub checksum: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub final_field: BinaryField,
    pub accepted: u64,
    /// Steps where no admissible partner cell was found.
    pub idle: u64,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "step,total,perimeter_term,nonlocal_term")?;
        for s in &self.snapshots {
            let e = &s.energy;
            writeln!(w, "{},{:.12e},{:.12e},{:.12e}", s.step, e.total, e.perimeter_term, e.nonlocal_term)?;
        }
        Ok(())
    }

    pub fn final_energy(&self) -> &EnergyBreakdown {
        &self.snapshots.last().expect("trajectories hold at least one snapshot").energy
    }
}

/// Pair weights of the slope-fit perimeter on `[2h, min(8h, 1/4)]` with the intercept
/// pinned at `|u|`, so that `P = h^n sum_k p(k) D(k)` for difference counts `D`.
fn perimeter_pair_weights(grid: &TorusGrid) -> Vec<f64> {
    let h = grid.h();
    let (lo, hi) = (2.0 * h, (8.0 * h).min(0.25));
    let d = grid.dim();
    let radius = |i: usize| {
        let k = grid.signed_offset(i);
        h * k[..d].iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
    };
    let mut p = vec![0.0; grid.len()];
    let mut r2 = 0.0;
    for (i, pi) in p.iter_mut().enumerate() {
        let r = radius(i);
        if r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12) {
            *pi = r;
            r2 += r * r;
        }
    }
    let scale = 1.0 / (2.0 * slope_prefactor(d) * r2);
    p.iter_mut().for_each(|v| *v *= scale);
    p
}

/// Perimeter seen by the annealer: the pinned slope fit of [`perimeter_pair_weights`].
pub fn pinned_slope_perimeter(f: &BinaryField) -> Result<PerimeterEstimate> {
    let counts = difference_counts(f, DifferenceRoute::Correlation)?;
    let p = perimeter_pair_weights(f.grid());
    Ok(pinned_from_counts(f.grid(), &p, &counts))
}

fn pinned_from_counts(grid: &TorusGrid, p: &[f64], counts: &[u64]) -> PerimeterEstimate {
    let s: f64 = p.iter().zip(counts).map(|(a, &d)| a * d as f64).sum();
    PerimeterEstimate { value: s * grid.cell_volume(), method: PerimeterMethod::SlopeFit, uncertainty: 0.0 }
}

/// Cells with at least one face neighbor of the other phase, split by phase.
struct Interface {
    pos: Vec<u32>,
    items: [Vec<u32>; 2],
}

const ABSENT: u32 = u32::MAX;

impl Interface {
    fn new(f: &BinaryField) -> Self {
        let mut s = Self { pos: vec![ABSENT; f.grid().len()], items: [Vec::new(), Vec::new()] };
        for x in 0..f.grid().len() {
            s.refresh(f, x);
        }
        s
    }

    fn on_interface(f: &BinaryField, x: usize) -> bool {
        let g = f.grid();
        let d = g.dim();
        let c = g.coords(x);
        let v = f.get(x);
        (0..d).any(|axis| {
            [-1i64, 1].iter().any(|&s| {
                let mut shift = [0i64; 3];
                shift[axis] = s;
                f.get(g.shifted_index(&c[..d], &shift[..d])) != v
            })
        })
    }

    fn remove(&mut self, x: usize) {
        let p = self.pos[x];
        if p == ABSENT {
            return;
        }
        // the phase of x may have changed, so look it up in both lists
        for list in self.items.iter_mut() {
            if list.get(p as usize) == Some(&(x as u32)) {
                list.swap_remove(p as usize);
                if let Some(&moved) = list.get(p as usize) {
                    self.pos[moved as usize] = p;
                }
                break;
            }
        }
        self.pos[x] = ABSENT;
    }

    fn refresh(&mut self, f: &BinaryField, x: usize) {
        self.remove(x);
        if Self::on_interface(f, x) {
            let list = &mut self.items[f.get(x) as usize];
            self.pos[x] = list.len() as u32;
            list.push(x as u32);
        }
    }

    fn refresh_around(&mut self, f: &BinaryField, x: usize) {
        let g = *f.grid();
        let d = g.dim();
        let c = g.coords(x);
        self.refresh(f, x);
        for axis in 0..d {
            for s in [-1i64, 1] {
                let mut shift = [0i64; 3];
                shift[axis] = s;
                self.refresh(f, g.shifted_index(&c[..d], &shift[..d]));
            }
        }
    }
}

/// Adds `sign * A(x - centre)` to `H(x)` for every cell `x`.
fn patch(h_field: &mut [f64], a: &[f64], grid: &TorusGrid, centre: usize, sign: f64) {
    let n = grid.n();
    let d = grid.dim();
    let c = grid.coords(centre);
    let n2 = if d == 3 { n } else { 1 };
    for k2 in 0..n2 {
        let x2 = if d == 3 { (c[2] + k2) % n } else { 0 };
        for k1 in 0..n {
            let x1 = (c[1] + k1) % n;
            let row_a = (k2 * n + k1) * n;
            let row_h = (x2 * n + x1) * n;
            // x0 = c0 + k0 wraps once, so split the row in two runs
            let split = n - c[0];
            let (ha, hb) = h_field[row_h..row_h + n].split_at_mut(c[0]);
            for (hv, av) in hb.iter_mut().zip(&a[row_a..row_a + split]) {
                *hv += sign * av;
            }
            for (hv, av) in ha.iter_mut().zip(&a[row_a + split..row_a + n]) {
                *hv += sign * av;
            }
        }
    }
}

struct Model {
    grid: TorusGrid,
    weights: ShiftWeights,
    pair: Vec<f64>,
    a: Vec<f64>,
    gamma: f64,
}

impl Model {
    fn new(grid: TorusGrid, table: &IntegratedKernelTable, gamma: f64, eps: f64) -> Result<Self> {
        let weights = ShiftWeights::new(table, grid, eps, 1.0)?;
        let pair = perimeter_pair_weights(&grid);
        let mut a: Vec<f64> = pair.iter().zip(weights.values()).map(|(p, w)| p - gamma / eps * w).collect();
        a[0] = 0.0;
        Ok(Self { grid, weights, pair, a, gamma })
    }

    fn breakdown(&self, f: &BinaryField) -> Result<EnergyBreakdown> {
        let counts = difference_counts(f, DifferenceRoute::Correlation)?;
        let p = pinned_from_counts(&self.grid, &self.pair, &counts);
        Ok(direct_from_counts(&self.weights, &counts, f.volume_fraction(), self.gamma, &p))
    }

    fn local_field(&self, f: &BinaryField) -> Vec<f64> {
        let u: Vec<f64> = f.values().iter().map(|&v| v as f64).collect();
        weighted_sum_field(&self.grid, &self.a, &u)
    }
}

/// Anneals `f0` at fixed volume. Deterministic given the configuration.
pub fn anneal(
    f0: &BinaryField,
    table: &IntegratedKernelTable,
    gamma: f64,
    eps: f64,
    cfg: &AnnealConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be finite and non-negative, got {gamma}")));
    }
    let model = Model::new(*f0.grid(), table, gamma, eps)?;
    run(f0.clone(), &model, cfg, 0)
}

fn run(mut f: BinaryField, model: &Model, cfg: &AnnealConfig, step0: u64) -> Result<Trajectory> {
    let grid = model.grid;
    let d = grid.dim();
    let cell = grid.cell_volume();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let first = model.breakdown(&f)?;
    let mut tracked = first.total;
    let mut snapshots = vec![Snapshot { step: step0, energy: first, checksum: f.checksum() }];
    let trajectory = |snapshots: Vec<Snapshot>, f: BinaryField, accepted, idle| Trajectory {
        snapshots,
        final_field: f,
        accepted,
        idle,
    };
    if cfg.steps == 0 || f.count_ones() == 0 || f.count_ones() == grid.len() {
        return Ok(trajectory(snapshots, f, 0, cfg.steps));
    }
    let mut h_field = model.local_field(&f);
    let mut iface = Interface::new(&f);
    let reach = cfg.swap_distance.min(grid.n() / 2) as i64;
    let (mut accepted, mut idle) = (0u64, 0u64);
    for step in 1..=cfg.steps {
        let t = cfg.temperature(step);
        let ones = &iface.items[1];
        let a = ones[rng.gen_range(0..ones.len())] as usize;
        let ca = grid.coords(a);
        let mut partner = None;
        for _ in 0..PROPOSAL_TRIES {
            let mut shift = [0i64; 3];
            for s in shift.iter_mut().take(d) {
                *s = rng.gen_range(-reach..=reach);
            }
            let b = grid.shifted_index(&ca[..d], &shift[..d]);
            if !f.get(b) && iface.pos[b] != ABSENT {
                partner = Some((b, shift));
                break;
            }
        }
        if let Some((b, shift)) = partner {
            let ab = grid.shifted_index(&[0, 0, 0][..d], &shift[..d]);
            let delta = -4.0 * cell * (h_field[b] - h_field[a] - model.a[ab]);
            let u: f64 = rng.gen();
            if delta <= 0.0 || u < (-delta / t).exp() {
                f.swap(a, b);
                patch(&mut h_field, &model.a, &grid, b, 1.0);
                patch(&mut h_field, &model.a, &grid, a, -1.0);
                iface.refresh_around(&f, a);
                iface.refresh_around(&f, b);
                tracked += delta;
                accepted += 1;
            }
        } else {
            idle += 1;
        }
        if step % cfg.record_every == 0 || step == cfg.steps {
            let e = model.breakdown(&f)?;
            let scale = e.total.abs().max(e.perimeter_term.abs() + model.gamma * e.nonlocal_term.abs());
            let rel = if scale > 0.0 { (tracked - e.total).abs() / scale } else { 0.0 };
            if rel > DRIFT_TOLERANCE {
                return Err(Error::BookkeepingDrift { step: step0 + step, rel });
            }
            tracked = e.total;
            h_field = model.local_field(&f);
            snapshots.push(Snapshot { step: step0 + step, energy: e, checksum: f.checksum() });
        }
    }
    Ok(trajectory(snapshots, f, accepted, idle))
}

/// Random field with exactly `round(theta N^n)` ones.
pub fn random_field(grid: TorusGrid, theta: f64, seed: u64) -> Result<BinaryField> {
    use rand::seq::SliceRandom;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("volume fraction must lie in [0, 1], got {theta}")));
    }
    let ones = (theta * grid.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0u8; grid.len()];
    values[..ones].iter_mut().for_each(|v| *v = 1);
    values.shuffle(&mut rng);
    BinaryField::from_values(grid, values)
}

/// Doubles the resolution, then adds or removes interface cells at random until the
/// field holds `round(theta N^n)` ones.
fn refine(f: &BinaryField, theta: f64, rng: &mut ChaCha8Rng) -> Result<BinaryField> {
    let g = f.grid();
    let d = g.dim();
    let fine = TorusGrid::new(d, g.n() * 2)?;
    let mut out = BinaryField::from_fn(fine, |i| {
        let c = fine.coords(i);
        let coarse: Vec<usize> = c[..d].iter().map(|v| v / 2).collect();
        f.get(g.index(&coarse))
    });
    let target = (theta * fine.len() as f64).round() as usize;
    let mut iface = Interface::new(&out);
    while out.count_ones() != target {
        let grow = out.count_ones() < target;
        let list = &iface.items[usize::from(!grow)];
        if list.is_empty() {
            break;
        }
        let x = list[rng.gen_range(0..list.len())] as usize;
        let mut values = out.values().to_vec();
        values[x] = u8::from(grow);
        out = BinaryField::from_values(fine, values)?;
        iface.refresh_around(&out, x);
    }
    Ok(out)
}

/// Coarse-to-fine annealing from a seeded random field.
///
/// Starts on the 16-cell grid and doubles up to `grid`, splitting `cfg.steps` evenly
/// across levels. Level `l` runs at `eps_l = max(eps, 8 h_l)` with its own geometric
/// schedule from `t0 (h_l / h)^(n-1)` down to the same final ratio as `cfg`.
/// Swap distances are counted in cells of each level. The returned trajectory is
/// that of the finest level, with steps counted from the start of the first.
pub fn anneal_multilevel(
    theta: f64,
    grid: TorusGrid,
    table: &IntegratedKernelTable,
    gamma: f64,
    eps: f64,
    cfg: &AnnealConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let d = grid.dim();
    let mut levels = Vec::new();
    let mut n = TorusGrid::MIN_N;
    while n <= grid.n() {
        levels.push(TorusGrid::new(d, n)?);
        n *= 2;
    }
    let per_level = cfg.steps / levels.len() as u64;
    let total_decay = cfg.decay.powf(cfg.steps as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut f = random_field(levels[0], theta, cfg.seed)?;
    let mut step0 = 0;
    let mut last = None;
    for (i, g) in levels.iter().enumerate() {
        if i > 0 {
            f = refine(&f, theta, &mut rng)?;
        }
        let steps = if i + 1 == levels.len() { cfg.steps - per_level * i as u64 } else { per_level };
        let level_cfg = AnnealConfig {
            steps,
            t0: cfg.t0 * (g.h() / grid.h()).powi(d as i32 - 1),
            decay: if steps > 0 { total_decay.powf(1.0 / steps as f64).min(1.0 - 1e-15) } else { cfg.decay },
            swap_distance: cfg.swap_distance,
            seed: cfg.seed.wrapping_add(i as u64),
            record_every: cfg.record_every.min(steps.max(1)),
        };
        let model = Model::new(*g, table, gamma, eps.max(8.0 * g.h()))?;
        let t = run(f, &model, &level_cfg, step0)?;
        step0 += steps;
        f = t.final_field.clone();
        last = Some(t);
    }
    Ok(last.expect("at least one level"))
}

#[cfg(test)]
mod tests;
