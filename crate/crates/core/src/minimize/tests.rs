use super::*;
use crate::kernels::{integrated_kernel, Kernel, DEFAULT_TOL};
use crate::torus::{rasterize, ShapeSpec};

fn helmholtz() -> IntegratedKernelTable {
    integrated_kernel(&Kernel::parse("helmholtz", 2).unwrap(), DEFAULT_TOL).unwrap()
}

fn quick(steps: u64, seed: u64) -> AnnealConfig {
    AnnealConfig { steps, t0: 1e-3, decay: 0.9999, swap_distance: 3, seed, record_every: 500 }
}

#[test]
fn zero_steps_is_the_identity() {
    let t = helmholtz();
    let g = TorusGrid::new(2, 32).unwrap();
    let f = rasterize(&ShapeSpec::ball(vec![0.5, 0.5], 0.2).unwrap(), g).unwrap();
    let tr = anneal(&f, &t, 0.5, 0.25, &quick(0, 1)).unwrap();
    assert_eq!(tr.final_field, f);
    assert_eq!(tr.snapshots.len(), 1);
    assert_eq!(tr.snapshots[0].checksum, f.checksum());
}

#[test]
fn swap_energy_matches_full_recomputation() {
    let t = helmholtz();
    let g = TorusGrid::new(2, 32).unwrap();
    let model = Model::new(g, &t, 0.7, 0.25).unwrap();
    let f = random_field(g, 0.3, 5).unwrap();
    let h_field = model.local_field(&f);
    let cell = g.cell_volume();
    let e0 = model.breakdown(&f).unwrap().total;
    // quadratic-form energy against the count-based one
    let ones = f.count_ones() as f64;
    let sum_a: f64 = model.a.iter().sum();
    let uh: f64 = f.values().iter().zip(&h_field).map(|(&u, h)| u as f64 * h).sum();
    let quad = 2.0 * cell * (ones * sum_a - uh);
    assert!((quad - e0).abs() < 1e-10 * e0.abs().max(1.0), "{quad} vs {e0}");
    let a = (0..g.len()).find(|&i| f.get(i)).unwrap();
    for b in (0..g.len()).filter(|&i| !f.get(i)).take(25) {
        let ca = g.coords(a);
        let cb = g.coords(b);
        let shift: Vec<i64> = (0..2).map(|i| cb[i] as i64 - ca[i] as i64).collect();
        let ab = g.shifted_index(&[0, 0], &shift);
        let predicted = -4.0 * cell * (h_field[b] - h_field[a] - model.a[ab]);
        let mut g2 = f.clone();
        g2.swap(a, b);
        let actual = model.breakdown(&g2).unwrap().total - e0;
        assert!((predicted - actual).abs() < 1e-10, "{predicted} vs {actual}");
    }
}

#[test]
fn patching_matches_a_fresh_transform() {
    let t = helmholtz();
    for (dim, n) in [(2, 32), (3, 16)] {
        let g = TorusGrid::new(dim, n).unwrap();
        let table = if dim == 2 {
            t.clone()
        } else {
            integrated_kernel(&Kernel::parse("helmholtz", 3).unwrap(), DEFAULT_TOL).unwrap()
        };
        let model = Model::new(g, &table, 0.5, 0.5).unwrap();
        let mut f = random_field(g, 0.4, 3).unwrap();
        let mut h_field = model.local_field(&f);
        let a = (0..g.len()).rev().find(|&i| f.get(i)).unwrap();
        let b = (0..g.len()).find(|&i| !f.get(i)).unwrap();
        f.swap(a, b);
        patch(&mut h_field, &model.a, &g, b, 1.0);
        patch(&mut h_field, &model.a, &g, a, -1.0);
        let fresh = model.local_field(&f);
        for (x, y) in h_field.iter().zip(&fresh) {
            assert!((x - y).abs() < 1e-9, "dim {dim}: {x} vs {y}");
        }
    }
}

#[test]
fn volume_bookkeeping_and_determinism() {
    let t = helmholtz();
    let g = TorusGrid::new(2, 32).unwrap();
    let f = random_field(g, 0.35, 9).unwrap();
    let cfg = quick(3000, 42);
    let a = anneal(&f, &t, 0.5, 0.25, &cfg).unwrap();
    let b = anneal(&f, &t, 0.5, 0.25, &cfg).unwrap();
    assert_eq!(a.final_field.count_ones(), f.count_ones());
    assert!(a.accepted > 0);
    let ca: Vec<u64> = a.snapshots.iter().map(|s| s.checksum).collect();
    let cb: Vec<u64> = b.snapshots.iter().map(|s| s.checksum).collect();
    assert_eq!(ca, cb);
    assert_eq!(a.snapshots.len(), 7);
    // annealing from noise lowers the energy
    assert!(a.final_energy().total < a.snapshots[0].energy.total);
}

#[test]
fn pinned_perimeter_of_stripe_and_disk() {
    let g = TorusGrid::new(2, 256).unwrap();
    let stripe = rasterize(&ShapeSpec::laminate(0, 0.3, 1).unwrap(), g).unwrap();
    let p = pinned_slope_perimeter(&stripe).unwrap().value;
    assert!((p / 2.0 - 1.0).abs() < 0.02, "{p}");
    let disk = rasterize(&ShapeSpec::ball(vec![0.5, 0.5], 0.2).unwrap(), g).unwrap();
    let p = pinned_slope_perimeter(&disk).unwrap().value;
    assert!((p / (0.4 * std::f64::consts::PI) - 1.0).abs() < 0.05, "{p}");
}

#[test]
fn square_rounds_off_without_interaction() {
    let t = helmholtz();
    let g = TorusGrid::new(2, 64).unwrap();
    let side = 0.15f64.sqrt();
    let f = rasterize(&ShapeSpec::square([0.3, 0.3], side).unwrap(), g).unwrap();
    let cfg = AnnealConfig { steps: 40_000, t0: 2e-3, decay: 0.99988, swap_distance: 3, seed: 7, record_every: 10_000 };
    let tr = anneal(&f, &t, 0.0, 0.125, &cfg).unwrap();
    let before = tr.snapshots[0].energy.perimeter_term;
    let after = tr.final_energy().perimeter_term;
    assert!(after < before, "{after} vs {before}");
    let q = isoperimetric_quotient(&tr.final_field).unwrap();
    assert!((q - 1.0).abs() < 0.1, "{q}");
    assert_eq!(classify_minimizer(&tr.final_field), Classification::Ball);
}

#[test]
fn subcritical_ball_stays_near_optimal() {
    let t = helmholtz();
    let g = TorusGrid::new(2, 64).unwrap();
    let r = (0.15 / std::f64::consts::PI).sqrt();
    let f = rasterize(&ShapeSpec::ball(vec![0.5, 0.5], r).unwrap(), g).unwrap();
    let cfg = AnnealConfig { steps: 20_000, t0: 1e-3, decay: 0.9998, swap_distance: 3, seed: 3, record_every: 5_000 };
    let tr = anneal(&f, &t, 0.5, 0.125, &cfg).unwrap();
    let e0 = tr.snapshots[0].energy.total;
    assert!(tr.final_energy().total <= e0 + cfg.t0, "{} vs {e0}", tr.final_energy().total);
    assert_eq!(classify_minimizer(&tr.final_field), Classification::Ball);
}

#[test]
fn quotient_examples() {
    let g = TorusGrid::new(2, 1024).unwrap();
    let ball = rasterize(&ShapeSpec::ball(vec![0.5, 0.5], 0.2).unwrap(), g).unwrap();
    assert!((isoperimetric_quotient(&ball).unwrap() - 1.0).abs() < 0.03);
    let g = TorusGrid::new(2, 256).unwrap();
    for (theta, q) in [(0.15, 1.457), (0.45, 0.841)] {
        let lam = rasterize(&ShapeSpec::laminate(0, theta, 1).unwrap(), g).unwrap();
        let exact = 1.0 / (std::f64::consts::PI * theta).sqrt();
        assert!((exact - q).abs() < 1e-3);
        // the raster holds a whole number of columns, so compare at its own volume
        let held = 2.0 / crate::measure::ball_perimeter_for_volume(2, lam.volume_fraction());
        let got = isoperimetric_quotient(&lam).unwrap();
        assert!((got / held - 1.0).abs() < 0.01, "{theta}: {got} vs {held}");
    }
    assert!(isoperimetric_quotient(&BinaryField::zeros(g)).is_err());
}

#[test]
fn classification_examples() {
    let g = TorusGrid::new(2, 256).unwrap();
    let ball = rasterize(&ShapeSpec::ball(vec![0.5, 0.5], 0.2).unwrap(), g).unwrap();
    assert_eq!(classify_minimizer(&ball), Classification::Ball);
    let lam = rasterize(&ShapeSpec::laminate(0, 0.45, 1).unwrap(), g).unwrap();
    assert_eq!(classify_minimizer(&lam), Classification::Laminate);
    let lam3 = rasterize(&ShapeSpec::laminate(1, 0.3, 3).unwrap(), g).unwrap();
    assert_eq!(classify_minimizer(&lam3), Classification::Laminate);
    let noise = random_field(g, 0.5, 17).unwrap();
    assert_eq!(classify_minimizer(&noise), Classification::Other);
    // a hole is a ball of the minority phase
    assert_eq!(classify_minimizer(&ball.complement()), Classification::Ball);
    let g3 = TorusGrid::new(3, 32).unwrap();
    let slab = rasterize(&ShapeSpec::laminate(2, 0.4, 1).unwrap(), g3).unwrap();
    assert_eq!(classify_minimizer(&slab), Classification::Laminate);
}

#[test]
fn refinement_hits_the_target_volume() {
    let g = TorusGrid::new(2, 16).unwrap();
    let f = random_field(g, 0.15, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let fine = refine(&f, 0.15, &mut rng).unwrap();
    assert_eq!(fine.grid().n(), 32);
    assert_eq!(fine.count_ones(), (0.15f64 * 1024.0).round() as usize);
}
