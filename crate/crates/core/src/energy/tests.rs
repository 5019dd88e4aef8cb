use std::f64::consts::PI;

use super::*;
use crate::autocorr::{default_bins, radial_average};
use crate::kernels::{integrated_kernel, Kernel, DEFAULT_TOL};

fn table(spec: &str, dim: usize) -> IntegratedKernelTable {
    integrated_kernel(&Kernel::parse(spec, dim).unwrap(), DEFAULT_TOL).unwrap()
}

#[test]
fn trivial_fields_have_zero_energy() {
    let t = table("helmholtz", 2);
    let g = TorusGrid::new(2, 64).unwrap();
    for f in [BinaryField::zeros(g), BinaryField::ones(g)] {
        let e = energy_direct(&f, &t, 0.7, 0.2).unwrap();
        assert_eq!(e.total, 0.0);
        assert_eq!(e.nonlocal_term, 0.0);
    }
}

#[test]
fn stripe_exactness_on_the_analytic_path() {
    let t = table("indicator", 2);
    let stripe = ShapeSpec::laminate(0, 0.3, 1).unwrap();
    for gamma in [0.0, 0.5, 3.0 * PI / 4.0] {
        let e = shape_energy_analytic(&stripe, 2, &t, gamma, 0.1).unwrap();
        let exact = 2.0 - 8.0 * gamma / (3.0 * PI);
        assert!((e.total - exact).abs() < 1e-10, "gamma {gamma}: {} vs {exact}", e.total);
    }
}

#[test]
fn stripe_cancels_at_critical_coupling_on_the_grid() {
    let t = table("indicator", 2);
    let stripe = ShapeSpec::laminate(0, 0.3, 1).unwrap();
    let g = TorusGrid::new(2, 256).unwrap();
    let e = shape_energy_direct(&stripe, g, &t, 3.0 * PI / 4.0, 0.1).unwrap();
    assert!(e.total.abs() < 0.02, "{}", e.total);
}

#[test]
fn bitwise_and_correlation_routes_agree() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for (dim, n) in [(2, 32), (2, 128), (3, 16)] {
        let g = TorusGrid::new(dim, n).unwrap();
        let f = BinaryField::from_fn(g, |_| rng.gen_bool(0.4));
        let a = difference_counts(&f, DifferenceRoute::Correlation).unwrap();
        let b = difference_counts(&f, DifferenceRoute::Bitwise).unwrap();
        assert_eq!(a, b, "dim {dim} n {n}");
    }
}

#[test]
fn direct_and_autocorrelation_routes_agree_on_square() {
    let t = table("helmholtz", 2);
    let sq = ShapeSpec::square([0.25, 0.25], 0.5).unwrap();
    let g = TorusGrid::new(2, 256).unwrap();
    let f = rasterize(&sq, g).unwrap();
    let p = sq.perimeter_estimate();
    let w = ShiftWeights::new(&t, g, 0.05, 1.0).unwrap();
    let direct = energy_direct_with(&f, &w, 0.5, &p, DifferenceRoute::Correlation).unwrap();
    let rc = radial_average(&correlation_map(&f), default_bins(&g), 0.5).unwrap();
    let auto = energy_autocorr(CorrelationSource::Grid(&rc), &t, 0.5, 0.05, &p).unwrap();
    let exact = shape_energy_analytic(&sq, 2, &t, 0.5, 0.05).unwrap();
    assert!((direct.total / auto.total - 1.0).abs() < 0.02, "{} vs {}", direct.total, auto.total);
    // the square is a union of cells, so the direct route is exact up to quadrature
    assert!(
        (direct.nonlocal_term / exact.nonlocal_term - 1.0).abs() < 1e-5,
        "{} vs {}",
        direct.nonlocal_term,
        exact.nonlocal_term
    );
}

#[test]
fn limit_energy_examples() {
    let p = PerimeterEstimate::analytic(2.0);
    assert_eq!(gamma_limit_energy(&p, 0.5, 1.0), 1.0);
    assert_eq!(gamma_limit_energy(&p, 1.0, 1.0), 0.0);
    assert_eq!(gamma_limit_energy(&PerimeterEstimate::analytic(16.0), 1.5, 1.0), -8.0);
}

#[test]
fn scaling_identity_for_stripe_and_square() {
    let ind = table("indicator", 2);
    let stripe = ShapeSpec::laminate(0, 0.3, 1).unwrap();
    let r = scaling_identity_check(&stripe, 2, &ind, 0.5, 0.1, 2.0, EvaluationPath::Analytic).unwrap();
    assert!(r.discrepancy < 1e-10, "{r:?}");
    let r = scaling_identity_check(&stripe, 2, &ind, 0.5, 0.1, 1.0, EvaluationPath::Analytic).unwrap();
    assert_eq!(r.discrepancy, 0.0);
    let hel = table("helmholtz", 2);
    let sq = ShapeSpec::square([0.25, 0.25], 0.5).unwrap();
    let g = TorusGrid::new(2, 128).unwrap();
    let r = scaling_identity_check(&sq, 2, &hel, 0.5, 0.25, 2.0, EvaluationPath::Grid(g)).unwrap();
    assert!(r.discrepancy < 1e-2, "{r:?}");
}

#[test]
fn lower_bound_margins() {
    let ind = table("indicator", 2);
    let stripe = ShapeSpec::laminate(0, 0.3, 1).unwrap();
    let m = lower_bound_margin(Subject::Shape { shape: &stripe, dim: 2 }, &ind, 1.0, 0.1).unwrap();
    assert!(m.abs() < 1e-10, "{m}");
    let hel = table("helmholtz", 2);
    let sq = ShapeSpec::square([0.25, 0.25], 0.5).unwrap();
    let m = lower_bound_margin(Subject::Shape { shape: &sq, dim: 2 }, &hel, 0.5, 0.05).unwrap();
    assert!(m > 0.0, "{m}");
    let g = TorusGrid::new(2, 64).unwrap();
    let m = lower_bound_margin(Subject::Field(&BinaryField::zeros(g)), &hel, 0.5, 0.2).unwrap();
    assert_eq!(m, 0.0);
    assert!(lower_bound_margin(Subject::Shape { shape: &sq, dim: 2 }, &hel, 1.5, 0.05).is_err());
}

#[test]
fn sweep_rejects_short_lists_and_balls() {
    let hel = table("helmholtz", 2);
    let sq = ShapeSpec::square([0.25, 0.25], 0.5).unwrap();
    assert!(epsilon_sweep(&sq, 2, &hel, 0.5, &[0.2, 0.1], SweepMethod::Analytic).is_err());
    let b = ShapeSpec::ball(vec![0.5, 0.5], 0.2).unwrap();
    assert!(epsilon_sweep(&b, 2, &hel, 0.5, &[0.2, 0.1, 0.05], SweepMethod::Analytic).is_err());
    let g = TorusGrid::new(2, 64).unwrap();
    assert!(matches!(
        epsilon_sweep(&sq, 2, &hel, 0.5, &[0.2, 0.1, 0.05], SweepMethod::Grid(g)),
        Err(Error::UnderResolved { .. })
    ));
}

#[test]
fn stripe_sweep_is_flat() {
    let ind = table("indicator", 2);
    let stripe = ShapeSpec::laminate(0, 0.3, 1).unwrap();
    let s = epsilon_sweep(&stripe, 2, &ind, 0.5, &[0.2, 0.1, 0.05], SweepMethod::Analytic).unwrap();
    let exact = 2.0 - 4.0 / (3.0 * PI);
    for r in &s.rows {
        assert!((r.total - exact).abs() < 1e-10);
    }
    assert!((s.extrapolated_limit - exact).abs() < 1e-9);
    // the whole nonlocal term comes from the linear coefficient
    for d in &s.diagnostics {
        assert!(d.i2.abs() < 1e-12 && d.i3.abs() < 1e-9, "{d:?}");
    }
}
