//! Invariant suites behind `gammalab verify`.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use gammalab::autocorr::{correlation_map, fit_small_r_polynomial, radial_average};
use gammalab::energy::{
    difference_counts, energy_autocorr, energy_direct_with, epsilon_sweep, lower_bound_margin, scaling_identity_check,
    shape_energy_analytic, CorrelationSource, DifferenceRoute, EvaluationPath, ShiftWeights, Subject, SweepMethod,
};
use gammalab::kernels::{bessel_k, integrated_kernel, IntegratedKernelTable, Kernel, DEFAULT_TOL};
use gammalab::minimize::{anneal, anneal_multilevel, classify_minimizer, random_field, AnnealConfig, Classification};
use gammalab::torus::{ball_laminate_threshold, disk_perimeter, rasterize};
use gammalab::{ShapeSpec, TorusGrid};

use crate::commands::write_artifact;
use crate::{Level, VerificationFailed};

type Outcome = std::result::Result<String, String>;

struct Check {
    name: &'static str,
    run: Box<dyn Fn() -> Outcome + Send + Sync>,
}

fn check(name: &'static str, run: impl Fn() -> Outcome + Send + Sync + 'static) -> Check {
    Check { name, run: Box::new(run) }
}

fn table(spec: &str, dim: usize) -> std::result::Result<IntegratedKernelTable, String> {
    let k = Kernel::parse(spec, dim).map_err(|e| e.to_string())?;
    integrated_kernel(&k, DEFAULT_TOL).map_err(|e| format!("{spec}: {e}"))
}

fn within(label: &str, got: f64, want: f64, rel: f64) -> std::result::Result<String, String> {
    let err = ((got - want) / want.abs().max(1e-300)).abs();
    let text = format!("{label} {got:.10} vs {want:.10} (rel {err:.1e})");
    if err <= rel {
        Ok(text)
    } else {
        Err(text)
    }
}

fn fast_checks(sabotage: bool) -> Vec<Check> {
    // the Helmholtz kernel has critical coupling exactly 1 in every dimension
    let reference = if sabotage { 1.01 } else { 1.0 };
    vec![
        check("gamma_crit_consistency", move || {
            let mut notes = Vec::new();
            for dim in [2, 3] {
                let t = table("helmholtz", dim)?;
                notes.push(within(&format!("n={dim} gamma_crit"), t.gamma_crit(), reference, 1e-6)?);
                notes.push(within(&format!("n={dim} phi route"), t.gamma_crit_phi(), t.gamma_crit(), 1e-8)?);
            }
            Ok(notes.join("; "))
        }),
        check("helmholtz_first_moment", || {
            let a = within("n=2", table("helmholtz", 2)?.first_moment(), PI / 2.0, 1e-6)?;
            let b = within("n=3", table("helmholtz", 3)?.first_moment(), 2.0, 1e-6)?;
            Ok(format!("{a}; {b}"))
        }),
        check("phi_consistency", || {
            let mut worst: f64 = 0.0;
            for spec in ["indicator", "gaussian:s=1.0", "ring:a=1,b=0.5", "helmholtz"] {
                let t = table(spec, 2)?;
                if t.consistency_gap() > 1e-8 {
                    return Err(format!("{spec}: gap {:.2e}", t.consistency_gap()));
                }
                worst = worst.max(t.consistency_gap());
            }
            let ind = table("indicator", 2)?;
            for r in [0.1, 0.5, 0.9] {
                if (ind.phi(r) - (1.0 - r * r)).abs() > 1e-10 {
                    return Err(format!("indicator phi({r}) = {}", ind.phi(r)));
                }
            }
            within("indicator |phi|_1", ind.l1_norm(), 2.0 / 3.0, 1e-10)?;
            Ok(format!("largest gap {worst:.1e}"))
        }),
        check("bessel_half_order", || {
            let got = bessel_k(0.5, 1.0).map_err(|e| e.to_string())?;
            within("K_1/2(1)", got, (PI / 2.0).sqrt() * (-1.0f64).exp(), 1e-8)
        }),
        check("ball_laminate_threshold", || {
            let t = ball_laminate_threshold(2);
            within("threshold", t, 1.0 / PI, 1e-12)?;
            within("disk perimeter at threshold", disk_perimeter(t), 2.0, 1e-10)
        }),
        check("stripe_exactness", || {
            let t = table("indicator", 2)?;
            let stripe = ShapeSpec::laminate(0, 0.3, 1).map_err(|e| e.to_string())?;
            let mut worst: f64 = 0.0;
            for gamma in [0.0, 0.5, 3.0 * PI / 4.0] {
                let e = shape_energy_analytic(&stripe, 2, &t, gamma, 0.1).map_err(|e| e.to_string())?;
                let err = (e.total - (2.0 - 8.0 * gamma / (3.0 * PI))).abs();
                if err > 1e-10 {
                    return Err(format!("gamma {gamma}: error {err:.2e}"));
                }
                worst = worst.max(err);
            }
            Ok(format!("largest error {worst:.1e}"))
        }),
        check("lower_bound", || {
            let t = table("helmholtz", 2)?;
            let square = ShapeSpec::square([0.25, 0.25], 0.5).map_err(|e| e.to_string())?;
            let mut least = f64::INFINITY;
            for eps in [0.2, 0.1, 0.05] {
                let m = lower_bound_margin(Subject::Shape { shape: &square, dim: 2 }, &t, 1.0, eps)
                    .map_err(|e| e.to_string())?;
                least = least.min(m);
            }
            if least >= -1e-9 {
                Ok(format!("smallest margin {least:.3e}"))
            } else {
                Err(format!("margin {least:.3e} < 0"))
            }
        }),
        check("scaling_identity", || {
            let ind = table("indicator", 2)?;
            let stripe = ShapeSpec::laminate(0, 0.3, 1).map_err(|e| e.to_string())?;
            let a = scaling_identity_check(&stripe, 2, &ind, 0.5, 0.1, 2.0, EvaluationPath::Analytic)
                .map_err(|e| e.to_string())?;
            if a.discrepancy > 1e-10 {
                return Err(format!("stripe discrepancy {:.2e}", a.discrepancy));
            }
            let hel = table("helmholtz", 2)?;
            let square = ShapeSpec::square([0.25, 0.25], 0.5).map_err(|e| e.to_string())?;
            let g = TorusGrid::new(2, 256).map_err(|e| e.to_string())?;
            let b = scaling_identity_check(&square, 2, &hel, 0.5, 0.1, 2.0, EvaluationPath::Grid(g))
                .map_err(|e| e.to_string())?;
            if b.discrepancy > 1e-2 {
                return Err(format!("square discrepancy {:.2e}", b.discrepancy));
            }
            Ok(format!("stripe {:.1e}, square {:.1e}", a.discrepancy, b.discrepancy))
        }),
        check("cross_method", || {
            let hel = table("helmholtz", 2)?;
            let g = TorusGrid::new(2, 256).map_err(|e| e.to_string())?;
            let square = ShapeSpec::square([0.25, 0.25], 0.5).map_err(|e| e.to_string())?;
            let f = rasterize(&square, g).map_err(|e| e.to_string())?;
            let p = square.perimeter_estimate();
            let w = ShiftWeights::new(&hel, g, 0.05, 1.0).map_err(|e| e.to_string())?;
            let direct =
                energy_direct_with(&f, &w, 0.5, &p, DifferenceRoute::Correlation).map_err(|e| e.to_string())?;
            let rc = radial_average(&correlation_map(&f), 4 * g.n(), 0.5).map_err(|e| e.to_string())?;
            let auto = energy_autocorr(CorrelationSource::Grid(&rc), &hel, 0.5, 0.05, &p).map_err(|e| e.to_string())?;
            let text = within("direct vs autocorrelation", direct.total, auto.total, 0.02)?;
            let noise =
                random_field(TorusGrid::new(2, 64).map_err(|e| e.to_string())?, 0.4, 1).map_err(|e| e.to_string())?;
            let a = difference_counts(&noise, DifferenceRoute::Correlation).map_err(|e| e.to_string())?;
            let b = difference_counts(&noise, DifferenceRoute::Bitwise).map_err(|e| e.to_string())?;
            if a != b {
                return Err("bitwise and correlation difference counts differ".into());
            }
            Ok(text)
        }),
        check("polytope_polynomial_coarse", || {
            let g = TorusGrid::new(2, 256).map_err(|e| e.to_string())?;
            let square = ShapeSpec::square([0.25, 0.25], 0.5).map_err(|e| e.to_string())?;
            let f = rasterize(&square, g).map_err(|e| e.to_string())?;
            let rc = radial_average(&correlation_map(&f), 4 * g.n(), 0.5).map_err(|e| e.to_string())?;
            let fit = fit_small_r_polynomial(&rc, 2, (0.01, 0.2)).map_err(|e| e.to_string())?;
            let a = within("a1", fit.a[0], -2.0 / PI, 0.03)?;
            let b = within("a2", fit.a[1], 1.0 / PI, 0.1)?;
            Ok(format!("{a}; {b}"))
        }),
        check("anneal_bookkeeping", || {
            let hel = table("helmholtz", 2)?;
            let g = TorusGrid::new(2, 32).map_err(|e| e.to_string())?;
            let f = random_field(g, 0.35, 2).map_err(|e| e.to_string())?;
            let cfg =
                AnnealConfig { steps: 4000, t0: 1e-3, decay: 0.9995, swap_distance: 3, seed: 11, record_every: 500 };
            let a = anneal(&f, &hel, 0.5, 0.25, &cfg).map_err(|e| e.to_string())?;
            let b = anneal(&f, &hel, 0.5, 0.25, &cfg).map_err(|e| e.to_string())?;
            if a.final_field.count_ones() != f.count_ones() {
                return Err("volume changed".into());
            }
            if a.snapshots.iter().map(|s| s.checksum).ne(b.snapshots.iter().map(|s| s.checksum)) {
                return Err("two runs with one seed differ".into());
            }
            Ok(format!("{} snapshots, {} swaps accepted", a.snapshots.len(), a.accepted))
        }),
    ]
}

fn full_checks() -> Vec<Check> {
    vec![
        check("polytope_polynomial", || {
            let g = TorusGrid::new(2, 2048).map_err(|e| e.to_string())?;
            let mut notes = Vec::new();
            let square = ShapeSpec::square([0.25, 0.25], 0.5).map_err(|e| e.to_string())?;
            let f = rasterize(&square, g).map_err(|e| e.to_string())?;
            let rc = radial_average(&correlation_map(&f), 4 * g.n(), 0.5).map_err(|e| e.to_string())?;
            let fit = fit_small_r_polynomial(&rc, 2, (0.01, 0.2)).map_err(|e| e.to_string())?;
            notes.push(within("a1", fit.a[0], -2.0 / PI, 0.01)?);
            notes.push(within("a2", fit.a[1], 1.0 / PI, 0.03)?);
            Ok(notes.join("; "))
        }),
        check("gamma_limit_sweep", || {
            let hel = table("helmholtz", 2)?;
            let square = ShapeSpec::square([0.25, 0.25], 0.5).map_err(|e| e.to_string())?;
            let g = TorusGrid::new(2, 1024).map_err(|e| e.to_string())?;
            let s = epsilon_sweep(&square, 2, &hel, 0.5, &[0.2, 0.1, 0.05, 0.025], SweepMethod::Grid(g))
                .map_err(|e| e.to_string())?;
            let text = within("extrapolated", s.extrapolated_limit, 1.0, 0.01)?;
            if let Some(r) = s.rows.iter().find(|r| r.total < s.extrapolated_limit - 0.02) {
                return Err(format!("eps {} has energy {} below the limit", r.epsilon, r.total));
            }
            Ok(text)
        }),
        check("supercritical_laminates", || {
            let hel = table("helmholtz", 2)?;
            let mut prev = f64::INFINITY;
            let mut notes = Vec::new();
            for m in [4usize, 8, 16] {
                let lam = ShapeSpec::laminate(0, 0.5, m).map_err(|e| e.to_string())?;
                let eps = 1.0 / (16.0 * m as f64);
                let e = shape_energy_analytic(&lam, 2, &hel, 1.5, eps).map_err(|e| e.to_string())?;
                notes.push(within(&format!("m={m}"), e.total, -(m as f64), 0.05)?);
                if e.total >= prev {
                    return Err(format!("energy did not decrease at m={m}"));
                }
                prev = e.total;
            }
            Ok(notes.join("; "))
        }),
        check("annealing_dichotomy", || {
            let hel = table("helmholtz", 2)?;
            let g = TorusGrid::new(2, 128).map_err(|e| e.to_string())?;
            let gamma = 0.5 * hel.gamma_crit();
            let mut notes = Vec::new();
            for (theta, want) in [(0.15, Classification::Ball), (0.45, Classification::Laminate)] {
                let hits = std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..10u64)
                        .map(|seed| {
                            let hel = &hel;
                            scope.spawn(move || {
                                let cfg = AnnealConfig { seed, ..AnnealConfig::default() };
                                anneal_multilevel(theta, g, hel, gamma, 8.0 * g.h(), &cfg)
                                    .map(|t| classify_minimizer(&t.final_field) == want)
                                    .unwrap_or(false)
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().unwrap_or(false)).filter(|&ok| ok).count()
                });
                let text = format!("theta {theta}: {hits}/10 {want}");
                if hits < 8 {
                    return Err(text);
                }
                notes.push(text);
            }
            Ok(notes.join("; "))
        }),
    ]
}

pub fn run(level: Level, sabotage: bool, out: Option<&Path>) -> Result<()> {
    let mut checks = fast_checks(sabotage);
    if level == Level::Full {
        checks.extend(full_checks());
    }
    let results: Vec<(&'static str, Outcome, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = checks
            .iter()
            .map(|c| {
                scope.spawn(move || {
                    let start = Instant::now();
                    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (c.run)()))
                        .unwrap_or_else(|_| Err("panicked".into()));
                    (c.name, outcome, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("check thread")).collect()
    });

    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(["check", "status", "seconds", "detail"])?;
    let mut failed = Vec::new();
    for (name, outcome, secs) in &results {
        let (status, detail) = match outcome {
            Ok(d) => ("pass", d.as_str()),
            Err(d) => {
                failed.push(name.to_string());
                ("fail", d.as_str())
            }
        };
        writer.write_record([*name, status, &format!("{secs:.2}"), detail])?;
    }
    let bytes = writer.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
    print!("{}", String::from_utf8_lossy(&bytes));
    if let Some(dir) = out {
        let name = if level == Level::Full { "verify_full.csv" } else { "verify_fast.csv" };
        write_artifact(dir, name, &bytes)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(VerificationFailed(failed).into())
    }
}
