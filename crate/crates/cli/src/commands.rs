use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use gammalab::autocorr::{
    analytic_autocorrelation, correlation_map, default_bins, fit_small_r_polynomial, perimeter_from_slope,
    radial_average,
};
use gammalab::energy::{epsilon_sweep, SweepMethod};
use gammalab::kernels::{integrated_kernel, IntegratedKernelTable, Kernel, DEFAULT_TOL};
use gammalab::minimize::{anneal as run_anneal, anneal_multilevel, classify_minimizer, AnnealConfig};
use gammalab::torus::rasterize;
use gammalab::TorusGrid;

use crate::config::ExperimentConfig;
use crate::svg::{LinePlot, Series};

/// Writes `bytes` to `dir/name` and flushes it to disk.
pub fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let mut f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    Ok(())
}

fn table_for(kernel: &Kernel) -> Result<IntegratedKernelTable> {
    integrated_kernel(kernel, DEFAULT_TOL).with_context(|| format!("kernel '{}'", kernel.name()))
}

pub fn gamma_crit(cfg: &ExperimentConfig, spec: Option<&str>, dim: Option<usize>, out: Option<&Path>) -> Result<()> {
    let kernel = match spec {
        Some(s) => Kernel::parse(s, dim.unwrap_or(cfg.dim()?))?,
        None => cfg.kernel()?,
    };
    let table = table_for(&kernel)?;
    println!("kernel        {}", kernel.name());
    println!("n             {}", kernel.dim());
    println!("first_moment  {:.10}", table.first_moment());
    println!("phi_l1        {:.10}", table.l1_norm());
    println!("gamma_crit    = {:.6}   (first moment)", table.gamma_crit());
    println!("gamma_crit    = {:.6}   (integrated kernel)", table.gamma_crit_phi());
    println!("relative_gap  {:.3e}", table.consistency_gap());
    if let Some(dir) = out {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        write_artifact(dir, "phi.csv", &buf)?;
    }
    Ok(())
}

pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let epsilons = cfg.epsilons()?;
    let shape = cfg.required_shape()?;
    let kernel = cfg.kernel()?;
    let dim = kernel.dim();
    let table = table_for(&kernel)?;
    let gamma_spec = cfg.gamma()?;
    let gamma = gamma_spec.resolve(table.gamma_crit());
    let method = match (cfg.get("method"), cfg.grid()?) {
        (Some("analytic"), _) | (None, None) => SweepMethod::Analytic,
        (Some("grid") | None, Some(n)) => SweepMethod::Grid(TorusGrid::new(dim, n)?),
        (Some("grid"), None) => bail!("method=grid needs the 'grid' key"),
        (Some(other), _) => bail!("method: expected 'grid' or 'analytic', got '{other}'"),
    };
    let result = epsilon_sweep(&shape, dim, &table, gamma, &epsilons, method).map_err(|e| match e {
        gammalab::Error::UnderResolved { eps, h } => {
            anyhow!("eps = {eps} is under-resolved on N = {} (need eps >= 8/N)", (1.0 / h).round())
        }
        other => other.into(),
    })?;

    let mut manifest = cfg.manifest();
    manifest.push(("gamma_value".into(), format!("{gamma}")));
    manifest.push(("gamma_crit".into(), format!("{}", result.gamma_crit)));
    manifest.push((
        "evaluation".into(),
        match method {
            SweepMethod::Analytic => "analytic".into(),
            SweepMethod::Grid(g) => format!("grid N={}", g.n()),
        },
    ));
    let mut csv = Vec::new();
    result.write_csv(&mut csv, &manifest)?;
    write_artifact(out, "sweep.csv", &csv)?;

    let footer = format!(
        "extrapolated limit {:.6} ({}); Gamma-limit reference {:.6}",
        result.extrapolated_limit, result.extrapolation_model, result.gamma_limit
    );
    let plot = LinePlot {
        title: format!("E(eps) for {shape}, {}, gamma = {gamma_spec}", kernel.name()),
        x_label: "eps".into(),
        y_label: "energy".into(),
        series: vec![Series {
            label: "total".into(),
            points: result.rows.iter().map(|r| (r.epsilon, r.total)).collect(),
        }],
        references: vec![(result.gamma_limit, "(1 - gamma/gamma_crit) P".into())],
        footer: Some(footer.clone()),
    };
    write_artifact(out, "sweep.svg", plot.render().as_bytes())?;

    println!("epsilon,total,perimeter_term,nonlocal_term");
    for r in &result.rows {
        println!("{:.6},{:.8},{:.8},{:.8}", r.epsilon, r.total, r.perimeter_term, r.nonlocal_term);
    }
    if !result.diagnostics.is_empty() {
        println!("epsilon,i1,i2,i3");
        for d in &result.diagnostics {
            println!("{:.6},{:.8},{:.3e},{:.3e}", d.epsilon, d.i1, d.i2, d.i3);
        }
    }
    println!("{footer}");
    Ok(())
}

pub fn anneal(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let kernel = cfg.kernel()?;
    let dim = kernel.dim();
    let table = table_for(&kernel)?;
    let gamma_spec = cfg.gamma()?;
    let gamma = gamma_spec.resolve(table.gamma_crit());
    let n = cfg.grid()?.ok_or_else(|| anyhow!("missing required key 'grid'"))?;
    let grid = TorusGrid::new(dim, n)?;
    let eps = match cfg.get("epsilon") {
        Some(_) => cfg.epsilon()?,
        None => 8.0 * grid.h(),
    };
    let defaults = AnnealConfig::default();
    let anneal_cfg = AnnealConfig {
        steps: cfg.u64_or("steps", defaults.steps)?,
        t0: cfg.f64_or("t0", defaults.t0)?,
        decay: cfg.f64_or("decay", defaults.decay)?,
        swap_distance: cfg.u64_or("swap_distance", defaults.swap_distance as u64)? as usize,
        seed: cfg.seed()?,
        record_every: cfg.u64_or("record_every", defaults.record_every)?,
    };
    let trajectory = match cfg.shape()? {
        Some(shape) => {
            if cfg.get("theta").is_some() {
                bail!("give either 'shape' or 'theta', not both");
            }
            run_anneal(&rasterize(&shape, grid)?, &table, gamma, eps, &anneal_cfg)?
        }
        None => {
            let theta = cfg.get("theta").ok_or_else(|| anyhow!("missing required key 'theta' (or 'shape')"))?;
            let theta: f64 = theta.parse().map_err(|_| anyhow!("theta: cannot parse '{theta}'"))?;
            if !(theta > 0.0 && theta < 1.0) {
                bail!("theta must lie in (0, 1), got {theta}");
            }
            anneal_multilevel(theta, grid, &table, gamma, eps, &anneal_cfg)?
        }
    };
    let class = classify_minimizer(&trajectory.final_field);
    let last = trajectory.final_energy();
    let first = &trajectory.snapshots[0].energy;

    let mut manifest = cfg.manifest();
    manifest.push(("gamma_value".into(), format!("{gamma}")));
    manifest.push(("epsilon_value".into(), format!("{eps}")));
    let mut csv = Vec::new();
    for (k, v) in &manifest {
        writeln!(csv, "# {k}={v}")?;
    }
    trajectory.write_csv(&mut csv)?;
    write_artifact(out, "trajectory.csv", &csv)?;
    let mut pgm = Vec::new();
    trajectory.final_field.write_pgm(&mut pgm)?;
    write_artifact(out, "final.pgm", &pgm)?;
    let mut summary = String::new();
    for (k, v) in &manifest {
        summary += &format!("{k}={v}\n");
    }
    summary += &format!("grid_dim={dim}\ngrid_n={n}\n");
    summary += &format!("volume_fraction={}\n", trajectory.final_field.volume_fraction());
    summary += &format!("checksum={:016x}\n", trajectory.final_field.checksum());
    summary += &format!("accepted={}\n", trajectory.accepted);
    summary += &format!("final_total={:.12e}\nfinal_perimeter={:.12e}\n", last.total, last.perimeter_term);
    summary += &format!("classification={class}\n");
    write_artifact(out, "manifest.txt", summary.as_bytes())?;

    println!(
        "energy {:.6} -> {:.6}, perimeter {:.6} -> {:.6}, accepted {} swaps",
        first.total, last.total, first.perimeter_term, last.perimeter_term, trajectory.accepted
    );
    println!("classification: {class}");
    Ok(())
}

pub fn autocorr(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let shape = cfg.required_shape()?;
    let dim = cfg.dim()?;
    let n = cfg.grid()?.ok_or_else(|| anyhow!("missing required key 'grid'"))?;
    let grid = TorusGrid::new(dim, n)?;
    let field = rasterize(&shape, grid)?;
    let bins = cfg.u64_or("bins", default_bins(&grid) as u64)? as usize;
    let r_max = cfg.f64_or("r_max", 0.5)?;
    let rc = radial_average(&correlation_map(&field), bins, r_max)?;
    let mut csv = Vec::new();
    for (k, v) in cfg.manifest() {
        writeln!(csv, "# {k}={v}")?;
    }
    rc.write_csv(&mut csv)?;
    write_artifact(out, "autocorr.csv", &csv)?;

    let p = perimeter_from_slope(&rc)?;
    println!("slope perimeter {:.6} +- {:.2e}", p.value, p.uncertainty);
    println!("exact perimeter {:.6}", shape.perimeter());

    let degree = cfg.u64_or("degree", dim as u64)? as usize;
    let window = match cfg.get("window") {
        Some(w) => {
            let parts: Vec<f64> = w
                .trim_matches(|c| c == '(' || c == ')')
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| anyhow!("window: cannot parse '{w}'")))
                .collect::<Result<_>>()?;
            if parts.len() != 2 {
                bail!("window must be (lo,hi), got '{w}'");
            }
            (parts[0], parts[1])
        }
        None => {
            let hi = shape.polynomial_radius().map_or(0.2, |r| (0.9 * r).min(0.2));
            ((2.0 * grid.h()).max(0.01), hi)
        }
    };
    match fit_small_r_polynomial(&rc, degree, window) {
        Ok(fit) => {
            let mut buf = Vec::new();
            fit.write_csv(&mut buf)?;
            write_artifact(out, "fit.csv", &buf)?;
            let coeffs: Vec<String> = fit.a.iter().enumerate().map(|(j, a)| format!("a{}={a:.6}", j + 1)).collect();
            println!("fit on [{}, {}]: {}  (rms {:.2e})", window.0, window.1, coeffs.join(" "), fit.residual);
        }
        Err(e) => println!("no polynomial fit: {e}"),
    }

    let mut series = vec![Series {
        label: format!("grid N={n}"),
        points: rc.radii.iter().copied().zip(rc.c.iter().copied()).collect(),
    }];
    let exact: Vec<(f64, f64)> =
        rc.radii.iter().filter_map(|&r| analytic_autocorrelation(&shape, dim, r).ok().map(|c| (r, c))).collect();
    if !exact.is_empty() {
        series.push(Series { label: "closed form".into(), points: exact });
    }
    let plot = LinePlot {
        title: format!("radial autocorrelation of {shape}"),
        x_label: "r".into(),
        y_label: "c(r)".into(),
        series,
        references: vec![(shape.volume().powi(2), "volume^2".into())],
        footer: Some(format!("slope perimeter {:.6}", p.value)),
    };
    write_artifact(out, "autocorr.svg", plot.render().as_bytes())?;
    Ok(())
}
