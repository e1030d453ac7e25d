//! The four subcommands: simulate, fit, benchmark, region.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use frechet::estimators::{fit_curve, EstimatorKind, FitSession, SampleSet};
use frechet::geometry::Point;
use frechet::inference::{bootstrap_bias_variance, confidence_region};
use frechet::rkhs::FeatureCombination;
use frechet::simulation::{generate_sample, run_benchmark_with_metric};
use frechet::smoothing::local_weights;

use crate::config::RunConfig;
use crate::io::{dataset_csv, fmt_f64, read_dataset, write_file, write_json};
use crate::CliError;

/// Generates the scenario dataset and writes `dataset.csv` plus a JSON
/// sidecar carrying the full configuration.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let data = generate_sample(&cfg.scenario)?;
    write_file(&out.join("dataset.csv"), &dataset_csv(&data)?)?;
    write_json(
        &out.join("dataset.json"),
        &json!({
            "config": cfg,
            "seed": cfg.scenario.seed,
            "manifold": data.space().kind(),
            "rows": data.len(),
        }),
    )?;
    println!("wrote {} rows to {}", data.len(), out.join("dataset.csv").display());
    Ok(())
}

fn load_for(cfg: &RunConfig, data_path: &Path) -> Result<SampleSet, CliError> {
    let space = cfg.scenario.kind.space()?;
    read_dataset(data_path, &space)
}

/// Fits every configured estimator over the evaluation grid and writes one
/// CSV per estimator.
pub fn cmd_fit(cfg: &RunConfig, data_path: &Path, out: &Path) -> Result<(), CliError> {
    let fit_opts = cfg
        .fit
        .ok_or_else(|| CliError::config("the fit command needs a 'fit' config block".into()))?;
    let data = load_for(cfg, data_path)?;
    let grid: Vec<f64> = match fit_opts.grid {
        Some(g) => g.values()?,
        None => cfg.scenario.kind.eval_grid(),
    };
    let fc = cfg.fit_config(fit_opts.h);
    let mut summary = Vec::new();
    for &est in &cfg.estimators {
        let res = fit_curve(&data, &grid, est, &fc, cfg.parallelism)?;
        let mut csv = String::from("x,status,objective,ambient_1,ambient_2,ambient_3,chart_1,chart_2\n");
        for &x in &grid {
            if let Some(gp) = res.fitted.iter().find(|g| g.x == x) {
                let status = if gp.fit.converged { "ok" } else { "nonconverged" };
                match (&gp.fit.point, data.space().is_chart()) {
                    (Point::Chart(c), _) => {
                        let amb = data.space().chart_to_ambient(*c)?;
                        let _ = writeln!(
                            csv,
                            "{},{},{},{},{},{},{},{}",
                            fmt_f64(x),
                            status,
                            fmt_f64(gp.fit.objective),
                            fmt_f64(amb[0]),
                            fmt_f64(amb[1]),
                            fmt_f64(amb[2]),
                            fmt_f64(c.u),
                            fmt_f64(c.v)
                        );
                    }
                    (Point::Euclid(v), _) => {
                        let mut coords = String::new();
                        for k in 0..3 {
                            coords.push(',');
                            if k < v.len() {
                                coords.push_str(&fmt_f64(v[k]));
                            }
                        }
                        let _ = writeln!(
                            csv,
                            "{},{},{}{},,",
                            fmt_f64(x),
                            status,
                            fmt_f64(gp.fit.objective),
                            coords
                        );
                    }
                }
            } else {
                let _ = writeln!(csv, "{},degenerate,,,,,,", fmt_f64(x));
            }
        }
        let path = out.join(format!("fit_{}.csv", est.label().to_lowercase()));
        write_file(&path, &csv)?;
        summary.push(json!({
            "estimator": est,
            "h": fit_opts.h,
            "fitted": res.fitted.len(),
            "failures": res.failures.len(),
            "wall_secs": res.wall.as_secs_f64(),
            "file": path.file_name().unwrap().to_string_lossy(),
        }));
        println!(
            "{}: {} fitted, {} degenerate, {:.3}s -> {}",
            est.label(),
            res.fitted.len(),
            res.failures.len(),
            res.wall.as_secs_f64(),
            path.display()
        );
    }
    write_json(&out.join("fit.json"), &json!({"config": cfg, "results": summary}))?;
    Ok(())
}

/// Runs the MISE benchmark over the bandwidth grid and writes the report
/// (JSON), a human-readable table, and per-cell CSVs.
pub fn cmd_benchmark(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let grid = cfg
        .bandwidths
        .ok_or_else(|| {
            CliError::config("the benchmark command needs a 'bandwidths' config block".into())
        })?
        .values()?;
    let fc = cfg.fit_config(grid[0]);
    let (report, raw) = run_benchmark_with_metric(
        &cfg.scenario,
        &cfg.estimators,
        &grid,
        cfg.reps,
        cfg.master_seed(),
        cfg.parallelism,
        &fc,
        cfg.error_metric,
    )?;

    write_json(&out.join("benchmark.json"), &report)?;
    write_file(&out.join("benchmark_table.txt"), &report.render_table())?;

    let mut cells = String::from(
        "estimator,h,mean_mise,se_mise,mean_coverage,unreliable_reps,failed_reps,mean_wall_secs\n",
    );
    for c in &report.cells {
        let _ = writeln!(
            cells,
            "{},{},{},{},{},{},{},{}",
            c.estimator.label(),
            fmt_f64(c.h),
            fmt_f64(c.mean_mise),
            fmt_f64(c.se_mise),
            fmt_f64(c.mean_coverage),
            c.unreliable_reps,
            c.failed_reps,
            fmt_f64(c.mean_wall_secs)
        );
    }
    write_file(&out.join("benchmark_cells.csv"), &cells)?;

    let mut reps = String::from("rep,estimator,h,mise,coverage,unreliable,failures,wall_secs\n");
    for c in &raw {
        let _ = writeln!(
            reps,
            "{},{},{},{},{},{},{},{}",
            c.rep,
            c.estimator.label(),
            fmt_f64(c.h),
            c.mise.map(fmt_f64).unwrap_or_default(),
            fmt_f64(c.coverage),
            c.unreliable,
            c.failures,
            fmt_f64(c.wall_secs)
        );
    }
    write_file(&out.join("benchmark_reps.csv"), &reps)?;

    print!("{}", report.render_table());
    println!("wrote report to {}", out.join("benchmark.json").display());
    Ok(())
}

/// Bootstrap confidence region at the configured test point.
pub fn cmd_region(cfg: &RunConfig, data_path: &Path, out: &Path) -> Result<(), CliError> {
    let opts = cfg
        .region
        .ok_or_else(|| CliError::config("the region command needs a 'region' config block".into()))?;
    let data = load_for(cfg, data_path)?;
    let lo = data.xs().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.xs().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo <= opts.x0 && opts.x0 <= hi) {
        return Err(CliError::config(format!(
            "region.x0 = {} lies outside the data range [{lo:.4}, {hi:.4}]",
            opts.x0
        )));
    }
    let fc = cfg.fit_config(opts.h);
    let session = FitSession::new(&data, &fc)?;
    let pullback = session.fit_at(EstimatorKind::Lfrk, opts.h, opts.x0)?;
    let weights = local_weights(data.xs(), opts.x0, opts.h, fc.kernel)?;
    let center = FeatureCombination::from_weights(&weights, data.ys());
    let aq = bootstrap_bias_variance(
        &data,
        opts.x0,
        &fc,
        opts.bootstrap_reps,
        opts.bootstrap_seed.unwrap_or(cfg.master_seed()),
        cfg.parallelism,
    )?;
    let region = confidence_region(
        &center,
        &aq,
        opts.alpha,
        data.space(),
        &cfg.pd_kernel,
        (opts.grid_u, opts.grid_v),
    )?;

    let mut csv = String::from("chart_1,chart_2,ambient_1,ambient_2,ambient_3,feature_sq_dist\n");
    for p in &region.boundary_sample {
        let amb = data.space().chart_to_ambient(*p)?;
        let d2 = region.sq_dist(&Point::Chart(*p))?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_f64(p.u),
            fmt_f64(p.v),
            fmt_f64(amb[0]),
            fmt_f64(amb[1]),
            fmt_f64(amb[2]),
            fmt_f64(d2)
        );
    }
    write_file(&out.join("region.csv"), &csv)?;

    let pb_chart = pullback.point.as_chart()?;
    let pb_amb = data.space().chart_to_ambient(pb_chart)?;
    write_json(
        &out.join("region.json"),
        &json!({
            "config": cfg,
            "level": region.level,
            "alpha": opts.alpha,
            "x0": opts.x0,
            "h": opts.h,
            "n": data.len(),
            "bootstrap_reps": opts.bootstrap_reps,
            "bias_hat": aq.bias_hat,
            "var_hat": aq.var_hat,
            "lower_bound": region.lower_bound,
            "upper_bound": region.upper_bound,
            "boundary_points": region.boundary_sample.len(),
            "pullback": {
                "chart": [pb_chart.u, pb_chart.v],
                "ambient": pb_amb,
                "feature_sq_dist": region.sq_dist(&pullback.point)?,
                "member": region.member_test(&pullback.point)?,
            },
        }),
    )?;
    println!(
        "region at x0 = {}: {} grid points inside, bounds [{:.6e}, {:.6e}]",
        opts.x0,
        region.boundary_sample.len(),
        region.lower_bound,
        region.upper_bound
    );
    Ok(())
}
