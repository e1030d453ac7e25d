//! The regression estimators: Nadaraya–Watson, local Fréchet regression
//! (LFR), the RKHS-embedded LFR^k, and the closed-form Hilbert-space
//! solution.
//!
//! Pointwise fits share a [`FitSession`], which memoizes per-sample distance
//! handles and the sample-by-grid distance/kernel matrices; a bandwidth
//! sweep over one dataset therefore pays for each geodesic pair once. The
//! LFR^k path never evaluates a geodesic distance, which is the entire
//! point of the estimator; the instrumented counter on [`ManifoldSpec`]
//! asserts it.

pub mod optimize;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{FrechetError, Result};
use crate::geometry::{ManifoldKind, ManifoldSpec, Point, SourceDistance};
use crate::numeric::KahanSum;
use crate::parallel;
use crate::rkhs::{LfrkObjective, PdKernel};
use crate::smoothing::{local_weights, nw_weights, LocalWeights, SmoothingKernel};
use optimize::{argmin_lowest_index, chart_cell, chart_grid, Minimum, OptimizerConfig};

/// Paired scalar predictors and manifold responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    xs: Vec<f64>,
    ys: Vec<Point>,
    space: ManifoldSpec,
}

impl SampleSet {
    pub fn new(xs: Vec<f64>, ys: Vec<Point>, space: ManifoldSpec) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(FrechetError::InvalidInput(format!(
                "need matching xs/ys with at least 2 samples, got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        for y in &ys {
            space.point_residual(y)?;
            match y {
                Point::Chart(c) if !(c.u.is_finite() && c.v.is_finite()) => {
                    return Err(FrechetError::InvalidInput(
                        "non-finite chart coordinates".into(),
                    ))
                }
                Point::Euclid(c) if c.iter().any(|x| !x.is_finite()) => {
                    return Err(FrechetError::InvalidInput(
                        "non-finite coordinates".into(),
                    ))
                }
                _ => {}
            }
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(FrechetError::InvalidInput("non-finite predictor".into()));
        }
        Ok(SampleSet { xs, ys, space })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[Point] {
        &self.ys
    }

    pub fn space(&self) -> &ManifoldSpec {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Per-fit configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub h: f64,
    pub kernel: SmoothingKernel,
    /// Positive-definite kernel for LFR^k.
    pub pd_kernel: Option<PdKernel>,
    pub optimizer: OptimizerConfig,
}

impl FitConfig {
    pub fn new(h: f64) -> Self {
        FitConfig {
            h,
            kernel: SmoothingKernel::Epanechnikov,
            pd_kernel: Some(PdKernel::gaussian(1.5)),
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Nw,
    Lfr,
    Lfrk,
    HilbertClosedForm,
}

impl EstimatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Nw => "NW",
            EstimatorKind::Lfr => "LFR",
            EstimatorKind::Lfrk => "LFRk",
            EstimatorKind::HilbertClosedForm => "Hilbert",
        }
    }
}

/// A single pointwise fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFit {
    pub point: Point,
    pub objective: f64,
    /// False when Nelder–Mead hit its iteration cap; the best candidate is
    /// still reported.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPointFit {
    pub x: f64,
    pub fit: PointFit,
}

/// Fitted curve on a predictor grid. Degenerate windows are collected in
/// `failures` rather than aborting the sweep, so
/// `fitted.len() + failures.len() == grid_x.len()`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub estimator: EstimatorKind,
    pub grid_x: Vec<f64>,
    pub fitted: Vec<GridPointFit>,
    pub failures: Vec<(f64, FrechetError)>,
    pub wall: Duration,
}

/// Shared state for repeated fits on one dataset: optimizer grid, per-sample
/// distance handles, and the lazily filled sample-by-grid matrices.
pub struct FitSession<'d> {
    data: &'d SampleSet,
    kernel: SmoothingKernel,
    pd_kernel: Option<PdKernel>,
    optimizer: OptimizerConfig,
    grid: Vec<crate::geometry::ChartPoint>,
    grid_amb: Vec<[f64; 3]>,
    cell: (f64, f64),
    ys_amb: Vec<Vec<f64>>,
    sources: Vec<OnceLock<SourceDistance>>,
    dist_rows: Vec<OnceLock<Vec<f64>>>,
    kern_rows: Vec<OnceLock<Vec<f64>>>,
}

impl<'d> FitSession<'d> {
    pub fn new(data: &'d SampleSet, cfg: &FitConfig) -> Result<Self> {
        cfg.optimizer.validate()?;
        let space = data.space();
        let (grid, grid_amb, cell) = if space.is_chart() {
            let grid = chart_grid(space, cfg.optimizer.grid_u, cfg.optimizer.grid_v);
            let amb: Result<Vec<[f64; 3]>> =
                grid.iter().map(|p| space.chart_to_ambient(*p)).collect();
            (
                grid,
                amb?,
                chart_cell(space, cfg.optimizer.grid_u, cfg.optimizer.grid_v),
            )
        } else {
            (Vec::new(), Vec::new(), (0.0, 0.0))
        };
        let ys_amb: Result<Vec<Vec<f64>>> = data.ys().iter().map(|y| space.ambient(y)).collect();
        let n = data.len();
        Ok(FitSession {
            data,
            kernel: cfg.kernel,
            pd_kernel: cfg.pd_kernel,
            optimizer: cfg.optimizer,
            grid,
            grid_amb,
            cell,
            ys_amb: ys_amb?,
            sources: (0..n).map(|_| OnceLock::new()).collect(),
            dist_rows: (0..n).map(|_| OnceLock::new()).collect(),
            kern_rows: (0..n).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn data(&self) -> &SampleSet {
        self.data
    }

    fn source(&self, i: usize) -> &SourceDistance {
        self.sources[i].get_or_init(|| {
            self.data
                .space()
                .source_distance(&self.data.ys()[i])
                .expect("validated sample points always yield a source handle")
        })
    }

    /// Geodesic distances from sample `i` to every grid node.
    fn dist_row(&self, i: usize) -> &[f64] {
        self.dist_rows[i].get_or_init(|| {
            let src = self.source(i);
            self.grid.iter().map(|p| src.to_chart(*p)).collect()
        })
    }

    /// PD-kernel values from sample `i` to every grid node.
    fn kern_row(&self, i: usize, k: &PdKernel) -> &[f64] {
        self.kern_rows[i].get_or_init(|| {
            let a = &self.ys_amb[i];
            self.grid_amb
                .iter()
                .map(|g| k.eval_ambient(a, g))
                .collect()
        })
    }

    fn weights_for(&self, estimator: EstimatorKind, h: f64, x0: f64) -> Result<Vec<f64>> {
        let n = self.data.len() as f64;
        match estimator {
            EstimatorKind::Nw => nw_weights(self.data.xs(), x0, h, self.kernel),
            EstimatorKind::Lfr | EstimatorKind::Lfrk | EstimatorKind::HilbertClosedForm => Ok(
                local_weights(self.data.xs(), x0, h, self.kernel)?
                    .weights
                    .into_iter()
                    .map(|w| w / n)
                    .collect(),
            ),
        }
    }

    /// One pointwise fit. NW and LFR minimize the weighted squared geodesic
    /// distance; LFR^k minimizes the reduced feature-space objective
    /// -2 sum c_i k(Y_i, w).
    pub fn fit_at(&self, estimator: EstimatorKind, h: f64, x0: f64) -> Result<PointFit> {
        let coefs = self.weights_for(estimator, h, x0)?;
        let window: Vec<usize> = coefs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, _)| i)
            .collect();

        if matches!(estimator, EstimatorKind::HilbertClosedForm)
            || !self.data.space().is_chart()
        {
            return self.fit_euclid(estimator, &coefs, &window);
        }

        let k = match estimator {
            EstimatorKind::Lfrk => Some(self.pd_kernel.ok_or_else(|| {
                FrechetError::InvalidInput("LFR^k requires a positive-definite kernel".into())
            })?),
            _ => None,
        };

        // Grid scan through the cached matrices.
        let mut values = vec![0.0f64; self.grid.len()];
        match k {
            Some(k) => {
                for &i in &window {
                    let row = self.kern_row(i, &k);
                    let c = -2.0 * coefs[i];
                    for (v, r) in values.iter_mut().zip(row) {
                        *v += c * r;
                    }
                }
            }
            None => {
                for &i in &window {
                    let row = self.dist_row(i);
                    let c = coefs[i];
                    for (v, r) in values.iter_mut().zip(row) {
                        *v += c * r * r;
                    }
                }
            }
        }
        for v in values.iter_mut() {
            if !v.is_finite() {
                *v = f64::INFINITY;
            }
        }
        let best = argmin_lowest_index(&values);

        let space = self.data.space();
        let refined = match k {
            Some(k) => {
                let obj = |p: crate::geometry::ChartPoint| -> f64 {
                    let amb = match space.chart_to_ambient(p) {
                        Ok(a) => a,
                        Err(_) => return f64::INFINITY,
                    };
                    let mut acc = 0.0;
                    for &i in &window {
                        acc += coefs[i] * k.eval_ambient(&self.ys_amb[i], &amb);
                    }
                    let v = -2.0 * acc;
                    if v.is_finite() {
                        v
                    } else {
                        f64::INFINITY
                    }
                };
                optimize::refine_chart(space, &obj, self.grid[best], self.cell, &self.optimizer)
            }
            None => {
                let sources: Vec<&SourceDistance> = window.iter().map(|&i| self.source(i)).collect();
                let ws: Vec<f64> = window.iter().map(|&i| coefs[i]).collect();
                let obj = |p: crate::geometry::ChartPoint| -> f64 {
                    let mut acc = 0.0;
                    for (src, c) in sources.iter().zip(&ws) {
                        let d = src.to_chart(p);
                        acc += c * d * d;
                    }
                    if acc.is_finite() {
                        acc
                    } else {
                        f64::INFINITY
                    }
                };
                optimize::refine_chart(space, &obj, self.grid[best], self.cell, &self.optimizer)
            }
        };

        let out = if refined.value <= values[best] {
            refined
        } else {
            Minimum {
                point: Point::Chart(self.grid[best]),
                value: values[best],
                converged: refined.converged,
            }
        };
        Ok(PointFit {
            point: out.point,
            objective: out.value,
            converged: out.converged,
        })
    }

    fn fit_euclid(
        &self,
        estimator: EstimatorKind,
        coefs: &[f64],
        window: &[usize],
    ) -> Result<PointFit> {
        let dim = match self.data.space().kind() {
            ManifoldKind::Euclidean { dim } => dim,
            _ => {
                return Err(FrechetError::InvalidInput(
                    "closed-form estimator requires a Euclidean response space".into(),
                ))
            }
        };
        let objective = |w: &[f64]| -> f64 {
            let mut acc = 0.0;
            for &i in window {
                let d2: f64 = self.ys_amb[i]
                    .iter()
                    .zip(w)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                acc += coefs[i] * d2;
            }
            acc
        };
        if matches!(estimator, EstimatorKind::HilbertClosedForm) {
            let mut out = vec![0.0; dim];
            for &i in window {
                for (o, y) in out.iter_mut().zip(&self.ys_amb[i]) {
                    *o += coefs[i] * y;
                }
            }
            let value = objective(&out);
            return Ok(PointFit {
                point: Point::Euclid(out),
                objective: value,
                converged: true,
            });
        }
        // Data-driven seed independent of the closed form: the unweighted
        // window centroid, with the window spread sizing the simplex.
        let mut seed = vec![0.0; dim];
        for &i in window {
            for (s, y) in seed.iter_mut().zip(&self.ys_amb[i]) {
                *s += y / window.len() as f64;
            }
        }
        let mut scale = 0.0f64;
        for &i in window {
            for (y, s) in self.ys_amb[i].iter().zip(&seed) {
                scale = scale.max((y - s).abs());
            }
        }
        let m = optimize::refine_euclid(&objective, &seed, scale.max(1e-6), &self.optimizer);
        Ok(PointFit {
            point: m.point,
            objective: m.value,
            converged: m.converged,
        })
    }
}

/// Nadaraya–Watson pointwise fit at `x0` (Fréchet mean with nonnegative
/// kernel weights).
pub fn fit_nw(data: &SampleSet, x0: f64, cfg: &FitConfig) -> Result<PointFit> {
    FitSession::new(data, cfg)?.fit_at(EstimatorKind::Nw, cfg.h, x0)
}

/// Local Fréchet regression pointwise fit at `x0` (signed weights).
pub fn fit_lfr(data: &SampleSet, x0: f64, cfg: &FitConfig) -> Result<PointFit> {
    FitSession::new(data, cfg)?.fit_at(EstimatorKind::Lfr, cfg.h, x0)
}

/// RKHS-embedded pointwise fit at `x0`; no geodesic distance is evaluated
/// on this path.
pub fn fit_lfrk(data: &SampleSet, x0: f64, cfg: &FitConfig) -> Result<PointFit> {
    FitSession::new(data, cfg)?.fit_at(EstimatorKind::Lfrk, cfg.h, x0)
}

/// Closed-form Hilbert-space LFR: n^-1 sum s_in(x0, h) Y_i.
pub fn fit_hilbert_lfr(
    xs: &[f64],
    ys: &[Vec<f64>],
    x0: f64,
    h: f64,
    kernel: SmoothingKernel,
) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || ys.is_empty() {
        return Err(FrechetError::InvalidInput(
            "xs and ys must be non-empty and aligned".into(),
        ));
    }
    let w = local_weights(xs, x0, h, kernel)?;
    let dim = ys[0].len();
    let n = xs.len() as f64;
    let mut out = vec![KahanSum::new(); dim];
    for (wi, y) in w.weights.iter().zip(ys) {
        for (acc, yi) in out.iter_mut().zip(y) {
            acc.add(wi * yi / n);
        }
    }
    Ok(out.into_iter().map(|k| k.value()).collect())
}

/// Closed-form Nadaraya–Watson mean in a Hilbert space:
/// sum K_h(X_i - x) Y_i / sum K_h(X_j - x).
pub fn nw_hilbert(
    xs: &[f64],
    ys: &[Vec<f64>],
    x0: f64,
    h: f64,
    kernel: SmoothingKernel,
) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || ys.is_empty() {
        return Err(FrechetError::InvalidInput(
            "xs and ys must be non-empty and aligned".into(),
        ));
    }
    let w = nw_weights(xs, x0, h, kernel)?;
    let dim = ys[0].len();
    let mut out = vec![KahanSum::new(); dim];
    for (wi, y) in w.iter().zip(ys) {
        for (acc, yi) in out.iter_mut().zip(y) {
            acc.add(wi * yi);
        }
    }
    Ok(out.into_iter().map(|k| k.value()).collect())
}

/// Fits the chosen estimator at every grid predictor, collecting degenerate
/// windows as data instead of failing, and records the wall time.
pub fn fit_curve(
    data: &SampleSet,
    grid_x: &[f64],
    estimator: EstimatorKind,
    cfg: &FitConfig,
    parallelism: usize,
) -> Result<FitResult> {
    if grid_x.is_empty() {
        return Err(FrechetError::InvalidInput(
            "fit grid must be non-empty".into(),
        ));
    }
    let session = FitSession::new(data, cfg)?;
    let start = Instant::now();
    let fits = parallel::map_indexed_nested(grid_x.len(), parallelism, |i| {
        session.fit_at(estimator, cfg.h, grid_x[i])
    });
    let wall = start.elapsed();
    let mut fitted = Vec::new();
    let mut failures = Vec::new();
    for (x, fit) in grid_x.iter().zip(fits) {
        match fit {
            Ok(f) => fitted.push(GridPointFit { x: *x, fit: f }),
            Err(e) => failures.push((*x, e)),
        }
    }
    Ok(FitResult {
        estimator,
        grid_x: grid_x.to_vec(),
        fitted,
        failures,
        wall,
    })
}

/// The local weights at `x0` (exposed for the inference layer).
pub fn lfr_weights(data: &SampleSet, x0: f64, cfg: &FitConfig) -> Result<LocalWeights> {
    local_weights(data.xs(), x0, cfg.h, cfg.kernel)
}

/// The LFR^k objective at `x0`, exposing both the full and the reduced
/// forms.
pub fn lfrk_objective(data: &SampleSet, x0: f64, cfg: &FitConfig) -> Result<LfrkObjective> {
    let k = cfg.pd_kernel.ok_or_else(|| {
        FrechetError::InvalidInput("LFR^k requires a positive-definite kernel".into())
    })?;
    let w = local_weights(data.xs(), x0, cfg.h, cfg.kernel)?;
    LfrkObjective::new(&w, data.ys(), &k, data.space())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartPoint;

    fn cluster_data(space: ManifoldSpec, p: ChartPoint, n: usize) -> SampleSet {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let ys = vec![Point::Chart(p); n];
        SampleSet::new(xs, ys, space).unwrap()
    }

    #[test]
    fn all_estimators_recover_a_point_cluster() {
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let p = ChartPoint::new(0.7, -1.2);
        let data = cluster_data(t.clone(), p, 12);
        let cfg = FitConfig::new(0.5);
        for est in [EstimatorKind::Nw, EstimatorKind::Lfr, EstimatorKind::Lfrk] {
            let fit = FitSession::new(&data, &cfg)
                .unwrap()
                .fit_at(est, cfg.h, 0.5)
                .unwrap();
            let c = fit.point.as_chart().unwrap();
            assert!(
                (c.u - p.u).abs() < 1e-5 && (c.v - p.v).abs() < 1e-5,
                "{est:?} returned {c:?}"
            );
        }
    }

    #[test]
    fn lfr_on_euclid_matches_closed_form() {
        let space = ManifoldSpec::euclidean(3).unwrap();
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let ys: Vec<Point> = xs
            .iter()
            .map(|&x| Point::Euclid(vec![x, 1.0 - 0.5 * x, x * x]))
            .collect();
        let data = SampleSet::new(xs.clone(), ys.clone(), space).unwrap();
        let cfg = FitConfig::new(0.35);
        let got = fit_lfr(&data, 0.4, &cfg).unwrap();
        let ys_raw: Vec<Vec<f64>> = ys.iter().map(|y| y.as_euclid().unwrap().to_vec()).collect();
        let want = fit_hilbert_lfr(&xs, &ys_raw, 0.4, 0.35, cfg.kernel).unwrap();
        let p = got.point.as_euclid().unwrap();
        for (a, b) in p.iter().zip(&want) {
            assert!((a - b).abs() < 1e-6, "{p:?} vs {want:?}");
        }
    }

    #[test]
    fn nw_on_euclid_matches_kernel_weighted_mean() {
        let space = ManifoldSpec::euclidean(2).unwrap();
        let xs: Vec<f64> = (0..15).map(|i| i as f64 / 14.0).collect();
        let ys: Vec<Point> = xs
            .iter()
            .map(|&x| Point::Euclid(vec![(3.0 * x).sin(), x]))
            .collect();
        let data = SampleSet::new(xs.clone(), ys.clone(), space).unwrap();
        let cfg = FitConfig::new(0.3);
        let got = fit_nw(&data, 0.5, &cfg).unwrap();
        let ys_raw: Vec<Vec<f64>> = ys.iter().map(|y| y.as_euclid().unwrap().to_vec()).collect();
        let want = nw_hilbert(&xs, &ys_raw, 0.5, 0.3, cfg.kernel).unwrap();
        let p = got.point.as_euclid().unwrap();
        for (a, b) in p.iter().zip(&want) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn hilbert_symmetric_two_point_design_gives_midpoint() {
        let xs = vec![-0.5, 0.5];
        let ys = vec![vec![0.0, 2.0], vec![4.0, 0.0]];
        let got = fit_hilbert_lfr(&xs, &ys, 0.0, 1.0, SmoothingKernel::Epanechnikov).unwrap();
        assert!((got[0] - 2.0).abs() < 1e-12 && (got[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lfrk_path_calls_no_geodesics() {
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let ys: Vec<Point> = xs
            .iter()
            .map(|&x| Point::chart(0.5 + 0.2 * (x * 6.0).sin(), 2.0 * x - 1.0))
            .collect();
        let data = SampleSet::new(xs, ys, t.clone()).unwrap();
        let cfg = FitConfig::new(0.25);
        t.reset_geodesic_calls();
        let _ = fit_lfrk(&data, 0.5, &cfg).unwrap();
        assert_eq!(t.geodesic_calls(), 0);
        // and the LFR path does call geodesics
        let _ = fit_lfr(&data, 0.5, &cfg).unwrap();
        assert!(t.geodesic_calls() > 0);
    }

    #[test]
    fn fit_curve_records_degenerate_windows() {
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        let ys: Vec<Point> = xs.iter().map(|&x| Point::chart(0.3 * x, x)).collect();
        let data = SampleSet::new(xs, ys, t).unwrap();
        let mut cfg = FitConfig::new(0.02); // far too small for n = 10
        cfg.optimizer.grid_u = 16;
        cfg.optimizer.grid_v = 16;
        let grid: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let res = fit_curve(&data, &grid, EstimatorKind::Lfr, &cfg, 1).unwrap();
        assert_eq!(res.fitted.len() + res.failures.len(), grid.len());
        assert!(!res.failures.is_empty());
        assert!(res
            .failures
            .iter()
            .all(|(_, e)| matches!(e, FrechetError::DegenerateWindow { .. })));
    }
}
