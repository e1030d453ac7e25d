//! Reproducible data generation for the ellipsoid and torus experiments,
//! true-curve definitions, MISE evaluation, and benchmark orchestration.
//!
//! Randomness is pinned to ChaCha8 streams; replicate r of a benchmark uses
//! the seed `replicate_seed(master_seed, r)`, so results are bit-identical
//! for any parallelism level. Within one replicate the same dataset is
//! reused across every (estimator, bandwidth) cell, which makes the method
//! comparison paired.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FrechetError, Result};
use crate::estimators::{EstimatorKind, FitConfig, FitResult, FitSession, SampleSet};
use crate::geometry::{sphere, vec3, ManifoldSpec, Point};
use crate::inference::replicate_seed;
use crate::parallel;

/// Simulation scenario: which manifold experiment, its noise level, the
/// sample size, and the data seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Spiral curve on the a=2, b=1 ellipsoid with bivariate normal noise
    /// on the tangent space; `noise_sd` is the per-component standard
    /// deviation (0.15 = low noise, 0.30 = high noise).
    EllipsoidSpiral { noise_sd: f64 },
    /// Curve on the R=2, r=1 torus with independent von Mises angle noise
    /// of concentration kappa.
    TorusCurve { kappa: f64 },
    /// Smooth curve in R^dim with Gaussian noise of scale sigma.
    EuclideanTest { dim: usize, sigma: f64 },
}

impl ScenarioKind {
    pub fn space(&self) -> Result<ManifoldSpec> {
        match self {
            ScenarioKind::EllipsoidSpiral { .. } => ManifoldSpec::ellipsoid(2.0, 1.0),
            ScenarioKind::TorusCurve { .. } => ManifoldSpec::torus(2.0, 1.0),
            ScenarioKind::EuclideanTest { dim, .. } => ManifoldSpec::euclidean(*dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScenarioKind::EllipsoidSpiral { noise_sd } if *noise_sd <= 0.0 => Err(
                FrechetError::InvalidInput("noise scale must be positive".into()),
            ),
            ScenarioKind::TorusCurve { kappa } if *kappa < 0.0 => Err(FrechetError::InvalidInput(
                "kappa must be nonnegative".into(),
            )),
            ScenarioKind::EuclideanTest { dim, sigma } if *dim == 0 || *sigma < 0.0 => Err(
                FrechetError::InvalidInput("need dim >= 1 and sigma >= 0".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Default evaluation grid of 50 predictors strictly inside the curve
    /// domain, step 0.02.
    pub fn eval_grid(&self) -> Vec<f64> {
        let lo = match self {
            ScenarioKind::EllipsoidSpiral { .. } => -0.49,
            _ => 0.01,
        };
        (0..50).map(|k| lo + 0.02 * k as f64).collect()
    }
}

/// The true regression curve of a scenario.
pub struct TrueCurve {
    kind: ScenarioKind,
    space: ManifoldSpec,
    pub domain: (f64, f64),
}

/// True curve m(x) of a scenario.
pub fn true_curve(kind: &ScenarioKind) -> Result<TrueCurve> {
    kind.validate()?;
    let domain = match kind {
        ScenarioKind::EllipsoidSpiral { .. } => (-0.5, 0.5),
        _ => (0.0, 1.0),
    };
    Ok(TrueCurve {
        kind: *kind,
        space: kind.space()?,
        domain,
    })
}

/// Unit-sphere spiral s(x) whose axis-scaled image is the ellipsoid curve.
fn sphere_spiral(x: f64) -> [f64; 3] {
    let w = (1.0 - 3.0 * x * x).max(0.0).sqrt();
    let (s, c) = (PI * x).sin_cos();
    [w * c, w * s, 3.0_f64.sqrt() * x]
}

impl TrueCurve {
    pub fn space(&self) -> &ManifoldSpec {
        &self.space
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x <= self.domain.0 || x >= self.domain.1 {
            return Err(FrechetError::InvalidInput(format!(
                "x = {x} outside the curve domain ({}, {})",
                self.domain.0, self.domain.1
            )));
        }
        Ok(())
    }

    pub fn ambient_at(&self, x: f64) -> Result<Vec<f64>> {
        self.check_domain(x)?;
        Ok(match self.kind {
            ScenarioKind::EllipsoidSpiral { .. } => {
                let s = sphere_spiral(x);
                vec![2.0 * s[0], 2.0 * s[1], s[2]]
            }
            ScenarioKind::TorusCurve { .. } => {
                let (s1, c1) = (PI * x).sin_cos();
                let (s2, c2) = (PI * x * x).sin_cos();
                vec![(2.0 + c2) * c1, (2.0 + c2) * s1, s2]
            }
            ScenarioKind::EuclideanTest { dim, .. } => euclid_mean(x, dim),
        })
    }

    pub fn point_at(&self, x: f64) -> Result<Point> {
        let amb = self.ambient_at(x)?;
        match self.kind {
            ScenarioKind::EuclideanTest { .. } => Ok(Point::Euclid(amb)),
            _ => Ok(Point::Chart(self.space.ambient_to_chart([
                amb[0], amb[1], amb[2],
            ])?)),
        }
    }
}

fn euclid_mean(x: f64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| (PI * x + j as f64 * PI / 4.0).sin())
        .collect()
}

/// Draws from the von Mises distribution with mean direction `mu` and
/// concentration `kappa`, by the Best–Fisher (1979) rejection sampler.
/// kappa = 0 falls back to the uniform circle law.
pub fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    use crate::numeric::wrap_angle;
    if kappa < 1e-10 {
        return wrap_angle(-PI + 2.0 * PI * rng.random::<f64>());
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let angle = (u3 - 0.5).signum() * f.clamp(-1.0, 1.0).acos();
            return wrap_angle(mu + angle);
        }
    }
}

/// Modified Bessel function of the first kind, order zero, by its power
/// series (used only by density checks, never by the sampler).
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..200 {
        term *= q / ((j * j) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// von Mises density at `theta` (mean `mu`, concentration `kappa`).
pub fn von_mises_density(theta: f64, mu: f64, kappa: f64) -> f64 {
    (kappa * (theta - mu).cos()).exp() / (2.0 * PI * bessel_i0(kappa))
}

/// Ellipsoid experiment sample: X ~ U(-0.5, 0.5); a bivariate normal
/// tangent vector with independent components of standard deviation
/// `noise_sd` at the unit-sphere curve point is pushed through the
/// exponential map, and the axes are rescaled to the a=2, b=1 ellipsoid.
pub fn generate_ellipsoid_sample(n: usize, noise_sd: f64, seed: u64) -> Result<SampleSet> {
    if noise_sd <= 0.0 {
        return Err(FrechetError::InvalidInput(
            "noise scale must be positive".into(),
        ));
    }
    let space = ManifoldSpec::ellipsoid(2.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = noise_sd;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random::<f64>() - 0.5;
        let s = sphere_spiral(x);
        let e1 = vec3::any_orthonormal(s);
        let e2 = vec3::cross(s, e1);
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        let u = vec3::add(vec3::scale(e1, sd * g1), vec3::scale(e2, sd * g2));
        let z = sphere::sphere_exp_map(s, u)?;
        let y = [2.0 * z[0], 2.0 * z[1], z[2]];
        xs.push(x);
        ys.push(Point::Chart(space.ambient_to_chart(y)?));
    }
    SampleSet::new(xs, ys, space)
}

/// Torus experiment sample: X ~ U(0, 1); two independent von Mises angles
/// with mean directions pi X and pi X^2 give the major and minor angles.
pub fn generate_torus_sample(n: usize, kappa: f64, seed: u64) -> Result<SampleSet> {
    if kappa < 0.0 {
        return Err(FrechetError::InvalidInput(
            "kappa must be nonnegative".into(),
        ));
    }
    let space = ManifoldSpec::torus(2.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random::<f64>();
        let y1 = sample_von_mises(&mut rng, PI * x, kappa);
        let y2 = sample_von_mises(&mut rng, PI * x * x, kappa);
        xs.push(x);
        ys.push(Point::chart(y2, y1));
    }
    SampleSet::new(xs, ys, space)
}

fn generate_euclid_sample(n: usize, dim: usize, sigma: f64, seed: u64) -> Result<SampleSet> {
    let space = ManifoldSpec::euclidean(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comp_sd = sigma / (dim as f64).sqrt();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random::<f64>();
        let mut y = euclid_mean(x, dim);
        for v in y.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *v += comp_sd * g;
        }
        xs.push(x);
        ys.push(Point::Euclid(y));
    }
    SampleSet::new(xs, ys, space)
}

/// Generates the dataset of a scenario.
pub fn generate_sample(scenario: &Scenario) -> Result<SampleSet> {
    scenario.kind.validate()?;
    match scenario.kind {
        ScenarioKind::EllipsoidSpiral { noise_sd } => {
            generate_ellipsoid_sample(scenario.n, noise_sd, scenario.seed)
        }
        ScenarioKind::TorusCurve { kappa } => {
            generate_torus_sample(scenario.n, kappa, scenario.seed)
        }
        ScenarioKind::EuclideanTest { dim, sigma } => {
            generate_euclid_sample(scenario.n, dim, sigma, scenario.seed)
        }
    }
}

/// Integrated squared error of one fitted curve, with bookkeeping for
/// degenerate grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiseResult {
    /// Trapezoid approximation of the integral of d^2(fit, truth) over the
    /// grid intervals whose endpoints both succeeded.
    pub value: f64,
    /// Fraction of the grid mass retained (failed subintervals drop out).
    pub coverage: f64,
    /// More than 20% of the grid points failed.
    pub unreliable: bool,
}

/// Squared-error metric for curve evaluation. `Geodesic` is the distance of
/// the space; `ChartAngles` is the flat squared angle error
/// wrap(du)^2 + wrap(dv)^2 on chart manifolds, the convention the torus
/// reference values follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    Geodesic,
    ChartAngles,
}

impl Default for ErrorMetric {
    fn default() -> Self {
        ErrorMetric::Geodesic
    }
}

fn squared_error(
    metric: ErrorMetric,
    space: &ManifoldSpec,
    a: &Point,
    b: &Point,
) -> Result<f64> {
    match (metric, a, b) {
        (ErrorMetric::ChartAngles, Point::Chart(p), Point::Chart(q)) => {
            use crate::numeric::wrap_angle;
            let du = wrap_angle(p.u - q.u);
            let dv = wrap_angle(p.v - q.v);
            Ok(du * du + dv * dv)
        }
        _ => {
            let d = space.distance_value(a, b)?;
            Ok(d * d)
        }
    }
}

/// Trapezoid-rule integrated squared geodesic error of a fitted curve
/// against the true curve.
pub fn mise(fit: &FitResult, truth: &TrueCurve, space: &ManifoldSpec) -> Result<MiseResult> {
    mise_with_metric(fit, truth, space, ErrorMetric::Geodesic)
}

/// [`mise`] under an explicit error metric.
pub fn mise_with_metric(
    fit: &FitResult,
    truth: &TrueCurve,
    space: &ManifoldSpec,
    metric: ErrorMetric,
) -> Result<MiseResult> {
    if fit.grid_x.is_empty() {
        return Err(FrechetError::InvalidInput("empty fit grid".into()));
    }
    let mut sq = vec![None; fit.grid_x.len()];
    for gp in &fit.fitted {
        let idx = fit
            .grid_x
            .iter()
            .position(|x| *x == gp.x)
            .expect("fitted x comes from the grid");
        let t = truth.point_at(gp.x)?;
        sq[idx] = Some(squared_error(metric, space, &gp.fit.point, &t)?);
    }
    let total_mass = fit.grid_x.last().unwrap() - fit.grid_x.first().unwrap();
    let mut value = 0.0;
    let mut kept = 0.0;
    for k in 0..fit.grid_x.len() - 1 {
        if let (Some(a), Some(b)) = (sq[k], sq[k + 1]) {
            let w = fit.grid_x[k + 1] - fit.grid_x[k];
            value += 0.5 * w * (a + b);
            kept += w;
        }
    }
    let failed_frac = fit.failures.len() as f64 / fit.grid_x.len() as f64;
    Ok(MiseResult {
        value,
        coverage: if total_mass > 0.0 { kept / total_mass } else { 0.0 },
        unreliable: failed_frac > 0.2,
    })
}

/// One (estimator, bandwidth) cell of the benchmark, aggregated over
/// replications. Wall-clock fields are diagnostics and are excluded from
/// the determinism contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellStats {
    pub estimator: EstimatorKind,
    pub h: f64,
    /// Mean MISE across replicates with a defined value.
    pub mean_mise: f64,
    /// Standard error of that mean.
    pub se_mise: f64,
    pub mean_coverage: f64,
    pub unreliable_reps: usize,
    /// Replicates with no defined MISE at all.
    pub failed_reps: usize,
    pub mean_wall_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub optimal_h: f64,
    /// Minimum mean MISE across the bandwidth grid.
    pub min_mean_mise: f64,
    pub se_at_optimum: f64,
    /// Mean wall time per replicate across all bandwidth cells, seconds.
    pub mean_wall_secs: f64,
}

/// Benchmark output: per-cell statistics plus per-estimator summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub scenario: Scenario,
    #[serde(default)]
    pub metric: ErrorMetric,
    pub reps: usize,
    pub h_grid: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub eval_grid: Vec<f64>,
    pub cells: Vec<CellStats>,
    pub summaries: Vec<EstimatorSummary>,
}

impl BenchmarkReport {
    pub fn summary_for(&self, estimator: EstimatorKind) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == estimator)
    }

    /// Human-readable table: minimum mean MISE x100 with the optimal
    /// bandwidth in parentheses, one column per estimator.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "scenario: {:?}  n = {}  reps = {}\n",
            self.scenario.kind, self.scenario.n, self.reps
        ));
        out.push_str("estimator   min mean MISE x100 (opt h)   mean wall s/rep\n");
        for s in &self.summaries {
            out.push_str(&format!(
                "{:<10}  {:>8.2} ({:.2})               {:>10.3}\n",
                s.estimator.label(),
                100.0 * s.min_mean_mise,
                s.optimal_h,
                s.mean_wall_secs,
            ));
        }
        out
    }
}

/// Per-replicate raw cell results (exposed for CSV export).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepCell {
    pub rep: usize,
    pub estimator: EstimatorKind,
    pub h: f64,
    pub mise: Option<f64>,
    pub coverage: f64,
    pub unreliable: bool,
    pub failures: usize,
    pub wall_secs: f64,
}

/// Runs the full benchmark: `reps` replicate datasets (seeded from the
/// master seed), each fitted with every estimator over the bandwidth grid
/// on a common evaluation grid, with MISE evaluated against the true curve
/// by the exact geodesic solvers.
pub fn run_benchmark(
    scenario: &Scenario,
    estimators: &[EstimatorKind],
    h_grid: &[f64],
    reps: usize,
    master_seed: u64,
    parallelism: usize,
    base_cfg: &FitConfig,
) -> Result<(BenchmarkReport, Vec<RepCell>)> {
    run_benchmark_with_metric(
        scenario,
        estimators,
        h_grid,
        reps,
        master_seed,
        parallelism,
        base_cfg,
        ErrorMetric::Geodesic,
    )
}

/// [`run_benchmark`] under an explicit error metric.
#[allow(clippy::too_many_arguments)]
pub fn run_benchmark_with_metric(
    scenario: &Scenario,
    estimators: &[EstimatorKind],
    h_grid: &[f64],
    reps: usize,
    master_seed: u64,
    parallelism: usize,
    base_cfg: &FitConfig,
    metric: ErrorMetric,
) -> Result<(BenchmarkReport, Vec<RepCell>)> {
    if reps == 0 || h_grid.is_empty() || estimators.is_empty() {
        return Err(FrechetError::InvalidInput(
            "benchmark needs reps >= 1, a bandwidth grid, and estimators".into(),
        ));
    }
    scenario.kind.validate()?;
    let truth = true_curve(&scenario.kind)?;
    let eval_grid = scenario.kind.eval_grid();

    let per_rep: Result<Vec<Vec<RepCell>>> = parallel::map_indexed(reps, parallelism, |r| {
        let seed = replicate_seed(master_seed, r as u64);
        let data = generate_sample(&Scenario {
            kind: scenario.kind,
            n: scenario.n,
            seed,
        })?;
        let space = data.space().clone();
        let session = FitSession::new(&data, base_cfg)?;
        let mut cells = Vec::with_capacity(estimators.len() * h_grid.len());
        for &est in estimators {
            for &h in h_grid {
                let start = Instant::now();
                let mut fitted = Vec::new();
                let mut failures = Vec::new();
                for &x in &eval_grid {
                    match session.fit_at(est, h, x) {
                        Ok(f) => fitted.push(crate::estimators::GridPointFit { x, fit: f }),
                        Err(e) => failures.push((x, e)),
                    }
                }
                let wall = start.elapsed().as_secs_f64();
                let n_failures = failures.len();
                let fr = FitResult {
                    estimator: est,
                    grid_x: eval_grid.clone(),
                    fitted,
                    failures,
                    wall: start.elapsed(),
                };
                let m = mise_with_metric(&fr, &truth, &space, metric)?;
                cells.push(RepCell {
                    rep: r,
                    estimator: est,
                    h,
                    mise: if m.coverage > 0.0 { Some(m.value) } else { None },
                    coverage: m.coverage,
                    unreliable: m.unreliable,
                    failures: n_failures,
                    wall_secs: wall,
                });
            }
        }
        Ok(cells)
    })
    .into_iter()
    .collect();
    let per_rep = per_rep?;
    let raw: Vec<RepCell> = per_rep.into_iter().flatten().collect();

    let mut cells = Vec::new();
    for &est in estimators {
        for &h in h_grid {
            let rows: Vec<&RepCell> = raw
                .iter()
                .filter(|c| c.estimator == est && c.h == h)
                .collect();
            let vals: Vec<f64> = rows.iter().filter_map(|c| c.mise).collect();
            let k = vals.len() as f64;
            let mean = if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / k
            };
            let se = if vals.len() > 1 {
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            } else {
                0.0
            };
            cells.push(CellStats {
                estimator: est,
                h,
                mean_mise: mean,
                se_mise: se,
                mean_coverage: rows.iter().map(|c| c.coverage).sum::<f64>() / rows.len() as f64,
                unreliable_reps: rows.iter().filter(|c| c.unreliable).count(),
                failed_reps: rows.iter().filter(|c| c.mise.is_none()).count(),
                mean_wall_secs: rows.iter().map(|c| c.wall_secs).sum::<f64>() / rows.len() as f64,
            });
        }
    }

    let mut summaries = Vec::new();
    for &est in estimators {
        let of_est: Vec<&CellStats> = cells.iter().filter(|c| c.estimator == est).collect();
        let best = of_est
            .iter()
            .filter(|c| c.mean_mise.is_finite())
            .min_by(|a, b| a.mean_mise.total_cmp(&b.mean_mise))
            .ok_or_else(|| FrechetError::InsufficientData(format!(
                "estimator {est:?} produced no usable MISE cell"
            )))?;
        summaries.push(EstimatorSummary {
            estimator: est,
            optimal_h: best.h,
            min_mean_mise: best.mean_mise,
            se_at_optimum: best.se_mise,
            mean_wall_secs: of_est.iter().map(|c| c.mean_wall_secs).sum::<f64>(),
        });
    }

    Ok((
        BenchmarkReport {
            scenario: *scenario,
            metric,
            reps,
            h_grid: h_grid.to_vec(),
            estimators: estimators.to_vec(),
            eval_grid,
            cells,
            summaries,
        },
        raw,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_curves_hit_stated_points() {
        let e = true_curve(&ScenarioKind::EllipsoidSpiral { noise_sd: 0.15 }).unwrap();
        let p = e.ambient_at(0.0).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-14 && p[1].abs() < 1e-14 && p[2].abs() < 1e-14);
        // boundary limit: z -> sqrt(3)/2, xy radius -> 1
        let p = e.ambient_at(0.499_999_999).unwrap();
        assert!((p[2] - 3.0_f64.sqrt() / 2.0).abs() < 1e-4);
        assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-4);

        let t = true_curve(&ScenarioKind::TorusCurve { kappa: 15.0 }).unwrap();
        let p = t.ambient_at(1e-12).unwrap();
        assert!((p[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn curve_rejects_out_of_domain() {
        let e = true_curve(&ScenarioKind::EllipsoidSpiral { noise_sd: 0.15 }).unwrap();
        assert!(e.ambient_at(0.6).is_err());
        assert!(e.ambient_at(-0.5).is_err());
    }

    #[test]
    fn ellipsoid_samples_satisfy_surface_equation() {
        let data = generate_ellipsoid_sample(60, 0.15, 42).unwrap();
        let space = data.space();
        for y in data.ys() {
            let amb = space.ambient(y).unwrap();
            let r = (amb[0] * amb[0] + amb[1] * amb[1]) / 4.0 + amb[2] * amb[2];
            assert!((r - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_ellipsoid_sample(25, 0.3, 7).unwrap();
        let b = generate_ellipsoid_sample(25, 0.3, 7).unwrap();
        assert_eq!(a.xs(), b.xs());
        assert_eq!(a.ys(), b.ys());
        let a = generate_torus_sample(25, 5.0, 7).unwrap();
        let b = generate_torus_sample(25, 5.0, 7).unwrap();
        assert_eq!(a.ys(), b.ys());
    }

    #[test]
    fn von_mises_concentrates_at_high_kappa() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let th = sample_von_mises(&mut rng, 1.0, 1e6);
            assert!((th - 1.0).abs() < 0.01, "got {th}");
        }
    }

    #[test]
    fn bessel_i0_reference_values() {
        // I0(0) = 1; I0(1) = 1.2660658777520...; I0(5) = 27.2398718236044...
        assert_eq!(bessel_i0(0.0), 1.0);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008).abs() < 1e-12);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_44).abs() < 1e-10);
    }

    #[test]
    fn mise_zero_for_exact_fit_and_shift_rule() {
        let kind = ScenarioKind::TorusCurve { kappa: 15.0 };
        let truth = true_curve(&kind).unwrap();
        let space = kind.space().unwrap();
        let grid: Vec<f64> = (0..50).map(|k| 0.01 + 0.02 * k as f64).collect();
        let fitted: Vec<crate::estimators::GridPointFit> = grid
            .iter()
            .map(|&x| crate::estimators::GridPointFit {
                x,
                fit: crate::estimators::PointFit {
                    point: truth.point_at(x).unwrap(),
                    objective: 0.0,
                    converged: true,
                },
            })
            .collect();
        let fr = FitResult {
            estimator: EstimatorKind::Lfr,
            grid_x: grid.clone(),
            fitted,
            failures: Vec::new(),
            wall: std::time::Duration::ZERO,
        };
        let m = mise(&fr, &truth, &space).unwrap();
        assert!(m.value < 1e-16);
        assert_eq!(m.coverage, 1.0);
        assert!(!m.unreliable);

        // constant geodesic offset: shift the minor angle by delta
        let delta = 0.11;
        let fitted: Vec<crate::estimators::GridPointFit> = grid
            .iter()
            .map(|&x| {
                let c = truth.point_at(x).unwrap().as_chart().unwrap();
                crate::estimators::GridPointFit {
                    x,
                    fit: crate::estimators::PointFit {
                        point: Point::chart(c.u + delta, c.v),
                        objective: 0.0,
                        converged: true,
                    },
                }
            })
            .collect();
        let fr = FitResult {
            estimator: EstimatorKind::Lfr,
            grid_x: grid.clone(),
            fitted,
            failures: Vec::new(),
            wall: std::time::Duration::ZERO,
        };
        let m = mise(&fr, &truth, &space).unwrap();
        // offset distance = r * delta on the minor circle
        let want = delta * delta * (grid.last().unwrap() - grid.first().unwrap());
        assert!(
            (m.value - want).abs() < 1e-3 * want,
            "got {} want {want}",
            m.value
        );
    }
}
