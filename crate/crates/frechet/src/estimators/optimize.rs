//! Minimization over a manifold: coarse chart-grid scan followed by
//! Nelder–Mead refinement in chart coordinates with periodic/reflective
//! wrapping. Deterministic given the configuration; grid ties break toward
//! the lowest linearized index.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{FrechetError, Result};
use crate::geometry::{ChartPoint, ManifoldKind, ManifoldSpec, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Grid resolution along the latitude / minor angle.
    pub grid_u: usize,
    /// Grid resolution along the longitude / major angle.
    pub grid_v: usize,
    pub max_iters: usize,
    /// Convergence tolerance on the objective spread of the simplex.
    pub objective_tol: f64,
    /// Convergence tolerance on the simplex diameter (chart radians).
    pub simplex_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grid_u: 64,
            grid_v: 128,
            max_iters: 500,
            objective_tol: 1e-10,
            simplex_tol: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_u < 16 || self.grid_v < 16 {
            return Err(FrechetError::InvalidInput(format!(
                "grid resolution must be at least 16 per chart dimension, got {}x{}",
                self.grid_u, self.grid_v
            )));
        }
        if !(self.objective_tol > 0.0 && self.simplex_tol > 0.0) {
            return Err(FrechetError::InvalidInput(
                "optimizer tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a manifold minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Point,
    pub value: f64,
    pub converged: bool,
}

/// Cell-center chart grid for the scan phase (poles are avoided by
/// construction on latitude charts).
pub fn chart_grid(space: &ManifoldSpec, nu: usize, nv: usize) -> Vec<ChartPoint> {
    let u_range = match space.kind() {
        ManifoldKind::Torus { .. } => (-PI, PI),
        _ => (-FRAC_PI_2, FRAC_PI_2),
    };
    let du = (u_range.1 - u_range.0) / nu as f64;
    let dv = 2.0 * PI / nv as f64;
    let mut grid = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = u_range.0 + (i as f64 + 0.5) * du;
        for j in 0..nv {
            let v = -PI + (j as f64 + 0.5) * dv;
            grid.push(ChartPoint::new(u, v));
        }
    }
    grid
}

/// Grid cell sizes matching [`chart_grid`].
pub fn chart_cell(space: &ManifoldSpec, nu: usize, nv: usize) -> (f64, f64) {
    let span_u = match space.kind() {
        ManifoldKind::Torus { .. } => 2.0 * PI,
        _ => PI,
    };
    (span_u / nu as f64, 2.0 * PI / nv as f64)
}

/// Index of the smallest value; ties break toward the lowest index.
pub fn argmin_lowest_index(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn simplex_diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for a in simplex {
        for b in simplex {
            let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            d = d.max(s);
        }
    }
    d.sqrt()
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5). Stops on objective spread, simplex diameter, or the
/// iteration cap; `converged` reports which.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    steps: &[f64],
    cfg: &OptimizerConfig,
) -> (Vec<f64>, f64, bool) {
    let dim = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for k in 0..dim {
        let mut p = start.to_vec();
        p[k] += steps[k];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    let mut converged = false;
    for _ in 0..cfg.max_iters {
        // order by value, ties by index for determinism
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        // The spread criterion alone would stop a quadratic bowl at
        // coordinate accuracy sqrt(objective_tol); gate it on the simplex
        // size as well.
        let spread = (values[worst] - values[best]).abs();
        let diam = simplex_diameter(&simplex);
        if diam <= cfg.simplex_tol || (spread <= cfg.objective_tol && diam <= 1e-6) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / dim as f64;
            }
        }
        let blend = |a: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + a * (c - w))
                .collect()
        };

        let reflected = blend(1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = blend(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = if fr < values[worst] {
                blend(0.5)
            } else {
                blend(-0.5)
            };
            let fc = f(&contracted);
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                let anchor = simplex[best].clone();
                for (i, p) in simplex.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for (x, a) in p.iter_mut().zip(&anchor) {
                        *x = a + 0.5 * (*x - a);
                    }
                    values[i] = f(p);
                }
            }
        }
    }

    let mut best = 0usize;
    for i in 1..=dim {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best], converged)
}

/// Nelder–Mead polish on chart coordinates starting from a grid cell.
pub fn refine_chart<F: Fn(ChartPoint) -> f64>(
    space: &ManifoldSpec,
    f: &F,
    start: ChartPoint,
    cell: (f64, f64),
    cfg: &OptimizerConfig,
) -> Minimum {
    let wrapped = |x: &[f64]| -> f64 { f(space.normalize_chart(ChartPoint::new(x[0], x[1]))) };
    let (p, value, converged) = nelder_mead(
        &wrapped,
        &[start.u, start.v],
        &[0.75 * cell.0, 0.75 * cell.1],
        cfg,
    );
    Minimum {
        point: Point::Chart(space.normalize_chart(ChartPoint::new(p[0], p[1]))),
        value,
        converged,
    }
}

/// Nelder–Mead in R^d from a data-driven seed; `scale` sizes the initial
/// simplex.
pub fn refine_euclid<F: Fn(&[f64]) -> f64>(
    f: &F,
    seed: &[f64],
    scale: f64,
    cfg: &OptimizerConfig,
) -> Minimum {
    let steps = vec![scale.max(1e-8); seed.len()];
    let (p, value, converged) = nelder_mead(f, seed, &steps, cfg);
    Minimum {
        point: Point::Euclid(p),
        value,
        converged,
    }
}

/// Global-scan-then-polish minimization of `objective` over the manifold.
///
/// Chart manifolds get a full grid scan at the configured resolution before
/// refinement. Euclidean spaces skip the scan and refine from
/// `euclid_seed` (required there), so the search never depends on the
/// closed-form solution it is typically checked against.
pub fn optimize_on_manifold<F: Fn(&Point) -> f64>(
    space: &ManifoldSpec,
    objective: &F,
    cfg: &OptimizerConfig,
    euclid_seed: Option<(&[f64], f64)>,
) -> Result<Minimum> {
    cfg.validate()?;
    match space.kind() {
        ManifoldKind::Euclidean { .. } => {
            let (seed, scale) = euclid_seed.ok_or_else(|| {
                FrechetError::InvalidInput(
                    "optimization over Euclidean space needs a seed point".into(),
                )
            })?;
            let f = |x: &[f64]| objective(&Point::Euclid(x.to_vec()));
            Ok(refine_euclid(&f, seed, scale, cfg))
        }
        _ => {
            let grid = chart_grid(space, cfg.grid_u, cfg.grid_v);
            let values: Vec<f64> = grid.iter().map(|p| objective(&Point::Chart(*p))).collect();
            let best = argmin_lowest_index(&values);
            let cell = chart_cell(space, cfg.grid_u, cfg.grid_v);
            let f = |p: ChartPoint| objective(&Point::Chart(p));
            let refined = refine_chart(space, &f, grid[best], cell, cfg);
            Ok(if refined.value <= values[best] {
                refined
            } else {
                Minimum {
                    point: Point::Chart(grid[best]),
                    value: values[best],
                    converged: refined.converged,
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vec3;

    #[test]
    fn recovers_known_minimum_on_torus() {
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let target = t.chart_to_ambient(ChartPoint::new(0.9, -2.1)).unwrap();
        let obj = |p: &Point| {
            let amb = t.chart_to_ambient(p.as_chart().unwrap()).unwrap();
            vec3::norm_sq(vec3::sub(amb, target))
        };
        let m = optimize_on_manifold(&t, &obj, &OptimizerConfig::default(), None).unwrap();
        let c = m.point.as_chart().unwrap();
        assert!(
            (c.u - 0.9).abs() < 1e-6 && (c.v + 2.1).abs() < 1e-6,
            "got {c:?}"
        );
    }

    #[test]
    fn constant_objective_returns_lowest_index_cell() {
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let cfg = OptimizerConfig::default();
        let obj = |_: &Point| 1.0;
        let m = optimize_on_manifold(&t, &obj, &cfg, None).unwrap();
        let grid = chart_grid(&t, cfg.grid_u, cfg.grid_v);
        assert_eq!(m.point.as_chart().unwrap(), grid[0]);
    }

    #[test]
    fn euclid_refinement_finds_quadratic_minimum() {
        let obj = |x: &[f64]| (x[0] - 1.5) * (x[0] - 1.5) + (x[1] + 0.5) * (x[1] + 0.5) + 3.0;
        let m = refine_euclid(&obj, &[0.0, 0.0], 1.0, &OptimizerConfig::default());
        let p = m.point.as_euclid().unwrap();
        assert!((p[0] - 1.5).abs() < 1e-6 && (p[1] + 0.5).abs() < 1e-6);
        assert!(m.converged);
    }

    #[test]
    fn bimodal_torus_objective_matches_dense_grid() {
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let w1 = t.chart_to_ambient(ChartPoint::new(0.5, 1.0)).unwrap();
        let w2 = t.chart_to_ambient(ChartPoint::new(-2.0, -1.5)).unwrap();
        // two wells of slightly different depth
        let obj = |p: &Point| {
            let amb = t.chart_to_ambient(p.as_chart().unwrap()).unwrap();
            let d1 = vec3::norm_sq(vec3::sub(amb, w1));
            let d2 = vec3::norm_sq(vec3::sub(amb, w2));
            (-(d1 / 0.3).exp().recip() - 0.95 * (d2 / 0.3).exp().recip()).min(0.0)
        };
        let m = optimize_on_manifold(&t, &obj, &OptimizerConfig::default(), None).unwrap();
        // dense grid argmin
        let mut best = (f64::INFINITY, ChartPoint::new(0.0, 0.0));
        for i in 0..2000 {
            for j in 0..2000 {
                let p = ChartPoint::new(
                    -PI + 2.0 * PI * (i as f64 + 0.5) / 2000.0,
                    -PI + 2.0 * PI * (j as f64 + 0.5) / 2000.0,
                );
                let v = obj(&Point::Chart(p));
                if v < best.0 {
                    best = (v, p);
                }
            }
        }
        let c = m.point.as_chart().unwrap();
        assert!(
            (c.u - best.1.u).abs() < 2.0 * PI / 1000.0 && (c.v - best.1.v).abs() < 2.0 * PI / 1000.0,
            "optimizer {c:?} vs dense grid {:?}",
            best.1
        );
    }
}
