//! Geodesic distance on the torus.
//!
//! The boundary-value problem has no closed form: [`torus_distance`] shoots
//! over initial directions (Clairaut constant `rho * sin(psi)` conserved
//! along each ray) and minimizes over the candidate geodesics, which covers
//! windings through the hole and around the tube. Meridian pairs and
//! inner-equator pairs are exact special cases: `ds^2 = r^2 dtheta^2 +
//! rho^2 dphi^2` bounds any path below by `r |dtheta|` and by
//! `(R - r) |dphi|` respectively.
//!
//! [`TorusDistanceField`] trades memory for speed when many distances from
//! one source are needed (estimator objectives): a dense fan of geodesics is
//! traced once, scattered onto a chart grid, locally re-shot where the fan
//! is sparse, and then queried by bicubic interpolation, with a chord-series
//! expansion taking over in the near field.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{FrechetError, Result};
use crate::geometry::shooting::{self, chord_arc, ShootOptions, Surface};
use crate::geometry::vec3::{self, Vec3};
use crate::geometry::{ChartPoint, GeodesicMethod, GeodesicResult, Torus};
use crate::numeric::wrap_angle;

fn normalize(p: ChartPoint) -> ChartPoint {
    ChartPoint::new(wrap_angle(p.u), wrap_angle(p.v))
}

fn coincident(p1: ChartPoint, p2: ChartPoint) -> bool {
    let tol = crate::geometry::COINCIDENT_CHART_TOL;
    wrap_angle(p1.u - p2.u).abs() <= tol && wrap_angle(p1.v - p2.v).abs() <= tol
}

/// Upper bound on the distance via meridian/parallel composite routes.
fn route_upper_bound(t: &Torus, p1: ChartPoint, p2: ChartPoint) -> f64 {
    let r = t.r_minor;
    let big = t.r_major;
    let dth = wrap_angle(p2.u - p1.u).abs();
    let dph = wrap_angle(p2.v - p1.v).abs();
    let rho1 = big + r * p1.u.cos();
    let rho2 = big + r * p2.u.cos();
    // meridian then parallel / parallel then meridian / through the hole
    let a = r * dth + rho2 * dph;
    let b = rho1 * dph + r * dth;
    let c = r * (PI - p1.u.abs()) + r * (PI - p2.u.abs()) + (big - r) * dph;
    a.min(b).min(c)
}

/// Geodesic distance between two chart points of a torus, by initial
/// direction shooting. Relative accuracy target 1e-5.
pub fn torus_distance(t: &Torus, p1: ChartPoint, p2: ChartPoint) -> Result<GeodesicResult> {
    if !(t.r_minor > 0.0 && t.r_minor < t.r_major) {
        return Err(FrechetError::InvalidInput(format!(
            "torus requires 0 < r < R, got R = {}, r = {}",
            t.r_major, t.r_minor
        )));
    }
    let p1 = normalize(p1);
    let p2 = normalize(p2);
    let (p1, p2) = if (p1.u, p1.v) <= (p2.u, p2.v) {
        (p1, p2)
    } else {
        (p2, p1)
    };
    if coincident(p1, p2) {
        return Ok(GeodesicResult {
            distance: 0.0,
            method: GeodesicMethod::ClosedForm,
            est_abs_error: 0.0,
        });
    }

    let r = t.r_minor;
    let tol = 1e-12;
    // Same meridian: the minor-circle arc is exactly minimizing.
    if wrap_angle(p2.v - p1.v).abs() <= tol {
        let d = r * wrap_angle(p2.u - p1.u).abs();
        return Ok(GeodesicResult {
            distance: d,
            method: GeodesicMethod::ClosedForm,
            est_abs_error: 1e-14 * (r + d),
        });
    }
    // Both points on the inner equator: its arc is exactly minimizing.
    if (p1.u.abs() - PI).abs() <= tol && (p2.u.abs() - PI).abs() <= tol {
        let d = (t.r_major - r) * wrap_angle(p2.v - p1.v).abs();
        return Ok(GeodesicResult {
            distance: d,
            method: GeodesicMethod::ClosedForm,
            est_abs_error: 1e-14 * (r + d),
        });
    }

    let surface = Surface::Torus(*t);
    let a1 = t.chart_to_ambient(p1);
    let a2 = t.chart_to_ambient(p2);
    let ub = route_upper_bound(t, p1, p2);
    let opts = ShootOptions::default();
    let s_max = 1.02 * ub + 4.0 * opts.step_rel * r;
    let d = shooting::min_geodesic_distance(&surface, a1, a2, s_max, &opts).ok_or_else(|| {
        FrechetError::Numeric {
            context: "torus_distance",
            message: format!(
                "direction scan found no geodesic for ({}, {}) -> ({}, {})",
                p1.u, p1.v, p2.u, p2.v
            ),
        }
    })?;
    Ok(GeodesicResult {
        distance: d,
        method: GeodesicMethod::OdeShooting,
        est_abs_error: 2e-6 * (r + d),
    })
}

// ---------------------------------------------------------------------------
// Per-source distance field
// ---------------------------------------------------------------------------

const N_THETA: usize = 128;
const N_DPHI: usize = 97; // nodes over [0, pi] inclusive
const FAN_RAYS: usize = 4096;

/// Distances from one fixed source point to the whole torus, sampled on a
/// (theta, |dphi|) grid. Rotation and mirror symmetry reduce the second axis
/// to [0, pi]. Queries interpolate bicubically; the near field uses the
/// chord series d = c + c^3 kappa^2 / 24 + O(c^5) instead.
#[derive(Debug)]
pub struct TorusDistanceField {
    torus: Torus,
    source: ChartPoint,
    source_amb: Vec3,
    dtheta: f64,
    ddphi: f64,
    values: Vec<f64>,
    near_field_chord: f64,
}

impl TorusDistanceField {
    pub fn build(torus: Torus, source: ChartPoint) -> Self {
        let source = normalize(source);
        let r = torus.r_minor;
        let surface = Surface::Torus(torus);
        // Work in the frame rotated so the source sits at phi = 0.
        let src = ChartPoint::new(source.u, 0.0);
        let src_amb = torus.chart_to_ambient(src);

        let dtheta = 2.0 * PI / N_THETA as f64;
        let ddphi = PI / (N_DPHI - 1) as f64;
        let node_amb: Vec<Vec3> = (0..N_THETA * N_DPHI)
            .map(|idx| {
                let i = idx / N_DPHI;
                let j = idx % N_DPHI;
                torus.chart_to_ambient(ChartPoint::new(
                    -PI + i as f64 * dtheta,
                    j as f64 * ddphi,
                ))
            })
            .collect();

        let mut s_max: f64 = 0.0;
        for idx in 0..node_amb.len() {
            let i = idx / N_DPHI;
            let j = idx % N_DPHI;
            let q = ChartPoint::new(-PI + i as f64 * dtheta, j as f64 * ddphi);
            s_max = s_max.max(route_upper_bound(&torus, src, q));
        }
        let step = 0.025 * r;
        s_max = 1.03 * s_max + 6.0 * step;
        // A 3D chord only bounds the surface distance locally; candidates
        // from samples farther than a few cells are meaningless.
        let miss_cap_sq = (2.5 * (dtheta * r).max(ddphi * (torus.r_major + r))).powi(2);

        let mut best_sq = vec![f64::INFINITY; N_THETA * N_DPHI];

        let n = surface.unit_normal(src_amb);
        let e1 = vec3::any_orthonormal(n);
        let e2 = vec3::cross(n, e1);
        for k in 0..FAN_RAYS {
            let psi = (k as f64 + 0.5) * 2.0 * PI / FAN_RAYS as f64;
            let (sp, cp) = psi.sin_cos();
            let dir = vec3::add(vec3::scale(e1, cp), vec3::scale(e2, sp));
            shooting::trace_geodesic(&surface, src_amb, dir, s_max, step, |s, pos, tan| {
                // Fold onto dphi >= 0: mirror symmetry through the source
                // meridian plane maps y -> -y (tangent included).
                let folded = [pos[0], pos[1].abs(), pos[2]];
                let ft = if pos[1] < 0.0 {
                    [tan[0], -tan[1], tan[2]]
                } else {
                    tan
                };
                let theta = (pos[2] / torus.r_minor)
                    .atan2(((pos[0] * pos[0] + pos[1] * pos[1]).sqrt() - torus.r_major) / torus.r_minor);
                let dphi = folded[1].atan2(folded[0]).abs();
                let fi = (theta + PI) / dtheta;
                let fj = dphi / ddphi;
                let i0 = (fi.floor() as isize).rem_euclid(N_THETA as isize) as usize;
                let j0 = (fj.floor() as usize).min(N_DPHI - 2);
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let i = (i0 + di) % N_THETA;
                    let j = j0 + dj;
                    let idx = i * N_DPHI + j;
                    let off = vec3::sub(node_amb[idx], folded);
                    let off_sq = vec3::norm_sq(off);
                    if off_sq > miss_cap_sq {
                        continue;
                    }
                    let along = vec3::dot(off, ft);
                    // Second-order local estimate, valid only when the
                    // along-track projection stays within the sample
                    // spacing; otherwise the chord bound is close enough.
                    let cand_sq = if along.abs() <= 1.5 * step {
                        let cross_sq = (off_sq - along * along).max(0.0);
                        (s + along).max(0.0).powi(2) + cross_sq
                    } else {
                        (s + off_sq.sqrt()).powi(2)
                    };
                    if cand_sq < best_sq[idx] {
                        best_sq[idx] = cand_sq;
                    }
                }
            });
        }

        let mut values: Vec<f64> = best_sq.into_iter().map(f64::sqrt).collect();
        // Exact chord-series values in the near field (also the bicubic
        // neighbors of near-field queries).
        for (idx, v) in values.iter_mut().enumerate() {
            let chord = vec3::dist(src_amb, node_amb[idx]);
            if chord < 1.5 * Self::near_field_chord_for(r) {
                *v = near_field_distance(&surface, src_amb, node_amb[idx]);
            }
        }
        // Gauss-Seidel relaxation over the 8-neighbor grid graph fills the
        // spots the fan only grazed; edge weights are chord arcs, so every
        // update keeps a valid upper bound.
        for round in 0..6 {
            let flip = round % 2 == 1;
            for ii in 0..N_THETA {
                let i = if flip { N_THETA - 1 - ii } else { ii };
                for jj in 0..N_DPHI {
                    let j = if flip { N_DPHI - 1 - jj } else { jj };
                    let idx = i * N_DPHI + j;
                    let mut v = values[idx];
                    for (di, dj) in [
                        (-1isize, -1isize),
                        (-1, 0),
                        (-1, 1),
                        (0, -1),
                        (0, 1),
                        (1, -1),
                        (1, 0),
                        (1, 1),
                    ] {
                        let ni = (i as isize + di).rem_euclid(N_THETA as isize) as usize;
                        let nj = reflect_index(j as isize + dj, N_DPHI);
                        let nidx = ni * N_DPHI + nj;
                        let w = values[nidx];
                        if w.is_finite() {
                            let cand = w + chord_arc(&surface, node_amb[nidx], node_amb[idx]);
                            if cand < v {
                                v = cand;
                            }
                        }
                    }
                    values[idx] = v;
                }
            }
        }
        for (idx, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                // unreachable in practice; full solve as a safety net
                *v = torus_distance(&torus, src, torus.ambient_to_chart(node_amb[idx]))
                    .map(|g| g.distance)
                    .unwrap_or(f64::INFINITY);
            }
        }

        TorusDistanceField {
            torus,
            source,
            source_amb: torus.chart_to_ambient(source),
            dtheta,
            ddphi,
            values,
            near_field_chord: Self::near_field_chord_for(r),
        }
    }

    fn near_field_chord_for(r_minor: f64) -> f64 {
        0.3 * r_minor
    }

    pub fn source(&self) -> ChartPoint {
        self.source
    }

    /// Approximate geodesic distance from the source to `q`.
    pub fn distance_to(&self, q: ChartPoint) -> f64 {
        let amb = self.torus.chart_to_ambient(q);
        let chord = vec3::dist(self.source_amb, amb);
        if chord < self.near_field_chord {
            return near_field_distance(&Surface::Torus(self.torus), self.source_amb, amb);
        }
        let theta = wrap_angle(q.u);
        let dphi = wrap_angle(q.v - self.source.v).abs();
        let fi = (theta + PI) / self.dtheta;
        let fj = dphi / self.ddphi;
        self.bicubic(fi, fj)
    }

    fn bicubic(&self, fi: f64, fj: f64) -> f64 {
        let i0 = fi.floor();
        let j0 = fj.floor();
        let ti = fi - i0;
        let tj = fj - j0;
        let i0 = i0 as isize;
        let j0 = j0 as isize;
        let wi = catmull_rom(ti);
        let wj = catmull_rom(tj);
        let mut acc = 0.0;
        for (a, wa) in wi.iter().enumerate() {
            let ii = (i0 + a as isize - 1).rem_euclid(N_THETA as isize) as usize;
            let mut row = 0.0;
            for (b, wb) in wj.iter().enumerate() {
                let jj = reflect_index(j0 + b as isize - 1, N_DPHI);
                row += wb * self.values[ii * N_DPHI + jj];
            }
            acc += wa * row;
        }
        acc.max(0.0)
    }
}

#[inline]
fn near_field_distance(surface: &Surface, a: Vec3, b: Vec3) -> f64 {
    shooting::chord_arc(surface, a, b)
}

#[inline]
fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Even reflection of an index into [0, n).
#[inline]
fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Cached field lookup through the manifold engine.
pub(crate) fn source_field(
    spec: &crate::geometry::ManifoldSpec,
    torus: Torus,
    source: ChartPoint,
) -> Arc<TorusDistanceField> {
    let source = normalize(source);
    let key = [source.u.to_bits(), source.v.to_bits()];
    {
        let map = spec.engine().torus_fields.read().unwrap();
        if let Some(f) = map.get(&key) {
            return Arc::clone(f);
        }
    }
    let field = Arc::new(TorusDistanceField::build(torus, source));
    let mut map = spec.engine().torus_fields.write().unwrap();
    Arc::clone(map.entry(key).or_insert(field))
}

#[cfg(test)]
mod tests {
    use super::*;

    const T21: Torus = Torus {
        r_major: 2.0,
        r_minor: 1.0,
    };

    #[test]
    fn identical_points_have_zero_distance() {
        let p = ChartPoint::new(0.0, 0.0);
        assert_eq!(torus_distance(&T21, p, p).unwrap().distance, 0.0);
    }

    #[test]
    fn meridian_arc_is_exact() {
        let r = torus_distance(&T21, ChartPoint::new(0.0, 0.4), ChartPoint::new(PI, 0.4)).unwrap();
        assert!((r.distance - PI).abs() < 1e-12, "got {}", r.distance);
        assert_eq!(r.method, GeodesicMethod::ClosedForm);
    }

    #[test]
    fn inner_equator_arc_is_exact() {
        let r = torus_distance(
            &T21,
            ChartPoint::new(PI, 0.2),
            ChartPoint::new(PI, 1.4),
        )
        .unwrap();
        assert!((r.distance - 1.2).abs() < 1e-12);
    }

    #[test]
    fn outer_equator_short_arc() {
        // Short arcs along the outer equator are geodesic: d = (R + r) dphi.
        let r = torus_distance(&T21, ChartPoint::new(0.0, 0.0), ChartPoint::new(0.0, 0.4)).unwrap();
        assert!((r.distance - 1.2).abs() < 2e-5, "got {}", r.distance);
    }

    #[test]
    fn symmetry_is_exact() {
        let p1 = ChartPoint::new(0.5, 0.2);
        let p2 = ChartPoint::new(-0.8, 2.1);
        let d12 = torus_distance(&T21, p1, p2).unwrap().distance;
        let d21 = torus_distance(&T21, p2, p1).unwrap().distance;
        assert_eq!(d12.to_bits(), d21.to_bits());
    }

    #[test]
    fn field_matches_solver_on_sample_queries() {
        let field = TorusDistanceField::build(T21, ChartPoint::new(0.5, 0.2));
        let mut x = 0.7_f64;
        let mut next = move || {
            x = (x * 9301.0 + 49297.0) % 1.0;
            x
        };
        let mut worst: f64 = 0.0;
        for _ in 0..40 {
            let q = ChartPoint::new((next() - 0.5) * 2.0 * PI, (next() - 0.5) * 2.0 * PI);
            let want = torus_distance(&T21, ChartPoint::new(0.5, 0.2), q)
                .unwrap()
                .distance;
            let got = field.distance_to(q);
            worst = worst.max((got - want).abs() / want.max(0.05));
        }
        assert!(worst < 0.02, "worst relative field error {worst}");
    }
}

