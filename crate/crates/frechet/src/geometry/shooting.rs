//! Geodesic boundary-value solver by initial-direction shooting.
//!
//! Geodesics are integrated in ambient coordinates, where the acceleration
//! is purely normal to the surface: for an implicit surface F = 0,
//! r'' = -(r'^T H_F r' / |grad F|^2) grad F. Integrating in R^3 avoids chart
//! singularities (poles) entirely. Each RK4 step re-projects the state onto
//! the surface and the unit tangent bundle, so the only surviving error is
//! the tangential O(step^4) truncation term.

use crate::geometry::vec3::{self, Vec3};
use crate::geometry::{RotationalEllipsoid, Torus};

/// Implicit surface with the differential data the integrator needs.
#[derive(Debug, Clone, Copy)]
pub enum Surface {
    Ellipsoid(RotationalEllipsoid),
    Torus(Torus),
}

impl Surface {
    #[inline]
    pub fn grad(&self, r: Vec3) -> Vec3 {
        match self {
            Surface::Ellipsoid(e) => {
                let ia = 1.0 / (e.a * e.a);
                let ib = 1.0 / (e.b * e.b);
                [2.0 * r[0] * ia, 2.0 * r[1] * ia, 2.0 * r[2] * ib]
            }
            Surface::Torus(t) => {
                let rho = (r[0] * r[0] + r[1] * r[1]).sqrt();
                let g = rho - t.r_major;
                let k = 2.0 * g / rho;
                [k * r[0], k * r[1], 2.0 * r[2]]
            }
        }
    }

    /// Quadratic form v^T H_F v of the Hessian of the implicit function.
    #[inline]
    pub fn hess_quad(&self, r: Vec3, v: Vec3) -> f64 {
        match self {
            Surface::Ellipsoid(e) => {
                let ia = 1.0 / (e.a * e.a);
                let ib = 1.0 / (e.b * e.b);
                2.0 * (v[0] * v[0] * ia + v[1] * v[1] * ia + v[2] * v[2] * ib)
            }
            Surface::Torus(t) => {
                let rho2 = r[0] * r[0] + r[1] * r[1];
                let rho = rho2.sqrt();
                let g = rho - t.r_major;
                let radial = (r[0] * v[0] + r[1] * v[1]) / rho;
                let vxy2 = v[0] * v[0] + v[1] * v[1];
                2.0 * (radial * radial + g * (vxy2 - radial * radial) / rho + v[2] * v[2])
            }
        }
    }

    /// Orthogonal-ish projection back to the surface. Closed form for the
    /// torus; one or two Newton corrections along the gradient otherwise.
    #[inline]
    pub fn project(&self, r: Vec3) -> Vec3 {
        match self {
            Surface::Ellipsoid(e) => {
                let mut q = r;
                for _ in 0..2 {
                    let ia = 1.0 / (e.a * e.a);
                    let ib = 1.0 / (e.b * e.b);
                    let f = (q[0] * q[0] + q[1] * q[1]) * ia + q[2] * q[2] * ib - 1.0;
                    let g = [2.0 * q[0] * ia, 2.0 * q[1] * ia, 2.0 * q[2] * ib];
                    let step = f / vec3::norm_sq(g);
                    q = vec3::sub(q, vec3::scale(g, step));
                }
                q
            }
            Surface::Torus(t) => {
                let rho = (r[0] * r[0] + r[1] * r[1]).sqrt();
                let c = t.r_major / rho;
                let center = [r[0] * c, r[1] * c, 0.0];
                let d = vec3::sub(r, center);
                vec3::add(center, vec3::scale(d, t.r_minor / vec3::norm(d)))
            }
        }
    }

    /// Smallest radius of normal curvature; sets integration step sizes.
    pub fn feature_radius(&self) -> f64 {
        match self {
            Surface::Ellipsoid(e) => (e.b * e.b / e.a).min(e.b),
            Surface::Torus(t) => t.r_minor,
        }
    }

    /// Outward unit normal.
    #[inline]
    pub fn unit_normal(&self, r: Vec3) -> Vec3 {
        vec3::normalize(self.grad(r))
    }

    fn retangent(&self, r: Vec3, t: Vec3) -> Vec3 {
        let n = self.unit_normal(r);
        let tt = vec3::sub(t, vec3::scale(n, vec3::dot(t, n)));
        vec3::normalize(tt)
    }
}

#[inline]
fn accel(surface: &Surface, r: Vec3, t: Vec3) -> Vec3 {
    let g = surface.grad(r);
    let c = -surface.hess_quad(r, t) / vec3::norm_sq(g);
    vec3::scale(g, c)
}

#[inline]
fn rk4_step(surface: &Surface, r: Vec3, t: Vec3, h: f64) -> (Vec3, Vec3) {
    let a1 = accel(surface, r, t);
    let r2 = vec3::add(r, vec3::scale(t, 0.5 * h));
    let t2 = vec3::add(t, vec3::scale(a1, 0.5 * h));
    let a2 = accel(surface, r2, t2);
    let r3 = vec3::add(r, vec3::scale(t2, 0.5 * h));
    let t3 = vec3::add(t, vec3::scale(a2, 0.5 * h));
    let a3 = accel(surface, r3, t3);
    let r4 = vec3::add(r, vec3::scale(t3, h));
    let t4 = vec3::add(t, vec3::scale(a3, h));
    let a4 = accel(surface, r4, t4);
    let rn = vec3::add(
        r,
        vec3::scale(
            vec3::add(vec3::add(t, vec3::scale(vec3::add(t2, t3), 2.0)), t4),
            h / 6.0,
        ),
    );
    let tn = vec3::add(
        t,
        vec3::scale(
            vec3::add(vec3::add(a1, vec3::scale(vec3::add(a2, a3), 2.0)), a4),
            h / 6.0,
        ),
    );
    let rn = surface.project(rn);
    let tn = surface.retangent(rn, tn);
    (rn, tn)
}

/// Integrates the unit-speed geodesic from `r0` in direction `t0` up to arc
/// length `s_limit`, invoking `visit(s, position, tangent)` at every node
/// (including the start).
pub fn trace_geodesic<F: FnMut(f64, Vec3, Vec3)>(
    surface: &Surface,
    r0: Vec3,
    t0: Vec3,
    s_limit: f64,
    step: f64,
    mut visit: F,
) {
    let mut r = surface.project(r0);
    let mut t = surface.retangent(r, t0);
    let mut s = 0.0;
    visit(s, r, t);
    while s < s_limit {
        let h = step.min(s_limit - s);
        let (rn, tn) = rk4_step(surface, r, t, h);
        s += h;
        r = rn;
        t = tn;
        visit(s, r, t);
    }
}

/// Chord-to-arc correction for nearby surface points:
/// s = c (1 + c^2 kappa_n^2 / 24) + O(c^5), with the normal curvature taken
/// at the chord midpoint.
pub(crate) fn chord_arc(surface: &Surface, a: Vec3, b: Vec3) -> f64 {
    let c = vec3::dist(a, b);
    if c == 0.0 {
        return 0.0;
    }
    let mid = surface.project(vec3::scale(vec3::add(a, b), 0.5));
    let t = vec3::scale(vec3::sub(b, a), 1.0 / c);
    let g = surface.grad(mid);
    let kappa = surface.hess_quad(mid, t) / vec3::norm(g);
    c * (1.0 + c * c * kappa * kappa / 24.0)
}

/// Closest approach of a geodesic to a target point.
#[derive(Debug, Clone, Copy)]
struct Approach {
    s: f64,
    miss: f64,
    /// Signed cross-track offset of the target at closest approach.
    side: f64,
}

/// Quadratic refinement of the closest node triple: interpolates both the
/// arc position and the curve point, then projects back to the surface.
fn refine_triple(surface: &Surface, nodes: &[(f64, Vec3, Vec3, f64)], best: usize) -> (f64, Vec3, Vec3) {
    if best == 0 || best + 1 == nodes.len() {
        let n = &nodes[best];
        return (n.0, n.1, n.2);
    }
    let (d0, d1, d2) = (nodes[best - 1].3, nodes[best].3, nodes[best + 1].3);
    let denom = d0 - 2.0 * d1 + d2;
    let delta = if denom.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (d0 - d2) / denom).clamp(-0.5, 0.5)
    };
    let h = nodes[best + 1].0 - nodes[best].0;
    let rm = nodes[best - 1].1;
    let rp = nodes[best + 1].1;
    let rc = nodes[best].1;
    let first = vec3::scale(vec3::sub(rp, rm), 0.5);
    let second = vec3::add(vec3::sub(rp, vec3::scale(rc, 2.0)), rm);
    let r = surface.project(vec3::add(
        rc,
        vec3::add(
            vec3::scale(first, delta),
            vec3::scale(second, 0.5 * delta * delta),
        ),
    ));
    let t = surface.retangent(r, vec3::sub(rp, rm));
    (nodes[best].0 + delta * h, r, t)
}

fn closest_approach(
    surface: &Surface,
    r0: Vec3,
    dir: Vec3,
    target: Vec3,
    s_limit: f64,
    step: f64,
    polish: bool,
) -> Approach {
    let mut nodes: Vec<(f64, Vec3, Vec3, f64)> = Vec::new();
    trace_geodesic(surface, r0, dir, s_limit, step, |s, r, t| {
        nodes.push((s, r, t, vec3::norm_sq(vec3::sub(r, target))));
    });
    let mut best = 0usize;
    for (i, n) in nodes.iter().enumerate() {
        if n.3 < nodes[best].3 {
            best = i;
        }
    }
    let (s, r, t) = if polish {
        // Re-integrate the bracketing segment with fine steps; the coarse
        // quadratic interpolation alone caps the miss around step^3.
        let lo = best.saturating_sub(1);
        let (s_lo, r_lo, t_lo, _) = nodes[lo];
        let span = (nodes[(best + 1).min(nodes.len() - 1)].0 - s_lo).max(step * 1e-3);
        let fine_step = span / 32.0;
        let mut fine: Vec<(f64, Vec3, Vec3, f64)> = Vec::with_capacity(34);
        trace_geodesic(surface, r_lo, t_lo, span, fine_step, |ds, r, t| {
            fine.push((s_lo + ds, r, t, vec3::norm_sq(vec3::sub(r, target))));
        });
        let mut fb = 0usize;
        for (i, n) in fine.iter().enumerate() {
            if n.3 < fine[fb].3 {
                fb = i;
            }
        }
        refine_triple(surface, &fine, fb)
    } else {
        refine_triple(surface, &nodes, best)
    };
    let off = vec3::sub(target, r);
    let e_side = vec3::normalize(vec3::cross(t, surface.unit_normal(r)));
    Approach {
        s,
        miss: vec3::norm(off),
        side: vec3::dot(off, e_side),
    }
}

/// Tuning knobs for the direction-scan boundary-value solver.
#[derive(Debug, Clone)]
pub struct ShootOptions {
    pub n_scan: usize,
    /// Integration step relative to the surface feature radius.
    pub step_rel: f64,
    /// Acceptance tolerance on the final miss, relative to scale + length.
    pub miss_tol_rel: f64,
    pub max_refine: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            n_scan: 192,
            step_rel: 0.02,
            miss_tol_rel: 3e-8,
            max_refine: 80,
        }
    }
}

/// Length of the shortest geodesic from `from` to `to` found by scanning
/// initial directions and refining every bracketed candidate. `s_max` must
/// upper-bound the true distance. Returns `None` when no candidate reaches
/// the miss tolerance.
pub fn min_geodesic_distance(
    surface: &Surface,
    from: Vec3,
    to: Vec3,
    s_max: f64,
    opts: &ShootOptions,
) -> Option<f64> {
    let from = surface.project(from);
    let to = surface.project(to);
    let chord = vec3::dist(from, to);
    let scale = surface.feature_radius();
    if chord == 0.0 {
        return Some(0.0);
    }
    let step = (opts.step_rel * scale).min(s_max / 16.0);

    // Tangent frame at the start, oriented so psi = 0 points at the target.
    let n = surface.unit_normal(from);
    let toward = vec3::sub(to, from);
    let toward_t = vec3::sub(toward, vec3::scale(n, vec3::dot(toward, n)));
    let e1 = if vec3::norm(toward_t) > 1e-12 * scale {
        vec3::normalize(toward_t)
    } else {
        vec3::any_orthonormal(n)
    };
    let e2 = vec3::cross(n, e1);
    let dir_of = |psi: f64| {
        let (s, c) = psi.sin_cos();
        vec3::add(vec3::scale(e1, c), vec3::scale(e2, s))
    };

    let k = opts.n_scan;
    let dpsi = 2.0 * std::f64::consts::PI / k as f64;
    let mut scans: Vec<Option<Approach>> = vec![None; k];
    let mut ub = s_max;
    // Sweep outward from the straight-at-target heading so an upper bound is
    // found early and later rays are truncated against it.
    for m in 0..k {
        let idx = if m % 2 == 0 { m / 2 } else { k - m.div_ceil(2) };
        let psi = idx as f64 * dpsi;
        let limit = (ub + 4.0 * step).min(s_max);
        let ca = closest_approach(surface, from, dir_of(psi), to, limit, step, false);
        // The chord bounds the remaining surface distance only when the
        // approach is already close; never tighten the truncation bound
        // from a distant pass.
        if ca.miss <= 0.2 * scale && ca.s + 1.1 * ca.miss < ub {
            ub = ca.s + 1.1 * ca.miss;
        }
        scans[idx] = Some(ca);
    }

    // Local minima of the miss over the cyclic direction scan.
    let miss_of = |i: usize| scans[i % k].as_ref().unwrap().miss;
    let mut candidates: Vec<usize> = (0..k)
        .filter(|&i| {
            let m = miss_of(i);
            m <= miss_of(i + k - 1) && m <= miss_of(i + 1) && m < 0.75 * scale + 2.0 * step
        })
        .collect();
    candidates.sort_by(|&a, &b| miss_of(a).total_cmp(&miss_of(b)));
    candidates.truncate(12);

    let mut best: Option<f64> = None;
    let miss_tol = |s: f64| opts.miss_tol_rel * (scale + s) + 1e-12;
    for idx in candidates {
        let limit = (ub + 4.0 * step).min(s_max);
        let eval = |psi: f64| closest_approach(surface, from, dir_of(psi), to, limit, step, true);
        let lo = (idx as f64 - 1.0) * dpsi;
        let hi = (idx as f64 + 1.0) * dpsi;
        let ca_lo = eval(lo);
        let ca_hi = eval(hi);
        let refined = if ca_lo.side.signum() != ca_hi.side.signum() {
            brent_on_side(&eval, lo, hi, ca_lo.side, ca_hi.side, opts.max_refine)
        } else {
            golden_on_miss(&eval, lo, hi, opts.max_refine)
        };
        if let Some(ca) = refined {
            if ca.miss <= miss_tol(ca.s) {
                let total = ca.s + ca.miss;
                best = Some(best.map_or(total, |b: f64| b.min(total)));
                if total < ub {
                    ub = total;
                }
            }
        }
    }
    best
}

/// Polishes a shooting direction inside a known bracket; returns the
/// candidate (arc length, miss) or `None` when nothing improves.
pub(crate) fn refine_direction(
    surface: &Surface,
    from: Vec3,
    e1: Vec3,
    e2: Vec3,
    psi_lo: f64,
    psi_hi: f64,
    target: Vec3,
    s_limit: f64,
    step: f64,
    iters: usize,
) -> Option<(f64, f64)> {
    let eval = |psi: f64| {
        let (s, c) = psi.sin_cos();
        let dir = vec3::add(vec3::scale(e1, c), vec3::scale(e2, s));
        closest_approach(surface, from, dir, target, s_limit, step, true)
    };
    let ca_lo = eval(psi_lo);
    let ca_hi = eval(psi_hi);
    let refined = if ca_lo.side.signum() != ca_hi.side.signum() {
        brent_on_side(&eval, psi_lo, psi_hi, ca_lo.side, ca_hi.side, iters)
    } else {
        golden_on_miss(&eval, psi_lo, psi_hi, iters)
    };
    refined.map(|ca| (ca.s, ca.miss))
}

fn brent_on_side<F: Fn(f64) -> Approach>(
    eval: &F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    max_iter: usize,
) -> Option<Approach> {
    // Bisection with secant acceleration on the signed cross-track offset;
    // keeps the smallest miss seen.
    let mut out: Option<Approach> = None;
    for _ in 0..max_iter {
        let mid = if (fa - fb).abs() > 1e-300 {
            let sec = a - fa * (b - a) / (fb - fa);
            if sec > a && sec < b {
                0.5 * (sec + 0.5 * (a + b))
            } else {
                0.5 * (a + b)
            }
        } else {
            0.5 * (a + b)
        };
        let ca = eval(mid);
        if out.is_none_or(|o| ca.miss < o.miss) {
            out = Some(ca);
        }
        if ca.miss < 1e-13 || (b - a).abs() < 1e-15 {
            return out;
        }
        if ca.side.signum() == fa.signum() {
            a = mid;
            fa = ca.side;
        } else {
            b = mid;
            fb = ca.side;
        }
    }
    out
}

fn golden_on_miss<F: Fn(f64) -> Approach>(
    eval: &F,
    mut a: f64,
    mut b: f64,
    max_iter: usize,
) -> Option<Approach> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..max_iter {
        if f1.miss < f2.miss {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2);
        }
        if (b - a).abs() < 1e-14 {
            break;
        }
    }
    Some(if f1.miss < f2.miss { f1 } else { f2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn shooting_recovers_great_circle_on_unit_sphere_limit() {
        let e = RotationalEllipsoid { a: 1.0, b: 1.0 };
        let s = Surface::Ellipsoid(e);
        let d = min_geodesic_distance(&s, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], PI, &ShootOptions::default())
            .unwrap();
        assert!((d - PI / 2.0).abs() < 2e-6, "got {d}");
    }

    #[test]
    fn shooting_follows_torus_meridian() {
        let t = Torus { r_major: 2.0, r_minor: 1.0 };
        let s = Surface::Torus(t);
        // (theta, phi) = (0, 0) -> (pi/2, 0): quarter meridian, length pi/2.
        let d = min_geodesic_distance(&s, [3.0, 0.0, 0.0], [2.0, 0.0, 1.0], 4.0, &ShootOptions::default())
            .unwrap();
        assert!((d - PI / 2.0).abs() < 2e-6, "got {d}");
    }

    #[test]
    fn clairaut_invariant_is_conserved_along_torus_geodesics() {
        let t = Torus { r_major: 2.0, r_minor: 1.0 };
        let s = Surface::Torus(t);
        let from = t.chart_to_ambient(crate::geometry::ChartPoint::new(0.7, -1.1));
        let n = s.unit_normal(from);
        let e1 = vec3::any_orthonormal(n);
        let e2 = vec3::cross(n, e1);
        let dir = vec3::add(vec3::scale(e1, 0.6), vec3::scale(e2, 0.8));
        let mut c0 = None;
        let mut worst: f64 = 0.0;
        trace_geodesic(&s, from, dir, 6.0, 0.01, |_, r, tv| {
            // rho * sin(heading) where heading is against the meridian frame
            let rho = (r[0] * r[0] + r[1] * r[1]).sqrt();
            let e_phi = vec3::normalize([-r[1], r[0], 0.0]);
            let c = rho * vec3::dot(tv, e_phi);
            match c0 {
                None => c0 = Some(c),
                Some(c0) => worst = worst.max((c - c0).abs()),
            }
        });
        assert!(worst < 1e-6, "Clairaut drift {worst}");
    }
}
