//! Inverse geodesic problem on a rotational ellipsoid.
//!
//! The solver works on the auxiliary sphere: the chart latitude `u` is the
//! parametric latitude, so a geodesic corresponds to a great circle whose
//! azimuth/latitude relation is exact. With arc position `sigma` measured
//! from the equator crossing and `k = e' cos(alpha0)`,
//!
//!   s      = b * I1,   I1 = integral of sqrt(1 + k^2 sin^2 t),
//!   lambda = omega - f * sin(alpha0) * I3,
//!   I3     = integral of (2 - f) / (1 + (1 - f) sqrt(1 + k^2 sin^2 t)),
//!
//! where `omega` is the spherical longitude difference and `lambda` the
//! ellipsoidal one. Both integrals are evaluated by panel Gauss–Legendre
//! quadrature rather than truncated flattening series, so the fixed-point /
//! bracketed iteration stays accurate for strongly oblate shapes (f = 0.5).

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{FrechetError, Result};
use crate::geometry::shooting::{self, ShootOptions};
use crate::geometry::{ChartPoint, GeodesicMethod, GeodesicResult, RotationalEllipsoid};
use crate::numeric::{brent_root, quad_panels, wrap_angle};

const OMEGA_TOL: f64 = 1e-12;
const MAX_EVALS: usize = 200;
const PANEL: f64 = PI / 4.0;

/// Solution of the auxiliary-sphere triangle for a trial spherical
/// longitude difference.
struct AuxTriangle {
    sigma1: f64,
    sigma2: f64,
    sin_alpha0: f64,
    k2: f64,
}

fn aux_triangle(beta1: f64, beta2: f64, omega: f64, ep2: f64) -> AuxTriangle {
    let (sb1, cb1) = beta1.sin_cos();
    let (sb2, cb2) = beta2.sin_cos();
    let (sw, cw) = omega.sin_cos();
    let a = cb2 * sw;
    let b = cb1 * sb2 - sb1 * cb2 * cw;
    let sin_sigma = a.hypot(b);
    let cos_sigma = sb1 * sb2 + cb1 * cb2 * cw;
    let sigma = sin_sigma.atan2(cos_sigma);
    let (sin_a1, cos_a1) = if sin_sigma == 0.0 {
        (0.0, 1.0)
    } else {
        (a / sin_sigma, b / sin_sigma)
    };
    let sin_alpha0 = (sin_a1 * cb1).clamp(-1.0, 1.0);
    let k2 = ep2 * (1.0 - sin_alpha0 * sin_alpha0);
    let sigma1 = sb1.atan2(cb1 * cos_a1);
    AuxTriangle {
        sigma1,
        sigma2: sigma1 + sigma,
        sin_alpha0,
        k2,
    }
}

fn arc_integral(tri: &AuxTriangle, b: f64) -> f64 {
    let k2 = tri.k2;
    let f = |t: f64| {
        let s = t.sin();
        (1.0 + k2 * s * s).sqrt()
    };
    b * quad_panels(&f, tri.sigma1, tri.sigma2, PANEL)
}

fn longitude(tri: &AuxTriangle, omega: f64, flat: f64) -> f64 {
    if tri.sin_alpha0 == 0.0 || flat == 0.0 {
        return omega;
    }
    let k2 = tri.k2;
    let g = |t: f64| {
        let s = t.sin();
        (2.0 - flat) / (1.0 + (1.0 - flat) * (1.0 + k2 * s * s).sqrt())
    };
    omega - flat * tri.sin_alpha0 * quad_panels(&g, tri.sigma1, tri.sigma2, PANEL)
}

/// Meridian arc length between parametric latitudes `b1 <= b2`.
pub fn meridian_arc(e: &RotationalEllipsoid, b1: f64, b2: f64) -> f64 {
    let ep2 = e.ep2();
    let f = |t: f64| {
        let s = t.sin();
        (1.0 + ep2 * s * s).sqrt()
    };
    e.b * quad_panels(&f, b1.min(b2), b1.max(b2), PANEL)
}

/// Half the meridian circumference; also the surface diameter bound used to
/// detect suspicious (possibly non-minimizing) solutions.
pub fn half_meridian(e: &RotationalEllipsoid) -> f64 {
    meridian_arc(e, -FRAC_PI_2, FRAC_PI_2)
}

fn normalize_latlon(p: ChartPoint) -> ChartPoint {
    let mut u = wrap_angle(p.u);
    let mut v = p.v;
    if u > FRAC_PI_2 {
        u = PI - u;
        v += PI;
    } else if u < -FRAC_PI_2 {
        u = -PI - u;
        v += PI;
    }
    if (u.abs() - FRAC_PI_2).abs() < 1e-15 {
        ChartPoint::new(u.clamp(-FRAC_PI_2, FRAC_PI_2), 0.0)
    } else {
        ChartPoint::new(u, wrap_angle(v))
    }
}

/// Inverse geodesic distance on a rotational ellipsoid (a >= b).
///
/// Auxiliary-sphere iteration with exact integrals; over-the-pole meridian
/// routes handle the antipodal-longitude case, and an ODE-shooting scan is
/// the fallback when the iteration cannot bracket a solution.
pub fn ellipsoid_distance(
    e: &RotationalEllipsoid,
    p1: ChartPoint,
    p2: ChartPoint,
) -> Result<GeodesicResult> {
    if !(e.a >= e.b && e.b > 0.0) {
        return Err(FrechetError::InvalidInput(format!(
            "ellipsoid requires a >= b > 0, got a = {}, b = {}",
            e.a, e.b
        )));
    }
    let p1 = normalize_latlon(p1);
    let p2 = normalize_latlon(p2);
    // Canonical argument order: d(p, q) is bit-identical to d(q, p).
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

    let beta1 = p1.u;
    let beta2 = p2.u;
    let lon = wrap_angle(p2.v - p1.v).abs();
    let flat = e.flattening();
    let ep2 = e.ep2();
    let scale = e.a;

    // Antipodal longitudes: the minimizer lies in the common meridian plane;
    // take the shorter of the two over-the-pole routes.
    if (lon - PI).abs() < 1e-12 {
        let north = meridian_arc(e, beta1, FRAC_PI_2) + meridian_arc(e, beta2, FRAC_PI_2);
        let south = meridian_arc(e, -FRAC_PI_2, beta1) + meridian_arc(e, -FRAC_PI_2, beta2);
        let d = north.min(south);
        return Ok(GeodesicResult {
            distance: d,
            method: GeodesicMethod::ClosedForm,
            est_abs_error: 1e-12 * (scale + d),
        });
    }

    let lambda_err = |omega: f64| -> f64 {
        let tri = aux_triangle(beta1, beta2, omega, ep2);
        longitude(&tri, omega, flat) - lon
    };

    let hi = PI - 1e-9;
    let f_lo = lambda_err(lon);
    let f_hi = lambda_err(hi);
    if f_hi < 0.0 {
        // Effectively antipodal; the meridian-plane answer is exact in the
        // limit and the shooting scan confirms it.
        let north = meridian_arc(e, beta1, FRAC_PI_2) + meridian_arc(e, beta2, FRAC_PI_2);
        let south = meridian_arc(e, -FRAC_PI_2, beta1) + meridian_arc(e, -FRAC_PI_2, beta2);
        let planar = north.min(south);
        let shot = shoot_fallback(e, p1, p2, planar);
        let d = shot.map_or(planar, |s| s.min(planar));
        return Ok(GeodesicResult {
            distance: d,
            method: GeodesicMethod::OdeShooting,
            est_abs_error: 1e-6 * (scale + d),
        });
    }

    let omega = match brent_root(lambda_err, lon, hi, f_lo, f_hi, OMEGA_TOL, MAX_EVALS) {
        Some(w) => w,
        None => {
            let shot = shoot_fallback(e, p1, p2, half_meridian(e)).ok_or_else(|| {
                FrechetError::Numeric {
                    context: "ellipsoid_distance",
                    message: format!(
                        "auxiliary-sphere iteration failed to bracket and shooting \
                         found no geodesic for ({}, {}) -> ({}, {})",
                        p1.u, p1.v, p2.u, p2.v
                    ),
                }
            })?;
            return Ok(GeodesicResult {
                distance: shot,
                method: GeodesicMethod::OdeShooting,
                est_abs_error: 1e-6 * (scale + shot),
            });
        }
    };

    let tri = aux_triangle(beta1, beta2, omega, ep2);
    let mut dist = arc_integral(&tri, e.b);

    // Distances approaching the surface diameter can belong to a
    // non-minimizing branch; enumerate all roots of the longitude equation
    // and keep the shortest.
    if dist > 0.9 * half_meridian(e) && flat > 0.0 {
        let n = 64;
        let mut prev_w = lon;
        let mut prev_f = f_lo;
        for i in 1..=n {
            let w = lon + (hi - lon) * i as f64 / n as f64;
            let fw = lambda_err(w);
            if prev_f == 0.0 || prev_f.signum() != fw.signum() {
                if let Some(root) =
                    brent_root(lambda_err, prev_w, w, prev_f, fw, OMEGA_TOL, MAX_EVALS)
                {
                    let tri = aux_triangle(beta1, beta2, root, ep2);
                    dist = dist.min(arc_integral(&tri, e.b));
                }
            }
            prev_w = w;
            prev_f = fw;
        }
    }

    Ok(GeodesicResult {
        distance: dist,
        method: GeodesicMethod::Iterative,
        est_abs_error: 1e-11 * (scale + dist),
    })
}

fn coincident(p1: ChartPoint, p2: ChartPoint) -> bool {
    let tol = crate::geometry::COINCIDENT_CHART_TOL;
    let at_pole = (p1.u.abs() - FRAC_PI_2).abs() <= tol && (p2.u.abs() - FRAC_PI_2).abs() <= tol;
    (p1.u - p2.u).abs() <= tol && (at_pole || wrap_angle(p1.v - p2.v).abs() <= tol)
}

fn shoot_fallback(e: &RotationalEllipsoid, p1: ChartPoint, p2: ChartPoint, upper: f64) -> Option<f64> {
    let a1 = e.chart_to_ambient(p1);
    let a2 = e.chart_to_ambient(p2);
    shooting::min_geodesic_distance(
        &shooting::Surface::Ellipsoid(*e),
        a1,
        a2,
        1.05 * upper + 0.1 * e.a,
        &ShootOptions::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vec3;

    const E21: RotationalEllipsoid = RotationalEllipsoid { a: 2.0, b: 1.0 };

    #[test]
    fn sphere_limit_quarter_circle() {
        let e = RotationalEllipsoid { a: 1.0, b: 1.0 };
        let r = ellipsoid_distance(&e, ChartPoint::new(0.0, 0.0), ChartPoint::new(0.0, FRAC_PI_2))
            .unwrap();
        assert!((r.distance - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn sphere_limit_matches_arccos_on_random_pairs() {
        let e = RotationalEllipsoid { a: 1.0, b: 1.0 };
        let mut x = 0.37_f64;
        let mut next = move || {
            x = (x * 9301.0 + 49297.0) % 1.0;
            x
        };
        for _ in 0..300 {
            let p1 = ChartPoint::new((next() - 0.5) * PI * 0.999, (next() - 0.5) * 2.0 * PI);
            let p2 = ChartPoint::new((next() - 0.5) * PI * 0.999, (next() - 0.5) * 2.0 * PI);
            let got = ellipsoid_distance(&e, p1, p2).unwrap().distance;
            let want = vec3::dot(e.chart_to_ambient(p1), e.chart_to_ambient(p2))
                .clamp(-1.0, 1.0)
                .acos();
            assert!(
                (got - want).abs() <= 1e-7 * want.max(1e-3),
                "sphere limit mismatch: {got} vs {want} at {p1:?}, {p2:?}"
            );
        }
    }

    #[test]
    fn meridian_pair_is_meridian_arc() {
        let d = ellipsoid_distance(&E21, ChartPoint::new(-0.4, 1.0), ChartPoint::new(0.9, 1.0))
            .unwrap()
            .distance;
        let want = meridian_arc(&E21, -0.4, 0.9);
        assert!((d - want).abs() < 1e-9);
    }

    #[test]
    fn equatorial_quarter_turn_follows_equator() {
        // Short equatorial arcs are minimizing; d = a * dv.
        let d = ellipsoid_distance(&E21, ChartPoint::new(0.0, 0.0), ChartPoint::new(0.0, 1.0))
            .unwrap()
            .distance;
        assert!((d - 2.0).abs() < 1e-8, "got {d}");
    }

    #[test]
    fn antipodal_equatorial_pair_goes_over_the_pole() {
        // For antipodal equatorial points the equator (length 2 pi) is a
        // geodesic but not minimizing: the meridian route is shorter.
        let r = ellipsoid_distance(&E21, ChartPoint::new(0.0, 0.0), ChartPoint::new(0.0, PI))
            .unwrap();
        let want = half_meridian(&E21);
        assert!((r.distance - want).abs() < 1e-9, "got {}", r.distance);
        assert!(r.distance < 2.0 * PI);
    }

    #[test]
    fn symmetry_is_exact() {
        let p1 = ChartPoint::new(0.3, 0.1);
        let p2 = ChartPoint::new(-0.2, 1.4);
        let d12 = ellipsoid_distance(&E21, p1, p2).unwrap().distance;
        let d21 = ellipsoid_distance(&E21, p2, p1).unwrap().distance;
        assert_eq!(d12.to_bits(), d21.to_bits());
    }

    #[test]
    fn coincident_points_have_zero_distance() {
        let r = ellipsoid_distance(&E21, ChartPoint::new(0.3, 0.4), ChartPoint::new(0.3, 0.4))
            .unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn pole_to_pole_is_half_meridian_ellipse() {
        let r = ellipsoid_distance(
            &E21,
            ChartPoint::new(FRAC_PI_2, 0.0),
            ChartPoint::new(-FRAC_PI_2, 0.0),
        )
        .unwrap();
        let want = half_meridian(&E21);
        assert!((r.distance - want).abs() < 1e-9);
    }
}
