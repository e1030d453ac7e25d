//! Closed-form geodesics and the exponential map on the unit sphere.

use crate::error::{FrechetError, Result};
use crate::geometry::vec3::{self, Vec3};
use crate::geometry::{GeodesicMethod, GeodesicResult};

const UNIT_TOL: f64 = 1e-10;
const TANGENT_TOL: f64 = 1e-10;

fn check_unit(p: Vec3) -> Result<()> {
    let residual = (vec3::norm_sq(p) - 1.0).abs();
    if residual > UNIT_TOL {
        return Err(FrechetError::OffManifold {
            space: "unit sphere",
            residual,
            tol: UNIT_TOL,
        });
    }
    Ok(())
}

/// Great-circle distance between two points of S^2: arccos of the clamped
/// inner product.
pub fn sphere_distance(p1: Vec3, p2: Vec3) -> Result<GeodesicResult> {
    check_unit(p1)?;
    check_unit(p2)?;
    // Canonical argument order makes d(p, q) bit-identical to d(q, p).
    let (p1, p2) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
    let c = vec3::dot(p1, p2).clamp(-1.0, 1.0);
    Ok(GeodesicResult {
        distance: c.acos(),
        method: GeodesicMethod::ClosedForm,
        est_abs_error: 1e-14,
    })
}

/// Riemannian exponential map on S^2:
/// Exp_s(U) = cos(|U|) s + sin(|U|) U/|U|, with Exp_s(0) = s.
pub fn sphere_exp_map(base: Vec3, tangent: Vec3) -> Result<Vec3> {
    check_unit(base)?;
    let dot = vec3::dot(base, tangent);
    if dot.abs() >= TANGENT_TOL {
        return Err(FrechetError::NotTangent { dot });
    }
    let norm = vec3::norm(tangent);
    if norm == 0.0 {
        return Ok(base);
    }
    let (s, c) = norm.sin_cos();
    Ok(vec3::add(
        vec3::scale(base, c),
        vec3::scale(tangent, s / norm),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn distance_closed_form_values() {
        let d = |p, q| sphere_distance(p, q).unwrap().distance;
        assert_eq!(d([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]), 0.0);
        assert!((d([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) - PI / 2.0).abs() < 1e-15);
        assert!((d([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]) - PI).abs() < 1e-15);
    }

    #[test]
    fn distance_rejects_off_sphere_points() {
        assert!(sphere_distance([1.1, 0.0, 0.0], [0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn exp_map_known_values() {
        let p = sphere_exp_map([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, [0.0, 0.0, 1.0]);
        let p = sphere_exp_map([0.0, 0.0, 1.0], [PI / 2.0, 0.0, 0.0]).unwrap();
        assert!(vec3::dist(p, [1.0, 0.0, 0.0]) < 1e-15);
        let p = sphere_exp_map([1.0, 0.0, 0.0], [0.0, PI, 0.0]).unwrap();
        assert!(vec3::dist(p, [-1.0, 0.0, 0.0]) < 1e-15);
    }

    #[test]
    fn exp_map_rejects_non_tangent_input() {
        let err = sphere_exp_map([0.0, 0.0, 1.0], [0.0, 0.1, 0.2]).unwrap_err();
        assert!(matches!(err, FrechetError::NotTangent { .. }));
    }

    #[test]
    fn exp_map_lands_on_sphere() {
        let base = vec3::normalize([0.3, -0.5, 0.81]);
        let t0 = vec3::any_orthonormal(base);
        let t = vec3::scale(t0, 2.31);
        let p = sphere_exp_map(base, t).unwrap();
        assert!((vec3::norm_sq(p) - 1.0).abs() < 1e-10);
        // geodesic distance traveled equals |U| (mod wrapping)
        let d = sphere_distance(base, p).unwrap().distance;
        assert!((d - (2.0 * PI - 2.31).min(2.31)).abs() < 1e-12);
    }
}
