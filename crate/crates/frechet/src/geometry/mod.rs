//! Metric spaces supported as response domains: the unit sphere, rotational
//! ellipsoids, tori, and finite-dimensional Euclidean space, together with
//! their charts, geodesic solvers, and a mesh-based validation oracle.

pub mod ellipsoid;
pub mod mesh;
pub mod shooting;
pub mod sphere;
pub mod torus;
pub mod vec3;

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{FrechetError, Result};
use crate::numeric::wrap_angle;
use mesh::ChartMesh;
use torus::TorusDistanceField;
use vec3::Vec3;

/// Chart coordinates: `(u, v)` latitude/longitude on the sphere and
/// ellipsoid, `(theta, phi)` minor/major angle on the torus. Radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub u: f64,
    pub v: f64,
}

impl ChartPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// A point of a [`ManifoldSpec`]: chart coordinates for the two-dimensional
/// surfaces, a coordinate vector for Euclidean space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Chart(ChartPoint),
    Euclid(Vec<f64>),
}

impl Point {
    pub fn chart(u: f64, v: f64) -> Self {
        Point::Chart(ChartPoint::new(u, v))
    }

    pub fn as_chart(&self) -> Result<ChartPoint> {
        match self {
            Point::Chart(c) => Ok(*c),
            Point::Euclid(_) => Err(FrechetError::InvalidInput(
                "expected a chart point, got a Euclidean point".into(),
            )),
        }
    }

    pub fn as_euclid(&self) -> Result<&[f64]> {
        match self {
            Point::Euclid(c) => Ok(c),
            Point::Chart(_) => Err(FrechetError::InvalidInput(
                "expected a Euclidean point, got a chart point".into(),
            )),
        }
    }
}

/// How a geodesic distance was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeodesicMethod {
    ClosedForm,
    Iterative,
    OdeShooting,
    MeshOracle,
}

/// A geodesic distance together with its provenance and an estimate of the
/// absolute error actually achieved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicResult {
    pub distance: f64,
    pub method: GeodesicMethod,
    pub est_abs_error: f64,
}

/// Rotational (oblate) ellipsoid x^2/a^2 + y^2/a^2 + z^2/b^2 = 1 with
/// equatorial radius `a` and polar semi-axis `b`, a >= b > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationalEllipsoid {
    pub a: f64,
    pub b: f64,
}

/// Torus of revolution about the z-axis: (sqrt(x^2+y^2) - R)^2 + z^2 = r^2
/// with major radius `r_major` = R and minor radius `r_minor` = r, 0 < r < R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Torus {
    pub r_major: f64,
    pub r_minor: f64,
}

/// The supported metric spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    /// Unit sphere S^2.
    Sphere,
    Ellipsoid { a: f64, b: f64 },
    Torus { r_major: f64, r_minor: f64 },
    Euclidean { dim: usize },
}

/// Runtime state attached to a manifold: the instrumented geodesic-call
/// counter and read-mostly caches (torus distance fields, oracle meshes).
/// Shared by clones of the owning [`ManifoldSpec`].
#[derive(Debug, Default)]
pub(crate) struct Engine {
    pub(crate) distance_calls: AtomicU64,
    pub(crate) torus_fields: RwLock<HashMap<[u64; 2], Arc<TorusDistanceField>>>,
    pub(crate) meshes: RwLock<HashMap<usize, Arc<ChartMesh>>>,
}

/// A metric space with its chart parameterization and geodesic engine.
///
/// Cloning is cheap and shares the underlying caches and call counter.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "ManifoldKind", into = "ManifoldKind")]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    engine: Arc<Engine>,
}

impl PartialEq for ManifoldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl From<ManifoldKind> for ManifoldSpec {
    fn from(kind: ManifoldKind) -> Self {
        ManifoldSpec {
            kind,
            engine: Arc::new(Engine::default()),
        }
    }
}

impl From<ManifoldSpec> for ManifoldKind {
    fn from(s: ManifoldSpec) -> Self {
        s.kind
    }
}

pub const SURFACE_TOL: f64 = 1e-8;
pub const COINCIDENT_CHART_TOL: f64 = 1e-12;

impl ManifoldSpec {
    pub fn sphere() -> Self {
        ManifoldKind::Sphere.into()
    }

    pub fn ellipsoid(a: f64, b: f64) -> Result<Self> {
        if !(a >= b && b > 0.0) {
            return Err(FrechetError::InvalidInput(format!(
                "ellipsoid requires a >= b > 0, got a = {a}, b = {b}"
            )));
        }
        Ok(ManifoldKind::Ellipsoid { a, b }.into())
    }

    pub fn torus(r_major: f64, r_minor: f64) -> Result<Self> {
        if !(r_minor > 0.0 && r_minor < r_major) {
            return Err(FrechetError::InvalidInput(format!(
                "torus requires 0 < r < R, got R = {r_major}, r = {r_minor}"
            )));
        }
        Ok(ManifoldKind::Torus { r_major, r_minor }.into())
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(FrechetError::InvalidInput(
                "Euclidean space needs dimension >= 1".into(),
            ));
        }
        Ok(ManifoldKind::Euclidean { dim }.into())
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ManifoldKind::Sphere => "sphere",
            ManifoldKind::Ellipsoid { .. } => "ellipsoid",
            ManifoldKind::Torus { .. } => "torus",
            ManifoldKind::Euclidean { .. } => "euclidean",
        }
    }

    pub fn is_chart(&self) -> bool {
        !matches!(self.kind, ManifoldKind::Euclidean { .. })
    }

    pub(crate) fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    fn as_ellipsoid_params(&self) -> RotationalEllipsoid {
        match self.kind {
            ManifoldKind::Sphere => RotationalEllipsoid { a: 1.0, b: 1.0 },
            ManifoldKind::Ellipsoid { a, b } => RotationalEllipsoid { a, b },
            _ => unreachable!("not an ellipsoid-like manifold"),
        }
    }

    /// Number of geodesic distance evaluations performed through this spec
    /// (and its clones) since construction or the last reset.
    pub fn geodesic_calls(&self) -> u64 {
        self.engine.distance_calls.load(Ordering::Relaxed)
    }

    pub fn reset_geodesic_calls(&self) {
        self.engine.distance_calls.store(0, Ordering::Relaxed);
    }

    #[inline]
    pub(crate) fn count_distance_call(&self) {
        self.engine.distance_calls.fetch_add(1, Ordering::Relaxed);
    }

    /// Normalizes chart coordinates into their canonical ranges: `v` (and
    /// the torus `u`) wrap to [-pi, pi); the latitude reflects through the
    /// poles. At a pole the longitude is fixed to 0 by convention.
    pub fn normalize_chart(&self, p: ChartPoint) -> ChartPoint {
        match self.kind {
            ManifoldKind::Torus { .. } => ChartPoint::new(wrap_angle(p.u), wrap_angle(p.v)),
            ManifoldKind::Sphere | ManifoldKind::Ellipsoid { .. } => {
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
            ManifoldKind::Euclidean { .. } => p,
        }
    }

    /// Exact chart parameterization.
    pub fn chart_to_ambient(&self, p: ChartPoint) -> Result<Vec3> {
        let p = self.normalize_chart(p);
        match self.kind {
            ManifoldKind::Sphere | ManifoldKind::Ellipsoid { .. } => {
                Ok(self.as_ellipsoid_params().chart_to_ambient(p))
            }
            ManifoldKind::Torus { r_major, r_minor } => Ok(Torus { r_major, r_minor }.chart_to_ambient(p)),
            ManifoldKind::Euclidean { .. } => Err(FrechetError::InvalidInput(
                "Euclidean space has no chart parameterization".into(),
            )),
        }
    }

    /// Inverse chart map; the ambient point must satisfy the surface
    /// equation within [`SURFACE_TOL`].
    pub fn ambient_to_chart(&self, q: Vec3) -> Result<ChartPoint> {
        let residual = self.surface_residual(&q)?;
        if residual > SURFACE_TOL {
            return Err(FrechetError::OffManifold {
                space: self.name(),
                residual,
                tol: SURFACE_TOL,
            });
        }
        match self.kind {
            ManifoldKind::Sphere | ManifoldKind::Ellipsoid { .. } => {
                Ok(self.as_ellipsoid_params().ambient_to_chart(q))
            }
            ManifoldKind::Torus { r_major, r_minor } => Ok(Torus { r_major, r_minor }.ambient_to_chart(q)),
            ManifoldKind::Euclidean { .. } => Err(FrechetError::InvalidInput(
                "Euclidean space has no chart parameterization".into(),
            )),
        }
    }

    /// Absolute residual of the defining surface equation at `q`
    /// (0 for Euclidean points of the right dimension).
    pub fn point_residual(&self, p: &Point) -> Result<f64> {
        match (&self.kind, p) {
            (ManifoldKind::Euclidean { dim }, Point::Euclid(c)) => {
                if c.len() == *dim {
                    Ok(0.0)
                } else {
                    Err(FrechetError::InvalidInput(format!(
                        "expected dimension {dim}, got {}",
                        c.len()
                    )))
                }
            }
            (_, Point::Chart(_)) if self.is_chart() => Ok(0.0),
            _ => Err(FrechetError::InvalidInput(
                "point representation does not match the manifold".into(),
            )),
        }
    }

    fn surface_residual(&self, q: &Vec3) -> Result<f64> {
        match self.kind {
            ManifoldKind::Sphere | ManifoldKind::Ellipsoid { .. } => {
                Ok(self.as_ellipsoid_params().residual(*q))
            }
            ManifoldKind::Torus { r_major, r_minor } => Ok(Torus { r_major, r_minor }.residual(*q)),
            ManifoldKind::Euclidean { .. } => Err(FrechetError::InvalidInput(
                "Euclidean space has no surface equation".into(),
            )),
        }
    }

    /// Ambient coordinates of a point (chart points are mapped through the
    /// parameterization; Euclidean points are returned as-is).
    pub fn ambient(&self, p: &Point) -> Result<Vec<f64>> {
        match p {
            Point::Chart(c) => Ok(self.chart_to_ambient(*c)?.to_vec()),
            Point::Euclid(c) => {
                self.point_residual(p)?;
                Ok(c.clone())
            }
        }
    }

    /// Geodesic distance between two points of this space.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<GeodesicResult> {
        self.count_distance_call();
        match self.kind {
            ManifoldKind::Euclidean { .. } => {
                let a = p.as_euclid()?;
                let b = q.as_euclid()?;
                self.point_residual(p)?;
                self.point_residual(q)?;
                let d = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                Ok(GeodesicResult {
                    distance: d,
                    method: GeodesicMethod::ClosedForm,
                    est_abs_error: 1e-15 * d,
                })
            }
            ManifoldKind::Sphere => {
                let a = self.chart_to_ambient(p.as_chart()?)?;
                let b = self.chart_to_ambient(q.as_chart()?)?;
                sphere::sphere_distance(a, b)
            }
            ManifoldKind::Ellipsoid { .. } => {
                let e = self.as_ellipsoid_params();
                ellipsoid::ellipsoid_distance(&e, p.as_chart()?, q.as_chart()?)
            }
            ManifoldKind::Torus { r_major, r_minor } => {
                let t = Torus { r_major, r_minor };
                torus::torus_distance(&t, p.as_chart()?, q.as_chart()?)
            }
        }
    }

    /// Convenience accessor for `distance(..).distance`.
    pub fn distance_value(&self, p: &Point, q: &Point) -> Result<f64> {
        Ok(self.distance(p, q)?.distance)
    }

    /// Brute-force validation oracle: shortest path on a triangulated chart
    /// grid, refined through `levels` (level n uses an n x 2n grid).
    pub fn mesh_oracle_distance(
        &self,
        p: &Point,
        q: &Point,
        levels: &[usize],
    ) -> Result<GeodesicResult> {
        mesh::mesh_oracle_distance(self, p.as_chart()?, q.as_chart()?, levels)
    }

    /// Chart-tolerance equality test used by the `distance = 0` contract.
    pub fn chart_coincident(&self, p: ChartPoint, q: ChartPoint) -> bool {
        let p = self.normalize_chart(p);
        let q = self.normalize_chart(q);
        let du = (p.u - q.u).abs();
        let dv = wrap_angle(p.v - q.v).abs();
        match self.kind {
            ManifoldKind::Sphere | ManifoldKind::Ellipsoid { .. } => {
                let at_pole = (p.u.abs() - FRAC_PI_2).abs() <= COINCIDENT_CHART_TOL
                    && (q.u.abs() - FRAC_PI_2).abs() <= COINCIDENT_CHART_TOL;
                du <= COINCIDENT_CHART_TOL && (at_pole || dv <= COINCIDENT_CHART_TOL)
            }
            _ => du <= COINCIDENT_CHART_TOL && dv <= COINCIDENT_CHART_TOL,
        }
    }
}

/// Distances from one fixed source point through the fastest backend the
/// space offers: closed form on the sphere and in Euclidean space, the
/// auxiliary-sphere solver on the ellipsoid, and the cached per-source
/// distance field on the torus. Estimator objectives query these handles;
/// every query counts as a geodesic call.
#[derive(Debug, Clone)]
pub struct SourceDistance {
    spec: ManifoldSpec,
    inner: SourceInner,
}

#[derive(Debug, Clone)]
enum SourceInner {
    Euclid(Vec<f64>),
    Sphere(Vec3),
    Ellipsoid {
        e: RotationalEllipsoid,
        src: ChartPoint,
    },
    Torus(Arc<TorusDistanceField>),
}

impl ManifoldSpec {
    /// Prepares a per-source distance handle for repeated queries.
    pub fn source_distance(&self, p: &Point) -> Result<SourceDistance> {
        let inner = match self.kind {
            ManifoldKind::Euclidean { .. } => {
                self.point_residual(p)?;
                SourceInner::Euclid(p.as_euclid()?.to_vec())
            }
            ManifoldKind::Sphere => SourceInner::Sphere(self.chart_to_ambient(p.as_chart()?)?),
            ManifoldKind::Ellipsoid { .. } => SourceInner::Ellipsoid {
                e: self.as_ellipsoid_params(),
                src: self.normalize_chart(p.as_chart()?),
            },
            ManifoldKind::Torus { r_major, r_minor } => {
                let t = Torus { r_major, r_minor };
                SourceInner::Torus(torus::source_field(self, t, p.as_chart()?))
            }
        };
        Ok(SourceDistance {
            spec: self.clone(),
            inner,
        })
    }
}

impl SourceDistance {
    /// Distance from the source to a chart point. Infallible by design:
    /// internal solver failures surface as infinity, which optimizers avoid.
    pub fn to_chart(&self, q: ChartPoint) -> f64 {
        self.spec.count_distance_call();
        match &self.inner {
            SourceInner::Sphere(src) => {
                let amb = self
                    .spec
                    .chart_to_ambient(q)
                    .expect("sphere chart conversion cannot fail");
                vec3::dot(*src, amb).clamp(-1.0, 1.0).acos()
            }
            SourceInner::Ellipsoid { e, src } => {
                match ellipsoid::ellipsoid_distance(e, *src, q) {
                    Ok(r) => r.distance,
                    Err(_) => f64::INFINITY,
                }
            }
            SourceInner::Torus(field) => field.distance_to(q),
            SourceInner::Euclid(_) => f64::INFINITY,
        }
    }

    /// Distance from the source to a Euclidean point.
    pub fn to_euclid(&self, q: &[f64]) -> f64 {
        self.spec.count_distance_call();
        match &self.inner {
            SourceInner::Euclid(src) => src
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            _ => f64::INFINITY,
        }
    }

    pub fn to_point(&self, q: &Point) -> f64 {
        match q {
            Point::Chart(c) => self.to_chart(*c),
            Point::Euclid(c) => self.to_euclid(c),
        }
    }
}

impl RotationalEllipsoid {
    pub fn flattening(&self) -> f64 {
        (self.a - self.b) / self.a
    }

    /// Second eccentricity squared, (a^2 - b^2) / b^2.
    pub fn ep2(&self) -> f64 {
        (self.a * self.a - self.b * self.b) / (self.b * self.b)
    }

    pub fn chart_to_ambient(&self, p: ChartPoint) -> Vec3 {
        let (su, cu) = p.u.sin_cos();
        let (sv, cv) = p.v.sin_cos();
        [self.a * cu * cv, self.a * cu * sv, self.b * su]
    }

    pub fn ambient_to_chart(&self, q: Vec3) -> ChartPoint {
        let rho = (q[0] * q[0] + q[1] * q[1]).sqrt();
        let u = (q[2] / self.b).atan2(rho / self.a);
        // Longitude at the poles is fixed to 0 by convention.
        if rho / self.a < 1e-12 {
            ChartPoint::new(u, 0.0)
        } else {
            ChartPoint::new(u, q[1].atan2(q[0]))
        }
    }

    pub fn residual(&self, q: Vec3) -> f64 {
        ((q[0] * q[0] + q[1] * q[1]) / (self.a * self.a) + q[2] * q[2] / (self.b * self.b) - 1.0)
            .abs()
    }
}

impl Torus {
    pub fn chart_to_ambient(&self, p: ChartPoint) -> Vec3 {
        let (st, ct) = p.u.sin_cos();
        let (sp, cp) = p.v.sin_cos();
        let w = self.r_major + self.r_minor * ct;
        [w * cp, w * sp, self.r_minor * st]
    }

    pub fn ambient_to_chart(&self, q: Vec3) -> ChartPoint {
        let rho = (q[0] * q[0] + q[1] * q[1]).sqrt();
        let theta = (q[2] / self.r_minor).atan2((rho - self.r_major) / self.r_minor);
        let phi = q[1].atan2(q[0]);
        ChartPoint::new(theta, phi)
    }

    pub fn residual(&self, q: Vec3) -> f64 {
        let rho = (q[0] * q[0] + q[1] * q[1]).sqrt();
        let g = rho - self.r_major;
        (g * g + q[2] * q[2] - self.r_minor * self.r_minor).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_to_ambient_matches_stated_values() {
        let e = ManifoldSpec::ellipsoid(2.0, 1.0).unwrap();
        let p = e.chart_to_ambient(ChartPoint::new(0.0, 0.0)).unwrap();
        assert!(vec3::dist(p, [2.0, 0.0, 0.0]) < 1e-15);

        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let p = t.chart_to_ambient(ChartPoint::new(0.0, 0.0)).unwrap();
        assert!(vec3::dist(p, [3.0, 0.0, 0.0]) < 1e-15);
        let p = t
            .chart_to_ambient(ChartPoint::new(FRAC_PI_2, FRAC_PI_2))
            .unwrap();
        assert!(vec3::dist(p, [0.0, 2.0, 1.0]) < 1e-15);
    }

    #[test]
    fn chart_round_trip_away_from_poles() {
        let e = ManifoldSpec::ellipsoid(2.0, 1.0).unwrap();
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let mut x = 0.123_f64;
        for space in [&e, &t] {
            for _ in 0..200 {
                x = (x * 9301.0 + 49297.0) % 1.0;
                let u = if space.is_chart() && matches!(space.kind(), ManifoldKind::Torus { .. }) {
                    (x - 0.5) * 2.0 * PI * 0.999
                } else {
                    (x - 0.5) * PI * 0.98
                };
                x = (x * 9301.0 + 49297.0) % 1.0;
                let v = (x - 0.5) * 2.0 * PI * 0.999;
                let p = ChartPoint::new(u, v);
                let amb = space.chart_to_ambient(p).unwrap();
                let back = space.ambient_to_chart(amb).unwrap();
                assert!(
                    (back.u - p.u).abs() < 1e-9 && wrap_angle(back.v - p.v).abs() < 1e-9,
                    "round trip failed at ({u}, {v}) on {}",
                    space.name()
                );
            }
        }
    }

    #[test]
    fn off_surface_input_is_rejected_with_residual() {
        let e = ManifoldSpec::ellipsoid(2.0, 1.0).unwrap();
        let err = e.ambient_to_chart([2.1, 0.0, 0.0]).unwrap_err();
        match err {
            FrechetError::OffManifold { residual, .. } => assert!(residual > 1e-2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn pole_normalization_convention() {
        let e = ManifoldSpec::ellipsoid(2.0, 1.0).unwrap();
        let p = e.normalize_chart(ChartPoint::new(FRAC_PI_2, 1.3));
        assert_eq!(p.v, 0.0);
        let amb = e.chart_to_ambient(ChartPoint::new(FRAC_PI_2, 0.7)).unwrap();
        let back = e.ambient_to_chart(amb).unwrap();
        assert_eq!(back.v, 0.0);
    }

    #[test]
    fn latitude_reflection_preserves_ambient() {
        let e = ManifoldSpec::ellipsoid(2.0, 1.0).unwrap();
        let raw = ChartPoint::new(2.0, 0.4); // u beyond the north pole
        let n = e.normalize_chart(raw);
        assert!(n.u <= FRAC_PI_2 && n.u >= -FRAC_PI_2);
        let a1 = e.chart_to_ambient(raw).unwrap();
        let a2 = e.chart_to_ambient(n).unwrap();
        assert!(vec3::dist(a1, a2) < 1e-12);
    }

    #[test]
    fn manifold_spec_serde_round_trip() {
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: ManifoldSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }
}
