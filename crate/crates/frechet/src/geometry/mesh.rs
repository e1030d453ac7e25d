//! Brute-force geodesic oracle for validating the solvers.
//!
//! A regular chart grid is triangulated with both diagonals and searched
//! with Dijkstra (edge weight = ambient chord length). A grid-restricted
//! path overestimates the geodesic by an anisotropy term that does not
//! vanish with refinement (up to ~8% for an 8-neighbor stencil), so the
//! Dijkstra polyline is then relaxed on the surface by iterated midpoint
//! projection until it settles onto the geodesic in its homotopy class.
//! The relaxation uses no machinery shared with the production solvers.

use std::cmp::Ordering as CmpOrdering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use crate::error::{FrechetError, Result};
use crate::geometry::shooting::{chord_arc, Surface};
use crate::geometry::vec3::{self, Vec3};
use crate::geometry::{
    ChartPoint, GeodesicMethod, GeodesicResult, ManifoldKind, ManifoldSpec, RotationalEllipsoid,
    Torus,
};

/// Cached triangulated chart grid for one refinement level.
#[derive(Debug)]
pub(crate) struct ChartMesh {
    /// Rows are latitudes (non-periodic, poles included) when true;
    /// periodic minor angle otherwise.
    latlon: bool,
    n_rows: usize,
    n_cols: usize,
    nodes: Vec<Vec3>,
    surface: Surface,
    row_step: f64,
    col_step: f64,
}

impl ChartMesh {
    fn build(spec: &ManifoldSpec, level: usize) -> Result<Self> {
        let (surface, latlon) = match spec.kind() {
            ManifoldKind::Sphere => (
                Surface::Ellipsoid(RotationalEllipsoid { a: 1.0, b: 1.0 }),
                true,
            ),
            ManifoldKind::Ellipsoid { a, b } => {
                (Surface::Ellipsoid(RotationalEllipsoid { a, b }), true)
            }
            ManifoldKind::Torus { r_major, r_minor } => {
                (Surface::Torus(Torus { r_major, r_minor }), false)
            }
            ManifoldKind::Euclidean { .. } => {
                return Err(FrechetError::InvalidInput(
                    "mesh oracle is only defined for chart manifolds".into(),
                ))
            }
        };
        let n_rows = if latlon { level + 1 } else { level };
        let n_cols = 2 * level;
        let row_step = if latlon {
            PI / level as f64
        } else {
            2.0 * PI / level as f64
        };
        let col_step = 2.0 * PI / n_cols as f64;
        let mut nodes = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            let u = if latlon {
                -FRAC_PI_2 + i as f64 * row_step
            } else {
                -PI + i as f64 * row_step
            };
            for j in 0..n_cols {
                let v = -PI + j as f64 * col_step;
                nodes.push(spec.chart_to_ambient(ChartPoint::new(u, v))?);
            }
        }
        Ok(ChartMesh {
            latlon,
            n_rows,
            n_cols,
            nodes,
            surface,
            row_step,
            col_step,
        })
    }

    #[inline]
    fn id(&self, row: usize, col: usize) -> usize {
        row * self.n_cols + col
    }

    /// 8-connected neighborhood (both diagonals of the grid cells).
    fn neighbors(&self, idx: usize, out: &mut Vec<usize>) {
        out.clear();
        let row = (idx / self.n_cols) as isize;
        let col = (idx % self.n_cols) as isize;
        for dr in -1..=1_isize {
            for dc in -1..=1_isize {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let r = row + dr;
                let c = (col + dc).rem_euclid(self.n_cols as isize) as usize;
                if self.latlon {
                    if r < 0 || r >= self.n_rows as isize {
                        continue;
                    }
                    out.push(self.id(r as usize, c));
                } else {
                    let r = r.rem_euclid(self.n_rows as isize) as usize;
                    out.push(self.id(r, c));
                }
            }
        }
    }

    /// Grid nodes within the 5x5 patch around the cell containing `p`.
    fn patch_around(&self, p: ChartPoint) -> Vec<usize> {
        let (fr, fc) = if self.latlon {
            ((p.u + FRAC_PI_2) / self.row_step, (p.v + PI) / self.col_step)
        } else {
            ((p.u + PI) / self.row_step, (p.v + PI) / self.col_step)
        };
        let r0 = fr.floor() as isize;
        let c0 = fc.floor() as isize;
        let mut out = Vec::with_capacity(25);
        for dr in -2..=2_isize {
            for dc in -2..=2_isize {
                let r = r0 + dr;
                let c = (c0 + dc).rem_euclid(self.n_cols as isize) as usize;
                if self.latlon {
                    if r < 0 || r >= self.n_rows as isize {
                        continue;
                    }
                    out.push(self.id(r as usize, c));
                } else {
                    let r = r.rem_euclid(self.n_rows as isize) as usize;
                    out.push(self.id(r, c));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Copy, Clone)]
struct HeapNode {
    dist: f64,
    idx: usize,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.idx == other.idx
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        // min-heap on distance
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Shortest grid path from `start` to `end` (virtual endpoints linked to
/// their surrounding patches), returned as an ambient polyline.
fn dijkstra_path(mesh: &ChartMesh, start: ChartPoint, end: ChartPoint, a1: Vec3, a2: Vec3) -> Vec<Vec3> {
    let n = mesh.nodes.len();
    let end_id = n;
    let mut dist = vec![f64::INFINITY; n + 1];
    let mut prev = vec![u32::MAX; n + 1];
    let mut done = vec![false; n + 1];
    let mut heap = BinaryHeap::new();

    let end_patch = mesh.patch_around(end);
    let mut end_link = vec![false; n];
    for &i in &end_patch {
        end_link[i] = true;
    }

    for i in mesh.patch_around(start) {
        let d = vec3::dist(a1, mesh.nodes[i]);
        if d < dist[i] {
            dist[i] = d;
            heap.push(HeapNode { dist: d, idx: i });
        }
    }

    let mut scratch = Vec::with_capacity(8);
    while let Some(HeapNode { dist: d, idx }) = heap.pop() {
        if done[idx] {
            continue;
        }
        done[idx] = true;
        if idx == end_id {
            break;
        }
        if end_link[idx] {
            let nd = d + vec3::dist(mesh.nodes[idx], a2);
            if nd < dist[end_id] {
                dist[end_id] = nd;
                prev[end_id] = idx as u32;
                heap.push(HeapNode {
                    dist: nd,
                    idx: end_id,
                });
            }
        }
        mesh.neighbors(idx, &mut scratch);
        for &nb in &scratch {
            if done[nb] {
                continue;
            }
            let nd = d + vec3::dist(mesh.nodes[idx], mesh.nodes[nb]);
            if nd < dist[nb] {
                dist[nb] = nd;
                prev[nb] = idx as u32;
                heap.push(HeapNode { dist: nd, idx: nb });
            }
        }
    }

    let mut path = vec![a2];
    let mut cur = prev[end_id];
    while cur != u32::MAX {
        path.push(mesh.nodes[cur as usize]);
        cur = prev[cur as usize];
    }
    path.push(a1);
    path.reverse();
    path
}

/// Resamples a polyline to `m` points, uniformly in arc length.
fn resample(path: &[Vec3], m: usize) -> Vec<Vec3> {
    let mut cum = Vec::with_capacity(path.len());
    let mut total = 0.0;
    cum.push(0.0);
    for w in path.windows(2) {
        total += vec3::dist(w[0], w[1]);
        cum.push(total);
    }
    if total == 0.0 {
        return vec![path[0]; m];
    }
    let mut out = Vec::with_capacity(m);
    let mut seg = 0usize;
    for k in 0..m {
        let target = total * k as f64 / (m - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let denom = cum[seg + 1] - cum[seg];
        let t = if denom > 0.0 {
            (target - cum[seg]) / denom
        } else {
            0.0
        };
        out.push(vec3::add(
            vec3::scale(path[seg], 1.0 - t),
            vec3::scale(path[seg + 1], t),
        ));
    }
    out
}

fn polyline_length(surface: &Surface, path: &[Vec3]) -> f64 {
    path.windows(2).map(|w| chord_arc(surface, w[0], w[1])).sum()
}

/// Iterated midpoint projection: relaxes the polyline onto the geodesic in
/// its homotopy class, coarse-to-fine. Endpoints stay pinned.
fn shorten_path(surface: &Surface, path: Vec<Vec3>, scale: f64) -> f64 {
    let mut pts = path;
    let mut length = 0.0;
    for &m in &[33usize, 65, 129, 257, 513] {
        pts = resample(&pts, m);
        for p in pts.iter_mut() {
            *p = surface.project(*p);
        }
        let move_tol = 1e-12 * scale;
        for _ in 0..3000 {
            let mut max_move: f64 = 0.0;
            for k in 1..m - 1 {
                let mid = vec3::scale(vec3::add(pts[k - 1], pts[k + 1]), 0.5);
                let q = surface.project(mid);
                max_move = max_move.max(vec3::dist(q, pts[k]));
                pts[k] = q;
            }
            for k in (1..m - 1).rev() {
                let mid = vec3::scale(vec3::add(pts[k - 1], pts[k + 1]), 0.5);
                let q = surface.project(mid);
                max_move = max_move.max(vec3::dist(q, pts[k]));
                pts[k] = q;
            }
            if max_move < move_tol {
                break;
            }
        }
        length = polyline_length(surface, &pts);
    }
    length
}

fn cached_mesh(spec: &ManifoldSpec, level: usize) -> Result<Arc<ChartMesh>> {
    {
        let map = spec.engine().meshes.read().unwrap();
        if let Some(m) = map.get(&level) {
            return Ok(Arc::clone(m));
        }
    }
    let mesh = Arc::new(ChartMesh::build(spec, level)?);
    let mut map = spec.engine().meshes.write().unwrap();
    Ok(Arc::clone(map.entry(level).or_insert(mesh)))
}

/// Validation oracle: shortest-path distance seeded on a triangulated chart
/// grid and relaxed onto the surface, refined through `levels` (level n is
/// an n x 2n grid). The reported error combines the last refinement change
/// with the relaxation residual.
pub fn mesh_oracle_distance(
    spec: &ManifoldSpec,
    p1: ChartPoint,
    p2: ChartPoint,
    levels: &[usize],
) -> Result<GeodesicResult> {
    if levels.is_empty() {
        return Err(FrechetError::InvalidInput(
            "mesh oracle needs at least one refinement level".into(),
        ));
    }
    if levels.iter().any(|&l| l < 8) {
        return Err(FrechetError::InvalidInput(
            "mesh oracle levels below 8 are meaningless".into(),
        ));
    }
    let p1 = spec.normalize_chart(p1);
    let p2 = spec.normalize_chart(p2);
    // Canonical argument order for exact symmetry.
    let (p1, p2) = if (p1.u, p1.v) <= (p2.u, p2.v) {
        (p1, p2)
    } else {
        (p2, p1)
    };
    let a1 = spec.chart_to_ambient(p1)?;
    let a2 = spec.chart_to_ambient(p2)?;
    if spec.chart_coincident(p1, p2) {
        return Ok(GeodesicResult {
            distance: 0.0,
            method: GeodesicMethod::MeshOracle,
            est_abs_error: 0.0,
        });
    }

    let mut last = f64::INFINITY;
    let mut prev = f64::INFINITY;
    let mut surface_scale = 1.0;
    for &level in levels {
        let mesh = cached_mesh(spec, level)?;
        surface_scale = mesh.surface.feature_radius();
        let path = dijkstra_path(&mesh, p1, p2, a1, a2);
        let len = shorten_path(&mesh.surface, path, surface_scale);
        prev = last;
        last = len;
    }
    let est = if prev.is_finite() {
        (prev - last).abs() + 1e-7 * (surface_scale + last)
    } else {
        1e-4 * (surface_scale + last)
    };
    Ok(GeodesicResult {
        distance: last,
        method: GeodesicMethod::MeshOracle,
        est_abs_error: est,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn oracle_matches_sphere_closed_form() {
        let s = ManifoldSpec::sphere();
        let p1 = s.ambient_to_chart([1.0, 0.0, 0.0]).unwrap();
        let p2 = s.ambient_to_chart([0.0, 1.0, 0.0]).unwrap();
        let r = mesh_oracle_distance(&s, p1, p2, &[100]).unwrap();
        assert!(
            (r.distance - FRAC_PI_2).abs() / FRAC_PI_2 < 5e-3,
            "got {}",
            r.distance
        );
    }

    #[test]
    fn oracle_matches_torus_meridian() {
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let r = mesh_oracle_distance(
            &t,
            ChartPoint::new(0.0, 0.3),
            ChartPoint::new(PI, 0.3),
            &[100],
        )
        .unwrap();
        assert!((r.distance - PI).abs() / PI < 5e-3, "got {}", r.distance);
    }

    #[test]
    fn oracle_refinement_is_monotone_non_increasing() {
        let t = ManifoldSpec::torus(2.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for level in [40usize, 80, 160] {
            let r = t
                .mesh_oracle_distance(
                    &Point::chart(0.5, 0.2),
                    &Point::chart(-0.8, 2.1),
                    &[level],
                )
                .unwrap();
            assert!(
                r.distance <= prev * (1.0 + 1e-6),
                "level {level}: {} > {prev}",
                r.distance
            );
            prev = r.distance;
        }
    }
}
