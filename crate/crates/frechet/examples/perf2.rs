use frechet::geometry::torus::torus_distance;
use frechet::geometry::{ChartPoint, Torus};
use std::f64::consts::PI;
fn main() {
    let t = Torus { r_major: 2.0, r_minor: 1.0 };
    // probe the metric diameter: candidates for the farthest pairs
    for (p, q) in [
        ((0.0, 0.0), (0.0, PI)),
        ((0.0, 0.0), (PI - 1e-9, PI)),
        ((0.0, 0.0), (2.0, PI)),
        ((0.0, 0.0), (1.2, PI)),
        ((0.0, 0.0), (2.6, PI)),
        ((0.5, 0.2), (-2.6, PI - 0.4)),
    ] {
        let d = torus_distance(&t, ChartPoint::new(p.0, p.1), ChartPoint::new(q.0, q.1)).unwrap();
        println!("({:.2},{:.2})->({:.2},{:.2}): {:.5}", p.0, p.1, q.0, q.1, d.distance);
    }
}
