use frechet::geometry::{ChartPoint, ManifoldSpec, Point};
use std::f64::consts::PI;

fn main() {
    let e = ManifoldSpec::ellipsoid(2.0, 1.0).unwrap();
    let mut x = 0.31_f64;
    let mut next = move || { x = (x * 9301.0 + 49297.0) % 1.0; x };
    let mut worst = (0.0f64, ChartPoint::new(0.,0.), ChartPoint::new(0.,0.), 0., 0.);
    for i in 0..30 {
        let p1 = ChartPoint::new((next() - 0.5) * PI * 0.98, (next() - 0.5) * 2.0 * PI);
        let p2 = ChartPoint::new((next() - 0.5) * PI * 0.98, (next() - 0.5) * 2.0 * PI);
        let solver = e.distance(&Point::Chart(p1), &Point::Chart(p2)).unwrap();
        let oracle = e.mesh_oracle_distance(&Point::Chart(p1), &Point::Chart(p2), &[120, 240]).unwrap();
        let rel = (solver.distance - oracle.distance).abs() / oracle.distance.max(1e-6);
        if rel > worst.0 { worst = (rel, p1, p2, solver.distance, oracle.distance); }
        if i < 8 {
            println!("({:+.3},{:+.3})->({:+.3},{:+.3}): solver {:.6} ({:?}) oracle {:.6} rel {:.2e}",
                p1.u, p1.v, p2.u, p2.v, solver.distance, solver.method, oracle.distance, rel);
        }
    }
    println!("WORST rel {:.3e}: ({:+.4},{:+.4})->({:+.4},{:+.4}) solver {:.6} oracle {:.6}",
        worst.0, worst.1.u, worst.1.v, worst.2.u, worst.2.v, worst.3, worst.4);
}
