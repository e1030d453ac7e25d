use frechet::geometry::torus::{torus_distance, TorusDistanceField};
use frechet::geometry::{ChartPoint, Torus};
use std::time::Instant;

fn main() {
    let t = Torus { r_major: 2.0, r_minor: 1.0 };
    let t0 = Instant::now();
    let f1 = TorusDistanceField::build(t, ChartPoint::new(0.5, 0.2));
    println!("field build: {:.3}s", t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let f2 = TorusDistanceField::build(t, ChartPoint::new(-2.5, 1.2));
    println!("field build 2: {:.3}s", t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let mut acc = 0.0;
    for i in 0..100000 {
        let q = ChartPoint::new((i as f64 * 0.001) % 3.0 - 1.5, (i as f64 * 0.003) % 6.0 - 3.0);
        acc += f1.distance_to(q) + f2.distance_to(q);
    }
    println!("200k lookups: {:.3}s ({acc:.1})", t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let mut acc = 0.0;
    for i in 0..20 {
        let q = ChartPoint::new(0.3 + 0.01 * i as f64, -1.0 + 0.05 * i as f64);
        acc += torus_distance(&t, ChartPoint::new(0.5, 0.2), q).unwrap().distance;
    }
    println!("20 solver calls (near): {:.3}s ({acc:.1})", t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let mut acc = 0.0;
    for i in 0..20 {
        let q = ChartPoint::new(-3.0 + 0.01 * i as f64, 2.0 + 0.05 * i as f64);
        acc += torus_distance(&t, ChartPoint::new(0.5, 0.2), q).unwrap().distance;
    }
    println!("20 solver calls (far): {:.3}s ({acc:.1})", t0.elapsed().as_secs_f64());
}
