use frechet::estimators::{EstimatorKind, FitConfig, FitSession};
use frechet::geometry::Point;
use frechet::numeric::wrap_angle;
use frechet::simulation::*;
use frechet::inference::replicate_seed;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("torus");
    let noise: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(15.0);
    let n: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(200);
    let reps: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(8);
    let sd_mode = args.get(5).map(|s| s == "sd").unwrap_or(false);
    let hs = [0.03, 0.04, 0.05, 0.06, 0.08, 0.10, 0.12, 0.14];
    let kind = match which {
        "torus" => ScenarioKind::TorusCurve { kappa: noise },
        _ => ScenarioKind::EllipsoidSpiral { noise_sd: if sd_mode { noise } else { noise.sqrt() } },
    };
    let truth = true_curve(&kind).unwrap();
    let grid = kind.eval_grid();
    let ests = [EstimatorKind::Nw, EstimatorKind::Lfrk, EstimatorKind::Lfr];
    // acc[est][h] -> (sum geo, sum flat)
    let per_rep = frechet::parallel::map_indexed(reps, 8, |r| {
        let mut acc = vec![vec![(0.0f64, 0.0f64); hs.len()]; 3];
        let scen = Scenario { kind, n, seed: replicate_seed(99, r as u64) };
        let data = generate_sample(&scen).unwrap();
        let space = data.space().clone();
        let mut cfg = FitConfig::new(0.05);
        cfg.optimizer.grid_u = 48;
        cfg.optimizer.grid_v = 96;
        let session = FitSession::new(&data, &cfg).unwrap();
        for (ei, &est) in ests.iter().enumerate() {
            for (hi, &h) in hs.iter().enumerate() {
                let mut geo = 0.0;
                let mut flat = 0.0;
                let mut prev: Option<(f64, f64)> = None;
                for &x in &grid {
                    let f = session.fit_at(est, h, x).unwrap();
                    let t = truth.point_at(x).unwrap();
                    let dg = space.distance_value(&f.point, &t).unwrap();
                    let (cu, cv) = match (&f.point, &t) {
                        (Point::Chart(a), Point::Chart(b)) => (wrap_angle(a.u - b.u), wrap_angle(a.v - b.v)),
                        _ => (0.0, 0.0),
                    };
                    let df2 = cu * cu + cv * cv;
                    if let Some((pg, pf)) = prev {
                        geo += 0.02 * 0.5 * (pg + dg * dg);
                        flat += 0.02 * 0.5 * (pf + df2);
                    }
                    prev = Some((dg * dg, df2));
                }
                acc[ei][hi].0 += geo / reps as f64;
                acc[ei][hi].1 += flat / reps as f64;
            }
        }
        acc
    });
    let mut acc = vec![vec![(0.0f64, 0.0f64); hs.len()]; 3];
    for rep in per_rep {
        for (a, b) in acc.iter_mut().zip(&rep) {
            for (x, y) in a.iter_mut().zip(b) {
                x.0 += y.0;
                x.1 += y.1;
            }
        }
    }
    for (ei, &est) in ests.iter().enumerate() {
        let bg = acc[ei].iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let bf = acc[ei].iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let hg = hs[acc[ei].iter().enumerate().min_by(|a, b| a.1.0.total_cmp(&b.1.0)).unwrap().0];
        let hf = hs[acc[ei].iter().enumerate().min_by(|a, b| a.1.1.total_cmp(&b.1.1)).unwrap().0];
        println!("{:<5} geodesic min x100 = {:6.3} (h={hg:.2})   flat-angle min x100 = {:6.3} (h={hf:.2})",
            format!("{:?}", est), 100.0 * bg, 100.0 * bf);
    }
}
