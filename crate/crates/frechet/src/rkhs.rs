//! Positive-definite kernels, the feature map, and the feature-space
//! squared-distance algebra behind the RKHS-embedded estimator and the
//! confidence regions.
//!
//! The feature map sends a response point to its kernel section; linear
//! combinations f = sum c_i Phi(Y_i) stay implicit and all norms reduce to
//! kernel evaluations through the reproducing property.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{ManifoldSpec, Point};
use crate::smoothing::LocalWeights;

/// Positive-definite kernel on a manifold, evaluated on ambient coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PdKernel {
    /// Gaussian kernel on the ambient Euclidean (chord) distance:
    /// k(p, q) = exp(-|p - q|^2 / sigma^2).
    GaussianAmbient { sigma: f64 },
}

impl PdKernel {
    pub fn gaussian(sigma: f64) -> Self {
        PdKernel::GaussianAmbient { sigma }
    }

    /// k evaluated on ambient coordinate slices.
    #[inline]
    pub fn eval_ambient(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            PdKernel::GaussianAmbient { sigma } => {
                let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (sigma * sigma)).exp()
            }
        }
    }

    /// k on manifold points.
    pub fn eval(&self, space: &ManifoldSpec, p: &Point, q: &Point) -> Result<f64> {
        Ok(self.eval_ambient(&space.ambient(p)?, &space.ambient(q)?))
    }
}

/// Implicit linear combination f = sum c_i Phi(Y_i) in the RKHS.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCombination {
    pub points: Vec<Point>,
    pub coefficients: Vec<f64>,
}

impl FeatureCombination {
    /// Builds the RKHS estimate sum (s_in / n) Phi(Y_i) from local weights;
    /// the coefficients sum to 1 by the weight identities.
    pub fn from_weights(weights: &LocalWeights, ys: &[Point]) -> Self {
        let n = weights.weights.len() as f64;
        let mut points = Vec::new();
        let mut coefficients = Vec::new();
        for (w, y) in weights.weights.iter().zip(ys) {
            if *w != 0.0 {
                points.push(y.clone());
                coefficients.push(w / n);
            }
        }
        FeatureCombination {
            points,
            coefficients,
        }
    }

    /// Precomputes ambient coordinates and the Gram double sum for repeated
    /// squared-distance queries.
    pub fn prepare(&self, space: &ManifoldSpec, kernel: &PdKernel) -> Result<PreparedFeature> {
        let ambients: Vec<Vec<f64>> = self
            .points
            .iter()
            .map(|p| space.ambient(p))
            .collect::<Result<_>>()?;
        let mut gram = 0.0;
        for (i, ai) in ambients.iter().enumerate() {
            for (j, aj) in ambients.iter().enumerate() {
                gram += self.coefficients[i] * self.coefficients[j] * kernel.eval_ambient(ai, aj);
            }
        }
        Ok(PreparedFeature {
            ambients,
            coefficients: self.coefficients.clone(),
            gram,
            kernel: *kernel,
        })
    }
}

/// [`FeatureCombination`] with cached ambient coordinates and Gram constant.
#[derive(Debug, Clone)]
pub struct PreparedFeature {
    ambients: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    gram: f64,
    kernel: PdKernel,
}

impl PreparedFeature {
    /// ||f - Phi(w)||^2 = k(w,w) - 2 sum c_i k(Y_i, w) + sum_ij c_i c_j k(Y_i, Y_j),
    /// clamped to zero when floating-point cancellation makes it slightly
    /// negative.
    pub fn sq_dist_to_ambient(&self, w: &[f64]) -> f64 {
        let kww = self.kernel.eval_ambient(w, w);
        (kww - 2.0 * self.cross_term(w) + self.gram).max(0.0)
    }

    /// sum c_i k(Y_i, w): the only omega-dependent term for kernels with
    /// constant diagonal, hence the reduced objective.
    #[inline]
    pub fn cross_term(&self, w: &[f64]) -> f64 {
        self.ambients
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| c * self.kernel.eval_ambient(a, w))
            .sum()
    }

    pub fn gram(&self) -> f64 {
        self.gram
    }
}

/// Squared feature-space distance ||f - Phi(w)||^2 via the full Gram
/// expansion.
pub fn feature_sq_dist(
    f: &FeatureCombination,
    w: &Point,
    kernel: &PdKernel,
    space: &ManifoldSpec,
) -> Result<f64> {
    let prepared = f.prepare(space, kernel)?;
    Ok(prepared.sq_dist_to_ambient(&space.ambient(w)?))
}

/// The RKHS pull-back objective built from LFR weights. Exposes both the
/// full squared distance and the reduced form -2 sum c_i k(Y_i, w); they
/// differ by a constant in w, so their minimizers agree.
pub struct LfrkObjective {
    prepared: PreparedFeature,
}

impl LfrkObjective {
    pub fn new(
        weights: &LocalWeights,
        ys: &[Point],
        kernel: &PdKernel,
        space: &ManifoldSpec,
    ) -> Result<Self> {
        let f = FeatureCombination::from_weights(weights, ys);
        Ok(LfrkObjective {
            prepared: f.prepare(space, kernel)?,
        })
    }

    pub fn from_feature(prepared: PreparedFeature) -> Self {
        LfrkObjective { prepared }
    }

    /// Full objective ||f - Phi(w)||^2 at ambient coordinates `w`.
    pub fn full(&self, w: &[f64]) -> f64 {
        self.prepared.sq_dist_to_ambient(w)
    }

    /// Reduced objective -2 sum c_i k(Y_i, w).
    pub fn reduced(&self, w: &[f64]) -> f64 {
        -2.0 * self.prepared.cross_term(w)
    }

    pub fn prepared(&self) -> &PreparedFeature {
        &self.prepared
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartPoint;

    fn torus() -> ManifoldSpec {
        ManifoldSpec::torus(2.0, 1.0).unwrap()
    }

    #[test]
    fn kernel_diagonal_is_one_and_symmetric() {
        let k = PdKernel::gaussian(1.5);
        let s = torus();
        let p = Point::chart(0.3, -1.0);
        let q = Point::chart(-0.7, 2.0);
        assert_eq!(k.eval(&s, &p, &p).unwrap(), 1.0);
        let pq = k.eval(&s, &p, &q).unwrap();
        let qp = k.eval(&s, &q, &p).unwrap();
        assert_eq!(pq, qp);
    }

    #[test]
    fn single_point_combination_distances() {
        let s = torus();
        let k = PdKernel::gaussian(1.5);
        let p = Point::chart(0.4, 0.4);
        let q = Point::chart(-0.9, 1.3);
        let f = FeatureCombination {
            points: vec![p.clone()],
            coefficients: vec![1.0],
        };
        // ||Phi(p) - Phi(p)||^2 = 0
        assert!(feature_sq_dist(&f, &p, &k, &s).unwrap() < 1e-12);
        // ||Phi(p) - Phi(q)||^2 = 2 - 2 k(p, q)
        let want = 2.0 - 2.0 * k.eval(&s, &p, &q).unwrap();
        let got = feature_sq_dist(&f, &q, &k, &s).unwrap();
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn gram_expansion_matches_brute_force() {
        let s = torus();
        let k = PdKernel::gaussian(1.5);
        let pts: Vec<Point> = vec![
            Point::chart(0.1, 0.2),
            Point::chart(-0.4, 1.0),
            Point::chart(2.0, -2.2),
            Point::chart(1.2, 0.8),
            Point::chart(-2.4, -0.5),
        ];
        let cs = [0.4, -0.1, 0.3, 0.25, 0.15];
        let f = FeatureCombination {
            points: pts.clone(),
            coefficients: cs.to_vec(),
        };
        let w = Point::chart(0.9, -1.7);
        let got = feature_sq_dist(&f, &w, &k, &s).unwrap();
        // brute force over the explicit Gram matrix
        let mut want = k.eval(&s, &w, &w).unwrap();
        for (i, pi) in pts.iter().enumerate() {
            want -= 2.0 * cs[i] * k.eval(&s, pi, &w).unwrap();
            for (j, pj) in pts.iter().enumerate() {
                want += cs[i] * cs[j] * k.eval(&s, pi, pj).unwrap();
            }
        }
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn permutation_invariance() {
        let s = torus();
        let k = PdKernel::gaussian(1.5);
        let pts = [
            Point::chart(0.1, 0.2),
            Point::chart(-0.4, 1.0),
            Point::chart(2.0, -2.2),
        ];
        let cs = [0.5, 0.3, 0.2];
        let f1 = FeatureCombination {
            points: pts.to_vec(),
            coefficients: cs.to_vec(),
        };
        let f2 = FeatureCombination {
            points: vec![pts[2].clone(), pts[0].clone(), pts[1].clone()],
            coefficients: vec![cs[2], cs[0], cs[1]],
        };
        let w = Point::chart(-1.0, 0.0);
        let a = feature_sq_dist(&f1, &w, &k, &s).unwrap();
        let b = feature_sq_dist(&f2, &w, &k, &s).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn reduced_and_full_objectives_share_argmin_on_grids() {
        let s = torus();
        let k = PdKernel::gaussian(1.5);
        let xs = [0.10, 0.12, 0.2, 0.23, 0.3, 0.31, 0.33, 0.4, 0.42, 0.5];
        let ys: Vec<Point> = xs
            .iter()
            .map(|&x| Point::chart(0.5 + 0.3 * x, 1.0 + x))
            .collect();
        let w = crate::smoothing::local_weights(&xs, 0.3, 0.25, crate::smoothing::SmoothingKernel::Epanechnikov)
            .unwrap();
        let obj = LfrkObjective::new(&w, &ys, &k, &s).unwrap();
        let mut best_full = (0usize, f64::INFINITY);
        let mut best_red = (0usize, f64::INFINITY);
        let mut idx = 0usize;
        for i in 0..100 {
            for j in 0..100 {
                let p = ChartPoint::new(
                    -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / 100.0,
                    -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / 100.0,
                );
                let amb = s.chart_to_ambient(p).unwrap();
                let full = obj.full(&amb);
                let red = obj.reduced(&amb);
                if full < best_full.1 {
                    best_full = (idx, full);
                }
                if red < best_red.1 {
                    best_red = (idx, red);
                }
                // they differ by a constant
                let diff = full - red;
                assert!((diff - (1.0 + obj.prepared().gram())).abs() < 1e-12);
                idx += 1;
            }
        }
        assert_eq!(best_full.0, best_red.0);
    }
}
