//! Smoothing kernels, local moment statistics, and the signed local-linear
//! weights s_in(x, h) shared by every estimator.

use serde::{Deserialize, Serialize};

use crate::error::{FrechetError, Result};
use crate::numeric::KahanSum;

/// Symmetric smoothing kernel K(u).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingKernel {
    /// K(u) = 0.75 (1 - u^2) on |u| <= 1.
    Epanechnikov,
    /// Standard normal density.
    Gaussian,
    /// K(u) = 0.5 on |u| <= 1.
    Uniform,
}

impl SmoothingKernel {
    /// Evaluates K(u).
    #[inline]
    pub fn at(&self, u: f64) -> f64 {
        match self {
            SmoothingKernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            SmoothingKernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            SmoothingKernel::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    /// Scaled kernel K_h(t) = K(t/h)/h.
    #[inline]
    pub fn scaled(&self, t: f64, h: f64) -> f64 {
        self.at(t / h) / h
    }
}

/// Empirical kernel moments at one evaluation point:
/// mu_j = n^-1 sum K_h(X_i - x)(X_i - x)^j and sigma0^2 = mu0 mu2 - mu1^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMoments {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma0_sq: f64,
}

/// The signed empirical weights
/// s_in(x, h) = K_h(X_i - x) [mu2 - mu1 (X_i - x)] / sigma0^2,
/// normalized so that their mean is 1 and their weighted first moment is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalWeights {
    pub x0: f64,
    pub h: f64,
    pub weights: Vec<f64>,
    pub moments: LocalMoments,
}

impl LocalWeights {
    /// Indices of samples with nonzero weight (the kernel window).
    pub fn window(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

const DEGENERATE_COEFF: f64 = 1e-14;

/// Local-linear (LFR) weights at `x0`. Weights may be negative.
///
/// Fails with `DegenerateWindow` when sigma0^2 falls below
/// 1e-14 * (window spread)^4, which happens when fewer than two distinct
/// predictors receive kernel mass.
pub fn local_weights(
    xs: &[f64],
    x0: f64,
    h: f64,
    kernel: SmoothingKernel,
) -> Result<LocalWeights> {
    if h <= 0.0 {
        return Err(FrechetError::InvalidInput(format!(
            "bandwidth must be positive, got {h}"
        )));
    }
    if xs.len() < 2 {
        return Err(FrechetError::InvalidInput(
            "need at least two samples".into(),
        ));
    }
    let n = xs.len() as f64;
    let mut m0 = KahanSum::new();
    let mut m1 = KahanSum::new();
    let mut m2 = KahanSum::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        let d = x - x0;
        let k = kernel.scaled(d, h);
        if k > 0.0 {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        m0.add(k);
        m1.add(k * d);
        m2.add(k * d * d);
    }
    let mu0 = m0.value() / n;
    let mu1 = m1.value() / n;
    let mu2 = m2.value() / n;
    let sigma0_sq = mu0 * mu2 - mu1 * mu1;
    let spread = if hi > lo { hi - lo } else { 0.0 };
    if sigma0_sq <= DEGENERATE_COEFF * spread.powi(4) {
        return Err(FrechetError::DegenerateWindow { x0, sigma0_sq });
    }
    let weights = xs
        .iter()
        .map(|&x| {
            let d = x - x0;
            kernel.scaled(d, h) * (mu2 - mu1 * d) / sigma0_sq
        })
        .collect();
    Ok(LocalWeights {
        x0,
        h,
        weights,
        moments: LocalMoments {
            mu0,
            mu1,
            mu2,
            sigma0_sq,
        },
    })
}

/// Nadaraya–Watson weights at `x0`: a probability vector proportional to
/// the kernel values. Fails with `EmptyWindow` when no sample carries mass.
pub fn nw_weights(xs: &[f64], x0: f64, h: f64, kernel: SmoothingKernel) -> Result<Vec<f64>> {
    if h <= 0.0 {
        return Err(FrechetError::InvalidInput(format!(
            "bandwidth must be positive, got {h}"
        )));
    }
    let mut total = KahanSum::new();
    let ks: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let k = kernel.scaled(x - x0, h);
            total.add(k);
            k
        })
        .collect();
    let total = total.value();
    if total <= 0.0 {
        return Err(FrechetError::EmptyWindow { x0 });
    }
    Ok(ks.into_iter().map(|k| k / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epanechnikov_point_values() {
        let k = SmoothingKernel::Epanechnikov;
        assert_eq!(k.at(0.0), 0.75);
        assert_eq!(k.at(1.5), 0.0);
        assert_eq!(k.at(0.5), 0.5625);
        assert_eq!(k.at(-0.5), k.at(0.5));
    }

    #[test]
    fn epanechnikov_integrates_to_one() {
        let k = SmoothingKernel::Epanechnikov;
        let int = crate::numeric::quad_panels(&|u| k.at(u), -1.0, 1.0, 0.25);
        assert!((int - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetric_design_gives_equal_weights() {
        let w = local_weights(&[-0.5, 0.5], 0.0, 1.0, SmoothingKernel::Epanechnikov).unwrap();
        assert!((w.weights[0] - 1.0).abs() < 1e-12);
        assert!((w.weights[1] - 1.0).abs() < 1e-12);
        assert!(w.moments.mu1.abs() < 1e-15);
    }

    #[test]
    fn weight_identities_hold() {
        let xs = [0.1, 0.2, 0.4, 0.33, 0.05];
        let w = local_weights(&xs, 0.2, 0.3, SmoothingKernel::Epanechnikov).unwrap();
        let n = xs.len() as f64;
        let mean: f64 = w.weights.iter().sum::<f64>() / n;
        let first: f64 = w
            .weights
            .iter()
            .zip(&xs)
            .map(|(wi, xi)| wi * (xi - 0.2))
            .sum::<f64>()
            / n;
        assert!((mean - 1.0).abs() < 1e-10);
        assert!(first.abs() < 1e-10);
        // sigma0_sq identity
        let m = w.moments;
        assert!(((m.mu0 * m.mu2 - m.mu1 * m.mu1) - m.sigma0_sq).abs() <= 1e-12 * m.sigma0_sq.abs());
    }

    #[test]
    fn straight_from_formula_recomputation() {
        // Independent re-evaluation of the weight formula, naively summed.
        let xs = [0.1, 0.2, 0.4];
        let (x0, h) = (0.2, 0.3);
        let k = SmoothingKernel::Epanechnikov;
        let w = local_weights(&xs, x0, h, k).unwrap();
        let n = xs.len() as f64;
        let kh: Vec<f64> = xs.iter().map(|&x| k.at((x - x0) / h) / h).collect();
        let mu0: f64 = kh.iter().sum::<f64>() / n;
        let mu1: f64 = kh.iter().zip(&xs).map(|(k, x)| k * (x - x0)).sum::<f64>() / n;
        let mu2: f64 = kh
            .iter()
            .zip(&xs)
            .map(|(k, x)| k * (x - x0) * (x - x0))
            .sum::<f64>()
            / n;
        let s2 = mu0 * mu2 - mu1 * mu1;
        for (i, &x) in xs.iter().enumerate() {
            let want = kh[i] * (mu2 - mu1 * (x - x0)) / s2;
            assert!((w.weights[i] - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn degenerate_window_is_detected() {
        // Only one sample inside the window.
        let err = local_weights(&[0.0, 0.9], 0.0, 0.1, SmoothingKernel::Epanechnikov).unwrap_err();
        assert!(matches!(err, FrechetError::DegenerateWindow { .. }));
        // Two coincident predictors in the window.
        let err =
            local_weights(&[0.05, 0.05, 0.9], 0.0, 0.1, SmoothingKernel::Epanechnikov).unwrap_err();
        assert!(matches!(err, FrechetError::DegenerateWindow { .. }));
    }

    #[test]
    fn nw_weights_are_a_probability_vector() {
        let xs = [0.1, 0.2, 0.4];
        let w = nw_weights(&xs, 0.2, 0.3, SmoothingKernel::Epanechnikov).unwrap();
        assert!(w.iter().all(|&x| x >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // ratios of Epanechnikov values
        let k = SmoothingKernel::Epanechnikov;
        let raw: Vec<f64> = xs.iter().map(|&x| k.at((x - 0.2) / 0.3)).collect();
        let total: f64 = raw.iter().sum();
        for (got, want) in w.iter().zip(raw.iter().map(|r| r / total)) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn nw_single_point_and_empty_window() {
        let w = nw_weights(&[0.0, 0.9], 0.05, 0.1, SmoothingKernel::Epanechnikov).unwrap();
        assert_eq!(w[0], 1.0);
        assert_eq!(w[1], 0.0);
        let err = nw_weights(&[0.5, 0.9], 0.0, 0.1, SmoothingKernel::Epanechnikov).unwrap_err();
        assert!(matches!(err, FrechetError::EmptyWindow { .. }));
    }
}
