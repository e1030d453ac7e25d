//! Asymptotic bias/variance quantities, bootstrap estimates, and
//! shell-shaped confidence regions in the response space.
//!
//! The confidence region for the regression value at x0 is the set of
//! manifold points whose squared feature-space distance to the RKHS
//! estimate lies between
//!
//!   -2 B_hat -/+ 2 sqrt(V_hat / (n h)) z_{alpha/2}.
//!
//! B_hat and V_hat come either from the known model (plug-in, for
//! simulation studies) or from a pairs bootstrap with the projection
//! direction fixed at the feature image of the pull-back estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{FrechetError, Result};
use crate::estimators::{fit_hilbert_lfr, EstimatorKind, FitConfig, FitSession, SampleSet};
use crate::geometry::{ChartPoint, ManifoldSpec, Point};
use crate::numeric::quad_panels;
use crate::parallel;
use crate::rkhs::{FeatureCombination, PdKernel, PreparedFeature};
use crate::smoothing::{local_weights, SmoothingKernel};

/// Asymptotic bias and variance at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticQuantities {
    pub bias_hat: f64,
    pub var_hat: f64,
    pub n: usize,
    pub h: f64,
    pub x0: f64,
}

/// Kernel moment constants: (int u^2 K(u) du, int K(u)^2 du), by quadrature.
pub fn kernel_constants(kernel: SmoothingKernel) -> (f64, f64) {
    let support = match kernel {
        SmoothingKernel::Gaussian => 8.0,
        _ => 1.0,
    };
    let u2k = quad_panels(&|u| u * u * kernel.at(u), -support, support, 0.25);
    let ksq = quad_panels(
        &|u| {
            let k = kernel.at(u);
            k * k
        },
        -support,
        support,
        0.25,
    );
    (u2k, ksq)
}

/// A fully known 1-d regression model for plug-in calculations: the mean
/// with two derivatives, the predictor density with one, and the noise
/// variance function.
pub struct Model1d<'a> {
    pub m: &'a dyn Fn(f64) -> f64,
    pub m1: &'a dyn Fn(f64) -> f64,
    pub m2: &'a dyn Fn(f64) -> f64,
    pub f: &'a dyn Fn(f64) -> f64,
    pub f1: &'a dyn Fn(f64) -> f64,
    pub sigma2: &'a dyn Fn(f64) -> f64,
}

/// Leading conditional bias/variance of the NW and LFR estimators at `x0`:
///
///   LFR bias  = (int u^2 K / 2) m''(x0) h^2
///   NW  bias  = (int u^2 K / 2) [m''(x0) + 2 m'(x0) f'(x0) / f(x0)] h^2
///   variance  = (int K^2 / f(x0)) sigma^2(x0) / (n h)      (both)
pub fn theoretical_bias_variance_1d(
    model: &Model1d,
    kernel: SmoothingKernel,
    h: f64,
    n: usize,
    x0: f64,
) -> Result<(AsymptoticQuantities, AsymptoticQuantities)> {
    let fx = (model.f)(x0);
    if fx <= 0.0 {
        return Err(FrechetError::InvalidInput(format!(
            "predictor density must be positive at x0, got f({x0}) = {fx}"
        )));
    }
    let (u2k, ksq) = kernel_constants(kernel);
    let var = ksq * (model.sigma2)(x0) / (fx * n as f64 * h);
    let lfr_bias = 0.5 * u2k * (model.m2)(x0) * h * h;
    let nw_bias = 0.5 * u2k * ((model.m2)(x0) + 2.0 * (model.m1)(x0) * (model.f1)(x0) / fx) * h * h;
    let nw = AsymptoticQuantities {
        bias_hat: nw_bias,
        var_hat: var,
        n,
        h,
        x0,
    };
    let lfr = AsymptoticQuantities {
        bias_hat: lfr_bias,
        var_hat: var,
        n,
        h,
        x0,
    };
    Ok((nw, lfr))
}

/// Standard normal quantile (inverse CDF) by Acklam's rational
/// approximation, absolute accuracy about 1e-9.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0, 1)");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-replicate seed derivation from a master seed.
pub fn replicate_seed(master: u64, replicate: u64) -> u64 {
    splitmix64(master ^ splitmix64(replicate.wrapping_add(1)))
}

/// Pairs bootstrap of the bias and variance entering the confidence region.
///
/// Each replicate resamples (X_i, Y_i) with replacement, rebuilds the RKHS
/// estimate at `x0`, and evaluates the projection
/// T*_b = <l*^{H_k}(x0) - l^{H_k}(x0), Phi(pullback)>. Then
/// bias_hat = mean(T*), var_hat = n h var(T*). Deterministic given `seed`
/// for any parallelism level.
pub fn bootstrap_bias_variance(
    data: &SampleSet,
    x0: f64,
    cfg: &FitConfig,
    replicates: usize,
    seed: u64,
    parallelism: usize,
) -> Result<AsymptoticQuantities> {
    if replicates < 50 {
        return Err(FrechetError::InvalidInput(format!(
            "bootstrap needs at least 50 replicates, got {replicates}"
        )));
    }
    let kernel = cfg.pd_kernel.ok_or_else(|| {
        FrechetError::InvalidInput("bootstrap requires a positive-definite kernel".into())
    })?;
    let n = data.len();
    let session = FitSession::new(data, cfg)?;
    let pullback = session.fit_at(EstimatorKind::Lfrk, cfg.h, x0)?;
    let pullback_amb = data.space().ambient(&pullback.point)?;

    let base_w = local_weights(data.xs(), x0, cfg.h, cfg.kernel)?;
    let kvals: Vec<f64> = data
        .ys()
        .iter()
        .map(|y| {
            data.space()
                .ambient(y)
                .map(|a| kernel.eval_ambient(&a, &pullback_amb))
        })
        .collect::<Result<_>>()?;
    let base_t: f64 = base_w
        .weights
        .iter()
        .zip(&kvals)
        .map(|(w, k)| w * k)
        .sum::<f64>()
        / n as f64;

    let draws: Vec<Option<f64>> = parallel::map_indexed(replicates, parallelism, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(seed, b as u64));
        let mut xs = Vec::with_capacity(n);
        let mut ks = Vec::with_capacity(n);
        for _ in 0..n {
            let j = rng.random_range(0..n);
            xs.push(data.xs()[j]);
            ks.push(kvals[j]);
        }
        match local_weights(&xs, x0, cfg.h, cfg.kernel) {
            Ok(w) => Some(
                w.weights
                    .iter()
                    .zip(&ks)
                    .map(|(wi, ki)| wi * ki)
                    .sum::<f64>()
                    / n as f64
                    - base_t,
            ),
            Err(_) => None,
        }
    });

    let ts: Vec<f64> = draws.iter().copied().flatten().collect();
    let degenerate = replicates - ts.len();
    if degenerate * 5 > replicates {
        return Err(FrechetError::InsufficientData(format!(
            "{degenerate} of {replicates} bootstrap replicates had degenerate windows at x0 = {x0}"
        )));
    }
    let m = ts.len() as f64;
    let mean = ts.iter().sum::<f64>() / m;
    let var = ts.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (m - 1.0);
    Ok(AsymptoticQuantities {
        bias_hat: mean,
        var_hat: n as f64 * cfg.h * var,
        n,
        h: cfg.h,
        x0,
    })
}

/// Shell-shaped confidence region in the response space: manifold points
/// whose squared feature distance to the RKHS estimate falls between the
/// bounds. A negative lower bound means the region reaches distance zero
/// and contains the pull-back point.
pub struct ConfidenceRegion {
    pub level: f64,
    pub center: FeatureCombination,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub boundary_sample: Vec<ChartPoint>,
    prepared: PreparedFeature,
    space: ManifoldSpec,
}

impl ConfidenceRegion {
    /// The defining inequality at a manifold point.
    pub fn member_test(&self, point: &Point) -> Result<bool> {
        let amb = self.space.ambient(point)?;
        let d2 = self.prepared.sq_dist_to_ambient(&amb);
        Ok(self.lower_bound <= d2 && d2 <= self.upper_bound)
    }

    pub fn sq_dist(&self, point: &Point) -> Result<f64> {
        Ok(self.prepared.sq_dist_to_ambient(&self.space.ambient(point)?))
    }
}

/// Builds the confidence region at level 1 - alpha from the RKHS center and
/// estimated bias/variance, sampling the membership set on a chart grid.
pub fn confidence_region(
    center: &FeatureCombination,
    aq: &AsymptoticQuantities,
    alpha: f64,
    space: &ManifoldSpec,
    kernel: &PdKernel,
    grid: (usize, usize),
) -> Result<ConfidenceRegion> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(FrechetError::InvalidInput(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let z = normal_quantile(1.0 - alpha / 2.0);
    let half = 2.0 * (aq.var_hat / (aq.n as f64 * aq.h)).sqrt() * z;
    let lower = -2.0 * aq.bias_hat - half;
    let upper = -2.0 * aq.bias_hat + half;
    let prepared = center.prepare(space, kernel)?;
    let mut boundary = Vec::new();
    if space.is_chart() {
        for p in crate::estimators::optimize::chart_grid(space, grid.0, grid.1) {
            let amb = space.chart_to_ambient(p)?;
            let d2 = prepared.sq_dist_to_ambient(&amb);
            if lower <= d2 && d2 <= upper {
                boundary.push(p);
            }
        }
    }
    Ok(ConfidenceRegion {
        level: 1.0 - alpha,
        center: center.clone(),
        lower_bound: lower,
        upper_bound: upper,
        boundary_sample: boundary,
        prepared,
        space: space.clone(),
    })
}

/// A fully known regression scenario in R^d used by the coverage
/// experiment: Y = m(X) + sigma eps with eps having i.i.d. N(0, 1/d)
/// components (so E|eps|^2 = 1) and X uniform on `x_range`.
pub struct HilbertScenario<'a> {
    pub dim: usize,
    pub m: &'a (dyn Fn(f64) -> Vec<f64> + Sync),
    /// Second derivative of m, componentwise.
    pub m2: &'a (dyn Fn(f64) -> Vec<f64> + Sync),
    pub sigma: f64,
    pub x_range: (f64, f64),
}

/// Empirical coverage of the plug-in confidence statement at `x0`.
///
/// Each replication draws a fresh dataset, computes the closed-form
/// Hilbert LFR estimate, and checks the asymptotically normal pivot
/// sqrt(nh) (<l - m(x0), m(x0)> - B_x) / sqrt(V_x) against the normal
/// quantile, with B_x and V_x plugged in from the known model. This is the
/// membership statement of the Hilbert-space region evaluated through its
/// defining pivot.
pub fn coverage_experiment(
    scenario: &HilbertScenario,
    n: usize,
    h: f64,
    reps: usize,
    alpha: f64,
    x0: f64,
    kernel: SmoothingKernel,
    seed: u64,
    parallelism: usize,
) -> f64 {
    let (u2k, ksq) = kernel_constants(kernel);
    let m0 = (scenario.m)(x0);
    let m2 = (scenario.m2)(x0);
    let norm_m_sq: f64 = m0.iter().map(|v| v * v).sum();
    let fx = 1.0 / (scenario.x_range.1 - scenario.x_range.0);
    let bias = 0.5 * u2k * m2.iter().zip(&m0).map(|(a, b)| a * b).sum::<f64>() * h * h;
    // E<eps, m>^2 = |m|^2 / d for i.i.d. N(0, 1/d) components.
    let var = ksq * scenario.sigma * scenario.sigma * (norm_m_sq / scenario.dim as f64) / fx;
    let z = normal_quantile(1.0 - alpha / 2.0);
    // Floating-point slack keeps the zero-noise limit (exact pivot 0,
    // bound 0) deterministic.
    let bound = (var / (n as f64 * h)).sqrt() * z + 1e-10 * (1.0 + norm_m_sq);

    let covered = parallel::map_indexed(reps, parallelism, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(seed, r as u64));
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let comp_sd = scenario.sigma / (scenario.dim as f64).sqrt();
        for _ in 0..n {
            let x = scenario.x_range.0
                + (scenario.x_range.1 - scenario.x_range.0) * rng.random::<f64>();
            let mut y = (scenario.m)(x);
            for v in y.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *v += comp_sd * g;
            }
            xs.push(x);
            ys.push(y);
        }
        match fit_hilbert_lfr(&xs, &ys, x0, h, kernel) {
            Ok(l) => {
                let s: f64 = l.iter().zip(&m0).map(|(a, b)| a * b).sum::<f64>() - norm_m_sq;
                u8::from((s - bias).abs() <= bound)
            }
            Err(_) => 0,
        }
    });
    covered.iter().map(|&c| c as usize).sum::<usize>() as f64 / reps as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epanechnikov_kernel_constants() {
        let (u2k, ksq) = kernel_constants(SmoothingKernel::Epanechnikov);
        assert!((u2k - 0.2).abs() < 1e-12);
        assert!((ksq - 0.6).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_reference_values() {
        assert!((normal_quantile(0.975) - 1.959_963_985).abs() < 1e-5);
        assert!((normal_quantile(0.5)).abs() < 1e-9);
        assert!((normal_quantile(0.75) - 0.674_489_750_196).abs() < 1e-8);
        // symmetry
        for p in [0.01, 0.1, 0.3, 0.42] {
            assert!((normal_quantile(p) + normal_quantile(1.0 - p)).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_mean_kills_lfr_bias_only() {
        let model = Model1d {
            m: &|x| 2.0 * x + 1.0,
            m1: &|_| 2.0,
            m2: &|_| 0.0,
            f: &|x| 2.0 * x,
            f1: &|_| 2.0,
            sigma2: &|_| 0.01,
        };
        let (nw, lfr) =
            theoretical_bias_variance_1d(&model, SmoothingKernel::Epanechnikov, 0.1, 100, 0.5)
                .unwrap();
        assert_eq!(lfr.bias_hat, 0.0);
        // NW keeps the design term: u2k * m' f'/f * h^2
        let want = 0.2 * 2.0 * (2.0 / 1.0) * 0.01;
        assert!((nw.bias_hat - want).abs() < 1e-12);
        assert_eq!(nw.var_hat, lfr.var_hat);
    }

    #[test]
    fn uniform_design_equalizes_biases() {
        let model = Model1d {
            m: &|x| (std::f64::consts::PI * x).sin(),
            m1: &|x| std::f64::consts::PI * (std::f64::consts::PI * x).cos(),
            m2: &|x| -std::f64::consts::PI.powi(2) * (std::f64::consts::PI * x).sin(),
            f: &|_| 1.0,
            f1: &|_| 0.0,
            sigma2: &|_| 0.01,
        };
        let (nw, lfr) =
            theoretical_bias_variance_1d(&model, SmoothingKernel::Epanechnikov, 0.1, 200, 0.2)
                .unwrap();
        assert!((nw.bias_hat - lfr.bias_hat).abs() < 1e-15);
    }

    #[test]
    fn density_must_be_positive() {
        let model = Model1d {
            m: &|_| 0.0,
            m1: &|_| 0.0,
            m2: &|_| 0.0,
            f: &|_| 0.0,
            f1: &|_| 0.0,
            sigma2: &|_| 1.0,
        };
        assert!(
            theoretical_bias_variance_1d(&model, SmoothingKernel::Epanechnikov, 0.1, 10, 0.0)
                .is_err()
        );
    }

    #[test]
    fn zero_noise_linear_model_always_covered() {
        // Local-linear weights reproduce linear functions exactly, so the
        // pivot is identically zero and coverage is 1.
        let scenario = HilbertScenario {
            dim: 2,
            m: &|x| vec![1.0 + x, 0.5 - 2.0 * x],
            m2: &|_| vec![0.0, 0.0],
            sigma: 0.0,
            x_range: (-0.5, 0.5),
        };
        let c = coverage_experiment(
            &scenario,
            50,
            0.2,
            20,
            0.05,
            0.1,
            SmoothingKernel::Epanechnikov,
            7,
            1,
        );
        assert_eq!(c, 1.0);
    }

    #[test]
    fn coverage_is_deterministic_across_parallelism() {
        let scenario = HilbertScenario {
            dim: 2,
            m: &|x| vec![1.0 + x, 0.5 - 2.0 * x],
            m2: &|_| vec![0.0, 0.0],
            sigma: 0.3,
            x_range: (-0.5, 0.5),
        };
        let args = (100, 0.15, 40, 0.05, 0.1);
        let a = coverage_experiment(
            &scenario,
            args.0,
            args.1,
            args.2,
            args.3,
            args.4,
            SmoothingKernel::Epanechnikov,
            11,
            1,
        );
        let b = coverage_experiment(
            &scenario,
            args.0,
            args.1,
            args.2,
            args.3,
            args.4,
            SmoothingKernel::Epanechnikov,
            11,
            4,
        );
        assert_eq!(a, b);
    }
}
