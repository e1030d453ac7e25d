//! Small numerical building blocks: compensated summation, panel
//! Gauss–Legendre quadrature, bracketed root finding, angle wrapping.

use std::f64::consts::PI;

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Wraps an angle to the canonical range [-pi, pi); ties at +pi map to -pi.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

// 16-point Gauss-Legendre abscissae/weights on [-1, 1] (positive half).
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_91,
    0.458_016_777_657_227_39,
    0.617_876_244_402_643_75,
    0.755_404_408_355_003_03,
    0.865_631_202_387_831_74,
    0.944_575_023_073_232_58,
    0.989_400_934_991_649_93,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_50,
    0.182_603_415_044_923_59,
    0.169_156_519_395_002_54,
    0.149_595_988_816_576_73,
    0.124_628_971_255_533_87,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_09,
];

/// 16-point Gauss–Legendre quadrature of `f` over [a, b].
pub fn gl16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..8 {
        let dx = half * GL16_X[i];
        acc += GL16_W[i] * (f(mid + dx) + f(mid - dx));
    }
    acc * half
}

/// Composite Gauss–Legendre quadrature with panels no longer than `max_panel`.
pub fn quad_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, max_panel: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = ((b - a).abs() / max_panel).ceil().max(1.0) as usize;
    let step = (b - a) / n as f64;
    let mut acc = KahanSum::new();
    for i in 0..n {
        let lo = a + step * i as f64;
        acc.add(gl16(f, lo, lo + step));
    }
    acc.value()
}

/// Brent's method on a bracketing interval [a, b] with fa*fb <= 0.
/// Returns the abscissa; `tol` is an absolute tolerance on x.
pub fn brent_root<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    tol: f64,
    max_iter: usize,
) -> Option<f64> {
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_canonical_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(3.0 * PI) - (-PI)).abs() < 1e-15);
        assert!((wrap_angle(2.5 * PI) - 0.5 * PI).abs() < 1e-12);
        assert!((wrap_angle(-2.5 * PI) + 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_known_integrals() {
        let f = |x: f64| x * x;
        assert!((quad_panels(&f, 0.0, 1.0, 0.5) - 1.0 / 3.0).abs() < 1e-14);
        let g = |x: f64| x.sin();
        assert!((quad_panels(&g, 0.0, PI, 0.8) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn brent_finds_simple_root() {
        let f = |x: f64| x * x - 2.0;
        let r = brent_root(f, 0.0, 2.0, f(0.0), f(2.0), 1e-14, 200).unwrap();
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kahan_sums_ill_conditioned_series() {
        let mut s = KahanSum::new();
        s.add(1.0);
        for _ in 0..10_000 {
            s.add(1e-16);
        }
        assert!((s.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
