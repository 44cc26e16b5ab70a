//! Algebraic geometry of the kernel on the normalized model.
//!
//! The zero set of `gamma` is a parabola, parameterised by `s = x - y`:
//! `x(s) = -s(s - 2 mu2)/2`, `y(s) = -s(s + 2 mu1)/2`. Everything in the
//! compensation series is a rational function of `s` evaluated along this
//! curve, so most helpers here are generic over [`Scalar`].

use crate::model::NormalizedModel;
use crate::scalar::Scalar;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum KernelError {
    #[error("point ({a}, {b}) is not on the kernel parabola (|gamma| = {residual:e})")]
    OffParabola { a: f64, b: f64, residual: f64 },
    #[error("{what} = {value} is outside its domain [{lo}, {hi}]")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },
}

/// Choice of square-root sign in `Y±` / `X±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// A real point of the parabola together with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
}

/// Point `m` of the compensation ladder started at `(a_0, b_0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderPoint<T = f64> {
    pub m: i64,
    pub a: T,
    pub b: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalData {
    pub s_star: f64,
    pub s_star2: f64,
    pub x_star: f64,
    pub y_star: f64,
    pub x_star2: f64,
    pub y_star2: f64,
    pub alpha_star: f64,
    pub alpha_star2: f64,
    pub pole_phi2: bool,
    pub pole_phi1: bool,
    pub x_max: f64,
    pub y_max: f64,
    pub alpha_mu: f64,
}

/// Tolerance used to decide that `s*` sits exactly on the branch point.
pub const DOUBLE_ROOT_TOL: f64 = 1e-12;

impl NormalizedModel {
    pub fn gamma(&self, x: Complex64, y: Complex64) -> Complex64 {
        let d = x - y;
        d * d * 0.5 + x * self.mu1 + y * self.mu2
    }

    pub fn gamma1(&self, x: Complex64, y: Complex64) -> Complex64 {
        x + y * self.r1
    }

    pub fn gamma2(&self, x: Complex64, y: Complex64) -> Complex64 {
        x * self.r2 + y
    }

    /// `gamma'_y`, the partial derivative of the kernel in `y`.
    pub fn gamma_dy(&self, x: Complex64, y: Complex64) -> Complex64 {
        y - x + self.mu2
    }

    /// `gamma'_x`, the partial derivative of the kernel in `x`.
    pub fn gamma_dx(&self, x: Complex64, y: Complex64) -> Complex64 {
        x - y + self.mu1
    }

    pub fn x_of_s<T: Scalar>(&self, s: T) -> T {
        -(s * (s - 2.0 * self.mu2)) * 0.5
    }

    pub fn y_of_s<T: Scalar>(&self, s: T) -> T {
        -(s * (s + 2.0 * self.mu1)) * 0.5
    }

    /// `gamma1` restricted to the parabola.
    pub fn gamma1_s<T: Scalar>(&self, s: T) -> T {
        self.x_of_s(s) + self.y_of_s(s) * self.r1
    }

    /// `gamma2` restricted to the parabola.
    pub fn gamma2_s<T: Scalar>(&self, s: T) -> T {
        self.x_of_s(s) * self.r2 + self.y_of_s(s)
    }

    /// `exp(a0 x(s) + b0 y(s))`.
    pub fn exp_s<T: Scalar>(&self, s: T, z0: (f64, f64)) -> T {
        (self.x_of_s(s) * z0.0 + self.y_of_s(s) * z0.1).exp()
    }

    pub fn branch_y(&self, x: Complex64, branch: Branch) -> Complex64 {
        let root = (Complex64::from(self.mu2 * self.mu2) - x * 2.0).sqrt();
        x - self.mu2 + root * branch.sign()
    }

    pub fn branch_x(&self, y: Complex64, branch: Branch) -> Complex64 {
        let root = (Complex64::from(self.mu1 * self.mu1) - y * 2.0).sqrt();
        y - self.mu1 + root * branch.sign()
    }

    /// Parameter `s` with `z(s) = (x, Y+(x))`; `Re s <= mu2`.
    pub fn s_of_x(&self, x: Complex64) -> Complex64 {
        Complex64::from(self.mu2) - (Complex64::from(self.mu2 * self.mu2) - x * 2.0).sqrt()
    }

    /// Parameter `s` with `z(s) = (X+(y), y)`; `Re s >= -mu1`.
    pub fn s_of_y(&self, y: Complex64) -> Complex64 {
        Complex64::from(-self.mu1) + (Complex64::from(self.mu1 * self.mu1) - y * 2.0).sqrt()
    }

    pub fn parabola(&self, s: f64) -> SPoint {
        SPoint { s, x: self.x_of_s(s), y: self.y_of_s(s) }
    }

    /// Involution fixing the first coordinate.
    pub fn zeta<T: Scalar>(&self, s: T) -> T {
        -s + 2.0 * self.mu2
    }

    /// Involution fixing the second coordinate.
    pub fn eta<T: Scalar>(&self, s: T) -> T {
        -s - 2.0 * self.mu1
    }

    /// `(zeta . eta)^n`, the translation by `2n`.
    pub fn shift<T: Scalar>(&self, s: T, n: i64) -> T {
        s + 2.0 * n as f64
    }

    pub fn s_min(&self) -> f64 {
        -self.mu1
    }

    pub fn s_max(&self) -> f64 {
        self.mu2
    }

    pub fn x_max(&self) -> f64 {
        0.5 * self.mu2 * self.mu2
    }

    pub fn y_max(&self) -> f64 {
        0.5 * self.mu1 * self.mu1
    }

    pub fn alpha_mu(&self) -> f64 {
        self.mu2.atan2(self.mu1)
    }

    /// Parameter of ladder point `m` started from parameter `s0`.
    ///
    /// Even points step down by `eta . zeta` (translation by -2); odd
    /// points are the `zeta` images of the even ones, so `a_{2n+1} = a_{2n}`
    /// and `b_{2n+1} = b_{2n+2}`.
    pub fn ladder_s<T: Scalar>(&self, s0: T, m: i64) -> T {
        let n = m.div_euclid(2);
        if m.rem_euclid(2) == 0 {
            s0 - 2.0 * n as f64
        } else {
            self.zeta(s0 - 2.0 * n as f64)
        }
    }

    /// Odd points take their coordinates from the even neighbours, so the
    /// shared coordinates agree exactly rather than up to rounding.
    pub fn ladder_point<T: Scalar>(&self, s0: T, m: i64) -> LadderPoint<T> {
        let n = m.div_euclid(2);
        let even = |k: i64| s0 - 2.0 * k as f64;
        if m.rem_euclid(2) == 0 {
            let s = even(n);
            LadderPoint { m, a: self.x_of_s(s), b: self.y_of_s(s) }
        } else {
            LadderPoint { m, a: self.x_of_s(even(n)), b: self.y_of_s(even(n + 1)) }
        }
    }

    /// Ladder point `m` from a real start `(a0, b0)` on the parabola.
    pub fn ladder(&self, a0: f64, b0: f64, m: i64) -> Result<LadderPoint, KernelError> {
        let residual = self.gamma(a0.into(), b0.into()).norm();
        if residual > 1e-10 * (1.0 + a0.abs() + b0.abs()) {
            return Err(KernelError::OffParabola { a: a0, b: b0, residual });
        }
        Ok(self.ladder_point(a0 - b0, m))
    }

    /// Saddle parameter of direction `alpha`.
    pub fn s_of_alpha(&self, alpha: f64) -> Result<f64, KernelError> {
        if !(0.0..=FRAC_PI_2).contains(&alpha) {
            return Err(KernelError::OutOfRange { what: "alpha", value: alpha, lo: 0.0, hi: FRAC_PI_2 });
        }
        if alpha == FRAC_PI_2 {
            return Ok(self.s_min());
        }
        Ok(self.s_of_alpha_unchecked(alpha))
    }

    /// Same formula without the range check. It is analytic in `alpha`,
    /// which the finite-difference edge cases rely on.
    pub fn s_of_alpha_unchecked(&self, alpha: f64) -> f64 {
        let (sn, cs) = alpha.sin_cos();
        (self.mu2 * cs - self.mu1 * sn) / (cs + sn)
    }

    pub fn alpha_of_s(&self, s: f64) -> Result<f64, KernelError> {
        if !(self.s_min()..=self.s_max()).contains(&s) {
            return Err(KernelError::OutOfRange { what: "s", value: s, lo: self.s_min(), hi: self.s_max() });
        }
        Ok((self.mu2 - s).atan2(s + self.mu1))
    }

    /// Maximiser of `cos(alpha) x + sin(alpha) y` over the parabola.
    pub fn saddle(&self, alpha: f64) -> Result<(f64, f64), KernelError> {
        let p = self.parabola(self.s_of_alpha(alpha)?);
        Ok((p.x, p.y))
    }

    pub fn s_star(&self) -> f64 {
        2.0 / (1.0 + self.r2)
    }

    pub fn s_star2(&self) -> f64 {
        -2.0 / (1.0 + self.r1)
    }

    pub fn critical_points(&self) -> CriticalData {
        let s_star = self.s_star();
        let s_star2 = self.s_star2();
        let pole_phi2 = s_star < self.s_max();
        let pole_phi1 = s_star2 > self.s_min();
        let x_star = self.x_of_s(s_star);
        let y_star2 = self.y_of_s(s_star2);
        let y_star = self.branch_y(x_star.into(), Branch::Plus).re;
        let x_star2 = self.branch_x(y_star2.into(), Branch::Plus).re;
        let alpha_star = if pole_phi2 { (self.mu2 - s_star).atan2(s_star + self.mu1) } else { 0.0 };
        let alpha_star2 = if pole_phi1 { (self.mu2 - s_star2).atan2(s_star2 + self.mu1) } else { FRAC_PI_2 };
        CriticalData {
            s_star,
            s_star2,
            x_star,
            y_star,
            x_star2,
            y_star2,
            alpha_star,
            alpha_star2,
            pole_phi2,
            pole_phi1,
            x_max: self.x_max(),
            y_max: self.y_max(),
            alpha_mu: self.alpha_mu(),
        }
    }

    /// `s*` coincides with the branch point `s_max` (double-root case).
    pub fn star_is_double(&self) -> bool {
        (self.s_star() - self.s_max()).abs() <= DOUBLE_ROOT_TOL
    }

    pub fn star2_is_double(&self) -> bool {
        (self.s_star2() - self.s_min()).abs() <= DOUBLE_ROOT_TOL
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn p0() -> NormalizedModel {
        NormalizedModel::new(0.5, 0.0, 0.0).unwrap()
    }
    fn p1() -> NormalizedModel {
        NormalizedModel::new(0.2, 0.0, 2.0).unwrap()
    }
    fn c(x: f64) -> Complex64 {
        Complex64::from(x)
    }

    #[test]
    fn gamma_examples() {
        let m = p0();
        assert_eq!(m.gamma(c(0.0), c(0.0)), c(0.0));
        assert!(m.gamma(c(-3.0), c(-1.0)).norm() < 1e-15);
        let q = p1();
        let xs = 14.0 / 45.0;
        let ym = q.branch_y(c(xs), Branch::Minus);
        assert!((ym.re + 28.0 / 45.0).abs() < 1e-12);
        assert!(q.gamma2(c(xs), ym).norm() < 1e-12);
    }

    #[test]
    fn branches() {
        let m = p0();
        assert!(m.branch_y(c(0.0), Branch::Plus).norm() < 1e-15);
        assert!((m.branch_y(c(0.0), Branch::Minus) - c(-1.0)).norm() < 1e-15);
        let y = m.branch_y(Complex64::new(-0.1, 5.0), Branch::Minus);
        assert!(y.re < 0.0);
        for x in [Complex64::new(-0.3, 2.0), Complex64::new(0.1, -0.5), c(-4.0)] {
            for b in [Branch::Plus, Branch::Minus] {
                assert!(m.gamma(x, m.branch_y(x, b)).norm() < 1e-12);
                assert!(m.gamma(m.branch_x(x, b), x).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parabola_examples() {
        let m = p0();
        let p = m.parabola(m.s_max());
        assert!((p.x - 0.125).abs() < 1e-15 && (p.y + 0.375).abs() < 1e-15);
        assert_eq!((m.parabola(0.0).x, m.parabola(0.0).y), (0.0, 0.0));
        let q = p1().parabola(2.0 / 3.0);
        assert!((q.x - 14.0 / 45.0).abs() < 1e-15);
        assert!((q.y + 16.0 / 45.0).abs() < 1e-15);
        for s in [-0.4, 0.0, 0.3] {
            let pt = m.parabola(s);
            assert!((m.branch_y(c(pt.x), Branch::Plus).re - pt.y).abs() < 1e-14);
            assert!((m.s_of_x(c(pt.x)).re - s).abs() < 1e-14);
            assert!((m.s_of_y(c(pt.y)).re - s).abs() < 1e-14);
        }
    }

    #[test]
    fn automorphisms() {
        let m = p0();
        assert!((m.zeta(0.2) - 0.8).abs() < 1e-15);
        assert!((m.eta(0.2) + 1.2).abs() < 1e-15);
        assert_eq!(m.zeta(m.zeta(0.37)), 0.37);
        assert_eq!(m.shift(m.shift(0.25, 3), -5), m.shift(0.25, -2));
        assert!((m.eta(m.zeta(0.3)) - (0.3 - 2.0)).abs() < 1e-15);
        assert!((m.zeta(m.eta(0.3)) - (0.3 + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn ladder_examples() {
        let m = p0();
        let l2 = m.ladder(0.0, 0.0, 2).unwrap();
        assert_eq!((l2.a, l2.b), (-3.0, -1.0));
        let lm2 = m.ladder(0.0, 0.0, -2).unwrap();
        assert_eq!((lm2.a, lm2.b), (-1.0, -3.0));
        let l1 = m.ladder(0.0, 0.0, 1).unwrap();
        assert_eq!((l1.a, l1.b), (0.0, -1.0));
        assert!(m.ladder(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn ladder_matches_polynomial_form() {
        let m = NormalizedModel::new(0.3, 0.5, -0.2).unwrap();
        let p = m.parabola(0.17);
        let (a0, b0) = (p.x, p.y);
        for n in -6i64..6 {
            let nf = n as f64;
            let a2n = -2.0 * nf * nf + 2.0 * (a0 - b0 - m.mu2) * nf + a0;
            let b2n = -2.0 * nf * nf + 2.0 * (a0 - b0 + m.mu1) * nf + b0;
            let b2n2 = {
                let k = nf + 1.0;
                -2.0 * k * k + 2.0 * (a0 - b0 + m.mu1) * k + b0
            };
            let e = m.ladder(a0, b0, 2 * n).unwrap();
            let o = m.ladder(a0, b0, 2 * n + 1).unwrap();
            assert!((e.a - a2n).abs() < 1e-10 && (e.b - b2n).abs() < 1e-10);
            assert!((o.a - a2n).abs() < 1e-10 && (o.b - b2n2).abs() < 1e-10);
        }
    }

    #[test]
    fn alpha_map() {
        let m = p0();
        assert!(m.s_of_alpha(FRAC_PI_4).unwrap().abs() < 1e-16);
        assert_eq!(m.s_of_alpha(0.0).unwrap(), m.s_max());
        assert!((m.s_of_alpha(FRAC_PI_2).unwrap() - m.s_min()).abs() < 1e-15);
        assert!((p1().alpha_of_s(2.0 / 3.0).unwrap() - 0.152_649_3).abs() < 1e-6);
        assert!(m.s_of_alpha(2.0).is_err());
        assert!(m.alpha_of_s(0.6).is_err());
    }

    #[test]
    fn saddle_examples() {
        let m = p0();
        let (x, y) = m.saddle(FRAC_PI_4).unwrap();
        assert!(x.abs() < 1e-16 && y.abs() < 1e-16);
        let (x, y) = m.saddle(0.0).unwrap();
        assert!((x - 0.125).abs() < 1e-15 && (y + 0.375).abs() < 1e-15);
        let q = p1();
        let (x, y) = q.saddle(q.critical_points().alpha_star).unwrap();
        assert!((x - 14.0 / 45.0).abs() < 1e-12 && (y + 16.0 / 45.0).abs() < 1e-12);
    }

    #[test]
    fn critical_examples() {
        let c0 = p0().critical_points();
        assert_eq!((c0.s_star, c0.s_star2), (2.0, -2.0));
        assert!(!c0.pole_phi1 && !c0.pole_phi2);
        assert_eq!((c0.alpha_star, c0.alpha_star2), (0.0, FRAC_PI_2));
        let c1 = p1().critical_points();
        assert!(c1.pole_phi2 && !c1.pole_phi1);
        assert!((c1.s_star - 2.0 / 3.0).abs() < 1e-15);
        assert!((c1.alpha_star - 0.152_649_3).abs() < 1e-6);
        assert!((c1.x_star - 0.311_111_1).abs() < 1e-6);
        assert!((c1.y_star + 0.355_555_6).abs() < 1e-6);
        assert_eq!(c1.alpha_star2, FRAC_PI_2);
        let mirror = NormalizedModel::new(0.8, 2.0, 0.0).unwrap().critical_points();
        assert!(mirror.pole_phi1 && !mirror.pole_phi2);
        assert!((mirror.s_star2 + 2.0 / 3.0).abs() < 1e-15);
        assert!((mirror.alpha_star2 - 6.5f64.atan()).abs() < 1e-12);
        assert_eq!(mirror.alpha_star, 0.0);
    }
}
