//! Boundary Laplace transforms `phi1`, `phi2` and the interior transform.
//!
//! With `F2(s) = phi2(x(s))` on the branch `y = Y+(x)`, eliminating `phi1`
//! between the functional equation at `zeta s` and at `s - 2` gives
//!
//! `F2(s) = -e(zeta s)/g2(zeta s)
//!     + sum_{n>=1} P_n [e(s-2n)/g2(s-2n) - e(zeta(s-2n))/g2(zeta(s-2n))]`
//!
//! with `P_n = prod_{k<n} G(s - 2k)` (see [`super::ratio_g`]). The `phi1`
//! series is the mirror image with `eta` and steps of `+2`. Both run
//! unchanged at complex `s`, which gives the transforms off the real axis.

use super::{valid_window, CompensationError};
use crate::kernel::Branch;
use crate::model::NormalizedModel;
use crate::scalar::Scalar;
use crate::series::{Accumulator, SeriesControl, SeriesValue};
use num_complex::Complex64;

/// Transform evaluator for a fixed starting point `z0`.
#[derive(Debug, Clone, Copy)]
pub struct Transforms {
    pub model: NormalizedModel,
    pub z0: (f64, f64),
    pub control: SeriesControl,
}

impl Transforms {
    pub fn new(model: NormalizedModel, z0: (f64, f64)) -> Self {
        Self { model, z0, control: SeriesControl::default() }
    }

    pub fn with_control(mut self, control: SeriesControl) -> Self {
        self.control = control;
        self
    }

    /// `phi2(x(s))` on the branch `Y+`, for any parameter with `Re s < mu2`
    /// other than the pole `s*`.
    pub fn phi2_param<T: Scalar>(&self, s: T) -> Result<SeriesValue, CompensationError> {
        let m = &self.model;
        let zs = m.zeta(s);
        let g2z = m.gamma2_s(zs);
        if g2z.abs() == 0.0 {
            return Err(CompensationError::Pole { x_star: m.critical_points().x_star });
        }
        let mut acc = Accumulator::<T>::new(self.control);
        acc.seed(-m.exp_s(zs, self.z0) / g2z);
        let mut p = T::from(1.0);
        let mut t = s;
        loop {
            // t = s - 2(n-1); u = s - 2n.
            let zt = m.zeta(t);
            let a = m.gamma1_s(zt) / m.gamma2_s(zt);
            let u = t - 2.0;
            let zu = m.zeta(u);
            let g1u = m.gamma1_s(u);
            let g2zu = m.gamma2_s(zu);
            if g1u.abs() == 0.0 || g2zu.abs() == 0.0 {
                return Err(CompensationError::VanishingDenominator {
                    factor: "gamma1(s - 2n) or gamma2(zeta(s - 2n))",
                    s: s.re(),
                });
            }
            let step = a * m.gamma2_s(u) / g1u;
            let term = p * (a * m.exp_s(u, self.z0) / g1u - step * m.exp_s(zu, self.z0) / g2zu);
            p = p * step;
            t = u;
            if acc.push(term) || acc.exhausted() {
                break;
            }
        }
        Ok(acc.finish())
    }

    /// `phi1(y(s))` on the branch `X+`, for `Re s > -mu1` other than `s**`.
    pub fn phi1_param<T: Scalar>(&self, s: T) -> Result<SeriesValue, CompensationError> {
        let m = &self.model;
        let es = m.eta(s);
        let g1e = m.gamma1_s(es);
        if g1e.abs() == 0.0 {
            return Err(CompensationError::Pole { x_star: m.critical_points().y_star2 });
        }
        let mut acc = Accumulator::<T>::new(self.control);
        acc.seed(-m.exp_s(es, self.z0) / g1e);
        let mut p = T::from(1.0);
        let mut t = s;
        loop {
            let et = m.eta(t);
            let a = m.gamma2_s(et) / m.gamma1_s(et);
            let u = t + 2.0;
            let eu = m.eta(u);
            let g2u = m.gamma2_s(u);
            let g1eu = m.gamma1_s(eu);
            if g2u.abs() == 0.0 || g1eu.abs() == 0.0 {
                return Err(CompensationError::VanishingDenominator {
                    factor: "gamma2(s + 2n) or gamma1(eta(s + 2n))",
                    s: s.re(),
                });
            }
            let step = a * m.gamma1_s(u) / g2u;
            let term = p * (a * m.exp_s(u, self.z0) / g2u - step * m.exp_s(eu, self.z0) / g1eu);
            p = p * step;
            t = u;
            if acc.push(term) || acc.exhausted() {
                break;
            }
        }
        Ok(acc.finish())
    }

    fn check_window(&self, s: f64) -> Result<(), CompensationError> {
        let (lo, hi) = valid_window(&self.model);
        if s > lo && s < hi {
            Ok(())
        } else {
            Err(CompensationError::OutsideWindow { s, lo, hi })
        }
    }

    /// `phi2(x(s))` for real `s` in the valid window.
    pub fn phi2_series(&self, s: f64) -> Result<SeriesValue, CompensationError> {
        self.check_window(s)?;
        self.phi2_param(s)
    }

    /// `phi1(y(s))` for real `s` in the valid window.
    pub fn phi1_series(&self, s: f64) -> Result<SeriesValue, CompensationError> {
        self.check_window(s)?;
        self.phi1_param(s)
    }

    /// `phi2(x)` for complex `x` off the cut `[x_max, inf)`.
    pub fn phi2_complex(&self, x: Complex64) -> Result<SeriesValue, CompensationError> {
        self.phi2_param(self.model.s_of_x(x))
    }

    /// `phi1(y)` for complex `y` off the cut `[y_max, inf)`.
    pub fn phi1_complex(&self, y: Complex64) -> Result<SeriesValue, CompensationError> {
        self.phi1_param(self.model.s_of_y(y))
    }

    /// `phi2(x)` through the functional equation on the branch `Y-`,
    /// which continues it meromorphically past `x_max` on the left sheet.
    pub fn phi2_continued(&self, x: Complex64) -> Result<Complex64, CompensationError> {
        let m = &self.model;
        let y = m.branch_y(x, Branch::Minus);
        let g2 = m.gamma2(x, y);
        if g2.norm() == 0.0 {
            return Err(CompensationError::Pole { x_star: m.critical_points().x_star });
        }
        let phi1 = self.phi1_complex(y)?.value;
        let e = (x * self.z0.0 + y * self.z0.1).exp();
        Ok(-(m.gamma1(x, y) * phi1 + e) / g2)
    }

    /// Mirror of [`Self::phi2_continued`] on the branch `X-`.
    pub fn phi1_continued(&self, y: Complex64) -> Result<Complex64, CompensationError> {
        let m = &self.model;
        let x = m.branch_x(y, Branch::Minus);
        let g1 = m.gamma1(x, y);
        if g1.norm() == 0.0 {
            return Err(CompensationError::Pole { x_star: m.critical_points().y_star2 });
        }
        let phi2 = self.phi2_complex(x)?.value;
        let e = (x * self.z0.0 + y * self.z0.1).exp();
        Ok(-(m.gamma2(x, y) * phi2 + e) / g1)
    }

    /// Numerator of the functional equation, `g1 phi1(y) + g2 phi2(x) + e^{z0.(x,y)}`.
    pub fn functional_numerator(&self, x: Complex64, y: Complex64) -> Result<Complex64, CompensationError> {
        let m = &self.model;
        let p1 = self.phi1_complex(y)?.value;
        let p2 = self.phi2_complex(x)?.value;
        Ok(m.gamma1(x, y) * p1 + m.gamma2(x, y) * p2 + (x * self.z0.0 + y * self.z0.1).exp())
    }

    /// Interior transform `phi(x, y) = E[int e^{(x,y).Z_t} dt]` for `Re x, Re y < 0`.
    ///
    /// On the parabola the numerator must vanish; the value there is the
    /// limit, taken by a symmetric Richardson average in `y`.
    pub fn phi_interior(&self, x: Complex64, y: Complex64) -> Result<Complex64, CompensationError> {
        let m = &self.model;
        let g = m.gamma(x, y);
        let scale = 1.0 + x.norm() + y.norm();
        if g.norm() > 1e-6 * scale {
            return Ok(-self.functional_numerator(x, y)? / g);
        }
        let num = self.functional_numerator(x, y)?;
        let ref_scale = (x * self.z0.0 + y * self.z0.1).exp().norm().max(1e-300);
        if num.norm() > 1e-8 * ref_scale.max(1.0) {
            return Err(CompensationError::Inconsistent { residual: num.norm() });
        }
        let h = 1e-3 * scale;
        let sym = |h: f64| -> Result<Complex64, CompensationError> {
            let yp = y + h;
            let ym = y - h;
            let vp = -self.functional_numerator(x, yp)? / m.gamma(x, yp);
            let vm = -self.functional_numerator(x, ym)? / m.gamma(x, ym);
            Ok((vp + vm) * 0.5)
        };
        let f1 = sym(h)?;
        let f2 = sym(0.5 * h)?;
        Ok((f2 * 4.0 - f1) / 3.0)
    }

    /// Residue of `phi2` at `x*`, as the Richardson-extrapolated limit of
    /// `(x - x*) phi2(x)` from the left along the continued formula.
    pub fn residue_phi2(&self) -> Result<f64, CompensationError> {
        let cd = self.model.critical_points();
        if !cd.pole_phi2 {
            return Err(CompensationError::NoPole("phi2"));
        }
        let f = |d: f64| -> Result<f64, CompensationError> {
            Ok((-d * self.phi2_continued(Complex64::from(cd.x_star - d))?).re)
        };
        richardson_limit(f, 1e-3 * (1.0 + cd.x_star.abs()))
    }

    /// Residue of `phi1` at `y**`, mirror of [`Self::residue_phi2`].
    pub fn residue_phi1(&self) -> Result<f64, CompensationError> {
        let cd = self.model.critical_points();
        if !cd.pole_phi1 {
            return Err(CompensationError::NoPole("phi1"));
        }
        let f = |d: f64| -> Result<f64, CompensationError> {
            Ok((-d * self.phi1_continued(Complex64::from(cd.y_star2 - d))?).re)
        };
        richardson_limit(f, 1e-3 * (1.0 + cd.y_star2.abs()))
    }
}

/// Limit of `f(d)` as `d -> 0+` for `f` smooth in `d`, by a Richardson
/// table over `d0, d0/2, d0/4, d0/8`.
pub(crate) fn richardson_limit<E>(f: impl Fn(f64) -> Result<f64, E>, d0: f64) -> Result<f64, E> {
    const LEVELS: usize = 4;
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    for i in 0..LEVELS {
        table[i][0] = f(d0 / (1u32 << i) as f64)?;
        for j in 1..=i {
            let w = (1u32 << j) as f64;
            table[i][j] = (w * table[i][j - 1] - table[i - 1][j - 1]) / (w - 1.0);
        }
    }
    Ok(table[LEVELS - 1][LEVELS - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compensation::ratio_g;

    fn models() -> Vec<NormalizedModel> {
        vec![
            NormalizedModel::new(0.5, 0.0, 0.0).unwrap(),
            NormalizedModel::new(0.5, 0.5, 0.5).unwrap(),
            NormalizedModel::new(0.2, 0.0, 2.0).unwrap(),
            NormalizedModel::new(0.8, 2.0, 0.0).unwrap(),
        ]
    }

    #[test]
    fn p0_closed_value() {
        let m = NormalizedModel::new(0.5, 0.0, 0.0).unwrap();
        for z0 in [(1.0f64, 1.0f64), (2.0, 0.5)] {
            let v = Transforms::new(m, z0).phi2_series(0.0).unwrap();
            assert!(v.converged);
            assert!((v.re() - (-z0.1).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn functional_equation_on_valid_arcs() {
        for m in models() {
            let tr = Transforms::new(m, (1.0, 0.7));
            // Y- arc (t > mu2) uses phi2 at zeta t; X- arc (t < -mu1) uses phi1 at eta t.
            for t in [1.2, 1.7, 2.5, -1.3, -2.1] {
                let (s2, s1) = if t > m.mu2 { (m.zeta(t), t) } else { (t, m.eta(t)) };
                let f2 = tr.phi2_param(s2).unwrap().value;
                let f1 = tr.phi1_param(s1).unwrap().value;
                let res = Complex64::from(m.gamma1_s(t)) * f1 + Complex64::from(m.gamma2_s(t)) * f2 + m.exp_s(t, tr.z0);
                assert!(res.norm() < 1e-12, "model {m:?} t {t}: {res}");
            }
        }
    }

    #[test]
    fn recursion_residual() {
        for m in models() {
            let tr = Transforms::new(m, (1.0, 1.0));
            let (lo, hi) = valid_window(&m);
            for k in 1..10 {
                let s = lo + (hi - lo) * k as f64 / 10.0;
                let f = tr.phi2_series(s).unwrap().re();
                let f_prev = tr.phi2_param(s - 2.0).unwrap().re();
                let g = ratio_g(&m, s).unwrap();
                let zs = m.zeta(s);
                let bracket = g * m.exp_s(s - 2.0, tr.z0) / m.gamma2_s(s - 2.0) - m.exp_s(zs, tr.z0) / m.gamma2_s(zs);
                assert!((f - g * f_prev - bracket).abs() < 1e-12 * f.abs());
                assert!(f > 0.0);
            }
        }
    }

    #[test]
    fn complex_and_continued_agree() {
        let m = NormalizedModel::new(0.5, 0.5, 0.5).unwrap();
        let tr = Transforms::new(m, (1.0, 1.0));
        for (re, im) in [(-0.5, 0.0), (-0.2, 3.0), (-1.5, -0.7), (-0.05, 12.0)] {
            let x = Complex64::new(re, im);
            let a = tr.phi2_complex(x).unwrap().value;
            let b = tr.phi2_continued(x).unwrap();
            assert!((a - b).norm() < 1e-10 * a.norm(), "{x}: {a} vs {b}");
            let a1 = tr.phi1_complex(x).unwrap().value;
            let b1 = tr.phi1_continued(x).unwrap();
            assert!((a1 - b1).norm() < 1e-10 * a1.norm());
        }
        let real = tr.phi2_complex(Complex64::from(-0.5)).unwrap().value;
        assert!(real.im.abs() < 1e-15 && real.re > 0.0);
    }

    #[test]
    fn interior_on_and_off_parabola() {
        let m = NormalizedModel::new(0.5, 0.0, 0.0).unwrap();
        let tr = Transforms::new(m, (1.0, 1.0));
        let v = tr.phi_interior(Complex64::from(-1.0), Complex64::from(-1.0)).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-14);
        // Continuity across the parabola: (-3, -1) lies on it.
        let on = tr.phi_interior(Complex64::from(-3.0), Complex64::from(-1.0)).unwrap();
        let lo = tr.phi_interior(Complex64::from(-3.0), Complex64::from(-1.01)).unwrap();
        let hi = tr.phi_interior(Complex64::from(-3.0), Complex64::from(-0.99)).unwrap();
        let mid = (lo + hi) * 0.5;
        assert!((on - mid).norm() < 1e-3 * on.norm(), "{on} {lo} {hi}");
    }

    #[test]
    fn residue_p1() {
        let m = NormalizedModel::new(0.2, 0.0, 2.0).unwrap();
        let tr = Transforms::new(m, (1.0, 1.0));
        let r = tr.residue_phi2().unwrap();
        assert!(r.is_finite() && r != 0.0);
        assert!(Transforms::new(NormalizedModel::new(0.5, 0.0, 0.0).unwrap(), (1.0, 1.0)).residue_phi2().is_err());
    }

    #[test]
    fn transforms_decay_with_argument() {
        for m in models() {
            let tr = Transforms::new(m, (1.0, 1.0));
            let v0 = tr.phi2_complex(Complex64::from(0.0)).unwrap().re();
            for p in [0.5, 1.0, 2.0] {
                let v = tr.phi2_complex(Complex64::from(-p)).unwrap().re();
                assert!(v <= (-2.0 * p).exp() * v0 * (1.0 + 1e-12));
            }
        }
    }
}
