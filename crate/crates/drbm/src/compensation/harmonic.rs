//! Martin harmonic functions `h_alpha(z) = sum_m kappa_m e^{z.(a_m, b_m)}`.
//!
//! Coefficients follow from pairing: terms `2n, 2n+1` share `a` and cancel
//! the condition on the face `y = 0`; terms `2n+1, 2n+2` share `b` and
//! cancel the condition on `x = 0`. The closed product form of `kappa_m` is
//! kept alongside the recursion as an independent route.

use super::CompensationError;
use crate::model::NormalizedModel;
use crate::series::{Accumulator, SeriesControl, SeriesValue};
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

/// Angle tolerance for recognising the endpoints `alpha*`, `alpha**` and
/// the drift angle.
const ANGLE_TOL: f64 = 1e-12;

/// Finite-difference steps for the derivative edge case.
const DERIVATIVE_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    Interior,
    StarPole,
    StarDerivative,
    StarDouble,
    Star2Pole,
    Star2Derivative,
    Star2Double,
    DriftConstant,
}

impl CaseTag {
    fn mirrored(self) -> Self {
        match self {
            CaseTag::StarPole => CaseTag::Star2Pole,
            CaseTag::StarDerivative => CaseTag::Star2Derivative,
            CaseTag::StarDouble => CaseTag::Star2Double,
            CaseTag::Star2Pole => CaseTag::StarPole,
            CaseTag::Star2Derivative => CaseTag::StarDerivative,
            CaseTag::Star2Double => CaseTag::StarDouble,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::Interior => "interior",
            CaseTag::StarPole => "star_pole",
            CaseTag::StarDerivative => "star_derivative",
            CaseTag::StarDouble => "star_double",
            CaseTag::Star2Pole => "star2_pole",
            CaseTag::Star2Derivative => "star2_derivative",
            CaseTag::Star2Double => "star2_double",
            CaseTag::DriftConstant => "drift_constant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicEval {
    pub alpha: f64,
    pub z0: (f64, f64),
    pub value: f64,
    pub case_tag: CaseTag,
    pub series: SeriesValue,
}

/// Evaluator of the harmonic family on one model.
#[derive(Debug, Clone, Copy)]
pub struct Harmonic {
    pub model: NormalizedModel,
    pub control: SeriesControl,
}

impl Harmonic {
    pub fn new(model: NormalizedModel) -> Self {
        Self { model, control: SeriesControl::default() }
    }

    pub fn with_control(mut self, control: SeriesControl) -> Self {
        self.control = control;
        self
    }

    /// Coefficient ratio `c_{j+1} / c_j` on the ladder from `s0`.
    fn step_up(&self, s0: f64, j: i64) -> Result<f64, CompensationError> {
        let m = &self.model;
        let (sj, sk) = (m.ladder_s(s0, j), m.ladder_s(s0, j + 1));
        let (num, den, factor) = if j.rem_euclid(2) == 0 {
            (m.gamma2_s(sj), m.gamma2_s(sk), "gamma2")
        } else {
            (m.gamma1_s(sj), m.gamma1_s(sk), "gamma1")
        };
        if den == 0.0 {
            return Err(CompensationError::VanishingKappa { m: j + 1, factor });
        }
        Ok(-num / den)
    }

    /// Coefficient ratio `c_{j-1} / c_j` on the ladder from `s0`.
    fn step_down(&self, s0: f64, j: i64) -> Result<f64, CompensationError> {
        let m = &self.model;
        let (sj, sk) = (m.ladder_s(s0, j), m.ladder_s(s0, j - 1));
        let (num, den, factor) = if j.rem_euclid(2) == 0 {
            (m.gamma1_s(sj), m.gamma1_s(sk), "gamma1")
        } else {
            (m.gamma2_s(sj), m.gamma2_s(sk), "gamma2")
        };
        if den == 0.0 {
            return Err(CompensationError::VanishingKappa { m: j - 1, factor });
        }
        Ok(-num / den)
    }

    fn exp_m(&self, s0: f64, m: i64, z0: (f64, f64)) -> f64 {
        self.model.exp_s(self.model.ladder_s(s0, m), z0)
    }

    /// Sum of `c_j e_j` over `j = start, start+dir, ...`, grouped in
    /// consecutive pairs so that the boundary cancellation happens inside
    /// each accumulated term.
    fn side_sum(
        &self,
        s0: f64,
        start: i64,
        c_start: f64,
        dir: i64,
        z0: (f64, f64),
    ) -> Result<SeriesValue, CompensationError> {
        let mut acc = Accumulator::<f64>::new(self.control);
        let mut j = start;
        let mut c = c_start;
        let step = |j: i64| if dir > 0 { self.step_up(s0, j) } else { self.step_down(s0, j) };
        loop {
            let c_next = c * step(j)?;
            let pair = c * self.exp_m(s0, j, z0) + c_next * self.exp_m(s0, j + dir, z0);
            let c_after = c_next * step(j + dir)?;
            j += 2 * dir;
            c = c_after;
            if acc.push(pair) || acc.exhausted() {
                break;
            }
        }
        Ok(acc.finish())
    }

    /// Interior formula with the ladder started at parameter `s0`.
    ///
    /// Defined for any `s0` whose ladder avoids the zeros of the linear
    /// forms; it equals `h_alpha` when `s0` is the saddle of `alpha`.
    pub fn interior_at(&self, s0: f64, z0: (f64, f64)) -> Result<SeriesValue, CompensationError> {
        let up = self.side_sum(s0, 0, 1.0, 1, z0)?;
        let c_m1 = self.step_down(s0, 0)?;
        let down = self.side_sum(s0, -1, c_m1, -1, z0)?;
        Ok(up.combine(down, &self.control))
    }

    /// Endpoint function at `alpha* > 0`: the ladder from `z(s*)` with the
    /// coefficient of `e^{z.(a_1, b_1)}` normalised to one.
    fn star_pole(&self, z0: (f64, f64)) -> Result<SeriesValue, CompensationError> {
        self.side_sum(self.model.s_star(), 1, 1.0, 1, z0)
    }

    /// Endpoint function when `s* = s_max` exactly.
    fn star_double(&self, z0: (f64, f64)) -> Result<SeriesValue, CompensationError> {
        let s0 = self.model.s_max();
        let c2 = self.step_up(s0, 1)?;
        let up = self.side_sum(s0, 2, c2, 1, z0)?;
        let c_m1 = self.step_down(s0, 0)?;
        let down = self.side_sum(s0, -1, c_m1, -1, z0)?;
        let lead =
            SeriesValue { value: (2.0 * self.exp_m(s0, 0, z0)).into(), n_terms: 1, tail_bound: 0.0, converged: true };
        Ok(lead.combine(up, &self.control).combine(down, &self.control))
    }

    /// `d/d alpha h_alpha(z0)` at `alpha = 0`, by Richardson-extrapolated
    /// central differences. The interior formula is analytic in the saddle
    /// parameter, so negative angles are legitimate evaluation points.
    fn star_derivative(&self, z0: (f64, f64)) -> Result<SeriesValue, CompensationError> {
        let m = &self.model;
        let mut d = [0.0f64; 3];
        let mut tail = 0.0f64;
        let mut converged = true;
        let mut n_terms = 0;
        for (k, &h) in DERIVATIVE_STEPS.iter().enumerate() {
            let plus = self.interior_at(m.s_of_alpha_unchecked(h), z0)?;
            let minus = self.interior_at(m.s_of_alpha_unchecked(-h), z0)?;
            d[k] = (plus.re() - minus.re()) / (2.0 * h);
            tail = tail.max((plus.tail_bound + minus.tail_bound) / (2.0 * h));
            converged &= plus.converged && minus.converged;
            n_terms += plus.n_terms + minus.n_terms;
        }
        let r1 = (4.0 * d[1] - d[0]) / 3.0;
        let r2 = (4.0 * d[2] - d[1]) / 3.0;
        let value = (16.0 * r2 - r1) / 15.0;
        Ok(SeriesValue { value: value.into(), n_terms, tail_bound: tail, converged })
    }

    /// Closed product form of `kappa_m(alpha)` for `alpha` strictly inside
    /// `(alpha*, alpha**)`.
    pub fn kappa(&self, m: i64, alpha: f64) -> Result<f64, CompensationError> {
        let md = &self.model;
        let cd = md.critical_points();
        if !(alpha > cd.alpha_star && alpha < cd.alpha_star2) {
            return Err(CompensationError::AngleOutside { alpha, lo: cd.alpha_star, hi: cd.alpha_star2 });
        }
        let s0 = md.s_of_alpha(alpha)?;
        let g1 = |j: i64| md.gamma1_s(md.ladder_s(s0, j));
        let g2 = |j: i64| md.gamma2_s(md.ladder_s(s0, j));
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let nonzero = |v: f64, factor| {
            if v == 0.0 {
                Err(CompensationError::VanishingKappa { m, factor })
            } else {
                Ok(v)
            }
        };
        if m == 0 {
            return Ok(1.0);
        }
        let mut prod = 1.0;
        if m > 0 {
            for k in 0..(m / 2) {
                let (i, j) = (2 * k + 1, 2 * k + 2);
                prod *= (g1(i) / nonzero(g2(i), "gamma2")?) / (g1(j) / nonzero(g2(j), "gamma2")?);
            }
            Ok(sign * prod * g2(0) / nonzero(g2(m), "gamma2")?)
        } else {
            for k in 0..(-m / 2) {
                let (i, j) = (-2 * k - 1, -2 * k - 2);
                prod *= (g2(i) / nonzero(g1(i), "gamma1")?) / (g2(j) / nonzero(g1(j), "gamma1")?);
            }
            Ok(sign * prod * g1(0) / nonzero(g1(m), "gamma1")?)
        }
    }

    /// `h_alpha(z0)` with case dispatch at the endpoints and the drift angle.
    pub fn h_alpha(&self, z0: (f64, f64), alpha: f64) -> Result<HarmonicEval, CompensationError> {
        let md = &self.model;
        let cd = md.critical_points();
        if alpha < cd.alpha_star - ANGLE_TOL || alpha > cd.alpha_star2 + ANGLE_TOL {
            return Err(CompensationError::AngleOutside { alpha, lo: cd.alpha_star, hi: cd.alpha_star2 });
        }
        if (alpha - cd.alpha_star2).abs() <= ANGLE_TOL {
            let mirror = Harmonic { model: md.mirrored(), control: self.control };
            let mut ev = mirror.h_alpha((z0.1, z0.0), FRAC_PI_2 - cd.alpha_star2)?;
            ev.alpha = alpha;
            ev.z0 = z0;
            ev.case_tag = ev.case_tag.mirrored();
            return Ok(ev);
        }
        let (series, case_tag) = if (alpha - cd.alpha_mu).abs() <= ANGLE_TOL {
            let one = SeriesValue { value: 1.0.into(), n_terms: 1, tail_bound: 0.0, converged: true };
            (one, CaseTag::DriftConstant)
        } else if (alpha - cd.alpha_star).abs() <= ANGLE_TOL {
            if cd.pole_phi2 {
                (self.star_pole(z0)?, CaseTag::StarPole)
            } else if md.star_is_double() {
                (self.star_double(z0)?, CaseTag::StarDouble)
            } else {
                (self.star_derivative(z0)?, CaseTag::StarDerivative)
            }
        } else {
            (self.interior_at(md.s_of_alpha(alpha)?, z0)?, CaseTag::Interior)
        };
        Ok(HarmonicEval { alpha, z0, value: series.re(), case_tag, series })
    }

    /// Symmetric truncation `m = -n ..= n` of the interior formula, plus
    /// the two first dropped terms. Odd points are assembled from their even
    /// neighbours so that each cancelling pair shares a coordinate exactly.
    pub fn truncated(&self, alpha: f64, n: i64) -> Result<TruncatedHarmonic, CompensationError> {
        let md = &self.model;
        let s0 = md.s_of_alpha(alpha)?;
        let even = |k: i64| {
            let s = s0 - 2.0 * k as f64;
            (md.x_of_s(s), md.y_of_s(s))
        };
        let point = |m: i64| {
            let k = m.div_euclid(2);
            if m.rem_euclid(2) == 0 {
                even(k)
            } else {
                (even(k).0, even(k + 1).1)
            }
        };
        let g1 = |p: (f64, f64)| p.0 + md.r1 * p.1;
        let g2 = |p: (f64, f64)| md.r2 * p.0 + p.1;
        let mut terms = vec![(0i64, 1.0f64, point(0).0, point(0).1)];
        let mut c = 1.0;
        for j in 0..=n {
            let (p, q) = (point(j), point(j + 1));
            let (num, den) = if j.rem_euclid(2) == 0 { (g2(p), g2(q)) } else { (g1(p), g1(q)) };
            if den == 0.0 {
                return Err(CompensationError::VanishingKappa { m: j + 1, factor: "boundary form" });
            }
            c *= -num / den;
            terms.push((j + 1, c, q.0, q.1));
        }
        c = 1.0;
        for j in (-n..=0).rev() {
            let (p, q) = (point(j), point(j - 1));
            let (num, den) = if j.rem_euclid(2) == 0 { (g1(p), g1(q)) } else { (g2(p), g2(q)) };
            if den == 0.0 {
                return Err(CompensationError::VanishingKappa { m: j - 1, factor: "boundary form" });
            }
            c *= -num / den;
            terms.push((j - 1, c, q.0, q.1));
        }
        Ok(TruncatedHarmonic { model: *md, n, terms })
    }
}

/// Finite-section view of `h_alpha` used for boundary-condition checks.
#[derive(Debug, Clone)]
pub struct TruncatedHarmonic {
    pub model: NormalizedModel,
    pub n: i64,
    /// `(m, kappa_m, a_m, b_m)` for `|m| <= n + 1`.
    pub terms: Vec<(i64, f64, f64, f64)>,
}

impl TruncatedHarmonic {
    fn retained(&self) -> impl Iterator<Item = &(i64, f64, f64, f64)> {
        self.terms.iter().filter(move |t| t.0.abs() <= self.n)
    }

    fn dropped(&self) -> impl Iterator<Item = &(i64, f64, f64, f64)> {
        self.terms.iter().filter(move |t| t.0.abs() == self.n + 1)
    }

    pub fn value(&self, z: (f64, f64)) -> f64 {
        self.retained().map(|&(_, c, a, b)| c * (a * z.0 + b * z.1).exp()).sum()
    }

    /// `R1 . grad h` on the face `x = 0` at height `y`.
    pub fn boundary_r1(&self, y: f64) -> f64 {
        let r1 = self.model.r1;
        self.retained().map(|&(_, c, a, b)| c * (a + r1 * b) * (b * y).exp()).sum()
    }

    /// `R2 . grad h` on the face `y = 0` at abscissa `x`.
    pub fn boundary_r2(&self, x: f64) -> f64 {
        let r2 = self.model.r2;
        self.retained().map(|&(_, c, a, b)| c * (r2 * a + b) * (a * x).exp()).sum()
    }

    /// Floating-point allowance for the boundary sums: a few ulps of the
    /// sum of absolute contributions.
    pub fn rounding_r1(&self, y: f64) -> f64 {
        let r1 = self.model.r1;
        64.0 * f64::EPSILON * self.retained().map(|&(_, c, a, b)| (c * (a + r1 * b) * (b * y).exp()).abs()).sum::<f64>()
    }

    pub fn rounding_r2(&self, x: f64) -> f64 {
        let r2 = self.model.r2;
        64.0 * f64::EPSILON * self.retained().map(|&(_, c, a, b)| (c * (r2 * a + b) * (a * x).exp()).abs()).sum::<f64>()
    }

    /// Magnitude of the first dropped terms' contribution on `x = 0`.
    pub fn dropped_r1(&self, y: f64) -> f64 {
        let r1 = self.model.r1;
        self.dropped().map(|&(_, c, a, b)| (c * (a + r1 * b) * (b * y).exp()).abs()).sum()
    }

    /// Magnitude of the first dropped terms' contribution on `y = 0`.
    pub fn dropped_r2(&self, x: f64) -> f64 {
        let r2 = self.model.r2;
        self.dropped().map(|&(_, c, a, b)| (c * (r2 * a + b) * (a * x).exp()).abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

    fn p0() -> NormalizedModel {
        NormalizedModel::new(0.5, 0.0, 0.0).unwrap()
    }
    fn p1() -> NormalizedModel {
        NormalizedModel::new(0.2, 0.0, 2.0).unwrap()
    }
    fn p3() -> NormalizedModel {
        NormalizedModel::new(0.5, 0.5, 0.5).unwrap()
    }

    #[test]
    fn kappa_example_and_recursion_agree() {
        let h = Harmonic::new(p0());
        let k1 = h.kappa(1, FRAC_PI_3).unwrap();
        assert!((k1 - 0.047_947).abs() < 1e-6, "{k1}");
        for model in [p0(), p1(), p3()] {
            let h = Harmonic::new(model);
            let t = h.truncated(FRAC_PI_3, 12).unwrap();
            for &(m, c, _, _) in &t.terms {
                let k = h.kappa(m, FRAC_PI_3).unwrap();
                assert!((k - c).abs() <= 1e-12 * k.abs().max(1e-300), "m={m}: {k} vs {c}");
            }
        }
    }

    #[test]
    fn drift_angle_gives_constant() {
        for model in [p0(), p1(), p3()] {
            let h = Harmonic::new(model);
            let amu = model.alpha_mu();
            let ev = h.h_alpha((1.3, 0.4), amu).unwrap();
            assert_eq!(ev.case_tag, CaseTag::DriftConstant);
            assert_eq!(ev.value, 1.0);
            for m in [-3, -1, 1, 2, 5] {
                assert!(h.kappa(m, amu).unwrap().abs() < 1e-14);
            }
            let off = h.interior_at(0.0, (1.3, 0.4)).unwrap();
            assert!((off.re() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn case_dispatch() {
        let h1 = Harmonic::new(p1());
        let cd = p1().critical_points();
        let ev = h1.h_alpha((1.0, 1.0), cd.alpha_star).unwrap();
        assert_eq!(ev.case_tag, CaseTag::StarPole);
        assert!(ev.value > 0.0);
        let ev = h1.h_alpha((1.0, 1.0), FRAC_PI_2).unwrap();
        assert_eq!(ev.case_tag, CaseTag::Star2Derivative);
        assert!(ev.value > 0.0);
        assert!(h1.h_alpha((1.0, 1.0), 0.1).is_err());
        let h0 = Harmonic::new(p0());
        assert_eq!(h0.h_alpha((1.0, 1.0), 0.0).unwrap().case_tag, CaseTag::StarDerivative);
        let mirror = Harmonic::new(NormalizedModel::new(0.8, 2.0, 0.0).unwrap());
        let e2 = mirror.h_alpha((1.0, 1.0), mirror.model.critical_points().alpha_star2).unwrap();
        assert_eq!(e2.case_tag, CaseTag::Star2Pole);
        assert!((e2.value - ev_swap(&h1, (1.0, 1.0))).abs() < 1e-12 * e2.value);
    }

    fn ev_swap(h: &Harmonic, z: (f64, f64)) -> f64 {
        h.h_alpha((z.1, z.0), h.model.critical_points().alpha_star).unwrap().value
    }

    #[test]
    fn interior_values_positive() {
        for model in [p0(), p3()] {
            let h = Harmonic::new(model);
            for alpha in [FRAC_PI_6, FRAC_PI_3] {
                let ev = h.h_alpha((1.0, 1.0), alpha).unwrap();
                assert!(ev.series.converged && ev.value > 0.0);
            }
        }
    }

    #[test]
    fn star_pole_is_limit_of_normalised_interior() {
        let h = Harmonic::new(p1());
        let cd = p1().critical_points();
        let z = (0.7, 1.2);
        let at = h.h_alpha(z, cd.alpha_star).unwrap().value / h.h_alpha((0.0, 0.0), cd.alpha_star).unwrap().value;
        let d = 1e-7;
        let near =
            h.h_alpha(z, cd.alpha_star + d).unwrap().value / h.h_alpha((0.0, 0.0), cd.alpha_star + d).unwrap().value;
        assert!((at - near).abs() < 1e-5 * at, "{at} vs {near}");
    }

    #[test]
    fn derivative_case_matches_slope() {
        let h = Harmonic::new(p0());
        let z = (1.0, 1.0);
        let d = h.h_alpha(z, 0.0).unwrap().value;
        let e = 1e-4;
        let fwd = h.h_alpha(z, e).unwrap().value / e;
        assert!((d - fwd).abs() < 1e-3 * d, "{d} vs {fwd}");
    }

    #[test]
    fn truncated_boundary_residual_equals_dropped_term() {
        for model in [p0(), p3(), p1()] {
            let h = Harmonic::new(model);
            for n in [10, 20] {
                let t = h.truncated(FRAC_PI_3, n).unwrap();
                for k in 0..=6 {
                    let v = 0.5 * k as f64;
                    assert!(t.boundary_r1(v).abs() <= t.dropped_r1(v) * (1.0 + 1e-9) + t.rounding_r1(v));
                    assert!(t.boundary_r2(v).abs() <= t.dropped_r2(v) * (1.0 + 1e-9) + t.rounding_r2(v));
                }
            }
        }
    }
}
