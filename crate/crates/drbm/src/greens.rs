//! Green density of the process: directional asymptotics in every regime,
//! the Martin kernel limit, and direct evaluation by contour inversion.
//!
//! The density is `g = I1 + I2 + I3`, three simple integrals along the
//! vertical line `Re = -eps`:
//!
//! * `I1 = (1/2 pi i) int phi2(x) g2(x, Y+) e^{-a x - b Y+} / sqrt(mu2^2 - 2x) dx`,
//! * `I2` is its mirror in `y` with `phi1` and `X+`,
//! * `I3` integrates the explicit exponential `e^{(a0-a) x + (b0-b) Y+}` (or
//!   its `y` form), which needs `b > b0` (or `a > a0`).

use crate::compensation::{CaseTag, CompensationError, Harmonic, Transforms};
use crate::kernel::{Branch, CriticalData, KernelError};
use crate::model::NormalizedModel;
use crate::montecarlo::{estimate_boundary_density, Axis, Dynamics, Estimate, McError, Simulator};
use crate::quadrature::{integrate, QuadratureError, Tolerance};
use crate::series::SeriesControl;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Angle tolerance for the regime dispatch.
pub const REGIME_TOL: f64 = 1e-12;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GreensError {
    #[error("{0} is out of scope: the constant is not derived in closed form here")]
    OutOfScope(&'static str),
    #[error("no I3 representation at (a, b) = ({a}, {b}) from z0 = ({a0}, {b0}): need a > a0 or b > b0")]
    NoI3Form { a: f64, b: f64, a0: f64, b0: f64 },
    #[error("imaginary residual {im:e} exceeds {bound:e}")]
    ImaginaryResidual { im: f64, bound: f64 },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("{what} is not finite")]
    NonFinite { what: &'static str },
    #[error("series for {what} did not converge (tail bound {tail:e})")]
    NotConverged { what: &'static str, tail: f64 },
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Compensation(#[from] CompensationError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
}

impl From<QuadratureError<GreensError>> for GreensError {
    fn from(e: QuadratureError<GreensError>) -> Self {
        match e {
            QuadratureError::Integrand(inner) => inner,
            other => GreensError::Quadrature(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Interior,
    FrozenLow,
    FrozenHigh,
    AtStarPole,
    AtStar2Pole,
    Boundary0Nopole,
    Boundary0Double,
    BoundaryPi2Nopole,
    BoundaryPi2Double,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::FrozenLow => "frozen_low",
            Regime::FrozenHigh => "frozen_high",
            Regime::AtStarPole => "at_star_pole",
            Regime::AtStar2Pole => "at_star2_pole",
            Regime::Boundary0Nopole => "boundary0_nopole",
            Regime::Boundary0Double => "boundary0_double",
            Regime::BoundaryPi2Nopole => "boundary_pi2_nopole",
            Regime::BoundaryPi2Double => "boundary_pi2_double",
        }
    }
}

/// Scaling window of a direction near a pole angle, by the limit of
/// `r (alpha - alpha_pole)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleWindow {
    /// `r (alpha - alpha_pole)^2 -> 0`.
    Inner,
    /// `r (alpha - alpha_pole)^2 -> K > 0`, approached from the frozen side.
    TransitionalFrozen,
    /// `r (alpha - alpha_pole)^2 -> K > 0`, approached from the interior side.
    TransitionalInterior,
    /// `r (alpha - alpha_pole)^2 -> inf` from the frozen side.
    OuterFrozen,
    /// `r (alpha - alpha_pole)^2 -> inf` from the interior side.
    OuterInterior,
}

/// Constants of the sub-regimes around a pole direction. Only the inner
/// and outer-frozen constants are available in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleConstants {
    /// Pole constant (`c*` or `c**`) times the endpoint harmonic function.
    pub outer_frozen: f64,
    /// Half of `outer_frozen`.
    pub inner: f64,
}

impl PoleConstants {
    pub fn constant(&self, window: PoleWindow) -> Result<f64, GreensError> {
        match window {
            PoleWindow::Inner => Ok(self.inner),
            PoleWindow::OuterFrozen => Ok(self.outer_frozen),
            PoleWindow::TransitionalFrozen => Err(GreensError::OutOfScope("the transitional constant c_K")),
            PoleWindow::TransitionalInterior => Err(GreensError::OutOfScope("the transitional constant c~_K")),
            PoleWindow::OuterInterior => Err(GreensError::OutOfScope("the outer interior-side constant C")),
        }
    }
}

/// Leading behaviour `g(r e_alpha) ~ e^{-r rho} (constant r^power + secondary)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticResult {
    pub alpha: f64,
    pub regime: Regime,
    pub decay_rate: f64,
    pub power: f64,
    pub constant: f64,
    /// Next-order term `(power, constant)` where the regime has one.
    pub secondary: Option<(f64, f64)>,
    pub pole: Option<PoleConstants>,
    /// The harmonic-function factor inside `constant`.
    pub harmonic: f64,
    pub harmonic_case: CaseTag,
}

impl AsymptoticResult {
    pub fn value_at(&self, r: f64) -> f64 {
        let mut v = self.constant * r.powf(self.power);
        if let Some((p, c)) = self.secondary {
            v += c * r.powf(p);
        }
        v * (-r * self.decay_rate).exp()
    }
}

/// Settings for [`Greens::green_numeric`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub epsilon: f64,
    pub v_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdiv: usize,
}

/// Upper cap on the automatic truncation of the vertical line.
const V_MAX_CAP: f64 = 1e7;

impl QuadratureSpec {
    /// Defaults: `eps = min(min(mu)/4, 1/(a+b))` and `v_max` from the decay
    /// rate of the slowest of the three integrands, `e^{-c sqrt(v)}`.
    ///
    /// The integrands grow like `e^{(a+b) eps}` on the contour while `g`
    /// decays, so the abscissa shrinks with the target point to bound the
    /// cancellation.
    pub fn auto(model: &NormalizedModel, z0: (f64, f64), a: f64, b: f64) -> Result<Self, GreensError> {
        let rel_tol = 1e-10;
        let abs_tol: f64 = 1e-13;
        let i3 = i3_form(z0, a, b)?;
        let c3 = match i3 {
            I3Form::X => b - z0.1,
            I3Form::Y => a - z0.0,
        };
        let c = (b + z0.1).min(a + z0.0).min(c3);
        let root = ((1.0 / abs_tol).ln() + 8.0) / c;
        Ok(Self {
            epsilon: (model.mu1.min(model.mu2) / 4.0).min(1.0 / (a + b)),
            v_max: (root * root).min(V_MAX_CAP),
            rel_tol,
            abs_tol,
            max_subdiv: 200_000,
        })
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn check(&self, model: &NormalizedModel) -> Result<(), GreensError> {
        let bound = model.mu1.min(model.mu2) / 2.0;
        if !(self.epsilon > 0.0 && self.epsilon < bound) {
            return Err(GreensError::InvalidSpec(format!("epsilon = {} must lie in (0, {bound})", self.epsilon)));
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(GreensError::InvalidSpec(format!("v_max = {} must be positive", self.v_max)));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(GreensError::InvalidSpec("tolerances must be positive".into()));
        }
        if self.max_subdiv == 0 {
            return Err(GreensError::InvalidSpec("max_subdiv must be positive".into()));
        }
        Ok(())
    }
}

/// Which explicit-exponential integral is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum I3Form {
    /// Integration in `x`, valid for `b > b0`.
    X,
    /// Integration in `y`, valid for `a > a0`.
    Y,
}

fn i3_form(z0: (f64, f64), a: f64, b: f64) -> Result<I3Form, GreensError> {
    let (da, db) = (a - z0.0, b - z0.1);
    if db > 0.0 && db >= da {
        Ok(I3Form::X)
    } else if da > 0.0 {
        Ok(I3Form::Y)
    } else {
        Err(GreensError::NoI3Form { a, b, a0: z0.0, b0: z0.1 })
    }
}

/// Output of [`Greens::green_numeric`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub imag: f64,
    pub error: f64,
    /// Estimate of the neglected tail beyond `v_max`.
    pub tail: f64,
    pub subdivisions: usize,
    pub i3_form: I3Form,
    pub spec: QuadratureSpec,
}

/// Green-function evaluator on one model.
#[derive(Debug, Clone, Copy)]
pub struct Greens {
    pub model: NormalizedModel,
    pub control: SeriesControl,
}

/// Relative tail accepted for the Martin kernel. Each side of the corner
/// ladder is summed to [`corner_control`]; the sides may partly cancel, and
/// the finite-difference endpoint cases scale the tail by `1 / (2 h)`.
pub const MARTIN_TAIL_TOL: f64 = 1e-7;

/// Series control for harmonic functions at the corner, where the terms
/// decay only like a power of the index.
pub fn corner_control() -> SeriesControl {
    SeriesControl { rel_tol: 1e-11, abs_floor: 1e-300, n_max: 1 << 21, power_tail: true }
}

impl Greens {
    pub fn new(model: NormalizedModel) -> Self {
        Self { model, control: SeriesControl::default() }
    }

    pub fn with_control(mut self, control: SeriesControl) -> Self {
        self.control = control;
        self
    }

    fn critical(&self) -> CriticalData {
        self.model.critical_points()
    }

    fn harmonic(&self) -> Harmonic {
        Harmonic::new(self.model).with_control(self.control)
    }

    fn check_alpha(alpha: f64) -> Result<(), GreensError> {
        if (0.0..=FRAC_PI_2).contains(&alpha) {
            Ok(())
        } else {
            Err(KernelError::OutOfRange { what: "alpha", value: alpha, lo: 0.0, hi: FRAC_PI_2 }.into())
        }
    }

    /// `alpha` clamped to `[alpha*, alpha**]`.
    pub fn clamp_alpha(&self, alpha: f64) -> f64 {
        let cd = self.critical();
        alpha.clamp(cd.alpha_star, cd.alpha_star2)
    }

    /// Exponential decay rate `rho(alpha)`: the directional linear form at
    /// the saddle of the clamped direction.
    pub fn decay_rate(&self, alpha: f64) -> Result<f64, GreensError> {
        Self::check_alpha(alpha)?;
        if (alpha - self.model.alpha_mu()).abs() <= REGIME_TOL {
            return Ok(0.0);
        }
        let (x, y) = self.model.saddle(self.clamp_alpha(alpha))?;
        let (sn, cs) = alpha.sin_cos();
        // The form vanishes at the drift angle up to round-off.
        Ok((cs * x + sn * y).max(0.0))
    }

    /// Constant `2 / ((1 + mu2) sqrt(pi))` of the boundary Tauberian estimate.
    pub fn tauberian_kappa(&self) -> f64 {
        2.0 / ((1.0 + self.model.mu2) * PI.sqrt())
    }

    /// Constant `K` in `f2(a) ~ K d_alpha h_alpha(z0)|_0 a^{-3/2} e^{-x_max a}`.
    ///
    /// A square-root singularity `phi2(x) - phi2(x_max) ~ A sqrt(2 (x_max - x))`
    /// transfers to `f2(a) ~ -A / sqrt(2 pi) a^{-3/2} e^{-x_max a}` since
    /// `Gamma(-1/2) = -2 sqrt(pi)`. With `d_alpha h = -(1 + mu2) A / 2` this
    /// gives `K = tauberian_kappa() / sqrt(2)`.
    pub fn boundary_tauberian_constant(&self) -> f64 {
        self.tauberian_kappa() / 2f64.sqrt()
    }

    /// Saddle-point constant `1 / sqrt(2 pi (cos alpha + sin alpha))`.
    pub fn saddle_constant(alpha: f64) -> f64 {
        1.0 / (2.0 * PI * (alpha.cos() + alpha.sin())).sqrt()
    }

    /// Pole constant `c*`: the contribution of the pole of `phi2` to `g` is
    /// `c* h_{alpha*}(z0) e^{-a x* - b y*}`.
    ///
    /// Computed in closed form as
    /// `g2(x*, y*) / sqrt(mu2^2 - 2 x*) * x'(s*) / (d/ds) g2(zeta s)|_{s*}`.
    pub fn pole_constant_star(&self) -> Result<f64, GreensError> {
        let m = &self.model;
        let cd = self.critical();
        if !cd.pole_phi2 {
            return Err(CompensationError::NoPole("phi2").into());
        }
        let s = cd.s_star;
        let g2 = m.r2 * cd.x_star + cd.y_star;
        let dy = (m.mu2 * m.mu2 - 2.0 * cd.x_star).sqrt();
        let dx_ds = m.mu2 - s;
        // zeta s = 2 mu2 - s, so (d/ds) g2(zeta s) = -(r2 x'(zeta s) + y'(zeta s)).
        let zs = m.zeta(s);
        let d_g2_zeta = -(m.r2 * (m.mu2 - zs) + (-zs - m.mu1));
        Ok(g2 / dy * dx_ds / d_g2_zeta)
    }

    /// Mirror constant `c**` for the pole of `phi1`.
    pub fn pole_constant_star2(&self) -> Result<f64, GreensError> {
        let mirror = Greens { model: self.model.mirrored(), control: self.control };
        match mirror.pole_constant_star() {
            Err(GreensError::Compensation(CompensationError::NoPole(_))) => {
                Err(CompensationError::NoPole("phi1").into())
            }
            other => other,
        }
    }

    fn h_eval(&self, z0: (f64, f64), alpha: f64) -> Result<(f64, CaseTag), GreensError> {
        let ev = self.harmonic().h_alpha(z0, alpha)?;
        if !ev.series.converged {
            return Err(GreensError::NotConverged { what: "h_alpha", tail: ev.series.tail_bound });
        }
        Ok((ev.value, ev.case_tag))
    }

    /// Leading asymptotics of `g^{z0}(r cos alpha, r sin alpha)` as `r -> inf`.
    pub fn asymptotic_g(&self, z0: (f64, f64), alpha: f64) -> Result<AsymptoticResult, GreensError> {
        Self::check_alpha(alpha)?;
        if alpha <= self.critical().alpha_mu {
            self.asymptotic_low_side(z0, alpha)
        } else {
            let mirror = Greens { model: self.model.mirrored(), control: self.control };
            let mut res = mirror.asymptotic_low_side((z0.1, z0.0), FRAC_PI_2 - alpha)?;
            res.alpha = alpha;
            res.regime = match res.regime {
                Regime::FrozenLow => Regime::FrozenHigh,
                Regime::FrozenHigh => Regime::FrozenLow,
                Regime::AtStarPole => Regime::AtStar2Pole,
                Regime::AtStar2Pole => Regime::AtStarPole,
                Regime::Boundary0Nopole => Regime::BoundaryPi2Nopole,
                Regime::Boundary0Double => Regime::BoundaryPi2Double,
                Regime::BoundaryPi2Nopole => Regime::Boundary0Nopole,
                Regime::BoundaryPi2Double => Regime::Boundary0Double,
                Regime::Interior => Regime::Interior,
            };
            res.harmonic_case = match res.harmonic_case {
                CaseTag::StarPole => CaseTag::Star2Pole,
                CaseTag::StarDerivative => CaseTag::Star2Derivative,
                CaseTag::StarDouble => CaseTag::Star2Double,
                CaseTag::Star2Pole => CaseTag::StarPole,
                CaseTag::Star2Derivative => CaseTag::StarDerivative,
                CaseTag::Star2Double => CaseTag::StarDouble,
                other => other,
            };
            Ok(res)
        }
    }

    /// Dispatch for directions handled through the `phi2` side. Directions
    /// beyond the drift angle are evaluated on the mirrored model, which
    /// keeps every branch below in terms of `alpha*`, `c*` and `alpha = 0`.
    fn asymptotic_low_side(&self, z0: (f64, f64), alpha: f64) -> Result<AsymptoticResult, GreensError> {
        let cd = self.critical();
        let decay_rate = self.decay_rate(alpha)?;
        let base = |regime, power, constant, harmonic, harmonic_case| AsymptoticResult {
            alpha,
            regime,
            decay_rate,
            power,
            constant,
            secondary: None,
            pole: None,
            harmonic,
            harmonic_case,
        };
        let below_star = alpha < cd.alpha_star - REGIME_TOL;
        let at_star = (alpha - cd.alpha_star).abs() <= REGIME_TOL;
        if cd.pole_phi2 && (below_star || at_star) {
            let (h, tag) = self.h_eval(z0, cd.alpha_star)?;
            let c = self.pole_constant_star()?;
            let pole = PoleConstants { outer_frozen: c * h, inner: 0.5 * c * h };
            let mut res = if at_star {
                base(Regime::AtStarPole, 0.0, pole.inner, h, tag)
            } else {
                base(Regime::FrozenLow, 0.0, pole.outer_frozen, h, tag)
            };
            res.pole = Some(pole);
            return Ok(res);
        }
        if alpha <= REGIME_TOL {
            let (h, tag) = self.h_eval(z0, 0.0)?;
            if self.model.star_is_double() {
                return Ok(base(Regime::Boundary0Double, -0.5, Self::saddle_constant(0.0) * h, h, tag));
            }
            // h here is the derivative of h_alpha(z0) in alpha at 0.
            let mut res = base(Regime::Boundary0Nopole, -0.5, alpha * h / (2.0 * PI).sqrt(), h, tag);
            res.secondary = Some((-1.5, 2.0 * self.boundary_tauberian_constant() * h));
            return Ok(res);
        }
        let (h, tag) = self.h_eval(z0, alpha)?;
        Ok(base(Regime::Interior, -0.5, Self::saddle_constant(alpha) * h, h, tag))
    }

    /// Directional limit of the Martin kernel, `h_a(z0) / h_a(0)` with
    /// `a = clamp(alpha, alpha*, alpha**)`.
    pub fn martin_kernel_limit(&self, z0: (f64, f64), alpha: f64) -> Result<f64, GreensError> {
        Self::check_alpha(alpha)?;
        let a = self.clamp_alpha(alpha);
        let harmonic = Greens { model: self.model, control: corner_control() }.harmonic();
        let eval = |z: (f64, f64)| -> Result<f64, GreensError> {
            let ev = harmonic.h_alpha(z, a)?;
            if !(ev.series.tail_bound <= MARTIN_TAIL_TOL * ev.value.abs()) {
                return Err(GreensError::NotConverged { what: "h_alpha", tail: ev.series.tail_bound });
            }
            Ok(ev.value)
        };
        let h0 = eval((0.0, 0.0))?;
        if !h0.is_finite() || h0 == 0.0 {
            return Err(GreensError::NonFinite { what: "h_alpha(0)" });
        }
        if z0 == (0.0, 0.0) {
            return Ok(1.0);
        }
        Ok(eval(z0)? / h0)
    }

    /// Green density at `(a, b)` by contour inversion.
    pub fn green_numeric(
        &self,
        z0: (f64, f64),
        a: f64,
        b: f64,
        spec: &QuadratureSpec,
    ) -> Result<GreenValue, GreensError> {
        spec.check(&self.model)?;
        if !(a > 0.0 && b > 0.0) {
            return Err(GreensError::InvalidSpec(format!("(a, b) = ({a}, {b}) must lie in the open quadrant")));
        }
        let form = i3_form(z0, a, b)?;
        let tr = Transforms::new(self.model, z0).with_control(self.control);
        let f = |v: f64| -> Result<Complex64, GreensError> {
            let up = self.contour_integrand(&tr, form, a, b, Complex64::new(-spec.epsilon, v))?;
            let down = self.contour_integrand(&tr, form, a, b, Complex64::new(-spec.epsilon, -v))?;
            Ok((up + down) / (2.0 * PI))
        };
        let breaks = panel_breaks(a, b, spec.v_max);
        let tol = Tolerance { rel_tol: spec.rel_tol, abs_tol: spec.abs_tol, max_subdiv: spec.max_subdiv };
        let res = integrate(f, &breaks, tol)?;
        let bound = 10.0 * spec.abs_tol.max(spec.rel_tol * res.value.re.abs());
        if res.value.im.abs() > bound {
            return Err(GreensError::ImaginaryResidual { im: res.value.im, bound });
        }
        let tail = f(spec.v_max)?.norm() * spec.v_max.sqrt();
        Ok(GreenValue {
            value: res.value.re,
            imag: res.value.im,
            error: res.error,
            tail,
            subdivisions: res.subdivisions,
            i3_form: form,
            spec: *spec,
        })
    }

    /// Sum of the three integrands at the common contour point `t`.
    fn contour_integrand(
        &self,
        tr: &Transforms,
        form: I3Form,
        a: f64,
        b: f64,
        t: Complex64,
    ) -> Result<Complex64, GreensError> {
        let m = &self.model;
        let (a0, b0) = tr.z0;
        // I1 in x = t.
        let x = t;
        let y_plus = m.branch_y(x, Branch::Plus);
        let dy = (m.mu2 * m.mu2 - 2.0 * x).sqrt();
        let phi2 = tr.phi2_complex(x)?;
        if !phi2.converged {
            return Err(GreensError::NotConverged { what: "phi2", tail: phi2.tail_bound });
        }
        let i1 = phi2.value * m.gamma2(x, y_plus) * (-a * x - b * y_plus).exp() / dy;
        // I2 in y = t.
        let y = t;
        let x_plus = m.branch_x(y, Branch::Plus);
        let dx = (m.mu1 * m.mu1 - 2.0 * y).sqrt();
        let phi1 = tr.phi1_complex(y)?;
        if !phi1.converged {
            return Err(GreensError::NotConverged { what: "phi1", tail: phi1.tail_bound });
        }
        let i2 = phi1.value * m.gamma1(x_plus, y) * (-a * x_plus - b * y).exp() / dx;
        let i3 = match form {
            I3Form::X => ((a0 - a) * x + (b0 - b) * y_plus).exp() / dy,
            I3Form::Y => ((a0 - a) * x_plus + (b0 - b) * y).exp() / dx,
        };
        Ok(i1 + i2 + i3)
    }

    /// `(1/2) g(a, 0+)`: the Green density extrapolated to the horizontal
    /// axis from `b = h, h/2, h/4` by a quadratic fit.
    pub fn half_green_on_axis(&self, z0: (f64, f64), a: f64, h: f64) -> Result<f64, GreensError> {
        let mut vals = [0.0; 3];
        for (k, v) in vals.iter_mut().enumerate() {
            let b = h / (1u32 << k) as f64;
            let spec = QuadratureSpec::auto(&self.model, z0, a, b)?;
            *v = self.green_numeric(z0, a, b, &spec)?.value;
        }
        // Neville extrapolation to b = 0 through (h, h/2, h/4).
        let r1 = 2.0 * vals[1] - vals[0];
        let r2 = 2.0 * vals[2] - vals[1];
        let g0 = (4.0 * r2 - r1) / 3.0;
        Ok(0.5 * g0)
    }

    /// Both sides of `f2(a) = g(a, 0+) / 2`: the Monte Carlo boundary
    /// density on `[a - w, a + w]` of the face `y = 0`, and half the
    /// numerically inverted density extrapolated from `b = h`.
    ///
    /// The simulator must run the normalized dynamics of this model.
    pub fn boundary_density_identity(
        &self,
        sim: &Simulator,
        z0: (f64, f64),
        a: f64,
        half_width: f64,
        h: f64,
    ) -> Result<(Estimate, f64), GreensError> {
        if !(a > 0.0) {
            return Err(GreensError::InvalidSpec(format!("a = {a} must be positive")));
        }
        if sim.dynamics != Dynamics::normalized(&self.model) {
            return Err(GreensError::InvalidSpec("simulator dynamics differ from the model".into()));
        }
        let f2 = estimate_boundary_density(sim, z0, Axis::Y0, (a - half_width, a + half_width))?;
        Ok((f2, self.half_green_on_axis(z0, a, h)?))
    }
}

/// Breakpoints on `[0, v_max]`: half-period panels of the `e^{-i (a+b) v}`
/// oscillation, no wider than `pi / (2 max(a, b))`.
fn panel_breaks(a: f64, b: f64, v_max: f64) -> Vec<f64> {
    let width = (PI / (a + b)).min(PI / (2.0 * a.max(b))).min(1.0);
    let n = (v_max / width).ceil().max(1.0) as usize;
    (0..=n).map(|k| (k as f64 * width).min(v_max)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn p0() -> NormalizedModel {
        NormalizedModel::new(0.5, 0.0, 0.0).unwrap()
    }
    fn p1() -> NormalizedModel {
        NormalizedModel::new(0.2, 0.0, 2.0).unwrap()
    }

    #[test]
    fn decay_rate_examples() {
        let g = Greens::new(p0());
        assert!(g.decay_rate(PI / 4.0).unwrap().abs() < 1e-15);
        assert!((g.decay_rate(0.0).unwrap() - 0.125).abs() < 1e-15);
        let g1 = Greens::new(p1());
        assert!((g1.decay_rate(0.0).unwrap() - 14.0 / 45.0).abs() < 1e-12);
        let cd = p1().critical_points();
        let want = 0.05f64.cos() * cd.x_star + 0.05f64.sin() * cd.y_star;
        assert!((g1.decay_rate(0.05).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn tauberian_kappa_examples() {
        assert!((Greens::new(p0()).tauberian_kappa() - 0.752_252).abs() < 1e-6);
        assert!((Greens::new(p1()).tauberian_kappa() - 0.626_877).abs() < 1e-6);
    }

    #[test]
    fn regimes() {
        let g = Greens::new(p0());
        let r = g.asymptotic_g((1.0, 1.0), FRAC_PI_3).unwrap();
        assert_eq!(r.regime, Regime::Interior);
        let c = 1.0 / (2.0 * PI * (0.5 + 3f64.sqrt() / 2.0)).sqrt();
        assert!((r.constant - c * r.harmonic).abs() < 1e-15);
        let r = g.asymptotic_g((1.0, 1.0), PI / 4.0).unwrap();
        assert_eq!(r.harmonic, 1.0);
        assert_eq!(r.decay_rate, 0.0);
        assert_eq!(g.asymptotic_g((1.0, 1.0), 0.0).unwrap().regime, Regime::Boundary0Nopole);
        assert_eq!(g.asymptotic_g((1.0, 1.0), FRAC_PI_2).unwrap().regime, Regime::BoundaryPi2Nopole);
        let g1 = Greens::new(p1());
        let r = g1.asymptotic_g((1.0, 1.0), 0.05).unwrap();
        assert_eq!(r.regime, Regime::FrozenLow);
        assert_eq!(r.power, 0.0);
        let cd = p1().critical_points();
        assert_eq!(g1.asymptotic_g((1.0, 1.0), cd.alpha_star).unwrap().regime, Regime::AtStarPole);
        let pole = r.pole.unwrap();
        assert!(pole.constant(PoleWindow::TransitionalFrozen).is_err());
        assert_eq!(pole.constant(PoleWindow::Inner).unwrap(), 0.5 * pole.outer_frozen);
        let p1m = NormalizedModel::new(0.8, 2.0, 0.0).unwrap();
        let r = Greens::new(p1m).asymptotic_g((1.0, 1.0), FRAC_PI_2 - 0.05).unwrap();
        assert_eq!(r.regime, Regime::FrozenHigh);
    }

    #[test]
    fn pole_constant_matches_residue() {
        let m = p1();
        let g = Greens::new(m);
        let cd = m.critical_points();
        let c = g.pole_constant_star().unwrap();
        for z0 in [(1.0, 1.0), (2.0, 0.5)] {
            let res = Transforms::new(m, z0).residue_phi2().unwrap();
            let h = Harmonic::new(m).h_alpha(z0, cd.alpha_star).unwrap().value;
            let g2 = m.r2 * cd.x_star + cd.y_star;
            let dy = (m.mu2 * m.mu2 - 2.0 * cd.x_star).sqrt();
            // Shifting the contour across x* picks up minus the residue.
            let from_residue = -res * g2 / dy / h;
            assert!((from_residue - c).abs() < 1e-6 * c.abs(), "{from_residue} vs {c}");
        }
        assert!(c > 0.0);
    }

    #[test]
    fn martin_kernel_normalisation() {
        let g = Greens::new(p1());
        assert_eq!(g.martin_kernel_limit((0.0, 0.0), 0.7).unwrap(), 1.0);
        let am = p1().alpha_mu();
        assert!((g.martin_kernel_limit((1.0, 2.0), am).unwrap() - 1.0).abs() < 1e-15);
        let a_star = p1().critical_points().alpha_star;
        assert_eq!(g.martin_kernel_limit((1.0, 1.0), 0.0).unwrap(), g.martin_kernel_limit((1.0, 1.0), a_star).unwrap());
    }

    #[test]
    fn green_numeric_symmetric_model() {
        let m = NormalizedModel::new(0.5, 0.5, 0.5).unwrap();
        let g = Greens::new(m);
        let v1 =
            g.green_numeric((1.0, 1.0), 3.0, 2.0, &QuadratureSpec::auto(&m, (1.0, 1.0), 3.0, 2.0).unwrap()).unwrap();
        let v2 =
            g.green_numeric((1.0, 1.0), 2.0, 3.0, &QuadratureSpec::auto(&m, (1.0, 1.0), 2.0, 3.0).unwrap()).unwrap();
        assert!(v1.value > 0.0);
        assert!((v1.value - v2.value).abs() < 1e-9 * v1.value, "{} vs {}", v1.value, v2.value);
    }

    #[test]
    fn green_numeric_epsilon_invariance() {
        let m = p0();
        let g = Greens::new(m);
        let spec = QuadratureSpec::auto(&m, (1.0, 1.0), 3.0, 2.0).unwrap();
        let v1 = g.green_numeric((1.0, 1.0), 3.0, 2.0, &spec).unwrap();
        let v2 = g.green_numeric((1.0, 1.0), 3.0, 2.0, &spec.with_epsilon(spec.epsilon / 2.0)).unwrap();
        assert!((v1.value - v2.value).abs() <= 5.0 * spec.rel_tol * v1.value.abs(), "{} vs {}", v1.value, v2.value);
    }

    #[test]
    fn no_i3_form_is_an_error() {
        let m = p0();
        let g = Greens::new(m);
        let spec = QuadratureSpec::auto(&m, (1.0, 1.0), 3.0, 2.0).unwrap();
        assert!(matches!(g.green_numeric((4.0, 4.0), 3.0, 2.0, &spec), Err(GreensError::NoI3Form { .. })));
    }
}
