//! Model parameters, validation, and the space-time dilation to the
//! normalized model (unit diffusion scales, drifts summing to one).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{0}` is not a finite number")]
    NonFinite(&'static str),
    #[error("model check failed: {0}")]
    Invalid(String),
    #[error("point ({0}, {1}) lies outside the closed quadrant")]
    NegativeCoordinate(f64, f64),
    #[error("angle {0} lies outside [0, pi/2]")]
    AngleOutOfRange(f64),
}

/// Raw parameters: diffusion scales, drift, and the reflection ratios.
///
/// The reflection matrix is `[[1, r2], [r1, 1]]`, so the face `x = 0` pushes
/// along `(1, r1)` and the face `y = 0` along `(r2, 1)`. The free motion is
/// driven by one Brownian motion along `(sigma1, -sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub r1: f64,
    pub r2: f64,
}

impl ModelParams {
    pub fn new(sigma1: f64, sigma2: f64, mu1: f64, mu2: f64, r1: f64, r2: f64) -> Self {
        Self { sigma1, sigma2, mu1, mu2, r1, r2 }
    }

    /// Convenience constructor for unit diffusion scales.
    pub fn unit(mu1: f64, mu2: f64, r1: f64, r2: f64) -> Self {
        Self::new(1.0, 1.0, mu1, mu2, r1, r2)
    }

    fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("r1", self.r1),
            ("r2", self.r2),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Runs every admissibility check. Boundary cases of the strict
/// inequalities are rejected.
pub fn validate(p: &ModelParams) -> Result<ValidationReport, ModelError> {
    for (name, v) in p.fields() {
        if !v.is_finite() {
            return Err(ModelError::NonFinite(name));
        }
    }
    let mut checks = Vec::with_capacity(7);
    let mut push = |name, passed, detail: String| checks.push(Check { name, passed, detail });
    push("sigma1_positive", p.sigma1 > 0.0, format!("sigma1 = {}", p.sigma1));
    push("sigma2_positive", p.sigma2 > 0.0, format!("sigma2 = {}", p.sigma2));
    push("mu1_positive", p.mu1 > 0.0, format!("mu1 = {}", p.mu1));
    push("mu2_positive", p.mu2 > 0.0, format!("mu2 = {}", p.mu2));
    // With a non-positive sigma the ratio is meaningless; the scale check
    // already fails, so report these as failed too.
    let scales_ok = p.sigma1 > 0.0 && p.sigma2 > 0.0;
    let lo1 = if scales_ok { -p.sigma2 / p.sigma1 } else { f64::NAN };
    let lo2 = if scales_ok { -p.sigma1 / p.sigma2 } else { f64::NAN };
    push("r1_above_bound", scales_ok && p.r1 > lo1, format!("r1 = {} must exceed {}", p.r1, lo1));
    push("r2_above_bound", scales_ok && p.r2 > lo2, format!("r2 = {} must exceed {}", p.r2, lo2));
    let prod = (p.r1 * p.r2).abs();
    push("existence_r1r2", prod < 1.0, format!("|r1*r2| = {prod} must be < 1"));
    Ok(ValidationReport { checks })
}

/// Normalized parameters. `mu2` is always `1 - mu1`, computed once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedModel {
    pub mu1: f64,
    pub mu2: f64,
    pub r1: f64,
    pub r2: f64,
}

impl NormalizedModel {
    pub fn new(mu1: f64, r1: f64, r2: f64) -> Result<Self, ModelError> {
        let m = Self { mu1, mu2: 1.0 - mu1, r1, r2 };
        let report = validate(&m.params())?;
        match report.first_failure() {
            None => Ok(m),
            Some(c) => Err(ModelError::Invalid(format!("{}: {}", c.name, c.detail))),
        }
    }

    /// The same model seen as raw parameters with unit scales.
    pub fn params(&self) -> ModelParams {
        ModelParams::unit(self.mu1, self.mu2, self.r1, self.r2)
    }

    /// Coordinate swap: exchanges the roles of the two faces.
    pub fn mirrored(&self) -> Self {
        Self { mu1: self.mu2, mu2: self.mu1, r1: self.r2, r2: self.r1 }
    }
}

/// Linear change of space and time taking a raw model to its normalized form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceTimeMap {
    pub lambda: f64,
    pub scale_x: f64,
    pub scale_y: f64,
    pub time_factor: f64,
}

impl SpaceTimeMap {
    pub fn identity() -> Self {
        Self { lambda: 1.0, scale_x: 1.0, scale_y: 1.0, time_factor: 1.0 }
    }

    pub fn map_point(&self, z: (f64, f64)) -> Result<(f64, f64), ModelError> {
        check_quadrant(z)?;
        Ok((self.scale_x * z.0, self.scale_y * z.1))
    }

    pub fn inverse_point(&self, z: (f64, f64)) -> Result<(f64, f64), ModelError> {
        check_quadrant(z)?;
        Ok((z.0 / self.scale_x, z.1 / self.scale_y))
    }

    /// Direction `alpha` in raw coordinates mapped to the direction of its
    /// image under `map_point`.
    pub fn map_angle(&self, alpha: f64) -> Result<f64, ModelError> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&alpha) {
            return Err(ModelError::AngleOutOfRange(alpha));
        }
        if alpha == 0.0 || alpha == std::f64::consts::FRAC_PI_2 {
            return Ok(alpha);
        }
        Ok((self.scale_y * alpha.sin()).atan2(self.scale_x * alpha.cos()))
    }

    /// Raw time span corresponding to `t` units of normalized time.
    pub fn raw_time(&self, t: f64) -> f64 {
        t / self.time_factor
    }
}

fn check_quadrant(z: (f64, f64)) -> Result<(), ModelError> {
    if z.0 >= 0.0 && z.1 >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::NegativeCoordinate(z.0, z.1))
    }
}

/// Reduces an admissible model to the normalized one.
pub fn normalize(p: &ModelParams) -> Result<(NormalizedModel, SpaceTimeMap), ModelError> {
    let report = validate(p)?;
    if let Some(c) = report.first_failure() {
        return Err(ModelError::Invalid(format!("{}: {}", c.name, c.detail)));
    }
    let a1 = p.mu1 / p.sigma1;
    let a2 = p.mu2 / p.sigma2;
    let lambda = a1 + a2;
    let model = NormalizedModel::new(a1 / lambda, p.r1 * p.sigma1 / p.sigma2, p.r2 * p.sigma2 / p.sigma1)?;
    let map =
        SpaceTimeMap { lambda, scale_x: lambda / p.sigma1, scale_y: lambda / p.sigma2, time_factor: lambda * lambda };
    Ok((model, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn validate_examples() {
        assert!(validate(&ModelParams::unit(0.5, 0.5, 0.0, 0.0)).unwrap().passed());
        assert!(validate(&ModelParams::unit(0.2, 0.8, 0.0, 2.0)).unwrap().passed());
        let bad = validate(&ModelParams::unit(0.5, 0.5, -2.0, 0.0)).unwrap();
        assert!(!bad.passed());
        assert_eq!(bad.first_failure().unwrap().name, "r1_above_bound");
    }

    #[test]
    fn validate_rejects_boundaries_and_nan() {
        assert!(!validate(&ModelParams::unit(0.5, 0.5, -1.0, 0.0)).unwrap().passed());
        assert!(!validate(&ModelParams::unit(0.5, 0.5, 1.0, 1.0)).unwrap().passed());
        assert!(!validate(&ModelParams::unit(0.0, 1.0, 0.0, 0.0)).unwrap().passed());
        assert_eq!(validate(&ModelParams::unit(f64::NAN, 0.5, 0.0, 0.0)), Err(ModelError::NonFinite("mu1")));
    }

    #[test]
    fn normalize_example() {
        let (m, map) = normalize(&ModelParams::new(2.0, 1.0, 1.0, 1.0, 0.5, 0.5)).unwrap();
        assert!((m.mu1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.mu2 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.r1 - 1.0).abs() < 1e-15);
        assert!((m.r2 - 0.25).abs() < 1e-15);
        assert!((map.lambda - 1.5).abs() < 1e-15);
        assert_eq!(map.map_point((2.0, 1.0)).unwrap(), (1.5, 1.5));
        assert_eq!(map.map_point((0.0, 0.0)).unwrap(), (0.0, 0.0));
        assert!(map.map_point((-1.0, 0.0)).is_err());
    }

    #[test]
    fn normalized_input_is_fixed() {
        let (m, map) = normalize(&ModelParams::unit(0.2, 0.8, 0.0, 2.0)).unwrap();
        assert_eq!(map, SpaceTimeMap::identity());
        assert_eq!((m.mu1, m.r1, m.r2), (0.2, 0.0, 2.0));
        assert!((m.mu2 - 0.8).abs() < 1e-16);
    }

    #[test]
    fn map_angle_follows_map_point() {
        let (_, map) = normalize(&ModelParams::new(2.0, 1.0, 1.0, 1.0, 0.5, 0.5)).unwrap();
        // (2, 1) maps to (1.5, 1.5): direction atan(1/2) goes to pi/4.
        assert!((map.map_angle(0.5f64.atan()).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!((map.map_angle(FRAC_PI_4).unwrap() - 2f64.atan()).abs() < 1e-15);
        assert_eq!(map.map_angle(0.0).unwrap(), 0.0);
        assert_eq!(map.map_angle(FRAC_PI_2).unwrap(), FRAC_PI_2);
        assert!(map.map_angle(-0.1).is_err());
    }
}
