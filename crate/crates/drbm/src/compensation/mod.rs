//! Compensation-method series: boundary Laplace transforms and the Martin
//! harmonic functions.
//!
//! Both are alternating exponential series along the ladder of parabola
//! points. Consecutive terms cancel the two oblique boundary conditions in
//! turn.

mod harmonic;
mod transforms;

pub use harmonic::{CaseTag, Harmonic, HarmonicEval, TruncatedHarmonic};
pub use transforms::Transforms;

use crate::kernel::KernelError;
use crate::model::NormalizedModel;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CompensationError {
    #[error("vanishing denominator {factor} at s = {s}")]
    VanishingDenominator { factor: &'static str, s: f64 },
    #[error("s = {s} is outside the valid window ({lo}, {hi})")]
    OutsideWindow { s: f64, lo: f64, hi: f64 },
    #[error("phi2 has a pole at x* = {x_star}")]
    Pole { x_star: f64 },
    #[error("the model has no pole for {0}")]
    NoPole(&'static str),
    #[error("functional equation violated on the parabola: residual {residual:e}")]
    Inconsistent { residual: f64 },
    #[error("alpha = {alpha} is outside [{lo}, {hi}]")]
    AngleOutside { alpha: f64, lo: f64, hi: f64 },
    #[error("kappa_{m}: vanishing factor {factor}")]
    VanishingKappa { m: i64, factor: &'static str },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Valid window for the real-parameter transform series.
pub fn valid_window(model: &NormalizedModel) -> (f64, f64) {
    (model.s_min().max(model.s_star2()), model.s_max().min(model.s_star()))
}

/// Ratio of the compensation recursion for `phi2` at parameter `s`:
/// `(gamma1/gamma2)(zeta s) / (gamma1/gamma2)(s - 2)`.
///
/// With `F(s) = phi2(x(s))` the recursion reads
/// `F(s) = G(s) F(s - 2) + G(s) e(s-2)/gamma2(s-2) - e(zeta s)/gamma2(zeta s)`.
pub fn ratio_g(model: &NormalizedModel, s: f64) -> Result<f64, CompensationError> {
    let zs = model.zeta(s);
    let g2z = model.gamma2_s(zs);
    let g1m = model.gamma1_s(s - 2.0);
    if g2z == 0.0 {
        return Err(CompensationError::VanishingDenominator { factor: "gamma2(zeta s)", s });
    }
    if g1m == 0.0 {
        return Err(CompensationError::VanishingDenominator { factor: "gamma1(s - 2)", s });
    }
    Ok(model.gamma1_s(zs) / g2z * model.gamma2_s(s - 2.0) / g1m)
}

/// Mirror ratio for `phi1`: `(gamma2/gamma1)(eta s) / (gamma2/gamma1)(s + 2)`.
pub fn ratio_gt(model: &NormalizedModel, s: f64) -> Result<f64, CompensationError> {
    let es = model.eta(s);
    let g1e = model.gamma1_s(es);
    let g2p = model.gamma2_s(s + 2.0);
    if g1e == 0.0 {
        return Err(CompensationError::VanishingDenominator { factor: "gamma1(eta s)", s });
    }
    if g2p == 0.0 {
        return Err(CompensationError::VanishingDenominator { factor: "gamma2(s + 2)", s });
    }
    Ok(model.gamma2_s(es) / g1e * model.gamma1_s(s + 2.0) / g2p)
}

/// The ratio with the opposite shift, `(gamma1/gamma2)(zeta s) / (gamma1/gamma2)(s + 2)`.
///
/// Kept for diagnostics only: the series built on it does not satisfy the
/// functional equation.
pub fn ratio_g_forward(model: &NormalizedModel, s: f64) -> Result<f64, CompensationError> {
    let zs = model.zeta(s);
    let g2z = model.gamma2_s(zs);
    let g1p = model.gamma1_s(s + 2.0);
    if g2z == 0.0 || g1p == 0.0 {
        return Err(CompensationError::VanishingDenominator { factor: "gamma2(zeta s) or gamma1(s + 2)", s });
    }
    Ok(model.gamma1_s(zs) / g2z * model.gamma2_s(s + 2.0) / g1p)
}

/// Exponent `q` in `prod_{k<n} G(s - 2k) ~ C n^q`.
///
/// Each factor is a ratio of linear forms in `k`, giving
/// `q = 2 - 2 (1/(1+r1) + 1/(1+r2))`, which is negative whenever `|r1 r2| < 1`.
pub fn product_exponent(model: &NormalizedModel) -> f64 {
    2.0 - 2.0 * (1.0 / (1.0 + model.r1) + 1.0 / (1.0 + model.r2))
}

/// `log P(n)` for `P(n) = prod_{k=0}^{n-1} G(s - 2k)`, evaluated for every
/// `n` in `ns` (sorted ascending). Returns `(n, log|P(n)|)` pairs.
pub fn log_ratio_product(
    model: &NormalizedModel,
    s: f64,
    ns: &[usize],
) -> Result<Vec<(usize, f64)>, CompensationError> {
    let mut out = Vec::with_capacity(ns.len());
    let mut log_p = 0.0;
    let mut k = 0usize;
    for &n in ns {
        while k < n {
            log_p += ratio_g(model, s - 2.0 * k as f64)?.abs().ln();
            k += 1;
        }
        out.push((n, log_p));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_examples() {
        let p0 = NormalizedModel::new(0.5, 0.0, 0.0).unwrap();
        assert_eq!(ratio_g(&p0, 0.0).unwrap(), 0.0);
        let p3 = NormalizedModel::new(0.5, 0.5, 0.5).unwrap();
        assert!((ratio_g(&p3, 0.0).unwrap() - 5.0 / 14.0).abs() < 1e-15);
        assert!((ratio_g_forward(&p3, 0.0).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn product_exponent_matches_fit() {
        for (mu1, r1, r2) in [(0.5, 0.5, 0.5), (0.2, 0.0, 2.0), (0.3, -0.4, 0.9)] {
            let m = NormalizedModel::new(mu1, r1, r2).unwrap();
            let v = log_ratio_product(&m, 0.05, &[2000, 20000]).unwrap();
            let slope = (v[1].1 - v[0].1) / (20000f64 / 2000.0).ln();
            assert!((slope - product_exponent(&m)).abs() < 2e-3, "{slope} vs {}", product_exponent(&m));
            assert!(product_exponent(&m) < 0.0);
        }
    }
}
