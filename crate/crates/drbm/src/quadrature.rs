//! Globally adaptive Gauss-Kronrod (7/15) quadrature for complex-valued
//! integrands on a finite interval.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum QuadratureError<E> {
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions: error estimate {error:e}, target {target:e}"
    )]
    NotConverged { subdivisions: usize, error: f64, target: f64 },
    #[error("non-finite integrand at t = {0}")]
    NonFinite(f64),
    #[error("integrand failed: {0}")]
    Integrand(E),
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Integral estimate over one panel.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub value: Complex64,
    pub error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    /// Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.lo.total_cmp(&self.lo))
    }
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdiv: usize,
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub subdivisions: usize,
}

/// Applies the 15-point Kronrod rule and its embedded 7-point Gauss rule.
pub fn gk15<E>(f: &impl Fn(f64) -> Result<Complex64, E>, lo: f64, hi: f64) -> Result<Panel, QuadratureError<E>> {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let eval = |t: f64| -> Result<Complex64, QuadratureError<E>> {
        let v = f(t).map_err(QuadratureError::Integrand)?;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite(t))
        }
    };
    let fc = eval(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let pair = eval(c - h * x)? + eval(c + h * x)?;
        kronrod += pair * w;
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * h;
    let error = ((kronrod - gauss) * h).norm();
    Ok(Panel { lo, hi, value, error })
}

/// Integrates `f` over the union of consecutive panels given by the sorted
/// `breaks`, bisecting the worst panel until the summed error estimate
/// meets `max(abs_tol, rel_tol |I|)`.
///
/// The final sum runs over panels sorted by position, so the value is
/// independent of the refinement order.
pub fn integrate<E>(
    f: impl Fn(f64) -> Result<Complex64, E>,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral, QuadratureError<E>> {
    let mut heap = BinaryHeap::new();
    let (mut value, mut error) = (Complex64::new(0.0, 0.0), 0.0);
    for w in breaks.windows(2) {
        let p = gk15(&f, w[0], w[1])?;
        value += p.value;
        error += p.error;
        heap.push(p);
    }
    let mut subdivisions = 0usize;
    loop {
        let mut target = tol.abs_tol.max(tol.rel_tol * value.norm());
        if error <= target {
            // Recompute both sums from the panels to shed running round-off.
            (value, error) = totals(&heap);
            target = tol.abs_tol.max(tol.rel_tol * value.norm());
            if error <= target {
                return Ok(Integral { value, error, subdivisions });
            }
        }
        if subdivisions >= tol.max_subdiv {
            return Err(QuadratureError::NotConverged { subdivisions, error, target });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.lo + worst.hi);
        let (left, right) = (gk15(&f, worst.lo, mid)?, gk15(&f, mid, worst.hi)?);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (Complex64, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    panels.iter().fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| (v + p.value, e + p.error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    const TOL: Tolerance = Tolerance { rel_tol: 1e-12, abs_tol: 1e-14, max_subdiv: 2000 };

    #[test]
    fn polynomial_exact() {
        let r = integrate(|t| Ok::<_, Infallible>(Complex64::new(t.powi(5), -t * t)), &[0.0, 2.0], TOL).unwrap();
        assert!((r.value.re - 64.0 / 6.0).abs() < 1e-13);
        assert!((r.value.im + 8.0 / 3.0).abs() < 1e-13);
        assert_eq!(r.subdivisions, 0);
    }

    #[test]
    fn oscillatory_exponential() {
        // int_0^50 e^{-t} e^{i 7 t} dt = (1 - e^{(-1+7i)50}) / (1 - 7i)
        let f = |t: f64| Ok::<_, Infallible>(Complex64::new(-t, 7.0 * t).exp());
        let breaks: Vec<f64> = (0..=100).map(|k| 0.5 * k as f64).collect();
        let r = integrate(f, &breaks, TOL).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let exact = (one - Complex64::new(-50.0, 350.0).exp()) / Complex64::new(1.0, -7.0);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_refines() {
        let r = integrate(|t: f64| Ok::<_, Infallible>(Complex64::new(t.sqrt(), 0.0)), &[0.0, 1.0], TOL).unwrap();
        assert!((r.value.re - 2.0 / 3.0).abs() < 1e-12);
        assert!(r.subdivisions > 0);
    }

    #[test]
    fn reports_non_convergence() {
        let tight = Tolerance { max_subdiv: 3, ..TOL };
        let r = integrate(|t: f64| Ok::<_, Infallible>(Complex64::new((40.0 * t).sin(), 0.0)), &[0.0, 10.0], tight);
        assert!(matches!(r, Err(QuadratureError::NotConverged { .. })));
    }
}
