//! Truncation control for the slowly or rapidly converging series used by
//! the compensation formulas.

use num_complex::Complex64;
use serde::Serialize;
use std::collections::VecDeque;

use crate::scalar::Scalar;

/// Stopping parameters for a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    /// Scale below which `|value|` is treated as this floor in relative tests.
    pub abs_floor: f64,
    pub n_max: usize,
    /// Extrapolate an algebraically decaying tail from partial sums at
    /// `n = 2^k` when the direct rule does not stop within `n_max` terms.
    pub power_tail: bool,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_floor: 1e-300, n_max: 10_000, power_tail: false }
    }
}

impl SeriesControl {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

/// A truncated series value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    pub n_terms: usize,
    pub tail_bound: f64,
    pub converged: bool,
}

fn ser_complex<S: serde::Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&c.re)?;
    t.serialize_element(&c.im)?;
    t.end()
}

impl SeriesValue {
    pub fn re(&self) -> f64 {
        self.value.re
    }

    pub fn combine(self, other: SeriesValue, control: &SeriesControl) -> SeriesValue {
        let value = self.value + other.value;
        let tail_bound = self.tail_bound + other.tail_bound;
        SeriesValue {
            value,
            n_terms: self.n_terms + other.n_terms,
            tail_bound,
            converged: self.converged
                && other.converged
                && tail_bound <= control.rel_tol * value.norm().max(control.abs_floor),
        }
    }

    pub fn scaled(self, k: f64) -> SeriesValue {
        SeriesValue { value: self.value * k, tail_bound: self.tail_bound * k.abs(), ..self }
    }
}

const HISTORY: usize = 6;
const SMALL_RUN: usize = 3;

/// Running sum with the truncation rule: stop once three consecutive terms
/// are below `rel_tol` relative to the partial sum and a majorant of the
/// tail is as well.
///
/// The majorant is geometric when the last five term ratios are clearly
/// below one, and a fitted power law otherwise.
#[derive(Debug, Clone)]
pub struct Accumulator<T: Scalar> {
    sum: T,
    n: usize,
    small_run: usize,
    recent: VecDeque<f64>,
    /// Partial sums after `2^k` pushed terms.
    checkpoints: Vec<Complex64>,
    control: SeriesControl,
}

impl<T: Scalar> Accumulator<T> {
    pub fn new(control: SeriesControl) -> Self {
        Self {
            sum: T::from(0.0),
            n: 0,
            small_run: 0,
            recent: VecDeque::with_capacity(HISTORY),
            checkpoints: Vec::new(),
            control,
        }
    }

    pub fn sum(&self) -> T {
        self.sum
    }

    pub fn n_terms(&self) -> usize {
        self.n
    }

    /// Adds a term; returns `true` once the stopping rule is met.
    pub fn push(&mut self, term: T) -> bool {
        self.sum = self.sum + term;
        self.n += 1;
        if self.control.power_tail && self.n.is_power_of_two() {
            self.checkpoints.push(self.sum.to_complex());
        }
        let mag = term.abs();
        if self.recent.len() == HISTORY {
            self.recent.pop_front();
        }
        self.recent.push_back(mag);
        let scale = self.scale();
        if mag <= self.control.rel_tol * scale {
            self.small_run += 1;
        } else {
            self.small_run = 0;
        }
        self.small_run >= SMALL_RUN && self.tail_bound() <= self.control.rel_tol * scale
    }

    /// Pushes an initial term that does not participate in the stopping test.
    pub fn seed(&mut self, term: T) {
        self.sum = self.sum + term;
    }

    fn scale(&self) -> f64 {
        self.sum.abs().max(self.control.abs_floor)
    }

    pub fn exhausted(&self) -> bool {
        self.n >= self.control.n_max
    }

    /// Estimated bound on the omitted tail.
    pub fn tail_bound(&self) -> f64 {
        let r = &self.recent;
        if r.len() < HISTORY {
            return f64::INFINITY;
        }
        let last = r[HISTORY - 1];
        if r.iter().all(|&m| m == 0.0) {
            return 0.0;
        }
        let mut rho: f64 = 0.0;
        for k in 1..HISTORY {
            let q = if r[k] == 0.0 {
                0.0
            } else if r[k - 1] == 0.0 {
                f64::INFINITY
            } else {
                r[k] / r[k - 1]
            };
            rho = rho.max(q);
        }
        if rho < 0.9 {
            return last * rho / (1.0 - rho);
        }
        // Power-law majorant |t_n| ~ C n^-q from the oldest and newest terms.
        let n = self.n as f64;
        let n_old = n - (HISTORY - 1) as f64;
        if last == 0.0 || r[0] == 0.0 || n_old < 1.0 {
            return f64::INFINITY;
        }
        let q = (r[0] / last).ln() / (n / n_old).ln();
        if q <= 1.05 {
            return f64::INFINITY;
        }
        // Factor 2 covers the curvature of the fitted log-log line.
        2.0 * last * n / (q - 1.0)
    }

    pub fn finish(&self) -> SeriesValue {
        let tail_bound = self.tail_bound();
        let converged = tail_bound <= self.control.rel_tol * self.scale();
        if !converged && self.control.power_tail {
            if let Some(v) = self.power_extrapolation() {
                return v;
            }
        }
        SeriesValue { value: self.sum.to_complex(), n_terms: self.n, tail_bound, converged }
    }

    /// Limit of `S_n = S + C n^-p` through the partial sums at `N/4, N/2, N`
    /// for the last two available `N = 2^k`. The difference of the two
    /// extrapolations is the error estimate.
    fn power_extrapolation(&self) -> Option<SeriesValue> {
        let c = &self.checkpoints;
        if c.len() < 4 {
            return None;
        }
        let limit = |k: usize| -> Option<Complex64> {
            let (d1, d2) = (c[k - 1] - c[k - 2], c[k] - c[k - 1]);
            if d1.norm() == 0.0 {
                return (d2.norm() == 0.0).then_some(c[k]);
            }
            let rho = d2 / d1;
            // An algebraic tail halves its increments by 2^-p with p > 0.
            if !(rho.re > 0.0 && rho.re < 1.0 && rho.im.abs() < 1e-3 * rho.re) {
                return None;
            }
            Some(c[k] + d2 * rho / (1.0 - rho))
        };
        let k = c.len() - 1;
        let (now, before) = (limit(k)?, limit(k - 1)?);
        let err = (now - before).norm();
        let scale = now.norm().max(self.control.abs_floor);
        Some(SeriesValue {
            value: now,
            n_terms: self.n,
            tail_bound: err,
            converged: err <= self.control.rel_tol * scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(terms: impl Iterator<Item = f64>, control: SeriesControl) -> SeriesValue {
        let mut acc = Accumulator::<f64>::new(control);
        for t in terms {
            if acc.push(t) || acc.exhausted() {
                break;
            }
        }
        acc.finish()
    }

    #[test]
    fn power_tail_extrapolation() {
        let terms = (1..).map(|k: i32| (k as f64).powf(-1.5));
        let plain = SeriesControl { rel_tol: 1e-8, n_max: 1 << 20, ..Default::default() };
        assert!(!run(terms.clone(), plain).converged);
        let v = run(terms, SeriesControl { power_tail: true, ..plain });
        assert!(v.converged);
        // zeta(3/2)
        assert!((v.re() - 2.612_375_348_685_488).abs() < 1e-7, "{}", v.re());
    }

    #[test]
    fn geometric_series() {
        let v = run((0..).map(|k| 0.5f64.powi(k)), SeriesControl::default());
        assert!(v.converged);
        assert!((v.value.re - 2.0).abs() < 1e-11);
        assert!(v.tail_bound < 1e-11);
    }

    #[test]
    fn terminating_series() {
        let v = run([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0].into_iter(), SeriesControl::default());
        assert!(v.converged);
        assert_eq!(v.value.re, 1.0);
        assert_eq!(v.tail_bound, 0.0);
    }

    #[test]
    fn power_law_series_reports_tail() {
        let control = SeriesControl { rel_tol: 1e-6, n_max: 100_000, ..Default::default() };
        let v = run((1..).map(|k| (k as f64).powi(-4)), control);
        let exact = std::f64::consts::PI.powi(4) / 90.0;
        assert!(v.converged);
        assert!((v.value.re - exact).abs() <= v.tail_bound);
    }

    #[test]
    fn divergent_series_not_converged() {
        let control = SeriesControl { n_max: 500, ..Default::default() };
        let v = run((1..).map(|k| 1.0 / k as f64), control);
        assert!(!v.converged);
        assert_eq!(v.n_terms, 500);
    }
}
