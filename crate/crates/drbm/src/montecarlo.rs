//! Monte Carlo oracle: Euler simulation of the reflected process with an
//! exact per-step two-dimensional Skorokhod solve.
//!
//! The free motion is `z0 + (sigma1, -sigma2) B_t + mu t`; the faces push
//! along the columns of `R = [[1, r2], [r1, 1]]`. Two step schemes exist:
//!
//! * [`Scheme::Projected`] reflects the Euler endpoint, the textbook scheme;
//! * [`Scheme::Bridge`] first samples the minimum of the Brownian bridge of
//!   each coordinate over the step and reflects that, which removes the
//!   `O(sqrt(dt))` local-time deficit of the projected scheme.
//!
//! Away from the faces and from the features an estimator resolves, steps
//! grow to `(d / 6 sigma)^2`, so the free motion is sampled exactly where
//! reflection is a six-sigma event.

use crate::model::{ModelError, ModelParams, NormalizedModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum McError {
    #[error("n_paths = {0}: at least 2 paths are needed for a standard error")]
    TooFewPaths(usize),
    #[error("Skorokhod problem infeasible at w = ({0}, {1})")]
    Infeasible(f64, f64),
    #[error("invalid simulation setting: {0}")]
    InvalidConfig(String),
    #[error("reference value h(z0) is zero")]
    ZeroReference,
    #[error("starting point ({0}, {1}) must satisfy |z0| < 1")]
    OutsideArc(f64, f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Raw dynamics of the process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dynamics {
    pub sigma: (f64, f64),
    pub mu: (f64, f64),
    pub r: (f64, f64),
}

impl Dynamics {
    pub fn from_params(p: &ModelParams) -> Result<Self, McError> {
        let report = crate::model::validate(p)?;
        if let Some(c) = report.first_failure() {
            return Err(ModelError::Invalid(format!("{}: {}", c.name, c.detail)).into());
        }
        Ok(Self { sigma: (p.sigma1, p.sigma2), mu: (p.mu1, p.mu2), r: (p.r1, p.r2) })
    }

    pub fn normalized(m: &NormalizedModel) -> Self {
        Self { sigma: (1.0, 1.0), mu: (m.mu1, m.mu2), r: (m.r1, m.r2) }
    }

    /// Direction orthogonal to the noise, `w = (sigma2, sigma1)`.
    pub fn null_direction(&self) -> (f64, f64) {
        (self.sigma.1, self.sigma.0)
    }

    /// Whether `w . Z` is nondecreasing, which holds when both reflection
    /// directions have a nonnegative component along `w`.
    pub fn null_monotone(&self) -> bool {
        let (w1, w2) = self.null_direction();
        w1 + w2 * self.r.0 >= 0.0 && w1 * self.r.1 + w2 >= 0.0
    }
}

/// Minimal `dL >= 0` with `z + delta + R dL >= 0` and complementarity.
///
/// `R` has unit diagonal and positive determinant, so it is a P-matrix and
/// the four-case enumeration below finds the unique solution.
pub fn step_reflect(r: (f64, f64), z: (f64, f64), delta: (f64, f64)) -> Result<((f64, f64), (f64, f64)), McError> {
    lcp(r, (z.0 + delta.0, z.1 + delta.1))
}

fn lcp(r: (f64, f64), w: (f64, f64)) -> Result<((f64, f64), (f64, f64)), McError> {
    let (r1, r2) = r;
    if w.0 >= 0.0 && w.1 >= 0.0 {
        return Ok((w, (0.0, 0.0)));
    }
    if w.0 < 0.0 {
        let l1 = -w.0;
        let y = w.1 + r1 * l1;
        if y >= 0.0 {
            return Ok(((0.0, y), (l1, 0.0)));
        }
    }
    if w.1 < 0.0 {
        let l2 = -w.1;
        let x = w.0 + r2 * l2;
        if x >= 0.0 {
            return Ok(((x, 0.0), (0.0, l2)));
        }
    }
    let det = 1.0 - r1 * r2;
    let l1 = (-w.0 + r2 * w.1) / det;
    let l2 = (-w.1 + r1 * w.0) / det;
    if l1 >= 0.0 && l2 >= 0.0 {
        Ok(((0.0, 0.0), (l1, l2)))
    } else {
        Err(McError::Infeasible(w.0, w.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Projected,
    Bridge,
}

/// Simulator settings shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub n_paths: usize,
    /// Base step, used near the faces and near resolved features.
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Larger exact steps away from faces and features.
    pub adaptive: bool,
    /// Cap on adaptive steps.
    pub h_max: f64,
}

impl McConfig {
    pub fn new(n_paths: usize, dt: f64, t_max: f64, seed: u64) -> Self {
        Self { n_paths, dt, t_max, seed, scheme: Scheme::Bridge, adaptive: true, h_max: 1.0 }
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn fixed_step(self) -> Self {
        Self { adaptive: false, ..self }
    }

    fn check(&self) -> Result<(), McError> {
        if self.n_paths < 2 {
            return Err(McError::TooFewPaths(self.n_paths));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(McError::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(McError::InvalidConfig(format!("t_max = {} must be at least dt", self.t_max)));
        }
        if !(self.h_max >= self.dt) {
            return Err(McError::InvalidConfig(format!("h_max = {} must be at least dt", self.h_max)));
        }
        Ok(())
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    /// Paths stopped by the horizon `t_max` before their own stopping rule.
    pub censored: usize,
}

impl Estimate {
    /// Mean and standard error of `values` by fixed-order pairwise sums.
    pub fn from_values(values: &[f64]) -> Result<Self, McError> {
        let n = values.len();
        if n < 2 {
            return Err(McError::TooFewPaths(n));
        }
        let mean = pairwise_sum(values) / n as f64;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Ok(Self { mean, std_error: (var / n as f64).sqrt(), n, censored: 0 })
    }

    pub fn scaled(self, k: f64) -> Self {
        Self { mean: self.mean * k, std_error: self.std_error * k.abs(), ..self }
    }

    /// `|mean - target| <= k SE + slack`.
    pub fn agrees(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + slack
    }
}

/// Pairwise summation with a fixed split, independent of scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Per-path functional driven by the simulator.
pub trait Observer {
    /// Distance from `z` to the nearest feature the functional must resolve.
    fn feature_distance(&self, _z: (f64, f64)) -> f64 {
        f64::INFINITY
    }
    /// Largest step the functional tolerates, independent of position.
    fn max_step(&self) -> f64 {
        f64::INFINITY
    }
    /// Called once per step from `z` to `z_next` over `[t, t + h]`.
    fn record(&mut self, t: f64, h: f64, z: (f64, f64), z_next: (f64, f64), dl: (f64, f64));
    /// Early stop once the functional can no longer change materially.
    fn done(&self, _t: f64, _z: (f64, f64)) -> bool {
        false
    }
}

/// End state of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEnd {
    pub t: f64,
    pub z: (f64, f64),
    pub steps: u64,
    pub censored: bool,
}

/// One path step: new state, local-time increment, Brownian increment.
type StepOut = ((f64, f64), (f64, f64), f64);

/// Euler-Skorokhod simulator.
#[derive(Debug, Clone, Copy)]
pub struct Simulator {
    pub dynamics: Dynamics,
    pub config: McConfig,
    /// Testing hook: with `false` the Brownian increments are forced to 0.
    pub noise: bool,
}

/// Adaptive steps keep the nearest face or feature this many standard
/// deviations away.
const STEP_SIGMAS: f64 = 6.0;
/// Bridge minima are sampled when the face is within this many standard
/// deviations of the step's lower envelope.
const BRIDGE_SIGMAS: f64 = 8.0;

impl Simulator {
    pub fn new(dynamics: Dynamics, config: McConfig) -> Result<Self, McError> {
        config.check()?;
        Ok(Self { dynamics, config, noise: true })
    }

    pub fn without_noise(mut self) -> Self {
        self.noise = false;
        self
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(stream);
        rng
    }

    fn step_size(&self, z: (f64, f64), feature: f64, cap: f64, remaining: f64) -> f64 {
        let c = &self.config;
        if !c.adaptive {
            return c.dt.min(remaining);
        }
        let d = &self.dynamics;
        let k = STEP_SIGMAS;
        let hx = (z.0 / (k * d.sigma.0)).powi(2);
        let hy = (z.1 / (k * d.sigma.1)).powi(2);
        let speed = d.sigma.0.hypot(d.sigma.1);
        let drift = d.mu.0.hypot(d.mu.1);
        let hf = (feature / (k * speed)).powi(2).min(feature / (2.0 * drift));
        hx.min(hy).min(hf).min(cap).min(c.h_max).max(c.dt).min(remaining)
    }

    fn step(&self, z: (f64, f64), h: f64, rng: &mut ChaCha8Rng) -> Result<StepOut, McError> {
        let d = &self.dynamics;
        let db = if self.noise {
            let g: f64 = rng.sample(StandardNormal);
            g * h.sqrt()
        } else {
            0.0
        };
        let delta = (d.sigma.0 * db + d.mu.0 * h, -d.sigma.1 * db + d.mu.1 * h);
        match self.config.scheme {
            Scheme::Projected => {
                let (zn, dl) = step_reflect(d.r, z, delta)?;
                Ok((zn, dl, db))
            }
            Scheme::Bridge => {
                let low = |zi: f64, di: f64, si: f64, rng: &mut ChaCha8Rng| -> f64 {
                    if zi + di.min(0.0) >= BRIDGE_SIGMAS * si * h.sqrt() || !self.noise {
                        return zi + di.min(0.0);
                    }
                    let u: f64 = 1.0 - rng.random::<f64>();
                    zi + 0.5 * (di - (di * di - 2.0 * si * si * h * u.ln()).sqrt())
                };
                let w = (low(z.0, delta.0, d.sigma.0, rng), low(z.1, delta.1, d.sigma.1, rng));
                let (_, dl) = lcp(d.r, w)?;
                let zn =
                    ((z.0 + delta.0 + dl.0 + d.r.1 * dl.1).max(0.0), (z.1 + delta.1 + d.r.0 * dl.0 + dl.1).max(0.0));
                Ok((zn, dl, db))
            }
        }
    }

    /// Runs one path up to `horizon` (capped at `t_max`) or until the
    /// observer is done.
    pub fn run<O: Observer>(&self, z0: (f64, f64), horizon: f64, stream: u64, obs: &mut O) -> Result<PathEnd, McError> {
        let horizon = horizon.min(self.config.t_max);
        let mut rng = self.rng(stream);
        let (mut t, mut z, mut steps) = (0.0, z0, 0u64);
        loop {
            if obs.done(t, z) {
                return Ok(PathEnd { t, z, steps, censored: false });
            }
            let remaining = horizon - t;
            if remaining <= 1e-12 * horizon {
                return Ok(PathEnd { t, z, steps, censored: true });
            }
            let h = self.step_size(z, obs.feature_distance(z), obs.max_step(), remaining);
            let (zn, dl, _) = self.step(z, h, &mut rng)?;
            obs.record(t, h, z, zn, dl);
            z = zn;
            t += h;
            steps += 1;
        }
    }

    /// Full trajectory with fixed step `dt` over `[0, T]`.
    pub fn simulate_path(&self, z0: (f64, f64), t_end: f64, stream: u64) -> Result<PathSample, McError> {
        let dt = self.config.dt;
        let n = (t_end / dt).round() as usize;
        let mut rng = self.rng(stream);
        let mut s = PathSample {
            dt,
            times: Vec::with_capacity(n + 1),
            positions: Vec::with_capacity(n + 1),
            l1: Vec::with_capacity(n + 1),
            l2: Vec::with_capacity(n + 1),
            increments: Vec::with_capacity(n),
        };
        let (mut z, mut l) = (z0, (0.0, 0.0));
        s.times.push(0.0);
        s.positions.push(z);
        s.l1.push(0.0);
        s.l2.push(0.0);
        for k in 0..n {
            let (zn, dl, db) = self.step(z, dt, &mut rng)?;
            z = zn;
            l = (l.0 + dl.0, l.1 + dl.1);
            s.times.push((k + 1) as f64 * dt);
            s.positions.push(z);
            s.l1.push(l.0);
            s.l2.push(l.1);
            s.increments.push(db);
        }
        Ok(s)
    }

    /// Evaluates `f` on every path in parallel; the output is ordered by
    /// path index, so later reductions do not depend on the worker count.
    pub fn map_paths<T: Send>(&self, f: impl Fn(u64) -> Result<T, McError> + Sync + Send) -> Result<Vec<T>, McError> {
        (0..self.config.n_paths as u64).into_par_iter().map(f).collect()
    }

    fn estimate<O: Observer>(
        &self,
        z0: (f64, f64),
        horizon: f64,
        make: impl Fn() -> O + Sync + Send,
        value: impl Fn(&O, &PathEnd) -> f64 + Sync + Send,
    ) -> Result<Estimate, McError> {
        let out = self.map_paths(|i| {
            let mut obs = make();
            let end = self.run(z0, horizon, i, &mut obs)?;
            Ok((value(&obs, &end), end.censored))
        })?;
        let values: Vec<f64> = out.iter().map(|p| p.0).collect();
        let mut est = Estimate::from_values(&values)?;
        est.censored = out.iter().filter(|p| p.1).count();
        Ok(est)
    }
}

/// Simulated trajectory with cumulative local times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub dt: f64,
    pub times: Vec<f64>,
    pub positions: Vec<(f64, f64)>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    /// Brownian increments, one per step.
    pub increments: Vec<f64>,
}

/// Closed axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn centered(c: (f64, f64), side: f64) -> Self {
        let h = 0.5 * side;
        Self { x0: c.0 - h, x1: c.0 + h, y0: c.1 - h, y1: c.1 + h }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, z: (f64, f64)) -> bool {
        z.0 >= self.x0 && z.0 <= self.x1 && z.1 >= self.y0 && z.1 <= self.y1
    }

    /// Distance from `z` to the boundary of the rectangle.
    pub fn boundary_distance(&self, z: (f64, f64)) -> f64 {
        if self.contains(z) {
            (z.0 - self.x0).min(self.x1 - z.0).min(z.1 - self.y0).min(self.y1 - z.1)
        } else {
            let dx = (self.x0 - z.0).max(z.0 - self.x1).max(0.0);
            let dy = (self.y0 - z.1).max(z.1 - self.y1).max(0.0);
            dx.hypot(dy)
        }
    }
}

/// Face carrying a boundary measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// The face `x = 0`, local time `L1`.
    X0,
    /// The face `y = 0`, local time `L2`.
    Y0,
}

/// `w . z` beyond which a path with nondecreasing `w . Z` cannot return.
fn null_cutoff(d: &Dynamics, corner: (f64, f64)) -> Option<f64> {
    let w = d.null_direction();
    d.null_monotone().then_some(w.0 * corner.0 + w.1 * corner.1)
}

fn null_value(d: &Dynamics, z: (f64, f64)) -> f64 {
    let w = d.null_direction();
    w.0 * z.0 + w.1 * z.1
}

struct BoxObs<'a> {
    rect: Rect,
    dynamics: &'a Dynamics,
    cutoff: Option<f64>,
    occupation: f64,
}

impl Observer for BoxObs<'_> {
    fn feature_distance(&self, z: (f64, f64)) -> f64 {
        self.rect.boundary_distance(z)
    }
    fn record(&mut self, _t: f64, h: f64, z: (f64, f64), _zn: (f64, f64), _dl: (f64, f64)) {
        if self.rect.contains(z) {
            self.occupation += h;
        }
    }
    fn done(&self, _t: f64, z: (f64, f64)) -> bool {
        self.cutoff.is_some_and(|c| null_value(self.dynamics, z) > c)
    }
}

/// Expected occupation time of `rect`, `E int_0^T 1_rect(Z_t) dt`.
pub fn estimate_green_box(sim: &Simulator, z0: (f64, f64), rect: Rect) -> Result<Estimate, McError> {
    let cutoff = null_cutoff(&sim.dynamics, (rect.x1, rect.y1));
    sim.estimate(
        z0,
        sim.config.t_max,
        || BoxObs { rect, dynamics: &sim.dynamics, cutoff, occupation: 0.0 },
        |o, _| o.occupation,
    )
}

struct BoundaryObs<'a> {
    axis: Axis,
    lo: f64,
    hi: f64,
    dynamics: &'a Dynamics,
    cutoff: Option<f64>,
    mass: f64,
}

impl Observer for BoundaryObs<'_> {
    fn record(&mut self, _t: f64, _h: f64, _z: (f64, f64), zn: (f64, f64), dl: (f64, f64)) {
        let (pos, inc) = match self.axis {
            Axis::X0 => (zn.1, dl.0),
            Axis::Y0 => (zn.0, dl.1),
        };
        if inc > 0.0 && pos >= self.lo && pos <= self.hi {
            self.mass += inc;
        }
    }
    fn done(&self, _t: f64, z: (f64, f64)) -> bool {
        self.cutoff.is_some_and(|c| null_value(self.dynamics, z) > c)
    }
}

/// Boundary density on `interval` of `axis`:
/// `E int 1_interval(Z_t) dL^i_t` divided by the interval length.
pub fn estimate_boundary_density(
    sim: &Simulator,
    z0: (f64, f64),
    axis: Axis,
    interval: (f64, f64),
) -> Result<Estimate, McError> {
    let (lo, hi) = interval;
    if !(hi > lo) {
        return Err(McError::InvalidConfig(format!("interval ({lo}, {hi}) is empty")));
    }
    let corner = match axis {
        Axis::X0 => (0.0, hi),
        Axis::Y0 => (hi, 0.0),
    };
    let cutoff = null_cutoff(&sim.dynamics, corner);
    let est = sim.estimate(
        z0,
        sim.config.t_max,
        || BoundaryObs { axis, lo, hi, dynamics: &sim.dynamics, cutoff, mass: 0.0 },
        |o, _| o.mass,
    )?;
    Ok(est.scaled(1.0 / (hi - lo)))
}

/// Laplace functional to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceTarget {
    /// `phi(x, y) = E int e^{x Z1 + y Z2} dt`, with `x, y < 0`.
    Interior { x: f64, y: f64 },
    /// `phi2(x) = E int e^{x Z1} dL2`, with `x <= 0`.
    Face2 { x: f64 },
    /// `phi1(y) = E int e^{y Z2} dL1`, with `y <= 0`.
    Face1 { y: f64 },
}

struct LaplaceObs<'a> {
    target: LaplaceTarget,
    dynamics: &'a Dynamics,
    /// Return to the relevant face is below this probability past `stop_level`.
    stop_level: Option<f64>,
    acc: f64,
}

/// Return probability to a face below which Laplace paths stop.
const RETURN_PROBABILITY: f64 = 1e-12;

/// Interior Laplace steps satisfy `h |(x sigma1, y sigma2)|^2 <= INTEGRAND_STEP`.
const INTEGRAND_STEP: f64 = 0.02;

impl Observer for LaplaceObs<'_> {
    // The trapezoid rule matches E int f(Z) dt to second order in the step,
    // so the interior integrand only needs its own length scale resolved.
    fn max_step(&self) -> f64 {
        match self.target {
            LaplaceTarget::Interior { x, y } => {
                let s = self.dynamics.sigma;
                INTEGRAND_STEP / ((x * s.0).powi(2) + (y * s.1).powi(2))
            }
            _ => f64::INFINITY,
        }
    }
    fn record(&mut self, _t: f64, h: f64, z: (f64, f64), zn: (f64, f64), dl: (f64, f64)) {
        match self.target {
            LaplaceTarget::Interior { x, y } => {
                let e0 = (x * z.0 + y * z.1).exp();
                let e1 = (x * zn.0 + y * zn.1).exp();
                self.acc += 0.5 * h * (e0 + e1);
            }
            LaplaceTarget::Face2 { x } => self.acc += (x * zn.0).exp() * dl.1,
            LaplaceTarget::Face1 { y } => self.acc += (y * zn.1).exp() * dl.0,
        }
    }
    fn done(&self, _t: f64, z: (f64, f64)) -> bool {
        let d = self.dynamics;
        match self.target {
            LaplaceTarget::Interior { x, y } => {
                // With w.Z nondecreasing at rate >= w.mu, the remaining
                // integral is at most e^{c w.z} / (|c| w.mu).
                if !d.null_monotone() {
                    return false;
                }
                let w = d.null_direction();
                let c = (x / w.0).max(y / w.1);
                let rate = w.0 * d.mu.0 + w.1 * d.mu.1;
                (c * null_value(d, z)).exp() / (-c * rate) < 1e-12 * self.acc.max(1e-300)
            }
            LaplaceTarget::Face2 { .. } => self.stop_level.is_some_and(|l| z.1 > l),
            LaplaceTarget::Face1 { .. } => self.stop_level.is_some_and(|l| z.0 > l),
        }
    }
}

/// Monte Carlo Laplace transform of the occupation or boundary measure.
pub fn estimate_laplace(sim: &Simulator, z0: (f64, f64), target: LaplaceTarget) -> Result<Estimate, McError> {
    let d = &sim.dynamics;
    let ln_p = -RETURN_PROBABILITY.ln();
    let stop_level = match target {
        LaplaceTarget::Interior { x, y } => {
            if !(x < 0.0 && y < 0.0) {
                return Err(McError::InvalidConfig(format!("interior Laplace needs x, y < 0, got ({x}, {y})")));
            }
            None
        }
        // The coordinate is a drifted Brownian motion pushed only upward
        // when the other face pushes nonnegatively, so its return
        // probability from level l is at most e^{-2 mu l / sigma^2}.
        LaplaceTarget::Face2 { x } => {
            if x > 0.0 {
                return Err(McError::InvalidConfig(format!("phi2 needs x <= 0, got {x}")));
            }
            (d.r.0 >= 0.0).then_some(ln_p * d.sigma.1 * d.sigma.1 / (2.0 * d.mu.1))
        }
        LaplaceTarget::Face1 { y } => {
            if y > 0.0 {
                return Err(McError::InvalidConfig(format!("phi1 needs y <= 0, got {y}")));
            }
            (d.r.1 >= 0.0).then_some(ln_p * d.sigma.0 * d.sigma.0 / (2.0 * d.mu.0))
        }
    };
    sim.estimate(z0, sim.config.t_max, || LaplaceObs { target, dynamics: d, stop_level, acc: 0.0 }, |o, _| o.acc)
}

struct NullObs;

impl Observer for NullObs {
    fn record(&mut self, _t: f64, _h: f64, _z: (f64, f64), _zn: (f64, f64), _dl: (f64, f64)) {}
}

/// Positions `Z_t` of every path, in path order.
pub fn terminal_points(sim: &Simulator, z0: (f64, f64), t: f64) -> Result<Vec<(f64, f64)>, McError> {
    if !(t > 0.0 && t <= sim.config.t_max) {
        return Err(McError::InvalidConfig(format!("t = {t} must lie in (0, t_max]")));
    }
    sim.map_paths(|i| Ok(sim.run(z0, t, i, &mut NullObs)?.z))
}

/// Estimates of `E h(Z_t) / h(z0)` for several functions on shared paths.
pub fn check_harmonic_many(
    sim: &Simulator,
    hs: &[&(dyn Fn((f64, f64)) -> f64 + Sync)],
    z0: (f64, f64),
    t: f64,
) -> Result<Vec<Estimate>, McError> {
    let refs: Vec<f64> = hs.iter().map(|h| h(z0)).collect();
    if refs.iter().any(|&r| r == 0.0 || !r.is_finite()) {
        return Err(McError::ZeroReference);
    }
    let points = terminal_points(sim, z0, t)?;
    hs.iter()
        .zip(&refs)
        .map(|(h, &r)| {
            let vals: Vec<f64> = points.par_iter().map(|&z| h(z) / r).collect();
            Estimate::from_values(&vals)
        })
        .collect()
}

/// Estimate of `E h(Z_t) / h(z0)`.
pub fn check_harmonic(
    sim: &Simulator,
    h: &(dyn Fn((f64, f64)) -> f64 + Sync),
    z0: (f64, f64),
    t: f64,
) -> Result<Estimate, McError> {
    Ok(check_harmonic_many(sim, &[h], z0, t)?.remove(0))
}

struct ArcObs {
    hit: Option<(f64, f64)>,
}

impl Observer for ArcObs {
    fn feature_distance(&self, z: (f64, f64)) -> f64 {
        (1.0 - z.0.hypot(z.1)).abs()
    }
    fn record(&mut self, _t: f64, _h: f64, z: (f64, f64), zn: (f64, f64), _dl: (f64, f64)) {
        if self.hit.is_none() && zn.0.hypot(zn.1) >= 1.0 {
            // Linear interpolation of the crossing within the step.
            let (r0, r1) = (z.0.hypot(z.1), zn.0.hypot(zn.1));
            let f = if r1 > r0 { (1.0 - r0) / (r1 - r0) } else { 1.0 };
            let p = (z.0 + f * (zn.0 - z.0), z.1 + f * (zn.1 - z.1));
            let n = p.0.hypot(p.1);
            self.hit = Some((p.0 / n, p.1 / n));
        }
    }
    fn done(&self, _t: f64, _z: (f64, f64)) -> bool {
        self.hit.is_some()
    }
}

/// Exit points on the unit arc of paths started inside it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcSample {
    pub points: Vec<(f64, f64)>,
    /// Paths that reached `t_max` before hitting the arc (excluded).
    pub excluded: usize,
}

impl ArcSample {
    /// Mean of `f` over the hitting points.
    pub fn average(&self, f: impl Fn((f64, f64)) -> f64 + Sync) -> Result<Estimate, McError> {
        let vals: Vec<f64> = self.points.par_iter().map(|&p| f(p)).collect();
        let mut est = Estimate::from_values(&vals)?;
        est.censored = self.excluded;
        Ok(est)
    }
}

/// Empirical distribution of the first exit point through `|z| = 1`.
pub fn hitting_distribution_arc(sim: &Simulator, z0: (f64, f64)) -> Result<ArcSample, McError> {
    let r0 = z0.0.hypot(z0.1);
    if r0 > 1.0 {
        return Err(McError::OutsideArc(z0.0, z0.1));
    }
    if r0 == 1.0 {
        return Ok(ArcSample { points: vec![z0; sim.config.n_paths], excluded: 0 });
    }
    let hits = sim.map_paths(|i| {
        let mut obs = ArcObs { hit: None };
        sim.run(z0, sim.config.t_max, i, &mut obs)?;
        Ok(obs.hit)
    })?;
    let excluded = hits.iter().filter(|h| h.is_none()).count();
    Ok(ArcSample { points: hits.into_iter().flatten().collect(), excluded })
}
