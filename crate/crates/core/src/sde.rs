//! Stochastic dynamics of the agent populations and of the ratio process.
//!
//! Two routes produce a [`Trajectory`]:
//!
//! * [`integrate_agent_sde`] evolves the coupled pair `(n_f, xi)` — the
//!   fraction of fundamentalist traders and the mood of speculative traders.
//!   Both diffusions share the state-dependent inter-trade time `tau(n_f)`;
//!   the mood runs `h_cc` times faster than the population.
//! * [`integrate_y_sde`] evolves the one-dimensional nonlinear diffusion for
//!   the ratio `y` directly. It is the single-variable reduction of the
//!   population dynamics (exact for a symmetrized inter-trade time) and is
//!   cheaper when the mood and the intraday pattern are not needed.
//!
//! Both integrators are Euler–Maruyama in scaled time `t_s = h_day * t`,
//! with reflecting boundaries and an internal step chosen so the per-step
//! drift and diffusion increments stay O(kappa). Output is sampled on a
//! uniform day grid by taking the internal state at (or immediately around)
//! each grid time; no interpolation is performed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::{ModelParams, YProcessParams, SECONDS_PER_DAY};
use crate::trajectory::Trajectory;

/// Inter-trade time `tau(n_f) = (1 + a_tau * (1 - n_f) / n_f)^(-alpha)`.
///
/// Strictly positive and at most 1; trading accelerates as the chartist
/// fraction grows.
pub fn tau(n_f: f64, params: &ModelParams) -> Result<f64> {
    if !(n_f > 0.0 && n_f <= 1.0) {
        return Err(Error::Domain(format!("tau requires 0 < n_f <= 1, got {n_f}")));
    }
    let y = (1.0 - n_f) / n_f;
    Ok((1.0 + params.a_tau * y).powf(-params.alpha))
}

/// Instantaneous state of the agent diffusions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    /// Fraction of fundamentalist traders, in (0, 1).
    pub n_f: f64,
    /// Mood of speculative traders, in (-1, 1).
    pub xi: f64,
    /// Elapsed scaled time `t_s = h_day * t`.
    pub t_scaled: f64,
}

impl AgentState {
    pub fn new(n_f: f64, xi: f64) -> Self {
        AgentState { n_f, xi, t_scaled: 0.0 }
    }

    /// Drift-root initial condition: `n_f` at its deterministic fixed point,
    /// neutral mood.
    pub fn equilibrium(params: &ModelParams) -> Self {
        AgentState::new(params.n_f_fixed_point(), 0.0)
    }
}

/// Reflecting-boundary offsets for the agent state space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentBounds {
    /// `n_f` is kept inside `[n_min, 1 - n_min]`.
    pub n_min: f64,
    /// `xi` is kept inside `[-1 + xi_min, 1 - xi_min]`.
    pub xi_min: f64,
}

impl Default for AgentBounds {
    fn default() -> Self {
        AgentBounds { n_min: 1e-6, xi_min: 1e-6 }
    }
}

/// Drift and diffusion coefficients of the agent diffusions at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentDriftDiffusion {
    pub drift_nf: f64,
    pub diff_nf: f64,
    pub drift_xi: f64,
    pub diff_xi: f64,
}

/// Evaluate the drift and diffusion coefficients at `state`:
///
/// ```text
/// drift_nf = ((1 - n_f) eps_cf - n_f eps_fc) / tau      diff_nf^2 = 2 n_f (1 - n_f) / tau
/// drift_xi = -2 h_cc eps_cc xi / tau                    diff_xi^2 = 2 h_cc (1 - xi^2) / tau
/// ```
pub fn agent_drift_diffusion(state: &AgentState, params: &ModelParams) -> Result<AgentDriftDiffusion> {
    let t = tau(state.n_f, params)?;
    if !(state.xi > -1.0 && state.xi < 1.0) {
        return Err(Error::Domain(format!("xi must lie in (-1, 1), got {}", state.xi)));
    }
    let n_f = state.n_f;
    let xi = state.xi;
    Ok(AgentDriftDiffusion {
        drift_nf: ((1.0 - n_f) * params.eps_cf - n_f * params.eps_fc) / t,
        diff_nf: (2.0 * n_f * (1.0 - n_f) / t).sqrt(),
        drift_xi: -2.0 * params.h_cc * params.eps_cc * xi / t,
        diff_xi: (2.0 * params.h_cc * (1.0 - xi * xi) / t).sqrt(),
    })
}

/// Controls for the agent integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSdeConfig {
    /// Step-control parameter in (0, 0.5]; per-step increments stay O(kappa).
    pub kappa: f64,
    pub bounds: AgentBounds,
    /// Scaled time advanced (and discarded) before sampling starts.
    pub burn_in_scaled: f64,
    /// Diffusion multiplier; 0 turns the dynamics deterministic.
    pub noise_scale: f64,
}

impl Default for AgentSdeConfig {
    fn default() -> Self {
        AgentSdeConfig {
            kappa: 0.1,
            bounds: AgentBounds::default(),
            burn_in_scaled: 0.0,
            noise_scale: 1.0,
        }
    }
}

/// Fold a value back into `[lo, hi]` by reflection at the boundaries.
fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    while x < lo || x > hi {
        if x < lo {
            x = 2.0 * lo - x;
        } else {
            x = 2.0 * hi - x;
        }
    }
    x
}

fn inv_tau(y: f64, a_tau: f64, alpha: f64) -> f64 {
    let base = 1.0 + a_tau * y;
    if alpha == 2.0 {
        base * base
    } else {
        base.powf(alpha)
    }
}

struct AgentStepper {
    eps_cf: f64,
    eps_fc: f64,
    eps_cc: f64,
    h_cc: f64,
    a_tau: f64,
    alpha: f64,
    n_lo: f64,
    n_hi: f64,
    xi_lo: f64,
    xi_hi: f64,
    noise: f64,
    nf: f64,
    xi: f64,
    rng: ChaCha8Rng,
    steps: u64,
}

impl AgentStepper {
    /// One Euler–Maruyama step with internal step `step_scale * tau(n_f)`
    /// capped at `dt_cap`. Returns the step actually taken (scaled time).
    #[inline]
    fn step(&mut self, step_scale: f64, dt_cap: f64) -> Result<f64> {
        let nf = self.nf;
        let xi = self.xi;
        let y = (1.0 - nf) / nf;
        let it = inv_tau(y, self.a_tau, self.alpha);
        let dt = (step_scale / it).min(dt_cap);
        let sdt = dt.sqrt();
        let z1: f64 = self.rng.sample(StandardNormal);
        let z2: f64 = self.rng.sample(StandardNormal);

        let drift_nf = ((1.0 - nf) * self.eps_cf - nf * self.eps_fc) * it;
        let diff_nf = (2.0 * nf * (1.0 - nf) * it).sqrt();
        let drift_xi = -2.0 * self.h_cc * self.eps_cc * xi * it;
        let diff_xi = (2.0 * self.h_cc * (1.0 - xi * xi) * it).sqrt();

        self.nf = reflect(nf + drift_nf * dt + self.noise * diff_nf * sdt * z1, self.n_lo, self.n_hi);
        self.xi = reflect(xi + drift_xi * dt + self.noise * diff_xi * sdt * z2, self.xi_lo, self.xi_hi);
        self.steps += 1;
        if !(self.nf.is_finite() && self.xi.is_finite()) {
            return Err(Error::NonFinite { step: self.steps });
        }
        Ok(dt)
    }
}

/// Integrate the coupled agent diffusions and sample them on a uniform grid.
///
/// Time arguments are in days; internally the dynamics run in scaled time
/// `t_s = h_day * t` with `h_day = params.h * 86400`. The internal step is
/// `kappa^2 * tau(n_f) / max(1, h_cc)`, additionally capped at the grid
/// spacing so every output sample sees a fresh state. The division by `h_cc`
/// keeps the fast mood increments O(kappa) as well.
///
/// Burn-in runs in two stages: the bulk with the population-scale step
/// (`kappa^2 * tau`, no `h_cc` division — the mood does not feed back into
/// `n_f`, so its discretization during the bulk is irrelevant) and a final
/// stretch of several hundred mood relaxation times at full resolution, so
/// both components start sampling from their stationary regime. Output
/// times restart at 0 after burn-in.
///
/// Deterministic: identical `(params, initial, total_days, grid_step, seed,
/// cfg)` produce a bit-identical [`Trajectory`].
pub fn integrate_agent_sde(
    params: &ModelParams,
    initial: AgentState,
    total_days: f64,
    grid_step: f64,
    seed: u64,
    cfg: &AgentSdeConfig,
) -> Result<Trajectory> {
    params.validate()?;
    validate_run_args(total_days, grid_step, cfg.kappa)?;
    if cfg.burn_in_scaled < 0.0 || !cfg.burn_in_scaled.is_finite() {
        return Err(Error::invalid("burn_in_scaled", "must be >= 0 and finite"));
    }
    let b = cfg.bounds;
    if !(b.n_min > 0.0 && b.n_min < 0.5 && b.xi_min > 0.0 && b.xi_min < 1.0) {
        return Err(Error::invalid("bounds", "need 0 < n_min < 0.5 and 0 < xi_min < 1"));
    }
    let (n_lo, n_hi) = (b.n_min, 1.0 - b.n_min);
    let (xi_lo, xi_hi) = (-1.0 + b.xi_min, 1.0 - b.xi_min);
    if !(initial.n_f >= n_lo && initial.n_f <= n_hi) {
        return Err(Error::Domain(format!(
            "initial n_f {} outside [{n_lo}, {n_hi}]",
            initial.n_f
        )));
    }
    if !(initial.xi >= xi_lo && initial.xi <= xi_hi) {
        return Err(Error::Domain(format!(
            "initial xi {} outside [{xi_lo}, {xi_hi}]",
            initial.xi
        )));
    }

    let h_day = params.h_per_day();
    let grid_s = grid_step * h_day;
    let n_samples = (total_days / grid_step).round().max(1.0) as usize;

    let kappa2 = cfg.kappa * cfg.kappa;
    let coarse_scale = kappa2;
    let fine_scale = kappa2 / params.h_cc.max(1.0);

    let mut stepper = AgentStepper {
        eps_cf: params.eps_cf,
        eps_fc: params.eps_fc,
        eps_cc: params.eps_cc,
        h_cc: params.h_cc,
        a_tau: params.a_tau,
        alpha: params.alpha,
        n_lo,
        n_hi,
        xi_lo,
        xi_hi,
        noise: cfg.noise_scale,
        nf: initial.n_f,
        xi: initial.xi,
        rng: ChaCha8Rng::seed_from_u64(seed),
        steps: 0,
    };

    if cfg.burn_in_scaled > 0.0 {
        // Mood settles at rate >= 2 h_cc eps_cc; give the fine stage a few
        // hundred of those relaxation times.
        let fine_span = cfg
            .burn_in_scaled
            .min(200.0 / (params.h_cc * params.eps_cc).max(1.0));
        let coarse_span = cfg.burn_in_scaled - fine_span;
        let mut t = 0.0;
        while t < coarse_span {
            t += stepper.step(coarse_scale, f64::INFINITY)?;
        }
        let mut t = 0.0;
        while t < fine_span {
            t += stepper.step(fine_scale, f64::INFINITY)?;
        }
    }

    let mut n_f = Vec::with_capacity(n_samples);
    let mut xi = Vec::with_capacity(n_samples);
    let mut y = Vec::with_capacity(n_samples);

    // Grid sampling: advance until the internal time reaches each grid time
    // (minus a relative tolerance, so a step landing on the grid within
    // rounding is accepted as "at" the grid time) and record the state.
    let slack = grid_s * 1e-9;
    let mut t = 0.0;
    for k in 0..n_samples {
        let target = k as f64 * grid_s - slack;
        while t < target {
            t += stepper.step(fine_scale, grid_s)?;
        }
        n_f.push(stepper.nf);
        xi.push(stepper.xi);
        y.push((1.0 - stepper.nf) / stepper.nf);
    }

    Ok(Trajectory { grid_step, n_f, xi, y, seed })
}

/// Drift and diffusion of the one-dimensional ratio diffusion:
///
/// ```text
/// drift     = (eps1 y^(-alpha) + (2 - eps2) y^(1-alpha)) (y + 1)^(2 alpha + 1)
/// diffusion = sqrt(2 y^(1-alpha)) (y + 1)^(alpha + 1)
/// ```
pub fn y_drift_diffusion(y: f64, p: &YProcessParams) -> Result<(f64, f64)> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("y must be > 0, got {y}")));
    }
    Ok(y_coeffs(y, p.eps1, p.eps2, p.alpha))
}

#[inline]
fn y_coeffs(y: f64, eps1: f64, eps2: f64, alpha: f64) -> (f64, f64) {
    let yp = y + 1.0;
    if alpha == 2.0 {
        let inv_y = 1.0 / y;
        let yp2 = yp * yp;
        let yp4 = yp2 * yp2;
        let drift = (eps1 * inv_y + (2.0 - eps2)) * inv_y * yp4 * yp;
        let diff = (2.0 * inv_y).sqrt() * yp2 * yp;
        (drift, diff)
    } else {
        let ym_a = y.powf(-alpha);
        let drift = (eps1 + (2.0 - eps2) * y) * ym_a * yp.powf(2.0 * alpha + 1.0);
        let diff = (2.0 * y * ym_a).sqrt() * yp.powf(alpha + 1.0);
        (drift, diff)
    }
}

/// Controls for the ratio-diffusion integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YSdeConfig {
    pub kappa: f64,
    pub burn_in_scaled: f64,
    pub noise_scale: f64,
}

impl Default for YSdeConfig {
    fn default() -> Self {
        YSdeConfig { kappa: 0.1, burn_in_scaled: 0.0, noise_scale: 1.0 }
    }
}

/// Integrate the standalone ratio diffusion with an adaptive step.
///
/// `h` is the herding rate in per-second units (the same quantity as
/// [`ModelParams::h`]); it converts day arguments to scaled time. The step
/// is chosen so that both `|drift| * dt <= kappa * y` and
/// `diffusion * sqrt(dt) <= kappa * y` (relative-change control, the
/// coefficients grow polynomially in `y`), capped at the grid spacing.
/// Boundaries at `y_min`, `y_max` reflect. Grid sampling and burn-in work as
/// in [`integrate_agent_sde`].
pub fn integrate_y_sde(
    p: &YProcessParams,
    h: f64,
    y0: f64,
    total_days: f64,
    grid_step: f64,
    seed: u64,
    cfg: &YSdeConfig,
) -> Result<Trajectory> {
    p.validate()?;
    validate_run_args(total_days, grid_step, cfg.kappa)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", format!("must be > 0, got {h}")));
    }
    if cfg.burn_in_scaled < 0.0 || !cfg.burn_in_scaled.is_finite() {
        return Err(Error::invalid("burn_in_scaled", "must be >= 0 and finite"));
    }
    if !(y0 >= p.y_min && y0 <= p.y_max) {
        return Err(Error::Domain(format!(
            "initial y {y0} outside [{}, {}]",
            p.y_min, p.y_max
        )));
    }

    let h_day = h * SECONDS_PER_DAY;
    let grid_s = grid_step * h_day;
    let n_samples = (total_days / grid_step).round().max(1.0) as usize;
    let kappa = cfg.kappa;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut yv = y0;
    let mut steps: u64 = 0;

    let step = |yv: &mut f64, dt_cap: f64, rng: &mut ChaCha8Rng, steps: &mut u64| -> Result<f64> {
        let (a, b) = y_coeffs(*yv, p.eps1, p.eps2, p.alpha);
        let rel = kappa * *yv;
        let dt_drift = if a == 0.0 { f64::INFINITY } else { rel / a.abs() };
        let dt_diff = if b == 0.0 {
            f64::INFINITY
        } else {
            let r = rel / b;
            r * r
        };
        let dt = dt_drift.min(dt_diff).min(dt_cap);
        let z: f64 = rng.sample(StandardNormal);
        *yv = reflect(
            *yv + a * dt + cfg.noise_scale * b * dt.sqrt() * z,
            p.y_min,
            p.y_max,
        );
        *steps += 1;
        if !yv.is_finite() {
            return Err(Error::NonFinite { step: *steps });
        }
        Ok(dt)
    };

    if cfg.burn_in_scaled > 0.0 {
        let mut t = 0.0;
        while t < cfg.burn_in_scaled {
            t += step(&mut yv, f64::INFINITY, &mut rng, &mut steps)?;
        }
    }

    let mut n_f = Vec::with_capacity(n_samples);
    let mut xi = Vec::with_capacity(n_samples);
    let mut y = Vec::with_capacity(n_samples);
    let slack = grid_s * 1e-9;
    let mut t = 0.0;
    for k in 0..n_samples {
        let target = k as f64 * grid_s - slack;
        while t < target {
            t += step(&mut yv, grid_s, &mut rng, &mut steps)?;
        }
        y.push(yv);
        n_f.push(1.0 / (1.0 + yv));
        xi.push(0.0);
    }

    Ok(Trajectory { grid_step, n_f, xi, y, seed })
}

fn validate_run_args(total_days: f64, grid_step: f64, kappa: f64) -> Result<()> {
    if !(total_days > 0.0 && total_days.is_finite()) {
        return Err(Error::invalid("total_days", format!("must be > 0, got {total_days}")));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::invalid("grid_step", format!("must be > 0, got {grid_step}")));
    }
    if !(kappa > 0.0 && kappa <= 0.5) {
        return Err(Error::invalid("kappa", format!("must lie in (0, 0.5], got {kappa}")));
    }
    Ok(())
}
