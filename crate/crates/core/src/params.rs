//! Model parameter sets and their validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds per day, used to convert the herding rate `h` to per-day units.
pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Parameters of the herding market model.
///
/// The idiosyncratic transition rates are dimensionless (normalized by the
/// herding rate `h`, which carries the physical time scale). All model time
/// series are expressed in days; internally the diffusions evolve in scaled
/// time `t_s = h_day * t` with `h_day = h * 86400`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Idiosyncratic chartist -> fundamentalist rate (dimensionless).
    pub eps_cf: f64,
    /// Idiosyncratic fundamentalist -> chartist rate (dimensionless).
    pub eps_fc: f64,
    /// Idiosyncratic optimist <-> pessimist rate (dimensionless).
    pub eps_cc: f64,
    /// Speed ratio of the mood dynamics to the population dynamics.
    pub h_cc: f64,
    /// Agent-impact amplitude in the volatility composition.
    pub a0: f64,
    /// Trading-activity amplitude in the inter-trade time.
    pub a_tau: f64,
    /// Activity exponent.
    pub alpha: f64,
    /// Herding rate, per second. Sets the slow time scale of the model.
    pub h: f64,
    /// Width of the intraday volatility pattern, as a fraction of a day.
    pub w: f64,
    /// Return time step delta, in days.
    pub delta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            eps_cf: 1.1,
            eps_fc: 3.0,
            eps_cc: 3.0,
            h_cc: 1000.0,
            a0: 1.0,
            a_tau: 0.7,
            alpha: 2.0,
            h: 0.3e-8,
            w: 0.25,
            delta: 1.0 / 390.0,
        }
    }
}

impl ModelParams {
    /// Herding rate converted to per-day units.
    pub fn h_per_day(&self) -> f64 {
        self.h * SECONDS_PER_DAY
    }

    /// Root of the population drift: the fraction of fundamentalists at
    /// which the deterministic part of the slow dynamics vanishes.
    pub fn n_f_fixed_point(&self) -> f64 {
        self.eps_cf / (self.eps_cf + self.eps_fc)
    }

    pub fn validate(&self) -> Result<()> {
        fn pos(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be > 0, got {v}")))
            }
        }
        fn nonneg(name: &'static str, v: f64) -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be >= 0, got {v}")))
            }
        }
        pos("eps_cf", self.eps_cf)?;
        pos("eps_fc", self.eps_fc)?;
        pos("eps_cc", self.eps_cc)?;
        pos("h_cc", self.h_cc)?;
        pos("h", self.h)?;
        pos("delta", self.delta)?;
        pos("w", self.w)?;
        nonneg("alpha", self.alpha)?;
        nonneg("a0", self.a0)?;
        nonneg("a_tau", self.a_tau)?;
        Ok(())
    }
}

/// Parameters of the standalone nonlinear diffusion for the ratio
/// `y = (1 - n_f) / n_f`.
///
/// The drift has a finite fixed point `y* = eps1 / (eps2 - 2)`, which is why
/// `eps2 > 2` is required. `y_min` and `y_max` are reflecting bounds for the
/// numerical scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct YProcessParams {
    pub eps1: f64,
    pub eps2: f64,
    pub alpha: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for YProcessParams {
    fn default() -> Self {
        YProcessParams {
            eps1: 1.1,
            eps2: 3.0,
            alpha: 2.0,
            y_min: 1e-3,
            y_max: 1e3,
        }
    }
}

impl YProcessParams {
    /// Bind the diffusion parameters to a herding parameter set:
    /// `eps1 = eps_cf`, `eps2 = eps_fc`, same activity exponent.
    pub fn from_model(params: &ModelParams) -> Self {
        YProcessParams {
            eps1: params.eps_cf,
            eps2: params.eps_fc,
            alpha: params.alpha,
            ..YProcessParams::default()
        }
    }

    /// Fixed point of the deterministic drift, `eps1 / (eps2 - 2)`.
    pub fn fixed_point(&self) -> f64 {
        self.eps1 / (self.eps2 - 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps1 > 0.0 && self.eps1.is_finite()) {
            return Err(Error::invalid("eps1", format!("must be > 0, got {}", self.eps1)));
        }
        if !(self.eps2 > 2.0 && self.eps2.is_finite()) {
            return Err(Error::invalid(
                "eps2",
                format!("must be > 2 for a finite drift fixed point, got {}", self.eps2),
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if !(self.y_min > 0.0 && self.y_max > self.y_min && self.y_max.is_finite()) {
            return Err(Error::invalid(
                "y_min/y_max",
                format!("need 0 < y_min < y_max, got [{}, {}]", self.y_min, self.y_max),
            ));
        }
        Ok(())
    }
}
