//! Monte Carlo simulator of a herding-agent market model and the
//! first-passage statistics of the volatility series it generates.
//!
//! The model couples two diffusions driven by global herding between trader
//! groups: the fraction of fundamentalist traders `n_f` (slow) and the mood
//! of speculative traders `xi` (fast). Their ratio `y = (1 - n_f) / n_f`
//! sets the endogenous volatility; returns on a fixed time grid are composed
//! from `y`, `xi`, a deterministic intraday pattern and an exogenous
//! Gaussian factor. The analysis side extracts burst (time above threshold)
//! and inter-burst (time below threshold) durations, log-binned duration
//! PDFs, power spectral densities and power-law exponent fits.
//!
//! Pipeline, end to end:
//!
//! ```text
//! integrate_agent_sde / integrate_y_sde   -> Trajectory (n_f, xi, y on a grid)
//! generate_returns                        -> ReturnSeries (composition variants)
//! rolling_std_filter                      -> ReturnSeries (volatility proxy)
//! extract_episodes                        -> EpisodeSet (burst / inter-burst durations)
//! log_binned_pdf, psd, fit_powerlaw       -> LogBinnedPdf, Spectrum, PowerLawFit
//! ```
//!
//! Every stage is a pure function of its inputs; randomness enters only
//! through explicit 64-bit seeds, so identical inputs give bit-identical
//! outputs.

pub mod episodes;
pub mod error;
pub mod params;
pub mod rng;
pub mod sde;
pub mod series;
pub mod stats;
pub mod trajectory;

pub use episodes::{extract_episodes, series_std, EpisodeSet, ThresholdSpec};
pub use error::{Error, Result};
pub use params::{ModelParams, YProcessParams};
pub use sde::{
    agent_drift_diffusion, integrate_agent_sde, integrate_y_sde, tau, y_drift_diffusion,
    AgentBounds, AgentSdeConfig, AgentState, YSdeConfig,
};
pub use series::{
    generate_returns, rolling_std_filter, seasonality, volatility, CompositionSpec, ReturnSeries,
};
pub use stats::{
    fit_powerlaw_pdf, fit_powerlaw_spectrum, hurst_from_beta, log_binned_pdf, psd, LogBinnedPdf,
    PowerLawFit, Spectrum,
};
pub use trajectory::Trajectory;
