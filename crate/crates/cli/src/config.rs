//! Experiment configuration and the named presets.

use std::path::PathBuf;

use anyhow::{bail, ensure, Result};
use serde::{Deserialize, Serialize};
use volburst::{CompositionSpec, ModelParams, YProcessParams};

/// Which diffusion produces the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectorySource {
    /// Coupled population/mood dynamics (the default).
    Agent,
    /// Standalone one-dimensional ratio diffusion.
    Ratio,
}

/// A closed fit interval on durations (days) or frequencies (day^-1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl FitWindow {
    pub fn as_tuple(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// Full description of one experiment: model, composition, run geometry,
/// thresholds and estimator settings.
///
/// Optional fields (`grid_step`, `pdf_fit`) resolve against the model
/// parameters via [`ExperimentConfig::resolve`]; a resolved configuration
/// round-trips bit-identically through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub composition: CompositionSpec,
    pub source: TrajectorySource,
    /// Parameters of the ratio diffusion when `source = ratio`;
    /// `None` binds them to `params`.
    pub y_params: Option<YProcessParams>,
    /// Simulated span per realization, days.
    pub total_days: f64,
    /// Trajectory grid step, days; `None` resolves to `params.delta`.
    pub grid_step: Option<f64>,
    pub n_realizations: usize,
    pub base_seed: u64,
    /// Thresholds in units of the analyzed-series standard deviation.
    pub thresholds: Vec<f64>,
    /// Rolling standard-deviation filter window, in samples.
    pub filter_window: usize,
    /// Scaled time discarded before sampling, per realization.
    pub burn_in_scaled: f64,
    /// Integrator step-control parameter.
    pub kappa: f64,
    pub bins_per_decade: usize,
    /// Duration fit window for the power-law exponents; `None` resolves to
    /// `[10 * delta, 10]` days.
    pub pdf_fit: Option<FitWindow>,
    /// Low-frequency spectral fit window (below the daily seasonality line).
    pub psd_fit_low: FitWindow,
    /// High-frequency spectral fit window (above the crossover).
    pub psd_fit_high: FitWindow,
    pub psd_segment_length: usize,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Dump each realization's composed series (large files).
    pub dump_series: bool,
    /// Emit a gnuplot script alongside the CSV outputs.
    pub emit_plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: ModelParams::default(),
            composition: CompositionSpec::full(),
            source: TrajectorySource::Agent,
            y_params: None,
            total_days: 7300.0,
            grid_step: None,
            n_realizations: 50,
            base_seed: 42,
            thresholds: vec![0.3, 0.5, 0.8, 1.3, 2.0, 3.0],
            filter_window: 10,
            burn_in_scaled: 1000.0,
            kappa: 0.1,
            bins_per_decade: 10,
            pdf_fit: None,
            psd_fit_low: FitWindow { lo: 1e-2, hi: 5e-1 },
            psd_fit_high: FitWindow { lo: 1e0, hi: 1e2 },
            psd_segment_length: 1 << 16,
            out_dir: None,
            workers: None,
            dump_series: false,
            emit_plots: false,
        }
    }
}

impl ExperimentConfig {
    /// Fill the model-dependent defaults, making the configuration fully
    /// explicit. Idempotent.
    pub fn resolve(&mut self) {
        if self.grid_step.is_none() {
            self.grid_step = Some(self.params.delta);
        }
        if self.pdf_fit.is_none() {
            self.pdf_fit = Some(FitWindow { lo: 10.0 * self.params.delta, hi: 10.0 });
        }
        if self.source == TrajectorySource::Ratio && self.y_params.is_none() {
            self.y_params = Some(YProcessParams::from_model(&self.params));
        }
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step.unwrap_or(self.params.delta)
    }

    pub fn pdf_fit_window(&self) -> (f64, f64) {
        self.pdf_fit
            .map(|w| w.as_tuple())
            .unwrap_or((10.0 * self.params.delta, 10.0))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Some(y) = &self.y_params {
            y.validate()?;
        }
        ensure!(self.n_realizations >= 1, "n_realizations must be >= 1");
        ensure!(!self.thresholds.is_empty(), "thresholds must be nonempty");
        ensure!(
            self.thresholds.iter().all(|&q| q > 0.0),
            "thresholds must be positive"
        );
        ensure!(
            self.total_days >= 100.0 * self.params.delta,
            "total_days {} is shorter than 100 return steps",
            self.total_days
        );
        let grid = self.grid_step();
        ensure!(grid > 0.0, "grid_step must be positive");
        let ratio = self.params.delta / grid;
        ensure!(
            (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) && ratio >= 1.0,
            "grid_step must equal delta or an integer divisor of it"
        );
        ensure!(self.filter_window >= 2, "filter_window must be >= 2");
        ensure!(self.burn_in_scaled >= 0.0, "burn_in_scaled must be >= 0");
        ensure!(
            self.kappa > 0.0 && self.kappa <= 0.5,
            "kappa must lie in (0, 0.5]"
        );
        ensure!(self.bins_per_decade >= 2, "bins_per_decade must be >= 2");
        ensure!(
            self.psd_segment_length >= 4 && self.psd_segment_length.is_power_of_two(),
            "psd_segment_length must be a power of two >= 4"
        );
        let (lo, hi) = self.pdf_fit_window();
        ensure!(lo > 0.0 && hi > lo, "pdf_fit window must satisfy 0 < lo < hi");
        ensure!(
            self.psd_fit_low.lo > 0.0 && self.psd_fit_low.hi > self.psd_fit_low.lo,
            "psd_fit_low window must satisfy 0 < lo < hi"
        );
        ensure!(
            self.psd_fit_high.lo > 0.0 && self.psd_fit_high.hi > self.psd_fit_high.lo,
            "psd_fit_high window must satisfy 0 < lo < hi"
        );
        Ok(())
    }
}

/// The named experiment presets and the composition each one selects.
///
/// `fig1`/`fig2` (and the alias `full`) run the complete model; `fig3`/`fig4`
/// run the endogenous magnitude series without the exogenous factor;
/// `fig5`/`fig6` switch the exogenous factor on while stripping the other
/// components one at a time. Curve names follow the usual layout:
/// red = slowest component only, green = with the mood factor,
/// blue = with the intraday pattern as well.
const PRESETS: &[(&str, &str)] = &[
    ("fig1:model", "full model, filtered volatility proxy"),
    ("fig2:model", "same run as fig1:model (inter-burst view)"),
    ("fig3:red", "r = y, raw magnitude series"),
    ("fig3:green", "r = |y xi|, raw magnitude series"),
    ("fig3:blue", "r = b0 (1 + a0 |y xi|), raw magnitude series"),
    ("fig4:red", "same as fig3:red"),
    ("fig4:green", "same as fig3:green"),
    ("fig4:blue", "same as fig3:blue"),
    ("fig5:red", "r = (1 + a0 y) omega, filtered"),
    ("fig5:green", "r = (1 + a0 |y xi|) omega, filtered"),
    ("fig5:blue", "full model, filtered (same as fig1:model)"),
    ("fig6:red", "same as fig5:red"),
    ("fig6:green", "same as fig5:green"),
    ("fig6:blue", "same as fig5:blue"),
    ("y-only", "alias for fig3:red"),
    ("full", "alias for fig1:model"),
];

/// Names accepted by [`preset`], with one-line descriptions.
pub fn preset_names() -> Vec<(&'static str, &'static str)> {
    PRESETS.to_vec()
}

/// Build the configuration for a named preset.
///
/// Unknown names produce an error listing every known preset.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let canonical = match name.trim().to_ascii_lowercase().as_str() {
        "fig1" | "fig1:model" | "fig1:black" | "fig2" | "fig2:model" | "fig2:black" | "full"
        | "fig5:blue" | "fig6:blue" => "full",
        "fig3:red" | "fig4:red" | "y-only" => "y-only",
        "fig3:green" | "fig4:green" => "y-xi",
        "fig3:blue" | "fig4:blue" => "seasonal",
        "fig5:red" | "fig6:red" => "omega-y",
        "fig5:green" | "fig6:green" => "omega-y-xi",
        other => {
            let known: Vec<String> = PRESETS
                .iter()
                .map(|(n, d)| format!("  {n}  -  {d}"))
                .collect();
            bail!("unknown preset '{other}'; known presets:\n{}", known.join("\n"));
        }
    };

    let mut cfg = ExperimentConfig::default();
    match canonical {
        "full" => {
            cfg.composition = CompositionSpec::full();
        }
        "y-only" => {
            cfg.composition = CompositionSpec::y_only();
            cfg.total_days = 10_000.0;
            cfg.n_realizations = 20;
        }
        "y-xi" => {
            cfg.composition = CompositionSpec::y_xi();
            cfg.total_days = 10_000.0;
            cfg.n_realizations = 20;
        }
        "seasonal" => {
            cfg.composition = CompositionSpec::seasonal_y_xi();
            cfg.total_days = 10_000.0;
            cfg.n_realizations = 20;
        }
        "omega-y" => {
            cfg.composition = CompositionSpec::omega_y();
        }
        "omega-y-xi" => {
            cfg.composition = CompositionSpec::omega_y_xi();
        }
        _ => unreachable!(),
    }
    cfg.resolve();
    Ok(cfg)
}
