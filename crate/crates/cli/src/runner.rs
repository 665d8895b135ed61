//! Seed-parallel experiment runner: integrate, compose, filter, extract
//! episodes, estimate PDFs/PSD/fits, and write the output directory with a
//! reproducibility manifest.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use volburst::rng::mix_seed;
use volburst::stats::{write_fits_csv, FitRow};
use volburst::{
    extract_episodes, fit_powerlaw_pdf, fit_powerlaw_spectrum, generate_returns, hurst_from_beta,
    integrate_agent_sde, integrate_y_sde, log_binned_pdf, psd, rolling_std_filter, series_std,
    AgentSdeConfig, AgentState, EpisodeSet, LogBinnedPdf, PowerLawFit, ReturnSeries, Spectrum,
    ThresholdSpec, Trajectory, YProcessParams, YSdeConfig,
};

use crate::config::{ExperimentConfig, TrajectorySource};

/// Everything derived for one threshold after merging all realizations.
#[derive(Debug, Clone)]
pub struct ThresholdResult {
    pub q: f64,
    pub episodes: EpisodeSet,
    pub pdf_bursts: Option<LogBinnedPdf>,
    pub pdf_inter: Option<LogBinnedPdf>,
    pub fit_bursts: Option<PowerLawFit>,
    pub fit_inter: Option<PowerLawFit>,
}

/// Cumulative wall-clock seconds per pipeline stage (summed across
/// realizations for the parallel stages) plus the total for the run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageSeconds {
    pub integrate: f64,
    pub compose: f64,
    pub episodes: f64,
    pub spectra: f64,
    pub estimate: f64,
    pub write: f64,
    pub total_wall: f64,
}

/// Run record: a manifest plus the binary reproduces every CSV bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    /// The fully resolved configuration the run used.
    pub config: ExperimentConfig,
    pub realization_seeds: Vec<u64>,
    pub stage_seconds: StageSeconds,
    /// SHA-256 of every output file, keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

/// In-memory results of an experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub thresholds: Vec<ThresholdResult>,
    pub spectrum: Option<Spectrum>,
    pub fit_beta1: Option<PowerLawFit>,
    pub fit_beta2: Option<PowerLawFit>,
    pub manifest: RunManifest,
}

impl ExperimentOutcome {
    pub fn threshold(&self, q: f64) -> Option<&ThresholdResult> {
        self.thresholds.iter().find(|t| t.q == q)
    }

    /// Hurst exponent implied by the low-frequency spectral exponent.
    pub fn hurst(&self) -> Option<f64> {
        self.fit_beta1.map(|f| hurst_from_beta(f.exponent))
    }
}

struct RealizationOutput {
    episodes: Vec<EpisodeSet>,
    spectrum: Option<Spectrum>,
    dumped: Vec<(String, String)>,
    integrate_s: f64,
    compose_s: f64,
    episodes_s: f64,
    spectra_s: f64,
}

fn integrate_realization(config: &ExperimentConfig, seed: u64) -> Result<Trajectory> {
    let grid = config.grid_step();
    match config.source {
        TrajectorySource::Agent => {
            let cfg = AgentSdeConfig {
                kappa: config.kappa,
                burn_in_scaled: config.burn_in_scaled,
                ..Default::default()
            };
            integrate_agent_sde(
                &config.params,
                AgentState::equilibrium(&config.params),
                config.total_days,
                grid,
                seed,
                &cfg,
            )
            .context("agent integration failed")
        }
        TrajectorySource::Ratio => {
            let yp = config
                .y_params
                .clone()
                .unwrap_or_else(|| YProcessParams::from_model(&config.params));
            let cfg = YSdeConfig {
                kappa: config.kappa,
                burn_in_scaled: config.burn_in_scaled,
                noise_scale: 1.0,
            };
            integrate_y_sde(
                &yp,
                config.params.h,
                yp.fixed_point(),
                config.total_days,
                grid,
                seed,
                &cfg,
            )
            .context("ratio integration failed")
        }
    }
}

fn run_realization(
    config: &ExperimentConfig,
    index: usize,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<RealizationOutput> {
    let t0 = Instant::now();
    let traj = integrate_realization(config, seed)?;
    let integrate_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let series = generate_returns(&traj, &config.params, config.composition, seed)?;
    drop(traj);

    let mut dumped = Vec::new();
    if config.dump_series {
        if let Some(dir) = out_dir {
            let name = format!("series_r{index}.csv");
            let mut buf = Vec::new();
            series.write_csv(&mut buf)?;
            let sum = write_hashed(dir, &name, &buf)?;
            dumped.push((name, sum));
        }
    }

    // Spectra are estimated on the magnitude series before filtering; the
    // filter's window would notch the spectrum inside the high-frequency
    // fit band.
    let t1 = Instant::now();
    let spectrum = if series.len() >= config.psd_segment_length {
        let spec = if config.composition.use_omega {
            psd(&series.magnitude(), config.psd_segment_length)?
        } else {
            psd(&series, config.psd_segment_length)?
        };
        Some(spec)
    } else {
        None
    };
    let spectra_s = t1.elapsed().as_secs_f64();

    let analyzed: ReturnSeries = if config.composition.use_omega {
        rolling_std_filter(&series, config.filter_window)?
    } else {
        series
    };
    let compose_s = t0.elapsed().as_secs_f64() - spectra_s;

    let t0 = Instant::now();
    let std = series_std(&analyzed)?;
    let mut episodes = Vec::with_capacity(config.thresholds.len());
    for &q in &config.thresholds {
        let spec = ThresholdSpec::resolve(q, std)?;
        episodes.push(extract_episodes(&analyzed, &spec));
    }
    let episodes_s = t0.elapsed().as_secs_f64();

    Ok(RealizationOutput {
        episodes,
        spectrum,
        dumped,
        integrate_s,
        compose_s,
        episodes_s,
        spectra_s,
    })
}

/// Run the whole experiment described by `config`.
///
/// Realization `r` uses the seed `mix_seed(base_seed, r)`, so adding
/// realizations never changes existing ones. Realizations run in parallel
/// up to the configured worker count; merged results are identical
/// regardless of scheduling because merging follows realization order and
/// duration samples are sorted before binning.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let wall = Instant::now();
    let mut config = config.clone();
    config.resolve();
    config.validate()?;

    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }

    let seeds: Vec<u64> = (0..config.n_realizations)
        .map(|r| mix_seed(config.base_seed, r as u64))
        .collect();

    let workers = config.workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get().min(8))
            .unwrap_or(1)
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;

    let cfg = &config;
    let out_dir = config.out_dir.as_deref();
    let results: Vec<RealizationOutput> = pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(r, &seed)| run_realization(cfg, r, seed, out_dir))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut stage = StageSeconds::default();
    let mut merged: Vec<EpisodeSet> = config.thresholds.iter().map(|&q| EpisodeSet::empty(q)).collect();
    let mut spectrum: Option<Spectrum> = None;
    let mut checksums: BTreeMap<String, String> = BTreeMap::new();
    for out in &results {
        stage.integrate += out.integrate_s;
        stage.compose += out.compose_s;
        stage.episodes += out.episodes_s;
        stage.spectra += out.spectra_s;
        for (i, set) in out.episodes.iter().enumerate() {
            merged[i].merge(set);
        }
        if let Some(spec) = &out.spectrum {
            match spectrum.as_mut() {
                Some(p) => p.merge_weighted(spec)?,
                None => spectrum = Some(spec.clone()),
            }
        }
        for (name, sum) in &out.dumped {
            checksums.insert(name.clone(), sum.clone());
        }
    }

    let t0 = Instant::now();
    let pdf_window = config.pdf_fit_window();
    let thresholds: Vec<ThresholdResult> = merged
        .into_iter()
        .map(|mut set| {
            set.bursts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            set.inter_bursts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let pdf_bursts = log_binned_pdf(&set.bursts, config.bins_per_decade).ok();
            let pdf_inter = log_binned_pdf(&set.inter_bursts, config.bins_per_decade).ok();
            let fit_bursts = pdf_bursts
                .as_ref()
                .and_then(|p| fit_powerlaw_pdf(p, pdf_window).ok());
            let fit_inter = pdf_inter
                .as_ref()
                .and_then(|p| fit_powerlaw_pdf(p, pdf_window).ok());
            ThresholdResult {
                q: set.q,
                episodes: set,
                pdf_bursts,
                pdf_inter,
                fit_bursts,
                fit_inter,
            }
        })
        .collect();

    let fit_beta1 = spectrum
        .as_ref()
        .and_then(|s| fit_powerlaw_spectrum(s, config.psd_fit_low.as_tuple()).ok());
    let fit_beta2 = spectrum
        .as_ref()
        .and_then(|s| fit_powerlaw_spectrum(s, config.psd_fit_high.as_tuple()).ok());
    stage.estimate = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    if let Some(dir) = &config.out_dir {
        write_outputs(
            dir,
            &config,
            &thresholds,
            spectrum.as_ref(),
            fit_beta1.as_ref(),
            fit_beta2.as_ref(),
            &mut checksums,
        )?;
    }
    stage.write = t0.elapsed().as_secs_f64();
    stage.total_wall = wall.elapsed().as_secs_f64();

    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        realization_seeds: seeds,
        stage_seconds: stage,
        checksums,
    };
    if let Some(dir) = &config.out_dir {
        let text = serde_json::to_string_pretty(&manifest).context("serializing manifest")?;
        std::fs::write(dir.join("manifest.json"), text)
            .with_context(|| format!("writing manifest into {}", dir.display()))?;
    }

    Ok(ExperimentOutcome {
        config,
        thresholds,
        spectrum,
        fit_beta1,
        fit_beta2,
        manifest,
    })
}

fn format_q(q: f64) -> String {
    format!("{q}")
}

fn write_hashed(dir: &Path, name: &str, bytes: &[u8]) -> Result<String> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}

fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    thresholds: &[ThresholdResult],
    spectrum: Option<&Spectrum>,
    fit_beta1: Option<&PowerLawFit>,
    fit_beta2: Option<&PowerLawFit>,
    checksums: &mut BTreeMap<String, String>,
) -> Result<()> {
    let mut fit_rows: Vec<FitRow> = Vec::new();
    for t in thresholds {
        let q = format_q(t.q);
        if let Some(pdf) = &t.pdf_bursts {
            let name = format!("pdf_T_q{q}.csv");
            let mut buf = Vec::new();
            pdf.write_csv(&mut buf)?;
            checksums.insert(name.clone(), write_hashed(dir, &name, &buf)?);
        }
        if let Some(pdf) = &t.pdf_inter {
            let name = format!("pdf_theta_q{q}.csv");
            let mut buf = Vec::new();
            pdf.write_csv(&mut buf)?;
            checksums.insert(name.clone(), write_hashed(dir, &name, &buf)?);
        }
        if let Some(fit) = t.fit_bursts {
            fit_rows.push(FitRow { target: format!("T_q{q}"), fit });
        }
        if let Some(fit) = t.fit_inter {
            fit_rows.push(FitRow { target: format!("theta_q{q}"), fit });
        }
    }
    if let Some(spec) = spectrum {
        let mut buf = Vec::new();
        spec.write_csv(&mut buf)?;
        checksums.insert("psd.csv".into(), write_hashed(dir, "psd.csv", &buf)?);
    }
    if let Some(fit) = fit_beta1 {
        fit_rows.push(FitRow { target: "psd_beta1".into(), fit: *fit });
    }
    if let Some(fit) = fit_beta2 {
        fit_rows.push(FitRow { target: "psd_beta2".into(), fit: *fit });
    }
    let mut buf = Vec::new();
    write_fits_csv(&mut buf, &fit_rows)?;
    checksums.insert("fits.csv".into(), write_hashed(dir, "fits.csv", &buf)?);

    if config.emit_plots {
        let script = plot_script(config, thresholds, spectrum.is_some());
        checksums.insert("plots.gp".into(), write_hashed(dir, "plots.gp", script.as_bytes())?);
    }
    Ok(())
}

/// Gnuplot script reproducing the log-log duration-PDF and PSD panels.
fn plot_script(config: &ExperimentConfig, thresholds: &[ThresholdResult], have_psd: bool) -> String {
    let mut s = String::new();
    s.push_str("set terminal pngcairo size 1200,800\n");
    s.push_str("set logscale xy\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set key left bottom\n");
    for (kind, label, axis) in [
        ("T", "burst duration", "T (days)"),
        ("theta", "inter-burst duration", "theta (days)"),
    ] {
        s.push_str(&format!("set output 'pdf_{kind}.png'\n"));
        s.push_str(&format!("set xlabel '{axis}'\nset ylabel 'PDF'\n"));
        s.push_str(&format!("set title '{label} PDFs'\n"));
        let mut parts = Vec::new();
        for t in thresholds {
            let q = format_q(t.q);
            let present = match kind {
                "T" => t.pdf_bursts.is_some(),
                _ => t.pdf_inter.is_some(),
            };
            if present {
                parts.push(format!(
                    "'pdf_{kind}_q{q}.csv' skip 1 using 1:2 with lines title 'q={q}'"
                ));
            }
        }
        parts.push("[x=1e-2:1e1] 0.05*x**(-1.5) with lines dashtype 2 title 't^(-3/2)'".into());
        s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    }
    if have_psd {
        s.push_str("set output 'psd.png'\n");
        s.push_str("set xlabel 'f (1/day)'\nset ylabel 'S(f)'\nset title 'power spectral density'\n");
        s.push_str(&format!(
            "plot 'psd.csv' skip 1 using 1:2 with lines title 'delta = {}'\n",
            config.params.delta
        ));
    }
    s
}
