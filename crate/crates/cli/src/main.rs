//! Command-line driver for the simulator and its statistics pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use volburst::stats::{write_fits_csv_path, FitRow};
use volburst::{
    extract_episodes, fit_powerlaw_pdf, fit_powerlaw_spectrum, generate_returns, hurst_from_beta,
    integrate_agent_sde, integrate_y_sde, log_binned_pdf, psd, rolling_std_filter, series_std,
    AgentSdeConfig, AgentState, CompositionSpec, ModelParams, ReturnSeries, ThresholdSpec,
    Trajectory, YProcessParams, YSdeConfig,
};
use volburst_cli::{preset, preset_names, run_experiment, ExperimentConfig, TrajectorySource};

#[derive(Parser)]
#[command(
    name = "volburst",
    version,
    about = "Herding-model market simulator with burst-duration and spectral statistics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Simulated span in days (per realization for experiments).
    #[arg(long, global = true)]
    days: Option<f64>,

    /// Number of realizations for experiments.
    #[arg(long, global = true)]
    realizations: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for experiments.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Process {
    /// Coupled population/mood dynamics.
    Agent,
    /// Standalone ratio diffusion.
    Ratio,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    T,
    Theta,
}

#[derive(Args)]
struct ComposeFlags {
    /// Include the speculator-mood factor.
    #[arg(long)]
    xi: bool,
    /// Include the intraday pattern.
    #[arg(long)]
    seasonality: bool,
    /// Multiply by the exogenous Gaussian factor.
    #[arg(long)]
    omega: bool,
}

impl ComposeFlags {
    fn spec(&self) -> CompositionSpec {
        CompositionSpec {
            use_xi: self.xi,
            use_seasonality: self.seasonality,
            use_omega: self.omega,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the model dynamics and dump the trajectory as CSV.
    Simulate {
        #[arg(long, value_enum, default_value = "agent")]
        process: Process,
        /// Output grid step in days (defaults to the return step delta).
        #[arg(long)]
        grid_step: Option<f64>,
        /// Step-control parameter.
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        /// Burn-in span in scaled time units.
        #[arg(long, default_value_t = 1000.0)]
        burn_in: f64,
        /// Model parameters as a JSON file (defaults otherwise).
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Compose a return series from a trajectory CSV.
    Compose {
        /// Trajectory CSV produced by `simulate`.
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        flags: ComposeFlags,
        /// Apply the rolling standard-deviation filter to the output.
        #[arg(long)]
        filter: bool,
        /// Filter window in samples.
        #[arg(long, default_value_t = 10)]
        filter_window: usize,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Extract burst/inter-burst episodes from a series CSV.
    Episodes {
        /// Series CSV produced by `compose`.
        #[arg(long)]
        series: PathBuf,
        /// Thresholds in series standard deviations (repeatable).
        #[arg(long = "q", required = true)]
        q: Vec<f64>,
    },
    /// Log-binned duration PDF (and optional power-law fit) from episodes.
    Pdf {
        /// Episodes CSV produced by `episodes`.
        #[arg(long)]
        episodes: PathBuf,
        #[arg(long, value_enum, default_value = "t")]
        kind: Kind,
        /// Threshold to select from the episodes file.
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 10)]
        bins_per_decade: usize,
        /// Fit range low edge, days.
        #[arg(long)]
        fit_lo: Option<f64>,
        /// Fit range high edge, days.
        #[arg(long)]
        fit_hi: Option<f64>,
    },
    /// Power spectral density of a series CSV.
    Psd {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = 65536)]
        segment_length: usize,
        #[arg(long)]
        fit_lo: Option<f64>,
        #[arg(long)]
        fit_hi: Option<f64>,
    },
    /// Run a full experiment from a preset or a configuration file.
    Experiment {
        /// Named preset (see `experiment --list`).
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Configuration JSON file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Re-run the configuration embedded in a manifest.
        #[arg(long, conflicts_with_all = ["preset", "config"])]
        from_manifest: Option<PathBuf>,
        /// List the known presets and exit.
        #[arg(long)]
        list: bool,
        /// Dump each realization's composed series (large).
        #[arg(long)]
        dump_series: bool,
        /// Emit a gnuplot script with the output.
        #[arg(long)]
        plots: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_params(path: &Option<PathBuf>) -> Result<ModelParams> {
    match path {
        None => Ok(ModelParams::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading parameters from {}", p.display()))?;
            let params: ModelParams = serde_json::from_str(&text)
                .with_context(|| format!("parsing parameters in {}", p.display()))?;
            params.validate()?;
            Ok(params)
        }
    }
}

fn out_dir(cli_out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = cli_out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate { process, grid_step, kappa, burn_in, params } => {
            let params = load_params(&params)?;
            let days = cli.days.unwrap_or(365.0);
            let seed = cli.seed.unwrap_or(1);
            let grid = grid_step.unwrap_or(params.delta);
            let traj = match process {
                Process::Agent => {
                    let cfg = AgentSdeConfig { kappa, burn_in_scaled: burn_in, ..Default::default() };
                    integrate_agent_sde(
                        &params,
                        AgentState::equilibrium(&params),
                        days,
                        grid,
                        seed,
                        &cfg,
                    )?
                }
                Process::Ratio => {
                    let yp = YProcessParams::from_model(&params);
                    let cfg = YSdeConfig { kappa, burn_in_scaled: burn_in, noise_scale: 1.0 };
                    integrate_y_sde(&yp, params.h, yp.fixed_point(), days, grid, seed, &cfg)?
                }
            };
            let path = out_dir(&cli.out)?.join("trajectory.csv");
            traj.write_csv_path(&path)?;
            println!("wrote {} samples to {}", traj.len(), path.display());
        }

        Cmd::Compose { traj, flags, filter, filter_window, params } => {
            let params = load_params(&params)?;
            let trajectory = Trajectory::read_csv_path(&traj)?;
            let seed = cli.seed.unwrap_or(1);
            let comp = flags.spec();
            let mut series = generate_returns(&trajectory, &params, comp, seed)?;
            if filter {
                series = rolling_std_filter(&series, filter_window)?;
            }
            let path = out_dir(&cli.out)?.join("series.csv");
            series.write_csv_path(&path)?;
            println!("wrote {} samples to {}", series.len(), path.display());
        }

        Cmd::Episodes { series, q } => {
            let s = ReturnSeries::read_csv_path(&series)?;
            let std = series_std(&s)?;
            let mut sets = Vec::new();
            for &qv in &q {
                let spec = ThresholdSpec::resolve(qv, std)?;
                let set = extract_episodes(&s, &spec);
                println!(
                    "q={qv}: {} bursts, {} inter-bursts",
                    set.bursts.len(),
                    set.inter_bursts.len()
                );
                sets.push(set);
            }
            let path = out_dir(&cli.out)?.join("episodes.csv");
            volburst::episodes::write_episodes_csv_path(&path, &sets)?;
            println!("wrote {}", path.display());
        }

        Cmd::Pdf { episodes, kind, q, bins_per_decade, fit_lo, fit_hi } => {
            let rows = volburst::episodes::read_episodes_csv_path(&episodes)?;
            let want = match kind {
                Kind::T => "T",
                Kind::Theta => "theta",
            };
            let durations: Vec<f64> = rows
                .iter()
                .filter(|(k, rq, _)| k == want && *rq == q)
                .map(|&(_, _, d)| d)
                .collect();
            if durations.len() < 10 {
                bail!("only {} {want} durations at q={q} in {}", durations.len(), episodes.display());
            }
            let pdf = log_binned_pdf(&durations, bins_per_decade)?;
            let dir = out_dir(&cli.out)?;
            let path = dir.join("pdf.csv");
            pdf.write_csv_path(&path)?;
            println!("wrote {} ({} durations, {} bins)", path.display(), durations.len(), pdf.n_bins());
            if let (Some(lo), Some(hi)) = (fit_lo, fit_hi) {
                let fit = fit_powerlaw_pdf(&pdf, (lo, hi))?;
                println!(
                    "power-law fit on [{lo}, {hi}]: exponent {:.4} +- {:.4} ({} bins)",
                    fit.exponent, fit.stderr, fit.n_bins_used
                );
                let row = FitRow { target: format!("{want}_q{q}"), fit };
                write_fits_csv_path(&dir.join("fit.csv"), &[row])?;
            }
        }

        Cmd::Psd { series, segment_length, fit_lo, fit_hi } => {
            let s = ReturnSeries::read_csv_path(&series)?;
            let spec = psd(&s, segment_length)?;
            let dir = out_dir(&cli.out)?;
            let path = dir.join("psd.csv");
            spec.write_csv_path(&path)?;
            println!(
                "wrote {} ({} segments of {})",
                path.display(),
                spec.n_segments,
                spec.segment_length
            );
            if let (Some(lo), Some(hi)) = (fit_lo, fit_hi) {
                let fit = fit_powerlaw_spectrum(&spec, (lo, hi))?;
                println!(
                    "spectral fit on [{lo}, {hi}]: beta {:.4} +- {:.4} (H = {:.4})",
                    fit.exponent,
                    fit.stderr,
                    hurst_from_beta(fit.exponent)
                );
                let row = FitRow { target: format!("psd_{lo}_{hi}"), fit };
                write_fits_csv_path(&dir.join("fit.csv"), &[row])?;
            }
        }

        Cmd::Experiment { preset: preset_name, config, from_manifest, list, dump_series, plots } => {
            if list {
                for (name, desc) in preset_names() {
                    println!("{name:12}  {desc}");
                }
                return Ok(());
            }
            let mut cfg: ExperimentConfig = if let Some(name) = &preset_name {
                preset(name)?
            } else if let Some(path) = &config {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            } else if let Some(path) = &from_manifest {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading manifest {}", path.display()))?;
                let manifest: volburst_cli::RunManifest = serde_json::from_str(&text)
                    .with_context(|| format!("parsing manifest {}", path.display()))?;
                manifest.config
            } else {
                bail!("one of --preset, --config or --from-manifest is required (or --list)");
            };

            if let Some(seed) = cli.seed {
                cfg.base_seed = seed;
            }
            if let Some(days) = cli.days {
                cfg.total_days = days;
            }
            if let Some(n) = cli.realizations {
                cfg.n_realizations = n;
            }
            if let Some(out) = &cli.out {
                cfg.out_dir = Some(out.clone());
            } else if cfg.out_dir.is_none() {
                cfg.out_dir = Some(PathBuf::from("runs/experiment"));
            }
            if let Some(w) = cli.workers {
                cfg.workers = Some(w);
            }
            cfg.dump_series |= dump_series;
            cfg.emit_plots |= plots;
            cfg.resolve();

            let outcome = run_experiment(&cfg)?;
            print_summary(&outcome);
        }
    }
    Ok(())
}

fn print_summary(outcome: &volburst_cli::ExperimentOutcome) {
    let cfg = &outcome.config;
    let source = match cfg.source {
        TrajectorySource::Agent => "agent",
        TrajectorySource::Ratio => "ratio",
    };
    println!(
        "{} realizations x {} days ({} source), composition xi={} seasonality={} omega={}",
        cfg.n_realizations,
        cfg.total_days,
        source,
        cfg.composition.use_xi,
        cfg.composition.use_seasonality,
        cfg.composition.use_omega
    );
    for t in &outcome.thresholds {
        let fit = |f: &Option<volburst::PowerLawFit>| match f {
            Some(f) => format!("{:.3} +- {:.3}", f.exponent, f.stderr),
            None => "n/a".to_string(),
        };
        println!(
            "q={}: {} bursts / {} inter-bursts; T exponent {}, theta exponent {}",
            t.q,
            t.episodes.bursts.len(),
            t.episodes.inter_bursts.len(),
            fit(&t.fit_bursts),
            fit(&t.fit_inter)
        );
    }
    match (&outcome.fit_beta1, &outcome.fit_beta2) {
        (Some(b1), Some(b2)) => println!(
            "psd: beta1 {:.3} +- {:.3} (H = {:.3}), beta2 {:.3} +- {:.3}",
            b1.exponent,
            b1.stderr,
            hurst_from_beta(b1.exponent),
            b2.exponent,
            b2.stderr
        ),
        _ => println!("psd: not computed (series shorter than one segment)"),
    }
    if let Some(dir) = &cfg.out_dir {
        println!("outputs in {}", dir.display());
    }
}
