//! Return-series composition on the delta grid.
//!
//! A trajectory turns into a return series in one of two ways:
//!
//! * without the exogenous factor, the series is the magnitude of the
//!   selected endogenous components (`y`, `|y xi|`, or the full volatility
//!   including the intraday pattern);
//! * with the exogenous factor, the series is `sigma(t) * omega(t)` with
//!   `omega` i.i.d. standard normal per sample, drawn from a stream
//!   independent of the trajectory noise.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::{mix_seed, STREAM_OMEGA};
use crate::trajectory::Trajectory;

/// Which factors enter the composed return series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositionSpec {
    /// Multiply the ratio by the speculator mood.
    pub use_xi: bool,
    /// Apply the intraday pattern (and the full `1 + a0 |y xi|` volatility form).
    pub use_seasonality: bool,
    /// Multiply by the exogenous Gaussian factor omega.
    pub use_omega: bool,
}

impl CompositionSpec {
    /// `r = y`: the slow ratio alone.
    pub fn y_only() -> Self {
        CompositionSpec { use_xi: false, use_seasonality: false, use_omega: false }
    }

    /// `r = |y xi|`: ratio times mood.
    pub fn y_xi() -> Self {
        CompositionSpec { use_xi: true, use_seasonality: false, use_omega: false }
    }

    /// `r = b0(t) (1 + a0 |y xi|)`: full endogenous volatility.
    pub fn seasonal_y_xi() -> Self {
        CompositionSpec { use_xi: true, use_seasonality: true, use_omega: false }
    }

    /// `r = (1 + a0 y) omega`: exogenous factor on the bare ratio.
    pub fn omega_y() -> Self {
        CompositionSpec { use_xi: false, use_seasonality: false, use_omega: true }
    }

    /// `r = (1 + a0 |y xi|) omega`.
    pub fn omega_y_xi() -> Self {
        CompositionSpec { use_xi: true, use_seasonality: false, use_omega: true }
    }

    /// `r = b0(t) (1 + a0 |y xi|) omega`: the full model.
    pub fn full() -> Self {
        CompositionSpec { use_xi: true, use_seasonality: true, use_omega: true }
    }
}

/// Intraday volatility pattern
/// `b0(t) = exp(-({t mod 1} - 0.5)^2 / w^2) + 0.5`,
/// periodic with period one day, peaking mid-day at 1.5.
pub fn seasonality(t_days: f64, w: f64) -> f64 {
    let frac = t_days.rem_euclid(1.0);
    let d = frac - 0.5;
    (-d * d / (w * w)).exp() + 0.5
}

/// Endogenous volatility at time `t`:
/// `sigma = b0_hat(t) * (1 + a0 |y xi_hat|)`, where the pattern and the mood
/// are replaced by 1 when the composition switches them off.
pub fn volatility(t_days: f64, y: f64, xi: f64, params: &ModelParams, comp: CompositionSpec) -> f64 {
    let b0 = if comp.use_seasonality { seasonality(t_days, params.w) } else { 1.0 };
    let xi_hat = if comp.use_xi { xi } else { 1.0 };
    b0 * (1.0 + params.a0 * (y * xi_hat).abs())
}

/// A return (or volatility-proxy) series on a uniform delta grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    /// Sample spacing in days.
    pub delta: f64,
    /// Time of the first sample in days.
    pub t0: f64,
    pub values: Vec<f64>,
    pub composition: CompositionSpec,
    pub seed: u64,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of sample `i` in days.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.delta
    }

    /// Replace every value by its absolute value (magnitude series).
    pub fn magnitude(&self) -> ReturnSeries {
        ReturnSeries {
            values: self.values.iter().map(|v| v.abs()).collect(),
            ..self.clone()
        }
    }

    /// Write as CSV with columns `t_days,r`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let ctx = "writing series csv";
        writeln!(w, "t_days,r").map_err(|e| Error::io(ctx, e))?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.time(i), v).map_err(|e| Error::io(ctx, e))?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(BufWriter::new(f))
    }

    /// Read a series written by [`ReturnSeries::write_csv`]. Composition and
    /// seed are not stored in the CSV and come back as defaults.
    pub fn read_csv_path(path: &Path) -> Result<ReturnSeries> {
        let name = path.display().to_string();
        let f = File::open(path).map_err(|e| Error::io(format!("opening {name}"), e))?;
        let reader = BufReader::new(f);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(format!("reading {name}"), e))?;
            if idx == 0 || line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let mut field = |what: &str| -> Result<f64> {
                fields
                    .next()
                    .ok_or_else(|| Error::Parse {
                        path: name.clone(),
                        line: idx + 1,
                        what: format!("missing column {what}"),
                    })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse {
                        path: name.clone(),
                        line: idx + 1,
                        what: format!("{what}: {e}"),
                    })
            };
            times.push(field("t_days")?);
            values.push(field("r")?);
        }
        if times.len() < 2 {
            return Err(Error::TooShort { len: times.len(), min: 2 });
        }
        let delta = times[1] - times[0];
        if !(delta > 0.0) {
            return Err(Error::Parse {
                path: name,
                line: 2,
                what: "non-increasing time column".into(),
            });
        }
        Ok(ReturnSeries {
            delta,
            t0: times[0],
            values,
            composition: CompositionSpec::default(),
            seed: 0,
        })
    }
}

/// Compose a return series from a trajectory.
///
/// The trajectory grid must equal `params.delta` or an integer divisor of it
/// (the trajectory is then subsampled). Omega draws come from a stream
/// derived from `(seed, STREAM_OMEGA)`, so toggling composition flags never
/// perturbs the trajectory realization.
pub fn generate_returns(
    traj: &Trajectory,
    params: &ModelParams,
    comp: CompositionSpec,
    seed: u64,
) -> Result<ReturnSeries> {
    if traj.is_empty() {
        return Err(Error::TooShort { len: 0, min: 1 });
    }
    let ratio = params.delta / traj.grid_step;
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::GridMismatch { traj_step: traj.grid_step, delta: params.delta });
    }
    let stride = stride as usize;
    let n_out = traj.len().div_ceil(stride);

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, STREAM_OMEGA));
    let mut values = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let i = j * stride;
        let t = j as f64 * params.delta;
        let y = traj.y[i];
        let xi = traj.xi[i];
        let v = if comp.use_omega {
            let omega: f64 = rng.sample(StandardNormal);
            volatility(t, y, xi, params, comp) * omega
        } else {
            let xi_hat = if comp.use_xi { xi } else { 1.0 };
            let m = (y * xi_hat).abs();
            if comp.use_seasonality {
                seasonality(t, params.w) * (1.0 + params.a0 * m)
            } else {
                m
            }
        };
        values.push(v);
    }

    Ok(ReturnSeries { delta: params.delta, t0: 0.0, values, composition: comp, seed })
}

/// Trailing rolling population standard deviation.
///
/// `output[i]` is the standard deviation (divide by n, mean subtracted) of
/// the `window` raw samples ending at input index `i + window - 1`; the
/// output is `window - 1` samples shorter and starts `('window' - 1) * delta`
/// later. Each window is computed independently, so filtering commutes
/// exactly with time shifts.
pub fn rolling_std_filter(series: &ReturnSeries, window: usize) -> Result<ReturnSeries> {
    if window < 2 {
        return Err(Error::invalid("window", format!("must be >= 2, got {window}")));
    }
    if series.len() < window {
        return Err(Error::TooShort { len: series.len(), min: window });
    }
    let n_out = series.len() - window + 1;
    let inv_n = 1.0 / window as f64;
    let mut values = Vec::with_capacity(n_out);
    for i in 0..n_out {
        let w = &series.values[i..i + window];
        let mean = w.iter().sum::<f64>() * inv_n;
        let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() * inv_n;
        values.push(var.sqrt());
    }
    Ok(ReturnSeries {
        delta: series.delta,
        t0: series.t0 + (window - 1) as f64 * series.delta,
        values,
        composition: series.composition,
        seed: series.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    fn flat_traj(y: f64, xi: f64, n: usize, grid_step: f64) -> Trajectory {
        Trajectory {
            grid_step,
            n_f: vec![1.0 / (1.0 + y); n],
            xi: vec![xi; n],
            y: vec![y; n],
            seed: 0,
        }
    }

    #[test]
    fn seasonality_peak_and_values() {
        assert_eq!(seasonality(0.5, 0.25), 1.5);
        let v = seasonality(0.25, 0.25);
        assert!((v - ((-1.0f64).exp() + 0.5)).abs() < 1e-15);
        assert!((v - 0.867879).abs() < 1e-6);
        let v = seasonality(0.0, 0.25);
        assert!((v - ((-4.0f64).exp() + 0.5)).abs() < 1e-15);
        assert!((v - 0.518316).abs() < 1e-6);
    }

    #[test]
    fn seasonality_is_daily_periodic() {
        for k in 0..5 {
            let t = 0.3 + k as f64;
            assert!((seasonality(t, 0.25) - seasonality(0.3, 0.25)).abs() < 1e-12);
        }
        // range check over a day
        for i in 0..1000 {
            let v = seasonality(i as f64 / 1000.0, 0.25);
            assert!(v > 0.5 && v <= 1.5);
        }
    }

    #[test]
    fn volatility_reduces_to_pattern_when_agents_quiet() {
        let p = params();
        let comp = CompositionSpec::full();
        let t = 0.37;
        let v = volatility(t, 0.0, 0.9, &p, comp);
        assert_eq!(v, seasonality(t, p.w));
    }

    #[test]
    fn volatility_direct_value() {
        let p = params();
        // b0 = 1.5 at mid-day, |y xi| = 2 -> sigma = 1.5 * 3 = 4.5
        let v = volatility(0.5, 4.0, 0.5, &p, CompositionSpec::full());
        assert!((v - 4.5).abs() < 1e-12);
    }

    #[test]
    fn volatility_bare_ratio_composition() {
        let p = params();
        let v = volatility(0.1, 1.1, 0.3, &p, CompositionSpec::omega_y());
        assert!((v - 2.1).abs() < 1e-12);
    }

    #[test]
    fn identity_composition_returns_y() {
        let p = params();
        let traj = flat_traj(2.5, 0.4, 20, p.delta);
        let s = generate_returns(&traj, &p, CompositionSpec::y_only(), 1).unwrap();
        assert_eq!(s.values, traj.y);
        assert_eq!(s.delta, p.delta);
        assert_eq!(s.t0, 0.0);
    }

    #[test]
    fn mood_composition_takes_magnitude() {
        let p = params();
        let traj = flat_traj(2.0, -0.25, 8, p.delta);
        let s = generate_returns(&traj, &p, CompositionSpec::y_xi(), 1).unwrap();
        for &v in &s.values {
            assert_eq!(v, 0.5);
        }
    }

    #[test]
    fn seasonal_composition_matches_recomputation() {
        let p = params();
        let n = 800;
        let traj = flat_traj(1.7, 0.6, n, p.delta);
        let s = generate_returns(&traj, &p, CompositionSpec::seasonal_y_xi(), 1).unwrap();
        for i in 0..n {
            let t = i as f64 * p.delta;
            let expect = seasonality(t, p.w) * (1.0 + p.a0 * (1.7f64 * 0.6).abs());
            assert!((s.values[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn omega_free_series_are_nonnegative() {
        let p = params();
        let traj = flat_traj(1.0, -0.9, 50, p.delta);
        for comp in [
            CompositionSpec::y_only(),
            CompositionSpec::y_xi(),
            CompositionSpec::seasonal_y_xi(),
        ] {
            let s = generate_returns(&traj, &p, comp, 3).unwrap();
            assert!(s.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn omega_stream_is_independent_of_composition() {
        let p = params();
        let traj = flat_traj(1.0, 0.5, 100, p.delta);
        let a = generate_returns(&traj, &p, CompositionSpec::omega_y(), 5).unwrap();
        let b = generate_returns(&traj, &p, CompositionSpec::full(), 5).unwrap();
        // same omega draws, different sigma: the ratio of values equals the
        // ratio of volatilities
        for i in 0..traj.len() {
            let t = i as f64 * p.delta;
            let sa = volatility(t, 1.0, 0.5, &p, CompositionSpec::omega_y());
            let sb = volatility(t, 1.0, 0.5, &p, CompositionSpec::full());
            if a.values[i] != 0.0 {
                assert!((b.values[i] / a.values[i] - sb / sa).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trajectory_subsampling_by_integer_divisor() {
        let p = params();
        let fine = flat_traj(1.0, 0.0, 40, p.delta / 4.0);
        let s = generate_returns(&fine, &p, CompositionSpec::y_only(), 1).unwrap();
        assert_eq!(s.len(), 10);
        let bad = flat_traj(1.0, 0.0, 40, p.delta / 2.5);
        assert!(matches!(
            generate_returns(&bad, &p, CompositionSpec::y_only(), 1),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn determinism_of_omega_compositions() {
        let p = params();
        let traj = flat_traj(1.3, 0.2, 64, p.delta);
        let a = generate_returns(&traj, &p, CompositionSpec::full(), 11).unwrap();
        let b = generate_returns(&traj, &p, CompositionSpec::full(), 11).unwrap();
        assert_eq!(a, b);
        let c = generate_returns(&traj, &p, CompositionSpec::full(), 12).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn filter_of_constant_series_is_zero() {
        let s = ReturnSeries {
            delta: 1.0,
            t0: 0.0,
            values: vec![3.25; 30],
            composition: CompositionSpec::default(),
            seed: 0,
        };
        let f = rolling_std_filter(&s, 10).unwrap();
        assert_eq!(f.len(), 21);
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn filter_of_alternating_series_is_one() {
        let values: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = ReturnSeries {
            delta: 0.5,
            t0: 0.0,
            values,
            composition: CompositionSpec::default(),
            seed: 0,
        };
        let f = rolling_std_filter(&s, 10).unwrap();
        for &v in &f.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((f.t0 - 4.5).abs() < 1e-12);
    }

    #[test]
    fn filter_direct_value() {
        let s = ReturnSeries {
            delta: 1.0,
            t0: 0.0,
            values: (0..10).map(|i| i as f64).collect(),
            composition: CompositionSpec::default(),
            seed: 0,
        };
        let f = rolling_std_filter(&s, 10).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f.values[0] - 8.25f64.sqrt()).abs() < 1e-12);
        assert!((f.values[0] - 2.872281).abs() < 1e-6);
    }

    #[test]
    fn filter_rejects_short_series() {
        let s = ReturnSeries {
            delta: 1.0,
            t0: 0.0,
            values: vec![1.0; 5],
            composition: CompositionSpec::default(),
            seed: 0,
        };
        assert!(matches!(rolling_std_filter(&s, 10), Err(Error::TooShort { .. })));
        assert!(rolling_std_filter(&s, 1).is_err());
    }

    #[test]
    fn filter_commutes_with_time_shift() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(
                    proptest::collection::vec(-10.0f64..10.0, 25..120),
                    1usize..10,
                ),
                |(values, shift)| {
                    let s = ReturnSeries {
                        delta: 0.25,
                        t0: 0.0,
                        values: values.clone(),
                        composition: CompositionSpec::default(),
                        seed: 0,
                    };
                    let shifted = ReturnSeries {
                        values: values[shift..].to_vec(),
                        t0: s.t0 + shift as f64 * s.delta,
                        ..s.clone()
                    };
                    if shifted.len() >= 10 {
                        let f_full = rolling_std_filter(&s, 10).unwrap();
                        let f_shifted = rolling_std_filter(&shifted, 10).unwrap();
                        for i in 0..f_shifted.len() {
                            prop_assert_eq!(f_shifted.values[i], f_full.values[i + shift]);
                        }
                        prop_assert_eq!(f_shifted.time(0), f_full.time(shift));
                    }
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn series_csv_round_trip() {
        let s = ReturnSeries {
            delta: 0.25,
            t0: 1.5,
            values: vec![0.1, -2.75, 3.125e-7],
            composition: CompositionSpec::default(),
            seed: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        s.write_csv_path(&path).unwrap();
        let back = ReturnSeries::read_csv_path(&path).unwrap();
        assert_eq!(back.values, s.values);
        assert_eq!(back.t0, s.t0);
        assert!((back.delta - s.delta).abs() < 1e-15);
    }
}
