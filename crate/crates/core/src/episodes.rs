//! Threshold-passage episodes: burst and inter-burst durations.
//!
//! A sample is "above" when it strictly exceeds the resolved threshold
//! level (ties count as below). Bursts are maximal runs of above samples,
//! inter-bursts maximal runs of the rest; the first and last runs of a
//! series are censored by the observation window and are discarded.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::ReturnSeries;

/// A threshold expressed in units of the series standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    /// Threshold in standard deviations of the analyzed series.
    pub q: f64,
    /// Resolved level `q * std(series)` in series units.
    pub absolute_level: f64,
}

impl ThresholdSpec {
    /// Resolve `q` against a series standard deviation.
    pub fn resolve(q: f64, series_std: f64) -> Result<ThresholdSpec> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::invalid("q", format!("must be > 0, got {q}")));
        }
        if !(series_std > 0.0 && series_std.is_finite()) {
            return Err(Error::DegenerateSeries);
        }
        Ok(ThresholdSpec { q, absolute_level: q * series_std })
    }
}

/// Burst and inter-burst duration samples for one threshold.
///
/// Durations are positive integer multiples of the series step, in days.
/// Bursts and inter-bursts alternate in the source series, so the two
/// counts differ by at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSet {
    pub q: f64,
    /// Burst durations T (time above threshold), days.
    pub bursts: Vec<f64>,
    /// Inter-burst durations theta (time below threshold), days.
    pub inter_bursts: Vec<f64>,
    /// Number of series samples the extraction ran over.
    pub n_samples_analyzed: usize,
}

impl EpisodeSet {
    pub fn empty(q: f64) -> Self {
        EpisodeSet { q, bursts: Vec::new(), inter_bursts: Vec::new(), n_samples_analyzed: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.bursts.is_empty() && self.inter_bursts.is_empty()
    }

    /// Multiset union with another set for the same threshold.
    pub fn merge(&mut self, other: &EpisodeSet) {
        assert_eq!(
            self.q, other.q,
            "merging episode sets with different thresholds"
        );
        self.bursts.extend_from_slice(&other.bursts);
        self.inter_bursts.extend_from_slice(&other.inter_bursts);
        self.n_samples_analyzed += other.n_samples_analyzed;
    }
}

/// Population standard deviation of the full analyzed series.
///
/// Errors on constant (zero-dispersion) series: a threshold in standard
/// deviations is meaningless there.
pub fn series_std(series: &ReturnSeries) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooShort { len: n, min: 2 });
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &v in &series.values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    if min == max {
        return Err(Error::DegenerateSeries);
    }
    let mean = sum / n as f64;
    let var = series.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if !(std > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    Ok(std)
}

/// Extract burst and inter-burst durations at a resolved threshold.
///
/// The boundary-truncated first and last runs are discarded (their true
/// duration is censored). A series the level never splits yields an empty
/// set, not an error.
pub fn extract_episodes(series: &ReturnSeries, spec: &ThresholdSpec) -> EpisodeSet {
    let level = spec.absolute_level;
    let delta = series.delta;
    let mut out = EpisodeSet::empty(spec.q);
    out.n_samples_analyzed = series.len();
    if series.len() < 2 {
        return out;
    }

    // Run-length encode the above/below mask, dropping the first run and,
    // by loop construction, the unfinished last run.
    let mut run_above = series.values[0] > level;
    let mut run_len: usize = 1;
    let mut first_run = true;
    for &v in &series.values[1..] {
        let above = v > level;
        if above == run_above {
            run_len += 1;
        } else {
            if !first_run {
                let dur = run_len as f64 * delta;
                if run_above {
                    out.bursts.push(dur);
                } else {
                    out.inter_bursts.push(dur);
                }
            }
            first_run = false;
            run_above = above;
            run_len = 1;
        }
    }
    out
}

/// Write episode sets as CSV with columns `kind,q,duration_days`,
/// `kind` in `{T, theta}`.
pub fn write_episodes_csv<W: Write>(mut w: W, sets: &[EpisodeSet]) -> Result<()> {
    let ctx = "writing episodes csv";
    writeln!(w, "kind,q,duration_days").map_err(|e| Error::io(ctx, e))?;
    for set in sets {
        for d in &set.bursts {
            writeln!(w, "T,{},{}", set.q, d).map_err(|e| Error::io(ctx, e))?;
        }
        for d in &set.inter_bursts {
            writeln!(w, "theta,{},{}", set.q, d).map_err(|e| Error::io(ctx, e))?;
        }
    }
    Ok(())
}

pub fn write_episodes_csv_path(path: &Path, sets: &[EpisodeSet]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_episodes_csv(BufWriter::new(f), sets)
}

/// Read an episodes CSV back as `(kind, q, duration_days)` rows.
pub fn read_episodes_csv_path(path: &Path) -> Result<Vec<(String, f64, f64)>> {
    let name = path.display().to_string();
    let f = File::open(path).map_err(|e| Error::io(format!("opening {name}"), e))?;
    let reader = BufReader::new(f);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {name}"), e))?;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: name.clone(),
                line: idx + 1,
                what: format!("expected 3 columns, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: name.clone(),
                line: idx + 1,
                what: format!("{what}: {e}"),
            })
        };
        rows.push((fields[0].trim().to_string(), parse(fields[1], "q")?, parse(fields[2], "duration")?));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::CompositionSpec;
    use proptest::prelude::*;

    fn series(values: Vec<f64>, delta: f64) -> ReturnSeries {
        ReturnSeries {
            delta,
            t0: 0.0,
            values,
            composition: CompositionSpec::default(),
            seed: 0,
        }
    }

    #[test]
    fn std_of_alternating_is_one() {
        let s = series(vec![1.0, -1.0, 1.0, -1.0], 1.0);
        assert!((series_std(&s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn std_direct_value() {
        let s = series(vec![0.0, 0.0, 0.0, 4.0], 1.0);
        assert!((series_std(&s).unwrap() - 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn std_rejects_constant_series() {
        let s = series(vec![2.0; 10], 1.0);
        assert!(matches!(series_std(&s), Err(Error::DegenerateSeries)));
    }

    #[test]
    fn hand_enumerated_episodes() {
        let s = series(vec![0.0, 2.0, 2.0, 0.0, 2.0, 0.0, 0.0], 1.0);
        let spec = ThresholdSpec { q: 1.0, absolute_level: 1.0 };
        let e = extract_episodes(&s, &spec);
        assert_eq!(e.bursts, vec![2.0, 1.0]);
        assert_eq!(e.inter_bursts, vec![1.0]);
        assert_eq!(e.n_samples_analyzed, 7);
    }

    #[test]
    fn level_above_maximum_gives_empty_set() {
        let s = series(vec![0.0, 1.0, 0.5, 0.2], 1.0);
        let spec = ThresholdSpec { q: 3.0, absolute_level: 10.0 };
        let e = extract_episodes(&s, &spec);
        assert!(e.is_empty());
        assert_eq!(e.n_samples_analyzed, 4);
    }

    #[test]
    fn ties_count_as_below() {
        let s = series(vec![0.0, 1.0, 2.0, 1.0, 2.0, 0.0], 1.0);
        let spec = ThresholdSpec { q: 1.0, absolute_level: 1.0 };
        let e = extract_episodes(&s, &spec);
        // mask: F F T F T F -> interior runs: T(1), F(1), T(1)
        assert_eq!(e.bursts, vec![1.0, 1.0]);
        assert_eq!(e.inter_bursts, vec![1.0]);
    }

    #[test]
    fn counts_differ_by_at_most_one() {
        let s = series(
            (0..200).map(|i| ((i * 7919) % 13) as f64).collect(),
            0.5,
        );
        let spec = ThresholdSpec::resolve(1.0, series_std(&s).unwrap()).unwrap();
        let e = extract_episodes(&s, &spec);
        let diff = e.bursts.len() as i64 - e.inter_bursts.len() as i64;
        assert!(diff.abs() <= 1, "{diff}");
    }

    #[test]
    fn threshold_resolution() {
        let spec = ThresholdSpec::resolve(2.0, 1.5).unwrap();
        assert_eq!(spec.absolute_level, 3.0);
        assert!(ThresholdSpec::resolve(0.0, 1.0).is_err());
        assert!(ThresholdSpec::resolve(1.0, 0.0).is_err());
    }

    #[test]
    fn merge_concatenates() {
        let mut a = EpisodeSet { q: 2.0, bursts: vec![1.0], inter_bursts: vec![2.0], n_samples_analyzed: 10 };
        let b = EpisodeSet { q: 2.0, bursts: vec![3.0], inter_bursts: vec![], n_samples_analyzed: 5 };
        a.merge(&b);
        assert_eq!(a.bursts, vec![1.0, 3.0]);
        assert_eq!(a.inter_bursts, vec![2.0]);
        assert_eq!(a.n_samples_analyzed, 15);
    }

    #[test]
    fn episodes_csv_round_trip() {
        let e = EpisodeSet {
            q: 0.5,
            bursts: vec![1.0, 2.0],
            inter_bursts: vec![0.5],
            n_samples_analyzed: 7,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("episodes.csv");
        write_episodes_csv_path(&path, &[e]).unwrap();
        let rows = read_episodes_csv_path(&path).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], ("T".to_string(), 0.5, 1.0));
        assert_eq!(rows[2], ("theta".to_string(), 0.5, 0.5));
    }

    // Reference run-length encoding used to cross-check the extraction.
    fn naive_interior_runs(values: &[f64], level: f64) -> Vec<(bool, usize)> {
        let mask: Vec<bool> = values.iter().map(|&v| v > level).collect();
        let mut runs: Vec<(bool, usize)> = Vec::new();
        for &m in &mask {
            match runs.last_mut() {
                Some((k, len)) if *k == m => *len += 1,
                _ => runs.push((m, 1)),
            }
        }
        if runs.len() <= 2 {
            return Vec::new();
        }
        runs[1..runs.len() - 1].to_vec()
    }

    proptest! {
        #[test]
        fn alternation_matches_reference_rle(
            values in proptest::collection::vec(-5.0f64..5.0, 2..300),
            level in -2.0f64..2.0,
        ) {
            let s = series(values.clone(), 1.0);
            let spec = ThresholdSpec { q: 1.0, absolute_level: level };
            let e = extract_episodes(&s, &spec);
            let runs = naive_interior_runs(&values, level);
            let mut bursts = Vec::new();
            let mut inter = Vec::new();
            for (above, len) in runs {
                if above { bursts.push(len as f64) } else { inter.push(len as f64) }
            }
            prop_assert_eq!(e.bursts, bursts);
            prop_assert_eq!(e.inter_bursts, inter);
        }

        #[test]
        fn scale_invariance(
            values in proptest::collection::vec(0.0f64..10.0, 10..200),
            scale in 0.01f64..100.0,
            q in 0.1f64..3.0,
        ) {
            let s = series(values.clone(), 1.0);
            if let Ok(std) = series_std(&s) {
                let spec = ThresholdSpec::resolve(q, std).unwrap();
                let e1 = extract_episodes(&s, &spec);

                let scaled = series(values.iter().map(|v| v * scale).collect(), 1.0);
                let std2 = series_std(&scaled).unwrap();
                let spec2 = ThresholdSpec::resolve(q, std2).unwrap();
                let e2 = extract_episodes(&scaled, &spec2);
                prop_assert_eq!(e1.bursts, e2.bursts);
                prop_assert_eq!(e1.inter_bursts, e2.inter_bursts);
            }
        }

        #[test]
        fn time_above_is_monotone_in_q(
            values in proptest::collection::vec(0.0f64..10.0, 10..200),
        ) {
            let s = series(values, 1.0);
            if let Ok(std) = series_std(&s) {
                let mut prev = f64::INFINITY;
                for q in [0.3, 0.5, 0.8, 1.3, 2.0, 3.0] {
                    let spec = ThresholdSpec::resolve(q, std).unwrap();
                    // total time above includes censored runs here; count raw
                    let above = s.values.iter().filter(|&&v| v > spec.absolute_level).count() as f64;
                    prop_assert!(above <= prev);
                    prev = above;
                }
            }
        }
    }
}
