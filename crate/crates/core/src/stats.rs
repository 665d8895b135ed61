//! Estimators: log-binned duration PDFs, averaged periodograms, power-law
//! exponent fits and the spectral-slope/Hurst relation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::series::ReturnSeries;

/// Bins in a fit must hold at least this many samples to be used.
pub const MIN_BIN_COUNT: u64 = 5;
/// A power-law fit needs at least this many usable bins.
pub const MIN_FIT_BINS: usize = 4;

/// Probability density estimated on geometrically spaced bins.
///
/// `density[i] = counts[i] / (n_total * (edges[i+1] - edges[i]))`, so the
/// integral of the density over all bins equals the fraction of samples
/// inside the binned range (1 when the range covers every sample).
#[derive(Debug, Clone, PartialEq)]
pub struct LogBinnedPdf {
    /// Bin edges, strictly increasing, constant ratio between neighbours.
    pub bin_edges: Vec<f64>,
    /// Geometric means of the bin edges.
    pub bin_centers: Vec<f64>,
    /// Probability density per bin.
    pub density: Vec<f64>,
    /// Raw counts per bin.
    pub counts: Vec<u64>,
    pub n_total: usize,
}

impl LogBinnedPdf {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Write as CSV with columns `bin_center,density,count`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let ctx = "writing pdf csv";
        writeln!(w, "bin_center,density,count").map_err(|e| Error::io(ctx, e))?;
        for i in 0..self.n_bins() {
            writeln!(w, "{},{},{}", self.bin_centers[i], self.density[i], self.counts[i])
                .map_err(|e| Error::io(ctx, e))?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(BufWriter::new(f))
    }
}

/// Histogram positive samples into geometric bins and normalize to a density.
///
/// Bins span `[min, max]` of the samples with `bins_per_decade` bins per
/// factor of ten; equal samples collapse to a single bin centred on them.
pub fn log_binned_pdf(samples: &[f64], bins_per_decade: usize) -> Result<LogBinnedPdf> {
    if samples.len() < 10 {
        return Err(Error::TooShort { len: samples.len(), min: 10 });
    }
    if bins_per_decade < 2 {
        return Err(Error::invalid("bins_per_decade", "must be >= 2"));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &x in samples {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("log binning requires positive samples, got {x}")));
        }
        min = min.min(x);
        max = max.max(x);
    }

    let bpd = bins_per_decade as f64;
    let (edges, n_bins) = if min == max {
        // Degenerate sample set: one bin of the nominal width around it.
        let half = 10f64.powf(0.5 / bpd);
        (vec![min / half, min * half], 1)
    } else {
        let decades = (max / min).log10();
        let n_bins = (decades * bpd).ceil().max(1.0) as usize;
        let mut edges = Vec::with_capacity(n_bins + 1);
        for i in 0..=n_bins {
            edges.push(min * 10f64.powf(i as f64 / bpd));
        }
        (edges, n_bins)
    };

    let mut counts = vec![0u64; n_bins];
    if min == max {
        counts[0] = samples.len() as u64;
    } else {
        let log_min = min.log10();
        for &x in samples {
            let idx = ((x.log10() - log_min) * bpd).floor() as isize;
            let idx = idx.clamp(0, n_bins as isize - 1) as usize;
            counts[idx] += 1;
        }
    }

    let n_total = samples.len();
    let mut centers = Vec::with_capacity(n_bins);
    let mut density = Vec::with_capacity(n_bins);
    for i in 0..n_bins {
        let (lo, hi) = (edges[i], edges[i + 1]);
        centers.push((lo * hi).sqrt());
        density.push(counts[i] as f64 / (n_total as f64 * (hi - lo)));
    }

    Ok(LogBinnedPdf { bin_edges: edges, bin_centers: centers, density, counts, n_total })
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Frequencies in day^-1, strictly increasing.
    pub frequencies: Vec<f64>,
    /// Power density per frequency; `sum(power) * df` approximates the
    /// series variance (Parseval-consistent normalization).
    pub power: Vec<f64>,
    pub n_segments: usize,
    pub segment_length: usize,
}

impl Spectrum {
    /// Frequency spacing in day^-1.
    pub fn df(&self) -> f64 {
        self.frequencies[0]
    }

    /// Pool with another estimate over the same frequency grid, weighting
    /// by segment counts.
    pub fn merge_weighted(&mut self, other: &Spectrum) -> Result<()> {
        if self.segment_length != other.segment_length
            || self.frequencies.len() != other.frequencies.len()
            || self.frequencies.first() != other.frequencies.first()
        {
            return Err(Error::invalid("spectrum", "cannot merge spectra on different grids"));
        }
        let (na, nb) = (self.n_segments as f64, other.n_segments as f64);
        let total = na + nb;
        for (p, q) in self.power.iter_mut().zip(&other.power) {
            *p = (*p * na + *q * nb) / total;
        }
        self.n_segments += other.n_segments;
        Ok(())
    }

    /// Write as CSV with columns `freq_per_day,power`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let ctx = "writing psd csv";
        writeln!(w, "freq_per_day,power").map_err(|e| Error::io(ctx, e))?;
        for (f, p) in self.frequencies.iter().zip(&self.power) {
            writeln!(w, "{f},{p}").map_err(|e| Error::io(ctx, e))?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(BufWriter::new(f))
    }
}

/// Averaged periodogram over non-overlapping, mean-removed segments.
///
/// `segment_length` must be a power of two and fit in the series. The
/// frequency axis is `f_k = k / (segment_length * delta)` for
/// `k = 1 ..= segment_length/2` (one-sided; DC is removed with the segment
/// means). Normalization satisfies Parseval exactly per segment:
/// `sum(power) * df` equals the mean within-segment variance.
pub fn psd(series: &ReturnSeries, segment_length: usize) -> Result<Spectrum> {
    if segment_length < 4 || !segment_length.is_power_of_two() {
        return Err(Error::invalid(
            "segment_length",
            format!("must be a power of two >= 4, got {segment_length}"),
        ));
    }
    let n = series.len();
    if n < segment_length {
        return Err(Error::TooShort { len: n, min: segment_length });
    }
    let delta = series.delta;
    let len_f = segment_length as f64;
    let half = segment_length / 2;
    let n_segments = n / segment_length;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(segment_length);
    let mut buf = vec![Complex::new(0.0, 0.0); segment_length];
    let mut acc = vec![0.0f64; half];

    for s in 0..n_segments {
        let seg = &series.values[s * segment_length..(s + 1) * segment_length];
        let mean = seg.iter().sum::<f64>() / len_f;
        for (b, &v) in buf.iter_mut().zip(seg) {
            *b = Complex::new(v - mean, 0.0);
        }
        fft.process(&mut buf);
        for k in 1..=half {
            // One-sided: double interior bins, Nyquist counted once.
            let fold = if k == half { 1.0 } else { 2.0 };
            acc[k - 1] += buf[k].norm_sqr() * fold * delta / len_f;
        }
    }

    let inv_segs = 1.0 / n_segments as f64;
    for a in &mut acc {
        *a *= inv_segs;
    }
    let frequencies = (1..=half).map(|k| k as f64 / (len_f * delta)).collect();

    Ok(Spectrum { frequencies, power: acc, n_segments, segment_length })
}

/// Result of an ordinary least-squares fit on log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    /// Magnitude of the fitted log-log slope.
    pub exponent: f64,
    /// OLS standard error of the slope.
    pub stderr: f64,
    /// The (low, high) x-range the fit ran over.
    pub fit_range: (f64, f64),
    pub n_bins_used: usize,
}

fn ols_loglog(points: &[(f64, f64)], range: (f64, f64)) -> Result<PowerLawFit> {
    let n = points.len();
    if n < MIN_FIT_BINS {
        return Err(Error::InsufficientBins { usable: n, min: MIN_FIT_BINS });
    }
    let nf = n as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(x, y) in points {
        sx += x;
        sy += y;
    }
    let (mx, my) = (sx / nf, sy / nf);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Domain("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let mut ssr = 0.0;
    for &(x, y) in points {
        let resid = y - my - slope * (x - mx);
        ssr += resid * resid;
    }
    let stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(PowerLawFit { exponent: slope.abs(), stderr, fit_range: range, n_bins_used: n })
}

/// Fit `density ~ x^(-gamma)` on the log-binned PDF over bin centers inside
/// `range`, using only bins with at least [`MIN_BIN_COUNT`] samples.
/// Returns the slope magnitude `gamma` and its OLS standard error.
pub fn fit_powerlaw_pdf(pdf: &LogBinnedPdf, range: (f64, f64)) -> Result<PowerLawFit> {
    let points: Vec<(f64, f64)> = (0..pdf.n_bins())
        .filter(|&i| {
            let c = pdf.bin_centers[i];
            c >= range.0 && c <= range.1 && pdf.counts[i] >= MIN_BIN_COUNT && pdf.density[i] > 0.0
        })
        .map(|i| (pdf.bin_centers[i].ln(), pdf.density[i].ln()))
        .collect();
    ols_loglog(&points, range)
}

/// Geometric bins per decade used when rebinning a spectrum for a fit.
pub const SPECTRUM_FIT_BINS_PER_DECADE: usize = 16;

/// Fit `power ~ f^(-beta)` on the spectrum over frequencies inside `range`.
///
/// The raw frequency grid is linear, so a direct OLS would weight the top
/// of the range thousands of times heavier than the bottom. Power is first
/// averaged into geometric frequency bins ([`SPECTRUM_FIT_BINS_PER_DECADE`]
/// per decade); the OLS then runs on (log bin center, log mean power) over
/// the non-empty bins.
pub fn fit_powerlaw_spectrum(spec: &Spectrum, range: (f64, f64)) -> Result<PowerLawFit> {
    if !(range.0 > 0.0 && range.1 > range.0) {
        return Err(Error::invalid("fit_range", "need 0 < low < high"));
    }
    let bpd = SPECTRUM_FIT_BINS_PER_DECADE as f64;
    let n_bins = (((range.1 / range.0).log10()) * bpd).ceil().max(1.0) as usize;
    let mut sum = vec![0.0f64; n_bins];
    let mut cnt = vec![0usize; n_bins];
    for (&f, &p) in spec.frequencies.iter().zip(&spec.power) {
        if f < range.0 || f > range.1 || p <= 0.0 {
            continue;
        }
        let idx = ((((f / range.0).log10()) * bpd).floor() as usize).min(n_bins - 1);
        sum[idx] += p;
        cnt[idx] += 1;
    }
    let points: Vec<(f64, f64)> = (0..n_bins)
        .filter(|&i| cnt[i] > 0)
        .map(|i| {
            let center = range.0 * 10f64.powf((i as f64 + 0.5) / bpd);
            (center.ln(), (sum[i] / cnt[i] as f64).ln())
        })
        .collect();
    ols_loglog(&points, range)
}

/// Hurst exponent implied by a spectral exponent: `H = (beta - 1) / 2`.
pub fn hurst_from_beta(beta: f64) -> f64 {
    (beta - 1.0) / 2.0
}

/// A named fit result, as written to `fits.csv`.
#[derive(Debug, Clone)]
pub struct FitRow {
    pub target: String,
    pub fit: PowerLawFit,
}

/// Write fit rows as CSV with columns
/// `target,range_lo,range_hi,exponent,stderr`.
pub fn write_fits_csv<W: Write>(mut w: W, rows: &[FitRow]) -> Result<()> {
    let ctx = "writing fits csv";
    writeln!(w, "target,range_lo,range_hi,exponent,stderr").map_err(|e| Error::io(ctx, e))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.target, r.fit.fit_range.0, r.fit.fit_range.1, r.fit.exponent, r.fit.stderr
        )
        .map_err(|e| Error::io(ctx, e))?;
    }
    Ok(())
}

pub fn write_fits_csv_path(path: &Path, rows: &[FitRow]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_fits_csv(BufWriter::new(f), rows)
}
