//! Shared helpers for the integration tests: Kolmogorov–Smirnov distances
//! and quadrature-normalized reference distributions, independent of the
//! library's estimator code paths.

#![allow(dead_code)]

/// Kolmogorov–Smirnov distance between samples and a reference CDF.
pub fn ks_distance_to_cdf<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let c = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((c - lo).abs()).max((hi - c).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|u, v| u.partial_cmp(v).unwrap());
    xb.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        if xa[i] <= xb[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// CDF built by trapezoid quadrature of an unnormalized density on a grid.
pub struct QuadratureCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl QuadratureCdf {
    /// Tabulate `density` on `n` uniformly spaced points over `[lo, hi]`
    /// and normalize numerically.
    pub fn new<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, density: F) -> Self {
        assert!(n >= 2 && hi > lo);
        let dx = (hi - lo) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * dx).collect();
        let ps: Vec<f64> = xs.iter().map(|&x| density(x)).collect();
        let mut cdf = vec![0.0; n];
        for i in 1..n {
            cdf[i] = cdf[i - 1] + 0.5 * (ps[i - 1] + ps[i]) * dx;
        }
        let total = cdf[n - 1];
        assert!(total > 0.0, "density integrates to zero");
        for c in &mut cdf {
            *c /= total;
        }
        QuadratureCdf { xs, cdf }
    }

    /// Same, with points placed uniformly in log space (for heavy tails).
    pub fn new_log<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, density: F) -> Self {
        assert!(n >= 2 && hi > lo && lo > 0.0);
        let dl = (hi / lo).ln() / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| lo * (i as f64 * dl).exp()).collect();
        let ps: Vec<f64> = xs.iter().map(|&x| density(x)).collect();
        let mut cdf = vec![0.0; n];
        for i in 1..n {
            cdf[i] = cdf[i - 1] + 0.5 * (ps[i - 1] + ps[i]) * (xs[i] - xs[i - 1]);
        }
        let total = cdf[n - 1];
        assert!(total > 0.0, "density integrates to zero");
        for c in &mut cdf {
            *c /= total;
        }
        QuadratureCdf { xs, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let idx = match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.cdf[i],
            Err(i) => i,
        };
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }

    /// Largest pointwise CDF gap against another tabulated CDF, evaluated on
    /// this table's grid.
    pub fn ks_against(&self, other: &QuadratureCdf) -> f64 {
        let mut d: f64 = 0.0;
        for (&x, &c) in self.xs.iter().zip(&self.cdf) {
            d = d.max((c - other.eval(x)).abs());
        }
        d
    }
}

#[test]
fn ks_helpers_sanity() {
    // Uniform samples vs uniform CDF
    let samples: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
    let d = ks_distance_to_cdf(&samples, |x| x.clamp(0.0, 1.0));
    assert!(d < 0.001, "{d}");

    let q = QuadratureCdf::new(0.0, 1.0, 1001, |_| 1.0);
    assert!((q.eval(0.25) - 0.25).abs() < 1e-9);

    let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
    let b: Vec<f64> = (0..500).map(|i| i as f64 / 500.0 + 0.1).collect();
    let d = two_sample_ks(&a, &b);
    assert!((d - 0.1).abs() < 0.01, "{d}");
}
