//! Kolmogorov-Smirnov tests and fixed-bin histograms.

use serde::Serialize;

/// Asymptotic coefficient `c(alpha) = sqrt(-ln(alpha/2) / 2)`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Effective sample size `n` (one-sample) or `nm/(n+m)` (two-sample).
    pub effective_n: f64,
}

impl KsResult {
    pub fn critical(&self, alpha: f64) -> f64 {
        ks_coefficient(alpha) / self.effective_n.sqrt()
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.statistic < self.critical(alpha)
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let v = sorted(samples);
    let n = v.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    KsResult {
        statistic: d,
        effective_n: n,
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut k) = (0, 0);
    let mut d = 0.0_f64;
    while i < a.len() && k < b.len() {
        let x = a[i].min(b[k]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while k < b.len() && b[k] <= x {
            k += 1;
        }
        d = d.max((i as f64 / n - k as f64 / m).abs());
    }
    KsResult {
        statistic: d,
        effective_n: n * m / (n + m),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Samples that fell outside `[lo, hi]`.
    pub outside: u64,
    pub total: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0);
        Self {
            lo,
            hi,
            counts: vec![0; bins],
            outside: 0,
            total: 0,
        }
    }

    pub fn from_samples(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let mut h = Self::new(lo, hi, bins);
        for &x in samples {
            h.add(x);
        }
        h
    }

    pub fn add(&mut self, x: f64) {
        self.total += 1;
        if !(x >= self.lo && x <= self.hi) {
            self.outside += 1;
            return;
        }
        let bins = self.counts.len();
        let k = (((x - self.lo) / self.width()) as usize).min(bins - 1);
        self.counts[k] += 1;
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width()
    }

    /// Normalized density of bin `k`.
    pub fn density(&self, k: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts[k] as f64 / (self.total as f64 * self.width())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coefficient_at_one_percent() {
        assert!((ks_coefficient(0.01) - 1.6276).abs() < 1e-3);
    }

    #[test]
    fn uniform_passes_and_shifted_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).passes(0.01));
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(!ks_one_sample(&sq, |x| x.clamp(0.0, 1.0)).passes(0.01));
        let ys: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&xs, &ys).passes(0.01));
        assert!(!ks_two_sample(&xs, &sq).passes(0.01));
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let xs = [0.1, 0.5, 0.5, 0.9];
        assert_eq!(ks_two_sample(&xs, &xs).statistic, 0.0);
    }

    #[test]
    fn histogram_binning() {
        let h = Histogram::from_samples(&[0.0, 0.1, 0.99, 1.0, 1.5, -0.1], 0.0, 1.0, 4);
        assert_eq!(h.counts, vec![2, 0, 0, 2]);
        assert_eq!(h.outside, 2);
        assert_eq!(h.total, 6);
        assert!((h.center(0) - 0.125).abs() < 1e-15);
    }
}
