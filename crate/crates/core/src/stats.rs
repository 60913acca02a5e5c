//! Monte Carlo estimates and the small amount of statistics they need.

use std::fmt;

use serde::{Deserialize, Serialize};

/// z-score of a two-sided 95% normal interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A Monte Carlo estimate with a 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub ci_half_width: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn exact(value: f64, n_samples: usize, seed: u64) -> Self {
        McEstimate {
            value,
            ci_half_width: 0.0,
            n_samples,
            seed,
        }
    }

    /// Standard error implied by the half-width.
    pub fn se(&self) -> f64 {
        self.ci_half_width / Z95
    }

    pub fn scale(&self, s: f64) -> Self {
        McEstimate {
            value: self.value * s,
            ci_half_width: self.ci_half_width * s.abs(),
            ..*self
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.value - v).abs() <= self.ci_half_width
    }
}

impl fmt::Display for McEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} +/- {:.6} (n={})", self.value, self.ci_half_width, self.n_samples)
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Sum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = Sum::default();
    for v in values {
        s.add(v);
    }
    s.value()
}

/// First and second moment accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub n: usize,
    s1: Sum,
    s2: Sum,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.s1.add(v);
        self.s2.add(v * v);
    }

    pub fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.s1.merge(&o.s1);
        self.s2.merge(&o.s2);
    }

    pub fn mean(&self) -> f64 {
        self.s1.value() / self.n as f64
    }

    /// Sample variance (divisor `n - 1`).
    pub fn var(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.mean();
        ((self.s2.value() - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn estimate(&self, seed: u64) -> McEstimate {
        McEstimate {
            value: self.mean(),
            ci_half_width: Z95 * (self.var() / self.n as f64).sqrt(),
            n_samples: self.n,
            seed,
        }
    }
}

/// Mean with a normal-theory interval.
pub fn mean_estimate(values: &[f64], seed: u64) -> McEstimate {
    let m = sum(values.iter().copied()) / values.len() as f64;
    let var = if values.len() > 1 {
        sum(values.iter().map(|v| (v - m) * (v - m))) / (values.len() - 1) as f64
    } else {
        0.0
    };
    McEstimate {
        value: m,
        ci_half_width: Z95 * (var / values.len() as f64).sqrt(),
        n_samples: values.len(),
        seed,
    }
}

/// Linear-interpolated empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Ordinary least squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = sum(x.iter().copied()) / n;
    let my = sum(y.iter().copied()) / n;
    let sxy = sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = sum(x.iter().map(|a| (a - mx) * (a - mx)));
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1e16, 1.0, -1e16];
        v.extend(std::iter::repeat(1e-3).take(1000));
        assert!((sum(v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn moments_merge_like_single_pass() {
        let data: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut a = Moments::default();
        data.iter().for_each(|v| a.push(*v));
        let mut b = Moments::default();
        let mut c = Moments::default();
        data[..37].iter().for_each(|v| b.push(*v));
        data[37..].iter().for_each(|v| c.push(*v));
        b.merge(&c);
        assert!((a.mean() - b.mean()).abs() < 1e-15);
        assert!((a.var() - b.var()).abs() < 1e-14);
        let m = mean_estimate(&data, 0);
        assert!((m.value - a.mean()).abs() < 1e-15);
    }

    #[test]
    fn quantiles_and_slope() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&s, 0.5), 1.5);
        assert_eq!(quantile_sorted(&s, 1.0), 3.0);
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, -1.0, -3.0];
        assert!((ols_slope(&x, &y) + 2.0).abs() < 1e-15);
    }
}
