use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// Real trigonometric series on the periodic unit interval:
/// `f(t) = mean + Σ_k cos[k-1]·cos(2πkt) + sin[k-1]·sin(2πkt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSeries {
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn constant(c: f64) -> Self {
        Self {
            mean: c,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn new(mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { mean, cos, sin }
    }

    /// Number of harmonics carried (the longer of the two coefficient lists).
    pub fn modes(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t)[0]
    }

    /// Value, first and second parameter derivatives at `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let mut out = [self.mean, 0.0, 0.0];
        for k in 1..=self.modes() {
            let a = self.cos.get(k - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let w = TAU * k as f64;
            let (s, c) = (w * t).sin_cos();
            out[0] += a * c + b * s;
            out[1] += w * (-a * s + b * c);
            out[2] += -w * w * (a * c + b * s);
        }
        out
    }

    /// Least-squares fit of `modes` harmonics to uniformly spaced samples
    /// `values[j] = f(j/N)` (a truncated discrete Fourier transform).
    pub fn from_samples(values: &[f64], modes: usize) -> Self {
        let n = values.len();
        assert!(n > 2 * modes, "need more than 2·modes samples");
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let mut cos = Vec::with_capacity(modes);
        let mut sin = Vec::with_capacity(modes);
        for k in 1..=modes {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let (s, c) = (TAU * (k * j) as f64 / nf).sin_cos();
                a += v * c;
                b += v * s;
            }
            cos.push(2.0 * a / nf);
            sin.push(2.0 * b / nf);
        }
        Self { mean, cos, sin }
    }

    /// The series of `t ↦ f(t + shift)`.
    pub fn shifted(&self, shift: f64) -> Self {
        let m = self.modes();
        let mut cos = vec![0.0; m];
        let mut sin = vec![0.0; m];
        for k in 1..=m {
            let a = self.cos.get(k - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            let (s, c) = (TAU * k as f64 * shift).sin_cos();
            // a cos(w(t+δ)) + b sin(w(t+δ)) expanded in cos(wt), sin(wt)
            cos[k - 1] = a * c + b * s;
            sin[k - 1] = b * c - a * s;
        }
        Self {
            mean: self.mean,
            cos,
            sin,
        }
    }

    /// The series of `t ↦ f(-t)`.
    pub fn reversed(&self) -> Self {
        Self {
            mean: self.mean,
            cos: self.cos.clone(),
            sin: self.sin.iter().map(|b| -b).collect(),
        }
    }

    /// Coefficients flattened as `[mean, cos_1, sin_1, cos_2, sin_2, ...]`
    /// with exactly `modes` harmonics.
    pub fn to_vector(&self, modes: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * modes + 1);
        v.push(self.mean);
        for k in 0..modes {
            v.push(self.cos.get(k).copied().unwrap_or(0.0));
            v.push(self.sin.get(k).copied().unwrap_or(0.0));
        }
        v
    }

    pub fn from_vector(v: &[f64]) -> Self {
        assert!(v.len() % 2 == 1, "coefficient vector must have odd length");
        let modes = v.len() / 2;
        Self {
            mean: v[0],
            cos: (0..modes).map(|k| v[1 + 2 * k]).collect(),
            sin: (0..modes).map(|k| v[2 + 2 * k]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let f = FourierSeries::new(0.3, vec![0.5, -0.1, 0.02], vec![0.0, 0.2]);
        let h = 1e-5;
        for &t in &[0.0, 0.13, 0.5, 0.91] {
            let [_, d1, d2] = f.eval(t);
            let fd1 = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
            let fd2 = (f.eval(t + h)[1] - f.eval(t - h)[1]) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()));
            assert!((d2 - fd2).abs() < 1e-5 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn sample_fit_is_exact_for_band_limited() {
        let f = FourierSeries::new(1.0, vec![0.25, 0.0, 0.1], vec![-0.3, 0.05, 0.0]);
        let samples: Vec<f64> = (0..64).map(|j| f.value(j as f64 / 64.0)).collect();
        let g = FourierSeries::from_samples(&samples, 3);
        for (a, b) in f.to_vector(3).iter().zip(g.to_vector(3)) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn shift_and_reverse() {
        let f = FourierSeries::new(0.1, vec![0.4, 0.2], vec![0.3, -0.1]);
        let g = f.shifted(0.137);
        let r = f.reversed();
        for &t in &[0.0, 0.2, 0.77] {
            assert!((g.value(t) - f.value(t + 0.137)).abs() < 1e-14);
            assert!((r.value(t) - f.value(-t)).abs() < 1e-14);
        }
    }

    #[test]
    fn vector_round_trip() {
        let f = FourierSeries::new(0.1, vec![0.4, 0.2], vec![0.3, -0.1]);
        assert_eq!(FourierSeries::from_vector(&f.to_vector(2)), f);
    }
}
