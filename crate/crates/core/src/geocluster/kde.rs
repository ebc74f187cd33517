use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    /// `0.9 · min(σ, IQR/1.34) · n^(-1/5)`, falling back to σ when the IQR
    /// is zero.
    #[default]
    Silverman,
    Fixed(f64),
}

/// Gaussian kernel density estimate over one-dimensional samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    samples: Vec<f64>,
    bandwidth: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    // linear interpolation between order statistics
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

impl Kde {
    pub fn new(samples: &[f64], bandwidth: Bandwidth) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "KDE needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("KDE samples must be finite".into()));
        }
        let first = samples[0];
        if samples.iter().all(|&x| x == first) {
            return Err(Error::InsufficientData(
                "KDE samples have zero variance".into(),
            ));
        }
        let h = match bandwidth {
            Bandwidth::Silverman => silverman_bandwidth(samples),
            Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
            Bandwidth::Fixed(h) => {
                return Err(Error::InvalidArgument(format!(
                    "bandwidth must be positive, got {h}"
                )))
            }
        };
        Ok(Kde {
            samples: samples.to_vec(),
            bandwidth: h,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / (self.samples.len() as f64 * h * (2.0 * PI).sqrt());
        norm * self
            .samples
            .iter()
            .map(|&s| {
                let z = (x - s) / h;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
    }

    /// Evaluation range: sample range padded by four bandwidths each side.
    pub fn support(&self) -> (f64, f64) {
        let lo = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (lo - 4.0 * self.bandwidth, hi + 4.0 * self.bandwidth)
    }

    /// Density on `points` evenly spaced points across [`Kde::support`].
    pub fn grid(&self, points: usize) -> DensityCurve {
        let (lo, hi) = self.support();
        let points = points.max(2);
        let step = (hi - lo) / (points - 1) as f64;
        let x: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
        let density = x.iter().map(|&v| self.density(v)).collect();
        DensityCurve { x, density }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityCurve {
    /// Trapezoid-rule integral.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum()
    }
}
