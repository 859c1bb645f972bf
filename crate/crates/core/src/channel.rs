//! Wireless link model: fading draws, Shannon rate, per-task transmission time
//! and Monte Carlo transmission-time statistics.
//!
//! Channels are block fading: one gain draw per task, independent across
//! tasks. The planner only ever sees statistics of the gain distribution.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{ChannelSpec, DeviceSpec};
use crate::seed::{self, StreamRng};

/// Default Monte Carlo sample count for transmission-time statistics.
pub const DEFAULT_SAMPLES: usize = 100_000;

/// Consecutive zero-rate draws tolerated before giving up on a link.
const MAX_CONSECUTIVE_RESAMPLES: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("zero transmission rate: task cannot be transmitted on this draw")]
    ZeroRate,
    #[error("link never produced a positive rate in {0} consecutive draws")]
    Degenerate(u64),
    #[error("too few Monte Carlo samples: {0} (need at least 100)")]
    TooFewSamples(usize),
}

/// Whether the Rayleigh parameter describes the amplitude (power is its
/// square) or the power gain itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayleighConvention {
    #[default]
    Amplitude,
    Power,
}

/// How the Rayleigh and log-normal components combine into one power gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// Independent Rayleigh and log-normal draws multiplied together.
    Product,
    /// Rayleigh draw with probability `weight`, log-normal otherwise.
    Mixture { weight: f64 },
}

/// Distribution of the linear power gain of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FadingModel {
    Composite {
        rayleigh_scale: f64,
        lognormal_location: f64,
        lognormal_scale: f64,
        composition: Composition,
        #[serde(default)]
        rayleigh: RayleighConvention,
    },
    /// Degenerate channel with a fixed gain.
    Constant { gain: f64 },
}

impl FadingModel {
    pub fn product(rayleigh_scale: f64, lognormal_location: f64, lognormal_scale: f64) -> Self {
        FadingModel::Composite {
            rayleigh_scale,
            lognormal_location,
            lognormal_scale,
            composition: Composition::Product,
            rayleigh: RayleighConvention::Amplitude,
        }
    }

    /// Every violated parameter constraint, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match *self {
            FadingModel::Composite {
                rayleigh_scale,
                lognormal_location,
                lognormal_scale,
                composition,
                ..
            } => {
                if !(rayleigh_scale > 0.0 && rayleigh_scale.is_finite()) {
                    out.push(format!("rayleigh_scale must be positive, got {rayleigh_scale}"));
                }
                if !lognormal_location.is_finite() {
                    out.push(format!("lognormal_location must be finite, got {lognormal_location}"));
                }
                if !(lognormal_scale > 0.0 && lognormal_scale.is_finite()) {
                    out.push(format!("lognormal_scale must be positive, got {lognormal_scale}"));
                }
                if let Composition::Mixture { weight } = composition {
                    if !(0.0..=1.0).contains(&weight) {
                        out.push(format!("mixture weight must lie in [0,1], got {weight}"));
                    }
                }
            }
            FadingModel::Constant { gain } => {
                if !(gain > 0.0 && gain.is_finite()) {
                    out.push(format!("constant gain must be positive, got {gain}"));
                }
            }
        }
        out
    }

    /// Analytic mean of the power gain.
    pub fn mean_gain(&self) -> f64 {
        match *self {
            FadingModel::Composite {
                rayleigh_scale,
                lognormal_location,
                lognormal_scale,
                composition,
                rayleigh,
            } => {
                let ray = match rayleigh {
                    RayleighConvention::Amplitude => 2.0 * rayleigh_scale * rayleigh_scale,
                    RayleighConvention::Power => {
                        rayleigh_scale * (std::f64::consts::PI / 2.0).sqrt()
                    }
                };
                let ln = (lognormal_location + 0.5 * lognormal_scale * lognormal_scale).exp();
                match composition {
                    Composition::Product => ray * ln,
                    Composition::Mixture { weight } => weight * ray + (1.0 - weight) * ln,
                }
            }
            FadingModel::Constant { gain } => gain,
        }
    }
}

fn rayleigh_power<R: Rng + ?Sized>(scale: f64, convention: RayleighConvention, rng: &mut R) -> f64 {
    // Rayleigh amplitude squared is exponential with mean 2σ².
    let e: f64 = Exp1.sample(rng);
    match convention {
        RayleighConvention::Amplitude => 2.0 * scale * scale * e,
        RayleighConvention::Power => scale * (2.0 * e).sqrt(),
    }
}

fn lognormal<R: Rng + ?Sized>(location: f64, scale: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (location + scale * z).exp()
}

/// One independent power-gain draw.
pub fn sample_gain<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> f64 {
    match *model {
        FadingModel::Composite {
            rayleigh_scale,
            lognormal_location,
            lognormal_scale,
            composition,
            rayleigh,
        } => match composition {
            Composition::Product => {
                rayleigh_power(rayleigh_scale, rayleigh, rng)
                    * lognormal(lognormal_location, lognormal_scale, rng)
            }
            Composition::Mixture { weight } => {
                if rng.random::<f64>() < weight {
                    rayleigh_power(rayleigh_scale, rayleigh, rng)
                } else {
                    lognormal(lognormal_location, lognormal_scale, rng)
                }
            }
        },
        FadingModel::Constant { gain } => gain,
    }
}

/// Shannon rate `B·log2(1 + g·p/(N0·Φ))` in bits/second.
pub fn transmission_rate(gain: f64, tx_power: f64, bandwidth: f64, noise_power: f64, path_loss: f64) -> f64 {
    let snr = gain * tx_power / (noise_power * path_loss);
    bandwidth * snr.ln_1p() / std::f64::consts::LN_2
}

/// Time to push `data_bits` through a link running at `rate`.
pub fn transmission_time(data_bits: f64, rate: f64) -> Result<f64, ChannelError> {
    if rate > 0.0 {
        Ok(data_bits / rate)
    } else {
        Err(ChannelError::ZeroRate)
    }
}

/// Draws one per-task transmission time, resampling zero-rate draws.
///
/// Returns the time and the number of discarded draws.
pub fn sample_tx_time<R: Rng + ?Sized>(
    device: &DeviceSpec,
    link: &ChannelSpec,
    rng: &mut R,
) -> Result<(f64, u64), ChannelError> {
    let mut resampled = 0;
    loop {
        let g = sample_gain(&link.fading, rng);
        let rate = transmission_rate(g, device.tx_power, link.bandwidth, link.noise_power, link.path_loss);
        match transmission_time(device.data_size, rate) {
            Ok(t) if t.is_finite() => return Ok((t, resampled)),
            _ => {
                resampled += 1;
                if resampled >= MAX_CONSECUTIVE_RESAMPLES {
                    return Err(ChannelError::Degenerate(resampled));
                }
            }
        }
    }
}

/// Monte Carlo moments of the per-task transmission time on one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxTimeStats {
    /// E[tᴰ] in seconds.
    pub mean: f64,
    /// Bessel-corrected variance in seconds².
    pub variance: f64,
    pub sample_count: usize,
    /// Draws discarded because the rate came out zero.
    pub zero_rate_resamples: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<Vec<f64>>,
}

impl TxTimeStats {
    /// Service rate of the device queue, `1/E[tᴰ]`.
    pub fn service_rate(&self) -> f64 {
        1.0 / self.mean
    }

    /// Squared coefficient of variation `V/E[tᴰ]²`.
    pub fn scv(&self) -> f64 {
        self.variance / (self.mean * self.mean)
    }
}

/// Estimates transmission-time mean and variance from `samples` independent
/// gain draws seeded by `seed`. Deterministic in `(device, link, samples, seed)`.
pub fn estimate_tx_stats(
    device: &DeviceSpec,
    link: &ChannelSpec,
    samples: usize,
    seed: u64,
    retain: bool,
) -> Result<TxTimeStats, ChannelError> {
    if samples < 100 {
        return Err(ChannelError::TooFewSamples(samples));
    }
    let mut rng: StreamRng = seed::stream(seed, &[seed::tag::CHANNEL_STATS]);
    let mut kept = retain.then(|| Vec::with_capacity(samples));
    let (mut mean, mut m2) = (0.0_f64, 0.0_f64);
    let mut zero_rate_resamples = 0;
    for k in 0..samples {
        let (t, skipped) = sample_tx_time(device, link, &mut rng)?;
        zero_rate_resamples += skipped;
        // Welford keeps a constant sample set at exactly zero variance.
        let delta = t - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (t - mean);
        if let Some(v) = kept.as_mut() {
            v.push(t);
        }
    }
    Ok(TxTimeStats {
        mean,
        variance: m2 / (samples - 1) as f64,
        sample_count: samples,
        zero_rate_resamples,
        samples: kept,
    })
}
