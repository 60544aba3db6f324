//! Synthetic multi-component signals with smoothed-Brownian frequency and
//! amplitude modulation, a trend and white noise at a target SNR.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::stats::sample_std;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("need at least 2 samples")]
    TooShort,
    #[error("sample period and smoothing width must be positive")]
    NonPositive,
    #[error("series lengths differ")]
    Length,
    #[error("oscillatory part has zero variance")]
    ZeroVariance,
    #[error("target SNR must be finite")]
    Snr,
}

/// Brownian path (`N(0, dt)` increments) convolved with a Gaussian of
/// standard deviation `sigma` seconds, truncated at `4 sigma` and
/// renormalized where it overhangs the ends.
pub fn smoothed_brownian(len: usize, dt: f64, sigma: f64, seed: u64) -> Result<Vec<f64>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    smoothed_brownian_with(len, dt, sigma, &mut rng)
}

fn smoothed_brownian_with(len: usize, dt: f64, sigma: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, SimError> {
    if len < 2 {
        return Err(SimError::TooShort);
    }
    if !(dt > 0.0) || !(sigma > 0.0) {
        return Err(SimError::NonPositive);
    }
    let step = Normal::new(0.0, dt.sqrt()).expect("positive variance");
    let mut w = Vec::with_capacity(len);
    let mut acc = 0.0;
    for _ in 0..len {
        acc += step.sample(rng);
        w.push(acc);
    }
    let s = sigma / dt;
    let reach = (4.0 * s).ceil() as usize;
    let kernel: Vec<f64> = (0..=reach).map(|k| (-0.5 * (k as f64 / s).powi(2)).exp()).collect();
    Ok((0..len)
        .map(|i| {
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(len - 1);
            let (mut num, mut den) = (0.0, 0.0);
            for (j, wj) in w.iter().enumerate().take(hi + 1).skip(lo) {
                let k = kernel[i.abs_diff(j)];
                num += k * wj;
                den += k;
            }
            num / den
        })
        .collect())
}

/// `2 (x + 2A) / (max x + 2A)`, `A = max |x|`, in `[2/3, 2]`; an identically
/// zero input gives `4/3`.
pub fn normalized_rate(x: &[f64]) -> Vec<f64> {
    let big = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if big == 0.0 {
        return vec![4.0 / 3.0; x.len()];
    }
    let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    x.iter().map(|v| 2.0 * (v + 2.0 * big) / (top + 2.0 * big)).collect()
}

/// Phase `phi(K dt) = dt sum_{l <= K} scale * rate_l` and the instantaneous
/// frequency `scale * rate` in Hz.
pub fn phase_from(x: &[f64], dt: f64, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let inst: Vec<f64> = normalized_rate(x).into_iter().map(|r| r * scale).collect();
    let mut acc = 0.0;
    let phase = inst
        .iter()
        .map(|f| {
            acc += dt * f;
            acc
        })
        .collect();
    (phase, inst)
}

/// Pointwise normalized amplitude in `[2/3, 2]`.
pub fn amplitude_from(x: &[f64]) -> Vec<f64> {
    normalized_rate(x)
}

/// Cumulative normalized path with its mean removed.
pub fn trend_from(x: &[f64], dt: f64) -> Vec<f64> {
    let (path, _) = phase_from(x, dt, 1.0);
    let mean = path.iter().sum::<f64>() / path.len() as f64;
    path.into_iter().map(|v| v - mean).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    /// Ground-truth instantaneous frequency, Hz.
    pub inst_freq: Vec<f64>,
    pub active: Vec<bool>,
}

impl Component {
    /// `A cos(2 pi phi)` where active, else 0.
    pub fn samples(&self) -> Vec<f64> {
        self.amplitude
            .iter()
            .zip(&self.phase)
            .zip(&self.active)
            .map(|((a, p), on)| if *on { a * (2.0 * std::f64::consts::PI * p).cos() } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSignal {
    pub dt: f64,
    pub components: Vec<Component>,
    pub trend: Vec<f64>,
    pub noise: Vec<f64>,
    pub y: Vec<f64>,
}

impl SyntheticSignal {
    pub fn times(&self) -> Vec<f64> {
        (0..self.trend.len()).map(|l| (l + 1) as f64 * self.dt).collect()
    }

    /// Sum of the masked components.
    pub fn clean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.trend.len()];
        for c in &self.components {
            for (o, v) in out.iter_mut().zip(c.samples()) {
                *o += v;
            }
        }
        out
    }
}

/// `Y = sum of masked components + trend + noise`, with white Gaussian noise
/// scaled so that `20 log10(std(components)/std(noise))` equals the target.
pub fn compose(
    dt: f64,
    components: Vec<Component>,
    trend: Vec<f64>,
    noise_seed: u64,
    target_snr_db: Option<f64>,
) -> Result<SyntheticSignal, SimError> {
    let len = trend.len();
    if len < 2 {
        return Err(SimError::TooShort);
    }
    for c in &components {
        if c.amplitude.len() != len || c.phase.len() != len || c.active.len() != len || c.inst_freq.len() != len {
            return Err(SimError::Length);
        }
    }
    let mut sig = SyntheticSignal { dt, components, trend, noise: vec![0.0; len], y: Vec::new() };
    let clean = sig.clean();
    if let Some(snr) = target_snr_db {
        if !snr.is_finite() {
            return Err(SimError::Snr);
        }
        let s = sample_std(&clean);
        if !(s > 0.0) {
            return Err(SimError::ZeroVariance);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let unit = Normal::new(0.0, 1.0).expect("unit variance");
        let raw: Vec<f64> = (0..len).map(|_| unit.sample(&mut rng)).collect();
        let scale = s / (sample_std(&raw) * 10f64.powf(snr / 20.0));
        sig.noise = raw.into_iter().map(|v| v * scale).collect();
    }
    sig.y = clean.iter().zip(&sig.trend).zip(&sig.noise).map(|((c, t), n)| c + t + n).collect();
    Ok(sig)
}

/// Two-component layout with a trend.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub sigma_if: f64,
    pub sigma_am: f64,
    pub sigma_trend: f64,
    /// Frequency scale of each component's normalized rate (Hz).
    pub freq_scales: [f64; 2],
    /// Component 1 is active up to this time.
    pub first_end: f64,
    /// Component 2 is active from this time.
    pub second_start: f64,
    pub trend: bool,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1.0 / 32.0,
            duration: 30.0,
            sigma_if: 2.0,
            sigma_am: 3.0,
            sigma_trend: 3.0,
            freq_scales: [1.0, 3.5],
            first_end: 18.75,
            second_start: 6.25,
            trend: true,
            snr_db: Some(5.0),
            seed: 1,
        }
    }
}

/// Generates the two-component example; sample `l` (1-based) sits at `l dt`.
pub fn two_component(cfg: &SimConfig) -> Result<SyntheticSignal, SimError> {
    if !(cfg.dt > 0.0) || !(cfg.duration > 0.0) {
        return Err(SimError::NonPositive);
    }
    let len = (cfg.duration / cfg.dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut comps = Vec::with_capacity(2);
    for (c, scale) in cfg.freq_scales.iter().enumerate() {
        let phi = smoothed_brownian_with(len, cfg.dt, cfg.sigma_if, &mut rng)?;
        let amp = smoothed_brownian_with(len, cfg.dt, cfg.sigma_am, &mut rng)?;
        let (phase, inst_freq) = phase_from(&phi, cfg.dt, *scale);
        let active = (1..=len)
            .map(|l| {
                let l = l as f64;
                if c == 0 {
                    l <= cfg.first_end / cfg.dt
                } else {
                    l >= cfg.second_start / cfg.dt
                }
            })
            .collect();
        comps.push(Component { amplitude: amplitude_from(&amp), phase, inst_freq, active });
    }
    let trend = if cfg.trend {
        trend_from(&smoothed_brownian_with(len, cfg.dt, cfg.sigma_trend, &mut rng)?, cfg.dt)
    } else {
        vec![0.0; len]
    };
    compose(cfg.dt, comps, trend, cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15), cfg.snr_db)
}

/// Unit-amplitude tone at `freq` Hz over the `cfg` grid, no trend; noise
/// and seed as in [`two_component`].
pub fn tone(cfg: &SimConfig, freq: f64) -> Result<SyntheticSignal, SimError> {
    if !(cfg.dt > 0.0) || !(cfg.duration > 0.0) || !(freq > 0.0) {
        return Err(SimError::NonPositive);
    }
    let len = (cfg.duration / cfg.dt).round() as usize;
    let phase = (1..=len).map(|l| freq * l as f64 * cfg.dt).collect();
    let comp = Component { amplitude: vec![1.0; len], phase, inst_freq: vec![freq; len], active: vec![true; len] };
    compose(cfg.dt, vec![comp], vec![0.0; len], cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15), cfg.snr_db)
}
