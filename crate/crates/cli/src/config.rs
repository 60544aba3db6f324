//! `key=value` pipeline configuration.

use std::fmt;
use std::str::FromStr;

use respdyn_core::edr::{PeakDetector, Polarity};
use respdyn_core::features::PowerSplit;
use respdyn_core::simgen::SimConfig;
use respdyn_core::sst::{Anchor, SstConfig, Threshold};
use thiserror::Error;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "RESPDYN_CONFIG";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` set twice")]
    Duplicate { line: usize, key: String },
    #[error("{origin}: key `{key}` expects {want}, got `{value}`")]
    Value { origin: String, key: String, want: &'static str, value: String },
    #[error("invalid configuration: {0}")]
    Constraint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimKind {
    TwoComponent,
    Tone,
}

/// Every tunable of the pipelines. Defaults: `eta = 4` Hz, lag 45 s,
/// `m = n = 11`, 2000 bins, `lambda = 0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub eta: f64,
    pub dt: f64,
    pub lag: f64,
    pub m: usize,
    pub n: usize,
    pub bins: usize,
    pub lambda: f64,
    pub threshold_mode: ThresholdMode,
    pub threshold: f64,
    pub scale_exponent: f64,
    pub anchor: Anchor,
    pub band_hz: f64,
    pub floor_hz: f64,
    pub harmonics: usize,
    pub order: usize,
    pub polarity: Polarity,
    pub pvc: bool,
    pub pvc_ratio: f64,
    pub refractory: f64,
    pub peak_fraction: f64,
    pub peak_window: f64,
    pub ke0: f64,
    pub shape_harmonics: usize,
    pub seed: u64,
    pub snr: Option<f64>,
    pub sim_kind: SimKind,
    pub sim_dt: f64,
    pub duration: f64,
    pub tone_freq: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let det = PeakDetector::default();
        let split = PowerSplit::<f64>::default();
        PipelineConfig {
            eta: 4.0,
            dt: 0.25,
            lag: 45.0,
            m: 11,
            n: 11,
            bins: 2000,
            lambda: 0.5,
            threshold_mode: ThresholdMode::Relative,
            threshold: 1e-8,
            scale_exponent: -0.5,
            anchor: Anchor::Start,
            band_hz: split.band_hz,
            floor_hz: split.floor_hz,
            harmonics: split.harmonics,
            order: 4,
            polarity: Polarity::R,
            pvc: true,
            pvc_ratio: 0.7,
            refractory: det.refractory_s,
            peak_fraction: det.fraction,
            peak_window: det.window_s,
            ke0: respdyn_core::stats::KE0_PER_MIN,
            shape_harmonics: 2,
            seed: sim.seed,
            snr: sim.snr_db,
            sim_kind: SimKind::TwoComponent,
            sim_dt: sim.dt,
            duration: sim.duration,
            tone_freq: 1.0,
        }
    }
}

/// Keys in canonical order.
pub const KEYS: &[&str] = &[
    "eta",
    "dt",
    "lag",
    "m",
    "n",
    "bins",
    "lambda",
    "threshold_mode",
    "threshold",
    "scale_exponent",
    "anchor",
    "band_hz",
    "floor_hz",
    "harmonics",
    "order",
    "polarity",
    "pvc",
    "pvc_ratio",
    "refractory",
    "peak_fraction",
    "peak_window",
    "ke0",
    "shape_harmonics",
    "seed",
    "snr",
    "sim_kind",
    "sim_dt",
    "duration",
    "tone_freq",
];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn num<T: FromStr>(key: &str, value: &str, want: &'static str) -> Result<T, (String, &'static str)> {
    value.parse().map_err(|_| (key.to_string(), want))
}

impl PipelineConfig {
    /// Sets one key from its text form; `Ok(false)` for an unknown key.
    fn set_raw(&mut self, key: &str, value: &str) -> Result<bool, (String, &'static str)> {
        const REAL: &str = "a number";
        const UINT: &str = "a nonnegative integer";
        match key {
            "eta" => self.eta = num(key, value, REAL)?,
            "dt" => self.dt = num(key, value, REAL)?,
            "lag" => self.lag = num(key, value, REAL)?,
            "m" => self.m = num(key, value, UINT)?,
            "n" => self.n = num(key, value, UINT)?,
            "bins" => self.bins = num(key, value, UINT)?,
            "lambda" => self.lambda = num(key, value, REAL)?,
            "threshold_mode" => {
                self.threshold_mode = match value {
                    "relative" => ThresholdMode::Relative,
                    "absolute" => ThresholdMode::Absolute,
                    _ => return Err((key.into(), "`relative` or `absolute`")),
                }
            }
            "threshold" => self.threshold = num(key, value, REAL)?,
            "scale_exponent" => self.scale_exponent = num(key, value, REAL)?,
            "anchor" => {
                self.anchor = match value {
                    "start" => Anchor::Start,
                    "centre" | "center" => Anchor::Centre,
                    _ => return Err((key.into(), "`start` or `centre`")),
                }
            }
            "band_hz" => self.band_hz = num(key, value, REAL)?,
            "floor_hz" => self.floor_hz = num(key, value, REAL)?,
            "harmonics" => self.harmonics = num(key, value, UINT)?,
            "order" => self.order = num(key, value, UINT)?,
            "polarity" => {
                self.polarity = match value {
                    "R" | "r" => Polarity::R,
                    "S" | "s" => Polarity::S,
                    _ => return Err((key.into(), "`R` or `S`")),
                }
            }
            "pvc" => {
                self.pvc = match value {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err((key.into(), "`on` or `off`")),
                }
            }
            "pvc_ratio" => self.pvc_ratio = num(key, value, REAL)?,
            "refractory" => self.refractory = num(key, value, REAL)?,
            "peak_fraction" => self.peak_fraction = num(key, value, REAL)?,
            "peak_window" => self.peak_window = num(key, value, REAL)?,
            "ke0" => self.ke0 = num(key, value, REAL)?,
            "shape_harmonics" => self.shape_harmonics = num(key, value, UINT)?,
            "seed" => self.seed = num(key, value, UINT)?,
            "snr" => {
                self.snr = match value {
                    "none" => None,
                    v => Some(num(key, v, "a number or `none`")?),
                }
            }
            "sim_kind" => {
                self.sim_kind = match value {
                    "two-component" => SimKind::TwoComponent,
                    "tone" => SimKind::Tone,
                    _ => return Err((key.into(), "`two-component` or `tone`")),
                }
            }
            "sim_dt" => self.sim_dt = num(key, value, REAL)?,
            "duration" => self.duration = num(key, value, REAL)?,
            "tone_freq" => self.tone_freq = num(key, value, REAL)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Sets one key, naming `origin` (a flag, a line) in errors.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        match self.set_raw(key, value) {
            Ok(true) => Ok(()),
            Ok(false) => Err(ConfigError::UnknownKey { line: 0, key: key.to_string() }),
            Err((key, want)) => Err(ConfigError::Value { origin: origin.to_string(), key, want, value: value.to_string() }),
        }
    }

    /// Text form of one key.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "eta" => fmt_f64(self.eta),
            "dt" => fmt_f64(self.dt),
            "lag" => fmt_f64(self.lag),
            "m" => self.m.to_string(),
            "n" => self.n.to_string(),
            "bins" => self.bins.to_string(),
            "lambda" => fmt_f64(self.lambda),
            "threshold_mode" => match self.threshold_mode {
                ThresholdMode::Relative => "relative".into(),
                ThresholdMode::Absolute => "absolute".into(),
            },
            "threshold" => fmt_f64(self.threshold),
            "scale_exponent" => fmt_f64(self.scale_exponent),
            "anchor" => match self.anchor {
                Anchor::Start => "start".into(),
                Anchor::Centre => "centre".into(),
            },
            "band_hz" => fmt_f64(self.band_hz),
            "floor_hz" => fmt_f64(self.floor_hz),
            "harmonics" => self.harmonics.to_string(),
            "order" => self.order.to_string(),
            "polarity" => match self.polarity {
                Polarity::R => "R".into(),
                Polarity::S => "S".into(),
            },
            "pvc" => if self.pvc { "on" } else { "off" }.into(),
            "pvc_ratio" => fmt_f64(self.pvc_ratio),
            "refractory" => fmt_f64(self.refractory),
            "peak_fraction" => fmt_f64(self.peak_fraction),
            "peak_window" => fmt_f64(self.peak_window),
            "ke0" => fmt_f64(self.ke0),
            "shape_harmonics" => self.shape_harmonics.to_string(),
            "seed" => self.seed.to_string(),
            "snr" => self.snr.map_or_else(|| "none".into(), fmt_f64),
            "sim_kind" => match self.sim_kind {
                SimKind::TwoComponent => "two-component".into(),
                SimKind::Tone => "tone".into(),
            },
            "sim_dt" => fmt_f64(self.sim_dt),
            "duration" => fmt_f64(self.duration),
            "tone_freq" => fmt_f64(self.tone_freq),
            _ => return None,
        };
        Some(s)
    }

    /// One `key=value` line per key, in [`KEYS`] order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            out.push_str(key);
            out.push('=');
            out.push_str(&self.get(key).expect("listed key"));
            out.push('\n');
        }
        out
    }

    pub fn sst(&self) -> Result<SstConfig<f64>, ConfigError> {
        let mut cfg = SstConfig::new(self.dt, self.lag, self.m, self.n, self.bins).map_err(|e| ConfigError::Constraint(e.to_string()))?;
        cfg.threshold = match self.threshold_mode {
            ThresholdMode::Relative => Threshold::RelativeRms(self.threshold),
            ThresholdMode::Absolute => Threshold::Absolute(self.threshold),
        };
        cfg.scale_exponent = self.scale_exponent;
        cfg.anchor = self.anchor;
        cfg.validate().map_err(|e| ConfigError::Constraint(e.to_string()))?;
        Ok(cfg)
    }

    pub fn split(&self) -> PowerSplit<f64> {
        PowerSplit { band_hz: self.band_hz, floor_hz: self.floor_hz, harmonics: self.harmonics }
    }

    pub fn detector(&self) -> PeakDetector {
        PeakDetector {
            refractory_s: self.refractory,
            fraction: self.peak_fraction,
            window_s: self.peak_window,
            ..PeakDetector::default()
        }
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig { dt: self.sim_dt, duration: self.duration, snr_db: self.snr, seed: self.seed, ..SimConfig::default() }
    }

    /// Checks every cross-key constraint, including `L > (m+n) dT/2`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |what: &str| Err(ConfigError::Constraint(what.to_string()));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        self.sst()?;
        if !pos(self.eta) {
            return bad("eta must be positive");
        }
        if !nonneg(self.lambda) {
            return bad("lambda must be nonnegative");
        }
        if !nonneg(self.band_hz) || !nonneg(self.floor_hz) {
            return bad("band_hz and floor_hz must be nonnegative");
        }
        if self.harmonics == 0 || self.shape_harmonics == 0 {
            return bad("harmonics and shape_harmonics must be at least 1");
        }
        if self.order < 2 {
            return bad("order must be at least 2");
        }
        if !(0.0..1.0).contains(&self.pvc_ratio) {
            return bad("pvc_ratio must lie in [0, 1)");
        }
        if !pos(self.refractory) || !pos(self.peak_window) || !(self.peak_fraction > 0.0 && self.peak_fraction <= 1.0) {
            return bad("refractory and peak_window must be positive, peak_fraction in (0, 1]");
        }
        if !pos(self.ke0) {
            return bad("ke0 must be positive");
        }
        if !pos(self.sim_dt) || !pos(self.duration) || !pos(self.tone_freq) {
            return bad("sim_dt, duration and tone_freq must be positive");
        }
        if self.snr.is_some_and(|s| !s.is_finite()) {
            return bad("snr must be finite or `none`");
        }
        Ok(())
    }
}

impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Parses `key=value` entries over defaults. Entries are separated by
/// newlines or commas; `#` starts a comment. Unknown and repeated keys are
/// errors, and the result is validated.
pub fn parse_config(text: &str) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = PipelineConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        for entry in body.split(',') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let Some((key, value)) = entry.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: entry.to_string() });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.to_string() });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            seen.push(key.to_string());
            cfg.set(key, value, &format!("line {line}"))?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
