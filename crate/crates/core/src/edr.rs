//! ECG-derived respiration: baseline removal, R/S peak detection, PVC
//! exclusion and blending interpolation of peak amplitudes.

use thiserror::Error;

use crate::blending::{BlendError, BlendingModel, StreamState};
use crate::splines::SplineCurve;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdrError {
    #[error("sampling rate {0} Hz must exceed 100 Hz")]
    SamplingRate(f64),
    #[error("record of {got} samples is shorter than the {window}-sample median window")]
    TooShort { got: usize, window: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("refractory period must be positive")]
    Refractory,
    #[error("prematurity ratio must be in [0, 1)")]
    Ratio,
    #[error("resampling rate must be positive")]
    Rate,
    #[error(transparent)]
    Blend(#[from] BlendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Positive R waves (Rs pattern).
    R,
    /// Negative S waves (rS pattern).
    S,
}

impl Polarity {
    fn sign(self) -> f64 {
        match self {
            Polarity::R => 1.0,
            Polarity::S => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::R => Polarity::S,
            Polarity::S => Polarity::R,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub fs: f64,
    pub start: f64,
    pub samples: Vec<f64>,
    pub lead: String,
}

impl EcgRecord {
    pub fn new(fs: f64, samples: Vec<f64>) -> Result<Self, EdrError> {
        let r = EcgRecord { fs, start: 0.0, samples, lead: "II".to_string() };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<(), EdrError> {
        if !(self.fs > 100.0) || !self.fs.is_finite() {
            return Err(EdrError::SamplingRate(self.fs));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(EdrError::NonFinite(i));
        }
        Ok(())
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 / self.fs
    }
}

/// Odd sample count covering `seconds` at `fs`.
fn odd_window(fs: f64, seconds: f64) -> usize {
    2 * ((seconds * fs / 2.0).floor() as usize) + 1
}

fn median_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn insert_sorted(s: &mut Vec<f64>, v: f64) {
    let i = s.partition_point(|x| *x < v);
    s.insert(i, v);
}

fn remove_sorted(s: &mut Vec<f64>, v: f64) {
    let i = s.partition_point(|x| *x < v);
    s.remove(i);
}

/// Running median over a centred window of `width` samples (odd); the
/// window shrinks at the edges.
pub fn running_median(x: &[f64], width: usize) -> Vec<f64> {
    let h = width / 2;
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut win: Vec<f64> = Vec::with_capacity(width);
    let (mut lo, mut hi) = (0usize, 0usize); // window is x[lo..hi]
    for i in 0..n {
        let want_lo = i.saturating_sub(h);
        let want_hi = (i + h + 1).min(n);
        while hi < want_hi {
            insert_sorted(&mut win, x[hi]);
            hi += 1;
        }
        while lo < want_lo {
            remove_sorted(&mut win, x[lo]);
            lo += 1;
        }
        out.push(median_sorted(&win));
    }
    out
}

/// `x - running median` over a centred 100 ms window.
pub fn remove_baseline(ecg: &EcgRecord) -> Result<EcgRecord, EdrError> {
    ecg.validate()?;
    let width = odd_window(ecg.fs, 0.1);
    if ecg.samples.len() < width {
        return Err(EdrError::TooShort { got: ecg.samples.len(), window: width });
    }
    let med = running_median(&ecg.samples, width);
    let samples = ecg.samples.iter().zip(&med).map(|(x, m)| x - m).collect();
    Ok(EcgRecord { samples, ..ecg.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakList {
    pub times: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub polarity: Polarity,
}

impl PeakList {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let pos = q * (s.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < s.len() {
        s[i] + f * (s[i + 1] - s[i])
    } else {
        s[i]
    }
}

/// Detector settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakDetector {
    pub refractory_s: f64,
    /// Threshold as a fraction of the local 95th percentile.
    pub fraction: f64,
    pub percentile: f64,
    /// Centred window for the percentile, seconds.
    pub window_s: f64,
    /// Threshold update interval, seconds.
    pub block_s: f64,
}

impl Default for PeakDetector {
    fn default() -> Self {
        PeakDetector { refractory_s: 0.25, fraction: 0.5, percentile: 0.95, window_s: 2.0, block_s: 0.1 }
    }
}

/// Local maxima of the polarity-signed signal above an adaptive threshold,
/// at least `refractory` apart (the larger of two close candidates wins).
/// Amplitudes are the signal values at the extrema.
pub fn detect_peaks(ecg: &EcgRecord, polarity: Polarity, cfg: &PeakDetector) -> Result<PeakList, EdrError> {
    ecg.validate()?;
    if !(cfg.refractory_s > 0.0) {
        return Err(EdrError::Refractory);
    }
    let sign = polarity.sign();
    let s: Vec<f64> = ecg.samples.iter().map(|v| sign * v).collect();
    let n = s.len();
    let block = ((cfg.block_s * ecg.fs).round() as usize).max(1);
    let half = (cfg.window_s * ecg.fs / 2.0).round() as usize;
    let blocks = n.div_ceil(block);
    let thresholds: Vec<f64> = (0..blocks)
        .map(|b| {
            let centre = b * block + block / 2;
            let lo = centre.saturating_sub(half);
            let hi = (centre + half + 1).min(n);
            let mut w: Vec<f64> = s[lo..hi].iter().map(|v| v.max(0.0)).collect();
            w.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cfg.fraction * quantile_sorted(&w, cfg.percentile)
        })
        .collect();
    let refractory = (cfg.refractory_s * ecg.fs).round() as usize;
    let mut kept: Vec<usize> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let v = s[i];
        if !(v > s[i - 1] && v >= s[i + 1] && v > 0.0 && v > thresholds[i / block]) {
            continue;
        }
        match kept.last() {
            Some(&j) if i - j < refractory => {
                if v > s[j] {
                    *kept.last_mut().expect("nonempty") = i;
                }
            }
            _ => kept.push(i),
        }
    }
    Ok(PeakList {
        times: kept.iter().map(|&i| ecg.time(i)).collect(),
        amplitudes: kept.iter().map(|&i| ecg.samples[i]).collect(),
        polarity,
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    median_sorted(&s)
}

/// Drops beats whose interval from the last kept beat is below
/// `ratio` times the running median of the last 8 accepted intervals.
/// The interval following a dropped beat does not update the median.
/// `ratio = 0` disables the rule.
pub fn exclude_pvc(peaks: &PeakList, ratio: f64) -> Result<PeakList, EdrError> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(EdrError::Ratio);
    }
    let n = peaks.len();
    if ratio == 0.0 || n < 3 {
        return Ok(peaks.clone());
    }
    const HISTORY: usize = 8;
    let raw: Vec<f64> = peaks.times.windows(2).map(|w| w[1] - w[0]).take(HISTORY).collect();
    let mut history: Vec<f64> = raw.clone();
    let mut med = median(&history);
    let mut keep = vec![0usize];
    let mut after_pvc = false;
    for i in 1..n {
        let last = *keep.last().expect("first beat kept");
        let rr = peaks.times[i] - peaks.times[last];
        if rr < ratio * med {
            after_pvc = true;
            continue;
        }
        keep.push(i);
        if !after_pvc {
            if history.len() == HISTORY {
                history.remove(0);
            }
            history.push(rr);
            med = median(&history);
        }
        after_pvc = false;
    }
    Ok(PeakList {
        times: keep.iter().map(|&i| peaks.times[i]).collect(),
        amplitudes: keep.iter().map(|&i| peaks.amplitudes[i]).collect(),
        polarity: peaks.polarity,
    })
}

/// Uniformly resampled respiratory waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct EdrWaveform {
    pub start: f64,
    pub eta: f64,
    pub values: Vec<f64>,
    pub curve: SplineCurve<f64>,
}

impl EdrWaveform {
    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| grid_time(self.start, self.eta, k)).collect()
    }

    /// The interpolating curve at any time in its span.
    pub fn eval(&self, t: f64) -> f64 {
        self.curve.eval(t)
    }
}

fn grid_time(start: f64, eta: f64, k: usize) -> f64 {
    start + k as f64 / eta
}

/// Blending interpolation of the peak amplitudes, sampled at `eta` Hz from
/// the first peak time through the last.
pub fn build_edr(peaks: &PeakList, m: usize, eta: f64) -> Result<EdrWaveform, EdrError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(EdrError::Rate);
    }
    let model = BlendingModel::new(&peaks.times, m)?;
    let curve = model.apply(&peaks.amplitudes)?;
    let start = peaks.times[0];
    let end = *peaks.times.last().expect("validated by the model");
    let mut values = Vec::new();
    let mut k = 0;
    loop {
        let t = grid_time(start, eta, k);
        if t > end {
            break;
        }
        values.push(curve.eval(t));
        k += 1;
    }
    Ok(EdrWaveform { start, eta, values, curve })
}

/// Streaming EDR: each peak commits blending coefficients and releases the
/// grid samples they determine.
#[derive(Debug, Clone)]
pub struct EdrStream {
    state: StreamState<f64>,
    eta: f64,
    start: Option<f64>,
    next: usize,
}

impl EdrStream {
    pub fn new(m: usize, eta: f64) -> Result<Self, EdrError> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(EdrError::Rate);
        }
        Ok(EdrStream { state: StreamState::new(m)?, eta, start: None, next: 0 })
    }

    /// Feeds one peak and returns the newly final `(time, value)` samples.
    pub fn push(&mut self, time: f64, amplitude: f64) -> Result<Vec<(f64, f64)>, EdrError> {
        self.state.push(time, amplitude)?;
        let start = *self.start.get_or_insert(time);
        let mut out = Vec::new();
        loop {
            let t = grid_time(start, self.eta, self.next);
            match self.state.eval_committed(t) {
                Some(v) if Some(t) < self.state.committed_until() => {
                    out.push((t, v));
                    self.next += 1;
                }
                _ => break,
            }
        }
        Ok(out)
    }

    /// Flushes the samples that depend on the right end.
    pub fn finish(self) -> Result<Vec<(f64, f64)>, EdrError> {
        let start = self.start.unwrap_or(0.0);
        let (_, curve) = self.state.finish()?;
        let end = curve.knots().last();
        let mut out = Vec::new();
        let mut k = self.next;
        loop {
            let t = grid_time(start, self.eta, k);
            if t > end {
                break;
            }
            out.push((t, curve.eval(t)));
            k += 1;
        }
        Ok(out)
    }
}
