//! Streaming synchrosqueezed transform with vanishing-moment analytic
//! wavelets.

use std::collections::VecDeque;
use std::sync::Arc;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;
use crate::vmwav::{AnalyticVm, VmError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SstError {
    #[error("sample period and lag must be positive and finite")]
    NonPositive,
    #[error("lag {lag} s must exceed (m+n)dT/2 = {min} s")]
    LagTooShort { lag: f64, min: f64 },
    #[error("window length {window} must exceed m+n = {order}")]
    WindowTooShort { window: usize, order: usize },
    #[error("need m >= 3 so the derivative wavelet has a finite Hilbert transform (got m={m})")]
    Order { m: usize },
    #[error("need at least one frequency bin")]
    NoBins,
    #[error("empty frequency range: 1/(2L) >= 1/(2dT)")]
    EmptyRange,
    #[error("threshold must be finite and nonnegative")]
    Threshold,
    #[error("window has {got} samples, expected {want}")]
    Length { got: usize, want: usize },
    #[error("wavelets do not match the configured orders")]
    WaveletMismatch,
    #[error(transparent)]
    Wavelet(#[from] VmError),
}

/// Rows with `|W| <= Gamma` are excluded from squeezing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold<T> {
    Absolute(T),
    /// `Gamma = factor * RMS(window)`.
    RelativeRms(T),
}

/// Placement of each row's wavelet inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Anchor {
    /// Row `i` starts at column `i`: `u = (m+n)(l-i)/(N-i+1)`. The compact
    /// part of row `i` covers columns `i..=N+1` and is centred at
    /// `(N+i+1)/2`, not at the frame label.
    #[default]
    Start,
    /// Row `i` is shifted so the centre of its compact part sits at column
    /// `M`, the frame label.
    Centre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SstConfig<T> {
    pub dt: T,
    pub lag: T,
    pub m: usize,
    pub n: usize,
    pub bins: usize,
    pub threshold: Threshold<T>,
    /// Exponent of the per-row scale in the squeeze weight.
    pub scale_exponent: T,
    pub anchor: Anchor,
}

impl<T: Real> SstConfig<T> {
    pub fn new(dt: T, lag: T, m: usize, n: usize, bins: usize) -> Result<Self, SstError> {
        let cfg = SstConfig {
            dt,
            lag,
            m,
            n,
            bins,
            threshold: Threshold::RelativeRms(T::lit(1e-8)),
            scale_exponent: T::lit(-0.5),
            anchor: Anchor::Start,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SstError> {
        let ok = |v: T| v.is_finite() && v > T::zero();
        if !ok(self.dt) || !ok(self.lag) {
            return Err(SstError::NonPositive);
        }
        if self.m < 3 {
            return Err(SstError::Order { m: self.m });
        }
        let order = self.m + self.n;
        let min = T::of_usize(order) * self.dt / T::lit(2.0);
        if self.lag <= min {
            return Err(SstError::LagTooShort { lag: self.lag.as_f64(), min: min.as_f64() });
        }
        if self.window() <= order {
            return Err(SstError::WindowTooShort { window: self.window(), order });
        }
        if self.bins == 0 {
            return Err(SstError::NoBins);
        }
        if self.freq_hi() <= self.freq_lo() {
            return Err(SstError::EmptyRange);
        }
        let t = match self.threshold {
            Threshold::Absolute(v) | Threshold::RelativeRms(v) => v,
        };
        if !t.is_finite() || t < T::zero() || !self.scale_exponent.is_finite() {
            return Err(SstError::Threshold);
        }
        Ok(())
    }

    /// `M = floor(L/dT)`, the output lag in samples.
    pub fn half_window(&self) -> usize {
        // guard against L/dT landing a hair below an integer
        let r = (self.lag / self.dt).as_f64();
        (r + 1e-9 * r.max(1.0)).floor() as usize
    }

    /// `N = 2M`.
    pub fn window(&self) -> usize {
        2 * self.half_window()
    }

    pub fn rows(&self) -> usize {
        (self.window() + 1).saturating_sub(self.m + self.n)
    }

    pub fn freq_lo(&self) -> T {
        T::one() / (T::lit(2.0) * self.lag)
    }

    pub fn freq_hi(&self) -> T {
        T::one() / (T::lit(2.0) * self.dt)
    }

    pub fn bin_width(&self) -> T {
        (self.freq_hi() - self.freq_lo()) / T::of_usize(self.bins)
    }

    /// Centre frequency of bin `k` (1-based), `lo + k dxi`.
    pub fn bin_frequency(&self, k: usize) -> T {
        self.freq_lo() + T::of_usize(k) * self.bin_width()
    }

    /// Frequencies of bins `1..=n_xi`.
    pub fn frequencies(&self) -> Vec<T> {
        (1..=self.bins).map(|k| self.bin_frequency(k)).collect()
    }

    /// 1-based bin for frequency `f`, if it lands in `1..=n_xi`.
    pub fn bin_of(&self, f: T) -> Option<usize> {
        let x = ((f - self.freq_lo()) / (self.freq_hi() - self.freq_lo()) * T::of_usize(self.bins)).round();
        (x.is_finite() && x >= T::one() && x <= T::of_usize(self.bins)).then(|| x.to_usize().unwrap_or(0))
    }

    /// Column (1-based, fractional) where row `i`'s argument is zero.
    pub fn row_origin(&self, i: usize) -> T {
        match self.anchor {
            Anchor::Start => T::of_usize(i),
            Anchor::Centre => T::of_usize(self.half_window()) - T::of_usize(self.window() + 1 - i) / T::lit(2.0),
        }
    }

    /// Scale of row `i` (1-based) in seconds: `(N-i+1) dT/(m+n)`.
    pub fn row_scale(&self, i: usize) -> T {
        T::of_usize(self.window() + 1 - i) * self.dt / T::of_usize(self.m + self.n)
    }
}

/// Conjugated analytic wavelet samples, row-major `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisMatrices<T> {
    pub rows: usize,
    pub cols: usize,
    /// `conj psi1~((m+n)(l-o_i)/(N-i+1))`, `o_i` the row origin.
    pub psi: Vec<Complex<T>>,
    /// `conj psi2~(same argument) / a_i`, `psi2 = psi_{m-1;n+1}`.
    pub lambda: Vec<Complex<T>>,
    /// `a_i` in seconds.
    pub scales: Vec<T>,
}

impl<T: Real> AnalysisMatrices<T> {
    pub fn new(cfg: &SstConfig<T>) -> Result<Self, SstError> {
        cfg.validate()?;
        let one = T::one();
        let psi1 = AnalyticVm::new(cfg.m, cfg.n, one)?;
        let psi2 = AnalyticVm::new(cfg.m - 1, cfg.n + 1, one)?;
        build_matrices(cfg, &psi1, &psi2)
    }

    pub fn entry(&self, i: usize, l: usize) -> Complex<T> {
        self.psi[i * self.cols + l]
    }
}

/// Builds both analysis matrices from analytic wavelets on integer knots.
pub fn build_matrices<T: Real>(
    cfg: &SstConfig<T>,
    psi1: &AnalyticVm<T>,
    psi2: &AnalyticVm<T>,
) -> Result<AnalysisMatrices<T>, SstError> {
    cfg.validate()?;
    let (m, n) = (cfg.m, cfg.n);
    let w1 = psi1.wavelet();
    let w2 = psi2.wavelet();
    let unit = |a: &AnalyticVm<T>| (a.spacing() - T::one()).abs() <= T::epsilon();
    if w1.m() != m || w1.n() != n || w2.m() != m - 1 || w2.n() != n + 1 || !unit(psi1) || !unit(psi2) {
        return Err(SstError::WaveletMismatch);
    }
    let big_n = cfg.window();
    let rows = cfg.rows();
    let order = T::of_usize(m + n);
    let mut psi = Vec::with_capacity(rows * big_n);
    let mut lambda = Vec::with_capacity(rows * big_n);
    let mut scales = Vec::with_capacity(rows);
    for i in 1..=rows {
        let denom = T::of_usize(big_n - i + 1);
        let origin = cfg.row_origin(i);
        let a = cfg.row_scale(i);
        scales.push(a);
        for l in 1..=big_n {
            let u = order * (T::of_usize(l) - origin) / denom;
            psi.push(psi1.eval(u)?.conj());
            lambda.push(psi2.eval(u)?.conj() / a);
        }
    }
    Ok(AnalysisMatrices { rows, cols: big_n, psi, lambda, scales })
}

/// `W = Psi window`, `Z = Lambda window`.
pub fn cwt_frame<T: Real>(mats: &AnalysisMatrices<T>, window: &[T]) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>), SstError> {
    if window.len() != mats.cols {
        return Err(SstError::Length { got: window.len(), want: mats.cols });
    }
    let mut w = Vec::with_capacity(mats.rows);
    let mut z = Vec::with_capacity(mats.rows);
    for i in 0..mats.rows {
        let pr = &mats.psi[i * mats.cols..(i + 1) * mats.cols];
        let lr = &mats.lambda[i * mats.cols..(i + 1) * mats.cols];
        let (mut wr, mut wi, mut zr, mut zi) = (T::zero(), T::zero(), T::zero(), T::zero());
        for ((p, q), &x) in pr.iter().zip(lr).zip(window) {
            wr += p.re * x;
            wi += p.im * x;
            zr += q.re * x;
            zi += q.im * x;
        }
        w.push(Complex::new(wr, wi));
        z.push(Complex::new(zr, zi));
    }
    Ok((w, z))
}

/// `Omega_j = Re(i Z_j / (2 pi W_j))` where `|W_j| > Gamma`, else `-inf`.
pub fn reassign<T: Real>(w: &[Complex<T>], z: &[Complex<T>], gamma: T) -> Vec<T> {
    let two_pi = T::lit(2.0) * T::PI();
    w.iter()
        .zip(z)
        .map(|(w, z)| {
            if w.norm() > gamma {
                let q = Complex::new(-z.im, z.re) / (*w * two_pi);
                q.re
            } else {
                T::neg_infinity()
            }
        })
        .collect()
}

/// Hard-binned squeezing: `S[k] += W_j a_j^exponent` for `k = round(...)` in
/// `1..=n_xi`. Returns `(S, V = |S|^2)` indexed by `k - 1`.
pub fn squeeze<T: Real>(w: &[Complex<T>], omega: &[T], cfg: &SstConfig<T>) -> (Vec<Complex<T>>, Vec<T>) {
    let mut s = vec![Complex::new(T::zero(), T::zero()); cfg.bins];
    for (j, (wj, &om)) in w.iter().zip(omega).enumerate() {
        if om == T::neg_infinity() {
            continue;
        }
        if let Some(k) = cfg.bin_of(om) {
            let weight = cfg.row_scale(j + 1).powf(cfg.scale_exponent);
            s[k - 1] = s[k - 1] + *wj * weight;
        }
    }
    let v = s.iter().map(|c| c.norm_sqr()).collect();
    (s, v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput<T> {
    pub time: T,
    pub w: Vec<Complex<T>>,
    pub z: Vec<Complex<T>>,
    pub omega: Vec<T>,
    pub s: Vec<Complex<T>>,
    pub v: Vec<T>,
}

fn rms<T: Real>(x: &[T]) -> T {
    (x.iter().map(|v| *v * *v).sum::<T>() / T::of_usize(x.len().max(1))).sqrt()
}

fn frame<T: Real>(mats: &AnalysisMatrices<T>, cfg: &SstConfig<T>, window: &[T], time: T) -> Result<FrameOutput<T>, SstError> {
    let (w, z) = cwt_frame(mats, window)?;
    let gamma = match cfg.threshold {
        Threshold::Absolute(g) => g,
        Threshold::RelativeRms(f) => f * rms(window),
    };
    let omega = reassign(&w, &z, gamma);
    let (s, v) = squeeze(&w, &omega, cfg);
    Ok(FrameOutput { time, w, z, omega, s, v })
}

/// Fixed-lag streaming engine: after `N` samples each new sample yields the
/// frame `M` samples behind it.
#[derive(Debug, Clone)]
pub struct SstEngine<T> {
    cfg: SstConfig<T>,
    mats: Arc<AnalysisMatrices<T>>,
    ring: VecDeque<T>,
    start: T,
    count: usize,
}

impl<T: Real> SstEngine<T> {
    pub fn new(cfg: SstConfig<T>, start: T) -> Result<Self, SstError> {
        let mats = Arc::new(AnalysisMatrices::new(&cfg)?);
        Self::with_matrices(cfg, mats, start)
    }

    /// Shares prebuilt matrices between engines.
    pub fn with_matrices(cfg: SstConfig<T>, mats: Arc<AnalysisMatrices<T>>, start: T) -> Result<Self, SstError> {
        cfg.validate()?;
        if mats.cols != cfg.window() || mats.rows != cfg.rows() {
            return Err(SstError::Length { got: mats.cols, want: cfg.window() });
        }
        let cap = cfg.window();
        Ok(SstEngine { cfg, mats, ring: VecDeque::with_capacity(cap), start, count: 0 })
    }

    pub fn config(&self) -> &SstConfig<T> {
        &self.cfg
    }

    pub fn matrices(&self) -> &Arc<AnalysisMatrices<T>> {
        &self.mats
    }

    /// Samples consumed so far.
    pub fn consumed(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, x: T) -> Result<Option<FrameOutput<T>>, SstError> {
        let cap = self.cfg.window();
        if self.ring.len() == cap {
            self.ring.pop_front();
        }
        self.ring.push_back(x);
        self.count += 1;
        if self.ring.len() < cap {
            return Ok(None);
        }
        let time = frame_time(&self.cfg, self.start, self.count - 1);
        let window = self.ring.make_contiguous();
        frame(&self.mats, &self.cfg, window, time).map(Some)
    }
}

/// Time label of the frame whose newest sample has index `newest`.
fn frame_time<T: Real>(cfg: &SstConfig<T>, start: T, newest: usize) -> T {
    start + (T::of_usize(newest) - T::of_usize(cfg.half_window())) * cfg.dt
}

/// Time-varying power spectrum on a frame/bin grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TfMap<T> {
    pub times: Vec<T>,
    pub freqs: Vec<T>,
    /// Complex synchrosqueezed values; absent when loaded from power only.
    pub s: Option<Vec<Vec<Complex<T>>>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> TfMap<T> {
    pub fn from_power(times: Vec<T>, freqs: Vec<T>, v: Vec<Vec<T>>) -> Self {
        TfMap { times, freqs, s: None, v }
    }

    pub fn frames(&self) -> usize {
        self.times.len()
    }

    pub fn bins(&self) -> usize {
        self.freqs.len()
    }

    /// Uniform bin width, taken from the first two frequencies.
    pub fn bin_width(&self) -> T {
        if self.freqs.len() < 2 {
            T::one()
        } else {
            self.freqs[1] - self.freqs[0]
        }
    }

    /// Bin with the largest power in frame `t` (0-based).
    pub fn dominant_bin(&self, t: usize) -> usize {
        let row = &self.v[t];
        let mut best = 0;
        for (k, p) in row.iter().enumerate() {
            if *p > row[best] {
                best = k;
            }
        }
        best
    }
}

/// Offline transform; frame for frame identical to [`SstEngine`].
pub fn sst_batch<T: Real>(cfg: &SstConfig<T>, samples: &[T], start: T) -> Result<TfMap<T>, SstError> {
    let mats = AnalysisMatrices::new(cfg)?;
    sst_batch_with(cfg, &mats, samples, start)
}

pub fn sst_batch_with<T: Real>(
    cfg: &SstConfig<T>,
    mats: &AnalysisMatrices<T>,
    samples: &[T],
    start: T,
) -> Result<TfMap<T>, SstError> {
    let big_n = cfg.window();
    let mut times = Vec::new();
    let mut s = Vec::new();
    let mut v = Vec::new();
    if samples.len() >= big_n {
        for newest in big_n - 1..samples.len() {
            let f = frame(mats, cfg, &samples[newest + 1 - big_n..=newest], frame_time(cfg, start, newest))?;
            times.push(f.time);
            s.push(f.s);
            v.push(f.v);
        }
    }
    Ok(TfMap { times, freqs: cfg.frequencies(), s: Some(s), v })
}
