//! Ridge extraction, rhythmic/nonrhythmic power split, the NRR index, wave
//! shape regression and the almost-orthogonality diagnostic.

use std::collections::VecDeque;

use thiserror::Error;

use crate::linalg::solve;
use crate::quadrature::GaussRule;
use crate::scalar::Real;
use crate::sst::TfMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("time-frequency map has no frames")]
    Empty,
    #[error("frame {frame} has {got} bins, expected {want}")]
    Ragged { frame: usize, got: usize, want: usize },
    #[error("ridge penalty must be finite and nonnegative")]
    Penalty,
    #[error("ridge has {got} frames, map has {want}")]
    RidgeLength { got: usize, want: usize },
    #[error("input lengths differ")]
    Length,
    #[error("amplitude must be positive at sample {index}")]
    Amplitude { index: usize },
    #[error("phase must be strictly increasing at sample {index}")]
    Phase { index: usize },
    #[error("need 2D < samples (D={d}, samples={samples})")]
    TooFewSamples { d: usize, samples: usize },
    #[error("harmonic count must be at least 1")]
    Harmonics,
    #[error("regression matrix is singular")]
    Singular,
    #[error("band and floor parameters must be finite and nonnegative")]
    Band,
}

/// Natural-log floor for zero normalized power.
pub const LOG_FLOOR: f64 = -50.0;

/// One frequency bin per frame, 0-based into the map's frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeCurve<T> {
    pub bins: Vec<usize>,
    pub lambda: T,
    /// Attained objective value.
    pub score: T,
}

impl<T: Real> RidgeCurve<T> {
    pub fn frequencies(&self, map: &TfMap<T>) -> Vec<T> {
        self.bins.iter().map(|&k| map.freqs[k]).collect()
    }
}

fn check_map<T: Real>(v: &[Vec<T>]) -> Result<usize, FeatureError> {
    let bins = v.first().ok_or(FeatureError::Empty)?.len();
    for (frame, row) in v.iter().enumerate() {
        if row.len() != bins {
            return Err(FeatureError::Ragged { frame, got: row.len(), want: bins });
        }
    }
    if bins == 0 {
        return Err(FeatureError::Empty);
    }
    Ok(bins)
}

/// `ln(V / sum V)` per bin, floored at [`LOG_FLOOR`].
pub fn log_normalized<T: Real>(row: &[T]) -> Vec<T> {
    let total: T = row.iter().copied().sum();
    let floor = T::lit(LOG_FLOOR);
    row.iter()
        .map(|&p| {
            if total > T::zero() && p > T::zero() {
                (p / total).ln().max(floor)
            } else {
                floor
            }
        })
        .collect()
}

/// Objective `sum log(normalized power) - lambda sum (jump)^2` of a path.
pub fn ridge_objective<T: Real>(v: &[Vec<T>], path: &[usize], lambda: T) -> T {
    let mut acc = T::zero();
    for (t, (&k, row)) in path.iter().zip(v).enumerate() {
        acc += log_normalized(row)[k];
        if t > 0 {
            let d = T::of_usize(k.abs_diff(path[t - 1]));
            acc -= lambda * d * d;
        }
    }
    acc
}

/// `out[k] = min_j f[j] + lambda (k-j)^2` with the minimizing `j`, by the
/// lower envelope of parabolas.
fn distance_transform<T: Real>(f: &[T], lambda: T) -> (Vec<T>, Vec<usize>) {
    let n = f.len();
    if lambda == T::zero() {
        let mut best = 0;
        for j in 1..n {
            if f[j] < f[best] {
                best = j;
            }
        }
        return (vec![f[best]; n], vec![best; n]);
    }
    let key = |j: usize| f[j] + lambda * T::of_usize(j * j);
    let cross = |q: usize, p: usize| (key(q) - key(p)) / (T::lit(2.0) * lambda * (T::of_usize(q) - T::of_usize(p)));
    let mut v = vec![0usize; n];
    let mut z = vec![T::zero(); n + 1];
    let mut top = 0usize;
    z[0] = T::neg_infinity();
    z[1] = T::infinity();
    for q in 1..n {
        // z[0] = -inf stops the scan at the first parabola
        let mut s = cross(q, v[top]);
        while s <= z[top] {
            top -= 1;
            s = cross(q, v[top]);
        }
        top += 1;
        v[top] = q;
        z[top] = s;
        z[top + 1] = T::infinity();
    }
    let mut out = vec![T::zero(); n];
    let mut arg = vec![0usize; n];
    let mut seg = 0;
    for k in 0..n {
        let x = T::of_usize(k);
        while z[seg + 1] < x {
            seg += 1;
        }
        let j = v[seg];
        let d = T::of_usize(k.abs_diff(j));
        out[k] = f[j] + lambda * d * d;
        arg[k] = j;
    }
    (out, arg)
}

/// Exact maximizer of `sum log(normalized V) - lambda sum (jump)^2` by
/// dynamic programming, `O(frames * bins)`.
pub fn extract_ridge<T: Real>(v: &[Vec<T>], lambda: T) -> Result<RidgeCurve<T>, FeatureError> {
    let bins = check_map(v)?;
    if !lambda.is_finite() || lambda < T::zero() {
        return Err(FeatureError::Penalty);
    }
    // costs are negated scores so the transform minimizes
    let mut cost: Vec<T> = log_normalized(&v[0]).into_iter().map(|s| -s).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(v.len());
    for row in &v[1..] {
        let (dt, arg) = distance_transform(&cost, lambda);
        let score = log_normalized(row);
        cost = (0..bins).map(|k| dt[k] - score[k]).collect();
        back.push(arg);
    }
    let mut k = 0;
    for j in 1..bins {
        if cost[j] < cost[k] {
            k = j;
        }
    }
    let score = -cost[k];
    let mut path = vec![k; v.len()];
    for t in (1..v.len()).rev() {
        k = back[t - 1][k];
        path[t - 1] = k;
    }
    Ok(RidgeCurve { bins: path, lambda, score })
}

/// Successive ridges: after each extraction the bins within `guard` of the
/// ridge are zeroed before the next search.
pub fn extract_ridges<T: Real>(v: &[Vec<T>], lambda: T, count: usize, guard: usize) -> Result<Vec<RidgeCurve<T>>, FeatureError> {
    let bins = check_map(v)?;
    let mut work = v.to_vec();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let r = extract_ridge(&work, lambda)?;
        for (row, &k) in work.iter_mut().zip(&r.bins) {
            let lo = k.saturating_sub(guard);
            let hi = (k + guard).min(bins - 1);
            for p in &mut row[lo..=hi] {
                *p = T::zero();
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Band and floor used to split power around the ridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit<T> {
    /// Half-width of the rhythmic band in Hz.
    pub band_hz: T,
    /// Nonrhythmic power counts bins at or above this frequency.
    pub floor_hz: T,
    /// Bands around `h f_r` for `h = 1..=harmonics`.
    pub harmonics: usize,
}

impl<T: Real> Default for PowerSplit<T> {
    fn default() -> Self {
        PowerSplit { band_hz: T::lit(0.02), floor_hz: T::lit(0.1), harmonics: 1 }
    }
}

impl<T: Real> PowerSplit<T> {
    fn validate(&self) -> Result<(), FeatureError> {
        let ok = |v: T| v.is_finite() && v >= T::zero();
        if !ok(self.band_hz) || !ok(self.floor_hz) {
            return Err(FeatureError::Band);
        }
        if self.harmonics == 0 {
            return Err(FeatureError::Harmonics);
        }
        Ok(())
    }
}

/// Rounding slack for `floor`/`ceil` of ratios such as `0.02/0.01`.
fn slack<T: Real>() -> T {
    T::lit(1e-9)
}

/// Bins (0-based) of the rhythmic band around ridge bin `k` (0-based):
/// `[floor(f - w/dxi), ceil(f + w/dxi)]` in 1-based indices, clipped.
/// Harmonic `h > 1` is centred on the fractional index of `h` times the
/// ridge frequency.
pub fn rhythmic_band<T: Real>(k: usize, freqs: &[T], dxi: T, split: &PowerSplit<T>) -> Vec<usize> {
    let bins = freqs.len();
    let half = split.band_hz / dxi;
    let mut out = Vec::new();
    for h in 1..=split.harmonics {
        let centre = if h == 1 {
            T::of_usize(k + 1)
        } else {
            (T::of_usize(h) * freqs[k] - freqs[0]) / dxi + T::one()
        };
        let lo = (centre - half + slack()).floor().max(T::one());
        let hi = (centre + half - slack()).ceil().min(T::of_usize(bins));
        if lo > hi {
            continue;
        }
        let (lo, hi) = (lo.to_usize().unwrap_or(1), hi.to_usize().unwrap_or(bins));
        out.extend(lo - 1..hi);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// `P_r(l) = sum of V(l, .)` over the rhythmic band.
pub fn rhythmic_power<T: Real>(row: &[T], freqs: &[T], k: usize, dxi: T, split: &PowerSplit<T>) -> T {
    rhythmic_band(k, freqs, dxi, split).into_iter().map(|j| row[j]).sum()
}

/// `P_nr(l)`: power at or above the floor outside the rhythmic band. Equals
/// `sum_{freq >= floor} V(l, .) - P_r(l)` whenever the band lies above the
/// floor, and stays nonnegative when the ridge drops below it.
pub fn nonrhythmic_power<T: Real>(row: &[T], freqs: &[T], k: usize, dxi: T, split: &PowerSplit<T>) -> T {
    let band = rhythmic_band(k, freqs, dxi, split);
    let cut = split.floor_hz * (T::one() - slack::<T>());
    row.iter()
        .zip(freqs)
        .enumerate()
        .filter(|(j, (_, f))| **f >= cut && band.binary_search(j).is_err())
        .map(|(_, (p, _))| *p)
        .sum()
}

/// `log10(P_nr/P_r)`; `None` when `P_r = 0`, `-inf` when `P_nr = 0`.
pub fn nrr<T: Real>(p_nr: T, p_r: T) -> Option<T> {
    if p_r > T::zero() {
        Some((p_nr / p_r).log10())
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NrrSeries<T> {
    pub times: Vec<T>,
    pub p_r: Vec<T>,
    pub p_nr: Vec<T>,
    pub nrr: Vec<Option<T>>,
}

impl<T: Real> NrrSeries<T> {
    /// Mean of the defined, finite NRR values.
    pub fn mean(&self) -> Option<T> {
        let vals: Vec<T> = self.nrr.iter().flatten().copied().filter(|v| v.is_finite()).collect();
        (!vals.is_empty()).then(|| vals.iter().copied().sum::<T>() / T::of_usize(vals.len()))
    }
}

pub fn nrr_series<T: Real>(map: &TfMap<T>, ridge: &RidgeCurve<T>, split: &PowerSplit<T>) -> Result<NrrSeries<T>, FeatureError> {
    split.validate()?;
    check_map(&map.v)?;
    if ridge.bins.len() != map.frames() {
        return Err(FeatureError::RidgeLength { got: ridge.bins.len(), want: map.frames() });
    }
    let dxi = map.bin_width();
    let mut out = NrrSeries { times: map.times.clone(), p_r: Vec::new(), p_nr: Vec::new(), nrr: Vec::new() };
    for (row, &k) in map.v.iter().zip(&ridge.bins) {
        let pr = rhythmic_power(row, &map.freqs, k, dxi, split);
        let pnr = nonrhythmic_power(row, &map.freqs, k, dxi, split);
        out.p_r.push(pr);
        out.p_nr.push(pnr);
        out.nrr.push(nrr(pnr, pr));
    }
    Ok(out)
}

/// Ridge + NRR over the trailing `window` frames; each new frame re-solves
/// the ridge on the window and reports the NRR of the newest frame.
#[derive(Debug, Clone)]
pub struct StreamingNrr<T> {
    window: usize,
    lambda: T,
    split: PowerSplit<T>,
    freqs: Vec<T>,
    frames: VecDeque<Vec<T>>,
}

impl<T: Real> StreamingNrr<T> {
    pub fn new(freqs: Vec<T>, window: usize, lambda: T, split: PowerSplit<T>) -> Result<Self, FeatureError> {
        split.validate()?;
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(FeatureError::Penalty);
        }
        if window == 0 || freqs.is_empty() {
            return Err(FeatureError::Empty);
        }
        Ok(StreamingNrr { window, lambda, split, freqs, frames: VecDeque::with_capacity(window) })
    }

    /// Returns `(P_r, P_nr, NRR)` for the frame just pushed.
    pub fn push(&mut self, v: Vec<T>) -> Result<(T, T, Option<T>), FeatureError> {
        if v.len() != self.freqs.len() {
            return Err(FeatureError::Ragged { frame: 0, got: v.len(), want: self.freqs.len() });
        }
        if self.frames.len() == self.window {
            self.frames.pop_front();
        }
        self.frames.push_back(v);
        let v: Vec<Vec<T>> = self.frames.iter().cloned().collect();
        let ridge = extract_ridge(&v, self.lambda)?;
        let k = *ridge.bins.last().expect("nonempty window");
        let row = v.last().expect("nonempty window");
        let dxi = if self.freqs.len() > 1 { self.freqs[1] - self.freqs[0] } else { T::one() };
        let pr = rhythmic_power(row, &self.freqs, k, dxi, &self.split);
        let pnr = nonrhythmic_power(row, &self.freqs, k, dxi, &self.split);
        Ok((pr, pnr, nrr(pnr, pr)))
    }
}

/// Fourier-series wave shape `s(u) = sum alpha_l cos(2 pi l u) + beta_l sin(2 pi l u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeModel<T> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Real> ShapeModel<T> {
    pub fn harmonics(&self) -> usize {
        self.alpha.len()
    }

    /// `[alpha_1..alpha_D, beta_1..beta_D]`.
    pub fn gamma(&self) -> Vec<T> {
        self.alpha.iter().chain(&self.beta).copied().collect()
    }

    pub fn eval(&self, u: T) -> T {
        let two_pi = T::lit(2.0) * T::PI();
        let mut acc = T::zero();
        for (l, (a, b)) in self.alpha.iter().zip(&self.beta).enumerate() {
            let x = two_pi * T::of_usize(l + 1) * u;
            acc += *a * x.cos() + *b * x.sin();
        }
        acc
    }

    /// `A(t) s(phi(t))` at every sample.
    pub fn reconstruct(&self, amp: &[T], phase: &[T]) -> Vec<T> {
        amp.iter().zip(phase).map(|(a, p)| *a * self.eval(*p)).collect()
    }

    /// `||y - reconstruction|| / ||y||`.
    pub fn residual(&self, y: &[T], amp: &[T], phase: &[T]) -> T {
        let r = self.reconstruct(amp, phase);
        let num: T = y.iter().zip(&r).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
        let den: T = y.iter().map(|a| *a * *a).sum();
        (num / den).sqrt()
    }
}

/// Least-squares shape coefficients: `(c c^T) gamma = c y^T` with rows
/// `A cos(2 pi l phi)`, `A sin(2 pi l phi)`, `l = 1..=D`.
pub fn estimate_shape<T: Real>(y: &[T], amp: &[T], phase: &[T], d: usize) -> Result<ShapeModel<T>, FeatureError> {
    if y.len() != amp.len() || y.len() != phase.len() {
        return Err(FeatureError::Length);
    }
    if d == 0 {
        return Err(FeatureError::Harmonics);
    }
    if 2 * d >= y.len() {
        return Err(FeatureError::TooFewSamples { d, samples: y.len() });
    }
    if let Some(index) = amp.iter().position(|a| !(*a > T::zero())) {
        return Err(FeatureError::Amplitude { index });
    }
    if let Some(index) = phase.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(FeatureError::Phase { index: index + 1 });
    }
    let two_pi = T::lit(2.0) * T::PI();
    let rows = 2 * d;
    let regressor = |r: usize, i: usize| {
        let l = T::of_usize(r % d + 1);
        let x = two_pi * l * phase[i];
        amp[i] * if r < d { x.cos() } else { x.sin() }
    };
    let mut gram = vec![T::zero(); rows * rows];
    let mut rhs = vec![T::zero(); rows];
    let mut c = vec![T::zero(); rows];
    for i in 0..y.len() {
        for (r, slot) in c.iter_mut().enumerate() {
            *slot = regressor(r, i);
        }
        for r in 0..rows {
            rhs[r] += c[r] * y[i];
            for s in 0..rows {
                gram[r * rows + s] += c[r] * c[s];
            }
        }
    }
    let gamma = solve(gram, rhs, rows, T::lit(1e-12)).ok_or(FeatureError::Singular)?;
    Ok(ShapeModel { alpha: gamma[..d].to_vec(), beta: gamma[d..].to_vec() })
}

/// Estimates each component's shape in turn, subtracting earlier fits.
pub fn estimate_shapes<T: Real>(y: &[T], components: &[(Vec<T>, Vec<T>)], d: usize) -> Result<Vec<ShapeModel<T>>, FeatureError> {
    let mut rest = y.to_vec();
    let mut out = Vec::with_capacity(components.len());
    for (amp, phase) in components {
        let s = estimate_shape(&rest, amp, phase, d)?;
        for (r, v) in rest.iter_mut().zip(s.reconstruct(amp, phase)) {
            *r -= v;
        }
        out.push(s);
    }
    Ok(out)
}

/// `|int f g| / (||f|| ||g||)` over `[a, b]`.
pub fn almost_orthogonality<T: Real>(f: impl Fn(T) -> T, g: impl Fn(T) -> T, a: T, b: T) -> T {
    let rule = GaussRule::new(16);
    let pieces = ((b - a).as_f64().abs() * 4.0).ceil().max(1.0) as usize;
    let (mut fg, mut ff, mut gg) = (T::zero(), T::zero(), T::zero());
    for p in 0..pieces {
        let lo = a + (b - a) * T::of_usize(p) / T::of_usize(pieces);
        let hi = a + (b - a) * T::of_usize(p + 1) / T::of_usize(pieces);
        for (x, w) in rule.points(lo, hi) {
            let (u, v) = (f(x), g(x));
            fg += w * u * v;
            ff += w * u * u;
            gg += w * v * v;
        }
    }
    fg.abs() / (ff * gg).sqrt()
}

/// Largest normalized inner product over `[a, a + L']` for `L' in [L, L+1]`,
/// on `samples` equally spaced lengths. Removes the oscillation of the
/// plain value, which vanishes whenever both components complete whole
/// periods.
pub fn orthogonality_envelope<T: Real>(f: impl Fn(T) -> T + Copy, g: impl Fn(T) -> T + Copy, a: T, length: T, samples: usize) -> T {
    let samples = samples.max(2);
    (0..samples)
        .map(|i| {
            let l = length + T::of_usize(i) / T::of_usize(samples - 1);
            almost_orthogonality(f, g, a, a + l)
        })
        .fold(T::zero(), |m, v| m.max(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(v: &[Vec<f64>], lambda: f64) -> f64 {
        let bins = v[0].len();
        let frames = v.len();
        let mut best = f64::NEG_INFINITY;
        let mut path = vec![0usize; frames];
        loop {
            best = best.max(ridge_objective(v, &path, lambda));
            let mut i = 0;
            loop {
                if i == frames {
                    return best;
                }
                path[i] += 1;
                if path[i] < bins {
                    break;
                }
                path[i] = 0;
                i += 1;
            }
        }
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn dp_matches_exhaustive_search() {
        let mut seed = 7u64;
        for (bins, frames) in [(12, 4), (5, 6), (3, 8), (7, 5)] {
            for trial in 0..6 {
                let v: Vec<Vec<f64>> = (0..frames)
                    .map(|_| (0..bins).map(|_| if lcg(&mut seed) < 0.15 { 0.0 } else { lcg(&mut seed).powi(3) }).collect())
                    .collect();
                let lambda = [0.0, 0.05, 0.3, 1.0, 4.0, 0.7][trial];
                let r = extract_ridge(&v, lambda).unwrap();
                let want = brute(&v, lambda);
                assert!((r.score - want).abs() < 1e-9, "{bins}x{frames} l={lambda}: {} vs {want}", r.score);
                assert!((ridge_objective(&v, &r.bins, lambda) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_penalty_is_argmax_and_tone_is_constant() {
        let v = vec![vec![0.1, 0.5, 0.2], vec![0.9, 0.05, 0.05], vec![0.0, 0.0, 3.0]];
        assert_eq!(extract_ridge(&v, 0.0).unwrap().bins, vec![1, 0, 2]);
        let tone: Vec<Vec<f64>> = (0..10).map(|_| (0..20).map(|k| if k == 7 { 1.0 } else { 1e-3 }).collect()).collect();
        assert_eq!(extract_ridge(&tone, 0.5).unwrap().bins, vec![7; 10]);
        let zero = vec![vec![0.0; 4]; 3];
        assert_eq!(extract_ridge(&zero, 1.0).unwrap().bins.len(), 3);
        assert!(extract_ridge(&v, -1.0).is_err());
        assert!(extract_ridge::<f64>(&[], 1.0).is_err());
    }

    #[test]
    fn band_width_and_powers() {
        let split = PowerSplit::<f64>::default();
        let freqs: Vec<f64> = (1..=100).map(|k| 0.01 * k as f64).collect();
        let band = rhythmic_band(20, &freqs, 0.01, &split);
        assert_eq!(band, (18..=22).collect::<Vec<_>>());
        let band = rhythmic_band(0, &freqs, 0.01, &split);
        assert_eq!(band, vec![0, 1, 2]);
        let mut row = vec![0.0; 100];
        row[20] = 1.0;
        let pr = rhythmic_power(&row, &freqs, 20, 0.01, &split);
        assert_eq!(pr, 1.0);
        assert_eq!(nonrhythmic_power(&row, &freqs, 20, 0.01, &split), 0.0);
        assert_eq!(nrr(0.0, 1.0), Some(f64::NEG_INFINITY));
        assert_eq!(nrr(1.0, 0.0), None);
        assert_eq!(nrr(2.5, 2.5), Some(0.0));
        assert!((nrr(10.0f64, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // energy below the floor is excluded
        let mut low = vec![0.0; 100];
        low[3] = 5.0;
        low[50] = 1.0;
        assert_eq!(nonrhythmic_power(&low, &freqs, 80, 0.01, &split), 1.0);
        // a ridge below the floor does not cancel power above it
        assert_eq!(nonrhythmic_power(&low, &freqs, 3, 0.01, &split), 1.0);
        let harm = PowerSplit { harmonics: 2, ..split };
        assert_eq!(rhythmic_band(9, &freqs, 0.01, &harm), vec![7, 8, 9, 10, 11, 17, 18, 19, 20, 21]);
    }

    #[test]
    fn shape_recovery() {
        let n = 4000;
        let dt = 0.01;
        let amp: Vec<f64> = (0..n).map(|i| 1.0 + 0.2 * (0.1 * i as f64 * dt).sin()).collect();
        let phase: Vec<f64> = (0..n).map(|i| { let t = i as f64 * dt; 0.3 * t + 0.01 * t * t }).collect();
        let y1: Vec<f64> = amp.iter().zip(&phase).map(|(a, p)| a * (2.0 * std::f64::consts::PI * p).cos()).collect();
        let s = estimate_shape(&y1, &amp, &phase, 3).unwrap();
        assert!((s.alpha[0] - 1.0).abs() < 1e-8);
        assert!(s.gamma().iter().skip(1).all(|g| g.abs() < 1e-8));
        let two = |u: f64| (2.0 * std::f64::consts::PI * u).cos() + 0.3 * (4.0 * std::f64::consts::PI * u).cos();
        let y2: Vec<f64> = amp.iter().zip(&phase).map(|(a, p)| a * two(*p)).collect();
        let s = estimate_shape(&y2, &amp, &phase, 4).unwrap();
        assert!((s.alpha[0] - 1.0).abs() < 1e-2 && (s.alpha[1] - 0.3).abs() < 1e-2);
        assert!(s.residual(&y2, &amp, &phase) <= 1e-6);
        assert!(estimate_shape(&y2, &amp, &vec![1.0; n], 2).is_err());
        assert!(estimate_shape(&y2[..5], &amp[..5], &phase[..5], 3).is_err());
    }

    #[test]
    fn orthogonality_examples() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let f = |t: f64| (two_pi * t).cos();
        let g = |t: f64| (2.0 * two_pi * t).cos();
        assert!(almost_orthogonality(f, g, 0.0, 100.0) <= 0.05);
        assert!((almost_orthogonality(f, f, 0.0, 7.3) - 1.0).abs() < 1e-12);
        let e1 = orthogonality_envelope(f, g, 0.0, 100.0, 101);
        let e2 = orthogonality_envelope(f, g, 0.0, 200.0, 101);
        assert!((e2 / e1 - 0.5).abs() <= 0.1, "{e1} {e2}");
    }

    #[test]
    fn streaming_nrr_uses_window() {
        let freqs: Vec<f64> = (1..=50).map(|k| 0.02 * k as f64).collect();
        let mut s = StreamingNrr::new(freqs, 5, 0.1, PowerSplit::default()).unwrap();
        for _ in 0..8 {
            let mut row = vec![0.01; 50];
            row[20] = 1.0;
            let (pr, pnr, v) = s.push(row).unwrap();
            assert!(pr > 1.0 && pnr > 0.0 && v.unwrap() < 0.0);
        }
    }
}
