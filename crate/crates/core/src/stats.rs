//! Prediction probability, rank correlation, SNR and effect-site
//! concentration.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ ({0} vs {1})")]
    Length(usize, usize),
    #[error("need at least 2 samples")]
    TooShort,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("times must be strictly increasing (index {0})")]
    Times(usize),
    #[error("rate constant must be finite and nonnegative")]
    Rate,
    #[error("weights must be nonnegative with positive sum")]
    Weights,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Length(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort);
    }
    for (i, (a, b)) in x.iter().zip(y).enumerate() {
        if !a.is_finite() || !b.is_finite() {
            return Err(StatsError::NonFinite(i));
        }
    }
    Ok(())
}

/// Classification of all unordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    pub concordant: u64,
    pub discordant: u64,
    /// Tied in the indicator only.
    pub tied_x: u64,
    /// Tied in the outcome only.
    pub tied_y: u64,
    pub tied_both: u64,
}

impl PairCounts {
    pub fn classify(x: &[f64], y: &[f64]) -> Result<Self, StatsError> {
        check_pair(x, y)?;
        let mut c = PairCounts::default();
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let dx = x[j] - x[i];
                let dy = y[j] - y[i];
                match (dx == 0.0, dy == 0.0) {
                    (true, true) => c.tied_both += 1,
                    (false, true) => c.tied_y += 1,
                    (true, false) => c.tied_x += 1,
                    (false, false) if (dx > 0.0) == (dy > 0.0) => c.concordant += 1,
                    _ => c.discordant += 1,
                }
            }
        }
        Ok(c)
    }

    /// `P_K` as the exact ratio `(2 P_c + P_tx) / (2 (P_c + P_d + P_tx))`.
    pub fn pk_ratio(&self) -> Option<(u64, u64)> {
        let den = 2 * (self.concordant + self.discordant + self.tied_x);
        (den > 0).then_some((2 * self.concordant + self.tied_x, den))
    }
}

/// `P_K = (P_c + P_tx/2) / (P_c + P_d + P_tx)` over all unordered pairs;
/// pairs tied in the outcome are excluded. `None` when no pair remains.
pub fn prediction_probability(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    let c = PairCounts::classify(x, y)?;
    Ok(c.pk_ratio().map(|(n, d)| n as f64 / d as f64))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va == 0.0 || vb == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(cov / (va * vb).sqrt())
}

/// Spearman correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Sample standard deviation (`n - 1`).
pub fn sample_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `20 log10(std(signal) / std(noise))`.
pub fn snr_db(signal: &[f64], noise: &[f64]) -> Result<f64, StatsError> {
    if signal.len() < 2 || noise.len() < 2 {
        return Err(StatsError::TooShort);
    }
    let (s, n) = (sample_std(signal), sample_std(noise));
    if !(s > 0.0) || !(n > 0.0) {
        return Err(StatsError::ZeroVariance);
    }
    Ok(20.0 * (s / n).log10())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationTrace {
    pub times: Vec<f64>,
    pub c_et: Vec<f64>,
    pub c_eff: Vec<f64>,
    /// Per minute.
    pub ke0: f64,
}

/// Default equilibration rate constant, per minute.
pub const KE0_PER_MIN: f64 = 0.20;

/// Solves `dC_eff/dt = K_e0 (C_et - C_eff)` exactly with `C_et` held
/// constant between samples. Times in seconds, `K_e0` per minute.
pub fn effect_site(times: &[f64], c_et: &[f64], ke0_per_min: f64, c0: f64) -> Result<ConcentrationTrace, StatsError> {
    if times.len() != c_et.len() {
        return Err(StatsError::Length(times.len(), c_et.len()));
    }
    if !ke0_per_min.is_finite() || ke0_per_min < 0.0 {
        return Err(StatsError::Rate);
    }
    for (i, (t, c)) in times.iter().zip(c_et).enumerate() {
        if !t.is_finite() || !c.is_finite() {
            return Err(StatsError::NonFinite(i));
        }
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(StatsError::Times(i + 1));
    }
    let k = ke0_per_min / 60.0;
    let mut c_eff = Vec::with_capacity(times.len());
    let mut c = c0;
    for i in 0..times.len() {
        if i > 0 {
            let decay = (-k * (times[i] - times[i - 1])).exp();
            c = c_et[i - 1] + (c - c_et[i - 1]) * decay;
        }
        c_eff.push(c);
    }
    Ok(ConcentrationTrace { times: times.to_vec(), c_et: c_et.to_vec(), c_eff, ke0: ke0_per_min })
}

/// Mean weighted by, for example, record lengths.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Result<f64, StatsError> {
    if values.len() != weights.len() {
        return Err(StatsError::Length(values.len(), weights.len()));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
        return Err(StatsError::Weights);
    }
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total)
}
