//! Vanishing-moment spline wavelets, their Hilbert transforms and spectra.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg::binomial;
use crate::quadrature::GaussRule;
use crate::scalar::Real;
use crate::splines::{
    basis_on_span, derivative_coefficients, inner_product, marsden_coefficients, KnotSequence, SplineCurve,
    SplineError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VmError {
    #[error("wavelet orders must satisfy m >= 1 (got m={m}, n={n})")]
    Orders { m: usize, n: usize },
    #[error("derivative of an order-1 wavelet leaves the spline space")]
    DerivativeOfHaar,
    #[error("knot sequence too short: need index {need}, have {have} knots")]
    InsufficientKnots { need: usize, have: usize },
    #[error("moment system for B-splines {first}..={last} is rank deficient (singular value ratio {ratio:e})")]
    RankDeficient { first: usize, last: usize, ratio: f64 },
    #[error("Hilbert transform of N_{m} is log-singular at t={t}")]
    Singular { m: usize, t: f64 },
    #[error("boundary refinement needs K > 2m-1 (K={k}, m={m})")]
    BoundaryCount { k: usize, m: usize },
    #[error("interval length {length} too short for order {m}")]
    IntervalTooShort { length: f64, m: usize },
    #[error(transparent)]
    Spline(#[from] SplineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveletKind {
    Interior,
    BoundaryLeft,
    BoundaryRight,
}

/// `psi = sum_k q_k N_{m,k}` over a local knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VMWavelet<T> {
    m: usize,
    n: usize,
    curve: SplineCurve<T>,
    kind: WaveletKind,
}

impl<T: Real> VMWavelet<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> WaveletKind {
        self.kind
    }

    /// B-spline coefficients `q`.
    pub fn q(&self) -> &[T] {
        self.curve.coeffs()
    }

    pub fn knots(&self) -> &KnotSequence<T> {
        self.curve.knots()
    }

    pub fn curve(&self) -> &SplineCurve<T> {
        &self.curve
    }

    pub fn support(&self) -> (T, T) {
        (self.curve.knots().first(), self.curve.knots().last())
    }

    /// Knot spacing if the local knots are equally spaced.
    pub fn uniform_spacing(&self) -> Option<T> {
        let k = self.curve.knots().knots();
        let h = k[1] - k[0];
        let tol = T::lit(1e-12) * (k[k.len() - 1] - k[0]);
        (h > T::zero() && k.windows(2).all(|w| (w[1] - w[0] - h).abs() <= tol)).then_some(h)
    }

    pub fn eval(&self, x: T) -> T {
        let (a, b) = self.support();
        if x < a || x >= b {
            return T::zero();
        }
        self.curve.eval(x)
    }

    /// `int x^l psi(x) dx`, exact up to rounding.
    pub fn moment(&self, l: usize) -> T {
        let rule = GaussRule::new((self.m + l).div_ceil(2) + 1);
        let k = self.curve.knots().knots();
        let mut acc = T::zero();
        for w in k.windows(2) {
            if w[1] > w[0] {
                acc += rule.integrate(w[0], w[1], |x| x.powi(l as i32) * self.curve.eval(x));
            }
        }
        acc
    }
}

fn build<T: Real>(m: usize, n: usize, knots: Vec<T>, q: Vec<T>, kind: WaveletKind) -> Result<VMWavelet<T>, VmError> {
    let knots = KnotSequence::new(knots, m.max(1))?;
    Ok(VMWavelet { m, n, curve: SplineCurve::new(m, knots, q)?, kind })
}

/// Interior wavelet `psi_{m;n}(x) = sum_k (-1)^k C(n,k) N_m(2x-k) = N^{(n)}_{m+n}(2x)`
/// on half-integer knots `0, 1/2, ..., (m+n)/2`.
pub fn interior_vm<T: Real>(m: usize, n: usize) -> Result<VMWavelet<T>, VmError> {
    interior_vm_spaced(m, n, T::lit(0.5))
}

/// Interior wavelet with knot spacing `h`: `sum_k (-1)^k C(n,k) N_m(x/h - k)`.
pub fn interior_vm_spaced<T: Real>(m: usize, n: usize, h: T) -> Result<VMWavelet<T>, VmError> {
    if m == 0 {
        return Err(VmError::Orders { m, n });
    }
    let knots = (0..=m + n).map(|i| h * T::of_usize(i)).collect();
    let q = (0..=n)
        .map(|k| {
            let c = T::lit(binomial(n, k));
            if k % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect();
    build(m, n, knots, q, WaveletKind::Interior)
}

fn kind_of<T: Real>(full: &[T], first: usize, last_knot: usize) -> WaveletKind {
    if first + 1 < full.len() && full[first] == full[first + 1] {
        WaveletKind::BoundaryLeft
    } else if last_knot >= 1 && full[last_knot] == full[last_knot - 1] {
        WaveletKind::BoundaryRight
    } else {
        WaveletKind::Interior
    }
}

/// `psi = N^{(n)}_{m+n,k}` on arbitrary knots, expressed in order-`m`
/// B-splines.
pub fn vm_general_knots<T: Real>(knots: &KnotSequence<T>, m: usize, n: usize, k: usize) -> Result<VMWavelet<T>, VmError> {
    if m == 0 {
        return Err(VmError::Orders { m, n });
    }
    let full = knots.knots();
    if k + m + n >= full.len() {
        return Err(VmError::InsufficientKnots { need: k + m + n, have: full.len() });
    }
    let local = full[k..=k + m + n].to_vec();
    if local[m + n] <= local[0] {
        return Err(VmError::InsufficientKnots { need: k + m + n, have: full.len() });
    }
    let q = derivative_coefficients(&local, m + n, 0, n);
    build(m, n, local, q, kind_of(full, k, k + m + n))
}

/// Boundary (or interior) wavelet built from the B-splines `first..=first+n`
/// of `knots`: the coefficient vector spans the null space of the moment
/// matrix `d^l_k = sum_u c^l_u <N_k, N_u>`, `l < n`. Normalized to unit
/// Euclidean norm with the largest-magnitude entry positive.
pub fn boundary_vm<T: Real>(knots: &KnotSequence<T>, m: usize, n: usize, first: usize) -> Result<VMWavelet<T>, VmError> {
    if m == 0 || n == 0 {
        return Err(VmError::Orders { m, n });
    }
    let count = knots.basis_count(m);
    if first + n >= count {
        return Err(VmError::InsufficientKnots { need: first + n + m, have: knots.len() });
    }
    // powers below m go through Marsden's identity, higher ones are integrated directly
    let marsden: Vec<Vec<T>> = (0..n.min(m)).map(|l| marsden_coefficients(knots, m, l)).collect::<Result<_, _>>()?;
    let rows = n;
    let cols = n + 1;
    let mut a = DMatrix::<f64>::zeros(cols, cols);
    for l in 0..rows {
        let mut row = vec![0.0; cols];
        for (c, k) in (first..=first + n).enumerate() {
            let acc = if l < m {
                let lo = k.saturating_sub(m - 1);
                let hi = (k + m - 1).min(count - 1);
                let mut acc = T::zero();
                for u in lo..=hi {
                    acc += marsden[l][u] * inner_product(knots, m, k, u)?;
                }
                acc
            } else {
                bspline_moment(knots, m, k, l)
            };
            row[c] = acc.as_f64();
        }
        let scale = row.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (c, v) in row.into_iter().enumerate() {
            a[(l, c)] = if scale > 0.0 { v / scale } else { v };
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap());
    let smallest = sv[order[cols - 1]];
    let second = sv[order[cols - 2]];
    let ratio = second / smallest.max(f64::MIN_POSITIVE);
    if ratio < 1e6 || second <= 1e-10 * sv[order[0]] {
        return Err(VmError::RankDeficient { first, last: first + n, ratio });
    }
    let null = vt.row(order[cols - 1]);
    let norm = null.iter().map(|v| v * v).sum::<f64>().sqrt();
    let big = null.iter().fold(0.0f64, |b, v| if v.abs() > b.abs() { *v } else { b });
    let sign = if big < 0.0 { -1.0 } else { 1.0 };
    let q: Vec<T> = null.iter().map(|v| T::lit(sign * v / norm)).collect();
    let local = knots.knots()[first..=first + n + m].to_vec();
    build(m, n, local, q, kind_of(knots.knots(), first, first + n + m))
}

/// `(int x^l N_k)` computed directly, used to cross-check the moment matrix.
pub fn bspline_moment<T: Real>(knots: &KnotSequence<T>, m: usize, k: usize, l: usize) -> T {
    let rule = GaussRule::new((m + l).div_ceil(2) + 1);
    let full = knots.knots();
    let mut acc = T::zero();
    for i in k..k + m {
        let (a, b) = (full[i], full[i + 1]);
        if b <= a {
            continue;
        }
        let mu = i;
        for (x, w) in rule.points(a, b) {
            let vals = basis_on_span(full, mu, m, x);
            acc += w * x.powi(l as i32) * vals[k + m - 1 - mu];
        }
    }
    acc
}

/// Exact derivative: `psi' = psi_{m-1;n+1}` (times 2 on half-integer knots,
/// which the spline derivative carries automatically).
pub fn vm_derivative<T: Real>(w: &VMWavelet<T>) -> Result<VMWavelet<T>, VmError> {
    if w.m < 2 {
        return Err(VmError::DerivativeOfHaar);
    }
    let d = w.curve.derivative()?;
    Ok(VMWavelet { m: w.m - 1, n: w.n + 1, curve: d, kind: w.kind })
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.abs().ln()
    }
}

// the series ratio is at most 1/2 where it is used, so 2^-64 truncation
const FAR_TERMS: usize = 64;

fn rational(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact centred moments `int (x - m/2)^k N_m(x) dx`, `k < FAR_TERMS`: `N_m`
/// is the density of a sum of `m` uniforms on `[-1/2, 1/2]`.
fn exact_cardinal_moments(m: usize) -> Vec<BigRational> {
    let uniform: Vec<BigRational> = (0..FAR_TERMS)
        .map(|k| {
            if k % 2 == 1 {
                BigRational::zero()
            } else {
                BigRational::new(BigInt::one(), BigInt::from(k + 1) << k)
            }
        })
        .collect();
    let pascal = pascal_rows(FAR_TERMS);
    let mut sum: Vec<BigRational> = (0..FAR_TERMS).map(|k| if k == 0 { BigRational::one() } else { BigRational::zero() }).collect();
    for _ in 0..m {
        sum = (0..FAR_TERMS)
            .map(|k| {
                (0..=k)
                    .step_by(1)
                    .filter(|j| (k - j) % 2 == 0)
                    .fold(BigRational::zero(), |acc, j| acc + &sum[j] * &uniform[k - j] * &pascal[k][j])
            })
            .collect();
    }
    sum
}

fn pascal_rows(n: usize) -> Vec<Vec<BigRational>> {
    let mut rows: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    for k in 1..n {
        let prev = &rows[k - 1];
        let row = (0..=k)
            .map(|i| {
                let left = if i > 0 { prev[i - 1].clone() } else { BigInt::zero() };
                let right = if i < k { prev[i].clone() } else { BigInt::zero() };
                left + right
            })
            .collect();
        rows.push(row);
    }
    rows.into_iter().map(|r| r.into_iter().map(BigRational::from_integer).collect()).collect()
}

fn cardinal_moments(m: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().expect("moment cache").get(&m) {
        return v.clone();
    }
    let v: Arc<Vec<f64>> = Arc::new(exact_cardinal_moments(m).iter().map(to_f64).collect());
    cache.lock().expect("moment cache").insert(m, v.clone());
    v
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact centred moments of `sum_k (-1)^k C(n,k) N_m(x-k)` about `(m+n)/2`.
fn wavelet_moments(m: usize, n: usize) -> Vec<f64> {
    let mu = exact_cardinal_moments(m);
    let pascal = pascal_rows(FAR_TERMS);
    // shift of the k-th term centre relative to the wavelet centre: k - n/2
    let shifts: Vec<BigRational> = (0..=n)
        .map(|k| BigRational::new(BigInt::from(2 * k as i64 - n as i64), BigInt::from(2)))
        .collect();
    (0..FAR_TERMS)
        .map(|p| {
            // psi is symmetric (n even) or antisymmetric (n odd) about its centre
            if p < n || (p - n) % 2 == 1 {
                return 0.0;
            }
            let mut acc = BigRational::zero();
            for (k, d) in shifts.iter().enumerate() {
                let mut inner = BigRational::zero();
                let mut dp = BigRational::one();
                for i in (0..=p).rev() {
                    if !mu[i].is_zero() {
                        inner += &pascal[p][i] * &mu[i] * &dp;
                    }
                    dp *= d;
                }
                let c = rational(binomial(n, k).round() as i64);
                if k % 2 == 0 {
                    acc += c * inner;
                } else {
                    acc -= c * inner;
                }
            }
            to_f64(&acc)
        })
        .collect()
}

fn far_series(moments: &[f64], skip: usize, y: f64) -> f64 {
    let inv = 1.0 / y;
    let mut pw = inv.powi(skip as i32 + 1);
    let mut acc = 0.0;
    let mut prev = f64::INFINITY;
    for &mu in &moments[skip..] {
        let term = mu * pw;
        acc += term;
        // odd moments may vanish, so require two small terms in a row
        if term.abs() + prev.abs() < 1e-18 * acc.abs() {
            break;
        }
        prev = term;
        pw *= inv;
    }
    acc
}

/// Hilbert transform kernel of the cardinal B-spline without the `1/pi`
/// factor: `p.v. int N_m(x)/(t-x) dx`.
///
/// Near the support this uses `HN_r(t) = t/(r-1) HN_{r-1}(t) + (r-t)/(r-1) HN_{r-1}(t-1)`
/// started from the closed form of `HN_2`; for `|t - m/2| > m` it sums the
/// moment expansion, where the recursion loses accuracy.
pub fn hilbert_cardinal<T: Real>(m: usize, t: T) -> Result<T, VmError> {
    Ok(T::lit(hilbert_cardinal_f64(m, t.as_f64())?))
}

fn hilbert_cardinal_f64(m: usize, t: f64) -> Result<f64, VmError> {
    if m == 0 {
        return Err(VmError::Orders { m, n: 0 });
    }
    if m == 1 {
        if t == 0.0 || t == 1.0 {
            return Err(VmError::Singular { m, t });
        }
        return Ok((t / (t - 1.0)).abs().ln());
    }
    let c = m as f64 / 2.0;
    if (t - c).abs() > m as f64 {
        return Ok(far_series(&cardinal_moments(m), 0, t - c));
    }
    // level-2 values at t, t-1, ..., t-(m-2)
    let mut vals: Vec<f64> = (0..=m - 2)
        .map(|j| {
            let s = t - j as f64;
            xlogx(s) - 2.0 * xlogx(s - 1.0) + xlogx(s - 2.0)
        })
        .collect();
    for r in 3..=m {
        let rm1 = (r - 1) as f64;
        for j in 0..=m - r {
            let s = t - j as f64;
            vals[j] = s / rm1 * vals[j] + (r as f64 - s) / rm1 * vals[j + 1];
        }
    }
    Ok(vals[0])
}

/// Analytic wavelet `psi + i H psi` for the interior wavelet with knot
/// spacing `h`, evaluated in closed form.
#[derive(Debug, Clone)]
pub struct AnalyticVm<T> {
    wavelet: VMWavelet<T>,
    h: T,
    moments: Vec<f64>,
}

impl<T: Real> AnalyticVm<T> {
    pub fn new(m: usize, n: usize, h: T) -> Result<Self, VmError> {
        let wavelet = interior_vm_spaced(m, n, h)?;
        let moments = wavelet_moments(m, n);
        Ok(AnalyticVm { wavelet, h, moments })
    }

    pub fn wavelet(&self) -> &VMWavelet<T> {
        &self.wavelet
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    /// `p.v. int psi(x)/(t-x) dx` (no `1/pi`).
    pub fn hilbert_raw(&self, t: T) -> Result<T, VmError> {
        let (m, n) = (self.wavelet.m, self.wavelet.n);
        let u = (t / self.h).as_f64();
        let c = (m + n) as f64 / 2.0;
        if (u - c).abs() > (m + n) as f64 {
            return Ok(T::lit(far_series(&self.moments, n, u - c)));
        }
        let mut acc = 0.0;
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binomial(n, k) * hilbert_cardinal_f64(m, u - k as f64)?;
        }
        Ok(T::lit(acc))
    }

    /// `psi(t) + i (1/pi) p.v. int psi(x)/(t-x) dx`.
    pub fn eval(&self, t: T) -> Result<Complex<T>, VmError> {
        let im = self.hilbert_raw(t)? / T::PI();
        Ok(Complex::new(self.wavelet.eval(t), im))
    }
}

/// Complex samples of the analytic interior wavelet `psi_{m;n}` (half-integer
/// knots) on `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticWaveletSamples<T> {
    pub grid: Vec<T>,
    pub values: Vec<Complex<T>>,
}

pub fn analytic_vm<T: Real>(m: usize, n: usize, grid: &[T]) -> Result<AnalyticWaveletSamples<T>, VmError> {
    let a = AnalyticVm::new(m, n, T::lit(0.5))?;
    let values = grid.iter().map(|&t| a.eval(t)).collect::<Result<Vec<_>, _>>()?;
    Ok(AnalyticWaveletSamples { grid: grid.to_vec(), values })
}

/// Magnitude spectrum and side-lobe ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport<T> {
    pub omega: Vec<T>,
    pub magnitude: Vec<T>,
    pub slr_db: T,
}

/// `psi^(omega) = int psi(x) e^{-i x omega} dx`.
pub fn fourier<T: Real>(w: &VMWavelet<T>, omega: T) -> Complex<T> {
    let k = w.knots().knots();
    let m = w.m;
    if let Some(h) = w.uniform_spacing() {
        // N_m on knots a, a+h, ...: h e^{-i omega a} ((1 - e^{-i omega h})/(i omega h))^m
        let z = omega * h;
        let base = if z.abs() < T::lit(1e-8) {
            Complex::new(T::one(), -z / T::lit(2.0))
        } else {
            let e = Complex::new(z.cos(), -z.sin());
            (Complex::new(T::one(), T::zero()) - e) / Complex::new(T::zero(), z)
        };
        let bm = base.powi(m as i32) * h;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (j, q) in w.q().iter().enumerate() {
            let a = k[j];
            acc = acc + Complex::new((omega * a).cos(), -(omega * a).sin()) * *q;
        }
        return acc * bm;
    }
    let rule = GaussRule::new(24);
    let mut acc = Complex::new(T::zero(), T::zero());
    for win in k.windows(2) {
        if win[1] <= win[0] {
            continue;
        }
        let pieces = ((omega.abs() * (win[1] - win[0])).as_f64() / 4.0).ceil().max(1.0) as usize;
        for p in 0..pieces {
            let a = win[0] + (win[1] - win[0]) * T::of_usize(p) / T::of_usize(pieces);
            let b = win[0] + (win[1] - win[0]) * T::of_usize(p + 1) / T::of_usize(pieces);
            for (x, wt) in rule.points(a, b) {
                let v = w.curve.eval(x) * wt;
                acc = acc + Complex::new((omega * x).cos(), -(omega * x).sin()) * v;
            }
        }
    }
    acc
}

/// Bound `J` with `|psi^(omega)| <= J / |omega|^m`: total jump of the
/// piecewise-constant `(m-1)`-th derivative.
fn decay_constant<T: Real>(w: &VMWavelet<T>) -> T {
    let mut c = w.curve.clone();
    for _ in 0..w.m - 1 {
        c = c.derivative().expect("order >= 2");
    }
    let k = w.knots().knots();
    let mut prev = T::zero();
    let mut total = T::zero();
    for win in k.windows(2) {
        if win[1] > win[0] {
            let v = c.eval((win[0] + win[1]) / T::lit(2.0));
            total += (v - prev).abs();
            prev = v;
        }
    }
    total + prev.abs()
}

/// `|psi^|` on `density` points per `pi/h` up to `64 pi/h`, and
/// `SLR = 20 log10(||psi^||_{(0,pi/h]} / ||psi^||_{(pi/h,inf)})`, `h` the
/// mean knot spacing. The integral beyond `64 pi/h` is replaced by the
/// bound `J^2 W^{1-2m}/(2m-1)`.
pub fn spectrum_and_slr<T: Real>(w: &VMWavelet<T>, density: usize) -> Result<SpectrumReport<T>, VmError> {
    if w.m < 2 {
        return Err(VmError::Orders { m: w.m, n: w.n });
    }
    let density = density.max(1);
    let k = w.knots().knots();
    let h = (k[k.len() - 1] - k[0]) / T::of_usize(k.len() - 1);
    let unit = T::PI() / h;
    let cells = 64 * density;
    let rule = GaussRule::new(12);
    let mut omega = Vec::with_capacity(cells + 1);
    let mut magnitude = Vec::with_capacity(cells + 1);
    let mut main = T::zero();
    let mut side = T::zero();
    for c in 0..cells {
        let a = unit * T::of_usize(c) / T::of_usize(density);
        let b = unit * T::of_usize(c + 1) / T::of_usize(density);
        omega.push(a);
        magnitude.push(fourier(w, a).norm());
        let e = rule.integrate(a, b, |x| fourier(w, x).norm_sqr());
        if c < density {
            main += e;
        } else {
            side += e;
        }
    }
    let top = unit * T::of_usize(64);
    omega.push(top);
    magnitude.push(fourier(w, top).norm());
    let j = decay_constant(w);
    let two_m = T::of_usize(2 * w.m);
    side += j * j * top.powf(T::one() - two_m) / (two_m - T::one());
    let slr_db = T::lit(10.0) * (main / side).log10();
    Ok(SpectrumReport { omega, magnitude, slr_db })
}

/// `L^2` distance between `(M/12)^{(n+1)/2} psi_{m;n}(sqrt(M/48) x + M/4)` and
/// the `n`-th derivative of the standard Gaussian, `M = m + n`.
pub fn gaussian_asymptotics_distance<T: Real>(m: usize, n: usize) -> Result<T, VmError> {
    if m < 2 {
        return Err(VmError::Orders { m, n });
    }
    let w = interior_vm::<f64>(m, n)?;
    let big_m = (m + n) as f64;
    let sigma = (big_m / 12.0).sqrt();
    let amp = sigma.powi(n as i32 + 1);
    let arg_scale = (big_m / 48.0).sqrt();
    let f = |x: f64| amp * w.eval(arg_scale * x + big_m / 4.0);
    let g = |x: f64| gaussian_derivative(n, x);
    let edge = big_m / 2.0 / sigma;
    let reach = edge.max(12.0) + 4.0;
    let mut breaks: Vec<f64> = (0..=m + n).map(|k| (k as f64 - big_m / 2.0) / sigma).collect();
    let mut x = -reach;
    while x < breaks[0] {
        breaks.push(x);
        x += 0.5;
    }
    let mut x = reach;
    while x > breaks[m + n] {
        breaks.push(x);
        x -= 0.5;
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rule = GaussRule::<f64>::new(16);
    let mut acc = 0.0;
    for win in breaks.windows(2) {
        if win[1] > win[0] {
            for sub in 0..4 {
                let a = win[0] + (win[1] - win[0]) * sub as f64 / 4.0;
                let b = win[0] + (win[1] - win[0]) * (sub + 1) as f64 / 4.0;
                acc += rule.integrate(a, b, |x| (f(x) - g(x)).powi(2));
            }
        }
    }
    Ok(T::lit(acc.sqrt()))
}

/// `d^n/dx^n (2 pi)^{-1/2} e^{-x^2/2} = (-1)^n He_n(x) g(x)`.
pub fn gaussian_derivative(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    let he = if n == 0 {
        1.0
    } else {
        for k in 1..n {
            let h2 = x * h1 - k as f64 * h0;
            h0 = h1;
            h1 = h2;
        }
        h1
    };
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * he * (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Admissible scales on an interval of length `N`: interior wavelets
/// `psi_{m;m}` scaled by `a <= (N+1)/m - 2` and centred on the interval stay
/// clear of the boundary wavelets, whose refinement scale is
/// `(2m-1)/(2(K+1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalePlan<T> {
    pub length: T,
    pub m: usize,
    pub max_interior_scale: T,
    pub boundary_scale: T,
}

impl<T: Real> ScalePlan<T> {
    /// Support of the centred interior wavelet at scale `a`.
    pub fn interior_support(&self, a: T) -> (T, T) {
        let half = a * T::of_usize(self.m) / T::lit(2.0);
        let c = self.length / T::lit(2.0);
        (c - half, c + half)
    }

    /// Extent of the boundary wavelets at each end, `m - 1/2`.
    pub fn boundary_reach(&self) -> T {
        T::of_usize(self.m) - T::lit(0.5)
    }

    /// `count` equally spaced scales in `(0, max_interior_scale]`.
    pub fn scales(&self, count: usize) -> Vec<T> {
        (1..=count)
            .map(|i| self.max_interior_scale * T::of_usize(i) / T::of_usize(count))
            .collect()
    }
}

pub fn boundary_scale_plan<T: Real>(length: T, m: usize, k: usize) -> Result<ScalePlan<T>, VmError> {
    if m == 0 {
        return Err(VmError::Orders { m, n: m });
    }
    if k <= 2 * m - 1 {
        return Err(VmError::BoundaryCount { k, m });
    }
    let max = (length + T::one()) / T::of_usize(m) - T::lit(2.0);
    if max <= T::zero() {
        return Err(VmError::IntervalTooShort { length: length.as_f64(), m });
    }
    Ok(ScalePlan {
        length,
        m,
        max_interior_scale: max,
        boundary_scale: T::of_usize(2 * m - 1) / T::of_usize(2 * (k + 1)),
    })
}
