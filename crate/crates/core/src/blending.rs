//! Quasi-interpolation, completely local interpolation and their blend.
//!
//! Index conventions: with data times `t_0 < ... < t_n`, the data spline space
//! uses the knot vector with `t_0` and `t_n` of multiplicity `m`; its B-spline
//! `i` starts at data index `i - (m-1)`. The output lives on the refined knots
//! `s`, stacked the same way.

use std::collections::VecDeque;

use thiserror::Error;

use crate::linalg::{binomial, elementary_symmetric, solve};
use crate::scalar::Real;
use crate::splines::{basis_on_span, eval_bspline, KnotSequence, SplineCurve, SplineError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlendError {
    #[error("blending needs order m >= 2, got {0}")]
    Order(usize),
    #[error("need at least {need} samples for order {m}, got {got}")]
    TooFewSamples { need: usize, got: usize, m: usize },
    #[error("sample times must be strictly increasing (index {index})")]
    NonMonotone { index: usize },
    #[error("times and values differ in length ({times} vs {values})")]
    Length { times: usize, values: usize },
    #[error("degenerate Vandermonde system for basis {basis}")]
    Degenerate { basis: usize },
    #[error("local basis {index} has zero normalizer")]
    ZeroNormalizer { index: usize },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// Weights of one quasi-interpolation functional: the coefficient of data
/// B-spline `basis` is `sum_r a[r] * g(t[start + r])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiCoeffRow<T> {
    pub basis: usize,
    pub start: usize,
    pub a: Vec<T>,
}

trait Samples<T> {
    fn time(&self, i: usize) -> T;
    fn value(&self, i: usize) -> T;
}

struct Slices<'a, T> {
    t: &'a [T],
    g: &'a [T],
}

impl<T: Copy> Samples<T> for Slices<'_, T> {
    fn time(&self, i: usize) -> T {
        self.t[i]
    }
    fn value(&self, i: usize) -> T {
        self.g[i]
    }
}

struct TimesOnly<'a, T>(&'a [T]);

impl<T: Copy + num_traits::Zero> Samples<T> for TimesOnly<'_, T> {
    fn time(&self, i: usize) -> T {
        self.0[i]
    }
    fn value(&self, _: usize) -> T {
        T::zero()
    }
}

/// Index arithmetic for order `m` over data `0..=n`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    m: usize,
    n: usize,
}

impl Layout {
    /// Subintervals of the refined knots inside data interval `p`.
    fn pieces(&self, p: usize) -> usize {
        let m = self.m;
        if m % 2 == 0 {
            m / 2
        } else if p % 2 == 0 {
            m.div_ceil(2)
        } else {
            (m - 1) / 2
        }
    }

    /// Position of data knot `j` in the refined sequence.
    fn pos(&self, j: usize) -> usize {
        let m = self.m;
        if m % 2 == 0 {
            j * m / 2
        } else {
            (j / 2) * m + if j % 2 == 1 { m.div_ceil(2) } else { 0 }
        }
    }

    /// Data interval and offset of refined position `q`.
    fn locate(&self, q: usize) -> (usize, usize) {
        let m = self.m;
        if m % 2 == 0 {
            (q / (m / 2), q % (m / 2))
        } else {
            let (pair, rem) = (q / m, q % m);
            let first = m.div_ceil(2);
            if rem < first {
                (2 * pair, rem)
            } else {
                (2 * pair + 1, rem - first)
            }
        }
    }

    fn refined_len(&self) -> usize {
        self.pos(self.n) + 1
    }

    fn data_basis_count(&self) -> usize {
        self.n + self.m - 1
    }

    fn refined_basis_count(&self) -> usize {
        self.pos(self.n) + self.m - 1
    }

    /// Refined basis index carrying the local interpolant `L_j`.
    fn local_index(&self, j: usize) -> usize {
        if j == 0 {
            0
        } else if j == self.n {
            self.refined_basis_count() - 1
        } else {
            self.pos(j - 1) + self.m - 1
        }
    }

    fn t_knot<T: Real>(&self, s: &impl Samples<T>, i: usize) -> T {
        let d = i as isize - (self.m as isize - 1);
        s.time(d.clamp(0, self.n as isize) as usize)
    }

    fn refined<T: Real>(&self, s: &impl Samples<T>, q: usize) -> T {
        if q >= self.pos(self.n) {
            return s.time(self.n);
        }
        let (p, off) = self.locate(q);
        if off == 0 {
            return s.time(p);
        }
        let (a, b) = (s.time(p), s.time(p + 1));
        a + (b - a) * T::of_usize(off) / T::of_usize(self.pieces(p))
    }

    fn s_knot<T: Real>(&self, s: &impl Samples<T>, q: usize) -> T {
        let d = q as isize - (self.m as isize - 1);
        self.refined(s, d.clamp(0, self.pos(self.n) as isize) as usize)
    }

    /// Stencil start for data B-spline `i`.
    fn stencil_start(&self, i: usize) -> usize {
        let d = i as isize - (self.m as isize - 1);
        d.clamp(0, (self.n + 1 - self.m) as isize) as usize
    }

    fn quasi_row<T: Real>(&self, s: &impl Samples<T>, i: usize) -> Result<QuasiCoeffRow<T>, BlendError> {
        let m = self.m;
        let start = self.stencil_start(i);
        let lo = s.time(start);
        let hi = s.time(start + m - 1);
        let centre = (lo + hi) / T::lit(2.0);
        let half = (hi - lo) / T::lit(2.0);
        let knots: Vec<T> = (i + 1..i + m).map(|q| (self.t_knot(s, q) - centre) / half).collect();
        let e = elementary_symmetric(&knots);
        let mut mat = vec![T::zero(); m * m];
        let mut rhs = vec![T::zero(); m];
        for r in 0..m {
            let x = (s.time(start + r) - centre) / half;
            let mut p = T::one();
            for l in 0..m {
                mat[l * m + r] = p;
                p *= x;
            }
        }
        for (l, slot) in rhs.iter_mut().enumerate() {
            *slot = e[l] / T::lit(binomial(m - 1, l));
        }
        let a = solve(mat, rhs, m, T::epsilon() * T::lit(16.0)).ok_or(BlendError::Degenerate { basis: i })?;
        Ok(QuasiCoeffRow { basis: i, start, a })
    }

    fn data_coef<T: Real>(&self, s: &impl Samples<T>, i: usize) -> Result<T, BlendError> {
        let row = self.quasi_row(s, i)?;
        let mut acc = T::zero();
        for (r, a) in row.a.iter().enumerate() {
            acc += *a * s.value(row.start + r);
        }
        Ok(acc)
    }

    /// Blossom of the quasi-interpolant's polynomial piece on data interval
    /// `p`, evaluated at `args` (length `m-1`).
    fn blossom<T: Real>(&self, s: &impl Samples<T>, p: usize, args: &[T]) -> Result<T, BlendError> {
        let d = self.m - 1;
        let mu = p + d;
        let mut c = Vec::with_capacity(d + 1);
        for i in mu - d..=mu {
            c.push(self.data_coef(s, i)?);
        }
        let knots: Vec<T> = (0..=2 * d).map(|q| self.t_knot(s, mu - d + q)).collect();
        for (r, &x) in args.iter().enumerate() {
            let r = r + 1;
            for q in (r..=d).rev() {
                let den = knots[q + d + 1 - r] - knots[q];
                let alpha = (x - knots[q]) / den;
                c[q] = (T::one() - alpha) * c[q - 1] + alpha * c[q];
            }
        }
        Ok(c[d])
    }

    fn quasi_at_data<T: Real>(&self, s: &impl Samples<T>, j: usize) -> Result<T, BlendError> {
        let p = if j == self.n { j - 1 } else { j };
        let x = s.time(j);
        self.blossom(s, p, &vec![x; self.m - 1])
    }

    fn normalizer<T: Real>(&self, s: &impl Samples<T>, j: usize) -> Result<T, BlendError> {
        if j == 0 || j == self.n {
            return Ok(T::one());
        }
        let lo = self.pos(j - 1);
        let knots: Vec<T> = (lo..=lo + self.m).map(|q| self.refined(s, q)).collect();
        let mu = self.pos(j) - lo;
        let v = basis_on_span(&knots, mu, self.m, s.time(j))[self.m - 1 - mu];
        if v > T::zero() {
            Ok(v)
        } else {
            Err(BlendError::ZeroNormalizer { index: j })
        }
    }

    /// Data index of the correction stored at refined basis `l`, if any.
    fn correction_owner(&self, l: usize) -> Option<usize> {
        if l == 0 {
            return Some(0);
        }
        if l == self.refined_basis_count() - 1 {
            return Some(self.n);
        }
        let q = l.checked_sub(self.m - 1)?;
        let (p, off) = self.locate(q);
        (off == 0 && p + 1 < self.n).then_some(p + 1)
    }

    /// Data interval containing the left knot of refined basis `l`.
    fn interval_of(&self, l: usize) -> usize {
        let q = l.saturating_sub(self.m - 1).min(self.pos(self.n) - 1);
        self.locate(q).0
    }

    fn refined_coef<T: Real>(&self, s: &impl Samples<T>, l: usize) -> Result<T, BlendError> {
        let p = self.interval_of(l);
        let args: Vec<T> = (l + 1..l + self.m).map(|q| self.s_knot(s, q)).collect();
        let mut v = self.blossom(s, p, &args)?;
        if let Some(j) = self.correction_owner(l) {
            let residual = s.value(j) - self.quasi_at_data(s, j)?;
            v += residual / self.normalizer(s, j)?;
        }
        Ok(v)
    }

    fn refined_knots<T: Real>(&self, s: &impl Samples<T>) -> Vec<T> {
        (0..self.refined_len()).map(|q| self.refined(s, q)).collect()
    }
}

fn validate<T: Real>(t: &[T], m: usize) -> Result<(), BlendError> {
    if m < 2 {
        return Err(BlendError::Order(m));
    }
    if t.len() < 2 * m {
        return Err(BlendError::TooFewSamples { need: 2 * m, got: t.len(), m });
    }
    for (i, x) in t.iter().enumerate() {
        if !x.is_finite() {
            return Err(BlendError::NonFinite { index: i });
        }
        if i > 0 && *x <= t[i - 1] {
            return Err(BlendError::NonMonotone { index: i });
        }
    }
    Ok(())
}

/// Refined knot sequence `s` (without end stacking): `m/2 - 1` equally spaced
/// insertions per interval for even `m`; for odd `m`, `(m-1)/2` insertions in
/// intervals starting at even data indices and `(m-3)/2` in the others.
pub fn refine_knots<T: Real>(t: &[T], m: usize) -> Result<Vec<T>, BlendError> {
    if m < 2 {
        return Err(BlendError::Order(m));
    }
    if t.len() < 2 {
        return Err(BlendError::TooFewSamples { need: 2, got: t.len(), m });
    }
    for i in 1..t.len() {
        if t[i] <= t[i - 1] {
            return Err(BlendError::NonMonotone { index: i });
        }
    }
    let layout = Layout { m, n: t.len() - 1 };
    Ok(layout.refined_knots(&TimesOnly(t)))
}

/// Quasi-interpolation weights of data B-spline `basis` for data times `t`.
pub fn quasi_coeffs<T: Real>(t: &[T], m: usize, basis: usize) -> Result<QuasiCoeffRow<T>, BlendError> {
    if m < 2 {
        return Err(BlendError::Order(m));
    }
    if t.len() < m {
        return Err(BlendError::TooFewSamples { need: m, got: t.len(), m });
    }
    let layout = Layout { m, n: t.len() - 1 };
    if basis >= layout.data_basis_count() {
        return Err(SplineError::BadIndex { k: basis, m, count: layout.data_basis_count() }.into());
    }
    layout.quasi_row(&TimesOnly(t), basis)
}

/// `C^{m-1}/(m-1)!` with `C` the local mesh ratio (widest `m`-gap span over
/// narrowest gap) on the data knots touched by `row`: its stencil and the
/// support of its B-spline.
pub fn coefficient_bound<T: Real>(t: &[T], m: usize, row: &QuasiCoeffRow<T>) -> T {
    let n = t.len() - 1;
    let lo = (row.basis as isize - (m as isize - 1)).max(0) as usize;
    let lo = lo.min(row.start);
    let hi = (row.basis + 1).min(n).max(row.start + m - 1);
    let mut min_gap = T::infinity();
    let mut max_span = T::zero();
    for j in lo..hi {
        min_gap = min_gap.min(t[j + 1] - t[j]);
        max_span = max_span.max(t[(j + m).min(hi)] - t[j]);
    }
    let c = max_span / min_gap;
    let fact: T = (1..m).map(T::of_usize).fold(T::one(), |a, b| a * b);
    c.powi(m as i32 - 1) / fact
}

/// Precomputed structure of the blending operator for fixed data times.
#[derive(Debug, Clone)]
pub struct BlendingModel<T> {
    m: usize,
    times: Vec<T>,
    data_knots: KnotSequence<T>,
    refined_knots: KnotSequence<T>,
    rows: Vec<QuasiCoeffRow<T>>,
    normalizers: Vec<T>,
}

impl<T: Real> BlendingModel<T> {
    pub fn new(times: &[T], m: usize) -> Result<Self, BlendError> {
        validate(times, m)?;
        let layout = Layout { m, n: times.len() - 1 };
        let s = TimesOnly(times);
        let rows = (0..layout.data_basis_count())
            .map(|i| layout.quasi_row(&s, i))
            .collect::<Result<Vec<_>, _>>()?;
        let normalizers = (0..times.len())
            .map(|j| layout.normalizer(&s, j))
            .collect::<Result<Vec<_>, _>>()?;
        let refined = layout.refined_knots(&s);
        Ok(BlendingModel {
            m,
            times: times.to_vec(),
            data_knots: KnotSequence::clamped(times, m)?,
            refined_knots: KnotSequence::clamped(&refined, m)?,
            rows,
            normalizers,
        })
    }

    fn layout(&self) -> Layout {
        Layout { m: self.m, n: self.times.len() - 1 }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    /// Data knot vector with `m`-fold ends.
    pub fn data_knots(&self) -> &KnotSequence<T> {
        &self.data_knots
    }

    /// Refined knot vector with `m`-fold ends.
    pub fn refined_knots(&self) -> &KnotSequence<T> {
        &self.refined_knots
    }

    pub fn quasi_rows(&self) -> &[QuasiCoeffRow<T>] {
        &self.rows
    }

    /// `N_{s,m,l}(t_j)` for the B-spline carrying `L_j`.
    pub fn normalizer(&self, j: usize) -> T {
        self.normalizers[j]
    }

    /// Refined-knot B-spline index carrying `L_j`.
    pub fn local_basis_index(&self, j: usize) -> usize {
        self.layout().local_index(j)
    }

    /// Position of data knot `j` inside the refined sequence.
    pub fn refined_position(&self, j: usize) -> usize {
        self.layout().pos(j)
    }

    /// `L_{s,m,j}(t)`: equals 1 at `t_j`, vanishes at every other data knot
    /// and outside `[t_{j-1}, t_{j+1}]`.
    pub fn local_basis_eval(&self, j: usize, t: T) -> Result<T, BlendError> {
        if j >= self.times.len() {
            return Err(SplineError::BadIndex { k: j, m: self.m, count: self.times.len() }.into());
        }
        let v = eval_bspline(&self.refined_knots, self.m, self.local_basis_index(j), t)?;
        Ok(v / self.normalizers[j])
    }

    /// `Q_m g` as a spline on the data knots.
    pub fn quasi_interpolant(&self, values: &[T]) -> Result<SplineCurve<T>, BlendError> {
        self.check_values(values)?;
        let coeffs = self
            .rows
            .iter()
            .map(|row| row.a.iter().enumerate().map(|(r, a)| *a * values[row.start + r]).sum())
            .collect();
        Ok(SplineCurve::new(self.m, self.data_knots.clone(), coeffs)?)
    }

    /// The quasi-interpolation basis function `M_k` (response to the unit
    /// sample at data index `k`) expressed on the refined knots.
    pub fn quasi_basis_refined(&self, k: usize) -> Result<SplineCurve<T>, BlendError> {
        let mut unit = vec![T::zero(); self.times.len()];
        unit[k] = T::one();
        let layout = self.layout();
        let s = Slices { t: &self.times, g: &unit };
        let mut coeffs = Vec::with_capacity(layout.refined_basis_count());
        for l in 0..layout.refined_basis_count() {
            let p = layout.interval_of(l);
            let args: Vec<T> = (l + 1..l + self.m).map(|q| layout.s_knot(&s, q)).collect();
            coeffs.push(layout.blossom(&s, p, &args)?);
        }
        Ok(SplineCurve::new(self.m, self.refined_knots.clone(), coeffs)?)
    }

    fn check_values(&self, values: &[T]) -> Result<(), BlendError> {
        if values.len() != self.times.len() {
            return Err(BlendError::Length { times: self.times.len(), values: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(BlendError::NonFinite { index: i });
        }
        Ok(())
    }

    /// `P_m g = Q_m g + sum_j (g(t_j) - Q_m g(t_j)) L_j` on the refined knots.
    pub fn apply(&self, values: &[T]) -> Result<SplineCurve<T>, BlendError> {
        self.check_values(values)?;
        let layout = self.layout();
        let s = Slices { t: &self.times, g: values };
        let coeffs = (0..layout.refined_basis_count())
            .map(|l| layout.refined_coef(&s, l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SplineCurve::new(self.m, self.refined_knots.clone(), coeffs)?)
    }
}

/// Blending interpolation of `(times, values)` with order `m`.
pub fn blend_interpolate<T: Real>(times: &[T], values: &[T], m: usize) -> Result<SplineCurve<T>, BlendError> {
    if times.len() != values.len() {
        return Err(BlendError::Length { times: times.len(), values: values.len() });
    }
    BlendingModel::new(times, m)?.apply(values)
}

/// Coefficients committed by one streaming step: refined-basis indices
/// `first..first + coeffs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommittedSegment<T> {
    pub first: usize,
    pub coeffs: Vec<T>,
}

struct Ring<'a, T> {
    base: usize,
    t: &'a VecDeque<T>,
    g: &'a VecDeque<T>,
}

impl<T: Copy> Samples<T> for Ring<'_, T> {
    fn time(&self, i: usize) -> T {
        self.t[i - self.base]
    }
    fn value(&self, i: usize) -> T {
        self.g[i - self.base]
    }
}

/// Streaming blending interpolation. Committed coefficients are final and
/// equal to the batch result on the full data.
#[derive(Debug, Clone)]
pub struct StreamState<T> {
    m: usize,
    base: usize,
    t: VecDeque<T>,
    g: VecDeque<T>,
    count: usize,
    next: usize,
    knots: Vec<T>,
    committed: Vec<T>,
}

impl<T: Real> StreamState<T> {
    pub fn new(m: usize) -> Result<Self, BlendError> {
        if m < 2 {
            return Err(BlendError::Order(m));
        }
        Ok(StreamState {
            m,
            base: 0,
            t: VecDeque::new(),
            g: VecDeque::new(),
            count: 0,
            next: 0,
            knots: Vec::new(),
            committed: Vec::new(),
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// Samples retained for future coefficients.
    pub fn buffer_len(&self) -> usize {
        self.t.len()
    }

    /// Upper bound on [`Self::buffer_len`].
    pub fn buffer_capacity(&self) -> usize {
        4 * self.m + 4
    }

    /// All coefficients committed so far.
    pub fn committed(&self) -> &[T] {
        &self.committed
    }

    /// Refined knots (without end stacking) over the samples seen so far.
    pub fn refined_knots(&self) -> &[T] {
        &self.knots
    }

    /// Time up to which the committed coefficients fully determine the curve.
    pub fn committed_until(&self) -> Option<T> {
        let c = self.committed.len();
        if c < self.m {
            return None;
        }
        // refined basis c-1 is the last known; curve final up to S(c)
        let q = (c as isize - (self.m as isize - 1)).max(0) as usize;
        self.knots.get(q).copied()
    }

    /// Value of the committed curve at `x`, or `None` if not yet final there.
    pub fn eval_committed(&self, x: T) -> Option<T> {
        let until = self.committed_until()?;
        if x > until || self.knots.is_empty() || x < self.knots[0] {
            return None;
        }
        let m = self.m;
        let q = self.knots.partition_point(|k| *k <= x).max(1) - 1;
        let mu = q + m - 1;
        let lo = mu + 1 - m;
        let local: Vec<T> = (lo..=mu + m).map(|i| self.stacked(i)).collect();
        let vals = basis_on_span(&local, m - 1, m, x);
        let mut acc = T::zero();
        for (j, v) in vals.iter().enumerate() {
            acc += *v * *self.committed.get(lo + j)?;
        }
        Some(acc)
    }

    fn stacked(&self, i: usize) -> T {
        let d = i as isize - (self.m as isize - 1);
        self.knots[d.clamp(0, self.knots.len() as isize - 1) as usize]
    }

    fn layout(&self) -> Layout {
        Layout { m: self.m, n: self.count - 1 }
    }

    /// Feeds one sample; returns coefficients that became final.
    pub fn push(&mut self, time: T, value: T) -> Result<CommittedSegment<T>, BlendError> {
        if !time.is_finite() || !value.is_finite() {
            return Err(BlendError::NonFinite { index: self.count });
        }
        if let Some(&last) = self.t.back() {
            if time <= last {
                return Err(BlendError::NonMonotone { index: self.count });
            }
        }
        self.t.push_back(time);
        self.g.push_back(value);
        self.count += 1;
        if self.count >= 2 {
            let layout = self.layout();
            let p = self.count - 2;
            let (a, b) = (self.t[self.t.len() - 2], time);
            let pieces = layout.pieces(p);
            for off in 1..pieces {
                self.knots.push(a + (b - a) * T::of_usize(off) / T::of_usize(pieces));
            }
        }
        self.knots.push(time);
        let first = self.next;
        let mut coeffs = Vec::new();
        if self.count >= 2 * self.m {
            let layout = self.layout();
            let n = layout.n;
            let ring = Ring { base: self.base, t: &self.t, g: &self.g };
            while self.next < layout.refined_basis_count() {
                let p = layout.interval_of(self.next);
                if p + self.m + 1 > n {
                    break;
                }
                let c = layout.refined_coef(&ring, self.next)?;
                coeffs.push(c);
                self.next += 1;
            }
        }
        self.committed.extend_from_slice(&coeffs);
        while self.t.len() > self.buffer_capacity() {
            self.t.pop_front();
            self.g.pop_front();
            self.base += 1;
        }
        Ok(CommittedSegment { first, coeffs })
    }

    /// Commits the remaining coefficients using the stacked right end and
    /// returns the full curve.
    pub fn finish(mut self) -> Result<(CommittedSegment<T>, SplineCurve<T>), BlendError> {
        if self.count < 2 * self.m {
            return Err(BlendError::TooFewSamples { need: 2 * self.m, got: self.count, m: self.m });
        }
        let layout = self.layout();
        let ring = Ring { base: self.base, t: &self.t, g: &self.g };
        let first = self.next;
        let mut coeffs = Vec::new();
        while self.next < layout.refined_basis_count() {
            coeffs.push(layout.refined_coef(&ring, self.next)?);
            self.next += 1;
        }
        self.committed.extend_from_slice(&coeffs);
        let knots = KnotSequence::clamped(&self.knots, self.m)?;
        let curve = SplineCurve::new(self.m, knots, self.committed)?;
        Ok((CommittedSegment { first, coeffs }, curve))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jittered(n: usize, seed: u64) -> Vec<f64> {
        // deterministic irregular grid
        let mut x = 0.0;
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                x += 0.3 + u;
                x
            })
            .collect()
    }

    #[test]
    fn refinement_examples() {
        assert_eq!(refine_knots(&[0.0, 1.0, 2.0], 4).unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(refine_knots(&[0.0, 1.0, 2.0], 3).unwrap(), vec![0.0, 0.5, 1.0, 2.0]);
        let s = refine_knots(&[0.0, 2.0], 6).unwrap();
        let want: [f64; 4] = [0.0, 2.0 / 3.0, 4.0 / 3.0, 2.0];
        assert_eq!(s.len(), 4);
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let s5 = refine_knots(&[0.0, 1.0, 2.0, 3.0], 5).unwrap();
        assert_eq!(s5, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.5, 2.0, 2.0 + 1.0 / 3.0, 2.0 + 2.0 / 3.0, 3.0]);
    }

    #[test]
    fn two_point_rows_match_determinant_oracle() {
        let t: Vec<f64> = (0..8).map(|i| i as f64 * 0.5).collect();
        for i in 1..8 {
            let row = quasi_coeffs(&t, 2, i).unwrap();
            // Cramer: w0 + w1 = 1, w0 x0 + w1 x1 = xi  (xi = knot i+1)
            let (x0, x1) = (t[row.start], t[row.start + 1]);
            let xi = t[(i as isize + 1 - 1).clamp(0, 7) as usize];
            let det = x1 - x0;
            let w0 = (x1 - xi) / det;
            let w1 = (xi - x0) / det;
            assert!((row.a[0] - w0).abs() < 1e-14 && (row.a[1] - w1).abs() < 1e-14, "i={i}");
        }
    }

    #[test]
    fn quasi_interpolant_reproduces_cubics() {
        let t = jittered(14, 3);
        let model = BlendingModel::new(&t, 4).unwrap();
        let p = |x: f64| 0.5 - 1.2 * x + 0.3 * x * x - 0.05 * x * x * x;
        let g: Vec<f64> = t.iter().map(|&x| p(x)).collect();
        let q = model.quasi_interpolant(&g).unwrap();
        for i in 0..=400 {
            let x = t[0] + (t[13] - t[0]) * i as f64 / 400.0;
            assert!((q.eval(x) - p(x)).abs() < 1e-9 * (1.0 + p(x).abs()));
        }
        let ones = vec![1.0; t.len()];
        let q1 = model.quasi_interpolant(&ones).unwrap();
        assert!((q1.eval(t[5] + 0.1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_bound_holds() {
        for seed in 0..20 {
            let t = jittered(20, seed);
            for m in 3..=6 {
                for i in 0..t.len() + m - 2 {
                    let row = quasi_coeffs(&t, m, i).unwrap();
                    let bound = coefficient_bound(&t, m, &row);
                    for a in &row.a {
                        assert!(a.abs() <= bound, "seed={seed} m={m} i={i} a={a} bound={bound}");
                    }
                }
            }
        }
    }

    #[test]
    fn local_basis_is_cardinal_at_data() {
        for m in 3..=6 {
            let t = jittered(16, m as u64);
            let model = BlendingModel::new(&t, m).unwrap();
            for j in 0..t.len() {
                for k in 0..t.len() {
                    let v = model.local_basis_eval(j, t[k]).unwrap();
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-12, "m={m} j={j} k={k} v={v}");
                }
                if j > 0 && j + 1 < t.len() {
                    let mid = 0.5 * (t[j] + t[j + 1]);
                    let l = model.local_basis_index(j);
                    let raw = eval_bspline(model.refined_knots(), m, l, mid).unwrap();
                    let at = eval_bspline(model.refined_knots(), m, l, t[j]).unwrap();
                    assert!((model.local_basis_eval(j, mid).unwrap() - raw / at).abs() < 1e-14);
                    assert_eq!(model.local_basis_eval(j, t[j - 1] - 1e-9).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn quasi_basis_support() {
        let t = jittered(20, 9);
        for m in 3..=5 {
            let model = BlendingModel::new(&t, m).unwrap();
            let k = 9;
            let mk = model.quasi_basis_refined(k).unwrap();
            let lo = t[k + 1 - m];
            let hi = t[k + m];
            for i in 0..2000 {
                let x = t[0] + (t[19] - t[0]) * i as f64 / 2000.0;
                if x < lo - 1e-12 || x > hi + 1e-12 {
                    assert!(mk.eval(x).abs() < 1e-12, "m={m} x={x}");
                }
            }
            let direct = model.quasi_interpolant(&{
                let mut u = vec![0.0; t.len()];
                u[k] = 1.0;
                u
            });
            let direct = direct.unwrap();
            for i in 0..200 {
                let x = t[0] + (t[19] - t[0]) * i as f64 / 200.0;
                assert!((direct.eval(x) - mk.eval(x)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn blend_interpolates_and_reproduces() {
        for m in 3..=6 {
            let t = jittered(25, 100 + m as u64);
            let g: Vec<f64> = t.iter().map(|x| (1.3 * x).sin() + 0.1 * x).collect();
            let f = blend_interpolate(&t, &g, m).unwrap();
            for (x, y) in t.iter().zip(&g) {
                assert!((f.eval(*x) - y).abs() < 1e-10, "m={m}");
            }
            let p = |x: f64| (0..m).map(|d| (0.3 - 0.1 * d as f64) * (x / 10.0).powi(d as i32)).sum::<f64>();
            let gp: Vec<f64> = t.iter().map(|&x| p(x)).collect();
            let fp = blend_interpolate(&t, &gp, m).unwrap();
            for i in 0..=500 {
                let x = t[0] + (t[24] - t[0]) * i as f64 / 500.0;
                assert!((fp.eval(x) - p(x)).abs() < 1e-9, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn errors() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(blend_interpolate(&t, &[0.0; 7], 4), Err(BlendError::TooFewSamples { .. })));
        let bad = [0.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(blend_interpolate(&bad, &[0.0; 8], 4), Err(BlendError::NonMonotone { .. })));
        let mut s = StreamState::new(3).unwrap();
        s.push(1.0, 0.0).unwrap();
        assert!(matches!(s.push(1.0, 0.0), Err(BlendError::NonMonotone { .. })));
    }

    #[test]
    fn stream_matches_batch() {
        for m in 3..=6 {
            let t = jittered(200, m as u64 + 40);
            let g: Vec<f64> = t.iter().map(|x| (0.7 * x).cos() * (1.0 + 0.05 * x)).collect();
            let batch = blend_interpolate(&t, &g, m).unwrap();
            let mut st = StreamState::new(m).unwrap();
            let mut got = Vec::new();
            for (x, y) in t.iter().zip(&g) {
                let seg = st.push(*x, *y).unwrap();
                assert_eq!(seg.first, got.len());
                got.extend(seg.coeffs);
                assert!(st.buffer_len() <= st.buffer_capacity());
            }
            let (tail, curve) = st.finish().unwrap();
            got.extend(tail.coeffs);
            assert_eq!(got.len(), batch.coeffs().len());
            for (a, b) in got.iter().zip(batch.coeffs()) {
                assert!((a - b).abs() <= 1e-12, "m={m}");
            }
            assert_eq!(curve.knots(), batch.knots());
        }
    }

    #[test]
    fn new_sample_only_touches_tail() {
        let m = 4;
        let t = jittered(40, 5);
        let g: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        let a = blend_interpolate(&t[..39], &g[..39], m).unwrap();
        let b = blend_interpolate(&t, &g, m).unwrap();
        let model = BlendingModel::new(&t[..39], m).unwrap();
        let n = 38;
        let stable = model.refined_position(n - m - 1) + m - 1;
        for l in 0..stable {
            assert_eq!(a.coeffs()[l], b.coeffs()[l], "l={l}");
        }
    }

    #[test]
    fn constant_stream_gives_constant_curve() {
        let mut st = StreamState::new(4).unwrap();
        for i in 0..60 {
            st.push(i as f64 * 0.7 + (i % 3) as f64 * 0.1, 2.5).unwrap();
        }
        for c in st.committed() {
            assert!((c - 2.5).abs() < 1e-12);
        }
        let x = 10.0;
        assert!((st.eval_committed(x).unwrap() - 2.5).abs() < 1e-12);
    }
}
