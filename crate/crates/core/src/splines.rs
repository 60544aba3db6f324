//! B-splines on arbitrary knot sequences.
//!
//! Basis index `k` refers to the B-spline supported on `knots[k]..=knots[k+m]`.
//! Basis functions are right-continuous, except that the last nonempty knot
//! interval is closed on the right so partition of unity holds on the closed
//! parameter range.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg::{binomial, elementary_symmetric};
use crate::quadrature::GaussRule;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("spline order must be at least 1")]
    ZeroOrder,
    #[error("knot {index} is not finite")]
    NonFinite { index: usize },
    #[error("knots decrease at index {index}")]
    Unsorted { index: usize },
    #[error("knot at index {index} repeated more than {order} times")]
    Multiplicity { index: usize, order: usize },
    #[error("basis index {k} out of range ({count} B-splines of order {m})")]
    BadIndex { k: usize, m: usize, count: usize },
    #[error("derivative order {r} must be below spline order {m}")]
    DerivativeOrder { r: usize, m: usize },
    #[error("monomial degree {l} must be below spline order {m}")]
    MonomialDegree { l: usize, m: usize },
    #[error("expected {expected} coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
    #[error("need at least {need} knots, got {got}")]
    TooFewKnots { need: usize, got: usize },
}

/// Nondecreasing knots with a multiplicity bound.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotSequence<T> {
    knots: Vec<T>,
    order: usize,
}

impl<T: Real> KnotSequence<T> {
    /// Validates `knots` for splines of order up to `order` (no knot repeated
    /// more than `order` times).
    pub fn new(knots: Vec<T>, order: usize) -> Result<Self, SplineError> {
        if order == 0 {
            return Err(SplineError::ZeroOrder);
        }
        for (i, k) in knots.iter().enumerate() {
            if !k.is_finite() {
                return Err(SplineError::NonFinite { index: i });
            }
            if i > 0 && *k < knots[i - 1] {
                return Err(SplineError::Unsorted { index: i });
            }
        }
        for j in 0..knots.len().saturating_sub(order) {
            if knots[j + order] <= knots[j] {
                return Err(SplineError::Multiplicity { index: j, order });
            }
        }
        Ok(KnotSequence { knots, order })
    }

    /// `breaks` with the first and last break repeated so each has
    /// multiplicity `m`.
    pub fn clamped(breaks: &[T], m: usize) -> Result<Self, SplineError> {
        if breaks.len() < 2 {
            return Err(SplineError::TooFewKnots { need: 2, got: breaks.len() });
        }
        let mut knots = Vec::with_capacity(breaks.len() + 2 * m.saturating_sub(1));
        knots.extend(std::iter::repeat_n(breaks[0], m.saturating_sub(1)));
        knots.extend_from_slice(breaks);
        knots.extend(std::iter::repeat_n(breaks[breaks.len() - 1], m.saturating_sub(1)));
        Self::new(knots, m)
    }

    /// Equally spaced knots `origin + i*spacing`, `i = 0..count`.
    pub fn uniform(origin: T, spacing: T, count: usize, order: usize) -> Result<Self, SplineError> {
        let knots = (0..count).map(|i| origin + spacing * T::of_usize(i)).collect();
        Self::new(knots, order)
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of B-splines of order `m` on these knots.
    pub fn basis_count(&self, m: usize) -> usize {
        self.knots.len().saturating_sub(m)
    }

    pub fn first(&self) -> T {
        self.knots[0]
    }

    pub fn last(&self) -> T {
        self.knots[self.knots.len() - 1]
    }

    /// Index `mu` with `knots[mu] <= t < knots[mu+1]`; at the right end the
    /// last nonempty interval is used. `None` outside the knot range.
    pub fn span(&self, t: T) -> Option<usize> {
        let n = self.knots.len();
        if n < 2 || t < self.knots[0] || t > self.knots[n - 1] || self.knots[0] == self.knots[n - 1]
        {
            return None;
        }
        if t == self.knots[n - 1] {
            return (0..n - 1).rev().find(|&i| self.knots[i] < self.knots[i + 1]);
        }
        let upper = self.knots.partition_point(|k| *k <= t);
        Some(upper - 1)
    }

    /// Ratio of the widest `m`-span to the narrowest nonzero gap among the
    /// knots `knots[lo..=hi]`.
    pub fn local_mesh_ratio(&self, lo: usize, hi: usize, m: usize) -> T {
        let hi = hi.min(self.knots.len() - 1);
        let mut min_gap = T::infinity();
        let mut max_span = T::zero();
        for i in lo..hi {
            let g = self.knots[i + 1] - self.knots[i];
            if g > T::zero() {
                min_gap = min_gap.min(g);
            }
        }
        for i in lo..=hi {
            let j = (i + m).min(hi);
            max_span = max_span.max(self.knots[j] - self.knots[i]);
        }
        max_span / min_gap
    }
}

/// Values of the order-`m` B-splines `mu-m+1..=mu` at `t`, with `mu` a span
/// of `t`. Entries for indices that do not exist on the knot vector are 0.
pub fn basis_on_span<T: Real>(knots: &[T], mu: usize, m: usize, t: T) -> Vec<T> {
    let len = knots.len() as isize;
    let base = mu as isize - m as isize + 1;
    let mut vals = vec![T::zero(); m];
    vals[m - 1] = T::one();
    for r in 2..=m {
        let first = mu as isize - r as isize + 1;
        for i in first..=mu as isize {
            let slot = (i - base) as usize;
            if i < 0 || i + r as isize > len - 1 {
                vals[slot] = T::zero();
                continue;
            }
            let iu = i as usize;
            let mut v = T::zero();
            let left = vals[slot];
            if left != T::zero() {
                let den = knots[iu + r - 1] - knots[iu];
                if den > T::zero() {
                    v += (t - knots[iu]) / den * left;
                }
            }
            if slot + 1 < m {
                let right = vals[slot + 1];
                if right != T::zero() {
                    let den = knots[iu + r] - knots[iu + 1];
                    if den > T::zero() {
                        v += (knots[iu + r] - t) / den * right;
                    }
                }
            }
            vals[slot] = v;
        }
    }
    vals
}

fn check_index<T: Real>(knots: &KnotSequence<T>, m: usize, k: usize) -> Result<(), SplineError> {
    if m == 0 {
        return Err(SplineError::ZeroOrder);
    }
    let count = knots.basis_count(m);
    if k >= count {
        return Err(SplineError::BadIndex { k, m, count });
    }
    if knots.knots[k + m] <= knots.knots[k] {
        return Err(SplineError::Multiplicity { index: k, order: m });
    }
    Ok(())
}

/// `N_{m,k}(t)`.
pub fn eval_bspline<T: Real>(knots: &KnotSequence<T>, m: usize, k: usize, t: T) -> Result<T, SplineError> {
    check_index(knots, m, k)?;
    Ok(combination_value(knots, m, k, &[T::one()], t))
}

/// Value of `sum_j alpha[j] N_{m,k+j}(t)`.
fn combination_value<T: Real>(knots: &KnotSequence<T>, m: usize, k: usize, alpha: &[T], t: T) -> T {
    let Some(mu) = knots.span(t) else {
        return T::zero();
    };
    let vals = basis_on_span(&knots.knots, mu, m, t);
    let base = mu as isize - m as isize + 1;
    let mut acc = T::zero();
    for (j, a) in alpha.iter().enumerate() {
        let idx = (k + j) as isize - base;
        if idx >= 0 && (idx as usize) < m {
            acc += *a * vals[idx as usize];
        }
    }
    acc
}

/// Coefficients expressing `N^{(r)}_{m,k}` in the order `m-r` B-splines
/// `k..=k+r` on the same knots.
pub fn derivative_coefficients<T: Real>(knots: &[T], m: usize, k: usize, r: usize) -> Vec<T> {
    let mut alpha = vec![T::one()];
    for step in 0..r {
        let p = m - step;
        let pm1 = T::of_usize(p - 1);
        let mut next = vec![T::zero(); alpha.len() + 1];
        for (j, a) in alpha.iter().enumerate() {
            let i = k + j;
            let d1 = knots[i + p - 1] - knots[i];
            if d1 > T::zero() {
                next[j] += pm1 * *a / d1;
            }
            let d2 = knots[i + p] - knots[i + 1];
            if d2 > T::zero() {
                next[j + 1] -= pm1 * *a / d2;
            }
        }
        alpha = next;
    }
    alpha
}

/// `d^r/dt^r N_{m,k}(t)` from the two-term lower-order recurrence.
pub fn eval_bspline_derivative<T: Real>(
    knots: &KnotSequence<T>,
    m: usize,
    k: usize,
    t: T,
    r: usize,
) -> Result<T, SplineError> {
    check_index(knots, m, k)?;
    if r >= m {
        return Err(SplineError::DerivativeOrder { r, m });
    }
    let alpha = derivative_coefficients(&knots.knots, m, k, r);
    Ok(combination_value(knots, m - r, k, &alpha, t))
}

/// Exact values of the cardinal B-spline `N_r` at the integers `0..=r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CardinalTable {
    order: usize,
    scaled: Vec<BigUint>,
    denominator: BigUint,
}

impl CardinalTable {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `(r-1)! N_r(v)` for `v = 0..=r`.
    pub fn scaled_values(&self) -> &[BigUint] {
        &self.scaled
    }

    /// `(r-1)!`.
    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn value(&self, v: usize) -> BigRational {
        let num = self.scaled.get(v).cloned().unwrap_or_default();
        BigRational::new(num.into(), self.denominator.clone().into())
    }

    pub fn values(&self) -> Vec<BigRational> {
        (0..=self.order).map(|v| self.value(v)).collect()
    }

    pub fn value_as<T: Real>(&self, v: usize) -> T {
        let r = self.value(v);
        T::lit(r.to_f64().unwrap_or(0.0))
    }
}

/// Integer values of `N_r` via `(r-1)!N_r(v) = v (r-2)!N_{r-1}(v) + (r-v) (r-2)!N_{r-1}(v-1)`.
pub fn cardinal_integer_values(r: usize) -> CardinalTable {
    assert!(r >= 2, "cardinal tables start at order 2");
    // order 2: hat with peak 1 at v=1
    let mut cur: Vec<BigUint> = vec![BigUint::zero(), BigUint::one(), BigUint::zero()];
    let mut denominator = BigUint::one();
    for order in 3..=r {
        let mut next = vec![BigUint::zero(); order + 1];
        for (v, slot) in next.iter_mut().enumerate() {
            let mut acc = BigUint::zero();
            if v < cur.len() {
                acc += &cur[v] * BigUint::from(v);
            }
            if v >= 1 && v - 1 < cur.len() {
                acc += &cur[v - 1] * BigUint::from(order - v);
            }
            *slot = acc;
        }
        denominator *= BigUint::from(order - 1);
        cur = next;
    }
    CardinalTable { order: r, scaled: cur, denominator }
}

fn is_equispaced<T: Real>(knots: &[T]) -> Option<T> {
    let h = knots[1] - knots[0];
    if h <= T::zero() {
        return None;
    }
    let tol = T::lit(1e-12) * h.max(knots[knots.len() - 1].abs());
    knots.windows(2).all(|w| (w[1] - w[0] - h).abs() <= tol).then_some(h)
}

/// `<N_{m,k}, N_{m,u}>` over the real line.
pub fn inner_product<T: Real>(knots: &KnotSequence<T>, m: usize, k: usize, u: usize) -> Result<T, SplineError> {
    check_index(knots, m, k)?;
    check_index(knots, m, u)?;
    let (lo, hi) = (k.min(u), k.max(u));
    if hi - lo >= m {
        return Ok(T::zero());
    }
    let local = &knots.knots[lo..=hi + m];
    if let Some(h) = is_equispaced(local) {
        let table = cardinal_integer_values(2 * m);
        return Ok(h * table.value_as::<T>(m + k - u));
    }
    Ok(inner_product_quadrature(knots, m, k, u))
}

/// Gauss–Legendre path of [`inner_product`], exact for the piecewise
/// degree-`2m-2` integrand.
pub fn inner_product_quadrature<T: Real>(knots: &KnotSequence<T>, m: usize, k: usize, u: usize) -> T {
    let rule = GaussRule::new(m);
    let lo = k.max(u);
    let hi = (k + m).min(u + m);
    let mut acc = T::zero();
    for i in lo..hi {
        let (a, b) = (knots.knots[i], knots.knots[i + 1]);
        if b <= a {
            continue;
        }
        let mid = (a + b) / T::lit(2.0);
        let mu = knots.span(mid).expect("midpoint inside range");
        let mut piece = T::zero();
        for (x, w) in rule.points(a, b) {
            let vals = basis_on_span(&knots.knots, mu, m, x);
            let base = mu + 1 - m;
            piece += w * vals[k - base] * vals[u - base];
        }
        acc += piece;
    }
    acc
}

/// Marsden coefficients: `x^l = sum_u c[u] N_{m,u}(x)` inside the knot range.
pub fn marsden_coefficients<T: Real>(knots: &KnotSequence<T>, m: usize, l: usize) -> Result<Vec<T>, SplineError> {
    if l >= m {
        return Err(SplineError::MonomialDegree { l, m });
    }
    let count = knots.basis_count(m);
    let scale = T::lit(binomial(m - 1, l));
    Ok((0..count)
        .map(|u| elementary_symmetric(&knots.knots[u + 1..u + m])[l] / scale)
        .collect())
}

/// Order, knots and one coefficient per B-spline.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCurve<T> {
    order: usize,
    knots: KnotSequence<T>,
    coeffs: Vec<T>,
}

impl<T: Real> SplineCurve<T> {
    pub fn new(order: usize, knots: KnotSequence<T>, coeffs: Vec<T>) -> Result<Self, SplineError> {
        if order == 0 {
            return Err(SplineError::ZeroOrder);
        }
        let expected = knots.basis_count(order);
        if coeffs.len() != expected {
            return Err(SplineError::CoefficientCount { expected, got: coeffs.len() });
        }
        Ok(SplineCurve { order, knots, coeffs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn knots(&self) -> &KnotSequence<T> {
        &self.knots
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Value at `t`, and whether `t` lies inside the knot range. Outside the
    /// range the value is 0.
    pub fn eval_flagged(&self, t: T) -> (T, bool) {
        let Some(mu) = self.knots.span(t) else {
            return (T::zero(), false);
        };
        let m = self.order;
        let vals = basis_on_span(&self.knots.knots, mu, m, t);
        let mut acc = T::zero();
        for (j, v) in vals.iter().enumerate() {
            let idx = mu as isize - m as isize + 1 + j as isize;
            if idx >= 0 && (idx as usize) < self.coeffs.len() {
                acc += self.coeffs[idx as usize] * *v;
            }
        }
        (acc, true)
    }

    pub fn eval(&self, t: T) -> T {
        self.eval_flagged(t).0
    }

    /// Derivative as an order `m-1` spline on the same knots. The result has
    /// one more coefficient, so it is valid on the whole real line when the
    /// curve vanishes outside its knot range.
    pub fn derivative(&self) -> Result<SplineCurve<T>, SplineError> {
        let m = self.order;
        if m < 2 {
            return Err(SplineError::DerivativeOrder { r: 1, m });
        }
        let k = &self.knots.knots;
        let n = self.coeffs.len();
        let mut d = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let hi = if i < n { self.coeffs[i] } else { T::zero() };
            let lo = if i > 0 { self.coeffs[i - 1] } else { T::zero() };
            let den = k[i + m - 1] - k[i];
            d.push(if den > T::zero() { T::of_usize(m - 1) * (hi - lo) / den } else { T::zero() });
        }
        let knots = KnotSequence::new(k.clone(), m - 1).or_else(|_| {
            KnotSequence::new(k.clone(), m)
        })?;
        Ok(SplineCurve { order: m - 1, knots, coeffs: d })
    }
}
