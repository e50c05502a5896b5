//! Multi-index combinatorics, unsigned Stirling numbers of the first kind and
//! the exact integer identities behind the substituted series.
//!
//! Multi-indices are ordered graded-lexicographically everywhere: first by
//! total order, then by descending first exponent, descending second exponent
//! and so on. For `n = 2` this gives `(0,0), (1,0), (0,1), (2,0), (1,1), ...`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Default cap on the number of multi-indices a single enumeration may produce.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 5_000_000;

/// Exponent vector `alpha` in `N_0^n`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(SmallVec<[u32; 4]>);

impl MultiIndex {
    pub fn new(exponents: impl IntoIterator<Item = u32>) -> Self {
        MultiIndex(exponents.into_iter().collect())
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, n))
    }

    /// Unit multi-index `e_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zeros(n);
        m.0[i] = 1;
        m
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Total order `|alpha|`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `alpha!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial_f64(e as usize)).product()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = self.0.clone();
        for (o, &b) in out.iter_mut().zip(other.0.iter()) {
            *o = o.checked_sub(b)?;
        }
        Some(MultiIndex(out))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    /// Multinomial binomial `binom(self, beta) = prod_i binom(self_i, beta_i)`.
    pub fn binomial(&self, beta: &MultiIndex) -> f64 {
        self.0
            .iter()
            .zip(beta.0.iter())
            .map(|(&a, &b)| binomial_f64(a as usize, b as usize))
            .product()
    }

    /// Falling factorial `self! / (self - beta)!`; zero unless `beta <= self`.
    pub fn falling_factorial(&self, beta: &MultiIndex) -> f64 {
        let mut acc = 1.0;
        for (&a, &b) in self.0.iter().zip(beta.0.iter()) {
            if b > a {
                return 0.0;
            }
            for j in 0..b {
                acc *= (a - j) as f64;
            }
        }
        acc
    }

    /// `x^alpha` for a real point (`0^0 = 1`).
    pub fn pow_real(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x.iter())
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }

    /// `z^alpha` for a complex vector.
    pub fn pow_complex(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(z.iter())
            .fold(Complex64::one(), |acc, (&e, zi)| acc * zi.powu(e))
    }

    /// Every `beta <= self`, graded-lex ordered.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(SmallVec::new())];
        for &e in self.0.iter() {
            let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
            for prefix in &out {
                for v in 0..=e {
                    let mut m = prefix.0.clone();
                    m.push(v);
                    next.push(MultiIndex(m));
                }
            }
            out = next;
        }
        out.sort();
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v.into())
    }
}

impl From<&[u32]> for MultiIndex {
    fn from(v: &[u32]) -> Self {
        MultiIndex(v.into())
    }
}

pub fn factorial_f64(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

pub fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

pub fn factorial_big(k: usize) -> BigUint {
    (1..=k as u64).fold(BigUint::one(), |acc, j| acc * j)
}

pub fn binomial_big(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= (n - j) as u64;
        acc /= (j + 1) as u64;
    }
    acc
}

/// Number of multi-indices of dimension `n` with order at most `d_max`:
/// `binom(n + d_max, n)`, or `None` on overflow.
pub fn multiindex_count(n: usize, d_max: usize) -> Option<u128> {
    let k = n.min(d_max) as u128;
    let top = (n + d_max) as u128;
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.checked_mul(top - j)? / (j + 1);
    }
    Some(acc)
}

/// All multi-indices with `|alpha| <= d_max`, in graded-lex order.
pub fn enumerate_multiindices(n: usize, d_max: usize) -> Result<Vec<MultiIndex>> {
    enumerate_multiindices_with_limit(n, d_max, DEFAULT_ENUMERATION_LIMIT)
}

pub fn enumerate_multiindices_with_limit(
    n: usize,
    d_max: usize,
    limit: u128,
) -> Result<Vec<MultiIndex>> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "multi-indices need dimension n >= 1".into(),
        ));
    }
    let count = multiindex_count(n, d_max).unwrap_or(u128::MAX);
    if count > limit {
        return Err(Error::EnumerationTooLarge { count, limit });
    }
    let mut out = Vec::with_capacity(count as usize);
    for d in 0..=d_max {
        out.extend(multiindices_of_order(n, d));
    }
    Ok(out)
}

/// Multi-indices with `|alpha| = d` exactly, in graded-lex order.
pub fn multiindices_of_order(n: usize, d: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, remaining: u32, prefix: &mut SmallVec<[u32; 4]>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == n {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            rec(n, remaining - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(n, d as u32, &mut SmallVec::new(), &mut out);
    out
}

/// Unsigned Stirling numbers of the first kind, `c[k][r]` for `0 <= r <= k <= k_max`,
/// defined by `z(z+1)...(z+k-1) = sum_r c[k][r] z^r`.
#[derive(Clone, Debug, PartialEq)]
pub struct StirlingTable {
    k_max: usize,
    rows: Vec<Vec<BigUint>>,
}

impl StirlingTable {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn get(&self, k: usize, r: usize) -> &BigUint {
        &self.rows[k][r]
    }

    /// `c[k][r]` as a float (may be inexact for large `k`).
    pub fn get_f64(&self, k: usize, r: usize) -> f64 {
        self.rows[k][r].to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn row(&self, k: usize) -> &[BigUint] {
        &self.rows[k]
    }

    pub fn row_sum(&self, k: usize) -> BigUint {
        self.rows[k].iter().sum()
    }

    /// Overwrite one entry. Used by negative-control tests of the identity suite.
    #[doc(hidden)]
    pub fn perturb(&mut self, k: usize, r: usize, value: BigUint) {
        self.rows[k][r] = value;
    }
}

/// Builds the table with `c[k+1][j] = k c[k][j] + c[k][j-1]`.
pub fn stirling_unsigned(k_max: usize) -> StirlingTable {
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(k_max + 1);
    rows.push(vec![BigUint::one()]);
    for k in 0..k_max {
        let prev = &rows[k];
        let mut next = vec![BigUint::zero(); k + 2];
        for j in 1..=k + 1 {
            let mut v = if j <= k {
                &prev[j] * (k as u64)
            } else {
                BigUint::zero()
            };
            v += &prev[j - 1];
            next[j] = v;
        }
        rows.push(next);
    }
    StirlingTable { k_max, rows }
}

/// `sum_{j=0}^{l} binom(l, j) (-1)^j j^p` in exact integer arithmetic (`0^0 = 1`).
pub fn alternating_power_sum(l: usize, p: u32) -> BigInt {
    let mut acc = BigInt::zero();
    for j in 0..=l {
        let term = BigInt::from(binomial_big(l, j)) * BigInt::from(j as u64).pow(p);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Exact check of `(-1)^k sum_j binom(k, j) (-1)^j j^k = k!`.
pub fn check_derivative_identity(k: usize) -> bool {
    let mut sum = alternating_power_sum(k, k as u32);
    if k % 2 == 1 {
        sum = -sum;
    }
    sum == BigInt::from(factorial_big(k))
}

/// Rising factorial `x (x+1) ... (x+l-1)`.
fn rising(x: f64, l: usize) -> f64 {
    (0..l).fold(1.0, |acc, r| acc * (x + r as f64))
}

/// Residual `|LHS - RHS|` of the factorial-shift identity
/// `x^{k+1} - (-1)^{k+1} sum_{l=1}^{k} S_l [x(x+1)...(x+l-1)/l!] = x(x+1)...(x+k)`
/// with `S_l = sum_{j=1}^{l} binom(l,j) (-1)^j j^{k+1}` summed exactly.
pub fn check_factorial_shift_identity(k: usize, x: f64) -> f64 {
    let p = (k + 1) as u32;
    let sign = if (k + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut lhs = x.powi(p as i32);
    for l in 1..=k {
        let s_l = alternating_power_sum(l, p).to_f64().unwrap_or(f64::NAN);
        lhs -= sign * s_l * rising(x, l) / factorial_f64(l);
    }
    (lhs - rising(x, k + 1)).abs()
}

/// Exact form of [`check_factorial_shift_identity`] at an integer node, where
/// `x(x+1)...(x+l-1) / l!` is an integer.
pub fn factorial_shift_identity_exact(k: usize, x: i64) -> bool {
    let p = (k + 1) as u32;
    let rising = |l: usize| (0..l).fold(BigInt::one(), |acc, r| acc * BigInt::from(x + r as i64));
    let mut lhs = BigInt::from(x).pow(p);
    for l in 1..=k {
        let s_l = alternating_power_sum(l, p);
        let weight = rising(l) / BigInt::from(factorial_big(l));
        if (k + 1).is_multiple_of(2) {
            lhs -= s_l * weight;
        } else {
            lhs += s_l * weight;
        }
    }
    lhs == rising(k + 1)
}
