//! Sparse polynomials in `x` with complex coefficients.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::multiindex::MultiIndex;

/// `sum_gamma p_gamma x^gamma`, stored sparsely. Exact zeros are never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyInX {
    n: usize,
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl PolyInX {
    pub fn zero(n: usize) -> Self {
        PolyInX { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Complex64::one())
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(MultiIndex::zeros(n), c);
        p
    }

    /// `c0 + sum_j c1[j] x_j`.
    pub fn affine(c0: Complex64, c1: &[Complex64]) -> Self {
        let n = c1.len();
        let mut p = Self::constant(n, c0);
        for (j, c) in c1.iter().enumerate() {
            p.add_term(MultiIndex::unit(n, j), *c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, gamma: &MultiIndex) -> Complex64 {
        self.terms.get(gamma).copied().unwrap_or_else(Complex64::zero)
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coeff(&MultiIndex::zeros(self.n))
    }

    /// Coefficients of `x_1, ..., x_n`.
    pub fn linear_terms(&self) -> Vec<Complex64> {
        (0..self.n).map(|j| self.coeff(&MultiIndex::unit(self.n, j))).collect()
    }

    /// Highest total order present, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::order).max()
    }

    /// Adds `c x^gamma`, dropping the entry if it cancels to exactly zero.
    pub fn add_term(&mut self, gamma: MultiIndex, c: Complex64) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(gamma);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &PolyInX) {
        if a.is_zero() {
            return;
        }
        for (g, c) in &other.terms {
            self.add_term(g.clone(), a * c);
        }
    }

    pub fn scale(&self, a: Complex64) -> PolyInX {
        let mut out = PolyInX::zero(self.n);
        out.axpy(a, self);
        out
    }

    /// Drops coefficients with `|c| <= threshold`.
    pub fn prune(&mut self, threshold: f64) {
        self.terms.retain(|_, c| c.norm() > threshold);
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.norm()))
    }

    /// Largest coefficient modulus among terms with `|gamma| >= order`.
    pub fn max_abs_from_order(&self, order: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(g, _)| g.order() >= order)
            .fold(0.0, |acc, (_, c)| acc.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.terms.values().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms.iter().map(|(g, c)| c * g.pow_real(x)).sum()
    }

    pub fn eval_complex(&self, x: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|(g, c)| c * g.pow_complex(x)).sum()
    }

    /// `d^beta p / beta!`, the Taylor-shift coefficient operator.
    pub fn scaled_derivative(&self, beta: &MultiIndex) -> PolyInX {
        let mut out = PolyInX::zero(self.n);
        for (g, c) in &self.terms {
            if let Some(rest) = g.checked_sub(beta) {
                out.add_term(rest, c * g.binomial(beta));
            }
        }
        out
    }

    /// Plain partial derivative `d^beta p`.
    pub fn derivative(&self, beta: &MultiIndex) -> PolyInX {
        let mut out = PolyInX::zero(self.n);
        for (g, c) in &self.terms {
            if let Some(rest) = g.checked_sub(beta) {
                out.add_term(rest, c * g.falling_factorial(beta));
            }
        }
        out
    }

    /// Largest coefficient-wise difference `max_gamma |p_gamma - q_gamma|`.
    pub fn max_abs_diff(&self, other: &PolyInX) -> f64 {
        let mut worst: f64 = 0.0;
        for (g, c) in &self.terms {
            worst = worst.max((c - other.coeff(g)).norm());
        }
        for (g, c) in &other.terms {
            if !self.terms.contains_key(g) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }
}

impl Add for &PolyInX {
    type Output = PolyInX;
    fn add(self, rhs: &PolyInX) -> PolyInX {
        let mut out = self.clone();
        out.axpy(Complex64::one(), rhs);
        out
    }
}

impl Sub for &PolyInX {
    type Output = PolyInX;
    fn sub(self, rhs: &PolyInX) -> PolyInX {
        let mut out = self.clone();
        out.axpy(-Complex64::one(), rhs);
        out
    }
}

impl Mul for &PolyInX {
    type Output = PolyInX;
    fn mul(self, rhs: &PolyInX) -> PolyInX {
        let mut out = PolyInX::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term(a.add(b), ca * cb);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn arithmetic_and_evaluation() {
        let p = PolyInX::affine(c(1.0, 0.0), &[c(0.0, 2.0)]);
        let q = &p * &p;
        assert_eq!(q.coeff(&vec![2].into()), c(-4.0, 0.0));
        assert_eq!(q.coeff(&vec![1].into()), c(0.0, 4.0));
        let x = [0.3];
        assert!((q.eval(&x) - p.eval(&x) * p.eval(&x)).norm() < 1e-15);
        assert!((&q - &q).is_zero());
        assert_eq!(q.degree(), Some(2));
        assert_eq!(PolyInX::zero(1).degree(), None);
    }

    #[test]
    fn derivatives() {
        let mut p = PolyInX::zero(2);
        p.add_term(vec![3, 1].into(), c(2.0, 0.0));
        let d = p.derivative(&vec![2, 1].into());
        assert_eq!(d.coeff(&vec![1, 0].into()), c(12.0, 0.0));
        let s = p.scaled_derivative(&vec![2, 1].into());
        assert_eq!(s.coeff(&vec![1, 0].into()), c(6.0, 0.0));
        assert!(p.derivative(&vec![0, 2].into()).is_zero());
    }

    #[test]
    fn cancellation_removes_terms() {
        let mut p = PolyInX::one(1);
        p.add_term(MultiIndex::zeros(1), c(-1.0, 0.0));
        assert!(p.is_empty());
    }
}
