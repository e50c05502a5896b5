//! Taylor table in double-double arithmetic.
//!
//! Far from the origin the Taylor terms of a well-behaved transform can exceed
//! the final value by ten or more orders of magnitude, and the rounding error
//! of each term then dominates. Carrying about 32 significant digits through
//! the recursion and the summation keeps the result accurate to double precision.

use std::collections::BTreeMap;

use num_complex::{Complex, Complex64};
use num_traits::Zero;
use twofloat::TwoFloat;

use super::{bound_rate, check_u, plane_wave, taylor_tail_bound, EvalOptions, SeriesEvaluation};
use crate::error::{Error, Result};
use crate::generator::{symbol_coefficients, GeneratorSpec};
use crate::multiindex::MultiIndex;

type Dd = Complex<TwoFloat>;
type DdPoly = BTreeMap<MultiIndex, Dd>;

const OVERFLOW_LIMIT: f64 = 1e300;

fn dd(z: Complex64) -> Dd {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

fn dd_real(v: f64) -> Dd {
    Complex::new(TwoFloat::from(v), TwoFloat::from(0.0))
}

fn to_c64(z: Dd) -> Complex64 {
    Complex64::new(f64::from(z.re), f64::from(z.im))
}

/// `1/x` to double-double accuracy. `TwoFloat` division of two plain doubles
/// only returns a double-accurate quotient, so one Newton step refines it.
fn recip(x: f64) -> TwoFloat {
    let x = TwoFloat::from(x);
    let y = TwoFloat::from(1.0 / f64::from(x));
    let e = TwoFloat::from(1.0) - x * y;
    y + y * e
}

fn add_term(p: &mut DdPoly, gamma: MultiIndex, c: Dd) {
    let e = p.entry(gamma).or_insert_with(|| dd_real(0.0));
    *e += c;
}

/// `t_r = g_r / r!` for `r <= r_max`, computed in double-double.
#[derive(Clone, Debug)]
pub struct ExtendedTaylor {
    pub u: Vec<f64>,
    coeffs: Vec<DdPoly>,
    pub truncated: bool,
    pub bound_rate: Option<f64>,
}

pub fn taylor_sequence_extended(
    gen: &GeneratorSpec,
    u: &[f64],
    r_max: usize,
) -> Result<ExtendedTaylor> {
    check_u(gen, u)?;
    let n = gen.dim();
    let sym = symbol_coefficients(gen, u);
    let b0: Vec<(MultiIndex, Dd)> = sym.b0.iter().map(|(b, v)| (b.clone(), dd(*v))).collect();
    let b1: Vec<(MultiIndex, Vec<(MultiIndex, Dd)>)> = sym
        .b1
        .iter()
        .map(|(b, row)| {
            let row = row
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(j, v)| (MultiIndex::unit(n, j), dd(*v)))
                .collect();
            (b.clone(), row)
        })
        .collect();

    let mut first = DdPoly::new();
    first.insert(MultiIndex::zeros(n), dd_real(1.0));
    let mut coeffs = vec![first];
    let mut truncated = false;
    for r in 0..r_max {
        let prev = &coeffs[r];
        let mut next = DdPoly::new();
        let inv = recip((r + 1) as f64);
        for (gamma, c) in prev {
            for (beta, b) in &b0 {
                if let Some(rest) = gamma.checked_sub(beta) {
                    let w = *c * TwoFloat::from(gamma.binomial(beta));
                    add_term(&mut next, rest, w * *b);
                }
            }
            for (beta, row) in &b1 {
                if let Some(rest) = gamma.checked_sub(beta) {
                    let w = *c * TwoFloat::from(gamma.binomial(beta));
                    for (unit, b) in row {
                        add_term(&mut next, rest.add(unit), w * *b);
                    }
                }
            }
        }
        for v in next.values_mut() {
            *v *= inv;
        }
        next.retain(|_, v| !(f64::from(v.re) == 0.0 && f64::from(v.im) == 0.0));
        let bad = next.values().any(|v| {
            let z = to_c64(*v);
            !z.re.is_finite() || !z.im.is_finite() || z.norm() > OVERFLOW_LIMIT
        });
        if bad {
            truncated = true;
            break;
        }
        coeffs.push(next);
    }
    Ok(ExtendedTaylor { u: u.to_vec(), coeffs, truncated, bound_rate: bound_rate(gen, u) })
}

impl ExtendedTaylor {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `t_r(x)` rounded to double precision.
    pub fn coeff_at(&self, r: usize, x: &[f64]) -> Complex64 {
        to_c64(self.eval_poly(r, x))
    }

    fn eval_poly(&self, r: usize, x: &[f64]) -> Dd {
        let mut acc = dd_real(0.0);
        for (gamma, c) in &self.coeffs[r] {
            let mut p = TwoFloat::from(1.0);
            for (&e, &xi) in gamma.exponents().iter().zip(x) {
                for _ in 0..e {
                    p *= TwoFloat::from(xi);
                }
            }
            acc += *c * p;
        }
        acc
    }

    /// `sum_k s^k t_k(x) e^{iu.x}` for real `s`, accumulated in double-double.
    pub fn eval(&self, x: &[f64], s: f64, opts: &EvalOptions) -> Result<SeriesEvaluation> {
        if x.len() != self.u.len() {
            return Err(Error::InvalidArgument("x has the wrong dimension".into()));
        }
        let s_dd = TwoFloat::from(s);
        let mut power = TwoFloat::from(1.0);
        let mut acc = dd_real(0.0);
        let mut small_run = 0;
        let mut last = 0.0;
        let mut converged = false;
        let mut n_terms = 0;
        for k in 0..self.coeffs.len() {
            if k > 0 {
                power *= s_dd;
            }
            let term = self.eval_poly(k, x) * power;
            acc += term;
            n_terms = k + 1;
            let mag = to_c64(term).norm();
            last = mag;
            if k > 0 && mag <= opts.tol * (1.0 + to_c64(acc).norm()) {
                small_run += 1;
                if small_run >= 3 {
                    converged = true;
                    break;
                }
            } else {
                small_run = 0;
            }
        }
        let tail_estimate = match self.bound_rate {
            Some(rate) => taylor_tail_bound(rate, x, s.abs(), n_terms),
            None => last,
        };
        Ok(SeriesEvaluation {
            value: to_c64(acc) * plane_wave(&self.u, x),
            n_terms,
            tail_estimate,
            converged,
            diverged: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::build_generator;
    use crate::models;

    #[test]
    fn matches_double_table_at_low_order() {
        let g = build_generator(&models::ornstein_uhlenbeck(1.0, 2.0)).unwrap();
        let ext = taylor_sequence_extended(&g, &[1.5], 10).unwrap();
        let plain = super::super::taylor_sequence(&g, &[1.5], 10).unwrap();
        for r in 0..=10 {
            let a = ext.coeff_at(r, &[0.3]);
            let b = plain.coeffs[r].eval(&[0.3]);
            assert!((a - b).norm() <= 1e-13 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn ou_far_from_origin() {
        let g = build_generator(&models::ornstein_uhlenbeck(1.0, 2.0)).unwrap();
        let ext = taylor_sequence_extended(&g, &[3.0], 400).unwrap();
        let v = ext.eval(&[0.5], 1.0, &EvalOptions::default()).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let want = (i * 1.5 * (-1.0f64).exp() - 4.5 * (1.0 - (-2.0f64).exp())).exp();
        assert!(v.converged);
        assert!((v.value - want).norm() < 1e-10, "{}", (v.value - want).norm());
    }
}
