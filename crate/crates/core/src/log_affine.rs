//! Logarithm of the `w`-series: coefficients `rho_k`, their affine split, and
//! the exponent pair `(C, D)` read off the `h` coefficients.

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{
    sum_power_series, w_of_s, EvalOptions, PolyInX, SeriesEvaluation, SeriesExpansion, SeriesKind,
};

/// Default relative tolerance on the non-affine part of `rho_k`.
pub const DEFAULT_AFFINE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct RhoSeries {
    pub eta: f64,
    pub u: Vec<f64>,
    /// Constant parts `rho_k^0`.
    pub rho0: Vec<Complex64>,
    /// Linear parts `rho_k^1`.
    pub rho1: Vec<Vec<Complex64>>,
    /// Largest `|gamma| >= 2` coefficient of `rho_k`, relative to the scale
    /// described on [`rho_sequence`].
    pub affinity_residuals: Vec<f64>,
    /// Full polynomials `rho_k`, kept for inspection.
    #[serde(skip)]
    pub polys: Vec<PolyInX>,
}

/// `rho_0 = iu.x`, `rho_k = h_k - (1/k) sum_{j=1}^{k-1} j rho_j h_{k-j}`, where the
/// `rho_j` on the right are the affine parts of the earlier orders.
///
/// The affinity residual of `rho_k` is its largest `|gamma| >= 2` coefficient
/// divided by the largest of: its own largest coefficient, the largest
/// coefficient of `h_0..h_k`, and the largest term of the recursion. The extra
/// scales matter when `rho_k` cancels to zero and only rounding noise carried
/// in by the `h_j` is left, as for OU at `eta = kappa`.
pub fn rho_sequence(h_seq: &SeriesExpansion, k_max: usize, affine_tol: f64) -> Result<RhoSeries> {
    let eta = match (h_seq.kind, h_seq.eta) {
        (SeriesKind::QSeries, Some(eta)) => eta,
        _ => return Err(Error::InvalidArgument("rho_sequence needs an h sequence".into())),
    };
    let k_max = k_max.min(h_seq.len().saturating_sub(1));
    let h = &h_seq.coeffs;
    let iu: Vec<Complex64> = h_seq.u.iter().map(|&v| Complex64::new(0.0, v)).collect();

    let mut polys = vec![PolyInX::affine(Complex64::zero(), &iu)];
    // affine projections feed the recursion so rounding noise in the dropped
    // part of one order does not compound into the next
    let mut projected = polys.clone();
    let mut residuals = vec![0.0];
    let mut table_scale: f64 = 1.0;
    for k in 1..=k_max {
        let mut rho = h[k].clone();
        table_scale = table_scale.max(h[k].max_abs());
        let mut operand_scale = table_scale;
        for j in 1..k {
            let weight = j as f64 / k as f64;
            let prod = &projected[j] * &h[k - j];
            rho.axpy(Complex64::new(-weight, 0.0), &prod);
            operand_scale = operand_scale.max(weight * projected[j].max_abs() * h[k - j].max_abs());
        }
        let nonaffine = rho.max_abs_from_order(2);
        let scale = rho.max_abs().max(operand_scale);
        let residual = if scale > 0.0 { nonaffine / scale } else { 0.0 };
        if residual > affine_tol {
            return Err(Error::AffinityViolation { k, residual, tol: affine_tol });
        }
        residuals.push(residual);
        projected.push(PolyInX::affine(rho.constant_term(), &rho.linear_terms()));
        polys.push(rho);
    }
    let rho0 = polys.iter().map(PolyInX::constant_term).collect();
    let rho1 = polys.iter().map(PolyInX::linear_terms).collect();
    Ok(RhoSeries { eta, u: h_seq.u.clone(), rho0, rho1, affinity_residuals: residuals, polys })
}

impl RhoSeries {
    pub fn len(&self) -> usize {
        self.rho0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho0.is_empty()
    }

    /// `rho_k^0 + x . rho_k^1`.
    pub fn affine_value(&self, k: usize, x: &[f64]) -> Complex64 {
        self.rho0[k] + self.rho1[k].iter().zip(x).map(|(r, xi)| r * xi).sum::<Complex64>()
    }

    /// `sum_k rho_k(x) w^k` with the shared stopping rule.
    pub fn exponent(&self, x: &[f64], w: Complex64, opts: &EvalOptions) -> SeriesEvaluation {
        sum_power_series((0..self.len()).map(|k| self.affine_value(k, x)), w, opts)
    }
}

/// `exp(sum_k (rho_k^0 + x . rho_k^1) w^k)` with `w = 1 - exp(-eta s)`.
pub fn log_affine_eval(
    rho: &RhoSeries,
    x: &[f64],
    s: f64,
    opts: &EvalOptions,
) -> Result<SeriesEvaluation> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("s must be non-negative, got {s}")));
    }
    if x.len() != rho.u.len() {
        return Err(Error::InvalidArgument("x has the wrong dimension".into()));
    }
    let w = Complex64::new(w_of_s(rho.eta, s), 0.0);
    let mut out = rho.exponent(x, w, opts);
    out.value = out.value.exp();
    Ok(out)
}

/// `C(s, u)` and `D(s, u)` of the log-affine form `exp(C + x.D)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogAffineExponent {
    pub c: Complex64,
    pub d: Vec<Complex64>,
    pub s: f64,
    pub u: Vec<f64>,
    /// Net number of `2 pi i` shifts applied to the principal logarithm.
    pub branch_windings: i64,
    pub n_terms: usize,
}

/// Constant-term series `N(w) = sum_r h_{r,0} w^r` and the absolute-term sum.
fn denominator(h_seq: &SeriesExpansion, w: f64, opts: &EvalOptions) -> (SeriesEvaluation, f64) {
    let wc = Complex64::new(w, 0.0);
    let ev = sum_power_series(h_seq.coeffs.iter().map(PolyInX::constant_term), wc, opts);
    let abs_sum: f64 = h_seq
        .coeffs
        .iter()
        .take(ev.n_terms)
        .enumerate()
        .map(|(r, h)| h.constant_term().norm() * w.powi(r as i32))
        .sum();
    (ev, abs_sum)
}

/// `C = log N(w)` on a continuous branch and `D_k = iu_k + (sum_{r>=1} h_{r,e_k} w^r) / N(w)`.
///
/// The branch is followed from `s = 0` along a grid whose steps are halved until
/// every increment of `C` stays below `pi/2`. A denominator that cancels to
/// within `opts.tol` of its absolute-term sum is reported as a zero crossing.
pub fn cd_from_h(h_seq: &SeriesExpansion, s: f64, opts: &EvalOptions) -> Result<LogAffineExponent> {
    let eta = match (h_seq.kind, h_seq.eta) {
        (SeriesKind::QSeries, Some(eta)) => eta,
        _ => return Err(Error::InvalidArgument("cd_from_h needs an h sequence".into())),
    };
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("s must be finite and non-negative, got {s}")));
    }
    let n = h_seq.dim();
    let two_pi = 2.0 * std::f64::consts::PI;
    let half_pi = 0.5 * std::f64::consts::PI;

    let mut c_prev = Complex64::zero();
    let mut s_prev = 0.0;
    let mut windings: i64 = 0;
    let mut ds = s / 8.0;
    let min_step = s * 1e-12;
    let mut last_n_terms = 1;
    let mut final_denominator = Complex64::new(1.0, 0.0);
    while s_prev < s {
        let s_next = (s_prev + ds).min(s);
        let w = w_of_s(eta, s_next);
        let (den, abs_sum) = denominator(h_seq, w, opts);
        if den.value.norm() <= opts.tol * abs_sum {
            return Err(Error::ZeroCrossing { s: s_next, magnitude: den.value.norm() });
        }
        let principal = den.value.ln();
        let m = ((c_prev.im - principal.im) / two_pi).round();
        let candidate = principal + Complex64::new(0.0, two_pi * m);
        if (candidate - c_prev).norm() >= half_pi && ds > min_step {
            ds *= 0.5;
            continue;
        }
        windings = m as i64;
        c_prev = candidate;
        s_prev = s_next;
        last_n_terms = den.n_terms;
        final_denominator = den.value;
        ds = (ds * 2.0).min(s / 8.0);
    }

    let w = Complex64::new(w_of_s(eta, s), 0.0);
    let mut d = Vec::with_capacity(n);
    for kappa in 0..n {
        let coeffs = h_seq.coeffs.iter().map(|h| h.linear_terms()[kappa]);
        let num = sum_power_series(coeffs, w, opts);
        last_n_terms = last_n_terms.max(num.n_terms);
        d.push(Complex64::new(0.0, h_seq.u[kappa]) + num.value / final_denominator);
    }
    Ok(LogAffineExponent {
        c: c_prev,
        d,
        s,
        u: h_seq.u.clone(),
        branch_windings: windings,
        n_terms: last_n_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{build_generator, GeneratorSpec};
    use crate::models;
    use crate::series::h_sequence;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn brownian_rho() {
        let g = build_generator(&models::brownian()).unwrap();
        let h = h_sequence(&g, &[1.0], 1.0, 10).unwrap();
        let rho = rho_sequence(&h, 10, DEFAULT_AFFINE_TOL).unwrap();
        assert_eq!(rho.rho0[0], c(0.0, 0.0));
        assert_eq!(rho.rho1[0], vec![c(0.0, 1.0)]);
        assert!((rho.rho0[1] - c(-0.5, 0.0)).norm() < 1e-16);
        assert_eq!(rho.rho1[1], vec![c(0.0, 0.0)]);
        // log (1-w)^{1/2} = -(1/2) sum w^k / k
        for k in 1..=10 {
            assert!((rho.rho0[k] + 0.5 / k as f64).norm() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn zero_generator_rho_vanishes() {
        let h = h_sequence(&GeneratorSpec::zero(1), &[1.0], 1.0, 5).unwrap();
        let rho = rho_sequence(&h, 5, DEFAULT_AFFINE_TOL).unwrap();
        assert!(rho.polys[1..].iter().all(PolyInX::is_zero));
    }

    #[test]
    fn brownian_log_affine_eval() {
        let g = build_generator(&models::brownian()).unwrap();
        let h = h_sequence(&g, &[1.0], 0.7, 80).unwrap();
        let rho = rho_sequence(&h, 80, DEFAULT_AFFINE_TOL).unwrap();
        let opts = EvalOptions::default();
        let v0 = log_affine_eval(&rho, &[0.3], 0.0, &opts).unwrap();
        assert!((v0.value - c(0.0, 0.3).exp()).norm() < 1e-16);
        let v = log_affine_eval(&rho, &[0.3], 0.5, &opts).unwrap();
        assert!((v.value - c(-0.25, 0.3).exp()).norm() < 1e-12);
    }

    #[test]
    fn ou_log_affine_eval_and_exponents() {
        let g = build_generator(&models::ornstein_uhlenbeck(1.0, 2.0)).unwrap();
        let h = h_sequence(&g, &[1.0], 1.0, 40).unwrap();
        let rho = rho_sequence(&h, 40, DEFAULT_AFFINE_TOL).unwrap();
        let opts = EvalOptions::default();
        let e1 = (-1.0f64).exp();
        let v = log_affine_eval(&rho, &[1.0], 1.0, &opts).unwrap();
        assert!((v.value - (c(0.0, e1) - (1.0 - e1 * e1) / 2.0).exp()).norm() < 1e-12);

        let cd = cd_from_h(&h, 1.0, &opts).unwrap();
        assert!((cd.c - c(-(1.0 - e1 * e1) / 2.0, 0.0)).norm() < 1e-12);
        assert!((cd.d[0] - c(0.0, e1)).norm() < 1e-12);
        assert_eq!(cd.branch_windings, 0);

        let cd0 = cd_from_h(&h, 0.0, &opts).unwrap();
        assert_eq!(cd0.c, c(0.0, 0.0));
        assert_eq!(cd0.d, vec![c(0.0, 1.0)]);
    }

    #[test]
    fn brownian_exponents() {
        let g = build_generator(&models::brownian()).unwrap();
        let h = h_sequence(&g, &[1.0], 0.5, 60).unwrap();
        let cd = cd_from_h(&h, 0.8, &EvalOptions::default()).unwrap();
        assert!((cd.c - c(-0.4, 0.0)).norm() < 1e-12);
        assert!((cd.d[0] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn winding_is_tracked() {
        // Compound Poisson at u = 3 has Im C = s * 0.5 * (sin 3 - 3), which
        // passes -pi near s = 2.3.
        let g = build_generator(&models::compound_poisson(0.5, 1.0)).unwrap();
        let h = h_sequence(&g, &[3.0], 0.25, 120).unwrap();
        let cd = cd_from_h(&h, 3.0, &EvalOptions::default()).unwrap();
        let psi = 0.5 * (c(0.0, 3.0).exp() - 1.0 - c(0.0, 3.0));
        assert!((cd.c - psi * 3.0).norm() < 1e-9, "{:?}", cd.c);
        assert_eq!(cd.branch_windings, -1);
    }
}
