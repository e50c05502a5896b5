//! Coefficient recursions for `A^r f_u / f_u` and for the substituted series in
//! `w = 1 - exp(-eta s)`, their evaluation, and the choice of `eta`.

mod extended;
mod poly;
mod summation;

use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use extended::{taylor_sequence_extended, ExtendedTaylor};
pub use poly::PolyInX;
pub use summation::{Accumulator, Summation};

use crate::error::{Error, Result};
use crate::generator::{growth_profile, max_norm, symbol_coefficients, GeneratorSpec, SymbolCoefficients};
use crate::multiindex::{alternating_power_sum, binomial_f64, factorial_f64, MultiIndex, StirlingTable};

/// Coefficients above this magnitude are treated as an overflow of the recursion.
const OVERFLOW_LIMIT: f64 = 1e300;
/// Number of consecutive small terms that ends a series evaluation.
const SMALL_RUN: usize = 3;
/// Number of consecutive growing terms that flags divergence.
const GROWTH_RUN: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    /// `g_r = A^r f_u / f_u`, summed as a Taylor series in `s`.
    TaylorG,
    /// `g_r / r!`, the same Taylor series stored without the factorial growth.
    TaylorScaled,
    /// `h_k = q_k / f_u`, summed as a power series in `w`.
    QSeries,
    /// Coefficients of the logarithm of the `w`-series.
    RhoSeries,
}

/// Coefficient table computed once per `(u, eta)` and evaluated many times.
#[derive(Clone, Debug)]
pub struct SeriesExpansion {
    pub kind: SeriesKind,
    pub eta: Option<f64>,
    pub u: Vec<f64>,
    pub coeffs: Vec<PolyInX>,
    /// The recursion stopped early because coefficients overflowed.
    pub truncated: bool,
    /// `2^n theta(||u||)` when the domain box is bounded.
    pub bound_rate: Option<f64>,
}

impl SeriesExpansion {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Growth bound `(r+1)! (2^n (1+||x||) theta(||u||))^r` on `|g_r(x, u)|`.
    pub fn coefficient_bound(&self, x: &[f64], r: usize) -> Option<f64> {
        let rate = self.bound_rate?;
        if r == 0 {
            return Some(1.0);
        }
        if rate == 0.0 {
            return Some(0.0);
        }
        let ln = (2..=r + 1).map(|j| (j as f64).ln()).sum::<f64>()
            + r as f64 * (rate * (1.0 + max_norm(x))).ln();
        Some(ln.exp())
    }
}

/// Outcome of summing a series at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesEvaluation {
    pub value: Complex64,
    pub n_terms: usize,
    pub tail_estimate: f64,
    pub converged: bool,
    pub diverged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    pub tol: f64,
    pub summation: Summation,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { tol: 1e-14, summation: Summation::Compensated }
    }
}

/// `e^{i u . x}`.
pub fn plane_wave(u: &[f64], x: &[f64]) -> Complex64 {
    let phase: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
    Complex64::new(0.0, phase).exp()
}

/// Applies `p -> A(p f_u) / f_u = sum_beta (d^beta p / beta!) b_beta(x, u)`.
pub fn apply_symbol(sym: &SymbolCoefficients, p: &PolyInX) -> PolyInX {
    let n = p.dim();
    let units: Vec<MultiIndex> = (0..n).map(|j| MultiIndex::unit(n, j)).collect();
    let mut out = PolyInX::zero(n);
    for (gamma, c) in p.terms() {
        for (beta, b0) in &sym.b0 {
            if let Some(rest) = gamma.checked_sub(beta) {
                out.add_term(rest, c * b0 * gamma.binomial(beta));
            }
        }
        for (beta, b1) in &sym.b1 {
            if let Some(rest) = gamma.checked_sub(beta) {
                let w = c * gamma.binomial(beta);
                for (j, b) in b1.iter().enumerate() {
                    if !b.is_zero() {
                        out.add_term(rest.add(&units[j]), w * b);
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn check_u(gen: &GeneratorSpec, u: &[f64]) -> Result<()> {
    if u.len() != gen.dim() {
        return Err(Error::InvalidArgument(format!(
            "u has length {} but the generator has dimension {}",
            u.len(),
            gen.dim()
        )));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("u must be finite".into()));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eta must be positive and finite, got {eta}")))
    }
}

pub(crate) fn bound_rate(gen: &GeneratorSpec, u: &[f64]) -> Option<f64> {
    let profile = growth_profile(gen).ok()?;
    Some(2f64.powi(gen.dim() as i32) * profile.theta(max_norm(u)))
}

fn overflowed(p: &PolyInX) -> bool {
    !p.is_finite() || p.max_abs() > OVERFLOW_LIMIT
}

/// Runs `p_{r+1} = a_r L(p_r) + b_r p_r` from `p_0 = 1`, where `L` applies the
/// symbol and `(a_r, b_r) = weights(r)`. Stops early if a coefficient overflows;
/// the flag reports whether it did.
fn run_recursion(
    sym: &SymbolCoefficients,
    n: usize,
    r_max: usize,
    weights: impl Fn(usize) -> (f64, f64),
) -> (Vec<PolyInX>, bool) {
    if n == 1 {
        return run_recursion_1d(sym, r_max, weights);
    }
    let mut coeffs = vec![PolyInX::one(n)];
    for r in 0..r_max {
        let (a, b) = weights(r);
        let mut next = apply_symbol(sym, &coeffs[r]).scale(Complex64::new(a, 0.0));
        next.axpy(Complex64::new(b, 0.0), &coeffs[r]);
        if overflowed(&next) {
            return (coeffs, true);
        }
        coeffs.push(next);
    }
    (coeffs, false)
}

/// Dense version of [`run_recursion`] for one state variable.
fn run_recursion_1d(
    sym: &SymbolCoefficients,
    r_max: usize,
    weights: impl Fn(usize) -> (f64, f64),
) -> (Vec<PolyInX>, bool) {
    let b0: Vec<(usize, Complex64)> = sym.b0.iter().map(|(m, c)| (m.order(), *c)).collect();
    let b1: Vec<(usize, Complex64)> = sym.b1.iter().map(|(m, c)| (m.order(), c[0])).collect();
    let mut dense: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    let mut coeffs = vec![PolyInX::one(1)];
    for r in 0..r_max {
        let (a, b) = weights(r);
        let mut next = vec![Complex64::zero(); dense.len() + 1];
        for (g, c) in dense.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &(beta, b0) in &b0 {
                if beta <= g {
                    next[g - beta] += c * b0 * binomial_f64(g, beta);
                }
            }
            for &(beta, b1) in &b1 {
                if beta <= g && !b1.is_zero() {
                    next[g - beta + 1] += c * binomial_f64(g, beta) * b1;
                }
            }
        }
        for (g, c) in next.iter_mut().enumerate() {
            *c *= a;
            if let Some(prev) = dense.get(g) {
                *c += prev * b;
            }
        }
        let finite = next.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        let largest = next.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if !finite || largest > OVERFLOW_LIMIT {
            return (coeffs, true);
        }
        while next.len() > 1 && next.last().is_some_and(|c| c.is_zero()) {
            next.pop();
        }
        let mut poly = PolyInX::zero(1);
        for (g, c) in next.iter().enumerate() {
            poly.add_term(MultiIndex::new([g as u32]), *c);
        }
        coeffs.push(poly);
        dense = next;
    }
    (coeffs, false)
}

/// `g_0 = 1`, `g_{r+1} = A(g_r f_u) / f_u` for `r < r_max`.
pub fn g_sequence(gen: &GeneratorSpec, u: &[f64], r_max: usize) -> Result<SeriesExpansion> {
    check_u(gen, u)?;
    let sym = symbol_coefficients(gen, u);
    let (coeffs, truncated) = run_recursion(&sym, gen.dim(), r_max, |_| (1.0, 0.0));
    Ok(SeriesExpansion {
        kind: SeriesKind::TaylorG,
        eta: None,
        u: u.to_vec(),
        coeffs,
        truncated,
        bound_rate: bound_rate(gen, u),
    })
}

/// `t_r = g_r / r!` via `t_{r+1} = A(t_r f_u) / ((r+1) f_u)`. Reaches much higher
/// orders than [`g_sequence`] before overflowing.
pub fn taylor_sequence(gen: &GeneratorSpec, u: &[f64], r_max: usize) -> Result<SeriesExpansion> {
    check_u(gen, u)?;
    let sym = symbol_coefficients(gen, u);
    let (coeffs, truncated) =
        run_recursion(&sym, gen.dim(), r_max, |r| (1.0 / (r + 1) as f64, 0.0));
    Ok(SeriesExpansion {
        kind: SeriesKind::TaylorScaled,
        eta: None,
        u: u.to_vec(),
        coeffs,
        truncated,
        bound_rate: bound_rate(gen, u),
    })
}

/// `h_0 = 1`, `(r+1) h_{r+1} = A(h_r f_u) / (eta f_u) + r h_r`.
pub fn h_sequence(
    gen: &GeneratorSpec,
    u: &[f64],
    eta: f64,
    r_max: usize,
) -> Result<SeriesExpansion> {
    check_u(gen, u)?;
    check_eta(eta)?;
    let sym = symbol_coefficients(gen, u);
    let (coeffs, truncated) = run_recursion(&sym, gen.dim(), r_max, |r| {
        let k = (r + 1) as f64;
        (1.0 / (eta * k), r as f64 / k)
    });
    Ok(SeriesExpansion {
        kind: SeriesKind::QSeries,
        eta: Some(eta),
        u: u.to_vec(),
        coeffs,
        truncated,
        bound_rate: bound_rate(gen, u),
    })
}

/// Largest `k` for which `k!` is a finite double.
const MAX_FACTORIAL_ORDER: usize = 170;

/// `q_k / f_u = (1/k!) sum_r c[k][r] eta^{-r} g_r` from a precomputed `g` sequence.
pub fn q_from_stirling(
    g_seq: &[PolyInX],
    stirling: &StirlingTable,
    eta: f64,
    k: usize,
    summation: Summation,
) -> Result<PolyInX> {
    check_eta(eta)?;
    if k >= g_seq.len() || k > stirling.k_max() {
        return Err(Error::InvalidArgument(format!(
            "order {k} needs g_0..g_{k} and Stirling rows up to {k}"
        )));
    }
    if k > MAX_FACTORIAL_ORDER {
        return Err(Error::InvalidArgument(format!("order {k} exceeds {MAX_FACTORIAL_ORDER}")));
    }
    let n = g_seq[0].dim();
    let k_fact = factorial_f64(k);
    let mut acc: std::collections::BTreeMap<MultiIndex, Accumulator> = Default::default();
    for (r, g) in g_seq.iter().enumerate().take(k + 1) {
        let c = stirling.get(k, r).to_f64().unwrap_or(f64::INFINITY);
        if c == 0.0 {
            continue;
        }
        let weight = c / k_fact * eta.powi(-(r as i32));
        for (gamma, v) in g.terms() {
            acc.entry(gamma.clone())
                .or_insert_with(|| Accumulator::new(summation))
                .add(v * weight);
        }
    }
    let mut out = PolyInX::zero(n);
    for (gamma, a) in acc {
        out.add_term(gamma, a.value());
    }
    Ok(out)
}

/// `q_k / f_u = (1/k!) prod_{r=0}^{k-1} (eta^{-1} A + r) f_u / f_u`, applying the
/// factors from `r = k-1` down to `r = 0`.
pub fn q_from_product(gen: &GeneratorSpec, u: &[f64], eta: f64, k: usize) -> Result<PolyInX> {
    check_u(gen, u)?;
    check_eta(eta)?;
    if k > MAX_FACTORIAL_ORDER {
        return Err(Error::InvalidArgument(format!("order {k} exceeds {MAX_FACTORIAL_ORDER}")));
    }
    let sym = symbol_coefficients(gen, u);
    let inv_eta = Complex64::new(1.0 / eta, 0.0);
    let mut p = PolyInX::one(gen.dim());
    for r in (0..k).rev() {
        let mut next = apply_symbol(&sym, &p).scale(inv_eta);
        next.axpy(Complex64::new(r as f64, 0.0), &p);
        p = next;
    }
    Ok(p.scale(Complex64::new(1.0 / factorial_f64(k), 0.0)))
}

/// `sum_{j=0}^{l} binom(l,j) (-1)^j (-j)^k`, the matrix of the triangular system
/// linking the `q_l` to the `g_k`.
pub fn qsys_entry(l: usize, k: usize) -> f64 {
    let s = alternating_power_sum(l, k as u32).to_f64().unwrap_or(f64::NAN);
    if k % 2 == 1 {
        -s
    } else {
        s
    }
}

/// Solves `sum_{l<=k} q_l S(l,k) = eta^{-k} g_k` for `q_0..q_{k_max}` by forward
/// substitution (`S(k,k) = k!`).
pub fn q_from_qsys(g_seq: &[PolyInX], eta: f64, k_max: usize) -> Result<Vec<PolyInX>> {
    check_eta(eta)?;
    if k_max >= g_seq.len() || k_max > MAX_FACTORIAL_ORDER {
        return Err(Error::InvalidArgument(format!(
            "order {k_max} needs g_0..g_{k_max} (and at most {MAX_FACTORIAL_ORDER})"
        )));
    }
    let mut q: Vec<PolyInX> = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut rhs = g_seq[k].scale(Complex64::new(eta.powi(-(k as i32)), 0.0));
        for (l, ql) in q.iter().enumerate() {
            let s = qsys_entry(l, k);
            if s != 0.0 {
                rhs.axpy(Complex64::new(-s, 0.0), ql);
            }
        }
        q.push(rhs.scale(Complex64::new(1.0 / factorial_f64(k), 0.0)));
    }
    Ok(q)
}

/// Largest residual of the triangular system over `k <= k_max` and the probe
/// points, each normalized by `eta^{-k}` times the growth bound on `g_k`.
pub fn verify_qsys(
    q_seq: &SeriesExpansion,
    g_seq: &SeriesExpansion,
    k_max: usize,
    probes: &[Vec<f64>],
) -> Result<f64> {
    let eta = q_seq
        .eta
        .ok_or_else(|| Error::InvalidArgument("q sequence carries no eta".into()))?;
    if k_max >= q_seq.len() || k_max >= g_seq.len() {
        return Err(Error::InvalidArgument(format!("sequences shorter than k_max + 1 = {}", k_max + 1)));
    }
    let mut worst: f64 = 0.0;
    for x in probes {
        let q_vals: Vec<Complex64> = q_seq.coeffs[..=k_max].iter().map(|p| p.eval(x)).collect();
        for k in 0..=k_max {
            let mut lhs = Complex64::zero();
            for (l, ql) in q_vals.iter().enumerate().take(k + 1) {
                lhs += ql * qsys_entry(l, k);
            }
            let rhs = g_seq.coeffs[k].eval(x) * eta.powi(-(k as i32));
            let residual = (lhs - rhs).norm();
            let scale = g_seq.coefficient_bound(x, k).unwrap_or(1.0) * eta.powi(-(k as i32));
            let normalized = if scale > 0.0 { residual / scale } else { residual };
            worst = worst.max(normalized);
        }
    }
    Ok(worst)
}

/// Sums `sum_k c_k z^k`, stopping after three consecutive terms below
/// `tol (1 + |partial sum|)`. Divergence is flagged when the series runs out
/// of coefficients while the last five terms kept growing.
pub fn sum_power_series(
    values: impl Iterator<Item = Complex64>,
    z: Complex64,
    opts: &EvalOptions,
) -> SeriesEvaluation {
    let mut acc = Accumulator::new(opts.summation);
    let mut power = Complex64::one();
    let mut small_run = 0;
    let mut growth_run = 0;
    let mut last_mag = f64::INFINITY;
    let mut n_terms = 0;
    let mut last_term = 0.0;
    for (k, v) in values.enumerate() {
        if k > 0 {
            power *= z;
        }
        let term = if v.is_zero() { Complex64::zero() } else { v * power };
        acc.add(term);
        n_terms = k + 1;
        let mag = term.norm();
        last_term = mag;
        growth_run = if k > 0 && mag > last_mag { growth_run + 1 } else { 0 };
        last_mag = mag;
        if k > 0 && mag <= opts.tol * (1.0 + acc.value().norm()) {
            small_run += 1;
            if small_run >= SMALL_RUN {
                return SeriesEvaluation {
                    value: acc.value(),
                    n_terms,
                    tail_estimate: mag,
                    converged: true,
                    diverged: false,
                };
            }
        } else {
            small_run = 0;
        }
    }
    SeriesEvaluation {
        value: acc.value(),
        n_terms,
        tail_estimate: last_term,
        converged: false,
        diverged: growth_run >= GROWTH_RUN,
    }
}

/// `sum_k (s^k / k!) g_k(x) e^{iu.x}`, from either a `g` or a scaled Taylor table.
///
/// The tail estimate is the growth-bound majorant `sum_{k>K} (k+1) rho^k` with
/// `rho = |s| 2^n theta (1 + ||x||)`; it is infinite once `rho >= 1`.
pub fn taylor_eval(
    g_seq: &SeriesExpansion,
    x: &[f64],
    s: Complex64,
    opts: &EvalOptions,
) -> Result<SeriesEvaluation> {
    let scaled = match g_seq.kind {
        SeriesKind::TaylorG => false,
        SeriesKind::TaylorScaled => true,
        _ => return Err(Error::InvalidArgument("taylor_eval needs a g sequence".into())),
    };
    if x.len() != g_seq.dim() {
        return Err(Error::InvalidArgument("x has the wrong dimension".into()));
    }
    let mut inv_fact = 1.0;
    let values = g_seq.coeffs.iter().enumerate().map(|(k, g)| {
        if k > 0 && !scaled {
            inv_fact /= k as f64;
        }
        g.eval(x) * inv_fact
    });
    let mut out = sum_power_series(values, s, opts);
    if let Some(rate) = g_seq.bound_rate {
        out.tail_estimate = taylor_tail_bound(rate, x, s.norm(), out.n_terms);
    }
    out.value *= plane_wave(&g_seq.u, x);
    Ok(out)
}

/// `sum_{k >= n_terms} (k+1) rho^k` with `rho = |s| rate (1 + ||x||)`.
pub(crate) fn taylor_tail_bound(rate: f64, x: &[f64], s_abs: f64, n_terms: usize) -> f64 {
    let rho = s_abs * rate * (1.0 + max_norm(x));
    let big_k = n_terms.saturating_sub(1) as f64;
    if rho == 0.0 {
        0.0
    } else if rho >= 1.0 {
        f64::INFINITY
    } else {
        rho.powf(big_k + 1.0) * ((big_k + 2.0) - (big_k + 1.0) * rho) / (1.0 - rho).powi(2)
    }
}

/// `w = 1 - e^{-eta s}`, with `w = 1` at `s = +inf`.
pub fn w_of_s(eta: f64, s: f64) -> f64 {
    if s.is_infinite() {
        1.0
    } else {
        -(-eta * s).exp_m1()
    }
}

/// `sum_k h_k(x) w^k e^{iu.x}` with `w = 1 - exp(-eta s)`.
pub fn q_series_eval(
    q_seq: &SeriesExpansion,
    x: &[f64],
    s: f64,
    opts: &EvalOptions,
) -> Result<SeriesEvaluation> {
    let eta = match (q_seq.kind, q_seq.eta) {
        (SeriesKind::QSeries, Some(eta)) => eta,
        _ => return Err(Error::InvalidArgument("q_series_eval needs an h sequence".into())),
    };
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("s must be non-negative, got {s}")));
    }
    if x.len() != q_seq.dim() {
        return Err(Error::InvalidArgument("x has the wrong dimension".into()));
    }
    let w = Complex64::new(w_of_s(eta, s), 0.0);
    let values = q_seq.coeffs.iter().map(|h| h.eval(x));
    let mut out = sum_power_series(values, w, opts);
    out.value *= plane_wave(&q_seq.u, x);
    Ok(out)
}

/// Where the `d_star` entering the radius estimate came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DStarSource {
    UserSupplied,
    OracleDerived,
}

/// Radius estimate and the `eta = pi / r_u` it implies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaSelection {
    pub r_u: f64,
    pub eta: f64,
    pub d_star: f64,
    pub source: DStarSource,
}

/// `r_u = 1 / (2^n theta(d_star) (1 + max_box ||x||))`, `eta = pi / r_u`.
pub fn select_eta(gen: &GeneratorSpec, d_star: f64, source: DStarSource) -> Result<EtaSelection> {
    if !(d_star >= 0.0) || !d_star.is_finite() {
        return Err(Error::InvalidArgument(format!("d_star must be finite and >= 0, got {d_star}")));
    }
    if gen.is_zero() {
        return Err(Error::Configuration(
            "zero generator: the series is the single term f_u and needs no eta".into(),
        ));
    }
    let profile = growth_profile(gen)?;
    let theta = profile.theta(d_star);
    if theta == 0.0 {
        return Err(Error::Configuration("growth profile vanishes at d_star".into()));
    }
    let r_u = 1.0 / (2f64.powi(gen.dim() as i32) * theta * (1.0 + gen.domain().max_norm()));
    Ok(EtaSelection { r_u, eta: std::f64::consts::PI / r_u, d_star, source })
}

/// Result of the empirical `eta` scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaCalibration {
    pub eta: f64,
    /// Predicted truncation plus rounding error at `s_max`.
    pub predicted_error: f64,
}

/// Relative rounding level charged against the largest series term.
const ROUNDING_LEVEL: f64 = 1e-15;

/// Picks `eta` from a log-spaced grid by the predicted error of the truncated
/// `w`-series at `s_max`: the last two terms plus rounding on the largest term,
/// maximized over the probe points. Among candidates within a factor two of the
/// best, the largest `eta` wins.
pub fn calibrate_eta(
    gen: &GeneratorSpec,
    u: &[f64],
    s_max: f64,
    probes: &[Vec<f64>],
    r_max: usize,
) -> Result<EtaCalibration> {
    check_u(gen, u)?;
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(Error::InvalidArgument(format!("s_max must be positive, got {s_max}")));
    }
    if r_max < 2 {
        return Err(Error::InvalidArgument("calibration needs r_max >= 2".into()));
    }
    if probes.is_empty() {
        return Err(Error::InvalidArgument("calibration needs at least one probe point".into()));
    }
    let mut scored: Vec<(f64, f64)> = Vec::new();
    for j in (-20..=8).rev() {
        let eta = 2f64.powf(j as f64 / 2.0) / s_max;
        let h = h_sequence(gen, u, eta, r_max)?;
        if h.truncated {
            continue;
        }
        let w = w_of_s(eta, s_max);
        let mut err: f64 = 0.0;
        for x in probes {
            let mags: Vec<f64> = h
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, p)| p.eval(x).norm() * w.powi(k as i32))
                .collect();
            let k = mags.len();
            let largest = mags.iter().copied().fold(0.0, f64::max);
            err = err.max(mags[k - 1] + mags[k - 2] + ROUNDING_LEVEL * largest);
        }
        if err.is_finite() {
            scored.push((eta, err));
        }
    }
    let best = scored
        .iter()
        .map(|&(_, e)| e)
        .fold(f64::INFINITY, f64::min);
    let &(eta, predicted_error) = scored
        .iter()
        .find(|&&(_, e)| e <= 2.0 * best)
        .ok_or_else(|| Error::Configuration("no eta candidate produced a finite series".into()))?;
    Ok(EtaCalibration { eta, predicted_error })
}

/// Box vertices plus the origin, the default probe set.
pub fn default_probes(gen: &GeneratorSpec) -> Vec<Vec<f64>> {
    let mut probes: Vec<Vec<f64>> = gen
        .domain()
        .vertices()
        .into_iter()
        .filter(|v| v.iter().all(|c| c.is_finite()))
        .collect();
    probes.push(vec![0.0; gen.dim()]);
    probes
}
