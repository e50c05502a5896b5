//! Affine generators `A = sum_{|alpha|>0} a_alpha(x) d^alpha` with
//! `a_alpha(x) = c_alpha + x . d_alpha`, their symbol coefficients and the
//! growth constants that bound `A^r f_u`.

mod model;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_traits::Zero;

pub use model::{
    AffineMatrix, AffineVector, BoxDoc, JumpDistribution, JumpsDoc, ModelSpec, MomentEntry,
    DEFAULT_K_MAX,
};

use crate::error::{Error, Result};
use crate::multiindex::{enumerate_multiindices, MultiIndex};

/// Tolerance on `|a_ij - a_ji|` for the symmetry check.
const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL * scale` count as non-negative.
const PSD_TOL: f64 = 1e-10;

/// One affine coefficient `c + x . d`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineCoeff {
    pub c: f64,
    pub d: Vec<f64>,
}

impl AffineCoeff {
    pub fn zero(n: usize) -> Self {
        AffineCoeff { c: 0.0, d: vec![0.0; n] }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c + self.d.iter().zip(x).map(|(d, x)| d * x).sum::<f64>()
    }

    fn is_zero(&self) -> bool {
        self.c == 0.0 && self.d.iter().all(|&v| v == 0.0)
    }
}

/// Axis-aligned box containing the origin. Infinite bounds are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    /// The default normalization `[-1, 1]^n`.
    pub fn unit(n: usize) -> Self {
        DomainBox { lo: vec![-1.0; n], hi: vec![1.0; n] }
    }

    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidModel("domain box bounds differ in length".into()));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if l.is_nan() || h.is_nan() || *l > 0.0 || *h < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "domain box [{l}, {h}] does not contain the origin"
                )));
            }
        }
        Ok(DomainBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    /// `max_{x in box} ||x||_inf`.
    pub fn max_norm(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| l.abs().max(h.abs()))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }

    /// All `2^n` vertices (coordinates may be infinite for unbounded boxes).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] })
                    .collect()
            })
            .collect()
    }

    /// `sup_{x in box} |c + x . d| / (1 + ||x||_inf)`.
    ///
    /// On each interval between the breakpoints `t in {0, |lo_i|, hi_i}` the
    /// maximum of `|c + x.d|` over `||x||_inf <= t` is piecewise linear in `t`,
    /// so the ratio is monotone there and the sup sits at a breakpoint.
    pub fn sup_affine_ratio(&self, coeff: &AffineCoeff) -> f64 {
        let mut breakpoints = vec![0.0];
        breakpoints.extend(self.lo.iter().map(|l| l.abs()));
        breakpoints.extend(self.hi.iter().copied());
        let mut best: f64 = 0.0;
        for &t in &breakpoints {
            if !t.is_finite() {
                if coeff.d.iter().any(|&d| d != 0.0) {
                    // ratio tends to the linear growth rate along unbounded axes
                    let rate: f64 = self
                        .lo
                        .iter()
                        .zip(&self.hi)
                        .zip(&coeff.d)
                        .map(|((l, h), d)| {
                            if l.is_infinite() || h.is_infinite() {
                                d.abs()
                            } else {
                                0.0
                            }
                        })
                        .sum();
                    best = best.max(rate);
                }
                continue;
            }
            let (mut hi_val, mut lo_val) = (coeff.c, coeff.c);
            for i in 0..self.dim() {
                let a = self.lo[i].max(-t);
                let b = self.hi[i].min(t);
                let d = coeff.d[i];
                hi_val += (d * a).max(d * b);
                lo_val += (d * a).min(d * b);
            }
            best = best.max(hi_val.abs().max(lo_val.abs()) / (1.0 + t));
        }
        best
    }
}

/// Affine generator with coefficients `a_alpha` for `1 <= |alpha| <= k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    n: usize,
    k_max: usize,
    coeffs: BTreeMap<MultiIndex, AffineCoeff>,
    domain: DomainBox,
}

impl GeneratorSpec {
    /// Builds a generator from raw coefficients, enforcing `1 <= |alpha| <= k_max`.
    pub fn from_coefficients(
        n: usize,
        k_max: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, AffineCoeff)>,
        domain: DomainBox,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("generator dimension must be >= 1".into()));
        }
        if domain.dim() != n {
            return Err(Error::InvalidModel("domain box dimension mismatch".into()));
        }
        let mut map = BTreeMap::new();
        for (alpha, coeff) in coeffs {
            if alpha.dim() != n || coeff.d.len() != n {
                return Err(Error::InvalidModel(format!(
                    "coefficient {alpha:?} has the wrong dimension"
                )));
            }
            let order = alpha.order();
            if order == 0 || order > k_max {
                return Err(Error::InvalidModel(format!(
                    "coefficient {alpha:?} outside 1 <= |alpha| <= {k_max}"
                )));
            }
            if !coeff.c.is_finite() || coeff.d.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "coefficient {alpha:?} is not finite"
                )));
            }
            if !coeff.is_zero() {
                map.insert(alpha, coeff);
            }
        }
        Ok(GeneratorSpec { n, k_max, coeffs: map, domain })
    }

    pub fn zero(n: usize) -> Self {
        GeneratorSpec { n, k_max: 2, coeffs: BTreeMap::new(), domain: DomainBox::unit(n) }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, AffineCoeff> {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Option<&AffineCoeff> {
        self.coeffs.get(alpha)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Same coefficients on a different domain box.
    pub fn with_domain(mut self, domain: DomainBox) -> Result<Self> {
        if domain.dim() != self.n {
            return Err(Error::InvalidModel("domain box dimension mismatch".into()));
        }
        self.domain = domain;
        Ok(self)
    }

    /// `(A f_u)(x) / f_u(x) = sum_alpha a_alpha(x) (iu)^alpha`, evaluated term by term.
    pub fn symbol_at(&self, x: &[f64], u: &[f64]) -> Complex64 {
        let iu: Vec<Complex64> = u.iter().map(|&v| Complex64::new(0.0, v)).collect();
        self.coeffs
            .iter()
            .map(|(alpha, a)| alpha.pow_complex(&iu) * a.eval(x))
            .sum()
    }

    /// Convergence proxy for the truncated moment series:
    /// `sum_{|alpha| = k_max} sup_box |a_alpha| * (1 + ||u||)^k_max`.
    pub fn tail_proxy(&self, u_norm: f64) -> f64 {
        let vertices = self.domain.vertices();
        let top: f64 = self
            .coeffs
            .iter()
            .filter(|(alpha, _)| alpha.order() == self.k_max)
            .map(|(_, a)| vertices.iter().map(|v| a.eval(v).abs()).fold(0.0, f64::max))
            .sum();
        top * (1.0 + u_norm).powi(self.k_max as i32)
    }

    /// Warning text when the tail proxy exceeds `tol`.
    pub fn tail_warning(&self, u_norm: f64, tol: f64) -> Option<String> {
        let proxy = self.tail_proxy(u_norm);
        (proxy > tol).then(|| {
            format!(
                "moment series tail proxy {proxy:.3e} exceeds {tol:.1e} at ||u|| = {u_norm}; \
                 increase k_max"
            )
        })
    }
}

fn check_symmetric(which: &str, m: &[Vec<f64>]) -> Result<()> {
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let (a, b) = (m[i][j], m[j][i]);
            if (a - b).abs() > SYMMETRY_TOL * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::AsymmetricDiffusion { which: which.into(), i, j, a, b });
            }
        }
    }
    Ok(())
}

fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    SymmetricEigen::new(mat).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn matrix_scale(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub(crate) fn domain_from_doc(spec: &ModelSpec) -> Result<DomainBox> {
    let n = spec.dimension;
    match &spec.domain_box {
        None => Ok(DomainBox::unit(n)),
        Some(b) => DomainBox::new(
            b.lo.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect(),
            b.hi.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
        ),
    }
}

/// Resolved moment table `alpha -> int z^alpha mu(dz)` for `2 <= |alpha| <= k_max`.
fn moment_table(jumps: &JumpsDoc, n: usize, k_max: usize) -> Result<BTreeMap<MultiIndex, f64>> {
    let mut table = BTreeMap::new();
    for entry in &jumps.moments {
        let alpha = MultiIndex::from(entry.alpha.clone());
        if alpha.order() < 2 {
            return Err(Error::InvalidMoments(format!(
                "moment {alpha:?} has order < 2; first moments are absorbed by the compensator"
            )));
        }
        if !entry.value.is_finite() {
            return Err(Error::InvalidMoments(format!("moment {alpha:?} is not finite")));
        }
        if alpha.order() > k_max {
            continue;
        }
        if table.insert(alpha.clone(), entry.value).is_some() {
            return Err(Error::InvalidMoments(format!("moment {alpha:?} listed twice")));
        }
    }
    for alpha in enumerate_multiindices(n, k_max)? {
        if alpha.order() < 2 || table.contains_key(&alpha) {
            continue;
        }
        match &jumps.distribution {
            Some(dist) => {
                let v = dist.raw_moment(&alpha);
                table.insert(alpha, v);
            }
            None => {
                return Err(Error::MissingMoment { alpha: alpha.exponents().to_vec(), k_max });
            }
        }
    }
    for i in 0..n {
        let even = MultiIndex::unit(n, i).add(&MultiIndex::unit(n, i));
        if table.get(&even).copied().unwrap_or(0.0) < 0.0 {
            return Err(Error::InvalidMoments(format!(
                "pure second moment {even:?} is negative"
            )));
        }
    }
    let second: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let a = MultiIndex::unit(n, i).add(&MultiIndex::unit(n, j));
                    table.get(&a).copied().unwrap_or(0.0)
                })
                .collect()
        })
        .collect();
    let min_eig = min_eigenvalue(&second);
    if min_eig < -PSD_TOL * matrix_scale(&second).max(1.0) {
        return Err(Error::InvalidMoments(format!(
            "second-moment matrix is not positive semidefinite (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(table)
}

/// Assembles `a_alpha` from drift, diffusion and jump data.
///
/// `|alpha| = 1` carries the drift, `|alpha| = 2` half the diffusion matrix,
/// and every `|alpha| >= 2` the jump term `(lambda0 + x . lambda1) m_alpha / alpha!`.
/// The compensator cancels the first jump moment, so jumps never enter `|alpha| = 1`.
pub fn build_generator(spec: &ModelSpec) -> Result<GeneratorSpec> {
    spec.check_shapes()?;
    let n = spec.dimension;
    let k_max = spec.k_max();
    let domain = domain_from_doc(spec)?;

    let b_lin = spec.drift_linear();
    let a_const = &spec.diffusion.constant;
    let a_lin = spec.diffusion_linear();
    check_symmetric("diffusion.const", a_const)?;
    for (k, m) in a_lin.iter().enumerate() {
        check_symmetric(&format!("diffusion.linear[{k}]"), m)?;
    }

    // a(x) is affine, the PSD cone is convex: checking the vertices covers the box.
    // Along unbounded directions the slope matrix itself must be PSD.
    let finite_box = DomainBox {
        lo: domain.lo.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect(),
        hi: domain.hi.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect(),
    };
    let diffusion_at = |x: &[f64]| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| a_const[i][j] + (0..n).map(|k| x[k] * a_lin[k][i][j]).sum::<f64>())
                    .collect()
            })
            .collect()
    };
    for v in finite_box.vertices() {
        let a = diffusion_at(&v);
        let min_eig = min_eigenvalue(&a);
        if min_eig < -PSD_TOL * matrix_scale(&a).max(1.0) {
            return Err(Error::NotPositiveSemidefinite { vertex: v, min_eig });
        }
    }
    for k in 0..n {
        for (bound, sign) in [(domain.hi[k], 1.0), (domain.lo[k], -1.0)] {
            if bound.is_infinite() {
                let slope: Vec<Vec<f64>> =
                    a_lin[k].iter().map(|r| r.iter().map(|v| sign * v).collect()).collect();
                let min_eig = min_eigenvalue(&slope);
                if min_eig < -PSD_TOL * matrix_scale(&slope).max(1.0) {
                    let mut vertex = vec![0.0; n];
                    vertex[k] = bound;
                    return Err(Error::NotPositiveSemidefinite { vertex, min_eig });
                }
            }
        }
    }

    let mut coeffs: BTreeMap<MultiIndex, AffineCoeff> = BTreeMap::new();
    for i in 0..n {
        let e = coeffs.entry(MultiIndex::unit(n, i)).or_insert_with(|| AffineCoeff::zero(n));
        e.c += spec.drift.constant[i];
        for j in 0..n {
            e.d[j] += b_lin[i][j];
        }
    }
    for i in 0..n {
        for j in 0..n {
            let alpha = MultiIndex::unit(n, i).add(&MultiIndex::unit(n, j));
            let e = coeffs.entry(alpha).or_insert_with(|| AffineCoeff::zero(n));
            e.c += 0.5 * a_const[i][j];
            for k in 0..n {
                e.d[k] += 0.5 * a_lin[k][i][j];
            }
        }
    }

    if let Some(jumps) = &spec.jumps {
        let lambda1 = spec.lambda1();
        if !jumps.lambda0.is_finite() || lambda1.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("jump intensity is not finite".into()));
        }
        let intensity = AffineCoeff { c: jumps.lambda0, d: lambda1.clone() };
        for v in domain.vertices() {
            // 0 * inf is NaN; only directions with non-zero slope matter
            let value = intensity.c
                + v.iter()
                    .zip(&lambda1)
                    .map(|(x, l)| if *l == 0.0 { 0.0 } else { x * l })
                    .sum::<f64>();
            if value < 0.0 {
                return Err(Error::NegativeIntensity { value, at: v });
            }
        }
        let active = jumps.lambda0 != 0.0 || lambda1.iter().any(|&v| v != 0.0);
        if active {
            for (alpha, m) in moment_table(jumps, n, k_max)? {
                let w = m / alpha.factorial();
                let e = coeffs.entry(alpha).or_insert_with(|| AffineCoeff::zero(n));
                e.c += intensity.c * w;
                for k in 0..n {
                    e.d[k] += intensity.d[k] * w;
                }
            }
        }
    }

    GeneratorSpec::from_coefficients(n, k_max, coeffs, domain)
}

/// Symbol coefficients at a fixed `u`:
/// `b0[beta] = sum_alpha c_{alpha+beta} (alpha+beta)!/alpha! (iu)^alpha` and
/// `b1[beta][j]` the same sum over the `j`-th component of `d_{alpha+beta}`.
#[derive(Clone, Debug)]
pub struct SymbolCoefficients {
    pub u: Vec<f64>,
    pub b0: BTreeMap<MultiIndex, Complex64>,
    pub b1: BTreeMap<MultiIndex, Vec<Complex64>>,
}

impl SymbolCoefficients {
    pub fn b0(&self, beta: &MultiIndex) -> Complex64 {
        self.b0.get(beta).copied().unwrap_or_else(Complex64::zero)
    }

    pub fn b1(&self, beta: &MultiIndex, j: usize) -> Complex64 {
        self.b1.get(beta).map(|v| v[j]).unwrap_or_else(Complex64::zero)
    }

    /// `b_beta(x, u) = b0[beta] + sum_j b1[beta][j] x_j`.
    pub fn eval(&self, beta: &MultiIndex, x: &[f64]) -> Complex64 {
        let mut acc = self.b0(beta);
        if let Some(row) = self.b1.get(beta) {
            for (c, xj) in row.iter().zip(x) {
                acc += c * xj;
            }
        }
        acc
    }
}

pub fn symbol_coefficients(gen: &GeneratorSpec, u: &[f64]) -> SymbolCoefficients {
    let n = gen.dim();
    let iu: Vec<Complex64> = u.iter().map(|&v| Complex64::new(0.0, v)).collect();
    let mut b0: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
    let mut b1: BTreeMap<MultiIndex, Vec<Complex64>> = BTreeMap::new();
    for (gamma, coeff) in gen.coeffs() {
        for beta in gamma.lower_set() {
            let alpha = gamma.checked_sub(&beta).expect("beta is in the lower set");
            let weight = alpha.pow_complex(&iu) * gamma.falling_factorial(&beta);
            if coeff.c != 0.0 {
                *b0.entry(beta.clone()).or_insert_with(Complex64::zero) += weight * coeff.c;
            }
            if coeff.d.iter().any(|&v| v != 0.0) {
                let row = b1.entry(beta).or_insert_with(|| vec![Complex64::zero(); n]);
                for (r, d) in row.iter_mut().zip(&coeff.d) {
                    *r += weight * *d;
                }
            }
        }
    }
    SymbolCoefficients { u: u.to_vec(), b0, b1 }
}

/// Growth constants `D_k` and the profile `theta(v) = sum_k 2^k (1+v)^k D_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthProfile {
    n: usize,
    /// `d_k[k]` for `0 <= k <= k_max`; `d_k[0]` is always zero.
    d_k: Vec<f64>,
}

impl GrowthProfile {
    pub fn d_k(&self) -> &[f64] {
        &self.d_k
    }

    pub fn theta(&self, v: f64) -> f64 {
        self.d_k
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, d)| (2.0 * (1.0 + v)).powi(k as i32) * d)
            .sum()
    }

    /// `(r+1)! 2^{nr} (1 + ||x||)^r theta(||u||)^r` with max-norms.
    pub fn coefficient_bound(&self, x: &[f64], u: &[f64], r: usize) -> f64 {
        if r == 0 {
            return 1.0;
        }
        let theta = self.theta(max_norm(u));
        if theta == 0.0 {
            return 0.0;
        }
        let per_order = 2f64.powi(self.n as i32) * (1.0 + max_norm(x)) * theta;
        let ln = ln_factorial(r + 1) + r as f64 * per_order.ln();
        ln.exp()
    }
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `D_k = sup_x max_{|alpha|=k, |beta|<=1} |d^beta a_alpha(x)| / (1 + ||x||)`.
pub fn growth_profile(gen: &GeneratorSpec) -> Result<GrowthProfile> {
    let domain = gen.domain();
    if !domain.is_bounded() {
        return Err(Error::UnboundedDomain);
    }
    let mut d_k = vec![0.0f64; gen.k_max() + 1];
    for (alpha, coeff) in gen.coeffs() {
        let value_part = domain.sup_affine_ratio(coeff);
        // derivative part is constant; 1/(1+||x||) peaks at the origin
        let slope_part = coeff.d.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
        let k = alpha.order();
        d_k[k] = d_k[k].max(value_part).max(slope_part);
    }
    Ok(GrowthProfile { n: gen.dim(), d_k })
}
