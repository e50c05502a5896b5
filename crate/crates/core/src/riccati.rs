//! Generalized Riccati system for the log-affine exponent, integrated with an
//! embedded Dormand-Prince 5(4) pair on the complex state `(C, D)`.

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::GeneratorSpec;
use crate::multiindex::MultiIndex;
use crate::series::{plane_wave, select_eta, DStarSource, EtaSelection};

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiOptions {
    pub rtol: f64,
    /// Absolute tolerance; `None` uses `rtol`.
    pub atol: Option<f64>,
    pub blowup_threshold: f64,
    /// Largest step as a fraction of `s_max`, so the dense output stays accurate.
    pub max_step_fraction: f64,
    pub max_steps: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        RiccatiOptions {
            rtol: 1e-9,
            atol: None,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            max_step_fraction: 1.0 / 50.0,
            max_steps: 1_000_000,
        }
    }
}

/// Accepted integration grid with `(C, D)` and their derivatives at each node.
#[derive(Clone, Debug, Serialize)]
pub struct RiccatiSolution {
    pub u: Vec<f64>,
    pub grid: Vec<f64>,
    pub c_vals: Vec<Complex64>,
    pub d_vals: Vec<Vec<Complex64>>,
    /// `d/ds (C, D)` at each node, state layout `[C, D_1, ..., D_n]`.
    #[serde(skip)]
    derivs: Vec<Vec<Complex64>>,
    /// Fifth dense-output coefficient of each accepted step.
    #[serde(skip)]
    dense: Vec<Vec<Complex64>>,
    pub blow_up_time: Option<f64>,
    /// `max_grid ||D||_inf`.
    pub d_star: f64,
}

/// Coefficient list `(alpha, c_alpha, d_alpha)` in a form convenient for the RHS.
struct RhsTerms {
    terms: Vec<(MultiIndex, f64, Vec<f64>)>,
}

impl RhsTerms {
    fn new(gen: &GeneratorSpec) -> Self {
        let terms = gen.coeffs().iter().map(|(a, c)| (a.clone(), c.c, c.d.clone())).collect();
        RhsTerms { terms }
    }

    /// Writes `[dC, dD_1, ..., dD_n]` for the state `[C, D_1, ..., D_n]`.
    fn eval(&self, y: &[Complex64], out: &mut [Complex64]) {
        let d = &y[1..];
        out.iter_mut().for_each(|v| *v = Complex64::zero());
        for (alpha, c, dvec) in &self.terms {
            let p = alpha.pow_complex(d);
            out[0] += p * *c;
            for (o, dj) in out[1..].iter_mut().zip(dvec) {
                if *dj != 0.0 {
                    *o += p * *dj;
                }
            }
        }
    }
}

/// `dC = sum_alpha c_alpha y^alpha`, `dD_j = sum_alpha (d_alpha)_j y^alpha`.
pub fn riccati_rhs(gen: &GeneratorSpec, y: &[Complex64]) -> (Complex64, Vec<Complex64>) {
    let mut state = vec![Complex64::zero(); y.len() + 1];
    state[1..].copy_from_slice(y);
    let mut out = vec![Complex64::zero(); y.len() + 1];
    RhsTerms::new(gen).eval(&state, &mut out);
    (out[0], out[1..].to_vec())
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Differences between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension of order 4.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combo(y: &[Complex64], h: f64, parts: &[(f64, &[Complex64])], out: &mut [Complex64]) {
    for i in 0..y.len() {
        let mut acc = Complex64::zero();
        for (w, k) in parts {
            acc += k[i] * *w;
        }
        out[i] = y[i] + acc * h;
    }
}

fn inf_norm(y: &[Complex64]) -> f64 {
    y.iter().fold(0.0, |m, v| m.max(v.norm()))
}

pub fn solve_riccati(
    gen: &GeneratorSpec,
    u: &[f64],
    s_max: f64,
    rtol: f64,
) -> Result<RiccatiSolution> {
    solve_riccati_with(gen, u, s_max, &RiccatiOptions { rtol, ..Default::default() })
}

/// Integrates from `C(0) = 0`, `D(0) = iu` up to `s_max`, stopping early when
/// `||(C, D)||_inf` exceeds the blow-up threshold or the step size underflows.
pub fn solve_riccati_with(
    gen: &GeneratorSpec,
    u: &[f64],
    s_max: f64,
    opts: &RiccatiOptions,
) -> Result<RiccatiSolution> {
    if u.len() != gen.dim() {
        return Err(Error::InvalidArgument("u has the wrong dimension".into()));
    }
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(Error::InvalidArgument(format!("s_max must be positive, got {s_max}")));
    }
    if !(opts.rtol > 0.0) {
        return Err(Error::InvalidArgument("rtol must be positive".into()));
    }
    let atol = opts.atol.unwrap_or(opts.rtol);
    let rhs = RhsTerms::new(gen);
    let m = gen.dim() + 1;

    let mut y = vec![Complex64::zero(); m];
    for (j, &uj) in u.iter().enumerate() {
        y[j + 1] = Complex64::new(0.0, uj);
    }
    let mut k1 = vec![Complex64::zero(); m];
    rhs.eval(&y, &mut k1);

    let mut sol = RiccatiSolution {
        u: u.to_vec(),
        grid: vec![0.0],
        c_vals: vec![y[0]],
        d_vals: vec![y[1..].to_vec()],
        derivs: vec![k1.clone()],
        dense: Vec::new(),
        blow_up_time: None,
        d_star: inf_norm(&y[1..]),
    };

    let h_max = s_max * opts.max_step_fraction;
    let mut h = h_max.min(0.01 * s_max);
    let mut s = 0.0;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![Complex64::zero(); m],
        vec![Complex64::zero(); m],
        vec![Complex64::zero(); m],
        vec![Complex64::zero(); m],
        vec![Complex64::zero(); m],
        vec![Complex64::zero(); m],
    );
    let mut tmp = vec![Complex64::zero(); m];
    let mut y_new = vec![Complex64::zero(); m];
    let mut steps = 0;

    while s < s_max {
        steps += 1;
        if steps > opts.max_steps {
            sol.blow_up_time = Some(s);
            break;
        }
        h = h.min(s_max - s);
        if h < 1e-14 * s.max(1.0) {
            sol.blow_up_time = Some(s);
            break;
        }
        combo(&y, h, &[(A21, &k1)], &mut tmp);
        rhs.eval(&tmp, &mut k2);
        combo(&y, h, &[(A31, &k1), (A32, &k2)], &mut tmp);
        rhs.eval(&tmp, &mut k3);
        combo(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)], &mut tmp);
        rhs.eval(&tmp, &mut k4);
        combo(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], &mut tmp);
        rhs.eval(&tmp, &mut k5);
        combo(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], &mut tmp);
        rhs.eval(&tmp, &mut k6);
        combo(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], &mut y_new);
        rhs.eval(&y_new, &mut k7);

        let mut err: f64 = 0.0;
        for i in 0..m {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let scale = atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / scale);
        }
        let finite = y_new.iter().all(|v| v.re.is_finite() && v.im.is_finite());
        if !finite {
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            let dense = (0..m)
                .map(|i| {
                    (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h
                })
                .collect();
            sol.dense.push(dense);
            s = if s_max - (s + h) <= 1e-15 * s_max { s_max } else { s + h };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            sol.grid.push(s);
            sol.c_vals.push(y[0]);
            sol.d_vals.push(y[1..].to_vec());
            sol.derivs.push(k1.clone());
            sol.d_star = sol.d_star.max(inf_norm(&y[1..]));
            if inf_norm(&y) > opts.blowup_threshold {
                sol.blow_up_time = Some(s);
                break;
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(h_max);
    }
    Ok(sol)
}

impl RiccatiSolution {
    pub fn end(&self) -> f64 {
        *self.grid.last().expect("grid is never empty")
    }

    /// `(C(s), D(s))` from the integrator's continuous extension.
    pub fn exponent_at(&self, s: f64) -> Result<(Complex64, Vec<Complex64>)> {
        let end = self.end();
        if !(s >= 0.0) || s > end {
            if let Some(at) = self.blow_up_time {
                if s > at {
                    return Err(Error::BlowUp { at, requested: s });
                }
            }
            return Err(Error::OutOfRange { requested: s, end });
        }
        let i = match self.grid.binary_search_by(|g| g.total_cmp(&s)) {
            Ok(i) => return Ok((self.c_vals[i], self.d_vals[i].clone())),
            Err(i) => i - 1,
        };
        let h = self.grid[i + 1] - self.grid[i];
        let t = (s - self.grid[i]) / h;
        let t1 = 1.0 - t;
        let value = |j: usize, y0: Complex64, y1: Complex64| {
            let diff = y1 - y0;
            let r3 = self.derivs[i][j] * h - diff;
            let r4 = diff - self.derivs[i + 1][j] * h - r3;
            y0 + (diff + (r3 + (r4 + self.dense[i][j] * t1) * t) * t1) * t
        };
        let c = value(0, self.c_vals[i], self.c_vals[i + 1]);
        let d = (0..self.u.len())
            .map(|j| value(j + 1, self.d_vals[i][j], self.d_vals[i + 1][j]))
            .collect();
        Ok((c, d))
    }
}

/// `exp(C(s) + x . D(s))`.
pub fn char_fn_riccati(sol: &RiccatiSolution, x: &[f64], s: f64) -> Result<Complex64> {
    if x.len() != sol.u.len() {
        return Err(Error::InvalidArgument("x has the wrong dimension".into()));
    }
    if s == 0.0 {
        return Ok(plane_wave(&sol.u, x));
    }
    let (c, d) = sol.exponent_at(s)?;
    let lin: Complex64 = d.iter().zip(x).map(|(dj, xj)| dj * xj).sum();
    Ok((c + lin).exp())
}

/// Radius estimate using the oracle's `sup_s ||D(s, u)||`.
pub fn select_eta_from_riccati(gen: &GeneratorSpec, sol: &RiccatiSolution) -> Result<EtaSelection> {
    select_eta(gen, sol.d_star, DStarSource::OracleDerived)
}

/// Closed-form exponent of the square-root diffusion
/// `dX = kappa (theta - X) ds + sigma sqrt(X) dW`:
/// `D = iu E / Q`, `C = -(2 kappa theta / sigma^2) ln Q` with `E = e^{-kappa s}`,
/// `Q = 1 - (sigma^2 / (2 kappa)) iu (1 - E)`.
pub fn square_root_exponent(kappa: f64, theta: f64, sigma: f64, u: f64, s: f64) -> (Complex64, Complex64) {
    let iu = Complex64::new(0.0, u);
    let e = (-kappa * s).exp();
    let q = 1.0 - iu * (sigma * sigma / (2.0 * kappa)) * (1.0 - e);
    (-(2.0 * kappa * theta / (sigma * sigma)) * q.ln(), iu * e / q)
}
