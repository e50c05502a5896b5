//! Euler-Maruyama simulation of affine jump diffusions and a characteristic
//! function estimator with standard errors.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::{domain_from_doc, JumpDistribution, ModelSpec};

pub const DEFAULT_PATHS: usize = 200_000;
pub const DEFAULT_STEPS: usize = 512;
/// Clamp fraction above which a simulation carries a warning.
pub const CLAMP_WARNING_FRACTION: f64 = 0.01;

#[derive(Clone, Debug)]
struct Jumps {
    lambda0: f64,
    lambda1: Vec<f64>,
    dist: JumpDistribution,
    mean: Vec<f64>,
    /// `max(0, sup lambda)` over the finite vertices of the model box.
    box_bound: f64,
}

impl Jumps {
    fn intensity(&self, x: &[f64]) -> f64 {
        self.lambda0 + x.iter().zip(&self.lambda1).map(|(a, b)| a * b).sum::<f64>()
    }

    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match &self.dist {
            JumpDistribution::PointMass { atom } => out.copy_from_slice(atom),
            JumpDistribution::Normal { mean, std } => {
                for ((o, m), s) in out.iter_mut().zip(mean).zip(std) {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = m + s * z;
                }
            }
        }
    }
}

/// `dX = (b0 + B X) dt + sigma(X) dW + compensated jumps`, with
/// `sigma sigma^T = A0 + sum_k X_k A_k`.
#[derive(Clone, Debug)]
pub struct SDEModel {
    n: usize,
    b0: Vec<f64>,
    b: Vec<Vec<f64>>,
    a0: Vec<Vec<f64>>,
    a_lin: Vec<Vec<Vec<f64>>>,
    /// Square root of `A0` (row-major) when the diffusion does not depend on the state.
    const_sqrt: Option<Vec<f64>>,
    jumps: Option<Jumps>,
}

/// Writes the symmetric square root of the PSD part of `a` (row-major `n x n`)
/// into `out`; returns whether a negative eigenvalue was clamped.
fn psd_sqrt_into(a: &[f64], n: usize, out: &mut [f64]) -> bool {
    if n == 1 {
        out[0] = a[0].max(0.0).sqrt();
        return a[0] < 0.0;
    }
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[i * n + j] + a[j * n + i]));
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::new(m);
    let clamped = eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale);
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let v = &eig.eigenvectors;
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n).map(|k| v[(i, k)] * roots[k] * v[(j, k)]).sum();
        }
    }
    clamped
}

impl SDEModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.check_shapes()?;
        let n = spec.dimension;
        let a_lin = spec.diffusion_linear();
        let state_dependent = a_lin.iter().flatten().flatten().any(|&v| v != 0.0);
        let const_sqrt = (!state_dependent).then(|| {
            let flat: Vec<f64> = spec.diffusion.constant.iter().flatten().copied().collect();
            let mut root = vec![0.0; n * n];
            psd_sqrt_into(&flat, n, &mut root);
            root
        });
        let jumps = match &spec.jumps {
            None => None,
            Some(doc) => {
                let dist = doc.distribution.clone().ok_or_else(|| {
                    Error::Configuration(
                        "simulation needs a jump size distribution, not only moments".into(),
                    )
                })?;
                dist.validate(n)?;
                let lambda1 = spec.lambda1();
                let domain = domain_from_doc(spec)?;
                let mut j = Jumps { lambda0: doc.lambda0, lambda1, mean: dist.mean(), dist, box_bound: 0.0 };
                j.box_bound = domain
                    .vertices()
                    .iter()
                    .map(|v| {
                        let finite: Vec<f64> =
                            v.iter().map(|&c| if c.is_finite() { c } else { 0.0 }).collect();
                        j.intensity(&finite)
                    })
                    .fold(0.0, f64::max);
                Some(j)
            }
        };
        Ok(SDEModel {
            n,
            b0: spec.drift.constant.clone(),
            b: spec.drift_linear(),
            a0: spec.diffusion.constant.clone(),
            a_lin,
            const_sqrt,
            jumps,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Runs one path; returns the number of steps that needed clamping.
    fn run_path(&self, x: &mut [f64], s: f64, n_steps: usize, rng: &mut ChaCha8Rng) -> usize {
        let n = self.n;
        let dt = s / n_steps as f64;
        let sqdt = dt.sqrt();
        let mut clamped_steps = 0;
        let mut z = vec![0.0; n];
        let mut incr = vec![0.0; n];
        let mut jump = vec![0.0; n];
        let mut jumped = vec![0.0; n];
        let mut a = vec![0.0; n * n];
        let mut root = vec![0.0; n * n];
        for _ in 0..n_steps {
            let mut clamped = false;
            for i in 0..n {
                incr[i] = (self.b0[i] + (0..n).map(|j| self.b[i][j] * x[j]).sum::<f64>()) * dt;
            }
            let sigma: &[f64] = match &self.const_sqrt {
                Some(s) => s,
                None => {
                    for i in 0..n {
                        for j in 0..n {
                            a[i * n + j] = self.a0[i][j]
                                + (0..n).map(|k| x[k] * self.a_lin[k][i][j]).sum::<f64>();
                        }
                    }
                    clamped |= psd_sqrt_into(&a, n, &mut root);
                    &root
                }
            };
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            for i in 0..n {
                incr[i] += sqdt * (0..n).map(|j| sigma[i * n + j] * z[j]).sum::<f64>();
            }
            if let Some(jp) = &self.jumps {
                let lam = jp.intensity(x);
                if lam < 0.0 {
                    clamped = true;
                }
                let lam = lam.max(0.0);
                for i in 0..n {
                    incr[i] -= lam * jp.mean[i] * dt;
                }
                // Thinning on [0, dt) against a bound refreshed after each jump.
                jumped.copy_from_slice(x);
                let mut bound = jp.box_bound.max(lam);
                let mut t = 0.0;
                while bound > 0.0 {
                    let e: f64 = rng.sample(Exp1);
                    t += e / bound;
                    if t >= dt {
                        break;
                    }
                    let current = jp.intensity(&jumped).max(0.0);
                    let accept: f64 = rng.random();
                    if accept * bound < current {
                        jp.sample(rng, &mut jump);
                        for i in 0..n {
                            jumped[i] += jump[i];
                            incr[i] += jump[i];
                        }
                        bound = bound.max(jp.intensity(&jumped));
                    }
                }
            }
            for i in 0..n {
                x[i] += incr[i];
            }
            if clamped {
                clamped_steps += 1;
            }
        }
        clamped_steps
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Simulation {
    pub n: usize,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Fraction of steps where a negative variance or intensity was clamped.
    pub clamp_fraction: f64,
    pub warning: Option<String>,
    /// Terminal states, path-major.
    #[serde(skip)]
    pub terminals: Vec<f64>,
}

impl Simulation {
    pub fn terminal(&self, path: usize) -> &[f64] {
        &self.terminals[path * self.n..(path + 1) * self.n]
    }
}

/// Simulates `n_paths` independent paths from `x0` up to time `s`. The step is
/// `s / ceil(s / dt)`; path `i` draws from a ChaCha8 stream `(seed, i)`, so the
/// result does not depend on the thread count.
pub fn simulate_paths(
    model: &SDEModel,
    x0: &[f64],
    s: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<Simulation> {
    if x0.len() != model.n {
        return Err(Error::InvalidArgument("x0 has the wrong dimension".into()));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    if !(dt > 0.0) || dt > s * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("dt must be in (0, s], got {dt}")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be >= 1".into()));
    }
    let n_steps = ((s / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let results: Vec<(Vec<f64>, usize)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut x = x0.to_vec();
            let c = model.run_path(&mut x, s, n_steps, &mut rng);
            (x, c)
        })
        .collect();
    let clamped: usize = results.iter().map(|r| r.1).sum();
    let clamp_fraction = clamped as f64 / (n_steps * n_paths) as f64;
    let warning = (clamp_fraction > CLAMP_WARNING_FRACTION).then(|| {
        format!("variance or intensity clamped to 0 on {:.2}% of steps", 100.0 * clamp_fraction)
    });
    Ok(Simulation {
        n: model.n,
        n_paths,
        dt: s / n_steps as f64,
        seed,
        clamp_fraction,
        warning,
        terminals: results.into_iter().flat_map(|r| r.0).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: Complex64,
    /// `sqrt((var_re + var_im) / n_paths)`, the standard error of the complex mean.
    pub stderr: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub clamp_fraction: f64,
}

/// Sample mean of `exp(i u . X_s)` with component-wise standard errors.
pub fn mc_char_fn(sim: &Simulation, u: &[f64]) -> Result<MCEstimate> {
    if u.len() != sim.n {
        return Err(Error::InvalidArgument("u has the wrong dimension".into()));
    }
    if sim.n_paths == 0 {
        return Err(Error::InvalidArgument("no terminal values".into()));
    }
    let samples: Vec<(f64, f64)> = (0..sim.n_paths)
        .map(|p| {
            let phase: f64 = u.iter().zip(sim.terminal(p)).map(|(a, b)| a * b).sum();
            (phase.cos(), phase.sin())
        })
        .collect();
    let np = sim.n_paths as f64;
    let (mut mr, mut mi) = (0.0, 0.0);
    for (r, i) in &samples {
        mr += r;
        mi += i;
    }
    mr /= np;
    mi /= np;
    let (mut vr, mut vi) = (0.0, 0.0);
    for (r, i) in &samples {
        vr += (r - mr) * (r - mr);
        vi += (i - mi) * (i - mi);
    }
    let denom = (np - 1.0).max(1.0);
    vr /= denom;
    vi /= denom;
    Ok(MCEstimate {
        value: Complex64::new(mr, mi),
        stderr: ((vr + vi) / np).sqrt(),
        stderr_re: (vr / np).sqrt(),
        stderr_im: (vi / np).sqrt(),
        n_paths: sim.n_paths,
        dt: sim.dt,
        seed: sim.seed,
        clamp_fraction: sim.clamp_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{AffineMatrix, AffineVector};
    use crate::models;

    fn zero_model() -> ModelSpec {
        ModelSpec {
            dimension: 1,
            drift: AffineVector { constant: vec![0.0], linear: vec![] },
            diffusion: AffineMatrix { constant: vec![vec![0.0]], linear: vec![] },
            jumps: None,
            domain_box: None,
            k_max: None,
        }
    }

    #[test]
    fn zero_model_stays_put() {
        let m = SDEModel::from_spec(&zero_model()).unwrap();
        let sim = simulate_paths(&m, &[0.3], 1.0, 100, 0.1, 1).unwrap();
        assert!(sim.terminals.iter().all(|&v| v == 0.3));
        let est = mc_char_fn(&sim, &[0.0]).unwrap();
        assert_eq!((est.value, est.stderr), (Complex64::new(1.0, 0.0), 0.0));
    }

    #[test]
    fn brownian_moments() {
        let m = SDEModel::from_spec(&models::brownian()).unwrap();
        let sim = simulate_paths(&m, &[0.0], 1.0, 50_000, 1.0 / 64.0, 3).unwrap();
        let np = sim.n_paths as f64;
        let mean = sim.terminals.iter().sum::<f64>() / np;
        let var = sim.terminals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (np - 1.0);
        assert!(mean.abs() < 3.0 * (var / np).sqrt());
        assert!((var - 1.0).abs() < 0.05);
        let est = mc_char_fn(&sim, &[1.0]).unwrap();
        assert!((est.value - Complex64::new((-0.5f64).exp(), 0.0)).norm() < 3.0 * est.stderr);
    }

    #[test]
    fn compensated_poisson_has_zero_mean() {
        let m = SDEModel::from_spec(&models::compound_poisson(0.5, 1.0)).unwrap();
        let sim = simulate_paths(&m, &[0.0], 1.0, 50_000, 1.0 / 64.0, 5).unwrap();
        let np = sim.n_paths as f64;
        let mean = sim.terminals.iter().sum::<f64>() / np;
        let var = sim.terminals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (np - 1.0);
        assert!(mean.abs() < 3.0 * (var / np).sqrt(), "{mean}");
        assert!((var - 0.5).abs() < 0.03, "{var}");
    }

    #[test]
    fn seeded_runs_are_identical() {
        let m = SDEModel::from_spec(&models::square_root(1.0, 0.5, 0.5)).unwrap();
        let a = simulate_paths(&m, &[0.3], 1.0, 2000, 1.0 / 32.0, 9).unwrap();
        let b = simulate_paths(&m, &[0.3], 1.0, 2000, 1.0 / 32.0, 9).unwrap();
        assert_eq!(a.terminals, b.terminals);
        let c = simulate_paths(&m, &[0.3], 1.0, 2000, 1.0 / 32.0, 10).unwrap();
        assert_ne!(a.terminals, c.terminals);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let m = SDEModel::from_spec(&models::compound_poisson(0.5, 1.0)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| simulate_paths(&m, &[0.1], 1.0, 500, 0.1, 4).unwrap());
        let parallel = simulate_paths(&m, &[0.1], 1.0, 500, 0.1, 4).unwrap();
        assert_eq!(serial.terminals, parallel.terminals);
    }

    #[test]
    fn missing_distribution_is_rejected() {
        let mut spec = models::compound_poisson(0.5, 1.0);
        let jumps = spec.jumps.as_mut().unwrap();
        jumps.distribution = None;
        jumps.moments = vec![crate::generator::MomentEntry { alpha: vec![2], value: 1.0 }];
        assert!(matches!(SDEModel::from_spec(&spec), Err(Error::Configuration(_))));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = [2.0, 0.5, 0.5, 1.0];
        let mut s = [0.0; 4];
        assert!(!psd_sqrt_into(&a, 2, &mut s));
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| s[i * 2 + k] * s[j * 2 + k]).sum();
                assert!((v - a[i * 2 + j]).abs() < 1e-12);
            }
        }
        assert!(psd_sqrt_into(&[1.0, 0.0, 0.0, -1.0], 2, &mut s));
        assert!(psd_sqrt_into(&[-0.1], 1, &mut s[..1]));
    }
}
