//! Ready-made model documents used by tests, benches and the CLI examples.

use crate::generator::{
    AffineMatrix, AffineVector, BoxDoc, JumpDistribution, JumpsDoc, ModelSpec,
};

fn diffusion_1d(a0: f64, a1: f64) -> AffineMatrix {
    AffineMatrix { constant: vec![vec![a0]], linear: vec![vec![vec![a1]]] }
}

/// Standard Brownian motion, `dX = dW`.
pub fn brownian() -> ModelSpec {
    ModelSpec {
        dimension: 1,
        drift: AffineVector { constant: vec![0.0], linear: vec![] },
        diffusion: diffusion_1d(1.0, 0.0),
        jumps: None,
        domain_box: None,
        k_max: None,
    }
}

/// Ornstein-Uhlenbeck, `dX = -kappa X dt + sqrt(a) dW`.
pub fn ornstein_uhlenbeck(kappa: f64, a: f64) -> ModelSpec {
    ModelSpec {
        dimension: 1,
        drift: AffineVector { constant: vec![0.0], linear: vec![vec![-kappa]] },
        diffusion: diffusion_1d(a, 0.0),
        jumps: None,
        domain_box: None,
        k_max: None,
    }
}

/// Compensated compound Poisson with rate `lambda0` and unit-size jumps of size `atom`.
/// Truncated at `k_max = 30`.
pub fn compound_poisson(lambda0: f64, atom: f64) -> ModelSpec {
    ModelSpec {
        dimension: 1,
        drift: AffineVector { constant: vec![0.0], linear: vec![] },
        diffusion: diffusion_1d(0.0, 0.0),
        jumps: Some(JumpsDoc {
            lambda0,
            lambda1: vec![0.0],
            moments: vec![],
            distribution: Some(JumpDistribution::PointMass { atom: vec![atom] }),
        }),
        domain_box: None,
        k_max: Some(30),
    }
}

/// Square-root diffusion `dX = kappa (theta - X) dt + sigma sqrt(X) dW` on `[0, 1]`.
pub fn square_root(kappa: f64, theta: f64, sigma: f64) -> ModelSpec {
    ModelSpec {
        dimension: 1,
        drift: AffineVector { constant: vec![kappa * theta], linear: vec![vec![-kappa]] },
        diffusion: diffusion_1d(0.0, sigma * sigma),
        jumps: None,
        domain_box: Some(BoxDoc { lo: vec![Some(0.0)], hi: vec![Some(1.0)] }),
        k_max: None,
    }
}

/// Two-factor stochastic-volatility model in `(V, Y)`:
/// `dV = kappa (theta - V) dt + sigma sqrt(V) dW1`, `dY = -V/2 dt + sqrt(V) dW2`,
/// `d<W1, W2> = rho dt`, on `[0, 1] x [-1, 1]`.
pub fn heston(kappa: f64, theta: f64, sigma: f64, rho: f64) -> ModelSpec {
    ModelSpec {
        dimension: 2,
        drift: AffineVector {
            constant: vec![kappa * theta, 0.0],
            linear: vec![vec![-kappa, 0.0], vec![-0.5, 0.0]],
        },
        diffusion: AffineMatrix {
            constant: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            linear: vec![
                vec![vec![sigma * sigma, rho * sigma], vec![rho * sigma, 1.0]],
                vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            ],
        },
        jumps: None,
        domain_box: Some(BoxDoc { lo: vec![Some(0.0), Some(-1.0)], hi: vec![Some(1.0), Some(1.0)] }),
        k_max: None,
    }
}

/// One-dimensional model with state-dependent jump intensity `lambda0 + lambda1 x`,
/// drift `theta_drift + lambda1_drift x` and diffusion `diff_const + diff_lin x`.
/// Jumps are `delta_atom`. Used to exercise the explicit one-dimensional formula.
#[allow(clippy::too_many_arguments)]
pub fn affine_jump_1d(
    drift: (f64, f64),
    diffusion: (f64, f64),
    lambda0: f64,
    lambda1: f64,
    atom: f64,
    domain: (f64, f64),
    k_max: usize,
) -> ModelSpec {
    ModelSpec {
        dimension: 1,
        drift: AffineVector { constant: vec![drift.0], linear: vec![vec![drift.1]] },
        diffusion: diffusion_1d(diffusion.0, diffusion.1),
        jumps: Some(JumpsDoc {
            lambda0,
            lambda1: vec![lambda1],
            moments: vec![],
            distribution: Some(JumpDistribution::PointMass { atom: vec![atom] }),
        }),
        domain_box: Some(BoxDoc { lo: vec![Some(domain.0)], hi: vec![Some(domain.1)] }),
        k_max: Some(k_max),
    }
}

/// The four one-dimensional reference models with the parameters used throughout
/// the test suites: Brownian, OU (`kappa = 1`, `a = 2`), compound Poisson
/// (`lambda0 = 0.5`, unit jumps) and square-root (`kappa = 1`, `theta = 0.5`, `sigma = 0.5`).
pub fn reference_models() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("brownian", brownian()),
        ("ou", ornstein_uhlenbeck(1.0, 2.0)),
        ("compound_poisson", compound_poisson(0.5, 1.0)),
        ("square_root", square_root(1.0, 0.5, 0.5)),
    ]
}
