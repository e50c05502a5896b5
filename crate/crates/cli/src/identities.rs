//! Exact combinatorial identities behind the Stirling coefficient map.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use holoseries::multiindex::{
    check_derivative_identity, check_factorial_shift_identity, factorial_big, factorial_f64,
    factorial_shift_identity_exact,
};
use holoseries::series::{default_probes, g_sequence, h_sequence, verify_qsys};
use holoseries::{build_generator, models, StirlingTable};

#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Orders at which the floating-point factorial-shift check is sampled.
const RANDOM_SHIFT_MAX_ORDER: usize = 8;
const RANDOM_SHIFT_SAMPLES: usize = 50;
const QSYS_MAX_ORDER: usize = 20;

pub fn run_identities(k_max: usize, stirling: &StirlingTable, seed: u64) -> Vec<IdentityCheck> {
    let mut out = Vec::new();

    let bad_rows: Vec<usize> = (0..=k_max.min(stirling.k_max()))
        .filter(|&k| stirling.row_sum(k) != factorial_big(k))
        .collect();
    let short = k_max > stirling.k_max();
    out.push(IdentityCheck {
        name: "stirling-row-sum",
        passed: bad_rows.is_empty() && !short,
        detail: if short {
            format!("table only covers k <= {}", stirling.k_max())
        } else {
            format!("sum_r c[k][r] = k! for k <= {k_max}; failing rows {bad_rows:?}")
        },
    });

    let bad: Vec<usize> = (1..=k_max).filter(|&k| !check_derivative_identity(k)).collect();
    out.push(IdentityCheck {
        name: "alternating-power-sum",
        passed: bad.is_empty(),
        detail: format!("(-1)^k sum_j binom(k,j)(-1)^j j^k = k! for 1 <= k <= {k_max}; failing {bad:?}"),
    });

    let mut bad = Vec::new();
    for k in 1..=k_max {
        for x in -(k as i64)..=0 {
            if !factorial_shift_identity_exact(k, x) {
                bad.push((k, x));
            }
        }
    }
    out.push(IdentityCheck {
        name: "factorial-shift-integer",
        passed: bad.is_empty(),
        detail: format!("exact at x in {{-k..0}} for 1 <= k <= {k_max}; failing {bad:?}"),
    });

    let top = k_max.min(RANDOM_SHIFT_MAX_ORDER);
    let mut worst: f64 = 0.0;
    if top >= 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RANDOM_SHIFT_SAMPLES {
            let k = rng.random_range(1..=top);
            let x: f64 = rng.random_range(-3.0..3.0);
            worst = worst.max(check_factorial_shift_identity(k, x) / factorial_f64(k + 1));
        }
    }
    out.push(IdentityCheck {
        name: "factorial-shift-real",
        passed: worst <= 1e-9,
        detail: format!(
            "max residual / (k+1)! = {worst:.3e} over {RANDOM_SHIFT_SAMPLES} random (k <= {top}, x)"
        ),
    });

    let top = k_max.min(QSYS_MAX_ORDER);
    let mut worst: f64 = 0.0;
    let mut error = None;
    for (name, spec) in models::reference_models() {
        let res = build_generator(&spec).and_then(|gen| {
            let h = h_sequence(&gen, &[1.0], 1.0, top)?;
            let g = g_sequence(&gen, &[1.0], top)?;
            verify_qsys(&h, &g, top, &default_probes(&gen))
        });
        match res {
            Ok(r) => worst = worst.max(r),
            Err(e) => error = Some(format!("{name}: {e}")),
        }
    }
    out.push(IdentityCheck {
        name: "triangular-system",
        passed: error.is_none() && worst <= 1e-10,
        detail: match error {
            Some(e) => e,
            None => format!("max normalized residual {worst:.3e} for k <= {top}, reference models"),
        },
    });
    out
}

/// Helper for negative controls: a copy of the table with one entry bumped.
pub fn perturbed_table(k_max: usize, k: usize, r: usize) -> StirlingTable {
    let mut t = holoseries::stirling_unsigned(k_max);
    let v = t.get(k, r).clone() + BigUint::from(1u32);
    t.perturb(k, r, v);
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_pass_at_fifteen() {
        let checks = run_identities(15, &holoseries::stirling_unsigned(15), 1);
        for c in &checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn vacuous_at_zero() {
        assert!(run_identities(0, &holoseries::stirling_unsigned(0), 1).iter().all(|c| c.passed));
    }

    #[test]
    fn perturbed_table_fails() {
        let checks = run_identities(10, &perturbed_table(10, 7, 3), 1);
        assert!(!checks[0].passed);
    }
}
