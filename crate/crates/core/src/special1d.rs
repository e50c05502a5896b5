//! Explicit partition formula for one-dimensional generators whose coefficients
//! all share the intensity factor `lambda0 + lambda1 x`.
//!
//! With `a_l(x) = (lambda0 + lambda1 x) eta_l` the iterates `g_r` are sums over
//! `r = p + sum_j n_j m_j` of integer weights `pi^(p)_{(n_1,m_1),...}` times
//! products of `h(u) = sum_l eta_l (iu)^l` and its moment-series derivatives.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::generator::{AffineCoeff, DomainBox, GeneratorSpec};
use crate::multiindex::{binomial_big, factorial_f64, MultiIndex};
use crate::series::g_sequence;

#[derive(Clone, Debug, PartialEq)]
pub struct Special1DModel {
    pub lambda0: f64,
    pub lambda1: f64,
    pub drift_scale: f64,
    pub diff_scale: f64,
    /// `int z^l mu(dz)` for `l = 2, 3, ...`.
    pub jump_moments: Vec<f64>,
}

impl Special1DModel {
    pub fn new(
        lambda0: f64,
        lambda1: f64,
        drift_scale: f64,
        diff_scale: f64,
        jump_moments: Vec<f64>,
    ) -> Result<Self> {
        if !(lambda0 >= 0.0) {
            return Err(Error::InvalidModel(format!("lambda0 must be >= 0, got {lambda0}")));
        }
        let vals = [lambda1, drift_scale, diff_scale];
        if vals.iter().chain(&jump_moments).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite model parameter".into()));
        }
        Ok(Special1DModel { lambda0, lambda1, drift_scale, diff_scale, jump_moments })
    }

    pub fn k_max(&self) -> usize {
        (self.jump_moments.len() + 1).max(2)
    }

    /// `eta_0 ..= eta_kmax`.
    pub fn eta(&self) -> Vec<f64> {
        let k_max = self.k_max();
        let mut eta = vec![0.0; k_max + 1];
        eta[1] = self.drift_scale;
        eta[2] = 0.5 * self.diff_scale;
        for (i, m) in self.jump_moments.iter().enumerate() {
            let l = i + 2;
            eta[l] += m / factorial_f64(l);
        }
        eta
    }

    /// The equivalent generator `a_l(x) = (lambda0 + lambda1 x) eta_l`.
    pub fn to_generator(&self, domain: DomainBox) -> Result<GeneratorSpec> {
        let coeffs = self.eta().into_iter().enumerate().skip(1).map(|(l, e)| {
            (
                MultiIndex::from(vec![l as u32]),
                AffineCoeff { c: self.lambda0 * e, d: vec![self.lambda1 * e] },
            )
        });
        GeneratorSpec::from_coefficients(1, self.k_max(), coeffs, domain)
    }
}

/// Moment-series derivative `h^(r)(u) = sum_l eta_{l+r} (l+r)!/l! (iu)^l`.
pub fn frak_h(model: &Special1DModel, u: f64, r: usize) -> Complex64 {
    let eta = model.eta();
    let iu = Complex64::new(0.0, u);
    let mut acc = Complex64::zero();
    let mut pow = Complex64::new(1.0, 0.0);
    for l in 0..eta.len().saturating_sub(r) {
        let falling = factorial_f64(l + r) / factorial_f64(l);
        acc += pow * (eta[l + r] * falling);
        pow *= iu;
    }
    acc
}

/// Canonical key: `p` and pairs `(n, m)` sorted by `n` with every `m >= 1`.
pub type PiKey = (u32, Vec<(u32, u32)>);

/// Applies rule I (drops `m = 0` pairs) and sorts by `n`.
pub fn canonical_pairs(pairs: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = pairs.iter().copied().filter(|&(_, m)| m > 0).collect();
    out.sort_unstable();
    out
}

fn pi_rec(p: u32, pairs: &[(u32, u32)], memo: &mut HashMap<PiKey, BigUint>) -> BigUint {
    if pairs.is_empty() {
        return if p == 0 { BigUint::zero() } else { BigUint::one() };
    }
    if p == 0 {
        return BigUint::zero();
    }
    let key = (p, pairs.to_vec());
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let mut total = pi_rec(p - 1, pairs, memo);
    for j in 0..pairs.len() {
        let (n, _) = pairs[j];
        let mut reduced = pairs.to_vec();
        reduced[j].1 -= 1;
        let reduced = canonical_pairs(&reduced);
        let weight = binomial_big((p + n - 1) as usize, n as usize);
        total += weight * pi_rec(p + n - 1, &reduced, memo);
    }
    memo.insert(key, total.clone());
    total
}

/// Every `(p, pairs)` with `p >= 1`, distinct increasing `n_j` and `m_j >= 1`
/// such that `p + sum n_j m_j = r`.
pub fn partitions_of_order(r: u32) -> Vec<PiKey> {
    fn rest(remaining: u32, min_n: u32, cur: &mut Vec<(u32, u32)>, out: &mut Vec<Vec<(u32, u32)>>) {
        if remaining == 0 {
            out.push(cur.clone());
            return;
        }
        for n in min_n..=remaining {
            for m in 1..=remaining / n {
                cur.push((n, m));
                rest(remaining - n * m, n + 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    for p in 1..=r {
        let mut tails = Vec::new();
        rest(r - p, 1, &mut Vec::new(), &mut tails);
        out.extend(tails.into_iter().map(|t| (p, t)));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// The `1/r!` prefactor applied to the integer weights as they stand.
    AsPrinted,
    /// `1/r!` times a per-order factor fitted against the general recursion.
    Calibrated,
}

#[derive(Clone, Debug)]
pub struct PiTable {
    r_max: u32,
    entries: HashMap<PiKey, BigUint>,
    mode: Normalization,
    /// Multiplier applied on top of `1/r!`, indexed by `r` (entry 0 unused).
    corrections: Vec<f64>,
}

impl PiTable {
    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn mode(&self) -> Normalization {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fitted multiplier for order `r`; 1 in as-printed mode.
    pub fn correction(&self, r: u32) -> f64 {
        self.corrections[r as usize]
    }

    pub fn corrections(&self) -> &[f64] {
        &self.corrections[1..]
    }

    /// `pi^(p)` for arbitrary pairs; `m = 0` pairs are removed first.
    pub fn get(&self, p: u32, pairs: &[(u32, u32)]) -> Option<BigUint> {
        let pairs = canonical_pairs(pairs);
        if pairs.is_empty() {
            return Some(if p == 0 { BigUint::zero() } else { BigUint::one() });
        }
        if p == 0 {
            return Some(BigUint::zero());
        }
        self.entries.get(&(p, pairs)).cloned()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&PiKey, &BigUint)> {
        self.entries.iter()
    }
}

/// Builds every weight of total order `<= r_max`. In calibrated mode the per-order
/// factor is the ratio of the recursion's `g_r` to the as-printed formula on a
/// reference model where every partition contributes.
pub fn pi_table(r_max: u32, mode: Normalization) -> Result<PiTable> {
    if r_max == 0 {
        return Err(Error::InvalidArgument("r_max must be >= 1".into()));
    }
    let mut entries = HashMap::new();
    for r in 1..=r_max {
        for (p, pairs) in partitions_of_order(r) {
            if !pairs.is_empty() {
                pi_rec(p, &pairs, &mut entries);
            }
        }
    }
    entries.retain(|(p, pairs), _| p + pairs.iter().map(|(n, m)| n * m).sum::<u32>() <= r_max);
    let mut table =
        PiTable { r_max, entries, mode, corrections: vec![1.0; r_max as usize + 1] };
    if mode == Normalization::Calibrated {
        table.corrections = fit_corrections(&table)?;
    }
    Ok(table)
}

fn reference_model() -> Special1DModel {
    Special1DModel::new(0.7, 0.3, 0.2, 0.5, vec![1.0; 10]).expect("valid reference model")
}

fn fit_corrections(table: &PiTable) -> Result<Vec<f64>> {
    let model = reference_model();
    let (u, x) = (0.9, 0.4);
    let gen = model.to_generator(DomainBox::unit(1))?;
    let g = g_sequence(&gen, &[u], table.r_max as usize)?;
    let mut out = vec![1.0; table.r_max as usize + 1];
    for r in 1..=table.r_max {
        let printed = partition_sum(&model, u, x, r, table)? / factorial_f64(r as usize);
        let exact = g.coeffs[r as usize].eval(&[x]);
        let ratio = exact / printed;
        if !(ratio.re.is_finite()) || ratio.im.abs() > 1e-8 * ratio.re.abs() {
            return Err(Error::Configuration(format!(
                "no real normalization factor at order {r}: ratio {ratio}"
            )));
        }
        out[r as usize] = ratio.re;
    }
    Ok(out)
}

/// Sum of `pi * lambda1^{r-p} (lambda0 + lambda1 x)^p h^p prod (h^{n-1} h^(n))^m`
/// without any normalization.
fn partition_sum(model: &Special1DModel, u: f64, x: f64, r: u32, table: &PiTable) -> Result<Complex64> {
    if r == 0 || r > table.r_max {
        return Err(Error::InvalidArgument(format!(
            "order {r} outside the table range 1..={}",
            table.r_max
        )));
    }
    let derivs: Vec<Complex64> = (0..=r as usize).map(|n| frak_h(model, u, n)).collect();
    let h = derivs[0];
    let intensity = model.lambda0 + model.lambda1 * x;
    let mut acc = Complex64::zero();
    for (p, pairs) in partitions_of_order(r) {
        let weight = table.get(p, &pairs).expect("table covers order r");
        let mut term = h.powu(p) * intensity.powi(p as i32) * model.lambda1.powi((r - p) as i32);
        for &(n, m) in &pairs {
            term *= (h.powu(n - 1) * derivs[n as usize]).powu(m);
        }
        acc += term * weight.to_f64().unwrap_or(f64::INFINITY);
    }
    Ok(acc)
}

/// `g_r(x, u)` from the partition formula under the table's normalization.
pub fn g_r_explicit(model: &Special1DModel, u: f64, x: f64, r: u32, table: &PiTable) -> Result<Complex64> {
    let raw = partition_sum(model, u, x, r, table)?;
    Ok(raw * (table.correction(r) / factorial_f64(r as usize)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diffusion() -> Special1DModel {
        Special1DModel::new(1.0, 0.0, 0.0, 1.0, vec![]).unwrap()
    }

    #[test]
    fn frak_h_examples() {
        let m = diffusion();
        assert_eq!(frak_h(&m, 0.0, 0), c(0.0, 0.0));
        assert!((frak_h(&m, 1.3, 0) - c(-1.3 * 1.3 / 2.0, 0.0)).norm() < 1e-15);
        assert!((frak_h(&m, 1.3, 1) - c(0.0, 1.3)).norm() < 1e-15);
    }

    #[test]
    fn frak_h_from_characteristic_function() {
        // mu = delta_1: h(u) = e^{iu} - 1 + (i theta - i) u - vartheta u^2 / 2.
        let (theta, vartheta) = (0.3, 0.8);
        let m = Special1DModel::new(1.0, 0.0, theta, vartheta, vec![1.0; 29]).unwrap();
        for u in [-1.5, 0.2, 1.0] {
            let iu = c(0.0, u);
            let want = iu.exp() - 1.0 + c(0.0, theta - 1.0) * u - 0.5 * vartheta * u * u;
            assert!((frak_h(&m, u, 0) - want).norm() < 1e-14, "u={u}");
        }
    }

    #[test]
    fn pi_examples() {
        let t = pi_table(4, Normalization::AsPrinted).unwrap();
        for p in 1..5 {
            assert_eq!(t.get(p, &[]).unwrap(), BigUint::one());
        }
        assert_eq!(t.get(0, &[(1, 1)]).unwrap(), BigUint::zero());
        assert_eq!(t.get(1, &[(1, 1)]).unwrap(), BigUint::one());
        assert_eq!(t.get(2, &[(1, 1)]).unwrap(), BigUint::from(3u32));
        assert_eq!(t.get(1, &[(2, 1)]).unwrap(), BigUint::one());
    }

    #[test]
    fn rule_one_idempotence() {
        let t = pi_table(8, Normalization::AsPrinted).unwrap();
        for ((p, pairs), v) in t.entries() {
            for n in 1..10u32 {
                if pairs.iter().any(|&(k, _)| k == n) {
                    continue;
                }
                let mut with = pairs.clone();
                with.push((n, 0));
                assert_eq!(&t.get(*p, &with).unwrap(), v);
            }
        }
    }

    fn brute_force_count(r: u32) -> usize {
        // Compositions of r: the first part is p, the rest form the multiset
        // of n's; collect distinct (p, sorted rest).
        let mut seen = BTreeSet::new();
        for mask in 0u32..(1 << (r - 1)) {
            let mut parts = Vec::new();
            let mut len = 1;
            for bit in 0..r - 1 {
                if mask & (1 << bit) != 0 {
                    parts.push(len);
                    len = 1;
                } else {
                    len += 1;
                }
            }
            parts.push(len);
            let p = parts[0];
            let mut rest = parts[1..].to_vec();
            rest.sort_unstable();
            seen.insert((p, rest));
        }
        seen.len()
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for r in 1..=10 {
            assert_eq!(partitions_of_order(r).len(), brute_force_count(r), "r={r}");
        }
    }

    #[test]
    fn order_one_and_pure_intensity() {
        let m = Special1DModel::new(0.5, 0.0, 0.1, 1.0, vec![0.3]).unwrap();
        let t = pi_table(5, Normalization::AsPrinted).unwrap();
        let h = frak_h(&m, 0.7, 0);
        let g1 = g_r_explicit(&m, 0.7, 0.2, 1, &t).unwrap();
        assert!((g1 - h * 0.5).norm() < 1e-15);
        let g3 = g_r_explicit(&m, 0.7, 0.2, 3, &t).unwrap();
        assert!((g3 - h.powu(3) * 0.125 / 6.0).norm() < 1e-15);
    }

    #[test]
    fn calibration_finds_factorial() {
        let t = pi_table(8, Normalization::Calibrated).unwrap();
        for r in 1..=8u32 {
            let f = factorial_f64(r as usize);
            assert!((t.correction(r) - f).abs() < 1e-10 * f, "r={r}: {}", t.correction(r));
        }
    }

    #[test]
    fn calibrated_matches_recursion() {
        use crate::generator::growth_profile;
        use rand::{Rng, SeedableRng};
        let models = [
            Special1DModel::new(1.0, 0.0, 0.0, 1.0, vec![]).unwrap(),
            Special1DModel::new(0.5, 0.8, 0.0, 0.0, vec![1.0; 11]).unwrap(),
            Special1DModel::new(0.4, -0.3, 0.2, 0.6, vec![1.0; 11]).unwrap(),
        ];
        let t = pi_table(8, Normalization::Calibrated).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for m in &models {
            let gen = m.to_generator(DomainBox::unit(1)).unwrap();
            let prof = growth_profile(&gen).unwrap();
            for _ in 0..10 {
                let x: f64 = rng.random_range(-1.0..1.0);
                let u: f64 = rng.random_range(-2.0..2.0);
                let g = g_sequence(&gen, &[u], 8).unwrap();
                for r in 1..=8u32 {
                    let want = g.coeffs[r as usize].eval(&[x]);
                    let got = g_r_explicit(m, u, x, r, &t).unwrap();
                    let bound = prof.coefficient_bound(&[x], &[u], r as usize);
                    assert!((got - want).norm() <= 1e-9 * bound, "{m:?} r={r}");
                }
            }
        }
    }
}
