//! The JSON model document and its jump-size distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;

pub const DEFAULT_K_MAX: usize = 20;

/// Affine drift `b(x) = const + linear * x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineVector {
    #[serde(rename = "const")]
    pub constant: Vec<f64>,
    #[serde(default)]
    pub linear: Vec<Vec<f64>>,
}

/// Affine diffusion `a(x) = const + sum_k x_k linear[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineMatrix {
    #[serde(rename = "const")]
    pub constant: Vec<Vec<f64>>,
    #[serde(default)]
    pub linear: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentEntry {
    pub alpha: Vec<u32>,
    pub value: f64,
}

/// Jump-size law of the normalized jump measure. Used to derive moments that
/// are not listed explicitly and to draw jump sizes in simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpDistribution {
    /// Every jump has the same size.
    PointMass { atom: Vec<f64> },
    /// Independent normal components.
    Normal { mean: Vec<f64>, std: Vec<f64> },
}

impl JumpDistribution {
    pub fn dim(&self) -> usize {
        match self {
            JumpDistribution::PointMass { atom } => atom.len(),
            JumpDistribution::Normal { mean, .. } => mean.len(),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            JumpDistribution::PointMass { atom } => atom.clone(),
            JumpDistribution::Normal { mean, .. } => mean.clone(),
        }
    }

    /// Raw moment `int z^alpha mu(dz)`.
    pub fn raw_moment(&self, alpha: &MultiIndex) -> f64 {
        match self {
            JumpDistribution::PointMass { atom } => alpha.pow_real(atom),
            JumpDistribution::Normal { mean, std } => alpha
                .exponents()
                .iter()
                .zip(mean.iter().zip(std.iter()))
                .map(|(&k, (&m, &s))| normal_raw_moment(m, s, k as usize))
                .product(),
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::InvalidModel(format!(
                "jump distribution has dimension {} but the model has {}",
                self.dim(),
                n
            )));
        }
        if let JumpDistribution::Normal { std, .. } = self {
            if std.len() != n || std.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
                return Err(Error::InvalidModel(
                    "normal jump distribution needs n finite non-negative standard deviations"
                        .into(),
                ));
            }
        }
        Ok(())
    }
}

/// `E[Z^k]` for `Z ~ N(m, s^2)` via `M_k = m M_{k-1} + (k-1) s^2 M_{k-2}`.
fn normal_raw_moment(m: f64, s: f64, k: usize) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 1..=k {
        let next = m * cur + (j as f64 - 1.0) * s * s * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Finite-activity jumps with affine intensity `lambda0 + x . lambda1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpsDoc {
    pub lambda0: f64,
    #[serde(default)]
    pub lambda1: Vec<f64>,
    #[serde(default)]
    pub moments: Vec<MomentEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<JumpDistribution>,
}

/// Axis-aligned domain box; `null` bounds mean unbounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDoc {
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
}

/// Model document consumed by [`build_generator`](super::build_generator).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub dimension: usize,
    pub drift: AffineVector,
    pub diffusion: AffineMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jumps: Option<JumpsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_box: Option<BoxDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

impl ModelSpec {
    pub fn k_max(&self) -> usize {
        self.k_max.unwrap_or(DEFAULT_K_MAX)
    }

    pub fn drift_linear(&self) -> Vec<Vec<f64>> {
        let n = self.dimension;
        if self.drift.linear.is_empty() {
            vec![vec![0.0; n]; n]
        } else {
            self.drift.linear.clone()
        }
    }

    pub fn diffusion_linear(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.dimension;
        if self.diffusion.linear.is_empty() {
            vec![vec![vec![0.0; n]; n]; n]
        } else {
            self.diffusion.linear.clone()
        }
    }

    pub fn lambda1(&self) -> Vec<f64> {
        match &self.jumps {
            Some(j) if !j.lambda1.is_empty() => j.lambda1.clone(),
            _ => vec![0.0; self.dimension],
        }
    }

    /// Shape checks that do not depend on the domain.
    pub(crate) fn check_shapes(&self) -> Result<()> {
        let n = self.dimension;
        if n == 0 {
            return Err(Error::InvalidDimension("model dimension must be >= 1".into()));
        }
        if self.k_max() < 2 {
            return Err(Error::InvalidModel("k_max must be >= 2".into()));
        }
        let shape = |what: &str, ok: bool| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!(
                    "{what} is not dimension-consistent with n = {n}"
                )))
            }
        };
        shape("drift.const", self.drift.constant.len() == n)?;
        shape(
            "drift.linear",
            self.drift.linear.is_empty()
                || (self.drift.linear.len() == n && self.drift.linear.iter().all(|r| r.len() == n)),
        )?;
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        shape("diffusion.const", square(&self.diffusion.constant))?;
        shape(
            "diffusion.linear",
            self.diffusion.linear.is_empty()
                || (self.diffusion.linear.len() == n && self.diffusion.linear.iter().all(square)),
        )?;
        if let Some(j) = &self.jumps {
            shape("jumps.lambda1", j.lambda1.is_empty() || j.lambda1.len() == n)?;
            if let Some(dist) = &j.distribution {
                dist.validate(n)?;
            }
            for m in &j.moments {
                shape("jumps.moments[].alpha", m.alpha.len() == n)?;
            }
        }
        if let Some(b) = &self.domain_box {
            shape("domain_box", b.lo.len() == n && b.hi.len() == n)?;
        }
        let finite = self
            .drift
            .constant
            .iter()
            .chain(self.drift.linear.iter().flatten())
            .chain(self.diffusion.constant.iter().flatten())
            .chain(self.diffusion.linear.iter().flatten().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel("non-finite drift or diffusion entry".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_moments_match_known_values() {
        assert_eq!(normal_raw_moment(0.0, 1.0, 4), 3.0);
        assert_eq!(normal_raw_moment(0.0, 2.0, 2), 4.0);
        assert!((normal_raw_moment(1.0, 1.0, 3) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn parses_minimal_document() {
        let doc = r#"{
            "dimension": 1,
            "drift": {"const": [0.0]},
            "diffusion": {"const": [[1.0]]}
        }"#;
        let m: ModelSpec = serde_json::from_str(doc).unwrap();
        assert_eq!(m.k_max(), DEFAULT_K_MAX);
        assert_eq!(m.drift_linear(), vec![vec![0.0]]);
        m.check_shapes().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = r#"{"dimension": 1, "drift": {"const": [0.0]},
                      "diffusion": {"const": [[1.0]]}, "volatility": 2}"#;
        assert!(serde_json::from_str::<ModelSpec>(doc).is_err());
    }
}
