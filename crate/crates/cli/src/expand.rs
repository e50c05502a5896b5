//! Coefficient dump for one `u`.

use anyhow::Result;
use serde_json::{json, Value};

use holoseries::log_affine::{rho_sequence, DEFAULT_AFFINE_TOL};
use holoseries::series::{default_probes, g_sequence, h_sequence};
use holoseries::{build_generator, ModelSpec};

use crate::engine::{resolve_eta, Settings};
use crate::output::{complex_json, poly_json};

/// `{g, h, rho0, rho1}` tables with the selected eta and where it came from.
/// `s_max` is the horizon used for the RU and calibrated choices.
pub fn expand(spec: &ModelSpec, u: &[f64], s_max: f64, settings: &Settings) -> Result<Value> {
    let gen = build_generator(spec)?;
    let probes = default_probes(&gen);
    let eta = resolve_eta(&gen, u, s_max, &probes, settings)?;
    let g = g_sequence(&gen, u, settings.r_max)?;
    let h = h_sequence(&gen, u, eta.eta, settings.r_max)?;
    let mut warnings = Vec::new();
    let u_norm = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(w) = gen.tail_warning(u_norm, settings.tol) {
        warnings.push(w);
    }
    if g.truncated {
        warnings.push(format!("g table overflowed after order {}", g.len() - 1));
    }
    if h.truncated {
        warnings.push(format!("h table overflowed after order {}", h.len() - 1));
    }
    let rho = match rho_sequence(&h, h.len() - 1, DEFAULT_AFFINE_TOL) {
        Ok(rho) => json!({
            "rho0": rho.rho0.iter().map(|&c| complex_json(c)).collect::<Vec<_>>(),
            "rho1": rho
                .rho1
                .iter()
                .map(|v| v.iter().map(|&c| complex_json(c)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "affinity_residuals": rho.affinity_residuals,
        }),
        Err(e) => {
            warnings.push(format!("rho table: {e}"));
            Value::Null
        }
    };
    Ok(json!({
        "u": u,
        "r_max": settings.r_max,
        "eta": eta,
        "g": g.coeffs.iter().map(poly_json).collect::<Vec<_>>(),
        "h": h.coeffs.iter().map(poly_json).collect::<Vec<_>>(),
        "rho": rho,
        "warnings": warnings,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EtaChoice;
    use holoseries::models;

    fn settings(r_max: usize, eta: f64) -> Settings {
        Settings { r_max, eta: EtaChoice::Fixed(eta), ..Default::default() }
    }

    #[test]
    fn brownian_h_table() {
        let v = expand(&models::brownian(), &[1.0], 1.0, &settings(2, 4.0)).unwrap();
        let h = v["h"].as_array().unwrap();
        assert_eq!(h[0][0]["re"], 1.0);
        assert_eq!(h[1][0]["re"], -0.5 / 4.0);
        assert_eq!(v["eta"]["source"], "user");
    }

    #[test]
    fn ou_g1() {
        let v = expand(&models::ornstein_uhlenbeck(1.0, 2.0), &[1.0], 1.0, &settings(1, 1.0)).unwrap();
        let g1 = v["g"][1].as_array().unwrap();
        assert_eq!(g1.len(), 2);
        assert_eq!((g1[0]["re"].as_f64(), g1[0]["im"].as_f64()), (Some(-1.0), Some(0.0)));
        assert_eq!(g1[1]["alpha"], json!([1]));
        assert_eq!((g1[1]["re"].as_f64(), g1[1]["im"].as_f64()), (Some(0.0), Some(-1.0)));
    }

    #[test]
    fn zero_model_tables_are_empty() {
        let spec: ModelSpec = serde_json::from_value(json!({
            "dimension": 1,
            "drift": {"const": [0.0]},
            "diffusion": {"const": [[0.0]]}
        }))
        .unwrap();
        let v = expand(&spec, &[1.0], 1.0, &settings(3, 1.0)).unwrap();
        for r in 1..=3 {
            assert!(v["g"][r].as_array().unwrap().is_empty());
            assert!(v["h"][r].as_array().unwrap().is_empty());
        }
    }
}
