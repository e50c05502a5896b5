//! Method dispatch for grid evaluation.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use clap::ValueEnum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use holoseries::log_affine::cd_from_h;
use holoseries::mc::{mc_char_fn, simulate_paths, SDEModel, DEFAULT_PATHS, DEFAULT_STEPS};
use holoseries::riccati::{char_fn_riccati, select_eta_from_riccati, solve_riccati};
use holoseries::series::{
    calibrate_eta, default_probes, h_sequence, plane_wave, q_series_eval, taylor_sequence_extended,
    EvalOptions, SeriesEvaluation,
};
use holoseries::{build_generator, GeneratorSpec, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Taylor,
    Qseries,
    Logaffine,
    Riccati,
    Mc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Taylor => "taylor",
            Method::Qseries => "qseries",
            Method::Logaffine => "logaffine",
            Method::Riccati => "riccati",
            Method::Mc => "mc",
        };
        f.write_str(name)
    }
}

/// `--eta`: a positive number, `ru` (radius from the Riccati oracle's sup |D|)
/// or `auto` (error-calibrated scan).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaChoice {
    Fixed(f64),
    Ru,
    Auto,
}

impl FromStr for EtaChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ru" => Ok(EtaChoice::Ru),
            "auto" => Ok(EtaChoice::Auto),
            _ => match s.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(EtaChoice::Fixed(v)),
                _ => Err(format!("eta must be a positive number, `ru` or `auto`, got {s:?}")),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct Settings {
    pub r_max: usize,
    pub tol: f64,
    pub eta: EtaChoice,
    pub rtol: f64,
    pub seed: u64,
    pub paths: usize,
    pub dt: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            r_max: 300,
            tol: 1e-14,
            eta: EtaChoice::Auto,
            rtol: 1e-9,
            seed: 0,
            paths: DEFAULT_PATHS,
            dt: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaInfo {
    pub eta: f64,
    pub source: String,
    pub r_u: Option<f64>,
    pub predicted_error: Option<f64>,
}

/// Resolves `--eta` for one `u`. `s_max` is the largest time of interest and
/// `probes` the points whose error the calibration controls.
pub fn resolve_eta(
    gen: &GeneratorSpec,
    u: &[f64],
    s_max: f64,
    probes: &[Vec<f64>],
    settings: &Settings,
) -> Result<EtaInfo> {
    let s_max = if s_max > 0.0 { s_max } else { 1.0 };
    Ok(match settings.eta {
        EtaChoice::Fixed(eta) => {
            EtaInfo { eta, source: "user".into(), r_u: None, predicted_error: None }
        }
        EtaChoice::Ru => {
            let sol = solve_riccati(gen, u, s_max, settings.rtol)?;
            let sel = select_eta_from_riccati(gen, &sol)?;
            EtaInfo {
                eta: sel.eta,
                source: format!("ru (sup |D| = {} from the Riccati oracle)", sel.d_star),
                r_u: Some(sel.r_u),
                predicted_error: None,
            }
        }
        EtaChoice::Auto => {
            let mut pts = probes.to_vec();
            if pts.is_empty() {
                pts = default_probes(gen);
            }
            let cal = calibrate_eta(gen, u, s_max, &pts, settings.r_max.max(2))?;
            EtaInfo {
                eta: cal.eta,
                source: format!("calibrated for s <= {s_max}"),
                r_u: None,
                predicted_error: Some(cal.predicted_error),
            }
        }
    })
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub s: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
}

impl Grid {
    pub fn s_max(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if self.s.is_empty() || self.x.is_empty() || self.u.is_empty() {
            bail!("empty evaluation grid");
        }
        if let Some(s) = self.s.iter().find(|&&s| s < 0.0) {
            bail!("negative time s = {s}");
        }
        if self.x.iter().chain(&self.u).any(|v| v.len() != n) {
            bail!("x and u points must have {n} components");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Row {
    pub s: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub method: Method,
    pub value: Option<Complex64>,
    pub n_terms: usize,
    /// Series tail estimate; the standard error for Monte Carlo.
    pub tail_estimate: f64,
    pub status: String,
}

impl Row {
    fn from_eval(s: f64, x: &[f64], u: &[f64], method: Method, ev: SeriesEvaluation) -> Row {
        let status = if ev.diverged {
            "diverged"
        } else if ev.converged {
            "ok"
        } else {
            "not-converged"
        };
        Row {
            s,
            x: x.to_vec(),
            u: u.to_vec(),
            method,
            value: Some(ev.value),
            n_terms: ev.n_terms,
            tail_estimate: ev.tail_estimate,
            status: status.into(),
        }
    }

    fn failed(s: f64, x: &[f64], u: &[f64], method: Method, err: impl fmt::Display) -> Row {
        Row {
            s,
            x: x.to_vec(),
            u: u.to_vec(),
            method,
            value: None,
            n_terms: 0,
            tail_estimate: f64::NAN,
            status: format!("error: {err}"),
        }
    }

    fn exact(s: f64, x: &[f64], u: &[f64], method: Method, value: Complex64) -> Row {
        Row {
            s,
            x: x.to_vec(),
            u: u.to_vec(),
            method,
            value: Some(value),
            n_terms: 0,
            tail_estimate: 0.0,
            status: "ok".into(),
        }
    }
}

/// Evaluates `method` on every grid point. Rows come out ordered by `u`, then
/// `s`, then `x`, independent of scheduling.
pub fn evaluate(spec: &ModelSpec, grid: &Grid, method: Method, settings: &Settings) -> Result<Vec<Row>> {
    let gen = build_generator(spec)?;
    grid.check(gen.dim())?;
    let mut rows = Vec::with_capacity(grid.u.len() * grid.s.len() * grid.x.len());
    for u in &grid.u {
        rows.extend(evaluate_u(spec, &gen, grid, u, method, settings)?);
    }
    Ok(rows)
}

fn points(grid: &Grid) -> Vec<(f64, &[f64])> {
    grid.s.iter().flat_map(|&s| grid.x.iter().map(move |x| (s, x.as_slice()))).collect()
}

fn evaluate_u(
    spec: &ModelSpec,
    gen: &GeneratorSpec,
    grid: &Grid,
    u: &[f64],
    method: Method,
    settings: &Settings,
) -> Result<Vec<Row>> {
    let opts = EvalOptions { tol: settings.tol, ..Default::default() };
    let pts = points(grid);
    let rows = match method {
        Method::Taylor => {
            let table = taylor_sequence_extended(gen, u, settings.r_max)?;
            pts.par_iter()
                .map(|&(s, x)| match table.eval(x, s, &opts) {
                    Ok(ev) => Row::from_eval(s, x, u, method, ev),
                    Err(e) => Row::failed(s, x, u, method, e),
                })
                .collect()
        }
        Method::Qseries => {
            let eta = resolve_eta(gen, u, grid.s_max(), &grid.x, settings)?;
            let h = h_sequence(gen, u, eta.eta, settings.r_max)?;
            pts.par_iter()
                .map(|&(s, x)| match q_series_eval(&h, x, s, &opts) {
                    Ok(ev) => Row::from_eval(s, x, u, method, ev),
                    Err(e) => Row::failed(s, x, u, method, e),
                })
                .collect()
        }
        Method::Logaffine => {
            let eta = resolve_eta(gen, u, grid.s_max(), &grid.x, settings)?;
            let h = h_sequence(gen, u, eta.eta, settings.r_max)?;
            let per_s: Vec<_> = grid.s.par_iter().map(|&s| cd_from_h(&h, s, &opts)).collect();
            let mut rows = Vec::with_capacity(pts.len());
            for (&s, cd) in grid.s.iter().zip(per_s) {
                for x in &grid.x {
                    rows.push(match &cd {
                        Ok(cd) => {
                            let lin: Complex64 = cd.d.iter().zip(x).map(|(d, xi)| d * xi).sum();
                            let mut row = Row::exact(s, x, u, method, (cd.c + lin).exp());
                            row.n_terms = cd.n_terms;
                            row.tail_estimate = f64::NAN;
                            row
                        }
                        Err(e) => Row::failed(s, x, u, method, e),
                    });
                }
            }
            rows
        }
        Method::Riccati => {
            let s_max = grid.s_max();
            if s_max == 0.0 {
                pts.iter().map(|&(s, x)| Row::exact(s, x, u, method, plane_wave(u, x))).collect()
            } else {
                let sol = solve_riccati(gen, u, s_max, settings.rtol)?;
                pts.par_iter()
                    .map(|&(s, x)| match char_fn_riccati(&sol, x, s) {
                        Ok(v) => {
                            let mut row = Row::exact(s, x, u, method, v);
                            row.n_terms = sol.grid.len();
                            row.tail_estimate = settings.rtol;
                            row
                        }
                        Err(e) => Row::failed(s, x, u, method, e),
                    })
                    .collect()
            }
        }
        Method::Mc => {
            let model = SDEModel::from_spec(spec)?;
            let mut rows = Vec::with_capacity(pts.len());
            for &(s, x) in &pts {
                if s == 0.0 {
                    rows.push(Row::exact(s, x, u, method, plane_wave(u, x)));
                    continue;
                }
                let dt = settings.dt.unwrap_or(s / DEFAULT_STEPS as f64).min(s);
                let row = simulate_paths(&model, x, s, settings.paths, dt, settings.seed)
                    .and_then(|sim| {
                        if let Some(w) = &sim.warning {
                            eprintln!("warning: s = {s}, x = {x:?}: {w}");
                        }
                        mc_char_fn(&sim, u)
                    });
                rows.push(match row {
                    Ok(est) => {
                        let mut row = Row::exact(s, x, u, method, est.value);
                        row.n_terms = est.n_paths;
                        row.tail_estimate = est.stderr;
                        row
                    }
                    Err(e) => Row::failed(s, x, u, method, e),
                });
            }
            rows
        }
    };
    Ok(rows)
}

/// Differences between two row sets over the same grid.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub rows: Vec<(Row, Row, f64)>,
    pub max_diff: f64,
    pub failures: usize,
}

pub fn compare_rows(a: Vec<Row>, b: Vec<Row>, max_diff: f64) -> Result<Comparison> {
    if a.len() != b.len() {
        return Err(anyhow!("row counts differ: {} vs {}", a.len(), b.len()));
    }
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let rows = a
        .into_iter()
        .zip(b)
        .map(|(ra, rb)| {
            let d = match (ra.value, rb.value) {
                (Some(va), Some(vb)) => (va - vb).norm(),
                _ => f64::INFINITY,
            };
            if d.is_nan() || d > max_diff {
                failures += 1;
            }
            if d.is_nan() {
                worst = f64::NAN;
            } else {
                worst = worst.max(d);
            }
            (ra, rb, d)
        })
        .collect();
    Ok(Comparison { rows, max_diff: worst, failures })
}
