//! Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use holoseries::generator::growth_profile;
use holoseries::log_affine::{cd_from_h, rho_sequence};
use holoseries::mc::{mc_char_fn, simulate_paths, SDEModel};
use holoseries::multiindex::factorial_f64;
use holoseries::riccati::{select_eta_from_riccati, solve_riccati};
use holoseries::series::{
    calibrate_eta, default_probes, g_sequence, h_sequence, plane_wave, q_from_product, q_from_stirling,
    q_series_eval, sum_power_series, taylor_sequence_extended, EvalOptions, PolyInX, Summation,
};
use holoseries::special1d::{g_r_explicit, pi_table, Normalization, Special1DModel};
use holoseries::{build_generator, models, stirling_unsigned, DomainBox, GeneratorSpec, ModelSpec};
use holoseries_cli::identities::run_identities;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gen_of(spec: &ModelSpec) -> GeneratorSpec {
    build_generator(spec).expect("reference model is valid")
}

fn opts() -> EvalOptions {
    EvalOptions { tol: 1e-15, ..Default::default() }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn exact_identities() -> Check {
    let checks = run_identities(15, &stirling_unsigned(15), 2024);
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    ensure(failed.is_empty(), if failed.is_empty() {
        format!("{} identity families exact for k <= 15", checks.len())
    } else {
        failed.join("; ")
    })
}

/// `(1/k!) sum_r c[k][r] eta^{-r} B_r` with `B_r` the growth bound on `g_r`.
fn q_normalizer(g: &holoseries::SeriesExpansion, st: &holoseries::StirlingTable, eta: f64, m: f64, k: usize) -> f64 {
    (0..=k)
        .map(|r| st.get_f64(k, r) * eta.powi(-(r as i32)) * g.coefficient_bound(&[m], r).unwrap())
        .sum::<f64>()
        / factorial_f64(k)
}

fn coeff_diff(a: &PolyInX, b: &PolyInX) -> f64 {
    a.max_abs_diff(b)
}

fn three_routes() -> Check {
    let k_max = 30;
    let st = stirling_unsigned(k_max);
    let mut worst: f64 = 0.0;
    for (name, spec) in models::reference_models() {
        let gen = gen_of(&spec);
        let m = gen.domain().max_norm();
        for u in [1.0, -2.0] {
            for eta in [0.5, 2.0] {
                let rec = h_sequence(&gen, &[u], eta, k_max).map_err(|e| e.to_string())?;
                let g = g_sequence(&gen, &[u], k_max).map_err(|e| e.to_string())?;
                if rec.truncated || g.truncated {
                    return Err(format!("{name}: table overflowed"));
                }
                for k in 0..=k_max {
                    let qseq = q_from_stirling(&g.coeffs, &st, eta, k, Summation::Compensated)
                        .map_err(|e| e.to_string())?;
                    let qprod = q_from_product(&gen, &[u], eta, k).map_err(|e| e.to_string())?;
                    let norm = q_normalizer(&g, &st, eta, m, k).max(f64::MIN_POSITIVE);
                    let d = coeff_diff(&rec.coeffs[k], &qseq)
                        .max(coeff_diff(&rec.coeffs[k], &qprod))
                        .max(coeff_diff(&qseq, &qprod));
                    worst = worst.max(d / norm);
                }
            }
        }
    }
    ensure(worst <= 1e-11, format!("max normalized difference {worst:.2e} (limit 1e-11), k <= 30"))
}

fn closed_forms() -> Check {
    type Exact = Box<dyn Fn(f64, f64, f64) -> Complex64>;
    let cases: Vec<(&str, ModelSpec, Exact)> = vec![
        (
            "brownian",
            models::brownian(),
            Box::new(|u, x, s| c(-u * u * s / 2.0, u * x).exp()),
        ),
        (
            "ou",
            models::ornstein_uhlenbeck(1.0, 2.0),
            Box::new(|u, x, s| {
                let (kappa, sig2) = (1.0f64, 2.0f64);
                let e = (-kappa * s).exp();
                c(-sig2 * u * u * (1.0 - e * e) / (4.0 * kappa), u * x * e).exp()
            }),
        ),
        (
            "compound_poisson",
            models::compound_poisson(0.5, 1.0),
            Box::new(|u, x, s| {
                (c(0.0, u * x) + s * 0.5 * (c(0.0, u).exp() - 1.0 - c(0.0, u))).exp()
            }),
        ),
    ];
    let xs = [-0.5, 0.0, 0.5];
    let probes: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let (mut worst_q, mut worst_t): (f64, f64) = (0.0, 0.0);
    for (name, spec, exact) in &cases {
        let gen = gen_of(spec);
        for ui in -3..=3 {
            let u = ui as f64;
            let eta = calibrate_eta(&gen, &[u], 1.0, &probes, 300).map_err(|e| e.to_string())?.eta;
            let h = h_sequence(&gen, &[u], eta, 300).map_err(|e| e.to_string())?;
            let t = taylor_sequence_extended(&gen, &[u], 400).map_err(|e| e.to_string())?;
            for i in 0..=20 {
                let s = i as f64 / 20.0;
                for &x in &xs {
                    let want = exact(u, x, s);
                    let q = q_series_eval(&h, &[x], s, &opts()).map_err(|e| e.to_string())?;
                    let tv = t.eval(&[x], s, &opts()).map_err(|e| e.to_string())?;
                    let (dq, dt) = ((q.value - want).norm(), (tv.value - want).norm());
                    if !(dq <= 1e-8 && dt <= 1e-8) {
                        return Err(format!(
                            "{name} u={u} x={x} s={s}: qseries err {dq:.2e}, taylor err {dt:.2e}"
                        ));
                    }
                    worst_q = worst_q.max(dq);
                    worst_t = worst_t.max(dt);
                }
            }
        }
    }
    Ok(format!("max error qseries {worst_q:.2e}, taylor {worst_t:.2e} (limit 1e-8)"))
}

fn riccati_square_root() -> Check {
    let gen = gen_of(&models::square_root(1.0, 0.5, 0.5));
    let xs: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
    let probes: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let mut worst: f64 = 0.0;
    for u in [1.0, 2.0] {
        let sol = solve_riccati(&gen, &[u], 2.0, 1e-9).map_err(|e| e.to_string())?;
        let eta = calibrate_eta(&gen, &[u], 2.0, &probes, 300).map_err(|e| e.to_string())?.eta;
        let h = h_sequence(&gen, &[u], eta, 300).map_err(|e| e.to_string())?;
        for i in 1..=10 {
            let s = 0.2 * i as f64;
            for x in &probes {
                let series = q_series_eval(&h, x, s, &opts()).map_err(|e| e.to_string())?.value;
                let oracle = holoseries::char_fn_riccati(&sol, x, s).map_err(|e| e.to_string())?;
                worst = worst.max((series - oracle).norm());
            }
        }
    }
    ensure(worst <= 1e-6, format!("max |series - oracle| {worst:.2e} on 10x10 grid, u in {{1, 2}} (limit 1e-6)"))
}

fn log_affine_structure() -> Check {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_exp: f64 = 0.0;
    let mut etas = Vec::new();
    for (name, spec) in models::reference_models() {
        let gen = gen_of(&spec);
        let probes = default_probes(&gen);
        for u in [1.0, -2.0] {
            let sol = solve_riccati(&gen, &[u], 1.0, 1e-9).map_err(|e| e.to_string())?;
            let eta = select_eta_from_riccati(&gen, &sol).map_err(|e| e.to_string())?.eta;
            etas.push(eta);
            let h = h_sequence(&gen, &[u], eta, 60).map_err(|e| e.to_string())?;
            let rho = rho_sequence(&h, 60, f64::INFINITY).map_err(|e| e.to_string())?;
            for k in 1..=20 {
                let p = &rho.polys[k];
                let top = p.max_abs();
                if top > 0.0 {
                    worst_ratio = worst_ratio.max(p.max_abs_from_order(2) / top);
                }
            }
            for x in &probes {
                for radius in [0.25, 0.5] {
                    for j in 0..8 {
                        let w = Complex64::from_polar(radius, j as f64 * std::f64::consts::PI / 4.0);
                        let lhs = rho.exponent(x, w, &opts()).value.exp();
                        let rhs = plane_wave(&[u], x)
                            * sum_power_series(h.coeffs.iter().map(|p| p.eval(x)), w, &opts()).value;
                        let d = (lhs - rhs).norm();
                        if d.is_nan() || d > 1e-9 {
                            return Err(format!("{name} u={u} x={x:?} w={w}: |exp(rho) - f_u h| = {d:.2e}"));
                        }
                        worst_exp = worst_exp.max(d);
                    }
                }
            }
        }
    }
    let (lo, hi) = etas.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    ensure(
        worst_ratio <= 1e-9,
        format!(
            "max |gamma|>=2 ratio {worst_ratio:.2e} (limit 1e-9), max |exp(sum rho w^k) - f_u sum h w^k| {worst_exp:.2e} \
             for |w| <= 0.5 (limit 1e-9), eta from the oracle radius in [{lo:.3}, {hi:.3}]"
        ),
    )
}

fn cd_vs_riccati() -> Check {
    let mut worst_c: f64 = 0.0;
    let mut worst_d: f64 = 0.0;
    for spec in [models::ornstein_uhlenbeck(1.0, 2.0), models::square_root(1.0, 0.5, 0.5)] {
        let gen = gen_of(&spec);
        let probes = default_probes(&gen);
        for u in [1.0, -2.0] {
            let sol = solve_riccati(&gen, &[u], 1.0, 1e-10).map_err(|e| e.to_string())?;
            let eta = calibrate_eta(&gen, &[u], 1.0, &probes, 300).map_err(|e| e.to_string())?.eta;
            let h = h_sequence(&gen, &[u], eta, 300).map_err(|e| e.to_string())?;
            for i in 1..=20 {
                let s = i as f64 / 20.0;
                let cd = cd_from_h(&h, s, &opts()).map_err(|e| e.to_string())?;
                let (c_or, d_or) = sol.exponent_at(s).map_err(|e| e.to_string())?;
                worst_c = worst_c.max((cd.c - c_or).norm());
                worst_d = worst_d.max((cd.d[0] - d_or[0]).norm());
            }
        }
    }
    ensure(
        worst_c <= 1e-6 && worst_d <= 1e-6,
        format!("max |dC| {worst_c:.2e}, max |dD| {worst_d:.2e} for s <= 1 (limit 1e-6)"),
    )
}

fn special_one_dimensional() -> Check {
    let table = pi_table(8, Normalization::Calibrated).map_err(|e| e.to_string())?;
    let printed = pi_table(8, Normalization::AsPrinted).map_err(|e| e.to_string())?;
    let models = [
        Special1DModel::new(1.0, 0.0, 0.0, 1.0, vec![]).unwrap(),
        Special1DModel::new(0.5, 0.8, 0.0, 0.0, vec![1.0; 11]).unwrap(),
        Special1DModel::new(0.4, -0.3, 0.2, 0.6, vec![1.0; 11]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for m in &models {
        let gen = m.to_generator(DomainBox::unit(1)).map_err(|e| e.to_string())?;
        let prof = growth_profile(&gen).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let x: f64 = rng.random_range(-1.0..1.0);
            let u: f64 = rng.random_range(-2.0..2.0);
            let g = g_sequence(&gen, &[u], 8).map_err(|e| e.to_string())?;
            for r in 1..=8u32 {
                let want = g.coeffs[r as usize].eval(&[x]);
                let got = g_r_explicit(m, u, x, r, &table).map_err(|e| e.to_string())?;
                worst = worst.max((got - want).norm() / prof.coefficient_bound(&[x], &[u], r as usize));
            }
        }
    }
    // The as-printed normalization at r = 2 on the pure-diffusion model.
    let (u, x) = (0.7, 0.0);
    let gen = models[0].to_generator(DomainBox::unit(1)).map_err(|e| e.to_string())?;
    let g2 = g_sequence(&gen, &[u], 2).map_err(|e| e.to_string())?.coeffs[2].eval(&[x]);
    let p2 = g_r_explicit(&models[0], u, x, 2, &printed).map_err(|e| e.to_string())?;
    let factors: Vec<String> = table.corrections().iter().map(|f| format!("{f:.6}")).collect();
    ensure(
        worst <= 1e-9,
        format!(
            "max |explicit - recursion| / bound {worst:.2e} (limit 1e-9); as printed g_2 / recursion g_2 = {:.6}; \
             fitted factors r = 1..8: [{}]",
            (p2 / g2).re,
            factors.join(", ")
        ),
    )
}

fn growth_bound() -> Check {
    let mut specs = models::reference_models();
    specs.push(("heston", models::heston(1.0, 0.04, 0.3, -0.7)));
    specs.push((
        "affine_jump",
        models::affine_jump_1d((0.1, -0.5), (0.2, 0.1), 0.3, 0.2, 0.5, (0.0, 1.0), 20),
    ));
    let mut checked = 0usize;
    let mut violations = Vec::new();
    for (name, spec) in &specs {
        let gen = gen_of(spec);
        let prof = growth_profile(&gen).map_err(|e| e.to_string())?;
        let n = gen.dim();
        for ui in -3..=3 {
            let mut us = vec![vec![ui as f64; n]];
            if n == 2 {
                us.push(vec![ui as f64, 0.0]);
                us.push(vec![0.0, ui as f64]);
            }
            for u in &us {
                let g = g_sequence(&gen, u, 40).map_err(|e| e.to_string())?;
                if g.truncated {
                    return Err(format!("{name}: g table overflowed"));
                }
                for v in gen.domain().vertices() {
                    for r in 0..=40 {
                        let val = g.coeffs[r].eval(&v).norm();
                        let bound = prof.coefficient_bound(&v, u, r);
                        checked += 1;
                        if val > bound {
                            violations.push(format!("{name} u={u:?} x={v:?} r={r}"));
                        }
                    }
                }
            }
        }
    }
    ensure(
        violations.is_empty(),
        format!("{} violations in {checked} checks (r <= 40, box vertices, 6 models) {violations:?}", violations.len()),
    )
}

fn monte_carlo_guard() -> Check {
    let (s, u, x) = (1.0, 1.0, 0.3);
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, spec) in models::reference_models() {
        let gen = gen_of(&spec);
        let eta = calibrate_eta(&gen, &[u], s, &[vec![x]], 300).map_err(|e| e.to_string())?.eta;
        let h = h_sequence(&gen, &[u], eta, 300).map_err(|e| e.to_string())?;
        let series = q_series_eval(&h, &[x], s, &opts()).map_err(|e| e.to_string())?;
        let model = SDEModel::from_spec(&spec).map_err(|e| e.to_string())?;
        let sim = simulate_paths(&model, &[x], s, 200_000, s / 512.0, 20240601).map_err(|e| e.to_string())?;
        let est = mc_char_fn(&sim, &[u]).map_err(|e| e.to_string())?;
        let d = (series.value - est.value).norm();
        let limit = 3.0 * est.stderr + 1e-8;
        ok &= d <= limit;
        lines.push(format!("{name} {:.2}sd", d / est.stderr));
    }
    ensure(ok, format!("|series - mc| in stderr units: {}", lines.join(", ")))
}

fn negative_control() -> Check {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models");
    let run = |alt: &str| {
        Command::new(env!("CARGO_BIN_EXE_holoseries"))
            .args(["compare", "--model"])
            .arg(dir.join("ou.json"))
            .arg("--model-alt")
            .arg(dir.join(alt))
            .args(["--methods", "qseries,riccati", "--u", "1", "--s", "0:1:6", "--x", "-0.5:0.5:3"])
            .args(["--max-diff", "1e-6", "--out", "/dev/null"])
            .output()
            .map_err(|e| e.to_string())
    };
    let good = run("ou.json")?;
    let bad = run("ou_flipped.json")?;
    ensure(
        good.status.code() == Some(0) && bad.status.code() == Some(1),
        format!(
            "unperturbed exit {:?}, drift-flipped exit {:?}",
            good.status.code(),
            bad.status.code()
        ),
    )
}

/// Name, check and time limit in seconds.
type Criterion = (&'static str, fn() -> Check, f64);

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact identities", exact_identities, 1.0),
        ("three-route coefficient equivalence", three_routes, 5.0),
        ("closed-form agreement", closed_forms, 10.0),
        ("Riccati oracle on square-root model", riccati_square_root, 10.0),
        ("log-affine structure", log_affine_structure, 5.0),
        ("C/D extraction vs Riccati", cd_vs_riccati, 5.0),
        ("explicit 1-D formula cross-validation", special_one_dimensional, 10.0),
        ("growth bound", growth_bound, 5.0),
        ("Monte Carlo guard", monte_carlo_guard, 60.0),
        ("negative control", negative_control, f64::INFINITY),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < *limit;
        let (passed, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !passed {
            failures += 1;
        }
        let timing = if limit.is_finite() {
            format!("{secs:.2} s, limit {limit} s")
        } else {
            format!("{secs:.2} s")
        };
        println!(
            "{} {:>2} {name} ({timing}): {detail}",
            if passed { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
