use holoseries::models;
use holoseries::riccati::square_root_exponent;
use holoseries::series::{calibrate_eta, default_probes};
use holoseries::{
    build_generator, char_fn_riccati, h_sequence, q_series_eval, solve_riccati, EvalOptions,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn square_root_series_riccati_and_closed_form_agree(
        kappa in 0.3f64..2.0,
        theta in 0.1f64..1.0,
        sigma in 0.1f64..0.8,
        u in -2.0f64..2.0,
        x in 0.0f64..1.0,
        s in 0.05f64..0.6,
    ) {
        let gen = build_generator(&models::square_root(kappa, theta, sigma)).unwrap();
        let cal = calibrate_eta(&gen, &[u], s, &default_probes(&gen), 200).unwrap();
        let h = h_sequence(&gen, &[u], cal.eta, 200).unwrap();
        let series = q_series_eval(&h, &[x], s, &EvalOptions::default()).unwrap().value;

        let sol = solve_riccati(&gen, &[u], s, 1e-10).unwrap();
        let riccati = char_fn_riccati(&sol, &[x], s).unwrap();

        let (c, d) = square_root_exponent(kappa, theta, sigma, u, s);
        let exact = (c + d * x).exp();

        prop_assert!((series - exact).norm() < 1e-8, "series {} vs {}", series, exact);
        prop_assert!((riccati - exact).norm() < 1e-7, "riccati {} vs {}", riccati, exact);
        prop_assert!(series.norm() <= 1.0 + 1e-9);
    }
}
