use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use hardy_core::*;

fn prm(d: usize, k: usize, p: f64, a: f64, b: f64) -> HardyParams {
    HardyParams::new(d, k, p, a, b).unwrap()
}

#[test]
fn sphere_areas() {
    assert_eq!(sphere_surface_area(0), 2.0);
    assert!((sphere_surface_area(1) - 2.0 * PI).abs() < 1e-14);
    assert!((sphere_surface_area(3) - 2.0 * PI * PI).abs() < 1e-13);
}

#[test]
fn weighted_rules_on_simple_weights() {
    // w = cos^{k+a-1} sin^{d-k-1} = 1 for d = 2, k = 1, a = 0
    let w = AngularWeight::for_params(&prm(2, 1, 2.0, 0.0, 0.0));
    let rule = build_rule(&w, (0.0, FRAC_PI_2), 32).unwrap();
    let mass = rule.integrate(|_| 1.0).unwrap();
    assert!((mass - FRAC_PI_2).abs() < 1e-12, "{mass}");
    assert!((rule.integrate(|t| t.cos().powi(2)).unwrap() - FRAC_PI_4).abs() < 1e-12);
    assert_eq!(rule.integrate(|_| 0.0).unwrap(), 0.0);
    assert!(rule.integrate(|_| f64::NAN).is_err());

    // w = sin θ for d = 3, k = 1, a = 0
    let w = AngularWeight::for_params(&prm(3, 1, 2.0, 0.0, 0.0));
    let rule = build_rule(&w, (0.0, FRAC_PI_2), 32).unwrap();
    assert!((rule.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-13);

    // B(0.75, 1)/2 = 2/3
    let w = AngularWeight::for_params(&prm(3, 1, 2.0, 0.5, 0.0));
    let rule = build_rule(&w, (0.0, FRAC_PI_2), 32).unwrap();
    assert!((rule.integrate(|_| 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);

    assert!(sphere_weight_mass(&prm(3, 2, 2.0, -2.5, 0.0)).is_err());
    assert!((sphere_weight_mass(&prm(3, 1, 2.0, 0.0, 0.0)).unwrap() - 4.0 * PI).abs() < 1e-12);
    assert!((sphere_weight_mass(&prm(2, 1, 2.0, 0.0, 0.0)).unwrap() - 2.0 * PI).abs() < 1e-12);
}

#[test]
fn windowed_power_in_full_space_respects_the_bound() {
    let params = prm(3, 1, 2.0, 0.0, 0.0);
    let cone = ConeSpec::FullSpace;
    let res = solve_m(&params, &cone, 64).unwrap();
    for s in [-2.0, -0.5, 0.0, 1.0] {
        let tf = SeparatedTestFunction {
            radial: RadialProfile::PowerWindow { s, r0: 0.5, r1: 3.0 },
            angular: res.minimizer.clone(),
        };
        let ev = verify_inequality(&params, &cone, &tf).unwrap();
        assert!(ev.quotient >= 0.25, "s = {s}: {}", ev.quotient);
        assert_eq!(ev.closed_form_reference, Some(0.25));
    }
}

#[test]
fn half_space_udelta_approaches_the_fractional_constant() {
    // s = 1/2, n = 3: d = 4, a = 0
    let params = prm(4, 1, 2.0, 0.0, 0.0);
    let cone = ConeSpec::HalfSpace;
    let res = solve_m(&params, &cone, 512).unwrap();
    let deltas = [0.2, 0.1, 0.05];
    let q: Vec<f64> = deltas
        .iter()
        .map(|&delta| {
            let tf = SeparatedTestFunction {
                radial: RadialProfile::PowerLawSplit { delta },
                angular: res.minimizer.clone(),
            };
            verify_inequality(&params, &cone, &tf).unwrap().quotient
        })
        .collect();
    assert!(q.iter().all(|v| *v > 4.0));
    let ex = richardson_delta2(&deltas, &q).unwrap();
    assert!((ex.limit - 4.0).abs() < 1e-3 * 4.0, "{}", ex.limit);
}

#[test]
fn truncated_extremal_approaches_the_minimum() {
    let params = prm(3, 1, 3.0, 0.5, 0.0);
    let cone = ConeSpec::ComplementSigma0;
    let res = solve_m(&params, &cone, 256).unwrap();
    let h = hardy_exponent(&params).h;
    let mut last = f64::INFINITY;
    for width in [1.0f64, 10.0, 100.0, 600.0] {
        let tf = SeparatedTestFunction {
            radial: RadialProfile::PowerWindow {
                s: -h,
                r0: 1.0,
                r1: width.exp(),
            },
            angular: res.minimizer.clone(),
        };
        let q = verify_inequality(&params, &cone, &tf).unwrap().quotient;
        assert!(q >= res.m && q < last);
        last = q;
    }
    assert!((last - res.m) / res.m < 1e-2);
}

#[test]
fn strip_energy_follows_the_threshold_rate() {
    let params = prm(3, 1, 2.0, 1.0, 0.0);
    let values: Vec<f64> = [4u32, 8, 16]
        .iter()
        .map(|&h| cutoff_decay(&params, (0.5, 2.0), h).unwrap().value)
        .collect();
    let slope = log_log_slope(&[4.0, 8.0, 16.0], &values).unwrap();
    assert!((slope - (1.0 - params.p())).abs() < 1e-3, "{slope}");
}

#[test]
fn one_dimensional_bump_near_one() {
    let grid = LogGrid::standard();
    let values: Vec<f64> = grid
        .ln_r
        .iter()
        .map(|&t| smooth_step((t + 0.3) / 0.3) * smooth_step((0.3 - t) / 0.3))
        .collect();
    // d = 3, a = b = 0, p = 2: H = 1/2
    let q = radial_hardy_quotient(2.0, 2.0, &grid, &values).unwrap();
    assert!(q >= 0.25);
}
