use hardy_core::radial_ode::{self, handoff, integrate, psi, Caps, Classification, InitialState, ShootingConfig};
use hardy_core::verify::{self, expansion_mismatch, infinity_limit};
use hardy_core::{build_series, find_ground_state, Chart, Nonlinearity, ProblemParams};

fn cubic() -> Nonlinearity {
    Nonlinearity::power(1.0, 4.0)
}

fn model(mu: f64) -> ProblemParams {
    ProblemParams::new(3.0, 2.0, mu, 1.0).unwrap()
}

#[test]
fn stored_chart_variable_matches_log_u_increments() {
    let params = model(3.0 / 16.0);
    let f = cubic();
    let cfg = ShootingConfig::default();
    let gs = find_ground_state(&params, &f, 1.0, &cfg).unwrap();
    for sol in [&gs.origin, &gs.infinity] {
        // Integrate (log u)' = -ψ(v)/r (origin, in s = log r) or -ψ(v) (infinity)
        // from the stored v with an end-corrected trapezoid, O(h^5) per step.
        let x = |i: usize| match sol.chart {
            Chart::OriginW => sol.r[i].ln(),
            Chart::InfinityPhi => sol.r[i],
        };
        let g = |i: usize| -psi(sol.v[i], params.p);
        let dg = |i: usize| {
            let (r, v) = (sol.r[i], sol.v[i]);
            let (dv, _) = radial_ode::rhs(sol.chart, r, v, sol.logu[i], &params, &f);
            let dpsi = psi(v, params.p) / ((params.p - 1.0) * v) * dv;
            match sol.chart {
                Chart::OriginW => -r * dpsi,
                Chart::InfinityPhi => -dpsi,
            }
        };
        let mut worst = 0.0f64;
        for i in 0..sol.len() - 1 {
            let h = x(i + 1) - x(i);
            let quad = 0.5 * h * (g(i) + g(i + 1)) + h * h / 12.0 * (dg(i) - dg(i + 1));
            let inc = sol.logu[i + 1] - sol.logu[i];
            worst = worst.max((inc - quad).abs() / sol.logu[i].abs().max(1.0));
        }
        assert!(worst <= 10.0 * cfg.tol, "{:?}: {worst:e}", sol.chart);
    }
}

#[test]
fn both_charts_agree_on_an_overlap() {
    let params = model(3.0 / 16.0);
    let f = cubic();
    let tol = 1e-11;
    let gs = find_ground_state(&params, &f, 1.0, &ShootingConfig::default()).unwrap();
    let (w, logu) = gs.origin.interpolate(0.5).unwrap();
    let caps = Caps::default();
    let phi0 = w * 0.5f64.powf(1.0 - params.p);
    // endpoint states of separate runs, so no interpolation enters the comparison
    for r in verify::log_probes(0.55, 2.0, 10) {
        let a = integrate(
            Chart::OriginW,
            InitialState { r: 0.5, v: w, logu },
            r,
            tol,
            &caps,
            &params,
            &f,
        )
        .unwrap();
        let b = integrate(
            Chart::InfinityPhi,
            InitialState { r: 0.5, v: phi0, logu },
            r,
            tol,
            &caps,
            &params,
            &f,
        )
        .unwrap();
        let (la, lb) = (*a.logu.last().unwrap(), *b.logu.last().unwrap());
        assert!(
            (la - lb).abs() <= 10.0 * tol * la.abs().max(1.0),
            "r = {r}: {la} vs {lb}"
        );
    }
}

#[test]
fn handoff_keeps_u_prime_continuous() {
    let params = model(3.0 / 16.0);
    let gs = find_ground_state(&params, &cubic(), 1.0, &ShootingConfig::default()).unwrap();
    let init = handoff(&gs.origin, 1.0).unwrap();
    let (w, logu) = gs.origin.interpolate(1.0).unwrap();
    let du_origin = -logu.exp() * psi(w, params.p) / 1.0;
    let du_inf = -init.logu.exp() * psi(init.v, params.p);
    assert!((du_origin - du_inf).abs() < 1e-12 * du_origin.abs());
    // and the stored infinity leg starts from the same state
    let (phi, lu) = gs.infinity.interpolate(1.0).unwrap();
    assert!((phi - init.v).abs() < 1e-8 && (lu - init.logu).abs() < 1e-8);
}

#[test]
fn ground_state_decreases_near_both_ends() {
    for mu in [0.0, 3.0 / 16.0] {
        let gs = find_ground_state(&model(mu), &cubic(), 1.0, &ShootingConfig::default()).unwrap();
        let o = &gs.origin;
        let near0: Vec<usize> = (0..o.len()).filter(|&i| o.r[i] > 2e-6 && o.r[i] < 1e-3).collect();
        assert!(!near0.is_empty() && near0.iter().all(|&i| o.v[i] > 0.0));
        let inf = &gs.infinity;
        assert!(inf.r_last() >= 24.999);
        assert!((0..inf.len()).filter(|&i| inf.r[i] > 12.5).all(|i| inf.v[i] > 0.0));
        assert!(gs.history_is_monotone());
        assert_eq!(gs.large_amplitude_class, Classification::Blowup);
    }
}

#[test]
fn zero_mu_start_moves_off_zero() {
    let params = model(0.0);
    let f = cubic();
    let init = radial_ode::origin_start(&params, 0.0, 2.0, 1e-6);
    assert_eq!(init.v, 0.0);
    let sol = integrate(Chart::OriginW, init, 1e-3, 1e-10, &Caps::default(), &params, &f).unwrap();
    assert!(sol.v[1..].iter().all(|&w| w > 0.0));
}

#[test]
fn amplitude_is_stable_under_refinement() {
    let params = model(0.0);
    let f = cubic();
    let base = find_ground_state(&params, &f, 1.0, &ShootingConfig::default())
        .unwrap()
        .amplitude;
    let finer = ShootingConfig {
        r0: 5e-7,
        tol: 5e-11,
        ..Default::default()
    };
    let refined = find_ground_state(&params, &f, 1.0, &finer).unwrap().amplitude;
    assert!((base - refined).abs() < 1e-8 * base, "{base} vs {refined}");
    assert!((base - 4.3374).abs() < 1e-3);
}

#[test]
fn linear_limit_tends_to_sqrt_m() {
    // p = 2, μ = 0, f = 0: u = K_{1/2}-type decay, φ → √m
    let params = ProblemParams::new(3.0, 2.0, 0.0, 2.0).unwrap();
    let f = Nonlinearity::zero();
    let r_far = 40.0;
    let phi_far = 2f64.sqrt() + 1.0 / r_far;
    let sol = integrate(
        Chart::InfinityPhi,
        InitialState {
            r: r_far,
            v: phi_far,
            logu: 0.0,
        },
        2.0,
        1e-12,
        &Caps::default(),
        &params,
        &f,
    )
    .unwrap();
    // φ = √m + 1/r exactly for u = e^{-√m r}/r
    for i in (0..sol.len()).step_by(7) {
        let want = 2f64.sqrt() + 1.0 / sol.r[i];
        assert!((sol.v[i] - want).abs() < 1e-10, "r = {}: {}", sol.r[i], sol.v[i]);
    }
}

#[test]
fn hardy_term_reduces_mismatch_for_p_below_two() {
    let params = ProblemParams::new(3.0, 1.5, 0.3, 1.0).unwrap();
    let f = Nonlinearity::power(1.0, 2.5);
    let gs = find_ground_state(&params, &f, 1.0, &ShootingConfig::default()).unwrap();
    let s = build_series(&params, 1).unwrap();
    let sup = |hardy: bool| {
        expansion_mismatch(&gs.infinity, &s, (5.0, 20.0), hardy)
            .unwrap()
            .iter()
            .map(|x| x.1)
            .fold(0.0, f64::max)
    };
    assert!(sup(true) < sup(false));
}

#[test]
fn higher_p_run_has_a_decay_constant() {
    let params = ProblemParams::new(5.0, 3.0, 0.0, 2.0).unwrap();
    let gs = find_ground_state(&params, &cubic(), 1.0, &ShootingConfig::default()).unwrap();
    let hi = gs.infinity.r_last();
    let rep = infinity_limit(&gs.infinity, (hi / 10.0, hi), 0.05).unwrap();
    assert!(rep.passed && rep.c_estimate > 0.0, "{rep:?}");
}

#[test]
fn rejects_bad_brackets_and_settings() {
    let params = model(0.0);
    let f = cubic();
    let cfg = ShootingConfig::default();
    assert!(matches!(
        radial_ode::shoot_ground_state(&params, &f, 5.0, 6.0, &cfg),
        Err(hardy_core::Error::SameClassification(_))
    ));
    let bad = ShootingConfig { r0: 2.0, ..cfg };
    assert!(find_ground_state(&params, &f, 1.0, &bad).is_err());
    let no_mass = ProblemParams::new(3.0, 2.0, 0.0, 0.0).unwrap();
    assert!(find_ground_state(&no_mass, &f, 1.0, &cfg).is_err());
}
