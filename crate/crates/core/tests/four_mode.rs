use proptest::prelude::*;

use ptfourwell::config::parse_config;
use ptfourwell::four_mode::{
    apply_controller, apply_hamiltonian, condition_residuals, controller_tunneling, hamiltonian, observables,
    FourModeParams, FourModeState,
};
use ptfourwell::scenario::run_scenario;
use ptfourwell::two_mode::{observable_ode_rhs, TwoModeObservables, TwoModeParams};
use ptfourwell::C64;

fn complex() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b))
}

fn any_state() -> impl Strategy<Value = FourModeState> {
    prop::array::uniform4(complex()).prop_map(FourModeState)
}

fn rhs(state: &FourModeState, p: &FourModeParams) -> [C64; 4] {
    let h = hamiltonian(state, p);
    apply_hamiltonian(&h, &state.0).map(|z| -C64::i() * z)
}

fn shifted(state: &FourModeState, v: &[C64; 4], h: f64) -> FourModeState {
    FourModeState(std::array::from_fn(|k| state.0[k] + v[k] * h))
}

/// `r1` and `r2` with the tunneling law applied to the given state.
fn r12(state: &FourModeState, base: &FourModeParams, gamma: f64) -> [f64; 2] {
    let mut p = *base;
    let o = observables(state, &p);
    (p.j01, p.j23) = controller_tunneling(&o, p.d);
    let r = condition_residuals(state, &p, gamma);
    [r.r1, r.r2]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn r3_vanishes_for_any_state(s in any_state(), d in 0.01f64..5.0) {
        let mut p = FourModeParams::controlled(1.0, 0.0, d).unwrap();
        let o = observables(&s, &p);
        (p.j01, p.j23) = controller_tunneling(&o, d);
        prop_assert_eq!(condition_residuals(&s, &p, 0.3).r3, 0.0);
        // the textbook form agrees up to rounding
        let naive = p.j01 * o.c(0, 2) - p.j23 * o.c(1, 3);
        prop_assert!(naive.abs() <= 1e-12 * (1.0 + s.total().powi(2)) * d);
    }

    #[test]
    fn hamiltonian_flow_conserves_population(s in any_state(), e in (-3.0f64..3.0, -3.0f64..3.0), c in 0.0f64..2.0) {
        let p = FourModeParams { e0: e.0, e3: e.1, j01: 0.7, j12: 1.0, j23: 0.4, c, d: 1.0 };
        let v = rhs(&s, &p);
        let rate: f64 = (0..4).map(|k| (s.0[k].conj() * v[k]).re).sum();
        prop_assert!(rate.abs() <= 1e-12 * (1.0 + s.total()));
    }

    /// The on-site law keeps `r1` and `r2` stationary: their derivative along
    /// the controlled flow, taken by finite differences, vanishes.
    #[test]
    fn controller_freezes_the_conditions(
        s in any_state(),
        gamma in -0.8f64..0.8,
        gamma_dot in -0.1f64..0.1,
        c in prop_oneof![Just(0.0), 0.0f64..1.0],
        d in 0.2f64..2.0,
    ) {
        let base = FourModeParams::controlled(1.0, c, d).unwrap();
        let p = match apply_controller(&s, &base, gamma, gamma_dot, 1e-6, 0.0) {
            Ok(p) => p,
            Err(_) => return Ok(()), // near-singular draws carry no information
        };
        prop_assume!(p.e0.abs().max(p.e3.abs()) < 1e3);
        let v = rhs(&s, &p);
        let h = 1e-5;
        let plus = r12(&shifted(&s, &v, h), &base, gamma + gamma_dot * h);
        let minus = r12(&shifted(&s, &v, -h), &base, gamma - gamma_dot * h);
        let scale = (1.0 + s.total()).powi(2) * (1.0 + d) * (1.0 + p.e0.abs() + p.e3.abs());
        for k in 0..2 {
            let rate = (plus[k] - minus[k]) / (2.0 * h);
            prop_assert!(rate.abs() <= 1e-5 * scale, "r{}: rate {}", k + 1, rate);
        }
    }
}

/// Along a controlled run the middle observables satisfy the closed two-mode
/// system, checked with centred differences of the sampled series.
#[test]
fn middle_wells_obey_the_two_mode_equations() {
    for text in [
        "scenario = stationary\ngamma = 0.5\nj12 = 1\n",
        "scenario = oscillatory\ngamma = 0.5\nj12 = 1\n",
        "scenario = oscillatory\ngamma = -0.7\nj12 = 1\nweight = 0.7\nweight_phase = 1.0\n",
    ] {
        let out = run_scenario(&parse_config(text).unwrap(), None).unwrap();
        assert_eq!(out.report.status, ptfourwell::scenario::Status::Success, "{text}");
        let s = &out.record.samples;
        let dt = s[1].t - s[0].t;
        let p = TwoModeParams::new(1.0, out.prepared.schedule.final_gamma()).unwrap();
        let mut worst: f64 = 0.0;
        for k in 1..s.len() - 1 {
            let o = |i: usize| &s[i].obs;
            let (a, b, c) = observable_ode_rhs(&TwoModeObservables { n1: o(k).n[1], n2: o(k).n[2], j12: o(k).j12 }, &p);
            let fd = |f: fn(&ptfourwell::four_mode::FourModeObservables) -> f64| (f(o(k + 1)) - f(o(k - 1))) / (2.0 * dt);
            worst = worst
                .max((fd(|o| o.n[1]) - a).abs())
                .max((fd(|o| o.n[2]) - b).abs())
                .max((fd(|o| o.j12) - c).abs());
        }
        // centred differences carry dt²/6 times the third derivative
        assert!(worst < 1e-4, "{text}: {worst}");
    }
}
