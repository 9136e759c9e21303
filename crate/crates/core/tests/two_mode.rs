use proptest::prelude::*;

use ptfourwell::ode::Stepping;
use ptfourwell::two_mode::{
    eigensystem, observable_ode_rhs, observables, propagate, propagate_with, pt_symmetry_residual, TwoModeObservables,
    TwoModeParams, TwoModeState,
};
use ptfourwell::C64;

fn state(a: (f64, f64), b: (f64, f64)) -> TwoModeState {
    TwoModeState([C64::new(a.0, a.1), C64::new(b.0, b.1)])
}

/// Plain RK4 on the observable system, independent of the state integrator.
fn integrate_observables(start: TwoModeObservables, p: &TwoModeParams, t_end: f64, h: f64) -> TwoModeObservables {
    let f = |y: [f64; 3]| {
        let (a, b, c) = observable_ode_rhs(&TwoModeObservables { n1: y[0], n2: y[1], j12: y[2] }, p);
        [a, b, c]
    };
    let add = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    let mut y = [start.n1, start.n2, start.j12];
    let steps = (t_end / h).round() as usize;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(add(y, k1, h / 2.0));
        let k3 = f(add(y, k2, h / 2.0));
        let k4 = f(add(y, k3, h));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    TwoModeObservables { n1: y[0], n2: y[1], j12: y[2] }
}

#[test]
fn broken_phase_population_grows_at_the_imaginary_eigenvalue() {
    let p = TwoModeParams::new(1.0, 2.0).unwrap();
    let traj = propagate(&state((1.0, 0.0), (0.3, 0.2)), &p, 6.0, 0.001).unwrap();
    let total = |k: usize| traj.states[k].norm_sqr();
    // slope of ln N over the late interval approaches 2 Im E+ = 2 sqrt(3)
    let (a, b) = (4000, 6000);
    let rate = (total(b) / total(a)).ln() / (traj.time(b) - traj.time(a));
    let expected = 2.0 * eigensystem(&p).plus.value.im;
    assert!((rate - expected).abs() / expected < 1e-6, "{rate} vs {expected}");
}

#[test]
fn rabi_oscillation_frequency() {
    for g in [0.0, 0.3, 0.6, 0.9] {
        let p = TwoModeParams::new(1.0, g).unwrap();
        let dt = 0.001;
        let traj = propagate(&state((1.0, 0.0), (0.0, 0.0)), &p, 30.0, dt).unwrap();
        let n1: Vec<f64> = traj.observables(1.0).iter().map(|o| o.n1).collect();
        let peaks = ptfourwell::acceptance::peak_times(0.0, dt, &n1);
        let period = (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64;
        let omega = 2.0 * std::f64::consts::PI / period;
        assert!((omega - p.rabi_frequency()).abs() / p.rabi_frequency() < 0.01, "Γ={g}: {omega}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalue_classes(j in 0.1f64..5.0, ratio in 0.0f64..3.0) {
        prop_assume!((ratio - 1.0).abs() > 1e-3);
        let g = ratio * j;
        let es = eigensystem(&TwoModeParams::new(j, g).unwrap());
        let (p, m) = (es.plus.value, es.minus.value);
        if g < j {
            prop_assert_eq!(p.im, 0.0);
            prop_assert_eq!(m.im, 0.0);
            prop_assert!(pt_symmetry_residual(&es.plus.normalized).unwrap() <= 1e-12);
            prop_assert!(pt_symmetry_residual(&es.minus.normalized).unwrap() <= 1e-12);
        } else {
            prop_assert_eq!(p.re, 0.0);
            prop_assert!((p - m.conj()).norm() == 0.0);
            prop_assert!(pt_symmetry_residual(&es.plus.normalized).unwrap() > 0.0);
        }
    }

    #[test]
    fn total_population_follows_gain_minus_loss(
        g in -0.9f64..0.9,
        a in (-1.0f64..1.0, -1.0f64..1.0),
        b in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let s = state(a, b);
        prop_assume!(s.norm_sqr() > 0.1);
        let p = TwoModeParams::new(1.0, g).unwrap();
        let dt = 0.01;
        let traj = propagate_with(&s, &p, 2.0, dt, Stepping::refined(1e-12)).unwrap();
        let obs = traj.observables(1.0);
        for k in 1..obs.len() - 1 {
            let fd = (obs[k + 1].n1 + obs[k + 1].n2 - obs[k - 1].n1 - obs[k - 1].n2) / (2.0 * dt);
            let exact = 2.0 * g * (obs[k].n1 - obs[k].n2);
            // centred difference error ~ dt²/6 times the third derivative
            prop_assert!((fd - exact).abs() <= 1e-3 * s.norm_sqr(), "k={}: {} vs {}", k, fd, exact);
        }
    }

    #[test]
    fn state_and_observable_systems_agree(
        g in -0.9f64..0.9,
        a in (-1.0f64..1.0, -1.0f64..1.0),
        b in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let s = state(a, b);
        prop_assume!(s.norm_sqr() > 0.1);
        let p = TwoModeParams::new(1.0, g).unwrap();
        let traj = propagate_with(&s, &p, 3.0, 0.01, Stepping::refined(1e-12)).unwrap();
        let end = *traj.observables(1.0).last().unwrap();
        let direct = integrate_observables(observables(&s, 1.0), &p, 3.0, 1e-3);
        let scale = s.norm_sqr();
        prop_assert!((end.n1 - direct.n1).abs() <= 1e-8 * scale);
        prop_assert!((end.n2 - direct.n2).abs() <= 1e-8 * scale);
        prop_assert!((end.j12 - direct.j12).abs() <= 1e-8 * scale);
    }
}
