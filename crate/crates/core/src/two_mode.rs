//! Non-Hermitian PT-symmetric double well: `H = [[iΓ, -J], [-J, -iΓ]]`.
//!
//! This is the reference model the middle wells of the four-well system are
//! meant to reproduce. Its closed observable system for `(n1, n2, j12)` is
//! the oracle the four-mode trajectories are tested against.

use crate::init::GammaSchedule;
use crate::ode::{self, OdeSystem};
pub use crate::ode::Stepping;
use crate::{re, Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeParams {
    /// Tunneling amplitude `J > 0`.
    pub tunneling: f64,
    /// Gain/loss strength `Γ`; well 1 gains, well 2 loses for `Γ > 0`.
    pub gamma: f64,
}

impl TwoModeParams {
    pub fn new(tunneling: f64, gamma: f64) -> Result<Self> {
        if !(tunneling > 0.0) || !tunneling.is_finite() {
            return Err(Error::invalid("tunneling", format!("must be positive, got {tunneling}")));
        }
        if !gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be finite"));
        }
        Ok(Self { tunneling, gamma })
    }

    pub fn hamiltonian(&self) -> [[C64; 2]; 2] {
        let j = re(-self.tunneling);
        [[I * self.gamma, j], [j, -I * self.gamma]]
    }

    /// Unbroken-phase oscillation angular frequency `2 sqrt(J² - Γ²)`
    /// (zero at and beyond the exceptional point).
    pub fn rabi_frequency(&self) -> f64 {
        2.0 * (self.tunneling.powi(2) - self.gamma.powi(2)).max(0.0).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeState(pub [C64; 2]);

impl TwoModeState {
    pub fn new(a: C64, b: C64) -> Self {
        Self([a, b])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn is_zero(&self) -> bool {
        self.norm_sqr() == 0.0
    }

    /// Scaled to `n1 + n2 = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n == 0.0 {
            return Err(Error::ZeroState);
        }
        let s = 1.0 / n.sqrt();
        Ok(Self([self.0[0] * s, self.0[1] * s]))
    }

    /// PT image: swap the wells, then complex conjugate.
    pub fn parity_time(&self) -> Self {
        Self([self.0[1].conj(), self.0[0].conj()])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeObservables {
    pub n1: f64,
    pub n2: f64,
    /// Current from well 1 to well 2, `iJ(ψ1ψ2* − ψ1*ψ2)`.
    pub j12: f64,
}

impl TwoModeObservables {
    /// Environment currents `(j_e1, j_2e) = (2Γ n1, 2Γ n2)`.
    pub fn environment_currents(&self, gamma: f64) -> (f64, f64) {
        (2.0 * gamma * self.n1, 2.0 * gamma * self.n2)
    }
}

pub fn observables(state: &TwoModeState, tunneling: f64) -> TwoModeObservables {
    let [a, b] = state.0;
    TwoModeObservables {
        n1: a.norm_sqr(),
        n2: b.norm_sqr(),
        j12: 2.0 * tunneling * (a.conj() * b).im,
    }
}

/// Right-hand side of the closed observable system
/// `(∂t n1, ∂t n2, ∂t j12) = (−j12 + 2Γn1, j12 − 2Γn2, 2J²(n1 − n2))`.
pub fn observable_ode_rhs(obs: &TwoModeObservables, params: &TwoModeParams) -> (f64, f64, f64) {
    let g = params.gamma;
    let j = params.tunneling;
    (
        -obs.j12 + 2.0 * g * obs.n1,
        obs.j12 - 2.0 * g * obs.n2,
        2.0 * j * j * (obs.n1 - obs.n2),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenPair {
    pub value: C64,
    /// `(iΓ ± sqrt(J² − Γ²), −J)` exactly as written, unnormalized.
    pub vector: TwoModeState,
    pub normalized: TwoModeState,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigensystem {
    pub plus: EigenPair,
    pub minus: EigenPair,
    /// Set at the exceptional point `|Γ| = J`, where both pairs coincide.
    pub degenerate: bool,
}

/// Closed-form eigenpairs, ordered `(E+, E−)`.
pub fn eigensystem(params: &TwoModeParams) -> Eigensystem {
    let j = params.tunneling;
    let g = params.gamma;
    let disc = j * j - g * g;
    let degenerate = disc.abs() <= 4.0 * f64::EPSILON * j * j;
    let root = if degenerate {
        C64::new(0.0, 0.0)
    } else if disc > 0.0 {
        re(disc.sqrt())
    } else {
        C64::new(0.0, (-disc).sqrt())
    };
    let pair = |sign: f64| {
        let vector = TwoModeState([I * g + root * sign, re(-j)]);
        EigenPair {
            value: root * sign,
            vector,
            normalized: vector.normalized().expect("second component is -J != 0"),
        }
    };
    Eigensystem {
        plus: pair(1.0),
        minus: pair(-1.0),
        degenerate,
    }
}

/// Normalized lower-energy eigenstate `ψ−` in the unbroken phase; the state
/// reached adiabatically from the symmetric Hermitian ground state.
pub fn pt_ground_state(params: &TwoModeParams) -> Result<TwoModeState> {
    if params.gamma.abs() >= params.tunneling {
        return Err(Error::BrokenPhase {
            gamma: params.gamma,
            tunneling: params.tunneling,
        });
    }
    Ok(eigensystem(params).minus.normalized)
}

/// `min_φ ‖a/‖a‖ − e^{iφ} b/‖b‖‖`, evaluated at the optimal phase
/// `φ = arg⟨b, a⟩`. Zero iff the two states agree up to norm and phase.
pub fn phase_distance(a: &TwoModeState, b: &TwoModeState) -> Result<f64> {
    let a = a.normalized()?;
    let b = b.normalized()?;
    let overlap = b.0[0].conj() * a.0[0] + b.0[1].conj() * a.0[1];
    let phase = if overlap.norm() == 0.0 {
        re(1.0)
    } else {
        overlap / overlap.norm()
    };
    Ok(((a.0[0] - phase * b.0[0]).norm_sqr() + (a.0[1] - phase * b.0[1]).norm_sqr()).sqrt())
}

/// `min_φ ‖PT(ψ) − e^{iφ}ψ‖ / ‖ψ‖`; zero iff `ψ` is PT-symmetric up to a
/// global phase.
pub fn pt_symmetry_residual(state: &TwoModeState) -> Result<f64> {
    if state.is_zero() {
        return Err(Error::ZeroState);
    }
    phase_distance(&state.parity_time(), state)
}

/// Two-mode generator with optionally time-dependent `Γ(t)` and a mean-field
/// term `c·diag(|ψ1|², |ψ2|²)`.
#[derive(Clone, Copy, Debug)]
pub struct TwoModeSystem {
    pub tunneling: f64,
    pub schedule: GammaSchedule,
    pub interaction: f64,
}

impl OdeSystem<C64, 2> for TwoModeSystem {
    type Error = std::convert::Infallible;

    fn rhs(&self, t: f64, y: &[C64; 2]) -> Result<[C64; 2], Self::Error> {
        let (g, _) = self.schedule.eval(t);
        let c = self.interaction;
        let j = self.tunneling;
        let h1 = I * g + c * y[0].norm_sqr();
        let h2 = -I * g + c * y[1].norm_sqr();
        // ψ' = −iHψ
        Ok([
            -I * (h1 * y[0] - j * y[1]),
            -I * (h2 * y[1] - j * y[0]),
        ])
    }
}

/// Sampled two-mode trajectory on the grid `t_k = k·dt`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<TwoModeState>,
    pub substeps: usize,
    /// Step-halving agreement estimate (`0` for fixed-step runs).
    pub estimate: f64,
    pub converged: bool,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn observables(&self, tunneling: f64) -> Vec<TwoModeObservables> {
        self.states.iter().map(|s| observables(s, tunneling)).collect()
    }
}

fn check_grid(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t_end >= 0.0) {
        return Err(Error::invalid("t_end", format!("must be non-negative, got {t_end}")));
    }
    Ok(ode::output_steps(t_end, dt))
}

/// General driver used by the scenarios: `Γ(t)` from a schedule plus an
/// optional interaction term.
pub fn propagate_scheduled(
    state: &TwoModeState,
    system: &TwoModeSystem,
    t_end: f64,
    dt: f64,
    stepping: Stepping,
) -> Result<Trajectory> {
    let n = check_grid(t_end, dt)?;
    let (raw, substeps, estimate, converged) = match stepping {
        Stepping::Fixed => {
            let Ok(states) = ode::integrate_fixed(system, state.0, dt, n, 1);
            (states, 1, 0.0, true)
        }
        Stepping::Refined { rel_tol, max_levels } => {
            let Ok(r) = ode::integrate_refined(system, state.0, dt, n, rel_tol, max_levels);
            (r.states, r.substeps, r.estimate, r.converged)
        }
    };
    Ok(Trajectory {
        dt,
        states: raw.into_iter().map(TwoModeState).collect(),
        substeps,
        estimate,
        converged,
    })
}

/// Fixed-step RK4 solution of `i∂tψ = H⁽²⁾ψ`.
pub fn propagate(state: &TwoModeState, params: &TwoModeParams, t_end: f64, dt: f64) -> Result<Trajectory> {
    propagate_with(state, params, t_end, dt, Stepping::Fixed)
}

pub fn propagate_with(
    state: &TwoModeState,
    params: &TwoModeParams,
    t_end: f64,
    dt: f64,
    stepping: Stepping,
) -> Result<Trajectory> {
    let system = TwoModeSystem {
        tunneling: params.tunneling,
        schedule: GammaSchedule::Constant(params.gamma),
        interaction: 0.0,
    };
    propagate_scheduled(state, &system, t_end, dt, stepping)
}

/// Mean-field two-mode model, diagonal augmented by `c(|ψ1|², |ψ2|²)`.
pub fn nonlinear_propagate(
    state: &TwoModeState,
    params: &TwoModeParams,
    interaction: f64,
    t_end: f64,
    dt: f64,
    stepping: Stepping,
) -> Result<Trajectory> {
    let system = TwoModeSystem {
        tunneling: params.tunneling,
        schedule: GammaSchedule::Constant(params.gamma),
        interaction,
    };
    propagate_scheduled(state, &system, t_end, dt, stepping)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(j: f64, g: f64) -> TwoModeParams {
        TwoModeParams::new(j, g).unwrap()
    }

    fn apply(h: &[[C64; 2]; 2], v: &TwoModeState) -> [C64; 2] {
        [
            h[0][0] * v.0[0] + h[0][1] * v.0[1],
            h[1][0] * v.0[0] + h[1][1] * v.0[1],
        ]
    }

    #[test]
    fn hermitian_eigenpairs() {
        let es = eigensystem(&p(1.0, 0.0));
        assert_eq!(es.plus.value, re(1.0));
        assert_eq!(es.minus.value, re(-1.0));
        let v = es.plus.normalized.0;
        assert!((v[0] + v[1]).norm() < 1e-15, "E+ vector ∝ (1, -1)");
        let v = es.minus.normalized.0;
        assert!((v[0] - v[1]).norm() < 1e-15, "E- vector ∝ (1, 1)");
    }

    #[test]
    fn unbroken_and_broken_values() {
        let es = eigensystem(&p(1.0, 0.5));
        assert!((es.plus.value - re(0.75f64.sqrt())).norm() < 1e-15);
        assert!((es.plus.value.re - 0.86603).abs() < 1e-5);
        let es = eigensystem(&p(1.0, 2.0));
        assert!((es.plus.value - C64::new(0.0, 3f64.sqrt())).norm() < 1e-15);
        assert!((es.minus.value - C64::new(0.0, -(3f64.sqrt()))).norm() < 1e-15);
    }

    #[test]
    fn eigenvectors_satisfy_eigen_equation() {
        for &g in &[0.0, 0.3, 0.9, 1.7, -0.4] {
            let params = p(1.0, g);
            let h = params.hamiltonian();
            let es = eigensystem(&params);
            for pair in [es.plus, es.minus] {
                let hv = apply(&h, &pair.vector);
                for i in 0..2 {
                    assert!((hv[i] - pair.value * pair.vector.0[i]).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn exceptional_point_is_flagged() {
        let es = eigensystem(&p(1.0, 1.0));
        assert!(es.degenerate);
        assert_eq!(es.plus.value, es.minus.value);
        assert_eq!(es.plus.vector, es.minus.vector);
        assert!(!eigensystem(&p(1.0, 0.999)).degenerate);
    }

    #[test]
    fn pt_residual_cases() {
        let sym = TwoModeState::new(re(1.0), re(1.0));
        assert_eq!(pt_symmetry_residual(&sym).unwrap(), 0.0);
        let unbroken = eigensystem(&p(1.0, 0.5)).plus.vector;
        assert!(pt_symmetry_residual(&unbroken).unwrap() <= 1e-12);
        let broken = eigensystem(&p(1.0, 2.0)).plus.vector;
        assert!(pt_symmetry_residual(&broken).unwrap() > 0.1);
        let zero = TwoModeState::new(re(0.0), re(0.0));
        assert!(matches!(pt_symmetry_residual(&zero), Err(Error::ZeroState)));
    }

    #[test]
    fn observable_examples() {
        let s = 0.5f64.sqrt();
        let o = observables(&TwoModeState::new(re(s), re(s)), 1.0);
        assert!((o.n1 - 0.5).abs() < 1e-15 && (o.n2 - 0.5).abs() < 1e-15 && o.j12 == 0.0);
        let o = observables(&TwoModeState::new(re(s), C64::new(0.0, s)), 1.0);
        // iJ(ψ1ψ2* − ψ1*ψ2) with ψ = (1, i)/√2: i·((−i) − i)/2 = 1
        assert!((o.j12 - 1.0).abs() < 1e-15);
        let o = observables(&TwoModeState::new(re(1.0), re(0.0)), 3.0);
        assert_eq!((o.n1, o.n2, o.j12), (1.0, 0.0, 0.0));
    }

    #[test]
    fn observable_rhs_examples() {
        let params = p(1.0, 0.5);
        let stat = TwoModeObservables { n1: 0.5, n2: 0.5, j12: 0.5 };
        assert_eq!(observable_ode_rhs(&stat, &params), (0.0, 0.0, 0.0));
        let o = TwoModeObservables { n1: 1.0, n2: 0.0, j12: 0.0 };
        assert_eq!(observable_ode_rhs(&o, &p(1.0, 0.0)), (0.0, 0.0, 2.0));
    }

    #[test]
    fn rabi_solution() {
        let traj = propagate_with(
            &TwoModeState::new(re(1.0), re(0.0)),
            &p(1.0, 0.0),
            5.0,
            0.01,
            Stepping::refined(1e-11),
        )
        .unwrap();
        for (k, o) in traj.observables(1.0).iter().enumerate() {
            let t = traj.time(k);
            assert!((o.n1 - t.cos().powi(2)).abs() < 1e-9);
            assert!((o.n2 - t.sin().powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenstate_is_stationary() {
        let params = p(1.0, 0.5);
        let start = eigensystem(&params).plus.normalized;
        let traj = propagate(&start, &params, 10.0, 0.01).unwrap();
        for o in traj.observables(1.0) {
            assert!((o.n1 - 0.5).abs() < 1e-9 && (o.n2 - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_interaction_matches_linear() {
        let params = p(1.0, 0.3);
        let s = TwoModeState::new(C64::new(0.6, 0.1), C64::new(-0.2, 0.7));
        let a = propagate(&s, &params, 3.0, 0.01).unwrap();
        let b = nonlinear_propagate(&s, &params, 0.0, 3.0, 0.01, Stepping::Fixed).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn symmetric_state_stays_symmetric_with_interaction() {
        let s = 0.5f64.sqrt();
        let traj = nonlinear_propagate(
            &TwoModeState::new(re(s), re(s)),
            &p(1.0, 0.0),
            2.5,
            5.0,
            0.01,
            Stepping::Fixed,
        )
        .unwrap();
        for o in traj.observables(1.0) {
            assert!((o.n1 - o.n2).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_grid_and_params() {
        assert!(TwoModeParams::new(0.0, 0.1).is_err());
        let s = TwoModeState::new(re(1.0), re(0.0));
        assert!(propagate(&s, &p(1.0, 0.0), 1.0, 0.0).is_err());
        assert!(propagate(&s, &p(1.0, 0.0), -1.0, 0.1).is_err());
    }
}
