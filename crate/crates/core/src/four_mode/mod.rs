//! Hermitian four-well mode model with feedback-controlled outer wells.
//!
//! Wells are indexed `0..=3`; 1 and 2 are the middle pair, 0 and 3 the
//! reservoirs. The Hamiltonian is real, symmetric and tridiagonal:
//!
//! ```text
//! [ E0 + c n0   -J01                         ]
//! [ -J01        c n1     -J12                ]
//! [             -J12     c n2      -J23      ]
//! [                      -J23      E3 + c n3 ]
//! ```
//!
//! At every instant the controller sets `J01 = d C13`, `J23 = d C02` and
//! solves a 2×2 linear system for `(E0, E3)` such that the reservoir currents
//! evolve as `∂t j01 = ∂t(2Γn1)` and `∂t j23 = ∂t(2Γn2)`. With the conditions
//! `j01 = 2Γn1`, `j23 = 2Γn2` imposed at `t = 0`, the middle pair then obeys
//! the PT-symmetric two-mode dynamics.

mod trajectory;

pub use trajectory::{
    run_trajectory, Perturbation, RunOptions, Sample, Termination, TrajectoryRecord,
};

use crate::init::GammaSchedule;
use crate::ode::{self, OdeSystem};
use crate::two_mode::TwoModeState;
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Default singularity threshold for the on-site controller, relative to the
/// product of the row norms of its 2×2 matrix.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourModeState(pub [C64; 4]);

impl FourModeState {
    pub fn populations(&self) -> [f64; 4] {
        self.0.map(|z| z.norm_sqr())
    }

    pub fn total(&self) -> f64 {
        self.populations().iter().sum()
    }

    pub fn middle(&self) -> TwoModeState {
        TwoModeState([self.0[1], self.0[2]])
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self(self.0.map(|z| z * factor))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourModeParams {
    pub e0: f64,
    pub e3: f64,
    pub j01: f64,
    pub j12: f64,
    pub j23: f64,
    /// Mean-field interaction strength `c`.
    pub c: f64,
    /// Controller scale `d` in `J01 = d C13`, `J23 = d C02`.
    pub d: f64,
}

impl FourModeParams {
    /// Middle tunneling and controller scale; the controlled entries start at 0.
    pub fn controlled(j12: f64, c: f64, d: f64) -> Result<Self> {
        if !(j12 > 0.0) {
            return Err(Error::invalid("j12", format!("must be positive, got {j12}")));
        }
        if !c.is_finite() || !d.is_finite() {
            return Err(Error::invalid("d", "c and d must be finite"));
        }
        Ok(Self {
            e0: 0.0,
            e3: 0.0,
            j01: 0.0,
            j12,
            j23: 0.0,
            c,
            d,
        })
    }

    pub fn tunneling(&self) -> [f64; 3] {
        [self.j01, self.j12, self.j23]
    }
}

/// Populations, correlators `C_kl = ψkψl* + ψk*ψl`, modified currents
/// `j̃_kl = i(ψkψl* − ψk*ψl)` and the physical nearest-neighbour currents
/// `j_kl = J_kl j̃_kl`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourModeObservables {
    pub n: [f64; 4],
    pub corr: [[f64; 4]; 4],
    pub modified: [[f64; 4]; 4],
    pub j01: f64,
    pub j12: f64,
    pub j23: f64,
}

impl FourModeObservables {
    #[inline]
    pub fn c(&self, k: usize, l: usize) -> f64 {
        self.corr[k][l]
    }

    #[inline]
    pub fn jt(&self, k: usize, l: usize) -> f64 {
        self.modified[k][l]
    }
}

pub fn observables(state: &FourModeState, params: &FourModeParams) -> FourModeObservables {
    let psi = &state.0;
    let mut corr = [[0.0; 4]; 4];
    let mut modified = [[0.0; 4]; 4];
    for k in 0..4 {
        for l in 0..4 {
            let rho = psi[k] * psi[l].conj();
            corr[k][l] = 2.0 * rho.re;
            modified[k][l] = -2.0 * rho.im;
        }
    }
    FourModeObservables {
        n: state.populations(),
        corr,
        modified,
        j01: params.j01 * modified[0][1],
        j12: params.j12 * modified[1][2],
        j23: params.j23 * modified[2][3],
    }
}

/// `(J01, J23) = (d C13, d C02)`.
pub fn controller_tunneling(obs: &FourModeObservables, d: f64) -> (f64, f64) {
    (d * obs.c(1, 3), d * obs.c(0, 2))
}

/// The 2×2 system `M (E0, E3)ᵀ = v` whose solution makes the reservoir
/// currents follow their targets. `params.j01`/`j23` must already hold the
/// controller tunneling.
///
/// Targets: `∂t j01 = 2Γ̇n1 + 2Γ(j01 − j12)` and
/// `∂t j23 = 2Γ̇n2 + 2Γ(j12 − j23)`. With interaction the diagonal
/// `(E0 + c n0, c n1, c n2, E3 + c n3)` enters the current derivatives; the
/// known `c` terms are moved to the right-hand side.
pub fn onsite_system(
    obs: &FourModeObservables,
    params: &FourModeParams,
    gamma: f64,
    gamma_dot: f64,
) -> ([[f64; 2]; 2], [f64; 2]) {
    let FourModeParams { j01, j12, j23, c, d, .. } = *params;
    let n = &obs.n;
    let cc = |k, l| obs.c(k, l);
    let jt = |k, l| obs.jt(k, l);
    let cur01 = j01 * jt(0, 1);
    let cur12 = j12 * jt(1, 2);
    let cur23 = j23 * jt(2, 3);

    let m = [
        [j01 * cc(0, 1), d * jt(0, 1) * jt(1, 3)],
        [-d * jt(0, 2) * jt(2, 3), -j23 * cc(2, 3)],
    ];

    let target0 = 2.0 * gamma_dot * n[1] + 2.0 * gamma * (cur01 - cur12);
    let target3 = 2.0 * gamma_dot * n[2] + 2.0 * gamma * (cur12 - cur23);

    let v0 = target0
        - 2.0 * j01 * j01 * (n[0] - n[1])
        - j01 * j12 * cc(0, 2)
        - d * (j01 * jt(0, 3) + j12 * jt(2, 3) - j23 * jt(1, 2)) * jt(0, 1)
        - c * (j01 * (n[0] - n[1]) * cc(0, 1) - d * jt(0, 1) * (n[1] - n[3]) * jt(1, 3));
    let v3 = target3 - 2.0 * j23 * j23 * (n[2] - n[3]) + j23 * j12 * cc(1, 3)
        - d * (j01 * jt(1, 2) - j12 * jt(0, 1) - j23 * jt(0, 3)) * jt(2, 3)
        - c * (j23 * (n[2] - n[3]) * cc(2, 3) - d * jt(2, 3) * (n[0] - n[2]) * jt(0, 2));

    (m, [v0, v3])
}

/// Solves the on-site system in closed form. Fails with
/// [`Error::NearSingularController`] when `|det| < threshold·‖row0‖‖row1‖`.
pub fn controller_onsite(
    obs: &FourModeObservables,
    params: &FourModeParams,
    gamma: f64,
    gamma_dot: f64,
    threshold: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let (m, v) = onsite_system(obs, params, gamma, gamma_dot);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].hypot(m[0][1]) * m[1][0].hypot(m[1][1]);
    if !(det.abs() >= threshold * scale) || scale == 0.0 {
        return Err(Error::NearSingularController { det, t });
    }
    let e0 = (m[1][1] * v[0] - m[0][1] * v[1]) / det;
    let e3 = (m[0][0] * v[1] - m[1][0] * v[0]) / det;
    Ok((e0, e3))
}

/// Full controller: returns `params` with `J01, J23, E0, E3` set from `state`.
pub fn apply_controller(
    state: &FourModeState,
    params: &FourModeParams,
    gamma: f64,
    gamma_dot: f64,
    threshold: f64,
    t: f64,
) -> Result<FourModeParams> {
    let mut p = *params;
    let obs = observables(state, &p);
    let (j01, j23) = controller_tunneling(&obs, p.d);
    p.j01 = j01;
    p.j23 = j23;
    let (e0, e3) = controller_onsite(&obs, &p, gamma, gamma_dot, threshold, t)?;
    p.e0 = e0;
    p.e3 = e3;
    Ok(p)
}

/// Real symmetric tridiagonal Hamiltonian including the mean-field diagonal.
pub fn hamiltonian(state: &FourModeState, params: &FourModeParams) -> [[f64; 4]; 4] {
    let n = state.populations();
    let c = params.c;
    let mut h = [[0.0; 4]; 4];
    h[0][0] = params.e0 + c * n[0];
    h[1][1] = c * n[1];
    h[2][2] = c * n[2];
    h[3][3] = params.e3 + c * n[3];
    for (k, &j) in params.tunneling().iter().enumerate() {
        h[k][k + 1] = -j;
        h[k + 1][k] = -j;
    }
    h
}

/// Tridiagonal product `Hψ`.
pub fn apply_hamiltonian(h: &[[f64; 4]; 4], psi: &[C64; 4]) -> [C64; 4] {
    std::array::from_fn(|k| {
        let mut acc = psi[k] * h[k][k];
        if k > 0 {
            acc += psi[k - 1] * h[k][k - 1];
        }
        if k < 3 {
            acc += psi[k + 1] * h[k][k + 1];
        }
        acc
    })
}

/// Deviations from the equivalence conditions
/// `j01 = 2Γn1`, `j23 = 2Γn2`, `J01 C02 = J23 C13`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConditionResiduals {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl ConditionResiduals {
    pub fn max_abs(&self) -> f64 {
        self.r1.abs().max(self.r2.abs()).max(self.r3.abs())
    }
}

pub fn condition_residuals(state: &FourModeState, params: &FourModeParams, gamma: f64) -> ConditionResiduals {
    let obs = observables(state, params);
    ConditionResiduals {
        r1: obs.j01 - 2.0 * gamma * obs.n[1],
        r2: obs.j23 - 2.0 * gamma * obs.n[2],
        // J01 C02 − J23 C13, regrouped around the controller law so that the
        // part fixed by J01 = d C13, J23 = d C02 cancels without rounding.
        r3: (params.j01 - params.d * obs.c(1, 3)) * obs.c(0, 2)
            - (params.j23 - params.d * obs.c(0, 2)) * obs.c(1, 3),
    }
}

/// The controlled, state-dependent generator `ψ' = −iH(ψ, t)ψ`.
#[derive(Clone, Copy, Debug)]
pub struct ControlledSystem {
    pub base: FourModeParams,
    pub schedule: GammaSchedule,
    pub threshold: f64,
    /// Multiplicative factors on `(E0, E3, J01, J23)` after the controller.
    pub factors: [f64; 4],
}

impl ControlledSystem {
    pub fn new(base: FourModeParams, schedule: GammaSchedule) -> Self {
        Self {
            base,
            schedule,
            threshold: SINGULAR_THRESHOLD,
            factors: [1.0; 4],
        }
    }

    /// Controller output at `(t, ψ)`, including any perturbation factors.
    pub fn controls(&self, t: f64, state: &FourModeState) -> Result<FourModeParams> {
        let (g, gd) = self.schedule.eval(t);
        let mut p = apply_controller(state, &self.base, g, gd, self.threshold, t)?;
        p.e0 *= self.factors[0];
        p.e3 *= self.factors[1];
        p.j01 *= self.factors[2];
        p.j23 *= self.factors[3];
        Ok(p)
    }
}

impl OdeSystem<C64, 4> for ControlledSystem {
    type Error = Error;

    fn rhs(&self, t: f64, y: &[C64; 4]) -> Result<[C64; 4]> {
        let state = FourModeState(*y);
        let p = self.controls(t, &state)?;
        let h = hamiltonian(&state, &p);
        Ok(apply_hamiltonian(&h, y).map(|z| -I * z))
    }
}

/// One RK4 step of the controlled dynamics from `t` to `t + dt`. The
/// controller is re-solved at every stage.
pub fn step(
    state: &FourModeState,
    schedule: GammaSchedule,
    params: &FourModeParams,
    t: f64,
    dt: f64,
) -> Result<FourModeState> {
    let sys = ControlledSystem::new(*params, schedule);
    ode::rk4_step(&sys, t, &state.0, dt).map(FourModeState)
}
