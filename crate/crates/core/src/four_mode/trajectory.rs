use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    apply_controller, condition_residuals, observables, ConditionResiduals, ControlledSystem,
    FourModeObservables, FourModeParams, FourModeState, SINGULAR_THRESHOLD,
};
use crate::init::GammaSchedule;
use crate::ode::{self, Stepping};
use crate::{Error, Result, C64};

/// Independent uniform multiplicative noise `1 + U[−a, a]` on
/// `(E0, E3, J01, J23)`, redrawn for every output interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub seed: u64,
}

impl Perturbation {
    fn factors(&self, intervals: usize) -> Vec<[f64; 4]> {
        let a = self.amplitude;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..intervals)
            .map(|_| std::array::from_fn(|_| 1.0 + rng.random_range(-a..=a)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    /// Output interval.
    pub dt: f64,
    pub stepping: Stepping,
    /// Largest `|r1|`, `|r2|` accepted at `t = 0`.
    pub initial_residual_tol: f64,
    /// A run stops once `n0` or `n3` drops below this.
    pub reservoir_floor: f64,
    pub singular_threshold: f64,
    pub perturbation: Option<Perturbation>,
}

impl RunOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            stepping: Stepping::refined(1e-10),
            initial_residual_tol: 1e-10,
            reservoir_floor: 1e-3,
            singular_threshold: SINGULAR_THRESHOLD,
            perturbation: None,
        }
    }
}

/// Why a run stopped before `t_end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    ReservoirDepleted { t: f64, well: usize },
    SingularController { t: f64, det: f64 },
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::ReservoirDepleted { t, well } => {
                write!(f, "reservoir well {well} depleted at t = {t}")
            }
            Termination::SingularController { t, det } => {
                write!(f, "on-site controller singular at t = {t} (det = {det:e})")
            }
        }
    }
}

/// Everything recorded at one output time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: FourModeState,
    pub obs: FourModeObservables,
    /// Controller output (including perturbation factors) at this sample.
    pub params: FourModeParams,
    pub gamma: f64,
    pub gamma_dot: f64,
    pub residuals: ConditionResiduals,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    pub termination: Option<Termination>,
    pub substeps: usize,
    pub estimate: f64,
    pub converged: bool,
}

impl TrajectoryRecord {
    pub fn completed(&self) -> bool {
        self.termination.is_none()
    }

    pub fn max_residuals(&self) -> ConditionResiduals {
        self.samples.iter().fold(ConditionResiduals::default(), |acc, s| ConditionResiduals {
            r1: acc.r1.max(s.residuals.r1.abs()),
            r2: acc.r2.max(s.residuals.r2.abs()),
            r3: acc.r3.max(s.residuals.r3.abs()),
        })
    }
}

struct Raw {
    states: Vec<[C64; 4]>,
    termination: Option<Termination>,
}

fn depleted(y: &[C64; 4], floor: f64) -> Option<usize> {
    [0, 3].into_iter().find(|&k| !(y[k].norm_sqr() >= floor))
}

fn integrate(
    sys: &ControlledSystem,
    factors: &[[f64; 4]],
    y0: [C64; 4],
    dt: f64,
    n: usize,
    substeps: usize,
    floor: f64,
) -> Result<Raw> {
    let h = dt / substeps as f64;
    let mut states = Vec::with_capacity(n + 1);
    states.push(y0);
    if let Some(well) = depleted(&y0, floor) {
        return Ok(Raw {
            states,
            termination: Some(Termination::ReservoirDepleted { t: 0.0, well }),
        });
    }
    let mut sys = *sys;
    let mut y = y0;
    for k in 0..n {
        let t0 = k as f64 * dt;
        if let Some(f) = factors.get(k) {
            sys.factors = *f;
        }
        for s in 0..substeps {
            match ode::rk4_step(&sys, t0 + s as f64 * h, &y, h) {
                Ok(next) => y = next,
                Err(Error::NearSingularController { det, t }) => {
                    return Ok(Raw {
                        states,
                        termination: Some(Termination::SingularController { t, det }),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        states.push(y);
        if let Some(well) = depleted(&y, floor) {
            return Ok(Raw {
                states,
                termination: Some(Termination::ReservoirDepleted {
                    t: (k + 1) as f64 * dt,
                    well,
                }),
            });
        }
    }
    Ok(Raw {
        states,
        termination: None,
    })
}

/// Integrates the controlled four-mode dynamics from `initial` and records
/// every observable at `t_k = k·dt`.
///
/// The initial state must satisfy `|r1|, |r2| ≤ initial_residual_tol`. The
/// run stops early (with [`TrajectoryRecord::termination`] set) when a
/// reservoir population falls below the floor or the on-site controller
/// becomes singular. The conditions are only monitored, never re-imposed.
pub fn run_trajectory(
    initial: &FourModeState,
    schedule: GammaSchedule,
    params: &FourModeParams,
    opts: &RunOptions,
) -> Result<TrajectoryRecord> {
    if !(opts.dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {}", opts.dt)));
    }
    if !(opts.t_end >= 0.0) {
        return Err(Error::invalid("t_end", format!("must be non-negative, got {}", opts.t_end)));
    }
    let (g0, gd0) = schedule.eval(0.0);
    let p0 = apply_controller(initial, params, g0, gd0, opts.singular_threshold, 0.0)?;
    let r = condition_residuals(initial, &p0, g0);
    let tol = opts.initial_residual_tol;
    if !(r.r1.abs() <= tol && r.r2.abs() <= tol) {
        return Err(Error::InitialConditionViolated {
            r1: r.r1,
            r2: r.r2,
            threshold: tol,
        });
    }

    let n = ode::output_steps(opts.t_end, opts.dt);
    let factors = opts.perturbation.map(|p| p.factors(n)).unwrap_or_default();
    let mut sys = ControlledSystem::new(*params, schedule);
    sys.threshold = opts.singular_threshold;
    let run = |substeps| integrate(&sys, &factors, initial.0, opts.dt, n, substeps, opts.reservoir_floor);

    let (raw, substeps, estimate, converged) = match opts.stepping {
        Stepping::Fixed => (run(1)?, 1, 0.0, true),
        Stepping::Refined { rel_tol, max_levels } => {
            let mut substeps = 1;
            let mut coarse = run(substeps)?;
            let mut estimate = f64::INFINITY;
            let mut converged = false;
            let mut history = Vec::with_capacity(max_levels);
            for _ in 0..max_levels {
                substeps *= 2;
                let fine = run(substeps)?;
                let m = coarse.states.len().min(fine.states.len());
                estimate = ode::max_relative_difference(&coarse.states[..m], &fine.states[..m]);
                coarse = fine;
                if estimate <= rel_tol {
                    converged = true;
                    break;
                }
                history.push(estimate);
                if ode::stalled(&history) {
                    break;
                }
            }
            (coarse, substeps, estimate, converged)
        }
    };

    let mut termination = raw.termination;
    let mut samples = Vec::with_capacity(raw.states.len());
    for (k, y) in raw.states.iter().enumerate() {
        let t = k as f64 * opts.dt;
        let state = FourModeState(*y);
        let mut s = sys;
        if let Some(f) = factors.get(k.min(n.saturating_sub(1))) {
            s.factors = *f;
        }
        let p = match s.controls(t, &state) {
            Ok(p) => p,
            Err(Error::NearSingularController { det, t }) => {
                termination.get_or_insert(Termination::SingularController { t, det });
                break;
            }
            Err(e) => return Err(e),
        };
        let (gamma, gamma_dot) = schedule.eval(t);
        samples.push(Sample {
            t,
            state,
            obs: observables(&state, &p),
            params: p,
            gamma,
            gamma_dot,
            residuals: condition_residuals(&state, &p, gamma),
        });
    }

    Ok(TrajectoryRecord {
        samples,
        termination,
        substeps,
        estimate,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_factors_are_seeded_and_bounded() {
        let p = Perturbation {
            amplitude: 1e-3,
            seed: 7,
        };
        let a = p.factors(50);
        assert_eq!(a, p.factors(50));
        assert!(a.iter().flatten().all(|f| (f - 1.0).abs() <= 1e-3));
        assert_ne!(a, Perturbation { seed: 8, ..p }.factors(50));
    }
}
