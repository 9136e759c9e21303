//! The scenarios behind the command line: build the initial state and the
//! controller from a [`ScenarioConfig`], run it, compare the middle wells
//! with the two-mode model and write the series.

use std::path::{Path, PathBuf};

use crate::config::{self, Auto, Entry, ScenarioConfig, ScenarioKind};
use crate::four_mode::{
    self, run_trajectory, ConditionResiduals, FourModeParams, FourModeState, Perturbation, RunOptions,
    Termination, TrajectoryRecord,
};
use crate::init::{self, EmbeddingSpec, GammaSchedule};
use crate::ode::Stepping;
use crate::par::{self, Execution};
use crate::physical_map::{
    self, Condensate, GaussianAnsatz, ModeElements, OuterTargets, PhysicalConstants, PhysicalUnits, TrapGeometry,
    TrapSolution,
};
use crate::series;
use crate::two_mode::{self, TwoModeSystem};
use crate::{Error, Result, C64};

/// Trap model behind the adiabatic and physical scenarios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapModel {
    pub trap: TrapGeometry,
    pub ansatz: GaussianAnsatz,
    pub elements: ModeElements,
    pub units: PhysicalUnits,
}

impl TrapModel {
    pub fn new(cfg: &config::TrapConfig) -> Result<Self> {
        let constants = PhysicalConstants {
            hbar: physical_map::HBAR,
            mass: cfg.mass * physical_map::ATOMIC_MASS_UNIT,
            scattering_length: cfg.scattering_length * physical_map::BOHR_RADIUS,
            particles: cfg.particles,
        };
        let units = physical_map::physical_units(cfg.l, &constants)?;
        let cond = Condensate::new(&constants, &units);
        let trap = TrapGeometry {
            depths: cfg.depths,
            shifts: [-1.5, -0.5, 0.5, 1.5],
            widths: cfg.widths,
        };
        let fit = physical_map::optimize_widths(&trap, &cond, physical_map::harmonic_widths(&trap))?;
        Ok(Self {
            trap,
            ansatz: fit.ansatz,
            elements: physical_map::matrix_elements(&trap, &fit.ansatz, &cond),
            units,
        })
    }
}

/// Everything needed to start a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    pub initial: FourModeState,
    pub params: FourModeParams,
    pub schedule: GammaSchedule,
    pub options: RunOptions,
    pub trap: Option<TrapModel>,
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared> {
    let mut options = RunOptions::new(cfg.t_end, cfg.dt);
    options.stepping = Stepping::refined(cfg.tol.integrator);
    options.initial_residual_tol = cfg.tol.initial_residual;
    options.reservoir_floor = cfg.reservoir_floor;

    if cfg.scenario.uses_trap() {
        let model = TrapModel::new(&cfg.trap)?;
        let mut elements = model.elements;
        if let Auto::Value(c) = cfg.c {
            elements.c = c;
        }
        let ground = init::hermitian_ground_state(&elements.model(0.0))?;
        let d = match cfg.d {
            Auto::Value(d) => d,
            // the trap is unchanged for t ≤ 0: J01 = d C13 at the ground state
            Auto::Auto => {
                let o = four_mode::observables(&ground, &elements.model(0.0));
                elements.j[0] / o.c(1, 3)
            }
        };
        let j12 = elements.j[1];
        return Ok(Prepared {
            initial: ground,
            params: elements.model(d),
            schedule: GammaSchedule::cosine_ramp(cfg.gamma * j12, cfg.t_f)?,
            options,
            trap: Some(TrapModel { elements, ..model }),
        });
    }

    let gamma = cfg.gamma * cfg.j12;
    let middle = match cfg.scenario {
        ScenarioKind::Stationary => init::two_mode_stationary_middle(cfg.j12, gamma)?,
        _ => init::oscillatory_middle(cfg.j12, gamma, C64::from_polar(cfg.weight, cfg.weight_phase))?,
    };
    // the reservoirs must outlast the run with room to spare: the controller
    // degenerates once one drains to the order of the middle population
    let default_reservoir = gamma.abs() * cfg.t_end + 4.0;
    let spec = EmbeddingSpec {
        middle,
        n0: cfg.n0.unwrap_or(default_reservoir),
        n3: cfg.n3.unwrap_or(default_reservoir),
        gamma,
        j12: cfg.j12,
        d: cfg.d.value(),
    };
    let embedding = init::embed_pt_state(&spec)?;
    let c = cfg.c.value().unwrap_or(0.0);
    Ok(Prepared {
        initial: embedding.state,
        params: FourModeParams::controlled(cfg.j12, c, embedding.d)?,
        schedule: GammaSchedule::Constant(gamma),
        options,
        trap: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    ToleranceFailure,
    InputError,
    NumericalFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::ToleranceFailure => 1,
            Status::InputError => 2,
            Status::NumericalFailure => 3,
        }
    }

    pub fn of_error(e: &Error) -> Self {
        if e.is_numerical() || matches!(e, Error::InitialConditionViolated { .. }) {
            Status::NumericalFailure
        } else {
            Status::InputError
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub scenario: ScenarioKind,
    pub status: Status,
    pub max_residuals: ConditionResiduals,
    /// Largest `|Σ n_k(t) − Σ n_k(0)|`.
    pub norm_drift: f64,
    /// Largest deviation of `(n1, n2, j12)` from the two-mode model.
    pub equivalence_error: f64,
    /// Largest deviation of `(n1, n2)` of the perturbed run.
    pub robustness_deviation: Option<f64>,
    pub termination: Option<Termination>,
    pub substeps: usize,
    pub estimate: f64,
    pub d: f64,
    pub max_displacement: Option<f64>,
    /// Human-readable reasons for a non-success status.
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn render(&self) -> String {
        let mut s = format!("scenario = {}\n", self.scenario.name());
        s += &format!("status = {:?}\n", self.status);
        s += &format!("max_r1 = {:e}\nmax_r2 = {:e}\nmax_r3 = {:e}\n", self.max_residuals.r1, self.max_residuals.r2, self.max_residuals.r3);
        s += &format!("norm_drift = {:e}\n", self.norm_drift);
        s += &format!("equivalence_error = {:e}\n", self.equivalence_error);
        if let Some(r) = self.robustness_deviation {
            s += &format!("robustness_deviation = {r:e}\n");
        }
        if let Some(m) = self.max_displacement {
            s += &format!("max_displacement = {m:e}\n");
        }
        s += &format!("d = {}\nsubsteps = {}\nrefinement_estimate = {:e}\n", self.d, self.substeps, self.estimate);
        if let Some(t) = &self.termination {
            s += &format!("termination = {t}\n");
        }
        for f in &self.failures {
            s += &format!("failure = {f}\n");
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub prepared: Prepared,
    pub record: TrajectoryRecord,
    pub oracle: two_mode::Trajectory,
    pub trap: Option<Vec<TrapSolution>>,
    pub perturbed: Option<TrajectoryRecord>,
}

fn middle_deviation(a: &TrajectoryRecord, b: &TrajectoryRecord) -> f64 {
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x.obs.n[1] - y.obs.n[1]).abs().max((x.obs.n[2] - y.obs.n[2]).abs()))
        .fold(0.0, f64::max)
}

/// Runs one scenario; with `out` set, writes `series.csv`, `report.txt`
/// and, where applicable, `trap.csv` and `series_perturbed.csv` there.
pub fn run_scenario(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunOutput> {
    run_scenario_with(cfg, out, Execution::default())
}

pub fn run_scenario_with(cfg: &ScenarioConfig, out: Option<&Path>, exec: Execution) -> Result<RunOutput> {
    let prepared = prepare(cfg)?;
    let p = &prepared;
    let record = run_trajectory(&p.initial, p.schedule, &p.params, &p.options)?;
    let mut failures = Vec::new();

    // two-mode model from the same middle amplitudes
    let oracle_system = TwoModeSystem {
        tunneling: p.params.j12,
        schedule: p.schedule,
        interaction: p.params.c,
    };
    let oracle = two_mode::propagate_scheduled(
        &p.initial.middle(),
        &oracle_system,
        cfg.t_end,
        cfg.dt,
        Stepping::refined(cfg.tol.integrator * 1e-2),
    )?;
    let equivalence_error = record
        .samples
        .iter()
        .zip(oracle.observables(p.params.j12))
        .map(|(s, o)| {
            (s.obs.n[1] - o.n1)
                .abs()
                .max((s.obs.n[2] - o.n2).abs())
                .max((s.obs.j12 - o.j12).abs())
        })
        .fold(0.0, f64::max);

    let total0 = p.initial.total();
    let norm_drift = record
        .samples
        .iter()
        .map(|s| (s.obs.n.iter().sum::<f64>() - total0).abs())
        .fold(0.0, f64::max);
    let max_residuals = record.max_residuals();

    let mut status = Status::Success;
    if let Some(t) = record.termination {
        failures.push(format!("stopped early: {t}"));
        status = match t {
            Termination::SingularController { .. } => Status::NumericalFailure,
            Termination::ReservoirDepleted { .. } => Status::ToleranceFailure,
        };
    }
    if !record.converged {
        failures.push(format!("step refinement did not reach {:e} (estimate {:e})", cfg.tol.integrator, record.estimate));
        status = Status::NumericalFailure;
    }
    let mut tolerance = |ok: bool, msg: String| {
        if !ok {
            failures.push(msg);
            if status == Status::Success {
                status = Status::ToleranceFailure;
            }
        }
    };
    let res = max_residuals.r1.max(max_residuals.r2);
    tolerance(res <= cfg.tol.residual, format!("condition residual {res:e} > {:e}", cfg.tol.residual));
    tolerance(max_residuals.r3 == 0.0, format!("r3 = {:e} is not exactly zero", max_residuals.r3));
    tolerance(norm_drift <= cfg.tol.norm, format!("norm drift {norm_drift:e} > {:e}", cfg.tol.norm));
    let equivalence_tol = cfg.tol.equivalence.or((p.params.c == 0.0).then_some(1e-6));
    if let Some(tol) = equivalence_tol {
        tolerance(equivalence_error <= tol, format!("two-mode deviation {equivalence_error:e} > {tol:e}"));
    }

    let perturbed = match cfg.perturbation {
        Some(amplitude) => {
            let mut opts = p.options;
            opts.perturbation = Some(Perturbation {
                amplitude,
                seed: cfg.seed,
            });
            Some(run_trajectory(&p.initial, p.schedule, &p.params, &opts)?)
        }
        None => None,
    };
    let robustness_deviation = perturbed.as_ref().map(|r| middle_deviation(&record, r));
    if let (Some(r), Some(dev)) = (&perturbed, robustness_deviation) {
        tolerance(r.completed(), "perturbed run stopped early".into());
        tolerance(
            dev <= cfg.tol.robustness,
            format!("perturbed middle deviation {dev:e} > {:e}", cfg.tol.robustness),
        );
    }

    let trap = match (&p.trap, cfg.scenario) {
        (Some(model), ScenarioKind::Physical) => {
            let e_ref = model.elements.reference_energy();
            let targets: Vec<OuterTargets> = record
                .samples
                .iter()
                .map(|s| OuterTargets {
                    e0: s.params.e0 + e_ref,
                    e3: s.params.e3 + e_ref,
                    j01: s.params.j01,
                    j23: s.params.j23,
                })
                .collect();
            let solved = physical_map::invert_series(&targets, &model.trap, model.ansatz.widths, exec);
            Some(solved.into_iter().collect::<Result<Vec<_>>>()?)
        }
        _ => None,
    };
    let max_displacement = trap
        .as_ref()
        .map(|t| t.iter().map(|s| s.delta0.abs().max(s.delta3.abs())).fold(0.0, f64::max));

    let mut report = RunReport {
        scenario: cfg.scenario,
        status,
        max_residuals,
        norm_drift,
        equivalence_error,
        robustness_deviation,
        termination: record.termination,
        substeps: record.substeps,
        estimate: record.estimate,
        d: p.params.d,
        max_displacement,
        failures,
        files: Vec::new(),
    };

    if let Some(dir) = out {
        let path = dir.join("series.csv");
        series::write_series(&record, trap.as_deref(), &path)?;
        report.files.push(path);
        if let Some(t) = &trap {
            let times: Vec<f64> = record.samples.iter().map(|s| s.t).collect();
            let path = dir.join("trap.csv");
            series::write_text(&path, &series::render_trap(&times, t))?;
            report.files.push(path);
        }
        if let Some(r) = &perturbed {
            let path = dir.join("series_perturbed.csv");
            series::write_series(r, None, &path)?;
            report.files.push(path);
        }
        let path = dir.join("report.txt");
        report.files.push(path.clone());
        series::write_text(&path, &report.render())?;
    }

    Ok(RunOutput {
        report,
        prepared,
        record,
        oracle,
        trap,
        perturbed,
    })
}

/// `key=a:b:n` from the command line.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

impl std::str::FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("sweep", format!("expected key=a:b:n, got `{s}`"));
        let (key, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [a, b, n] = parts[..] else { return Err(bad()) };
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if n == 0 || !a.is_finite() || !b.is_finite() {
            return Err(bad());
        }
        let values = if n == 1 {
            vec![a]
        } else {
            // drop the last bits so 0.1:0.9:5 gives 0.3, not 0.30000000000000004
            (0..n)
                .map(|i| {
                    let v = a + (b - a) * i as f64 / (n - 1) as f64;
                    format!("{v:.12e}").parse().unwrap_or(v)
                })
                .collect()
        };
        Ok(Sweep {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// Runs the configuration once per sweep value, each into its own
/// directory `out/<key>_<index>`. Results come back in sweep order.
pub fn run_sweep(
    entries: &[Entry],
    sweep: &Sweep,
    out: Option<&Path>,
    exec: Execution,
) -> Vec<(f64, Result<RunOutput>)> {
    par::map_range(sweep.values.len(), exec, |i| {
        let v = sweep.values[i];
        let result = config::with_override(entries, &sweep.key, &v.to_string())
            .and_then(|e| config::from_entries(&e))
            .and_then(|cfg| {
                let dir = out.map(|o| o.join(format!("{}_{i:03}", sweep.key)));
                run_scenario_with(&cfg, dir.as_deref(), Execution::Sequential)
            });
        (v, result)
    })
}
