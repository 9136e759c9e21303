//! Initial states and the `Γ(t)` schedule.
//!
//! A four-mode run only reproduces the PT dynamics if `j01 = 2Γn1` and
//! `j23 = 2Γn2` hold at `t = 0`. [`embed_pt_state`] finds reservoir phases
//! that satisfy them for a prescribed middle state; the adiabatic protocol
//! instead starts from the Hermitian ground state at `Γ = 0`, where the
//! conditions hold trivially.

use std::f64::consts::PI;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::four_mode::{self, FourModeParams, FourModeState};
use crate::par::Execution;
use crate::roots::{self, NewtonOptions};
use crate::two_mode::{eigensystem, TwoModeParams, TwoModeState};
use crate::{re, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaSchedule {
    Constant(f64),
    /// `Γ(t) = Γf [1 − cos(πt/tf)] / 2` on `[0, tf]`, held at `Γf` afterwards.
    CosineRamp { gamma_f: f64, t_f: f64 },
}

impl GammaSchedule {
    pub fn cosine_ramp(gamma_f: f64, t_f: f64) -> Result<Self> {
        if !(t_f > 0.0) || !t_f.is_finite() {
            return Err(Error::invalid("t_f", format!("must be positive, got {t_f}")));
        }
        Ok(Self::CosineRamp { gamma_f, t_f })
    }

    /// `(Γ(t), Γ̇(t))`, the derivative analytic.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            Self::Constant(g) => (g, 0.0),
            Self::CosineRamp { gamma_f, t_f } => gamma_ramp(t, gamma_f, t_f),
        }
    }

    pub fn final_gamma(&self) -> f64 {
        match *self {
            Self::Constant(g) => g,
            Self::CosineRamp { gamma_f, .. } => gamma_f,
        }
    }
}

pub fn gamma_ramp(t: f64, gamma_f: f64, t_f: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= t_f {
        (gamma_f, 0.0)
    } else {
        let w = PI / t_f;
        (0.5 * gamma_f * (1.0 - (w * t).cos()), 0.5 * gamma_f * w * (w * t).sin())
    }
}

/// Oscillation frequency of the two-mode model at the final `Γ`.
pub fn default_frequency(j12: f64, gamma_f: f64) -> f64 {
    2.0 * (j12 * j12 - gamma_f * gamma_f).max(0.0).sqrt()
}

/// `min_t ω·Γf / |Γ̇(t)|` over 1000 points of the ramp; infinite for a
/// constant schedule.
///
/// The instantaneous ratio `Γ/Γ̇` vanishes as `t → 0` for every ramp that
/// starts at `Γ = 0`, so the rate is measured against the final value.
pub fn adiabaticity_margin(schedule: &GammaSchedule, omega: f64) -> f64 {
    match *schedule {
        GammaSchedule::Constant(_) => f64::INFINITY,
        GammaSchedule::CosineRamp { gamma_f, t_f } => {
            const POINTS: usize = 1000;
            (1..=POINTS)
                .map(|k| {
                    let t = t_f * (k as f64 - 0.5) / POINTS as f64;
                    let (_, gd) = gamma_ramp(t, gamma_f, t_f);
                    if gd == 0.0 {
                        f64::INFINITY
                    } else {
                        omega * gamma_f.abs() / gd.abs()
                    }
                })
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Normalized `ψ+` of the two-mode model: `n1 = n2 = 1/2` and `j12 = Γ`.
pub fn two_mode_stationary_middle(j12: f64, gamma: f64) -> Result<TwoModeState> {
    let p = TwoModeParams::new(j12, gamma)?;
    if gamma.abs() >= j12 {
        return Err(Error::BrokenPhase {
            gamma,
            tunneling: j12,
        });
    }
    Ok(eigensystem(&p).plus.normalized)
}

/// Normalized superposition `ψ+ + w ψ−` of the two eigenvectors.
pub fn oscillatory_middle(j12: f64, gamma: f64, weight: C64) -> Result<TwoModeState> {
    let p = TwoModeParams::new(j12, gamma)?;
    if gamma.abs() >= j12 {
        return Err(Error::BrokenPhase {
            gamma,
            tunneling: j12,
        });
    }
    let es = eigensystem(&p);
    let (a, b) = (es.plus.normalized.0, es.minus.normalized.0);
    TwoModeState([a[0] + weight * b[0], a[1] + weight * b[1]]).normalized()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbeddingSpec {
    pub middle: TwoModeState,
    pub n0: f64,
    pub n3: f64,
    pub gamma: f64,
    pub j12: f64,
    /// Controller scale; `None` picks `d` so that `max(|J01|, |J23|) = J12`.
    pub d: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Embedding {
    pub state: FourModeState,
    pub d: f64,
    /// Reservoir phases `(φ0, φ3)` in `[0, 2π)`.
    pub phases: (f64, f64),
}

fn reservoir_state(spec: &EmbeddingSpec, phi: [f64; 2]) -> FourModeState {
    FourModeState([
        C64::from_polar(spec.n0.sqrt(), phi[0]),
        spec.middle.0[0],
        spec.middle.0[1],
        C64::from_polar(spec.n3.sqrt(), phi[1]),
    ])
}

fn embed_fixed_d(spec: &EmbeddingSpec, d: f64, exec: Execution) -> Result<Embedding> {
    let n1 = spec.middle.0[0].norm_sqr();
    let n2 = spec.middle.0[1].norm_sqr();
    let g = spec.gamma;
    let base = FourModeParams::controlled(spec.j12, 0.0, d)?;
    let residual = |phi: [f64; 2]| {
        let s = reservoir_state(spec, phi);
        let o = four_mode::observables(&s, &base);
        let (j01, j23) = four_mode::controller_tunneling(&o, d);
        [j01 * o.jt(0, 1) - 2.0 * g * n1, j23 * o.jt(2, 3) - 2.0 * g * n2]
    };
    let starts = roots::grid((0.0, 2.0 * PI, 8), (0.0, 2.0 * PI, 8), false);
    let opts = NewtonOptions {
        tol: 1e-13,
        ..Default::default()
    };
    let found = roots::multistart(&residual, &starts, &opts, exec);

    // Prefer both tunneling amplitudes positive, then the largest smaller
    // amplitude, then j01 > 0. Negating both reservoirs maps roots to roots
    // with both signs flipped, so without the last rule the grid order would
    // pick between them and the choice would not follow a global phase.
    let mut best: Option<((bool, f64, bool), [f64; 2])> = None;
    for root in found.iter().flatten() {
        let s = reservoir_state(spec, root.x);
        let o = four_mode::observables(&s, &base);
        let (j01, j23) = four_mode::controller_tunneling(&o, d);
        let key = (j01 > 0.0 && j23 > 0.0, j01.abs().min(j23.abs()), j01 > 0.0);
        let better = |k: &(bool, f64, bool)| {
            if key.0 != k.0 {
                return key.0;
            }
            if (key.1 - k.1).abs() > 1e-9 * key.1.max(k.1) {
                return key.1 > k.1;
            }
            key.2 && !k.2
        };
        if best.as_ref().is_none_or(|(k, _)| better(k)) {
            best = Some((key, root.x));
        }
    }
    let Some((_, phi)) = best else {
        return Err(Error::NoEmbedding {
            n0: spec.n0,
            n3: spec.n3,
            d,
        });
    };
    let phi = phi.map(|p| p.rem_euclid(2.0 * PI));
    Ok(Embedding {
        state: reservoir_state(spec, phi),
        d,
        phases: (phi[0], phi[1]),
    })
}

/// Places the middle state between reservoirs `ψ0 = √n0 e^{iφ0}`,
/// `ψ3 = √n3 e^{iφ3}` and solves for the phases that satisfy the PT
/// conditions at `t = 0`.
pub fn embed_pt_state(spec: &EmbeddingSpec) -> Result<Embedding> {
    embed_pt_state_with(spec, Execution::default())
}

pub fn embed_pt_state_with(spec: &EmbeddingSpec, exec: Execution) -> Result<Embedding> {
    if !(spec.n0 > 0.0 && spec.n3 > 0.0) {
        return Err(Error::invalid("n0", "reservoir populations must be positive"));
    }
    if spec.middle.is_zero() {
        return Err(Error::ZeroState);
    }
    if let Some(d) = spec.d {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::invalid("d", format!("must be positive, got {d}")));
        }
        return embed_fixed_d(spec, d, exec);
    }
    let n_mid = spec.middle.0.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let mut d = spec.j12 / (2.0 * (n_mid * spec.n0.max(spec.n3)).sqrt());
    for _ in 0..60 {
        let e = embed_fixed_d(spec, d, exec)?;
        let p = FourModeParams::controlled(spec.j12, 0.0, d)?;
        let o = four_mode::observables(&e.state, &p);
        let (j01, j23) = four_mode::controller_tunneling(&o, d);
        let m = j01.abs().max(j23.abs());
        if m == 0.0 {
            return Ok(e);
        }
        let next = d * spec.j12 / m;
        if ((next - d) / d).abs() < 1e-13 {
            return embed_fixed_d(spec, next, exec);
        }
        d = next;
    }
    embed_fixed_d(spec, d, exec)
}

fn real_hamiltonian(params: &FourModeParams, n: &[f64; 4]) -> Matrix4<f64> {
    let c = params.c;
    let mut h = Matrix4::zeros();
    h[(0, 0)] = params.e0 + c * n[0];
    h[(1, 1)] = c * n[1];
    h[(2, 2)] = c * n[2];
    h[(3, 3)] = params.e3 + c * n[3];
    for (k, j) in params.tunneling().into_iter().enumerate() {
        h[(k, k + 1)] = -j;
        h[(k + 1, k)] = -j;
    }
    h
}

fn lowest_eigenvector(h: Matrix4<f64>) -> Vector4<f64> {
    let eig = SymmetricEigen::new(h);
    let k = eig.eigenvalues.imin();
    let v: Vector4<f64> = eig.eigenvectors.column(k).into();
    // phase fixing: largest component positive
    let big = v.iamax();
    if v[big] < 0.0 {
        -v
    } else {
        v
    }
}

/// Ground state of the Hermitian four-well system (`Γ = 0`), normalized to
/// unit total population and made real with the largest component positive.
///
/// With interaction the self-consistent state is found by imaginary-time
/// propagation with the exact exponential of the frozen mean-field
/// Hamiltonian, renormalized every step.
pub fn hermitian_ground_state(params: &FourModeParams) -> Result<FourModeState> {
    const MAX_ITER: usize = 2_000_000;
    let zero = [0.0; 4];
    let mut v = lowest_eigenvector(real_hamiltonian(params, &zero));
    if params.c != 0.0 {
        let diag = [params.e0, 0.0, 0.0, params.e3];
        let spread = diag.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - diag.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let scale = params
            .tunneling()
            .iter()
            .map(|j| j.abs())
            .chain([spread, params.c.abs()])
            .fold(0.0, f64::max);
        let tau = 0.1 / scale;
        let mut done = false;
        for _ in 0..MAX_ITER {
            let n = std::array::from_fn(|k| v[k] * v[k]);
            let h = real_hamiltonian(params, &n);
            let eig = SymmetricEigen::new(h);
            let shift = eig.eigenvalues.min();
            let expo = eig.eigenvectors
                * Matrix4::from_diagonal(&eig.eigenvalues.map(|e| (-(e - shift) * tau).exp()))
                * eig.eigenvectors.transpose();
            let next = (expo * v).normalize();
            let change = (next - v).norm();
            v = next;
            if change < 1e-12 {
                let n = std::array::from_fn(|k| v[k] * v[k]);
                let hv = real_hamiltonian(params, &n) * v;
                let mu = v.dot(&hv);
                if (hv - v * mu).norm() < 1e-11 * scale.max(1.0) {
                    done = true;
                    break;
                }
            }
        }
        if !done {
            return Err(Error::NotConverged {
                what: "imaginary-time ground state",
                iterations: MAX_ITER,
            });
        }
    }
    Ok(FourModeState(std::array::from_fn(|k| re(v[k]))))
}
