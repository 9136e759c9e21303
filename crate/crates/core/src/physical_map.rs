//! Matrix elements of the four-mode model for a trap made of four Gaussian
//! beams, `V(r) = Σ V_i exp[−2x²/wx² − 2y²/wy² − 2(z − s_i)²/wz²]`, in the
//! frozen-Gaussian ansatz `ψ = Σ d_k exp[−Ax x² − Ay y² − Az (z − q_k)²]`.
//!
//! Inside this module everything is dimensionless: lengths in `l` (the
//! distance of the middle wells), energies in `E_l = ħ²/(m l²)`, times in
//! `t_l = ħ/E_l`. Outer-well centers are written as `q0 = −3/2 + δ0` and
//! `q3 = 3/2 + δ3`.

use crate::four_mode::{FourModeParams, FourModeState};
use crate::init::hermitian_ground_state;
use crate::par::{self, Execution};
use crate::quadrature;
use crate::roots::{self, NewtonOptions};
use crate::simplex::{self, SimplexOptions};
use crate::{Error, Result, C64};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
pub const RB87_MASS_U: f64 = 86.909_180_527;

/// SI constants of the condensate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    pub scattering_length: f64,
    pub particles: f64,
}

impl PhysicalConstants {
    /// ⁸⁷Rb, `N = 10⁵`, `a_s = 10.9 a_B`.
    pub fn rubidium87() -> Self {
        Self {
            hbar: HBAR,
            mass: RB87_MASS_U * ATOMIC_MASS_UNIT,
            scattering_length: 10.9 * BOHR_RADIUS,
            particles: 1e5,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("scattering_length", self.scattering_length),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.particles >= 0.0) {
            return Err(Error::invalid("particles", "must be non-negative"));
        }
        Ok(())
    }
}

/// Unit system built on the middle-well distance `l` (SI).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalUnits {
    pub length: f64,
    /// `E_l = ħ²/(m l²)` in joule.
    pub energy: f64,
    /// `t_l = ħ/E_l` in seconds.
    pub time: f64,
}

impl PhysicalUnits {
    /// `E_l/h` in hertz.
    pub fn energy_hz(&self) -> f64 {
        self.energy / PLANCK
    }
}

pub fn physical_units(l: f64, constants: &PhysicalConstants) -> Result<PhysicalUnits> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::invalid("l", format!("must be positive, got {l}")));
    }
    constants.validate()?;
    let energy = constants.hbar * constants.hbar / (constants.mass * l * l);
    Ok(PhysicalUnits {
        length: l,
        energy,
        time: constants.hbar / energy,
    })
}

/// Particle number and scattering length in units of `l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Condensate {
    pub particles: f64,
    pub scattering_length: f64,
}

impl Condensate {
    pub fn new(constants: &PhysicalConstants, units: &PhysicalUnits) -> Self {
        Self {
            particles: constants.particles,
            scattering_length: constants.scattering_length / units.length,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapGeometry {
    /// `V0..V3`, negative.
    pub depths: [f64; 4],
    /// Well positions `s_z^i` along z.
    pub shifts: [f64; 4],
    /// Beam widths `(wx, wy, wz)`.
    pub widths: [f64; 3],
}

impl TrapGeometry {
    /// Equidistant wells at `−3/2, −1/2, 1/2, 3/2` with
    /// `V = (−122, −80, −80, −122)`, `w = (4, 4, 1/2)`.
    pub fn reference() -> Self {
        Self {
            depths: [-122.0, -80.0, -80.0, -122.0],
            shifts: [-1.5, -0.5, 0.5, 1.5],
            widths: [4.0, 4.0, 0.5],
        }
    }

    /// Same middle wells and widths, outer wells replaced.
    pub fn with_outer(&self, v0: f64, v3: f64, delta0: f64, delta3: f64) -> Self {
        let mut t = *self;
        t.depths[0] = v0;
        t.depths[3] = v3;
        t.shifts[0] = -1.5 + delta0;
        t.shifts[3] = 1.5 + delta3;
        t
    }

    /// `(δ0, δ3)`.
    pub fn deviations(&self) -> (f64, f64) {
        (self.shifts[0] + 1.5, self.shifts[3] - 1.5)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.depths.iter().all(|&v| v < 0.0 && v.is_finite()) {
            return Err(Error::invalid("depths", "well depths must be negative"));
        }
        if !self.widths.iter().all(|&w| w > 0.0 && w.is_finite()) {
            return Err(Error::invalid("widths", "beam widths must be positive"));
        }
        Ok(())
    }
}

/// Width parameters `A_α` shared by all Gaussians, and their centers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianAnsatz {
    pub widths: [f64; 3],
    pub centers: [f64; 4],
}

impl GaussianAnsatz {
    /// Centers pinned to the wells.
    pub fn pinned(trap: &TrapGeometry, widths: [f64; 3]) -> Self {
        Self {
            widths,
            centers: trap.shifts,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeElements {
    pub e: [f64; 4],
    /// `(J01, J12, J23)`.
    pub j: [f64; 3],
    pub c: f64,
}

impl ModeElements {
    /// Energy of the middle wells, subtracted to reach `E1 = E2 = 0`.
    pub fn reference_energy(&self) -> f64 {
        0.5 * (self.e[1] + self.e[2])
    }

    /// Four-mode parameters with on-site energies measured from the
    /// middle wells.
    pub fn model(&self, d: f64) -> FourModeParams {
        let r = self.reference_energy();
        FourModeParams {
            e0: self.e[0] - r,
            e3: self.e[3] - r,
            j01: self.j[0],
            j12: self.j[1],
            j23: self.j[2],
            c: self.c,
            d,
        }
    }
}

/// `β_α = sqrt(A w² / (1 + A w²))`.
pub fn beta(a: f64, w: f64) -> f64 {
    let x = a * w * w;
    (x / (1.0 + x)).sqrt()
}

/// `γ = exp[−(Az/2) Δq²]`.
pub fn overlap_factor(az: f64, dq: f64) -> f64 {
    (-0.5 * az * dq * dq).exp()
}

fn beta3(a: &[f64; 3], w: &[f64; 3]) -> f64 {
    beta(a[0], w[0]) * beta(a[1], w[1]) * beta(a[2], w[2])
}

pub fn site_energy(v: f64, a: &[f64; 3], w: &[f64; 3]) -> f64 {
    0.5 * (a[0] + a[1] + a[2]) + v * beta3(a, w)
}

pub fn pair_tunneling(vl: f64, vk: f64, dq: f64, a: &[f64; 3], w: &[f64; 3]) -> f64 {
    let az = a[2];
    let g = overlap_factor(az, dq);
    let p = 1.0 / (1.0 + az * w[2] * w[2]);
    0.5 * az * az * dq * dq * g + (vl + vk) * beta3(a, w) * g * (0.5 - g.powf(p))
}

pub fn interaction(a: &[f64; 3], cond: &Condensate) -> f64 {
    4.0 * cond.particles * cond.scattering_length * (a[0] * a[1] * a[2] / std::f64::consts::PI).sqrt()
}

/// Closed-form nearest-neighbour matrix elements.
pub fn matrix_elements(trap: &TrapGeometry, ansatz: &GaussianAnsatz, cond: &Condensate) -> ModeElements {
    let a = &ansatz.widths;
    let w = &trap.widths;
    let q = &ansatz.centers;
    let v = &trap.depths;
    ModeElements {
        e: std::array::from_fn(|k| site_energy(v[k], a, w)),
        j: std::array::from_fn(|k| pair_tunneling(v[k + 1], v[k], q[k + 1] - q[k], a, w)),
        c: interaction(a, cond),
    }
}

/// `⟨ψ|H_lin|ψ⟩ + (c/2) Σ |d_k|⁴` for normalized amplitudes.
pub fn mean_field_energy(trap: &TrapGeometry, ansatz: &GaussianAnsatz, cond: &Condensate, amplitudes: &[C64; 4]) -> f64 {
    energy_of(&matrix_elements(trap, ansatz, cond), amplitudes)
}

fn energy_of(m: &ModeElements, d: &[C64; 4]) -> f64 {
    let n = d.map(|z| z.norm_sqr());
    let onsite: f64 = (0..4).map(|k| m.e[k] * n[k] + 0.5 * m.c * n[k] * n[k]).sum();
    let hop: f64 = (0..3).map(|k| -2.0 * m.j[k] * (d[k].conj() * d[k + 1]).re).sum();
    onsite + hop
}

/// Self-consistent ground state of the elements and its mean-field energy.
pub fn ground_state_energy(m: &ModeElements) -> Result<(FourModeState, f64)> {
    let g = hermitian_ground_state(&m.model(0.0))?;
    Ok((g, energy_of(m, &g.0)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthFit {
    pub ansatz: GaussianAnsatz,
    pub energy: f64,
    pub ground_state: FourModeState,
    pub iterations: usize,
}

/// Harmonic estimate `A = sqrt(|V|)/w` from the mean well depth.
pub fn harmonic_widths(trap: &TrapGeometry) -> [f64; 3] {
    let v = trap.depths.iter().map(|v| v.abs()).sum::<f64>() / 4.0;
    trap.widths.map(|w| v.sqrt() / w)
}

/// Minimizes the mean-field energy at the self-consistent ground state over
/// `A_α > 0` (simplex in `log A`). A trap with `wx = wy` is optimized with
/// `Ax = Ay` tied.
pub fn optimize_widths(trap: &TrapGeometry, cond: &Condensate, initial: [f64; 3]) -> Result<WidthFit> {
    trap.validate()?;
    if !initial.iter().all(|&a| a > 0.0 && a.is_finite()) {
        return Err(Error::invalid("initial widths", "must be positive"));
    }
    let tied = trap.widths[0] == trap.widths[1];
    let expand = |x: &[f64]| -> [f64; 3] {
        if tied {
            [x[0].exp(), x[0].exp(), x[1].exp()]
        } else {
            [x[0].exp(), x[1].exp(), x[2].exp()]
        }
    };
    let objective = |x: &[f64]| {
        let ansatz = GaussianAnsatz::pinned(trap, expand(x));
        ground_state_energy(&matrix_elements(trap, &ansatz, cond))
            .map(|(_, e)| e)
            .unwrap_or(f64::INFINITY)
    };
    let x0: Vec<f64> = if tied {
        vec![(initial[0] * initial[1]).sqrt().ln(), initial[2].ln()]
    } else {
        initial.iter().map(|a| a.ln()).collect()
    };
    let opts = SimplexOptions {
        step: 0.1,
        x_tol: 1e-10,
        max_iter: 20_000,
    };
    let m = simplex::minimize(objective, &x0, &opts);
    if !m.converged || !m.value.is_finite() {
        return Err(Error::NotConverged {
            what: "width optimization",
            iterations: m.iterations,
        });
    }
    let ansatz = GaussianAnsatz::pinned(trap, expand(&m.x));
    let (ground_state, energy) = ground_state_energy(&matrix_elements(trap, &ansatz, cond))?;
    Ok(WidthFit {
        ansatz,
        energy,
        ground_state,
        iterations: m.iterations,
    })
}

/// Absolute on-site energies and tunneling amplitudes of the outer wells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterTargets {
    pub e0: f64,
    pub e3: f64,
    pub j01: f64,
    pub j23: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapSolution {
    pub v0: f64,
    pub v3: f64,
    pub delta0: f64,
    pub delta3: f64,
}

const INVERSION_ACCEPT: f64 = 1e-10;

fn invert_outer(
    well: usize,
    e_target: f64,
    j_target: f64,
    trap: &TrapGeometry,
    a: &[f64; 3],
    exec: Execution,
) -> Result<(f64, f64)> {
    let w = &trap.widths;
    let (v_mid, q_mid, lattice) = match well {
        0 => (trap.depths[1], trap.shifts[1], -1.5),
        _ => (trap.depths[2], trap.shifts[2], 1.5),
    };
    let se = e_target.abs().max(1.0);
    let sj = j_target.abs().max(f64::MIN_POSITIVE);
    let residual = |x: [f64; 2]| {
        let [v, delta] = x;
        let dq = (lattice + delta - q_mid).abs();
        [
            (site_energy(v, a, w) - e_target) / se,
            (pair_tunneling(v, v_mid, dq, a, w) - j_target) / sj,
        ]
    };
    let v1 = trap.depths[1];
    let starts = roots::grid((1.5 * v1, 0.5 * v1, 5), (-0.1, 0.1, 5), true);
    let opts = NewtonOptions {
        tol: 1e-14,
        max_iter: 200,
        fd_step: 1e-7,
    };
    let found = roots::multistart(&residual, &starts, &opts, exec);
    // Newton with a finite-difference Jacobian may stall just above the
    // strict tolerance; accept anything within the contract and polish.
    let loose = NewtonOptions {
        tol: INVERSION_ACCEPT,
        ..opts
    };
    let mut best: Option<(f64, f64)> = None;
    for (i, r) in found.iter().enumerate() {
        let root = match r {
            Some(r) => Some(*r),
            None => roots::newton_2d(&residual, starts[i], &loose),
        };
        if let Some(root) = root {
            if root.x[0] < 0.0 && best.is_none_or(|(_, d)| root.x[1].abs() < d.abs()) {
                best = Some((root.x[0], root.x[1]));
            }
        }
    }
    best.ok_or(Error::OutOfRange { well })
}

/// Outer-well depths and displacements that reproduce the requested outer
/// matrix elements, with middle wells and widths held fixed. Each outer well
/// is an independent 2D problem; among several roots the one closest to the
/// equidistant lattice is returned.
pub fn invert_trap_parameters(
    targets: &OuterTargets,
    trap: &TrapGeometry,
    ansatz_widths: [f64; 3],
) -> Result<TrapSolution> {
    invert_trap_parameters_with(targets, trap, ansatz_widths, Execution::Sequential)
}

pub fn invert_trap_parameters_with(
    targets: &OuterTargets,
    trap: &TrapGeometry,
    ansatz_widths: [f64; 3],
    exec: Execution,
) -> Result<TrapSolution> {
    let (v0, delta0) = invert_outer(0, targets.e0, targets.j01, trap, &ansatz_widths, exec)?;
    let (v3, delta3) = invert_outer(3, targets.e3, targets.j23, trap, &ansatz_widths, exec)?;
    Ok(TrapSolution { v0, v3, delta0, delta3 })
}

/// Inverts a whole series of targets, one independent problem per entry.
pub fn invert_series(
    targets: &[OuterTargets],
    trap: &TrapGeometry,
    ansatz_widths: [f64; 3],
    exec: Execution,
) -> Vec<Result<TrapSolution>> {
    par::map(targets, exec, |t| invert_trap_parameters(t, trap, ansatz_widths))
}

/// Reference matrix elements from numerical quadrature of the overlap and
/// Hamiltonian integrals.
///
/// Each adjacent pair `(k, k+1)` is treated as a two-site problem with the
/// potential of those two wells only, symmetrically orthogonalized in closed
/// form. `J` is minus the orthogonalized off-diagonal element; `E_k` is the
/// diagonal element from the pair that joins `k` to its inner neighbour.
pub fn quadrature_elements(trap: &TrapGeometry, ansatz: &GaussianAnsatz, cond: &Condensate) -> ModeElements {
    const TOL: f64 = 1e-12;
    let [ax, ay, az] = ansatz.widths;
    let [wx, wy, wz] = trap.widths;
    let q = ansatz.centers;
    let span = |a: f64, lo: f64, hi: f64| (lo - 12.0 / a.sqrt(), hi + 12.0 / a.sqrt());
    let int = |f: &dyn Fn(f64) -> f64, (lo, hi): (f64, f64)| quadrature::integrate(f, lo, hi, TOL).value;

    // transverse factors: norm and potential matrix element
    let transverse = |a: f64, w: f64| {
        let dom = span(a, 0.0, 0.0);
        let norm = int(&|x| (-2.0 * a * x * x).exp(), dom);
        let pot = int(&|x| (-2.0 * a * x * x - 2.0 * x * x / (w * w)).exp(), dom);
        let kin = int(&|x| -0.5 * (4.0 * a * a * x * x - 2.0 * a) * (-2.0 * a * x * x).exp(), dom);
        (norm, pot, kin)
    };
    let (nx, px, kx) = transverse(ax, wx);
    let (ny, py, ky) = transverse(ay, wy);

    let pair = |k: usize| {
        let l = k + 1;
        let sites = [k, l];
        let dom = span(az, q[k].min(q[l]), q[k].max(q[l]));
        let g = |i: usize, z: f64| (-az * (z - q[i]).powi(2)).exp();
        let mut s = [[0.0; 2]; 2];
        let mut h = [[0.0; 2]; 2];
        for (a, &i) in sites.iter().enumerate() {
            for (b, &j) in sites.iter().enumerate() {
                let nz = int(&|z| g(i, z) * g(j, z), dom);
                let kz = int(&|z| -0.5 * g(i, z) * (4.0 * az * az * (z - q[j]).powi(2) - 2.0 * az) * g(j, z), dom);
                let vz: f64 = sites
                    .iter()
                    .map(|&m| {
                        trap.depths[m]
                            * int(&|z| g(i, z) * g(j, z) * (-2.0 * (z - trap.shifts[m]).powi(2) / (wz * wz)).exp(), dom)
                    })
                    .sum();
                s[a][b] = nx * ny * nz;
                h[a][b] = kx * ny * nz + nx * ky * nz + nx * ny * kz + px * py * vz;
            }
        }
        let x = inverse_sqrt_2x2(s);
        let ho = mul2(mul2(x, h), x);
        (ho[0][0], ho[1][1], -0.5 * (ho[0][1] + ho[1][0]))
    };
    let p01 = pair(0);
    let p12 = pair(1);
    let p23 = pair(2);

    // ∫φ⁴ of the normalized Gaussian, separable
    let quartic: f64 = [(ax, span(ax, 0.0, 0.0)), (ay, span(ay, 0.0, 0.0)), (az, span(az, 0.0, 0.0))]
        .iter()
        .map(|&(a, dom)| {
            let n = int(&|x| (-2.0 * a * x * x).exp(), dom);
            int(&|x| (-4.0 * a * x * x).exp(), dom) / (n * n)
        })
        .product();
    let c = 4.0 * std::f64::consts::PI * cond.scattering_length * cond.particles * quartic;

    ModeElements {
        e: [p01.0, p12.0, p12.1, p23.1],
        j: [p01.2, p12.2, p23.2],
        c,
    }
}

fn mul2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

/// `S^{-1/2}` of a symmetric positive definite 2×2 matrix, from
/// `sqrt(S) = (S + sqrt(det S)·1) / sqrt(tr S + 2 sqrt(det S))`.
fn inverse_sqrt_2x2(s: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let r = det.sqrt();
    let t = (s[0][0] + s[1][1] + 2.0 * r).sqrt();
    let m = [[(s[0][0] + r) / t, s[0][1] / t], [s[1][0] / t, (s[1][1] + r) / t]];
    let dm = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / dm, -m[0][1] / dm], [-m[1][0] / dm, m[0][0] / dm]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_for_rubidium_at_two_microns() {
        let u = physical_units(2e-6, &PhysicalConstants::rubidium87()).unwrap();
        assert!((u.energy_hz() / 29.1 - 1.0).abs() < 5e-3, "{}", u.energy_hz());
        assert!((u.time / 5.47e-3 - 1.0).abs() < 5e-3, "{}", u.time);
        let u2 = physical_units(4e-6, &PhysicalConstants::rubidium87()).unwrap();
        assert!((u.energy / u2.energy - 4.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_squares_to_inverse() {
        let s = [[2.0, 0.3], [0.3, 1.5]];
        let x = inverse_sqrt_2x2(s);
        let p = mul2(mul2(x, x), s);
        assert!((p[0][0] - 1.0).abs() < 1e-14 && (p[1][1] - 1.0).abs() < 1e-14);
        assert!(p[0][1].abs() < 1e-14 && p[1][0].abs() < 1e-14);
    }

    #[test]
    fn no_particles_no_interaction() {
        let trap = TrapGeometry::reference();
        let cond = Condensate {
            particles: 0.0,
            scattering_length: 0.1,
        };
        let m = matrix_elements(&trap, &GaussianAnsatz::pinned(&trap, [0.3, 0.3, 10.0]), &cond);
        assert_eq!(m.c, 0.0);
        assert_eq!(overlap_factor(9.0, 0.0), 1.0);
    }
}
