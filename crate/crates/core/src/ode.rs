//! Fixed-step classical Runge-Kutta integration on small fixed-size state
//! vectors, and a step-halving driver that refines the step until two
//! successive refinements agree.

use std::ops::{Add, Mul, Sub};

use crate::C64;

/// Scalar field the state vector lives in (real or complex).
pub trait Field: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn modulus_sqr(self) -> f64;
}

impl Field for f64 {
    #[inline]
    fn modulus_sqr(self) -> f64 {
        self * self
    }
}

impl Field for C64 {
    #[inline]
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
}

/// A first-order system `y' = f(t, y)`. The right-hand side may fail, e.g.
/// when a feedback law becomes singular.
pub trait OdeSystem<T: Field, const N: usize> {
    type Error;

    fn rhs(&self, t: f64, y: &[T; N]) -> Result<[T; N], Self::Error>;
}

impl<T: Field, const N: usize, F> OdeSystem<T, N> for F
where
    F: Fn(f64, &[T; N]) -> [T; N],
{
    type Error = std::convert::Infallible;

    fn rhs(&self, t: f64, y: &[T; N]) -> Result<[T; N], Self::Error> {
        Ok(self(t, y))
    }
}

#[inline]
fn axpy<T: Field, const N: usize>(y: &[T; N], h: f64, k: &[T; N]) -> [T; N] {
    std::array::from_fn(|i| y[i] + k[i] * h)
}

pub fn norm<T: Field, const N: usize>(y: &[T; N]) -> f64 {
    y.iter().map(|v| v.modulus_sqr()).sum::<f64>().sqrt()
}

pub fn distance<T: Field, const N: usize>(a: &[T; N], b: &[T; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x - *y).modulus_sqr()).sum::<f64>().sqrt()
}

/// One classical RK4 step. Every stage re-evaluates the full right-hand side
/// at its own (t, y), so state-dependent generators are handled exactly.
pub fn rk4_step<T, S, const N: usize>(sys: &S, t: f64, y: &[T; N], h: f64) -> Result<[T; N], S::Error>
where
    T: Field,
    S: OdeSystem<T, N> + ?Sized,
{
    let k1 = sys.rhs(t, y)?;
    let k2 = sys.rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = sys.rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = sys.rhs(t + h, &axpy(y, h, &k3))?;
    Ok(std::array::from_fn(|i| {
        y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0)
    }))
}

/// Output grid `t_k = k * dt` for `k = 0..=n_steps`, with `n_steps` chosen so
/// the last point does not overshoot `t_end` by more than rounding.
pub fn output_steps(t_end: f64, dt: f64) -> usize {
    let n = t_end / dt;
    let r = n.round();
    if (n - r).abs() < 1e-9 * n.max(1.0) {
        r as usize
    } else {
        n.floor() as usize
    }
}

/// Integrates over the output grid with `substeps` equal RK4 steps between
/// consecutive outputs. Returns the state at every output time.
pub fn integrate_fixed<T, S, const N: usize>(
    sys: &S,
    y0: [T; N],
    dt: f64,
    n_steps: usize,
    substeps: usize,
) -> Result<Vec<[T; N]>, S::Error>
where
    T: Field,
    S: OdeSystem<T, N> + ?Sized,
{
    let h = dt / substeps as f64;
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut y = y0;
    out.push(y);
    for k in 0..n_steps {
        let t0 = k as f64 * dt;
        for s in 0..substeps {
            y = rk4_step(sys, t0 + s as f64 * h, &y, h)?;
        }
        out.push(y);
    }
    Ok(out)
}

/// Integration control: fixed step, or step-halving to a relative tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stepping {
    Fixed,
    Refined { rel_tol: f64, max_levels: usize },
}

impl Stepping {
    pub fn refined(rel_tol: f64) -> Self {
        Stepping::Refined {
            rel_tol,
            max_levels: 16,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Refined<T, const N: usize> {
    pub states: Vec<[T; N]>,
    pub substeps: usize,
    /// Largest relative difference between the last two refinements.
    pub estimate: f64,
    pub converged: bool,
}

/// Largest difference over the output grid, relative to `max(1, |y|)`.
pub fn max_relative_difference<T: Field, const N: usize>(a: &[[T; N]], b: &[[T; N]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| distance(x, y) / norm(y).max(1.0))
        .fold(0.0, f64::max)
}

/// Levels after which a refinement that stopped improving is abandoned.
const STALL_AFTER: usize = 6;

/// True once the refinement has spent [`STALL_AFTER`] halvings and the
/// estimate failed to halve on each of the last two. RK4 on a smooth problem
/// gains a factor near 16 per halving; a stall means the step is not the
/// limiting factor (a blow-up or a near-singular right-hand side).
pub fn stalled(history: &[f64]) -> bool {
    let n = history.len();
    n >= STALL_AFTER && history[n - 1] > 0.5 * history[n - 2] && history[n - 2] > 0.5 * history[n - 3]
}

/// Halves the internal step until two successive refinements agree to
/// `rel_tol` at every output time, `max_levels` halvings were spent, or the
/// agreement stalls.
pub fn integrate_refined<T, S, const N: usize>(
    sys: &S,
    y0: [T; N],
    dt: f64,
    n_steps: usize,
    rel_tol: f64,
    max_levels: usize,
) -> Result<Refined<T, N>, S::Error>
where
    T: Field,
    S: OdeSystem<T, N> + ?Sized,
{
    let mut substeps = 1;
    let mut coarse = integrate_fixed(sys, y0, dt, n_steps, substeps)?;
    let mut estimate = f64::INFINITY;
    let mut history = Vec::with_capacity(max_levels);
    for _ in 0..max_levels {
        substeps *= 2;
        let fine = integrate_fixed(sys, y0, dt, n_steps, substeps)?;
        estimate = max_relative_difference(&coarse, &fine);
        coarse = fine;
        if estimate <= rel_tol {
            return Ok(Refined {
                states: coarse,
                substeps,
                estimate,
                converged: true,
            });
        }
        history.push(estimate);
        if stalled(&history) {
            break;
        }
    }
    Ok(Refined {
        states: coarse,
        substeps,
        estimate,
        converged: false,
    })
}
