//! Damped Newton iteration for smooth 2D root problems, with a central
//! finite-difference Jacobian and a deterministic multi-start driver.

use crate::par::{self, Execution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Success when `max |f_i| ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Finite-difference step, relative to `max(1, |x_i|)`.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 200,
            fd_step: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: [f64; 2],
    pub residual: [f64; 2],
    pub iterations: usize,
}

impl Root {
    pub fn max_residual(&self) -> f64 {
        self.residual[0].abs().max(self.residual[1].abs())
    }
}

fn sq(r: [f64; 2]) -> f64 {
    r[0] * r[0] + r[1] * r[1]
}

fn jacobian<F: Fn([f64; 2]) -> [f64; 2]>(f: &F, x: [f64; 2], step: f64) -> [[f64; 2]; 2] {
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let h = step * x[j].abs().max(1.0);
        let mut xp = x;
        let mut xm = x;
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(xp), f(xm));
        for i in 0..2 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Levenberg–Marquardt damped Newton. Returns `None` when the iteration
/// stalls, leaves the finite range, or runs out of iterations above `tol`.
pub fn newton_2d<F: Fn([f64; 2]) -> [f64; 2]>(f: &F, x0: [f64; 2], opts: &NewtonOptions) -> Option<Root> {
    let mut x = x0;
    let mut r = f(x);
    let mut lambda = 1e-3;
    for it in 0..opts.max_iter {
        if !sq(r).is_finite() {
            return None;
        }
        if r[0].abs().max(r[1].abs()) <= opts.tol {
            return Some(Root {
                x,
                residual: r,
                iterations: it,
            });
        }
        let a = jacobian(f, x, opts.fd_step);
        // normal equations (AᵀA + λ diag(AᵀA)) δ = −Aᵀr
        let ata = [
            [a[0][0] * a[0][0] + a[1][0] * a[1][0], a[0][0] * a[0][1] + a[1][0] * a[1][1]],
            [a[0][1] * a[0][0] + a[1][1] * a[1][0], a[0][1] * a[0][1] + a[1][1] * a[1][1]],
        ];
        let atr = [
            a[0][0] * r[0] + a[1][0] * r[1],
            a[0][1] * r[0] + a[1][1] * r[1],
        ];
        let mut accepted = false;
        for _ in 0..30 {
            let m00 = ata[0][0] * (1.0 + lambda) + f64::MIN_POSITIVE;
            let m11 = ata[1][1] * (1.0 + lambda) + f64::MIN_POSITIVE;
            let det = m00 * m11 - ata[0][1] * ata[1][0];
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let dx = [
                -(m11 * atr[0] - ata[0][1] * atr[1]) / det,
                -(m00 * atr[1] - ata[1][0] * atr[0]) / det,
            ];
            let xn = [x[0] + dx[0], x[1] + dx[1]];
            let rn = f(xn);
            if sq(rn) < sq(r) {
                let stalled = dx[0] == 0.0 && dx[1] == 0.0;
                x = xn;
                r = rn;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = !stalled;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (r[0].abs().max(r[1].abs()) <= opts.tol).then_some(Root {
        x,
        residual: r,
        iterations: opts.max_iter,
    })
}

/// Runs [`newton_2d`] from every start; entry `i` is the outcome from
/// `starts[i]`, independent of the execution mode.
pub fn multistart<F>(f: &F, starts: &[[f64; 2]], opts: &NewtonOptions, exec: Execution) -> Vec<Option<Root>>
where
    F: Fn([f64; 2]) -> [f64; 2] + Sync,
{
    par::map(starts, exec, |&x0| newton_2d(f, x0, opts))
}

/// `n × m` tensor grid, first coordinate varying slowest.
pub fn grid(a: (f64, f64, usize), b: (f64, f64, usize), endpoint: bool) -> Vec<[f64; 2]> {
    let axis = |(lo, hi, n): (f64, f64, usize)| -> Vec<f64> {
        let div = if endpoint { n.saturating_sub(1).max(1) } else { n } as f64;
        (0..n).map(|i| lo + (hi - lo) * i as f64 / div).collect()
    };
    let (xa, xb) = (axis(a), axis(b));
    xa.iter().flat_map(|&u| xb.iter().map(move |&v| [u, v])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_circle_line_intersection() {
        let f = |x: [f64; 2]| [x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]];
        let r = newton_2d(&f, [1.0, 0.5], &NewtonOptions::default()).unwrap();
        let s = 2f64.sqrt();
        assert!((r.x[0] - s).abs() < 1e-12 && (r.x[1] - s).abs() < 1e-12);
    }

    #[test]
    fn reports_failure_without_root() {
        let f = |x: [f64; 2]| [x[0] * x[0] + 1.0, x[1]];
        assert!(newton_2d(&f, [0.3, 0.2], &NewtonOptions::default()).is_none());
    }

    #[test]
    fn multistart_is_order_stable() {
        let f = |x: [f64; 2]| [x[0].sin(), x[1] - 1.0];
        let starts = grid((-4.0, 4.0, 5), (0.0, 2.0, 3), true);
        assert_eq!(starts.len(), 15);
        let a = multistart(&f, &starts, &NewtonOptions::default(), Execution::Sequential);
        let b = multistart(&f, &starts, &NewtonOptions::default(), Execution::Parallel);
        assert_eq!(a, b);
    }
}
