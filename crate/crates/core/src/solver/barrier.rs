//! Log-barrier interior-point method for small smooth convex programs.
//!
//! Minimizes `f(x)` subject to `g_i(x) < 0` by following the central path
//! of `t·f(x) − Σ ln(−g_i(x))` with damped Newton steps. Problems here have
//! at most a dozen variables, so dense Hessians and Cholesky are fine.

use nalgebra::{DMatrix, DVector};

/// Value, gradient and Hessian of one smooth function.
#[derive(Debug, Clone)]
pub(crate) struct Smooth {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl Smooth {
    pub fn linear(value: f64, grad: DVector<f64>) -> Self {
        let n = grad.len();
        Self {
            value,
            grad,
            hess: DMatrix::zeros(n, n),
        }
    }
}

pub(crate) trait ConvexProgram {
    fn dim(&self) -> usize;

    /// Objective, or `None` outside its domain.
    fn objective(&self, x: &DVector<f64>) -> Option<Smooth>;

    /// Every constraint function `g_i`; feasibility means all values `< 0`.
    fn constraints(&self, x: &DVector<f64>) -> Option<Vec<Smooth>>;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierOptions {
    pub t0: f64,
    pub growth: f64,
    /// Stop once the duality-gap bound `m / t` drops below this, relative
    /// to `max(1, |f|)`.
    pub gap_tol: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            t0: 1.0,
            growth: 20.0,
            gap_tol: 1e-11,
            newton_tol: 1e-10,
            max_newton: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOutcome {
    pub x: DVector<f64>,
    pub newton_steps: usize,
    /// False when a centering step ran out of Newton iterations before the
    /// target gap was reached. `x` is still strictly feasible.
    pub converged: bool,
}

fn barrier_value<P: ConvexProgram>(p: &P, t: f64, x: &DVector<f64>) -> Option<f64> {
    let f = p.objective(x)?;
    let gs = p.constraints(x)?;
    let mut v = t * f.value;
    for g in &gs {
        if !(g.value < 0.0) {
            return None;
        }
        v -= (-g.value).ln();
    }
    v.is_finite().then_some(v)
}

fn newton_direction(grad: &DVector<f64>, hess: DMatrix<f64>) -> Option<DVector<f64>> {
    let rhs = -grad;
    if let Some(ch) = hess.clone().cholesky() {
        return Some(ch.solve(&rhs));
    }
    hess.lu().solve(&rhs)
}

/// Runs the barrier method from a strictly feasible `start`.
pub(crate) fn minimize<P: ConvexProgram>(
    program: &P,
    start: DVector<f64>,
    opts: &BarrierOptions,
) -> Option<BarrierOutcome> {
    debug_assert_eq!(start.len(), program.dim());
    let mut x = start;
    let m = program.constraints(&x)?.len() as f64;
    barrier_value(program, opts.t0, &x)?;

    let mut t = opts.t0;
    let mut steps = 0usize;
    let mut converged = true;
    loop {
        let mut centered = false;
        for _ in 0..opts.max_newton {
            let f = program.objective(&x)?;
            let gs = program.constraints(&x)?;
            let mut grad = f.grad * t;
            let mut hess = f.hess * t;
            for g in gs {
                let inv = 1.0 / (-g.value);
                grad += &g.grad * inv;
                hess += &g.grad * g.grad.transpose() * (inv * inv) + g.hess * inv;
            }
            let Some(dir) = newton_direction(&grad, hess) else {
                break;
            };
            let decrement = -grad.dot(&dir);
            let current = barrier_value(program, t, &x)?;
            // Below ~1e-14 of the barrier value the Armijo test is round-off.
            let floor = opts.newton_tol.max(1e-14 * current.abs());
            if !(decrement > 0.0) || decrement / 2.0 <= floor {
                centered = true;
                break;
            }
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-16 {
                let trial = &x + &dir * step;
                if let Some(v) = barrier_value(program, t, &trial) {
                    if v <= current - 0.25 * step * decrement {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            steps += 1;
            if !moved {
                // No descent left at working precision.
                centered = true;
                break;
            }
        }
        if !centered {
            converged = false;
        }
        let scale = program.objective(&x)?.value.abs().max(1.0);
        if m / t < opts.gap_tol * scale {
            break;
        }
        t *= opts.growth;
    }
    Some(BarrierOutcome {
        x,
        newton_steps: steps,
        converged,
    })
}
