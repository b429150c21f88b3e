//! Damped Newton for `−εΔh + |∇h − a|² = m` with Dirichlet data.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{discrete_second_difference, ScalarField};
use crate::linalg::{bicgstab, CsrMatrix, Ilu0};
use crate::scalar::{norm2, Real};

use super::{solve_upper, HjSolution, ShiftedEikonalProblem, Sign, SolveMeta, SweepConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Sup-norm residual target.
    pub tol: f64,
    pub max_iters: usize,
    pub linear_tol: f64,
    pub max_linear_iters: usize,
    /// Smallest step fraction tried before giving up.
    pub min_damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { tol: 1e-9, max_iters: 100, linear_tol: 1e-10, max_linear_iters: 5000, min_damping: 1.0 / 1048576.0 }
    }
}

/// Vanishing-viscosity solution warm-started from the sweep output.
pub fn solve_vanishing_viscosity<T: Real>(problem: &ShiftedEikonalProblem<T>, epsilon: T, cfg: &SweepConfig) -> Result<HjSolution<T>> {
    solve_vanishing_viscosity_with(problem, epsilon, cfg, &NewtonConfig::default())
}

pub fn solve_vanishing_viscosity_with<T: Real>(
    problem: &ShiftedEikonalProblem<T>,
    epsilon: T,
    cfg: &SweepConfig,
    newton: &NewtonConfig,
) -> Result<HjSolution<T>> {
    if problem.sign != Sign::Plus {
        return invalid("vanishing viscosity is implemented for the Plus problem");
    }
    if !(epsilon > T::zero()) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    let start = solve_upper(problem, cfg)?;
    let grid = problem.grid().clone();
    let unknowns: Vec<usize> = grid.interior().collect();
    let mut slot = vec![usize::MAX; grid.len()];
    for (i, &k) in unknowns.iter().enumerate() {
        slot[k] = i;
    }
    let mut u = start.field.into_values();
    let sys = System { problem, epsilon, unknowns: &unknowns, slot: &slot };

    let mut res = sys.residual(&u);
    let mut norm = sup(&res);
    let mut history = vec![norm.as_f64()];
    let mut iters = 0;
    while !(norm < T::lit(newton.tol)) {
        if iters >= newton.max_iters {
            return Err(Error::NotConverged { iterations: iters, residual: norm.as_f64() });
        }
        let jac = sys.jacobian(&u);
        let ilu = Ilu0::new(&jac)?;
        let rhs: Vec<T> = res.iter().map(|&r| -r).collect();
        let mut delta = vec![T::zero(); unknowns.len()];
        bicgstab(&jac, &ilu, &rhs, &mut delta, T::lit(newton.linear_tol), newton.max_linear_iters)?;
        let mut lambda = T::one();
        loop {
            let mut trial = u.clone();
            for (i, &k) in unknowns.iter().enumerate() {
                trial[k] = u[k] + lambda * delta[i];
            }
            let r = sys.residual(&trial);
            let nr = sup(&r);
            if nr < norm {
                u = trial;
                res = r;
                norm = nr;
                break;
            }
            lambda = lambda * T::lit(0.5);
            if lambda < T::lit(newton.min_damping) {
                return Err(Error::NewtonStagnation { history });
            }
        }
        history.push(norm.as_f64());
        iters += 1;
    }
    let field = ScalarField::from_values(grid, u)?;
    Ok(HjSolution {
        field,
        meta: SolveMeta { cycles: iters, final_residual: norm.as_f64(), warnings: start.meta.warnings },
    })
}

fn sup<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

struct System<'a, T> {
    problem: &'a ShiftedEikonalProblem<T>,
    epsilon: T,
    unknowns: &'a [usize],
    slot: &'a [usize],
}

/// Per-axis stencil weights `(minus, centre, plus)` for the Laplacian and gradient.
struct Weights<T> {
    lap: [[T; 3]; 2],
    grad: [[T; 3]; 2],
    nb: [[usize; 2]; 2],
}

impl<T: Real> System<'_, T> {
    fn weights(&self, k: usize) -> Weights<T> {
        let grid = self.problem.grid();
        let arms = grid.arms(k);
        let two = T::lit(2.0);
        let mut w = Weights { lap: [[T::zero(); 3]; 2], grad: [[T::zero(); 3]; 2], nb: [[0; 2]; 2] };
        for axis in 0..2 {
            let (lp, lm) = (arms[2 * axis], arms[2 * axis + 1]);
            let s = lp + lm;
            w.lap[axis] = [two / (lm * s), -two / (lp * lm), two / (lp * s)];
            w.grad[axis] = [-lp / (lm * s), (lp - lm) / (lp * lm), lm / (lp * s)];
            w.nb[axis] = [
                grid.neighbor(k, 2 * axis + 1).expect("interior nodes have four neighbours"),
                grid.neighbor(k, 2 * axis).expect("interior nodes have four neighbours"),
            ];
        }
        w
    }

    fn residual(&self, u: &[T]) -> Vec<T> {
        self.unknowns
            .iter()
            .map(|&k| {
                let w = self.weights(k);
                let a = self.problem.a.get(k);
                let mut lap = T::zero();
                let mut q = T::zero();
                let grid = self.problem.grid();
                for axis in 0..2 {
                    let vals = [grid.neighbor_value(u, k, 2 * axis + 1), u[k], grid.neighbor_value(u, k, 2 * axis)];
                    let mut g = T::zero();
                    for s in 0..3 {
                        lap = lap + w.lap[axis][s] * vals[s];
                        g = g + w.grad[axis][s] * vals[s];
                    }
                    q = q + (g - a[axis]) * (g - a[axis]);
                }
                -self.epsilon * lap + q - self.problem.rhs_at(k)
            })
            .collect()
    }

    fn jacobian(&self, u: &[T]) -> CsrMatrix<T> {
        let two = T::lit(2.0);
        let rows = self
            .unknowns
            .iter()
            .map(|&k| {
                let w = self.weights(k);
                let a = self.problem.a.get(k);
                let mut row = Vec::with_capacity(5);
                let grid = self.problem.grid();
                for axis in 0..2 {
                    let nodes = [w.nb[axis][0], k, w.nb[axis][1]];
                    let vals = [grid.neighbor_value(u, k, 2 * axis + 1), u[k], grid.neighbor_value(u, k, 2 * axis)];
                    let mut g = T::zero();
                    for s in 0..3 {
                        g = g + w.grad[axis][s] * vals[s];
                    }
                    for s in 0..3 {
                        let col = self.slot[nodes[s]];
                        if col == usize::MAX {
                            continue;
                        }
                        row.push((col, -self.epsilon * w.lap[axis][s] + two * (g - a[axis]) * w.grad[axis][s]));
                    }
                }
                row
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }
}

/// Largest axis second difference over interior nodes with full arms inside
/// `B_radius(center)`.
pub fn max_second_difference<T: Real>(h: &ScalarField<T>, center: [T; 2], radius: T) -> Result<T> {
    let grid = h.grid();
    let sp = grid.spacing();
    let mut worst = T::neg_infinity();
    for k in grid.interior() {
        let p = grid.coord(k);
        if norm2([p[0] - center[0], p[1] - center[1]]) > radius || grid.arms(k).iter().any(|&l| l < sp) {
            continue;
        }
        for axis in 0..2 {
            worst = worst.max(discrete_second_difference(h, k, axis)?);
        }
    }
    if worst == T::neg_infinity() {
        return invalid("no interior node with a full stencil in the ball");
    }
    Ok(worst)
}
