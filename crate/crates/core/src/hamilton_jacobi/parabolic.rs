//! Explicit Lax–Friedrichs for `∂_t w = ½(|w_x|² − s(x, t))` on a line.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub type Source<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

#[derive(Clone)]
pub struct ParabolicHjProblem<T> {
    /// Abscissa of the first node.
    pub x_lo: T,
    /// Initial data on equally spaced nodes.
    pub w0: Vec<T>,
    /// Right-hand side `s(x, t)`.
    pub source: Source<T>,
    pub horizon: T,
}

impl<T: Real> fmt::Debug for ParabolicHjProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParabolicHjProblem")
            .field("x_lo", &self.x_lo)
            .field("nodes", &self.w0.len())
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl<T: Real> ParabolicHjProblem<T> {
    pub fn new(x_lo: T, w0: Vec<T>, source: impl Fn(T, T) -> T + Send + Sync + 'static, horizon: T) -> Self {
        ParabolicHjProblem { x_lo, w0, source: Arc::new(source), horizon }
    }

    /// Zero right-hand side.
    pub fn homogeneous(x_lo: T, w0: Vec<T>, horizon: T) -> Self {
        Self::new(x_lo, w0, |_, _| T::zero(), horizon)
    }
}

/// Values on a uniform space-time lattice, row `n` at time `n dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField<T> {
    pub x_lo: T,
    pub dx: T,
    pub dt: T,
    pub nx: usize,
    values: Vec<T>,
}

impl<T: Real> SpaceTimeField<T> {
    pub fn from_fn(x_lo: T, dx: T, dt: T, nx: usize, steps: usize, f: impl Fn(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(nx * (steps + 1));
        for n in 0..=steps {
            let t = T::from_usize_lossy(n) * dt;
            for i in 0..nx {
                values.push(f(x_lo + T::from_usize_lossy(i) * dx, t));
            }
        }
        SpaceTimeField { x_lo, dx, dt, nx, values }
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.nx - 1
    }

    pub fn x(&self, i: usize) -> T {
        self.x_lo + T::from_usize_lossy(i) * self.dx
    }

    pub fn t(&self, n: usize) -> T {
        T::from_usize_lossy(n) * self.dt
    }

    pub fn get(&self, n: usize, i: usize) -> T {
        self.values[n * self.nx + i]
    }

    pub fn row(&self, n: usize) -> &[T] {
        &self.values[n * self.nx..(n + 1) * self.nx]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nx == other.nx && self.values.len() == other.values.len() && self.dx == other.dx && self.dt == other.dt
    }
}

/// Steps to the horizon with `dt` shortened so that it divides the horizon.
///
/// The dissipation coefficient is an a priori bound on `|w_x|`: the initial
/// Lipschitz constant plus `horizon/2` times the Lipschitz constant of the
/// source in `x`, estimated on the lattice.
pub fn solve_parabolic_hj<T: Real>(problem: &ParabolicHjProblem<T>, dt: T, dx: T) -> Result<SpaceTimeField<T>> {
    let nx = problem.w0.len();
    if nx < 3 {
        return invalid("need at least three nodes");
    }
    if !(problem.horizon > T::zero() && dt > T::zero() && dx > T::zero()) {
        return invalid("horizon, dt and dx must be positive");
    }
    if problem.w0.iter().any(|v| !v.is_finite()) {
        return invalid("initial data must be finite");
    }
    let steps = (problem.horizon / dt).ceil().to_usize().unwrap_or(0).max(1);
    let dt = problem.horizon / T::from_usize_lossy(steps);
    let x = |i: usize| problem.x_lo + T::from_usize_lossy(i) * dx;
    let lip0 = problem.w0.windows(2).map(|w| (w[1] - w[0]).abs() / dx).fold(T::zero(), T::max);
    let mut lip_s = T::zero();
    for n in 0..=16 {
        let t = problem.horizon * T::from_usize_lossy(n) / T::lit(16.0);
        for i in 0..nx - 1 {
            let d = ((problem.source)(x(i + 1), t) - (problem.source)(x(i), t)).abs() / dx;
            lip_s = lip_s.max(d);
        }
    }
    let sigma = lip0 + T::lit(0.5) * problem.horizon * lip_s;
    if !sigma.is_finite() {
        return invalid("initial data or source is not Lipschitz on the lattice");
    }
    let courant = dt * sigma / dx;
    if courant > T::one() {
        return Err(Error::Cfl { courant: courant.as_f64() });
    }

    let mut values = Vec::with_capacity(nx * (steps + 1));
    values.extend_from_slice(&problem.w0);
    let mut cur = problem.w0.clone();
    let mut next = vec![T::zero(); nx];
    let half = T::lit(0.5);
    for n in 0..steps {
        let t = T::from_usize_lossy(n) * dt;
        for i in 0..nx {
            // Ghost nodes by linear extrapolation.
            let wl = if i == 0 { T::lit(2.0) * cur[0] - cur[1] } else { cur[i - 1] };
            let wr = if i == nx - 1 { T::lit(2.0) * cur[nx - 1] - cur[nx - 2] } else { cur[i + 1] };
            let p = (wr - wl) / (T::lit(2.0) * dx);
            let lap = wr - T::lit(2.0) * cur[i] + wl;
            next[i] = cur[i] + dt * half * (p * p - (problem.source)(x(i), t)) + half * courant * lap;
        }
        std::mem::swap(&mut cur, &mut next);
        values.extend_from_slice(&cur);
    }
    Ok(SpaceTimeField { x_lo: problem.x_lo, dx, dt, nx, values })
}

/// `max_i w0(x_i) − |x − x_i|² / (2t)`.
pub fn hopf_lax_oracle<T: Real>(xs: &[T], w0: &[T], t: T, x: T) -> Result<T> {
    if !(t > T::zero()) {
        return invalid("Hopf-Lax needs t > 0");
    }
    if xs.is_empty() || xs.len() != w0.len() {
        return invalid("node and value arrays must be nonempty and of equal length");
    }
    Ok(xs
        .iter()
        .zip(w0)
        .map(|(&y, &w)| w - (x - y) * (x - y) / (T::lit(2.0) * t))
        .fold(T::neg_infinity(), T::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, lo: f64, hi: f64) -> (Vec<f64>, f64) {
        let dx = (hi - lo) / (n - 1) as f64;
        ((0..n).map(|i| lo + i as f64 * dx).collect(), dx)
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = ParabolicHjProblem::homogeneous(-1.0, vec![0.0; 41], 1.0);
        let w = solve_parabolic_hj(&p, 0.01, 0.05).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn affine_data_propagate_exactly() {
        let (xs, dx) = line(41, -1.0, 1.0);
        let c = 0.7;
        let p = ParabolicHjProblem::homogeneous(-1.0, xs.iter().map(|x| c * x).collect(), 0.5);
        let w = solve_parabolic_hj(&p, 0.02, dx).unwrap();
        let n = w.steps();
        for i in 0..xs.len() {
            assert!((w.get(n, i) - (c * xs[i] + c * c * 0.5 / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let (xs, dx) = line(41, -1.0, 1.0);
        let p = ParabolicHjProblem::homogeneous(-1.0, xs.iter().map(|x| 3.0 * x).collect(), 1.0);
        assert!(matches!(solve_parabolic_hj(&p, 0.1, dx), Err(Error::Cfl { .. })));
    }

    #[test]
    fn hopf_lax_examples() {
        let (xs, _) = line(401, -4.0, 4.0);
        assert!(hopf_lax_oracle(&xs, &vec![0.0; xs.len()], 1.0, 0.3).unwrap().abs() < 1e-15);
        let c = 0.5;
        let w0: Vec<f64> = xs.iter().map(|y| c * y).collect();
        let v = hopf_lax_oracle(&xs, &w0, 1.0, 0.0).unwrap();
        assert!((v - c * c / 2.0).abs() < 1e-12);
        let w0: Vec<f64> = xs.iter().map(|y| -y.abs()).collect();
        assert_eq!(hopf_lax_oracle(&xs, &w0, 1.0, 0.0).unwrap(), 0.0);
        assert!(hopf_lax_oracle(&xs, &w0, 0.0, 0.0).is_err());
    }

    #[test]
    fn solver_tracks_hopf_lax_at_first_order() {
        let mut errs = Vec::new();
        for n in [161, 321, 641] {
            let (xs, dx) = line(n, -4.0, 4.0);
            let w0: Vec<f64> = xs.iter().map(|y| -y.abs()).collect();
            let p = ParabolicHjProblem::homogeneous(-4.0, w0.clone(), 1.0);
            let w = solve_parabolic_hj(&p, 0.5 * dx, dx).unwrap();
            let last = w.steps();
            let mut err: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                if x.abs() <= 1.0 {
                    err = err.max((w.get(last, i) - hopf_lax_oracle(&xs, &w0, 1.0, x).unwrap()).abs());
                }
            }
            errs.push((err, dx));
        }
        for (e, dx) in &errs {
            assert!(*e <= 2.0 * (dx + 0.5 * dx), "{e} at dx={dx}");
        }
        assert!(errs[2].0 < errs[0].0);
    }
}
