//! Dirichlet energy minimization between two obstacles, the torsion problem
//! with a distance obstacle, and contact-set extraction.
//!
//! Both solvers are projected Gauss–Seidel on the five-point Laplacian. Near a
//! cut boundary the stencil uses Shortley–Weller weights over the shortened
//! arms, which reduce to the plain neighbour average on full arms.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{discrete_gradient, Grid2D, NodeKind, ScalarField, VectorField2};
use crate::hamilton_jacobi::same_grid;
use crate::scalar::{norm2, Real};

/// Contact threshold relative to the solver tolerance.
pub const CONTACT_TOL_FACTOR: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct DoubleObstacleProblem<T> {
    pub h_minus: ScalarField<T>,
    pub h_plus: ScalarField<T>,
    /// Dirichlet data; only boundary nodes are read.
    pub f: ScalarField<T>,
}

impl<T: Real> DoubleObstacleProblem<T> {
    /// Checks `h⁻ ≤ h⁺` on active nodes and `h⁻ ≤ f ≤ h⁺` on boundary nodes, exactly.
    pub fn new(h_minus: ScalarField<T>, h_plus: ScalarField<T>, f: ScalarField<T>) -> Result<Self> {
        if !same_grid(h_minus.grid(), h_plus.grid()) || !same_grid(h_minus.grid(), f.grid()) {
            return invalid("obstacles and boundary data live on different grids");
        }
        let grid = h_minus.grid().clone();
        for k in grid.active() {
            let (lo, hi) = (h_minus.get(k), h_plus.get(k));
            let bad = !(lo <= hi) || (grid.kind(k) == NodeKind::Boundary && !(lo <= f.get(k) && f.get(k) <= hi));
            if bad {
                let (i, j) = grid.ij(k);
                return Err(Error::Inadmissible { i, j, lower: lo.as_f64(), upper: hi.as_f64() });
            }
        }
        Ok(DoubleObstacleProblem { h_minus, h_plus, f })
    }

    pub fn grid(&self) -> &Arc<Grid2D<T>> {
        self.h_minus.grid()
    }
}

/// Replaces every node where `h⁻ > h⁺` by the midpoint in both fields.
/// Returns the repaired pair and how many nodes were touched.
pub fn repair_order<T: Real>(h_minus: &ScalarField<T>, h_plus: &ScalarField<T>) -> Result<(ScalarField<T>, ScalarField<T>, usize)> {
    if !same_grid(h_minus.grid(), h_plus.grid()) {
        return invalid("obstacles live on different grids");
    }
    let grid = h_minus.grid().clone();
    let mut lo = h_minus.values().to_vec();
    let mut hi = h_plus.values().to_vec();
    let mut count = 0;
    for k in grid.active() {
        if lo[k] > hi[k] {
            let mid = (lo[k] + hi[k]) * T::lit(0.5);
            lo[k] = mid;
            hi[k] = mid;
            count += 1;
        }
    }
    Ok((ScalarField::from_values(grid.clone(), lo)?, ScalarField::from_values(grid, hi)?, count))
}

/// Shortley–Weller weights toward the four neighbours, in [`crate::grid::DIRS`] order.
fn laplace_weights<T: Real>(grid: &Grid2D<T>, k: usize) -> [T; 4] {
    let l = grid.arms(k);
    let two = T::lit(2.0);
    let mut w = [T::zero(); 4];
    for d in 0..4 {
        w[d] = two / (l[d] * (l[d] + l[d ^ 1]));
    }
    w
}

/// `(Σ w_d u_d, Σ w_d)` over the four arms of `k`.
#[inline]
fn weighted_sum<T: Real>(grid: &Grid2D<T>, w: &[T; 4], u: &[T], k: usize) -> (T, T) {
    (0..4).fold((T::zero(), T::zero()), |(n, s), d| (n + w[d] * grid.neighbor_value(u, k, d), s + w[d]))
}

fn laplacian_at<T: Real>(grid: &Grid2D<T>, u: &[T], k: usize) -> T {
    let w = laplace_weights(grid, k);
    let (num, den) = weighted_sum(grid, &w, u, k);
    num - den * u[k]
}

/// Projected Gauss–Seidel with relaxation 1. A node is updated to the weighted
/// neighbour average, clamped first to `h⁺` and then to `h⁻`.
///
/// Stops once a sweep changes no node by `tol` or more and every node strictly
/// between the obstacles (by more than the contact threshold) has a Laplacian
/// residual of at most `tol / spacing²`.
pub fn solve_double_obstacle<T: Real>(problem: &DoubleObstacleProblem<T>, tol: T, max_iters: usize) -> Result<ScalarField<T>> {
    solve_double_obstacle_traced(problem, tol, max_iters, |_| {})
}

/// [`solve_double_obstacle`], calling `on_sweep(values)` before the first sweep
/// and after every sweep.
pub fn solve_double_obstacle_traced<T: Real>(
    problem: &DoubleObstacleProblem<T>,
    tol: T,
    max_iters: usize,
    mut on_sweep: impl FnMut(&[T]),
) -> Result<ScalarField<T>> {
    if !(tol > T::zero()) {
        return invalid("tolerance must be positive");
    }
    let grid = problem.grid().clone();
    let (lo, hi) = (problem.h_minus.values(), problem.h_plus.values());
    let mut u = vec![T::nan(); grid.len()];
    for k in grid.active() {
        u[k] = match grid.kind(k) {
            NodeKind::Boundary => problem.f.get(k),
            _ => (lo[k] + hi[k]) * T::lit(0.5),
        };
    }
    let interior: Vec<usize> = grid.interior().collect();
    let stencils: Vec<[T; 4]> = interior.iter().map(|&k| laplace_weights(&grid, k)).collect();
    let sp = grid.spacing();
    let res_tol = tol / (sp * sp);
    let contact = T::lit(CONTACT_TOL_FACTOR) * tol;
    let mut change = T::infinity();
    on_sweep(&u);
    for _ in 0..max_iters {
        change = T::zero();
        for (&k, w) in interior.iter().zip(&stencils) {
            let (num, den) = weighted_sum(&grid, w, &u, k);
            let v = (num / den).min(hi[k]).max(lo[k]);
            change = change.max((v - u[k]).abs());
            u[k] = v;
        }
        on_sweep(&u);
        if change < tol {
            let settled = interior
                .iter()
                .all(|&k| hi[k] - u[k] <= contact || u[k] - lo[k] <= contact || laplacian_at(&grid, &u, k).abs() <= res_tol);
            if settled {
                return ScalarField::from_values(grid, u);
            }
        }
    }
    Err(Error::NotConverged { iterations: max_iters, residual: change.as_f64() })
}

/// `½ Σ (Δu / ℓ)² h²` over the arms of interior nodes, each lattice edge once.
/// Projected Gauss–Seidel decreases it whenever all arms have length `h`.
pub fn dirichlet_energy<T: Real>(grid: &Grid2D<T>, u: &[T]) -> T {
    let h = grid.spacing();
    let mut e = T::zero();
    for k in grid.interior() {
        let l = grid.arms(k);
        for d in 0..4 {
            let nb = grid.neighbor(k, d);
            // Edges between two interior nodes are seen from both ends.
            let twice = !grid.is_cut(k, d) && nb.is_some_and(|m| grid.kind(m) == NodeKind::Interior);
            if twice && d % 2 == 1 {
                continue;
            }
            let du = (grid.neighbor_value(u, k, d) - u[k]) / l[d] * h;
            e = e + du * du;
        }
    }
    e * T::lit(0.5)
}

/// Minimizes `∫ |∇u|² − c u` under `u ≤ d` with `u = 0` on the boundary, by
/// projected Gauss–Seidel from `u = 0`.
pub fn solve_torsion<T: Real>(grid: &Arc<Grid2D<T>>, c: T, d: &ScalarField<T>, tol: T, max_iters: usize) -> Result<ScalarField<T>> {
    if !(c > T::zero()) || !(tol > T::zero()) {
        return invalid("load and tolerance must be positive");
    }
    if !same_grid(grid, d.grid()) {
        return invalid("obstacle lives on a different grid");
    }
    for k in grid.active() {
        if !(d.get(k) >= T::zero()) {
            let (i, j) = grid.ij(k);
            return Err(Error::Inadmissible { i, j, lower: 0.0, upper: d.get(k).as_f64() });
        }
    }
    let mut u = vec![T::nan(); grid.len()];
    for k in grid.active() {
        u[k] = T::zero();
    }
    let interior: Vec<usize> = grid.interior().collect();
    let stencils: Vec<[T; 4]> = interior.iter().map(|&k| laplace_weights(grid, k)).collect();
    let half_c = c * T::lit(0.5);
    let mut change = T::infinity();
    for _ in 0..max_iters {
        change = T::zero();
        for (&k, w) in interior.iter().zip(&stencils) {
            let (num, den) = weighted_sum(grid, w, &u, k);
            let v = ((num + half_c) / den).min(d.get(k));
            change = change.max((v - u[k]).abs());
            u[k] = v;
        }
        if change < tol {
            return ScalarField::from_values(grid.clone(), u);
        }
    }
    Err(Error::NotConverged { iterations: max_iters, residual: change.as_f64() })
}

/// Interior nodes where `|u − obstacle| ≤ tol`.
pub fn contact_mask<T: Real>(u: &ScalarField<T>, obstacle: &ScalarField<T>, tol: T) -> Vec<bool> {
    let grid = u.grid();
    (0..grid.len())
        .map(|k| grid.kind(k) == NodeKind::Interior && (u.get(k) - obstacle.get(k)).abs() <= tol)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContactSets {
    pub lambda_plus: Vec<bool>,
    pub lambda_minus: Vec<bool>,
    pub tol_used: f64,
}

impl ContactSets {
    pub fn count_plus(&self) -> usize {
        self.lambda_plus.iter().filter(|&&b| b).count()
    }

    pub fn count_minus(&self) -> usize {
        self.lambda_minus.iter().filter(|&&b| b).count()
    }

    /// The masks as 0/1 fields (NaN off the active set).
    pub fn to_fields<T: Real>(&self, grid: &Arc<Grid2D<T>>) -> Result<(ScalarField<T>, ScalarField<T>)> {
        let as_field = |m: &[bool]| {
            let v = (0..grid.len()).map(|k| if m[k] { T::one() } else { T::zero() }).collect();
            ScalarField::from_values(grid.clone(), v)
        };
        Ok((as_field(&self.lambda_plus)?, as_field(&self.lambda_minus)?))
    }
}

/// `Λ⁺ = {h⁺ − u ≤ tol}` and `Λ⁻ = {u − h⁻ ≤ tol}` over interior nodes. Pass
/// `None` for `CONTACT_TOL_FACTOR × solver_tol`.
pub fn contact_sets<T: Real>(u: &ScalarField<T>, problem: &DoubleObstacleProblem<T>, tol: Option<T>, solver_tol: T) -> ContactSets {
    let tol = tol.unwrap_or(T::lit(CONTACT_TOL_FACTOR) * solver_tol);
    let grid = u.grid();
    let interior = |k: usize| grid.kind(k) == NodeKind::Interior;
    let lambda_plus = (0..grid.len()).map(|k| interior(k) && problem.h_plus.get(k) - u.get(k) <= tol).collect();
    let lambda_minus = (0..grid.len()).map(|k| interior(k) && u.get(k) - problem.h_minus.get(k) <= tol).collect();
    ContactSets { lambda_plus, lambda_minus, tol_used: tol.as_f64() }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientReport {
    pub max_norm: f64,
    /// Interior nodes with `|∇_h u − a| > bound + 10 spacing`.
    pub violations: usize,
    pub threshold: f64,
}

/// Largest `|∇_h u − a|` over interior nodes, with centred differences.
pub fn gradient_constraint_check<T: Real>(u: &ScalarField<T>, a: Option<&VectorField2<T>>, bound: T) -> Result<GradientReport> {
    let grid = u.grid();
    if let Some(a) = a {
        if !same_grid(grid, a.grid()) {
            return invalid("shift lives on a different grid");
        }
    }
    let threshold = bound + T::lit(10.0) * grid.spacing();
    let mut max_norm = T::zero();
    let mut violations = 0;
    for k in grid.interior() {
        let g = discrete_gradient(u, k)?;
        let s = a.map_or([T::zero(); 2], |a| a.get(k));
        let r = norm2([g[0] - s[0], g[1] - s[1]]);
        max_norm = max_norm.max(r);
        if r > threshold {
            violations += 1;
        }
    }
    Ok(GradientReport { max_norm: max_norm.as_f64(), violations, threshold: threshold.as_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_scalar, Domain};

    fn disk(n: usize) -> Arc<Grid2D<f64>> {
        Arc::new(Grid2D::new(Domain::disk(1.0), n).unwrap())
    }

    fn field(g: &Arc<Grid2D<f64>>, f: impl Fn([f64; 2]) -> f64) -> ScalarField<f64> {
        sample_scalar(g, f).unwrap()
    }

    #[test]
    fn singleton_admissible_set_is_reproduced() {
        let g = disk(33);
        let h = field(&g, |p| p[0] * p[1] + p[1].sin());
        let p = DoubleObstacleProblem::new(h.clone(), h.clone(), h.clone()).unwrap();
        let u = solve_double_obstacle(&p, 1e-12, 2).unwrap();
        for k in g.active() {
            assert_eq!(u.get(k), h.get(k));
        }
        let c = contact_sets(&u, &p, None, 1e-12);
        assert_eq!(c.count_plus(), g.interior().count());
        assert_eq!(c.count_minus(), g.interior().count());
    }

    #[test]
    fn far_obstacles_give_the_harmonic_extension() {
        let g = disk(33);
        let lo = ScalarField::constant(g.clone(), -1e6);
        let hi = ScalarField::constant(g.clone(), 1e6);
        let f = field(&g, |p| p[0]);
        let p = DoubleObstacleProblem::new(lo, hi, f).unwrap();
        let u = solve_double_obstacle(&p, 1e-12, 100_000).unwrap();
        // Cut arms read the trace interpolated along the circle, an O(h²) error.
        let h = g.spacing();
        for k in g.active() {
            assert!((u.get(k) - g.coord(k)[0]).abs() < 0.5 * h * h);
        }
        let c = contact_sets(&u, &p, None, 1e-12);
        assert_eq!(c.count_plus() + c.count_minus(), 0);
    }

    #[test]
    fn inadmissible_problems_are_rejected() {
        let g = disk(17);
        let lo = ScalarField::constant(g.clone(), 1.0);
        let hi = ScalarField::constant(g.clone(), 0.0);
        let err = DoubleObstacleProblem::new(lo.clone(), hi.clone(), hi.clone()).unwrap_err();
        assert!(matches!(err, Error::Inadmissible { .. }));
        let f = ScalarField::constant(g.clone(), 2.0);
        assert!(DoubleObstacleProblem::new(hi.clone(), lo.clone(), f).is_err());
    }

    #[test]
    fn repair_order_meets_in_the_middle() {
        let g = disk(17);
        let lo = field(&g, |p| p[0]);
        let hi = ScalarField::constant(g.clone(), 0.0);
        let (l, h, n) = repair_order(&lo, &hi).unwrap();
        assert_eq!(n, g.active().filter(|&k| g.coord(k)[0] > 0.0).count());
        for k in g.active() {
            assert!(l.get(k) <= h.get(k));
            if g.coord(k)[0] > 0.0 {
                assert_eq!(l.get(k), 0.5 * g.coord(k)[0]);
            }
        }
    }

    #[test]
    fn iteration_limit_is_reported() {
        let g = disk(33);
        let p = DoubleObstacleProblem::new(ScalarField::constant(g.clone(), -1.0), ScalarField::constant(g.clone(), 1.0), field(&g, |p| p[0])).unwrap();
        assert!(matches!(solve_double_obstacle(&p, 1e-14, 3), Err(Error::NotConverged { iterations: 3, .. })));
    }

    #[test]
    fn unconstrained_torsion_is_the_paraboloid() {
        let g = disk(65);
        let d = field(&g, |p| 1.0 - norm2(p));
        let u = solve_torsion(&g, 1.0, &d, 1e-13, 200_000).unwrap();
        let c = g.nearest_node([0.0, 0.0]).unwrap();
        assert!((u.get(c) - 0.125).abs() < 1e-3);
        for k in g.interior() {
            let p = g.coord(k);
            assert!((u.get(k) - (1.0 - norm2(p).powi(2)) / 8.0).abs() < 1e-3);
            assert!(u.get(k) < d.get(k));
        }
    }

    #[test]
    fn loaded_torsion_touches_the_distance() {
        let g = disk(65);
        let d = field(&g, |p| 1.0 - norm2(p));
        let u = solve_torsion(&g, 16.0, &d, 1e-12, 200_000).unwrap();
        for k in g.active() {
            assert!(u.get(k) <= d.get(k));
        }
        let mask = contact_mask(&u, &d, 1e-10);
        let touching: Vec<f64> = (0..g.len()).filter(|&k| mask[k]).map(|k| norm2(g.coord(k))).collect();
        assert!(!touching.is_empty());
        let inner = touching.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(inner > 0.2 && inner < 0.35, "inner radius {inner}");
        let rep = gradient_constraint_check(&u, None, 1.0).unwrap();
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn gradient_check_on_a_plane() {
        let g = disk(33);
        let rep = gradient_constraint_check(&field(&g, |p| p[0]), None, 1.0).unwrap();
        assert!((rep.max_norm - 1.0).abs() < 1e-3);
        assert_eq!(rep.violations, 0);
        let a = VectorField2::constant(g.clone(), [1.0, 0.0]);
        let rep = gradient_constraint_check(&field(&g, |p| 3.0 * p[0]), Some(&a), 1.0).unwrap();
        assert!((rep.max_norm - 2.0).abs() < 3e-3);
        assert_eq!(rep.violations, g.interior().count());
    }

    #[test]
    fn contact_masks_as_fields() {
        let g = disk(17);
        let h = ScalarField::constant(g.clone(), 0.0);
        let p = DoubleObstacleProblem::new(h.clone(), ScalarField::constant(g.clone(), 1.0), h.clone()).unwrap();
        let c = contact_sets(&h, &p, Some(0.0), 1.0);
        let (plus, minus) = c.to_fields(&g).unwrap();
        for k in g.interior() {
            assert_eq!(plus.get(k), 0.0);
            assert_eq!(minus.get(k), 1.0);
        }
    }
}
