//! Measured counterparts of the elliptic and parabolic comparison estimates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{NodeKind, ScalarField};
use crate::scalar::Real;

use super::parabolic::SpaceTimeField;
use super::same_grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `max (u − v)^+`.
    pub violation: f64,
    /// `sup (v − u)`.
    pub sup_gap: f64,
    /// `sup (v − u) / (R max(sup (rhs gap), sup_boundary (v − u)))`; 0 when both vanish.
    pub ratio: f64,
    pub tol: f64,
    /// `violation <= 4 tol`.
    pub pass: bool,
}

fn finish(violation: f64, sup_gap: f64, scale: f64, tol: f64) -> ComparisonReport {
    let ratio = if scale > 0.0 {
        sup_gap / scale
    } else if sup_gap <= 4.0 * tol {
        0.0
    } else {
        f64::INFINITY
    };
    ComparisonReport { violation, sup_gap, ratio, tol, pass: violation <= 4.0 * tol }
}

/// `u` solves with right-hand side `n`, `v` with `m`, where `m ≥ n ≥ λ > 0`.
/// `k_const` is carried for the caller's bound and does not enter the report.
pub fn check_comparison_elliptic<T: Real>(
    u: &ScalarField<T>,
    v: &ScalarField<T>,
    m: &ScalarField<T>,
    n: &ScalarField<T>,
    lambda: T,
    k_const: T,
    tol: T,
) -> Result<ComparisonReport> {
    let grid = u.grid();
    if ![v.grid(), m.grid(), n.grid()].iter().all(|g| same_grid(grid, g)) {
        return invalid("comparison fields live on different grids");
    }
    if !(lambda > T::zero()) || !(k_const >= T::zero()) || !(tol > T::zero()) {
        return invalid("need lambda > 0, K >= 0 and tol > 0");
    }
    let mut violation = T::zero();
    let mut sup_gap = T::neg_infinity();
    let mut rhs_gap = T::zero();
    let mut bdry_gap = T::zero();
    for k in grid.active() {
        if !(m.get(k) >= n.get(k) && n.get(k) >= lambda) {
            let (i, j) = grid.ij(k);
            return invalid(format!("need m >= n >= lambda, violated at node ({i}, {j})"));
        }
        let d = v.get(k) - u.get(k);
        violation = violation.max(-d);
        sup_gap = sup_gap.max(d);
        match grid.kind(k) {
            NodeKind::Boundary => bdry_gap = bdry_gap.max(d),
            _ => rhs_gap = rhs_gap.max(m.get(k) - n.get(k)),
        }
    }
    let r = grid.domain().inradius();
    let scale = r * rhs_gap.max(bdry_gap);
    Ok(finish(violation.as_f64(), sup_gap.as_f64(), scale.as_f64(), tol.as_f64()))
}

/// `u` and `v` solve `∂_t w = ½(|w_x|² + rhs)` with right-hand sides `m ≤ n`.
/// `R` is the time horizon and the boundary is `t = 0` plus both ends.
pub fn check_comparison_parabolic<T: Real>(
    u: &SpaceTimeField<T>,
    v: &SpaceTimeField<T>,
    m: &SpaceTimeField<T>,
    n: &SpaceTimeField<T>,
    tol: T,
) -> Result<ComparisonReport> {
    if !(u.same_shape(v) && u.same_shape(m) && u.same_shape(n)) {
        return invalid("comparison fields have different shapes");
    }
    if !(tol > T::zero()) {
        return invalid("tol must be positive");
    }
    let steps = u.steps();
    let mut violation = T::zero();
    let mut sup_gap = T::neg_infinity();
    let mut rhs_gap = T::zero();
    let mut bdry_gap = T::zero();
    for s in 0..=steps {
        for i in 0..u.nx {
            if !(n.get(s, i) >= m.get(s, i)) {
                return invalid(format!("need n >= m, violated at step {s}, node {i}"));
            }
            let d = v.get(s, i) - u.get(s, i);
            violation = violation.max(-d);
            sup_gap = sup_gap.max(d);
            rhs_gap = rhs_gap.max(n.get(s, i) - m.get(s, i));
            if s == 0 || i == 0 || i == u.nx - 1 {
                bdry_gap = bdry_gap.max(d);
            }
        }
    }
    let scale = u.t(steps) * rhs_gap.max(bdry_gap);
    Ok(finish(violation.as_f64(), sup_gap.as_f64(), scale.as_f64(), tol.as_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_scalar, Domain, Grid2D, VectorField2};
    use crate::hamilton_jacobi::{solve_parabolic_hj, solve_upper, ParabolicHjProblem, ShiftedEikonalProblem, Sign, SweepConfig};
    use std::sync::Arc;

    fn cone(g: &Arc<Grid2D<f64>>, m: f64) -> ScalarField<f64> {
        let p = ShiftedEikonalProblem::new(VectorField2::constant(g.clone(), [0.0, 0.0]), ScalarField::constant(g.clone(), 0.0), Sign::Plus)
            .unwrap()
            .with_rhs(ScalarField::constant(g.clone(), m))
            .unwrap();
        solve_upper(&p, &SweepConfig::default()).unwrap().field
    }

    #[test]
    fn identical_problems_agree() {
        let g = Arc::new(Grid2D::new(Domain::disk(1.0), 33).unwrap());
        let u = cone(&g, 1.0);
        let one = ScalarField::constant(g.clone(), 1.0);
        let r = check_comparison_elliptic(&u, &u, &one, &one, 1.0, 0.0, 1e-10).unwrap();
        assert!(r.pass && r.sup_gap.abs() <= 4e-10 && r.ratio == 0.0);
    }

    #[test]
    fn scaled_cones() {
        let g = Arc::new(Grid2D::new(Domain::disk(1.0), 65).unwrap());
        let u = cone(&g, 1.0);
        let v = cone(&g, 1.1);
        let m = ScalarField::constant(g.clone(), 1.1);
        let n = ScalarField::constant(g.clone(), 1.0);
        let r = check_comparison_elliptic(&u, &v, &m, &n, 1.0, 0.0, 1e-10).unwrap();
        assert!(r.pass && r.ratio.is_finite());
        let exact = sample_scalar(&g, |x| (1.1f64.sqrt() - 1.0) * (1.0 - x[0].hypot(x[1]))).unwrap();
        for k in g.active() {
            assert!((v.get(k) - u.get(k) - exact.get(k)).abs() < 4.0 * (1.1f64.sqrt() - 1.0) * g.spacing() + 1e-9);
        }
        assert!(check_comparison_elliptic(&v, &u, &n, &m, 1.0, 0.0, 1e-10).is_err());
    }

    #[test]
    fn parabolic_affine_gap() {
        let nx = 41;
        let dx = 0.05;
        let w0: Vec<f64> = (0..nx).map(|i| 0.4 * (-1.0 + i as f64 * dx)).collect();
        let delta = 0.1;
        let pu = ParabolicHjProblem::new(-1.0, w0.clone(), |_, _| -1.0, 1.0);
        let pv = ParabolicHjProblem::new(-1.0, w0, move |_, _| -1.0 - delta, 1.0);
        let u = solve_parabolic_hj(&pu, 0.02, dx).unwrap();
        let v = solve_parabolic_hj(&pv, 0.02, dx).unwrap();
        let m = SpaceTimeField::from_fn(-1.0, dx, u.dt, nx, u.steps(), |_, _| 1.0);
        let n = SpaceTimeField::from_fn(-1.0, dx, u.dt, nx, u.steps(), |_, _| 1.0 + delta);
        let r = check_comparison_parabolic(&u, &v, &m, &n, 1e-12).unwrap();
        assert!(r.pass);
        let last = u.steps();
        for i in 0..nx {
            let gap = v.get(last, i) - u.get(last, i);
            assert!((gap - delta * 1.0 / 2.0).abs() < 1e-12);
        }
        let same = check_comparison_parabolic(&u, &u, &m, &m, 1e-12).unwrap();
        assert!(same.pass && same.sup_gap == 0.0);
    }
}
