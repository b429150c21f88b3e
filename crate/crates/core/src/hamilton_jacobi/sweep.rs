//! Gauss–Seidel fast sweeping for the maximal subsolution.

use crate::error::{invalid, Error, Result};
use crate::grid::{discrete_gradient, NodeKind, ScalarField, VectorField2};
use crate::scalar::Real;

use super::{HjSolution, Scheme, ShiftedEikonalProblem, Sign, SolveMeta, SweepConfig};

/// Dispatches on the problem's sign.
pub fn solve<T: Real>(problem: &ShiftedEikonalProblem<T>, cfg: &SweepConfig) -> Result<HjSolution<T>> {
    match problem.sign {
        Sign::Plus => solve_upper(problem, cfg),
        Sign::Minus => solve_lower(problem, cfg),
    }
}

/// `h⁺` by fast sweeping from `+∞`, with `h⁺ = f` on boundary nodes.
pub fn solve_upper<T: Real>(problem: &ShiftedEikonalProblem<T>, cfg: &SweepConfig) -> Result<HjSolution<T>> {
    solve_upper_traced(problem, cfg, |_, _| {})
}

/// [`solve_upper`], calling `on_cycle(cycle, values)` after every cycle of four sweeps.
pub fn solve_upper_traced<T: Real>(
    problem: &ShiftedEikonalProblem<T>,
    cfg: &SweepConfig,
    mut on_cycle: impl FnMut(usize, &[T]),
) -> Result<HjSolution<T>> {
    if problem.sign != Sign::Plus {
        return invalid("solve_upper needs a Plus problem");
    }
    let grid = problem.grid().clone();
    let tol = cfg.resolved_tol(&problem.f)?;
    if cfg.max_cycles == 0 {
        return invalid("max_cycles must be positive");
    }
    let mut state = SweepState::new(problem, cfg)?;
    let mut residual = T::infinity();
    let mut cycles = 0;
    while cycles < cfg.max_cycles {
        residual = state.cycle();
        cycles += 1;
        on_cycle(cycles, &state.u);
        if residual < tol {
            break;
        }
    }
    if !(residual < tol) {
        return Err(Error::NotConverged { iterations: cycles, residual: residual.as_f64() });
    }
    let mut values = state.u;
    for k in grid.interior() {
        if values[k] >= state.cap {
            let (i, j) = grid.ij(k);
            return invalid(format!("node ({i}, {j}) is not reachable from the boundary"));
        }
    }
    for k in 0..grid.len() {
        if grid.kind(k) == NodeKind::Exterior {
            values[k] = T::nan();
        }
    }
    let field = ScalarField::from_values(grid.clone(), values)?;

    let mut warnings = Vec::new();
    if problem.is_degenerate() {
        warnings.push(format!("degenerate shift: max |a| = {}", problem.a.max_norm()));
    }
    let bad = incompatible_boundary_nodes(problem, &field, tol);
    if bad > 0 {
        warnings.push(format!("boundary data violates the path inequality at {bad} boundary nodes"));
    }
    Ok(HjSolution { field, meta: SolveMeta { cycles, final_residual: residual.as_f64(), warnings } })
}

/// `h⁻(a, f) = −h⁺(−a, −f)`.
pub fn solve_lower<T: Real>(problem: &ShiftedEikonalProblem<T>, cfg: &SweepConfig) -> Result<HjSolution<T>> {
    if problem.sign != Sign::Minus {
        return invalid("solve_lower needs a Minus problem");
    }
    let up = solve_upper(&problem.dual(), cfg)?;
    Ok(HjSolution { field: up.field.map(|v| -v), meta: up.meta })
}

struct SweepState<'a, T> {
    problem: &'a ShiftedEikonalProblem<T>,
    u: Vec<T>,
    scheme: Scheme,
    sigma: [T; 2],
    /// Values at or above this are "not yet reached".
    cap: T,
}

impl<'a, T: Real> SweepState<'a, T> {
    fn new(problem: &'a ShiftedEikonalProblem<T>, cfg: &SweepConfig) -> Result<Self> {
        let grid = problem.grid();
        let max_a = problem.a.max_norm();
        let mmax = grid.active().fold(T::zero(), |m, k| m.max(problem.rhs_at(k)));
        let need = T::lit(4.0) * mmax.sqrt();
        let sigma = match cfg.lf_dissipation {
            Some(s) => {
                let s = [T::lit(s[0]), T::lit(s[1])];
                if !(s[0] >= need && s[1] >= need) {
                    return invalid(format!("lf_dissipation must be at least 4 sqrt(max m) = {need}"));
                }
                s
            }
            None => [need.max(T::lit(2.0) * (mmax.sqrt() + max_a)); 2],
        };
        let (x0, x1, y0, y1) = grid.domain().bbox();
        let diam = (x1 - x0) + (y1 - y0);
        let fmax = grid.boundary().fold(T::zero(), |m, k| m.max(problem.f.get(k).abs()));
        let cap = match cfg.scheme {
            Scheme::Godunov => T::infinity(),
            Scheme::LaxFriedrichs => T::lit(10.0) * (fmax + diam * (T::one() + max_a) * mmax.sqrt() + T::one()),
        };
        let mut u = vec![cap; grid.len()];
        for k in grid.boundary() {
            u[k] = problem.f.get(k);
        }
        Ok(SweepState { problem, u, scheme: cfg.scheme, sigma, cap })
    }

    /// Four sweeps in the diagonal orderings; returns the largest decrease.
    fn cycle(&mut self) -> T {
        let grid = self.problem.grid().clone();
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut change = T::zero();
        for dir in 0..4 {
            let rev_i = dir == 1 || dir == 2;
            let rev_j = dir >= 2;
            for jj in 0..ny {
                let j = if rev_j { ny - 1 - jj } else { jj };
                for ii in 0..nx {
                    let i = if rev_i { nx - 1 - ii } else { ii };
                    let k = grid.index(i, j);
                    if grid.kind(k) != NodeKind::Interior {
                        continue;
                    }
                    let local = self.local(k);
                    let old = self.u[k];
                    if local < old {
                        self.u[k] = local;
                        let d = if old >= self.cap { T::infinity() } else { old - local };
                        if d > change {
                            change = d;
                        }
                    }
                }
            }
        }
        change
    }

    fn local(&self, k: usize) -> T {
        let grid = self.problem.grid();
        let arms = grid.arms(k);
        let a = self.problem.a.get(k);
        let m = self.problem.rhs_at(k);
        let mut nb = [T::zero(); 4];
        for (d, v) in nb.iter_mut().enumerate() {
            *v = grid.neighbor_value(&self.u, k, d);
        }
        match self.scheme {
            Scheme::Godunov => {
                // Per axis the flux is max over arms of ((u - c)^+ / l)^2 with
                // c = neighbour value minus the shift's work along the arm.
                let mut c = [[T::infinity(); 2]; 2];
                let mut l = [[T::one(); 2]; 2];
                for axis in 0..2 {
                    for side in 0..2 {
                        let d = 2 * axis + side;
                        let sgn = if side == 0 { T::one() } else { -T::one() };
                        l[axis][side] = arms[d];
                        if nb[d] < self.cap {
                            c[axis][side] = nb[d] - sgn * arms[d] * a[axis];
                        }
                    }
                }
                godunov_update(c, l, m)
            }
            Scheme::LaxFriedrichs => {
                // |q|^2 is continued linearly beyond |q| = sigma/4. The slope bound
                // sigma/2 keeps the scheme monotone even when one arm is a tiny cut,
                // and the sublevel set {H <= m} is unchanged since sigma/4 >= sqrt(m).
                let half = T::lit(0.5);
                let lam = T::lit(0.25) * self.sigma[0].min(self.sigma[1]);
                let mut num = T::zero();
                let mut den = T::zero();
                let mut q = [T::zero(); 2];
                for axis in 0..2 {
                    let (le, lw) = (arms[2 * axis], arms[2 * axis + 1]);
                    let (ue, uw) = (nb[2 * axis], nb[2 * axis + 1]);
                    let s = half * self.sigma[axis];
                    num = num + s * (ue / le + uw / lw);
                    den = den + s * (T::one() / le + T::one() / lw);
                    q[axis] = (ue - uw) / (le + lw) - a[axis];
                }
                let r = crate::scalar::norm2(q);
                let h = if r <= lam { r * r } else { T::lit(2.0) * lam * r - lam * lam } - m;
                (num - h) / den
            }
        }
    }
}

/// Solves `Σ_axis max_side ((u − c)^+ / l)^2 = m` for `u`.
pub(crate) fn godunov_update<T: Real>(c: [[T; 2]; 2], l: [[T; 2]; 2], m: T) -> T {
    let finite = |v: T| v.is_finite();
    if !c.iter().flatten().any(|&v| finite(v)) {
        return T::infinity();
    }
    let mut best = T::infinity();
    for cx in 0..3usize {
        for cy in 0..3usize {
            let choice = [cx, cy];
            let mut sw = T::zero();
            let mut swc = T::zero();
            let mut swcc = T::zero();
            let mut any = false;
            let mut ok = true;
            for axis in 0..2 {
                if choice[axis] < 2 {
                    let ci = c[axis][choice[axis]];
                    if !finite(ci) {
                        ok = false;
                        break;
                    }
                    let w = T::one() / (l[axis][choice[axis]] * l[axis][choice[axis]]);
                    sw = sw + w;
                    swc = swc + w * ci;
                    swcc = swcc + w * ci * ci;
                    any = true;
                }
            }
            if !ok || !any {
                continue;
            }
            let disc = swc * swc - sw * (swcc - m);
            if disc < T::zero() {
                continue;
            }
            let u = (swc + disc.sqrt()) / sw;
            if u >= best {
                continue;
            }
            let eps = T::lit(1e-12) * (T::one() + u.abs());
            let valid = (0..2).all(|axis| match choice[axis] {
                2 => c[axis].iter().all(|&cj| !(u > cj + eps)),
                s => {
                    let slope = (u - c[axis][s]) / l[axis][s];
                    let other = c[axis][1 - s];
                    let other_slope = if finite(other) { (u - other) / l[axis][1 - s] } else { T::neg_infinity() };
                    slope >= -eps && other_slope <= slope + eps
                }
            });
            if valid {
                best = u;
            }
        }
    }
    if best.is_finite() {
        return best;
    }
    // Rounding rejected every candidate; bisect the monotone flux instead.
    let flux = |u: T| {
        let mut acc = T::zero();
        for axis in 0..2 {
            let mut mx = T::zero();
            for side in 0..2 {
                if finite(c[axis][side]) {
                    mx = mx.max((u - c[axis][side]).max(T::zero()) / l[axis][side]);
                }
            }
            acc = acc + mx * mx;
        }
        acc
    };
    let mut lo = c.iter().flatten().copied().filter(|v| v.is_finite()).fold(T::infinity(), T::min);
    let mut hi = lo + l.iter().flatten().copied().fold(T::zero(), T::max) * m.sqrt();
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if flux(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Boundary nodes whose data exceeds what the path inequality allows from an
/// interior neighbour, `f(b) − h(x) > l (√m + a·e) + 2h(1 + |a|) + 10 tol`.
fn incompatible_boundary_nodes<T: Real>(problem: &ShiftedEikonalProblem<T>, h: &ScalarField<T>, tol: T) -> usize {
    let grid = problem.grid();
    let sp = grid.spacing();
    let mut bad = vec![false; grid.len()];
    for k in grid.interior() {
        let arms = grid.arms(k);
        let a = problem.a.get(k);
        let m = problem.rhs_at(k);
        for d in 0..4 {
            let b = grid.neighbor(k, d).expect("interior nodes have four neighbours");
            if grid.kind(b) != NodeKind::Boundary {
                continue;
            }
            let (di, dj) = crate::grid::DIRS[d];
            let ae = a[0] * T::lit(di as f64) + a[1] * T::lit(dj as f64);
            let slack = T::lit(2.0) * sp * (T::one() + crate::scalar::norm2(a)) + T::lit(10.0) * tol;
            if grid.neighbor_value(h.values(), k, d) - h.get(k) > arms[d] * (m.sqrt() + ae) + slack {
                bad[b] = true;
            }
        }
    }
    bad.iter().filter(|&&b| b).count()
}

/// `max (|∇h − a|² − m)` over interior nodes whose arms are all full, with
/// centred differences. Negative values mean a strict subsolution.
pub fn subsolution_residual<T: Real>(h: &ScalarField<T>, a: &VectorField2<T>, rhs: Option<&ScalarField<T>>) -> Result<T> {
    let grid = h.grid();
    let sp = grid.spacing();
    let mut worst = T::neg_infinity();
    for k in grid.interior() {
        if grid.arms(k).iter().any(|&l| l < sp) {
            continue;
        }
        let g = discrete_gradient(h, k)?;
        let ak = a.get(k);
        let m = rhs.map_or(T::one(), |r| r.get(k));
        let r = (g[0] - ak[0]).powi(2) + (g[1] - ak[1]).powi(2) - m;
        worst = worst.max(r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_scalar, sample_vector, Domain, Grid2D};
    use crate::oracles::cone_solution;
    use std::sync::Arc;

    fn disk(n: usize) -> Arc<Grid2D<f64>> {
        Arc::new(Grid2D::new(Domain::disk(1.0), n).unwrap())
    }

    fn constant_problem(g: &Arc<Grid2D<f64>>, a: [f64; 2], sign: Sign) -> ShiftedEikonalProblem<f64> {
        let a = VectorField2::constant(g.clone(), a);
        let f = ScalarField::constant(g.clone(), 0.0);
        ShiftedEikonalProblem::new(a, f, sign).unwrap()
    }

    fn sup_err(u: &ScalarField<f64>, v: &ScalarField<f64>) -> f64 {
        u.grid().active().map(|k| (u.get(k) - v.get(k)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn godunov_update_cases() {
        let inf = f64::INFINITY;
        let f = |c: [[f64; 2]; 2], l: [[f64; 2]; 2], m: f64| -> f64 { godunov_update(c, l, m) };
        // One finite neighbour: u = c + l sqrt(m).
        let u = f([[0.0, inf], [inf, inf]], [[0.1, 0.1], [0.1, 0.1]], 1.0);
        assert!((u - 0.1).abs() < 1e-15);
        // Two equal neighbours on different axes: u = c + l / sqrt(2).
        let u = f([[0.0, inf], [0.0, inf]], [[0.1, 0.1], [0.1, 0.1]], 1.0);
        assert!((u - 0.1 / 2f64.sqrt()).abs() < 1e-15);
        // A far neighbour on the second axis stays inactive.
        let u = f([[0.0, 0.5], [1.0, 2.0]], [[0.1, 0.1], [0.1, 0.1]], 1.0);
        assert!((u - 0.1).abs() < 1e-15);
        // Short arm wins.
        let u = f([[0.0, 0.0], [inf, inf]], [[0.1, 0.02], [0.1, 0.1]], 4.0);
        assert!((u - 0.04).abs() < 1e-15);
    }

    #[test]
    fn zero_shift_gives_distance_cone() {
        let g = disk(129);
        let p = constant_problem(&g, [0.0, 0.0], Sign::Plus);
        let h = solve_upper(&p, &SweepConfig::default()).unwrap();
        let exact = sample_scalar(&g, |x| 1.0 - x[0].hypot(x[1])).unwrap();
        assert!(sup_err(&h.field, &exact) <= 2.0 * g.spacing());
        assert!(h.meta.warnings.is_empty());
    }

    #[test]
    fn constant_shift_center_value() {
        let g = disk(129);
        let p = constant_problem(&g, [0.5, 0.0], Sign::Plus);
        let h = solve_upper(&p, &SweepConfig::default()).unwrap();
        let c = g.nearest_node([0.0, 0.0]).unwrap();
        assert!((h.field.get(c) - 0.5).abs() <= 2.0 * g.spacing());
        let lower = solve_lower(&constant_problem(&g, [0.5, 0.0], Sign::Minus), &SweepConfig::default()).unwrap();
        assert!((lower.field.get(c) + 0.5).abs() <= 2.0 * g.spacing());
    }

    #[test]
    fn lower_is_negated_cone() {
        let g = disk(65);
        let p = constant_problem(&g, [0.0, 0.0], Sign::Minus);
        let h = solve(&p, &SweepConfig::default()).unwrap();
        let exact = sample_scalar(&g, |x| x[0].hypot(x[1]) - 1.0).unwrap();
        assert!(sup_err(&h.field, &exact) <= 2.0 * g.spacing());
    }

    #[test]
    fn duality_is_bit_exact() {
        let g = disk(65);
        let a = sample_vector(&g, |x| [0.3 * x[1].sin(), 0.2 * x[0]]).unwrap();
        let f = sample_scalar(&g, |x| 0.1 * x[0]).unwrap();
        let minus = ShiftedEikonalProblem::new(a.clone(), f.clone(), Sign::Minus).unwrap();
        let lower = solve_lower(&minus, &SweepConfig::default()).unwrap();
        let up = solve_upper(&minus.dual(), &SweepConfig::default()).unwrap();
        for k in g.active() {
            assert_eq!(lower.field.get(k).to_bits(), (-up.field.get(k)).to_bits());
        }
        let plus = ShiftedEikonalProblem::new(a, f, Sign::Plus).unwrap();
        let upper = solve_upper(&plus, &SweepConfig::default()).unwrap();
        for k in g.active() {
            assert!(lower.field.get(k) <= upper.field.get(k) + 1e-9);
        }
    }

    #[test]
    fn wrong_sign_is_rejected() {
        let g = disk(17);
        assert!(solve_upper(&constant_problem(&g, [0.0, 0.0], Sign::Minus), &SweepConfig::default()).is_err());
        assert!(solve_lower(&constant_problem(&g, [0.0, 0.0], Sign::Plus), &SweepConfig::default()).is_err());
    }

    #[test]
    fn cone_error_is_first_order() {
        for a in [[0.0, 0.0], [0.5, 0.0], [0.0, -0.7]] {
            let mut errs = Vec::new();
            for n in [33, 65, 129] {
                let g = disk(n);
                let h = solve_upper(&constant_problem(&g, a, Sign::Plus), &SweepConfig::default()).unwrap();
                let exact = cone_solution(a, &g).unwrap();
                let e = sup_err(&h.field, &exact);
                assert!(e <= 4.0 * g.spacing(), "a={a:?} n={n} err={e}");
                errs.push(e);
            }
            assert!(errs[2] < errs[0]);
        }
    }

    #[test]
    fn lax_friedrichs_converges_to_cone() {
        let g = disk(33);
        let p = constant_problem(&g, [0.5, 0.0], Sign::Plus);
        let h = solve_upper(&p, &SweepConfig::lax_friedrichs()).unwrap();
        let exact = cone_solution([0.5, 0.0], &g).unwrap();
        assert!(sup_err(&h.field, &exact) < 0.2);
        let c = g.nearest_node([0.0, 0.0]).unwrap();
        assert!((h.field.get(c) - 0.5).abs() < 0.1);
    }

    #[test]
    fn too_little_dissipation_is_rejected() {
        let g = disk(17);
        let p = constant_problem(&g, [0.5, 0.0], Sign::Plus);
        let cfg = SweepConfig { lf_dissipation: Some([1.0, 1.0]), ..SweepConfig::lax_friedrichs() };
        assert!(solve_upper(&p, &cfg).is_err());
    }

    #[test]
    fn non_convergence_reports_residual() {
        let g = disk(65);
        let p = constant_problem(&g, [0.3, 0.3], Sign::Plus);
        let cfg = SweepConfig { max_cycles: 1, tol: Some(1e-14), ..SweepConfig::default() };
        match solve_upper(&p, &cfg) {
            Err(Error::NotConverged { iterations, .. }) => assert_eq!(iterations, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn incompatible_data_is_flagged() {
        let g = disk(33);
        let a = VectorField2::constant(g.clone(), [0.0, 0.0]);
        let f = sample_scalar(&g, |x| if x[0] > 0.9 { 5.0 } else { 0.0 }).unwrap();
        let p = ShiftedEikonalProblem::new(a, f, Sign::Plus).unwrap();
        let h = solve_upper(&p, &SweepConfig::default()).unwrap();
        assert!(h.meta.warnings.iter().any(|w| w.contains("path inequality")));
    }

    #[test]
    fn rhs_scales_the_cone() {
        let g = disk(65);
        let p = constant_problem(&g, [0.0, 0.0], Sign::Plus).with_rhs(ScalarField::constant(g.clone(), 4.0)).unwrap();
        let h = solve_upper(&p, &SweepConfig::default()).unwrap();
        let exact = sample_scalar(&g, |x| 2.0 * (1.0 - x[0].hypot(x[1]))).unwrap();
        assert!(sup_err(&h.field, &exact) <= 4.0 * g.spacing());
        assert!(constant_problem(&g, [0.0, 0.0], Sign::Plus).with_rhs(ScalarField::constant(g.clone(), 0.0)).is_err());
    }

    #[test]
    fn subsolution_residual_is_small() {
        let g = disk(129);
        let a = sample_vector(&g, |x| [0.3 * x[1], -0.2 * x[0]]).unwrap();
        let f = ScalarField::constant(g.clone(), 0.0);
        let p = ShiftedEikonalProblem::new(a.clone(), f, Sign::Plus).unwrap();
        let h = solve_upper(&p, &SweepConfig::default()).unwrap();
        let r = subsolution_residual(&h.field, &a, None).unwrap();
        assert!(r <= 10.0 * g.spacing(), "{r}");
    }

    #[test]
    fn works_in_f32() {
        let g: Arc<Grid2D<f32>> = Arc::new(Grid2D::new(Domain::disk(1.0f32), 33).unwrap());
        let a = VectorField2::constant(g.clone(), [0.0f32, 0.0]);
        let f = ScalarField::constant(g.clone(), 0.0f32);
        let p = ShiftedEikonalProblem::new(a, f, Sign::Plus).unwrap();
        let cfg = SweepConfig { tol: Some(1e-6), ..SweepConfig::default() };
        let h = solve_upper(&p, &cfg).unwrap();
        let c = g.nearest_node([0.0, 0.0]).unwrap();
        assert!((h.field.get(c) - 1.0).abs() < 2.0 * g.spacing());
    }
}
