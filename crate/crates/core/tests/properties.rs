use std::sync::Arc;

use proptest::prelude::*;

use hjreg_core::grid::{
    discrete_gradient, discrete_second_difference, holder_seminorm_estimate, sample_scalar, sample_vector, Domain, Grid2D, NodeKind,
    ScalarField, VectorField2,
};
use hjreg_core::hamilton_jacobi::{
    check_comparison_elliptic, randers_dijkstra_oracle, solve_lower, solve_upper, solve_upper_traced, subsolution_residual,
    ShiftedEikonalProblem, Sign, SweepConfig,
};
use hjreg_core::obstacle::{contact_mask, dirichlet_energy, solve_double_obstacle, solve_double_obstacle_traced, DoubleObstacleProblem};
use hjreg_core::oracles::{cone_solution, g_profile, MuellerExample};
use hjreg_core::regularity::{
    anisotropic_sup, beta_iteration, beta_step, fit_exponent, geometric_radii, onesided_modulus, prelim_bound, regime_bound_q, theorem_bound,
    BoundConstants, ModulusReport, Plane, QBlock,
};

fn disk(n: usize, r: f64) -> Arc<Grid2D<f64>> {
    Arc::new(Grid2D::new(Domain::disk(r), n).unwrap())
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn shift() -> impl Strategy<Value = [f64; 2]> {
    (0.0..0.8f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn masks_partition_and_hug_the_circle(n in 9usize..60, r in 0.3..3.0f64) {
        let g = disk(n, r);
        let h = g.spacing();
        let mut counts = [0usize; 3];
        for k in 0..g.len() {
            let p = g.coord(k);
            let rho = p[0].hypot(p[1]);
            match g.kind(k) {
                NodeKind::Interior => { counts[0] += 1; prop_assert!(rho < r); }
                NodeKind::Boundary => { counts[1] += 1; prop_assert!((rho - r).abs() <= h * (1.0 + 1e-12)); }
                NodeKind::Exterior => counts[2] += 1,
            }
        }
        prop_assert_eq!(counts.iter().sum::<usize>(), g.len());
        prop_assert!(counts[0] > 0 && counts[1] > 0);
    }

    #[test]
    fn differences_are_exact_on_polynomials(c in prop::array::uniform6(-2.0..2.0f64), j in 3usize..9) {
        // Width 2.5 and height 1.5 are both whole multiples of 0.5 / j.
        let g = Arc::new(Grid2D::new(Domain::rect(-1.0, 1.5, -0.5, 1.0), 5 * j + 1).unwrap());
        let affine = sample_scalar(&g, |p| c[0] + c[1] * p[0] + c[2] * p[1]).unwrap();
        let quad = sample_scalar(&g, |p| c[3] * p[0] * p[0] + c[4] * p[1] * p[1] + c[5] * p[0]).unwrap();
        for k in g.interior() {
            let d = discrete_gradient(&affine, k).unwrap();
            prop_assert!((d[0] - c[1]).abs() < 1e-11 && (d[1] - c[2]).abs() < 1e-11);
            prop_assert!((discrete_second_difference(&quad, k, 0).unwrap() - 2.0 * c[3]).abs() < 1e-8);
            prop_assert!((discrete_second_difference(&quad, k, 1).unwrap() - 2.0 * c[4]).abs() < 1e-8);
        }
    }

    #[test]
    fn holder_estimate_grows_with_samples(seed in any::<u64>(), s in 1usize..200) {
        let g = disk(33, 1.0);
        let f = sample_scalar(&g, |p| (3.0 * p[0]).sin() * p[1].abs().sqrt()).unwrap();
        let a = holder_seminorm_estimate(&f, 0.5, s, seed).unwrap();
        let b = holder_seminorm_estimate(&f, 0.5, s + 50, seed).unwrap();
        prop_assert!(b.seminorm >= a.seminorm);
    }

    #[test]
    fn sweep_never_increases_a_node(a in shift(), f0 in -1.0..1.0f64, f1 in -0.3..0.3f64) {
        let g = disk(25, 1.0);
        let f = sample_scalar(&g, |p| f0 + f1 * p[1]).unwrap();
        let p = ShiftedEikonalProblem::new(VectorField2::constant(g.clone(), a), f, Sign::Plus).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        let mut ok = true;
        solve_upper_traced(&p, &SweepConfig::default(), |_, u| {
            if let Some(q) = &prev {
                ok &= g.interior().all(|k| u[k] <= q[k]);
            }
            prev = Some(u.to_vec());
        }).unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn lower_is_the_negated_dual_bit_for_bit(a in shift(), f1 in -0.3..0.3f64) {
        let g = disk(25, 1.0);
        let f = sample_scalar(&g, |p| f1 * p[0] * p[1]).unwrap();
        let a_field = sample_vector(&g, |p| [a[0] + 0.1 * p[1], a[1]]).unwrap();
        let minus = ShiftedEikonalProblem::new(a_field.clone(), f.clone(), Sign::Minus).unwrap();
        let low = solve_lower(&minus, &SweepConfig::default()).unwrap().field;
        let dual = ShiftedEikonalProblem::new(a_field.map(|v| [-v[0], -v[1]]), f.map(|v| -v), Sign::Plus).unwrap();
        let up = solve_upper(&dual, &SweepConfig::default()).unwrap().field;
        for k in g.active() {
            prop_assert_eq!(low.get(k).to_bits(), (-up.get(k)).to_bits());
        }
    }

    #[test]
    fn constant_shift_sweep_is_a_subsolution_below_the_oracle(a in shift()) {
        let g = disk(33, 1.0);
        let p = ShiftedEikonalProblem::new(VectorField2::constant(g.clone(), a), ScalarField::constant(g.clone(), 0.0), Sign::Plus).unwrap();
        let cfg = SweepConfig::default();
        let h = solve_upper(&p, &cfg).unwrap().field;
        prop_assert!(subsolution_residual(&h, &p.a, None).unwrap() <= 10.0 * g.spacing());
        let d = randers_dijkstra_oracle(&p, 3).unwrap();
        for k in g.active() {
            prop_assert!(h.get(k) <= d.get(k) + 4.0 * 1e-10);
        }
    }

    #[test]
    fn larger_right_hand_side_gives_larger_solution(a in shift(), dm in 0.0..0.5f64) {
        let g = disk(25, 1.0);
        let n = ScalarField::constant(g.clone(), 1.0);
        let m = ScalarField::constant(g.clone(), 1.0 + dm);
        let base = ShiftedEikonalProblem::new(VectorField2::constant(g.clone(), [0.3 * a[0], 0.3 * a[1]]), ScalarField::constant(g.clone(), 0.0), Sign::Plus).unwrap();
        let u = solve_upper(&base.clone().with_rhs(n.clone()).unwrap(), &SweepConfig::default()).unwrap().field;
        let v = solve_upper(&base.with_rhs(m.clone()).unwrap(), &SweepConfig::default()).unwrap().field;
        prop_assert!(check_comparison_elliptic(&u, &v, &m, &n, 1.0, 1.0, 1e-10).unwrap().pass);
    }
}

/// Obstacles `base ± gap(x)` with boundary data between them.
fn obstacle_problem(g: &Arc<Grid2D<f64>>, c: [f64; 4]) -> DoubleObstacleProblem<f64> {
    let base = move |p: [f64; 2]| c[0] * p[0] + c[1] * (3.0 * p[1]).sin();
    let gap = move |p: [f64; 2]| c[2] + c[3] * (p[0] * p[0] + p[1] * p[1]);
    let lo = sample_scalar(g, move |p| base(p) - gap(p)).unwrap();
    let hi = sample_scalar(g, move |p| base(p) + 0.5 * gap(p)).unwrap();
    let f = sample_scalar(g, base).unwrap();
    DoubleObstacleProblem::new(lo, hi, f).unwrap()
}

fn obstacle_coeffs() -> impl Strategy<Value = [f64; 4]> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.0..0.05f64, 0.0..0.3f64).prop_map(|(a, b, c, d)| [a, b, c, d])
}

const OBS_TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn obstacle_output_is_exactly_feasible(c in obstacle_coeffs()) {
        let g = disk(25, 1.0);
        let p = obstacle_problem(&g, c);
        let u = solve_double_obstacle(&p, OBS_TOL, 200_000).unwrap();
        for k in g.active() {
            prop_assert!(p.h_minus.get(k) <= u.get(k) && u.get(k) <= p.h_plus.get(k));
        }
    }

    #[test]
    fn energy_descends_on_rectangles(c in obstacle_coeffs()) {
        let g = Arc::new(Grid2D::new(Domain::rect(-1.0, 1.0, -0.75, 0.75), 21).unwrap());
        let p = obstacle_problem(&g, c);
        let mut energies = Vec::new();
        solve_double_obstacle_traced(&p, OBS_TOL, 200_000, |u| energies.push(dirichlet_energy(&g, u))).unwrap();
        for w in energies.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "{} > {}", w[1], w[0]);
        }
    }

    #[test]
    fn free_nodes_lie_between_their_neighbours(c in obstacle_coeffs()) {
        let g = disk(25, 1.0);
        let p = obstacle_problem(&g, c);
        let u = solve_double_obstacle(&p, OBS_TOL, 200_000).unwrap();
        let tol = 10.0 * OBS_TOL;
        let on_hi = contact_mask(&u, &p.h_plus, tol);
        let on_lo = contact_mask(&u, &p.h_minus, tol);
        for k in g.interior() {
            if on_hi[k] || on_lo[k] {
                continue;
            }
            let nb: Vec<f64> = (0..4).map(|d| g.neighbor_value(u.values(), k, d)).collect();
            let lo = nb.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = nb.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(u.get(k) >= lo - tol && u.get(k) <= hi + tol);
        }
    }

    #[test]
    fn raising_the_upper_obstacle_never_lowers_the_solution(c in obstacle_coeffs(), lift in 0.0..0.2f64) {
        let g = disk(25, 1.0);
        let p = obstacle_problem(&g, c);
        let u = solve_double_obstacle(&p, OBS_TOL, 200_000).unwrap();
        let raised = sample_scalar(&g, |x| lift * (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)).unwrap();
        let q = DoubleObstacleProblem::new(p.h_minus.clone(), p.h_plus.zip_map(&raised, |a, b| a + b), p.f.clone()).unwrap();
        let v = solve_double_obstacle(&q, OBS_TOL, 200_000).unwrap();
        // Both iterates stop within the sweep tolerance of their fixed points.
        let slack = 1e3 * OBS_TOL;
        for k in g.active() {
            prop_assert!(v.get(k) >= u.get(k) - slack, "{} < {}", v.get(k), u.get(k));
        }
    }

    #[test]
    fn mirror_symmetric_data_give_mirror_symmetric_output(b in -1.0..1.0f64, gap in 0.0..0.3f64) {
        let g = disk(25, 1.0);
        let lo = sample_scalar(&g, |p| b * p[1] - gap - p[0] * p[0]).unwrap();
        let hi = sample_scalar(&g, |p| b * p[1] + 0.5 * gap * (1.0 - p[0] * p[0])).unwrap();
        let f = sample_scalar(&g, |p| b * p[1]).unwrap();
        let p = DoubleObstacleProblem::new(lo, hi, f).unwrap();
        let u = solve_double_obstacle(&p, OBS_TOL, 200_000).unwrap();
        let slack = 1e3 * OBS_TOL;
        for k in g.active() {
            let (i, j) = g.ij(k);
            let m = g.index(g.nx() - 1 - i, j);
            prop_assert!((u.get(k) - u.get(m)).abs() <= slack);
        }
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn onesided_modulus_is_monotone_in_r(c in prop::array::uniform4(-2.0..2.0f64)) {
        let g = disk(33, 1.0);
        let f = sample_scalar(&g, |p| c[0] * p[0].abs().powf(1.3) + c[1] * (2.0 * p[1]).cos() + c[2] * p[0] * p[1]).unwrap();
        let plane = Plane { center: [0.0, 0.0], value: c[3], gradient: [c[3], -c[2]] };
        let radii = geometric_radii(0.8, 0.13, 3);
        let rep = onesided_modulus(&f, [0.0, 0.0], &plane, &radii).unwrap();
        for w in rep.oscillations.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        for w in rep.twosided.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn fit_recovers_power_laws(beta in 0.01..1.0f64, c in 0.01..100.0f64) {
        let radii = geometric_radii(0.5, 1e-3, 3);
        let rep = ModulusReport {
            center: [0.0, 0.0],
            plane: Plane { center: [0.0, 0.0], value: 0.0, gradient: [0.0, 0.0] },
            oscillations: radii.iter().map(|r| c * r.powf(1.0 + beta)).collect(),
            twosided: vec![0.0; radii.len()],
            radii,
            window: None,
            fitted_beta: None,
            fitted_c: None,
            regime_switch_radius: None,
        };
        let (b, k) = fit_exponent(&rep, [1e-3, 0.5]).unwrap();
        prop_assert!((b - beta).abs() < 1e-9);
        prop_assert!((k / c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn anisotropic_sup_is_scale_free(
        pts in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..60),
        r in 0.05..1.0f64,
        beta in 0.05..0.5f64,
        a in 0.05..2.0f64,
    ) {
        let p: Vec<[f64; 2]> = pts.iter().map(|t| [t.0, t.1]).collect();
        let h: Vec<f64> = pts.iter().map(|t| t.2).collect();
        let g: Vec<f64> = pts.iter().map(|t| t.3).collect();
        let s = a.powf((1.0 - beta) / 2.0);
        let scale = s * r.powf(1.0 + beta);
        let q: Vec<[f64; 2]> = p.iter().map(|y| [y[0] / r, s * y[1] / r.powf(1.0 - beta)]).collect();
        let v: Vec<f64> = h.iter().zip(&g).map(|(x, y)| (x + y) / scale).collect();
        let zero = vec![0.0; v.len()];
        // Points on the rim of K(r) are decided by rounding; keep them off it.
        prop_assume!(q.iter().all(|y| ((y[0] * y[0] + y[1] * y[1]) - 1.0).abs() > 1e-9));
        let lhs = anisotropic_sup(&p, &h, &g, r, beta, a);
        let rhs = anisotropic_sup(&q, &v, &zero, 1.0, beta, 1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn beta_iteration_climbs_to_half_alpha(alpha in 0.01..1.0f64) {
        let it = beta_iteration(alpha, 60).unwrap();
        for w in it.betas.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        // The limit is approached from below; allow for the last rounding.
        prop_assert!(it.betas.iter().all(|&b| b <= alpha / 2.0 * (1.0 + f64::EPSILON)));
        let half = alpha / 2.0;
        prop_assert_eq!(beta_iteration(alpha, 1).unwrap().betas[0], alpha / (2.0 + alpha));
        prop_assert_eq!(beta_step(alpha, half), half);
    }

    #[test]
    fn q_rows_cover_every_delta(
        la in -6.0..3.0f64,
        lr in -3.0..2.0f64,
        alpha in 0.05..1.0f64,
        t in 0.0..1.0f64,
        ld in -8.0..4.0f64,
    ) {
        let (a, big_r, delta) = (10f64.powf(la), 10f64.powf(lr), 10f64.powf(ld));
        let beta = alpha / (2.0 + alpha) + t * (alpha / 2.0 - alpha / (2.0 + alpha));
        let k = BoundConstants::default();
        for block in [QBlock::RSmall, QBlock::RSweep] {
            prop_assert!(regime_bound_q(delta, a, big_r, alpha, beta, block, &k).is_ok());
        }
    }

    #[test]
    fn bounds_join_at_their_switches(la in -4.0..0.0f64, alpha in 0.05..1.0f64, lr in -1.0..1.0f64) {
        let (a, big_r) = (10f64.powf(la), 10f64.powf(lr));
        let k = BoundConstants::default();
        let s = a.powf(1.0 / (2.0 - alpha));
        let l = theorem_bound(s, a, alpha, &k).unwrap().value;
        let r = theorem_bound(s * (1.0 + 1e-12), a, alpha, &k).unwrap().value;
        prop_assert!(l / r >= 0.1 && l / r <= 10.0);
        let s = prelim_bound(1.0, a, big_r, alpha, &k).unwrap().switch_radius;
        let l = prelim_bound(s * (1.0 - 1e-12), a, big_r, alpha, &k).unwrap().value;
        let r = prelim_bound(s * (1.0 + 1e-12), a, big_r, alpha, &k).unwrap().value;
        prop_assert!(l / r >= 0.1 && l / r <= 10.0);
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn mueller_profile_is_odd_increasing_with_the_right_slope(alpha in 0.1..1.0f64, t in 0.1..0.9f64) {
        let ex = MuellerExample::new(alpha).unwrap();
        let h = 1e-3;
        prop_assert_eq!(ex.b(-t).unwrap(), -ex.b(t).unwrap());
        prop_assert!(ex.b(t + h).unwrap() > ex.b(t).unwrap());
        let cd = (ex.b(t + h).unwrap() - ex.b(t - h).unwrap()) / (2.0 * h);
        prop_assert!((cd - ex.b_prime(t)).abs() < 1e-4);
    }

    #[test]
    fn cone_is_lipschitz_in_the_randers_metric(a in shift(), pairs in prop::collection::vec((0usize..10_000, 0usize..10_000), 20)) {
        let g = disk(21, 1.0);
        let h = cone_solution(a, &g).unwrap();
        let act: Vec<usize> = g.active().collect();
        for (i, j) in pairs {
            let (k, l) = (act[i % act.len()], act[j % act.len()]);
            let (x, z) = (g.coord(k), g.coord(l));
            let d = [x[0] - z[0], x[1] - z[1]];
            prop_assert!(h.get(k) - h.get(l) <= d[0].hypot(d[1]) + a[0] * d[0] + a[1] * d[1] + 1e-9);
        }
    }

    #[test]
    fn g_profile_integrates_powers(alpha in 0.1..1.0f64, c in -2.0..2.0f64) {
        let ts: Vec<f64> = (-16..=16).map(|i| i as f64 / 32.0).collect();
        let g = g_profile(|s: f64| Some(c * s.abs().powf(alpha)), &ts).unwrap();
        for (t, v) in ts.iter().zip(&g) {
            let want = -c * t.signum() * t.abs().powf(1.0 + alpha) / (1.0 + alpha);
            prop_assert!((v - want).abs() < 1e-3 * c.abs().max(1e-3), "{t}: {v} vs {want}");
        }
    }
}
