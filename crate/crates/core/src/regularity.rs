//! Regularity measurements: one-sided moduli against a plane, fitted Hölder
//! exponents, anisotropic and lateral oscillations in a normalized frame,
//! supergradient growth, and the closed-form bounds they are compared with.
//!
//! Reports are `f64` whatever the field's scalar type.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid2D, ScalarField, VectorField2};
use crate::oracles::g_profile;
use crate::scalar::Real;

/// Constants the bounds leave unquantified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundConstants {
    pub c: f64,
    pub c_alpha: f64,
    pub c_nf: f64,
    pub e_beta: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants { c: 10.0, c_alpha: 10.0, c_nf: 10.0, e_beta: 10.0 }
    }
}

/// Affine function `value + gradient · (x − center)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub center: [f64; 2],
    pub value: f64,
    pub gradient: [f64; 2],
}

impl Plane {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.value + self.gradient[0] * (x[0] - self.center[0]) + self.gradient[1] * (x[1] - self.center[1])
    }
}

fn pt<T: Real>(p: [T; 2]) -> [f64; 2] {
    [p[0].as_f64(), p[1].as_f64()]
}

fn require_ball<T: Real>(grid: &Grid2D<T>, center: [f64; 2], r: f64) -> Result<()> {
    let depth = grid.domain().depth([T::lit(center[0]), T::lit(center[1])]).as_f64();
    if r > depth * (1.0 + 1e-12) {
        return Err(Error::OutsideDomain { x: center[0], y: center[1], radius: r });
    }
    Ok(())
}

/// Solves the 3×3 system by Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        for r in 0..3 {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..4 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Least-squares affine fit over the active nodes within `fit_radius` of `center`.
pub fn local_plane_fit<T: Real>(field: &ScalarField<T>, center: [T; 2], fit_radius: T) -> Result<Plane> {
    let grid = field.grid();
    let c = pt(center);
    let r = fit_radius.as_f64();
    if !(r >= 3.0 * grid.spacing().as_f64() * (1.0 - 1e-12)) {
        return invalid(format!("fit radius {r} is below three spacings"));
    }
    require_ball(grid, c, r)?;
    let nodes = grid.nodes_in_ball(center, fit_radius);
    if nodes.len() < 6 {
        return invalid(format!("only {} nodes in the fit ball", nodes.len()));
    }
    let mut m = [[0.0; 4]; 3];
    for &k in &nodes {
        let p = pt(grid.coord(k));
        let row = [1.0, p[0] - c[0], p[1] - c[1]];
        let v = field.get(k).as_f64();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            m[i][3] += row[i] * v;
        }
    }
    let s = solve3(m).ok_or_else(|| Error::InvalidInput("fit ball nodes are collinear".into()))?;
    Ok(Plane { center: c, value: s[0], gradient: [s[1], s[2]] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub center: [f64; 2],
    pub plane: Plane,
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    /// `max_{B_r} (u − plane)`.
    pub oscillations: Vec<f64>,
    /// `max_{B_r} (u − plane) − min_{B_r} (u − plane)`.
    pub twosided: Vec<f64>,
    pub window: Option<[f64; 2]>,
    pub fitted_beta: Option<f64>,
    pub fitted_c: Option<f64>,
    pub regime_switch_radius: Option<f64>,
}

/// One-sided and two-sided oscillation of `field − plane` over balls about `center`.
pub fn onesided_modulus<T: Real>(field: &ScalarField<T>, center: [T; 2], plane: &Plane, radii: &[T]) -> Result<ModulusReport> {
    let grid = field.grid();
    let c = pt(center);
    let h = grid.spacing().as_f64();
    let radii: Vec<f64> = radii.iter().map(|r| r.as_f64()).collect();
    if radii.is_empty() {
        return invalid("no radii");
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("radii must be strictly decreasing");
    }
    if radii.iter().any(|&r| !(r >= 2.0 * h * (1.0 - 1e-12))) {
        return invalid("radii must be at least two spacings");
    }
    require_ball(grid, c, radii[0])?;
    let mut pts: Vec<(f64, f64)> = grid
        .nodes_in_ball(center, T::lit(radii[0]))
        .into_iter()
        .map(|k| {
            let p = pt(grid.coord(k));
            ((p[0] - c[0]).hypot(p[1] - c[1]), field.get(k).as_f64() - plane.eval(p))
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut oscillations = vec![f64::NEG_INFINITY; radii.len()];
    let mut twosided = vec![0.0; radii.len()];
    // Radii ascend from the back, so sweep points outward once.
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut it = pts.iter().peekable();
    for idx in (0..radii.len()).rev() {
        let lim = radii[idx] * (1.0 + 1e-12);
        while let Some(&&(d, v)) = it.peek() {
            if d > lim {
                break;
            }
            hi = hi.max(v);
            lo = lo.min(v);
            it.next();
        }
        if hi == f64::NEG_INFINITY {
            return invalid(format!("no nodes within radius {}", radii[idx]));
        }
        oscillations[idx] = hi;
        twosided[idx] = hi - lo;
    }
    Ok(ModulusReport {
        center: c,
        plane: *plane,
        radii,
        oscillations,
        twosided,
        window: None,
        fitted_beta: None,
        fitted_c: None,
        regime_switch_radius: None,
    })
}

/// `[8 spacing, R/4]`.
pub fn default_window(spacing: f64, radius: f64) -> [f64; 2] {
    [8.0 * spacing, 0.25 * radius]
}

/// Radii `r_max 2^{−j/per_octave}` down to `r_min`.
pub fn geometric_radii(r_max: f64, r_min: f64, per_octave: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut j = 0;
    loop {
        let r = r_max * (-(j as f64) / per_octave as f64).exp2();
        if r < r_min * (1.0 - 1e-12) {
            break;
        }
        out.push(r);
        j += 1;
    }
    out
}

/// [`geometric_radii`] rounded to whole multiples of `spacing`, so that a
/// ball's sup is not a stair function of the radius.
pub fn lattice_radii(spacing: f64, r_max: f64, r_min: f64, per_octave: usize) -> Vec<f64> {
    let mut out: Vec<f64> = geometric_radii(r_max, r_min, per_octave).into_iter().map(|r| (r / spacing).round() * spacing).collect();
    out.dedup();
    out
}

/// Slope of `log osc` against `log r` over the radii in `window`, minus one,
/// and `exp` of the intercept.
pub fn fit_exponent(report: &ModulusReport, window: [f64; 2]) -> Result<(f64, f64)> {
    let (lo, hi) = (window[0] * (1.0 - 1e-12), window[1] * (1.0 + 1e-12));
    let pts: Vec<(f64, f64)> = report
        .radii
        .iter()
        .zip(&report.oscillations)
        .filter(|&(&r, &o)| r >= lo && r <= hi && o > 1e-10)
        .map(|(&r, &o)| (r.ln(), o.ln()))
        .collect();
    if pts.len() < 4 {
        return invalid(format!("{} usable radii in window {window:?}, need 4", pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return invalid("degenerate fitting window");
    }
    let slope = sxy / sxx;
    Ok((slope - 1.0, (my - slope * mx).exp()))
}

impl ModulusReport {
    /// Fits the exponent over `window` and records the result.
    pub fn fit(&mut self, window: [f64; 2]) -> Result<(f64, f64)> {
        let (beta, c) = fit_exponent(self, window)?;
        self.window = Some(window);
        self.fitted_beta = Some(beta);
        self.fitted_c = Some(c);
        Ok((beta, c))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    /// 1 or 2.
    pub regime: u8,
    pub switch_radius: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    Ok(())
}

/// `C(α) √A r^{1+α/2}` up to `r = A^{1/(2−α)}`, `C r²` beyond.
pub fn theorem_bound(r: f64, a: f64, alpha: f64, k: &BoundConstants) -> Result<BoundValue> {
    check_alpha(alpha)?;
    if !(a > 0.0 && r > 0.0) {
        return invalid("A and r must be positive");
    }
    let switch_radius = a.powf(1.0 / (2.0 - alpha));
    Ok(if r <= switch_radius {
        BoundValue { value: k.c_alpha * a.sqrt() * r.powf(1.0 + alpha / 2.0), regime: 1, switch_radius }
    } else {
        BoundValue { value: k.c * r * r, regime: 2, switch_radius }
    })
}

/// `C A^{1/(2+α)} r^{1+α/(2+α)}` for `r ≤ min(A^{1/2} R^{(2+α)/2}, R)`, and
/// `C r²/R` for `A^{1/2} R^{(2+α)/2} ≤ r ≤ A^{−1/α}`. Beyond `A^{−1/α}` the
/// first form holds again.
pub fn prelim_bound(r: f64, a: f64, big_r: f64, alpha: f64, k: &BoundConstants) -> Result<BoundValue> {
    check_alpha(alpha)?;
    if !(a > 0.0 && r > 0.0 && big_r > 0.0) {
        return invalid("A, R and r must be positive");
    }
    let s = a.sqrt() * big_r.powf((2.0 + alpha) / 2.0);
    let switch_radius = s.min(big_r);
    let one = BoundValue { value: k.c * a.powf(1.0 / (2.0 + alpha)) * r.powf(1.0 + alpha / (2.0 + alpha)), regime: 1, switch_radius };
    if r <= switch_radius {
        return Ok(one);
    }
    if r >= s && r <= a.powf(-1.0 / alpha) {
        return Ok(BoundValue { value: k.c * r * r / big_r, regime: 2, switch_radius });
    }
    Ok(one)
}

/// Which table of the lateral bound applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QBlock {
    /// `R = min(A^{1/2} R^{1/(1−β)}, R)`.
    RSmall,
    /// `A^{1/2} R^{1/(1−β)} = min(A^{1/2} R^{1/(1−β)}, R)`.
    RSweep,
}

pub fn select_q_block(a: f64, big_r: f64, beta: f64) -> QBlock {
    if big_r <= a.sqrt() * big_r.powf(1.0 / (1.0 - beta)) {
        QBlock::RSmall
    } else {
        QBlock::RSweep
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QBound {
    pub value: f64,
    pub block: QBlock,
    /// 1-based row of the table.
    pub row: u8,
}

impl QBound {
    pub fn label(&self) -> String {
        let b = match self.block {
            QBlock::RSmall => 1,
            QBlock::RSweep => 2,
        };
        format!("block{b}/row{}", self.row)
    }
}

/// Lateral bound `Q(δ)`: the first row of `block` whose thresholds admit `δ`.
#[allow(clippy::too_many_arguments)]
pub fn regime_bound_q(delta: f64, a: f64, big_r: f64, alpha: f64, beta: f64, block: QBlock, k: &BoundConstants) -> Result<QBound> {
    check_alpha(alpha)?;
    let slack = 1e-12;
    if !(beta >= alpha / (2.0 + alpha) - slack && beta <= alpha / 2.0 + slack) {
        return invalid(format!("beta {beta} outside [alpha/(2+alpha), alpha/2]"));
    }
    if !(delta > 0.0 && a > 0.0 && big_r > 0.0) {
        return invalid("delta, A and R must be positive");
    }
    let (al, be, c, d) = (alpha, beta, k.c, delta);
    let t = a.powf((6.0 * be + al * be - 2.0 - al) / (2.0 * (4.0 * be - al)));
    let s = a.powf(-be / (al - 2.0 * be));
    let row1 = c * a.powf(0.5 - al * be / (2.0 * (2.0 + al - 2.0 * be))) * d.powf(1.0 + al / (2.0 + al - 2.0 * be));
    let row3 = c * a.powf((1.0 + be) / 2.0) * d.powf(1.0 + al - be);
    let row4 = c * a.powf((1.0 - be) / (1.0 + be)) * d.powf(1.0 + 2.0 * be / (1.0 + be));
    let rows: [(bool, f64); 5] = match block {
        QBlock::RSmall => {
            let u = a.powf(be / 2.0) * big_r.powf((2.0 + al - 2.0 * be) / 2.0);
            let w = a.powf(-(1.0 - be) / (2.0 * be));
            let x = a.powf((1.0 - be) / 2.0) * big_r.powf(1.0 + be);
            [
                (d <= t.min(s).min(u), row1),
                (u <= d && d <= t, c * a.powf((1.0 - be) / 2.0) * big_r.powf(be - 1.0) * d * d),
                (s <= d && d <= t, row3),
                (t <= d && d <= w.min(x), row4),
                (w.max(t).min(x.max(t)) <= d, c * a.powf(1.5 * (1.0 - be)) * d.powf(1.0 + 3.0 * be)),
            ]
        }
        QBlock::RSweep => {
            let u = a.powf((2.0 + al) / 4.0) * big_r.powf((2.0 + al - 2.0 * be) / (2.0 * (1.0 - be)));
            let y = a * big_r.powf((1.0 + be) / (1.0 - be));
            [
                (d <= t.min(s).min(u), row1),
                (u <= d && d <= t, c * d * d / big_r),
                (s <= d && d <= t, row3),
                (t <= d && d <= y, row4),
                (y.max(t) <= d, c * d * d / big_r),
            ]
        }
    };
    rows.iter()
        .position(|r| r.0)
        .map(|i| QBound { value: rows[i].1, block, row: i as u8 + 1 })
        .ok_or_else(|| Error::InvalidInput(format!("no row of {block:?} admits delta = {delta}")))
}

/// `h` and `a` in the frame where the centre is the origin, the tangent plane
/// is subtracted, and the shifted vector `a(0) − ∇h(0)` points along `+x₂`.
#[derive(Clone, Debug)]
pub struct NormalizedData<T> {
    /// `h − plane`, on the original grid.
    pub h: ScalarField<T>,
    /// Original shift, kept for sampling along the normal axis.
    a: VectorField2<T>,
    pub center: [f64; 2],
    pub plane: Plane,
    /// Rows map original offsets to normalized coordinates.
    pub rotation: [[f64; 2]; 2],
    /// Distance from the centre to the domain boundary.
    pub radius: f64,
}

impl<T: Real> NormalizedData<T> {
    pub fn grid(&self) -> &Arc<Grid2D<T>> {
        self.h.grid()
    }

    /// Normalized coordinates of an original point.
    pub fn to_local(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let q = &self.rotation;
        [q[0][0] * d[0] + q[0][1] * d[1], q[1][0] * d[0] + q[1][1] * d[1]]
    }

    /// Original point of normalized coordinates `y`.
    pub fn to_global(&self, y: [f64; 2]) -> [f64; 2] {
        let q = &self.rotation;
        [self.center[0] + q[0][0] * y[0] + q[1][0] * y[1], self.center[1] + q[0][1] * y[0] + q[1][1] * y[1]]
    }

    /// `b(y) = Q (a − ∇h(0)) − e₂` at normalized `y`, by bilinear interpolation.
    pub fn b_at(&self, y: [f64; 2]) -> Option<[f64; 2]> {
        let x = self.to_global(y);
        let a = self.a.interpolate([T::lit(x[0]), T::lit(x[1])])?;
        let v = [a[0].as_f64() - self.plane.gradient[0], a[1].as_f64() - self.plane.gradient[1]];
        let q = &self.rotation;
        Some([q[0][0] * v[0] + q[0][1] * v[1], q[1][0] * v[0] + q[1][1] * v[1] - 1.0])
    }

    /// Normalized `h` at normalized `y`, by bilinear interpolation.
    pub fn h_at(&self, y: [f64; 2]) -> Option<f64> {
        let x = self.to_global(y);
        self.h.interpolate([T::lit(x[0]), T::lit(x[1])]).map(|v| v.as_f64())
    }

    /// `(normalized coordinates, normalized h)` of every active node.
    pub fn nodes(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        let grid = self.grid();
        grid.active().map(move |k| (self.to_local(pt(grid.coord(k))), self.h.get(k).as_f64()))
    }
}

fn vector_at<T: Real>(a: &VectorField2<T>, p: [f64; 2]) -> Option<[f64; 2]> {
    let grid = a.grid();
    let pt_t = [T::lit(p[0]), T::lit(p[1])];
    if let Some(k) = grid.nearest_node(pt_t) {
        let q = pt(grid.coord(k));
        if (q[0] - p[0]).hypot(q[1] - p[1]) <= 1e-9 * grid.spacing().as_f64() {
            return Some(pt(a.get(k)));
        }
    }
    a.interpolate(pt_t).map(pt)
}

/// Moves `center` to the origin, subtracts `plane` from `h`, and rotates so
/// that `a(center) − ∇plane` maps to `+e₂`. The shifted vector must have unit
/// length within `1e-2`.
pub fn normalize_at_point<T: Real>(h: &ScalarField<T>, a: &VectorField2<T>, center: [T; 2], plane: &Plane) -> Result<NormalizedData<T>> {
    let grid = h.grid().clone();
    if !crate::hamilton_jacobi::same_grid(&grid, a.grid()) {
        return invalid("h and a live on different grids");
    }
    let c = pt(center);
    let radius = grid.domain().depth(center).as_f64();
    if !(radius > 0.0) {
        return Err(Error::OutsideDomain { x: c[0], y: c[1], radius: 0.0 });
    }
    let ac = vector_at(a, c).ok_or(Error::OutsideDomain { x: c[0], y: c[1], radius: 0.0 })?;
    let v = [ac[0] - plane.gradient[0], ac[1] - plane.gradient[1]];
    let len = v[0].hypot(v[1]);
    if !((len - 1.0).abs() <= 1e-2) {
        return invalid(format!("|a − ∇h| = {len} at the centre; the equation does not hold there"));
    }
    let (cs, sn) = (v[0] / len, v[1] / len);
    let rotation = [[sn, -cs], [cs, sn]];
    let plane_c = *plane;
    let hn = ScalarField::from_values(
        grid.clone(),
        (0..grid.len())
            .map(|k| if grid.is_active(k) { h.get(k) - T::lit(plane_c.eval(pt(grid.coord(k)))) } else { T::nan() })
            .collect(),
    )?;
    Ok(NormalizedData { h: hn, a: a.clone(), center: c, plane: plane_c, rotation, radius })
}

/// `sup_{K(r)} |h + g(y₂)| / (A^{(1−β)/2} r^{1+β})` over the given points,
/// where `K(r) = {(y₁/r)² + (A^{(1−β)/2} y₂ / r^{1−β})² ≤ 1}` and `g[i]` is
/// `g` at `points[i][1]`.
pub fn anisotropic_sup(points: &[[f64; 2]], h: &[f64], g: &[f64], r: f64, beta: f64, a: f64) -> f64 {
    let s = a.powf((1.0 - beta) / 2.0);
    let scale = s * r.powf(1.0 + beta);
    let mut sup = 0.0f64;
    for i in 0..points.len() {
        let y = points[i];
        let e = (y[0] / r).powi(2) + (s * y[1] / r.powf(1.0 - beta)).powi(2);
        if e <= 1.0 + 1e-12 {
            sup = sup.max((h[i] + g[i]).abs());
        }
    }
    sup / scale
}

/// Semi-axes of `K(r)`: `(r, A^{−(1−β)/2} r^{1−β})`.
pub fn anisotropic_axes(r: f64, beta: f64, a: f64) -> [f64; 2] {
    [r, a.powf(-(1.0 - beta) / 2.0) * r.powf(1.0 - beta)]
}

/// [`anisotropic_sup`] on the normalized nodes for each radius, with `g`
/// integrated from `e₂ · b(0, t)`.
pub fn anisotropic_oscillation<T: Real>(nd: &NormalizedData<T>, beta: f64, a: f64, radii: &[f64]) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 1.0 && a > 0.0) {
        return invalid("need 0 < beta < 1 and A > 0");
    }
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let ax = anisotropic_axes(r, beta, a);
        let reach = ax[0].max(ax[1]);
        if !(r > 0.0) || reach > nd.radius * (1.0 + 1e-12) {
            return Err(Error::OutsideDomain { x: nd.center[0], y: nd.center[1], radius: reach });
        }
        let (pts, hs): (Vec<[f64; 2]>, Vec<f64>) = nd.nodes().filter(|(y, _)| y[0].hypot(y[1]) <= reach * (1.0 + 1e-9)).unzip();
        let ts: Vec<f64> = pts.iter().map(|y| y[1]).collect();
        let g = g_profile(|t: f64| nd.b_at([0.0, t]).map(|b| b[1]), &ts)?;
        out.push(anisotropic_sup(&pts, &hs, &g, r, beta, a));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LateralReport {
    pub level: f64,
    pub delta: f64,
    /// `min_p sup_{|y₁| ≤ δ} (h(y₁, level) − h(0, level) − p y₁)`.
    pub value: f64,
    pub slope: f64,
    /// Whether `0 < level < A^{−(1−β)/2} δ^{1−β}`.
    pub in_range: bool,
}

/// `min_p max_i (r_i − p y_i)` for a convex piecewise-linear objective.
fn best_lateral_slope(ys: &[f64], rs: &[f64]) -> (f64, f64) {
    let f = |p: f64| ys.iter().zip(rs).fold(f64::NEG_INFINITY, |m, (&y, &r)| m.max(r - p * y));
    let quotients = ys.iter().zip(rs).filter(|(y, _)| **y != 0.0).map(|(&y, &r)| r / y);
    let (mut lo, mut hi) = quotients.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), q| (l.min(q), h.max(q)));
    if !(lo <= hi) {
        return (0.0, f(0.0));
    }
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let p = 0.5 * (lo + hi);
    (p, f(p))
}

/// One-sided lateral remainder on the segment `{|y₁| ≤ δ, y₂ = level}` of the
/// normalized frame, sampled at the grid spacing and read by bilinear
/// interpolation.
pub fn lateral_modulus<T: Real>(nd: &NormalizedData<T>, level: f64, delta: f64, beta: f64, a: f64) -> Result<LateralReport> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let h = nd.grid().spacing().as_f64();
    let m = (delta / h).ceil().max(1.0) as i64;
    let step = delta / m as f64;
    let mut ys = Vec::with_capacity(2 * m as usize + 1);
    let mut vs = Vec::with_capacity(2 * m as usize + 1);
    for i in -m..=m {
        let y = i as f64 * step;
        let v = nd.h_at([y, level]).ok_or_else(|| {
            let x = nd.to_global([y, level]);
            Error::OutsideDomain { x: x[0], y: x[1], radius: delta }
        })?;
        ys.push(y);
        vs.push(v);
    }
    let v0 = vs[m as usize];
    let rs: Vec<f64> = vs.iter().map(|v| v - v0).collect();
    let (slope, value) = best_lateral_slope(&ys, &rs);
    let in_range = level > 0.0 && level < a.powf(-(1.0 - beta) / 2.0) * delta.powf(1.0 - beta);
    Ok(LateralReport { level, delta, value, slope, in_range })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupergradientReport {
    pub radii: Vec<f64>,
    /// `max |p_x| / |x|^β` over the probes at each radius.
    pub ratios: Vec<f64>,
    pub bound: f64,
    pub pass: bool,
}

/// Probes per radius in [`supergradient_bound_check`].
pub const SUPERGRADIENT_PROBES: usize = 16;

/// Estimates `p_x` by plane fits of radius three spacings at
/// [`SUPERGRADIENT_PROBES`] points on each circle `|y| = ρ` of the normalized
/// frame and compares `max |p_x| / ρ^β` with `E (C0 + C1)`.
pub fn supergradient_bound_check<T: Real>(
    nd: &NormalizedData<T>,
    beta: f64,
    c0: f64,
    c1: f64,
    e_beta: f64,
    probe_radii: &[f64],
) -> Result<SupergradientReport> {
    let spacing = nd.grid().spacing().as_f64();
    let fit = 3.0 * spacing;
    let h0 = nd.h_at([0.0, 0.0]).ok_or(Error::OutsideDomain { x: nd.center[0], y: nd.center[1], radius: 0.0 })?;
    let scale = nd.nodes().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    if h0.abs() > 1e-6 * (1.0 + scale) {
        return invalid(format!("field is not normalized: h(centre) = {h0}"));
    }
    let q = nd.rotation;
    let mut ratios = Vec::with_capacity(probe_radii.len());
    for &rho in probe_radii {
        let mut worst = 0.0f64;
        for j in 0..SUPERGRADIENT_PROBES {
            let th = std::f64::consts::TAU * j as f64 / SUPERGRADIENT_PROBES as f64;
            let x = nd.to_global([rho * th.cos(), rho * th.sin()]);
            let p = local_plane_fit(&nd.h, [T::lit(x[0]), T::lit(x[1])], T::lit(fit))?;
            let g = [q[0][0] * p.gradient[0] + q[0][1] * p.gradient[1], q[1][0] * p.gradient[0] + q[1][1] * p.gradient[1]];
            worst = worst.max(g[0].hypot(g[1]) / rho.powf(beta));
        }
        ratios.push(worst);
    }
    let bound = e_beta * (c0 + c1);
    let pass = ratios.iter().all(|&r| r <= bound);
    Ok(SupergradientReport { radii: probe_radii.to_vec(), ratios, bound, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentIteration {
    pub alpha: f64,
    pub betas: Vec<f64>,
}

/// `α/(2 + α − 2β)`, grouped so that `β = α/2` maps to itself exactly.
pub fn beta_step(alpha: f64, beta: f64) -> f64 {
    alpha / (2.0 + (alpha - 2.0 * beta))
}

/// `β₀ = α/(2+α)`, `β_j = α/(2 + α − 2β_{j−1})`, for `j ≤ k`.
pub fn beta_iteration(alpha: f64, k: usize) -> Result<ExponentIteration> {
    check_alpha(alpha)?;
    if k < 1 {
        return invalid("need at least one step");
    }
    let mut betas = Vec::with_capacity(k + 1);
    betas.push(alpha / (2.0 + alpha));
    for j in 1..=k {
        betas.push(beta_step(alpha, betas[j - 1]));
    }
    Ok(ExponentIteration { alpha, betas })
}
