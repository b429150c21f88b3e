//! Closed-form and independently computed reference solutions.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid2D, ScalarField, VectorField2};
use crate::scalar::Real;

/// The shift `a(x) = s |x2|^alpha e1` with exact solution `u = x1 + b(x2)`,
/// `b'(t) = sqrt(2 s |t|^alpha - s^2 |t|^(2 alpha))`.
///
/// `scale` is `s`; it is 1 for the classical example and below 1 when the
/// shift must stay strictly inside the unit ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuellerExample {
    pub alpha: f64,
    pub quadrature_tol: f64,
    pub scale: f64,
}

impl MuellerExample {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_scale(alpha, 1.0)
    }

    pub fn with_scale(alpha: f64, scale: f64) -> Result<Self> {
        let ex = MuellerExample { alpha, quadrature_tol: 1e-10, scale };
        ex.validate()?;
        Ok(ex)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.quadrature_tol > 0.0) {
            return invalid("quadrature tolerance must be positive");
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return invalid(format!("scale must lie in (0, 1], got {}", self.scale));
        }
        Ok(())
    }

    /// Shift vector at `x`.
    pub fn a(&self, x: [f64; 2]) -> [f64; 2] {
        [self.scale * x[1].abs().powf(self.alpha), 0.0]
    }

    pub fn b_prime(&self, t: f64) -> f64 {
        let p = self.scale * t.abs().powf(self.alpha);
        (2.0 * p - p * p).max(0.0).sqrt()
    }

    /// `b(t)` by adaptive Simpson after the substitution `t = s^(2/(2+alpha))`,
    /// which turns the integrand into `(2/(2+alpha)) sqrt(2 c - c^2 s^(2 alpha/(2+alpha)))`.
    pub fn b(&self, t: f64) -> Result<f64> {
        if !(t.abs() <= 1.0) {
            return Err(Error::OutsideDomain { x: 0.0, y: t, radius: 1.0 });
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let al = self.alpha;
        let c = self.scale;
        let q = 2.0 * al / (2.0 + al);
        let k = 2.0 / (2.0 + al);
        let integrand = |s: f64| k * (2.0 * c - c * c * s.powf(q)).max(0.0).sqrt();
        let upper = t.abs().powf((2.0 + al) / 2.0);
        let v = adaptive_simpson(&integrand, 0.0, upper, self.quadrature_tol)?;
        Ok(v.copysign(t))
    }

    /// `u(x) = x1 + b(x2)`.
    pub fn u(&self, x: [f64; 2]) -> Result<f64> {
        Ok(x[0] + self.b(x[1])?)
    }
}

/// Samples the Müller shift on every active node.
pub fn mueller_field<T: Real>(ex: &MuellerExample, grid: &Arc<Grid2D<T>>) -> Result<VectorField2<T>> {
    ex.validate()?;
    crate::grid::sample_vector(grid, |p| {
        let a = ex.a([p[0].as_f64(), p[1].as_f64()]);
        [T::lit(a[0]), T::lit(a[1])]
    })
}

/// Exact Müller solution `x1 + b(x2)` on every active node.
pub fn mueller_exact_solution<T: Real>(ex: &MuellerExample, grid: &Arc<Grid2D<T>>) -> Result<ScalarField<T>> {
    ex.validate()?;
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut values = vec![T::nan(); grid.len()];
    for k in grid.active() {
        let p = grid.coord(k);
        let y = p[1].as_f64();
        if y.abs() > 1.0 + 1e-12 {
            return Err(Error::OutsideDomain { x: p[0].as_f64(), y, radius: 1.0 });
        }
        let y = y.clamp(-1.0, 1.0);
        let b = match cache.get(&y.to_bits()) {
            Some(&b) => b,
            None => {
                let b = ex.b(y)?;
                cache.insert(y.to_bits(), b);
                b
            }
        };
        values[k] = p[0] + T::lit(b);
    }
    ScalarField::from_values(grid.clone(), values)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return invalid("quadrature tolerance must be positive");
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50);
    if v.is_finite() {
        Ok(v)
    } else {
        invalid("quadrature produced a non-finite value")
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `g(t) = -∫_0^t profile(s) ds` at each sample, where `profile(s)` is
/// `e_n · b(0', s)` and returns `None` outside the data.
///
/// Each gap between consecutive samples (and between 0 and the nearest
/// sample on either side) is integrated by composite Simpson on 8 panels.
pub fn g_profile<T: Real>(profile: impl Fn(T) -> Option<T>, t_samples: &[T]) -> Result<Vec<T>> {
    let eval = |s: T| -> Result<T> {
        profile(s).ok_or_else(|| Error::InvalidInput(format!("g profile sample {s} lies outside the data")))
    };
    let simpson = |a: T, b: T| -> Result<T> {
        const PANELS: usize = 8;
        let h = (b - a) / T::from_usize_lossy(PANELS);
        let mut acc = eval(a)? + eval(b)?;
        for i in 1..PANELS {
            let w = if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
            acc = acc + w * eval(a + T::from_usize_lossy(i) * h)?;
        }
        Ok(acc * h / T::lit(3.0))
    };
    let mut order: Vec<usize> = (0..t_samples.len()).collect();
    for &t in t_samples {
        if !t.is_finite() {
            return invalid("g profile samples must be finite");
        }
    }
    order.sort_by(|&i, &j| t_samples[i].abs().partial_cmp(&t_samples[j].abs()).unwrap());
    let mut out = vec![T::zero(); t_samples.len()];
    let (mut pos_t, mut pos_g) = (T::zero(), T::zero());
    let (mut neg_t, mut neg_g) = (T::zero(), T::zero());
    for i in order {
        let t = t_samples[i];
        if t > T::zero() {
            pos_g = pos_g - simpson(pos_t, t)?;
            pos_t = t;
            out[i] = pos_g;
        } else if t < T::zero() {
            neg_g = neg_g + simpson(t, neg_t)?;
            neg_t = t;
            out[i] = neg_g;
        }
    }
    Ok(out)
}

/// `min_{|y|=R} |x-y| + a·(x-y)`, the maximal subsolution for constant
/// shift `a` with zero data on the circle of radius `radius`.
pub fn cone_value(a: [f64; 2], radius: f64, x: [f64; 2]) -> Result<f64> {
    if !(a[0].hypot(a[1]) < 1.0) {
        return Err(Error::Degenerate { max_norm: a[0].hypot(a[1]) });
    }
    if !(radius > 0.0) {
        return invalid("radius must be positive");
    }
    let phi = |th: f64| {
        let y = [radius * th.cos(), radius * th.sin()];
        let d = [x[0] - y[0], x[1] - y[1]];
        d[0].hypot(d[1]) + a[0] * d[0] + a[1] * d[1]
    };
    // Golden section on three arcs, then around the best of 1000 samples.
    let mut best = f64::INFINITY;
    for r in 0..3 {
        let lo = 2.0 * PI * r as f64 / 3.0;
        best = best.min(golden_section(&phi, lo - 0.1, lo + 2.0 * PI / 3.0 + 0.1, 1e-11));
    }
    let step = 2.0 * PI / 1000.0;
    let mut best_th = 0.0;
    let mut best_sample = f64::INFINITY;
    for i in 0..1000 {
        let th = i as f64 * step;
        let v = phi(th);
        if v < best_sample {
            best_sample = v;
            best_th = th;
        }
    }
    best = best.min(golden_section(&phi, best_th - step, best_th + step, 1e-11));
    Ok(best.min(best_sample))
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(0.5 * (lo + hi)))
}

/// [`cone_value`] on every active node of a disk grid; boundary nodes get 0.
pub fn cone_solution<T: Real>(a: [T; 2], grid: &Arc<Grid2D<T>>) -> Result<ScalarField<T>> {
    let radius = match *grid.domain() {
        crate::grid::Domain::Disk { radius } => radius.as_f64(),
        _ => return invalid("cone solution needs a disk domain"),
    };
    let af = [a[0].as_f64(), a[1].as_f64()];
    let mut values = vec![T::nan(); grid.len()];
    for k in grid.active() {
        values[k] = match grid.kind(k) {
            crate::grid::NodeKind::Boundary => T::zero(),
            _ => {
                let p = grid.coord(k);
                T::lit(cone_value(af, radius, [p[0].as_f64(), p[1].as_f64()])?)
            }
        };
    }
    ScalarField::from_values(grid.clone(), values)
}
