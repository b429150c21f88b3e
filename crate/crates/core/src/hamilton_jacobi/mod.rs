//! Shifted eikonal equations `±|∇h − a|² = ±m` (with `m ≡ 1` by default),
//! their vanishing-viscosity regularization, the one-dimensional parabolic
//! equation `∂_t w = ½(|w_x|² − s)`, and independent oracles.

mod comparison;
mod dijkstra;
mod parabolic;
mod sweep;
mod viscosity;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Grid2D, ScalarField, VectorField2};
use crate::scalar::Real;

pub use comparison::{check_comparison_elliptic, check_comparison_parabolic, ComparisonReport};
pub use dijkstra::randers_dijkstra_oracle;
pub use parabolic::{hopf_lax_oracle, solve_parabolic_hj, ParabolicHjProblem, SpaceTimeField};
pub use sweep::{solve, solve_lower, solve_upper, solve_upper_traced, subsolution_residual};
pub use viscosity::{max_second_difference, solve_vanishing_viscosity, solve_vanishing_viscosity_with, NewtonConfig};

/// `Plus` selects the maximal subsolution `h⁺`, `Minus` the minimal supersolution `h⁻`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

/// Shift `a` with threshold 1 above which the Randers cost may vanish.
pub(crate) const DEGENERATE_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ShiftedEikonalProblem<T> {
    pub a: VectorField2<T>,
    /// Boundary data; only boundary nodes are read.
    pub f: ScalarField<T>,
    pub sign: Sign,
    /// Right-hand side `m > 0`; `None` means `m ≡ 1`.
    pub rhs: Option<ScalarField<T>>,
}

impl<T: Real> ShiftedEikonalProblem<T> {
    pub fn new(a: VectorField2<T>, f: ScalarField<T>, sign: Sign) -> Result<Self> {
        if !same_grid(a.grid(), f.grid()) {
            return invalid("shift and boundary data live on different grids");
        }
        Ok(ShiftedEikonalProblem { a, f, sign, rhs: None })
    }

    pub fn with_rhs(mut self, m: ScalarField<T>) -> Result<Self> {
        if !same_grid(self.a.grid(), m.grid()) {
            return invalid("right-hand side lives on a different grid");
        }
        if m.grid().active().any(|k| !(m.get(k) > T::zero())) {
            return invalid("right-hand side must be positive");
        }
        self.rhs = Some(m);
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid2D<T>> {
        self.a.grid()
    }

    /// True when `max |a| ≥ 1 − 1e-9`, where only the sweep accepts the data.
    pub fn is_degenerate(&self) -> bool {
        self.a.max_norm() >= T::one() - T::lit(DEGENERATE_MARGIN)
    }

    #[inline]
    pub(crate) fn rhs_at(&self, k: usize) -> T {
        self.rhs.as_ref().map_or(T::one(), |m| m.get(k))
    }

    /// The dual problem `(−a, −f)` with the opposite sign.
    pub fn dual(&self) -> Self {
        ShiftedEikonalProblem {
            a: self.a.map(|v| [-v[0], -v[1]]),
            f: self.f.map(|v| -v),
            sign: match self.sign {
                Sign::Plus => Sign::Minus,
                Sign::Minus => Sign::Plus,
            },
            rhs: self.rhs.clone(),
        }
    }
}

pub(crate) fn same_grid<T: Real>(a: &Arc<Grid2D<T>>, b: &Arc<Grid2D<T>>) -> bool {
    Arc::ptr_eq(a, b) || (a.nx() == b.nx() && a.ny() == b.ny() && a.domain() == b.domain())
}

/// Discretization of `|p − a|² − m` used by the sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Upwind (Godunov) flux; no artificial viscosity.
    #[default]
    Godunov,
    /// Lax–Friedrichs flux with per-axis dissipation.
    LaxFriedrichs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Per-cycle sup-change threshold; `None` uses `1e-10 (osc f + 1)`.
    pub tol: Option<f64>,
    pub max_cycles: usize,
    /// Lax–Friedrichs coefficients per axis; `None` uses `2 (sqrt(max m) + max |a|)`.
    pub lf_dissipation: Option<[f64; 2]>,
    pub scheme: Scheme,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { tol: None, max_cycles: 2000, lf_dissipation: None, scheme: Scheme::Godunov }
    }
}

impl SweepConfig {
    pub fn lax_friedrichs() -> Self {
        SweepConfig { scheme: Scheme::LaxFriedrichs, max_cycles: 20_000, ..Self::default() }
    }

    pub(crate) fn resolved_tol<T: Real>(&self, f: &ScalarField<T>) -> Result<T> {
        let tol = match self.tol {
            Some(t) => T::lit(t),
            None => {
                let g = f.grid();
                let (lo, hi) = g.boundary().fold((T::infinity(), T::neg_infinity()), |(lo, hi), k| {
                    (lo.min(f.get(k)), hi.max(f.get(k)))
                });
                let osc = if hi >= lo { hi - lo } else { T::zero() };
                T::lit(1e-10) * (osc + T::one())
            }
        };
        if !(tol > T::zero()) {
            return invalid("sweep tolerance must be positive");
        }
        Ok(tol)
    }
}

/// Run statistics written next to every solver output.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    pub cycles: usize,
    pub final_residual: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct HjSolution<T> {
    pub field: ScalarField<T>,
    pub meta: SolveMeta,
}
