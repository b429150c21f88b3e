//! Discrete domains, nodal fields and finite-difference primitives.
//!
//! Nodes are stored row-major with `y` outer and `x` inner, i.e. node `(i, j)`
//! has index `j * nx + i` and lattice position `(x_lo + i h, y_lo + j h)`.
//!
//! Disk domains use a cut-cell convention. A node strictly inside the circle
//! is `Interior`; a node that is not interior but has an interior axis
//! neighbour is `Boundary`. Every interior node keeps the length of its four
//! arms, which stop at the circle. A boundary node stores one crossing on a
//! grid line joining it to an interior neighbour, namely the crossing closest
//! to that neighbour, and boundary data is sampled there. Any other arm ending
//! on the circle reads the boundary data at its own crossing by linear
//! interpolation in angle between the two adjacent stored points.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::scalar::{norm2, Real};

/// Minimum number of nodes per axis.
pub const MIN_NODES: usize = 9;

/// Axis directions in arm order: `+x`, `-x`, `+y`, `-y`.
pub const DIRS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain<T> {
    Disk { radius: T },
    Rect { x_lo: T, x_hi: T, y_lo: T, y_hi: T },
}

impl<T: Real> Domain<T> {
    pub fn disk(radius: T) -> Self {
        Domain::Disk { radius }
    }

    pub fn rect(x_lo: T, x_hi: T, y_lo: T, y_hi: T) -> Self {
        Domain::Rect { x_lo, x_hi, y_lo, y_hi }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Disk { radius } => {
                if !(radius > T::zero() && radius.is_finite()) {
                    return invalid(format!("disk radius must be positive, got {radius}"));
                }
            }
            Domain::Rect { x_lo, x_hi, y_lo, y_hi } => {
                if !(x_lo < x_hi && y_lo < y_hi) {
                    return invalid("rectangle needs x_lo < x_hi and y_lo < y_hi");
                }
            }
        }
        Ok(())
    }

    /// `(x_lo, x_hi, y_lo, y_hi)` of the bounding box.
    pub fn bbox(&self) -> (T, T, T, T) {
        match *self {
            Domain::Disk { radius } => (-radius, radius, -radius, radius),
            Domain::Rect { x_lo, x_hi, y_lo, y_hi } => (x_lo, x_hi, y_lo, y_hi),
        }
    }

    pub fn center(&self) -> [T; 2] {
        let (x0, x1, y0, y1) = self.bbox();
        let half = T::lit(0.5);
        [half * (x0 + x1), half * (y0 + y1)]
    }

    /// Radius of the largest ball centred at [`Domain::center`] inside the domain.
    pub fn inradius(&self) -> T {
        match *self {
            Domain::Disk { radius } => radius,
            Domain::Rect { x_lo, x_hi, y_lo, y_hi } => T::lit(0.5) * (x_hi - x_lo).min(y_hi - y_lo),
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn depth(&self, p: [T; 2]) -> T {
        match *self {
            Domain::Disk { radius } => radius - norm2(p),
            Domain::Rect { x_lo, x_hi, y_lo, y_hi } => {
                (p[0] - x_lo).min(x_hi - p[0]).min(p[1] - y_lo).min(y_hi - p[1])
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

/// Uniform Cartesian grid over a [`Domain`] with an interior/boundary/exterior mask.
#[derive(Clone, Debug)]
pub struct Grid2D<T> {
    domain: Domain<T>,
    nx: usize,
    ny: usize,
    spacing: T,
    origin: [T; 2],
    kinds: Vec<NodeKind>,
    coords: Vec<[T; 2]>,
    arms: Vec<[T; 4]>,
    /// Index into `blends` for each cut arm, `NO_CUT` otherwise.
    cut_slot: Vec<[u32; 4]>,
    blends: Vec<Blend<T>>,
}

const NO_CUT: u32 = u32::MAX;

/// Boundary value at a circle crossing, `(1 − w) v[lo] + w v[hi]`.
#[derive(Clone, Copy, Debug)]
struct Blend<T> {
    lo: usize,
    hi: usize,
    w: T,
}

/// Builds the grid for `domain` with `n` nodes along the x axis.
///
/// Rectangles get as many y nodes as the spacing allows; the y side must be a
/// multiple of the spacing.
pub fn build_grid<T: Real>(domain: Domain<T>, n: usize) -> Result<Grid2D<T>> {
    Grid2D::new(domain, n)
}

impl<T: Real> Grid2D<T> {
    pub fn new(domain: Domain<T>, n: usize) -> Result<Self> {
        domain.validate()?;
        if n < MIN_NODES {
            return invalid(format!("grid needs at least {MIN_NODES} nodes per axis, got {n}"));
        }
        let (x_lo, x_hi, y_lo, y_hi) = domain.bbox();
        let h = (x_hi - x_lo) / T::from_usize_lossy(n - 1);
        let ny_f = ((y_hi - y_lo) / h).round();
        let ny = ny_f.to_usize().unwrap_or(0) + 1;
        if ((ny_f * h) - (y_hi - y_lo)).abs() > T::lit(1e-9) * (y_hi - y_lo) || ny < MIN_NODES {
            return invalid("rectangle height must be a multiple of the spacing with at least 9 nodes");
        }
        let mut grid = Grid2D {
            domain,
            nx: n,
            ny,
            spacing: h,
            origin: [x_lo, y_lo],
            kinds: vec![NodeKind::Exterior; n * ny],
            coords: Vec::with_capacity(n * ny),
            arms: vec![[h; 4]; n * ny],
            cut_slot: vec![[NO_CUT; 4]; n * ny],
            blends: Vec::new(),
        };
        for j in 0..ny {
            for i in 0..n {
                let p = grid.lattice_coord(i, j);
                grid.coords.push(p);
            }
        }
        match domain {
            Domain::Rect { .. } => grid.mark_rect(),
            Domain::Disk { radius } => grid.mark_disk(radius),
        }
        Ok(grid)
    }

    fn mark_rect(&mut self) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let edge = i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1;
                let k = self.index(i, j);
                self.kinds[k] = if edge { NodeKind::Boundary } else { NodeKind::Interior };
            }
        }
    }

    fn mark_disk(&mut self, radius: T) {
        let h = self.spacing;
        let r2 = radius * radius;
        let margin = T::lit(1e-10) * h * radius;
        for k in 0..self.kinds.len() {
            let p = self.coords[k];
            if p[0] * p[0] + p[1] * p[1] < r2 - margin {
                self.kinds[k] = NodeKind::Interior;
            }
        }
        // Circle crossings along every arm from an interior node to a non-interior one.
        let mut cuts: Vec<(usize, usize, usize, T, [T; 2])> = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.index(i, j);
                if self.kinds[k] != NodeKind::Interior {
                    continue;
                }
                let p = self.coords[k];
                for (d, &(di, dj)) in DIRS.iter().enumerate() {
                    // Interior nodes are strictly inside, so neighbours exist on the lattice.
                    let nb = self.index((i as isize + di) as usize, (j as isize + dj) as usize);
                    if self.kinds[nb] == NodeKind::Interior {
                        continue;
                    }
                    let e = [T::lit(di as f64), T::lit(dj as f64)];
                    let pe = p[0] * e[0] + p[1] * e[1];
                    let c = p[0] * p[0] + p[1] * p[1] - r2;
                    let t = (-pe + (pe * pe - c).max(T::zero()).sqrt()).min(h).max(T::lit(1e-6) * h);
                    cuts.push((k, d, nb, t, [p[0] + t * e[0], p[1] + t * e[1]]));
                }
            }
        }
        // Each boundary node takes the crossing of its shortest arm, the one most
        // sensitive to where the data sits.
        let mut snap: Vec<Option<(T, usize)>> = vec![None; self.kinds.len()];
        for (c, &(_, _, nb, t, _)) in cuts.iter().enumerate() {
            match snap[nb] {
                Some((best, _)) if best <= t => {}
                _ => snap[nb] = Some((t, c)),
            }
        }
        for (nb, s) in snap.iter().enumerate() {
            if let Some((_, c)) = *s {
                self.kinds[nb] = NodeKind::Boundary;
                self.coords[nb] = cuts[c].4;
            }
        }
        // Arms stop at the circle. A cut arm reads boundary data at its own
        // crossing, interpolated in angle between the neighbouring stored points.
        let mut ring: Vec<(T, usize)> = self.boundary().map(|b| (self.coords[b][1].atan2(self.coords[b][0]), b)).collect();
        ring.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite angles").then(x.1.cmp(&y.1)));
        let tau = T::lit(2.0) * T::PI();
        for (c, &(k, d, nb, t, x)) in cuts.iter().enumerate() {
            self.arms[k][d] = t;
            let blend = if snap[nb].map(|s| s.1) == Some(c) {
                Blend { lo: nb, hi: nb, w: T::zero() }
            } else {
                let th = x[1].atan2(x[0]);
                let pos = ring.partition_point(|e| e.0 <= th);
                let (lo, hi) = if pos == 0 || pos == ring.len() {
                    (ring[ring.len() - 1], ring[0])
                } else {
                    (ring[pos - 1], ring[pos])
                };
                let wrap = |v: T| if v < T::zero() { v + tau } else { v };
                let span = wrap(hi.0 - lo.0);
                let off = wrap(th - lo.0);
                let w = if span > T::zero() { (off / span).min(T::one()) } else { T::zero() };
                Blend { lo: lo.1, hi: hi.1, w }
            };
            self.cut_slot[k][d] = self.blends.len() as u32;
            self.blends.push(blend);
        }
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    /// Nodes along the x axis (the `n` the grid was built with).
    pub fn n(&self) -> usize {
        self.nx
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn kind(&self, k: usize) -> NodeKind {
        self.kinds[k]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    /// Node position; snapped onto the circle for disk boundary nodes.
    #[inline]
    pub fn coord(&self, k: usize) -> [T; 2] {
        self.coords[k]
    }

    #[inline]
    pub fn lattice_coord(&self, i: usize, j: usize) -> [T; 2] {
        [
            self.origin[0] + T::from_usize_lossy(i) * self.spacing,
            self.origin[1] + T::from_usize_lossy(j) * self.spacing,
        ]
    }

    #[inline]
    pub fn is_active(&self, k: usize) -> bool {
        self.kinds[k] != NodeKind::Exterior
    }

    /// Neighbour in direction `d` (see [`DIRS`]) if it lies on the lattice.
    #[inline]
    pub fn neighbor(&self, k: usize, d: usize) -> Option<usize> {
        let (i, j) = self.ij(k);
        let (di, dj) = DIRS[d];
        let ni = i as isize + di;
        let nj = j as isize + dj;
        if ni < 0 || nj < 0 || ni >= self.nx as isize || nj >= self.ny as isize {
            None
        } else {
            Some(self.index(ni as usize, nj as usize))
        }
    }

    /// Distance from node `k` to the circle (or to the next node) in [`DIRS`] order.
    /// Only meaningful for interior nodes.
    #[inline]
    pub fn arms(&self, k: usize) -> [T; 4] {
        self.arms[k]
    }

    /// Value of a nodal array seen from interior node `k` at the end of arm `d`:
    /// the neighbour's value, or on a cut arm the boundary values interpolated
    /// at the crossing.
    #[inline]
    pub fn neighbor_value(&self, values: &[T], k: usize, d: usize) -> T {
        match self.cut_slot[k][d] {
            NO_CUT => {
                let (di, dj) = DIRS[d];
                values[(k as isize + di + dj * self.nx as isize) as usize]
            }
            s => {
                let b = self.blends[s as usize];
                if b.w == T::zero() {
                    values[b.lo]
                } else {
                    (T::one() - b.w) * values[b.lo] + b.w * values[b.hi]
                }
            }
        }
    }

    /// True when arm `d` of node `k` ends on the circle.
    #[inline]
    pub fn is_cut(&self, k: usize, d: usize) -> bool {
        self.cut_slot[k][d] != NO_CUT
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.kinds[k] == NodeKind::Interior)
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.kinds[k] == NodeKind::Boundary)
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.kinds[k] != NodeKind::Exterior)
    }

    /// Active node closest to `p` (by lattice position).
    pub fn nearest_node(&self, p: [T; 2]) -> Option<usize> {
        let fi = ((p[0] - self.origin[0]) / self.spacing).round();
        let fj = ((p[1] - self.origin[1]) / self.spacing).round();
        let i = fi.to_isize()?;
        let j = fj.to_isize()?;
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            return None;
        }
        let k = self.index(i as usize, j as usize);
        self.is_active(k).then_some(k)
    }

    /// Active nodes whose position lies in the closed ball `B_r(center)`.
    pub fn nodes_in_ball(&self, center: [T; 2], r: T) -> Vec<usize> {
        let h = self.spacing;
        let r2 = r * r * (T::one() + T::lit(1e-12));
        let lo_i = ((center[0] - r - self.origin[0]) / h).floor().max(T::zero()).to_usize().unwrap_or(0);
        let lo_j = ((center[1] - r - self.origin[1]) / h).floor().max(T::zero()).to_usize().unwrap_or(0);
        let hi_i = (((center[0] + r - self.origin[0]) / h).ceil().to_usize().unwrap_or(0)).min(self.nx - 1);
        let hi_j = (((center[1] + r - self.origin[1]) / h).ceil().to_usize().unwrap_or(0)).min(self.ny - 1);
        let mut out = Vec::new();
        for j in lo_j..=hi_j {
            for i in lo_i..=hi_i {
                let k = self.index(i, j);
                if !self.is_active(k) {
                    continue;
                }
                let p = self.coords[k];
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                if dx * dx + dy * dy <= r2 {
                    out.push(k);
                }
            }
        }
        out
    }
}

/// Nodal scalar values on a grid. Exterior nodes hold NaN.
#[derive(Clone, Debug)]
pub struct ScalarField<T> {
    grid: Arc<Grid2D<T>>,
    values: Vec<T>,
}

/// Nodal vector values on a grid. Exterior nodes hold NaN pairs.
#[derive(Clone, Debug)]
pub struct VectorField2<T> {
    grid: Arc<Grid2D<T>>,
    values: Vec<[T; 2]>,
}

impl<T: Real> ScalarField<T> {
    /// Wraps raw values, checking the length and finiteness on active nodes.
    pub fn from_values(grid: Arc<Grid2D<T>>, mut values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!("field has {} values, grid has {} nodes", values.len(), grid.len()));
        }
        for k in 0..grid.len() {
            if grid.is_active(k) {
                if !values[k].is_finite() {
                    let (i, j) = grid.ij(k);
                    return Err(Error::NonFinite { what: "field value", i, j });
                }
            } else {
                values[k] = T::nan();
            }
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Arc<Grid2D<T>>, values: Vec<T>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: Arc<Grid2D<T>>, c: T) -> Self {
        let values = (0..grid.len()).map(|k| if grid.is_active(k) { c } else { T::nan() }).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid2D<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, k: usize) -> T {
        self.values[k]
    }

    /// Nodewise map over active nodes.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| if self.grid.is_active(k) { f(v) } else { T::nan() })
            .collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    /// Nodewise combination with another field on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let values = (0..self.values.len())
            .map(|k| if self.grid.is_active(k) { f(self.values[k], other.values[k]) } else { T::nan() })
            .collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    /// Max and min over active nodes.
    pub fn range(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for k in self.grid.active() {
            lo = lo.min(self.values[k]);
            hi = hi.max(self.values[k]);
        }
        (lo, hi)
    }

    pub fn oscillation(&self) -> T {
        let (lo, hi) = self.range();
        hi - lo
    }

    /// Bilinear interpolation from lattice cells whose four corners are interior.
    pub fn interpolate(&self, p: [T; 2]) -> Option<T> {
        let (corners, weights) = self.grid.bilinear(p)?;
        Some(corners.iter().zip(&weights).filter(|(_, &w)| w != T::zero()).fold(T::zero(), |acc, (&k, &w)| acc + w * self.values[k]))
    }
}

impl<T: Real> Grid2D<T> {
    /// Corner nodes and weights of the cell containing `p`; `None` when a
    /// corner with nonzero weight is not an Interior node.
    fn bilinear(&self, p: [T; 2]) -> Option<([usize; 4], [T; 4])> {
        let h = self.spacing;
        let fx = (p[0] - self.origin[0]) / h;
        let fy = (p[1] - self.origin[1]) / h;
        let i0 = fx.floor().to_isize()?.clamp(0, self.nx as isize - 2) as usize;
        let j0 = fy.floor().to_isize()?.clamp(0, self.ny as isize - 2) as usize;
        let tx = fx - T::from_usize_lossy(i0);
        let ty = fy - T::from_usize_lossy(j0);
        let tol = T::lit(1e-9);
        if tx < -tol || ty < -tol || tx > T::one() + tol || ty > T::one() + tol {
            return None;
        }
        let corners = [self.index(i0, j0), self.index(i0 + 1, j0), self.index(i0, j0 + 1), self.index(i0 + 1, j0 + 1)];
        let weights = [(T::one() - tx) * (T::one() - ty), tx * (T::one() - ty), (T::one() - tx) * ty, tx * ty];
        for (&k, &w) in corners.iter().zip(&weights) {
            if w != T::zero() && self.kinds[k] != NodeKind::Interior {
                return None;
            }
        }
        Some((corners, weights))
    }
}

impl<T: Real> VectorField2<T> {
    pub fn from_values(grid: Arc<Grid2D<T>>, mut values: Vec<[T; 2]>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!("field has {} values, grid has {} nodes", values.len(), grid.len()));
        }
        for k in 0..grid.len() {
            if grid.is_active(k) {
                if !(values[k][0].is_finite() && values[k][1].is_finite()) {
                    let (i, j) = grid.ij(k);
                    return Err(Error::NonFinite { what: "vector value", i, j });
                }
            } else {
                values[k] = [T::nan(); 2];
            }
        }
        Ok(VectorField2 { grid, values })
    }

    pub fn constant(grid: Arc<Grid2D<T>>, c: [T; 2]) -> Self {
        let values = (0..grid.len()).map(|k| if grid.is_active(k) { c } else { [T::nan(); 2] }).collect();
        VectorField2 { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid2D<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[[T; 2]] {
        &self.values
    }

    #[inline]
    pub fn get(&self, k: usize) -> [T; 2] {
        self.values[k]
    }

    pub fn map(&self, f: impl Fn([T; 2]) -> [T; 2]) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| if self.grid.is_active(k) { f(v) } else { [T::nan(); 2] })
            .collect();
        VectorField2 { grid: self.grid.clone(), values }
    }

    /// Max of `|a|` over active nodes.
    pub fn max_norm(&self) -> T {
        self.grid.active().map(|k| norm2(self.values[k])).fold(T::zero(), T::max)
    }

    /// One component as a scalar field.
    pub fn component(&self, c: usize) -> ScalarField<T> {
        let values = self.values.iter().map(|v| v[c]).collect();
        ScalarField::from_values_unchecked(self.grid.clone(), values)
    }

    pub fn interpolate(&self, p: [T; 2]) -> Option<[T; 2]> {
        let (corners, weights) = self.grid.bilinear(p)?;
        Some(corners.iter().zip(&weights).filter(|(_, &w)| w != T::zero()).fold([T::zero(); 2], |acc, (&k, &w)| {
            let v = self.values[k];
            [acc[0] + w * v[0], acc[1] + w * v[1]]
        }))
    }
}

/// Samples `f` at every active node (snapped coordinates on the boundary).
pub fn sample_scalar<T: Real>(grid: &Arc<Grid2D<T>>, f: impl Fn([T; 2]) -> T) -> Result<ScalarField<T>> {
    let mut values = vec![T::nan(); grid.len()];
    for k in grid.active() {
        let v = f(grid.coord(k));
        if !v.is_finite() {
            let (i, j) = grid.ij(k);
            return Err(Error::NonFinite { what: "sample", i, j });
        }
        values[k] = v;
    }
    Ok(ScalarField::from_values_unchecked(grid.clone(), values))
}

pub fn sample_vector<T: Real>(grid: &Arc<Grid2D<T>>, f: impl Fn([T; 2]) -> [T; 2]) -> Result<VectorField2<T>> {
    let mut values = vec![[T::nan(); 2]; grid.len()];
    for k in grid.active() {
        let v = f(grid.coord(k));
        if !(v[0].is_finite() && v[1].is_finite()) {
            let (i, j) = grid.ij(k);
            return Err(Error::NonFinite { what: "sample", i, j });
        }
        values[k] = v;
    }
    Ok(VectorField2 { grid: grid.clone(), values })
}

/// Lower bound for a Hölder seminorm obtained from sampled node pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderEstimate<T> {
    pub alpha: T,
    pub seminorm: T,
    pub pairs_sampled: usize,
}

/// Anything whose nodal values can be differenced pairwise.
pub trait NodalField<T: Real> {
    fn grid(&self) -> &Arc<Grid2D<T>>;
    /// `|v(k) - v(l)|`.
    fn distance(&self, k: usize, l: usize) -> T;
}

impl<T: Real> NodalField<T> for ScalarField<T> {
    fn grid(&self) -> &Arc<Grid2D<T>> {
        &self.grid
    }
    fn distance(&self, k: usize, l: usize) -> T {
        (self.values[k] - self.values[l]).abs()
    }
}

impl<T: Real> NodalField<T> for VectorField2<T> {
    fn grid(&self) -> &Arc<Grid2D<T>> {
        &self.grid
    }
    fn distance(&self, k: usize, l: usize) -> T {
        let a = self.values[k];
        let b = self.values[l];
        norm2([a[0] - b[0], a[1] - b[1]])
    }
}

/// Estimates `[field]_{C^alpha}` as the max of `|v(x)-v(y)|/|x-y|^alpha` over
/// every pair on the grid row and column through the domain centre plus
/// `samples` seeded random pairs.
pub fn holder_seminorm_estimate<T: Real, F: NodalField<T>>(
    field: &F,
    alpha: T,
    samples: usize,
    seed: u64,
) -> Result<HolderEstimate<T>> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return invalid(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let grid = field.grid().clone();
    let active: Vec<usize> = grid.active().collect();
    if active.len() < 2 {
        return invalid("field has fewer than two active nodes");
    }
    let mut best = T::zero();
    let mut count = 0usize;
    let visit = |k: usize, l: usize, best: &mut T| {
        let p = grid.coord(k);
        let q = grid.coord(l);
        let d = norm2([p[0] - q[0], p[1] - q[1]]);
        if d > T::zero() {
            let ratio = field.distance(k, l) / d.powf(alpha);
            if ratio > *best {
                *best = ratio;
            }
        }
    };

    if let Some(c) = grid.nearest_node(grid.domain().center()) {
        let (ci, cj) = grid.ij(c);
        let row: Vec<usize> = (0..grid.nx()).map(|i| grid.index(i, cj)).filter(|&k| grid.is_active(k)).collect();
        let col: Vec<usize> = (0..grid.ny()).map(|j| grid.index(ci, j)).filter(|&k| grid.is_active(k)).collect();
        for line in [&row, &col] {
            for (a, &k) in line.iter().enumerate() {
                for &l in &line[a + 1..] {
                    visit(k, l, &mut best);
                    count += 1;
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let k = active[rng.gen_range(0..active.len())];
        let l = active[rng.gen_range(0..active.len())];
        if k != l {
            visit(k, l, &mut best);
        }
        count += 1;
    }
    Ok(HolderEstimate { alpha, seminorm: best, pairs_sampled: count })
}

fn require_interior<T: Real>(field: &ScalarField<T>, k: usize) -> Result<()> {
    let g = field.grid();
    if k >= g.len() || g.kind(k) != NodeKind::Interior {
        let (i, j) = g.ij(k.min(g.len().saturating_sub(1)));
        return Err(Error::StencilOutside { i, j });
    }
    Ok(())
}

/// Centred difference gradient at an interior node.
///
/// Cut arms use the three-point formula on the unequal spacing, which is exact
/// on quadratics and reduces to `(f(x+h)-f(x-h))/2h` on full arms.
pub fn discrete_gradient<T: Real>(field: &ScalarField<T>, k: usize) -> Result<[T; 2]> {
    require_interior(field, k)?;
    let g = field.grid();
    let arms = g.arms(k);
    let u = field.get(k);
    let mut out = [T::zero(); 2];
    for axis in 0..2 {
        let (dp, dm) = (2 * axis, 2 * axis + 1);
        let up = g.neighbor_value(field.values(), k, dp);
        let um = g.neighbor_value(field.values(), k, dm);
        let (lp, lm) = (arms[dp], arms[dm]);
        out[axis] = (lm * lm * (up - u) + lp * lp * (u - um)) / (lp * lm * (lp + lm));
    }
    Ok(out)
}

/// Second difference `(f(x+h e) - 2 f(x) + f(x-h e)) / h^2` along `axis` (0 or 1).
pub fn discrete_second_difference<T: Real>(field: &ScalarField<T>, k: usize, axis: usize) -> Result<T> {
    require_interior(field, k)?;
    if axis > 1 {
        return invalid(format!("axis must be 0 or 1, got {axis}"));
    }
    let g = field.grid();
    let arms = g.arms(k);
    let (dp, dm) = (2 * axis, 2 * axis + 1);
    let u = field.get(k);
    let up = g.neighbor_value(field.values(), k, dp);
    let um = g.neighbor_value(field.values(), k, dm);
    let (lp, lm) = (arms[dp], arms[dm]);
    Ok(T::lit(2.0) / (lp + lm) * ((up - u) / lp - (u - um) / lm))
}
