//! Shortest paths in the Randers metric on a lattice graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};
use crate::grid::{NodeKind, ScalarField};
use crate::scalar::{norm2, Real};

use super::{ShiftedEikonalProblem, Sign};

/// Primitive lattice offsets with `max(|i|, |j|) <= order`: 8, 16 or 32 of them.
pub(crate) fn stencil(order: usize) -> Vec<(isize, isize)> {
    fn gcd(a: isize, b: isize) -> isize {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let k = order as isize;
    let mut out = Vec::new();
    for j in -k..=k {
        for i in -k..=k {
            if (i, j) != (0, 0) && gcd(i, j) == 1 {
                out.push((i, j));
            }
        }
    }
    out
}

struct Entry<T> {
    dist: T,
    node: usize,
}

impl<T: Real> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Entry<T> {}
impl<T: Real> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Entry<T> {
    // Min-heap on distance, ties broken by node index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.partial_cmp(&self.dist).unwrap_or(Ordering::Equal).then_with(|| other.node.cmp(&self.node))
    }
}

/// `min_y f(y) + graph distance(y, x)` with arc cost `|Δ| + ā·Δ`, where `ā`
/// is the mean of the shift at the two endpoints. Boundary nodes are sources
/// at their stored positions; only interior nodes are relaxed.
pub fn randers_dijkstra_oracle<T: Real>(problem: &ShiftedEikonalProblem<T>, stencil_order: usize) -> Result<ScalarField<T>> {
    if problem.sign != Sign::Plus {
        return invalid("the path oracle computes h+ only");
    }
    if !(1..=3).contains(&stencil_order) {
        return invalid(format!("stencil order must be 1, 2 or 3, got {stencil_order}"));
    }
    let max_norm = problem.a.max_norm();
    if !(max_norm < T::one()) {
        return Err(Error::Degenerate { max_norm: max_norm.as_f64() });
    }
    if problem.rhs.is_some() {
        return invalid("the path oracle supports only m = 1");
    }
    let grid = problem.grid();
    let offsets = stencil(stencil_order);
    let mut dist = vec![T::infinity(); grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    for k in grid.boundary() {
        dist[k] = problem.f.get(k);
        heap.push(Entry { dist: dist[k], node: k });
    }
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    while let Some(Entry { dist: d, node: k }) = heap.pop() {
        if done[k] || d > dist[k] {
            continue;
        }
        done[k] = true;
        let (i, j) = grid.ij(k);
        let p = grid.coord(k);
        let ap = problem.a.get(k);
        for &(di, dj) in &offsets {
            let (ni, nj) = (i as isize + di, j as isize + dj);
            if ni < 0 || nj < 0 || ni >= nx || nj >= ny {
                continue;
            }
            let q = grid.index(ni as usize, nj as usize);
            if grid.kind(q) != NodeKind::Interior || done[q] {
                continue;
            }
            let x = grid.coord(q);
            let delta = [x[0] - p[0], x[1] - p[1]];
            let aq = problem.a.get(q);
            let half = T::lit(0.5);
            let abar = [half * (ap[0] + aq[0]), half * (ap[1] + aq[1])];
            let cost = norm2(delta) + abar[0] * delta[0] + abar[1] * delta[1];
            let nd = d + cost;
            if nd < dist[q] {
                dist[q] = nd;
                heap.push(Entry { dist: nd, node: q });
            }
        }
    }
    for k in 0..grid.len() {
        if grid.kind(k) == NodeKind::Exterior {
            dist[k] = T::nan();
        } else if !dist[k].is_finite() {
            let (i, j) = grid.ij(k);
            return invalid(format!("node ({i}, {j}) is not reachable from the boundary"));
        }
    }
    ScalarField::from_values(grid.clone(), dist)
}
