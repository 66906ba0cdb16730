use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{neighbors8, Cell, GridMap, ObstacleMask};
use crate::scalar::Scalar;

use super::normalize01;
use super::weights::ScoreWeights;

/// Offset keeping the inverse-score cell cost bounded (at most 10).
pub const SCORE_EPSILON: f64 = 0.1;

/// Cost of stepping a length `len` into a cell with normalised score `s`.
#[inline]
pub fn score_step_cost<T: Scalar>(s: T, len: T, step_cost: T) -> T {
    step_cost * len + T::one() / (s + T::lit(SCORE_EPSILON))
}

#[derive(Clone, Copy)]
struct Open<T> {
    f: T,
    idx: usize,
}

impl<T: Scalar> PartialEq for Open<T> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Open<T> {}
impl<T: Scalar> PartialOrd for Open<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Scalar> Ord for Open<T> {
    // min-heap on (f, idx)
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.partial_cmp(&self.f)
            .unwrap_or(Ordering::Equal)
            .then_with(|| o.idx.cmp(&self.idx))
    }
}

/// A* over the 8-connected free grid. `step(cell, len)` is the cost of
/// entering `cell` by a move of length `len`; `h` must be consistent.
fn astar<T: Scalar>(
    mask: &ObstacleMask,
    start: Cell,
    goal: Cell,
    step: impl Fn(usize, T) -> T,
    h: impl Fn(Cell) -> T,
) -> Result<Vec<Cell>> {
    let spec = *mask.spec();
    spec.check(start)?;
    spec.check(goal)?;
    if mask.is_blocked(start) || mask.is_blocked(goal) {
        return Err(Error::NoPath { from: start, to: goal });
    }
    if start == goal {
        return Ok(vec![start]);
    }
    let n = spec.len();
    let mut g = vec![T::infinity(); n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let s = spec.index_unchecked(start);
    let t = spec.index_unchecked(goal);
    g[s] = T::zero();
    let mut open = BinaryHeap::new();
    open.push(Open { f: h(start), idx: s });
    while let Some(Open { idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        if idx == t {
            let mut path = vec![goal];
            let mut cur = t;
            while cur != s {
                cur = parent[cur];
                path.push(spec.cell_at(cur));
            }
            path.reverse();
            return Ok(path);
        }
        closed[idx] = true;
        let cell = spec.cell_at(idx);
        for nb in neighbors8(mask, cell) {
            let j = spec.index_unchecked(nb.cell);
            if closed[j] {
                continue;
            }
            let cand = g[idx] + step(j, nb.length());
            if cand < g[j] {
                g[j] = cand;
                parent[j] = idx;
                open.push(Open { f: cand + h(nb.cell), idx: j });
            }
        }
    }
    Err(Error::NoPath { from: start, to: goal })
}

/// Score-biased route. Entering a cell costs
/// `w_step·len + 1/(s̄ + 0.1)` with `s̄` the normalised score; the
/// heuristic charges the cheapest possible step per Chebyshev move.
pub fn route_astar<T: Scalar>(
    start: Cell,
    goal: Cell,
    score: &GridMap<T>,
    weights: &ScoreWeights,
    mask: &ObstacleMask,
) -> Result<Vec<Cell>> {
    mask.matches(score)?;
    let norm = normalize01(score, mask);
    let w = T::lit(weights.step_cost);
    let min_step = score_step_cost(T::one(), T::one(), w);
    astar(
        mask,
        start,
        goal,
        |j, len| score_step_cost(norm.values()[j], len, w),
        |c| T::from_usize_lossy(c.chebyshev(goal)) * min_step,
    )
}

/// Shortest route by path length alone (octile heuristic).
pub fn route_shortest<T: Scalar>(start: Cell, goal: Cell, mask: &ObstacleMask) -> Result<Vec<Cell>> {
    let sqrt2 = T::lit(std::f64::consts::SQRT_2);
    astar(
        mask,
        start,
        goal,
        |_, len: T| len,
        |c| {
            let dr = c.row.abs_diff(goal.row);
            let dc = c.col.abs_diff(goal.col);
            let (lo, hi) = (dr.min(dc), dr.max(dc));
            T::from_usize_lossy(hi - lo) + sqrt2 * T::from_usize_lossy(lo)
        },
    )
}

/// Cost of a path under the score-biased step cost (start cell is free).
pub fn path_cost<T: Scalar>(path: &[Cell], score: &GridMap<T>, weights: &ScoreWeights, mask: &ObstacleMask) -> T {
    let norm = normalize01(score, mask);
    let w = T::lit(weights.step_cost);
    let spec = mask.spec();
    path.windows(2)
        .map(|p| {
            let len = if p[0].row != p[1].row && p[0].col != p[1].col {
                T::lit(std::f64::consts::SQRT_2)
            } else {
                T::one()
            };
            score_step_cost(norm.values()[spec.index_unchecked(p[1])], len, w)
        })
        .fold(T::zero(), |a, b| a + b)
}
