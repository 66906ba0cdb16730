use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Cell, ObstacleMask};

use super::Placement;

/// Boundary cells clockwise from (0, 0).
fn perimeter(rows: usize, cols: usize) -> Vec<Cell> {
    let mut p = Vec::with_capacity(2 * (rows + cols));
    p.extend((0..cols).map(|c| Cell::new(0, c)));
    p.extend((1..rows).map(|r| Cell::new(r, cols - 1)));
    p.extend((0..cols - 1).rev().map(|c| Cell::new(rows - 1, c)));
    p.extend((1..rows - 1).rev().map(|r| Cell::new(r, 0)));
    p
}

/// Nearest free cell to `target` not already taken.
fn nearest_untaken(mask: &ObstacleMask, target: Cell, taken: &[Cell]) -> Option<Cell> {
    mask.free_cells()
        .filter(|c| !taken.contains(c))
        .min_by_key(|c| (c.distance2(target), *c))
}

/// Distinct free starting cells for `n` agents.
pub fn initial_positions(
    placement: &Placement,
    n: usize,
    mask: &ObstacleMask,
    rng: &mut impl Rng,
) -> Result<Vec<Cell>> {
    if n == 0 {
        return Err(Error::NoAgents);
    }
    if n > mask.free_count() {
        return Err(Error::InvalidParameter(format!(
            "{n} agents but only {} free cells",
            mask.free_count()
        )));
    }
    let spec = *mask.spec();
    let mut out: Vec<Cell> = Vec::with_capacity(n);
    match placement {
        Placement::Center => {
            let centre = spec.center_cell();
            for _ in 0..n {
                out.push(nearest_untaken(mask, centre, &out).expect("enough free cells"));
            }
        }
        Placement::Edges => {
            let ring = perimeter(spec.rows(), spec.cols());
            for i in 0..n {
                let target = ring[i * ring.len() / n];
                out.push(nearest_untaken(mask, target, &out).expect("enough free cells"));
            }
        }
        Placement::Random => {
            let free: Vec<Cell> = mask.free_cells().collect();
            out.extend(sample(rng, free.len(), n).into_iter().map(|i| free[i]));
        }
        Placement::Explicit(cells) => {
            if cells.len() != n {
                return Err(Error::InvalidParameter("explicit positions / agent count".into()));
            }
            for &c in cells {
                spec.check(c)?;
                if mask.is_blocked(c) {
                    return Err(Error::InvalidParameter(format!("start {c} is blocked")));
                }
            }
            out.extend_from_slice(cells);
        }
    }
    Ok(out)
}
