use crate::error::{Error, Result};
use crate::grid::{Cell, GridSpec, ObstacleMask};

/// Arc length of `r = θ` from 0 to θ.
fn unit_arc(theta: f64) -> f64 {
    0.5 * (theta * (1.0 + theta * theta).sqrt() + theta.asinh())
}

/// Solves `f(θ) = target` for increasing `f` by bisection.
fn invert(f: impl Fn(f64) -> f64, target: f64, mut hi: f64) -> f64 {
    let mut lo = 0.0;
    while f(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Cells of an Archimedean spiral `r = bθ` sampled at unit arc length,
/// centred on the centre cell, with `b` chosen so the radius reaches
/// `min(rows, cols)/2 − 1` after exactly `budget` steps. Entry k is the
/// position after k steps.
pub fn spiral_cells(spec: &GridSpec, budget: usize) -> Result<Vec<Cell>> {
    let radius = spec.rows().min(spec.cols()) as f64 / 2.0 - 1.0;
    if !(radius > 0.0) || budget == 0 {
        return Err(Error::Unsupported("grid too small for a spiral".into()));
    }
    // With r = bθ the arc length is b·unit_arc(θ); at the end bθ_B = R, so
    // unit_arc(θ_B)/θ_B = budget/R fixes θ_B.
    let ratio = budget as f64 / radius;
    if ratio <= 1.0 {
        return Err(Error::Unsupported(format!(
            "budget {budget} is shorter than the spiral radius {radius}"
        )));
    }
    let theta_b = invert(|t| unit_arc(t) / t, ratio, 1.0);
    let b = radius / theta_b;
    let centre = spec.center_cell();
    let (cr, cc) = (centre.row as f64, centre.col as f64);
    Ok((0..=budget)
        .map(|k| {
            let theta = if k == 0 { 0.0 } else { invert(unit_arc, k as f64 / b, theta_b) };
            let r = b * theta;
            let row = (cr - r * theta.sin()).round();
            let col = (cc + r * theta.cos()).round();
            Cell::new(
                row.clamp(0.0, (spec.rows() - 1) as f64) as usize,
                col.clamp(0.0, (spec.cols() - 1) as f64) as usize,
            )
        })
        .collect())
}

/// Position after `step` moves of the spiral.
pub fn spiral_policy(spec: &GridSpec, budget: usize, step: usize) -> Result<Cell> {
    spiral_cells(spec, budget)?
        .get(step)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("step {step} beyond budget {budget}")))
}

pub(crate) fn check_spiral(mask: &ObstacleMask, cells: &[Cell]) -> Result<()> {
    if let Some(c) = cells.iter().find(|&&c| mask.is_blocked(c)) {
        return Err(Error::Unsupported(format!("spiral crosses obstacle at {c}")));
    }
    Ok(())
}
