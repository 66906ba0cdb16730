//! Independent reference implementations used by the integration tests.
//! None of these call into the library's numeric code.

#![allow(dead_code)]

/// Spherical semivariogram with γ(0) = 0.
pub fn spherical(h: f64, nugget: f64, sill: f64, range: f64) -> f64 {
    if h <= 0.0 {
        0.0
    } else if h >= range {
        sill
    } else {
        let x = h / range;
        nugget + (sill - nugget) * (1.5 * x - 0.5 * x * x * x)
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Ordinary kriging in the variogram form: solves the bordered system
/// `[Γ 1; 1ᵀ 0][λ; μ] = [γ0; 1]` and returns (estimate, variance, λ, μ).
pub fn ordinary_kriging(
    points: &[((usize, usize), f64)],
    target: (usize, usize),
    gamma: impl Fn(f64) -> f64,
) -> (f64, f64, Vec<f64>, f64) {
    let n = points.len();
    let dist = |a: (usize, usize), b: (usize, usize)| {
        let dr = a.0 as f64 - b.0 as f64;
        let dc = a.1 as f64 - b.1 as f64;
        (dr * dr + dc * dc).sqrt()
    };
    let mut a = vec![vec![0.0; n + 1]; n + 1];
    let mut b = vec![0.0; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = if i == j { 0.0 } else { gamma(dist(points[i].0, points[j].0)) };
        }
        a[i][n] = 1.0;
        a[n][i] = 1.0;
        b[i] = gamma(dist(points[i].0, target));
    }
    b[n] = 1.0;
    let x = gauss_solve(a, b.clone());
    let lambda = x[..n].to_vec();
    let mu = x[n];
    let est = lambda.iter().zip(points).map(|(l, p)| l * p.1).sum();
    let var = lambda.iter().zip(&b[..n]).map(|(l, g)| l * g).sum::<f64>() + mu;
    (est, var, lambda, mu)
}

/// Min-max normalisation over free cells; constant input maps to zeros.
pub fn normalize_free(values: &[f64], blocked: &[bool]) -> Vec<f64> {
    let free = values.iter().zip(blocked).filter(|(_, &b)| !b).map(|(&v, _)| v);
    let lo = free.clone().fold(f64::INFINITY, f64::min);
    let hi = free.fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .zip(blocked)
        .map(|(&v, &b)| if b || !(hi > lo) { 0.0 } else { (v - lo) / (hi - lo) })
        .collect()
}

/// Dijkstra over the 8-connected grid where entering cell `j` by a move
/// of length `len` costs `step_cost·len + 1/(s̄_j + 0.1)`. Diagonals are
/// disallowed when both orthogonal side cells are blocked. Returns the
/// optimal cost to `goal`, or None when unreachable.
pub fn dijkstra(
    rows: usize,
    cols: usize,
    blocked: &[bool],
    norm_score: &[f64],
    step_cost: f64,
    start: (usize, usize),
    goal: (usize, usize),
) -> Option<f64> {
    let idx = |r: usize, c: usize| r * cols + c;
    let n = rows * cols;
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[idx(start.0, start.1)] = 0.0;
    // O(n²) selection keeps this free of any heap ordering subtleties.
    loop {
        let mut u = None;
        for i in 0..n {
            if !done[i] && dist[i].is_finite() && u.is_none_or(|k: usize| dist[i] < dist[k]) {
                u = Some(i);
            }
        }
        let u = u?;
        if u == idx(goal.0, goal.1) {
            return Some(dist[u]);
        }
        done[u] = true;
        let (r, c) = (u / cols, u % cols);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                let j = idx(nr, nc);
                if blocked[j] {
                    continue;
                }
                let diag = dr != 0 && dc != 0;
                if diag && blocked[idx(r, nc)] && blocked[idx(nr, c)] {
                    continue;
                }
                let len = if diag { 2f64.sqrt() } else { 1.0 };
                let cand = dist[u] + (step_cost * len + 1.0 / (norm_score[j] + 0.1));
                if cand < dist[j] {
                    dist[j] = cand;
                }
            }
        }
    }
}

/// Upper tail P(T > t) of Student's t with `df` degrees of freedom by
/// quadrature of the unnormalised density. Both the tail and the total
/// mass are integrated, so no gamma function is needed.
pub fn t_upper_tail(t: f64, df: f64) -> f64 {
    let dens = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    // x = tan θ maps the real line onto (−π/2, π/2).
    let integrate = |a: f64, b: f64| {
        let n = 200_000;
        let h = (b - a) / n as f64;
        let f = |th: f64| {
            let c = th.cos();
            if c <= 0.0 {
                0.0
            } else {
                dens(th.tan()) / (c * c)
            }
        };
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    };
    let half = std::f64::consts::FRAC_PI_2;
    integrate(t.atan(), half) / integrate(-half, half)
}

/// Five-term score recomputed from its definition on raw inputs.
#[allow(clippy::too_many_arguments)]
pub fn score_cell_sums(
    rows: usize,
    cols: usize,
    blocked: &[bool],
    estimate: &[f64],
    uncertainty: &[f64],
    agent: (usize, usize),
    goal: Option<(usize, usize)>,
    w: [f64; 5],
) -> Vec<f64> {
    let n = rows * cols;
    let dist_from = |p: (f64, f64)| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let (r, c) = ((i / cols) as f64, (i % cols) as f64);
                ((r - p.0).powi(2) + (c - p.1).powi(2)).sqrt()
            })
            .collect()
    };
    let e = normalize_free(estimate, blocked);
    let u = normalize_free(uncertainty, blocked);
    let centre = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let dc = normalize_free(&dist_from(centre), blocked);
    let da = normalize_free(&dist_from((agent.0 as f64, agent.1 as f64)), blocked);
    let dg = goal.map(|g| normalize_free(&dist_from((g.0 as f64, g.1 as f64)), blocked));
    (0..n)
        .map(|i| {
            if blocked[i] {
                return 0.0;
            }
            let mut s = w[0] * e[i] + w[1] * u[i] + w[2] * (1.0 - dc[i]) + w[3] * (1.0 - da[i]);
            if let Some(dg) = &dg {
                s += w[4] * (1.0 - dg[i]);
            }
            s
        })
        .collect()
}
