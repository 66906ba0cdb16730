mod oracle;

use std::time::Instant;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbs_core::envgen::{generate_fbf, FbfParams};
use sbs_core::geostat::{krige, KrigingSystem, ReconstructedMap, VariogramModel};
use sbs_core::metrics::{cax, MetricEvaluator};
use sbs_core::planner::{
    compute_score, path_cost, route_astar, select_goal, voronoi_partition, ScoreWeights,
};
use sbs_core::stats::{welch_margin_test, Direction, SampleStats};
use sbs_core::{AgentId, AgentState, Cell, Error, GridMap, GridSpec, MapKind, ObstacleMask};

fn distinct_points(rng: &mut ChaCha8Rng, spec: &GridSpec, n: usize) -> Vec<(Cell, f64)> {
    let mut cells: Vec<Cell> = spec.cells().collect();
    cells.shuffle(rng);
    cells
        .into_iter()
        .take(n)
        .map(|c| (c, rng.random_range(-1.0..2.0)))
        .collect()
}

#[test]
fn kriging_matches_dense_bordered_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for fixture in 0..20 {
        let size = if fixture == 0 { 10 } else { rng.random_range(8..=20) };
        let spec = GridSpec::square(size).unwrap();
        let n = if fixture == 0 { 5 } else { rng.random_range(5..=30) };
        let pts = distinct_points(&mut rng, &spec, n);
        let nugget = if fixture % 2 == 0 { 0.0 } else { rng.random_range(0.0..0.2) };
        let sill = nugget + rng.random_range(0.3..2.0);
        let range = rng.random_range(3.0..(size as f64 * 1.5));
        let model = VariogramModel::spherical(nugget, sill, range).unwrap();
        let sys = KrigingSystem::new(&pts, model, spec).unwrap();
        let raw: Vec<((usize, usize), f64)> = pts.iter().map(|(c, v)| ((c.row, c.col), *v)).collect();
        for _ in 0..3 {
            let probe = Cell::new(rng.random_range(0..size), rng.random_range(0..size));
            let (e, v, lambda, mu) =
                oracle::ordinary_kriging(&raw, (probe.row, probe.col), |h| oracle::spherical(h, nugget, sill, range));
            let (est, var) = sys.predict(probe);
            let (lam, m) = sys.weights(probe);
            worst = worst.max((est - e).abs()).max((var - v.max(0.0)).abs());
            assert!((est - e).abs() < 1e-8, "fixture {fixture}: {est} vs {e}");
            assert!((var - v.max(0.0)).abs() < 1e-8, "fixture {fixture}: {var} vs {v}");
            for (a, b) in lam.iter().zip(&lambda) {
                assert!((a - b).abs() < 1e-8);
            }
            assert!((m - mu).abs() < 1e-8, "{m} vs {mu}");
        }
    }
    eprintln!("worst kriging deviation {worst:.2e}");
}

#[test]
fn kriging_interpolates_exactly() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = GridSpec::square(20).unwrap();
    let mask = ObstacleMask::open(spec);
    for _ in 0..100 {
        let n = rng.random_range(5..=50);
        let pts = distinct_points(&mut rng, &spec, n);
        let sill = rng.random_range(0.1..3.0);
        let model = VariogramModel::spherical(0.0, sill, rng.random_range(2.0..30.0)).unwrap();
        let rec = krige(&pts, model, spec, &mask).unwrap();
        for (c, v) in &pts {
            assert!((rec.estimate.get(*c) - v).abs() <= 1e-6);
            assert!(rec.uncertainty.get(*c) <= 1e-6 * sill);
        }
        assert!(rec.uncertainty.values().iter().all(|&u| u >= 0.0));
    }
    assert!(t0.elapsed().as_secs_f64() < 10.0);
}

fn random_mask(rng: &mut ChaCha8Rng, spec: GridSpec, frac: f64) -> ObstacleMask {
    let blocked = (0..spec.len()).map(|_| rng.random_bool(frac)).collect();
    ObstacleMask::new(spec, blocked).unwrap()
}

#[test]
fn astar_costs_equal_dijkstra() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    let mut unreachable = 0;
    for i in 0..200 {
        let rows = rng.random_range(2..=20);
        let cols = rng.random_range(2..=20);
        let spec = GridSpec::new(rows, cols, 1.0).unwrap();
        let mask = if i % 2 == 0 {
            ObstacleMask::open(spec)
        } else {
            random_mask(&mut rng, spec, 0.25)
        };
        let free: Vec<Cell> = mask.free_cells().collect();
        if free.len() < 2 {
            continue;
        }
        let start = free[rng.random_range(0..free.len())];
        let goal = free[rng.random_range(0..free.len())];
        // coarse levels produce many exact ties
        let levels: f64 = if i % 3 == 0 { 3.0 } else { 1e6 };
        let score = GridMap::from_fn(spec, MapKind::Score, |_| (rng.random_range(0.0f64..1.0) * levels).floor());
        let mut w = ScoreWeights::default();
        w.step_cost = [0.01, 0.3, 2.0][i % 3];
        let norm = oracle::normalize_free(score.values(), mask.blocked());
        let expect = oracle::dijkstra(rows, cols, mask.blocked(), &norm, w.step_cost, (start.row, start.col), (goal.row, goal.col));
        match (route_astar(start, goal, &score, &w, &mask), expect) {
            (Ok(path), Some(cost)) => {
                assert_eq!(path[0], start);
                assert_eq!(*path.last().unwrap(), goal);
                for p in path.windows(2) {
                    assert_eq!(p[0].chebyshev(p[1]), 1);
                    assert!(mask.is_free(p[1]));
                    if p[0].row != p[1].row && p[0].col != p[1].col {
                        let a = Cell::new(p[0].row, p[1].col);
                        let b = Cell::new(p[1].row, p[0].col);
                        assert!(mask.is_free(a) || mask.is_free(b), "corner cut");
                    }
                }
                let got = path_cost(&path, &score, &w, &mask);
                assert_eq!(got, cost, "instance {i}");
                checked += 1;
            }
            (Err(Error::NoPath { .. }), None) => unreachable += 1,
            (got, want) => panic!("instance {i}: {got:?} vs {want:?}"),
        }
    }
    assert!(checked > 150, "{checked}");
    eprintln!("{checked} routes matched, {unreachable} unreachable agreed");
}

#[test]
fn welch_matches_t_quadrature() {
    let cases = [
        (SampleStats { n: 100, mean: 40.0, sd: 12.0 }, SampleStats { n: 100, mean: 50.0, sd: 15.0 }, 0.1, Direction::LowerIsBetter),
        (SampleStats { n: 10, mean: 0.6, sd: 0.2 }, SampleStats { n: 14, mean: 0.4, sd: 0.05 }, 0.1, Direction::HigherIsBetter),
        (SampleStats { n: 5, mean: 3.0, sd: 1.0 }, SampleStats { n: 30, mean: 3.0, sd: 2.0 }, 0.0, Direction::LowerIsBetter),
        (SampleStats { n: 3, mean: 1.2, sd: 0.3 }, SampleStats { n: 3, mean: 1.0, sd: 0.4 }, 0.05, Direction::HigherIsBetter),
    ];
    for (a, b, m, dir) in cases {
        let p = welch_margin_test(a, b, m, dir).unwrap();
        let s = match dir {
            Direction::LowerIsBetter => 1.0 - m,
            Direction::HigherIsBetter => 1.0 + m,
        };
        let diff = match dir {
            Direction::LowerIsBetter => s * b.mean - a.mean,
            Direction::HigherIsBetter => a.mean - s * b.mean,
        };
        let va = a.sd.powi(2) / a.n as f64;
        let vb = (s * b.sd).powi(2) / b.n as f64;
        let t = diff / (va + vb).sqrt();
        let df = (va + vb).powi(2) / (va.powi(2) / (a.n - 1) as f64 + vb.powi(2) / (b.n - 1) as f64);
        let q = oracle::t_upper_tail(t, df);
        assert!((p - q).abs() < 1e-6, "{p} vs {q} (t {t}, df {df})");
    }
}

#[test]
fn cax_random_permutation_baselines() {
    let t0 = Instant::now();
    let spec = GridSpec::square(50).unwrap();
    let mask = ObstacleMask::open(spec);
    let truth: GridMap<f64> = generate_fbf(&FbfParams::new(spec, 1)).unwrap();
    let ev = MetricEvaluator::new(&truth, &mask).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut s50, mut s90) = (0.0, 0.0);
    let trials = 1000;
    for _ in 0..trials {
        let mut v = truth.values().to_vec();
        v.shuffle(&mut rng);
        let est = GridMap::new(spec, MapKind::Estimate, v).unwrap();
        let row = ev.evaluate(0, &est).unwrap();
        s50 += row.ca[0];
        s90 += row.ca[2];
    }
    let (m50, m90) = (s50 / trials as f64, s90 / trials as f64);
    assert!((m50 - 1.0 / 3.0).abs() <= 0.02, "{m50}");
    assert!((m90 - 1.0 / 19.0).abs() <= 0.01, "{m90}");
    assert!(t0.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn cax_perfect_reconstruction() {
    let spec = GridSpec::square(30).unwrap();
    let mask = ObstacleMask::open(spec);
    let truth: GridMap<f64> = generate_fbf(&FbfParams::new(spec, 8)).unwrap();
    let row = MetricEvaluator::new(&truth, &mask).unwrap().evaluate(0, &truth).unwrap();
    assert_eq!(row.ca, [1.0; 5]);
    assert_eq!(row.sse, 0.0);
}

fn recon_from(spec: GridSpec, est: Vec<f64>, unc: Vec<f64>) -> ReconstructedMap<f64> {
    ReconstructedMap {
        estimate: GridMap::new(spec, MapKind::Estimate, est).unwrap(),
        uncertainty: GridMap::new(spec, MapKind::Uncertainty, unc).unwrap(),
        n_measurements_used: 10,
        burn_in: false,
        model: None,
    }
}

#[test]
fn score_matches_independent_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let spec = GridSpec::square(5).unwrap();
    for with_obstacles in [false, true] {
        let mask = if with_obstacles {
            let mut b = vec![false; 25];
            b[7] = true;
            b[18] = true;
            ObstacleMask::new(spec, b).unwrap()
        } else {
            ObstacleMask::open(spec)
        };
        let est: Vec<f64> = (0..25).map(|_| rng.random_range(0.0..1.0)).collect();
        let unc: Vec<f64> = (0..25).map(|_| rng.random_range(0.0..0.3)).collect();
        let mut agent = AgentState::new(AgentId(0), Cell::new(1, 3));
        agent.goal = Some(Cell::new(4, 0));
        let w = ScoreWeights::default();
        let sm = compute_score(&recon_from(spec, est.clone(), unc.clone()), &agent, &[agent.clone()], w, &mask).unwrap();
        let weights = [w.expected_value, w.uncertainty, w.prefer_center, w.prefer_closeness, w.prefer_current_goal];
        let want = oracle::score_cell_sums(5, 5, mask.blocked(), &est, &unc, (1, 3), Some((4, 0)), weights);
        for (a, b) in sm.score.values().iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
        agent.goal = None;
        let sm = compute_score(&recon_from(spec, est.clone(), unc.clone()), &agent, &[agent.clone()], w, &mask).unwrap();
        let want = oracle::score_cell_sums(5, 5, mask.blocked(), &est, &unc, (1, 3), None, weights);
        for (a, b) in sm.score.values().iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn voronoi_disjoint_cover_500_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for _ in 0..500 {
        let spec = GridSpec::new(rng.random_range(2..=25), rng.random_range(2..=25), 1.0).unwrap();
        let mask = random_mask(&mut rng, spec, 0.15);
        let free: Vec<Cell> = mask.free_cells().collect();
        if free.is_empty() {
            continue;
        }
        let n = rng.random_range(1..=16);
        let agents: Vec<AgentState> = (0..n)
            .map(|i| AgentState::new(AgentId(i), free[rng.random_range(0..free.len())]))
            .collect();
        let part = voronoi_partition(&agents, &mask).unwrap();
        let total: usize = agents.iter().map(|a| part.count(a.id)).sum();
        assert_eq!(total, free.len());
        for c in spec.cells() {
            let owner = part.owner(c);
            assert_eq!(owner.is_some(), mask.is_free(c));
            if let Some(o) = owner {
                // owner is a nearest agent, lowest id on ties
                let d = |a: &AgentState| a.position.distance2(c);
                let best = agents.iter().map(d).min().unwrap();
                let first = agents.iter().find(|a| d(a) == best).unwrap();
                assert_eq!(o, first.id);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn goal_invariant_under_affine_estimate(
        est in prop::collection::vec(0.0f64..1.0, 64),
        unc in prop::collection::vec(0.0f64..1.0, 64),
        a in 0.1f64..50.0,
        b in -10.0f64..10.0,
        pos in 0usize..64,
    ) {
        let spec = GridSpec::square(8).unwrap();
        let mask = ObstacleMask::open(spec);
        let agent = AgentState::new(AgentId(0), spec.cell_at(pos));
        let w = ScoreWeights::default();
        let r1 = recon_from(spec, est.clone(), unc.clone());
        let r2 = recon_from(spec, est.iter().map(|x| a * x + b).collect(), unc);
        let g1 = select_goal(&compute_score(&r1, &agent, &[agent.clone()], w, &mask).unwrap(), &agent).unwrap();
        let g2 = select_goal(&compute_score(&r2, &agent, &[agent.clone()], w, &mask).unwrap(), &agent).unwrap();
        prop_assert_eq!(g1, g2);
    }

    #[test]
    fn cax_invariant_under_monotone_transform(
        truth in prop::collection::vec(0.0f64..1.0, 36),
        est in prop::collection::vec(0.0f64..1.0, 36),
        k in 0.2f64..5.0,
    ) {
        let spec = GridSpec::square(6).unwrap();
        let mask = ObstacleMask::open(spec);
        let f = |v: &[f64]| v.iter().map(|x| (k * x).exp() + x.powi(3)).collect::<Vec<_>>();
        let t1 = GridMap::new(spec, MapKind::Truth, truth.clone()).unwrap();
        let e1 = GridMap::new(spec, MapKind::Estimate, est.clone()).unwrap();
        let t2 = GridMap::new(spec, MapKind::Truth, f(&truth)).unwrap();
        let e2 = GridMap::new(spec, MapKind::Estimate, f(&est)).unwrap();
        for x in [50.0, 80.0, 90.0, 95.0, 99.0] {
            let a = cax(&e1, &t1, x, &mask).unwrap();
            let b = cax(&e2, &t2, x, &mask).unwrap();
            prop_assert_eq!((a.tp, a.fp, a.fn_), (b.tp, b.fp, b.fn_));
        }
    }
}
