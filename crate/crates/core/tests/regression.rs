//! Frozen values of the reference configurations, each checked against a
//! direct-sum oracle before being pinned.

mod common;

use betacorona::beta::jones_nodes;
use betacorona::generate::{cantor4, segment};
use betacorona::lattice::cover_by_doubling;
use betacorona::measure::dist;
use betacorona::operators::{eps_grid, lattice_bumps};
use betacorona::verify::checks::{cotlar_check, main_lemma_check, pointwise_domination_check, t1_ball_check};
use betacorona::verify::sample_indices;
use betacorona::{
    build_corona, build_lattice, condition_check, delta_mu, Ball, CZKernel, CoronaParams, LatticeParams,
    WeightedPointMeasure,
};
use common::*;
use rand::Rng;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn cantor_condition_ratio() {
    let mu = cantor4(5).unwrap();
    let ball = Ball::new(vec![0.5, 0.5], 0.75).unwrap();
    let got = condition_check(&mu, &ball, 4).unwrap();
    let idx = mu.ball_indices(&ball.center, ball.radius);
    let nodes = jones_nodes(mu.r_min(), ball.radius, 4).unwrap();
    let oracle = jones_direct(&mu, &idx, &nodes) / got.mass;
    println!("cantor condition ratio {:.17e} oracle {:.17e}", got.ratio, oracle);
    assert!(close(got.ratio, oracle, 1e-9));
    assert!(got.ratio > 0.0 && got.ratio.is_finite());
    assert!(close(got.ratio, FROZEN_CONDITION, 1e-12));
}

#[test]
fn cantor_corner_delta_mu() {
    let mu = cantor4(4).unwrap();
    let lat = build_lattice(&mu, LatticeParams::relaxed(1)).unwrap();
    let corner = (0..mu.len())
        .min_by(|&a, &b| (mu.point(a)[0] + mu.point(a)[1]).total_cmp(&(mu.point(b)[0] + mu.point(b)[1])))
        .unwrap();
    let root = lat.root();
    for k in 2..=4 {
        let q = lat.cell_of[k][corner];
        let qc = &lat.cells[q];
        let oracle: f64 = (0..mu.len())
            .filter(|&i| dist(mu.point(i), &root.center) <= 56.0 * root.r && !qc.points.contains(&i))
            .map(|i| mu.weight(i) / dist(mu.point(i), &qc.center))
            .sum();
        let got = delta_mu(&lat, &mu, q, root.id).unwrap();
        println!("delta_mu level {k}: {:.17e} oracle {:.17e}", got.value, oracle);
        assert_eq!(got.singular_points, 0);
        assert!(close(got.value, oracle, 1e-12));
        assert!(close(got.value, FROZEN_DELTA[k - 2], 1e-12));
    }
}

#[test]
fn doubling_cover_of_a_light_point_next_to_a_heavy_cluster() {
    let mut g = rng(3);
    let mut pts: Vec<Vec<f64>> = (0..100).map(|_| vec![1e-3 * g.random::<f64>(), 1e-3 * g.random::<f64>()]).collect();
    let mut w = vec![1.0; 100];
    pts.push(vec![0.05, 0.0]);
    w.push(1e-3);
    let mu = WeightedPointMeasure::new(2, 1, &pts, w).unwrap();
    let light = mu.len() - 1;
    let mut uncovered_seen = false;
    for depth in [1, 2, 3, 5, 8] {
        let params = LatticeParams { max_depth: depth, ..LatticeParams::relaxed(1) };
        let lat = build_lattice(&mu, params).unwrap();
        // shallowest non-doubling cell on the light point's chain
        let Some(&start) = lat.chain(light).iter().find(|&&c| !lat.cells[c].doubling) else {
            continue;
        };
        let cover = cover_by_doubling(&lat, &mu, start).unwrap();
        let members = lat.cells[start].points.clone();
        // a point is covered iff some cell of its chain below `start` is doubling
        let direct: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&i| {
                !lat.chain(i)
                    .iter()
                    .any(|&c| lat.cells[c].k >= lat.cells[start].k && lat.cells[c].doubling)
            })
            .collect();
        assert_eq!(cover.uncovered_points, direct);
        let mass: f64 = direct.iter().map(|&i| mu.weight(i)).sum();
        assert_eq!(cover.uncovered_mass, mass);
        let mut covered: Vec<usize> = cover.cells.iter().flat_map(|&c| lat.cells[c].points.clone()).collect();
        covered.extend(&direct);
        covered.sort_unstable();
        assert_eq!(covered, members);
        uncovered_seen |= !direct.is_empty();
        println!("depth {depth}: start level {}, {} cover cells, uncovered mass {mass:e}", lat.cells[start].k, cover.cells.len());
    }
    assert!(uncovered_seen);
}

#[test]
fn cantor_main_lemma_constants() {
    let riesz = CZKernel::riesz(1, 2).unwrap();
    for g in 3..=5u32 {
        let mu = cantor4(g).unwrap();
        let grid = eps_grid(&mu, 2);
        let rec = main_lemma_check(&mu, &riesz, &grid, 4).unwrap();
        let lhs = truncated_energy_direct(&mu, &riesz, &grid);
        let all: Vec<usize> = (0..mu.len()).collect();
        let nodes = jones_nodes(mu.r_min(), mu.diameter(), 4).unwrap();
        let rhs = mu.total_mass() + jones_direct(&mu, &all, &nodes);
        println!("cantor g{g}: ratio {:.17e} oracle {:.17e}", rec.ratio, lhs / rhs);
        assert!(close(rec.lhs, lhs, 1e-10));
        assert!(close(rec.rhs, rhs, 1e-9));
        assert!(close(rec.ratio, FROZEN_MAIN_LEMMA[(g - 3) as usize], 1e-12));
    }
}

#[test]
fn cantor_ball_sample_stays_in_envelope() {
    let mu = cantor4(4).unwrap();
    let riesz = CZKernel::riesz(1, 2).unwrap();
    let global = main_lemma_check(&mu, &riesz, &eps_grid(&mu, 2), 4).unwrap().ratio;
    let mut g = rng(50);
    let balls: Vec<Ball> = (0..50)
        .map(|_| {
            let c = mu.point(g.random_range(0..mu.len())).to_vec();
            Ball::new(c, 0.01 + 0.7 * g.random::<f64>()).unwrap()
        })
        .collect();
    let rec = t1_ball_check(&mu, &riesz, &balls, 2, 4).unwrap();
    println!("t1 worst {:.17e} global {:.17e}", rec.ratio, global);
    assert!(rec.ratio <= 10.0 * global);
    assert!(close(rec.ratio, FROZEN_T1, 1e-12));
}

fn segment_tree_checks(npts: usize) -> (f64, f64) {
    let mu = segment(npts).unwrap();
    let lat = build_lattice(&mu, LatticeParams::relaxed(1)).unwrap();
    let corona = build_corona(&lat, &mu, CoronaParams::default()).unwrap();
    let riesz = CZKernel::riesz(1, 2).unwrap();
    let sample = sample_indices(mu.len(), 100, 9);
    let cotlar = cotlar_check(&mu, &riesz, &corona, &lat, 0, None, &sample).unwrap().ratio;
    let bump = lattice_bumps(&lat);
    let dom = pointwise_domination_check(&mu, &riesz, &corona, &lat, &bump, 0, &sample).unwrap().ratio;
    (cotlar, dom)
}

#[test]
fn segment_cotlar_and_domination() {
    let (c500, d500) = segment_tree_checks(500);
    let (c2000, d2000) = segment_tree_checks(2000);
    println!("cotlar {c500:.6} -> {c2000:.6}; domination {d500:.3e} -> {d2000:.3e}");
    assert!((c2000 / c500 - 1.0).abs() <= 0.5);
    assert!(d500 <= 0.1 && d2000 <= 0.1);
}

const FROZEN_CONDITION: f64 = 2.31821133562409604e-1;
const FROZEN_DELTA: [f64; 3] = [1.55284297189388232e0, 2.35545933711394628e0, 3.25782826417612847e0];
const FROZEN_MAIN_LEMMA: [f64; 3] = [1.31981773602586760e0, 1.69051987829840322e0, 2.02129669927788003e0];
const FROZEN_T1: f64 = 1.31981773602586760e0;
