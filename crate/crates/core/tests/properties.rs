//! Property-based invariants over random measures, balls and kernels.

use betacorona::measure::io::{parse_csv, to_csv};
use betacorona::operators::{eps_grid, psi, suppressed_kernel};
use betacorona::verify::capacity::capacity_lower_bound;
use betacorona::verify::checks::main_lemma_check;
use betacorona::{beta2, build_lattice, Ball, BumpFamily, CZKernel, LatticeParams, WeightedPointMeasure};
use proptest::prelude::*;

fn planar_measure(max: usize) -> impl Strategy<Value = WeightedPointMeasure> {
    prop::collection::vec(((0.0f64..1.0, 0.0f64..1.0), 0.1f64..2.0), 2..max).prop_map(|v| {
        let pts: Vec<Vec<f64>> = v.iter().map(|((x, y), _)| vec![*x, *y]).collect();
        let w = v.iter().map(|(_, w)| *w).collect();
        WeightedPointMeasure::new(2, 1, &pts, w).unwrap()
    })
}

fn rigid(theta: f64, shift: (f64, f64)) -> impl Fn(&[f64]) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    move |p: &[f64]| vec![c * p[0] - s * p[1] + shift.0, s * p[0] + c * p[1] + shift.1]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn beta_squared_is_at_most_four_theta(mu in planar_measure(40), i in 0usize..40, t in 0.0f64..1.0) {
        let c = mu.point(i % mu.len()).to_vec();
        let r = mu.r_min() * (2.0 / mu.r_min()).powf(t);
        let ball = Ball::new(c, r).unwrap();
        let b = beta2(&mu, &ball).unwrap().value;
        prop_assert!(b * b <= 4.0 * mu.theta_ball(&ball) * (1.0 + 1e-12));
    }

    #[test]
    fn beta_is_invariant_under_rigid_motions(
        mu in planar_measure(40), theta in 0.0f64..6.3, dx in -5.0f64..5.0, dy in -5.0f64..5.0, r in 0.2f64..1.5,
    ) {
        let map = rigid(theta, (dx, dy));
        let moved = mu.mapped(&map).unwrap();
        let c = mu.point(0).to_vec();
        // keep the ball boundary away from the support so membership is stable
        let ok = (0..mu.len()).all(|i| (betacorona::measure::dist(mu.point(i), &c) - r).abs() > 1e-9);
        prop_assume!(ok && r >= mu.r_min());
        let a = beta2(&mu, &Ball::new(c.clone(), r).unwrap()).unwrap().value;
        let b = beta2(&moved, &Ball::new(map(&c), r).unwrap()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn beta_scales_with_the_square_root_of_mass(mu in planar_measure(30), t in 0.01f64..100.0) {
        let ball = Ball::new(mu.point(0).to_vec(), 0.8).unwrap();
        let a = beta2(&mu, &ball).unwrap().value;
        let b = beta2(&mu.scaled(t).unwrap(), &ball).unwrap().value;
        prop_assert!((b - t.sqrt() * a).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn kernels_are_exactly_antisymmetric(x in prop::array::uniform2(-3.0f64..3.0), y in prop::array::uniform2(-3.0f64..3.0)) {
        prop_assume!(x != y);
        for k in [CZKernel::riesz(1, 2).unwrap(), CZKernel::cauchy()] {
            let (mut a, mut b) = (vec![0.0; 2], vec![0.0; 2]);
            k.k(&x, &y, &mut a);
            k.k(&y, &x, &mut b);
            prop_assert!(a.iter().zip(&b).all(|(p, q)| *p == -*q));
        }
    }

    #[test]
    fn suppressed_kernel_is_antisymmetric_and_dominated(
        x in prop::array::uniform2(0.0f64..1.0), y in prop::array::uniform2(0.0f64..1.0), lam in 0.0f64..3.0,
    ) {
        prop_assume!(x != y);
        let k = CZKernel::riesz(1, 2).unwrap();
        let phi = |p: &[f64]| lam * (p[0] - 0.4).max(0.0);
        let a = suppressed_kernel(&k, phi, &x, &y);
        let b = suppressed_kernel(&k, phi, &y, &x);
        prop_assert!(a.iter().zip(&b).all(|(p, q)| *p == -*q));
        let plain = k.eval_vec(&[x[0] - y[0], x[1] - y[1]]);
        let norm = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>().sqrt();
        prop_assert!(norm(&a) <= norm(&plain));
        if phi(&x) * phi(&y) == 0.0 {
            prop_assert_eq!(a, plain);
        }
    }

    #[test]
    fn bumps_are_monotone_and_telescope(a0 in 4.5f64..64.0, t in 0.0f64..1.0, j in -3i64..3, len in 1i64..6) {
        let bump = BumpFamily::new(a0, 1.0).unwrap();
        let r = bump.outer_radius(j) * 2.0 * t;
        let sum: f64 = (j..j + len).map(|k| bump.phi_k(k, r)).sum();
        let direct = bump.psi_k(j, r) - bump.psi_k(j + len, r);
        prop_assert!((sum - direct).abs() <= 4.0 * f64::EPSILON * len as f64);
        prop_assert!((0.0..=1.0).contains(&psi(t)));
        prop_assert!(psi(t) >= psi(t + 1e-3));
    }

    #[test]
    fn main_lemma_is_invariant_under_rigid_motions(
        mu in planar_measure(40), theta in 0.0f64..6.3, dx in -5.0f64..5.0, dy in -5.0f64..5.0,
    ) {
        let moved = mu.mapped(rigid(theta, (dx, dy))).unwrap();
        let grid: Vec<f64> = eps_grid(&mu, 2).iter().map(|e| 1.0137 * e).collect();
        let k = CZKernel::riesz(1, 2).unwrap();
        // truncation is strict in the distance: skip configurations with a
        // distance within rounding of a grid radius
        let near_grid = (0..mu.len()).any(|i| (0..mu.len()).any(|j| {
            let d = betacorona::measure::dist(mu.point(i), mu.point(j));
            grid.iter().any(|e| (d - e).abs() <= 1e-9 * e)
        }));
        prop_assume!(!near_grid);
        let a = main_lemma_check(&mu, &k, &grid, 4).unwrap();
        let b = main_lemma_check(&moved, &k, &grid, 4).unwrap();
        prop_assert!((a.ratio - b.ratio).abs() <= 1e-8 * a.ratio.max(1e-300));
    }

    #[test]
    fn lattice_invariants_hold(mu in planar_measure(120)) {
        let lat = build_lattice(&mu, LatticeParams::relaxed(1)).unwrap();
        let rep = lat.check_invariants(&mu);
        prop_assert!(rep.exact_ok(), "{:?}", rep);
    }

    #[test]
    fn capacity_bound_scales_exactly(mu in planar_measure(40), t in 0.01f64..100.0) {
        let a = capacity_lower_bound(&mu, 4).unwrap();
        let b = capacity_lower_bound(&mu.scaled(t).unwrap(), 4).unwrap();
        prop_assert!((b.bound - a.bound).abs() <= 1e-12 * a.bound);
        prop_assert!(a.bound <= mu.total_mass() / a.density_sup * (1.0 + 1e-12));
    }

    #[test]
    fn csv_round_trip_is_exact(mu in planar_measure(30)) {
        let back = parse_csv(&to_csv(&mu)).unwrap();
        prop_assert_eq!(back.coords(), mu.coords());
        prop_assert_eq!(back.weights(), mu.weights());
    }

    #[test]
    fn annulus_tail_obeys_the_growth_bound(mu in planar_measure(60), i in 0usize..60, t in 0.0f64..1.0) {
        let x = mu.point(i % mu.len()).to_vec();
        let r = mu.r_min() * (4.0 / mu.r_min()).powf(t);
        let c0 = mu.growth_constant_exact();
        prop_assert!(mu.annulus_tail(&x, r) <= 4.0 * c0 / r * (1.0 + 1e-12));
    }
}
