//! Independent oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use betacorona::WeightedPointMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Points of `μ` in the closed ball, with weights.
pub fn ball_points(mu: &WeightedPointMeasure, x: &[f64], r: f64) -> Vec<(Vec<f64>, f64)> {
    (0..mu.len())
        .filter(|&i| betacorona::measure::dist(mu.point(i), x) <= r)
        .map(|i| (mu.point(i).to_vec(), mu.weight(i)))
        .collect()
}

/// `Σ w (⟨p, u⟩ − m)²` with the optimal offset `m` (weighted mean), i.e. the
/// squared residual of the hyperplane with unit normal `u`.
fn hyperplane_residual(pts: &[(Vec<f64>, f64)], u: &[f64]) -> f64 {
    let mass: f64 = pts.iter().map(|p| p.1).sum();
    let m = pts.iter().map(|(p, w)| w * dot(p, u)).sum::<f64>() / mass;
    pts.iter().map(|(p, w)| w * (dot(p, u) - m).powi(2)).sum()
}

/// Residual of the line through the weighted centroid with unit direction `v`.
fn line_residual(pts: &[(Vec<f64>, f64)], v: &[f64]) -> f64 {
    let mass: f64 = pts.iter().map(|p| p.1).sum();
    let d = v.len();
    let mut c = vec![0.0; d];
    for (p, w) in pts {
        for k in 0..d {
            c[k] += w * p[k] / mass;
        }
    }
    pts.iter()
        .map(|(p, w)| {
            let y: Vec<f64> = p.iter().zip(&c).map(|(a, b)| a - b).collect();
            w * (dot(&y, &y) - dot(&y, v).powi(2)).max(0.0)
        })
        .sum()
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// β₂ in the plane (`n = 1`, `d = 2`) by scanning 10⁴ normal directions and
/// refining the best one by golden-section search.
pub fn brute_beta2_planar(mu: &WeightedPointMeasure, x: &[f64], r: f64) -> f64 {
    let pts = ball_points(mu, x, r);
    if pts.is_empty() {
        return 0.0;
    }
    let res = |t: f64| hyperplane_residual(&pts, &[t.cos(), t.sin()]);
    let m = 10_000;
    let step = std::f64::consts::PI / m as f64;
    let best = (0..m).map(|j| j as f64 * step).min_by(|a, b| res(*a).total_cmp(&res(*b))).unwrap();
    let (_, r2) = golden_min(res, best - step, best + step, 1e-14);
    (r2.min(res(best)) / r.powi(3)).sqrt()
}

fn random_rotation_axes(rng: &mut ChaCha8Rng) -> [Vec<f64>; 3] {
    // uniform unit quaternion
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let q = [
        (1.0 - u1).sqrt() * (tau * u2).sin(),
        (1.0 - u1).sqrt() * (tau * u2).cos(),
        u1.sqrt() * (tau * u3).sin(),
        u1.sqrt() * (tau * u3).cos(),
    ];
    let (a, b, c, d) = (q[3], q[0], q[1], q[2]);
    [
        vec![a * a + b * b - c * c - d * d, 2.0 * (b * c + a * d), 2.0 * (b * d - a * c)],
        vec![2.0 * (b * c - a * d), a * a - b * b + c * c - d * d, 2.0 * (c * d + a * b)],
        vec![2.0 * (b * d + a * c), 2.0 * (c * d - a * b), a * a - b * b - c * c + d * d],
    ]
}

/// Local pattern search on the unit sphere of R³.
fn sphere_descent<F: Fn(&[f64]) -> f64>(f: F, start: Vec<f64>) -> f64 {
    let mut u = start;
    let mut fu = f(&u);
    let mut h = 0.05;
    while h > 1e-13 {
        let mut improved = false;
        let helper = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let mut t1 = vec![
            u[1] * helper[2] - u[2] * helper[1],
            u[2] * helper[0] - u[0] * helper[2],
            u[0] * helper[1] - u[1] * helper[0],
        ];
        normalize(&mut t1);
        let t2 = vec![u[1] * t1[2] - u[2] * t1[1], u[2] * t1[0] - u[0] * t1[2], u[0] * t1[1] - u[1] * t1[0]];
        for t in [&t1, &t2] {
            for s in [h, -h] {
                let mut v: Vec<f64> = u.iter().zip(t.iter()).map(|(a, b)| a + s * b).collect();
                normalize(&mut v);
                let fv = f(&v);
                if fv < fu {
                    u = v;
                    fu = fv;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    fu
}

/// β₂ in R³ for `n = 1` (lines) or `n = 2` (planes): 10⁴ random rotations,
/// the best one refined by pattern search on the sphere.
pub fn brute_beta2_space(mu: &WeightedPointMeasure, x: &[f64], r: f64, seed: u64) -> f64 {
    let pts = ball_points(mu, x, r);
    if pts.is_empty() {
        return 0.0;
    }
    let n = mu.n();
    let f = |u: &[f64]| if n == 2 { hyperplane_residual(&pts, u) } else { line_residual(&pts, u) };
    let mut g = rng(seed);
    let mut best = (f64::INFINITY, vec![1.0, 0.0, 0.0]);
    for _ in 0..10_000 {
        let axes = random_rotation_axes(&mut g);
        let v = f(&axes[0]);
        if v < best.0 {
            best = (v, axes[0].clone());
        }
    }
    let res = sphere_descent(f, best.1).min(best.0);
    (res / r.powi(n as i32 + 2)).sqrt()
}

pub fn random_measure(seed: u64, npts: usize, dim: usize, n: usize) -> WeightedPointMeasure {
    let mut g = rng(seed);
    let pts: Vec<Vec<f64>> = (0..npts).map(|_| (0..dim).map(|_| g.random::<f64>()).collect()).collect();
    let w: Vec<f64> = (0..npts).map(|_| 0.5 + g.random::<f64>()).collect();
    WeightedPointMeasure::new(dim, n, &pts, w).unwrap()
}

/// Random points lying exactly (in floating point) on a random `n`-plane of
/// `R^d`: dyadic parameters and dyadic slopes keep every coordinate exact.
pub fn random_flat_measure(seed: u64, npts: usize, dim: usize, n: usize) -> WeightedPointMeasure {
    let mut g = rng(seed);
    let dyadic = |g: &mut ChaCha8Rng, bits: u32| g.random_range(-(1i64 << bits)..=(1i64 << bits)) as f64 / (1i64 << bits) as f64;
    // coordinate k >= n is an affine function of the first n coordinates
    let slopes: Vec<Vec<f64>> = (n..dim).map(|_| (0..=n).map(|_| dyadic(&mut g, 3)).collect()).collect();
    let pts: Vec<Vec<f64>> = (0..npts)
        .map(|_| {
            let mut p: Vec<f64> = (0..n).map(|_| dyadic(&mut g, 20)).collect();
            for s in &slopes {
                let v = s[n] + (0..n).map(|j| s[j] * p[j]).sum::<f64>();
                p.push(v);
            }
            p
        })
        .collect();
    let w: Vec<f64> = (0..npts).map(|_| 0.5 + g.random::<f64>()).collect();
    WeightedPointMeasure::new(dim, n, &pts, w).unwrap()
}

/// Binary dust: every point splits into two antipodal children at a random
/// angle, the offset shrinking by `ratio` per level, so that every point has
/// neighbours at every scale down to `ratio^levels`.
pub fn multiscale_measure(seed: u64, levels: u32, ratio: f64) -> WeightedPointMeasure {
    let mut g = rng(seed);
    let mut pts = vec![vec![0.5, 0.5]];
    let mut r = 0.25;
    for _ in 0..levels {
        let mut next = Vec::with_capacity(2 * pts.len());
        for p in &pts {
            let t = g.random::<f64>() * std::f64::consts::TAU;
            let s = r * (0.7 + 0.6 * g.random::<f64>());
            next.push(vec![p[0] + s * t.cos(), p[1] + s * t.sin()]);
            next.push(vec![p[0] - s * t.cos(), p[1] - s * t.sin()]);
        }
        pts = next;
        r *= ratio;
    }
    let w: Vec<f64> = (0..pts.len()).map(|_| 0.5 + g.random::<f64>()).collect();
    WeightedPointMeasure::new(2, 1, &pts, w).unwrap()
}

/// Unit square grid lying in the plane `z = 0` of R³, as a 2-dimensional measure.
pub fn flat_square_3d(side: usize) -> WeightedPointMeasure {
    let mut pts = Vec::new();
    for i in 0..side {
        for j in 0..side {
            pts.push(vec![i as f64 / (side - 1) as f64, j as f64 / (side - 1) as f64, 0.0]);
        }
    }
    let w = vec![1.0 / (side * side) as f64; side * side];
    WeightedPointMeasure::new(3, 2, &pts, w).unwrap()
}

/// Least-squares residual `min_L Σ w dist(p, L)²` over lines of the plane,
/// from the closed-form smallest eigenvalue of the 2×2 covariance.
pub fn planar_line_residual(pts: &[(Vec<f64>, f64)]) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let mass: f64 = pts.iter().map(|p| p.1).sum();
    let (o0, o1) = (pts[0].0[0], pts[0].0[1]);
    let mx = pts.iter().map(|(p, w)| w * (p[0] - o0)).sum::<f64>() / mass;
    let my = pts.iter().map(|(p, w)| w * (p[1] - o1)).sum::<f64>() / mass;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for (p, w) in pts {
        let (u, v) = (p[0] - o0 - mx, p[1] - o1 - my);
        a += w * u * u;
        b += w * u * v;
        c += w * v * v;
    }
    let h = 0.5 * (a - c);
    (0.5 * (a + c) - (h * h + b * b).sqrt()).max(0.0)
}

/// `Σ_{i ∈ idx} w_i Σ_nodes weight · β²θ(x_i, r)` for planar `n = 1` data by a
/// direct scan of the support at every (point, radius) pair.
pub fn jones_direct(mu: &WeightedPointMeasure, idx: &[usize], nodes: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for &i in idx {
        let x = mu.point(i);
        let mut s = 0.0;
        for &(r, w) in nodes {
            let pts = ball_points(mu, x, r);
            if pts.len() <= 2 {
                continue;
            }
            let mass: f64 = pts.iter().map(|p| p.1).sum();
            s += w * planar_line_residual(&pts) / r.powi(3) * (mass / r);
        }
        total += mu.weight(i) * s;
    }
    total
}

/// `max_ε Σ_i w_i |Σ_{|x_i − y| > ε} w_y K(x_i − y)|²` by direct double sums.
pub fn truncated_energy_direct(mu: &WeightedPointMeasure, kernel: &betacorona::CZKernel, grid: &[f64]) -> f64 {
    let m = kernel.out_dim();
    let mut kv = vec![0.0; m];
    grid.iter()
        .map(|&eps| {
            (0..mu.len())
                .map(|i| {
                    let x = mu.point(i);
                    let mut acc = vec![0.0; m];
                    for j in 0..mu.len() {
                        if betacorona::measure::dist(x, mu.point(j)) > eps {
                            kernel.k(x, mu.point(j), &mut kv);
                            for (a, v) in acc.iter_mut().zip(&kv) {
                                *a += mu.weight(j) * v;
                            }
                        }
                    }
                    mu.weight(i) * acc.iter().map(|a| a * a).sum::<f64>()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}
