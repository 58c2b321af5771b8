//! β-numbers: scale-normalized distance of a measure in a ball to its best
//! fitting affine n-plane, and the Jones square-function integrand β²θ.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{dist, Ball, WeightedPointMeasure};

/// Affine plane through `point`, with orthonormal `tangent` directions and
/// orthonormal `normals` spanning the complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: Vec<f64>,
    pub tangent: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
}

impl Plane {
    /// Squared distance from `x` to the plane.
    pub fn dist_sq(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for v in &self.normals {
            let mut t = 0.0;
            for k in 0..x.len() {
                t += (x[k] - self.point[k]) * v[k];
            }
            s += t * t;
        }
        s
    }

    pub fn dist(&self, x: &[f64]) -> f64 {
        self.dist_sq(x).sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaResult {
    pub value: f64,
    /// `None` when the ball carries no mass.
    pub best_plane: Option<Plane>,
    pub ball: Ball,
    pub mass_in_ball: f64,
}

/// Least-squares plane of the weighted points `idx` and its residual
/// `Σ w_i dist(x_i, L)²`. Returns `None` for an empty index set.
pub(crate) fn fit_plane(mu: &WeightedPointMeasure, idx: &[usize]) -> Option<(Plane, f64)> {
    fit_plane_iter(mu, idx.iter().copied())
}

fn fit_plane_iter<I>(mu: &WeightedPointMeasure, idx: I) -> Option<(Plane, f64)>
where
    I: Iterator<Item = usize> + Clone,
{
    let d = mu.dim();
    let n = mu.n();
    let first = idx.clone().next()?;
    // moments are taken relative to a support point of the ball
    let anchor = mu.point(first).to_vec();
    let shifted = |i: usize, y: &mut [f64]| {
        for (k, x) in mu.point(i).iter().enumerate() {
            y[k] = x - anchor[k];
        }
    };
    let mut mass = 0.0;
    let mut offset = vec![0.0; d];
    let mut y = vec![0.0; d];
    for i in idx.clone() {
        let w = mu.weight(i);
        mass += w;
        shifted(i, &mut y);
        for (c, v) in offset.iter_mut().zip(&y) {
            *c += w * v;
        }
    }
    for c in &mut offset {
        *c /= mass;
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for i in idx.clone() {
        let w = mu.weight(i);
        shifted(i, &mut y);
        for (v, c) in y.iter_mut().zip(&offset) {
            *v -= c;
        }
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] += w * y[a] * y[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let column = |j: usize| -> Vec<f64> { eig.eigenvectors.column(j).iter().copied().collect() };
    let normals: Vec<Vec<f64>> = order[n..].iter().map(|&j| column(j)).collect();
    let mut residual = 0.0;
    for i in idx {
        shifted(i, &mut y);
        let mut s = 0.0;
        for v in &normals {
            let t: f64 = y.iter().zip(&offset).zip(v).map(|((a, c), e)| (a - c) * e).sum();
            s += t * t;
        }
        residual += mu.weight(i) * s;
    }
    let plane = Plane {
        point: anchor.iter().zip(&offset).map(|(a, c)| a + c).collect(),
        tangent: order[..n].iter().map(|&j| column(j)).collect(),
        normals,
    };
    Some((plane, residual))
}

/// `β²` and mass of `B(x, r)`, without the resolution check.
pub(crate) fn beta2_sq_raw(mu: &WeightedPointMeasure, x: &[f64], r: f64) -> (f64, f64) {
    let idx = mu.ball_indices(x, r);
    let mass: f64 = idx.iter().map(|&i| mu.weight(i)).sum();
    match fit_plane(mu, &idx) {
        None => (0.0, 0.0),
        Some((_, res)) => (res / r.powi(mu.n() as i32 + 2), mass),
    }
}

fn check_radius(mu: &WeightedPointMeasure, r: f64) -> Result<()> {
    if r < mu.r_min() {
        return Err(Error::SubResolution {
            radius: r,
            r_min: mu.r_min(),
        });
    }
    Ok(())
}

/// `β^n_{μ,2}(B)`, exact via the weighted covariance of the points in `B`.
pub fn beta2(mu: &WeightedPointMeasure, ball: &Ball) -> Result<BetaResult> {
    check_radius(mu, ball.radius)?;
    let idx = mu.ball_indices(&ball.center, ball.radius);
    let mass: f64 = idx.iter().map(|&i| mu.weight(i)).sum();
    let (value, best_plane) = match fit_plane(mu, &idx) {
        None => (0.0, None),
        Some((plane, res)) => {
            let b2 = res / ball.radius.powi(mu.n() as i32 + 2);
            (b2.max(0.0).sqrt(), Some(plane))
        }
    };
    Ok(BetaResult {
        value,
        best_plane,
        ball: ball.clone(),
        mass_in_ball: mass,
    })
}

struct PlaneSearch<'a> {
    pts: Vec<&'a [f64]>,
    w: Vec<f64>,
    p: f64,
}

impl PlaneSearch<'_> {
    fn objective(&self, plane: &Plane) -> f64 {
        let half_p = self.p / 2.0;
        self.pts
            .iter()
            .zip(&self.w)
            .map(|(x, w)| {
                let d2 = plane.dist_sq(x);
                if self.p == 2.0 {
                    w * d2
                } else {
                    w * d2.powf(half_p)
                }
            })
            .sum()
    }

    /// Optimal offset along the single normal: minimizes `Σ w |t_i - c|^p`.
    fn best_offset(&self, base: &[f64], normal: &[f64]) -> f64 {
        let t: Vec<f64> = self
            .pts
            .iter()
            .map(|x| {
                let mut s = 0.0;
                for k in 0..x.len() {
                    s += (x[k] - base[k]) * normal[k];
                }
                s
            })
            .collect();
        let total: f64 = self.w.iter().sum();
        if self.p == 2.0 {
            return t.iter().zip(&self.w).map(|(t, w)| t * w).sum::<f64>() / total;
        }
        let mut order: Vec<usize> = (0..t.len()).collect();
        order.sort_by(|&a, &b| t[a].total_cmp(&t[b]).then(a.cmp(&b)));
        if self.p == 1.0 {
            let mut acc = 0.0;
            for &i in &order {
                acc += self.w[i];
                if acc >= total / 2.0 {
                    return t[i];
                }
            }
            return t[order[order.len() - 1]];
        }
        // convex in c: golden-section search over the range of t
        let f = |c: f64| -> f64 {
            t.iter()
                .zip(&self.w)
                .map(|(t, w)| w * (t - c).abs().powf(self.p))
                .sum()
        };
        let (mut a, mut b) = (t[order[0]], t[order[order.len() - 1]]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c1 = b - g * (b - a);
        let mut c2 = a + g * (b - a);
        let (mut f1, mut f2) = (f(c1), f(c2));
        for _ in 0..200 {
            if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
                break;
            }
            if f1 <= f2 {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - g * (b - a);
                f1 = f(c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + g * (b - a);
                f2 = f(c2);
            }
        }
        0.5 * (a + b)
    }
}

fn rotate(plane: &Plane, a: usize, b: usize, angle: f64) -> Plane {
    let (s, c) = angle.sin_cos();
    let mut out = plane.clone();
    let u = &plane.tangent[a];
    let v = &plane.normals[b];
    for k in 0..u.len() {
        out.tangent[a][k] = c * u[k] + s * v[k];
        out.normals[b][k] = -s * u[k] + c * v[k];
    }
    out
}

fn shift(plane: &Plane, b: usize, delta: f64) -> Plane {
    let mut out = plane.clone();
    for k in 0..out.point.len() {
        out.point[k] += delta * plane.normals[b][k];
    }
    out
}

/// `β^n_{μ,p}(B)` by local descent from the least-squares plane. The result
/// is the value at the best plane found, hence an upper bound on the
/// infimum; for `p = 2` it coincides with [`beta2`].
pub fn beta_p(mu: &WeightedPointMeasure, ball: &Ball, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    check_radius(mu, ball.radius)?;
    let idx = mu.ball_indices(&ball.center, ball.radius);
    let Some((start, _)) = fit_plane(mu, &idx) else {
        return Ok(0.0);
    };
    let search = PlaneSearch {
        pts: idx.iter().map(|&i| mu.point(i)).collect(),
        w: idx.iter().map(|&i| mu.weight(i)).collect(),
        p,
    };
    let r = ball.radius;
    let codim1 = start.normals.len() == 1;
    let settle = |pl: Plane| -> Plane {
        if !codim1 {
            return pl;
        }
        let c = search.best_offset(&pl.point, &pl.normals[0]);
        shift(&pl, 0, c)
    };

    let mut plane = start;
    let mut best = search.objective(&plane);
    if p != 2.0 {
        let cand = settle(plane.clone());
        let val = search.objective(&cand);
        if val < best {
            plane = cand;
            best = val;
        }
    }
    let n_tan = plane.tangent.len();
    let n_nor = plane.normals.len();
    let mut h_ang = 0.25;
    let mut h_off = 0.25 * r;
    for _ in 0..200 {
        if best == 0.0 || h_ang < 1e-10 {
            break;
        }
        let mut improved = false;
        'moves: for a in 0..n_tan {
            for b in 0..n_nor {
                for sign in [1.0, -1.0] {
                    let cand = settle(rotate(&plane, a, b, sign * h_ang));
                    let val = search.objective(&cand);
                    if val < best {
                        plane = cand;
                        best = val;
                        improved = true;
                        break 'moves;
                    }
                }
            }
        }
        if !improved && !codim1 {
            'offsets: for b in 0..n_nor {
                for sign in [1.0, -1.0] {
                    let cand = shift(&plane, b, sign * h_off);
                    let val = search.objective(&cand);
                    if val < best {
                        plane = cand;
                        best = val;
                        improved = true;
                        break 'offsets;
                    }
                }
            }
        }
        if !improved {
            h_ang /= 2.0;
            h_off /= 2.0;
        }
    }
    let n = mu.n() as f64;
    Ok((best / r.powf(n + p)).max(0.0).powf(1.0 / p))
}

/// Geometric scale grid of [`jones_integral`]: nodes `r_hi·ρ^{-j}` above
/// `r_lo` with their log-scale weights. The last node carries the partial
/// weight `ln(r_j / r_lo)`.
pub fn jones_nodes(r_lo: f64, r_hi: f64, scales_per_octave: u32) -> Result<Vec<(f64, f64)>> {
    if !(r_lo < r_hi) {
        return Err(Error::InvalidParameter(format!(
            "jones integral needs r_lo < r_hi, got [{r_lo}, {r_hi}]"
        )));
    }
    if scales_per_octave == 0 {
        return Err(Error::InvalidParameter("scales_per_octave must be >= 1".into()));
    }
    let spo = scales_per_octave as f64;
    let node = |j: u32| r_hi * 2f64.powf(-(j as f64) / spo);
    let lower = r_lo * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut j = 0;
    loop {
        let r = node(j);
        if r <= lower {
            break;
        }
        let next = node(j + 1).max(r_lo);
        out.push((r, (r / next).ln()));
        j += 1;
    }
    Ok(out)
}

/// `β²(x, r)·θ(x, r)` at a single scale.
pub fn jones_integrand(mu: &WeightedPointMeasure, x: &[f64], r: f64) -> f64 {
    let (b2, mass) = beta2_sq_raw(mu, x, r);
    b2 * mass / r.powi(mu.n() as i32)
}

/// Running weighted moments of points relative to a fixed origin.
struct Moments {
    d: usize,
    mass: f64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Moments {
    fn new(d: usize) -> Self {
        Moments {
            d,
            mass: 0.0,
            first: vec![0.0; d],
            second: vec![0.0; d * d],
        }
    }

    fn add(&mut self, p: &[f64], origin: &[f64], w: f64) {
        self.mass += w;
        let d = self.d;
        for a in 0..d {
            let ya = p[a] - origin[a];
            self.first[a] += w * ya;
            for b in a..d {
                self.second[a * d + b] += w * ya * (p[b] - origin[b]);
            }
        }
    }

    /// Sum of the `d - n` smallest eigenvalues of the centered covariance.
    fn residual(&self, n: usize) -> f64 {
        let d = self.d;
        if d == 2 {
            let a = self.second[0] - self.first[0] * self.first[0] / self.mass;
            let b = self.second[1] - self.first[0] * self.first[1] / self.mass;
            let c = self.second[3] - self.first[1] * self.first[1] / self.mass;
            let half = 0.5 * (a - c);
            return (0.5 * (a + c) - half.hypot(b)).max(0.0);
        }
        let cov = DMatrix::from_fn(d, d, |a, b| {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            self.second[a * d + b] - self.first[a] * self.first[b] / self.mass
        });
        let mut eig: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig[..d - n].iter().sum::<f64>().max(0.0)
    }
}

/// Log-scale Riemann sum of `∫_{r_lo}^{r_hi} β²(x,r) θ(x,r) dr/r`.
///
/// Support points are bucketed by the smallest node ball containing them and
/// the ball moments are accumulated from the smallest node outwards, so one
/// evaluation costs `O(N + nodes)`. The β² values agree with [`beta2`] up to
/// rounding of order `1e-16·θ`.
pub fn jones_integral(
    mu: &WeightedPointMeasure,
    x: &[f64],
    r_lo: f64,
    r_hi: f64,
    scales_per_octave: u32,
) -> Result<f64> {
    if r_lo < mu.r_min() {
        return Err(Error::SubResolution {
            radius: r_lo,
            r_min: mu.r_min(),
        });
    }
    let nodes = jones_nodes(r_lo, r_hi, scales_per_octave)?;
    let last = nodes.len() - 1;
    let log_rho = std::f64::consts::LN_2 / scales_per_octave as f64;
    // bucket[i] = deepest node whose ball still contains point i
    let mut bucket = vec![usize::MAX; mu.len()];
    let mut counts = vec![0usize; nodes.len() + 1];
    for (i, q) in mu.points().enumerate() {
        let d = dist(q, x);
        if d > nodes[0].0 {
            continue;
        }
        let guess = if d > 0.0 { ((r_hi / d).ln() / log_rho).floor() } else { f64::INFINITY };
        let mut j = if guess >= last as f64 { last } else { guess.max(0.0) as usize };
        while j < last && d <= nodes[j + 1].0 {
            j += 1;
        }
        while d > nodes[j].0 {
            j -= 1;
        }
        bucket[i] = j;
        counts[j + 1] += 1;
    }
    for j in 0..nodes.len() {
        counts[j + 1] += counts[j];
    }
    let mut order = vec![0usize; counts[nodes.len()]];
    let mut fill = counts.clone();
    for (i, &j) in bucket.iter().enumerate() {
        if j != usize::MAX {
            order[fill[j]] = i;
            fill[j] += 1;
        }
    }
    let n = mu.n();
    let p = n as i32;
    let mut moments = Moments::new(mu.dim());
    let mut count = 0;
    let mut values = vec![0.0; nodes.len()];
    for (j, &(r, _)) in nodes.iter().enumerate().rev() {
        for &i in &order[counts[j]..counts[j + 1]] {
            moments.add(mu.point(i), x, mu.weight(i));
            count += 1;
        }
        // at most n+1 points always lie on an n-plane
        if count > n + 1 {
            values[j] = (moments.residual(n) / r.powi(p + 2)) * (moments.mass / r.powi(p));
        }
    }
    Ok(nodes.iter().zip(&values).map(|(&(_, w), v)| w * v).sum())
}

/// `Σ_i w_i · jones_integral(μ, x_i, r_lo, r_hi)` over the given point
/// indices; zero when the range is empty.
pub fn jones_mass_sum(
    mu: &WeightedPointMeasure,
    indices: &[usize],
    r_lo: f64,
    r_hi: f64,
    scales_per_octave: u32,
) -> Result<f64> {
    if r_lo >= r_hi {
        return Ok(0.0);
    }
    let vals: Vec<f64> = indices
        .par_iter()
        .map(|&i| jones_integral(mu, mu.point(i), r_lo, r_hi, scales_per_octave))
        .collect::<Result<_>>()?;
    Ok(indices.iter().zip(&vals).map(|(&i, v)| mu.weight(i) * v).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub ratio: f64,
    pub mass: f64,
    /// Set when the ball carries no mass (ratio reported as 0).
    pub empty: bool,
}

/// Empirical constant of the ball condition
/// `∫_B ∫_0^{r(B)} β²θ dr/r dμ ≤ C μ(B)`, with the inner integral truncated
/// below at `r_min`.
pub fn condition_check(
    mu: &WeightedPointMeasure,
    ball: &Ball,
    scales_per_octave: u32,
) -> Result<ConditionResult> {
    check_radius(mu, ball.radius)?;
    let idx = mu.ball_indices(&ball.center, ball.radius);
    let mass: f64 = idx.iter().map(|&i| mu.weight(i)).sum();
    if idx.is_empty() {
        return Ok(ConditionResult {
            ratio: 0.0,
            mass: 0.0,
            empty: true,
        });
    }
    let total = jones_mass_sum(mu, &idx, mu.r_min(), ball.radius, scales_per_octave)?;
    Ok(ConditionResult {
        ratio: total / mass,
        mass,
        empty: false,
    })
}

/// One row of a β-profile export.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileRow {
    pub center_index: usize,
    pub r: f64,
    pub beta: f64,
    pub theta: f64,
    pub integrand: f64,
}

/// β, θ and β²θ at every (center, radius) pair; radii below `r_min` are
/// skipped.
pub fn beta_profile(mu: &WeightedPointMeasure, centers: &[usize], radii: &[f64]) -> Vec<ProfileRow> {
    let radii: Vec<f64> = radii.iter().copied().filter(|&r| r >= mu.r_min()).collect();
    centers
        .par_iter()
        .flat_map_iter(|&c| {
            let x = mu.point(c);
            radii
                .iter()
                .map(|&r| {
                    let (b2, mass) = beta2_sq_raw(mu, x, r);
                    let theta = mass / r.powi(mu.n() as i32);
                    ProfileRow {
                        center_index: c,
                        r,
                        beta: b2.max(0.0).sqrt(),
                        theta,
                        integrand: b2 * theta,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut s = String::from("center_index,r,beta,theta,integrand\n");
    for row in rows {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            row.center_index, row.r, row.beta, row.theta, row.integrand
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross() -> WeightedPointMeasure {
        let pts = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        WeightedPointMeasure::new(2, 1, &pts, vec![1.0; 4]).unwrap()
    }

    #[test]
    fn collinear_points_are_flat() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![0.3 * i as f64, 0.7 * i as f64 - 1.0]).collect();
        let mu = WeightedPointMeasure::new(2, 1, &pts, vec![0.1; 10]).unwrap();
        for r in [mu.r_min(), 0.5, 1.0, 10.0] {
            let b = beta2(&mu, &Ball::new(pts[3].clone(), r).unwrap()).unwrap();
            assert!(b.value <= 1e-12, "r={r}: {}", b.value);
            assert!(beta_p(&mu, &Ball::new(pts[3].clone(), r).unwrap(), 1.0).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn cross_configuration() {
        let mu = cross();
        let b = beta2(&mu, &Ball::new(vec![0.0, 0.0], 1.0).unwrap()).unwrap();
        assert!((b.value - 2f64.sqrt()).abs() < 1e-12);
        let plane = b.best_plane.unwrap();
        assert!(plane.point.iter().all(|c| c.abs() < 1e-15));
        // L1: best line is an axis, two points at distance 1
        let b1 = beta_p(&mu, &Ball::new(vec![0.0, 0.0], 1.0).unwrap(), 1.0).unwrap();
        assert!((b1 - 2.0).abs() < 1e-9, "{b1}");
    }

    #[test]
    fn beta_p_two_matches_beta2() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64 / 29.0;
                vec![t, (7.0 * t).sin() * 0.2]
            })
            .collect();
        let mu = WeightedPointMeasure::new(2, 1, &pts, vec![1.0 / 30.0; 30]).unwrap();
        let ball = Ball::new(vec![0.5, 0.0], 0.4).unwrap();
        let b2 = beta2(&mu, &ball).unwrap().value;
        let bp = beta_p(&mu, &ball, 2.0).unwrap();
        assert!((b2 - bp).abs() <= 1e-10 * b2, "{b2} {bp}");
    }

    #[test]
    fn rejects_sub_resolution_and_bad_p() {
        let mu = cross();
        let tiny = Ball::new(vec![0.0, 0.0], mu.r_min() / 2.0).unwrap();
        assert!(matches!(beta2(&mu, &tiny), Err(Error::SubResolution { .. })));
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        assert!(beta_p(&mu, &ball, 0.5).is_err());
    }

    #[test]
    fn empty_ball_has_null_plane() {
        let mu = cross();
        let b = beta2(&mu, &Ball::new(vec![10.0, 10.0], 1.0).unwrap()).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.best_plane.is_none());
        assert_eq!(b.mass_in_ball, 0.0);
    }

    #[test]
    fn beta2_scales_with_mass() {
        let mu = cross();
        let ball = Ball::new(vec![0.1, 0.0], 1.2).unwrap();
        let a = beta2(&mu, &ball).unwrap().value.powi(2);
        let b = beta2(&mu.scaled(3.0).unwrap(), &ball).unwrap().value.powi(2);
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn jones_nodes_cover_the_log_range() {
        let nodes = jones_nodes(0.1, 1.0, 4).unwrap();
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        assert!((total - 10f64.ln()).abs() < 1e-12);
        assert_eq!(nodes[0].0, 1.0);
        assert!(jones_nodes(1.0, 1.0, 4).is_err());
        assert!(jones_nodes(0.5, 1.0, 0).is_err());
    }

    #[test]
    fn jones_integral_vanishes_on_a_line() {
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 49.0, 2.0 * i as f64 / 49.0]).collect();
        let mu = WeightedPointMeasure::new(2, 1, &pts, vec![0.02; 50]).unwrap();
        let j = jones_integral(&mu, &pts[10], mu.r_min(), 2.0, 4).unwrap();
        assert!(j < 1e-14, "{j}");
        let c = condition_check(&mu, &Ball::new(pts[25].clone(), 1.0).unwrap(), 4).unwrap();
        assert!(c.ratio < 1e-14, "{}", c.ratio);
    }

    #[test]
    fn jones_integral_scales_quadratically() {
        let mu = cross().with_r_min(0.1).unwrap();
        let a = jones_integral(&mu, &[0.0, 0.0], 0.1, 3.0, 4).unwrap();
        let b = jones_integral(&mu.scaled(2.0).unwrap(), &[0.0, 0.0], 0.1, 3.0, 4).unwrap();
        assert!(a > 0.0);
        assert!((b - 4.0 * a).abs() < 1e-12 * b);
        assert!(jones_integral(&mu, &[0.0, 0.0], 3.0, 3.0, 4).is_err());
    }

    #[test]
    fn condition_check_empty_ball() {
        let mu = cross();
        let c = condition_check(&mu, &Ball::new(vec![5.0, 5.0], 1.0).unwrap(), 4).unwrap();
        assert!(c.empty);
        assert_eq!(c.ratio, 0.0);
    }

    #[test]
    fn profile_rows_are_consistent() {
        let mu = cross().with_r_min(0.1).unwrap();
        let rows = beta_profile(&mu, &[0, 2], &[0.05, 0.5, 1.0, 2.0]);
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert!((row.integrand - row.beta * row.beta * row.theta).abs() <= 1e-12 * (1.0 + row.integrand));
        }
        assert!(profile_csv(&rows).starts_with("center_index,r,beta,theta,integrand\n"));
    }
}
