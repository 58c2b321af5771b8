//! Truncated and suppressed singular integrals of discrete measures.

use crate::measure::{dist, WeightedPointMeasure};

use super::kernel::CZKernel;

#[inline]
fn coeff(mu: &WeightedPointMeasure, f: Option<&[f64]>, i: usize) -> f64 {
    match f {
        Some(f) => f[i] * mu.weight(i),
        None => mu.weight(i),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Geometric truncation grid from `r_min/2` up to `diam(supp μ)`, with
/// `per_octave` radii per doubling.
pub fn eps_grid(mu: &WeightedPointMeasure, per_octave: u32) -> Vec<f64> {
    let lo = 0.5 * mu.r_min();
    let hi = mu.diameter().max(lo);
    let step = 2f64.powf(1.0 / per_octave.max(1) as f64);
    let mut out = vec![lo];
    let mut e = lo;
    while e * step < hi * (1.0 + 1e-12) {
        e *= step;
        out.push(e);
    }
    if *out.last().unwrap() < hi {
        out.push(hi);
    }
    out
}

/// `T_ε(fμ)(x) = Σ_{|x−x_i|>ε} K(x−x_i) f(x_i) w_i`, summed in index order.
pub fn t_eps(kernel: &CZKernel, mu: &WeightedPointMeasure, f: Option<&[f64]>, x: &[f64], eps: f64) -> Vec<f64> {
    let m = kernel.out_dim();
    let mut acc = vec![0.0; m];
    let mut kv = vec![0.0; m];
    let mut z = vec![0.0; x.len()];
    for i in 0..mu.len() {
        let y = mu.point(i);
        let mut s = 0.0;
        for (t, (a, b)) in z.iter_mut().zip(x.iter().zip(y)) {
            *t = a - b;
            s += *t * *t;
        }
        if s.sqrt() <= eps {
            continue;
        }
        kernel.eval(&z, &mut kv);
        let c = coeff(mu, f, i);
        for (a, v) in acc.iter_mut().zip(&kv) {
            *a += v * c;
        }
    }
    acc
}

/// Applies the suppression `k ↦ k/(1 + |k|² (Φ(x)Φ(y))^n)` in place.
#[inline]
pub fn suppress(kv: &mut [f64], phi_x: f64, phi_y: f64, n: usize) {
    let prod = phi_x * phi_y;
    if prod == 0.0 {
        return;
    }
    let k2: f64 = kv.iter().map(|v| v * v).sum();
    let den = 1.0 + k2 * prod.powi(n as i32);
    for v in kv.iter_mut() {
        *v /= den;
    }
}

/// `k_Φ(x, y)`.
pub fn suppressed_kernel<P: Fn(&[f64]) -> f64>(kernel: &CZKernel, phi: P, x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut kv = vec![0.0; kernel.out_dim()];
    kernel.k(x, y, &mut kv);
    suppress(&mut kv, phi(x), phi(y), kernel.n());
    kv
}

/// `T_{Φ,ε}(fμ)(x)` with `phi_points[i] = Φ(x_i)` and `phi_x = Φ(x)`.
pub fn t_phi_eps(
    kernel: &CZKernel,
    mu: &WeightedPointMeasure,
    f: Option<&[f64]>,
    phi_points: &[f64],
    phi_x: f64,
    x: &[f64],
    eps: f64,
) -> Vec<f64> {
    let m = kernel.out_dim();
    let mut acc = vec![0.0; m];
    let mut kv = vec![0.0; m];
    for i in 0..mu.len() {
        let y = mu.point(i);
        if dist(x, y) <= eps {
            continue;
        }
        kernel.k(x, y, &mut kv);
        suppress(&mut kv, phi_x, phi_points[i], kernel.n());
        let c = coeff(mu, f, i);
        for (a, v) in acc.iter_mut().zip(&kv) {
            *a += v * c;
        }
    }
    acc
}

/// `T_ε` at one point as a function of `ε`: piecewise constant with jumps at
/// the distinct distances from `x` to the support.
#[derive(Debug, Clone)]
pub struct TruncationProfile {
    /// Distinct positive distances, descending.
    pub radii: Vec<f64>,
    /// Output dimension.
    pub m: usize,
    /// Row `j` (length `m`) is the contribution of all points at distance `>= radii[j]`.
    pub sums: Vec<f64>,
}

impl TruncationProfile {
    fn build<C: FnMut(usize, &mut [f64])>(mu: &WeightedPointMeasure, x: &[f64], m: usize, mut contribution: C) -> Self {
        let mut order: Vec<(f64, usize)> = (0..mu.len())
            .map(|i| (dist(x, mu.point(i)), i))
            .filter(|e| e.0 > 0.0)
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut radii = Vec::new();
        let mut sums = Vec::new();
        let mut acc = vec![0.0; m];
        let mut kv = vec![0.0; m];
        let mut j = 0;
        while j < order.len() {
            let d = order[j].0;
            while j < order.len() && order[j].0 == d {
                contribution(order[j].1, &mut kv);
                for (a, v) in acc.iter_mut().zip(&kv) {
                    *a += v;
                }
                j += 1;
            }
            radii.push(d);
            sums.extend_from_slice(&acc);
        }
        TruncationProfile { radii, m, sums }
    }

    pub fn new(kernel: &CZKernel, mu: &WeightedPointMeasure, f: Option<&[f64]>, x: &[f64]) -> Self {
        let mut z = vec![0.0; x.len()];
        Self::build(mu, x, kernel.out_dim(), |i, out| {
            for (t, (a, b)) in z.iter_mut().zip(x.iter().zip(mu.point(i))) {
                *t = a - b;
            }
            kernel.eval(&z, out);
            let c = coeff(mu, f, i);
            out.iter_mut().for_each(|v| *v *= c);
        })
    }

    pub fn suppressed(
        kernel: &CZKernel,
        mu: &WeightedPointMeasure,
        f: Option<&[f64]>,
        phi_points: &[f64],
        phi_x: f64,
        x: &[f64],
    ) -> Self {
        Self::build(mu, x, kernel.out_dim(), |i, out| {
            kernel.k(x, mu.point(i), out);
            suppress(out, phi_x, phi_points[i], kernel.n());
            let c = coeff(mu, f, i);
            out.iter_mut().for_each(|v| *v *= c);
        })
    }

    /// Value at truncation `ε > 0`; `None` stands for the zero vector.
    pub fn value(&self, eps: f64) -> Option<&[f64]> {
        match self.radii.partition_point(|&r| r > eps) {
            0 => None,
            k => Some(self.row(k - 1)),
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.sums[j * self.m..(j + 1) * self.m]
    }

    /// Value with every point except `x` itself included.
    pub fn full(&self) -> Option<&[f64]> {
        self.radii.len().checked_sub(1).map(|j| self.row(j))
    }

    pub fn norm_at(&self, eps: f64) -> f64 {
        self.value(eps).map_or(0.0, norm)
    }

    /// `sup_{ε>0} |T_ε|`.
    pub fn sup_norm(&self) -> f64 {
        self.sums.chunks(self.m.max(1)).map(norm).fold(0.0, f64::max)
    }

    /// `sup_{ε >= eps_lo} |T_ε|`.
    pub fn sup_norm_from(&self, eps_lo: f64) -> f64 {
        let k = self.radii.partition_point(|&r| r > eps_lo);
        self.sums[..k * self.m].chunks(self.m.max(1)).map(norm).fold(0.0, f64::max)
    }
}

/// `max_{ε ∈ grid} |T_ε(fμ)(x)|` by direct summation.
pub fn t_star_grid(kernel: &CZKernel, mu: &WeightedPointMeasure, f: Option<&[f64]>, x: &[f64], grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&e| norm(&t_eps(kernel, mu, f, x, e)))
        .fold(0.0, f64::max)
}

/// `sup_{ε>0} |T_ε(fμ)(x)|` over the exact breakpoints.
pub fn t_star(kernel: &CZKernel, mu: &WeightedPointMeasure, f: Option<&[f64]>, x: &[f64]) -> f64 {
    TruncationProfile::new(kernel, mu, f, x).sup_norm()
}

/// `T_{Φ,*}(fμ)(x) = sup_{ε>0} |T_{Φ,ε}(fμ)(x)|`.
pub fn t_phi_star(
    kernel: &CZKernel,
    mu: &WeightedPointMeasure,
    f: Option<&[f64]>,
    phi_points: &[f64],
    phi_x: f64,
    x: &[f64],
) -> f64 {
    TruncationProfile::suppressed(kernel, mu, f, phi_points, phi_x, x).sup_norm()
}
