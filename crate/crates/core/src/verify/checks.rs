//! Empirical constants of the singular-integral inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::beta::jones_mass_sum;
use crate::corona::{CoronaTree, TreeGeometry};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::measure::{Ball, WeightedPointMeasure};
use crate::operators::{
    k_r_operator, m_r_phi, m_tilde, BumpFamily, CZKernel, MTildeVariant, TruncationProfile,
};

use super::CheckRecord;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_dims(kernel: &CZKernel, mu: &WeightedPointMeasure) -> Result<()> {
    if kernel.dim() != mu.dim() {
        return Err(Error::InvalidParameter(format!(
            "kernel acts on R^{} but the measure lives in R^{}",
            kernel.dim(),
            mu.dim()
        )));
    }
    Ok(())
}

/// `max_{ε ∈ grid} Σ_i w_i |T_ε μ(x_i)|²` against `‖μ‖ + Σ_i w_i ∫_{r_min}^{diam} β²θ dr/r`.
pub fn main_lemma_check(
    mu: &WeightedPointMeasure,
    kernel: &CZKernel,
    eps_grid: &[f64],
    scales_per_octave: u32,
) -> Result<CheckRecord> {
    check_dims(kernel, mu)?;
    let squares: Vec<Vec<f64>> = (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let prof = TruncationProfile::new(kernel, mu, None, mu.point(i));
            eps_grid.iter().map(|&e| prof.norm_at(e).powi(2)).collect()
        })
        .collect();
    let mut lhs: f64 = 0.0;
    let mut best_eps = eps_grid.first().copied().unwrap_or(0.0);
    for (g, &e) in eps_grid.iter().enumerate() {
        let s: f64 = squares.iter().enumerate().map(|(i, v)| mu.weight(i) * v[g]).sum();
        if s > lhs {
            lhs = s;
            best_eps = e;
        }
    }
    let all: Vec<usize> = (0..mu.len()).collect();
    let jones = jones_mass_sum(mu, &all, mu.r_min(), mu.diameter(), scales_per_octave)?;
    let rhs = mu.total_mass() + jones;
    Ok(CheckRecord::new("main_lemma", lhs, rhs, mu.len())
        .with_param("eps_grid", eps_grid.to_vec())
        .with_param("argmax_eps", best_eps)
        .with_param("jones_term", jones)
        .with_param("scales_per_octave", scales_per_octave)
        .with_param("kernel", format!("{:?}", kernel.kind())))
}

/// [`main_lemma_check`] on `χ_B μ` for every ball; the record keeps the
/// worst ratio.
pub fn t1_ball_check(
    mu: &WeightedPointMeasure,
    kernel: &CZKernel,
    balls: &[Ball],
    grid_per_octave: u32,
    scales_per_octave: u32,
) -> Result<CheckRecord> {
    if balls.is_empty() {
        return Err(Error::InvalidParameter("ball sample is empty".into()));
    }
    let mut worst = CheckRecord::new("t1_ball", 0.0, 0.0, 0);
    let mut ratios = Vec::with_capacity(balls.len());
    for ball in balls {
        let (sub, _) = mu.restrict_to_ball(ball);
        if sub.is_empty() {
            ratios.push(0.0);
            continue;
        }
        let grid = crate::operators::eps_grid(&sub, grid_per_octave);
        let rec = main_lemma_check(&sub, kernel, &grid, scales_per_octave)?;
        ratios.push(rec.ratio);
        if rec.ratio > worst.ratio || worst.samples == 0 {
            worst.lhs = rec.lhs;
            worst.rhs = rec.rhs;
            worst.ratio = rec.ratio;
            worst.samples = 1;
        }
    }
    worst.samples = balls.len();
    let centers: Vec<Vec<f64>> = balls.iter().map(|b| b.center.clone()).collect();
    let radii: Vec<f64> = balls.iter().map(|b| b.radius).collect();
    Ok(worst
        .with_param("ball_centers", centers)
        .with_param("ball_radii", radii)
        .with_param("ratios", ratios)
        .with_param("grid_per_octave", grid_per_octave)
        .with_param("scales_per_octave", scales_per_octave))
}

/// `σ = χ_{B_0(R)} μ` with `Φ_R` at its points.
fn tree_sigma(
    mu: &WeightedPointMeasure,
    corona: &CoronaTree,
    lattice: &Lattice,
    pos: usize,
) -> Result<(TreeGeometry, WeightedPointMeasure, Vec<usize>, Vec<f64>)> {
    let geom = TreeGeometry::new(corona, lattice, pos)?;
    let (sigma, idx) = mu.restrict_to_ball(&geom.b0);
    let phi: Vec<f64> = sigma.points().map(|p| geom.phi(p)).collect();
    Ok((geom, sigma, idx, phi))
}

/// Cotlar inequality for the suppressed operator `S = T_{Φ_R}` on
/// `σ = χ_{B_0(R)} μ`: `S_*(fσ)(x) ≤ C [M̃_σ(S(fσ))(x) + M̃_{σ,3/2} f(x)]`.
/// `f` is indexed by the points of `μ` and defaults to 1; `sample` holds
/// point indices of `μ`. Samples with `rhs = 0 < lhs` are reported and left
/// out of the maximum.
pub fn cotlar_check(
    mu: &WeightedPointMeasure,
    kernel: &CZKernel,
    corona: &CoronaTree,
    lattice: &Lattice,
    pos: usize,
    f: Option<&[f64]>,
    sample: &[usize],
) -> Result<CheckRecord> {
    check_dims(kernel, mu)?;
    let (geom, sigma, idx, phi) = tree_sigma(mu, corona, lattice, pos)?;
    let f_sigma: Option<Vec<f64>> = f.map(|f| idx.iter().map(|&i| f[i]).collect());
    let fs = f_sigma.as_deref();
    let s_abs: Vec<f64> = (0..sigma.len())
        .into_par_iter()
        .map(|j| {
            let prof = TruncationProfile::suppressed(kernel, &sigma, fs, &phi, phi[j], sigma.point(j));
            prof.full().map_or(0.0, norm)
        })
        .collect();
    let rows: Vec<(f64, f64)> = sample
        .par_iter()
        .map(|&i| {
            let x = mu.point(i);
            let phi_x = geom.phi(x);
            let lhs = TruncationProfile::suppressed(kernel, &sigma, fs, &phi, phi_x, x).sup_norm();
            let rhs = m_tilde(&sigma, Some(&s_abs), x, MTildeVariant::Plain)
                + m_tilde(&sigma, fs, x, MTildeVariant::ThreeHalves);
            (lhs, rhs)
        })
        .collect();
    let mut rec = CheckRecord::new("cotlar", 0.0, 0.0, sample.len());
    let mut flagged = Vec::new();
    for (&i, &(lhs, rhs)) in sample.iter().zip(&rows) {
        if rhs == 0.0 {
            if lhs > 0.0 {
                flagged.push(i);
            }
            continue;
        }
        let r = lhs / rhs;
        if r > rec.ratio {
            rec.ratio = r;
            rec.lhs = lhs;
            rec.rhs = rhs;
        }
    }
    if !flagged.is_empty() {
        rec.warnings.push(format!("{} samples with zero right-hand side", flagged.len()));
    }
    Ok(rec
        .with_param("tree", pos)
        .with_param("top_cell", corona.trees[pos].top)
        .with_param("sample", sample.to_vec())
        .with_param("flagged", flagged)
        .with_param("form", "sigma = restriction of mu to B0(R), S = suppressed operator with Phi_R")
        .with_param("f_default_one", f.is_none()))
}

/// `c_x = max(0, |K_R μ(x)| − T_{Φ_R,*}(χ_{B_0(R)}μ)(x)) / θ_μ(B_R)` over the
/// sampled points `x ∈ R` (indices of `μ`); the record keeps the largest.
pub fn pointwise_domination_check(
    mu: &WeightedPointMeasure,
    kernel: &CZKernel,
    corona: &CoronaTree,
    lattice: &Lattice,
    bump: &BumpFamily,
    pos: usize,
    sample: &[usize],
) -> Result<CheckRecord> {
    check_dims(kernel, mu)?;
    let (geom, sigma, _, phi) = tree_sigma(mu, corona, lattice, pos)?;
    let top = &lattice.cells[corona.trees[pos].top];
    let theta_r = mu.density_theta(&top.center, top.big_ball_radius(1.0));
    let rows: Vec<(f64, f64)> = sample
        .par_iter()
        .map(|&i| -> Result<(f64, f64)> {
            let x = mu.point(i);
            let k = norm(&k_r_operator(corona, lattice, kernel, bump, mu, pos, i)?);
            let t = TruncationProfile::suppressed(kernel, &sigma, None, &phi, geom.phi(x), x).sup_norm();
            Ok((k, t))
        })
        .collect::<Result<_>>()?;
    let mut rec = CheckRecord::new("pointwise_domination", 0.0, theta_r, sample.len());
    for &(k, t) in &rows {
        let c = (k - t).max(0.0) / theta_r;
        if c > rec.ratio {
            rec.ratio = c;
            rec.lhs = (k - t).max(0.0);
        }
    }
    let k_max = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    Ok(rec
        .with_param("tree", pos)
        .with_param("top_cell", top.id)
        .with_param("sample", sample.to_vec())
        .with_param("max_abs_k_r", k_max)
        .with_param("bump_base", bump.base)
        .with_param("a0", bump.a0))
}

/// Empirical constants of the two comparisons between suppressed and plain
/// truncations, with `ν = μ` and `Φ` given at the support points:
/// `|T_{Φ,ε}ν − T_εν| ≤ C M^r_Φ ν` for `ε > Φ(x)`, and
/// `|T_{Φ,ε}ν − T_{Φ,Φ(x)}ν| ≤ C M^r_Φ ν` for `ε ≤ Φ(x)`.
/// Each sample draws a support point and a log-uniform `ε` on the relevant side.
pub fn suppression_lemma_check(
    mu: &WeightedPointMeasure,
    kernel: &CZKernel,
    phi: &[f64],
    samples: usize,
    seed: u64,
) -> Result<[CheckRecord; 2]> {
    check_dims(kernel, mu)?;
    let lo = 0.5 * mu.r_min();
    let hi = mu.diameter().max(2.0 * lo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(usize, f64, f64)> = (0..samples)
        .map(|_| (rng.random_range(0..mu.len()), rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let rows: Vec<(f64, Option<f64>)> = draws
        .par_iter()
        .map(|&(i, u, v)| {
            let x = mu.point(i);
            let px = phi[i];
            let plain = TruncationProfile::new(kernel, mu, None, x);
            let supp = TruncationProfile::suppressed(kernel, mu, None, phi, px, x);
            let m = m_r_phi(mu, None, px, x);
            let zero = vec![0.0; kernel.out_dim()];
            let at = |p: &TruncationProfile, e: f64| p.value(e).map_or(zero.clone(), <[f64]>::to_vec);
            let diff = |a: Vec<f64>, b: Vec<f64>| -> f64 {
                norm(&a.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>())
            };
            let start = px.max(lo);
            let e1 = if start < hi { start * (hi / start).powf(u) } else { start * (1.0 + u) };
            let e1 = if e1 > px { e1 } else { px.next_up() };
            let c1 = diff(at(&supp, e1), at(&plain, e1)) / m;
            let c2 = (px > 0.0).then(|| {
                let e2 = if px > lo { lo * (px / lo).powf(v) } else { px * v.max(1e-3) };
                diff(at(&supp, e2), at(&supp, px)) / m
            });
            (c1, c2)
        })
        .collect();
    let c1 = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let n2 = rows.iter().filter(|r| r.1.is_some()).count();
    let c2 = rows.iter().filter_map(|r| r.1).fold(0.0, f64::max);
    let base = |name: &str, c: f64, n: usize| {
        let mut rec = CheckRecord::new(name, c, 1.0, n)
            .with_param("seed", seed)
            .with_param("requested_samples", samples);
        rec.ratio = c;
        rec
    };
    Ok([
        base("suppression_above_phi", c1, samples),
        base("suppression_below_phi", c2, n2),
    ])
}

/// `max |k_Φ(x,y)| · max(Φ(x), Φ(y))^n` over random pairs of distinct
/// support points with `Φ(x)Φ(y) > 0`.
pub fn suppressed_bound_check(
    mu: &WeightedPointMeasure,
    kernel: &CZKernel,
    phi: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<CheckRecord> {
    check_dims(kernel, mu)?;
    let mut rec = CheckRecord::new("suppressed_kernel_bound", 0.0, 1.0, 0);
    if mu.len() < 2 {
        return Ok(rec.with_param("seed", seed));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = kernel.n() as i32;
    let mut kv = vec![0.0; kernel.out_dim()];
    let mut used = 0;
    for _ in 0..pairs {
        let i = rng.random_range(0..mu.len());
        let j = rng.random_range(0..mu.len());
        if i == j || phi[i] * phi[j] == 0.0 || mu.point(i) == mu.point(j) {
            continue;
        }
        kernel.k(mu.point(i), mu.point(j), &mut kv);
        crate::operators::suppress(&mut kv, phi[i], phi[j], kernel.n());
        let c = norm(&kv) * phi[i].max(phi[j]).powi(n);
        used += 1;
        if c > rec.lhs {
            rec.lhs = c;
        }
    }
    rec.ratio = rec.lhs;
    rec.samples = used;
    Ok(rec.with_param("seed", seed).with_param("requested_pairs", pairs))
}
