//! Computable lower bound for the capacity of a compact set from a candidate
//! measure supported on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::{fit_plane, jones_integral};
use crate::error::{Error, Result};
use crate::measure::WeightedPointMeasure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityBound {
    /// Largest `t` with `t·A(x) + t²·I(x) <= 1` at every support point.
    pub t_star: f64,
    /// `t*·‖μ‖`.
    pub bound: f64,
    /// Support point attaining `t*`.
    pub argmin: usize,
    /// `A(x) = sup_{r >= r_min} θ(x, r)` at the minimizer.
    pub density_sup: f64,
    /// `I(x)` at the minimizer, tail included.
    pub jones: f64,
    /// Analytic part of `I(x)` above `diam(supp μ)`, shared by all points.
    pub tail: f64,
    /// Set when the support has a single location, so that the bound only
    /// reflects the resolution `r_min`.
    pub sub_resolution: bool,
}

/// Per-point admissible scale: the positive root of `t·A + t²·I = 1`.
pub fn admissible_scale(a: f64, i: f64) -> f64 {
    2.0 / (a + (a * a + 4.0 * i).sqrt())
}

/// `t* = min_x t_x` where `t_x` solves `t·A(x) + t²·I(x) = 1`, with
/// `A(x) = sup_{r >= r_min} θ(x,r)` and
/// `I(x) = ∫_{r_min}^{∞} β²(x,r) θ(x,r) dr/r`.
///
/// The integral is a Riemann sum on `[r_min, diam]` plus the range
/// `r > diam`, where every ball holds all of `μ`: there
/// `β²θ = ‖μ‖·res / r^{2n+2}` with `res = min_L Σ_i w_i dist(x_i, L)²`, which
/// integrates against `dr/r` to `‖μ‖·res / ((2n+2)·diam^{2n+2})`.
pub fn capacity_lower_bound(mu: &WeightedPointMeasure, scales_per_octave: u32) -> Result<CapacityBound> {
    if mu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let diam = mu.diameter();
    let n = mu.n() as i32;
    let all: Vec<usize> = (0..mu.len()).collect();
    let tail = if diam > 0.0 {
        let (_, res) = fit_plane(mu, &all).expect("nonempty");
        mu.total_mass() * res / ((2 * n + 2) as f64 * diam.powi(2 * n + 2))
    } else {
        0.0
    };
    let r_min = mu.r_min();
    let per_point: Vec<(f64, f64)> = all
        .par_iter()
        .map(|&i| -> Result<(f64, f64)> {
            let x = mu.point(i);
            let a = mu.sup_density_above(x, r_min);
            let body = if r_min < diam {
                jones_integral(mu, x, r_min, diam, scales_per_octave)?
            } else {
                0.0
            };
            Ok((a, body + tail))
        })
        .collect::<Result<_>>()?;
    let mut best = (f64::INFINITY, 0usize);
    for (i, &(a, j)) in per_point.iter().enumerate() {
        let t = admissible_scale(a, j);
        if t < best.0 {
            best = (t, i);
        }
    }
    let (t_star, argmin) = best;
    Ok(CapacityBound {
        t_star,
        bound: t_star * mu.total_mass(),
        argmin,
        density_sup: per_point[argmin].0,
        jones: per_point[argmin].1,
        tail,
        sub_resolution: diam == 0.0,
    })
}
