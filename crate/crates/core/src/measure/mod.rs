//! Finite weighted point measures: the discrete stand-in for a Radon measure
//! with polynomial growth.
//!
//! All balls are closed: a point at distance exactly `r` from the center lies
//! in `B(x, r)`. Scale-dependent quantities are truncated below at the
//! measure's resolution `r_min`.

mod index;
pub mod io;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use index::KdTree;

/// Euclidean distance, accumulated in coordinate order.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

/// Closed ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("ball center must be finite".into()));
        }
        Ok(Ball { center, radius })
    }

    /// The concentric ball `λB`.
    pub fn scaled(&self, lambda: f64) -> Ball {
        Ball {
            center: self.center.clone(),
            radius: self.radius * lambda,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist(&self.center, x) <= self.radius
    }
}

/// Weighted point measure `μ = Σ w_i δ_{x_i}` in `R^d`, studied at dimension `n`.
#[derive(Debug, Clone)]
pub struct WeightedPointMeasure {
    dim: usize,
    n: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
    r_min: f64,
    index: KdTree,
    diameter: OnceLock<f64>,
}

impl WeightedPointMeasure {
    /// Builds a measure from explicit points. `r_min` defaults to half the
    /// smallest nonzero pairwise distance (1.0 when all points coincide).
    pub fn new(dim: usize, n: usize, points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, n, coords, weights)
    }

    pub fn from_flat(dim: usize, n: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let mut m = Self::build_unchecked(dim, n, coords, weights, None)?;
        if m.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        m.r_min = m.default_r_min();
        Ok(m)
    }

    fn build_unchecked(
        dim: usize,
        n: usize,
        coords: Vec<f64>,
        weights: Vec<f64>,
        r_min: Option<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be >= 1".into()));
        }
        if n == 0 || n >= dim {
            return Err(Error::InvalidParameter(format!(
                "target dimension must satisfy 1 <= n < d, got n={n}, d={dim}"
            )));
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not match {} weights in dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "point {} has a non-finite coordinate",
                i / dim
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "point {i} has nonpositive or non-finite weight {}",
                weights[i]
            )));
        }
        let total_mass = weights.iter().sum();
        let index = KdTree::new(dim, &coords);
        Ok(WeightedPointMeasure {
            dim,
            n,
            coords,
            weights,
            total_mass,
            r_min: r_min.unwrap_or(1.0),
            index,
            diameter: OnceLock::new(),
        })
    }

    /// The zero measure, returned by restrictions that keep no point.
    pub fn empty(dim: usize, n: usize, r_min: f64) -> Self {
        WeightedPointMeasure {
            dim,
            n,
            coords: Vec::new(),
            weights: Vec::new(),
            total_mass: 0.0,
            r_min,
            index: KdTree::new(dim.max(1), &[]),
            diameter: OnceLock::new(),
        }
    }

    fn default_r_min(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            if let Some((_, d)) = self.index.nearest_where(self.point(i), |_, d| d > 0.0) {
                best = best.min(d);
            }
        }
        if best.is_finite() {
            best / 2.0
        } else {
            1.0
        }
    }

    /// Overrides the resolution scale.
    pub fn with_r_min(mut self, r_min: f64) -> Result<Self> {
        if !(r_min > 0.0) || !r_min.is_finite() {
            return Err(Error::InvalidParameter(format!("r_min must be positive, got {r_min}")));
        }
        let diam = self.diameter();
        if diam > 0.0 && r_min > diam {
            return Err(Error::InvalidParameter(format!(
                "r_min = {r_min} exceeds the support diameter {diam}"
            )));
        }
        self.r_min = r_min;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension `n` of the density `θ^n` and of the β-numbers.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn index(&self) -> &KdTree {
        &self.index
    }

    /// Exact diameter of the support (0 for a single point), cached.
    pub fn diameter(&self) -> f64 {
        *self.diameter.get_or_init(|| {
            let mut d: f64 = 0.0;
            for i in 0..self.len() {
                let p = self.point(i);
                for j in (i + 1)..self.len() {
                    d = d.max(dist(p, self.point(j)));
                }
            }
            d
        })
    }

    /// Largest distance from `x` to the support.
    pub fn farthest_distance(&self, x: &[f64]) -> f64 {
        self.points().map(|p| dist(p, x)).fold(0.0, f64::max)
    }

    /// Indices of support points in the closed ball, ascending.
    pub fn ball_indices(&self, center: &[f64], radius: f64) -> Vec<usize> {
        self.index.ball(center, radius)
    }

    pub fn mass_in(&self, center: &[f64], radius: f64) -> f64 {
        self.index
            .ball(center, radius)
            .into_iter()
            .map(|i| self.weights[i])
            .sum()
    }

    /// `μ(B)`, summed in point-index order.
    pub fn ball_mass(&self, ball: &Ball) -> f64 {
        self.mass_in(&ball.center, ball.radius)
    }

    /// `θ^n_μ(x, r) = μ(B(x, r)) / r^n`.
    pub fn density_theta(&self, x: &[f64], r: f64) -> f64 {
        self.mass_in(x, r) / r.powi(self.n as i32)
    }

    pub fn theta_ball(&self, ball: &Ball) -> f64 {
        self.density_theta(&ball.center, ball.radius)
    }

    /// `Σ_{|x_i - x| > r} w_i / |x_i - x|^{n+1}`.
    pub fn annulus_tail(&self, x: &[f64], r: f64) -> f64 {
        let p = (self.n + 1) as i32;
        let mut s = 0.0;
        for (i, q) in self.points().enumerate() {
            let d = dist(q, x);
            if d > r {
                s += self.weights[i] / d.powi(p);
            }
        }
        s
    }

    /// Keeps exactly the points satisfying `keep`, with unchanged weights and
    /// resolution. May return the empty measure.
    pub fn restrict<F: Fn(&[f64]) -> bool>(&self, keep: F) -> WeightedPointMeasure {
        self.restrict_with_map(keep).0
    }

    /// Like [`restrict`](Self::restrict) and also returns, for each kept
    /// point, its index in `self`.
    pub fn restrict_with_map<F: Fn(&[f64]) -> bool>(
        &self,
        keep: F,
    ) -> (WeightedPointMeasure, Vec<usize>) {
        let kept: Vec<usize> = (0..self.len()).filter(|&i| keep(self.point(i))).collect();
        (self.subset(&kept), kept)
    }

    /// `χ_B μ`.
    pub fn restrict_to_ball(&self, ball: &Ball) -> (WeightedPointMeasure, Vec<usize>) {
        let kept = self.index.ball(&ball.center, ball.radius);
        (self.subset(&kept), kept)
    }

    /// Sub-measure on the given (ascending) point indices.
    pub fn subset(&self, indices: &[usize]) -> WeightedPointMeasure {
        if indices.is_empty() {
            return Self::empty(self.dim, self.n, self.r_min);
        }
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        let mut weights = Vec::with_capacity(indices.len());
        for &i in indices {
            coords.extend_from_slice(self.point(i));
            weights.push(self.weights[i]);
        }
        Self::build_unchecked(self.dim, self.n, coords, weights, Some(self.r_min))
            .expect("subset of a valid measure is valid")
    }

    /// `tμ` for `t > 0`, same support and resolution.
    pub fn scaled(&self, t: f64) -> Result<WeightedPointMeasure> {
        let weights = self.weights.iter().map(|w| w * t).collect();
        Self::build_unchecked(self.dim, self.n, self.coords.clone(), weights, Some(self.r_min))
    }

    /// Applies `map` to every point; the resolution is kept.
    pub fn mapped<F: Fn(&[f64]) -> Vec<f64>>(&self, map: F) -> Result<WeightedPointMeasure> {
        let mut coords = Vec::with_capacity(self.coords.len());
        for p in self.points() {
            coords.extend(map(p));
        }
        Self::build_unchecked(self.dim, self.n, coords, self.weights.clone(), Some(self.r_min))
    }

    /// Distances from `x` to every support point, sorted ascending.
    pub fn distance_profile(&self, x: &[f64]) -> DistanceProfile {
        let mut entries: Vec<(f64, usize)> =
            self.points().enumerate().map(|(i, p)| (dist(p, x), i)).collect();
        entries.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = 0.0;
        for &(_, i) in &entries {
            acc += self.weights[i];
            cumulative.push(acc);
        }
        DistanceProfile {
            entries,
            cumulative,
        }
    }

    /// `sup_{r >= r_lo} θ(x, r)`, exact over the breakpoints of the
    /// piecewise-constant mass function.
    pub fn sup_density_above(&self, x: &[f64], r_lo: f64) -> f64 {
        self.distance_profile(x).sup_ratio_above(r_lo, self.n, |i| self.weights[i])
    }

    /// Maximum of `θ(x, r)` over the sampled centers and the scale grid; a
    /// lower estimate of the growth constant above `r_min`.
    pub fn growth_constant(&self, centers: Option<&[usize]>, scale_grid: &[f64]) -> Result<f64> {
        if scale_grid.is_empty() {
            return Err(Error::InvalidParameter("scale grid is empty".into()));
        }
        if let Some(r) = scale_grid.iter().find(|&&r| !(r >= self.r_min)) {
            return Err(Error::SubResolution {
                radius: *r,
                r_min: self.r_min,
            });
        }
        let all: Vec<usize>;
        let centers = match centers {
            Some(c) => c,
            None => {
                all = (0..self.len()).collect();
                &all
            }
        };
        let mut c0: f64 = 0.0;
        for &i in centers {
            for &r in scale_grid {
                c0 = c0.max(self.density_theta(self.point(i), r));
            }
        }
        Ok(c0)
    }

    /// Growth constant over all support centers and every radius `>= r_min`,
    /// exact via breakpoints.
    pub fn growth_constant_exact(&self) -> f64 {
        (0..self.len())
            .map(|i| self.sup_density_above(self.point(i), self.r_min))
            .fold(0.0, f64::max)
    }
}

/// Constant of the dyadic-annuli bound `Σ_{|y-x|>r} dμ/|x-y|^{n+1} <= C c₀ / r`.
pub fn annulus_constant(n: usize) -> f64 {
    2f64.powi(n as i32 + 1)
}

/// Support points sorted by distance from a fixed center, with cumulative masses.
#[derive(Debug, Clone)]
pub struct DistanceProfile {
    /// `(distance, point index)`, ascending in distance then index.
    pub entries: Vec<(f64, usize)>,
    /// `cumulative[j]` = total weight of `entries[..=j]`.
    pub cumulative: Vec<f64>,
}

impl DistanceProfile {
    /// Number of entries with distance `<= r`.
    pub fn count_within(&self, r: f64) -> usize {
        self.entries.partition_point(|e| e.0 <= r)
    }

    /// Weight of the closed ball of radius `r` under the weights used to build
    /// the profile.
    pub fn mass_within(&self, r: f64) -> f64 {
        match self.count_within(r) {
            0 => 0.0,
            k => self.cumulative[k - 1],
        }
    }

    /// `sup_{r >= r_lo} ν(B(x,r)) / r^n` for the weights `w` (by point index).
    pub fn sup_ratio_above<W: Fn(usize) -> f64>(&self, r_lo: f64, n: usize, w: W) -> f64 {
        let p = n as i32;
        let mut acc = 0.0;
        let mut j = 0;
        let len = self.entries.len();
        while j < len && self.entries[j].0 <= r_lo {
            acc += w(self.entries[j].1);
            j += 1;
        }
        let mut best = acc / r_lo.powi(p);
        while j < len {
            let d = self.entries[j].0;
            while j < len && self.entries[j].0 == d {
                acc += w(self.entries[j].1);
                j += 1;
            }
            best = best.max(acc / d.powi(p));
        }
        best
    }
}
