//! Generators for the standard test measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::WeightedPointMeasure;

/// `npts` equally spaced points on `[0,1]×{0}`, total mass 1.
pub fn segment(npts: usize) -> Result<WeightedPointMeasure> {
    if npts < 2 {
        return Err(Error::InvalidParameter(format!("segment needs N >= 2, got {npts}")));
    }
    let pts: Vec<Vec<f64>> = (0..npts)
        .map(|i| vec![i as f64 / (npts - 1) as f64, 0.0])
        .collect();
    WeightedPointMeasure::new(2, 1, &pts, vec![1.0 / npts as f64; npts])
}

/// Number of linear pieces of the random graph profile.
const GRAPH_PIECES: usize = 16;

/// Graph of a seeded piecewise-linear function on `[0,1]` whose slopes lie
/// in `[-slope_amp, slope_amp]`, sampled at `npts` equally spaced abscissae,
/// total mass 1.
pub fn lipschitz_graph(npts: usize, slope_amp: f64, seed: u64) -> Result<WeightedPointMeasure> {
    if npts < 2 {
        return Err(Error::InvalidParameter(format!("graph needs N >= 2, got {npts}")));
    }
    if !(slope_amp >= 0.0) || !slope_amp.is_finite() {
        return Err(Error::InvalidParameter(format!("slope amplitude must be >= 0, got {slope_amp}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slopes: Vec<f64> = (0..GRAPH_PIECES)
        .map(|_| slope_amp * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    let mut knots = vec![0.0; GRAPH_PIECES + 1];
    for j in 0..GRAPH_PIECES {
        knots[j + 1] = knots[j] + slopes[j] / GRAPH_PIECES as f64;
    }
    let height = |t: f64| -> f64 {
        let pos = t * GRAPH_PIECES as f64;
        let j = (pos.floor() as usize).min(GRAPH_PIECES - 1);
        knots[j] + slopes[j] * (t - j as f64 / GRAPH_PIECES as f64)
    };
    let pts: Vec<Vec<f64>> = (0..npts)
        .map(|i| {
            let t = i as f64 / (npts - 1) as f64;
            vec![t, height(t)]
        })
        .collect();
    WeightedPointMeasure::new(2, 1, &pts, vec![1.0 / npts as f64; npts])
}

/// Generation-`g` approximation of the planar four-corner Cantor set with
/// ratio 1/4: the `4^g` points `Σ_j (3/4)·a_j·4^{-(j-1)}` per coordinate,
/// `a_j ∈ {0,1}`, each of mass `4^{-g}`. Dimension one in the plane.
pub fn cantor4(generation: u32) -> Result<WeightedPointMeasure> {
    if generation < 1 || generation > 12 {
        return Err(Error::InvalidParameter(format!(
            "generation must lie in 1..=12, got {generation}"
        )));
    }
    let mut pts = vec![vec![0.0, 0.0]];
    for j in 0..generation {
        let step = 0.75 * 4f64.powi(-(j as i32));
        let mut next = Vec::with_capacity(pts.len() * 4);
        for p in &pts {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                next.push(vec![p[0] + a * step, p[1] + b * step]);
            }
        }
        pts = next;
    }
    let count = pts.len();
    WeightedPointMeasure::new(2, 1, &pts, vec![1.0 / count as f64; count])
}

/// `side × side` grid on the unit square with mass `side^{-2}` each, studied
/// as a one-dimensional measure.
pub fn square_area(side: usize) -> Result<WeightedPointMeasure> {
    if side < 2 {
        return Err(Error::InvalidParameter(format!("square grid needs N >= 2, got {side}")));
    }
    let h = 1.0 / (side - 1) as f64;
    let mut pts = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            pts.push(vec![i as f64 * h, j as f64 * h]);
        }
    }
    let w = 1.0 / (side * side) as f64;
    WeightedPointMeasure::new(2, 1, &pts, vec![w; side * side])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_first_generation() {
        let mu = cantor4(1).unwrap();
        let pts: Vec<&[f64]> = mu.points().collect();
        assert_eq!(pts, vec![&[0.0, 0.0][..], &[0.0, 0.75], &[0.75, 0.0], &[0.75, 0.75]]);
        assert!(mu.weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn small_generators() {
        let s = segment(2).unwrap();
        assert_eq!(s.coords(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(s.weights(), &[0.5, 0.5]);
        let q = square_area(2).unwrap();
        assert_eq!(q.len(), 4);
        assert!(q.weights().iter().all(|&w| w == 0.25));
        assert!(segment(1).is_err());
        assert!(cantor4(0).is_err());
        assert!(square_area(1).is_err());
    }

    #[test]
    fn graph_is_lipschitz_and_seeded() {
        let a = lipschitz_graph(200, 0.8, 7).unwrap();
        let b = lipschitz_graph(200, 0.8, 7).unwrap();
        assert_eq!(a.coords(), b.coords());
        let pts: Vec<&[f64]> = a.points().collect();
        for w in pts.windows(2) {
            let slope = (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]);
            assert!(slope.abs() <= 0.8 + 1e-9);
        }
        assert!((a.total_mass() - 1.0).abs() < 1e-12);
    }
}
