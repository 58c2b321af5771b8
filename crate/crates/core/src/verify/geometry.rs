//! Audit of the distance function `d_R`, the regularized cells and `Φ_R` of one tree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corona::{CoronaTree, TreeGeometry};
use crate::error::Result;
use crate::lattice::Lattice;
use crate::measure::{dist, WeightedPointMeasure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeGeometryAudit {
    pub tree: usize,
    pub lipschitz_pairs: usize,
    /// Pairs with `|d_R(x) − d_R(y)| > |x − y|`.
    pub lipschitz_violations: usize,
    pub reg_cells: usize,
    pub reg_samples: usize,
    /// `min d_R(x)/ℓ(Q)` over regularized `Q` and sampled `x ∈ B(z_Q, 50ℓ(Q))`.
    pub reg_lower_min: f64,
    /// `max d_R(x)/(A_0 ℓ(Q))` over the same samples.
    pub reg_upper_max: f64,
    /// `max d_R(x)/(A_0 ℓ(Q))` restricted to `x` in the parent of `Q`.
    pub reg_upper_max_parent: f64,
    /// Regularized cells inside the top cell not contained in any stop cell.
    pub reg_outside_stop: usize,
    /// `max Φ_R(x)·10A_0/ℓ(Q)` over stop cells `Q` and their points `x`.
    pub stop_phi_max: f64,
}

fn in_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = center.iter().map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v.iter().zip(center).map(|(a, c)| c + radius * a).collect();
        }
    }
}

/// Samples `pairs` point pairs in `B_0(R)` for the Lipschitz test and
/// `per_cell` points in each `B(z_Q, 50ℓ(Q))`, `Q ∈ Reg(R)`.
pub fn tree_geometry_audit(
    mu: &WeightedPointMeasure,
    lattice: &Lattice,
    corona: &CoronaTree,
    pos: usize,
    pairs: usize,
    per_cell: usize,
    seed: u64,
) -> Result<TreeGeometryAudit> {
    let geom = TreeGeometry::new(corona, lattice, pos)?;
    let tree = &corona.trees[pos];
    let a0 = lattice.params.a0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut violations = 0;
    for _ in 0..pairs {
        let x = in_ball(&mut rng, &geom.b0.center, geom.b0.radius);
        let y = in_ball(&mut rng, &geom.b0.center, geom.b0.radius);
        if (geom.d_r(&x) - geom.d_r(&y)).abs() > dist(&x, &y) {
            violations += 1;
        }
    }

    let reg = geom.regularize(lattice, mu);
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    let mut upper_parent: f64 = 0.0;
    let mut samples = 0;
    let mut outside = 0;
    for &q in &reg {
        let cell = &lattice.cells[q];
        for _ in 0..per_cell {
            let x = in_ball(&mut rng, &cell.center, 50.0 * cell.ell);
            let d = geom.d_r(&x);
            lower = lower.min(d / cell.ell);
            upper = upper.max(d / (a0 * cell.ell));
            samples += 1;
        }
        if let Some(p) = cell.parent {
            for &i in &lattice.cells[p].points {
                upper_parent = upper_parent.max(geom.d_r(mu.point(i)) / (a0 * cell.ell));
            }
        }
        if lattice.is_ancestor_or_self(tree.top, q) && !tree.stop.iter().any(|&s| lattice.is_ancestor_or_self(s, q)) {
            outside += 1;
        }
    }

    let mut stop_phi: f64 = 0.0;
    for &s in &tree.stop {
        let cell = &lattice.cells[s];
        for &i in &cell.points {
            stop_phi = stop_phi.max(geom.phi(mu.point(i)) * 10.0 * a0 / cell.ell);
        }
    }

    Ok(TreeGeometryAudit {
        tree: pos,
        lipschitz_pairs: pairs,
        lipschitz_violations: violations,
        reg_cells: reg.len(),
        reg_samples: samples,
        reg_lower_min: if samples == 0 { f64::INFINITY } else { lower },
        reg_upper_max: upper,
        reg_upper_max_parent: upper_parent,
        reg_outside_stop: outside,
        stop_phi_max: stop_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corona::{build_corona, CoronaParams};
    use crate::generate::cantor4;
    use crate::lattice::{build_lattice, LatticeParams};

    #[test]
    fn cantor_trees_satisfy_the_regularity_bounds() {
        let mu = cantor4(4).unwrap();
        let lat = build_lattice(&mu, LatticeParams::relaxed(1)).unwrap();
        let corona = build_corona(&lat, &mu, CoronaParams::default()).unwrap();
        let a0 = lat.params.a0;
        let mut reg_total = 0;
        for pos in 0..corona.trees.len() {
            let a = tree_geometry_audit(&mu, &lat, &corona, pos, 500, 10, pos as u64).unwrap();
            assert_eq!(a.lipschitz_violations, 0);
            assert_eq!(a.reg_outside_stop, 0);
            assert!(a.reg_lower_min >= 10.0);
            assert!(a.reg_upper_max <= 61.0 + 50.0 / a0);
            assert!(a.reg_upper_max_parent <= 61.0);
            assert!(a.stop_phi_max <= 1.0);
            reg_total += a.reg_cells;
        }
        assert!(reg_total > 0);
    }
}
