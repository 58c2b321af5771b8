//! Scale pieces `T_k μ` and the per-tree operator `K_R μ = Σ_{Q ∈ Tree(R)} χ_Q T_{J(Q)} μ`.

use crate::corona::CoronaTree;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::measure::WeightedPointMeasure;

use super::bump::BumpFamily;
use super::kernel::CZKernel;

/// Bumps living at the lattice scales `s_k`.
pub fn lattice_bumps(lattice: &Lattice) -> BumpFamily {
    BumpFamily {
        a0: lattice.params.a0,
        base: lattice.base_scale,
    }
}

fn accumulate<W: Fn(f64) -> f64>(
    kernel: &CZKernel,
    mu: &WeightedPointMeasure,
    x: &[f64],
    radius: f64,
    weight: W,
) -> (Vec<f64>, f64) {
    let m = kernel.out_dim();
    let mut acc = vec![0.0; m];
    let mut magnitude = 0.0;
    let mut kv = vec![0.0; m];
    let mut z = vec![0.0; x.len()];
    for i in mu.ball_indices(x, radius) {
        let mut s = 0.0;
        for (t, (a, b)) in z.iter_mut().zip(x.iter().zip(mu.point(i))) {
            *t = a - b;
            s += *t * *t;
        }
        if s == 0.0 {
            continue;
        }
        let c = weight(s.sqrt());
        if c == 0.0 {
            continue;
        }
        kernel.eval(&z, &mut kv);
        let c = c * mu.weight(i);
        let mut k2 = 0.0;
        for (a, v) in acc.iter_mut().zip(&kv) {
            *a += v * c;
            k2 += v * v;
        }
        magnitude += k2.sqrt() * c.abs();
    }
    (acc, magnitude)
}

/// `T_k μ(x) = Σ_i φ_k(x − x_i) K(x − x_i) w_i`.
pub fn t_k(kernel: &CZKernel, bump: &BumpFamily, mu: &WeightedPointMeasure, k: i64, x: &[f64]) -> Vec<f64> {
    accumulate(kernel, mu, x, bump.outer_radius(k), |t| bump.phi_k(k, t)).0
}

/// `(J(R), J(P))` where `P` is the deepest cell of `Tree(R)` containing the
/// support point `i`. Errors when `i ∉ R`.
pub fn tree_span(corona: &CoronaTree, lattice: &Lattice, pos: usize, i: usize) -> Result<(usize, usize)> {
    let t = corona
        .trees
        .get(pos)
        .ok_or_else(|| Error::InvalidParameter(format!("no tree at position {pos}")))?;
    let top = &lattice.cells[t.top];
    if i >= lattice.cell_of[0].len() || !lattice.contains_point(top, i) {
        return Err(Error::NotInCell { point: i, cell: t.top });
    }
    let chain = lattice.chain(i);
    let mut deepest = top.k;
    for &c in &chain[top.k..] {
        if corona.tree_of[c] != pos {
            break;
        }
        deepest = lattice.cells[c].k;
    }
    Ok((top.k, deepest))
}

/// `K_R μ(x_i)` as the sum over the tree cells containing `x_i` of `T_{J(Q)} μ(x_i)`.
pub fn k_r_operator(
    corona: &CoronaTree,
    lattice: &Lattice,
    kernel: &CZKernel,
    bump: &BumpFamily,
    mu: &WeightedPointMeasure,
    pos: usize,
    i: usize,
) -> Result<Vec<f64>> {
    let (a, b) = tree_span(corona, lattice, pos, i)?;
    let x = mu.point(i);
    let mut acc = vec![0.0; kernel.out_dim()];
    for k in a..=b {
        for (s, v) in acc.iter_mut().zip(t_k(kernel, bump, mu, k as i64, x)) {
            *s += v;
        }
    }
    Ok(acc)
}

/// `K_R μ(x_i) = ∫ [ψ_{J(R)} − ψ_{J(P)+1}](x_i − y) k(x_i, y) dμ(y)`, together
/// with `∫ |ψ_{J(R)} − ψ_{J(P)+1}| |k| dμ`, the scale for comparing evaluations.
pub fn k_r_telescoped(
    corona: &CoronaTree,
    lattice: &Lattice,
    kernel: &CZKernel,
    bump: &BumpFamily,
    mu: &WeightedPointMeasure,
    pos: usize,
    i: usize,
) -> Result<(Vec<f64>, f64)> {
    let (a, b) = tree_span(corona, lattice, pos, i)?;
    let (a, b) = (a as i64, b as i64 + 1);
    Ok(accumulate(kernel, mu, mu.point(i), bump.outer_radius(a), |t| {
        bump.psi_k(a, t) - bump.psi_k(b, t)
    }))
}
