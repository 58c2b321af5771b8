//! Stopping-time decomposition of the lattice into trees, and the geometry
//! attached to each tree: the distance function `d_R`, the suppressing
//! function `Φ_R = d_R/(20 A_0^2)` and the regularized stopping cells.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::beta::beta2_sq_raw;
use crate::error::{Error, Result};
use crate::lattice::{cover_by_doubling, Lattice};
use crate::measure::{dist, Ball, KdTree, WeightedPointMeasure};

/// Radius factor of `B_Q = 28 B(Q)`.
const BIG_BALL: f64 = 28.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoronaParams {
    /// A cell stops when `θ(1.1 B_Q) > a_stop · θ(B_R)`.
    pub a_stop: f64,
    /// A cell stops when the accumulated `Σ β²(1.1B_P) θ(1.1B_P) / θ(B_R)²`
    /// along its chain exceeds `tau`.
    pub tau: f64,
}

impl Default for CoronaParams {
    fn default() -> Self {
        CoronaParams {
            a_stop: 64.0,
            tau: 0.1,
        }
    }
}

/// One tree of the decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopTree {
    pub top: usize,
    /// Maximal top cells strictly inside `top`.
    pub stop: Vec<usize>,
    /// Cells of the tree, `top` first.
    pub tree: Vec<usize>,
    /// Points of `top` outside every stop cell.
    pub good_points: Vec<usize>,
    /// Stopping candidates with no doubling ancestor below `top`, replaced by
    /// their doubling cover.
    pub unresolved_stops: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoronaTree {
    pub params: CoronaParams,
    /// Trees in breadth-first order of their tops; `trees[0]` belongs to the root.
    pub trees: Vec<TopTree>,
    /// Index into `trees` of the tree owning each lattice cell.
    pub tree_of: Vec<usize>,
}

fn theta_big(mu: &WeightedPointMeasure, center: &[f64], r: f64, factor: f64) -> f64 {
    mu.density_theta(center, factor * BIG_BALL * r)
}

/// Builds the decomposition breadth-first from the root cell.
pub fn build_corona(lattice: &Lattice, mu: &WeightedPointMeasure, params: CoronaParams) -> Result<CoronaTree> {
    if !(params.a_stop > 1.0) {
        return Err(Error::InvalidParameter(format!("A_stop must exceed 1, got {}", params.a_stop)));
    }
    if !(params.tau > 0.0) {
        return Err(Error::InvalidParameter(format!("τ must be positive, got {}", params.tau)));
    }
    let ncells = lattice.len();
    let mut trees = Vec::new();
    let mut tree_of = vec![usize::MAX; ncells];
    let mut queue = VecDeque::from([0usize]);
    // 1.1 B_Q densities and β excesses are needed once per cell
    let mut cell_terms: HashMap<usize, (f64, f64)> = HashMap::new();
    let mut terms = |id: usize| -> (f64, f64) {
        *cell_terms.entry(id).or_insert_with(|| {
            let c = &lattice.cells[id];
            let r = 1.1 * BIG_BALL * c.r;
            let (b2, mass) = if r >= mu.r_min() { beta2_sq_raw(mu, &c.center, r) } else { (0.0, mu.mass_in(&c.center, r)) };
            let theta = mass / r.powi(mu.n() as i32);
            (theta, b2 * theta)
        })
    };
    while let Some(top) = queue.pop_front() {
        let rc = &lattice.cells[top];
        let theta_r = theta_big(mu, &rc.center, rc.r, 1.0);
        let mut candidates: BTreeSet<usize> = BTreeSet::new();
        let mut unresolved = 0;
        let mut frontier: VecDeque<(usize, f64)> = rc.children.iter().map(|&c| (c, 0.0)).collect();
        while let Some((q, acc)) = frontier.pop_front() {
            let (theta_q, excess) = terms(q);
            let acc = acc + excess / (theta_r * theta_r);
            let density_stop = theta_q > params.a_stop * theta_r;
            let coherence_stop = acc > params.tau;
            if !(density_stop || coherence_stop) {
                frontier.extend(lattice.cells[q].children.iter().map(|&c| (c, acc)));
                continue;
            }
            let mut p = q;
            let mut found = None;
            while lattice.cells[p].k > rc.k {
                if lattice.cells[p].doubling {
                    found = Some(p);
                    break;
                }
                p = lattice.cells[p].parent.expect("non-root cell");
            }
            match found {
                Some(p) => {
                    candidates.insert(p);
                }
                None => {
                    unresolved += 1;
                    let cover = cover_by_doubling(lattice, mu, q)?;
                    // the non-doubling remainder stays in this tree
                    candidates.extend(cover.cells);
                }
            }
        }
        let stop: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&c| {
                !candidates
                    .iter()
                    .any(|&o| o != c && lattice.is_ancestor_or_self(o, c))
            })
            .collect();
        let mut tree = vec![top];
        let mut walk: VecDeque<usize> = rc.children.iter().copied().collect();
        let stop_set: BTreeSet<usize> = stop.iter().copied().collect();
        while let Some(c) = walk.pop_front() {
            if stop_set.contains(&c) {
                continue;
            }
            tree.push(c);
            walk.extend(lattice.cells[c].children.iter().copied());
        }
        let pos = trees.len();
        for &c in &tree {
            tree_of[c] = pos;
        }
        let mut in_stop = vec![false; mu.len()];
        for &s in &stop {
            for &i in &lattice.cells[s].points {
                in_stop[i] = true;
            }
        }
        let good_points = rc.points.iter().copied().filter(|&i| !in_stop[i]).collect();
        queue.extend(stop.iter().copied());
        trees.push(TopTree {
            top,
            stop,
            tree,
            good_points,
            unresolved_stops: unresolved,
        });
    }
    Ok(CoronaTree {
        params,
        trees,
        tree_of,
    })
}

impl CoronaTree {
    pub fn tops(&self) -> Vec<usize> {
        self.trees.iter().map(|t| t.top).collect()
    }

    /// Position in `trees` of the tree whose top is `cell`.
    pub fn tree_index(&self, cell: usize) -> Option<usize> {
        self.trees.iter().position(|t| t.top == cell)
    }

    /// `Stop^k(R)`: stop cells reached after `k` generations from the tree at
    /// position `pos`. `Stop^1` is `Stop`.
    pub fn stop_generation(&self, pos: usize, k: usize) -> Vec<usize> {
        let mut current = vec![self.trees[pos].top];
        for _ in 0..k {
            let mut next = Vec::new();
            for c in current {
                if let Some(p) = self.tree_index(c) {
                    next.extend(self.trees[p].stop.iter().copied());
                }
            }
            current = next;
        }
        current
    }

    /// Largest `θ(1.1 B_Q)/θ(B_R)` over the cells `Q` of each tree.
    pub fn tree_density_ratio(&self, lattice: &Lattice, mu: &WeightedPointMeasure, pos: usize) -> f64 {
        let t = &self.trees[pos];
        let rc = &lattice.cells[t.top];
        let theta_r = theta_big(mu, &rc.center, rc.r, 1.0);
        t.tree
            .iter()
            .map(|&q| {
                let c = &lattice.cells[q];
                theta_big(mu, &c.center, c.r, 1.1) / theta_r
            })
            .fold(0.0, f64::max)
    }

    /// `θ(B_R)² μ(R)` for the tree at `pos`.
    pub fn packing_term(&self, lattice: &Lattice, mu: &WeightedPointMeasure, pos: usize) -> f64 {
        let rc = &lattice.cells[self.trees[pos].top];
        let theta = theta_big(mu, &rc.center, rc.r, 1.0);
        theta * theta * rc.mass(mu)
    }

    /// Per-tree summary used by the JSON dump.
    pub fn summary(&self, lattice: &Lattice, mu: &WeightedPointMeasure) -> CoronaSummary {
        let mut trees = std::collections::BTreeMap::new();
        for (pos, t) in self.trees.iter().enumerate() {
            trees.insert(
                t.top,
                TreeSummary {
                    stop: t.stop.clone(),
                    tree_size: t.tree.len(),
                    good_mass: t.good_points.iter().map(|&i| mu.weight(i)).sum(),
                    packing_term: self.packing_term(lattice, mu, pos),
                    unresolved_stops: t.unresolved_stops,
                },
            );
        }
        CoronaSummary {
            top: self.tops(),
            trees,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeSummary {
    pub stop: Vec<usize>,
    pub tree_size: usize,
    pub good_mass: f64,
    pub packing_term: f64,
    pub unresolved_stops: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoronaSummary {
    pub top: Vec<usize>,
    pub trees: std::collections::BTreeMap<usize, TreeSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingAudit {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `Σ_{R∈Top} θ(B_R)² μ(R)` against
/// `θ(B_{R_0})² μ(R_0) + Σ_i w_i ∫_{r_min}^{ℓ(R_0)} β²θ dr/r`.
pub fn packing_audit(
    corona: &CoronaTree,
    lattice: &Lattice,
    mu: &WeightedPointMeasure,
    scales_per_octave: u32,
) -> Result<PackingAudit> {
    let lhs: f64 = (0..corona.trees.len())
        .map(|p| corona.packing_term(lattice, mu, p))
        .sum();
    let root = lattice.root();
    let all: Vec<usize> = (0..mu.len()).collect();
    let jones = crate::beta::jones_mass_sum(mu, &all, mu.r_min(), root.ell, scales_per_octave)?;
    let rhs = corona.packing_term(lattice, mu, 0) + jones;
    Ok(PackingAudit {
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaMu {
    pub value: f64,
    /// Points sitting exactly at `z_Q` outside `Q`, left out of the sum.
    pub singular_points: usize,
}

/// `δ_μ(Q, R) = ∫_{2B_R ∖ Q} dμ(y)/|y - z_Q|^n`.
pub fn delta_mu(lattice: &Lattice, mu: &WeightedPointMeasure, q: usize, r: usize) -> Result<DeltaMu> {
    let qc = lattice.cell(q)?;
    let rc = lattice.cell(r)?;
    if !lattice.is_ancestor_or_self(r, q) {
        return Err(Error::InvalidParameter(format!("cell {q} is not contained in cell {r}")));
    }
    let of = &lattice.cell_of[qc.k];
    let p = mu.n() as i32;
    let mut value = 0.0;
    let mut singular_points = 0;
    for i in mu.ball_indices(&rc.center, 2.0 * BIG_BALL * rc.r) {
        if of[i] == q {
            continue;
        }
        let d = dist(mu.point(i), &qc.center);
        if d == 0.0 {
            singular_points += 1;
            continue;
        }
        value += mu.weight(i) / d.powi(p);
    }
    Ok(DeltaMu {
        value,
        singular_points,
    })
}

/// Distance function and suppressing function of one tree.
#[derive(Debug, Clone)]
pub struct TreeGeometry {
    pub owner: usize,
    /// `B_0(R) = B(z_R, 29 r(R))`.
    pub b0: Ball,
    pub a0: f64,
    /// Per level: side length, tree-cell ids and a kd-tree over their centers.
    levels: Vec<(f64, Vec<usize>, KdTree)>,
    deepest_side: f64,
}

impl TreeGeometry {
    pub fn new(corona: &CoronaTree, lattice: &Lattice, pos: usize) -> Result<Self> {
        let t = corona
            .trees
            .get(pos)
            .ok_or_else(|| Error::InvalidParameter(format!("no tree at position {pos}")))?;
        let rc = &lattice.cells[t.top];
        let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); lattice.depth()];
        for &c in &t.tree {
            by_level[lattice.cells[c].k].push(c);
        }
        let dim = rc.center.len();
        let mut levels = Vec::new();
        for (k, ids) in by_level.into_iter().enumerate() {
            if ids.is_empty() {
                continue;
            }
            let mut coords = Vec::with_capacity(ids.len() * dim);
            for &c in &ids {
                coords.extend_from_slice(&lattice.cells[c].center);
            }
            levels.push((lattice.side(k), ids, KdTree::new(dim, &coords)));
        }
        Ok(TreeGeometry {
            owner: t.top,
            b0: Ball::new(rc.center.clone(), 29.0 * rc.r)?,
            a0: lattice.params.a0,
            deepest_side: lattice.side(lattice.depth() - 1),
            levels,
        })
    }

    /// `d_R(x) = min_{Q ∈ Tree(R)} |x - z_Q| + ℓ(Q)`.
    pub fn d_r(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for (side, _, tree) in self.levels.iter().rev() {
            if *side >= best {
                continue;
            }
            if let Some((_, d)) = tree.nearest(x) {
                best = best.min(d + side);
            }
        }
        best
    }

    /// `Φ_R(x) = d_R(x)/(20 A_0^2)`.
    pub fn phi(&self, x: &[f64]) -> f64 {
        self.d_r(x) / (20.0 * self.a0 * self.a0)
    }

    /// Side of the deepest lattice level; `d_R` cannot drop below it.
    pub fn resolution(&self) -> f64 {
        self.deepest_side
    }

    /// Regularized cells: for each support point `x ∈ B_0(R)`, the largest
    /// cell `Q ∋ x` with `ℓ(Q) <= min_{y∈Q} d_R(y)/60`. Points for which no
    /// cell of the lattice qualifies are left uncovered.
    pub fn regularize(&self, lattice: &Lattice, mu: &WeightedPointMeasure) -> Vec<usize> {
        let mut d_cache: Vec<f64> = vec![f64::NAN; mu.len()];
        let mut d_of = |i: usize| -> f64 {
            if d_cache[i].is_nan() {
                d_cache[i] = self.d_r(mu.point(i));
            }
            d_cache[i]
        };
        let mut verdict: HashMap<usize, bool> = HashMap::new();
        let mut out = BTreeSet::new();
        for x in mu.ball_indices(&self.b0.center, self.b0.radius) {
            for c in lattice.chain(x) {
                let ok = match verdict.get(&c) {
                    Some(&v) => v,
                    None => {
                        let cell = &lattice.cells[c];
                        let need = 60.0 * cell.ell;
                        let v = d_of(cell.center_index) >= need
                            && cell.points.iter().all(|&y| d_of(y) >= need);
                        verdict.insert(c, v);
                        v
                    }
                };
                if ok {
                    out.insert(c);
                    break;
                }
            }
        }
        out.into_iter().collect()
    }

    /// Largest `μ(B(x,r) ∩ B_R) / (θ(B_R) r^n)` over `r >= max(Φ_R(x), r_min)`,
    /// exact over breakpoints.
    pub fn local_growth(&self, lattice: &Lattice, mu: &WeightedPointMeasure, x: &[f64]) -> f64 {
        let rc = &lattice.cells[self.owner];
        let big = BIG_BALL * rc.r;
        let theta_r = mu.density_theta(&rc.center, big);
        let inside = mu.ball_indices(&rc.center, big);
        let mut d: Vec<(f64, usize)> = inside.iter().map(|&i| (dist(mu.point(i), x), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let r_lo = self.phi(x).max(mu.r_min());
        let profile = crate::measure::DistanceProfile {
            cumulative: Vec::new(),
            entries: d,
        };
        profile.sup_ratio_above(r_lo, mu.n(), |i| mu.weight(i)) / theta_r
    }
}
