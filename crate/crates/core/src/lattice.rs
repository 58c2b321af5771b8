//! Hierarchical partition of the support into cells with centers, radii and
//! doubling flags, built from nested greedy nets.
//!
//! Level `k` works at the scale `s_k = s_0 A_0^{-k}`, where `s_0` is chosen so
//! that the root ball `B(R_0)` contains the whole support. Nets are nested and
//! `10 C_0 s_k`-separated, every point first goes to its nearest center, and
//! nesting is then enforced bottom-up by moving whole child cells to the
//! parent-level cell of their center. Cell balls get radius `C_0 s_k`, shrunk
//! when needed so that `E ∩ B(Q) ⊂ Q`. The properties of a dyadic lattice
//! with small boundaries are not guaranteed by this construction; they are
//! checked per cell and reported through the `conforming` flag.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{dist, KdTree, WeightedPointMeasure};

/// Ratio between the cell side `ℓ(Q)` and the scale `C_0 s_k`.
pub const SIDE_FACTOR: f64 = 56.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub c0: f64,
    pub a0: f64,
    pub max_depth: usize,
    /// Allows `A_0 <= 5000 C_0`.
    pub relaxed: bool,
}

impl LatticeParams {
    /// Desk-scale defaults for measures of dimension `n`: `C_0 = 2·100^n`
    /// (so that regular pieces come out doubling) and `A_0 = 8`.
    pub fn relaxed(n: usize) -> Self {
        LatticeParams {
            c0: 2.0 * 100f64.powi(n as i32),
            a0: 8.0,
            max_depth: 12,
            relaxed: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 1.0) || !self.c0.is_finite() {
            return Err(Error::InvalidParameter(format!("C0 must exceed 1, got {}", self.c0)));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
        }
        if self.relaxed {
            if !(self.a0 > 4.0) || !self.a0.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "A0 must exceed 4 in relaxed mode, got {}",
                    self.a0
                )));
            }
        } else if !(self.a0 > 5000.0 * self.c0) || !self.a0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "A0 = {} must exceed 5000·C0 = {} (use relaxed mode for smaller values)",
                self.a0,
                5000.0 * self.c0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    /// Scale index `J(Q)`.
    pub k: usize,
    /// Support point used as center `z_Q`.
    pub center_index: usize,
    pub center: Vec<f64>,
    pub r: f64,
    /// Side length `ℓ(Q) = 56 C_0 s_k`.
    pub ell: f64,
    /// Member point indices, ascending.
    pub points: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub doubling: bool,
    pub conforming: bool,
}

impl Cell {
    pub fn mass(&self, mu: &WeightedPointMeasure) -> f64 {
        self.points.iter().map(|&i| mu.weight(i)).sum()
    }

    /// `B_Q = 28 B(Q)` scaled by `factor`, as (center, radius).
    pub fn big_ball_radius(&self, factor: f64) -> f64 {
        28.0 * self.r * factor
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lattice {
    pub params: LatticeParams,
    /// `s_0`: level `k` has scale `s_0 A_0^{-k}`.
    pub base_scale: f64,
    pub cells: Vec<Cell>,
    /// Cell ids per level; level 0 holds the root only.
    pub levels: Vec<Vec<usize>>,
    /// `cell_of[k][i]`: the level-`k` cell containing point `i`.
    pub cell_of: Vec<Vec<usize>>,
}

fn lex_order(mu: &WeightedPointMeasure) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (mu.point(a), mu.point(b));
        for k in 0..pa.len() {
            match pa[k].total_cmp(&pb[k]) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        a.cmp(&b)
    });
    order
}

/// Hash grid used to grow a separated net one center at a time.
struct NetGrid {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl NetGrid {
    fn new(cell: f64) -> Self {
        NetGrid {
            cell,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|c| (c / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, mu: &WeightedPointMeasure, i: usize) {
        let key = self.key(mu.point(i));
        self.buckets.entry(key).or_default().push(i);
    }

    /// Whether some stored center lies within `radius <= cell` of `x`.
    fn has_within(&self, mu: &WeightedPointMeasure, x: &[f64], radius: f64) -> bool {
        let base = self.key(x);
        let d = base.len();
        let mut offset = vec![-1i64; d];
        loop {
            let key: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
            if let Some(list) = self.buckets.get(&key) {
                if list.iter().any(|&c| dist(mu.point(c), x) <= radius) {
                    return true;
                }
            }
            let mut a = 0;
            loop {
                if a == d {
                    return false;
                }
                offset[a] += 1;
                if offset[a] <= 1 {
                    break;
                }
                offset[a] = -1;
                a += 1;
            }
        }
    }
}

/// Builds the lattice. Fails on invalid parameters or an empty measure.
pub fn build_lattice(mu: &WeightedPointMeasure, params: LatticeParams) -> Result<Lattice> {
    params.validate()?;
    if mu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let npts = mu.len();
    let dim = mu.dim();
    let (c0, a0) = (params.c0, params.a0);

    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in mu.points() {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let root_center = mu.index().nearest(&mid).expect("nonempty").0;
    let zr = mu.point(root_center);
    let mut extent = mu.points().map(|p| dist(p, zr)).fold(0.0, f64::max);
    if extent <= 0.0 {
        extent = mu.r_min();
    }
    let base_scale = extent / c0;
    let scale = |k: usize| base_scale * a0.powi(-(k as i32));

    // raw nets and nearest-center assignment per level
    let order = lex_order(mu);
    let mut nets: Vec<Vec<usize>> = vec![vec![root_center]];
    let mut raw: Vec<Vec<usize>> = vec![vec![root_center; npts]];
    for k in 1..=params.max_depth {
        // stop once every previous-level cell is a single point
        let prev = &raw[k - 1];
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &c in prev {
            *counts.entry(c).or_default() += 1;
        }
        if counts.values().all(|&c| c == 1) {
            break;
        }
        let eta = 10.0 * c0 * scale(k);
        let mut grid = NetGrid::new(eta);
        let mut net = nets[k - 1].clone();
        for &c in &net {
            grid.insert(mu, c);
        }
        for &i in &order {
            if !grid.has_within(mu, mu.point(i), eta) {
                grid.insert(mu, i);
                net.push(i);
            }
        }
        net.sort_unstable();
        let mut centers = Vec::with_capacity(net.len() * dim);
        for &c in &net {
            centers.extend_from_slice(mu.point(c));
        }
        let tree = KdTree::new(dim, &centers);
        let assign: Vec<usize> = (0..npts)
            .map(|i| net[tree.nearest(mu.point(i)).expect("nonempty net").0])
            .collect();
        nets.push(net);
        raw.push(assign);
    }
    let depth = raw.len();

    // bottom-up nesting: a point follows the center of its finer cell
    let mut owner: Vec<Vec<usize>> = vec![Vec::new(); depth];
    owner[depth - 1] = raw[depth - 1].clone();
    for k in (0..depth - 1).rev() {
        owner[k] = owner[k + 1].iter().map(|&c| raw[k][c]).collect();
    }

    // cells in breadth-first order, children sorted by lexicographic rank of
    // their centers
    let mut rank = vec![0usize; npts];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos;
    }
    let mut cells: Vec<Cell> = Vec::new();
    let mut levels: Vec<Vec<usize>> = Vec::with_capacity(depth);
    let mut cell_of: Vec<Vec<usize>> = Vec::with_capacity(depth);
    for k in 0..depth {
        let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, &c) in owner[k].iter().enumerate() {
            members.entry(c).or_default().push(i);
        }
        let mut centers: Vec<usize> = members.keys().copied().collect();
        let parent_of = |c: usize| -> Option<usize> {
            if k == 0 {
                None
            } else {
                Some(cell_of[k - 1][c])
            }
        };
        centers.sort_by_key(|&c| (parent_of(c), rank[c]));
        let mut ids = Vec::with_capacity(centers.len());
        for c in centers {
            let id = cells.len();
            let parent = parent_of(c);
            if let Some(p) = parent {
                cells[p].children.push(id);
            }
            let s = scale(k);
            cells.push(Cell {
                id,
                k,
                center_index: c,
                center: mu.point(c).to_vec(),
                r: c0 * s,
                ell: SIDE_FACTOR * c0 * s,
                points: members.remove(&c).expect("member list"),
                parent,
                children: Vec::new(),
                doubling: false,
                conforming: false,
            });
            ids.push(id);
        }
        let mut of = vec![0usize; npts];
        for id in &ids {
            for &i in &cells[*id].points {
                of[i] = *id;
            }
        }
        levels.push(ids);
        cell_of.push(of);
    }

    let mut lattice = Lattice {
        params,
        base_scale,
        cells,
        levels,
        cell_of,
    };
    lattice.fit_radii(mu);
    let flags = classify_doubling(&lattice, mu);
    for (cell, flag) in lattice.cells.iter_mut().zip(flags) {
        cell.doubling = flag;
    }
    Ok(lattice)
}

impl Lattice {
    /// `s_0 A_0^{-k}`, the stand-in for `A_0^{-k}`.
    pub fn scale(&self, k: usize) -> f64 {
        self.base_scale * self.params.a0.powi(-(k as i32))
    }

    /// `ℓ_k = 56 C_0 s_k`.
    pub fn side(&self, k: usize) -> f64 {
        SIDE_FACTOR * self.params.c0 * self.scale(k)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn root(&self) -> &Cell {
        &self.cells[0]
    }

    pub fn cell(&self, id: usize) -> Result<&Cell> {
        self.cells.get(id).ok_or(Error::UnknownCell(id))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell ids containing point `i`, from the root down.
    pub fn chain(&self, i: usize) -> Vec<usize> {
        self.cell_of.iter().map(|level| level[i]).collect()
    }

    pub fn contains_point(&self, cell: &Cell, i: usize) -> bool {
        self.cell_of[cell.k][i] == cell.id
    }

    /// Whether `a` is `b` or one of its ancestors.
    pub fn is_ancestor_or_self(&self, a: usize, b: usize) -> bool {
        let ca = &self.cells[a];
        let cb = &self.cells[b];
        if ca.k > cb.k {
            return false;
        }
        self.cell_of[ca.k][cb.points[0]] == a
    }

    /// Ancestor of `id` at level `k <= J(id)`.
    pub fn ancestor_at(&self, id: usize, k: usize) -> usize {
        let cell = &self.cells[id];
        assert!(k <= cell.k);
        self.cell_of[k][cell.points[0]]
    }

    /// All descendants of `id` (excluding itself) in breadth-first order.
    pub fn descendants(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut queue: VecDeque<usize> = self.cells[id].children.iter().copied().collect();
        while let Some(c) = queue.pop_front() {
            out.push(c);
            queue.extend(self.cells[c].children.iter().copied());
        }
        out
    }

    fn fit_radii(&mut self, mu: &WeightedPointMeasure) {
        let c0 = self.params.c0;
        for id in 0..self.cells.len() {
            let (k, center) = (self.cells[id].k, self.cells[id].center.clone());
            let s = self.scale(k);
            let of = &self.cell_of[k];
            let outside = mu
                .index()
                .nearest_where(&center, |j, _| of[j] != id)
                .map(|p| p.1)
                .unwrap_or(f64::INFINITY);
            // the ball must stay strictly inside the cell
            let r = (c0 * s).min(outside * (1.0 - 1e-12)).max(s);
            self.cells[id].r = r;
        }
        for id in 0..self.cells.len() {
            let ok = self.cell_conforms(mu, id);
            self.cells[id].conforming = ok;
        }
    }

    /// Radius range, `E ∩ B(Q) ⊂ Q` and `Q ⊂ 28 B(Q)` for a single cell.
    pub fn cell_conforms(&self, mu: &WeightedPointMeasure, id: usize) -> bool {
        let cell = &self.cells[id];
        let s = self.scale(cell.k);
        let c0 = self.params.c0;
        let slack = 1e-12;
        if cell.r < s * (1.0 - slack) || cell.r > c0 * s * (1.0 + slack) {
            return false;
        }
        let of = &self.cell_of[cell.k];
        if mu.index().any_within(&cell.center, cell.r, |j| of[j] != id) {
            return false;
        }
        let reach = 28.0 * cell.r;
        cell.points.iter().all(|&i| dist(mu.point(i), &cell.center) <= reach)
    }

    /// Pairs of conforming cells on the same level whose balls `5B(Q)`
    /// intersect.
    pub fn overlapping_5b_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for level in &self.levels {
            let conf: Vec<usize> = level.iter().copied().filter(|&c| self.cells[c].conforming).collect();
            if conf.is_empty() {
                continue;
            }
            let dim = self.cells[conf[0]].center.len();
            let mut coords = Vec::with_capacity(conf.len() * dim);
            for &c in &conf {
                coords.extend_from_slice(&self.cells[c].center);
            }
            let tree = KdTree::new(dim, &coords);
            let rmax = conf.iter().map(|&c| self.cells[c].r).fold(0.0, f64::max);
            for (a, &ca) in conf.iter().enumerate() {
                let qa = &self.cells[ca];
                for b in tree.ball(&qa.center, 5.0 * (qa.r + rmax)) {
                    if b <= a {
                        continue;
                    }
                    let qb = &self.cells[conf[b]];
                    if dist(&qa.center, &qb.center) <= 5.0 * (qa.r + qb.r) {
                        out.push((ca, conf[b]));
                    }
                }
            }
        }
        out
    }

    /// Exact structural checks: partition of each level, nesting, `5B`
    /// disjointness of conforming cells, and `diam(Q) <= ℓ(Q)`.
    pub fn check_invariants(&self, mu: &WeightedPointMeasure) -> InvariantReport {
        let npts = mu.len();
        let mut report = InvariantReport::default();
        for (k, level) in self.levels.iter().enumerate() {
            let mut seen = vec![0usize; npts];
            for &id in level {
                for &i in &self.cells[id].points {
                    seen[i] += 1;
                    if self.cell_of[k][i] != id {
                        report.partition_violations += 1;
                    }
                }
            }
            report.partition_violations += seen.iter().filter(|&&c| c != 1).count();
        }
        for cell in &self.cells {
            if let Some(p) = cell.parent {
                let parent = &self.cells[p];
                if cell.points.iter().any(|&i| self.cell_of[parent.k][i] != p) {
                    report.nesting_violations += 1;
                }
            }
            if cell.conforming {
                report.conforming += 1;
            } else {
                report.nonconforming += 1;
            }
            let diam = cell_diameter(mu, cell);
            if diam > cell.ell {
                report.diameter_violations += 1;
            }
            if cell.conforming && cell.points.len() >= 2 && diam < cell.ell / (28.0 * self.params.c0) {
                report.small_diameter_cells += 1;
            }
        }
        report.overlapping_5b = self.overlapping_5b_pairs().len();
        report
    }

    /// Largest boundary-layer ratio `(inner + outer)/(λ^{1/2} μ(3.5 B_Q))`
    /// over all cells.
    pub fn max_boundary_ratio(&self, mu: &WeightedPointMeasure, lambda: f64) -> Result<f64> {
        let mut best: f64 = 0.0;
        for cell in &self.cells {
            let (inner, outer) = boundary_layer_mass(self, mu, cell.id, lambda)?;
            let denom = lambda.sqrt() * mu.mass_in(&cell.center, 3.5 * 28.0 * cell.r);
            if denom > 0.0 {
                best = best.max((inner + outer) / denom);
            }
        }
        Ok(best)
    }

    /// Among non-doubling cells, the fraction whose radius is the lower
    /// endpoint `s_k` of the admissible range.
    pub fn nondoubling_minimal_radius_fraction(&self) -> f64 {
        let nd: Vec<&Cell> = self.cells.iter().filter(|c| !c.doubling).collect();
        if nd.is_empty() {
            return 1.0;
        }
        let hits = nd
            .iter()
            .filter(|c| (c.r - self.scale(c.k)).abs() <= 1e-12 * c.r)
            .count();
        hits as f64 / nd.len() as f64
    }

    /// JSON dump of every cell.
    pub fn dump(&self) -> Vec<CellSummary> {
        self.cells
            .iter()
            .map(|c| CellSummary {
                id: c.id,
                k: c.k,
                center: c.center.clone(),
                r: c.r,
                ell: c.ell,
                point_count: c.points.len(),
                doubling: c.doubling,
                conforming: c.conforming,
                children: c.children.clone(),
            })
            .collect()
    }
}

fn cell_diameter(mu: &WeightedPointMeasure, cell: &Cell) -> f64 {
    let mut d: f64 = 0.0;
    for (a, &i) in cell.points.iter().enumerate() {
        for &j in &cell.points[a + 1..] {
            d = d.max(dist(mu.point(i), mu.point(j)));
        }
    }
    d
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub partition_violations: usize,
    pub nesting_violations: usize,
    pub overlapping_5b: usize,
    pub diameter_violations: usize,
    /// Conforming cells with at least two points and `diam(Q) < ℓ(Q)/(28 C_0)`.
    pub small_diameter_cells: usize,
    pub conforming: usize,
    pub nonconforming: usize,
}

impl InvariantReport {
    pub fn exact_ok(&self) -> bool {
        self.partition_violations == 0
            && self.nesting_violations == 0
            && self.overlapping_5b == 0
            && self.diameter_violations == 0
    }

    pub fn nonconforming_fraction(&self) -> f64 {
        self.nonconforming as f64 / (self.conforming + self.nonconforming).max(1) as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub id: usize,
    pub k: usize,
    pub center: Vec<f64>,
    pub r: f64,
    pub ell: f64,
    pub point_count: usize,
    pub doubling: bool,
    pub conforming: bool,
    pub children: Vec<usize>,
}

/// Doubling flag `μ(100 B(Q)) <= C_0 μ(B(Q))` for every cell.
pub fn classify_doubling(lattice: &Lattice, mu: &WeightedPointMeasure) -> Vec<bool> {
    let c0 = lattice.params.c0;
    lattice
        .cells
        .iter()
        .map(|c| mu.mass_in(&c.center, 100.0 * c.r) <= c0 * mu.mass_in(&c.center, c.r))
        .collect()
}

/// Masses of the inner layer `{x ∈ Q : dist(x, E∖Q) <= λℓ(Q)}` and the outer
/// layer `{x ∈ 4B_Q ∖ Q : dist(x, Q) <= λℓ(Q)}`.
pub fn boundary_layer_mass(
    lattice: &Lattice,
    mu: &WeightedPointMeasure,
    id: usize,
    lambda: f64,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!("λ must lie in (0, 1], got {lambda}")));
    }
    let cell = lattice.cell(id)?;
    let of = &lattice.cell_of[cell.k];
    let width = lambda * cell.ell;
    let index = mu.index();
    let mut inner = 0.0;
    for &i in &cell.points {
        if index.any_within(mu.point(i), width, |j| of[j] != id) {
            inner += mu.weight(i);
        }
    }
    let mut outer = 0.0;
    for i in mu.ball_indices(&cell.center, 4.0 * 28.0 * cell.r) {
        if of[i] != id && index.any_within(mu.point(i), width, |j| of[j] == id) {
            outer += mu.weight(i);
        }
    }
    Ok((inner, outer))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingCover {
    /// Maximal doubling cells inside the starting cell.
    pub cells: Vec<usize>,
    /// Mass of the points not covered by any emitted cell.
    pub uncovered_mass: f64,
    pub uncovered_points: Vec<usize>,
}

/// Maximal doubling cells among `R` and its descendants.
pub fn cover_by_doubling(lattice: &Lattice, mu: &WeightedPointMeasure, id: usize) -> Result<DoublingCover> {
    lattice.cell(id)?;
    let mut cells = Vec::new();
    let mut uncovered_points = Vec::new();
    let mut queue = VecDeque::from([id]);
    while let Some(c) = queue.pop_front() {
        let cell = &lattice.cells[c];
        if cell.doubling {
            cells.push(c);
        } else if cell.children.is_empty() {
            uncovered_points.extend_from_slice(&cell.points);
        } else {
            queue.extend(cell.children.iter().copied());
        }
    }
    uncovered_points.sort_unstable();
    let uncovered_mass = uncovered_points.iter().map(|&i| mu.weight(i)).sum();
    Ok(DoublingCover {
        cells,
        uncovered_mass,
        uncovered_points,
    })
}
