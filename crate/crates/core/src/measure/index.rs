//! Static kd-tree over a flat coordinate buffer.
//!
//! Ball queries return point indices in ascending order, so any reduction
//! performed over the result visits points in the same order as a naive scan
//! and produces bit-identical sums.

use super::dist;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    children: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(dim: usize, coords: &[f64]) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0);
        let len = coords.len() / dim;
        let mut tree = KdTree {
            dim,
            coords: coords.to_vec(),
            perm: (0..len).collect(),
            nodes: Vec::new(),
        };
        if len > 0 {
            tree.build(0, len);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let dim = self.dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.perm[start..end] {
            let p = &self.coords[i * dim..(i + 1) * dim];
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            lo: lo.clone(),
            hi: hi.clone(),
            children: None,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] - lo[axis] <= 0.0 {
            // all points coincide
            return id;
        }
        let mid = start + (end - start) / 2;
        let coords = &self.coords;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a * dim + axis]
                .total_cmp(&coords[b * dim + axis])
                .then(a.cmp(&b))
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    fn box_min_dist(&self, node: &Node, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim {
            let d = if x[k] < node.lo[k] {
                node.lo[k] - x[k]
            } else if x[k] > node.hi[k] {
                x[k] - node.hi[k]
            } else {
                0.0
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// Indices `i` with `dist(x, p_i) <= r`, ascending.
    pub fn ball(&self, x: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.ball_into(x, r, &mut out);
        out
    }

    pub fn ball_into(&self, x: &[f64], r: f64, out: &mut Vec<usize>) {
        out.clear();
        if self.nodes.is_empty() || r.is_nan() || r < 0.0 {
            return;
        }
        // slack so that rounding in the box bound never prunes a point the
        // exact test would accept
        let prune = r * (1.0 + 1e-9) + 1e-300;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if self.box_min_dist(node, x) > prune {
                continue;
            }
            match node.children {
                Some((l, rr)) => {
                    stack.push(l);
                    stack.push(rr);
                }
                None => {
                    for &i in &self.perm[node.start..node.end] {
                        if dist(self.point(i), x) <= r {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }

    /// Whether some point `i` with `dist(x, p_i) <= r` satisfies `pred(i)`.
    pub fn any_within<F: Fn(usize) -> bool>(&self, x: &[f64], r: f64, pred: F) -> bool {
        if self.nodes.is_empty() || r.is_nan() || r < 0.0 {
            return false;
        }
        let prune = r * (1.0 + 1e-9) + 1e-300;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if self.box_min_dist(node, x) > prune {
                continue;
            }
            match node.children {
                Some((l, rr)) => {
                    stack.push(l);
                    stack.push(rr);
                }
                None => {
                    for &i in &self.perm[node.start..node.end] {
                        if pred(i) && dist(self.point(i), x) <= r {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Nearest point accepted by `keep`; ties resolved towards the smaller index.
    pub fn nearest_where<F>(&self, x: &[f64], keep: F) -> Option<(usize, f64)>
    where
        F: Fn(usize, f64) -> bool,
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if let Some((_, bd)) = best {
                if self.box_min_dist(node, x) > bd * (1.0 + 1e-9) {
                    continue;
                }
            }
            match node.children {
                Some((l, r)) => {
                    let dl = self.box_min_dist(&self.nodes[l], x);
                    let dr = self.box_min_dist(&self.nodes[r], x);
                    // visit the closer child first
                    if dl <= dr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
                None => {
                    for &i in &self.perm[node.start..node.end] {
                        let d = dist(self.point(i), x);
                        if !keep(i, d) {
                            continue;
                        }
                        let better = match best {
                            None => true,
                            Some((bi, bd)) => d < bd || (d == bd && i < bi),
                        };
                        if better {
                            best = Some((i, d));
                        }
                    }
                }
            }
        }
        best
    }

    pub fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.nearest_where(x, |_, _| true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_ball(coords: &[f64], dim: usize, x: &[f64], r: f64) -> Vec<usize> {
        (0..coords.len() / dim)
            .filter(|&i| dist(&coords[i * dim..(i + 1) * dim], x) <= r)
            .collect()
    }

    #[test]
    fn ball_matches_naive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 1..=3 {
            let coords: Vec<f64> = (0..500 * dim).map(|_| rng.random::<f64>()).collect();
            let tree = KdTree::new(dim, &coords);
            for _ in 0..200 {
                let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                let r = rng.random::<f64>() * 0.4;
                assert_eq!(tree.ball(&x, r), naive_ball(&coords, dim, &x, r));
            }
        }
    }

    #[test]
    fn ball_is_closed() {
        let coords = [0.0, 0.0, 1.0, 0.0, 2.0, 0.0];
        let tree = KdTree::new(2, &coords);
        assert_eq!(tree.ball(&[0.0, 0.0], 1.0), vec![0, 1]);
    }

    #[test]
    fn nearest_breaks_ties_by_index() {
        let coords = [1.0, -1.0, 0.5, 3.0];
        let tree = KdTree::new(1, &coords);
        assert_eq!(tree.nearest(&[0.0]), Some((2, 0.5)));
        assert_eq!(tree.nearest_where(&[0.0], |_, d| d > 0.6).map(|p| p.0), Some(0));
        assert_eq!(tree.nearest_where(&[0.5], |_, d| d > 0.0).map(|p| p.0), Some(0));
    }

    #[test]
    fn coincident_points() {
        let coords = vec![0.25; 40];
        let tree = KdTree::new(2, &coords);
        assert_eq!(tree.ball(&[0.25, 0.25], 0.0).len(), 20);
    }
}
