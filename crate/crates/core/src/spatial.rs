//! Kd-tree over 3D points with exact closed-ball radius queries.
//!
//! Query semantics are the contract other modules rely on: a point `p` is a
//! neighbor of `q` at radius `r` iff `|p - q|^2 <= r^2`, evaluated in f64.
//! Returned indices refer to the build-time slice and are sorted ascending,
//! so results are independent of tree layout.

use crate::geom::Point3;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    start: u32,
    len: u32,
    /// Child node ids; `None` for leaves.
    children: Option<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    coords: Vec<[f64; 3]>,
    /// Permutation of original indices, partitioned per node.
    order: Vec<u32>,
    nodes: Vec<Node>,
}

fn bbox(coords: &[[f64; 3]], idx: &[u32]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in idx {
        let p = coords[i as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

impl SpatialIndex {
    pub fn build(points: &[Point3]) -> SpatialIndex {
        let coords: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let mut order: Vec<u32> = (0..coords.len() as u32).collect();
        let mut nodes = Vec::new();
        if !coords.is_empty() {
            build_node(&coords, &mut order, 0, coords.len(), &mut nodes);
        }
        SpatialIndex {
            coords,
            order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Indices of all points within the closed ball of radius `r`, ascending.
    pub fn radius_neighbors(&self, center: &Point3, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() || !(r >= 0.0) {
            return out;
        }
        let q = [center.x, center.y, center.z];
        let r2 = r * r;
        self.collect(0, &q, r2, &mut out);
        out.sort_unstable();
        out
    }

    /// Number of points within the closed ball; subtrees fully inside the
    /// ball are counted without visiting their points.
    pub fn count_within(&self, center: &Point3, r: f64) -> usize {
        if self.nodes.is_empty() || !(r >= 0.0) {
            return 0;
        }
        let q = [center.x, center.y, center.z];
        self.count(0, &q, r * r)
    }

    fn collect(&self, node_id: u32, q: &[f64; 3], r2: f64, out: &mut Vec<usize>) {
        let node = &self.nodes[node_id as usize];
        if min_dist2(&node.lo, &node.hi, q) > r2 {
            return;
        }
        match node.children {
            Some((left, right)) => {
                self.collect(left, q, r2, out);
                self.collect(right, q, r2, out);
            }
            None => {
                let start = node.start as usize;
                for &i in &self.order[start..start + node.len as usize] {
                    if dist2(&self.coords[i as usize], q) <= r2 {
                        out.push(i as usize);
                    }
                }
            }
        }
    }

    fn count(&self, node_id: u32, q: &[f64; 3], r2: f64) -> usize {
        let node = &self.nodes[node_id as usize];
        if min_dist2(&node.lo, &node.hi, q) > r2 {
            return 0;
        }
        if max_dist2(&node.lo, &node.hi, q) <= r2 {
            return node.len as usize;
        }
        match node.children {
            Some((left, right)) => self.count(left, q, r2) + self.count(right, q, r2),
            None => {
                let start = node.start as usize;
                self.order[start..start + node.len as usize]
                    .iter()
                    .filter(|&&i| dist2(&self.coords[i as usize], q) <= r2)
                    .count()
            }
        }
    }
}

fn build_node(
    coords: &[[f64; 3]],
    order: &mut [u32],
    start: usize,
    len: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let idx = &order[start..start + len];
    let (lo, hi) = bbox(coords, idx);
    let id = nodes.len() as u32;
    nodes.push(Node {
        lo,
        hi,
        start: start as u32,
        len: len as u32,
        children: None,
    });
    if len > LEAF_SIZE {
        // Split on the widest axis at the median.
        let mut axis = 0;
        let mut width = hi[0] - lo[0];
        for a in 1..3 {
            if hi[a] - lo[a] > width {
                width = hi[a] - lo[a];
                axis = a;
            }
        }
        if width > 0.0 {
            let mid = len / 2;
            order[start..start + len].select_nth_unstable_by(mid, |&a, &b| {
                coords[a as usize][axis]
                    .partial_cmp(&coords[b as usize][axis])
                    .expect("finite coordinates")
            });
            let left = build_node(coords, order, start, mid, nodes);
            let right = build_node(coords, order, start + mid, len - mid, nodes);
            nodes[id as usize].children = Some((left, right));
        }
        // width == 0 means all points coincide; keep as a (large) leaf.
    }
    id
}

fn dist2(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let dz = p[2] - q[2];
    dx * dx + dy * dy + dz * dz
}

/// Squared distance from `q` to the closest point of the box.
fn min_dist2(lo: &[f64; 3], hi: &[f64; 3], q: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for a in 0..3 {
        let d = (lo[a] - q[a]).max(0.0).max(q[a] - hi[a]);
        acc += d * d;
    }
    acc
}

/// Squared distance from `q` to the farthest point of the box.
fn max_dist2(lo: &[f64; 3], hi: &[f64; 3], q: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for a in 0..3 {
        let d = (q[a] - lo[a]).abs().max((hi[a] - q[a]).abs());
        acc += d * d;
    }
    acc
}
