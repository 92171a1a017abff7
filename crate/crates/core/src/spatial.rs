//! A small static kd-tree over points of runtime dimension, used for
//! nearest-neighbour and fixed-radius queries on sampled sets.

const LEAF: usize = 12;

#[derive(Clone, Debug)]
struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    start: usize,
    end: usize,
    /// Child node indices; `None` for leaves.
    children: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct KdTree {
    dim: usize,
    /// Points reordered so that each node owns a contiguous range.
    pts: Vec<f64>,
    /// Original index of each reordered point.
    ids: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// Builds a tree over `points` (flat buffer, `dim` coordinates per point).
    pub fn new(dim: usize, points: &[f64]) -> Self {
        assert!(dim > 0 && points.len() % dim == 0);
        let count = points.len() / dim;
        let mut ids: Vec<usize> = (0..count).collect();
        let mut nodes = Vec::new();
        if count > 0 {
            build(dim, points, &mut ids, 0, count, &mut nodes);
        }
        let mut pts = Vec::with_capacity(points.len());
        for &i in &ids {
            pts.extend_from_slice(&points[i * dim..(i + 1) * dim]);
        }
        KdTree {
            dim,
            pts,
            ids,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Index and distance of the point closest to `q`.
    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        self.nearest_within(q, f64::INFINITY)
            .map(|(i, d2)| (i, d2.sqrt()))
    }

    /// Distance from `q` to the set.
    pub fn distance(&self, q: &[f64]) -> f64 {
        self.nearest(q).map_or(f64::INFINITY, |(_, d)| d)
    }

    /// Nearest point with squared distance below `bound2`, as (index, squared distance).
    fn nearest_within(&self, q: &[f64], bound2: f64) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, bound2);
        let mut stack = vec![(0usize, 0.0f64)];
        while let Some((ni, bd)) = stack.pop() {
            if bd >= best.1 {
                continue;
            }
            let node = &self.nodes[ni];
            match node.children {
                None => {
                    for k in node.start..node.end {
                        let p = &self.pts[k * self.dim..(k + 1) * self.dim];
                        let mut d2 = 0.0;
                        for i in 0..self.dim {
                            let t = p[i] - q[i];
                            d2 += t * t;
                        }
                        if d2 < best.1 {
                            best = (k, d2);
                        }
                    }
                }
                Some((a, b)) => {
                    let da = self.box_dist2(a, q);
                    let db = self.box_dist2(b, q);
                    // Push the farther child first so the nearer is explored first.
                    if da <= db {
                        stack.push((b, db));
                        stack.push((a, da));
                    } else {
                        stack.push((a, da));
                        stack.push((b, db));
                    }
                }
            }
        }
        (best.0 != usize::MAX).then(|| (self.ids[best.0], best.1))
    }

    /// True if some point lies within distance `radius` of `q`.
    pub fn any_within(&self, q: &[f64], radius: f64) -> bool {
        self.nearest_within(q, radius * radius * (1.0 + 1e-12) + f64::MIN_POSITIVE)
            .is_some()
    }

    /// Original indices of all points within distance `radius` of `q`, sorted.
    pub fn within(&self, q: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            if self.box_dist2(ni, q) > r2 {
                continue;
            }
            let node = &self.nodes[ni];
            match node.children {
                None => {
                    for k in node.start..node.end {
                        let p = &self.pts[k * self.dim..(k + 1) * self.dim];
                        let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                        if d2 <= r2 {
                            out.push(self.ids[k]);
                        }
                    }
                }
                Some((a, b)) => {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn box_dist2(&self, ni: usize, q: &[f64]) -> f64 {
        let n = &self.nodes[ni];
        let mut d2 = 0.0;
        for i in 0..self.dim {
            let t = if q[i] < n.lo[i] {
                n.lo[i] - q[i]
            } else if q[i] > n.hi[i] {
                q[i] - n.hi[i]
            } else {
                0.0
            };
            d2 += t * t;
        }
        d2
    }
}

fn build(
    dim: usize,
    points: &[f64],
    ids: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &i in &ids[start..end] {
        for k in 0..dim {
            let v = points[i * dim + k];
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let me = nodes.len();
    nodes.push(Node {
        lo: lo.clone(),
        hi: hi.clone(),
        start,
        end,
        children: None,
    });
    if end - start > LEAF {
        let axis = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        let mid = (start + end) / 2;
        ids[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + axis]
                .total_cmp(&points[b * dim + axis])
                .then(a.cmp(&b))
        });
        let l = build(dim, points, ids, start, mid, nodes);
        let r = build(dim, points, ids, mid, end, nodes);
        nodes[me].children = Some((l, r));
    }
    me
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in 2..=5 {
            let pts: Vec<f64> = (0..600 * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let tree = KdTree::new(dim, &pts);
            for _ in 0..100 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
                let brute = pts
                    .chunks(dim)
                    .map(|p| p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
                    .sqrt();
                let (_, d) = tree.nearest(&q).unwrap();
                assert!((d - brute).abs() < 1e-14);
                let r = 0.3;
                let expect: Vec<usize> = pts
                    .chunks(dim)
                    .enumerate()
                    .filter(|(_, p)| p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r * r)
                    .map(|(i, _)| i)
                    .collect();
                assert_eq!(tree.within(&q, r), expect);
                assert_eq!(tree.any_within(&q, r), !expect.is_empty());
            }
        }
    }

    #[test]
    fn empty_tree() {
        let t = KdTree::new(3, &[]);
        assert!(t.nearest(&[0.0, 0.0, 0.0]).is_none());
        assert!(t.within(&[0.0; 3], 1.0).is_empty());
    }
}
