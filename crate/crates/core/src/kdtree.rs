//! Exact k-nearest-neighbor KD-tree over flat `f64` points.
//!
//! Neighbors are ordered by ascending squared Euclidean distance, with ties
//! broken by the caller-supplied key (lexicographic). Pruning only skips a
//! subtree when its splitting plane is strictly farther than the current
//! k-th candidate, so equal-distance points are never lost.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 8;

#[derive(Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    keys: Vec<String>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    /// Position of the point in insertion order.
    pub index: usize,
    pub squared_distance: f64,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.squared_distance.sqrt()
    }
}

struct Candidate<'a> {
    squared_distance: f64,
    key: &'a str,
    index: usize,
}

impl Candidate<'_> {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.squared_distance
            .total_cmp(&other.squared_distance)
            .then_with(|| self.key.cmp(other.key))
            .then_with(|| self.index.cmp(&other.index))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}
impl Eq for Candidate<'_> {}
impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_key(other)
    }
}

impl KdTree {
    /// `points` is row-major with `dim` columns; `keys` has one entry per row.
    pub fn new(dim: usize, points: Vec<f64>, keys: Vec<String>) -> Self {
        assert!(dim > 0, "dimension must be positive");
        assert_eq!(points.len(), dim * keys.len(), "points and keys disagree");
        let mut tree = Self {
            dim,
            points,
            order: (0..keys.len()).collect(),
            keys,
            nodes: Vec::new(),
        };
        if !tree.keys.is_empty() {
            let n = tree.keys.len();
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index * self.dim..(index + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let (dim, spread) = self.widest_dimension(start, end);
        if spread == 0.0 {
            // All points coincide.
            return id;
        }
        let mid = start + (end - start) / 2;
        let (points, d) = (&self.points, self.dim);
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * d + dim].total_cmp(&points[b * d + dim])
        });
        let value = self.points[self.order[mid] * d + dim];
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    fn spread(&self, start: usize, end: usize, dim: usize) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in &self.order[start..end] {
            let v = self.points[i * self.dim + dim];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    fn widest_dimension(&self, start: usize, end: usize) -> (usize, f64) {
        (0..self.dim)
            .map(|d| (d, self.spread(start, end, d)))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    /// The `k` nearest points to `query`, nearest first.
    pub fn nearest(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        assert_eq!(query.len(), self.dim, "query dimension");
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter()
            .map(|c| Neighbor {
                index: c.index,
                squared_distance: c.squared_distance,
            })
            .collect()
    }

    fn search<'a>(&'a self, node: usize, query: &[f64], k: usize, heap: &mut BinaryHeap<Candidate<'a>>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let candidate = Candidate {
                        squared_distance: squared_distance(query, self.point(i)),
                        key: &self.keys[i],
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(candidate);
                    } else if candidate < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(candidate);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, heap);
                let worst = heap.peek().map(|c| c.squared_distance);
                if heap.len() < k || worst.is_some_and(|w| diff * diff <= w) {
                    self.search(far, query, k, heap);
                }
            }
        }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    crate::sample::squared_distance(a, b)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;

    fn brute_force(points: &[f64], keys: &[String], dim: usize, query: &[f64], k: usize) -> Vec<usize> {
        let mut all: Vec<(f64, &str, usize)> = (0..keys.len())
            .map(|i| {
                let p = &points[i * dim..(i + 1) * dim];
                let d: f64 = p.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum();
                (d, keys[i].as_str(), i)
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        all.into_iter().take(k).map(|(_, _, i)| i).collect()
    }

    #[test]
    fn matches_linear_scan_on_random_data() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for round in 0..60 {
            let dim = rng.gen_range(1..=64);
            let n = rng.gen_range(1..=500);
            // Coarse integer grid in odd rounds produces many distance ties.
            let coarse = round % 2 == 1;
            let points: Vec<f64> = (0..n * dim)
                .map(|_| if coarse { rng.gen_range(0..3) as f64 } else { rng.gen::<f64>() })
                .collect();
            let keys: Vec<String> = (0..n).map(|i| format!("s{:04}", (i * 7919) % 10_000)).collect();
            let tree = KdTree::new(dim, points.clone(), keys.clone());
            for _ in 0..5 {
                let query: Vec<f64> = (0..dim)
                    .map(|_| if coarse { rng.gen_range(0..3) as f64 } else { rng.gen::<f64>() })
                    .collect();
                let k = rng.gen_range(1..=12);
                let got: Vec<usize> = tree.nearest(&query, k).iter().map(|n| n.index).collect();
                assert_eq!(got, brute_force(&points, &keys, dim, &query, k));
            }
        }
    }

    #[test]
    fn handles_duplicates_and_small_inputs() {
        let keys: Vec<String> = (0..20).map(|i| format!("k{i:02}")).collect();
        let tree = KdTree::new(2, vec![1.0; 40], keys);
        let got: Vec<usize> = tree.nearest(&[1.0, 1.0], 3).iter().map(|n| n.index).collect();
        assert_eq!(got, vec![0, 1, 2]);
        assert!(KdTree::new(3, vec![], vec![]).nearest(&[0.0; 3], 2).is_empty());
    }
}
