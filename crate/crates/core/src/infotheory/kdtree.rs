//! Exact max-norm neighbour search.
//!
//! Distances are always `max_d |a_d − b_d|` evaluated in floating point, and
//! both the tree and the sorted-array counter use that same expression (or a
//! monotone bound of it), so counts agree bit-for-bit with brute force.

const LEAF_SIZE: usize = 8;

/// Beyond this dimension the tree stops paying off.
pub(crate) const BRUTE_FORCE_ABOVE: usize = 20;

#[inline]
fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut d = 0.0_f64;
    for (x, y) in a.iter().zip(b) {
        let v = (x - y).abs();
        if v > d {
            d = v;
        }
    }
    d
}

#[derive(Clone, Copy)]
struct Node<const D: usize> {
    lo: [f64; D],
    hi: [f64; D],
    start: u32,
    end: u32,
    /// Child node indices; `u32::MAX` marks a leaf.
    left: u32,
    right: u32,
}

impl<const D: usize> Node<D> {
    /// Lower bound on the distance from `q` to any point in the box.
    #[inline(always)]
    fn distance(&self, q: &[f64; D]) -> f64 {
        let mut d = 0.0_f64;
        for k in 0..D {
            let v = if q[k] < self.lo[k] {
                self.lo[k] - q[k]
            } else if q[k] > self.hi[k] {
                q[k] - self.hi[k]
            } else {
                0.0
            };
            d = d.max(v);
        }
        d
    }

    /// Upper bound on the distance from `q` to any point in the box.
    #[inline(always)]
    fn reach(&self, q: &[f64; D]) -> f64 {
        let mut d = 0.0_f64;
        for k in 0..D {
            d = d.max((q[k] - self.lo[k]).abs().max((self.hi[k] - q[k]).abs()));
        }
        d
    }
}

#[inline(always)]
fn dist<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut d = 0.0_f64;
    for k in 0..D {
        d = d.max((a[k] - b[k]).abs());
    }
    d
}

/// Static k-d tree over `D`-dimensional points with per-node bounding boxes.
pub(crate) struct KdTree<const D: usize> {
    /// Points in tree order.
    points: Vec<[f64; D]>,
    /// Original index of each point.
    ids: Vec<u32>,
    nodes: Vec<Node<D>>,
}

impl<const D: usize> KdTree<D> {
    /// `points` is row-major with `D` values per row.
    pub fn build(points: &[f64]) -> Self {
        let mut items: Vec<([f64; D], u32)> = points
            .chunks_exact(D)
            .enumerate()
            .map(|(i, c)| (c.try_into().expect("chunk of length D"), i as u32))
            .collect();
        let n = items.len();
        let mut tree = KdTree {
            points: Vec::new(),
            ids: Vec::new(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 2),
        };
        if n > 0 {
            tree.build_node(&mut items, 0);
        }
        tree.points = items.iter().map(|p| p.0).collect();
        tree.ids = items.iter().map(|p| p.1).collect();
        tree
    }

    fn build_node(&mut self, items: &mut [([f64; D], u32)], offset: usize) -> u32 {
        let mut lo = [f64::INFINITY; D];
        let mut hi = [f64::NEG_INFINITY; D];
        for (p, _) in items.iter() {
            for k in 0..D {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let node = self.nodes.len() as u32;
        self.nodes.push(Node {
            lo,
            hi,
            start: offset as u32,
            end: (offset + items.len()) as u32,
            left: u32::MAX,
            right: u32::MAX,
        });
        if items.len() <= LEAF_SIZE {
            return node;
        }
        let split = (0..D).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap_or(0);
        if hi[split] == lo[split] {
            // Every point coincides; keep them in one leaf.
            return node;
        }
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| a.0[split].total_cmp(&b.0[split]));
        let (l, r) = items.split_at_mut(mid);
        let left = self.build_node(l, offset);
        let right = self.build_node(r, offset + mid);
        let n = &mut self.nodes[node as usize];
        n.left = left;
        n.right = right;
        node
    }

    /// Distance from every stored point to its `k`-th nearest other point,
    /// indexed by original position.
    pub fn all_kth_distances(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.points.len()];
        let mut best = vec![f64::INFINITY; k];
        let mut stack = Vec::with_capacity(64);
        // Tree order keeps consecutive queries in cache.
        for (p, q) in self.points.iter().enumerate() {
            best.iter_mut().for_each(|b| *b = f64::INFINITY);
            self.knn(q, p as u32, &mut best, &mut stack);
            out[self.ids[p] as usize] = best[k - 1];
        }
        out
    }

    /// `k`-th nearest distance from `q`, skipping the point stored at tree
    /// position `skip`.
    fn knn(&self, q: &[f64; D], skip: u32, best: &mut [f64], stack: &mut Vec<u32>) {
        let worst = best.len() - 1;
        stack.clear();
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if node.distance(q) >= best[worst] {
                continue;
            }
            if node.left == u32::MAX {
                for p in node.start..node.end {
                    if p == skip {
                        continue;
                    }
                    let d = dist(q, &self.points[p as usize]);
                    if d < best[worst] {
                        let mut i = worst;
                        while i > 0 && best[i - 1] > d {
                            best[i] = best[i - 1];
                            i -= 1;
                        }
                        best[i] = d;
                    }
                }
                continue;
            }
            let (l, r) = (node.left, node.right);
            let dl = self.nodes[l as usize].distance(q);
            let dr = self.nodes[r as usize].distance(q);
            // Push the farther child first so the nearer one is visited next.
            if dl <= dr {
                stack.push(r);
                stack.push(l);
            } else {
                stack.push(l);
                stack.push(r);
            }
        }
    }

    /// Number of stored points strictly closer than `r` to `q`.
    pub fn count_within(&self, q: &[f64], r: f64) -> usize {
        if self.nodes.is_empty() || r <= 0.0 {
            return 0;
        }
        let q: &[f64; D] = q.try_into().expect("query of length D");
        let mut total = 0;
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if node.distance(q) >= r {
                continue;
            }
            if node.reach(q) < r {
                total += (node.end - node.start) as usize;
            } else if node.left == u32::MAX {
                total += self.points[node.start as usize..node.end as usize]
                    .iter()
                    .filter(|p| dist(q, p) < r)
                    .count();
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        total
    }
}

/// Strict range counts on a single coordinate via binary search.
pub(crate) struct SortedLine {
    values: Vec<f64>,
}

impl SortedLine {
    pub fn new(values: &[f64]) -> Self {
        let mut values = values.to_vec();
        values.sort_unstable_by(f64::total_cmp);
        SortedLine { values }
    }

    /// `#{v : |v − c| < r}`, with the difference rounded exactly as in
    /// [`max_dist`].
    pub fn count_within(&self, c: f64, r: f64) -> usize {
        if r <= 0.0 {
            return 0;
        }
        let lo = self.values.partition_point(|&v| v <= c && c - v >= r);
        let hi = self.values.partition_point(|&v| v < c || v - c < r);
        hi - lo
    }
}

/// Strict range counts for every point of a planar cloud at once.
///
/// Each max-norm ball is the product of two index intervals in the sorted
/// coordinates, so the counts reduce to offline rectangle counting: sweep the
/// first coordinate and keep a Fenwick tree over ranks of the second.
/// `out[t]` includes the point itself whenever `eps[t] > 0`.
pub(crate) fn plane_counts(points: &[f64], eps: &[f64]) -> Vec<usize> {
    let n = eps.len();
    let coord = |t: usize, d: usize| points[2 * t + d];
    let sorted_order = |d: usize| {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| coord(a, d).total_cmp(&coord(b, d)));
        order
    };
    let order_a = sorted_order(0);
    let order_b = sorted_order(1);
    let sorted_a: Vec<f64> = order_a.iter().map(|&t| coord(t, 0)).collect();
    let sorted_b: Vec<f64> = order_b.iter().map(|&t| coord(t, 1)).collect();
    let mut rank_b = vec![0usize; n];
    for (r, &t) in order_b.iter().enumerate() {
        rank_b[t] = r;
    }
    let interval = |values: &[f64], c: f64, r: f64| {
        let lo = values.partition_point(|&v| v <= c && c - v >= r);
        let hi = values.partition_point(|&v| v < c || v - c < r);
        (lo, hi)
    };

    // Queries bucketed by sweep position (CSR layout).
    let mut b_range = vec![(0usize, 0usize); n];
    let mut a_range = vec![(0usize, 0usize); n];
    let mut bucket_len = vec![0usize; n + 2];
    for t in 0..n {
        if eps[t] <= 0.0 {
            continue;
        }
        a_range[t] = interval(&sorted_a, coord(t, 0), eps[t]);
        b_range[t] = interval(&sorted_b, coord(t, 1), eps[t]);
        bucket_len[a_range[t].0 + 1] += 1;
        bucket_len[a_range[t].1 + 1] += 1;
    }
    for p in 1..n + 2 {
        bucket_len[p] += bucket_len[p - 1];
    }
    let mut fill = bucket_len.clone();
    let mut events = vec![(0usize, false); bucket_len[n + 1]];
    for t in 0..n {
        if eps[t] <= 0.0 {
            continue;
        }
        let (lo, hi) = a_range[t];
        events[fill[lo]] = (t, false);
        fill[lo] += 1;
        events[fill[hi]] = (t, true);
        fill[hi] += 1;
    }

    let mut tree = vec![0usize; n + 1];
    let prefix = |tree: &[usize], mut i: usize| {
        let mut s = 0;
        while i > 0 {
            s += tree[i];
            i &= i - 1;
        }
        s
    };
    let mut out = vec![0usize; n];
    for p in 0..=n {
        for &(t, upper) in &events[bucket_len[p]..bucket_len[p + 1]] {
            let (blo, bhi) = b_range[t];
            let c = prefix(&tree, bhi) - prefix(&tree, blo);
            if upper {
                out[t] = out[t].wrapping_add(c);
            } else {
                out[t] = out[t].wrapping_sub(c);
            }
        }
        if p < n {
            let mut i = rank_b[order_a[p]] + 1;
            while i <= n {
                tree[i] += 1;
                i += i & i.wrapping_neg();
            }
        }
    }
    out
}

/// Brute-force fallback for high-dimensional blocks.
pub(crate) struct Scan<'a> {
    points: &'a [f64],
    dim: usize,
}

impl<'a> Scan<'a> {
    pub fn new(points: &'a [f64], dim: usize) -> Self {
        Scan { points, dim }
    }

    pub fn kth_distance(&self, q: &[f64], k: usize, skip: usize) -> f64 {
        let mut d: Vec<f64> = self
            .points
            .chunks_exact(self.dim)
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, p)| max_dist(q, p))
            .collect();
        let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
        *kth
    }

    pub fn count_within(&self, q: &[f64], r: f64) -> usize {
        self.points
            .chunks_exact(self.dim)
            .filter(|p| max_dist(q, p) < r)
            .count()
    }
}
