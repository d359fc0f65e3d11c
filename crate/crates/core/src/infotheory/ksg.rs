//! Kraskov–Stögbauer–Grassberger estimators (first variant, max-norm) for
//! mutual information and, following Frenzel and Pompe, conditional mutual
//! information. Results are in nats.

use std::collections::HashMap;

use super::kdtree::{plane_counts, KdTree, Scan, SortedLine, BRUTE_FORCE_ABOVE};
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Relative size of the tie-breaking perturbation.
const JITTER: f64 = 1e-12;

/// Joint samples `(x_t, y_t, z_t)`, one per row, with the tie-breaking
/// jitter already applied.
#[derive(Debug, Clone)]
pub struct SampleCloud {
    points: Vec<f64>,
    n: usize,
    dims: [usize; 3],
}

impl SampleCloud {
    /// Builds a cloud from column-major blocks. `z` may be empty.
    pub fn new(x: &[&[f64]], y: &[&[f64]], z: &[&[f64]]) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidArgument("X and Y blocks must have at least one column".into()));
        }
        let columns: Vec<&[f64]> = x.iter().chain(y).chain(z).copied().collect();
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("all columns must have the same length".into()));
        }
        if columns.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        let d = columns.len();
        let mut points = vec![0.0; n * d];
        for (j, c) in columns.iter().enumerate() {
            for (t, &v) in c.iter().enumerate() {
                points[t * d + j] = v;
            }
        }
        apply_jitter(&mut points, n, d);
        Ok(SampleCloud {
            points,
            n,
            dims: [x.len(), y.len(), z.len()],
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    /// Column counts of the X, Y and Z blocks.
    pub fn block_dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Row-major jittered samples.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    fn width(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Row-major copy of the chosen columns.
    fn project(&self, cols: &[usize]) -> Vec<f64> {
        let d = self.width();
        let mut out = Vec::with_capacity(self.n * cols.len());
        for t in 0..self.n {
            let row = &self.points[t * d..(t + 1) * d];
            out.extend(cols.iter().map(|&c| row[c]));
        }
        out
    }

    /// `I(X;Y)` if Z is empty, otherwise `I(X;Y|Z)`.
    pub fn estimate(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.n <= k {
            return Err(Error::TooShort {
                needed: k + 1,
                got: self.n,
            });
        }
        let [dx, dy, dz] = self.dims;
        let d = self.width();
        let xs: Vec<usize> = (0..dx).collect();
        let ys: Vec<usize> = (dx..dx + dy).collect();
        let zs: Vec<usize> = (dx + dy..d).collect();
        let eps = kth_distances(&self.points, d, self.n, k);
        let psi = digamma_table(self.n);
        if dz == 0 {
            let hx = neighbour_histogram(&self.project(&xs), dx, self.n, &eps);
            let hy = neighbour_histogram(&self.project(&ys), dy, self.n, &eps);
            let mean = (weighted_sum(&hx, &psi) + weighted_sum(&hy, &psi)) / self.n as f64;
            Ok(psi[k] + psi[self.n] - mean)
        } else {
            let xz: Vec<usize> = xs.iter().chain(&zs).copied().collect();
            let yz: Vec<usize> = ys.iter().chain(&zs).copied().collect();
            let hxz = neighbour_histogram(&self.project(&xz), dx + dz, self.n, &eps);
            let hyz = neighbour_histogram(&self.project(&yz), dy + dz, self.n, &eps);
            let hz = neighbour_histogram(&self.project(&zs), dz, self.n, &eps);
            let mean =
                (weighted_sum(&hxz, &psi) + weighted_sum(&hyz, &psi) - weighted_sum(&hz, &psi)) / self.n as f64;
            Ok(psi[k] - mean)
        }
    }
}

/// KSG estimate of `I(X;Y)` in nats. Blocks are given column by column.
pub fn estimate_mi(x: &[&[f64]], y: &[&[f64]], k: usize) -> Result<f64> {
    SampleCloud::new(x, y, &[])?.estimate(k)
}

/// Frenzel–Pompe estimate of `I(X;Y|Z)` in nats. An empty `z` gives exactly
/// [`estimate_mi`].
pub fn estimate_cmi(x: &[&[f64]], y: &[&[f64]], z: &[&[f64]], k: usize) -> Result<f64> {
    SampleCloud::new(x, y, z)?.estimate(k)
}

/// `psi[n] = ψ(n)` for `1 ≤ n ≤ len`.
fn digamma_table(len: usize) -> Vec<f64> {
    let mut psi = vec![0.0; len + 1];
    psi[1] = -EULER_GAMMA;
    for i in 1..len {
        psi[i + 1] = psi[i] + 1.0 / i as f64;
    }
    psi
}

/// `Σ_c hist[c]·ψ(c+1)`, summed in increasing `c` so the result does not
/// depend on sample order.
fn weighted_sum(hist: &[usize], psi: &[f64]) -> f64 {
    hist.iter()
        .enumerate()
        .filter(|(_, &h)| h > 0)
        .map(|(c, &h)| h as f64 * psi[c + 1])
        .sum()
}

/// Runs `$body` with `$d` bound to `$dim` as a const generic, for every
/// dimension the tree handles.
macro_rules! with_dim {
    ($dim:expr, $d:ident => $body:expr, _ => $fallback:expr) => {
        with_dim!(@arms $dim, $d, $body, $fallback;
            1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17 18 19 20)
    };
    (@arms $dim:expr, $d:ident, $body:expr, $fallback:expr; $($n:literal)*) => {
        match $dim {
            $($n => {
                const $d: usize = $n;
                $body
            })*
            _ => $fallback,
        }
    };
}

fn kth_distances(points: &[f64], dim: usize, n: usize, k: usize) -> Vec<f64> {
    const _: () = assert!(BRUTE_FORCE_ABOVE == 20);
    with_dim!(dim, D => KdTree::<D>::build(points).all_kth_distances(k), _ => {
        let scan = Scan::new(points, dim);
        (0..n).map(|t| scan.kth_distance(&points[t * dim..(t + 1) * dim], k, t)).collect()
    })
}

/// Histogram over samples of the number of *other* points strictly within
/// `eps[t]` in the given subspace.
fn neighbour_histogram(points: &[f64], dim: usize, n: usize, eps: &[f64]) -> Vec<usize> {
    let mut hist = vec![0usize; n];
    let row = |t: usize| &points[t * dim..(t + 1) * dim];
    // The query point itself is at distance 0 and counted whenever eps > 0.
    let mut record = |t: usize, c: usize| hist[c - usize::from(eps[t] > 0.0)] += 1;
    if dim == 2 {
        for (t, c) in plane_counts(points, eps).into_iter().enumerate() {
            record(t, c);
        }
    } else if dim == 1 {
        let line = SortedLine::new(points);
        for t in 0..n {
            record(t, line.count_within(points[t], eps[t]));
        }
    } else {
        with_dim!(dim, D => {
            let tree = KdTree::<D>::build(points);
            for t in 0..n {
                record(t, tree.count_within(row(t), eps[t]));
            }
        }, _ => {
            let scan = Scan::new(points, dim);
            for t in 0..n {
                record(t, scan.count_within(row(t), eps[t]));
            }
        })
    }
    hist
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn canonical_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// Adds a perturbation of relative size [`JITTER`] to every entry.
///
/// The offset is a hash of the whole row, the row's occurrence number among
/// identical rows, and the entry's own value. It does not depend on row
/// order, so permuting samples permutes the jittered cloud. Two identical
/// columns stay identical, which keeps `I(X;Y|X)` at its exact tie-free value.
fn apply_jitter(points: &mut [f64], n: usize, d: usize) {
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let m = (0..n).fold(0.0_f64, |m, t| m.max(points[t * d + j].abs()));
            if m > 0.0 {
                m
            } else {
                1.0
            }
        })
        .collect();
    let hashes: Vec<u64> = points
        .chunks_exact(d)
        .map(|row| row.iter().fold(0x243f_6a88_85a3_08d3, |h, &v| splitmix64(h ^ canonical_bits(v))))
        .collect();
    let occurrence = occurrence_numbers(points, &hashes, d);
    for t in 0..n {
        let seed = splitmix64(hashes[t] ^ (occurrence[t] as u64).wrapping_mul(0xd6e8_feb8_6659_fd93));
        for j in 0..d {
            let v = points[t * d + j];
            let u = (splitmix64(seed ^ canonical_bits(v)) >> 11) as f64 / (1u64 << 53) as f64;
            points[t * d + j] = v + JITTER * scale[j] * (2.0 * u - 1.0);
        }
    }
}

/// For each row, how many identical rows precede it.
fn occurrence_numbers(points: &[f64], hashes: &[u64], d: usize) -> Vec<u32> {
    let mut sorted = hashes.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).all(|w| w[0] != w[1]) {
        return vec![0; hashes.len()];
    }
    let mut seen: HashMap<Vec<u64>, u32> = HashMap::new();
    points
        .chunks_exact(d)
        .map(|row| {
            let key: Vec<u64> = row.iter().map(|&v| canonical_bits(v)).collect();
            let c = seen.entry(key).or_insert(0);
            *c += 1;
            *c - 1
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn digamma_values() {
        let psi = digamma_table(10);
        assert!((psi[1] + EULER_GAMMA).abs() < 1e-15);
        assert!((psi[2] - (1.0 - EULER_GAMMA)).abs() < 1e-15);
        // ψ(10) = H_9 − γ
        let h9: f64 = (1..10).map(|i| 1.0 / i as f64).sum();
        assert!((psi[10] - (h9 - EULER_GAMMA)).abs() < 1e-14);
    }

    #[test]
    fn correlated_gaussian() {
        let n = 3000;
        let a = normals(n, 1);
        let b = normals(n, 2);
        let rho: f64 = 0.6;
        let y: Vec<f64> = a.iter().zip(&b).map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b).collect();
        let mi = estimate_mi(&[&a], &[&y], 3).unwrap();
        let truth = -0.5 * (1.0 - rho * rho).ln();
        assert!((mi - truth).abs() < 0.05, "{mi} vs {truth}");
    }

    #[test]
    fn empty_z_is_mi() {
        let a = normals(500, 3);
        let b = normals(500, 4);
        let mi = estimate_mi(&[&a], &[&b], 2).unwrap();
        let cmi = estimate_cmi(&[&a], &[&b], &[], 2).unwrap();
        assert_eq!(mi.to_bits(), cmi.to_bits());
    }

    #[test]
    fn duplicate_rows_do_not_crash() {
        let x = vec![1.0; 50];
        let y: Vec<f64> = (0..50).map(|i| (i % 3) as f64).collect();
        let v = estimate_mi(&[&x], &[&y], 2).unwrap();
        assert!(v.is_finite());
        let v = estimate_cmi(&[&x], &[&y], &[&x], 2).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn identical_columns_get_identical_jitter() {
        let a: Vec<f64> = (0..20).map(|i| ((i % 4) as f64).powi(2)).collect();
        let b = normals(20, 5);
        let c = SampleCloud::new(&[&a], &[&b], &[&a]).unwrap();
        for row in c.points().chunks_exact(3) {
            assert_eq!(row[0], row[2]);
        }
    }

    #[test]
    fn too_few_samples() {
        let a = [1.0, 2.0];
        assert!(estimate_mi(&[&a], &[&a], 2).is_err());
        assert!(estimate_mi(&[&a], &[&a], 0).is_err());
        assert!(estimate_mi(&[&a], &[&a[..1]], 1).is_err());
    }
}
