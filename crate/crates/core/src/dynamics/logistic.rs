//! Network of diffusively coupled logistic maps,
//! `F(x_i) = f(x_i) + k Σ_j A_ij (f(x_j) − f(x_i))` with `f(x) = a x (1 − x)`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GroundTruth, TimeSeriesSet};
use crate::basis::Monomial;
use crate::{Error, Result};

/// Directed 0/1 coupling matrix; row `i` lists the nodes driving node `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjacency {
    rows: Vec<Vec<usize>>,
}

/// Allowed in-degrees: `1 < D_ii ≤ 4`.
const MIN_DEGREE: usize = 2;
const MAX_DEGREE: usize = 4;

impl Adjacency {
    /// From neighbour lists. Self-loops and out-of-range indices are rejected.
    pub fn from_neighbors(rows: Vec<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            let mut sorted = r.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != r.len() || r.iter().any(|&j| j >= n || j == i) {
                return Err(Error::InvalidArgument(format!("bad neighbour list for node {i}")));
            }
        }
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r
            })
            .collect();
        Ok(Adjacency { rows })
    }

    /// Random graph with every in-degree drawn uniformly from {2, 3, 4}.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let degrees: Vec<usize> = (0..n).map(|_| rng.random_range(MIN_DEGREE..=MAX_DEGREE)).collect();
        Self::with_degrees_rng(&degrees, &mut rng)
    }

    /// Random graph with the given in-degrees.
    pub fn with_degrees(degrees: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::with_degrees_rng(degrees, &mut rng)
    }

    fn with_degrees_rng(degrees: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        let n = degrees.len();
        if n <= MAX_DEGREE {
            return Err(Error::InvalidArgument(format!("need more than {MAX_DEGREE} nodes, got {n}")));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, &d) in degrees.iter().enumerate() {
            if !(MIN_DEGREE..=MAX_DEGREE).contains(&d) {
                return Err(Error::InvalidArgument(format!("degree {d} outside 2..=4")));
            }
            // Sample among the other n - 1 nodes.
            let mut r: Vec<usize> = sample(rng, n - 1, d).into_iter().map(|j| if j >= i { j + 1 } else { j }).collect();
            r.sort_unstable();
            rows.push(r);
        }
        Ok(Adjacency { rows })
    }

    pub fn n_nodes(&self) -> usize {
        self.rows.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    fn check_degrees(&self) -> Result<()> {
        for i in 0..self.n_nodes() {
            let d = self.degree(i);
            if !(MIN_DEGREE..=MAX_DEGREE).contains(&d) {
                return Err(Error::InvalidArgument(format!("node {i} has degree {d}, expected 2..=4")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    /// Map parameter `a`.
    pub a: f64,
    /// Global coupling `k`.
    pub coupling: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { a: 4.0, coupling: 0.1 }
    }
}

impl LogisticParams {
    fn f(&self, x: f64) -> f64 {
        self.a * x * (1.0 - x)
    }

    /// One application of the coupled map.
    pub fn step(&self, adjacency: &Adjacency, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            let fi = self.f(x[i]);
            let mut coupling = 0.0;
            for &j in adjacency.neighbors(i) {
                coupling += self.f(x[j]) - fi;
            }
            out[i] = fi + self.coupling * coupling;
        }
    }
}

/// Iterates the network for `steps` samples (the first is `x0`). The series
/// has `dt = 1`. Leaving `[−bound, 1 + bound]` aborts.
pub fn simulate_logistic_network(
    params: &LogisticParams,
    adjacency: &Adjacency,
    x0: &[f64],
    steps: usize,
    bound: f64,
) -> Result<TimeSeriesSet> {
    let n = adjacency.n_nodes();
    adjacency.check_degrees()?;
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("{} initial values for {n} nodes", x0.len())));
    }
    if x0.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::InvalidArgument("initial values must lie in (0, 1)".into()));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument("at least two samples are required".into()));
    }
    let mut states = Vec::with_capacity(steps * n);
    states.extend_from_slice(x0);
    let mut cur = x0.to_vec();
    let mut next = vec![0.0; n];
    for step in 1..steps {
        params.step(adjacency, &cur, &mut next);
        if next.iter().any(|v| !v.is_finite() || *v < -bound || *v > 1.0 + bound) {
            return Err(Error::Diverged { step });
        }
        states.extend_from_slice(&next);
        std::mem::swap(&mut cur, &mut next);
    }
    let times = (0..steps).map(|t| t as f64).collect();
    TimeSeriesSet::new(times, states, n, 1.0)
}

/// Coefficients of `F(x_i)` in the degree-`max_degree` library over all nodes:
/// `a(1 − k d_i)` on `x_i`, `−a(1 − k d_i)` on `x_i²`, and `±k a` on `x_j`,
/// `x_j²` for each neighbour `j`.
pub fn logistic_ground_truth(params: &LogisticParams, adjacency: &Adjacency, max_degree: u32) -> Result<GroundTruth> {
    if max_degree < 2 {
        return Err(Error::InvalidArgument("the logistic map needs a degree-2 library".into()));
    }
    let n = adjacency.n_nodes();
    let var = |i| Monomial::variable(n, i);
    let mut terms = Vec::new();
    for i in 0..n {
        let own = params.a * (1.0 - params.coupling * adjacency.degree(i) as f64);
        terms.push((i, var(i), own));
        terms.push((i, var(i).times(&var(i)), -own));
        for &j in adjacency.neighbors(i) {
            let c = params.coupling * params.a;
            terms.push((i, var(j), c));
            terms.push((i, var(j).times(&var(j)), -c));
        }
    }
    GroundTruth::from_terms(n, n, max_degree, &terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis_matrix;

    #[test]
    fn uncoupled_network_is_scalar_iteration() {
        let adj = Adjacency::random(8, 3).unwrap();
        let p = LogisticParams { a: 3.7, coupling: 0.0 };
        let x0: Vec<f64> = (0..8).map(|i| 0.1 + 0.1 * i as f64).collect();
        let s = simulate_logistic_network(&p, &adj, &x0, 50, 0.0).unwrap();
        for i in 0..8 {
            let mut x = x0[i];
            for t in 0..50 {
                assert_eq!(s.state(t)[i].to_bits(), x.to_bits());
                x = p.a * x * (1.0 - x);
            }
        }
    }

    #[test]
    fn random_degrees_in_range() {
        let adj = Adjacency::random(50, 11).unwrap();
        for i in 0..50 {
            assert!((2..=4).contains(&adj.degree(i)));
            assert!(!adj.neighbors(i).contains(&i));
        }
    }

    #[test]
    fn parameter_count_for_twenty_nodes() {
        let adj = Adjacency::random(20, 5).unwrap();
        let g = logistic_ground_truth(&LogisticParams::default(), &adj, 2).unwrap();
        assert_eq!(g.n_candidates() * g.n_equations(), 4620);
        assert_eq!(g.nonzero_count(), 2 * 20 + 2 * adj.edge_count());
    }

    #[test]
    fn bad_degree_rejected() {
        let adj = Adjacency::from_neighbors(vec![vec![1], vec![0, 2], vec![0, 1]]).unwrap();
        let r = simulate_logistic_network(&LogisticParams::default(), &adj, &[0.2, 0.3, 0.4], 10, 0.0);
        assert!(r.is_err());
    }

    #[test]
    fn truth_matches_map() {
        let adj = Adjacency::random(10, 2).unwrap();
        let p = LogisticParams::default();
        let x0: Vec<f64> = (0..10).map(|i| 0.05 + 0.09 * i as f64).collect();
        let s = simulate_logistic_network(&p, &adj, &x0, 100, 0.0).unwrap();
        let g = logistic_ground_truth(&p, &adj, 2).unwrap();
        let phi = build_basis_matrix(&s, 2).unwrap();
        let pred = phi.values() * g.coefficients();
        for t in 0..99 {
            for i in 0..10 {
                assert!((pred[(t, i)] - s.state(t + 1)[i]).abs() < 1e-12);
            }
        }
    }
}
