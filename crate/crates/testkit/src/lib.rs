//! Independent oracles for the test suites.
//!
//! Nothing here shares code with `hd-core`: projections are computed by
//! dense pseudo-inverses and closed-form series/parallel resistance
//! formulas, so agreement with the sparse solver is a real check.

use nalgebra::{DMatrix, DVector};

/// A finite graph `0..n` with an edge list and the ambient degree of each
/// vertex. Ambient edges that leave the graph end at a grounded vertex.
#[derive(Clone, Debug)]
pub struct DenseGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub full_degree: Vec<usize>,
}

impl DenseGraph {
    /// A graph with no ambient edges.
    pub fn closed(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut full_degree = vec![0; n];
        for &(i, j) in &edges {
            full_degree[i] += 1;
            full_degree[j] += 1;
        }
        DenseGraph { n, edges, full_degree }
    }

    fn internal_degree(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Rows: internal edges `(i, j)` as `v(j) - v(i)`, then (if `embedded`)
    /// one row `-v(x)` per ambient edge leaving `x`.
    pub fn gradient_matrix(&self, embedded: bool) -> DMatrix<f64> {
        let internal = self.internal_degree();
        let extra: usize = if embedded {
            (0..self.n).map(|x| self.full_degree[x] - internal[x]).sum()
        } else {
            0
        };
        let mut d = DMatrix::zeros(self.edges.len() + extra, self.n);
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            d[(k, i)] = -1.0;
            d[(k, j)] = 1.0;
        }
        if embedded {
            let mut row = self.edges.len();
            for x in 0..self.n {
                for _ in internal[x]..self.full_degree[x] {
                    d[(row, x)] = -1.0;
                    row += 1;
                }
            }
        }
        d
    }

    /// Orthogonal projection of `u` (one value per internal edge, zero on
    /// ambient edges) onto the column space of the gradient matrix, then
    /// restricted to internal edges.
    pub fn project(&self, u: &[f64], embedded: bool) -> Vec<f64> {
        assert_eq!(u.len(), self.edges.len());
        let d = self.gradient_matrix(embedded);
        let mut full = DVector::zeros(d.nrows());
        for (k, &x) in u.iter().enumerate() {
            full[k] = x;
        }
        let pinv = (d.transpose() * &d).pseudo_inverse(1e-10).expect("pseudo-inverse");
        let p = &d * (pinv * (d.transpose() * full));
        p.iter().take(self.edges.len()).copied().collect()
    }

    /// `<P chi_k, chi_k>` for internal edge `k`.
    pub fn edge_trace(&self, k: usize, embedded: bool) -> f64 {
        let mut u = vec![0.0; self.edges.len()];
        u[k] = 1.0;
        self.project(&u, embedded)[k]
    }

    /// Rank of the free gradient matrix, `n - components`.
    pub fn gradient_rank(&self) -> usize {
        self.gradient_matrix(false).rank(1e-9)
    }

    /// Dimension of the cycle space, `|E| - rank`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() - self.gradient_rank()
    }
}

/// Exact star score of an edge of the integer line at radius `r`.
pub fn line_star(r: usize) -> f64 {
    (2 * r + 2) as f64 / (2 * r + 3) as f64
}

/// Exact star score of an edge of the `d`-regular tree at radius `r`:
/// series/parallel reduction with every vertex beyond the window grounded.
pub fn tree_star(d: usize, r: usize) -> f64 {
    assert!(d >= 3);
    let mut resistance = 0.0;
    for _ in 0..=r {
        resistance = (1.0 + resistance) / (d - 1) as f64;
    }
    // both sides hang off the edge in series, in parallel with the edge itself
    2.0 * resistance / (1.0 + 2.0 * resistance)
}

/// Limit of [`tree_star`] as `r` grows.
pub fn tree_star_limit(d: usize) -> f64 {
    2.0 / d as f64
}

/// `(|V|, |sigma|)` of a radius-`r` ball in the square lattice.
pub fn square_ball_counts(r: usize) -> (usize, usize) {
    (2 * r * r + 2 * r + 1, 4 * r)
}

/// `(|V|, |E|, |sigma|)` of a radius-`r` ball in the `d`-regular tree.
pub fn tree_ball_counts(d: usize, r: usize) -> (usize, usize, usize) {
    let mut v = 1;
    let mut layer = d;
    for _ in 0..r {
        v += layer;
        layer *= d - 1;
    }
    (v, v - 1, d * (d - 1).pow(r as u32 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_and_square() {
        let tri = DenseGraph::closed(3, vec![(0, 1), (1, 2), (0, 2)]);
        assert!((tri.edge_trace(0, false) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(tri.cycle_rank(), 1);
        let sq = DenseGraph::closed(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]);
        assert!((sq.edge_trace(1, false) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn path_with_grounded_ends_matches_line_formula() {
        for r in 1..5 {
            // vertices -r..=r+1 of the line, both end vertices leak to ground
            let n = 2 * r + 2;
            let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            let mut g = DenseGraph::closed(n, edges);
            g.full_degree[0] += 1;
            g.full_degree[n - 1] += 1;
            assert!((g.edge_trace(r, true) - line_star(r)).abs() < 1e-10);
        }
    }

    #[test]
    fn tree_formula() {
        assert!((tree_star(3, 0) - 0.5).abs() < 1e-15);
        assert!((tree_star(3, 40) - tree_star_limit(3)).abs() < 1e-9);
        assert_eq!(tree_ball_counts(3, 2), (10, 9, 6));
        assert_eq!(square_ball_counts(2), (13, 8));
    }
}
