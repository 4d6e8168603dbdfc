//! Matrix-free Laplacian solves and the finite Hodge decomposition.
//!
//! Two Laplacians act on potentials supported in a window:
//!
//! * [`LaplacianMode::Free`] uses window-internal degrees. It is `d*d` for
//!   the window viewed as a graph on its own; its kernel is the constants.
//! * [`LaplacianMode::Embedded`] uses ambient degrees. It is `d*d` for the
//!   ambient differential applied to potentials that vanish outside the
//!   window: edges leaving the window add degree but no coupling. It is
//!   positive definite as soon as the window has a boundary.
//!
//! Projections onto gradient spaces are computed from the normal equations
//! `L v = d*u`, solved by Jacobi-preconditioned conjugate gradients.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::edge_space::{codifferential, differential, EdgeFunction, VertexFunction};
use crate::error::{Error, Result};
use crate::graph::FiniteWindow;
use crate::numeric::{self, CompensatedSum};

/// Default relative residual tolerance for CG.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;
const ITERATIONS_PER_VERTEX: usize = 20;
const MIN_ITERATIONS: usize = 100;
const MAX_RESTARTS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaplacianMode {
    Free,
    Embedded,
}

impl LaplacianMode {
    fn degree(self, window: &FiniteWindow, i: usize) -> usize {
        match self {
            LaplacianMode::Free => window.internal_degree(i),
            LaplacianMode::Embedded => window.full_degree(i),
        }
    }

    /// Embedded mode on a window without boundary is the free Laplacian.
    fn effective(self, window: &FiniteWindow) -> Self {
        if self == LaplacianMode::Embedded && !window.has_boundary() {
            LaplacianMode::Free
        } else {
            self
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative residual `|b - L x| / |b|`, recomputed from scratch.
    pub residual: f64,
    pub converged: bool,
}

impl SolveReport {
    /// Sum of iterations, worst residual, all converged.
    pub fn combine(&self, other: &SolveReport) -> SolveReport {
        SolveReport {
            iterations: self.iterations + other.iterations,
            residual: self.residual.max(other.residual),
            converged: self.converged && other.converged,
        }
    }
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, relative residual {:e}, converged: {}",
            self.iterations, self.residual, self.converged
        )
    }
}

fn apply(window: &FiniteWindow, mode: LaplacianMode, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = CompensatedSum::new();
        acc.add(mode.degree(window, i) as f64 * x[i]);
        for inc in window.incident(i) {
            acc.add(-x[inc.neighbor]);
        }
        *o = acc.value();
    }
}

/// `(Lv)(x) = deg(x) v(x) - sum over window neighbors of v(y)`.
pub fn laplacian_apply<'w>(
    window: &'w FiniteWindow,
    v: &VertexFunction<'w>,
    mode: LaplacianMode,
) -> VertexFunction<'w> {
    let mut out = vec![0.0; window.num_vertices()];
    apply(window, mode, v.values(), &mut out);
    VertexFunction::from_raw(window, out)
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn true_residual(window: &FiniteWindow, mode: LaplacianMode, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; b.len()];
    apply(window, mode, x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

fn pcg(window: &FiniteWindow, mode: LaplacianMode, b: &[f64], tol: f64) -> (Vec<f64>, SolveReport) {
    let n = b.len();
    let bnorm = numeric::norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, SolveReport { iterations: 0, residual: 0.0, converged: true });
    }
    let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / mode.degree(window, i) as f64).collect();
    let max_iter = (ITERATIONS_PER_VERTEX * n).max(MIN_ITERATIONS);

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut restarts = 0;
    let mut rel;

    'outer: loop {
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        p.copy_from_slice(&z);
        let mut rz = numeric::dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            apply(window, mode, &p, &mut ap);
            let pap = numeric::dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            if numeric::norm(&r) / bnorm <= tol {
                r = true_residual(window, mode, b, &x);
                rel = numeric::norm(&r) / bnorm;
                if rel <= tol || restarts == MAX_RESTARTS {
                    break 'outer;
                }
                restarts += 1;
                continue 'outer;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = numeric::dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        r = true_residual(window, mode, b, &x);
        rel = numeric::norm(&r) / bnorm;
        break;
    }
    (x, SolveReport { iterations, residual: rel, converged: rel <= tol })
}

/// Solves `L v = rhs` by conjugate gradients to relative residual `tol`.
///
/// Free mode requires a zero-sum right-hand side and returns the zero-mean
/// solution. Embedded mode on a window without boundary falls back to free
/// mode, since both operators coincide there.
pub fn solve_laplacian<'w>(
    window: &'w FiniteWindow,
    rhs: &VertexFunction<'w>,
    mode: LaplacianMode,
    tol: f64,
) -> Result<(VertexFunction<'w>, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if !std::ptr::eq(window, rhs.window()) {
        return Err(Error::IncompatibleDomain);
    }
    let mode = mode.effective(window);
    let mut b = rhs.values().to_vec();
    if mode == LaplacianMode::Free {
        let total = numeric::sum(b.iter().copied());
        let scale = numeric::sum(b.iter().map(|x| x.abs()));
        if total.abs() > tol * scale.max(f64::MIN_POSITIVE) && total != 0.0 {
            return Err(Error::IncompatibleRhs { sum: total });
        }
        let mean = total / b.len() as f64;
        b.iter_mut().for_each(|x| *x -= mean);
    }
    let (mut x, report) = pcg(window, mode, &b, tol);
    if mode == LaplacianMode::Free {
        let mean = numeric::sum(x.iter().copied()) / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= mean);
    }
    if !report.converged {
        return Err(Error::SolverFailure(report));
    }
    Ok((VertexFunction::from_raw(window, x), report))
}

/// Orthogonal projection of an edge function onto window gradients.
#[derive(Clone, Debug)]
pub struct StarProjection<'w> {
    /// Minimizing potential (zero-mean in free mode).
    pub potential: VertexFunction<'w>,
    /// Window-internal part of the projected gradient.
    pub projection: EdgeFunction<'w>,
    /// `<P u, u>`.
    pub score: f64,
    /// `|u - P u|`, counting in embedded mode the edges that leave the
    /// window, where the projection equals `-v(x)` and `u` vanishes.
    pub residual_norm: f64,
    pub report: SolveReport,
}

/// Projects `u` onto `{dv : supp(v) in window}`, with `d` the window's own
/// differential (free) or the ambient one (embedded).
pub fn project_star<'w>(
    window: &'w FiniteWindow,
    u: &EdgeFunction<'w>,
    mode: LaplacianMode,
    tol: f64,
) -> Result<StarProjection<'w>> {
    if !std::ptr::eq(window, u.window()) {
        return Err(Error::IncompatibleDomain);
    }
    let rhs = codifferential(u);
    let (potential, report) = solve_laplacian(window, &rhs, mode, tol)?;
    let projection = differential(&potential);
    let score = numeric::dot(projection.values(), u.values());

    let mut acc = CompensatedSum::new();
    for (a, b) in u.values().iter().zip(projection.values()) {
        acc.add((a - b) * (a - b));
    }
    if mode.effective(window) == LaplacianMode::Embedded {
        for (i, v) in potential.values().iter().enumerate() {
            let outside = window.full_degree(i) - window.internal_degree(i);
            acc.add(outside as f64 * v * v);
        }
    }
    let residual_norm = acc.value().max(0.0).sqrt();
    Ok(StarProjection { potential, projection, score, residual_norm, report })
}

/// Gradient and cycle parts of an edge function on a finite window.
#[derive(Clone, Debug)]
pub struct HodgeParts<'w> {
    pub star: EdgeFunction<'w>,
    pub diamond: EdgeFunction<'w>,
    pub report: SolveReport,
}

/// Splits `u` into its projection onto window gradients and the remaining
/// flow, which lies in the cycle space of the window.
pub fn hodge_decompose_finite<'w>(
    window: &'w FiniteWindow,
    u: &EdgeFunction<'w>,
    tol: f64,
) -> Result<HodgeParts<'w>> {
    let proj = project_star(window, u, LaplacianMode::Free, tol)?;
    let diamond = u.sub(&proj.projection)?;
    Ok(HodgeParts { star: proj.projection, diamond, report: proj.report })
}

/// Dimension of the cycle space, `|E| - |V| + 1`.
pub fn cycle_rank(window: &FiniteWindow) -> usize {
    window.num_edges() + 1 - window.num_vertices()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge_space::{edge_indicator, inner, is_flow};
    use crate::graph::{ball, induced_window, square_box, FamilySpec, GraphFamily, OrientedEdge, VertexId};
    use approx::assert_abs_diff_eq;

    fn z(d: usize) -> GraphFamily {
        GraphFamily::new(FamilySpec::Lattice(d)).unwrap()
    }

    fn p(c: &[i32]) -> VertexId {
        VertexId::point(c)
    }

    #[test]
    fn laplacian_examples() {
        let f = z(1);
        let w = ball(&f, &p(&[0]), 1).unwrap();
        let one = VertexFunction::constant(&w, 1.0);
        let free = laplacian_apply(&w, &one, LaplacianMode::Free);
        assert!(free.values().iter().all(|&x| x == 0.0));
        let emb = laplacian_apply(&w, &one, LaplacianMode::Embedded);
        assert_eq!(emb.values(), &[1.0, 0.0, 1.0]);

        let e = induced_window(&f, &[p(&[0]), p(&[1])]).unwrap();
        let v = VertexFunction::new(&e, vec![1.0, 0.0]).unwrap();
        assert_eq!(laplacian_apply(&e, &v, LaplacianMode::Free).values(), &[1.0, -1.0]);
    }

    #[test]
    fn solve_examples() {
        let f = z(1);
        let e = induced_window(&f, &[p(&[0]), p(&[1])]).unwrap();
        let (v, rep) =
            solve_laplacian(&e, &VertexFunction::zeros(&e), LaplacianMode::Free, 1e-12).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));
        assert!(rep.converged);

        let rhs = VertexFunction::new(&e, vec![1.0, -1.0]).unwrap();
        let (v, _) = solve_laplacian(&e, &rhs, LaplacianMode::Free, 1e-12).unwrap();
        assert_abs_diff_eq!(v.values()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v.values()[1], -0.5, epsilon = 1e-12);

        let bad = VertexFunction::new(&e, vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            solve_laplacian(&e, &bad, LaplacianMode::Free, 1e-10),
            Err(Error::IncompatibleRhs { .. })
        ));
    }

    #[test]
    fn embedded_solve_matches_dense_three_by_three() {
        // diag(2,2,2) minus path adjacency, rhs = e_center:
        // inverse column for the center is (1/2, 1, 1/2)
        let f = z(1);
        let w = ball(&f, &p(&[0]), 1).unwrap();
        let rhs = VertexFunction::indicator(&w, &[p(&[0])]);
        let (v, _) = solve_laplacian(&w, &rhs, LaplacianMode::Embedded, 1e-13).unwrap();
        for (got, want) in v.values().iter().zip([0.5, 1.0, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn star_projection_is_idempotent_on_gradients() {
        let f = z(2);
        let w = ball(&f, &p(&[0, 0]), 3).unwrap();
        let v0 = VertexFunction::from_fn(&w, |x| {
            let c = x.as_point().unwrap().coords();
            if x.as_point().unwrap().l1_norm() < 3 { (c[0] * 2 - c[1]) as f64 } else { 0.0 }
        });
        let u = differential(&v0);
        for mode in [LaplacianMode::Free, LaplacianMode::Embedded] {
            let pr = project_star(&w, &u, mode, 1e-12).unwrap();
            let diff = u.sub(&pr.projection).unwrap();
            assert!(diff.norm() < 1e-9, "{mode:?}: {}", diff.norm());
            assert_abs_diff_eq!(pr.score, inner(&u, &u).unwrap(), epsilon = 1e-9);
            assert!(pr.residual_norm < 1e-9);
        }
    }

    #[test]
    fn cycles_give_effective_resistance() {
        for (n, want) in [(3usize, 2.0 / 3.0), (4, 0.75)] {
            let c = GraphFamily::cycle(n).unwrap();
            let w = ball(&c, &c.origin(), n).unwrap();
            let chi = edge_indicator(&w, &w.oriented_edge(0)).unwrap();
            let pr = project_star(&w, &chi, LaplacianMode::Free, 1e-12).unwrap();
            assert_abs_diff_eq!(pr.score, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn triangle_decomposition() {
        let c = GraphFamily::cycle(3).unwrap();
        let w = ball(&c, &c.origin(), 1).unwrap();
        let chi = edge_indicator(&w, &w.oriented_edge(0)).unwrap();
        let parts = hodge_decompose_finite(&w, &chi, 1e-12).unwrap();
        assert_abs_diff_eq!(inner(&parts.star, &parts.star).unwrap(), 2.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(inner(&parts.diamond, &parts.diamond).unwrap(), 1.0 / 3.0, epsilon = 1e-10);
        assert!(is_flow(&parts.diamond, false, 1e-10).holds);
    }

    #[test]
    fn acyclic_windows_have_no_diamond_part() {
        let t = GraphFamily::new(FamilySpec::Tree(3)).unwrap();
        let w = ball(&t, &t.origin(), 3).unwrap();
        let u = EdgeFunction::from_fn(&w, |e| (e.tail.to_string().len() as f64).sin());
        let parts = hodge_decompose_finite(&w, &u, 1e-12).unwrap();
        assert!(parts.diamond.norm() < 1e-9);
        assert_eq!(cycle_rank(&w), 0);
    }

    #[test]
    fn cycle_ranks() {
        let c = GraphFamily::cycle(3).unwrap();
        assert_eq!(cycle_rank(&ball(&c, &c.origin(), 1).unwrap()), 1);
        assert_eq!(cycle_rank(&ball(&z(1), &p(&[0]), 5).unwrap()), 0);
        for n in 2..7 {
            assert_eq!(cycle_rank(&square_box(&z(2), (0, 0), n).unwrap()), (n - 1) * (n - 1));
        }
    }

    #[test]
    fn free_score_dominates_embedded_score() {
        for fam in [z(2), GraphFamily::new(FamilySpec::DiagLattice).unwrap()] {
            let w = ball(&fam, &fam.origin(), 4).unwrap();
            for k in 0..w.num_edges() {
                let chi = edge_indicator(&w, &w.oriented_edge(k)).unwrap();
                let free = project_star(&w, &chi, LaplacianMode::Free, 1e-12).unwrap().score;
                let emb = project_star(&w, &chi, LaplacianMode::Embedded, 1e-12).unwrap().score;
                assert!(free >= emb - 1e-10, "edge {k}: free {free} < embedded {emb}");
            }
        }
    }

    #[test]
    fn embedded_residual_counts_outgoing_edges() {
        let f = z(1);
        let w = ball(&f, &p(&[0]), 1).unwrap();
        let chi = edge_indicator(&w, &OrientedEdge::new(p(&[0]), p(&[1]))).unwrap();
        let pr = project_star(&w, &chi, LaplacianMode::Embedded, 1e-13).unwrap();
        // |u - Pu|^2 = |u|^2 - <Pu, u>
        assert_abs_diff_eq!(pr.residual_norm.powi(2), 1.0 - pr.score, epsilon = 1e-12);
        assert_abs_diff_eq!(pr.score, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn report_json_fields() {
        let r = SolveReport { iterations: 7, residual: 1e-12, converged: true };
        let v = serde_json::to_value(r).unwrap();
        assert_eq!(v, serde_json::json!({"iterations": 7, "residual": 1e-12, "converged": true}));
    }
}
