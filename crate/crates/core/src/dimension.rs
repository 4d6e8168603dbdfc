//! Per-edge projection traces and their window averages.
//!
//! For an edge `e` and radius `r`, let `B_r` be the set of vertices within
//! distance `r` of either endpoint of `e`. Then:
//!
//! * the star score is `<P chi_e, chi_e>` for the projection onto
//!   `{dv : supp(v) in B_r}` with the ambient differential (embedded
//!   Laplacian). These subspaces increase with `r` and exhaust the star
//!   space, so the score increases to its limit.
//! * the diamond score is `1 - <P chi_e, chi_e>` for the projection onto
//!   gradients of the induced subgraph on `B_r` (free Laplacian), i.e. the
//!   trace of the cycle-space projection of that subgraph. Cycle spaces of
//!   nested induced subgraphs are nested, so it also increases.
//! * the hd score is what remains, `1 - star - diamond`. It decreases in `r`
//!   and bounds the harmonic-Dirichlet trace from above.
//!
//! The star score equals the effective resistance across `e` when every
//! vertex outside `B_r` is grounded.

use rayon::prelude::*;
use serde::Serialize;

use crate::edge_space::{edge_indicator, inner};
use crate::error::{Error, Result};
use crate::graph::{ball, set_ball, FiniteWindow, GraphFamily, OrientedEdge, VertexId};
use crate::hodge::{project_star, LaplacianMode, SolveReport};
use crate::numeric;

/// Window radius multiplier used to pick score radii.
pub const DEFAULT_SCORE_RADIUS_FACTOR: usize = 4;

/// The induced window on the `r`-neighborhood of both endpoints of `e`.
pub fn score_window(family: &GraphFamily, e: &OrientedEdge, r: usize) -> Result<FiniteWindow> {
    if r == 0 {
        return Err(Error::InvalidArgument("score radius must be at least 1".into()));
    }
    if !family.is_edge(&e.tail, &e.head) {
        return Err(Error::MissingEdge(e.to_string()));
    }
    set_ball(family, &[e.tail, e.head], r)
}

/// Star, diamond and hd scores of one edge at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeScores {
    pub star: f64,
    pub diamond: f64,
    pub hd: f64,
    pub report: SolveReport,
}

fn projection_score(window: &FiniteWindow, e: &OrientedEdge, mode: LaplacianMode, tol: f64) -> Result<(f64, SolveReport)> {
    // scores are computed on the canonical orientation, which makes them
    // identical for e and its reversal
    let chi = edge_indicator(window, &e.canonical())?;
    let pr = project_star(window, &chi, mode, tol)?;
    Ok((pr.score, pr.report))
}

/// All three scores from a single window.
pub fn edge_scores(family: &GraphFamily, e: &OrientedEdge, r: usize, tol: f64) -> Result<EdgeScores> {
    let window = score_window(family, e, r)?;
    let (star, emb) = projection_score(&window, e, LaplacianMode::Embedded, tol)?;
    let (free, free_rep) = projection_score(&window, e, LaplacianMode::Free, tol)?;
    let diamond = 1.0 - free;
    Ok(EdgeScores { star, diamond, hd: 1.0 - star - diamond, report: emb.combine(&free_rep) })
}

/// Lower estimate of `<P_star chi_e, chi_e>` at radius `r`.
pub fn star_score(family: &GraphFamily, e: &OrientedEdge, r: usize, tol: f64) -> Result<f64> {
    let window = score_window(family, e, r)?;
    Ok(projection_score(&window, e, LaplacianMode::Embedded, tol)?.0)
}

/// Lower estimate of `<P_diamond chi_e, chi_e>` at radius `r`.
pub fn diamond_score(family: &GraphFamily, e: &OrientedEdge, r: usize, tol: f64) -> Result<f64> {
    let window = score_window(family, e, r)?;
    Ok(1.0 - projection_score(&window, e, LaplacianMode::Free, tol)?.0)
}

/// Upper estimate of `<P_dHD chi_e, chi_e>` at radius `r`.
pub fn hd_score(family: &GraphFamily, e: &OrientedEdge, r: usize, tol: f64) -> Result<f64> {
    Ok(edge_scores(family, e, r, tol)?.hd)
}

/// Scores of one edge along a radius schedule.
#[derive(Clone, Debug, Serialize)]
pub struct ScoreReport {
    pub edge: OrientedEdge,
    pub radii: Vec<usize>,
    pub star_embedded: Vec<f64>,
    pub diamond: Vec<f64>,
    pub hd: Vec<f64>,
    pub reports: Vec<SolveReport>,
}

fn check_increasing(radii: &[usize], what: &str) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} must not be empty")));
    }
    if radii[0] == 0 {
        return Err(Error::InvalidArgument(format!("{what} must be positive")));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

/// Scores of `e` at every radius of `radii` (computed in parallel, reported
/// in schedule order).
pub fn score_report(family: &GraphFamily, e: &OrientedEdge, radii: &[usize], tol: f64) -> Result<ScoreReport> {
    check_increasing(radii, "radii")?;
    let rows = radii
        .par_iter()
        .map(|&r| edge_scores(family, e, r, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreReport {
        edge: *e,
        radii: radii.to_vec(),
        star_embedded: rows.iter().map(|s| s.star).collect(),
        diamond: rows.iter().map(|s| s.diamond).collect(),
        hd: rows.iter().map(|s| s.hd).collect(),
        reports: rows.iter().map(|s| s.report).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    Star,
    Diamond,
    Hd,
    Full,
}

/// Window averages of the three traces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowDims {
    pub star: f64,
    pub diamond: f64,
    pub hd: f64,
}

impl WindowDims {
    pub fn get(&self, space: Space) -> f64 {
        match space {
            Space::Star => self.star,
            Space::Diamond => self.diamond,
            Space::Hd => self.hd,
            Space::Full => 1.0,
        }
    }
}

/// Scores of every window edge at score radius `r`, in window edge order.
pub fn window_edge_scores(family: &GraphFamily, window: &FiniteWindow, r: usize, tol: f64) -> Result<Vec<EdgeScores>> {
    (0..window.num_edges())
        .into_par_iter()
        .map(|k| edge_scores(family, &window.oriented_edge(k), r, tol))
        .collect()
}

/// Averages over the unoriented window edges of each per-edge score.
pub fn dims_window(family: &GraphFamily, window: &FiniteWindow, r: usize, tol: f64) -> Result<WindowDims> {
    let scores = window_edge_scores(family, window, r, tol)?;
    let m = scores.len() as f64;
    Ok(WindowDims {
        star: numeric::sum(scores.iter().map(|s| s.star)) / m,
        diamond: numeric::sum(scores.iter().map(|s| s.diamond)) / m,
        hd: numeric::sum(scores.iter().map(|s| s.hd)) / m,
    })
}

/// Per-edge trace of `space` averaged over the window.
pub fn dim_window(family: &GraphFamily, window: &FiniteWindow, space: Space, r: usize, tol: f64) -> Result<f64> {
    if space == Space::Full {
        // trace of the identity: <chi_e, chi_e> under the edge inner product
        let traces = (0..window.num_edges())
            .map(|k| {
                let chi = edge_indicator(window, &window.oriented_edge(k))?;
                inner(&chi, &chi)
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(numeric::sum(traces.iter().copied()) / traces.len() as f64);
    }
    Ok(dims_window(family, window, r, tol)?.get(space))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FolnerRow {
    pub radius: usize,
    pub num_vertices: usize,
    pub num_edges: usize,
    pub sigma_size: usize,
    pub ratio_v: f64,
    pub ratio_e: f64,
}

impl FolnerRow {
    pub fn of_window(radius: usize, w: &FiniteWindow) -> Self {
        let s = w.sigma_size();
        FolnerRow {
            radius,
            num_vertices: w.num_vertices(),
            num_edges: w.num_edges(),
            sigma_size: s,
            ratio_v: s as f64 / w.num_vertices() as f64,
            ratio_e: s as f64 / w.num_edges() as f64,
        }
    }
}

/// Boundary-to-volume ratios of balls around `center`.
pub fn folner_profile(family: &GraphFamily, center: &VertexId, radii: &[usize]) -> Result<Vec<FolnerRow>> {
    check_increasing(radii, "radii")?;
    radii
        .iter()
        .map(|&r| Ok(FolnerRow::of_window(r, &ball(family, center, r)?)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma3Check {
    /// Estimated trace of star + diamond (a lower estimate at finite `r`).
    pub lhs: f64,
    /// `1 - |sigma| / |E|`.
    pub rhs: f64,
    pub holds: bool,
}

/// Compares the star + diamond trace over a window with the isoperimetric
/// bound `1 - |sigma|/|E|`.
pub fn lemma3_check(family: &GraphFamily, window: &FiniteWindow, r: usize, tol: f64) -> Result<Lemma3Check> {
    let dims = dims_window(family, window, r, tol)?;
    let lhs = dims.star + dims.diamond;
    let rhs = 1.0 - window.sigma_size() as f64 / window.num_edges() as f64;
    Ok(Lemma3Check { lhs, rhs, holds: lhs >= rhs - tol })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Corollary4Row {
    pub window_radius: usize,
    pub score_radius: usize,
    pub hd_dim_estimate: f64,
    pub sigma_over_e: f64,
}

/// hd trace over balls of growing radius next to the `|sigma|/|E|` bound.
/// Each window edge is scored at `factor` times the window radius.
pub fn corollary4_table(
    family: &GraphFamily,
    center: &VertexId,
    window_radii: &[usize],
    factor: usize,
    tol: f64,
) -> Result<Vec<Corollary4Row>> {
    check_increasing(window_radii, "window radii")?;
    if factor == 0 {
        return Err(Error::InvalidArgument("score radius factor must be positive".into()));
    }
    window_radii
        .iter()
        .map(|&wr| {
            let window = ball(family, center, wr)?;
            let score_radius = factor * wr;
            let hd = dim_window(family, &window, Space::Hd, score_radius, tol)?;
            Ok(Corollary4Row {
                window_radius: wr,
                score_radius,
                hd_dim_estimate: hd,
                sigma_over_e: window.sigma_size() as f64 / window.num_edges() as f64,
            })
        })
        .collect()
}
