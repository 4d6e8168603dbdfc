//! Vertex and edge functions on a window, the differential `d`, the
//! codifferential `d*`, and the half-weighted inner product on oriented
//! edges.
//!
//! An [`EdgeFunction`] stores one value per canonically oriented edge; the
//! value on the reversed orientation is the negation, so antisymmetry holds
//! by construction. Since each unoriented edge appears twice in the oriented
//! sum, `1/2 * sum over oriented edges` equals the plain sum over canonical
//! edges, which is what [`inner`] computes.

use std::io::{Read, Write};
use std::ptr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{FiniteWindow, GraphFamily, OrientedEdge, VertexId};
use crate::numeric::{self, CompensatedSum};

/// Default absolute tolerance for flow and harmonicity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

fn same_window(a: &FiniteWindow, b: &FiniteWindow) -> Result<()> {
    if ptr::eq(a, b) {
        Ok(())
    } else {
        Err(Error::IncompatibleDomain)
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidArgument(format!("non-finite value at position {i}"))),
        None => Ok(()),
    }
}

/// A real function on the vertices of a window, zero outside it.
#[derive(Clone, Debug)]
pub struct VertexFunction<'w> {
    window: &'w FiniteWindow,
    values: Vec<f64>,
}

impl<'w> VertexFunction<'w> {
    pub fn new(window: &'w FiniteWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} vertices",
                values.len(),
                window.num_vertices()
            )));
        }
        check_finite(&values)?;
        Ok(VertexFunction { window, values })
    }

    pub(crate) fn from_raw(window: &'w FiniteWindow, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), window.num_vertices());
        VertexFunction { window, values }
    }

    pub fn zeros(window: &'w FiniteWindow) -> Self {
        Self::constant(window, 0.0)
    }

    pub fn constant(window: &'w FiniteWindow, c: f64) -> Self {
        VertexFunction { window, values: vec![c; window.num_vertices()] }
    }

    pub fn from_fn(window: &'w FiniteWindow, f: impl Fn(&VertexId) -> f64) -> Self {
        VertexFunction { window, values: window.vertices().iter().map(f).collect() }
    }

    /// Indicator of `set` (members outside the window are ignored).
    pub fn indicator(window: &'w FiniteWindow, set: &[VertexId]) -> Self {
        let mut values = vec![0.0; window.num_vertices()];
        for v in set {
            if let Some(i) = window.index_of(v) {
                values[i] = 1.0;
            }
        }
        VertexFunction { window, values }
    }

    pub fn window(&self) -> &'w FiniteWindow {
        self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at `x`, zero outside the window.
    pub fn at(&self, x: &VertexId) -> f64 {
        self.window.index_of(x).map_or(0.0, |i| self.values[i])
    }

    pub fn support(&self) -> Vec<VertexId> {
        (0..self.values.len())
            .filter(|&i| self.values[i] != 0.0)
            .map(|i| self.window.vertex(i))
            .collect()
    }

    /// `alpha * self + other`.
    pub fn axpy(&self, alpha: f64, other: &VertexFunction<'w>) -> Result<Self> {
        same_window(self.window, other.window)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + b).collect();
        Ok(VertexFunction { window: self.window, values })
    }

    /// Sum of squares over the window vertices.
    pub fn l2_norm_squared(&self) -> f64 {
        numeric::dot(&self.values, &self.values)
    }

    /// Rows `id,value` in vertex order.
    pub fn write_csv<W: Write>(&self, family: &GraphFamily, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["id", "value"])?;
        for (v, x) in self.window.vertices().iter().zip(&self.values) {
            wtr.write_record([family.format_vertex(v), x.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads `id,value` rows; vertices not listed get zero.
    pub fn read_csv<R: Read>(window: &'w FiniteWindow, family: &GraphFamily, input: R) -> Result<Self> {
        let mut values = vec![0.0; window.num_vertices()];
        let mut rdr = csv::Reader::from_reader(input);
        for row in rdr.records() {
            let row = row?;
            let v = family.parse_vertex(row.get(0).unwrap_or(""))?;
            let i = window
                .index_of(&v)
                .ok_or_else(|| Error::InvalidArgument(format!("vertex {v} outside the window")))?;
            values[i] = parse_value(row.get(1))?;
        }
        Self::new(window, values)
    }
}

fn parse_value(field: Option<&str>) -> Result<f64> {
    let s = field.unwrap_or("").trim();
    s.parse().map_err(|_| Error::Parse(format!("bad value {s:?}")))
}

/// An antisymmetric real function on the oriented edges of a window.
#[derive(Clone, Debug)]
pub struct EdgeFunction<'w> {
    window: &'w FiniteWindow,
    values: Vec<f64>,
}

impl<'w> EdgeFunction<'w> {
    /// `values[k]` is the value on the canonical orientation of edge `k`.
    pub fn new(window: &'w FiniteWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.num_edges() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} edges",
                values.len(),
                window.num_edges()
            )));
        }
        check_finite(&values)?;
        Ok(EdgeFunction { window, values })
    }

    pub fn zeros(window: &'w FiniteWindow) -> Self {
        EdgeFunction { window, values: vec![0.0; window.num_edges()] }
    }

    /// Builds from a function of the canonical orientation of each edge.
    pub fn from_fn(window: &'w FiniteWindow, f: impl Fn(&OrientedEdge) -> f64) -> Self {
        let values = (0..window.num_edges()).map(|k| f(&window.oriented_edge(k))).collect();
        EdgeFunction { window, values }
    }

    pub fn window(&self) -> &'w FiniteWindow {
        self.window
    }

    /// Values on canonical orientations, in edge order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at an oriented edge; zero if it is not a window edge.
    pub fn at(&self, e: &OrientedEdge) -> f64 {
        self.window.find_edge(e).map_or(0.0, |(k, sign)| sign * self.values[k])
    }

    /// Value on the oriented edge from vertex index `i` to `j`.
    pub fn at_indices(&self, i: usize, j: usize) -> f64 {
        match self.window.edge_between(i, j) {
            Some(k) if i < j => self.values[k],
            Some(k) => -self.values[k],
            None => 0.0,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        EdgeFunction { window: self.window, values: self.values.iter().map(|x| alpha * x).collect() }
    }

    pub fn add(&self, other: &EdgeFunction<'w>) -> Result<Self> {
        same_window(self.window, other.window)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(EdgeFunction { window: self.window, values })
    }

    pub fn sub(&self, other: &EdgeFunction<'w>) -> Result<Self> {
        same_window(self.window, other.window)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(EdgeFunction { window: self.window, values })
    }

    /// Pointwise product with a 0/1 edge mask.
    pub fn masked(&self, mask: &EdgeMask) -> Result<Self> {
        if mask.0.len() != self.values.len() {
            return Err(Error::IncompatibleDomain);
        }
        let values = self
            .values
            .iter()
            .zip(&mask.0)
            .map(|(x, &keep)| if keep { *x } else { 0.0 })
            .collect();
        Ok(EdgeFunction { window: self.window, values })
    }

    pub fn norm(&self) -> f64 {
        numeric::norm(&self.values)
    }

    /// Rows `tail,head,value` over canonical edges in vertex order.
    pub fn write_csv<W: Write>(&self, family: &GraphFamily, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["tail", "head", "value"])?;
        for (k, x) in self.values.iter().enumerate() {
            let e = self.window.oriented_edge(k);
            wtr.write_record([family.format_vertex(&e.tail), family.format_vertex(&e.head), x.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads `tail,head,value` rows in either orientation; unlisted edges
    /// get zero.
    pub fn read_csv<R: Read>(window: &'w FiniteWindow, family: &GraphFamily, input: R) -> Result<Self> {
        let mut values = vec![0.0; window.num_edges()];
        let mut rdr = csv::Reader::from_reader(input);
        for row in rdr.records() {
            let row = row?;
            let tail = family.parse_vertex(row.get(0).unwrap_or(""))?;
            let head = family.parse_vertex(row.get(1).unwrap_or(""))?;
            let e = OrientedEdge::new(tail, head);
            let (k, sign) = window.find_edge(&e).ok_or_else(|| Error::MissingEdge(e.to_string()))?;
            values[k] = sign * parse_value(row.get(2))?;
        }
        Self::new(window, values)
    }
}

/// The differential `(dv)(x, y) = v(y) - v(x)` on window edges.
pub fn differential<'w>(v: &VertexFunction<'w>) -> EdgeFunction<'w> {
    let w = v.window;
    let values = w.edges().iter().map(|&(i, j)| v.values[j] - v.values[i]).collect();
    EdgeFunction { window: w, values }
}

/// The codifferential `(d*u)(x) = sum over window neighbors y of u(y, x)`.
pub fn codifferential<'w>(u: &EdgeFunction<'w>) -> VertexFunction<'w> {
    let w = u.window;
    let values = (0..w.num_vertices())
        .map(|x| {
            let mut acc = CompensatedSum::new();
            for inc in w.incident(x) {
                // u(y, x) is the stored value when y < x
                let val = u.values[inc.edge];
                acc.add(if inc.neighbor < x { val } else { -val });
            }
            acc.value()
        })
        .collect();
    VertexFunction { window: w, values }
}

/// `<u, w> = 1/2 sum over oriented edges of u(e) w(e)`.
pub fn inner(u: &EdgeFunction<'_>, w: &EdgeFunction<'_>) -> Result<f64> {
    same_window(u.window, w.window)?;
    Ok(numeric::dot(&u.values, &w.values))
}

/// The element mapping `e` to 1, its reversal to -1, everything else to 0.
pub fn edge_indicator<'w>(window: &'w FiniteWindow, e: &OrientedEdge) -> Result<EdgeFunction<'w>> {
    let (k, sign) = window.find_edge(e).ok_or_else(|| Error::MissingEdge(e.to_string()))?;
    let mut values = vec![0.0; window.num_edges()];
    values[k] = sign;
    Ok(EdgeFunction { window, values })
}

/// Per-edge 0/1 mask, in window edge order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMask(pub Vec<bool>);

impl EdgeMask {
    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

/// Characteristic function of the edges with both endpoints in `a`.
pub fn chi(window: &FiniteWindow, a: &[VertexId]) -> EdgeMask {
    let mut inside = vec![false; window.num_vertices()];
    for v in a {
        if let Some(i) = window.index_of(v) {
            inside[i] = true;
        }
    }
    EdgeMask(window.edges().iter().map(|&(i, j)| inside[i] && inside[j]).collect())
}

/// Outcome of a flow or harmonicity check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub max_residual: f64,
}

/// Whether `d*u` vanishes (within `tol`) at every checked vertex;
/// `interior_only` skips the boundary vertices.
pub fn is_flow(u: &EdgeFunction<'_>, interior_only: bool, tol: f64) -> Check {
    let w = u.window;
    let div = codifferential(u);
    let max_residual = (0..w.num_vertices())
        .filter(|&i| !(interior_only && w.is_boundary(i)))
        .map(|i| div.values[i].abs())
        .fold(0.0, f64::max);
    Check { holds: max_residual <= tol, max_residual }
}

/// Whether `v(x)` equals the mean of its neighbors' values at every checked
/// vertex. The mean divides by the ambient degree; at boundary vertices
/// (only checked when `interior_only` is false) the outside neighbors
/// contribute zero.
pub fn is_harmonic(v: &VertexFunction<'_>, interior_only: bool, tol: f64) -> Check {
    let w = v.window;
    let max_residual = (0..w.num_vertices())
        .filter(|&i| !(interior_only && w.is_boundary(i)))
        .map(|i| {
            let s = numeric::sum(w.incident(i).iter().map(|inc| v.values[inc.neighbor]));
            (v.values[i] - s / w.full_degree(i) as f64).abs()
        })
        .fold(0.0, f64::max);
    Check { holds: max_residual <= tol, max_residual }
}

/// Dirichlet energy `<dv, dv>` over window edges.
pub fn energy(v: &VertexFunction<'_>) -> f64 {
    let dv = differential(v);
    numeric::dot(&dv.values, &dv.values)
}
