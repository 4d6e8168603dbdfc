//! Harmonic Dirichlet dimension of bounded-degree graphs, computed on
//! finite windows.
//!
//! The crate is layered: [`graph`] generates families and windows,
//! [`edge_space`] holds functions on vertices and oriented edges,
//! [`hodge`] solves the window Laplacians, [`dimension`] turns projections
//! into per-edge scores and [`quasi_iso`] checks maps between families.

pub mod dimension;
pub mod edge_space;
pub mod error;
pub mod graph;
pub mod hodge;
pub mod numeric;
pub mod quasi_iso;

pub use error::{Error, Result};
pub use graph::{FamilySpec, FiniteWindow, GraphFamily, OrientedEdge, VertexId};
