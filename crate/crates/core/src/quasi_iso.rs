//! Quasi-isomorphisms between graph families and the inequalities they
//! satisfy on Dirichlet functions.
//!
//! Everything here is certified on finite windows. The constants in the
//! energy inequalities are built from explicit path systems: each source
//! edge `(x, y)` (or each vertex `x` for a wobbling) is assigned a fixed
//! shortest path from `f(x)` to `f(y)` (to `f(x)`), and the constant is the
//! longest path length times the largest number of paths through a single
//! edge. Cauchy-Schwarz along each path then gives the inequality exactly,
//! so no tested instance can exceed it.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::edge_space::{chi, differential, EdgeFunction, EdgeMask, VertexFunction};
use crate::error::{Error, Result};
use crate::graph::{distances_from, distances_from_set, neighborhood, FamilySpec, FiniteWindow, GraphFamily, OrientedEdge, Point, VertexId};
use crate::hodge::{solve_laplacian, LaplacianMode};
use crate::numeric;

/// Cutoff used for displacement searches when the caller gives none.
pub const DEFAULT_CUTOFF: usize = 64;

type MapFn = Arc<dyn Fn(&VertexId) -> VertexId + Send + Sync>;

#[derive(Clone)]
enum MapKind {
    Identity,
    Translate(Vec<i32>),
    Coarsen,
    ParityRound,
    Dilate(i32),
    Inclusion,
    Custom(MapFn),
}

/// A vertex map between two families with a claimed distortion `k >= 1`.
#[derive(Clone)]
pub struct QuasiMap {
    name: String,
    source: GraphFamily,
    target: GraphFamily,
    kind: MapKind,
    claimed_distortion: f64,
}

impl fmt::Debug for QuasiMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuasiMap")
            .field("name", &self.name)
            .field("source", &self.source.name())
            .field("target", &self.target.name())
            .field("claimed_distortion", &self.claimed_distortion)
            .finish()
    }
}

fn point_dim(family: &GraphFamily) -> Option<usize> {
    family.origin().as_point().map(Point::dim)
}

fn lattice_dim(family: &GraphFamily) -> Result<usize> {
    match FamilySpec::parse(family.name(), None) {
        Ok(FamilySpec::Lattice(d)) => Ok(d),
        _ => Err(Error::InvalidArgument(format!("{} is not a lattice family", family.name()))),
    }
}

fn map_coords(p: &Point, f: impl Fn(i32) -> i32) -> VertexId {
    let c: Vec<i32> = p.coords().iter().map(|&x| f(x)).collect();
    VertexId::point(&c)
}

impl QuasiMap {
    pub fn identity(family: &GraphFamily) -> Self {
        QuasiMap {
            name: "identity".into(),
            source: family.clone(),
            target: family.clone(),
            kind: MapKind::Identity,
            claimed_distortion: 1.0,
        }
    }

    /// Translation of a lattice by `shift`.
    pub fn translation(family: &GraphFamily, shift: &[i32]) -> Result<Self> {
        let d = lattice_dim(family)?;
        if shift.len() != d {
            return Err(Error::InvalidArgument(format!("shift has {} coordinates, lattice has {d}", shift.len())));
        }
        Ok(QuasiMap {
            name: "translate".into(),
            source: family.clone(),
            target: family.clone(),
            kind: MapKind::Translate(shift.to_vec()),
            claimed_distortion: 1.0,
        })
    }

    /// `x -> floor(x / 2)` coordinatewise on a lattice.
    pub fn coarsening(family: &GraphFamily) -> Result<Self> {
        lattice_dim(family)?;
        Ok(QuasiMap {
            name: "coarsen".into(),
            source: family.clone(),
            target: family.clone(),
            kind: MapKind::Coarsen,
            claimed_distortion: 2.0,
        })
    }

    /// `x -> 2 floor(x / 2)` coordinatewise on a lattice: a wobbling.
    pub fn parity_rounding(family: &GraphFamily) -> Result<Self> {
        lattice_dim(family)?;
        Ok(QuasiMap {
            name: "parity".into(),
            source: family.clone(),
            target: family.clone(),
            kind: MapKind::ParityRound,
            claimed_distortion: 2.0,
        })
    }

    /// `x -> m x` coordinatewise on a lattice; its image misses vertices.
    pub fn dilation(family: &GraphFamily, factor: i32) -> Result<Self> {
        lattice_dim(family)?;
        if factor < 1 {
            return Err(Error::InvalidArgument(format!("dilation factor {factor} must be positive")));
        }
        Ok(QuasiMap {
            name: format!("dilate{factor}"),
            source: family.clone(),
            target: family.clone(),
            kind: MapKind::Dilate(factor),
            claimed_distortion: factor as f64,
        })
    }

    /// Identity on coordinates between two families on the same point set
    /// (e.g. `z2` and `diag`).
    pub fn inclusion(source: &GraphFamily, target: &GraphFamily, claimed_distortion: f64) -> Result<Self> {
        match (point_dim(source), point_dim(target)) {
            (Some(a), Some(b)) if a == b => {}
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "{} and {} do not share a point set",
                    source.name(),
                    target.name()
                )))
            }
        }
        Ok(QuasiMap {
            name: format!("{}_to_{}", source.name(), target.name()),
            source: source.clone(),
            target: target.clone(),
            kind: MapKind::Inclusion,
            claimed_distortion,
        })
    }

    pub fn custom(
        name: &str,
        source: &GraphFamily,
        target: &GraphFamily,
        claimed_distortion: f64,
        f: impl Fn(&VertexId) -> VertexId + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(claimed_distortion >= 1.0) {
            return Err(Error::InvalidArgument("claimed distortion must be at least 1".into()));
        }
        Ok(QuasiMap {
            name: name.into(),
            source: source.clone(),
            target: target.clone(),
            kind: MapKind::Custom(Arc::new(f)),
            claimed_distortion,
        })
    }

    /// Built-in maps by name, on `lattice` (which must be a lattice family)
    /// except for the `z2_to_diag` / `diag_to_z2` inclusions.
    pub fn builtin(name: &str, lattice: &GraphFamily) -> Result<Self> {
        let z2 = || GraphFamily::new(FamilySpec::Lattice(2));
        let diag = || GraphFamily::new(FamilySpec::DiagLattice);
        match name {
            "identity" => {
                lattice_dim(lattice)?;
                Ok(QuasiMap::identity(lattice))
            }
            "translate" => {
                let d = lattice_dim(lattice)?;
                let shift: Vec<i32> = (0..d as i32).map(|i| if i % 2 == 0 { 3 } else { -2 }).collect();
                QuasiMap::translation(lattice, &shift)
            }
            "coarsen" => QuasiMap::coarsening(lattice),
            "parity" => QuasiMap::parity_rounding(lattice),
            "dilate" => QuasiMap::dilation(lattice, 2),
            "z2_to_diag" => QuasiMap::inclusion(&z2()?, &diag()?, 2.0),
            "diag_to_z2" => QuasiMap::inclusion(&diag()?, &z2()?, 2.0),
            other => Err(Error::InvalidArgument(format!("unknown map {other:?}"))),
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 7] =
        ["identity", "translate", "coarsen", "parity", "dilate", "z2_to_diag", "diag_to_z2"];

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &GraphFamily {
        &self.source
    }

    pub fn target(&self) -> &GraphFamily {
        &self.target
    }

    pub fn claimed_distortion(&self) -> f64 {
        self.claimed_distortion
    }

    /// Whether the map moves every vertex a bounded distance. Coarsenings
    /// and dilations are endomaps whose displacement grows with `|x|`;
    /// custom endomaps are trusted to be wobblings.
    pub fn is_wobbling(&self) -> bool {
        self.is_endomap() && !matches!(self.kind, MapKind::Coarsen | MapKind::Dilate(_))
    }

    pub fn is_endomap(&self) -> bool {
        self.source.name() == self.target.name()
    }

    pub fn apply(&self, x: &VertexId) -> VertexId {
        match (&self.kind, x) {
            (MapKind::Identity | MapKind::Inclusion, _) => *x,
            (MapKind::Translate(t), VertexId::Point(p)) => {
                let c: Vec<i32> = p.coords().iter().zip(t).map(|(a, b)| a + b).collect();
                VertexId::point(&c)
            }
            (MapKind::Coarsen, VertexId::Point(p)) => map_coords(p, |c| c.div_euclid(2)),
            (MapKind::ParityRound, VertexId::Point(p)) => map_coords(p, |c| 2 * c.div_euclid(2)),
            (MapKind::Dilate(m), VertexId::Point(p)) => map_coords(p, |c| m * c),
            (MapKind::Custom(f), _) => f(x),
            _ => panic!("map {} cannot be applied to {x}", self.name),
        }
    }

    /// `f o g`, with claimed distortion the product of the two.
    pub fn compose(&self, g: &QuasiMap) -> Result<QuasiMap> {
        if g.target.name() != self.source.name() {
            return Err(Error::InvalidArgument(format!(
                "cannot compose {} after {}: families differ",
                self.name, g.name
            )));
        }
        let (f, g2) = (self.clone(), g.clone());
        QuasiMap::custom(
            &format!("{}.{}", self.name, g.name),
            &g.source,
            &self.target,
            self.claimed_distortion * g.claimed_distortion,
            move |x| f.apply(&g2.apply(x)),
        )
    }

    /// A quasi-inverse on the image of `window`: each image vertex goes to
    /// its smallest preimage in the window (vertex order), every other
    /// target vertex to the preimage of its nearest image vertex. The
    /// nearest-vertex table covers target vertices within `reach` of the
    /// image; farther vertices are sent to the window's first vertex.
    pub fn quasi_inverse(&self, window: &FiniteWindow, reach: usize) -> Result<QuasiMap> {
        let mut preimage: FxHashMap<VertexId, VertexId> = FxHashMap::default();
        for x in window.vertices() {
            preimage.entry(self.apply(x)).or_insert(*x);
        }
        let mut images: Vec<VertexId> = preimage.keys().copied().collect();
        images.sort_unstable();
        // multi-source BFS in image order resolves ties by vertex order
        let mut nearest: FxHashMap<VertexId, VertexId> = FxHashMap::default();
        let mut queue = VecDeque::new();
        for y in &images {
            nearest.insert(*y, preimage[y]);
            queue.push_back((*y, 0usize));
        }
        let mut buf = Vec::new();
        while let Some((y, dist)) = queue.pop_front() {
            if dist == reach {
                continue;
            }
            self.target.neighbors(&y, &mut buf);
            for z in &buf {
                if !nearest.contains_key(z) {
                    nearest.insert(*z, nearest[&y]);
                    queue.push_back((*z, dist + 1));
                }
            }
        }
        let fallback = window.vertex(0);
        let k = self.claimed_distortion;
        QuasiMap::custom(
            &format!("{}_inverse", self.name),
            &self.target,
            &self.source,
            2.0 * k * k,
            move |y| nearest.get(y).copied().unwrap_or(fallback),
        )
    }
}

/// Outcome of an exhaustive distortion measurement on a window.
#[derive(Clone, Debug, Serialize)]
pub struct DistortionEstimate {
    /// Infimum of the `k >= 1` satisfying both distortion inequalities over
    /// every conclusive vertex pair of the window.
    pub k_est: f64,
    /// Largest distance from a checked target vertex to the image.
    pub density_gap: usize,
    /// Number of target vertices the density check covered.
    pub density_checked: usize,
    /// Pairs breaking the claimed distortion (boundary cases tolerated).
    pub violations: Vec<(VertexId, VertexId)>,
    /// Pairs whose source or image distance exceeded the cutoff.
    pub inconclusive: usize,
}

/// Window-internal distance of every vertex to `sigma`.
fn depth_from_sigma(window: &FiniteWindow) -> Vec<usize> {
    let n = window.num_vertices();
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        if window.is_boundary(i) {
            depth[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for inc in window.incident(i) {
            if depth[inc.neighbor] == usize::MAX {
                depth[inc.neighbor] = depth[i] + 1;
                queue.push_back(inc.neighbor);
            }
        }
    }
    depth
}

/// Measures distortion over all vertex pairs of `window` and the density
/// of the image.
///
/// The density check covers the target vertices within `ceil(k_est)` of the
/// images of "deep" window vertices, those at window distance at least
/// `K(2K+1) - 1` from `sigma` with `K = ceil(k_est)`. Any source vertex whose
/// image is that close to such a target vertex already lies in the window,
/// so the measured gap never exceeds the true one.
pub fn distortion_estimate(f: &QuasiMap, window: &FiniteWindow, cutoff: usize) -> Result<DistortionEstimate> {
    if cutoff == 0 {
        return Err(Error::InvalidArgument("cutoff must be positive".into()));
    }
    let n = window.num_vertices();
    let images: Vec<VertexId> = window.vertices().iter().map(|x| f.apply(x)).collect();
    for y in &images {
        f.target.check_vertex(y)?;
    }
    let mut target_dist: FxHashMap<VertexId, FxHashMap<VertexId, usize>> = FxHashMap::default();
    let k = f.claimed_distortion;
    let mut k_est: f64 = 1.0;
    let mut violations = Vec::new();
    let mut inconclusive = 0;
    for i in 0..n {
        let src = distances_from(&f.source, &window.vertex(i), cutoff);
        let tgt = target_dist
            .entry(images[i])
            .or_insert_with(|| distances_from(&f.target, &images[i], cutoff));
        for j in (i + 1)..n {
            let (Some(&ds), Some(&dt)) = (src.get(&window.vertex(j)), tgt.get(&images[j])) else {
                inconclusive += 1;
                continue;
            };
            let (ds, dt) = (ds as f64, dt as f64);
            k_est = k_est.max(dt / ds).max(ds / (dt + 1.0));
            if dt > k * ds || ds / k - 1.0 > dt {
                violations.push((window.vertex(i), window.vertex(j)));
            }
        }
    }

    let reach = k_est.ceil() as usize;
    let depth = depth_from_sigma(window);
    let min_depth = (reach * (2 * reach + 1)).saturating_sub(1);
    let deep: Vec<VertexId> = (0..n).filter(|&i| depth[i] >= min_depth).map(|i| images[i]).collect();
    let (density_gap, density_checked) = if deep.is_empty() {
        (0, 0)
    } else {
        let checked = neighborhood(&f.target, &deep, reach)?;
        let to_image = distances_from_set(&f.target, &images, reach + cutoff);
        let mut gap = 0;
        for y in &checked {
            match to_image.get(y) {
                Some(&d) => gap = gap.max(d),
                None => {
                    inconclusive += 1;
                    gap = gap.max(reach + cutoff + 1);
                }
            }
        }
        (gap, checked.len())
    };
    Ok(DistortionEstimate { k_est, density_gap, density_checked, violations, inconclusive })
}

/// `max over window vertices of d(x, f(x))`, or `None` if some displacement
/// exceeds `cutoff`.
pub fn wobbling_displacement(f: &QuasiMap, window: &FiniteWindow, cutoff: usize) -> Result<Option<usize>> {
    if !f.is_endomap() {
        return Err(Error::InvalidArgument(format!("{} is not an endomap", f.name)));
    }
    let mut worst = 0;
    for x in window.vertices() {
        match crate::graph::distance(&f.source, x, &f.apply(x), cutoff) {
            Some(d) => worst = worst.max(d),
            None => return Ok(None),
        }
    }
    Ok(Some(worst))
}

/// `(f* v)(x) = v(f(x))` on the source window, zero where `f(x)` leaves the
/// target window.
pub fn pullback<'s>(f: &QuasiMap, v: &VertexFunction<'_>, source_window: &'s FiniteWindow) -> VertexFunction<'s> {
    VertexFunction::from_fn(source_window, |x| v.at(&f.apply(x)))
}

/// Deterministic shortest path from `a` to `b` (first-found BFS parents,
/// neighbors in family order), or `None` beyond `cutoff`.
fn shortest_path(family: &GraphFamily, a: &VertexId, b: &VertexId, cutoff: usize) -> Option<Vec<VertexId>> {
    if a == b {
        return Some(vec![*a]);
    }
    let mut parent: FxHashMap<VertexId, VertexId> = FxHashMap::default();
    parent.insert(*a, *a);
    let mut frontier = vec![*a];
    let mut buf = Vec::new();
    for _ in 0..cutoff {
        let mut next = Vec::new();
        for x in &frontier {
            family.neighbors(x, &mut buf);
            for y in &buf {
                if parent.contains_key(y) {
                    continue;
                }
                parent.insert(*y, *x);
                if y == b {
                    let mut path = vec![*b];
                    let mut cur = *b;
                    while cur != *a {
                        cur = parent[&cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                next.push(*y);
            }
        }
        frontier = next;
    }
    None
}

/// Constant of a path system: `sqrt(longest path * busiest edge count)`
/// bounds the norm inflation (`constant` is the squared form).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathSystem {
    pub max_length: usize,
    pub max_multiplicity: usize,
    /// `max_length * max_multiplicity`.
    pub constant: f64,
}

fn path_system(family: &GraphFamily, pairs: &[(VertexId, VertexId)], cutoff: usize) -> Result<PathSystem> {
    path_system_with_edges(family, pairs, cutoff).map(|(system, _)| system)
}

/// The path system together with the (canonically ordered) edges it uses.
fn path_system_with_edges(
    family: &GraphFamily,
    pairs: &[(VertexId, VertexId)],
    cutoff: usize,
) -> Result<(PathSystem, FxHashMap<(VertexId, VertexId), usize>)> {
    let mut load: FxHashMap<(VertexId, VertexId), usize> = FxHashMap::default();
    let mut max_length = 0;
    for (a, b) in pairs {
        let path = shortest_path(family, a, b, cutoff).ok_or_else(|| {
            Error::InvalidArgument(format!("no path from {a} to {b} within {cutoff} steps"))
        })?;
        max_length = max_length.max(path.len() - 1);
        for step in path.windows(2) {
            let key = if step[0] < step[1] { (step[0], step[1]) } else { (step[1], step[0]) };
            *load.entry(key).or_insert(0) += 1;
        }
    }
    let max_multiplicity = load.values().copied().max().unwrap_or(0);
    let system = PathSystem { max_length, max_multiplicity, constant: (max_length * max_multiplicity) as f64 };
    Ok((system, load))
}

fn path_cutoff(f: &QuasiMap) -> usize {
    (f.claimed_distortion.ceil() as usize).max(1)
}

/// Path system for the edges of `source_window`: one fixed shortest path
/// from `f(x)` to `f(y)` per edge. Then `|d f*v|^2 <= constant * |dv|^2`.
pub fn lemma5_paths(f: &QuasiMap, source_window: &FiniteWindow) -> Result<PathSystem> {
    lemma5_paths_with_edges(f, source_window).map(|(system, _)| system)
}

fn lemma5_paths_with_edges(
    f: &QuasiMap,
    source_window: &FiniteWindow,
) -> Result<(PathSystem, FxHashMap<(VertexId, VertexId), usize>)> {
    let pairs: Vec<_> = source_window
        .edges()
        .iter()
        .map(|&(i, j)| (f.apply(&source_window.vertex(i)), f.apply(&source_window.vertex(j))))
        .collect();
    path_system_with_edges(&f.target, &pairs, path_cutoff(f))
}

/// Number of vertices in a ball of radius `r` in a graph of max degree `delta`.
fn ball_bound(r: usize, delta: usize) -> f64 {
    let mut total = 1.0;
    let mut layer = delta as f64;
    for _ in 0..r {
        total += layer;
        layer *= (delta as f64 - 1.0).max(1.0);
    }
    total
}

/// Degree-only version of the squared energy constant: source edges whose
/// paths share an edge have tails within distance `k(2k+1)` of each other.
pub fn lemma5_generic_constant(k: f64, source_degree: usize) -> f64 {
    let kk = k.ceil() as usize;
    k * ball_bound(kk * (2 * kk + 1), source_degree) * source_degree as f64
}

/// Degree-only version of the squared wobbling constant for displacement `m`.
pub fn lemma6_generic_constant(m: usize, degree: usize) -> f64 {
    m as f64 * ball_bound(m, degree)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma5Check {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; infinite if only `rhs` vanishes, zero if both do.
    pub ratio: f64,
    /// The path-system constant `c`, so that `lhs <= c * rhs`.
    pub bound: f64,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Compares `|d(f*v) chi_A|` on the source window with `|dv chi_B|` on the
/// target window, `B = C_ceil(k)(f(A))`. The target window (that of `v`)
/// must contain `C_ceil(k)(f(source_window))`.
///
/// `a = None` is the global form: the left side covers every source window
/// edge and the right side every target edge the path system uses, which
/// is all the global inequality can see of `v`.
pub fn lemma5_check(
    f: &QuasiMap,
    v: &VertexFunction<'_>,
    source_window: &FiniteWindow,
    a: Option<&[VertexId]>,
) -> Result<Lemma5Check> {
    let target_window = v.window();
    let reach = path_cutoff(f);
    let image: Vec<VertexId> = source_window.vertices().iter().map(|x| f.apply(x)).collect();
    let needed = neighborhood(&f.target, &image, reach)?;
    if let Some(y) = needed.iter().find(|y| !target_window.contains(y)) {
        return Err(Error::InsufficientWindow(format!(
            "target window misses {y}, which is within {reach} of the image"
        )));
    }
    let (paths, used) = lemma5_paths_with_edges(f, source_window)?;
    let pulled = pullback(f, v, source_window);
    let dv = differential(v);
    let (lhs, rhs) = match a {
        Some(a) => {
            let a_set: Vec<VertexId> = a.iter().filter(|x| source_window.contains(x)).copied().collect();
            let a_image: Vec<VertexId> = a_set.iter().map(|x| f.apply(x)).collect();
            let b_set = if a_image.is_empty() { Vec::new() } else { neighborhood(&f.target, &a_image, reach)? };
            let lhs = differential(&pulled).masked(&chi(source_window, &a_set))?.norm();
            (lhs, dv.masked(&chi(target_window, &b_set))?.norm())
        }
        None => {
            let mask = EdgeMask(
                target_window
                    .edges()
                    .iter()
                    .map(|&(i, j)| {
                        let (x, y) = (target_window.vertex(i), target_window.vertex(j));
                        used.contains_key(&(x.min(y), x.max(y)))
                    })
                    .collect(),
            );
            (differential(&pulled).norm(), dv.masked(&mask)?.norm())
        }
    };
    Ok(Lemma5Check { lhs, rhs, ratio: ratio(lhs, rhs), bound: paths.constant.sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma6Check {
    /// `l2(V)` norm of `f*v - v` over the inner window.
    pub diff_norm: f64,
    /// Energy of `v` on the edges inside the `m`-neighborhood of the inner
    /// window, `m` the displacement.
    pub energy: f64,
    pub displacement: usize,
    /// `diff_norm^2 / energy`.
    pub ratio: f64,
    /// Path-system constant `K` with `diff_norm^2 <= K * energy`.
    pub bound: f64,
}

/// Bounds `f*v - v` for a wobbling `f` on `window` by the energy of `v`
/// nearby. `v` lives on an outer window that must contain the
/// displacement-neighborhood of `window`.
pub fn lemma6_check(f: &QuasiMap, v: &VertexFunction<'_>, window: &FiniteWindow) -> Result<Lemma6Check> {
    let outer = v.window();
    let m = wobbling_displacement(f, window, DEFAULT_CUTOFF)?.ok_or_else(|| {
        Error::InvalidArgument(format!("{} moves a vertex farther than {DEFAULT_CUTOFF}", f.name))
    })?;
    let enlarged = neighborhood(&f.source, window.vertices(), m)?;
    if let Some(y) = enlarged.iter().find(|y| !outer.contains(y)) {
        return Err(Error::InsufficientWindow(format!(
            "outer window misses {y}, which is within {m} of the window"
        )));
    }
    let diff_sq = numeric::sum(window.vertices().iter().map(|x| {
        let d = v.at(&f.apply(x)) - v.at(x);
        d * d
    }));
    let dv = differential(v).masked(&chi(outer, &enlarged))?;
    let energy = numeric::dot(dv.values(), dv.values());
    let pairs: Vec<_> = window.vertices().iter().map(|x| (*x, f.apply(x))).collect();
    let paths = path_system(&f.source, &pairs, m.max(1))?;
    Ok(Lemma6Check {
        diff_norm: diff_sq.sqrt(),
        energy,
        displacement: m,
        ratio: ratio(diff_sq, energy),
        bound: paths.constant,
    })
}

/// Distance from `u` to the gradients of potentials supported in the
/// ball of radius `r` around `center`, for each `r` of the schedule.
/// The residuals decrease to the distance from `u` to the star space.
///
/// `u` is zero off its own window and may reach beyond the smaller balls;
/// the distance is measured over every ambient edge, so edges the ball's
/// gradients cannot see contribute `|u(e)|^2` in full.
pub fn star_membership_residual(
    family: &GraphFamily,
    center: &VertexId,
    u: &EdgeFunction<'_>,
    r_schedule: &[usize],
    tol: f64,
) -> Result<Vec<f64>> {
    if r_schedule.is_empty() || r_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("radius schedule must be nonempty and increasing".into()));
    }
    let src = u.window();
    let mut out = Vec::with_capacity(r_schedule.len());
    let mut buf = Vec::new();
    for &r in r_schedule {
        let ball = crate::graph::ball(family, center, r)?;
        // ambient codifferential of u at the ball vertices
        let rhs: Vec<f64> = ball
            .vertices()
            .iter()
            .map(|x| {
                family.neighbors(x, &mut buf);
                numeric::sum(buf.iter().map(|y| u.at(&OrientedEdge::new(*y, *x))))
            })
            .collect();
        let rhs = VertexFunction::new(&ball, rhs)?;
        let (v, _) = solve_laplacian(&ball, &rhs, LaplacianMode::Embedded, tol)?;

        let mut acc = numeric::CompensatedSum::new();
        for k in 0..src.num_edges() {
            let e = src.oriented_edge(k);
            let diff = u.values()[k] - (v.at(&e.head) - v.at(&e.tail));
            acc.add(diff * diff);
        }
        for (i, x) in ball.vertices().iter().enumerate() {
            family.neighbors(x, &mut buf);
            for y in &buf {
                let inside = ball.index_of(y);
                if inside.is_some_and(|j| j < i) || src.find_edge(&OrientedEdge::new(*x, *y)).is_some() {
                    continue;
                }
                let dv = v.at(y) - v.values()[i];
                acc.add(dv * dv);
            }
        }
        out.push(acc.value().max(0.0).sqrt());
    }
    Ok(out)
}

/// One row of the quasi-isometry check table; fields that do not apply to
/// a map (wobbling data for non-endomaps) are empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QiRow {
    pub map_name: String,
    pub window_radius: usize,
    pub k_est: f64,
    pub density_gap: usize,
    pub wobble: Option<usize>,
    pub lemma5_ratio: f64,
    pub lemma5_bound: f64,
    pub lemma6_ratio: Option<f64>,
    pub lemma6_bound: Option<f64>,
}

fn bump<'w>(window: &'w FiniteWindow, center: &VertexId, width: f64, family: &GraphFamily) -> VertexFunction<'w> {
    let dist = distances_from(family, center, usize::MAX.min(4 * width as usize + 64));
    VertexFunction::from_fn(window, |x| {
        let d = dist.get(x).copied().unwrap_or(usize::MAX) as f64;
        (-(d * d) / (2.0 * width * width)).exp()
    })
}

/// Runs the distortion, wobbling and energy checks for `f` on the ball of
/// radius `radius` around the source origin, with a Gaussian bump as the
/// test function. The wobbling columns are filled for wobblings only.
pub fn qi_row(f: &QuasiMap, radius: usize, cutoff: usize) -> Result<QiRow> {
    let src_window = crate::graph::ball(&f.source, &f.source.origin(), radius)?;
    let est = distortion_estimate(f, &src_window, cutoff)?;
    let reach = path_cutoff(f);
    let image: Vec<VertexId> = src_window.vertices().iter().map(|x| f.apply(x)).collect();
    let tgt_window = crate::graph::set_ball(&f.target, &image, reach)?;
    let width = (radius as f64 / 2.0).max(1.0);
    let v = bump(&tgt_window, &f.apply(&f.source.origin()), width, &f.target);
    let l5 = lemma5_check(f, &v, &src_window, None)?;

    let (wobble, l6_ratio, l6_bound) = if f.is_wobbling() {
        match wobbling_displacement(f, &src_window, DEFAULT_CUTOFF)? {
            Some(m) => {
                let outer = crate::graph::ball(&f.source, &f.source.origin(), radius + m.max(1))?;
                let w = bump(&outer, &f.source.origin(), width, &f.source);
                let l6 = lemma6_check(f, &w, &src_window)?;
                (Some(m), Some(l6.ratio), Some(l6.bound))
            }
            _ => (None, None, None),
        }
    } else {
        (None, None, None)
    };
    Ok(QiRow {
        map_name: f.name.clone(),
        window_radius: radius,
        k_est: est.k_est,
        density_gap: est.density_gap,
        wobble,
        lemma5_ratio: l5.ratio,
        lemma5_bound: l5.bound,
        lemma6_ratio: l6_ratio,
        lemma6_bound: l6_bound,
    })
}
