//! Graph families, canonical vertex encodings and finite windows.
//!
//! A [`GraphFamily`] is an infinite, connected, bounded-degree simple graph
//! described by a neighbor generator. All linear algebra happens on a
//! [`FiniteWindow`]: a connected induced subgraph with at least one edge,
//! together with the ambient degree of every vertex. Vertices whose ambient
//! degree exceeds their window degree form the inner boundary `sigma`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest lattice dimension a [`Point`] can encode.
pub const MAX_DIM: usize = 6;
/// Largest tree degree a [`Word`] can encode (one hex digit per letter).
pub const MAX_TREE_DEGREE: usize = 16;
const MAX_WORD_LEN: u8 = 32;
/// Default limit on the number of vertices a window may hold.
pub const DEFAULT_SIZE_CAP: usize = 1 << 22;

/// Integer coordinates for lattice-like families.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[i32]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "point dimension must be in 1..={MAX_DIM}"
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point { dim: coords.len() as u8, coords: c }
    }

    pub fn origin(dim: usize) -> Self {
        Point::new(&vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn shifted(&self, axis: usize, delta: i32) -> Self {
        let mut p = *self;
        p.coords[axis] += delta;
        p
    }

    pub fn l1_norm(&self) -> u64 {
        self.coords().iter().map(|c| c.unsigned_abs() as u64).sum()
    }
}

/// Reduced word in the free product of `d` copies of Z/2, packed four bits
/// per letter with the last letter in the lowest nibble. These are the
/// vertices of the `d`-regular tree.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    len: u8,
    hi: u64,
    lo: u64,
}

impl Word {
    pub const EMPTY: Word = Word { len: 0, hi: 0, lo: 0 };

    fn bits(&self) -> u128 {
        ((self.hi as u128) << 64) | self.lo as u128
    }

    fn from_bits(len: u8, bits: u128) -> Self {
        Word { len, hi: (bits >> 64) as u64, lo: bits as u64 }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn last(&self) -> Option<u8> {
        (self.len > 0).then(|| (self.bits() & 0xF) as u8)
    }

    /// Appends `letter`; `None` if it would cancel or overflow the encoding.
    pub fn push(&self, letter: u8) -> Option<Word> {
        if self.last() == Some(letter) || self.len >= MAX_WORD_LEN || letter as usize >= MAX_TREE_DEGREE {
            return None;
        }
        Some(Word::from_bits(self.len + 1, (self.bits() << 4) | letter as u128))
    }

    pub fn pop(&self) -> Word {
        if self.len == 0 {
            return *self;
        }
        Word::from_bits(self.len - 1, self.bits() >> 4)
    }

    pub fn letters(&self) -> Vec<u8> {
        let bits = self.bits();
        (0..self.len)
            .rev()
            .map(|i| ((bits >> (4 * i as u32)) & 0xF) as u8)
            .collect()
    }

    /// Builds a word from letters; `None` unless the word is reduced.
    pub fn from_letters(letters: &[u8]) -> Option<Word> {
        letters.iter().try_fold(Word::EMPTY, |w, &s| w.push(s))
    }
}

/// Canonical vertex encoding shared by every family.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexId {
    Point(Point),
    Word(Word),
    Node(u32),
}

impl VertexId {
    pub fn point(coords: &[i32]) -> Self {
        VertexId::Point(Point::new(coords))
    }

    pub fn word(letters: &[u8]) -> Self {
        VertexId::Word(Word::from_letters(letters).expect("word must be reduced"))
    }

    pub fn as_point(&self) -> Option<&Point> {
        match self {
            VertexId::Point(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Point(p) => {
                write!(f, "(")?;
                for (i, c) in p.coords().iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            VertexId::Word(w) => {
                write!(f, "t")?;
                for s in w.letters() {
                    write!(f, "{s:x}")?;
                }
                Ok(())
            }
            VertexId::Node(i) => write!(f, "n{i}"),
        }
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for VertexId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad vertex encoding {s:?}"));
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let coords = inner
                .split(',')
                .map(|c| c.trim().parse::<i32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            if coords.is_empty() || coords.len() > MAX_DIM {
                return Err(bad());
            }
            Ok(VertexId::point(&coords))
        } else if let Some(rest) = s.strip_prefix('t') {
            let letters = rest
                .chars()
                .map(|c| c.to_digit(16).map(|d| d as u8))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(bad)?;
            Word::from_letters(&letters).map(VertexId::Word).ok_or_else(bad)
        } else if let Some(rest) = s.strip_prefix('n') {
            rest.parse().map(VertexId::Node).map_err(|_| bad())
        } else {
            Err(bad())
        }
    }
}

/// An oriented edge `(tail, head)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedEdge {
    pub tail: VertexId,
    pub head: VertexId,
}

impl OrientedEdge {
    pub fn new(tail: VertexId, head: VertexId) -> Self {
        OrientedEdge { tail, head }
    }

    pub fn reversed(&self) -> Self {
        OrientedEdge { tail: self.head, head: self.tail }
    }

    /// Orientation `(min, max)` under the vertex order.
    pub fn canonical(&self) -> Self {
        if self.tail <= self.head {
            *self
        } else {
            self.reversed()
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.tail < self.head
    }
}

/// Serializes as the pair of vertex encodings `[tail, head]`.
impl Serialize for VertexId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for OrientedEdge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.tail.to_string(), self.head.to_string()).serialize(s)
    }
}

impl fmt::Display for OrientedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tail, self.head)
    }
}

/// Parameterized description of a built-in infinite family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilySpec {
    /// The lattice Z^d.
    Lattice(usize),
    /// The infinite d-regular tree.
    Tree(usize),
    /// Z x {0,1}.
    Ladder,
    /// Z^2 keeping vertical edges and the horizontal edges of the x-axis.
    Comb,
    /// Z^2 plus the diagonal (x,y)-(x+1,y+1) of every unit square.
    DiagLattice,
}

impl FamilySpec {
    /// Parses short names (`z2`, `tree3`, `ladder`, `comb`, `diag`) or a
    /// generic name (`lattice`, `tree`) completed by `d`.
    pub fn parse(name: &str, d: Option<usize>) -> Result<Self> {
        let name = name.trim().to_ascii_lowercase();
        let need_d = |what: &str| {
            d.ok_or_else(|| Error::InvalidFamily(format!("{what} needs a dimension/degree parameter")))
        };
        let spec = match name.as_str() {
            "ladder" => FamilySpec::Ladder,
            "comb" => FamilySpec::Comb,
            "diag" | "diag_lattice" => FamilySpec::DiagLattice,
            "lattice" | "z" => FamilySpec::Lattice(need_d("lattice")?),
            "tree" => FamilySpec::Tree(need_d("tree")?),
            other => {
                if let Some(n) = other.strip_prefix("tree") {
                    FamilySpec::Tree(n.parse().map_err(|_| Error::InvalidFamily(other.into()))?)
                } else if let Some(n) = other.strip_prefix('z') {
                    FamilySpec::Lattice(n.parse().map_err(|_| Error::InvalidFamily(other.into()))?)
                } else {
                    return Err(Error::InvalidFamily(format!("unknown family {other:?}")));
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FamilySpec::Lattice(d) if d == 0 || d > MAX_DIM => Err(Error::InvalidFamily(format!(
                "lattice dimension {d} outside 1..={MAX_DIM}"
            ))),
            FamilySpec::Tree(d) if !(3..=MAX_TREE_DEGREE).contains(&d) => Err(Error::InvalidFamily(
                format!("tree degree {d} outside 3..={MAX_TREE_DEGREE}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            FamilySpec::Lattice(d) => format!("z{d}"),
            FamilySpec::Tree(d) => format!("tree{d}"),
            FamilySpec::Ladder => "ladder".into(),
            FamilySpec::Comb => "comb".into(),
            FamilySpec::DiagLattice => "diag".into(),
        }
    }
}

#[derive(Debug)]
struct FiniteGraph {
    labels: Vec<String>,
    label_index: FxHashMap<String, u32>,
    adjacency: Vec<Vec<u32>>,
}

#[derive(Clone, Debug)]
enum Kind {
    Lattice(usize),
    Tree(usize),
    Ladder,
    Comb,
    DiagLattice,
    Finite(Arc<FiniteGraph>),
}

/// A connected, bounded-degree simple graph given by a neighbor generator.
#[derive(Clone, Debug)]
pub struct GraphFamily {
    name: String,
    kind: Kind,
    degree_bound: usize,
}

impl GraphFamily {
    pub fn new(spec: FamilySpec) -> Result<Self> {
        spec.validate()?;
        let (kind, degree_bound) = match spec {
            FamilySpec::Lattice(d) => (Kind::Lattice(d), 2 * d),
            FamilySpec::Tree(d) => (Kind::Tree(d), d),
            FamilySpec::Ladder => (Kind::Ladder, 3),
            FamilySpec::Comb => (Kind::Comb, 4),
            FamilySpec::DiagLattice => (Kind::DiagLattice, 6),
        };
        Ok(GraphFamily { name: spec.name(), kind, degree_bound })
    }

    /// Looks a family up by name, see [`FamilySpec::parse`].
    pub fn by_name(name: &str, d: Option<usize>) -> Result<Self> {
        GraphFamily::new(FamilySpec::parse(name, d)?)
    }

    /// A finite graph acting as its own ambient family (it has no exterior,
    /// so every window covering it has empty boundary).
    pub fn finite(name: &str, labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidFamily(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(Error::InvalidFamily(format!("self-loop at {}", labels[a])));
            }
            if adjacency[a].contains(&(b as u32)) {
                return Err(Error::InvalidFamily(format!(
                    "duplicate edge {}-{}",
                    labels[a], labels[b]
                )));
            }
            adjacency[a].push(b as u32);
            adjacency[b].push(a as u32);
        }
        if edges.is_empty() {
            return Err(Error::InvalidFamily("finite graph needs at least one edge".into()));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adjacency[x] {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    stack.push(y as usize);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidFamily(format!("finite graph {name:?} is disconnected")));
        }
        let mut label_index = FxHashMap::default();
        for (i, l) in labels.iter().enumerate() {
            if label_index.insert(l.clone(), i as u32).is_some() {
                return Err(Error::InvalidFamily(format!("duplicate vertex label {l:?}")));
            }
        }
        let degree_bound = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(GraphFamily {
            name: name.to_string(),
            kind: Kind::Finite(Arc::new(FiniteGraph { labels, label_index, adjacency })),
            degree_bound,
        })
    }

    /// The n-cycle as a finite family with vertices `n0..n{n-1}`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidFamily(format!("cycle needs n >= 3, got {n}")));
        }
        let labels = (0..n).map(|i| format!("n{i}")).collect();
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        GraphFamily::finite(&format!("cycle{n}"), labels, &edges)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, Kind::Finite(_))
    }

    pub fn origin(&self) -> VertexId {
        match &self.kind {
            Kind::Lattice(d) => VertexId::Point(Point::origin(*d)),
            Kind::Ladder | Kind::Comb | Kind::DiagLattice => VertexId::Point(Point::origin(2)),
            Kind::Tree(_) => VertexId::Word(Word::EMPTY),
            Kind::Finite(_) => VertexId::Node(0),
        }
    }

    pub fn contains(&self, x: &VertexId) -> bool {
        match (&self.kind, x) {
            (Kind::Lattice(d), VertexId::Point(p)) => p.dim() == *d,
            (Kind::Ladder, VertexId::Point(p)) => p.dim() == 2 && (0..=1).contains(&p.coords()[1]),
            (Kind::Comb | Kind::DiagLattice, VertexId::Point(p)) => p.dim() == 2,
            (Kind::Tree(d), VertexId::Word(w)) => w.letters().iter().all(|&s| (s as usize) < *d),
            (Kind::Finite(g), VertexId::Node(i)) => (*i as usize) < g.labels.len(),
            _ => false,
        }
    }

    /// Writes the neighbors of `x` into `out` (cleared first). The order is
    /// fixed per family.
    pub fn neighbors(&self, x: &VertexId, out: &mut Vec<VertexId>) {
        out.clear();
        match (&self.kind, x) {
            (Kind::Lattice(d), VertexId::Point(p)) => {
                for axis in 0..*d {
                    out.push(VertexId::Point(p.shifted(axis, 1)));
                    out.push(VertexId::Point(p.shifted(axis, -1)));
                }
            }
            (Kind::Ladder, VertexId::Point(p)) => {
                let y = p.coords()[1];
                out.push(VertexId::Point(p.shifted(0, 1)));
                out.push(VertexId::Point(p.shifted(0, -1)));
                out.push(VertexId::Point(p.shifted(1, 1 - 2 * y)));
            }
            (Kind::Comb, VertexId::Point(p)) => {
                if p.coords()[1] == 0 {
                    out.push(VertexId::Point(p.shifted(0, 1)));
                    out.push(VertexId::Point(p.shifted(0, -1)));
                }
                out.push(VertexId::Point(p.shifted(1, 1)));
                out.push(VertexId::Point(p.shifted(1, -1)));
            }
            (Kind::DiagLattice, VertexId::Point(p)) => {
                out.push(VertexId::Point(p.shifted(0, 1)));
                out.push(VertexId::Point(p.shifted(0, -1)));
                out.push(VertexId::Point(p.shifted(1, 1)));
                out.push(VertexId::Point(p.shifted(1, -1)));
                out.push(VertexId::Point(p.shifted(0, 1).shifted(1, 1)));
                out.push(VertexId::Point(p.shifted(0, -1).shifted(1, -1)));
            }
            (Kind::Tree(d), VertexId::Word(w)) => {
                let last = w.last();
                for s in 0..*d as u8 {
                    if last == Some(s) {
                        out.push(VertexId::Word(w.pop()));
                    } else {
                        let next = w.push(s).expect("tree word longer than 32 letters");
                        out.push(VertexId::Word(next));
                    }
                }
            }
            (Kind::Finite(g), VertexId::Node(i)) => {
                out.extend(g.adjacency[*i as usize].iter().map(|&j| VertexId::Node(j)));
            }
            _ => panic!("vertex {x} does not belong to family {}", self.name),
        }
    }

    pub fn neighbors_of(&self, x: &VertexId) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.degree_bound);
        self.neighbors(x, &mut out);
        out
    }

    pub fn degree(&self, x: &VertexId) -> usize {
        match (&self.kind, x) {
            (Kind::Lattice(d), _) => 2 * d,
            (Kind::Tree(d), _) => *d,
            (Kind::Ladder, _) => 3,
            (Kind::DiagLattice, _) => 6,
            _ => self.neighbors_of(x).len(),
        }
    }

    /// Human-readable encoding; finite families use their vertex labels.
    pub fn format_vertex(&self, x: &VertexId) -> String {
        match (&self.kind, x) {
            (Kind::Finite(g), VertexId::Node(i)) => g.labels[*i as usize].clone(),
            _ => x.to_string(),
        }
    }

    pub fn parse_vertex(&self, s: &str) -> Result<VertexId> {
        let x = match &self.kind {
            Kind::Finite(g) => match g.label_index.get(s.trim()) {
                Some(&i) => VertexId::Node(i),
                None => s.parse()?,
            },
            _ => s.parse()?,
        };
        self.check_vertex(&x)?;
        Ok(x)
    }

    pub(crate) fn check_vertex(&self, x: &VertexId) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::InvalidVertex(x.to_string(), self.name.clone()))
        }
    }

    /// Whether `{a, b}` is an edge of the family.
    pub fn is_edge(&self, a: &VertexId, b: &VertexId) -> bool {
        self.contains(a) && self.neighbors_of(a).contains(b)
    }

    /// The edge from the origin to its first generated neighbor.
    pub fn origin_edge(&self) -> OrientedEdge {
        let o = self.origin();
        OrientedEdge::new(o, self.neighbors_of(&o)[0])
    }
}

/// Breadth-first search from `sources` up to depth `radius`. Returns the
/// discovered vertices with their depth, in discovery order.
fn bfs(
    family: &GraphFamily,
    sources: &[VertexId],
    radius: usize,
    cap: usize,
) -> Result<Vec<(VertexId, usize)>> {
    let mut seen: FxHashSet<VertexId> = FxHashSet::default();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for s in sources {
        family.check_vertex(s)?;
        if seen.insert(*s) {
            order.push((*s, 0));
            queue.push_back((*s, 0));
        }
    }
    if order.len() > cap {
        return Err(Error::SizeLimit { limit: cap });
    }
    let mut buf = Vec::with_capacity(family.degree_bound());
    while let Some((x, dist)) = queue.pop_front() {
        if dist == radius {
            continue;
        }
        family.neighbors(&x, &mut buf);
        for y in &buf {
            if seen.insert(*y) {
                if order.len() == cap {
                    return Err(Error::SizeLimit { limit: cap });
                }
                order.push((*y, dist + 1));
                queue.push_back((*y, dist + 1));
            }
        }
    }
    Ok(order)
}

/// The `k`-neighborhood of `a`: every vertex within distance `k` of some
/// vertex of `a`, sorted by the vertex order.
pub fn neighborhood(family: &GraphFamily, a: &[VertexId], k: usize) -> Result<Vec<VertexId>> {
    neighborhood_with_cap(family, a, k, DEFAULT_SIZE_CAP)
}

pub fn neighborhood_with_cap(
    family: &GraphFamily,
    a: &[VertexId],
    k: usize,
    cap: usize,
) -> Result<Vec<VertexId>> {
    let mut vs: Vec<VertexId> = bfs(family, a, k, cap)?.into_iter().map(|(v, _)| v).collect();
    vs.sort_unstable();
    Ok(vs)
}

/// Graph distance, or `None` when it exceeds `cutoff`.
pub fn distance(family: &GraphFamily, x: &VertexId, y: &VertexId, cutoff: usize) -> Option<usize> {
    if x == y {
        return Some(0);
    }
    let mut seen: FxHashSet<VertexId> = FxHashSet::default();
    seen.insert(*x);
    let mut frontier = vec![*x];
    let mut buf = Vec::new();
    for dist in 1..=cutoff {
        let mut next = Vec::new();
        for v in &frontier {
            family.neighbors(v, &mut buf);
            for w in &buf {
                if w == y {
                    return Some(dist);
                }
                if seen.insert(*w) {
                    next.push(*w);
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        frontier = next;
    }
    None
}

/// Distances from `x` to every vertex within `cutoff`.
pub fn distances_from(family: &GraphFamily, x: &VertexId, cutoff: usize) -> FxHashMap<VertexId, usize> {
    distances_from_set(family, std::slice::from_ref(x), cutoff)
}

/// Distances from the set `sources` to every vertex within `cutoff`.
pub fn distances_from_set(
    family: &GraphFamily,
    sources: &[VertexId],
    cutoff: usize,
) -> FxHashMap<VertexId, usize> {
    bfs(family, sources, cutoff, usize::MAX)
        .expect("sources must belong to the family")
        .into_iter()
        .collect()
}

/// One endpoint-side entry of a window's adjacency list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub neighbor: usize,
    pub edge: usize,
}

/// A finite connected induced subgraph with at least one edge.
///
/// Vertices are stored sorted by the vertex order, so index order and vertex
/// order agree and the canonical orientation of edge `k` is
/// `edges()[k] = (i, j)` with `i < j`.
#[derive(Clone, Debug)]
pub struct FiniteWindow {
    vertices: Vec<VertexId>,
    index: FxHashMap<VertexId, usize>,
    edges: Vec<(usize, usize)>,
    full_degree: Vec<usize>,
    boundary: Vec<bool>,
    offsets: Vec<usize>,
    incidences: Vec<Incidence>,
}

impl FiniteWindow {
    /// Builds the induced window on `vertices` without checking
    /// connectivity. Callers guarantee membership in the family.
    pub(crate) fn build(family: &GraphFamily, mut vertices: Vec<VertexId>) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        let n = vertices.len();
        let index: FxHashMap<VertexId, usize> =
            vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();

        let mut full_degree = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut nbr_idx: Vec<usize> = Vec::new();
        let mut buf = Vec::with_capacity(family.degree_bound());
        offsets.push(0);
        for v in &vertices {
            family.neighbors(v, &mut buf);
            full_degree.push(buf.len());
            let start = nbr_idx.len();
            nbr_idx.extend(buf.iter().filter_map(|w| index.get(w).copied()));
            nbr_idx[start..].sort_unstable();
            offsets.push(nbr_idx.len());
        }

        let mut edges = Vec::with_capacity(nbr_idx.len() / 2);
        let mut edge_of = vec![usize::MAX; nbr_idx.len()];
        for i in 0..n {
            for slot in offsets[i]..offsets[i + 1] {
                let j = nbr_idx[slot];
                if j > i {
                    edge_of[slot] = edges.len();
                    edges.push((i, j));
                }
            }
        }
        for i in 0..n {
            for slot in offsets[i]..offsets[i + 1] {
                let j = nbr_idx[slot];
                if j < i {
                    let row = &nbr_idx[offsets[j]..offsets[j + 1]];
                    let pos = row.binary_search(&i).expect("adjacency must be symmetric");
                    edge_of[slot] = edge_of[offsets[j] + pos];
                }
            }
        }
        let incidences = nbr_idx
            .iter()
            .zip(&edge_of)
            .map(|(&neighbor, &edge)| Incidence { neighbor, edge })
            .collect();
        let boundary = (0..n).map(|i| full_degree[i] > offsets[i + 1] - offsets[i]).collect();

        FiniteWindow { vertices, index, edges, full_degree, boundary, offsets, incidences }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> VertexId {
        self.vertices[i]
    }

    pub fn index_of(&self, v: &VertexId) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn contains(&self, v: &VertexId) -> bool {
        self.index.contains_key(v)
    }

    /// Canonically oriented edges as index pairs `(i, j)`, `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn oriented_edge(&self, k: usize) -> OrientedEdge {
        let (i, j) = self.edges[k];
        OrientedEdge::new(self.vertices[i], self.vertices[j])
    }

    pub fn full_degree(&self, i: usize) -> usize {
        self.full_degree[i]
    }

    pub fn internal_degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn incident(&self, i: usize) -> &[Incidence] {
        &self.incidences[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Index of the edge joining vertices `i` and `j`, if any.
    pub fn edge_between(&self, i: usize, j: usize) -> Option<usize> {
        self.incident(i).iter().find(|inc| inc.neighbor == j).map(|inc| inc.edge)
    }

    /// Edge index of `e` with the sign of its orientation relative to the
    /// canonical one.
    pub fn find_edge(&self, e: &OrientedEdge) -> Option<(usize, f64)> {
        let i = self.index_of(&e.tail)?;
        let j = self.index_of(&e.head)?;
        let k = self.edge_between(i, j)?;
        Some((k, if i < j { 1.0 } else { -1.0 }))
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary.iter().any(|&b| b)
    }

    pub fn sigma_size(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Vertices with at least one ambient neighbor outside the window.
    pub fn sigma(&self) -> Vec<VertexId> {
        (0..self.num_vertices())
            .filter(|&i| self.boundary[i])
            .map(|i| self.vertices[i])
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for inc in self.incident(i) {
                if !seen[inc.neighbor] {
                    seen[inc.neighbor] = true;
                    count += 1;
                    stack.push(inc.neighbor);
                }
            }
        }
        count == n
    }

    pub fn export(&self, family: &GraphFamily) -> WindowExport {
        WindowExport {
            vertices: self.vertices.iter().map(|v| family.format_vertex(v)).collect(),
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
            full_degree: self.full_degree.clone(),
            sigma: (0..self.num_vertices()).filter(|&i| self.boundary[i]).collect(),
        }
    }
}

/// JSON form of a window; edge and sigma entries index into `vertices`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowExport {
    pub vertices: Vec<String>,
    pub edges: Vec<[usize; 2]>,
    pub full_degree: Vec<usize>,
    pub sigma: Vec<usize>,
}

fn require_edge(window: FiniteWindow) -> Result<FiniteWindow> {
    if window.num_edges() == 0 {
        return Err(Error::InvalidWindow("window has no edges".into()));
    }
    Ok(window)
}

/// All vertices within `radius` of `center`, with induced edges.
pub fn ball(family: &GraphFamily, center: &VertexId, radius: usize) -> Result<FiniteWindow> {
    ball_with_cap(family, center, radius, DEFAULT_SIZE_CAP)
}

pub fn ball_with_cap(
    family: &GraphFamily,
    center: &VertexId,
    radius: usize,
    cap: usize,
) -> Result<FiniteWindow> {
    set_ball_with_cap(family, std::slice::from_ref(center), radius, cap)
}

/// The induced window on the `radius`-neighborhood of a set of centers.
pub fn set_ball(family: &GraphFamily, centers: &[VertexId], radius: usize) -> Result<FiniteWindow> {
    set_ball_with_cap(family, centers, radius, DEFAULT_SIZE_CAP)
}

pub fn set_ball_with_cap(
    family: &GraphFamily,
    centers: &[VertexId],
    radius: usize,
    cap: usize,
) -> Result<FiniteWindow> {
    let vs = bfs(family, centers, radius, cap)?.into_iter().map(|(v, _)| v).collect();
    let window = require_edge(FiniteWindow::build(family, vs))?;
    if centers.len() > 1 && !window.is_connected() {
        return Err(Error::InvalidWindow("neighborhood of the centers is disconnected".into()));
    }
    Ok(window)
}

/// The induced window on an explicit vertex set.
pub fn induced_window(family: &GraphFamily, vs: &[VertexId]) -> Result<FiniteWindow> {
    for v in vs {
        family.check_vertex(v)?;
    }
    let window = require_edge(FiniteWindow::build(family, vs.to_vec()))?;
    if !window.is_connected() {
        return Err(Error::InvalidWindow("vertex set induces a disconnected subgraph".into()));
    }
    Ok(window)
}

/// The `sigma` set of a window.
pub fn sigma(window: &FiniteWindow) -> Vec<VertexId> {
    window.sigma()
}

/// `[x0, x0+n) x [y0, y0+n)` in a two-dimensional lattice-like family.
pub fn square_box(family: &GraphFamily, corner: (i32, i32), n: usize) -> Result<FiniteWindow> {
    let vs: Vec<VertexId> = (0..n as i32)
        .flat_map(|dx| (0..n as i32).map(move |dy| VertexId::point(&[corner.0 + dx, corner.1 + dy])))
        .collect();
    induced_window(family, &vs)
}
