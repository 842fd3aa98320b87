//! Rectangular grid cell complexes, boundary subcomplexes, truncated duals and doubles.
//!
//! Indexing: vertex `(i, j)` is `j * (nx + 1) + i`. Edges list all x-edges `(i, j)`,
//! `i < nx, j <= ny` first, then y-edges `(i, j)`, `i <= nx, j < ny`. Face `(i, j)` is
//! `j * nx + i`. x-edges point +x, y-edges point +y, faces are counterclockwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::SparseOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let ok = [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x1 > x0 && y1 > y0;
        if !ok {
            return Err(Error::InvalidDomain(format!("[{x0}, {x1}] x [{y0}, {y1}]")));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    pub fn unit() -> Self {
        Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Sides of the rectangle, numbered 1..4 in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }

    pub fn parse(s: &str) -> Result<Side> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "1" => Ok(Side::Left),
            "right" | "2" => Ok(Side::Right),
            "bottom" | "3" => Ok(Side::Bottom),
            "top" | "4" => Ok(Side::Top),
            other => Err(Error::Config(format!("unknown side `{other}`"))),
        }
    }

    /// True if the side is a vertical segment (normal along x).
    pub fn is_vertical(self) -> bool {
        matches!(self, Side::Left | Side::Right)
    }
}

/// Non-empty set of Dirichlet sides; the subcomplex `L` is the union of the closed sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundarySpec {
    sides: [bool; 4],
}

impl BoundarySpec {
    pub fn new(sides: &[Side]) -> Result<Self> {
        let mut s = [false; 4];
        for &side in sides {
            s[side as usize] = true;
        }
        if !s.iter().any(|&b| b) {
            return Err(Error::Config("boundary spec needs at least one Dirichlet side".into()));
        }
        Ok(BoundarySpec { sides: s })
    }

    pub fn all() -> Self {
        BoundarySpec { sides: [true; 4] }
    }

    pub fn contains(&self, side: Side) -> bool {
        self.sides[side as usize]
    }

    pub fn sides(&self) -> Vec<Side> {
        Side::ALL.iter().copied().filter(|&s| self.contains(s)).collect()
    }

    pub fn count(&self) -> usize {
        self.sides.iter().filter(|&&b| b).count()
    }

    /// True when the sides form one connected arc that is not the whole boundary.
    /// Exactly then the Dirac operator is square.
    pub fn is_proper_arc(&self) -> bool {
        match self.count() {
            1 | 3 => true,
            2 => !(self.sides == [true, true, false, false] || self.sides == [false, false, true, true]),
            _ => false,
        }
    }
}

impl Serialize for BoundarySpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let names: Vec<&str> = self.sides().iter().map(|s| s.name()).collect();
        names.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundarySpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let names: Vec<String> = Vec::deserialize(d)?;
        let sides = names.iter().map(|n| Side::parse(n)).collect::<Result<Vec<_>>>().map_err(serde::de::Error::custom)?;
        BoundarySpec::new(&sides).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Grid position of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCell {
    pub axis: Axis,
    pub i: usize,
    pub j: usize,
}

/// Coboundary maps of an abstract 2-complex: `d0: C^0 -> C^1`, `d1: C^1 -> C^2`.
#[derive(Debug, Clone)]
pub struct ChainComplex {
    pub counts: [usize; 3],
    pub d0: SparseOperator,
    pub d1: SparseOperator,
}

/// Per-dimension membership flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMask {
    pub cells: [Vec<bool>; 3],
}

impl CellMask {
    pub fn filled(counts: [usize; 3], value: bool) -> Self {
        CellMask { cells: [vec![value; counts[0]], vec![value; counts[1]], vec![value; counts[2]]] }
    }

    pub fn complement(&self) -> Self {
        CellMask { cells: self.cells.clone().map(|v| v.into_iter().map(|b| !b).collect()) }
    }

    /// Cells present in `self` but not in `other`.
    pub fn minus(&self, other: &CellMask) -> Self {
        let mut out = self.clone();
        for q in 0..3 {
            for (a, &b) in out.cells[q].iter_mut().zip(&other.cells[q]) {
                *a = *a && !b;
            }
        }
        out
    }

    pub fn indices(&self, q: usize) -> Vec<usize> {
        self.cells[q].iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k).collect()
    }

    pub fn count(&self, q: usize) -> usize {
        self.cells[q].iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexSummary {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub mesh: f64,
    pub dirichlet_sides: Option<BoundarySpec>,
}

/// Uniform grid decomposition of a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct CellComplex {
    rect: Rect,
    nx: usize,
    ny: usize,
}

pub fn build_grid_complex(rect: Rect, nx: usize, ny: usize) -> Result<CellComplex> {
    CellComplex::new(rect, nx, ny)
}

impl CellComplex {
    pub fn new(rect: Rect, nx: usize, ny: usize) -> Result<Self> {
        let rect = Rect::new(rect.x0, rect.x1, rect.y0, rect.y1)?;
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidDomain(format!("cell counts must be positive, got {nx} x {ny}")));
        }
        Ok(CellComplex { rect, nx, ny })
    }

    pub fn unit_square(n: usize) -> Self {
        CellComplex::new(Rect::unit(), n, n).expect("n >= 1")
    }

    /// Doubled subdivision.
    pub fn subdivide(&self) -> Self {
        CellComplex { rect: self.rect, nx: 2 * self.nx, ny: 2 * self.ny }
    }

    /// Subdivision `level` of a base complex: `2^level` times the base cell counts.
    pub fn at_level(&self, level: u32) -> Self {
        CellComplex { rect: self.rect, nx: self.nx << level, ny: self.ny << level }
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.rect.width() / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.rect.height() / self.ny as f64
    }

    /// Largest cell side length.
    pub fn mesh(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn n_vertices(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_xedges(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn n_edges(&self) -> usize {
        self.n_xedges() + self.ny * (self.nx + 1)
    }

    pub fn n_faces(&self) -> usize {
        self.nx * self.ny
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.n_vertices(), self.n_edges(), self.n_faces()]
    }

    pub fn vertex(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j <= self.ny);
        j * (self.nx + 1) + i
    }

    pub fn xedge(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j <= self.ny);
        j * self.nx + i
    }

    pub fn yedge(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j < self.ny);
        self.n_xedges() + j * (self.nx + 1) + i
    }

    pub fn face(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn vertex_ij(&self, v: usize) -> (usize, usize) {
        (v % (self.nx + 1), v / (self.nx + 1))
    }

    pub fn face_ij(&self, f: usize) -> (usize, usize) {
        (f % self.nx, f / self.nx)
    }

    pub fn edge(&self, e: usize) -> EdgeCell {
        if e < self.n_xedges() {
            EdgeCell { axis: Axis::X, i: e % self.nx, j: e / self.nx }
        } else {
            let k = e - self.n_xedges();
            EdgeCell { axis: Axis::Y, i: k % (self.nx + 1), j: k / (self.nx + 1) }
        }
    }

    pub fn vertex_pos(&self, v: usize) -> (f64, f64) {
        let (i, j) = self.vertex_ij(v);
        (self.rect.x0 + i as f64 * self.hx(), self.rect.y0 + j as f64 * self.hy())
    }

    /// (tail, head) following the edge direction.
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        let c = self.edge(e);
        match c.axis {
            Axis::X => (self.vertex(c.i, c.j), self.vertex(c.i + 1, c.j)),
            Axis::Y => (self.vertex(c.i, c.j), self.vertex(c.i, c.j + 1)),
        }
    }

    pub fn edge_midpoint(&self, e: usize) -> (f64, f64) {
        let (t, h) = self.edge_endpoints(e);
        let (a, b) = (self.vertex_pos(t), self.vertex_pos(h));
        (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))
    }

    pub fn face_center(&self, f: usize) -> (f64, f64) {
        let (i, j) = self.face_ij(f);
        (self.rect.x0 + (i as f64 + 0.5) * self.hx(), self.rect.y0 + (j as f64 + 0.5) * self.hy())
    }

    /// Oriented boundary of a face: bottom, right, top, left with signs.
    pub fn face_edges(&self, f: usize) -> [(usize, f64); 4] {
        let (i, j) = self.face_ij(f);
        [
            (self.xedge(i, j), 1.0),
            (self.yedge(i + 1, j), 1.0),
            (self.xedge(i, j + 1), -1.0),
            (self.yedge(i, j), -1.0),
        ]
    }

    pub fn vertex_on_side(&self, v: usize, side: Side) -> bool {
        let (i, j) = self.vertex_ij(v);
        match side {
            Side::Left => i == 0,
            Side::Right => i == self.nx,
            Side::Bottom => j == 0,
            Side::Top => j == self.ny,
        }
    }

    /// The side an edge lies on, if it is a boundary edge.
    pub fn edge_side(&self, e: usize) -> Option<Side> {
        let c = self.edge(e);
        match c.axis {
            Axis::X if c.j == 0 => Some(Side::Bottom),
            Axis::X if c.j == self.ny => Some(Side::Top),
            Axis::Y if c.i == 0 => Some(Side::Left),
            Axis::Y if c.i == self.nx => Some(Side::Right),
            _ => None,
        }
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        Side::ALL.iter().any(|&s| self.vertex_on_side(v, s))
    }

    /// Cells of the subcomplex `L` (union of the closed Dirichlet sides).
    pub fn subcomplex(&self, l: &BoundarySpec) -> CellMask {
        let mut m = CellMask::filled(self.counts(), false);
        for v in 0..self.n_vertices() {
            m.cells[0][v] = l.sides().iter().any(|&s| self.vertex_on_side(v, s));
        }
        for e in 0..self.n_edges() {
            m.cells[1][e] = self.edge_side(e).is_some_and(|s| l.contains(s));
        }
        m
    }

    /// Cells carrying relative cochains `C^q(X, L)`.
    pub fn relative_cells(&self, l: &BoundarySpec) -> CellMask {
        self.subcomplex(l).complement()
    }

    /// Boundary vertices in counterclockwise order, starting at the lower-left corner.
    pub fn boundary_vertex_cycle(&self) -> Vec<usize> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = Vec::with_capacity(2 * (nx + ny));
        out.extend((0..nx).map(|i| self.vertex(i, 0)));
        out.extend((0..ny).map(|j| self.vertex(nx, j)));
        out.extend((1..=nx).rev().map(|i| self.vertex(i, ny)));
        out.extend((1..=ny).rev().map(|j| self.vertex(0, j)));
        out
    }

    /// Boundary edges in counterclockwise order; edge `k` joins vertex `k` and `k + 1` of the vertex cycle.
    pub fn boundary_edge_cycle(&self) -> Vec<usize> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = Vec::with_capacity(2 * (nx + ny));
        out.extend((0..nx).map(|i| self.xedge(i, 0)));
        out.extend((0..ny).map(|j| self.yedge(nx, j)));
        out.extend((0..nx).rev().map(|i| self.xedge(i, ny)));
        out.extend((0..ny).rev().map(|j| self.yedge(0, j)));
        out
    }

    /// Signed incidence matrix `∂_q: C_q -> C_{q-1}`.
    pub fn boundary_operator(&self, q: usize) -> Result<SparseOperator> {
        match q {
            1 => {
                let mut t = Vec::with_capacity(2 * self.n_edges());
                for e in 0..self.n_edges() {
                    let (a, b) = self.edge_endpoints(e);
                    t.push((a, e, -1.0));
                    t.push((b, e, 1.0));
                }
                Ok(SparseOperator::from_triplets(self.n_vertices(), self.n_edges(), t))
            }
            2 => {
                let mut t = Vec::with_capacity(4 * self.n_faces());
                for f in 0..self.n_faces() {
                    for (e, s) in self.face_edges(f) {
                        t.push((e, f, s));
                    }
                }
                Ok(SparseOperator::from_triplets(self.n_edges(), self.n_faces(), t))
            }
            _ => Err(Error::Config(format!("boundary operator degree must be 1 or 2, got {q}"))),
        }
    }

    /// Coboundary `d_{q}: C^q -> C^{q+1}` as the transpose of `∂_{q+1}`.
    pub fn coboundary(&self, q: usize) -> Result<SparseOperator> {
        Ok(self.boundary_operator(q + 1)?.transpose())
    }

    pub fn chain(&self) -> ChainComplex {
        ChainComplex {
            counts: self.counts(),
            d0: self.coboundary(0).expect("degree 0"),
            d1: self.coboundary(1).expect("degree 1"),
        }
    }

    pub fn summary(&self, l: Option<&BoundarySpec>) -> ComplexSummary {
        ComplexSummary {
            rect: self.rect,
            nx: self.nx,
            ny: self.ny,
            vertices: self.n_vertices(),
            edges: self.n_edges(),
            faces: self.n_faces(),
            mesh: self.mesh(),
            dirichlet_sides: l.copied(),
        }
    }
}

/// Truncated dual complex with the duality bijections.
///
/// Dual vertices: face centers, then midpoints of boundary edges. Dual edges: one crossing
/// each edge of `X` (rotated a quarter turn counterclockwise), then one boundary edge per
/// boundary vertex. Dual faces: one per vertex of `X`.
#[derive(Debug, Clone)]
pub struct DualComplex {
    pub chain: ChainComplex,
    /// Dual vertex positions.
    pub vertex_pos: Vec<(f64, f64)>,
    /// Face of `X` -> interior dual vertex.
    pub face_to_vertex: Vec<usize>,
    /// Edge of `X` -> interior dual edge.
    pub edge_to_edge: Vec<usize>,
    /// Vertex of `X` -> dual face.
    pub vertex_to_face: Vec<usize>,
    /// Boundary edge of `X` -> boundary dual vertex.
    pub boundary_edge_to_vertex: Vec<Option<usize>>,
    /// Boundary vertex of `X` -> boundary dual edge.
    pub boundary_vertex_to_edge: Vec<Option<usize>>,
    /// Cells of the dual boundary.
    pub boundary: CellMask,
}

pub fn dual_complex(x: &CellComplex) -> DualComplex {
    let nf = x.n_faces();
    let ne = x.n_edges();
    let nv = x.n_vertices();
    let bverts = x.boundary_vertex_cycle();
    let bedges = x.boundary_edge_cycle();
    let nb = bedges.len();

    let mut vertex_pos: Vec<(f64, f64)> = (0..nf).map(|f| x.face_center(f)).collect();
    let mut boundary_edge_to_vertex = vec![None; ne];
    for &e in &bedges {
        boundary_edge_to_vertex[e] = Some(vertex_pos.len());
        vertex_pos.push(x.edge_midpoint(e));
    }
    let n0 = vertex_pos.len();

    // Faces on the two sides of an edge: (below/right, above/left) in the rotated direction.
    let side_faces = |e: usize| -> (Option<usize>, Option<usize>) {
        let c = x.edge(e);
        match c.axis {
            Axis::X => {
                let below = (c.j > 0).then(|| x.face(c.i, c.j - 1));
                let above = (c.j < x.ny()).then(|| x.face(c.i, c.j));
                (below, above)
            }
            Axis::Y => {
                let right = (c.i < x.nx()).then(|| x.face(c.i, c.j));
                let left = (c.i > 0).then(|| x.face(c.i - 1, c.j));
                (right, left)
            }
        }
    };

    let mut d0 = Vec::new();
    let edge_to_edge: Vec<usize> = (0..ne).collect();
    for e in 0..ne {
        let (from, to) = side_faces(e);
        let from = from.unwrap_or_else(|| boundary_edge_to_vertex[e].expect("boundary edge"));
        let to = to.unwrap_or_else(|| boundary_edge_to_vertex[e].expect("boundary edge"));
        d0.push((e, from, -1.0));
        d0.push((e, to, 1.0));
    }
    let mut boundary_vertex_to_edge = vec![None; nv];
    for (k, &v) in bverts.iter().enumerate() {
        let de = ne + k;
        boundary_vertex_to_edge[v] = Some(de);
        let prev = bedges[(k + nb - 1) % nb];
        let next = bedges[k];
        d0.push((de, boundary_edge_to_vertex[prev].unwrap(), -1.0));
        d0.push((de, boundary_edge_to_vertex[next].unwrap(), 1.0));
    }
    let n1 = ne + nb;

    // Around a vertex the crossing dual edge runs counterclockwise iff the vertex is its tail.
    let mut d1 = Vec::new();
    for e in 0..ne {
        let (t, h) = x.edge_endpoints(e);
        d1.push((t, e, 1.0));
        d1.push((h, e, -1.0));
    }
    for (k, &v) in bverts.iter().enumerate() {
        d1.push((v, ne + k, 1.0));
    }
    let vertex_to_face: Vec<usize> = (0..nv).collect();

    let mut boundary = CellMask::filled([n0, n1, nv], false);
    for k in nf..n0 {
        boundary.cells[0][k] = true;
    }
    for k in ne..n1 {
        boundary.cells[1][k] = true;
    }

    DualComplex {
        chain: ChainComplex {
            counts: [n0, n1, nv],
            d0: SparseOperator::from_triplets(n1, n0, d0),
            d1: SparseOperator::from_triplets(nv, n1, d1),
        },
        vertex_pos,
        face_to_vertex: (0..nf).collect(),
        edge_to_edge,
        vertex_to_face,
        boundary_edge_to_vertex,
        boundary_vertex_to_edge,
        boundary,
    }
}

impl DualComplex {
    /// Cells of `X̃` removed to form `X̃_L`: every image of a cell of `L` under either bijection.
    pub fn removed(&self, x: &CellComplex, l: &BoundarySpec) -> CellMask {
        let lm = x.subcomplex(l);
        let mut m = CellMask::filled(self.chain.counts, false);
        for v in lm.indices(0) {
            m.cells[2][self.vertex_to_face[v]] = true;
            if let Some(de) = self.boundary_vertex_to_edge[v] {
                m.cells[1][de] = true;
            }
        }
        for e in lm.indices(1) {
            m.cells[1][self.edge_to_edge[e]] = true;
            if let Some(dv) = self.boundary_edge_to_vertex[e] {
                m.cells[0][dv] = true;
            }
        }
        m
    }

    /// Dual boundary subcomplex `L̃`: boundary of `X̃` minus the image of `L`.
    pub fn dual_boundary(&self, x: &CellComplex, l: &BoundarySpec) -> CellMask {
        self.boundary.minus(&self.removed(x, l))
    }

    /// Cells carrying relative cochains `C^q(X̃_L, L̃)`.
    pub fn relative_cells(&self, x: &CellComplex, l: &BoundarySpec) -> CellMask {
        CellMask::filled(self.chain.counts, true).minus(&self.removed(x, l)).minus(&self.boundary)
    }
}

/// Which cells receive a pendant unit-weight edge.
#[derive(Debug, Clone, PartialEq)]
pub enum Legs {
    None,
    /// Every boundary cell of `X`.
    AllBoundary,
    /// The cells of the given Dirichlet subcomplex.
    On(BoundarySpec),
}

/// A cell of `X` referenced by dimension and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellRef {
    pub dim: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleVertex {
    /// Underlying cell, or `None` for the univalent end of a leg.
    pub cell: Option<CellRef>,
    pub white: bool,
    pub pos: (f64, f64),
}

/// Bipartite double `D(X)`; white vertices are the 1-cells.
#[derive(Debug, Clone)]
pub struct DoubleComplex {
    pub vertices: Vec<DoubleVertex>,
    /// Edges as (black, white) vertex pairs.
    pub edges: Vec<(usize, usize)>,
    /// Quadrilateral faces as cycles of vertex indices (vertex, edge, face, edge).
    pub faces: Vec<[usize; 4]>,
    /// Indices of leg edges.
    pub legs: Vec<usize>,
    /// Vertex index of each cell, if present.
    pub index_of: [Vec<Option<usize>>; 3],
}

pub fn double_complex(x: &CellComplex, removed: Option<&BoundarySpec>, legs: Legs) -> DoubleComplex {
    let gone = removed.map(|l| x.subcomplex(l)).unwrap_or_else(|| CellMask::filled(x.counts(), false));
    let mut vertices = Vec::new();
    let mut index_of: [Vec<Option<usize>>; 3] = [vec![None; x.n_vertices()], vec![None; x.n_edges()], vec![None; x.n_faces()]];
    let pos = |dim: usize, k: usize| match dim {
        0 => x.vertex_pos(k),
        1 => x.edge_midpoint(k),
        _ => x.face_center(k),
    };
    for dim in 0..3 {
        for k in 0..x.counts()[dim] {
            if dim < 2 && gone.cells[dim][k] {
                continue;
            }
            index_of[dim][k] = Some(vertices.len());
            vertices.push(DoubleVertex { cell: Some(CellRef { dim, index: k }), white: dim == 1, pos: pos(dim, k) });
        }
    }
    let mut edges = Vec::new();
    for e in 0..x.n_edges() {
        let Some(pe) = index_of[1][e] else { continue };
        let (t, h) = x.edge_endpoints(e);
        for v in [t, h] {
            if let Some(pv) = index_of[0][v] {
                edges.push((pv, pe));
            }
        }
    }
    let mut faces = Vec::new();
    for f in 0..x.n_faces() {
        let pf = index_of[2][f].unwrap();
        let fe = x.face_edges(f);
        for k in 0..4 {
            if let Some(pe) = index_of[1][fe[k].0] {
                edges.push((pf, pe));
            }
        }
        // Corners: consecutive boundary edges share a vertex.
        for k in 0..4 {
            let (e1, e2) = (fe[k].0, fe[(k + 1) % 4].0);
            let shared = {
                let (a, b) = x.edge_endpoints(e1);
                let (c, d) = x.edge_endpoints(e2);
                if a == c || a == d {
                    a
                } else {
                    debug_assert!(b == c || b == d);
                    b
                }
            };
            if let (Some(pv), Some(p1), Some(p2)) = (index_of[0][shared], index_of[1][e1], index_of[1][e2]) {
                faces.push([pv, p1, pf, p2]);
            }
        }
    }
    edges.sort_unstable();
    let leg_cells: Option<CellMask> = match &legs {
        Legs::None => None,
        Legs::AllBoundary => {
            let mut m = CellMask::filled(x.counts(), false);
            for v in x.boundary_vertex_cycle() {
                m.cells[0][v] = true;
            }
            for e in x.boundary_edge_cycle() {
                m.cells[1][e] = true;
            }
            Some(m)
        }
        Legs::On(l) => Some(x.subcomplex(l)),
    };
    let mut leg_edges = Vec::new();
    if let Some(m) = leg_cells {
        for dim in 0..2 {
            for k in m.indices(dim) {
                let Some(p) = index_of[dim][k] else { continue };
                let base = pos(dim, k);
                let q = vertices.len();
                vertices.push(DoubleVertex { cell: None, white: dim != 1, pos: base });
                leg_edges.push(edges.len());
                edges.push(if dim == 1 { (q, p) } else { (p, q) });
            }
        }
    }
    DoubleComplex { vertices, edges, faces, legs: leg_edges, index_of }
}

impl DoubleComplex {
    pub fn n_white(&self) -> usize {
        self.vertices.iter().filter(|v| v.white).count()
    }

    pub fn n_black(&self) -> usize {
        self.vertices.len() - self.n_white()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_formula() {
        let x = CellComplex::new(Rect::unit(), 3, 2).unwrap();
        assert_eq!(x.counts(), [12, 17, 6]);
        let x = CellComplex::unit_square(1);
        assert_eq!(x.counts(), [4, 4, 1]);
    }

    #[test]
    fn degenerate_rect_rejected() {
        assert!(matches!(Rect::new(0.0, 0.0, 0.0, 1.0), Err(Error::InvalidDomain(_))));
        assert!(CellComplex::new(Rect::unit(), 0, 3).is_err());
    }

    #[test]
    fn boundary_of_single_face_is_ccw() {
        let x = CellComplex::unit_square(1);
        let d2 = x.boundary_operator(2).unwrap();
        // bottom +, right +, top -, left -
        assert_eq!(d2.get(x.xedge(0, 0), 0), 1.0);
        assert_eq!(d2.get(x.yedge(1, 0), 0), 1.0);
        assert_eq!(d2.get(x.xedge(0, 1), 0), -1.0);
        assert_eq!(d2.get(x.yedge(0, 0), 0), -1.0);
    }

    #[test]
    fn dual_chain_squares_to_zero() {
        for (nx, ny) in [(1, 1), (2, 3), (4, 2)] {
            let x = CellComplex::new(Rect::unit(), nx, ny).unwrap();
            let d = dual_complex(&x);
            assert_eq!(d.chain.d1.mul(&d.chain.d0).nnz(), 0);
        }
    }

    #[test]
    fn proper_arcs() {
        use Side::*;
        assert!(BoundarySpec::new(&[Left]).unwrap().is_proper_arc());
        assert!(BoundarySpec::new(&[Left, Bottom]).unwrap().is_proper_arc());
        assert!(!BoundarySpec::new(&[Left, Right]).unwrap().is_proper_arc());
        assert!(BoundarySpec::new(&[Left, Right, Top]).unwrap().is_proper_arc());
        assert!(!BoundarySpec::all().is_proper_arc());
        assert!(BoundarySpec::new(&[]).is_err());
    }
}
