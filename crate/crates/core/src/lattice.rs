//! Embedded square and hexagonal lattice domains.
//!
//! A [`LatticeDomain`] is a finite, simply connected union of lattice faces.
//! Besides vertices, edges and faces it records, for every vertex, the full
//! star of lattice directions: directions carrying a domain edge, and
//! directions that leave the domain. The latter are *ports*: half-edges
//! sticking out of the boundary, whose midpoints are the boundary mid-edges
//! used by the Ising and O(N) observables.
//!
//! Mid-edges are numbered `0..edge_count()` for domain edges followed by
//! `edge_count()..mid_edge_count()` for ports.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type MidEdgeId = usize;
pub type PortId = usize;

/// Integer lattice key. Square: `(i, j)` at `ε(i + ij)`. Hexagonal:
/// `(x, y)` at `ε(x·√3/2 + i·y/2)`.
pub type Key = (i64, i64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Square,
    Hexagonal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedEdge {
    pub edge: EdgeId,
    pub tail: VertexId,
    pub head: VertexId,
    /// Unit vector `(head − tail)/|head − tail|`.
    pub direction: Complex64,
}

impl OrientedEdge {
    pub fn reversed(&self) -> Self {
        OrientedEdge {
            edge: self.edge,
            tail: self.head,
            head: self.tail,
            direction: -self.direction,
        }
    }
}

/// A half-edge leaving the domain at a boundary vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Port {
    pub vertex: VertexId,
    /// Outward unit direction.
    pub direction: Complex64,
}

/// One slot of a vertex star: either an edge to a neighbor or a port.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfEdge {
    pub mid: MidEdgeId,
    pub direction: Complex64,
    /// Other endpoint for domain edges, `None` for ports.
    pub neighbor: Option<VertexId>,
}

/// Counterclockwise star of a vertex, including ports.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexStar {
    pub center: VertexId,
    pub neighbors: Vec<HalfEdge>,
}

impl VertexStar {
    /// Consecutive (counterclockwise) pairs of slots with the unit bisector
    /// of the angle between them.
    pub fn corners(&self) -> Vec<(HalfEdge, HalfEdge, Complex64)> {
        let n = self.neighbors.len();
        (0..n)
            .map(|k| {
                let p = self.neighbors[k];
                let q = self.neighbors[(k + 1) % n];
                (p, q, bisector(p.direction, q.direction))
            })
            .collect()
    }
}

/// Unit bisector of the counterclockwise angle from `p` to `q`.
pub fn bisector(p: Complex64, q: Complex64) -> Complex64 {
    let mut angle = (q / p).arg();
    if angle <= 0.0 {
        angle += 2.0 * PI;
    }
    p * Complex64::from_polar(1.0, angle / 2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    /// Counterclockwise vertex cycle.
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    pub center: Complex64,
}

/// Dobrushin marks as indices into the boundary cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marks {
    pub a: usize,
    pub b: usize,
}

#[derive(Clone, Debug)]
pub struct LatticeDomain {
    kind: LatticeKind,
    mesh: f64,
    keys: Vec<Key>,
    key_index: HashMap<Key, VertexId>,
    vertices: Vec<Complex64>,
    edges: Vec<[VertexId; 2]>,
    edge_faces: Vec<Vec<usize>>,
    faces: Vec<Face>,
    stars: Vec<VertexStar>,
    ports: Vec<Port>,
    boundary: Vec<OrientedEdge>,
    marks: Option<Marks>,
}

fn key_position(kind: LatticeKind, mesh: f64, key: Key) -> Complex64 {
    match kind {
        LatticeKind::Square => Complex64::new(key.0 as f64, key.1 as f64) * mesh,
        LatticeKind::Hexagonal => {
            Complex64::new(key.0 as f64 * 3f64.sqrt() / 2.0, key.1 as f64 / 2.0) * mesh
        }
    }
}

/// Key offsets of all lattice neighbors of a vertex.
fn lattice_offsets(kind: LatticeKind, key: Key) -> Vec<Key> {
    match kind {
        LatticeKind::Square => vec![(1, 0), (0, 1), (-1, 0), (0, -1)],
        LatticeKind::Hexagonal => {
            if key.1.rem_euclid(3) == 2 {
                vec![(0, 2), (1, -1), (-1, -1)]
            } else {
                vec![(0, -2), (1, 1), (-1, 1)]
            }
        }
    }
}

fn offset_direction(kind: LatticeKind, off: Key) -> Complex64 {
    let v = key_position(kind, 1.0, off);
    v / v.norm()
}

fn ccw_angle(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

impl LatticeDomain {
    /// Builds a domain from faces given as counterclockwise key cycles.
    pub fn from_faces(kind: LatticeKind, mesh: f64, face_keys: &[Vec<Key>]) -> Result<Self> {
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(invalid(format!("mesh must be positive, got {mesh}")));
        }
        if face_keys.is_empty() {
            return Err(invalid("domain has no faces"));
        }
        let mut keys = Vec::new();
        let mut key_index = HashMap::new();
        let mut edges: Vec<[VertexId; 2]> = Vec::new();
        let mut edge_index: HashMap<(VertexId, VertexId), EdgeId> = HashMap::new();
        let mut edge_faces: Vec<Vec<usize>> = Vec::new();
        let mut faces = Vec::with_capacity(face_keys.len());

        for (fid, cycle) in face_keys.iter().enumerate() {
            let mut fv = Vec::with_capacity(cycle.len());
            for &k in cycle {
                let id = *key_index.entry(k).or_insert_with(|| {
                    keys.push(k);
                    keys.len() - 1
                });
                fv.push(id);
            }
            let mut fe = Vec::with_capacity(cycle.len());
            for i in 0..fv.len() {
                let (u, v) = (fv[i], fv[(i + 1) % fv.len()]);
                let lo_hi = (u.min(v), u.max(v));
                let e = *edge_index.entry(lo_hi).or_insert_with(|| {
                    edges.push([lo_hi.0, lo_hi.1]);
                    edge_faces.push(Vec::new());
                    edges.len() - 1
                });
                if edge_faces[e].contains(&fid) {
                    return Err(invalid("degenerate face"));
                }
                edge_faces[e].push(fid);
                if edge_faces[e].len() > 2 {
                    return Err(invalid("edge shared by more than two faces"));
                }
                fe.push(e);
            }
            faces.push((fv, fe));
        }

        let vertices: Vec<Complex64> = keys.iter().map(|&k| key_position(kind, mesh, k)).collect();
        let faces: Vec<Face> = faces
            .into_iter()
            .map(|(fv, fe)| {
                let center = fv.iter().map(|&v| vertices[v]).sum::<Complex64>() / fv.len() as f64;
                Face {
                    vertices: fv,
                    edges: fe,
                    center,
                }
            })
            .collect();

        // Stars with ports for missing lattice directions.
        let mut adjacency: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); keys.len()];
        for (e, &[u, v]) in edges.iter().enumerate() {
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
        }
        let edge_count = edges.len();
        let mut raw_ports: Vec<Vec<Complex64>> = vec![Vec::new(); keys.len()];
        let mut stars = Vec::with_capacity(keys.len());
        for v in 0..keys.len() {
            let mut slots = Vec::new();
            for off in lattice_offsets(kind, keys[v]) {
                let nk = (keys[v].0 + off.0, keys[v].1 + off.1);
                let dir = offset_direction(kind, off);
                match key_index.get(&nk).and_then(|&n| {
                    adjacency[v].iter().find(|&&(w, _)| w == n).copied()
                }) {
                    Some((n, e)) => slots.push(HalfEdge {
                        mid: e,
                        direction: dir,
                        neighbor: Some(n),
                    }),
                    None => raw_ports[v].push(dir),
                }
            }
            if slots.len() != adjacency[v].len() {
                return Err(invalid("edge does not follow a lattice direction"));
            }
            stars.push(slots);
        }

        let mut dom = LatticeDomain {
            kind,
            mesh,
            keys,
            key_index,
            vertices,
            edges,
            edge_faces,
            faces,
            stars: Vec::new(),
            ports: Vec::new(),
            boundary: Vec::new(),
            marks: None,
        };
        dom.boundary = dom.trace_boundary()?;
        if dom.vertex_count() as i64 - dom.edge_count() as i64 + dom.face_count() as i64 != 1 {
            return Err(invalid("domain is not simply connected"));
        }

        // Ports in boundary order; at a corner, counterclockwise from the
        // reversed incoming direction.
        let nb = dom.boundary.len();
        let mut ports = Vec::new();
        let mut port_of: Vec<Vec<(Complex64, PortId)>> = vec![Vec::new(); dom.keys.len()];
        for k in 0..nb {
            let oe = dom.boundary[k];
            let back = -dom.boundary[(k + nb - 1) % nb].direction;
            let v = oe.tail;
            let mut dirs = raw_ports[v].clone();
            dirs.sort_by(|p, q| ccw_angle(p / back).total_cmp(&ccw_angle(q / back)));
            for d in dirs {
                port_of[v].push((d, ports.len()));
                ports.push(Port {
                    vertex: v,
                    direction: d,
                });
            }
        }
        let total_raw: usize = raw_ports.iter().map(Vec::len).sum();
        if ports.len() != total_raw {
            return Err(invalid("ports away from the boundary cycle"));
        }
        for (v, mut slots) in stars.into_iter().enumerate() {
            for &(d, p) in &port_of[v] {
                slots.push(HalfEdge {
                    mid: edge_count + p,
                    direction: d,
                    neighbor: None,
                });
            }
            slots.sort_by(|p, q| ccw_angle(p.direction).total_cmp(&ccw_angle(q.direction)));
            dom.stars.push(VertexStar {
                center: v,
                neighbors: slots,
            });
        }
        dom.ports = ports;
        Ok(dom)
    }

    fn trace_boundary(&self) -> Result<Vec<OrientedEdge>> {
        let mut outgoing: HashMap<VertexId, OrientedEdge> = HashMap::new();
        let mut count = 0;
        for face in &self.faces {
            let n = face.vertices.len();
            for i in 0..n {
                let e = face.edges[i];
                if self.edge_faces[e].len() == 1 {
                    let (t, h) = (face.vertices[i], face.vertices[(i + 1) % n]);
                    if outgoing.insert(t, self.oriented(e, t)).is_some() {
                        return Err(invalid("boundary touches itself (pinched domain)"));
                    }
                    debug_assert_eq!(self.oriented(e, t).head, h);
                    count += 1;
                }
            }
        }
        let start = outgoing
            .keys()
            .copied()
            .min_by(|&u, &v| {
                let (pu, pv) = (self.vertices[u], self.vertices[v]);
                pu.im.total_cmp(&pv.im).then(pu.re.total_cmp(&pv.re))
            })
            .ok_or_else(|| invalid("domain has no boundary"))?;
        let mut cycle = Vec::with_capacity(count);
        let mut v = start;
        loop {
            let oe = outgoing[&v];
            cycle.push(oe);
            v = oe.head;
            if v == start || cycle.len() > count {
                break;
            }
        }
        if cycle.len() != count {
            return Err(invalid("boundary is not a single cycle"));
        }
        Ok(cycle)
    }

    // --- builders -------------------------------------------------------

    /// Square-lattice rectangle covering `[0, cells_x·ε] × [0, cells_y·ε]`.
    pub fn rectangle(cells_x: usize, cells_y: usize, mesh: f64) -> Result<Self> {
        if cells_x == 0 || cells_y == 0 {
            return Err(invalid("rectangle needs at least one cell in each direction"));
        }
        let cells: Vec<Key> = (0..cells_y as i64)
            .flat_map(|j| (0..cells_x as i64).map(move |i| (i, j)))
            .collect();
        Self::from_square_cells(&cells, mesh)
    }

    /// Square-lattice domain from unit cells given by lower-left keys.
    pub fn from_square_cells(cells: &[Key], mesh: f64) -> Result<Self> {
        let faces: Vec<Vec<Key>> = cells
            .iter()
            .map(|&(i, j)| vec![(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)])
            .collect();
        Self::from_faces(LatticeKind::Square, mesh, &faces)
    }

    /// Staircase discretization of the disk `|z| < radius`: the largest
    /// edge-connected set of whole cells (containing the cell at the origin)
    /// whose closures lie in the closed disk.
    pub fn disk(radius: f64, mesh: f64) -> Result<Self> {
        if !(radius > 0.0 && mesh > 0.0) {
            return Err(invalid("radius and mesh must be positive"));
        }
        let inside = disk_cells(radius, mesh);
        if inside.is_empty() {
            return Err(invalid(format!(
                "radius {radius} too small for one cell of mesh {mesh}"
            )));
        }
        // Keep the component containing the cell nearest the origin.
        let set: std::collections::HashSet<Key> = inside.iter().copied().collect();
        let seed = *inside
            .iter()
            .min_by_key(|&&(i, j)| ((2 * i + 1).pow(2) + (2 * j + 1).pow(2), i, j))
            .expect("nonempty");
        let mut comp = vec![seed];
        let mut seen: std::collections::HashSet<Key> = [seed].into_iter().collect();
        let mut k = 0;
        while k < comp.len() {
            let (i, j) = comp[k];
            for n in [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)] {
                if set.contains(&n) && seen.insert(n) {
                    comp.push(n);
                }
            }
            k += 1;
        }
        comp.sort_by_key(|&(i, j)| (j, i));
        Self::from_square_cells(&comp, mesh)
    }

    /// Hexagonal patch of all hexagons within `rings` steps of a central one.
    pub fn hex_patch(rings: usize, mesh: f64) -> Result<Self> {
        let r = rings as i64;
        let mut cells = Vec::new();
        for q in -r..=r {
            for s in (-r).max(-q - r)..=r.min(-q + r) {
                cells.push((q, s));
            }
        }
        cells.sort_by_key(|&(q, s)| (s, q));
        Self::from_hex_cells(&cells, mesh)
    }

    /// Hexagonal domain from axial hexagon coordinates `(q, r)`.
    pub fn from_hex_cells(cells: &[Key], mesh: f64) -> Result<Self> {
        const OFFSETS: [Key; 6] = [(1, 1), (0, 2), (-1, 1), (-1, -1), (0, -2), (1, -1)];
        let faces: Vec<Vec<Key>> = cells
            .iter()
            .map(|&(q, r)| {
                let c = (2 * q + r, 3 * r);
                OFFSETS.iter().map(|o| (c.0 + o.0, c.1 + o.1)).collect()
            })
            .collect();
        Self::from_faces(LatticeKind::Hexagonal, mesh, &faces)
    }

    /// Sets Dobrushin marks at boundary-cycle indices `a` and `b`.
    pub fn mark_dobrushin(mut self, a: usize, b: usize) -> Result<Self> {
        let n = self.boundary.len();
        if a >= n {
            return Err(Error::NotOnBoundary(format!("boundary index {a} (cycle has {n})")));
        }
        if b >= n {
            return Err(Error::NotOnBoundary(format!("boundary index {b} (cycle has {n})")));
        }
        if a == b {
            return Err(invalid("marked points a and b coincide"));
        }
        self.marks = Some(Marks { a, b });
        Ok(self)
    }

    /// Marks the boundary mid-edges nearest to the given points.
    pub fn mark_dobrushin_at(self, a: Complex64, b: Complex64) -> Result<Self> {
        let (ia, ib) = (self.nearest_boundary_edge(a), self.nearest_boundary_edge(b));
        self.mark_dobrushin(ia, ib)
    }

    // --- queries --------------------------------------------------------

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }
    pub fn mesh(&self) -> f64 {
        self.mesh
    }
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }
    pub fn port_count(&self) -> usize {
        self.ports.len()
    }
    pub fn mid_edge_count(&self) -> usize {
        self.edges.len() + self.ports.len()
    }
    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }
    pub fn vertex(&self, v: VertexId) -> Complex64 {
        self.vertices[v]
    }
    pub fn key(&self, v: VertexId) -> Key {
        self.keys[v]
    }
    pub fn vertex_by_key(&self, key: Key) -> Option<VertexId> {
        self.key_index.get(&key).copied()
    }
    pub fn edges(&self) -> &[[VertexId; 2]] {
        &self.edges
    }
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }
    pub fn ports(&self) -> &[Port] {
        &self.ports
    }
    pub fn port(&self, p: PortId) -> Port {
        self.ports[p]
    }
    pub fn star(&self, v: VertexId) -> &VertexStar {
        &self.stars[v]
    }
    pub fn boundary_cycle(&self) -> &[OrientedEdge] {
        &self.boundary
    }
    pub fn marks(&self) -> Option<Marks> {
        self.marks
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.stars[v].neighbors.iter().filter(|h| h.neighbor.is_some()).count()
    }

    /// Number of lattice directions at a vertex (4 square, 3 hexagonal).
    pub fn coordination(&self) -> usize {
        match self.kind {
            LatticeKind::Square => 4,
            LatticeKind::Hexagonal => 3,
        }
    }

    /// A vertex is interior when it carries no ports.
    pub fn is_interior(&self, v: VertexId) -> bool {
        self.degree(v) == self.coordination()
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count()).filter(move |&v| self.is_interior(v))
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, EdgeId)> + '_ {
        self.stars[v]
            .neighbors
            .iter()
            .filter_map(|h| h.neighbor.map(|n| (n, h.mid)))
    }

    /// The edge oriented to start at `tail`.
    pub fn oriented(&self, e: EdgeId, tail: VertexId) -> OrientedEdge {
        let [u, v] = self.edges[e];
        let head = if tail == u { v } else { u };
        let d = self.vertices[head] - self.vertices[tail];
        OrientedEdge {
            edge: e,
            tail,
            head,
            direction: d / d.norm(),
        }
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.neighbors(u).find(|&(w, _)| w == v).map(|(_, e)| e)
    }

    pub fn is_port(&self, m: MidEdgeId) -> bool {
        m >= self.edges.len()
    }

    pub fn port_mid(&self, p: PortId) -> MidEdgeId {
        self.edges.len() + p
    }

    pub fn mid_edge_position(&self, m: MidEdgeId) -> Complex64 {
        if m < self.edges.len() {
            let [u, v] = self.edges[m];
            (self.vertices[u] + self.vertices[v]) * 0.5
        } else {
            let p = self.ports[m - self.edges.len()];
            self.vertices[p.vertex] + p.direction * (0.5 * self.mesh)
        }
    }

    pub fn mid_edge_positions(&self) -> Vec<Complex64> {
        (0..self.mid_edge_count()).map(|m| self.mid_edge_position(m)).collect()
    }

    /// Endpoints of a mid-edge that belong to the domain.
    pub fn mid_edge_endpoints(&self, m: MidEdgeId) -> Vec<VertexId> {
        if m < self.edges.len() {
            self.edges[m].to_vec()
        } else {
            vec![self.ports[m - self.edges.len()].vertex]
        }
    }

    /// Faces adjacent to an edge (one for boundary edges, two otherwise).
    pub fn edge_faces(&self, e: EdgeId) -> &[usize] {
        &self.edge_faces[e]
    }

    pub fn is_boundary_edge(&self, e: EdgeId) -> bool {
        self.edge_faces[e].len() == 1
    }

    /// Dual edges: pairs of faces sharing an interior edge.
    pub fn dual_edges(&self) -> Vec<(usize, usize, EdgeId)> {
        self.edge_faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.len() == 2)
            .map(|(e, f)| (f[0], f[1], e))
            .collect()
    }

    /// Boundary-cycle indices from `from` (inclusive) to `to` (exclusive).
    pub fn arc(&self, from: usize, to: usize) -> Vec<usize> {
        let n = self.boundary.len();
        let mut out = Vec::new();
        let mut k = from % n;
        while k != to % n {
            out.push(k);
            k = (k + 1) % n;
        }
        out
    }

    /// The arcs `a → b` and `b → a` of a marked domain.
    pub fn arcs(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        self.marks.map(|m| (self.arc(m.a, m.b), self.arc(m.b, m.a)))
    }

    /// Boundary edge whose midpoint is closest to `z`; ties go to the
    /// smallest index.
    pub fn nearest_boundary_edge(&self, z: Complex64) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (k, oe) in self.boundary.iter().enumerate() {
            let d = ((self.vertices[oe.tail] + self.vertices[oe.head]) * 0.5 - z).norm();
            if d < best.0 - 1e-12 * self.mesh {
                best = (d, k);
            }
        }
        best.1
    }

    /// Port whose midpoint is closest to `z`; ties go to the smallest id.
    pub fn nearest_port(&self, z: Complex64) -> PortId {
        let mut best = (f64::INFINITY, 0);
        for p in 0..self.ports.len() {
            let d = (self.mid_edge_position(self.port_mid(p)) - z).norm();
            if d < best.0 - 1e-12 * self.mesh {
                best = (d, p);
            }
        }
        best.1
    }

    /// Port representing boundary edge `k`: among ports pointing along the
    /// edge's outward normal, the one nearest its midpoint.
    pub fn port_for_boundary_edge(&self, k: usize) -> PortId {
        let oe = self.boundary[k];
        let normal = oe.direction * Complex64::new(0.0, -1.0);
        let mid = (self.vertices[oe.tail] + self.vertices[oe.head]) * 0.5;
        let mut best = (f64::INFINITY, None);
        for (p, port) in self.ports.iter().enumerate() {
            if (port.direction - normal).norm() > 1e-9 {
                continue;
            }
            let d = (self.mid_edge_position(self.port_mid(p)) - mid).norm();
            if d < best.0 - 1e-12 * self.mesh {
                best = (d, Some(p));
            }
        }
        best.1.unwrap_or_else(|| self.nearest_port(mid))
    }

    /// Marked ports `(a, b)` derived from the Dobrushin marks.
    pub fn marked_ports(&self) -> Option<(PortId, PortId)> {
        self.marks
            .map(|m| (self.port_for_boundary_edge(m.a), self.port_for_boundary_edge(m.b)))
    }

    /// Sum of the exterior turning angles along the boundary cycle.
    pub fn boundary_turning(&self) -> f64 {
        let n = self.boundary.len();
        (0..n)
            .map(|k| (self.boundary[(k + 1) % n].direction / self.boundary[k].direction).arg())
            .sum()
    }

    /// The same domain reflected or rotated by a lattice symmetry of the
    /// square lattice (`quarter_turns` rotations, then optional mirror in
    /// the real axis).
    pub fn square_symmetry_image(&self, quarter_turns: u8, mirror: bool) -> Result<Self> {
        if self.kind != LatticeKind::Square {
            return Err(invalid("square symmetries need a square domain"));
        }
        let map = |(i, j): Key| -> Key {
            let (mut x, mut y) = (i, j);
            for _ in 0..quarter_turns % 4 {
                (x, y) = (-y, x);
            }
            if mirror {
                y = -y;
            }
            (x, y)
        };
        let faces: Vec<Vec<Key>> = self
            .faces
            .iter()
            .map(|f| {
                let mut cyc: Vec<Key> = f.vertices.iter().map(|&v| map(self.keys[v])).collect();
                if mirror {
                    cyc.reverse();
                }
                cyc
            })
            .collect();
        Self::from_faces(self.kind, self.mesh, &faces)
    }
}

/// Lower-left keys of all square cells whose closure lies in the closed
/// disk of the given radius, by direct geometric scan.
pub fn disk_cells(radius: f64, mesh: f64) -> Vec<Key> {
    let n = (radius / mesh).ceil() as i64 + 1;
    let r2 = radius * radius * (1.0 + 1e-12);
    let mut out = Vec::new();
    for j in -n..n {
        for i in -n..n {
            let inside = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)].iter().all(|&(x, y)| {
                let (x, y) = (x as f64 * mesh, y as f64 * mesh);
                x * x + y * y <= r2
            });
            if inside {
                out.push((i, j));
            }
        }
    }
    out
}

/// JSON domain description used by the CLI and the C interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells_x: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells_y: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rings: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub mesh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainShape {
    Square,
    Hex,
    Disk,
}

impl DomainSpec {
    pub fn build(&self) -> Result<LatticeDomain> {
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| invalid(format!("domain spec needs `{name}`")))
        };
        let dom = match self.kind {
            DomainShape::Square => {
                LatticeDomain::rectangle(need(self.cells_x, "cellsX")?, need(self.cells_y, "cellsY")?, self.mesh)?
            }
            DomainShape::Hex => LatticeDomain::hex_patch(need(self.rings, "rings")?, self.mesh)?,
            DomainShape::Disk => LatticeDomain::disk(
                self.radius.ok_or_else(|| invalid("domain spec needs `radius`"))?,
                self.mesh,
            )?,
        };
        match (self.a, self.b) {
            (Some(a), Some(b)) => dom.mark_dobrushin(a, b),
            (None, None) => Ok(dom),
            _ => Err(invalid("domain spec needs both `a` and `b` or neither")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_counts() {
        let d = LatticeDomain::rectangle(1, 1, 1.0).unwrap();
        assert_eq!((d.vertex_count(), d.edge_count(), d.face_count()), (4, 4, 1));
        let d = LatticeDomain::rectangle(2, 1, 0.5).unwrap();
        assert_eq!((d.vertex_count(), d.edge_count(), d.face_count()), (6, 7, 2));
        for (m, n) in [(3usize, 3usize), (4, 2), (1, 5)] {
            let d = LatticeDomain::rectangle(m, n, 1.0).unwrap();
            assert_eq!(d.vertex_count(), (m + 1) * (n + 1));
            assert_eq!(d.edge_count(), 2 * m * n + m + n);
            assert_eq!(d.face_count(), m * n);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(LatticeDomain::rectangle(0, 2, 1.0).is_err());
        assert!(LatticeDomain::rectangle(2, 2, 0.0).is_err());
        assert!(LatticeDomain::rectangle(2, 2, -1.0).is_err());
        assert!(LatticeDomain::disk(0.1, 1.0).is_err());
        assert!(LatticeDomain::hex_patch(1, 0.0).is_err());
    }

    #[test]
    fn hex_patch_counts() {
        let d = LatticeDomain::hex_patch(0, 1.0).unwrap();
        assert_eq!((d.face_count(), d.vertex_count(), d.edge_count()), (1, 6, 6));
        let d = LatticeDomain::hex_patch(1, 1.0).unwrap();
        assert_eq!((d.face_count(), d.vertex_count(), d.edge_count()), (7, 24, 30));
        let d = LatticeDomain::hex_patch(2, 1.0).unwrap();
        assert_eq!(d.face_count(), 1 + 6 + 12);
        for v in 0..d.vertex_count() {
            assert!(d.degree(v) == 2 || d.degree(v) == 3);
            assert_eq!(d.star(v).neighbors.len(), 3);
        }
    }

    #[test]
    fn disk_face_counts() {
        // Aligned grid: the four cells around the origin fit.
        let d = LatticeDomain::disk(1.0, 0.6).unwrap();
        assert_eq!(d.face_count(), 4);
        let d = LatticeDomain::disk(1.0, 0.25).unwrap();
        assert_eq!(d.face_count(), disk_cells(1.0, 0.25).len());
        let eps = 0.125;
        let d = LatticeDomain::disk(1.0, eps).unwrap();
        let f = d.face_count() as f64;
        assert!(f >= PI / (eps * eps) - 8.0 / eps && f <= PI / (eps * eps), "{f}");
    }

    #[test]
    fn mid_edges_are_edge_averages() {
        let d = LatticeDomain::hex_patch(1, 0.7).unwrap();
        for (e, &[u, v]) in d.edges().iter().enumerate() {
            let m = d.mid_edge_position(e);
            assert!((m - (d.vertex(u) + d.vertex(v)) / 2.0).norm() < 1e-15);
            let r = d.oriented(e, u).reversed();
            assert_eq!((r.tail, r.head), (v, u));
            assert!((r.direction + d.oriented(e, u).direction).norm() < 1e-15);
        }
    }

    #[test]
    fn euler_and_boundary_winding() {
        for d in [
            LatticeDomain::rectangle(3, 2, 0.5).unwrap(),
            LatticeDomain::disk(1.0, 0.2).unwrap(),
            LatticeDomain::hex_patch(2, 1.0).unwrap(),
        ] {
            let (v, e, f) = (d.vertex_count() as i64, d.edge_count() as i64, d.face_count() as i64);
            assert_eq!(v - e + f + 1, 2);
            assert!((d.boundary_turning() - 2.0 * PI).abs() < 1e-12);
            let n = d.boundary_cycle().len();
            for k in 0..n {
                assert_eq!(d.boundary_cycle()[k].head, d.boundary_cycle()[(k + 1) % n].tail);
            }
        }
    }

    #[test]
    fn interior_degrees() {
        let d = LatticeDomain::rectangle(3, 3, 1.0).unwrap();
        assert_eq!(d.interior_vertices().count(), 4);
        for v in d.interior_vertices() {
            assert_eq!(d.degree(v), 4);
        }
        // Every vertex has a full star of four slots including ports.
        assert!((0..d.vertex_count()).all(|v| d.star(v).neighbors.len() == 4));
        assert_eq!(d.port_count(), 4 * 16 - 2 * 24);
    }

    #[test]
    fn ports_follow_boundary_order() {
        let d = LatticeDomain::rectangle(1, 1, 1.0).unwrap();
        let dirs: Vec<Complex64> = d.ports().iter().map(|p| p.direction).collect();
        let expect = [(-1.0, 0.0), (0.0, -1.0), (0.0, -1.0), (1.0, 0.0)];
        for (got, want) in dirs.iter().zip(expect) {
            assert!((got - Complex64::new(want.0, want.1)).norm() < 1e-12);
        }
        assert_eq!(d.port_count(), 8);
    }

    #[test]
    fn corners_have_unit_bisectors() {
        let d = LatticeDomain::hex_patch(1, 1.0).unwrap();
        for v in 0..d.vertex_count() {
            for (p, q, alpha) in d.star(v).corners() {
                assert!((alpha.norm() - 1.0).abs() < 1e-14);
                let half = (q.direction / p.direction).arg().rem_euclid(2.0 * PI) / 2.0;
                assert!(((alpha / p.direction).arg() - half).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dobrushin_arcs() {
        let d = LatticeDomain::rectangle(1, 1, 1.0).unwrap().mark_dobrushin(0, 2).unwrap();
        let (ab, ba) = d.arcs().unwrap();
        assert_eq!((ab.len(), ba.len()), (2, 2));

        let d = LatticeDomain::rectangle(3, 3, 1.0)
            .unwrap()
            .mark_dobrushin_at(Complex64::new(1.5, 0.0), Complex64::new(1.5, 3.0))
            .unwrap();
        let (ab, ba) = d.arcs().unwrap();
        assert_eq!(ab.len() + ba.len(), 12);
        let mut all: Vec<usize> = ab.iter().chain(&ba).copied().collect();
        all.sort();
        assert_eq!(all, (0..12).collect::<Vec<_>>());
        assert_eq!(d.marks().unwrap(), Marks { a: 1, b: 7 });

        let d = LatticeDomain::rectangle(1, 1, 1.0).unwrap();
        assert!(d.clone().mark_dobrushin(1, 1).is_err());
        assert!(matches!(d.mark_dobrushin(0, 9), Err(Error::NotOnBoundary(_))));
    }

    #[test]
    fn dual_structure() {
        let d = LatticeDomain::rectangle(3, 2, 1.0).unwrap();
        let dual = d.dual_edges();
        let interior_edges = d.edge_count() - d.boundary_cycle().len();
        assert_eq!(dual.len(), interior_edges);
        // The bounded faces of the dual graph are the interior vertices.
        let dual_faces = dual.len() as i64 - d.face_count() as i64 + 1;
        assert_eq!(dual_faces as usize, d.interior_vertices().count());
        for (f, g, e) in dual {
            assert!(d.faces()[f].edges.contains(&e) && d.faces()[g].edges.contains(&e));
        }
    }

    #[test]
    fn symmetry_images_keep_counts() {
        let d = LatticeDomain::from_square_cells(&[(0, 0), (1, 0), (1, 1)], 1.0).unwrap();
        for t in 0..4 {
            for m in [false, true] {
                let img = d.square_symmetry_image(t, m).unwrap();
                assert_eq!(img.edge_count(), d.edge_count());
                assert_eq!(img.port_count(), d.port_count());
            }
        }
    }

    #[test]
    fn domain_spec_json() {
        let spec: DomainSpec =
            serde_json::from_str(r#"{"kind":"square","cellsX":3,"cellsY":2,"mesh":0.5,"a":0,"b":5}"#).unwrap();
        let d = spec.build().unwrap();
        assert_eq!(d.face_count(), 6);
        assert_eq!(d.marks(), Some(Marks { a: 0, b: 5 }));
        let bad: DomainSpec = serde_json::from_str(r#"{"kind":"hex","mesh":1.0}"#).unwrap();
        assert!(bad.build().is_err());
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"tri","mesh":1.0}"#).is_err());
    }
}
