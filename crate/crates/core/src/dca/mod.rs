//! Discrete complex analysis: Laplacian, gradients and Kirchhoff laws,
//! both Cauchy–Riemann residuals, the strong (spin) relation, contour
//! integrals, the Dirichlet solver and the height function.

mod dirichlet;
mod height;

use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeDomain, LatticeKind, MidEdgeId, OrientedEdge, VertexId};

pub use dirichlet::{solve_dirichlet, solve_dirichlet_with, DirichletOptions, DirichletSolution};
pub use height::{build_height, build_height_projected, HeightField};

/// Complex values on mid-edges, indexed by mid-edge id (edges first, then
/// ports).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidEdgeField {
    pub values: Vec<Complex64>,
}

impl MidEdgeField {
    pub fn zeros(domain: &LatticeDomain) -> Self {
        MidEdgeField {
            values: vec![Complex64::new(0.0, 0.0); domain.mid_edge_count()],
        }
    }

    pub fn from_fn(domain: &LatticeDomain, f: impl Fn(Complex64) -> Complex64) -> Self {
        MidEdgeField {
            values: domain.mid_edge_positions().into_iter().map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, m: MidEdgeId) -> Complex64 {
        self.values[m]
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        MidEdgeField {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// CSV with columns `id,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{i},{:.16e},{:.16e}\n", v.re, v.im));
        }
        s
    }
}

/// Antisymmetric function on oriented edges, stored once per edge in the
/// orientation `edges[e][0] → edges[e][1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFunction<T> {
    pub values: Vec<T>,
}

impl<T: Copy + Neg<Output = T>> EdgeFunction<T> {
    /// Value on the edge oriented from `oe.tail` to `oe.head`.
    pub fn at(&self, domain: &LatticeDomain, oe: &OrientedEdge) -> T {
        if domain.edges()[oe.edge][0] == oe.tail {
            self.values[oe.edge]
        } else {
            -self.values[oe.edge]
        }
    }

    pub fn between(&self, domain: &LatticeDomain, tail: VertexId, head: VertexId) -> Option<T> {
        domain
            .edge_between(tail, head)
            .map(|e| self.at(domain, &domain.oriented(e, tail)))
    }
}

/// Largest residual of a scan and where it occurred.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualReport {
    pub op: String,
    pub max_residual: f64,
    pub argmax_location: Option<usize>,
}

impl ResidualReport {
    pub fn new(op: &str) -> Self {
        ResidualReport {
            op: op.to_string(),
            max_residual: 0.0,
            argmax_location: None,
        }
    }

    pub fn record(&mut self, location: usize, residual: f64) {
        if self.argmax_location.is_none() || residual > self.max_residual {
            self.max_residual = residual;
            self.argmax_location = Some(location);
        }
    }
}

fn require_interior(domain: &LatticeDomain, u: VertexId) -> Result<()> {
    if u >= domain.vertex_count() {
        return Err(invalid(format!("vertex {u} out of range")));
    }
    if !domain.is_interior(u) {
        return Err(Error::NotInterior(u));
    }
    Ok(())
}

/// Σ over neighbors of `H(v) − H(u)`.
pub fn laplacian<T>(domain: &LatticeDomain, h: &[T], u: VertexId) -> Result<T>
where
    T: Copy + Default + Add<Output = T> + Sub<Output = T>,
{
    require_interior(domain, u)?;
    Ok(domain
        .neighbors(u)
        .fold(T::default(), |acc, (v, _)| acc + (h[v] - h[u])))
}

/// `F(u→v) = H(v) − H(u)`.
pub fn gradient<T>(domain: &LatticeDomain, h: &[T]) -> EdgeFunction<T>
where
    T: Copy + Sub<Output = T>,
{
    EdgeFunction {
        values: domain.edges().iter().map(|&[u, v]| h[v] - h[u]).collect(),
    }
}

/// Total current leaving `v`: Σ over neighbors `u` of `F(v→u)`.
pub fn kirchhoff_vertex<T>(domain: &LatticeDomain, f: &EdgeFunction<T>, v: VertexId) -> Result<T>
where
    T: Copy + Default + Add<Output = T> + Neg<Output = T>,
{
    require_interior(domain, v)?;
    Ok(domain.neighbors(v).fold(T::default(), |acc, (_, e)| {
        acc + f.at(domain, &domain.oriented(e, v))
    }))
}

/// Sum of `F` along a closed vertex sequence (first vertex repeated at the
/// end).
pub fn kirchhoff_cycle<T>(domain: &LatticeDomain, f: &EdgeFunction<T>, cycle: &[VertexId]) -> Result<T>
where
    T: Copy + Default + Add<Output = T> + Neg<Output = T>,
{
    if cycle.len() < 2 || cycle.first() != cycle.last() {
        return Err(Error::OpenContour);
    }
    let mut acc = T::default();
    for (k, w) in cycle.windows(2).enumerate() {
        acc = acc + f.between(domain, w[0], w[1]).ok_or(Error::DisconnectedPath(k))?;
    }
    Ok(acc)
}

/// Counterclockwise vertex cycle of a face, closed.
pub fn face_cycle(domain: &LatticeDomain, face: usize) -> Vec<VertexId> {
    let mut c = domain.faces()[face].vertices.clone();
    c.push(c[0]);
    c
}

/// The boundary cycle as a closed vertex sequence.
pub fn boundary_vertex_cycle(domain: &LatticeDomain) -> Vec<VertexId> {
    let mut c: Vec<VertexId> = domain.boundary_cycle().iter().map(|oe| oe.tail).collect();
    c.push(c[0]);
    c
}

fn square_shift(domain: &LatticeDomain, z: VertexId, di: i64, dj: i64) -> Result<VertexId> {
    if domain.kind() != LatticeKind::Square {
        return Err(invalid("Cauchy–Riemann residuals are defined on the square lattice"));
    }
    let (i, j) = domain.key(z);
    domain
        .vertex_by_key((i + di, j + dj))
        .ok_or_else(|| invalid(format!("vertex {z} lacks the neighbor at offset ({di},{dj})")))
}

/// `[F(z+iε) − F(z)] − i[F(z+ε) − F(z)]` on vertex values.
pub fn cr_first_residual(domain: &LatticeDomain, f: &[Complex64], z: VertexId) -> Result<Complex64> {
    let right = square_shift(domain, z, 1, 0)?;
    let up = square_shift(domain, z, 0, 1)?;
    Ok((f[up] - f[z]) - Complex64::i() * (f[right] - f[z]))
}

/// `[F(z+iε) − F(z+ε)] − i[F(z+ε(1+i)) − F(z)]` for the face with lower-left
/// corner `z`.
pub fn cr_residual(domain: &LatticeDomain, f: &[Complex64], z: VertexId) -> Result<Complex64> {
    let right = square_shift(domain, z, 1, 0)?;
    let up = square_shift(domain, z, 0, 1)?;
    let diag = square_shift(domain, z, 1, 1)?;
    Ok((f[up] - f[right]) - Complex64::i() * (f[diag] - f[z]))
}

/// Vertices that are lower-left corners of faces.
pub fn face_corners(domain: &LatticeDomain) -> Vec<VertexId> {
    domain
        .faces()
        .iter()
        .map(|f| {
            *f.vertices
                .iter()
                .min_by_key(|&&v| {
                    let (i, j) = domain.key(v);
                    (j, i)
                })
                .expect("faces are nonempty")
        })
        .collect()
}

/// `[F(q) + ᾱ·conj F(q)] − [F(p) + ᾱ·conj F(p)]` for consecutive mid-edges
/// `p`, `q` at `v`, with `α` the bisector of the corner between them.
pub fn strong_residual(
    domain: &LatticeDomain,
    f: &MidEdgeField,
    v: VertexId,
    p: MidEdgeId,
    q: MidEdgeId,
) -> Result<Complex64> {
    if v >= domain.vertex_count() {
        return Err(invalid(format!("vertex {v} out of range")));
    }
    let corner = domain
        .star(v)
        .corners()
        .into_iter()
        .find(|(h1, h2, _)| (h1.mid, h2.mid) == (p, q) || (h1.mid, h2.mid) == (q, p))
        .ok_or(Error::NotAdjacent(p, q, v))?;
    Ok(spin_projection_gap(f.get(p), f.get(q), corner.2))
}

pub fn spin_projection_gap(fp: Complex64, fq: Complex64, alpha: Complex64) -> Complex64 {
    let ab = alpha.conj();
    (fq + ab * fq.conj()) - (fp + ab * fp.conj())
}

/// Largest strong residual over all corners of the given vertices.
pub fn max_strong_residual(
    domain: &LatticeDomain,
    f: &MidEdgeField,
    vertices: impl IntoIterator<Item = VertexId>,
) -> ResidualReport {
    let mut rep = ResidualReport::new("strong_residual");
    for v in vertices {
        for (p, q, alpha) in domain.star(v).corners() {
            rep.record(v, spin_projection_gap(f.get(p.mid), f.get(q.mid), alpha).norm());
        }
    }
    rep
}

/// Σ F(midpoint)·Δz along a vertex path.
pub fn contour_integral(domain: &LatticeDomain, f: &MidEdgeField, path: &[VertexId]) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, w) in path.windows(2).enumerate() {
        let e = domain.edge_between(w[0], w[1]).ok_or(Error::DisconnectedPath(k))?;
        acc += f.get(e) * (domain.vertex(w[1]) - domain.vertex(w[0]));
    }
    Ok(acc)
}

/// Recovers a potential from a current satisfying both Kirchhoff laws by
/// integrating along a breadth-first tree from `base` (where `H = 0`).
pub fn potential<T>(domain: &LatticeDomain, f: &EdgeFunction<T>, base: VertexId) -> Vec<T>
where
    T: Copy + Default + Add<Output = T> + Neg<Output = T>,
{
    let n = domain.vertex_count();
    let mut h = vec![T::default(); n];
    let mut seen = vec![false; n];
    seen[base] = true;
    let mut queue = std::collections::VecDeque::from([base]);
    while let Some(u) = queue.pop_front() {
        for (v, e) in domain.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                h[v] = h[u] + f.at(domain, &domain.oriented(e, u));
                queue.push_back(v);
            }
        }
    }
    h
}

/// Primitive of a vertex field on the dual square lattice (face centres):
/// a diagonal step between faces sharing the corner `w` has increment
/// `F(w)·Δz`. The two diagonal classes of faces are integrated separately,
/// each from its first face, which is set to 0.
pub fn dual_primitive(domain: &LatticeDomain, f: &[Complex64]) -> Result<Vec<Complex64>> {
    if domain.kind() != LatticeKind::Square {
        return Err(invalid("dual primitive is defined on the square lattice"));
    }
    let corners = face_corners(domain);
    let index: std::collections::HashMap<(i64, i64), usize> = corners
        .iter()
        .enumerate()
        .map(|(k, &v)| (domain.key(v), k))
        .collect();
    let nf = domain.face_count();
    let mut out = vec![Complex64::new(0.0, 0.0); nf];
    let mut seen = vec![false; nf];
    for start in 0..nf {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            let (i, j) = domain.key(corners[a]);
            for (di, dj) in [(1, 1), (-1, 1), (-1, -1), (1, -1)] {
                let Some(&b) = index.get(&(i + di, j + dj)) else {
                    continue;
                };
                if seen[b] {
                    continue;
                }
                // Shared corner of the two cells.
                let w = domain
                    .vertex_by_key((i + (di + 1) / 2, j + (dj + 1) / 2))
                    .expect("cell corners exist");
                seen[b] = true;
                let dz = domain.faces()[b].center - domain.faces()[a].center;
                out[b] = out[a] + f[w] * dz;
                queue.push_back(b);
            }
        }
    }
    Ok(out)
}

/// Residual of the second Cauchy–Riemann identity for a face function on
/// the dual square around the interior vertex `v`.
pub fn dual_cr_residual(domain: &LatticeDomain, g: &[Complex64], v: VertexId) -> Result<Complex64> {
    require_interior(domain, v)?;
    let (i, j) = domain.key(v);
    let corners = face_corners(domain);
    let find = |k: (i64, i64)| {
        corners
            .iter()
            .position(|&c| domain.key(c) == k)
            .ok_or_else(|| invalid(format!("no cell at {k:?}")))
    };
    let sw = find((i - 1, j - 1))?;
    let se = find((i, j - 1))?;
    let ne = find((i, j))?;
    let nw = find((i - 1, j))?;
    Ok((g[nw] - g[se]) - Complex64::i() * (g[ne] - g[sw]))
}

/// Sum of `F` over the four diagonal neighbours minus four times the
/// centre: the Laplacian of the sublattice containing `v`.
pub fn sublattice_laplacian(domain: &LatticeDomain, f: &[Complex64], v: VertexId) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (di, dj) in [(1, 1), (-1, 1), (-1, -1), (1, -1)] {
        acc += f[square_shift(domain, v, di, dj)?] - f[v];
    }
    Ok(acc)
}

/// Cauchy–Riemann residual of a mid-edge field on the medial square
/// around an interior vertex: `[F(N) − F(S)] − i[F(E) − F(W)]`.
pub fn medial_cr_residual(domain: &LatticeDomain, f: &MidEdgeField, v: VertexId) -> Result<Complex64> {
    require_interior(domain, v)?;
    if domain.kind() != LatticeKind::Square {
        return Err(invalid("medial residual is defined on the square lattice"));
    }
    let slot = |d: Complex64| {
        domain
            .star(v)
            .neighbors
            .iter()
            .find(|h| (h.direction - d).norm() < 1e-9)
            .map(|h| f.get(h.mid))
            .expect("interior vertices have all four directions")
    };
    let i = Complex64::i();
    Ok((slot(i) - slot(-i)) - i * (slot(Complex64::new(1.0, 0.0)) - slot(Complex64::new(-1.0, 0.0))))
}

/// The same residual on the medial square inside a face.
pub fn medial_cr_residual_face(domain: &LatticeDomain, f: &MidEdgeField, face: usize) -> Result<Complex64> {
    if domain.kind() != LatticeKind::Square {
        return Err(invalid("medial residual is defined on the square lattice"));
    }
    let c = domain.faces()[face].center;
    let h = 0.5 * domain.mesh();
    let at = |off: Complex64| {
        domain.faces()[face]
            .edges
            .iter()
            .copied()
            .find(|&e| (domain.mid_edge_position(e) - (c + off)).norm() < 1e-9 * domain.mesh())
            .map(|e| f.get(e))
            .expect("square faces have four sides")
    };
    let i = Complex64::i();
    Ok((at(i * h) - at(-i * h)) - i * (at(Complex64::new(h, 0.0)) - at(Complex64::new(-h, 0.0))))
}
