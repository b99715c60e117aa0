use std::collections::{HashMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::MidEdgeField;
use crate::lattice::{LatticeDomain, LatticeKind, VertexId};

/// Height function on primal vertices and on cells (domain faces plus the
/// exterior cells touching the boundary).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HeightField {
    pub base: VertexId,
    pub vertex_values: Vec<f64>,
    pub cell_values: Vec<f64>,
    pub cell_centers: Vec<Complex64>,
    /// Whether each cell lies outside the domain.
    pub exterior: Vec<bool>,
    /// Largest mismatch between the two increments that define each
    /// vertex–cell step, per cell.
    pub cell_residuals: Vec<f64>,
    pub max_residual: f64,
}

impl HeightField {
    /// Smallest value over interior vertices and interior cells.
    pub fn interior_min(&self, domain: &LatticeDomain) -> f64 {
        let v = domain
            .interior_vertices()
            .map(|v| self.vertex_values[v])
            .fold(f64::INFINITY, f64::min);
        self.cell_values
            .iter()
            .zip(&self.exterior)
            .filter(|(_, &ext)| !ext)
            .map(|(&h, _)| h)
            .fold(v, f64::min)
    }

    /// Adds `c` to every value.
    pub fn shift(&mut self, c: f64) {
        for h in self.vertex_values.iter_mut().chain(self.cell_values.iter_mut()) {
            *h += c;
        }
    }

    /// Cell whose centre is closest to `z`.
    pub fn nearest_cell(&self, z: Complex64) -> usize {
        (0..self.cell_centers.len())
            .min_by(|&i, &j| (self.cell_centers[i] - z).norm().total_cmp(&(self.cell_centers[j] - z).norm()))
            .expect("a domain has at least one cell")
    }
}

struct Step {
    vertex: VertexId,
    cell: usize,
    increment: f64,
}

fn apothem(domain: &LatticeDomain) -> f64 {
    match domain.kind() {
        LatticeKind::Square => 0.5 * domain.mesh(),
        LatticeKind::Hexagonal => 0.5 * 3f64.sqrt() * domain.mesh(),
    }
}

/// Integrates `(1/2ε)·Im(F(z)²·Δ)` over every vertex–cell step, where `z` is
/// a mid-edge on the boundary of the cell incident to the vertex and `Δ` the
/// displacement from vertex to cell centre. Each step is defined by two
/// mid-edges; the height is propagated breadth-first from `base` with the
/// average of the two, and their disagreement is reported.
pub fn build_height(domain: &LatticeDomain, f: &MidEdgeField, base: VertexId) -> HeightField {
    let eps = domain.mesh();
    let ap = apothem(domain);
    let quant = |z: Complex64| ((z.re / eps * 1e6).round() as i64, (z.im / eps * 1e6).round() as i64);
    let mut cell_index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut centers = Vec::new();
    let mut exterior = Vec::new();
    for face in domain.faces() {
        cell_index.insert(quant(face.center), centers.len());
        centers.push(face.center);
        exterior.push(false);
    }

    let mut steps: HashMap<(VertexId, usize), Vec<f64>> = HashMap::new();
    for m in 0..domain.mid_edge_count() {
        let pos = domain.mid_edge_position(m);
        let ends = domain.mid_edge_endpoints(m);
        let d = {
            let t = pos - domain.vertex(ends[0]);
            t / t.norm()
        };
        let f2 = f.get(m) * f.get(m);
        for side in [Complex64::i(), -Complex64::i()] {
            let c = pos + side * d * ap;
            let cell = *cell_index.entry(quant(c)).or_insert_with(|| {
                centers.push(c);
                exterior.push(true);
                centers.len() - 1
            });
            let c = centers[cell];
            for &w in &ends {
                let inc = (f2 * (c - domain.vertex(w))).im / (2.0 * eps);
                steps.entry((w, cell)).or_default().push(inc);
            }
        }
    }
    let mut list: Vec<((VertexId, usize), Vec<f64>)> = steps.into_iter().collect();
    list.sort_by_key(|(k, _)| *k);
    integrate(domain, base, centers, exterior, list)
}

fn integrate(
    domain: &LatticeDomain,
    base: VertexId,
    centers: Vec<Complex64>,
    exterior: Vec<bool>,
    list: Vec<((VertexId, usize), Vec<f64>)>,
) -> HeightField {
    let steps: Vec<Step> = list
        .iter()
        .map(|&((vertex, cell), ref incs)| Step {
            vertex,
            cell,
            increment: incs.iter().sum::<f64>() / incs.len() as f64,
        })
        .collect();

    let nv = domain.vertex_count();
    let nc = centers.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv + nc];
    for (k, s) in steps.iter().enumerate() {
        adj[s.vertex].push(k);
        adj[nv + s.cell].push(k);
    }
    let mut h = vec![f64::NAN; nv + nc];
    h[base] = 0.0;
    let mut queue = VecDeque::from([base]);
    while let Some(node) = queue.pop_front() {
        for &k in &adj[node] {
            let s = &steps[k];
            let (other, value) = if node < nv {
                (nv + s.cell, h[node] + s.increment)
            } else {
                (s.vertex, h[node] - s.increment)
            };
            if h[other].is_nan() {
                h[other] = value;
                queue.push_back(other);
            }
        }
    }

    let mut cell_residuals = vec![0.0f64; nc];
    for ((_, cell), incs) in &list {
        let lo = incs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = incs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        cell_residuals[*cell] = cell_residuals[*cell].max(hi - lo);
    }
    let max_residual = cell_residuals.iter().copied().fold(0.0, f64::max);
    HeightField {
        base,
        vertex_values: h[..nv].to_vec(),
        cell_values: h[nv..].to_vec(),
        cell_centers: centers,
        exterior,
        cell_residuals,
        max_residual,
    }
}

/// Height function of a field satisfying the strong relation, built from
/// corner values. At a corner of `w` facing cell `f`, with bisector `α`,
/// the field is replaced by its projection on `√ᾱ·ℝ` rotated by
/// `e^{−iπ/4}`, and the step `w → f` gets `(1/2ε)·Im(F̂²·(f − w))`, which
/// equals `−(ε/√2)·Re(√α·F)²/(2ε)`. The two mid-edges of a corner give two
/// such values; their disagreement is the strong residual and is reported
/// per cell. Only square domains are supported.
pub fn build_height_projected(domain: &LatticeDomain, f: &MidEdgeField, base: VertexId) -> HeightField {
    let eps = domain.mesh();
    let quant = |z: Complex64| ((z.re / eps * 1e6).round() as i64, (z.im / eps * 1e6).round() as i64);
    let mut cell_index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut centers = Vec::new();
    let mut exterior = Vec::new();
    for face in domain.faces() {
        cell_index.insert(quant(face.center), centers.len());
        centers.push(face.center);
        exterior.push(false);
    }
    let rot = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let mut list: Vec<((VertexId, usize), Vec<f64>)> = Vec::new();
    for w in 0..domain.vertex_count() {
        let vw = domain.vertex(w);
        for (p, q, alpha) in domain.star(w).corners() {
            let c = vw + alpha * (eps * std::f64::consts::FRAC_1_SQRT_2);
            let cell = *cell_index.entry(quant(c)).or_insert_with(|| {
                centers.push(c);
                exterior.push(true);
                centers.len() - 1
            });
            let dz = centers[cell] - vw;
            let s = alpha.sqrt();
            let incs = [p.mid, q.mid]
                .iter()
                .map(|&m| {
                    let proj = s.conj() * (s * f.get(m)).re * rot;
                    (proj * proj * dz).im / (2.0 * eps)
                })
                .collect();
            list.push(((w, cell), incs));
        }
    }
    list.sort_by_key(|(k, _)| *k);
    integrate(domain, base, centers, exterior, list)
}
