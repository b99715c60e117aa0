//! O(N) loop model on the hexagonal lattice and its parafermionic
//! observable.

mod saw;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contours::{interface_counts, loop_count, Enumerator, EdgeMask, InterfaceCounts, TurnRule};
use crate::dca::MidEdgeField;
use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeDomain, LatticeKind, MidEdgeId, PortId, VertexId};

pub use saw::{connective_estimate, naive_saw_count, saw_count, ConnectiveReport, SawCensus, MU, SAW_SPLIT_DEPTH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Dense,
    Dilute,
}

/// Loop weight with the spin and edge weight of one of the two critical
/// branches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CriticalParams {
    pub n: f64,
    pub theta: f64,
    pub regime: Regime,
    pub spin: f64,
    pub lambda: Complex64,
    pub x: f64,
    pub tau: Complex64,
}

/// `N = 2cos θ` with `θ ∈ [0, π/2]`.
pub fn critical_params(n: f64, regime: Regime) -> Result<CriticalParams> {
    if !(0.0..=2.0).contains(&n) {
        return Err(invalid(format!("loop weight N = {n} must lie in [0, 2]")));
    }
    let theta = (n / 2.0).acos();
    let (spin, inv_x) = match regime {
        Regime::Dense => ((PI - 3.0 * theta) / (4.0 * PI), 2.0 * ((PI + theta) / 4.0).cos()),
        Regime::Dilute => ((PI + 3.0 * theta) / (4.0 * PI), 2.0 * ((PI - theta) / 4.0).cos()),
    };
    let sqrt_form = match regime {
        Regime::Dense => (2.0 - (2.0 - n).sqrt()).sqrt(),
        Regime::Dilute => (2.0 + (2.0 - n).sqrt()).sqrt(),
    };
    if (inv_x - sqrt_form).abs() > 1e-12 {
        return Err(invalid(format!("inconsistent critical weight for N = {n}")));
    }
    let p = CriticalParams {
        n,
        theta,
        regime,
        spin,
        lambda: Complex64::from_polar(1.0, -spin * PI / 3.0),
        x: 1.0 / sqrt_form,
        tau: Complex64::from_polar(1.0, 2.0 * PI / 3.0),
    };
    let (sign, k) = p.sigma_branch();
    let s = sign * (-0.75 + 3.0 * theta / (4.0 * PI)) - 0.5 - 1.5 * k as f64;
    if (s - spin).abs() > 1e-12 {
        return Err(invalid(format!("spin {spin} is off its branch")));
    }
    Ok(p)
}

impl CriticalParams {
    /// Same spin and loop weight, different edge weight.
    pub fn with_x(mut self, x: f64) -> Self {
        self.x = x;
        self
    }

    /// Sign and integer `k` of the branch
    /// `s = ±(−3/4 + 3θ/(4π)) − 1/2 − 3k/2` this spin lies on.
    pub fn sigma_branch(&self) -> (f64, i32) {
        match self.regime {
            Regime::Dense => (-1.0, 0),
            Regime::Dilute => (1.0, -1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TripletReport {
    /// `|N + τλ̄⁴ + τ̄λ⁴|`
    pub loop_residual: f64,
    /// `|1 + τxλ̄ + τ̄xλ|`
    pub edge_residual: f64,
}

pub fn verify_triplet_identities(p: &CriticalParams) -> TripletReport {
    let (l, t) = (p.lambda, p.tau);
    TripletReport {
        loop_residual: (p.n + t * l.conj().powi(4) + t.conj() * l.powi(4)).norm(),
        edge_residual: (1.0 + t * p.x * l.conj() + t.conj() * p.x * l).norm(),
    }
}

/// A set of edges where every vertex has degree 0 or 2, except the
/// defects which have degree 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopConfig {
    pub edges: EdgeMask,
    pub defects: Vec<VertexId>,
}

impl LoopConfig {
    pub fn length(&self) -> u32 {
        self.edges.count_ones()
    }

    /// Closed loops, i.e. components that avoid the defects.
    pub fn loops(&self, domain: &LatticeDomain) -> u32 {
        let mut rest = self.edges;
        if let [a, _] = self.defects.as_slice() {
            // peel off the path starting at the first defect
            let mut v = *a;
            while let Some((u, e)) = domain.neighbors(v).find(|&(_, e)| rest >> e & 1 == 1) {
                rest &= !(1u128 << e);
                v = u;
            }
        }
        loop_count(domain, rest)
    }
}

fn require_hex(domain: &LatticeDomain) -> Result<()> {
    if domain.kind() != LatticeKind::Hexagonal {
        return Err(invalid("the O(N) model is defined on hexagonal domains"));
    }
    Ok(())
}

/// Every loop configuration with the given defects, each exactly once.
pub fn enumerate_loop_configs(
    domain: &LatticeDomain,
    defects: &[VertexId],
    budget_log2: u32,
) -> Result<impl Iterator<Item = LoopConfig>> {
    require_hex(domain)?;
    let en = Enumerator::new(domain, defects, budget_log2)?;
    let mut d: Vec<VertexId> = defects.to_vec();
    d.sort_unstable();
    d.dedup();
    if d.len() == 1 {
        d.clear();
    }
    Ok(en.iter().map(move |edges| LoopConfig { edges, defects: d.clone() }))
}

/// Exact counts of configurations by endpoint, turns, length and loops;
/// any `(N, x, s)` follows from [`LoopCounts::field`].
#[derive(Clone, Debug)]
pub struct LoopCounts {
    a_mid: MidEdgeId,
    mid_edges: usize,
    counts: InterfaceCounts,
}

impl LoopCounts {
    pub fn new(domain: &LatticeDomain, a: PortId, budget_log2: u32) -> Result<Self> {
        require_hex(domain)?;
        if a >= domain.port_count() {
            return Err(invalid(format!("port {a} out of range")));
        }
        Ok(LoopCounts {
            a_mid: domain.port_mid(a),
            mid_edges: domain.mid_edge_count(),
            counts: interface_counts(domain, a, budget_log2, TurnRule::Left, None, true)?,
        })
    }

    /// `Σ N^loops x^length` over loop configurations without defects.
    pub fn partition_function(&self, n: f64, x: f64) -> f64 {
        self.counts
            .even_loops
            .iter()
            .filter(|&&(_, loops, _)| n != 0.0 || loops == 0)
            .map(|&(size, loops, c)| c as f64 * n.powi(loops as i32) * x.powi(size as i32))
            .sum()
    }

    /// Normalized observable with `F(a) = 1`. Windings are counted in
    /// turns of π/3 from the inward direction at `a`.
    pub fn field(&self, n: f64, x: f64, spin: f64) -> MidEdgeField {
        let z = self.partition_function(n, x);
        let mut values = vec![Complex64::new(0.0, 0.0); self.mid_edges];
        for &(m, turns, len, loops, c) in &self.counts.entries {
            if n == 0.0 && loops > 0 {
                continue;
            }
            let w = Complex64::from_polar(1.0, -spin * PI / 3.0 * turns as f64);
            values[m] += w * (c as f64 * n.powi(loops as i32) * x.powi(len as i32));
        }
        for v in values.iter_mut() {
            *v /= z;
        }
        values[self.a_mid] = Complex64::new(1.0, 0.0);
        MidEdgeField { values }
    }

    /// Distinct exact turn counts realized at each mid-edge.
    pub fn turn_classes(&self) -> Vec<(MidEdgeId, Vec<i32>)> {
        let mut out: Vec<(MidEdgeId, Vec<i32>)> = Vec::new();
        for &(m, turns, ..) in &self.counts.entries {
            match out.last_mut() {
                Some((last, ts)) if *last == m => {
                    if ts.last() != Some(&turns) {
                        ts.push(turns);
                    }
                }
                _ => out.push((m, vec![turns])),
            }
        }
        out
    }
}

pub fn parafermionic_field(
    domain: &LatticeDomain,
    a: PortId,
    params: &CriticalParams,
    budget_log2: u32,
) -> Result<MidEdgeField> {
    Ok(LoopCounts::new(domain, a, budget_log2)?.field(params.n, params.x, params.spin))
}

/// The observable at one mid-edge, with `a` taken from the domain's marks.
pub fn parafermionic_observable(
    domain: &LatticeDomain,
    z: MidEdgeId,
    params: &CriticalParams,
    budget_log2: u32,
) -> Result<Complex64> {
    let (a, _) = domain
        .marked_ports()
        .ok_or_else(|| invalid("domain has no Dobrushin marks"))?;
    if z >= domain.mid_edge_count() {
        return Err(invalid(format!("mid-edge {z} out of range")));
    }
    Ok(parafermionic_field(domain, a, params, budget_log2)?.get(z))
}

/// `(p−v)F(p) + (q−v)F(q) + (r−v)F(r)` over the three mid-edges at `v`.
/// Ports count as mid-edges of the domain, so every vertex of a hexagonal
/// domain has all three.
pub fn vertex_relation_residual(domain: &LatticeDomain, f: &MidEdgeField, v: VertexId) -> Result<Complex64> {
    require_hex(domain)?;
    if v >= domain.vertex_count() {
        return Err(invalid(format!("vertex {v} out of range")));
    }
    let star = &domain.star(v).neighbors;
    if star.len() != 3 {
        return Err(Error::NotInterior(v));
    }
    let c = domain.vertex(v);
    Ok(star
        .iter()
        .map(|h| (domain.mid_edge_position(h.mid) - c) * f.get(h.mid))
        .sum())
}

/// `Σ F(z)η(z)` over the ports, with `η(z)` the outward half-edge vector
/// from the boundary vertex to `z`.
pub fn boundary_sum(domain: &LatticeDomain, f: &MidEdgeField) -> Complex64 {
    (0..domain.port_count())
        .map(|p| {
            let z = domain.port_mid(p);
            (domain.mid_edge_position(z) - domain.vertex(domain.port(p).vertex)) * f.get(z)
        })
        .sum()
}

/// `Σ N^loops x^length` over defect-free configurations, by enumeration.
pub fn partition_function(domain: &LatticeDomain, n: f64, x: f64, budget_log2: u32) -> Result<f64> {
    let mut z = 0.0;
    for c in enumerate_loop_configs(domain, &[], budget_log2)? {
        let loops = c.loops(domain);
        if n == 0.0 && loops > 0 {
            continue;
        }
        z += n.powi(loops as i32) * x.powi(c.length() as i32);
    }
    Ok(z)
}

/// Low-temperature Ising partition function on the triangular lattice
/// dual to the patch: one spin per hexagon, the exterior fixed to `+`,
/// each unequal neighboring pair contributing a factor `x`. Summed over
/// all `2^faces` spin assignments.
pub fn triangular_ising_partition(domain: &LatticeDomain, x: f64) -> Result<f64> {
    require_hex(domain)?;
    let faces = domain.face_count();
    if faces > 24 {
        return Err(Error::Budget { required: faces as u32, budget: 24 });
    }
    let sides: Vec<Vec<usize>> = (0..domain.edge_count()).map(|e| domain.edge_faces(e).to_vec()).collect();
    let mut hist = vec![0u64; domain.edge_count() + 1];
    for s in 0..1u64 << faces {
        let spin = |f: usize| s >> f & 1;
        let unequal = sides
            .iter()
            .filter(|fs| match fs.as_slice() {
                [f] => spin(*f) == 1,
                [f, g] => spin(*f) != spin(*g),
                _ => false,
            })
            .count();
        hist[unequal] += 1;
    }
    Ok(crate::contours::eval_histogram(&hist, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn anchors() {
        let p = critical_params(0.0, Regime::Dilute).unwrap();
        assert_relative_eq!(p.spin, 5.0 / 8.0, epsilon = 1e-15);
        assert_relative_eq!(p.x, 1.0 / (2.0 + 2f64.sqrt()).sqrt(), epsilon = 1e-15);
        let p = critical_params(1.0, Regime::Dilute).unwrap();
        assert_relative_eq!(p.x, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        let p = critical_params(1.0, Regime::Dense).unwrap();
        assert!(p.spin.abs() < 1e-15 && (p.x - 1.0).abs() < 1e-15);
        let p = critical_params(2.0, Regime::Dilute).unwrap();
        assert!(p.theta.abs() < 1e-15);
        assert_relative_eq!(p.x, 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(critical_params(2.5, Regime::Dense).is_err());
        assert!(critical_params(-0.1, Regime::Dilute).is_err());
    }

    #[test]
    fn triplets() {
        for n in [0.0, 0.5, 1.0, 1.5, 2.0] {
            for r in [Regime::Dense, Regime::Dilute] {
                let rep = verify_triplet_identities(&critical_params(n, r).unwrap());
                assert!(rep.loop_residual < 1e-12 && rep.edge_residual < 1e-12, "{n} {r:?} {rep:?}");
            }
        }
        let p = critical_params(1.0, Regime::Dilute).unwrap().with_x(0.5);
        let rep = verify_triplet_identities(&p);
        assert_relative_eq!(rep.edge_residual, 1.0 - 3f64.sqrt() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn config_counts() {
        let h = LatticeDomain::from_hex_cells(&[(0, 0)], 1.0).unwrap();
        assert_eq!(enumerate_loop_configs(&h, &[], 24).unwrap().count(), 2);
        let [u, v] = h.edges()[0];
        let arcs: Vec<LoopConfig> = enumerate_loop_configs(&h, &[u, v], 24).unwrap().collect();
        let mut lens: Vec<u32> = arcs.iter().map(|c| c.length()).collect();
        lens.sort();
        assert_eq!(lens, vec![1, 5]);
        assert!(arcs.iter().all(|c| c.loops(&h) == 0));
        let p = LatticeDomain::hex_patch(1, 1.0).unwrap();
        assert_eq!(enumerate_loop_configs(&p, &[], 24).unwrap().count(), 128);
        let sq = LatticeDomain::rectangle(2, 2, 1.0).unwrap();
        assert!(enumerate_loop_configs(&sq, &[], 24).is_err());
    }

    // Walks the hexagon from the vertex of port 0 to mid-edge `z`, either
    // counterclockwise or clockwise, and returns (turns, length).
    fn arc(h: &LatticeDomain, z: MidEdgeId, ccw: bool) -> (i32, i32) {
        let mut cycle = h.faces()[0].vertices.clone();
        if !ccw {
            cycle.reverse();
        }
        let av = h.port(0).vertex;
        let start = cycle.iter().position(|&w| w == av).unwrap();
        let ends = h.mid_edge_endpoints(z);
        let mut pts = vec![h.mid_edge_position(h.port_mid(0))];
        for k in 0..6 {
            let w = cycle[(start + k) % 6];
            pts.push(h.vertex(w));
            let next = cycle[(start + k + 1) % 6];
            let done = if h.is_port(z) { ends[0] == w } else { ends.contains(&w) && ends.contains(&next) };
            if done {
                break;
            }
        }
        pts.push(h.mid_edge_position(z));
        let dirs: Vec<Complex64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
        let turns = dirs.windows(2).map(|d| ((d[1] / d[0]).arg() / (PI / 3.0)).round() as i32).sum();
        (turns, pts.len() as i32 - 3 + 1)
    }

    #[test]
    fn one_hexagon_two_arcs() {
        let h = LatticeDomain::from_hex_cells(&[(0, 0)], 1.0).unwrap();
        let (s, x) = (0.3, 0.7);
        let f = LoopCounts::new(&h, 0, 24).unwrap().field(1.0, x, s);
        let lambda = Complex64::from_polar(1.0, -s * PI / 3.0);
        let z_part = 1.0 + x.powi(6);
        for z in 0..h.mid_edge_count() {
            if z == h.port_mid(0) {
                assert_eq!(f.get(z), Complex64::new(1.0, 0.0));
                continue;
            }
            let expected: Complex64 = [true, false]
                .iter()
                .map(|&ccw| {
                    let (t, len) = arc(&h, z, ccw);
                    lambda.powi(t) * x.powi(len)
                })
                .sum::<Complex64>()
                / z_part;
            assert!((f.get(z) - expected).norm() < 1e-14, "{z} {} {expected}", f.get(z));
        }
    }

    #[test]
    fn n_zero_has_no_loops() {
        let p = LatticeDomain::hex_patch(1, 1.0).unwrap();
        assert_eq!(partition_function(&p, 0.0, 0.5, 24).unwrap(), 1.0);
        let c = LoopCounts::new(&p, 0, 24).unwrap();
        assert_eq!(c.partition_function(0.0, 0.5), 1.0);
    }

    #[test]
    fn n_one_is_triangular_ising() {
        for cells in [vec![(0, 0)], vec![(0, 0), (1, 0), (0, 1)]] {
            let d = LatticeDomain::from_hex_cells(&cells, 1.0).unwrap();
            for x in [0.3, 1.0 / 3f64.sqrt()] {
                let a = partition_function(&d, 1.0, x, 24).unwrap();
                let b = triangular_ising_partition(&d, x).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn vertex_relation_at_criticality() {
        let d = LatticeDomain::hex_patch(1, 1.0).unwrap();
        for r in [Regime::Dense, Regime::Dilute] {
            for n in [0.0, 1.0, 2.0] {
                let p = critical_params(n, r).unwrap();
                let f = parafermionic_field(&d, 0, &p, 24).unwrap();
                let worst = (0..d.vertex_count())
                    .map(|v| vertex_relation_residual(&d, &f, v).unwrap().norm())
                    .fold(0.0, f64::max);
                assert!(worst < 1e-10, "{n} {r:?} {worst}");
                assert!(boundary_sum(&d, &f).norm() < 1e-9);
            }
        }
        let p = critical_params(0.0, Regime::Dilute).unwrap();
        let f = parafermionic_field(&d, 0, &p.with_x(0.9 * p.x), 24).unwrap();
        let worst = (0..d.vertex_count())
            .map(|v| vertex_relation_residual(&d, &f, v).unwrap().norm())
            .fold(0.0, f64::max);
        assert!(worst > 1e-4);
    }

    #[test]
    fn boundary_sum_telescopes() {
        let d = LatticeDomain::hex_patch(1, 0.5).unwrap();
        let f = MidEdgeField::from_fn(&d, |p| Complex64::new(p.re * 0.37 + p.im, (3.0 * p.re).sin()));
        let total: Complex64 = (0..d.vertex_count())
            .map(|v| vertex_relation_residual(&d, &f, v).unwrap())
            .sum();
        assert!((total - boundary_sum(&d, &f)).norm() < 1e-12);
        let one = MidEdgeField::from_fn(&d, |_| Complex64::new(1.0, 0.0));
        assert!(boundary_sum(&d, &one).norm() < 1e-12);
        assert_eq!(boundary_sum(&d, &MidEdgeField::zeros(&d)), Complex64::new(0.0, 0.0));
    }
}
