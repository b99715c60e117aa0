use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::{FermionicWeightSpec, IsingParams};
use crate::contours::{
    eval_histogram, interface_counts, trace, visit_interfaces, ContourConfig, InterfaceCounts, InterfaceTrace,
    TurnRule,
};
use crate::dca::MidEdgeField;
use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeDomain, LatticeKind, MidEdgeId, PortId};

/// A traced interface with its winding and fermionic weight.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingTrace {
    pub trace: InterfaceTrace,
    /// Σ signed turns · π/2.
    pub winding_angle: f64,
    pub weight: Complex64,
}

fn require_square(domain: &LatticeDomain) -> Result<()> {
    if domain.kind() != LatticeKind::Square {
        return Err(invalid("the Ising observable is defined on square domains"));
    }
    Ok(())
}

/// Traces the interface of `config` from port `a` to mid-edge `z`. The
/// configuration's defects must be `a`'s vertex and an endpoint of `z`. The
/// weight is `exp(−i·s·θ)` with `θ` the winding measured from
/// `weights.start_direction`.
pub fn trace_interface(
    domain: &LatticeDomain,
    config: &ContourConfig,
    a: PortId,
    z: MidEdgeId,
    weights: &FermionicWeightSpec,
) -> Result<IsingTrace> {
    if a >= domain.port_count() || z >= domain.mid_edge_count() {
        return Err(invalid("port or mid-edge out of range"));
    }
    config.check_parity(domain)?;
    let av = domain.port(a).vertex;
    let ends = domain.mid_edge_endpoints(z);
    let t = match config.defects.as_slice() {
        [] => av,
        [p, q] if *p == av => *q,
        [p, q] if *q == av => *p,
        _ => return Err(invalid("defects must contain the vertex of a")),
    };
    if z != domain.port_mid(a) && !ends.contains(&t) {
        return Err(invalid(format!("mid-edge {z} is not incident to defect {t}")));
    }
    if z < domain.edge_count() && config.contains(z) {
        return Err(Error::Parity(t));
    }
    let tr = trace(domain, config.edges, a, t, z, TurnRule::Left)?;
    let winding_angle = tr.turns as f64 * FRAC_PI_2;
    let offset = (tr.start_direction / weights.start_direction).arg();
    Ok(IsingTrace {
        weight: weights.weight(offset + winding_angle),
        winding_angle,
        trace: tr,
    })
}

/// Exact interface counts for the Ising observable from port `a`; the
/// field for any weight follows from [`IsingCounts::field`].
#[derive(Clone, Debug)]
pub struct IsingCounts {
    a: PortId,
    a_mid: MidEdgeId,
    start: Complex64,
    mid_edges: usize,
    counts: InterfaceCounts,
}

impl IsingCounts {
    pub fn new(domain: &LatticeDomain, a: PortId, budget_log2: u32) -> Result<Self> {
        require_square(domain)?;
        if a >= domain.port_count() {
            return Err(invalid(format!("port {a} out of range")));
        }
        Ok(IsingCounts {
            a,
            a_mid: domain.port_mid(a),
            start: -domain.port(a).direction,
            mid_edges: domain.mid_edge_count(),
            counts: interface_counts(domain, a, budget_log2, TurnRule::Left, Some(8), false)?,
        })
    }

    pub fn port(&self) -> PortId {
        self.a
    }

    pub fn partition_function(&self, x: f64) -> f64 {
        eval_histogram(&self.counts.even_sizes, x)
    }

    /// The normalized observable at edge weight `x`.
    pub fn field(&self, x: f64) -> MidEdgeField {
        let w0 = Complex64::from_polar(1.0, -0.5 * self.start.arg());
        let lambda = Complex64::from_polar(1.0, -FRAC_PI_2 / 2.0);
        let phases: Vec<Complex64> = (0..8).map(|k| w0 * lambda.powi(k)).collect();
        let z = self.partition_function(x);
        let mut values = vec![Complex64::new(0.0, 0.0); self.mid_edges];
        for &(m, turn, len, _, c) in &self.counts.entries {
            values[m] += phases[turn as usize] * (c as f64 * x.powi(len as i32));
        }
        for v in values.iter_mut() {
            *v /= z;
        }
        values[self.a_mid] = w0;
        MidEdgeField { values }
    }
}

/// The observable at every mid-edge for interfaces from port `a`,
/// normalized by the partition function. Windings are measured from the
/// positive real direction, so `F(a) = exp(−i·arg(d)/2)` for the inward
/// direction `d` at `a`.
pub fn fermionic_field(
    domain: &LatticeDomain,
    a: PortId,
    params: &IsingParams,
    budget_log2: u32,
) -> Result<MidEdgeField> {
    Ok(IsingCounts::new(domain, a, budget_log2)?.field(params.x))
}

/// The observable at one mid-edge, with `a` taken from the domain's marks.
pub fn fermionic_observable(
    domain: &LatticeDomain,
    z: MidEdgeId,
    params: &IsingParams,
    budget_log2: u32,
) -> Result<Complex64> {
    let (a, _) = domain
        .marked_ports()
        .ok_or_else(|| invalid("domain has no Dobrushin marks"))?;
    if z >= domain.mid_edge_count() {
        return Err(invalid(format!("mid-edge {z} out of range")));
    }
    Ok(fermionic_field(domain, a, params, budget_log2)?.get(z))
}

/// Retraces every interface with the opposite turn rule and counts those
/// whose winding changes by something other than a multiple of 4π.
/// Returns `(checked, mismatches)`.
pub fn retrace_mismatches(domain: &LatticeDomain, a: PortId, budget_log2: u32) -> Result<(u64, u64)> {
    require_square(domain)?;
    let (mut checked, mut bad) = (0u64, 0u64);
    visit_interfaces(domain, a, budget_log2, |tracer, t, z, s| {
        let l = tracer.walk(s, a, t, z, TurnRule::Left, None)?;
        let r = tracer.walk(s, a, t, z, TurnRule::Right, None)?;
        checked += 1;
        if (l.turns - r.turns).rem_euclid(8) != 0 {
            bad += 1;
        }
        Ok(())
    })?;
    Ok((checked, bad))
}

/// For each port `z ≠ a`, the distinct winding classes (turns mod 8)
/// realized by interfaces ending at `z`.
pub fn boundary_winding_classes(
    domain: &LatticeDomain,
    a: PortId,
    budget_log2: u32,
) -> Result<Vec<(MidEdgeId, BTreeSet<i32>)>> {
    require_square(domain)?;
    let mut classes: Vec<BTreeSet<i32>> = vec![BTreeSet::new(); domain.mid_edge_count()];
    visit_interfaces(domain, a, budget_log2, |tracer, t, z, s| {
        if domain.is_port(z) {
            classes[z].insert(tracer.walk(s, a, t, z, TurnRule::Left, None)?.turns.rem_euclid(8));
        }
        Ok(())
    })?;
    Ok(classes
        .into_iter()
        .enumerate()
        .filter(|(z, c)| domain.is_port(*z) && !c.is_empty())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contours::Enumerator;
    use crate::dca::{max_strong_residual, medial_cr_residual, medial_cr_residual_face};
    use crate::ising::{partition_function, unweighted_interface_sum};

    fn max_residual(d: &LatticeDomain, x: f64, a: PortId) -> f64 {
        let f = fermionic_field(d, a, &IsingParams::from_x(x).unwrap(), 24).unwrap();
        max_strong_residual(d, &f, 0..d.vertex_count()).max_residual
    }

    #[test]
    fn strong_relation_at_criticality_only() {
        let d = LatticeDomain::rectangle(2, 3, 1.0).unwrap();
        for a in 0..d.port_count() {
            assert!(max_residual(&d, crate::ising::X_CRITICAL, a) < 1e-12);
            assert!(max_residual(&d, 0.5, a) > 1e-3);
            assert!(max_residual(&d, 0.3, a) > 1e-3);
        }
    }

    #[test]
    fn residual_is_linear_near_criticality() {
        let d = LatticeDomain::rectangle(2, 2, 1.0).unwrap();
        let xc = crate::ising::X_CRITICAL;
        let r1 = max_residual(&d, xc + 0.01, 0);
        let r2 = max_residual(&d, xc + 0.02, 0);
        let r3 = max_residual(&d, xc - 0.02, 0);
        assert!(r2 / r1 > 1.0 && r2 / r1 < 4.0);
        assert!(r3 / r2 > 0.5 && r3 / r2 < 2.0);
    }

    #[test]
    fn strong_implies_medial_cauchy_riemann() {
        let d = LatticeDomain::rectangle(3, 3, 1.0).unwrap();
        for a in [0, 3, 7] {
            let f = fermionic_field(&d, a, &IsingParams::critical(), 24).unwrap();
            for v in d.interior_vertices() {
                assert!(medial_cr_residual(&d, &f, v).unwrap().norm() < 1e-12);
            }
            for face in 0..d.face_count() {
                assert!(medial_cr_residual_face(&d, &f, face).unwrap().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn removing_weights_gives_unweighted_sums() {
        let d = LatticeDomain::rectangle(2, 2, 1.0).unwrap();
        let p = IsingParams::from_x(0.4).unwrap();
        let a = 0;
        let av = d.port(a).vertex;
        // Interfaces ending at port z of vertex t carry one extra half-edge on
        // each side: the unweighted sum is x·Σ_{∂S={a,t}} x^|S|.
        let mut sums = vec![0.0; d.mid_edge_count()];
        visit_interfaces(&d, a, 24, |_, _, z, s| {
            sums[z] += p.x.powi(s.count_ones() as i32 + 1);
            Ok(())
        })
        .unwrap();
        let z_part = partition_function(&d, &p, 24).unwrap();
        for q in 1..d.port_count() {
            let m = d.port_mid(q);
            let t = d.port(q).vertex;
            let want = p.x * unweighted_interface_sum(&d, av, t, &p, 24).unwrap();
            assert!((sums[m] / z_part - want).abs() < 1e-14);
        }
    }

    #[test]
    fn traces_and_weights() {
        // Start at the left side so the interface leaves in the +1 direction.
        let d = LatticeDomain::rectangle(3, 1, 1.0).unwrap();
        let a = (0..d.port_count())
            .find(|&p| (d.port(p).direction + 1.0).norm() < 1e-12 && d.vertex(d.port(p).vertex).im == 0.0)
            .unwrap();
        let w = FermionicWeightSpec::default();
        let key = |i, j| d.vertex_by_key((i, j)).unwrap();
        // Straight run along the bottom to the right end.
        let edges = (0..3).fold(0u128, |m, i| m | 1 << d.edge_between(key(i, 0), key(i + 1, 0)).unwrap());
        let right_port = (0..d.port_count())
            .find(|&p| d.port(p).vertex == key(3, 0) && (d.port(p).direction - 1.0).norm() < 1e-12)
            .unwrap();
        let cfg = ContourConfig {
            edges,
            defects: vec![key(0, 0), key(3, 0)],
        };
        let tr = trace_interface(&d, &cfg, a, d.port_mid(right_port), &w).unwrap();
        assert_eq!(tr.winding_angle, 0.0);
        assert!((tr.weight - 1.0).norm() < 1e-12);
        // Up and back: a half turn ends leaving through the left port at (0,1).
        let edges = edges
            | 1 << d.edge_between(key(3, 0), key(3, 1)).unwrap()
            | (0..3).fold(0u128, |m, i| m | 1 << d.edge_between(key(i, 1), key(i + 1, 1)).unwrap());
        let back = (0..d.port_count())
            .find(|&p| d.port(p).vertex == key(0, 1) && (d.port(p).direction + 1.0).norm() < 1e-12)
            .unwrap();
        let cfg = ContourConfig {
            edges,
            defects: vec![key(0, 0), key(0, 1)],
        };
        let tr = trace_interface(&d, &cfg, a, d.port_mid(back), &w).unwrap();
        assert!((tr.winding_angle - std::f64::consts::PI).abs() < 1e-12);
        assert!((tr.weight - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        // Wrong defects are rejected.
        let bad = ContourConfig {
            edges,
            defects: vec![key(0, 0), key(3, 1)],
        };
        assert!(trace_interface(&d, &bad, a, d.port_mid(back), &w).is_err());
    }

    #[test]
    fn spiral_has_weight_minus_one() {
        // Enter at the bottom-left heading right, run around the boundary
        // counterclockwise and spiral in, ending again heading right.
        let d = LatticeDomain::rectangle(3, 3, 1.0).unwrap();
        let key = |i, j| d.vertex_by_key((i, j)).unwrap();
        let a = (0..d.port_count())
            .find(|&p| d.port(p).vertex == key(0, 0) && (d.port(p).direction + 1.0).norm() < 1e-12)
            .unwrap();
        let path = [
            (0, 0), (1, 0), (2, 0), (3, 0), (3, 1), (3, 2), (3, 3),
            (2, 3), (1, 3), (0, 3), (0, 2), (0, 1), (1, 1), (2, 1),
        ];
        let mut edges = 0u128;
        for w in path.windows(2) {
            edges |= 1 << d.edge_between(key(w[0].0, w[0].1), key(w[1].0, w[1].1)).unwrap();
        }
        let z = d.edge_between(key(2, 1), key(3, 1)).unwrap();
        let cfg = ContourConfig {
            edges,
            defects: vec![key(0, 0), key(2, 1)],
        };
        let w = FermionicWeightSpec::default();
        let tr = trace_interface(&d, &cfg, a, z, &w).unwrap();
        assert!((tr.winding_angle - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((tr.weight + 1.0).norm() < 1e-12);
        assert!((w.weight(-tr.winding_angle) + 1.0).norm() < 1e-12);
    }

    #[test]
    fn turn_rule_does_not_matter() {
        for (cx, cy) in [(2, 2), (3, 2), (3, 3), (4, 3)] {
            let d = LatticeDomain::rectangle(cx, cy, 1.0).unwrap();
            let (checked, bad) = retrace_mismatches(&d, 0, 24).unwrap();
            assert!(checked > 0);
            assert_eq!(bad, 0);
        }
    }

    #[test]
    fn boundary_windings_are_determined() {
        let d = LatticeDomain::from_square_cells(&[(0, 0), (1, 0), (2, 0), (0, 1), (0, 2), (1, 2)], 1.0).unwrap();
        for a in [0, 5] {
            for (_, classes) in boundary_winding_classes(&d, a, 24).unwrap() {
                assert_eq!(classes.len(), 1);
            }
        }
    }

    #[test]
    fn coset_sizes_with_interfaces() {
        let d = LatticeDomain::rectangle(2, 3, 1.0).unwrap();
        let en = Enumerator::new(&d, &[0, 3], 24).unwrap();
        assert_eq!(en.count(), 64);
    }
}
