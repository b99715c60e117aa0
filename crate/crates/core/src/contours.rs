//! Even-subgraph enumeration over the binary cycle space, and interface
//! tracing through contour configurations.
//!
//! Configurations are edge subsets stored as `u128` bit masks, so domains
//! are limited to 128 edges. Every subset with a prescribed set of odd
//! vertices is `base ⊕ c` for a unique element `c` of the cycle space; the
//! face boundaries of a simply connected planar domain form a basis.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeDomain, LatticeKind, MidEdgeId, PortId, VertexId};

pub type EdgeMask = u128;

/// Default enumeration budget, as a power of two.
pub const DEFAULT_BUDGET_LOG2: u32 = 24;

/// An even-degree edge subset with optional defect vertices of odd degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourConfig {
    pub edges: EdgeMask,
    pub defects: Vec<VertexId>,
}

impl ContourConfig {
    pub fn len(&self) -> u32 {
        self.edges.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.edges == 0
    }

    pub fn contains(&self, e: usize) -> bool {
        self.edges >> e & 1 == 1
    }

    /// Checks that exactly the defects have odd degree.
    pub fn check_parity(&self, domain: &LatticeDomain) -> Result<()> {
        for v in 0..domain.vertex_count() {
            let deg = domain.neighbors(v).filter(|&(_, e)| self.contains(e)).count();
            let odd = self.defects.iter().filter(|&&d| d == v).count() % 2 == 1;
            if (deg % 2 == 1) != odd {
                return Err(Error::Parity(v));
            }
        }
        Ok(())
    }
}

/// Face boundaries as edge masks.
pub fn face_basis(domain: &LatticeDomain) -> Result<Vec<EdgeMask>> {
    if domain.edge_count() > 128 {
        return Err(invalid(format!(
            "enumeration supports at most 128 edges, domain has {}",
            domain.edge_count()
        )));
    }
    Ok(domain
        .faces()
        .iter()
        .map(|f| f.edges.iter().fold(0, |m, &e| m | 1u128 << e))
        .collect())
}

/// Shortest path between two vertices as an edge mask.
pub fn path_mask(domain: &LatticeDomain, from: VertexId, to: VertexId) -> EdgeMask {
    if from == to {
        return 0;
    }
    let mut prev = vec![usize::MAX; domain.vertex_count()];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for (w, _) in domain.neighbors(v) {
            if prev[w] == usize::MAX {
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    let mut mask = 0;
    let mut v = to;
    while v != from {
        let u = prev[v];
        mask |= 1u128 << domain.edge_between(u, v).expect("BFS tree edge");
        v = u;
    }
    mask
}

/// Edge set whose odd vertices are exactly the defects (with multiplicity
/// mod 2), built from shortest paths.
pub fn base_solution(domain: &LatticeDomain, defects: &[VertexId]) -> Result<EdgeMask> {
    let mut odd: Vec<VertexId> = Vec::new();
    for &d in defects {
        if d >= domain.vertex_count() {
            return Err(invalid(format!("defect vertex {d} out of range")));
        }
        if let Some(i) = odd.iter().position(|&x| x == d) {
            odd.swap_remove(i);
        } else {
            odd.push(d);
        }
    }
    if odd.len() % 2 == 1 {
        return Err(invalid("odd number of defects"));
    }
    odd.sort_unstable();
    Ok(odd
        .chunks(2)
        .fold(0, |m, pair| m ^ path_mask(domain, pair[0], pair[1])))
}

/// Gray-code walk over a coset `base ⊕ span(basis)`.
#[derive(Clone, Debug)]
pub struct CosetIter {
    basis: Vec<EdgeMask>,
    state: EdgeMask,
    index: u64,
    end: u64,
}

impl Iterator for CosetIter {
    type Item = EdgeMask;

    fn next(&mut self) -> Option<EdgeMask> {
        if self.index >= self.end {
            return None;
        }
        if self.index > 0 {
            self.state ^= self.basis[self.index.trailing_zeros() as usize];
        }
        self.index += 1;
        Some(self.state)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.index) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for CosetIter {}

/// Enumerator for all configurations with a fixed defect set.
#[derive(Clone, Debug)]
pub struct Enumerator {
    basis: Vec<EdgeMask>,
    base: EdgeMask,
}

impl Enumerator {
    pub fn new(domain: &LatticeDomain, defects: &[VertexId], budget_log2: u32) -> Result<Self> {
        let basis = face_basis(domain)?;
        let required = basis.len() as u32;
        if required > budget_log2 || required > 62 {
            return Err(Error::Budget {
                required,
                budget: budget_log2,
            });
        }
        Ok(Enumerator {
            base: base_solution(domain, defects)?,
            basis,
        })
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn count(&self) -> u64 {
        1u64 << self.basis.len()
    }

    pub fn iter(&self) -> CosetIter {
        self.chunk(0, 0)
    }

    /// Configurations whose leading `split` cycle-space coordinates equal
    /// `prefix`; chunks for different prefixes partition the coset.
    pub fn chunk(&self, split: usize, prefix: u64) -> CosetIter {
        let split = split.min(self.basis.len());
        let low = self.basis.len() - split;
        let fixed = (0..split)
            .filter(|&i| prefix >> i & 1 == 1)
            .fold(self.base, |m, i| m ^ self.basis[low + i]);
        CosetIter {
            basis: self.basis[..low].to_vec(),
            state: fixed,
            index: 0,
            end: 1u64 << low,
        }
    }
}

/// Stream of all configurations with the given defects.
pub fn enumerate_configs(
    domain: &LatticeDomain,
    defects: &[VertexId],
    budget_log2: u32,
) -> Result<impl Iterator<Item = ContourConfig>> {
    let en = Enumerator::new(domain, defects, budget_log2)?;
    let defects = defects.to_vec();
    Ok(en.iter().map(move |edges| ContourConfig {
        edges,
        defects: defects.clone(),
    }))
}

/// Rule for choosing among several unused continuations at a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TurnRule {
    /// Most counterclockwise continuation (the left-turn convention).
    Left,
    /// Most clockwise continuation.
    Right,
}

/// Angle of one lattice turn: π/2 on the square lattice, π/3 on the
/// hexagonal lattice.
pub fn turn_unit(kind: LatticeKind) -> f64 {
    match kind {
        LatticeKind::Square => PI / 2.0,
        LatticeKind::Hexagonal => PI / 3.0,
    }
}

/// A traced interface from port `a` into the domain, ending at a mid-edge.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceTrace {
    /// Visited vertices with the mid-edge used to leave each of them; the
    /// last entry leaves through the terminal mid-edge.
    pub path: Vec<(VertexId, MidEdgeId)>,
    /// Signed number of lattice turns.
    pub turns: i32,
    /// Direction of the initial step (into the domain).
    pub start_direction: Complex64,
    /// Direction of the final half-edge.
    pub end_direction: Complex64,
    /// Edges of the configuration not used by the interface.
    pub leftover: EdgeMask,
}

impl InterfaceTrace {
    /// Winding angle relative to the start direction.
    pub fn relative_winding(&self, kind: LatticeKind) -> f64 {
        self.turns as f64 * turn_unit(kind)
    }

    /// Winding angle counted from the positive real direction.
    pub fn absolute_winding(&self, kind: LatticeKind) -> f64 {
        self.start_direction.arg() + self.relative_winding(kind)
    }
}

/// Traces the interface of `edges` from port `a` to the half-edge leaving
/// `end_vertex` through `end`. At every vertex the next step is chosen
/// among unused configuration edges (and the terminal half-edge when at
/// `end_vertex`) by `rule`.
pub fn trace(
    domain: &LatticeDomain,
    edges: EdgeMask,
    a: PortId,
    end_vertex: VertexId,
    end: MidEdgeId,
    rule: TurnRule,
) -> Result<InterfaceTrace> {
    let mut path = Vec::new();
    let walk = walk(domain, edges, a, end_vertex, end, rule, Some(&mut path))?;
    Ok(InterfaceTrace {
        path,
        turns: walk.turns,
        start_direction: -domain.port(a).direction,
        end_direction: walk.end_direction,
        leftover: walk.leftover,
    })
}

/// Summary of a traced interface without the path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Walk {
    pub turns: i32,
    pub end_direction: Complex64,
    pub leftover: EdgeMask,
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    mid: MidEdgeId,
    /// Direction in units of π/6.
    dir: i32,
    next: Option<VertexId>,
}

/// Precomputed integer direction tables for fast interface tracing.
#[derive(Clone, Debug)]
pub struct Tracer {
    slots: Vec<Vec<Slot>>,
    /// Number of π/6 steps per lattice turn.
    step: i32,
    directions: Vec<Complex64>,
    ports: Vec<(VertexId, i32, MidEdgeId)>,
}

fn twelfths(z: Complex64) -> i32 {
    ((z.arg() / (PI / 6.0)).round() as i32).rem_euclid(12)
}

impl Tracer {
    pub fn new(domain: &LatticeDomain) -> Self {
        let slots = (0..domain.vertex_count())
            .map(|v| {
                domain
                    .star(v)
                    .neighbors
                    .iter()
                    .map(|h| Slot {
                        mid: h.mid,
                        dir: twelfths(h.direction),
                        next: h.neighbor,
                    })
                    .collect()
            })
            .collect();
        let ports = (0..domain.port_count())
            .map(|p| {
                let port = domain.port(p);
                (port.vertex, twelfths(-port.direction), domain.port_mid(p))
            })
            .collect();
        Tracer {
            slots,
            step: match domain.kind() {
                LatticeKind::Square => 3,
                LatticeKind::Hexagonal => 2,
            },
            directions: (0..12).map(|k| Complex64::from_polar(1.0, k as f64 * PI / 6.0)).collect(),
            ports,
        }
    }

    /// As [`trace`], optionally recording the path.
    pub fn walk(
        &self,
        edges: EdgeMask,
        a: PortId,
        end_vertex: VertexId,
        end: MidEdgeId,
        rule: TurnRule,
        mut path: Option<&mut Vec<(VertexId, MidEdgeId)>>,
    ) -> Result<Walk> {
        let (mut v, mut dir, a_mid) = self.ports[a];
        if end == a_mid {
            return Ok(Walk {
                turns: 0,
                end_direction: self.directions[dir as usize],
                leftover: edges,
            });
        }
        let mut remaining = edges;
        let mut turns = 0i32;
        for _ in 0..=edges.count_ones() {
            let mut best: Option<(i32, Slot)> = None;
            for &sl in &self.slots[v] {
                let available = (sl.next.is_some() && remaining >> sl.mid & 1 == 1)
                    || (v == end_vertex && sl.mid == end);
                if !available {
                    continue;
                }
                let mut t = (sl.dir - dir).rem_euclid(12);
                if t > 6 {
                    t -= 12;
                }
                let better = match (best, rule) {
                    (None, _) => true,
                    (Some((bt, _)), TurnRule::Left) => t > bt,
                    (Some((bt, _)), TurnRule::Right) => t < bt,
                };
                if better {
                    best = Some((t, sl));
                }
            }
            let (t, sl) = best.ok_or(Error::Parity(v))?;
            turns += t;
            if let Some(p) = path.as_deref_mut() {
                p.push((v, sl.mid));
            }
            if v == end_vertex && sl.mid == end {
                return Ok(Walk {
                    turns: turns / self.step,
                    end_direction: self.directions[sl.dir as usize],
                    leftover: remaining,
                });
            }
            remaining &= !(1u128 << sl.mid);
            v = sl.next.expect("configuration edges have two endpoints");
            dir = sl.dir;
        }
        Err(Error::Parity(v))
    }
    /// Traces the interfaces of `edges` to every candidate end slot at
    /// `end_vertex` in a single pass. The walk for a candidate coincides
    /// with the walk that ignores it until the candidate first wins the
    /// turn rule at `end_vertex`. Results are written to `out` as
    /// `(turns, leftover)`.
    pub fn walk_all(
        &self,
        edges: EdgeMask,
        a: PortId,
        end_vertex: VertexId,
        candidates: &[MidEdgeId],
        rule: TurnRule,
        out: &mut [Option<(i32, EdgeMask)>],
    ) -> Result<()> {
        let (mut v, mut dir, a_mid) = self.ports[a];
        let mut pending = 0usize;
        for (k, &z) in candidates.iter().enumerate() {
            out[k] = None;
            if z == a_mid {
                out[k] = Some((0, edges));
            } else {
                pending += 1;
            }
        }
        let signed = |to: i32, from: i32| {
            let t = (to - from).rem_euclid(12);
            if t > 6 {
                t - 12
            } else {
                t
            }
        };
        let mut remaining = edges;
        let mut turns = 0i32;
        for _ in 0..=edges.count_ones() {
            if pending == 0 {
                return Ok(());
            }
            let mut best: Option<(i32, Slot)> = None;
            for &sl in &self.slots[v] {
                if sl.next.is_none() || remaining >> sl.mid & 1 == 0 {
                    continue;
                }
                let t = signed(sl.dir, dir);
                let better = match (best, rule) {
                    (None, _) => true,
                    (Some((bt, _)), TurnRule::Left) => t > bt,
                    (Some((bt, _)), TurnRule::Right) => t < bt,
                };
                if better {
                    best = Some((t, sl));
                }
            }
            if v == end_vertex {
                for &sl in &self.slots[v] {
                    let Some(k) = candidates.iter().position(|&z| z == sl.mid) else {
                        continue;
                    };
                    if out[k].is_some() {
                        continue;
                    }
                    let t = signed(sl.dir, dir);
                    let wins = match (best, rule) {
                        (None, _) => true,
                        (Some((bt, _)), TurnRule::Left) => t > bt,
                        (Some((bt, _)), TurnRule::Right) => t < bt,
                    };
                    if wins {
                        out[k] = Some(((turns + t) / self.step, remaining));
                        pending -= 1;
                    }
                }
            }
            let Some((t, sl)) = best else {
                break;
            };
            turns += t;
            remaining &= !(1u128 << sl.mid);
            v = sl.next.expect("configuration edges have two endpoints");
            dir = sl.dir;
        }
        if pending == 0 {
            Ok(())
        } else {
            Err(Error::Parity(v))
        }
    }
}

/// As [`trace`], without recording the path.
pub fn walk(
    domain: &LatticeDomain,
    edges: EdgeMask,
    a: PortId,
    end_vertex: VertexId,
    end: MidEdgeId,
    rule: TurnRule,
    path: Option<&mut Vec<(VertexId, MidEdgeId)>>,
) -> Result<Walk> {
    Tracer::new(domain).walk(edges, a, end_vertex, end, rule, path)
}

/// `(z, turns, length, loops, count)`.
pub type CountEntry = (MidEdgeId, i32, u32, u32, u64);

/// Exact counts of interfaces from a fixed port, grouped by endpoint,
/// winding, size and number of leftover loops.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InterfaceCounts {
    /// `(z, turns, length, loops, count)`, sorted. `length` is `|S| + 1`
    /// (the two half-edges at the ends count one together); `turns` is
    /// reduced modulo the requested modulus, if any; `loops` is 0 unless
    /// loop counting was requested.
    pub entries: Vec<CountEntry>,
    /// Size histogram of the defect-free configurations.
    pub even_sizes: Vec<u64>,
    /// Defect-free configurations by `(size, loops)` when loops are
    /// counted.
    pub even_loops: Vec<(u32, u32, u64)>,
}

/// Enumerates every configuration `S` carrying an interface from port `a`
/// to each mid-edge `z ≠ a`: `S` has odd vertices `{vertex(a), t}` for an
/// endpoint `t` of `z`, and `z`'s own edge is not in `S`.
///
/// Endpoints are independent jobs whose results are merged in vertex
/// order, so the output does not depend on the thread count.
pub fn interface_counts(
    domain: &LatticeDomain,
    a: PortId,
    budget_log2: u32,
    rule: TurnRule,
    turn_modulus: Option<i32>,
    count_loops: bool,
) -> Result<InterfaceCounts> {
    use rayon::prelude::*;
    use std::collections::BTreeMap;
    if a >= domain.port_count() {
        return Err(invalid(format!("port {a} out of range")));
    }
    let av = domain.port(a).vertex;
    let a_mid = domain.port_mid(a);
    let ne = domain.edge_count();
    let tracer = Tracer::new(domain);
    let max_len = ne + 2;
    let partial: Vec<Result<Vec<CountEntry>>> = (0..domain.vertex_count())
        .into_par_iter()
        .map(|t| {
            let en = Enumerator::new(domain, &[av, t], budget_log2)?;
            let slots: Vec<MidEdgeId> = domain
                .star(t)
                .neighbors
                .iter()
                .map(|h| h.mid)
                .filter(|&m| m != a_mid)
                .collect();
            let mut out = Vec::new();
            let mut results = vec![None; slots.len()];
            match (turn_modulus, count_loops) {
                (Some(m), false) => {
                    let m = m as usize;
                    let mut dense = vec![0u64; slots.len() * m * max_len];
                    for s in en.iter() {
                        let len = s.count_ones() as usize + 1;
                        let open: Vec<MidEdgeId> = slots.iter().copied().filter(|&z| z >= ne || s >> z & 1 == 0).collect();
                        tracer.walk_all(s, a, t, &open, rule, &mut results[..open.len()])?;
                        for (&z, r) in open.iter().zip(&results) {
                            let k = slots.iter().position(|&y| y == z).expect("slot");
                            let turn = r.expect("walk_all fills every slot").0.rem_euclid(m as i32) as usize;
                            dense[(k * m + turn) * max_len + len] += 1;
                        }
                    }
                    for (k, &z) in slots.iter().enumerate() {
                        for turn in 0..m {
                            for len in 0..max_len {
                                let c = dense[(k * m + turn) * max_len + len];
                                if c > 0 {
                                    out.push((z, turn as i32, len as u32, 0, c));
                                }
                            }
                        }
                    }
                }
                _ => {
                    let mut map: BTreeMap<(MidEdgeId, i32, u32, u32), u64> = BTreeMap::new();
                    for s in en.iter() {
                        let len = s.count_ones() + 1;
                        let open: Vec<MidEdgeId> = slots.iter().copied().filter(|&z| z >= ne || s >> z & 1 == 0).collect();
                        tracer.walk_all(s, a, t, &open, rule, &mut results[..open.len()])?;
                        for (&z, r) in open.iter().zip(&results) {
                            let (turns, leftover) = r.expect("walk_all fills every slot");
                            let turn = match turn_modulus {
                                Some(m) => turns.rem_euclid(m),
                                None => turns,
                            };
                            let loops = if count_loops { loop_count(domain, leftover) } else { 0 };
                            *map.entry((z, turn, len, loops)).or_default() += 1;
                        }
                    }
                    out.extend(map.into_iter().map(|((z, t, l, n), c)| (z, t, l, n, c)));
                }
            }
            Ok(out)
        })
        .collect();
    let mut entries = Vec::new();
    for part in partial {
        entries.extend(part?);
    }
    entries.sort_unstable();
    let even = Enumerator::new(domain, &[], budget_log2)?;
    let mut even_sizes = vec![0u64; ne + 1];
    let mut loops_map = std::collections::BTreeMap::new();
    for s in even.iter() {
        even_sizes[s.count_ones() as usize] += 1;
        if count_loops {
            *loops_map.entry((s.count_ones(), loop_count(domain, s))).or_insert(0u64) += 1;
        }
    }
    Ok(InterfaceCounts {
        entries,
        even_sizes,
        even_loops: loops_map.into_iter().map(|((l, n), c)| (l, n, c)).collect(),
    })
}

/// Calls `f(t, z, S)` for every configuration counted by
/// [`interface_field`], sequentially.
pub fn visit_interfaces(
    domain: &LatticeDomain,
    a: PortId,
    budget_log2: u32,
    mut f: impl FnMut(&Tracer, VertexId, MidEdgeId, EdgeMask) -> Result<()>,
) -> Result<()> {
    if a >= domain.port_count() {
        return Err(invalid(format!("port {a} out of range")));
    }
    let av = domain.port(a).vertex;
    let a_mid = domain.port_mid(a);
    let ne = domain.edge_count();
    let tracer = Tracer::new(domain);
    for t in 0..domain.vertex_count() {
        let en = Enumerator::new(domain, &[av, t], budget_log2)?;
        for s in en.iter() {
            for h in &domain.star(t).neighbors {
                if h.mid == a_mid || (h.mid < ne && s >> h.mid & 1 == 1) {
                    continue;
                }
                f(&tracer, t, h.mid, s)?;
            }
        }
    }
    Ok(())
}

/// Histogram of configuration sizes over a coset: entry `k` counts
/// configurations with `k` edges.
pub fn length_histogram(domain: &LatticeDomain, defects: &[VertexId], budget_log2: u32) -> Result<Vec<u64>> {
    let en = Enumerator::new(domain, defects, budget_log2)?;
    let mut hist = vec![0u64; domain.edge_count() + 1];
    for s in en.iter() {
        hist[s.count_ones() as usize] += 1;
    }
    Ok(hist)
}

/// Evaluates `Σ c_k x^k`.
pub fn eval_histogram(hist: &[u64], x: f64) -> f64 {
    hist.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
}

/// Number of connected components (closed loops) of an edge set in which
/// every vertex has degree 0 or 2.
pub fn loop_count(domain: &LatticeDomain, mut edges: EdgeMask) -> u32 {
    let mut loops = 0;
    while edges != 0 {
        let e0 = edges.trailing_zeros() as usize;
        let mut stack = vec![e0];
        edges &= !(1u128 << e0);
        while let Some(e) = stack.pop() {
            for &v in &domain.edges()[e] {
                for (_, f) in domain.neighbors(v) {
                    if edges >> f & 1 == 1 {
                        edges &= !(1u128 << f);
                        stack.push(f);
                    }
                }
            }
        }
        loops += 1;
    }
    loops
}
