//! Single-spin-flip Metropolis sampler for the energy density at `β_c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::beta_critical;
use crate::error::{invalid, Error, Result};
use crate::lattice::{EdgeId, LatticeDomain, LatticeKind};

/// Spins live on the vertices of the domain. With `Plus`, every port
/// couples its vertex to a fixed `+` spin outside the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Plus,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct McOptions {
    pub sweeps: usize,
    pub seed: u64,
}

pub const BURN_IN_FRACTION: f64 = 0.2;
pub const BATCHES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub sweeps: usize,
    pub seed: u64,
}

struct Model {
    neighbors: Vec<Vec<usize>>,
    field: Vec<i32>,
    pairs: Vec<(usize, usize)>,
}

fn model(domain: &LatticeDomain, boundary: Boundary, edges: &[EdgeId]) -> Result<Model> {
    if domain.kind() != LatticeKind::Square {
        return Err(invalid("the Ising sampler runs on square-lattice domains"));
    }
    if edges.is_empty() {
        return Err(invalid("at least one edge is required"));
    }
    let n = domain.vertex_count();
    let neighbors = (0..n).map(|v| domain.neighbors(v).map(|(u, _)| u).collect()).collect();
    let mut field = vec![0; n];
    if boundary == Boundary::Plus {
        for p in 0..domain.port_count() {
            field[domain.port(p).vertex] += 1;
        }
    }
    let mut pairs = Vec::with_capacity(edges.len());
    for &e in edges {
        let [u, v] = *domain.edges().get(e).ok_or_else(|| invalid(format!("edge {e} out of range")))?;
        pairs.push((u, v));
    }
    Ok(Model { neighbors, field, pairs })
}

/// The edges of the face closest to the centroid of the domain.
pub fn central_edges(domain: &LatticeDomain) -> Vec<EdgeId> {
    let n = domain.vertex_count() as f64;
    let centroid = domain.vertices().iter().sum::<num_complex::Complex64>() / n;
    domain
        .faces()
        .iter()
        .min_by(|f, g| (f.center - centroid).norm().total_cmp(&(g.center - centroid).norm()))
        .map(|f| f.edges.clone())
        .unwrap_or_default()
}

/// Metropolis estimate of `E[σxσy]` at `β_c`, averaged over `edges`.
pub fn energy_density_mc(
    domain: &LatticeDomain,
    boundary: Boundary,
    edges: &[EdgeId],
    options: McOptions,
) -> Result<McEstimate> {
    let burn_in = (options.sweeps as f64 * BURN_IN_FRACTION).round() as usize;
    let measured = options.sweeps.saturating_sub(burn_in);
    if measured < BATCHES {
        return Err(invalid(format!(
            "{} sweeps leave fewer than {BATCHES} measurements after burn-in",
            options.sweeps
        )));
    }
    let m = model(domain, boundary, edges)?;
    let beta = beta_critical();
    // acceptance probability indexed by σ·h + 4, h the local field
    let accept: Vec<f64> = (-4..=4).map(|k| (-2.0 * beta * k as f64).exp().min(1.0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut spins = vec![1i8; m.neighbors.len()];

    let per_batch = measured / BATCHES;
    let mut batch_sums = vec![0.0; BATCHES];
    for sweep in 0..burn_in + per_batch * BATCHES {
        for v in 0..spins.len() {
            let h: i32 = m.field[v] + m.neighbors[v].iter().map(|&u| spins[u] as i32).sum::<i32>();
            let k = (spins[v] as i32 * h + 4) as usize;
            if k <= 4 || rng.gen::<f64>() < accept[k] {
                spins[v] = -spins[v];
            }
        }
        if sweep >= burn_in {
            let e: i32 = m.pairs.iter().map(|&(u, v)| (spins[u] * spins[v]) as i32).sum();
            batch_sums[(sweep - burn_in) / per_batch] += e as f64 / m.pairs.len() as f64;
        }
    }
    let means: Vec<f64> = batch_sums.iter().map(|s| s / per_batch as f64).collect();
    let estimate = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|x| (x - estimate).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(McEstimate { estimate, stderr: (var / BATCHES as f64).sqrt(), sweeps: options.sweeps, seed: options.seed })
}

/// Largest vertex count accepted by [`energy_density_exact`].
pub const EXACT_MAX_SPINS: usize = 24;

/// `E[σxσy]` at `β_c` by summing over all spin configurations.
pub fn energy_density_exact(domain: &LatticeDomain, boundary: Boundary, edges: &[EdgeId]) -> Result<f64> {
    let m = model(domain, boundary, edges)?;
    let n = m.neighbors.len();
    if n > EXACT_MAX_SPINS {
        return Err(Error::Budget { required: n as u32, budget: EXACT_MAX_SPINS as u32 });
    }
    let bonds: Vec<(usize, usize)> = domain.edges().iter().map(|&[u, v]| (u, v)).collect();
    let beta = beta_critical();
    let spin = |s: u64, v: usize| if s >> v & 1 == 0 { 1i32 } else { -1 };
    // energies are bounded integers; group by them to keep the sum exact
    let max_e = (bonds.len() + m.field.iter().map(|f| *f as usize).sum::<usize>()) as i64;
    let mut weight = vec![0.0f64; 2 * max_e as usize + 1];
    let mut observable = vec![0i64; 2 * max_e as usize + 1];
    for s in 0..1u64 << n {
        let mut e: i64 = bonds.iter().map(|&(u, v)| (spin(s, u) * spin(s, v)) as i64).sum();
        e += (0..n).map(|v| (m.field[v] * spin(s, v)) as i64).sum::<i64>();
        let o: i32 = m.pairs.iter().map(|&(u, v)| spin(s, u) * spin(s, v)).sum();
        let k = (e + max_e) as usize;
        weight[k] += 1.0;
        observable[k] += o as i64;
    }
    let mut z = 0.0;
    let mut num = 0.0;
    for k in 0..weight.len() {
        let b = (beta * (k as f64 - max_e as f64)).exp();
        z += weight[k] * b;
        num += observable[k] as f64 * b;
    }
    Ok(num / z / m.pairs.len() as f64)
}
