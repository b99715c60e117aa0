use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeDomain, VertexId};
use crate::sparse;

/// Solver controls for [`solve_dirichlet_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletOptions {
    /// Required bound on the largest interior Laplacian.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Systems with fewer unknowns fall back to sparse Cholesky when the
    /// iteration stalls.
    pub direct_threshold: usize,
}

impl Default for DirichletOptions {
    fn default() -> Self {
        DirichletOptions {
            tolerance: 1e-10,
            max_iterations: 20_000,
            direct_threshold: 5_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSolution {
    pub values: Vec<f64>,
    /// Largest |Laplacian| over interior vertices.
    pub residual: f64,
    pub iterations: usize,
    pub direct: bool,
}

/// Preharmonic extension of the boundary values of `g` (entries at interior
/// vertices are ignored).
pub fn solve_dirichlet(domain: &LatticeDomain, g: &[f64]) -> Result<Vec<f64>> {
    solve_dirichlet_with(domain, g, &DirichletOptions::default()).map(|s| s.values)
}

pub fn solve_dirichlet_with(
    domain: &LatticeDomain,
    g: &[f64],
    opts: &DirichletOptions,
) -> Result<DirichletSolution> {
    let n = domain.vertex_count();
    if g.len() != n {
        return Err(invalid(format!("boundary data has {} values for {n} vertices", g.len())));
    }
    let interior: Vec<VertexId> = domain.interior_vertices().collect();
    let mut slot = vec![usize::MAX; n];
    for (k, &v) in interior.iter().enumerate() {
        slot[v] = k;
    }
    // System −Δu = b with b collecting boundary neighbours.
    let m = interior.len();
    let mut entries = Vec::with_capacity(5 * m);
    let mut b = vec![0.0; m];
    for (k, &v) in interior.iter().enumerate() {
        entries.push((k, k, domain.degree(v) as f64));
        for (w, _) in domain.neighbors(v) {
            if slot[w] == usize::MAX {
                b[k] += g[w];
            } else {
                entries.push((k, slot[w], -1.0));
            }
        }
    }
    let assemble = |x: &[f64]| {
        let mut u = g.to_vec();
        for (k, &v) in interior.iter().enumerate() {
            u[v] = x[k];
        }
        u
    };
    let max_laplacian = |u: &[f64]| {
        interior
            .iter()
            .map(|&v| {
                domain
                    .neighbors(v)
                    .map(|(w, _)| u[w] - u[v])
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    };

    let (x, iterations) = conjugate_gradient(&entries, &b, opts.tolerance * 0.1, opts.max_iterations);
    let u = assemble(&x);
    let residual = max_laplacian(&u);
    if residual <= opts.tolerance {
        return Ok(DirichletSolution {
            values: u,
            residual,
            iterations,
            direct: false,
        });
    }
    if m < opts.direct_threshold {
        let x = sparse::solve_spd(m, &entries, &b)?;
        let u = assemble(&x);
        let residual = max_laplacian(&u);
        if residual <= opts.tolerance {
            return Ok(DirichletSolution {
                values: u,
                residual,
                iterations,
                direct: true,
            });
        }
    }
    Err(Error::NonConvergence {
        residual,
        iterations,
    })
}

/// Plain conjugate gradients on a symmetric positive-definite triplet
/// matrix, stopping when the max-norm residual drops below `tol`.
fn conjugate_gradient(a: &[(usize, usize, f64)], b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for it in 0..max_iter {
        if r.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= tol {
            return (x, it);
        }
        let ap = sparse::apply(n, a, &p);
        let alpha = rr / p.iter().zip(&ap).map(|(p, q)| p * q).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    (x, max_iter)
}
