//! Critical Ising model on the square lattice in the low-temperature
//! contour representation.

mod mc;
mod observable;

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contours::{eval_histogram, length_histogram};
use crate::error::{invalid, Result};
use crate::lattice::{LatticeDomain, VertexId};

pub use mc::{
    central_edges, energy_density_exact, energy_density_mc, Boundary, McEstimate, McOptions, BATCHES, BURN_IN_FRACTION,
    EXACT_MAX_SPINS,
};
pub use observable::{
    boundary_winding_classes, fermionic_field, IsingCounts, fermionic_observable, retrace_mismatches,
    trace_interface, IsingTrace,
};

/// Critical edge weight `√2 − 1`.
pub const X_CRITICAL: f64 = SQRT_2 - 1.0;

/// Critical inverse temperature `log(√2 + 1)/2`.
pub fn beta_critical() -> f64 {
    (SQRT_2 + 1.0).ln() / 2.0
}

/// Edge weight `x = exp(−2β)` with its inverse temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub x: f64,
    pub beta: f64,
}

impl IsingParams {
    pub fn from_x(x: f64) -> Result<Self> {
        if !(x > 0.0 && x < 1.0) {
            return Err(invalid(format!("edge weight x = {x} must lie in (0, 1)")));
        }
        Ok(IsingParams {
            x,
            beta: -x.ln() / 2.0,
        })
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta = {beta} must be positive")));
        }
        Ok(IsingParams {
            x: (-2.0 * beta).exp(),
            beta,
        })
    }

    pub fn critical() -> Self {
        IsingParams {
            x: X_CRITICAL,
            beta: beta_critical(),
        }
    }

    pub fn is_critical(&self) -> bool {
        (self.x - X_CRITICAL).abs() < 1e-12
    }

    /// Dual weight: `tanh(β*) = x`.
    pub fn dual_beta(&self) -> f64 {
        self.x.atanh()
    }

    pub fn partition_function(&self, domain: &LatticeDomain) -> Result<f64> {
        partition_function(domain, self, crate::contours::DEFAULT_BUDGET_LOG2)
    }
}

/// Fermionic weight data: spin, `λ = exp(−i·s·π/2)` and the chart in which
/// windings are measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FermionicWeightSpec {
    pub spin: f64,
    pub lambda: Complex64,
    pub start_direction: Complex64,
}

impl Default for FermionicWeightSpec {
    fn default() -> Self {
        Self::with_spin(0.5)
    }
}

impl FermionicWeightSpec {
    pub fn with_spin(spin: f64) -> Self {
        FermionicWeightSpec {
            spin,
            lambda: Complex64::from_polar(1.0, -spin * FRAC_PI_2),
            start_direction: Complex64::new(1.0, 0.0),
        }
    }

    /// `exp(−i·s·θ)` for a winding `θ` measured from the start direction.
    pub fn weight(&self, winding: f64) -> Complex64 {
        Complex64::from_polar(1.0, -self.spin * winding)
    }
}

/// Σ over even subgraphs of `x^{#edges}`.
pub fn partition_function(domain: &LatticeDomain, params: &IsingParams, budget_log2: u32) -> Result<f64> {
    Ok(eval_histogram(&length_histogram(domain, &[], budget_log2)?, params.x))
}

/// Residuals of the two local identities behind the strong relation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairIdentityReport {
    pub first: f64,
    pub second: f64,
}

/// `|λ + λλ̄ − 1 − λ|` and `|λx + λ·conj(λx) − λ² − λλ̄²|`.
pub fn verify_pair_identities(params: &IsingParams, weights: &FermionicWeightSpec) -> PairIdentityReport {
    let l = weights.lambda;
    let x = params.x;
    let one = Complex64::new(1.0, 0.0);
    let first = l + l * l.conj() - one - l;
    let second = l * x + l * (l * x).conj() - l * l - l * l.conj() * l.conj();
    PairIdentityReport {
        first: first.norm(),
        second: second.norm(),
    }
}

/// Σ `x^{#edges}` over subgraphs with odd vertices `{p, q}`, divided by the
/// partition function; 1 when `p = q`.
pub fn unweighted_interface_sum(
    domain: &LatticeDomain,
    p: VertexId,
    q: VertexId,
    params: &IsingParams,
    budget_log2: u32,
) -> Result<f64> {
    if p >= domain.vertex_count() || q >= domain.vertex_count() {
        return Err(invalid("vertex out of range"));
    }
    if p == q {
        return Ok(1.0);
    }
    let z = partition_function(domain, params, budget_log2)?;
    Ok(eval_histogram(&length_histogram(domain, &[p, q], budget_log2)?, params.x) / z)
}

/// Spin–spin correlation `⟨σ_p σ_q⟩` with spins on the vertices of the
/// domain, free boundary and coupling `beta`, by summing all `2^V` states.
pub fn spin_correlation_brute_force(domain: &LatticeDomain, p: VertexId, q: VertexId, beta: f64) -> Result<f64> {
    let n = domain.vertex_count();
    if n > 24 {
        return Err(invalid(format!("brute-force spin sum over {n} vertices is too large")));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for state in 0u64..1 << n {
        let s = |v: usize| if state >> v & 1 == 1 { 1.0 } else { -1.0 };
        let energy: f64 = domain.edges().iter().map(|&[u, v]| s(u) * s(v)).sum();
        let w = (beta * energy).exp();
        num += w * s(p) * s(q);
        den += w;
    }
    Ok(num / den)
}
