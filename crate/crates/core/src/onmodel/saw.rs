//! Self-avoiding walks on the hexagonal lattice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `√(2 + √2)`.
pub const MU: f64 = 1.847_759_065_022_573_5;

/// Depth at which the census splits into independent subtrees.
pub const SAW_SPLIT_DEPTH: usize = 8;

/// `counts[k − 1] = C(k)`, the number of self-avoiding walks of length `k`
/// from the origin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SawCensus {
    pub counts: Vec<u64>,
}

impl SawCensus {
    pub fn kmax(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, k: usize) -> u64 {
        self.counts[k - 1]
    }

    /// `k,count,root,ratio` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,count,root,ratio\n");
        for (i, &c) in self.counts.iter().enumerate() {
            let k = i + 1;
            let root = (c as f64).powf(1.0 / k as f64);
            let ratio = if i == 0 { String::new() } else { format!("{:.16e}", c as f64 / self.counts[i - 1] as f64) };
            s.push_str(&format!("{k},{c},{root:.16e},{ratio}\n"));
        }
        s
    }
}

// Brick-wall embedding: (i, j) joins (i ± 1, j) and, vertically, (i, j + 1)
// when i + j is even and (i, j − 1) otherwise.
struct Grid {
    width: usize,
    occupied: Vec<bool>,
    counts: Vec<u64>,
    kmax: usize,
}

impl Grid {
    fn new(kmax: usize) -> Self {
        let width = 2 * kmax + 3;
        Grid { width, occupied: vec![false; width * width], counts: vec![0; kmax], kmax }
    }

    fn index(&self, i: i64, j: i64) -> usize {
        let o = (self.kmax + 1) as i64;
        ((j + o) as usize) * self.width + (i + o) as usize
    }

    fn steps(i: i64, j: i64) -> [(i64, i64); 3] {
        let vertical = if (i + j).rem_euclid(2) == 0 { 1 } else { -1 };
        [(i + 1, j), (i - 1, j), (i, j + vertical)]
    }

    fn extend(&mut self, i: i64, j: i64, len: usize) {
        if len == self.kmax {
            return;
        }
        for (u, v) in Self::steps(i, j) {
            let k = self.index(u, v);
            if !self.occupied[k] {
                self.counts[len] += 1;
                self.occupied[k] = true;
                self.extend(u, v, len + 1);
                self.occupied[k] = false;
            }
        }
    }
}

fn prefixes(depth: usize) -> Vec<Vec<(i64, i64)>> {
    let mut walks = vec![vec![(0, 0)]];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(walks.len() * 2);
        for w in &walks {
            let (i, j) = *w.last().expect("walks are non-empty");
            for s in Grid::steps(i, j) {
                if !w.contains(&s) {
                    let mut w2 = w.clone();
                    w2.push(s);
                    next.push(w2);
                }
            }
        }
        walks = next;
    }
    walks
}

/// Exact counts `C(1..=kmax)` by depth-first backtracking. Subtrees below
/// [`SAW_SPLIT_DEPTH`] are counted in parallel and summed.
pub fn saw_count(kmax: usize, budget: usize) -> Result<SawCensus> {
    if kmax == 0 {
        return Err(invalid("kmax must be positive"));
    }
    if kmax > budget {
        return Err(Error::Budget { required: kmax as u32, budget: budget as u32 });
    }
    let depth = SAW_SPLIT_DEPTH.min(kmax);
    let roots = prefixes(depth);
    let mut counts = vec![0u64; kmax];
    for d in 1..=depth {
        counts[d - 1] = prefixes(d).len() as u64;
    }
    let tails: Vec<Vec<u64>> = roots
        .par_iter()
        .map(|w| {
            let mut g = Grid::new(kmax);
            for &(i, j) in w {
                let k = g.index(i, j);
                g.occupied[k] = true;
            }
            let &(i, j) = w.last().expect("walks are non-empty");
            g.extend(i, j, depth);
            g.counts
        })
        .collect();
    for t in tails {
        for k in depth..kmax {
            counts[k] += t[k];
        }
    }
    Ok(SawCensus { counts })
}

/// Breadth-first enumeration that keeps every walk in full, in
/// triangular-basis coordinates. Meant as an oracle for small `kmax`.
pub fn naive_saw_count(kmax: usize) -> Vec<u64> {
    // unit steps at angles 90°, 210°, 330° from the even sublattice,
    // written in the basis e0 = (0, 1), e1 = (−√3/2, −1/2) with
    // e2 = −e0 − e1
    const STEPS: [(i64, i64); 3] = [(1, 0), (0, 1), (-1, -1)];
    let mut walks: Vec<Vec<(i64, i64)>> = vec![vec![(0, 0)]];
    let mut counts = Vec::with_capacity(kmax);
    for len in 0..kmax {
        let sign = if len % 2 == 0 { 1 } else { -1 };
        let mut next = Vec::new();
        for w in &walks {
            let (a, b) = *w.last().expect("walks are non-empty");
            for (da, db) in STEPS {
                let p = (a + sign * da, b + sign * db);
                if w.iter().all(|&q| q != p) {
                    let mut w2 = w.clone();
                    w2.push(p);
                    next.push(w2);
                }
            }
        }
        counts.push(next.len() as u64);
        walks = next;
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConnectiveReport {
    pub mu: f64,
    /// `C(k)^(1/k)` for `k = 1..=kmax`.
    pub roots: Vec<f64>,
    /// `C(k)/C(k−1)` for `k = 2..=kmax`.
    pub ratios: Vec<f64>,
    /// `C(k)^(1/k)` strictly decreasing over `k ∈ [10, kmax]`.
    pub roots_decreasing: bool,
    /// `|C(kmax)^(1/kmax) − μ| / μ`.
    pub relative_gap: f64,
}

pub fn connective_estimate(census: &SawCensus) -> Result<ConnectiveReport> {
    if census.kmax() < 10 {
        return Err(invalid("the estimate needs kmax ≥ 10"));
    }
    let roots: Vec<f64> = census
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (c as f64).powf(1.0 / (i + 1) as f64))
        .collect();
    let ratios = census.counts.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    let roots_decreasing = roots[9..].windows(2).all(|w| w[1] < w[0]);
    let relative_gap = (roots[roots.len() - 1] - MU).abs() / MU;
    Ok(ConnectiveReport { mu: MU, roots, ratios, roots_decreasing, relative_gap })
}
