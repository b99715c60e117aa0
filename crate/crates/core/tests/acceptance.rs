//! One pass/fail line per acceptance criterion.
//!
//! Run with `cargo test -p dca-core --test acceptance -- --nocapture` to see
//! the lines.

use std::f64::consts::FRAC_1_SQRT_2;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;

use dca_core::dca::{max_strong_residual, MidEdgeField};
use dca_core::ising::{
    central_edges, energy_density_exact, energy_density_mc, verify_pair_identities, Boundary, FermionicWeightSpec,
    IsingCounts, IsingParams, McOptions, X_CRITICAL,
};
use dca_core::lattice::Key;
use dca_core::onmodel::{
    boundary_sum, connective_estimate, critical_params, naive_saw_count, saw_count, vertex_relation_residual,
    verify_triplet_identities, LoopCounts, Regime,
};
use dca_core::scaling::{
    dirichlet_convergence_study, energy_trend_study, height_positivity_study, observable_convergence_study,
    solve_riemann_bvp_ports, HarmonicData, KernelKind, DIRICHLET_ORDER_THRESHOLD,
};
use dca_core::LatticeDomain;

/// Criteria that cannot hold as stated. They print FAIL without failing
/// the test; a supplementary check is asserted in their place.
///
/// 3: for `N = 0` in the dense regime `x > 1` and `Z = 1`, and on the
/// 12-hexagon patch `|F|` reaches `2.5·10⁶`. One ulp there is `4.7·10⁻¹⁰`,
/// so no double-precision field meets an absolute `10⁻¹⁰`. The residual
/// relative to `max|F|` is checked instead, and every other case must meet
/// the absolute bound.
///
/// 8: `Re z³` is exactly preharmonic for the five-point Laplacian, so the
/// Dirichlet error is pure roundoff and grows under refinement. The order is
/// reported for `Re z⁴` and `Im eᶻ` alongside.
const KNOWN_UNATTAINABLE: &[usize] = &[3, 8];

const BUDGET: u32 = 24;
const N_VALUES: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

struct Line {
    pass: bool,
    /// Supplementary check standing in for a known-unattainable criterion.
    guard: Option<bool>,
    detail: String,
}

fn line(pass: bool, detail: String) -> Line {
    Line { pass, guard: None, detail }
}

// --- domains --------------------------------------------------------------

fn rect_cells(m: i64, n: i64) -> Vec<Key> {
    (0..n).flat_map(|j| (0..m).map(move |i| (i, j))).collect()
}

/// Square-lattice shapes with at most 16 faces: every rectangle up to
/// rotation and a set of L, T, U, S, plus and staircase polyominoes.
fn square_shapes() -> Vec<(String, Vec<Key>)> {
    let mut out = Vec::new();
    for m in 1..=16i64 {
        for n in m..=16 {
            if m * n <= 16 {
                out.push((format!("{m}x{n}"), rect_cells(m, n)));
            }
        }
    }
    let shapes: [(&str, &[Key]); 9] = [
        ("L4", &[(0, 0), (1, 0), (0, 1), (0, 2)]),
        ("T4", &[(0, 0), (1, 0), (2, 0), (1, 1)]),
        ("S4", &[(0, 0), (1, 0), (1, 1), (2, 1)]),
        ("plus5", &[(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)]),
        ("U5", &[(0, 0), (1, 0), (2, 0), (0, 1), (2, 1)]),
        ("L7", &[(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (0, 2), (0, 3)]),
        ("U7", &[(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (2, 2)]),
        ("stair10", &[(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (2, 1), (0, 2), (1, 2), (0, 3)]),
        (
            "T13",
            &[
                (0, 3), (1, 3), (2, 3), (3, 3), (4, 3), (1, 2), (2, 2), (3, 2), (2, 1), (2, 0), (1, 1), (3, 1),
                (2, 4),
            ],
        ),
    ];
    for (name, cells) in shapes {
        out.push((name.to_string(), cells.to_vec()));
    }
    out
}

type PointMap = fn(f64, f64, f64, f64) -> (f64, f64);

/// One port per orbit of the symmetries of the cell set.
fn port_representatives(d: &LatticeDomain, cells: &[Key]) -> Vec<usize> {
    let (w, h) = (
        cells.iter().map(|c| c.0).max().unwrap() + 1,
        cells.iter().map(|c| c.1).max().unwrap() + 1,
    );
    let eps = d.mesh();
    let maps: Vec<Box<dyn Fn(Key) -> Key>> = vec![
        Box::new(|(i, j)| (i, j)),
        Box::new(move |(i, j)| (w - 1 - i, j)),
        Box::new(move |(i, j)| (i, h - 1 - j)),
        Box::new(move |(i, j)| (w - 1 - i, h - 1 - j)),
        Box::new(|(i, j)| (j, i)),
        Box::new(move |(i, j)| (h - 1 - j, i)),
        Box::new(move |(i, j)| (j, w - 1 - i)),
        Box::new(move |(i, j)| (h - 1 - j, w - 1 - i)),
    ];
    let mut sorted = cells.to_vec();
    sorted.sort();
    // the point maps matching each cell map, in units of the mesh
    let (wf, hf) = (w as f64, h as f64);
    let points: [PointMap; 8] = [
        |x, y, _, _| (x, y),
        |x, y, w, _| (w - x, y),
        |x, y, _, h| (x, h - y),
        |x, y, w, h| (w - x, h - y),
        |x, y, _, _| (y, x),
        |x, y, _, h| (h - y, x),
        |x, y, w, _| (y, w - x),
        |x, y, w, h| (h - y, w - x),
    ];
    let symmetries: Vec<usize> = (0..8)
        .filter(|&k| {
            let mut image: Vec<Key> = cells.iter().map(|&c| maps[k](c)).collect();
            image.sort();
            image == sorted
        })
        .collect();
    let key = |p: Complex64| ((p.re / eps * 2.0).round() as i64, (p.im / eps * 2.0).round() as i64);
    let mut seen = std::collections::HashSet::new();
    let mut reps = Vec::new();
    for port in 0..d.port_count() {
        let p = d.mid_edge_position(d.port_mid(port));
        if seen.contains(&key(p)) {
            continue;
        }
        reps.push(port);
        for &k in &symmetries {
            let (x, y) = points[k](p.re / eps, p.im / eps, wf, hf);
            seen.insert(key(Complex64::new(x * eps, y * eps)));
        }
    }
    reps
}

// --- criteria -------------------------------------------------------------

fn criterion_1_and_6() -> (Line, Line) {
    let start = Instant::now();
    let (mut worst_crit, mut min_off, mut worst_ratio) = (0.0f64, f64::INFINITY, 0.0f64);
    let (mut domains, mut pairs) = (0, 0);
    for (_, cells) in square_shapes() {
        let d = LatticeDomain::from_square_cells(&cells, 1.0).unwrap();
        domains += 1;
        for a in port_representatives(&d, &cells) {
            let counts = IsingCounts::new(&d, a, BUDGET).unwrap();
            let f = counts.field(X_CRITICAL);
            worst_crit = worst_crit.max(max_strong_residual(&d, &f, 0..d.vertex_count()).max_residual);
            let off = counts.field(0.5);
            min_off = min_off.min(max_strong_residual(&d, &off, 0..d.vertex_count()).max_residual);
            for b in (0..d.port_count()).filter(|&b| b != a) {
                let g = solve_riemann_bvp_ports(&d, a, b).unwrap().field;
                worst_ratio = worst_ratio.max(proportionality_gap(&f, &g));
                pairs += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let c1 = line(
        worst_crit <= 1e-10 && min_off > 1e-3 && secs <= 60.0,
        format!(
            "{domains} domains: max residual at x_c {worst_crit:.2e}, min over domains at x=0.5 {min_off:.2e}, \
             {secs:.1}s (with the solver runs)"
        ),
    );
    let c6 = line(worst_ratio <= 1e-8, format!("{pairs} (a, b) pairs: max relative deviation {worst_ratio:.2e}"));
    (c1, c6)
}

/// `max|f − c·g| / max|f|` with `c` fitted at the largest entry of `g`.
fn proportionality_gap(f: &MidEdgeField, g: &MidEdgeField) -> f64 {
    let k = (0..g.len()).max_by(|&i, &j| g.get(i).norm().total_cmp(&g.get(j).norm())).unwrap();
    let c = f.get(k) / g.get(k);
    let scale = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    (0..f.len()).map(|z| (f.get(z) - c * g.get(z)).norm()).fold(0.0, f64::max) / scale
}

fn criterion_2() -> Line {
    let w = FermionicWeightSpec::default();
    let lambda_ok = (w.lambda - Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)).norm() < 1e-15;
    let crit = verify_pair_identities(&IsingParams::critical(), &w);
    let off = verify_pair_identities(&IsingParams::from_x(0.5).unwrap(), &w);
    line(
        lambda_ok && crit.first <= 1e-14 && crit.second <= 1e-14 && off.second > 0.1,
        format!("critical ({:.1e}, {:.1e}), second at x=0.5 {:.3}", crit.first, crit.second, off.second),
    )
}

fn hex_patches() -> Vec<LatticeDomain> {
    let shapes: [&[Key]; 4] = [
        &[(0, 0)],
        &[(0, 0), (1, 0), (2, 0)],
        &[(0, 0), (1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)],
        &[
            (0, 0), (1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1), (2, -1), (2, 0), (1, 1), (-2, 1), (-1, 2),
        ],
    ];
    shapes.iter().map(|c| LatticeDomain::from_hex_cells(c, 1.0).unwrap()).collect()
}

fn criterion_3() -> Line {
    let start = Instant::now();
    let (mut worst, mut worst_sum, mut cases) = (0.0f64, 0.0f64, 0);
    let (mut worst_rel, mut others_ok, mut over) = (0.0f64, true, Vec::new());
    for d in hex_patches() {
        for a in 0..d.port_count() {
            let counts = LoopCounts::new(&d, a, BUDGET).unwrap();
            for n in N_VALUES {
                for regime in [Regime::Dense, Regime::Dilute] {
                    let p = critical_params(n, regime).unwrap();
                    let f = counts.field(p.n, p.x, p.spin);
                    let scale = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    let mut r = 0.0f64;
                    for v in 0..d.vertex_count() {
                        r = r.max(vertex_relation_residual(&d, &f, v).unwrap().norm());
                    }
                    let bsum = boundary_sum(&d, &f).norm();
                    worst = worst.max(r);
                    worst_sum = worst_sum.max(bsum);
                    worst_rel = worst_rel.max(r / scale).max(bsum / scale);
                    if r > 1e-10 || bsum > 1e-9 {
                        let tag = format!("N={n} {regime:?} {} hexagons", d.face_count());
                        others_ok &= n == 0.0 && regime == Regime::Dense && d.face_count() == 12;
                        if !over.contains(&tag) {
                            over.push(tag);
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Line {
        pass: worst <= 1e-10 && worst_sum <= 1e-9 && secs <= 120.0,
        guard: Some(others_ok && worst_rel <= 1e-13 && secs <= 120.0),
        detail: format!(
            "{cases} cases: vertex relation {worst:.2e}, boundary sum {worst_sum:.2e}, relative to max|F| \
             {worst_rel:.1e}, over the absolute bound: [{}], {secs:.1}s",
            over.join(", ")
        ),
    }
}

fn criterion_4() -> Line {
    let mut worst = 0.0f64;
    for i in 0..=40 {
        let n = i as f64 * 0.05;
        for regime in [Regime::Dense, Regime::Dilute] {
            let t = verify_triplet_identities(&critical_params(n, regime).unwrap());
            worst = worst.max(t.loop_residual).max(t.edge_residual);
        }
    }
    let dilute = critical_params(1.0, Regime::Dilute).unwrap().x;
    let dense = critical_params(1.0, Regime::Dense).unwrap().x;
    let anchors = dilute == 1.0 / 3f64.sqrt() && dense == 1.0;
    line(
        worst <= 1e-12 && anchors,
        format!("max triplet residual {worst:.2e}; N=1: dilute x={dilute:.17}, dense x={dense:.17}"),
    )
}

fn criterion_5() -> Line {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let census = pool.install(|| saw_count(30, 30)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let first = census.counts[..5] == [3, 6, 12, 24, 48];
    let oracle = census.counts[..14] == naive_saw_count(14)[..];
    let r = connective_estimate(&census).unwrap();
    line(
        first && oracle && r.roots_decreasing && r.relative_gap <= 0.05 && secs <= 600.0,
        format!(
            "C(30)={}, C(30)^(1/30)={:.5}, gap {:.4}, oracle {oracle}, decreasing {}, {secs:.1}s single-threaded",
            census.get(30),
            r.roots[29],
            r.relative_gap,
            r.roots_decreasing
        ),
    )
}

fn criterion_7() -> Line {
    let r = observable_convergence_study(
        KernelKind::Disk,
        Complex64::new(0.0, -1.0),
        Complex64::new(0.0, 1.0),
        &[0.25, 0.125, 0.0625, 0.03125],
    )
    .unwrap();
    line(r.pass, format!("errors {:.4?}, order {:.3}", r.errors, r.empirical_order))
}

fn criterion_8() -> Line {
    let meshes = [0.125, 0.0625, 0.03125, 0.015625];
    let linear = dirichlet_convergence_study(HarmonicData::ReZ, &meshes).unwrap();
    let quad = dirichlet_convergence_study(HarmonicData::ReZ2, &meshes).unwrap();
    let cubic = dirichlet_convergence_study(HarmonicData::ReZ3, &meshes).unwrap();
    let quartic = dirichlet_convergence_study(HarmonicData::ReZ4, &meshes).unwrap();
    let exp = dirichlet_convergence_study(HarmonicData::ImExp, &meshes).unwrap();
    let exact = linear.errors.iter().chain(&quad.errors).all(|&e| e <= 1e-10);
    let smooth = quartic.pass && exp.pass;
    Line {
        pass: exact && cubic.empirical_order >= DIRICHLET_ORDER_THRESHOLD,
        guard: Some(exact && smooth),
        detail: format!(
            "Re z, Re z² max error {:.1e}; Re z³ order {:.2} (errors {:.1e}..{:.1e}); Re z⁴ order {:.2}, Im eᶻ order {:.2}",
            linear.errors.iter().chain(&quad.errors).fold(0.0f64, |m, &e| m.max(e)),
            cubic.empirical_order,
            cubic.errors[0],
            cubic.errors[3],
            quartic.empirical_order,
            exp.empirical_order
        ),
    }
}

fn criterion_9() -> Line {
    let d = LatticeDomain::rectangle(3, 3, 0.25).unwrap();
    let edges = central_edges(&d);
    let mut validated = true;
    let mut detail = String::new();
    for b in [Boundary::Plus, Boundary::Free] {
        let exact = energy_density_exact(&d, b, &edges).unwrap();
        let mc = energy_density_mc(&d, b, &edges, McOptions { sweeps: 200_000, seed: 2024 }).unwrap();
        let z = (mc.estimate - exact).abs() / mc.stderr;
        validated &= z <= 3.0;
        detail.push_str(&format!("4x4 {b:?} {z:.2}σ; "));
    }
    let plus = energy_trend_study(&[8, 16, 32], Boundary::Plus, 200_000, 1).unwrap();
    let free = energy_trend_study(&[8, 16, 32], Boundary::Free, 200_000, 1).unwrap();
    let dev = |r: &dca_core::scaling::ConvergenceReport| {
        r.deviations.clone().unwrap().iter().map(|d| format!("{d:+.4}")).collect::<Vec<_>>().join(" ")
    };
    detail.push_str(&format!("plus deviations {}, free {} (from {FRAC_1_SQRT_2:.6})", dev(&plus), dev(&free)));
    line(validated && plus.pass && free.pass, detail)
}

fn criterion_10() -> Line {
    let r = height_positivity_study(&[8, 16, 32], Complex64::new(0.5, 0.0), Complex64::new(0.5, 1.0)).unwrap();
    let fmax = |v: &[f64]| v.iter().fold(0.0f64, |m, &x| m.max(x));
    let fmin = |v: &[f64]| v.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let pass = fmax(&r.base_arc_max) <= 1e-8
        && fmin(&r.interior_min) >= -1e-6
        && r.face_residuals.windows(2).all(|w| w[1] < w[0]);
    line(
        pass && r.pass,
        format!(
            "base arc {:.1e}, interior min {:.3e}, face residuals {}",
            fmax(&r.base_arc_max),
            fmin(&r.interior_min),
            r.face_residuals.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn run_cli(args: &[&str], threads: usize) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_dca"))
        .args(args)
        .args(["--threads", &threads.to_string()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_11() -> Line {
    let sq = r#"{"kind":"square","cellsX":3,"cellsY":3,"mesh":0.5,"a":0,"b":6}"#;
    let hex = r#"{"kind":"hex","rings":1,"mesh":1.0,"a":0,"b":5}"#;
    let commands: Vec<Vec<&str>> = vec![
        vec!["dca-check", "--domain", sq],
        vec!["ising-observable", "--domain", sq],
        vec!["ising-energy", "--domain", sq, "--seed", "5", "--sweeps", "5000", "--format", "csv"],
        vec!["on-verify", "--N", "0.5", "--regime", "dense", "--domain", hex],
        vec!["saw-census", "--kmax", "20"],
        vec!["scaling-converge", "--study", "observable", "--meshes", "0.25,0.125,0.0625"],
        vec!["scaling-converge", "--study", "dirichlet", "--data", "reZ4"],
        vec!["scaling-converge", "--study", "energy", "--sizes", "4,8,16", "--sweeps", "4000", "--seed", "9"],
        vec!["scaling-converge", "--study", "height", "--sizes", "4,8"],
    ];
    let mut identical = 0;
    for c in &commands {
        let reference = run_cli(c, 1);
        if [1, 2, 4].iter().all(|&t| run_cli(c, t) == reference) {
            identical += 1;
        }
    }
    line(
        identical == commands.len(),
        format!("{identical}/{} commands byte-identical over threads 1, 1, 2, 4", commands.len()),
    )
}

#[test]
fn acceptance() {
    let (c1, c6) = criterion_1_and_6();
    let lines = vec![
        (1, "strong preholomorphicity", c1),
        (2, "pair identities", criterion_2()),
        (3, "O(N) vertex relation", criterion_3()),
        (4, "triplet identities", criterion_4()),
        (5, "connective constant", criterion_5()),
        (6, "oracle equivalence", c6),
        (7, "convergence to sqrt(P')", criterion_7()),
        (8, "Dirichlet convergence", criterion_8()),
        (9, "energy-density trend", criterion_9()),
        (10, "height function", criterion_10()),
        (11, "determinism", criterion_11()),
    ];
    let mut unexpected = Vec::new();
    for (k, name, l) in &lines {
        let known = KNOWN_UNATTAINABLE.contains(k);
        let tag = match (l.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {k:>2} {tag:<12} {name}: {}", l.detail);
        if !l.pass && !(known && l.guard == Some(true)) {
            unexpected.push(*k);
        }
    }
    assert!(unexpected.is_empty(), "failed criteria: {unexpected:?}");
}
