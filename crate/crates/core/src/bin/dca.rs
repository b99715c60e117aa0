//! `dca`: command-line front end for the lattice studies.
//!
//! Settings come from flags, `DCA_*` environment variables and an optional
//! JSON file given with `--config`, in that order of precedence.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use dca_core::dca::{
    contour_integral, cr_residual, face_corners, face_cycle, laplacian, max_strong_residual, solve_dirichlet,
    MidEdgeField, ResidualReport,
};
use dca_core::ising::{
    central_edges, energy_density_exact, energy_density_mc, fermionic_field, Boundary, IsingParams, McOptions,
    EXACT_MAX_SPINS, X_CRITICAL,
};
use dca_core::lattice::DomainSpec;
use dca_core::onmodel::{
    boundary_sum, connective_estimate, critical_params, naive_saw_count, parafermionic_field, saw_count,
    vertex_relation_residual, verify_triplet_identities, Regime,
};
use dca_core::scaling::{
    dirichlet_convergence_study, energy_trend_study, height_positivity_study, observable_convergence_study,
    HarmonicData, KernelKind,
};
use dca_core::{Error, LatticeDomain, LatticeKind};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const DEFAULT_BUDGET_LOG2: u32 = 24;
const DEFAULT_SAW_KMAX: usize = 30;
const SAW_KMAX_LIMIT: usize = 36;
const DEFAULT_SWEEPS: usize = 100_000;
const ORACLE_KMAX: usize = 14;
// the census is close enough to μ only from here on
const GAP_KMAX: usize = 30;

// tolerances used by --assert
const EXACT_TOL: f64 = 1e-10;
const TRIPLET_TOL: f64 = 1e-12;
const BOUNDARY_SUM_TOL: f64 = 1e-9;
const SAW_GAP_TOL: f64 = 0.05;
const MC_SIGMAS: f64 = 3.0;

#[derive(Parser)]
#[command(name = "dca", version, about = "Discrete complex analysis, Ising and O(N) lattice studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Residuals of the discrete operators on exactly representable data.
    DcaCheck(DcaCheckArgs),
    /// Fermionic observable by exhaustive enumeration.
    IsingObservable(IsingObservableArgs),
    /// Monte Carlo energy density at criticality.
    IsingEnergy(IsingEnergyArgs),
    /// Critical parameters and the vertex relation of the O(N) model.
    OnVerify(OnVerifyArgs),
    /// Self-avoiding walk census on the hexagonal lattice.
    SawCensus(SawCensusArgs),
    /// Convergence studies.
    ScalingConverge(ScalingArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags take precedence over its entries.
    #[arg(long, env = "DCA_CONFIG")]
    config: Option<PathBuf>,
    /// Output file; standard output if absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, env = "DCA_FORMAT")]
    format: Option<Format>,
    /// Worker threads; all cores by default.
    #[arg(long, env = "DCA_THREADS")]
    threads: Option<usize>,
    /// Exit with status 4 when the acceptance checks of the command fail.
    #[arg(long)]
    assert: bool,
}

#[derive(Args)]
struct DomainArgs {
    /// Domain spec as inline JSON.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, env = "DCA_ENUM_BUDGET_LOG2")]
    enum_budget_log2: Option<u32>,
}

#[derive(Args)]
struct DcaCheckArgs {
    #[command(flatten)]
    common: Common,
    /// Domain spec as inline JSON.
    #[arg(long)]
    domain: Option<String>,
}

#[derive(Args)]
struct IsingObservableArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    domain: DomainArgs,
    /// Edge weight; critical by default.
    #[arg(long)]
    x: Option<f64>,
}

#[derive(Args)]
struct IsingEnergyArgs {
    #[command(flatten)]
    common: Common,
    /// Domain spec as inline JSON.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long, env = "DCA_SWEEPS")]
    sweeps: Option<usize>,
    #[arg(long, env = "DCA_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct OnVerifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    domain: DomainArgs,
    /// Loop weight.
    #[arg(long = "N")]
    n: Option<f64>,
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
}

#[derive(Args)]
struct SawCensusArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "DCA_SAW_KMAX")]
    kmax: Option<usize>,
}

#[derive(Args)]
struct ScalingArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    study: Option<Study>,
    /// Comma-separated meshes (observable, dirichlet).
    #[arg(long, value_delimiter = ',')]
    meshes: Option<Vec<f64>>,
    /// Comma-separated lattice sizes (energy, height).
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    data: Option<DataArg>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long, env = "DCA_SWEEPS")]
    sweeps: Option<usize>,
    #[arg(long, env = "DCA_SEED")]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum CommandName {
    DcaCheck,
    IsingObservable,
    IsingEnergy,
    OnVerify,
    SawCensus,
    ScalingConverge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum BoundaryArg {
    Plus,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum RegimeArg {
    Dense,
    Dilute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Study {
    Observable,
    Dirichlet,
    Energy,
    Height,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "camelCase")]
#[value(rename_all = "camelCase")]
enum DataArg {
    ReZ,
    ReZ2,
    ReZ3,
    ReZ4,
    ImExp,
}

/// Everything a run depends on. Also the schema of `--config` files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    command: Option<CommandName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<DomainSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regime: Option<RegimeArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    enum_budget_log2: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    saw_kmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary: Option<BoundaryArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    study: Option<Study>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meshes: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<DataArg>,
    // output location and thread count never change the result, so they
    // stay out of the embedded copy
    #[serde(skip_serializing)]
    output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    #[serde(skip_serializing)]
    threads: Option<usize>,
}

impl ExperimentConfig {
    /// Entries of `self` win over those of `file`.
    fn over(self, file: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            command: self.command.or(file.command),
            domain: self.domain.or(file.domain),
            x: self.x.or(file.x),
            n: self.n.or(file.n),
            regime: self.regime.or(file.regime),
            enum_budget_log2: self.enum_budget_log2.or(file.enum_budget_log2),
            saw_kmax: self.saw_kmax.or(file.saw_kmax),
            seed: self.seed.or(file.seed),
            sweeps: self.sweeps.or(file.sweeps),
            boundary: self.boundary.or(file.boundary),
            study: self.study.or(file.study),
            meshes: self.meshes.or(file.meshes),
            sizes: self.sizes.or(file.sizes),
            data: self.data.or(file.data),
            output: self.output.or(file.output),
            format: self.format.or(file.format),
            threads: self.threads.or(file.threads),
        }
    }
}

enum Failure {
    Validation(String),
    Budget(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Budget(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Budget { .. } => Failure::Budget(e.to_string()),
            Error::NonConvergence { .. } | Error::Inconsistent { .. } | Error::LinearAlgebra(_) => {
                Failure::Runtime(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn parse_domain(s: Option<String>) -> Result<Option<DomainSpec>, Failure> {
    s.map(|s| serde_json::from_str(&s).map_err(|e| invalid(format!("domain spec: {e}"))))
        .transpose()
}

/// Flag and environment settings of the chosen subcommand.
fn from_flags(command: Command) -> Result<(ExperimentConfig, Option<PathBuf>, bool), Failure> {
    let mut c = ExperimentConfig::default();
    let common = match command {
        Command::DcaCheck(a) => {
            c.command = Some(CommandName::DcaCheck);
            c.domain = parse_domain(a.domain)?;
            a.common
        }
        Command::IsingObservable(a) => {
            c.command = Some(CommandName::IsingObservable);
            c.domain = parse_domain(a.domain.domain)?;
            c.enum_budget_log2 = a.domain.enum_budget_log2;
            c.x = a.x;
            a.common
        }
        Command::IsingEnergy(a) => {
            c.command = Some(CommandName::IsingEnergy);
            c.domain = parse_domain(a.domain)?;
            c.boundary = a.boundary;
            c.sweeps = a.sweeps;
            c.seed = a.seed;
            a.common
        }
        Command::OnVerify(a) => {
            c.command = Some(CommandName::OnVerify);
            c.domain = parse_domain(a.domain.domain)?;
            c.enum_budget_log2 = a.domain.enum_budget_log2;
            c.n = a.n;
            c.regime = a.regime;
            a.common
        }
        Command::SawCensus(a) => {
            c.command = Some(CommandName::SawCensus);
            c.saw_kmax = a.kmax;
            a.common
        }
        Command::ScalingConverge(a) => {
            c.command = Some(CommandName::ScalingConverge);
            c.study = a.study;
            c.meshes = a.meshes;
            c.sizes = a.sizes;
            c.data = a.data;
            c.boundary = a.boundary;
            c.sweeps = a.sweeps;
            c.seed = a.seed;
            a.common
        }
    };
    c.output = common.output;
    c.format = common.format;
    c.threads = common.threads;
    Ok((c, common.config, common.assert))
}

fn resolve(flags: ExperimentConfig, file: Option<PathBuf>) -> Result<ExperimentConfig, Failure> {
    let file_cfg = match file {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let (Some(a), Some(b)) = (flags.command, file_cfg.command) {
        if a != b {
            return Err(invalid(format!("config is for {b:?}, not {a:?}")));
        }
    }
    let mut c = flags.over(file_cfg);
    let cmd = c.command.expect("set from the subcommand");
    if c.threads == Some(0) {
        return Err(invalid("threads must be positive"));
    }
    let needs_budget = matches!(cmd, CommandName::IsingObservable | CommandName::OnVerify);
    if needs_budget {
        let b = *c.enum_budget_log2.get_or_insert(DEFAULT_BUDGET_LOG2);
        if b == 0 {
            return Err(invalid("enumBudgetLog2 must be positive"));
        }
    }
    c.format.get_or_insert(if cmd == CommandName::SawCensus { Format::Csv } else { Format::Json });
    match cmd {
        CommandName::DcaCheck => {
            if c.domain.is_none() {
                return Err(invalid("dca-check needs a domain"));
            }
        }
        CommandName::IsingObservable => {
            if c.domain.is_none() {
                return Err(invalid("ising-observable needs a domain"));
            }
            c.x.get_or_insert(X_CRITICAL);
        }
        CommandName::IsingEnergy => {
            if c.domain.is_none() {
                return Err(invalid("ising-energy needs a domain"));
            }
            mc_defaults(&mut c)?;
        }
        CommandName::OnVerify => {
            if c.n.is_none() {
                return Err(invalid("on-verify needs N"));
            }
            c.regime.get_or_insert(RegimeArg::Dilute);
        }
        CommandName::SawCensus => {
            if *c.saw_kmax.get_or_insert(DEFAULT_SAW_KMAX) == 0 {
                return Err(invalid("sawKmax must be positive"));
            }
        }
        CommandName::ScalingConverge => {
            let study = c.study.ok_or_else(|| invalid("scaling-converge needs a study"))?;
            match study {
                Study::Observable => {
                    c.meshes.get_or_insert_with(|| vec![0.25, 0.125, 0.0625, 0.03125]);
                }
                Study::Dirichlet => {
                    c.meshes.get_or_insert_with(|| vec![0.125, 0.0625, 0.03125, 0.015625]);
                    c.data.get_or_insert(DataArg::ReZ3);
                }
                Study::Energy => {
                    c.sizes.get_or_insert_with(|| vec![8, 16, 32]);
                    mc_defaults(&mut c)?;
                }
                Study::Height => {
                    c.sizes.get_or_insert_with(|| vec![8, 16, 32]);
                }
            }
        }
    }
    Ok(c)
}

fn mc_defaults(c: &mut ExperimentConfig) -> Result<(), Failure> {
    if c.seed.is_none() {
        return Err(invalid("Monte Carlo runs need a seed"));
    }
    c.boundary.get_or_insert(BoundaryArg::Plus);
    if *c.sweeps.get_or_insert(DEFAULT_SWEEPS) == 0 {
        return Err(invalid("sweeps must be positive"));
    }
    Ok(())
}

struct Outcome {
    json: Value,
    csv: String,
    pass: bool,
}

fn boundary(b: BoundaryArg) -> Boundary {
    match b {
        BoundaryArg::Plus => Boundary::Plus,
        BoundaryArg::Free => Boundary::Free,
    }
}

fn residual_json(r: &ResidualReport) -> Value {
    json!({ "op": r.op, "maxResidual": r.max_residual, "argmaxLocation": r.argmax_location })
}

fn residual_csv(reports: &[ResidualReport]) -> String {
    let mut s = String::from("op,maxResidual,argmaxLocation\n");
    for r in reports {
        let loc = r.argmax_location.map(|l| l.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{:.16e},{loc}\n", r.op, r.max_residual));
    }
    s
}

fn dca_check(d: &LatticeDomain) -> Result<Outcome, Failure> {
    let pos = d.vertices();
    let quad: Vec<f64> = pos.iter().map(|z| (z * z).re).collect();
    let mut reports = Vec::new();

    let mut lap = ResidualReport::new("laplacian_re_z2");
    for v in d.interior_vertices() {
        lap.record(v, laplacian(d, &quad, v)?.abs());
    }
    reports.push(lap);

    let mut dir = ResidualReport::new("dirichlet_re_z2");
    let u = solve_dirichlet(d, &quad)?;
    for (v, (a, b)) in u.iter().zip(&quad).enumerate() {
        dir.record(v, (a - b).abs());
    }
    reports.push(dir);

    let id = MidEdgeField::from_fn(d, |z| z);
    let mut morera = ResidualReport::new("contour_z");
    for f in 0..d.face_count() {
        morera.record(f, contour_integral(d, &id, &face_cycle(d, f))?.norm());
    }
    reports.push(morera);

    if d.kind() == LatticeKind::Square {
        let sq: Vec<Complex64> = pos.iter().map(|z| z * z).collect();
        let mut cr = ResidualReport::new("cr_z2");
        for v in face_corners(d) {
            cr.record(v, cr_residual(d, &sq, v)?.norm());
        }
        reports.push(cr);
    }

    let pass = reports.iter().all(|r| r.max_residual <= EXACT_TOL * d.mesh().max(1.0));
    Ok(Outcome {
        json: json!({ "reports": reports.iter().map(residual_json).collect::<Vec<_>>() }),
        csv: residual_csv(&reports),
        pass,
    })
}

fn ising_observable(c: &ExperimentConfig, d: &LatticeDomain) -> Result<Outcome, Failure> {
    let params = IsingParams::from_x(c.x.expect("resolved"))?;
    let (a, _) = d.marked_ports().ok_or_else(|| invalid("the domain needs marks a and b"))?;
    let f = fermionic_field(d, a, &params, c.enum_budget_log2.expect("resolved"))?;
    let strong = max_strong_residual(d, &f, 0..d.vertex_count());
    let mut csv = String::from("z,re,im\n");
    let mut rows = Vec::with_capacity(f.len());
    for (z, v) in f.values.iter().enumerate() {
        csv.push_str(&format!("{z},{:.16e},{:.16e}\n", v.re, v.im));
        rows.push(json!({ "z": z, "re": v.re, "im": v.im }));
    }
    // the strong relation only holds at criticality
    let pass = !params.is_critical() || strong.max_residual <= EXACT_TOL;
    Ok(Outcome {
        json: json!({
            "x": params.x,
            "domain": c.domain,
            "values": rows,
            "strongResidual": residual_json(&strong),
        }),
        csv,
        pass,
    })
}

fn ising_energy(c: &ExperimentConfig, d: &LatticeDomain) -> Result<Outcome, Failure> {
    let b = boundary(c.boundary.expect("resolved"));
    let edges = central_edges(d);
    let options = McOptions { sweeps: c.sweeps.expect("resolved"), seed: c.seed.expect("resolved") };
    let est = energy_density_mc(d, b, &edges, options)?;
    let exact = if d.vertex_count() <= EXACT_MAX_SPINS { Some(energy_density_exact(d, b, &edges)?) } else { None };
    let pass = exact.is_none_or(|e| (est.estimate - e).abs() <= MC_SIGMAS * est.stderr);
    let mut csv = String::from("estimate,stderr,sweeps,seed,exact\n");
    csv.push_str(&format!(
        "{:.16e},{:.16e},{},{},{}\n",
        est.estimate,
        est.stderr,
        est.sweeps,
        est.seed,
        exact.map(|e| format!("{e:.16e}")).unwrap_or_default()
    ));
    Ok(Outcome {
        json: json!({
            "estimate": est.estimate,
            "stderr": est.stderr,
            "sweeps": est.sweeps,
            "seed": est.seed,
            "edges": edges,
            "exact": exact,
            "deviation": est.estimate - FRAC_1_SQRT_2,
        }),
        csv,
        pass,
    })
}

fn on_verify(c: &ExperimentConfig) -> Result<Outcome, Failure> {
    let regime = match c.regime.expect("resolved") {
        RegimeArg::Dense => Regime::Dense,
        RegimeArg::Dilute => Regime::Dilute,
    };
    let p = critical_params(c.n.expect("resolved"), regime)?;
    let t = verify_triplet_identities(&p);
    let mut pass = t.loop_residual <= TRIPLET_TOL && t.edge_residual <= TRIPLET_TOL;
    let mut out = json!({ "params": p, "triplet": t });
    let mut csv = format!(
        "quantity,value\nN,{:.16e}\nx,{:.16e}\nspin,{:.16e}\nloopResidual,{:.16e}\nedgeResidual,{:.16e}\n",
        p.n, p.x, p.spin, t.loop_residual, t.edge_residual
    );
    if let Some(spec) = &c.domain {
        let d = spec.build()?;
        if d.kind() != LatticeKind::Hexagonal {
            return Err(invalid("the vertex relation needs a hex domain"));
        }
        let a = d.marked_ports().map_or(0, |(a, _)| a);
        let f = parafermionic_field(&d, a, &p, c.enum_budget_log2.expect("resolved"))?;
        let mut rel = ResidualReport::new("vertex_relation");
        for v in 0..d.vertex_count() {
            rel.record(v, vertex_relation_residual(&d, &f, v)?.norm());
        }
        let bsum = boundary_sum(&d, &f).norm();
        pass &= rel.max_residual <= EXACT_TOL && bsum <= BOUNDARY_SUM_TOL;
        csv.push_str(&format!("vertexRelation,{:.16e}\nboundarySum,{bsum:.16e}\n", rel.max_residual));
        let field: Vec<Value> =
            f.values.iter().enumerate().map(|(z, v)| json!({ "z": z, "re": v.re, "im": v.im })).collect();
        out["vertexRelation"] = residual_json(&rel);
        out["boundarySum"] = json!(bsum);
        out["values"] = json!(field);
    }
    Ok(Outcome { json: out, csv, pass })
}

fn saw_census(c: &ExperimentConfig) -> Result<Outcome, Failure> {
    let kmax = c.saw_kmax.expect("resolved");
    let census = saw_count(kmax, SAW_KMAX_LIMIT)?;
    let oracle = naive_saw_count(kmax.min(ORACLE_KMAX));
    let mut pass = census.counts[..oracle.len()] == oracle[..];
    let report = if kmax >= 10 { Some(connective_estimate(&census)?) } else { None };
    if let Some(r) = &report {
        pass &= r.roots_decreasing && (kmax < GAP_KMAX || r.relative_gap <= SAW_GAP_TOL);
    }
    Ok(Outcome { json: json!({ "counts": census.counts, "report": report }), csv: census.to_csv(), pass })
}

fn scaling(c: &ExperimentConfig) -> Result<Outcome, Failure> {
    match c.study.expect("resolved") {
        Study::Height => {
            let sizes = c.sizes.as_ref().expect("resolved");
            let r = height_positivity_study(sizes, Complex64::new(0.5, 0.0), Complex64::new(0.5, 1.0))?;
            let mut csv = String::from("size,baseArcMax,otherArcMax,interiorMin,faceResidual,cornerResidual\n");
            for i in 0..r.sizes.len() {
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    r.sizes[i],
                    r.base_arc_max[i],
                    r.other_arc_max[i],
                    r.interior_min[i],
                    r.face_residuals[i],
                    r.corner_residuals[i]
                ));
            }
            Ok(Outcome { json: serde_json::to_value(&r).expect("serializable"), csv, pass: r.pass })
        }
        study => {
            let r = match study {
                Study::Observable => observable_convergence_study(
                    KernelKind::Disk,
                    Complex64::new(0.0, -1.0),
                    Complex64::new(0.0, 1.0),
                    c.meshes.as_ref().expect("resolved"),
                )?,
                Study::Dirichlet => {
                    let data = match c.data.expect("resolved") {
                        DataArg::ReZ => HarmonicData::ReZ,
                        DataArg::ReZ2 => HarmonicData::ReZ2,
                        DataArg::ReZ3 => HarmonicData::ReZ3,
                        DataArg::ReZ4 => HarmonicData::ReZ4,
                        DataArg::ImExp => HarmonicData::ImExp,
                    };
                    dirichlet_convergence_study(data, c.meshes.as_ref().expect("resolved"))?
                }
                Study::Energy => energy_trend_study(
                    c.sizes.as_ref().expect("resolved"),
                    boundary(c.boundary.expect("resolved")),
                    c.sweeps.expect("resolved"),
                    c.seed.expect("resolved"),
                )?,
                Study::Height => unreachable!(),
            };
            Ok(Outcome { json: serde_json::to_value(&r).expect("serializable"), csv: r.to_csv(), pass: r.pass })
        }
    }
}

fn execute(c: &ExperimentConfig) -> Result<Outcome, Failure> {
    let domain = c.domain.as_ref().map(|s| s.build()).transpose()?;
    match c.command.expect("resolved") {
        CommandName::DcaCheck => dca_check(domain.as_ref().expect("resolved")),
        CommandName::IsingObservable => {
            let d = domain.as_ref().expect("resolved");
            if d.kind() != LatticeKind::Square {
                return Err(invalid("ising-observable needs a square domain"));
            }
            ising_observable(c, d)
        }
        CommandName::IsingEnergy => ising_energy(c, domain.as_ref().expect("resolved")),
        CommandName::OnVerify => on_verify(c),
        CommandName::SawCensus => saw_census(c),
        CommandName::ScalingConverge => scaling(c),
    }
}

/// JSON with every float written to 17 significant digits.
fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Number(n) if n.is_f64() => out.push_str(&format!("{:.16e}", n.as_f64().expect("f64"))),
        Value::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_json(item, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn render(c: &ExperimentConfig, outcome: &Outcome, assert: bool) -> String {
    let config = serde_json::to_value(c).expect("serializable");
    match c.format.expect("resolved") {
        Format::Json => {
            let mut doc = json!({ "version": VERSION, "config": config, "result": outcome.json });
            if assert {
                doc["pass"] = json!(outcome.pass);
            }
            let mut s = String::new();
            write_json(&doc, 0, &mut s);
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = format!("# dca {VERSION}\n");
            let mut compact = String::new();
            write_json(&config, 0, &mut compact);
            s.push_str(&format!("# config {}\n", compact.split_whitespace().collect::<Vec<_>>().join(" ")));
            if assert {
                s.push_str(&format!("# pass {}\n", outcome.pass));
            }
            s.push_str(&outcome.csv);
            s
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let (flags, file, assert) = from_flags(cli.command)?;
    let config = resolve(flags, file)?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    // keep dense kernels sequential so results do not depend on the pool
    faer::set_global_parallelism(faer::Par::Seq);
    let outcome = execute(&config)?;
    let text = render(&config, &outcome, assert);
    match &config.output {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(!assert || outcome.pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("dca: acceptance checks failed");
            ExitCode::from(4)
        }
        Err(f) => {
            let (Failure::Validation(m) | Failure::Budget(m) | Failure::Runtime(m)) = &f;
            eprintln!("dca: {m}");
            ExitCode::from(f.code())
        }
    }
}
