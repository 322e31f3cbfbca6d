//! Run orchestration and report emission.
//!
//! Units run in the order certify, bounds, solve, verify, audit. A failing
//! unit is recorded and the rest keep going. Every list is assembled in
//! input order, so the bundle does not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{eigenvalue_bounds, BoundQuery, BoundSet};
use crate::config::{Format, OutputSettings, RunConfig, VerifyTask};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::liyau::{
    build_cutoff, check_global_gradient, check_laplacian_comparison, g_certificate, CheckKind,
    GParams, LiYauReport, LogGradientSource,
};
use crate::model::{certify_hypotheses, HypothesisCertificate, WarpedModel};
use crate::soliton::{run_soliton, SolitonOutcome};
use crate::sturm::{
    discretize, domain_sweep, smallest_eigenpair, BoundaryCondition, ConvergenceTable,
};
use crate::sweep::{theorem_sweep, SweepReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok { value: T },
    Failed { error: String, exit_code: i32 },
    Skipped { reason: String },
}

impl<T> Outcome<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(value) => Self::Ok { value },
            Err(e) => Self::Failed {
                error: e.to_string(),
                exit_code: e.exit_code(),
            },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Self::Ok { value } => Some(value),
            _ => None,
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            Self::Failed { exit_code, .. } => *exit_code,
            _ => 0,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Self::Ok { .. } => "ok",
            Self::Failed { .. } => "failed",
            Self::Skipped { .. } => "skipped",
        }
    }

    fn note(&self) -> &str {
        match self {
            Self::Ok { .. } => "",
            Self::Failed { error, .. } => error,
            Self::Skipped { reason } => reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub query: BoundQuery,
    pub outcome: Outcome<BoundSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub task: usize,
    pub model: String,
    pub h: f64,
    pub outcome: Outcome<ConvergenceTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub task: usize,
    pub model: String,
    pub check: CheckKind,
    pub outcome: Outcome<LiYauReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub version: String,
    pub seed: u64,
    /// SHA-256 of the bundle serialized with this field empty.
    pub run_hash: String,
    pub inputs: RunConfig,
    pub certificates: BTreeMap<String, Outcome<HypothesisCertificate>>,
    pub bounds: Vec<BoundRecord>,
    pub solves: Vec<SolveRecord>,
    pub verify: Vec<VerifyRecord>,
    pub solitons: Vec<Outcome<SolitonOutcome>>,
    pub sweep: Option<Outcome<SweepReport>>,
}

impl ReportBundle {
    pub fn is_empty(&self) -> bool {
        self.certificates.is_empty()
            && self.bounds.is_empty()
            && self.solves.is_empty()
            && self.verify.is_empty()
            && self.solitons.is_empty()
            && self.sweep.is_none()
    }

    /// Largest exit code among failed units, 0 when none failed.
    pub fn exit_code(&self) -> i32 {
        self.certificates
            .values()
            .map(Outcome::exit_code)
            .chain(self.bounds.iter().map(|r| r.outcome.exit_code()))
            .chain(self.solves.iter().map(|r| r.outcome.exit_code()))
            .chain(self.verify.iter().map(|r| r.outcome.exit_code()))
            .chain(self.solitons.iter().map(Outcome::exit_code))
            .chain(self.sweep.iter().map(Outcome::exit_code))
            .max()
            .unwrap_or(0)
    }

    pub fn compute_hash(&self) -> String {
        let mut unhashed = self.clone();
        unhashed.run_hash.clear();
        let bytes = serde_json::to_vec(&unhashed).expect("bundle serializes");
        Sha256::digest(&bytes)
            .iter()
            .fold(String::new(), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

/// Which units a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub certify: bool,
    pub bounds: bool,
    pub solve: bool,
    pub verify: bool,
    pub soliton: bool,
    pub sweep: bool,
}

impl Stages {
    pub const ALL: Self = Self {
        certify: true,
        bounds: true,
        solve: true,
        verify: true,
        soliton: true,
        sweep: true,
    };
    pub const NONE: Self = Self {
        certify: false,
        bounds: false,
        solve: false,
        verify: false,
        soliton: false,
        sweep: false,
    };
}

pub fn run(config: &RunConfig) -> Result<ReportBundle> {
    run_stages(config, Stages::ALL)
}

pub fn run_stages(config: &RunConfig, stages: Stages) -> Result<ReportBundle> {
    config.validate()?;
    let certify = stages.certify || stages.verify;
    let certificates: BTreeMap<String, Outcome<HypothesisCertificate>> = if certify {
        config
            .models
            .par_iter()
            .map(|(name, spec)| {
                let r = spec.build().and_then(|m| {
                    certify_hypotheses(&m, config.solver.certify_samples, spec.target)
                });
                (name.clone(), Outcome::from_result(r))
            })
            .collect()
    } else {
        BTreeMap::new()
    };

    let bounds = if stages.bounds {
        config
            .bounds
            .par_iter()
            .map(|q| BoundRecord {
                query: *q,
                outcome: Outcome::from_result(eigenvalue_bounds(q)),
            })
            .collect()
    } else {
        Vec::new()
    };

    let solves = if stages.solve {
        let jobs: Vec<(usize, f64)> = (0..config.solves.len())
            .flat_map(|i| config.solver.h_list.iter().map(move |&h| (i, h)))
            .collect();
        jobs.par_iter()
            .map(|&(i, h)| {
                let task = &config.solves[i];
                let strategy = task.strategy.unwrap_or(config.solver.strategy);
                let r = config
                    .resolve(&task.model)
                    .and_then(|s| s.build())
                    .and_then(|m| {
                        domain_sweep(
                            &m,
                            strategy,
                            config.solver.center,
                            &config.solver.t_list,
                            h,
                            task.lambda_inf,
                        )
                    });
                SolveRecord {
                    task: i,
                    model: task.model.clone(),
                    h,
                    outcome: Outcome::from_result(r),
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    let verify = if stages.verify {
        config
            .verify
            .par_iter()
            .enumerate()
            .map(|(i, task)| VerifyRecord {
                task: i,
                model: task.model.clone(),
                check: task.check,
                outcome: verify_unit(config, task, certificates.get(&task.model)),
            })
            .collect()
    } else {
        Vec::new()
    };

    let solitons = if stages.soliton {
        config
            .solitons
            .par_iter()
            .map(|s| Outcome::from_result(run_soliton(s)))
            .collect()
    } else {
        Vec::new()
    };

    let sweep = match (&config.sweep, stages.sweep) {
        (Some(f), true) => Some(Outcome::from_result(theorem_sweep(config.seed, f))),
        _ => None,
    };

    // where the output lands is not part of the run
    let mut inputs = config.clone();
    inputs.output = OutputSettings::default();
    let mut bundle = ReportBundle {
        version: VERSION.to_string(),
        seed: config.seed,
        run_hash: String::new(),
        inputs,
        certificates,
        bounds,
        solves,
        verify,
        solitons,
        sweep,
    };
    bundle.run_hash = bundle.compute_hash();
    Ok(bundle)
}

fn verify_unit(
    config: &RunConfig,
    task: &VerifyTask,
    cert: Option<&Outcome<HypothesisCertificate>>,
) -> Outcome<LiYauReport> {
    let cert = match cert {
        Some(Outcome::Ok { value }) if value.is_certified() => value,
        Some(Outcome::Ok { value }) => {
            let v = &value.violations[0];
            return Outcome::Skipped {
                reason: format!(
                    "model `{}` failed certification at t = {} ({:?} = {})",
                    task.model, v.t, v.component, v.value
                ),
            };
        }
        _ => {
            return Outcome::Skipped {
                reason: format!("model `{}` has no certificate", task.model),
            }
        }
    };
    let k = task.k.unwrap_or(cert.k_certified);
    let theta = task.theta.unwrap_or(cert.theta_certified);
    Outcome::from_result(
        config
            .resolve(&task.model)
            .and_then(|s| s.build())
            .and_then(|m| run_check(config, task, &m, k, theta)),
    )
}

fn run_check(
    config: &RunConfig,
    task: &VerifyTask,
    model: &WarpedModel,
    k: f64,
    theta: f64,
) -> Result<LiYauReport> {
    let cfg = &config.verifier;
    let grid = model.uniform_grid(config.solver.certify_samples)?;
    if task.check == CheckKind::LaplacianComparison {
        return check_laplacian_comparison(model, cfg.center, k, theta, &grid, cfg);
    }
    let closed = match &task.closed_form {
        Some(cf) => Some((Expr::parse(&cf.f)?, cf.lambda)),
        None => None,
    };
    let eigen = match closed {
        Some(_) => None,
        None => {
            let op = discretize(
                model,
                model.domain,
                config.solver.h_list[0],
                BoundaryCondition::Dirichlet,
                BoundaryCondition::Dirichlet,
            )?;
            Some(smallest_eigenpair(&op, 1)?.remove(0))
        }
    };
    let source = match (&closed, &eigen) {
        (Some((f, lambda)), _) => LogGradientSource::ClosedForm {
            f,
            lambda: *lambda,
            grid: &grid,
        },
        (None, Some(e)) => LogGradientSource::Eigen(e),
        (None, None) => unreachable!(),
    };
    match task.check {
        CheckKind::GlobalGradient => check_global_gradient(model, source, k, theta, task.m0, cfg),
        CheckKind::GCertificate => {
            let cutoff = build_cutoff(task.r.expect("validated"), cfg.cutoff_samples)?;
            let params = GParams {
                k,
                theta,
                m0: task.m0.expect("validated"),
                epsilon: task.epsilon.unwrap_or(cfg.epsilon),
            };
            g_certificate(model, source, &cutoff, params, cfg)
        }
        CheckKind::LaplacianComparison => unreachable!(),
    }
}

/// Serde name of a unit enum variant.
fn tag<T: Serialize>(x: &T) -> String {
    serde_json::to_value(x)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// `(file name, header, rows)`.
type Table = (&'static str, Vec<&'static str>, Vec<Vec<String>>);

fn tables(b: &ReportBundle) -> Vec<Table> {
    let mut out = Vec::new();

    let rows = b
        .bounds
        .iter()
        .map(|r| {
            let q = &r.query;
            let s = r.outcome.value();
            vec![
                q.n.to_string(),
                num(q.k),
                num(q.theta),
                opt(q.m0),
                opt(s.map(|s| s.cheng)),
                opt(s.and_then(|s| s.eq_2_3)),
                opt(s.map(|s| s.optimized_eigen)),
            ]
        })
        .collect();
    out.push((
        "bounds.csv",
        vec!["n", "K", "theta", "m0", "cheng", "eq_2_3", "optimized"],
        rows,
    ));

    let rows = b
        .certificates
        .iter()
        .map(|(name, o)| {
            let c = o.value();
            vec![
                name.clone(),
                o.label().to_string(),
                c.map(|c| tag(&c.status)).unwrap_or_default(),
                opt(c.map(|c| c.k_certified)),
                opt(c.map(|c| c.theta_certified)),
                c.map(|c| c.violations.len().to_string())
                    .unwrap_or_default(),
                o.note().to_string(),
            ]
        })
        .collect();
    out.push((
        "certificates.csv",
        vec![
            "model",
            "outcome",
            "status",
            "K_certified",
            "theta_certified",
            "violations",
            "note",
        ],
        rows,
    ));

    let mut rows = Vec::new();
    for r in &b.solves {
        if let Some(t) = r.outcome.value() {
            for row in &t.rows {
                rows.push(vec![
                    r.task.to_string(),
                    r.model.clone(),
                    num(r.h),
                    num(row.t),
                    num(row.h),
                    num(row.lambda),
                ]);
            }
        }
    }
    out.push((
        "convergence.csv",
        vec!["task", "model", "h_task", "T", "h", "lambda"],
        rows,
    ));

    let rows = b
        .solves
        .iter()
        .map(|r| {
            let t = r.outcome.value();
            vec![
                r.task.to_string(),
                r.model.clone(),
                num(r.h),
                r.outcome.label().to_string(),
                opt(t.map(|t| t.lambda_half_mesh)),
                opt(t.map(|t| t.extrapolated)),
                opt(t.and_then(|t| t.fitted_rate)),
                r.outcome.note().to_string(),
            ]
        })
        .collect();
    out.push((
        "solves.csv",
        vec![
            "task",
            "model",
            "h",
            "outcome",
            "lambda_half_mesh",
            "extrapolated",
            "fitted_rate",
            "note",
        ],
        rows,
    ));

    let rows = b
        .verify
        .iter()
        .map(|r| {
            let v = r.outcome.value();
            vec![
                r.task.to_string(),
                r.model.clone(),
                tag(&r.check),
                r.outcome.label().to_string(),
                v.map(|v| tag(&v.status)).unwrap_or_default(),
                opt(v.map(|v| v.bound_used)),
                opt(v.map(|v| v.margin)),
                opt(v.and_then(|v| v.max_log_gradient_sq)),
                opt(v.and_then(|v| v.g_max)),
                opt(v.and_then(|v| v.c7_measured)),
                r.outcome.note().to_string(),
            ]
        })
        .collect();
    out.push((
        "verify.csv",
        vec![
            "task",
            "model",
            "check",
            "outcome",
            "status",
            "bound_used",
            "margin",
            "max_log_gradient_sq",
            "G_max",
            "C7_measured",
            "note",
        ],
        rows,
    ));

    let mut rows = Vec::new();
    for (i, o) in b.solitons.iter().enumerate() {
        match o.value() {
            Some(s) => {
                for a in &s.audits {
                    rows.push(vec![
                        i.to_string(),
                        tag(&s.spec.kind),
                        a.name.clone(),
                        num(a.residual_sup),
                        num(a.tolerance),
                        tag(&a.status),
                    ]);
                }
            }
            None => rows.push(vec![
                i.to_string(),
                String::new(),
                o.label().into(),
                String::new(),
                String::new(),
                o.note().into(),
            ]),
        }
    }
    out.push((
        "audits.csv",
        vec![
            "spec",
            "kind",
            "identity",
            "residual_sup",
            "tolerance",
            "status",
        ],
        rows,
    ));

    if let Some(Outcome::Ok { value }) = &b.sweep {
        let rows = value
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.model.index.to_string(),
                    r.model.n.to_string(),
                    r.model.warp.clone(),
                    r.model.weight.clone(),
                    num(r.model.params["c"]),
                    num(r.model.params["theta"]),
                    num(r.k_cert),
                    num(r.theta_cert),
                    num(r.extrapolated),
                    num(r.bound),
                    num(r.margin),
                    tag(&r.status),
                ]
            })
            .collect();
        out.push((
            "sweep.csv",
            vec![
                "index",
                "n",
                "warp",
                "weight",
                "c",
                "theta",
                "K_cert",
                "theta_cert",
                "extrapolated",
                "bound",
                "margin",
                "status",
            ],
            rows,
        ));
    }
    out
}

fn markdown(b: &ReportBundle) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# Run report\n\n- version: {}\n- seed: {}\n- run hash: `{}`",
        b.version, b.seed, b.run_hash
    );
    for (name, header, rows) in tables(b) {
        let _ = writeln!(s, "\n## {}\n", name.trim_end_matches(".csv"));
        let _ = writeln!(s, "| {} |", header.join(" | "));
        let _ = writeln!(s, "|{}", "---|".repeat(header.len()));
        for r in rows {
            let cells: Vec<String> = r.iter().map(|c| c.replace('|', "\\|")).collect();
            let _ = writeln!(s, "| {} |", cells.join(" | "));
        }
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    run_hash: String,
    version: String,
    generated_unix: u64,
}

/// Writes the bundle into `dir` and returns the written paths. Timestamps go
/// to `run_meta.json` only.
pub fn emit(bundle: &ReportBundle, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            for (name, header, rows) in tables(bundle) {
                let p = dir.join(name);
                write_file(&p, &csv_bytes(&header, rows))?;
                written.push(p);
            }
        }
        Format::Md => {
            let p = dir.join("report.md");
            write_file(&p, markdown(bundle).as_bytes())?;
            written.push(p);
        }
        Format::Json => {
            let p = dir.join("bundle.json");
            let mut text = serde_json::to_string_pretty(bundle).expect("bundle serializes");
            text.push('\n');
            write_file(&p, text.as_bytes())?;
            written.push(p);
        }
    }
    let meta = Sidecar {
        run_hash: bundle.run_hash.clone(),
        version: bundle.version.clone(),
        generated_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let p = dir.join("run_meta.json");
    write_file(
        &p,
        serde_json::to_string_pretty(&meta)
            .expect("sidecar serializes")
            .as_bytes(),
    )?;
    written.push(p);
    Ok(written)
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ReportBundle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
