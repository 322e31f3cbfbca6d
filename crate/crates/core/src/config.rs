//! Declarative run configuration, read from TOML or JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{check_epsilon, check_m0, BoundQuery};
use crate::error::{Error, Result};
use crate::expr::Params;
use crate::liyau::{CheckKind, VerifierConfig};
use crate::model::{Target, WarpedModel};
use crate::soliton::SolitonSpec;
use crate::sturm::SweepStrategy;
use crate::sweep::RandomFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n: usize,
    pub warp: String,
    pub weight: String,
    #[serde(default)]
    pub fiber_ricci_lb: f64,
    pub domain: (f64, f64),
    #[serde(default)]
    pub params: Params,
    /// Hypothesis to certify; without it the certificate reports the
    /// smallest `(K, θ)` that hold.
    #[serde(default)]
    pub target: Option<Target>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<WarpedModel> {
        WarpedModel::new(
            self.n,
            &self.warp,
            &self.weight,
            self.fiber_ricci_lb,
            self.domain,
            self.params.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(rename = "T_list")]
    pub t_list: Vec<f64>,
    pub h_list: Vec<f64>,
    pub strategy: SweepStrategy,
    pub center: f64,
    pub certify_samples: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            t_list: vec![10.0, 20.0, 30.0],
            h_list: vec![0.01],
            strategy: SweepStrategy::Dirichlet,
            center: 0.0,
            certify_samples: 2001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveTask {
    pub model: String,
    #[serde(default)]
    pub strategy: Option<SweepStrategy>,
    #[serde(default)]
    pub lambda_inf: Option<f64>,
}

/// Positive closed-form eigenfunction used instead of a numeric solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormSpec {
    pub f: String,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyTask {
    pub model: String,
    pub check: CheckKind,
    /// Certified value when absent.
    #[serde(default, rename = "K")]
    pub k: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub m0: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default, rename = "R")]
    pub r: Option<f64>,
    #[serde(default)]
    pub closed_form: Option<ClosedFormSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[serde(alias = "markdown")]
    Md,
    #[default]
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "md" | "markdown" => Ok(Self::Md),
            "json" => Ok(Self::Json),
            _ => Err(Error::validation("format", "expected csv, md or json")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub format: Format,
    pub dir: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            format: Format::Json,
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output: OutputSettings,
    pub models: BTreeMap<String, ModelSpec>,
    pub solver: SolverSettings,
    pub verifier: VerifierConfig,
    pub bounds: Vec<BoundQuery>,
    pub solves: Vec<SolveTask>,
    pub verify: Vec<VerifyTask>,
    pub solitons: Vec<SolitonSpec>,
    pub sweep: Option<RandomFamily>,
}

fn at(prefix: String, e: Error) -> Error {
    match e {
        Error::Validation { field, constraint } => Error::Validation {
            field: format!("{prefix}.{field}"),
            constraint,
        },
        other => other,
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, spec) in &self.models {
            spec.build().map_err(|e| at(format!("models.{name}"), e))?;
            if let Some(t) = spec.target {
                if !(t.k >= 0.0 && t.theta >= 0.0) {
                    return Err(Error::validation(
                        format!("models.{name}.target"),
                        "K and theta must be non-negative",
                    ));
                }
            }
        }
        let s = &self.solver;
        if s.t_list.is_empty()
            || !(s.t_list[0] > 0.0)
            || s.t_list.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::validation(
                "solver.T_list",
                "must be positive and strictly increasing",
            ));
        }
        if s.h_list.is_empty() || s.h_list.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::validation(
                "solver.h_list",
                "must be non-empty and positive",
            ));
        }
        if s.certify_samples < 2 {
            return Err(Error::validation(
                "solver.certify_samples",
                "need at least 2 samples",
            ));
        }
        self.verifier
            .validate()
            .map_err(|e| at("verifier".into(), e))?;
        for (i, q) in self.bounds.iter().enumerate() {
            q.validate().map_err(|e| at(format!("bounds[{i}]"), e))?;
        }
        for (i, t) in self.solves.iter().enumerate() {
            self.resolve(&t.model)
                .map_err(|e| at(format!("solves[{i}]"), e))?;
        }
        for (i, t) in self.verify.iter().enumerate() {
            self.validate_verify(t)
                .map_err(|e| at(format!("verify[{i}]"), e))?;
        }
        for (i, sp) in self.solitons.iter().enumerate() {
            sp.validate().map_err(|e| at(format!("solitons[{i}]"), e))?;
        }
        if let Some(f) = &self.sweep {
            f.validate().map_err(|e| at("sweep".into(), e))?;
        }
        Ok(())
    }

    pub fn resolve(&self, name: &str) -> Result<&ModelSpec> {
        self.models
            .get(name)
            .ok_or_else(|| Error::validation("model", format!("unknown model `{name}`")))
    }

    fn validate_verify(&self, t: &VerifyTask) -> Result<()> {
        let spec = self.resolve(&t.model)?;
        if let Some(m0) = t.m0 {
            check_m0(spec.n, m0)?;
        }
        if let Some(e) = t.epsilon {
            check_epsilon(e)?;
        }
        for (name, v) in [("K", t.k), ("theta", t.theta)] {
            if v.is_some_and(|v| !(v >= 0.0)) {
                return Err(Error::validation(name, "must be non-negative"));
            }
        }
        if let Some(cf) = &t.closed_form {
            crate::expr::Expr::parse(&cf.f)?;
        }
        if t.check == CheckKind::GCertificate {
            if t.m0.is_none() {
                return Err(Error::validation("m0", "required for g_certificate"));
            }
            if !t.r.is_some_and(|r| r > 0.0) {
                return Err(Error::validation("R", "g_certificate needs R > 0"));
            }
        }
        Ok(())
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let config_err = |message: String| Error::Config {
        path: path.to_path_buf(),
        message,
    };
    let cfg: RunConfig = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(text).map_err(|e| config_err(e.to_string()))?,
        Some("json") => serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?,
        _ => return Err(config_err("expected a .toml or .json file".into())),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[models.sharp]
n = 2
warp = "exp(-t)"
weight = "theta*t"
domain = [-30.0, 30.0]
params = { theta = 1.0 }

[[bounds]]
n = 2
K = 1.0
theta = 1.0
"#;

    fn toml(text: &str) -> Result<RunConfig> {
        parse_config(text, Path::new("run.toml"))
    }

    fn constraint(e: Error) -> String {
        match e {
            Error::Validation { field, constraint } => format!("{field}: {constraint}"),
            other => panic!("expected a validation error, got {other}"),
        }
    }

    #[test]
    fn minimal_config() {
        let cfg = toml(MINIMAL).unwrap();
        assert_eq!(cfg.models.len(), 1);
        assert_eq!(cfg.bounds[0].k, 1.0);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.output.format, Format::Json);
    }

    #[test]
    fn m0_equal_to_n_is_rejected() {
        let e = toml(&format!("{MINIMAL}m0 = 2.0\n")).unwrap_err();
        assert!(constraint(e).contains("m0 must exceed n"));
    }

    #[test]
    fn epsilon_two_is_rejected() {
        let e = toml(&format!("{MINIMAL}\n[verifier]\nepsilon = 2.0\n")).unwrap_err();
        assert!(constraint(e).contains("0<ε<2"));
        let e = toml(&format!("{MINIMAL}epsilon = 2.0\n")).unwrap_err();
        assert!(constraint(e).contains("0<ε<2"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e = toml(&format!("{MINIMAL}bogus = 1\n")).unwrap_err();
        assert!(matches!(e, Error::Config { .. }), "{e}");
        let e = toml(&format!("colour = 1\n{MINIMAL}")).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
    }

    #[test]
    fn parse_errors_carry_a_location() {
        let e = toml("[models.x\n").unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
        let e = parse_config("{\"seed\": }", Path::new("c.json"))
            .unwrap_err()
            .to_string();
        assert!(e.contains("line 1"), "{e}");
    }

    #[test]
    fn references_must_resolve() {
        let e = toml(&format!("{MINIMAL}\n[[solves]]\nmodel = \"nope\"\n")).unwrap_err();
        assert!(constraint(e).contains("unknown model"));
        let text = format!(
            "{MINIMAL}\n[[verify]]\nmodel = \"sharp\"\ncheck = \"g_certificate\"\nm0 = 3.0\n"
        );
        assert!(constraint(toml(&text).unwrap_err()).contains("R"));
    }

    #[test]
    fn bad_expressions_are_rejected() {
        let e = toml(&MINIMAL.replace("exp(-t)", "exp(-t")).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn json_and_toml_agree() {
        let cfg = toml(MINIMAL).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&json, Path::new("c.json")).unwrap(), cfg);
        assert!(parse_config(&json, Path::new("c.yaml")).is_err());
    }

    #[test]
    fn load_reports_io_errors() {
        let e = load_config("/nonexistent/run.toml").unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
