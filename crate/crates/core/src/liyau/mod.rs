//! Numerical checks of the log-gradient estimates and of the machinery
//! behind them: the Bochner formula, the Hessian refinement, the cutoff
//! construction, the weighted Laplacian comparison and the quadratic
//! certificate for `G = χ |∇h|²`.
//!
//! Everything is radial: `h = ln f` depends on `t` only, so `|∇h|² = h'²`
//! and balls around `t0` are intervals.

mod bochner;
mod certificate;
mod cutoff;

use serde::{Deserialize, Serialize};

use crate::bounds::global_gradient_bound;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::{certify_hypotheses, Target, WarpedModel};
use crate::sturm::EigenResult;

pub use bochner::{
    bochner_identity_check, bochner_identity_check_samples, BochnerForm, BochnerOptions,
    BochnerReport, Refinement,
};
pub use certificate::{g_certificate, GParams};
pub use cutoff::{build_cutoff, CutoffProfile, MIN_CUTOFF_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifierConfig {
    /// Cutoff constant; the profile's certified value when absent.
    #[serde(rename = "C_cutoff")]
    pub c_cutoff: Option<f64>,
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
    /// Constant of the quadratic certificate; measured when absent.
    #[serde(rename = "C7")]
    pub c7: Option<f64>,
    pub epsilon: f64,
    /// Fraction of the interval excluded at each end of a numeric eigenfunction.
    pub interior_margin: f64,
    /// A report passes iff `margin ≥ -tolerance`.
    pub tolerance: f64,
    /// Base point `t0` of balls and of the distance function.
    pub center: f64,
    pub cutoff_samples: usize,
    pub certify_samples: usize,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            c_cutoff: None,
            c1: None,
            c2: None,
            c7: None,
            epsilon: 0.1,
            interior_margin: 0.1,
            tolerance: 1e-3,
            center: 0.0,
            cutoff_samples: 10_001,
            certify_samples: 2001,
        }
    }
}

impl VerifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 2.0) {
            return Err(Error::validation("epsilon", "must satisfy 0<ε<2"));
        }
        if !(0.0..0.5).contains(&self.interior_margin) {
            return Err(Error::validation("interior_margin", "must lie in [0, 0.5)"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::validation("tolerance", "must be non-negative"));
        }
        for (name, v) in [
            ("C_cutoff", self.c_cutoff),
            ("C1", self.c1),
            ("C2", self.c2),
            ("C7", self.c7),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::validation(name, "must be finite and non-negative"));
                }
            }
        }
        if self.cutoff_samples < MIN_CUTOFF_SAMPLES {
            return Err(Error::validation(
                "cutoff_samples",
                "need at least 100 samples",
            ));
        }
        if self.certify_samples < 2 {
            return Err(Error::validation(
                "certify_samples",
                "need at least 2 samples",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    GlobalGradient,
    LaplacianComparison,
    GCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_margin(margin: f64, tolerance: f64) -> Self {
        if margin >= -tolerance {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiYauReport {
    pub check: CheckKind,
    /// `sup h'²` over the tested region.
    pub max_log_gradient_sq: Option<f64>,
    pub bound_used: f64,
    /// `bound - observed`, minimized over the region.
    pub margin: f64,
    /// Where the margin is smallest.
    pub location: f64,
    #[serde(rename = "sigma_R")]
    pub sigma_r: Option<f64>,
    #[serde(rename = "G_max")]
    pub g_max: Option<f64>,
    #[serde(rename = "A_value")]
    pub a_value: Option<f64>,
    pub discriminant: Option<f64>,
    pub quadratic_roots: Option<(f64, f64)>,
    #[serde(rename = "C_cutoff")]
    pub c_cutoff: Option<f64>,
    #[serde(rename = "C1_measured")]
    pub c1_measured: Option<f64>,
    #[serde(rename = "C2_measured")]
    pub c2_measured: Option<f64>,
    #[serde(rename = "C7_used")]
    pub c7_used: Option<f64>,
    #[serde(rename = "C7_measured")]
    pub c7_measured: Option<f64>,
    /// `ε ≤ 2σ(R)²`, the admissible range of the certificate.
    pub epsilon_admissible: Option<bool>,
    pub tolerance: f64,
    pub status: Status,
}

impl LiYauReport {
    fn new(check: CheckKind, bound_used: f64, margin: f64, location: f64, tolerance: f64) -> Self {
        Self {
            check,
            max_log_gradient_sq: None,
            bound_used,
            margin,
            location,
            sigma_r: None,
            g_max: None,
            a_value: None,
            discriminant: None,
            quadratic_roots: None,
            c_cutoff: None,
            c1_measured: None,
            c2_measured: None,
            c7_used: None,
            c7_measured: None,
            epsilon_admissible: None,
            tolerance,
            status: Status::from_margin(margin, tolerance),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Where `h = ln f` comes from.
#[derive(Debug, Clone, Copy)]
pub enum LogGradientSource<'a> {
    /// Numeric eigenfunction; `h'` by central differences of `ln f`.
    Eigen(&'a EigenResult),
    /// Closed-form positive `f` with its eigenvalue; `h' = f'/f` exactly.
    ClosedForm {
        f: &'a Expr,
        lambda: f64,
        grid: &'a [f64],
    },
}

/// Sampled `(t, h'²)` with the eigenvalue.
pub(crate) struct GradientSamples {
    pub lambda: f64,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
}

/// `h'²` on the source grid. For numeric eigenfunctions a band of relative
/// width `band` is dropped at each end, where `ln f` is singular.
pub(crate) fn log_gradient_samples(
    model: &WarpedModel,
    source: LogGradientSource<'_>,
    band: f64,
) -> Result<GradientSamples> {
    match source {
        LogGradientSource::Eigen(eig) => {
            let g = &eig.grid;
            if g.len() < 3 {
                return Err(Error::validation(
                    "eigenfunction",
                    "need at least 3 samples",
                ));
            }
            let (lo, hi) = (g[0] - eig.h, g[g.len() - 1] + eig.h);
            let cut = band * (hi - lo);
            let lf = eig.log_eigenfunction();
            let mut t = Vec::new();
            let mut u = Vec::new();
            for i in 1..g.len() - 1 {
                if g[i] < lo + cut || g[i] > hi - cut {
                    continue;
                }
                if !eig.one_signed && eig.eigenfunction[i - 1..=i + 1].iter().any(|&f| f <= 0.0) {
                    return Err(Error::Numerical(format!(
                        "nonpositive eigenfunction sample near t = {} (boundary band too thin?)",
                        g[i]
                    )));
                }
                let d = (lf[i + 1] - lf[i - 1]) / (g[i + 1] - g[i - 1]);
                t.push(g[i]);
                u.push(d * d);
            }
            if t.is_empty() {
                return Err(Error::validation(
                    "interior_margin",
                    "leaves no interior samples",
                ));
            }
            Ok(GradientSamples {
                lambda: eig.lambda,
                t,
                u,
            })
        }
        LogGradientSource::ClosedForm { f, lambda, grid } => {
            if grid.is_empty() {
                return Err(Error::validation("grid", "must not be empty"));
            }
            let mut u = Vec::with_capacity(grid.len());
            for &t in grid {
                let j = f.eval_d2(t, &model.params)?;
                if !(j.value > 0.0) {
                    return Err(Error::Numerical(format!(
                        "closed-form eigenfunction is not positive at t = {t}"
                    )));
                }
                let d = j.d1 / j.value;
                u.push(d * d);
            }
            Ok(GradientSamples {
                lambda,
                t: grid.to_vec(),
                u,
            })
        }
    }
}

fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}

/// Compares `sup h'²` with the global log-gradient bound for `(K, θ, m₀)`.
pub fn check_global_gradient(
    model: &WarpedModel,
    source: LogGradientSource<'_>,
    k: f64,
    theta: f64,
    m0: Option<f64>,
    cfg: &VerifierConfig,
) -> Result<LiYauReport> {
    cfg.validate()?;
    let s = log_gradient_samples(model, source, cfg.interior_margin)?;
    let bound = global_gradient_bound(model.n, k, theta, s.lambda, m0)?;
    let i = argmax(&s.u);
    let mut report = LiYauReport::new(
        CheckKind::GlobalGradient,
        bound,
        bound - s.u[i],
        s.t[i],
        cfg.tolerance,
    );
    report.max_log_gradient_sq = Some(s.u[i]);
    Ok(report)
}

/// Right side of the weighted Laplacian comparison at distance `rho > 0`.
pub fn comparison_bound(n: usize, k: f64, theta: f64, rho: f64) -> f64 {
    let nm1 = (n - 1) as f64;
    if k == 0.0 {
        nm1 / rho + theta
    } else {
        let sk = k.sqrt();
        nm1 * sk / (sk * rho).tanh() + theta
    }
}

/// Checks `Lρ = (n-1)a'/a - φ' ≤ (n-1)√K coth(√K(t-t0)) + θ` at grid points
/// `t > t0`, after certifying `(K, θ)` on the model domain.
pub fn check_laplacian_comparison(
    model: &WarpedModel,
    t0: f64,
    k: f64,
    theta: f64,
    grid: &[f64],
    cfg: &VerifierConfig,
) -> Result<LiYauReport> {
    cfg.validate()?;
    let cert = certify_hypotheses(model, cfg.certify_samples, Some(Target { k, theta }))?;
    if !cert.is_certified() {
        let first = &cert.violations[0];
        return Err(Error::Uncertified(format!(
            "(K, theta) = ({k}, {theta}) fails at t = {} ({:?} = {}); certified K = {}, theta = {}",
            first.t, first.component, first.value, cert.k_certified, cert.theta_certified
        )));
    }
    let mut margin = f64::INFINITY;
    let mut location = f64::NAN;
    let mut bound_at = f64::NAN;
    for &t in grid.iter().filter(|&&t| t > t0) {
        let (b, _) = model.drift_and_weight(t)?;
        let rhs = comparison_bound(model.n, k, theta, t - t0);
        if rhs - b < margin {
            margin = rhs - b;
            location = t;
            bound_at = rhs;
        }
    }
    if !margin.is_finite() {
        return Err(Error::validation("grid", "no grid points beyond t0"));
    }
    Ok(LiYauReport::new(
        CheckKind::LaplacianComparison,
        bound_at,
        margin,
        location,
        cfg.tolerance,
    ))
}
