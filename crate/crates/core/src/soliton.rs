//! Audits on flat gradient Ricci solitons `Ric + Hess φ = ρ g`.
//!
//! - Gaussian shrinker/expander: `ℝⁿ`, `φ = ρ r²/2`, so `R = 0`, `Δφ = nρ`.
//! - Steady linear soliton: `φ = a t`, `Hess φ = 0`, `|∇φ|² = a²`.
//!
//! Radial identities are checked with exact derivatives; spectra go through
//! the Sturm-Liouville solver.

use serde::{Deserialize, Serialize};

use crate::bounds::{eigenvalue_bounds, soliton_bounds, BoundQuery, SolitonBound};
use crate::error::{Error, Result};
use crate::expr::{Expr, Params};
use crate::liyau::Status;
use crate::model::WarpedModel;
use crate::sturm::{
    discretize, domain_sweep, residual_of_closed_form, smallest_eigenpair, BoundaryCondition,
    ConvergenceTable, DerivativeMode, SweepStrategy,
};

/// Tolerance of identity audits on the exact-derivative path.
pub const EXACT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonKind {
    Steady,
    Shrinking,
    Expanding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSpec {
    pub kind: SolitonKind,
    pub n: usize,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub a_const: f64,
    #[serde(default)]
    pub b_sup: Option<f64>,
    #[serde(default)]
    pub c_lb: Option<f64>,
}

impl SolitonSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::validation("n", "must be at least 1"));
        }
        match self.kind {
            SolitonKind::Shrinking if !(self.rho > 0.0) => {
                Err(Error::validation("rho", "shrinking solitons need rho > 0"))
            }
            SolitonKind::Expanding if !(self.rho < 0.0) => {
                Err(Error::validation("rho", "expanding solitons need rho < 0"))
            }
            SolitonKind::Steady if self.rho != 0.0 => {
                Err(Error::validation("rho", "steady solitons need rho = 0"))
            }
            SolitonKind::Steady if !(self.a_const >= 0.0) => {
                Err(Error::validation("a_const", "must be non-negative"))
            }
            SolitonKind::Expanding if self.c_lb.is_none() => {
                Err(Error::validation("c_lb", "required for expanding solitons"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityAudit {
    pub name: String,
    pub residual_sup: f64,
    /// Exact derivatives (true) or grid differences (false).
    pub exact: bool,
    pub tolerance: f64,
    pub status: Status,
}

impl IdentityAudit {
    fn exact(name: &str, residual_sup: f64) -> Self {
        Self::new(name, residual_sup, true, EXACT_TOLERANCE)
    }

    fn new(name: &str, residual_sup: f64, exact: bool, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            residual_sup,
            exact,
            tolerance,
            status: if residual_sup <= tolerance {
                Status::Pass
            } else {
                Status::Fail
            },
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

fn rho_params(rho: f64) -> Params {
    Params::from([("rho".to_string(), rho)])
}

/// Radial Euclidean Laplacian `f'' + (n-1) f'/r`; on `ℝ¹` the sign of `r`
/// is irrelevant, otherwise `r > 0`.
fn radial_laplacian(n: usize, r: f64, d1: f64, d2: f64) -> f64 {
    if n == 1 {
        d2
    } else {
        d2 + (n - 1) as f64 * d1 / r
    }
}

/// Trace identity, normalization and the `φ̃ = φ - n/2` eigen-identity for
/// the Gaussian shrinker, plus the equality witness of the `2ρ` bound.
pub fn gaussian_shrinker_audit(n: usize, rho: f64, grid: &[f64]) -> Result<Vec<IdentityAudit>> {
    if !(rho > 0.0) {
        return Err(Error::validation("rho", "shrinking solitons need rho > 0"));
    }
    if n < 1 {
        return Err(Error::validation("n", "must be at least 1"));
    }
    let pts: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&r| n == 1 || r > 0.0)
        .collect();
    if pts.is_empty() {
        return Err(Error::validation("grid", "needs radii r > 0"));
    }
    let phi = Expr::parse("rho*t^2/2")?;
    let params = rho_params(rho);
    let nf = n as f64;
    let scalar_curvature = 0.0;
    let (mut trace, mut norm, mut eigen) = (0.0f64, 0.0f64, 0.0f64);
    for &r in &pts {
        let j = phi.eval_d2(r, &params)?;
        let lap = radial_laplacian(n, r, j.d1, j.d2);
        let grad_sq = j.d1 * j.d1;
        // R + Δφ = nρ
        trace = trace.max((scalar_curvature + lap - nf * rho).abs());
        // |∇φ|² = -R + 2ρφ
        norm = norm.max((grad_sq - (-scalar_curvature + 2.0 * rho * j.value)).abs());
        // Δ_φ φ̃ = -2ρ φ̃ with Δ_φ = Δ - ∇φ·∇
        let tilde = j.value - nf / 2.0;
        let drift_lap = lap - grad_sq;
        eigen = eigen.max((drift_lap + 2.0 * rho * tilde).abs());
    }
    let bound = soliton_bounds(SolitonBound::ShrinkingTrace { rho })?;
    Ok(vec![
        IdentityAudit::exact("trace", trace),
        IdentityAudit::exact("normalization", norm),
        IdentityAudit::exact("phi_tilde_eigen", eigen),
        IdentityAudit::exact("trace_bound_witness", (bound - 2.0 * rho).abs()),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuReport {
    pub rho: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub h: f64,
    /// First nontrivial eigenvalue (odd sector, mesh-extrapolated).
    pub lambda1: f64,
    /// Second odd eigenvalue; expected near `3ρ`.
    pub second_odd: f64,
    pub bound: f64,
    pub classical: f64,
    /// Residual of `f = t` at `λ = ρ`, exact derivatives.
    pub witness_residual: f64,
    pub status: Status,
}

/// Tolerance of the OU first eigenvalue against `ρ`.
pub const OU_TOLERANCE: f64 = 1e-4;

/// `f'' - ρ t f'` on the odd sector `[0, T]`, `T = 12/√ρ`, mesh `h/√ρ`.
pub fn ou_spectrum_check(rho: f64, h: f64) -> Result<OuReport> {
    if !(rho > 0.0) {
        return Err(Error::validation("rho", "shrinking solitons need rho > 0"));
    }
    if !(h > 0.0) {
        return Err(Error::validation("h", "must be positive"));
    }
    let scale = rho.sqrt();
    let t_max = 12.0 / scale;
    let hh = h / scale;
    let model = WarpedModel::new(2, "1", "rho*t^2/2", 0.0, (0.0, t_max), rho_params(rho))?;
    let odd = SweepStrategy::OddSector {
        outer: BoundaryCondition::Neumann,
    };
    let table = domain_sweep(&model, odd, 0.0, &[t_max], hh, None)?;
    let op = discretize(
        &model,
        (0.0, t_max),
        hh,
        BoundaryCondition::Dirichlet,
        BoundaryCondition::Neumann,
    )?;
    let pair = smallest_eigenpair(&op, 2)?;
    let bound = soliton_bounds(SolitonBound::ShrinkingTrace { rho })?;
    let witness_grid: Vec<f64> = (1..=200).map(|i| t_max * i as f64 / 200.0).collect();
    let witness_residual = residual_of_closed_form(
        &model,
        &Expr::parse("t")?,
        rho,
        &witness_grid,
        DerivativeMode::Exact,
    )?;
    let lambda1 = table.extrapolated;
    let ok = (lambda1 - rho).abs() <= OU_TOLERANCE
        && lambda1 <= bound
        && witness_residual <= EXACT_TOLERANCE;
    Ok(OuReport {
        rho,
        t_max,
        h: hh,
        lambda1,
        second_odd: pair[1].lambda,
        bound,
        classical: rho,
        witness_residual,
        status: if ok { Status::Pass } else { Status::Fail },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyReport {
    pub a_const: f64,
    pub normalization: IdentityAudit,
    pub table: ConvergenceTable,
    pub bound: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub status: Status,
}

/// Tolerance of the extrapolated steady spectrum bottom against `a²/4`.
pub const STEADY_TOLERANCE: f64 = 3e-3;
pub const STEADY_T_LIST: [f64; 4] = [10.0, 20.0, 40.0, 60.0];

/// `f'' - a f'` on `[-T, T]`, Dirichlet, swept over `T`.
pub fn steady_linear_audit(a_const: f64, t_list: &[f64], h: f64) -> Result<SteadyReport> {
    if !(a_const >= 0.0) {
        return Err(Error::validation("a_const", "must be non-negative"));
    }
    let t_max = t_list.iter().cloned().fold(0.0, f64::max);
    let model = WarpedModel::new(
        2,
        "1",
        "a*t",
        0.0,
        (-t_max, t_max),
        Params::from([("a".to_string(), a_const)]),
    )?;
    // R + |∇φ|² = a² with R = 0
    let phi = model.weight.eval_d2(0.0, &model.params)?;
    let normalization = IdentityAudit::exact(
        "normalization",
        (0.0 + phi.d1 * phi.d1 - a_const * a_const).abs(),
    );
    let table = domain_sweep(
        &model,
        SweepStrategy::Dirichlet,
        0.0,
        t_list,
        h,
        Some(a_const * a_const / 4.0),
    )?;
    let bound = soliton_bounds(SolitonBound::Steady { a: a_const })?;
    let abs_error = (table.extrapolated - bound).abs();
    let ok = abs_error <= STEADY_TOLERANCE && normalization.passed();
    Ok(SteadyReport {
        a_const,
        normalization,
        table,
        bound,
        abs_error,
        tolerance: STEADY_TOLERANCE,
        status: if ok { Status::Pass } else { Status::Fail },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandingReport {
    pub n: usize,
    pub rho: f64,
    pub c_lb: f64,
    /// `-nρ + 2cρ`.
    pub theta_sq: f64,
    pub theta: f64,
    /// Optimized eigenvalue bound with `K = -ρ/(n-1)` and this `θ`.
    pub eigen_bound: Option<f64>,
    /// Gaussian-expander points with `φ ≥ c` checked against the chain.
    pub samples_checked: usize,
    pub audits: Vec<IdentityAudit>,
    pub status: Status,
}

/// Arithmetic of `|∇φ|² = -R + 2ρφ ≤ -nρ + 2ρφ ≤ -nρ + 2cρ`, plus the
/// chain evaluated on the Gaussian expander `φ = ρr²/2` over the ball
/// where `φ ≥ c` (non-empty only when `c ≤ 0`).
pub fn expanding_gradient_audit(n: usize, rho: f64, c_lb: f64) -> Result<ExpandingReport> {
    let theta_sq = soliton_bounds(SolitonBound::Expanding { n, rho, c: c_lb })?;
    let nf = n as f64;
    let closed = -nf * rho + 2.0 * c_lb * rho;
    let arithmetic = IdentityAudit::exact("bound_chain_arithmetic", (theta_sq - closed).abs());
    let theta = theta_sq.max(0.0).sqrt();
    let eigen_bound = if n >= 2 {
        let k = -rho / (nf - 1.0);
        Some(eigenvalue_bounds(&BoundQuery::new(n, k, theta))?.optimized_eigen)
    } else {
        None
    };

    let phi = Expr::parse("rho*t^2/2")?;
    let params = rho_params(rho);
    let mut samples_checked = 0;
    let (mut norm_res, mut chain_violation) = (0.0f64, 0.0f64);
    if c_lb <= 0.0 {
        let radius = (2.0 * c_lb / rho).sqrt();
        let scalar_curvature = 0.0;
        let steps = if radius > 0.0 { 200 } else { 0 };
        for i in 0..=steps {
            let r = if steps == 0 {
                0.0
            } else {
                radius * i as f64 / steps as f64
            };
            let j = phi.eval_d2(r, &params)?;
            if j.value < c_lb {
                continue;
            }
            let grad_sq = j.d1 * j.d1;
            norm_res = norm_res.max((grad_sq - (-scalar_curvature + 2.0 * rho * j.value)).abs());
            // R ≥ nρ, then φ ≥ c with ρ < 0
            let step1 = -nf * rho + 2.0 * rho * j.value;
            let step2 = closed;
            chain_violation = chain_violation.max(grad_sq - step1).max(step1 - step2);
            samples_checked += 1;
        }
    }
    let audits = vec![
        arithmetic,
        IdentityAudit::exact("normalization", norm_res),
        IdentityAudit::exact("chain_order", chain_violation.max(0.0)),
    ];
    let status = if audits.iter().all(IdentityAudit::passed) {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(ExpandingReport {
        n,
        rho,
        c_lb,
        theta_sq,
        theta,
        eigen_bound,
        samples_checked,
        audits,
        status,
    })
}

/// Everything the suite computes for one spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonOutcome {
    pub spec: SolitonSpec,
    pub audits: Vec<IdentityAudit>,
    pub ou: Option<OuReport>,
    pub steady: Option<SteadyReport>,
    pub expanding: Option<ExpandingReport>,
    /// `ρb/2` when `b_sup` is given for a shrinker.
    pub shrinking_bound: Option<f64>,
    pub status: Status,
}

pub const DEFAULT_OU_MESH: f64 = 0.01;
pub const DEFAULT_STEADY_MESH: f64 = 0.01;

pub fn run_soliton(spec: &SolitonSpec) -> Result<SolitonOutcome> {
    spec.validate()?;
    let mut out = SolitonOutcome {
        spec: *spec,
        audits: Vec::new(),
        ou: None,
        steady: None,
        expanding: None,
        shrinking_bound: None,
        status: Status::Pass,
    };
    let mut ok = true;
    match spec.kind {
        SolitonKind::Shrinking => {
            let grid: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64).collect();
            out.audits = gaussian_shrinker_audit(spec.n, spec.rho, &grid)?;
            ok &= out.audits.iter().all(IdentityAudit::passed);
            let ou = ou_spectrum_check(spec.rho, DEFAULT_OU_MESH)?;
            ok &= ou.status == Status::Pass;
            out.ou = Some(ou);
            if let Some(b) = spec.b_sup {
                out.shrinking_bound = Some(soliton_bounds(SolitonBound::Shrinking {
                    rho: spec.rho,
                    b,
                })?);
            }
        }
        SolitonKind::Steady => {
            let s = steady_linear_audit(spec.a_const, &STEADY_T_LIST, DEFAULT_STEADY_MESH)?;
            ok &= s.status == Status::Pass;
            out.audits = vec![s.normalization.clone()];
            out.steady = Some(s);
        }
        SolitonKind::Expanding => {
            let e = expanding_gradient_audit(spec.n, spec.rho, spec.c_lb.expect("validated"))?;
            ok &= e.status == Status::Pass;
            out.audits = e.audits.clone();
            out.expanding = Some(e);
        }
    }
    if !ok {
        out.status = Status::Fail;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radii() -> Vec<f64> {
        (0..=60).map(|i| -3.0 + 0.1 * i as f64).collect()
    }

    #[test]
    fn gaussian_identities() {
        for (n, rho) in [(2usize, 1.0), (1, 2.0), (5, 0.3)] {
            let a = gaussian_shrinker_audit(n, rho, &radii()).unwrap();
            assert_eq!(a.len(), 4);
            for x in &a {
                assert!(x.residual_sup <= 1e-12, "{n} {rho} {x:?}");
                assert!(x.passed());
            }
        }
        assert!(gaussian_shrinker_audit(2, 0.0, &radii()).is_err());
        assert!(gaussian_shrinker_audit(2, 1.0, &[-1.0, 0.0]).is_err());
    }

    #[test]
    fn trace_identity_in_one_dimension() {
        // 0 + 2 = 1·2: on ℝ¹, Δφ = φ'' = ρ
        let phi = Expr::parse("rho*t^2/2").unwrap();
        let j = phi.eval_d2(0.7, &rho_params(2.0)).unwrap();
        assert_eq!(radial_laplacian(1, 0.7, j.d1, j.d2), 2.0);
    }

    #[test]
    fn ou_spectrum() {
        let r = ou_spectrum_check(1.0, DEFAULT_OU_MESH).unwrap();
        assert!((r.lambda1 - 1.0).abs() < 1e-4, "{}", r.lambda1);
        assert!(r.lambda1 <= 2.0);
        assert!(r.witness_residual <= 1e-12);
        assert!((r.second_odd - 3.0).abs() < 1e-2);
        assert_eq!(r.status, Status::Pass);

        let r = ou_spectrum_check(2.0, DEFAULT_OU_MESH).unwrap();
        assert!((r.lambda1 - 2.0).abs() < 2e-4);
        assert!(r.lambda1 <= 4.0);
    }

    #[test]
    fn ou_scaling_covariance() {
        for rho in [0.5, 1.0, 2.0, 4.0] {
            let r = ou_spectrum_check(rho, 0.02).unwrap();
            assert!((r.lambda1 / rho - 1.0).abs() < 1e-3, "{rho}: {}", r.lambda1);
        }
    }

    #[test]
    fn steady_bottom() {
        let r = steady_linear_audit(2.0, &STEADY_T_LIST, DEFAULT_STEADY_MESH).unwrap();
        assert!((r.table.extrapolated - 1.0).abs() < 3e-3);
        assert_eq!(r.normalization.residual_sup, 0.0);
        assert_eq!(r.status, Status::Pass);
        let rate = r.table.fitted_rate.unwrap();
        assert!((rate + 2.0).abs() < 0.05, "{rate}");

        let r = steady_linear_audit(0.0, &STEADY_T_LIST, DEFAULT_STEADY_MESH).unwrap();
        assert!(r.table.extrapolated.abs() < 3e-3);
        assert_eq!(r.bound, 0.0);
    }

    #[test]
    fn expanding_chain() {
        let r = expanding_gradient_audit(2, -1.0, 1.0).unwrap();
        assert_eq!(r.theta_sq, 0.0);
        assert_eq!(r.theta, 0.0);
        assert_eq!(r.samples_checked, 0);
        assert_eq!(r.status, Status::Pass);

        let r = expanding_gradient_audit(4, -1.0, 0.0).unwrap();
        assert_eq!(r.theta_sq, 4.0);
        assert_eq!(r.theta, 2.0);
        assert_eq!(r.samples_checked, 1);

        let r = expanding_gradient_audit(3, -0.5, -2.0).unwrap();
        assert!(r.samples_checked > 100);
        assert!(r
            .audits
            .iter()
            .all(|a| a.residual_sup == 0.0 || a.residual_sup < 1e-14));
        // K = 0.25, θ² = 1.5 + 2
        let k = 0.25f64;
        let expected = (2.0 * k.sqrt() + 3.5f64.sqrt()).powi(2) / 4.0;
        assert!((r.eigen_bound.unwrap() - expected).abs() < 1e-12);

        assert!(expanding_gradient_audit(2, -1.0, 2.0).is_err());
        assert!(expanding_gradient_audit(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn spec_dispatch() {
        let spec = SolitonSpec {
            kind: SolitonKind::Shrinking,
            n: 2,
            rho: 1.0,
            a_const: 0.0,
            b_sup: Some(2.0),
            c_lb: None,
        };
        let out = run_soliton(&spec).unwrap();
        assert_eq!(out.status, Status::Pass);
        assert_eq!(out.shrinking_bound, Some(1.0));

        let bad = SolitonSpec {
            kind: SolitonKind::Steady,
            rho: 1.0,
            ..spec
        };
        assert!(run_soliton(&bad).is_err());
        let bad = SolitonSpec {
            kind: SolitonKind::Expanding,
            rho: -1.0,
            c_lb: None,
            ..spec
        };
        assert!(run_soliton(&bad).is_err());
    }
}
