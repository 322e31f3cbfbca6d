//! Quadratic certificate for `G = χ(|t - t0|) h'²`.
//!
//! At a maximum of `G` the gradient estimate reduces to
//!
//! ```text
//! (2-ε) G² - A G + (2σ² - ε) λ² ≤ 0,
//! A = C₇(1+ε⁻¹)/R² - 4λσ + [2(m₀-1)(n-1)+ε]K + 2(m₀-1)θ²/(m₀-n),
//! ```
//!
//! with `σ = sup_{B(R)} h'² / sup_{B(2R)} h'²`, so `G_max` must lie below
//! the larger root `(A + √(A² - 4(2-ε)λ²(2σ²-ε))) / (2(2-ε))`.

use serde::{Deserialize, Serialize};

use super::{
    log_gradient_samples, CheckKind, CutoffProfile, LiYauReport, LogGradientSource, Status,
    VerifierConfig,
};
use crate::error::{Error, Result};
use crate::model::WarpedModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GParams {
    #[serde(rename = "K")]
    pub k: f64,
    pub theta: f64,
    pub m0: f64,
    pub epsilon: f64,
}

struct Quadratic {
    n: usize,
    lambda: f64,
    sigma: f64,
    r: f64,
    p: GParams,
}

impl Quadratic {
    fn a(&self, c7: f64) -> f64 {
        let GParams {
            k,
            theta,
            m0,
            epsilon,
        } = self.p;
        let nm1 = (self.n - 1) as f64;
        c7 * (1.0 + 1.0 / epsilon) / (self.r * self.r) - 4.0 * self.lambda * self.sigma
            + (2.0 * (m0 - 1.0) * nm1 + epsilon) * k
            + 2.0 * (m0 - 1.0) * theta * theta / (m0 - self.n as f64)
    }

    fn discriminant(&self, a: f64) -> f64 {
        let e = self.p.epsilon;
        a * a - 4.0 * (2.0 - e) * self.lambda * self.lambda * (2.0 * self.sigma * self.sigma - e)
    }

    fn roots(&self, c7: f64) -> Option<(f64, f64)> {
        let a = self.a(c7);
        let d = self.discriminant(a);
        let den = 2.0 * (2.0 - self.p.epsilon);
        (d >= 0.0).then(|| ((a - d.sqrt()) / den, (a + d.sqrt()) / den))
    }

    fn passes(&self, c7: f64, g_max: f64) -> bool {
        self.roots(c7)
            .is_some_and(|(_, hi)| g_max <= hi + 1e-12 * hi.abs().max(1.0))
    }

    /// Smallest `C₇ ≥ 0` for which the certificate holds.
    fn measure_c7(&self, g_max: f64) -> Option<f64> {
        if self.passes(0.0, g_max) {
            return Some(0.0);
        }
        let mut hi = 1.0;
        while !self.passes(hi, g_max) {
            hi *= 2.0;
            if hi > 1e300 {
                return None;
            }
        }
        let mut lo = hi / 2.0;
        if hi == 1.0 {
            lo = 0.0;
        }
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.passes(mid, g_max) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

pub fn g_certificate(
    model: &WarpedModel,
    source: LogGradientSource<'_>,
    cutoff: &CutoffProfile,
    params: GParams,
    cfg: &VerifierConfig,
) -> Result<LiYauReport> {
    cfg.validate()?;
    if !(params.m0 > model.n as f64) {
        return Err(Error::validation("m0", "m0 must exceed n"));
    }
    if !(params.epsilon > 0.0 && params.epsilon < 2.0) {
        return Err(Error::validation("epsilon", "must satisfy 0<ε<2"));
    }
    if !(params.k >= 0.0 && params.theta >= 0.0) {
        return Err(Error::validation("K", "K and theta must be non-negative"));
    }
    let s = log_gradient_samples(model, source, cfg.interior_margin)?;
    let r = cutoff.r;
    let t0 = cfg.center;
    let step = s.t.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    let (tmin, tmax) = (s.t[0], s.t[s.t.len() - 1]);
    if tmin > t0 - 2.0 * r + step || tmax < t0 + 2.0 * r - step {
        return Err(Error::validation(
            "R",
            format!(
                "B(2R) = [{}, {}] is not covered by samples on [{tmin}, {tmax}]",
                t0 - 2.0 * r,
                t0 + 2.0 * r
            ),
        ));
    }

    let mut sup_inner = 0.0f64;
    let mut sup_outer = 0.0f64;
    let mut g_max = 0.0f64;
    let mut location = t0;
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    let c1_scale = (params.k.sqrt() + params.theta) / r + 1.0 / (r * r);
    for (&t, &u) in s.t.iter().zip(&s.u) {
        let rho = (t - t0).abs();
        if rho > 2.0 * r {
            continue;
        }
        sup_outer = sup_outer.max(u);
        if rho <= r {
            sup_inner = sup_inner.max(u);
        }
        let (chi, d1, d2) = CutoffProfile::evaluate(r, rho);
        let g = chi * u;
        if g > g_max {
            g_max = g;
            location = t;
        }
        if rho > 0.0 {
            let (b, _) = model.drift_and_weight(t)?;
            let l_chi = d2 + d1 * b * (t - t0).signum();
            c1 = c1.max(-l_chi / c1_scale);
        }
        if chi > 0.0 {
            c2 = c2.max(d1 * d1 / chi * r * r);
        }
    }
    let sigma = if sup_outer > 0.0 {
        sup_inner / sup_outer
    } else {
        1.0
    };

    let q = Quadratic {
        n: model.n,
        lambda: s.lambda,
        sigma,
        r,
        p: params,
    };
    let c7_measured = q.measure_c7(g_max);
    let c7_used = cfg.c7.or(c7_measured).unwrap_or(0.0);
    let a = q.a(c7_used);
    let disc = q.discriminant(a);
    let roots = q.roots(c7_used);
    let bound = match roots {
        Some((_, hi)) => hi,
        None => a / (2.0 * (2.0 - params.epsilon)),
    };

    let mut report = LiYauReport::new(
        CheckKind::GCertificate,
        bound,
        bound - g_max,
        location,
        cfg.tolerance,
    );
    if roots.is_none() || c7_measured.is_none() && cfg.c7.is_none() {
        report.status = Status::Fail;
    }
    report.max_log_gradient_sq = Some(sup_outer);
    report.sigma_r = Some(sigma);
    report.g_max = Some(g_max);
    report.a_value = Some(a);
    report.discriminant = Some(disc);
    report.quadratic_roots = roots;
    report.c_cutoff = Some(cfg.c_cutoff.unwrap_or(cutoff.certified_c));
    report.c1_measured = Some(c1);
    report.c2_measured = Some(c2);
    report.c7_used = Some(c7_used);
    report.c7_measured = c7_measured;
    report.epsilon_admissible = Some(params.epsilon <= 2.0 * sigma * sigma);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::liyau::build_cutoff;
    use crate::sturm::{discretize, smallest_eigenpair, BoundaryCondition};

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn sharp_params() -> GParams {
        GParams {
            k: 1.0,
            theta: 1.0,
            m0: 3.0,
            epsilon: 0.1,
        }
    }

    #[test]
    fn sharp_closed_form_needs_no_cutoff_constant() {
        let m = WarpedModel::sharp(2, 1.0, (-100.0, 100.0));
        let f = Expr::parse("exp(t)").unwrap();
        let g = grid(-50.0, 50.0, 2001);
        let cfg = VerifierConfig::default();
        for r in [5.0, 10.0, 20.0] {
            let cut = build_cutoff(r, 1000).unwrap();
            let src = LogGradientSource::ClosedForm {
                f: &f,
                lambda: 1.0,
                grid: &g,
            };
            let rep = g_certificate(&m, src, &cut, sharp_params(), &cfg).unwrap();
            assert_eq!(rep.sigma_r, Some(1.0));
            assert!((rep.g_max.unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(rep.c7_measured, Some(0.0));
            assert!(rep.passed());
            // A = -4 + 4.1 + 4 and disc = A² - 4(1.9)(1.9)
            assert!((rep.a_value.unwrap() - 4.1).abs() < 1e-12);
            assert!((rep.discriminant.unwrap() - (4.1f64.powi(2) - 4.0 * 1.9 * 1.9)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_eigenfunction_is_trivial() {
        let m = WarpedModel::new(2, "1", "t^2/2", 0.0, (-12.0, 12.0), Default::default()).unwrap();
        let op = discretize(
            &m,
            (-12.0, 12.0),
            0.02,
            BoundaryCondition::Neumann,
            BoundaryCondition::Neumann,
        )
        .unwrap();
        let eig = &smallest_eigenpair(&op, 1).unwrap()[0];
        let cut = build_cutoff(3.0, 500).unwrap();
        let p = GParams {
            k: 0.0,
            theta: 12.0,
            m0: 4.0,
            epsilon: 0.5,
        };
        let rep = g_certificate(
            &m,
            LogGradientSource::Eigen(eig),
            &cut,
            p,
            &VerifierConfig::default(),
        )
        .unwrap();
        assert!(rep.g_max.unwrap() < 1e-12);
        assert!(rep.passed());
        assert_eq!(rep.c7_measured, Some(0.0));
    }

    #[test]
    fn numeric_sharp_eigenfunction() {
        let m = WarpedModel::sharp(2, 1.0, (-100.0, 100.0));
        let cfg = VerifierConfig::default();
        let mut measured = Vec::new();
        for r in [5.0, 10.0, 20.0] {
            let op = discretize(
                &m,
                (-3.0 * r, 3.0 * r),
                0.01,
                BoundaryCondition::Dirichlet,
                BoundaryCondition::Dirichlet,
            )
            .unwrap();
            let eig = &smallest_eigenpair(&op, 1).unwrap()[0];
            let cut = build_cutoff(r, 1000).unwrap();
            let rep = g_certificate(
                &m,
                LogGradientSource::Eigen(eig),
                &cut,
                sharp_params(),
                &cfg,
            )
            .unwrap();
            assert!(rep.passed(), "{rep:?}");
            let roots = rep.quadratic_roots.unwrap();
            assert!(rep.g_max.unwrap() <= roots.1 * (1.0 + 1e-12));
            measured.push(rep.c7_measured.unwrap());
        }
        assert!(measured.windows(2).all(|w| w[1] <= w[0]), "{measured:?}");
    }

    #[test]
    fn uncovered_ball_is_rejected() {
        let m = WarpedModel::sharp(2, 1.0, (-100.0, 100.0));
        let f = Expr::parse("exp(t)").unwrap();
        let g = grid(-5.0, 5.0, 101);
        let cut = build_cutoff(5.0, 200).unwrap();
        let src = LogGradientSource::ClosedForm {
            f: &f,
            lambda: 1.0,
            grid: &g,
        };
        assert!(g_certificate(&m, src, &cut, sharp_params(), &VerifierConfig::default()).is_err());
    }
}
