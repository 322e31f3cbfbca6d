//! Warped-product weighted models `M = ℝ × N`, `g = dt² + a(t)² g_N`, with a
//! radial weight `φ(t)`.
//!
//! Everything reduces to the radial variable. In the orthonormal frame
//! `{∂t, e_α = a⁻¹ ē_α}` the tensor `Ric(L) = Ric + Hess φ` is diagonal with
//!
//! ```text
//! radial:      -(n-1) a''/a + φ''
//! tangential:  Ric_N(ē,ē)/a² - (a''/a + (n-2)(a'/a)²) + (a'/a) φ'
//! ```
//!
//! The fiber enters only through a lower bound `κ_N` on `Ric_N`, so the
//! tangential value is a certified lower bound rather than an exact value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Jet2, Params};

#[derive(Debug, Clone)]
pub struct WarpedModel {
    pub n: usize,
    pub warp: Expr,
    pub weight: Expr,
    pub fiber_ricci_lb: f64,
    pub domain: (f64, f64),
    pub params: Params,
}

/// Warp and weight jets at one radial position.
#[derive(Debug, Clone, Copy)]
pub struct LocalGeometry {
    pub t: f64,
    pub warp: Jet2,
    pub weight: Jet2,
}

impl LocalGeometry {
    /// `a'/a`
    pub fn log_warp_d1(&self) -> f64 {
        self.warp.d1 / self.warp.value
    }

    /// `a''/a`
    pub fn warp_d2_ratio(&self) -> f64 {
        self.warp.d2 / self.warp.value
    }
}

impl WarpedModel {
    pub fn new(
        n: usize,
        warp: &str,
        weight: &str,
        fiber_ricci_lb: f64,
        domain: (f64, f64),
        params: Params,
    ) -> Result<Self> {
        let model = Self {
            n,
            warp: Expr::parse(warp)?,
            weight: Expr::parse(weight)?,
            fiber_ricci_lb,
            domain,
            params,
        };
        model.validate()?;
        Ok(model)
    }

    /// `a = e^{-t}`, `φ = θ t`: the model on which the first-eigenvalue bound
    /// is attained.
    pub fn sharp(n: usize, theta: f64, domain: (f64, f64)) -> Self {
        Self::new(
            n,
            "exp(-t)",
            "theta*t",
            0.0,
            domain,
            Params::from([("theta".to_string(), theta)]),
        )
        .expect("sharp model is well-formed")
    }

    /// `a ≡ 1`, `φ ≡ 0`.
    pub fn flat(n: usize, domain: (f64, f64)) -> Self {
        Self::new(n, "1", "0", 0.0, domain, Params::new()).expect("flat model is well-formed")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::validation("n", "dimension must be at least 2"));
        }
        let (lo, hi) = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::validation(
                "domain",
                "must be a finite interval with lo < hi",
            ));
        }
        if !(self.fiber_ricci_lb >= 0.0) {
            return Err(Error::validation("fiber_ricci_lb", "must be non-negative"));
        }
        for name in self
            .warp
            .parameters()
            .iter()
            .chain(&self.weight.parameters())
        {
            if !self.params.contains_key(name) {
                return Err(Error::validation(
                    format!("params.{name}"),
                    "parameter referenced by an expression is not bound",
                ));
            }
        }
        Ok(())
    }

    pub fn dim_factor(&self) -> f64 {
        (self.n - 1) as f64
    }

    pub fn local(&self, t: f64) -> Result<LocalGeometry> {
        let warp = self.warp.eval_d2(t, &self.params)?;
        if !(warp.value > 0.0) {
            return Err(Error::NonPositiveWarp {
                t,
                value: warp.value,
            });
        }
        let weight = self.weight.eval_d2(t, &self.params)?;
        Ok(LocalGeometry { t, warp, weight })
    }

    /// `ln w(t) = (n-1) ln a(t) - φ(t)`, unnormalized.
    pub fn log_weight(&self, t: f64) -> Result<f64> {
        let a = self.warp.eval(t, &self.params)?;
        if !(a > 0.0) {
            return Err(Error::NonPositiveWarp { t, value: a });
        }
        let phi = self.weight.eval(t, &self.params)?;
        Ok(self.dim_factor() * a.ln() - phi)
    }

    /// Radial drift `b = (n-1)a'/a - φ'` and density `w = a^{n-1} e^{-φ}`.
    pub fn drift_and_weight(&self, t: f64) -> Result<(f64, f64)> {
        let g = self.local(t)?;
        let drift = self.dim_factor() * g.log_warp_d1() - g.weight.d1;
        let density = (self.dim_factor() * g.warp.value.ln() - g.weight.value).exp();
        Ok((drift, density))
    }

    /// Drift and its first derivative `b'`.
    pub fn drift_d1(&self, t: f64) -> Result<(f64, f64)> {
        let g = self.local(t)?;
        let r1 = g.log_warp_d1();
        let b = self.dim_factor() * r1 - g.weight.d1;
        let db = self.dim_factor() * (g.warp_d2_ratio() - r1 * r1) - g.weight.d2;
        Ok((b, db))
    }

    /// `Ric(L)(∂t, ∂t)`.
    pub fn ric_l_radial(&self, g: &LocalGeometry) -> f64 {
        -self.dim_factor() * g.warp_d2_ratio() + g.weight.d2
    }

    /// Certified lower bound of `Ric(L)(e_α, e_α)`.
    pub fn ric_l_tangential_lb(&self, g: &LocalGeometry) -> f64 {
        let r1 = g.log_warp_d1();
        let a = g.warp.value;
        self.fiber_ricci_lb / (a * a) - (g.warp_d2_ratio() + (self.n as f64 - 2.0) * r1 * r1)
            + r1 * g.weight.d1
    }

    pub fn uniform_grid(&self, samples: usize) -> Result<Vec<f64>> {
        if samples < 2 {
            return Err(Error::validation("samples", "need at least 2 samples"));
        }
        let (lo, hi) = self.domain;
        let h = (hi - lo) / (samples - 1) as f64;
        Ok((0..samples)
            .map(|i| {
                if i + 1 == samples {
                    hi
                } else {
                    lo + i as f64 * h
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub n: usize,
    pub grid: Vec<f64>,
    pub ric_l_radial: Vec<f64>,
    pub ric_l_tangential_lb: Vec<f64>,
    pub dphi: Vec<f64>,
}

impl CurvatureProfile {
    /// `Ric_{m,n}(L)(∂t,∂t) = Ric(L)(∂t,∂t) - φ'²/(m₀-n)`.
    pub fn ric_mn_radial(&self, m0: f64) -> Result<Vec<f64>> {
        let gap = m0 - self.n as f64;
        if !(gap > 0.0) {
            return Err(Error::validation("m0", "m0 must exceed n"));
        }
        Ok(self
            .ric_l_radial
            .iter()
            .zip(&self.dphi)
            .map(|(r, d)| r - d * d / gap)
            .collect())
    }
}

pub fn curvature_profile(model: &WarpedModel, samples: usize) -> Result<CurvatureProfile> {
    let grid = model.uniform_grid(samples)?;
    let mut radial = Vec::with_capacity(grid.len());
    let mut tangential = Vec::with_capacity(grid.len());
    let mut dphi = Vec::with_capacity(grid.len());
    for &t in &grid {
        let g = model.local(t)?;
        radial.push(model.ric_l_radial(&g));
        tangential.push(model.ric_l_tangential_lb(&g));
        dphi.push(g.weight.d1);
    }
    Ok(CurvatureProfile {
        n: model.n,
        grid,
        ric_l_radial: radial,
        ric_l_tangential_lb: tangential,
        dphi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    RicLRadial,
    RicLTangential,
    WeightGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Certified,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub component: Component,
    pub value: f64,
}

/// Target hypothesis `Ric(L) ≥ -(n-1)K`, `|φ'| ≤ θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    #[serde(rename = "K")]
    pub k: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCertificate {
    #[serde(rename = "K_certified")]
    pub k_certified: f64,
    pub theta_certified: f64,
    pub grid_spacing: f64,
    pub target: Option<Target>,
    pub violations: Vec<Violation>,
    pub status: CertificateStatus,
}

impl HypothesisCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == CertificateStatus::Certified
    }
}

// Absolute slack when comparing sampled curvature against a target.
const TARGET_SLACK: f64 = 1e-12;

/// Grid-based certificate of the curvature and gradient hypotheses.
///
/// Without a target the certificate reports the smallest `K ≥ 0` and `θ`
/// that hold on the grid. With a target every sample failing it is
/// recorded as a violation.
pub fn certify_hypotheses(
    model: &WarpedModel,
    samples: usize,
    target: Option<Target>,
) -> Result<HypothesisCertificate> {
    let profile = curvature_profile(model, samples)?;
    let nm1 = model.dim_factor();
    let min_component = profile
        .ric_l_radial
        .iter()
        .chain(&profile.ric_l_tangential_lb)
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let k_certified = (-min_component / nm1).max(0.0);
    let theta_certified = profile.dphi.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

    let mut violations = Vec::new();
    if let Some(tg) = target {
        if tg.k < 0.0 || tg.theta < 0.0 {
            return Err(Error::validation(
                "target",
                "K and theta must be non-negative",
            ));
        }
        let floor = -nm1 * tg.k;
        let slack = TARGET_SLACK * (1.0 + floor.abs());
        for (i, &t) in profile.grid.iter().enumerate() {
            let checks = [
                (
                    Component::RicLRadial,
                    profile.ric_l_radial[i],
                    floor - profile.ric_l_radial[i],
                ),
                (
                    Component::RicLTangential,
                    profile.ric_l_tangential_lb[i],
                    floor - profile.ric_l_tangential_lb[i],
                ),
                (
                    Component::WeightGradient,
                    profile.dphi[i],
                    profile.dphi[i].abs() - tg.theta,
                ),
            ];
            for (component, value, excess) in checks {
                if excess > slack {
                    violations.push(Violation {
                        t,
                        component,
                        value,
                    });
                }
            }
        }
    }
    let status = if violations.is_empty() {
        CertificateStatus::Certified
    } else {
        CertificateStatus::Violated
    };
    let grid_spacing = profile.grid[1] - profile.grid[0];
    Ok(HypothesisCertificate {
        k_certified,
        theta_certified,
        grid_spacing,
        target,
        violations,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sharp(n: usize, theta: f64) -> WarpedModel {
        WarpedModel::sharp(n, theta, (-5.0, 5.0))
    }

    #[test]
    fn sharp_model_radial_component_is_constant() {
        for n in 2..6 {
            for theta in [0.0, 0.5, 2.0] {
                let p = curvature_profile(&sharp(n, theta), 41).unwrap();
                for r in &p.ric_l_radial {
                    assert!((r + (n as f64 - 1.0)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn flat_cylinder_is_flat() {
        let p = curvature_profile(&WarpedModel::flat(3, (-1.0, 1.0)), 11).unwrap();
        assert!(p.ric_l_radial.iter().all(|&v| v == 0.0));
        assert!(p.ric_l_tangential_lb.iter().all(|&v| v == 0.0));
        assert!(p.dphi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tangential_includes_weight_hessian() {
        let m = WarpedModel::sharp(2, 1.0, (-1.0, 1.0));
        let g = m.local(0.0).unwrap();
        assert!((m.ric_l_tangential_lb(&g) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn mn_tensor_is_below_bakry_emery() {
        let m =
            WarpedModel::new(3, "cosh(t)", "0.7*sin(t)", 0.0, (-3.0, 3.0), Params::new()).unwrap();
        let p = curvature_profile(&m, 101).unwrap();
        for m0 in [3.5, 4.0, 10.0] {
            let mn = p.ric_mn_radial(m0).unwrap();
            for (i, v) in mn.iter().enumerate() {
                let expected = p.ric_l_radial[i] - p.dphi[i].powi(2) / (m0 - 3.0);
                assert_eq!(*v, expected);
                assert!(*v <= p.ric_l_radial[i]);
            }
        }
        assert!(p.ric_mn_radial(3.0).is_err());
    }

    #[test]
    fn certify_examples() {
        // a = e^{-t}, φ ≡ 0: every component is -(n-1).
        let c = certify_hypotheses(&sharp(3, 0.0), 201, None).unwrap();
        assert!((c.k_certified - 1.0).abs() < 1e-12);
        assert_eq!(c.theta_certified, 0.0);
        assert!(c.is_certified());

        let c = certify_hypotheses(&WarpedModel::flat(2, (0.0, 1.0)), 11, None).unwrap();
        assert_eq!((c.k_certified, c.theta_certified), (0.0, 0.0));

        // θ = 1, n = 2: tangential component -2 violates K = 1.
        let c =
            certify_hypotheses(&sharp(2, 1.0), 11, Some(Target { k: 1.0, theta: 1.0 })).unwrap();
        assert_eq!(c.status, CertificateStatus::Violated);
        assert_eq!(c.violations.len(), 11);
        assert!(c
            .violations
            .iter()
            .all(|v| v.component == Component::RicLTangential && (v.value + 2.0).abs() < 1e-12));
        assert!((c.k_certified - 2.0).abs() < 1e-12);
        assert!((c.theta_certified - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drift_and_weight_examples() {
        for n in 2..5 {
            for theta in [0.0, 1.0, 2.5] {
                let m = sharp(n, theta);
                for t in [-2.0, 0.0, 1.5] {
                    let (b, _) = m.drift_and_weight(t).unwrap();
                    assert!((b + (n as f64 - 1.0 + theta)).abs() < 1e-12);
                }
            }
        }
        let (b, w) = WarpedModel::flat(2, (0.0, 1.0))
            .drift_and_weight(0.3)
            .unwrap();
        assert_eq!((b, w), (0.0, 1.0));
        let (b, w) = sharp(2, 1.0).drift_and_weight(0.0).unwrap();
        assert_eq!(w, 1.0);
        assert_eq!(b, -2.0);
    }

    #[test]
    fn nonpositive_warp_is_rejected() {
        let m = WarpedModel::new(2, "t", "0", 0.0, (-1.0, 1.0), Params::new()).unwrap();
        assert!(matches!(
            curvature_profile(&m, 3),
            Err(Error::NonPositiveWarp { .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(WarpedModel::new(1, "1", "0", 0.0, (0.0, 1.0), Params::new()).is_err());
        assert!(WarpedModel::new(2, "1", "0", 0.0, (1.0, 0.0), Params::new()).is_err());
        assert!(WarpedModel::new(2, "1", "theta*t", 0.0, (0.0, 1.0), Params::new()).is_err());
        assert!(WarpedModel::new(2, "1", "0", -1.0, (0.0, 1.0), Params::new()).is_err());
    }
}
