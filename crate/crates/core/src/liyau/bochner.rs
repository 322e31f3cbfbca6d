//! Radial Bochner formula and the Hessian refinement.
//!
//! For radial `h` with `u = h'²`, the weighted Bochner formula reads
//!
//! ```text
//! u'' + b u' = 2[h''² + (n-1)(a'/a)² h'²] + 2 h'(Lh)' + 2 Ric(L)(∂t,∂t) h'²
//! ```
//!
//! with `(Lh)' = h''' + b' h' + b h''`. For `h = ln f`, `Lf = -λf`, the
//! last-but-one term becomes `-2 h' u'`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::WarpedModel;
use crate::sturm::DerivativeMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BochnerForm {
    /// Valid for every smooth radial `h`.
    General,
    /// `h = ln f` with `Lh = -h'² - λ`.
    EigenLog { lambda: f64 },
}

/// Parameters of the Hessian refinement and of the key inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub m0: f64,
    pub theta: f64,
    /// Lower Ricci bound `-(n-1)K`, used by the key inequality only.
    #[serde(rename = "K")]
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BochnerOptions {
    pub form: BochnerForm,
    pub refinement: Option<Refinement>,
    /// Residuals above this fail with a diagnostic.
    pub consistency_threshold: Option<f64>,
}

impl BochnerOptions {
    pub fn general() -> Self {
        Self {
            form: BochnerForm::General,
            refinement: None,
            consistency_threshold: None,
        }
    }

    pub fn eigen_log(lambda: f64) -> Self {
        Self {
            form: BochnerForm::EigenLog { lambda },
            ..Self::general()
        }
    }

    pub fn with_refinement(mut self, r: Refinement) -> Self {
        self.refinement = Some(r);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BochnerReport {
    pub sup_residual: f64,
    /// `sup |u'' + b u'|`, for scale.
    pub sup_lhs: f64,
    pub location: f64,
    pub samples: usize,
    /// `min(|Hess h|² - RHS)` of the Hessian refinement with `2h''`.
    pub hessian_margin: Option<f64>,
    /// Same with `2h''` replaced by `u' h'/u`.
    pub hessian_margin_substituted: Option<f64>,
    /// `min(Lu - RHS)` of the key inequality (eigen-log form only).
    pub key_inequality_margin: Option<f64>,
}

/// `h` and derivatives at one point, with `u = h'²`.
#[derive(Debug, Clone, Copy)]
struct Point {
    t: f64,
    h1: f64,
    h2: f64,
    h3: f64,
    u1: f64,
    u2: f64,
}

/// Central stencils from `h(t + kδ)`, `k = -2..=2`.
fn point_from_stencil(t: f64, v: [f64; 5], delta: f64) -> Point {
    let [hm2, hm1, h0, hp1, hp2] = v;
    let h1 = (hp1 - hm1) / (2.0 * delta);
    let h2 = (hp1 - 2.0 * h0 + hm1) / (delta * delta);
    let h3 = (hp2 - 2.0 * hp1 + 2.0 * hm1 - hm2) / (2.0 * delta.powi(3));
    let gp = (hp2 - h0) / (2.0 * delta);
    let gm = (h0 - hm2) / (2.0 * delta);
    let (up, u0, um) = (gp * gp, h1 * h1, gm * gm);
    Point {
        t,
        h1,
        h2,
        h3,
        u1: (up - um) / (2.0 * delta),
        u2: (up - 2.0 * u0 + um) / (delta * delta),
    }
}

pub fn bochner_identity_check(
    model: &WarpedModel,
    h: &Expr,
    grid: &[f64],
    mode: DerivativeMode,
    opts: &BochnerOptions,
) -> Result<BochnerReport> {
    let params = &model.params;
    let mut points = Vec::with_capacity(grid.len());
    for &t in grid {
        let p = match mode {
            DerivativeMode::Exact => {
                let j = h.eval_taylor::<4>(t, params)?;
                let (h1, h2, h3) = (j.derivative(1), j.derivative(2), j.derivative(3));
                Point {
                    t,
                    h1,
                    h2,
                    h3,
                    u1: 2.0 * h1 * h2,
                    u2: 2.0 * h2 * h2 + 2.0 * h1 * h3,
                }
            }
            DerivativeMode::FiniteDifference { h: delta } => {
                if !(delta > 0.0) {
                    return Err(Error::validation(
                        "h",
                        "finite-difference step must be positive",
                    ));
                }
                let mut v = [0.0; 5];
                for (k, slot) in v.iter_mut().enumerate() {
                    *slot = h.eval(t + (k as f64 - 2.0) * delta, params)?;
                }
                point_from_stencil(t, v, delta)
            }
        };
        points.push(p);
    }
    evaluate(model, &points, opts)
}

/// Same check on samples of `h` over a uniform grid; derivatives by central
/// differences, so the two outermost samples at each end are skipped.
pub fn bochner_identity_check_samples(
    model: &WarpedModel,
    grid: &[f64],
    values: &[f64],
    opts: &BochnerOptions,
) -> Result<BochnerReport> {
    if grid.len() != values.len() {
        return Err(Error::validation("values", "length must match the grid"));
    }
    if grid.len() < 5 {
        return Err(Error::validation("grid", "need at least 5 samples"));
    }
    let delta = grid[1] - grid[0];
    if !(delta > 0.0)
        || grid
            .windows(2)
            .any(|w| ((w[1] - w[0]) - delta).abs() > 1e-9 * delta)
    {
        return Err(Error::validation("grid", "must be uniform and increasing"));
    }
    let points: Vec<Point> = (2..grid.len() - 2)
        .map(|i| {
            let v = [
                values[i - 2],
                values[i - 1],
                values[i],
                values[i + 1],
                values[i + 2],
            ];
            point_from_stencil(grid[i], v, delta)
        })
        .collect();
    evaluate(model, &points, opts)
}

fn evaluate(model: &WarpedModel, points: &[Point], opts: &BochnerOptions) -> Result<BochnerReport> {
    if points.is_empty() {
        return Err(Error::validation("grid", "must not be empty"));
    }
    if let Some(r) = opts.refinement {
        if !(r.m0 > model.n as f64) {
            return Err(Error::validation("m0", "m0 must exceed n"));
        }
    }
    let nm1 = model.dim_factor();
    let mut sup_residual = 0.0f64;
    let mut sup_lhs = 0.0f64;
    let mut location = points[0].t;
    let mut hess_margin: Option<f64> = None;
    let mut hess6_margin: Option<f64> = None;
    let mut key_margin: Option<f64> = None;
    let lower = |slot: &mut Option<f64>, v: f64| {
        *slot = Some(slot.map_or(v, |m: f64| m.min(v)));
    };

    for p in points {
        let g = model.local(p.t)?;
        let r = g.log_warp_d1();
        let (b, db) = model.drift_d1(p.t)?;
        let ric = model.ric_l_radial(&g);
        let u = p.h1 * p.h1;
        let hess_sq = p.h2 * p.h2 + nm1 * r * r * u;

        let lhs = p.u2 + b * p.u1;
        let drift_term = match opts.form {
            BochnerForm::General => 2.0 * p.h1 * (p.h3 + db * p.h1 + b * p.h2),
            BochnerForm::EigenLog { .. } => -2.0 * p.h1 * p.u1,
        };
        let rhs = 2.0 * hess_sq + drift_term + 2.0 * ric * u;
        let res = (lhs - rhs).abs();
        if !(res <= sup_residual) {
            sup_residual = res;
            location = p.t;
        }
        sup_lhs = sup_lhs.max(lhs.abs());

        if let Some(rf) = opts.refinement {
            let m0 = rf.m0;
            let gap = m0 - model.n as f64;
            // s = -Lh; the eigen-log form substitutes h'² + λ
            let s = match opts.form {
                BochnerForm::General => -(p.h2 + b * p.h1),
                BochnerForm::EigenLog { lambda } => u + lambda,
            };
            let common = s * s / (m0 - 1.0) - rf.theta * rf.theta * u / gap;
            let rhs4 = m0 / (m0 - 1.0) * p.h2 * p.h2 + common + 2.0 * p.h2 * s / (m0 - 1.0);
            lower(&mut hess_margin, hess_sq - rhs4);
            if u > 0.0 {
                let two_h11 = p.u1 * p.h1 / u;
                let rhs6 = m0 / (m0 - 1.0) * p.h2 * p.h2 + common + s * two_h11 / (m0 - 1.0);
                lower(&mut hess6_margin, hess_sq - rhs6);
            }
            if let BochnerForm::EigenLog { lambda } = opts.form {
                if u > 0.0 {
                    let rhs_key = m0 / (2.0 * (m0 - 1.0)) * p.u1 * p.u1 / u
                        + 2.0 * (u + lambda).powi(2) / (m0 - 1.0)
                        - 2.0 * (nm1 * rf.k + rf.theta * rf.theta / gap) * u
                        + (2.0 * lambda / ((m0 - 1.0) * u) - (2.0 * m0 - 4.0) / (m0 - 1.0))
                            * p.u1
                            * p.h1;
                    lower(&mut key_margin, lhs - rhs_key);
                }
            }
        }
    }

    if let Some(th) = opts.consistency_threshold {
        if sup_residual > th {
            return Err(Error::Numerical(format!(
                "Bochner residual {sup_residual:e} exceeds {th:e} at t = {location}; grid too coarse"
            )));
        }
    }
    Ok(BochnerReport {
        sup_residual,
        sup_lhs,
        location,
        samples: points.len(),
        hessian_margin: hess_margin,
        hessian_margin_substituted: hess6_margin,
        key_inequality_margin: key_margin,
    })
}
