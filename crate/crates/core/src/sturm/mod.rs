//! The radial operator `-L f = -(w f')'/w` as a symmetric tridiagonal
//! eigenproblem.
//!
//! Nodes `t_i` are uniform with spacing `h`. With midpoint weights
//! `w_{i±½}` and node masses `m_i` the stiffness form is
//!
//! ```text
//! S_ii = (w_{i-½} + w_{i+½}) / h²,   S_{i,i+1} = -w_{i+½} / h²
//! ```
//!
//! and `A = M^{-½} S M^{-½}` is symmetric. A Neumann end uses the half mass
//! `m_0 = w_0/2`, which is the reflected ghost-point row; a Dirichlet end is
//! eliminated. All weights live in log space with the maximum shifted to 0.

mod sweep;
pub mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::WarpedModel;

pub use sweep::{domain_sweep, ConvergenceRow, ConvergenceTable, SweepStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscretizedOperator {
    /// All nodes including eliminated Dirichlet endpoints.
    pub grid: Vec<f64>,
    pub h: f64,
    /// `ln w(t_i)` shifted so the largest sampled log-weight is 0.
    pub log_weight: Vec<f64>,
    /// Index range of `grid` carrying unknowns.
    pub first: usize,
    pub last: usize,
    /// `ln m_i` for each unknown.
    pub log_mass: Vec<f64>,
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub bc_left: BoundaryCondition,
    pub bc_right: BoundaryCondition,
}

impl DiscretizedOperator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Nodes carrying unknowns.
    pub fn unknown_grid(&self) -> &[f64] {
        &self.grid[self.first..=self.last]
    }

    pub fn weight(&self) -> Vec<f64> {
        self.log_weight.iter().map(|l| l.exp()).collect()
    }

    pub fn norm(&self) -> f64 {
        tridiag::norm_inf(&self.diag, &self.offdiag)
    }

    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        tridiag::rayleigh_quotient(&self.diag, &self.offdiag, v)
    }

    /// Symmetric-form vector `v = √m f` (scaled to max 1) from an
    /// eigenfunction given by its log-magnitude.
    pub fn symmetric_vector(&self, log_abs_f: &[f64]) -> Vec<f64> {
        let lv: Vec<f64> = log_abs_f
            .iter()
            .zip(&self.log_mass)
            .map(|(lf, lm)| lf + 0.5 * lm)
            .collect();
        let top = lv.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        lv.iter().map(|l| (l - top).exp()).collect()
    }
}

pub fn discretize(
    model: &WarpedModel,
    interval: (f64, f64),
    h: f64,
    bc_left: BoundaryCondition,
    bc_right: BoundaryCondition,
) -> Result<DiscretizedOperator> {
    let (lo, hi) = interval;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::validation("h", "mesh width must be positive"));
    }
    if !(lo < hi) {
        return Err(Error::validation("interval", "must satisfy lo < hi"));
    }
    let (dlo, dhi) = model.domain;
    let slack = 1e-12 * (1.0 + dlo.abs().max(dhi.abs()));
    if lo < dlo - slack || hi > dhi + slack {
        return Err(Error::validation(
            "interval",
            format!("[{lo}, {hi}] is not inside the model domain [{dlo}, {dhi}]"),
        ));
    }
    let cells = ((hi - lo) / h).round();
    if cells < 2.0 {
        return Err(Error::validation(
            "h",
            "mesh width is larger than the interval",
        ));
    }
    let cells = cells as usize;
    let h = (hi - lo) / cells as f64;
    let grid: Vec<f64> = (0..=cells)
        .map(|i| if i == cells { hi } else { lo + i as f64 * h })
        .collect();

    let mut lw_node = Vec::with_capacity(cells + 1);
    for &t in &grid {
        lw_node.push(finite_log_weight(model, t)?);
    }
    let mut lw_mid = Vec::with_capacity(cells);
    for i in 0..cells {
        lw_mid.push(finite_log_weight(model, lo + (i as f64 + 0.5) * h)?);
    }
    let top = lw_node
        .iter()
        .chain(&lw_mid)
        .fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    lw_node.iter_mut().for_each(|x| *x -= top);
    lw_mid.iter_mut().for_each(|x| *x -= top);

    let first = usize::from(bc_left == BoundaryCondition::Dirichlet);
    let last = if bc_right == BoundaryCondition::Dirichlet {
        cells - 1
    } else {
        cells
    };
    let half = 0.5f64.ln();
    let log_mass: Vec<f64> = (first..=last)
        .map(|i| {
            let boundary = (i == 0 && bc_left == BoundaryCondition::Neumann)
                || (i == cells && bc_right == BoundaryCondition::Neumann);
            lw_node[i] + if boundary { half } else { 0.0 }
        })
        .collect();

    let h2 = h * h;
    let diag: Vec<f64> = (first..=last)
        .zip(&log_mass)
        .map(|(i, &lm)| {
            let left = if i > 0 {
                (lw_mid[i - 1] - lm).exp()
            } else {
                0.0
            };
            let right = if i < cells {
                (lw_mid[i] - lm).exp()
            } else {
                0.0
            };
            (left + right) / h2
        })
        .collect();
    let offdiag: Vec<f64> = (first..last)
        .map(|i| {
            let k = i - first;
            -(lw_mid[i] - 0.5 * (log_mass[k] + log_mass[k + 1])).exp() / h2
        })
        .collect();
    if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "weight ratio overflow while assembling the operator".into(),
        ));
    }

    Ok(DiscretizedOperator {
        grid,
        h,
        log_weight: lw_node,
        first,
        last,
        log_mass,
        diag,
        offdiag,
        bc_left,
        bc_right,
    })
}

fn finite_log_weight(model: &WarpedModel, t: f64) -> Result<f64> {
    let lw = model.log_weight(t)?;
    if !lw.is_finite() {
        return Err(Error::Numerical(format!(
            "log-weight is not finite at t = {t}"
        )));
    }
    Ok(lw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// 0-based position in the spectrum.
    pub index: usize,
    pub lambda: f64,
    /// Samples of `f` on the unknown nodes, scaled so the max is 1.
    pub eigenfunction: Vec<f64>,
    /// `ln |f|` on the same nodes (max 0); finite even where `f` underflows.
    pub log_abs_eigenfunction: Vec<f64>,
    /// No sign change across the nodes.
    pub one_signed: bool,
    pub grid: Vec<f64>,
    pub bc: (BoundaryCondition, BoundaryCondition),
    pub residual_sup: f64,
    pub h: f64,
}

impl EigenResult {
    /// `h = ln f` at unknown nodes (valid for one-signed vectors).
    pub fn log_eigenfunction(&self) -> &[f64] {
        &self.log_abs_eigenfunction
    }
}

/// The smallest `count` eigenpairs of the discretized operator.
pub fn smallest_eigenpair(op: &DiscretizedOperator, count: usize) -> Result<Vec<EigenResult>> {
    let n = op.dim();
    if count == 0 || count > n {
        return Err(Error::validation(
            "count",
            format!("must be between 1 and the number of unknowns ({n})"),
        ));
    }
    let (d, e) = (&op.diag, &op.offdiag);
    let (glo, ghi) = tridiag::gershgorin(d, e);
    let lo = glo.min(0.0);
    let norm = op.norm();
    let tol = 1e3 * f64::EPSILON * norm;

    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let lam = tridiag::bisect_eigenvalue(d, e, k, lo, ghi);
        let tol_k = tol.max(10.0 * tridiag::BISECTION_RTOL * lam.abs().max(1.0));
        let mut logv = tridiag::twisted_vector(d, e, lam);
        let mut v = logv.to_linear();
        let mut res = tridiag::residual_sup(d, e, lam, &v);
        let overlap = accepted.iter().any(|u| {
            let uv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            let uu: f64 = u.iter().map(|x| x * x).sum();
            let vv: f64 = v.iter().map(|x| x * x).sum();
            uv.abs() > 1e-8 * (uu * vv).sqrt()
        });
        if res > tol_k || overlap {
            let (refined, r) = tridiag::inverse_iteration(d, e, lam, &v, &accepted, tol_k)?;
            logv = tridiag::LogVector::from_linear(&refined);
            logv.normalize_sign();
            v = logv.to_linear();
            res = r;
        }

        // f = v / √m
        let lf: Vec<f64> = logv
            .log_abs
            .iter()
            .zip(&op.log_mass)
            .map(|(lv, lm)| lv - 0.5 * lm)
            .collect();
        let top = lf.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let log_abs_eigenfunction: Vec<f64> = lf.iter().map(|x| x - top).collect();
        let eigenfunction = log_abs_eigenfunction
            .iter()
            .zip(&logv.positive)
            .map(|(l, &p)| if p { l.exp() } else { -l.exp() })
            .collect();
        out.push(EigenResult {
            index: k,
            // the operator is positive semidefinite; negative values are rounding
            lambda: lam.max(0.0),
            eigenfunction,
            log_abs_eigenfunction,
            one_signed: logv.one_signed(),
            grid: op.unknown_grid().to_vec(),
            bc: (op.bc_left, op.bc_right),
            residual_sup: res,
            h: op.h,
        });
        accepted.push(v);
    }
    Ok(out)
}

/// How derivatives of a closed-form eigenfunction candidate are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DerivativeMode {
    Exact,
    FiniteDifference { h: f64 },
}

/// `max |f'' + b f' + λ f| / max |f|` over `grid`.
pub fn residual_of_closed_form(
    model: &WarpedModel,
    f_expr: &Expr,
    lambda: f64,
    grid: &[f64],
    mode: DerivativeMode,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::validation("grid", "must not be empty"));
    }
    let params = &model.params;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for &t in grid {
        let (b, _) = model.drift_and_weight(t)?;
        let (f, d1, d2) = match mode {
            DerivativeMode::Exact => {
                let j = f_expr.eval_d2(t, params)?;
                (j.value, j.d1, j.d2)
            }
            DerivativeMode::FiniteDifference { h } => {
                if !(h > 0.0) {
                    return Err(Error::validation(
                        "h",
                        "finite-difference step must be positive",
                    ));
                }
                let fm = f_expr.eval(t - h, params)?;
                let f0 = f_expr.eval(t, params)?;
                let fp = f_expr.eval(t + h, params)?;
                (f0, (fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
            }
        };
        if !(f > 0.0) {
            return Err(Error::validation(
                "f_expr",
                format!("candidate must be positive on the grid (f({t}) = {f})"),
            ));
        }
        num = num.max((d2 + b * d1 + lambda * f).abs());
        den = den.max(f.abs());
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use std::f64::consts::PI;

    use BoundaryCondition::{Dirichlet, Neumann};

    /// Cyclic Jacobi eigenvalues of a dense symmetric matrix.
    fn dense_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-22 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    /// Dense generalized problem `S f = λ M f` assembled directly from
    /// weights, independent of the log-space symmetrization.
    fn dense_unsymmetrized(
        model: &WarpedModel,
        lo: f64,
        hi: f64,
        cells: usize,
        right: BoundaryCondition,
    ) -> Vec<f64> {
        let h = (hi - lo) / cells as f64;
        let w = |t: f64| model.log_weight(t).unwrap().exp();
        // Dirichlet at lo, `right` at hi
        let last = if right == Dirichlet { cells - 1 } else { cells };
        let idx: Vec<usize> = (1..=last).collect();
        let n = idx.len();
        let mut a = vec![vec![0.0; n]; n];
        let mass: Vec<f64> = idx
            .iter()
            .map(|&i| {
                let m = w(lo + i as f64 * h);
                if i == cells {
                    m / 2.0
                } else {
                    m
                }
            })
            .collect();
        for (r, &i) in idx.iter().enumerate() {
            let wl = w(lo + (i as f64 - 0.5) * h);
            let wr = if i < cells {
                w(lo + (i as f64 + 0.5) * h)
            } else {
                0.0
            };
            a[r][r] = (wl + wr) / (h * h) / mass[r];
            if r + 1 < n {
                let s = -wr / (h * h) / (mass[r] * mass[r + 1]).sqrt();
                a[r][r + 1] = s;
                a[r + 1][r] = s;
            }
        }
        dense_eigenvalues(a)
    }

    fn flat_pi() -> WarpedModel {
        WarpedModel::flat(2, (0.0, PI))
    }

    fn gaussian(lo: f64, hi: f64) -> WarpedModel {
        WarpedModel::new(2, "1", "t^2/2", 0.0, (lo, hi), Params::new()).unwrap()
    }

    #[test]
    fn string_ground_state() {
        let op = discretize(&flat_pi(), (0.0, PI), PI / 1000.0, Dirichlet, Dirichlet).unwrap();
        let r = &smallest_eigenpair(&op, 1).unwrap()[0];
        assert!((r.lambda - 1.0).abs() < 2e-6, "{}", r.lambda);
        assert!(r.one_signed);
        assert!(r.eigenfunction.iter().all(|&f| f > 0.0));
        let top = r.eigenfunction.iter().cloned().fold(0.0, f64::max);
        assert_eq!(top, 1.0);
    }

    #[test]
    fn string_two_modes() {
        let op = discretize(&flat_pi(), (0.0, PI), PI / 2000.0, Dirichlet, Dirichlet).unwrap();
        let r = smallest_eigenpair(&op, 2).unwrap();
        assert!((r[0].lambda - 1.0).abs() < 1e-5);
        assert!((r[1].lambda - 4.0).abs() < 1e-5);
        let changes = r[1]
            .eigenfunction
            .windows(2)
            .filter(|w| w[0] * w[1] < 0.0)
            .count();
        assert_eq!(changes, 1);
    }

    #[test]
    fn symmetric_by_construction() {
        let m =
            WarpedModel::new(3, "cosh(t)", "0.3*sin(t)", 0.0, (-4.0, 4.0), Params::new()).unwrap();
        let op = discretize(&m, (-4.0, 4.0), 0.05, Neumann, Dirichlet).unwrap();
        assert_eq!(op.offdiag.len() + 1, op.diag.len());
        assert!(op.log_weight.iter().all(|l| *l <= 0.0));
        assert_eq!(
            op.log_weight
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max),
            0.0
        );
        assert!(op.weight().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn sharp_model_operator_has_constant_drift() {
        // a = e^{-t}, φ = θt: f'' - (n-1+θ) f'; ratio of consecutive weights is e^{-(n-1+θ)h}
        let m = WarpedModel::sharp(3, 0.5, (-10.0, 10.0));
        let op = discretize(&m, (-2.0, 2.0), 0.1, Dirichlet, Dirichlet).unwrap();
        for w in op.log_weight.windows(2) {
            assert!((w[1] - w[0] + 2.5 * 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn ou_odd_sector_against_dense_oracle() {
        let m = gaussian(0.0, 12.0);
        let cells = 60;
        let op = discretize(&m, (0.0, 12.0), 12.0 / cells as f64, Dirichlet, Neumann).unwrap();
        let tri = smallest_eigenpair(&op, 3).unwrap();
        let dense = dense_unsymmetrized(&m, 0.0, 12.0, cells, Neumann);
        for k in 0..3 {
            assert!(
                (tri[k].lambda - dense[k]).abs() < 1e-9 * dense[k].max(1.0),
                "k={k}"
            );
        }

        let op = discretize(&m, (0.0, 12.0), 0.005, Dirichlet, Neumann).unwrap();
        let r = &smallest_eigenpair(&op, 1).unwrap()[0];
        assert!((r.lambda - 1.0).abs() < 1e-4, "{}", r.lambda);
        // eigenfunction ∝ t away from the truncation end
        let i1 = r.grid.iter().position(|&t| (t - 1.0).abs() < 1e-9).unwrap();
        let slope = r.eigenfunction[i1] / r.grid[i1];
        for (t, f) in r.grid.iter().zip(&r.eigenfunction).step_by(97) {
            if *t <= 6.0 {
                assert!((f / slope - t).abs() < 1e-3 * t, "t={t}");
            }
        }
    }

    #[test]
    fn ou_neumann_pair() {
        let m = gaussian(-12.0, 12.0);
        let op = discretize(&m, (-12.0, 12.0), 0.01, Neumann, Neumann).unwrap();
        let r = smallest_eigenpair(&op, 2).unwrap();
        assert!(r[0].lambda.abs() < 1e-4);
        assert!((r[1].lambda - 1.0).abs() < 1e-4);
        assert!(r[0].one_signed);
        assert!(!r[1].one_signed);
    }

    #[test]
    fn sharp_model_truncated_closed_form() {
        let m = WarpedModel::sharp(2, 1.0, (-200.0, 200.0));
        let op = discretize(&m, (-30.0, 30.0), 0.01, Dirichlet, Dirichlet).unwrap();
        let r = &smallest_eigenpair(&op, 1).unwrap()[0];
        let exact = 1.0 + PI * PI / 3600.0;
        assert!((r.lambda - exact).abs() < 5e-4);
        assert!(r.one_signed);
        assert!(r.residual_sup < 1e-6);
        let v = op.symmetric_vector(&r.log_abs_eigenfunction);
        let rq = op.rayleigh_quotient(&v);
        assert!((rq - r.lambda).abs() < 1e-10 * r.lambda);
    }

    #[test]
    fn gaussian_weight_far_out_does_not_underflow() {
        let m = gaussian(-40.0, 40.0);
        let op = discretize(&m, (-40.0, 40.0), 0.05, Neumann, Neumann).unwrap();
        assert!(op.log_weight.iter().all(|l| l.is_finite()));
        let r = smallest_eigenpair(&op, 2).unwrap();
        assert!((r[1].lambda - 1.0).abs() < 1e-2);
    }

    #[test]
    fn discretize_errors() {
        let m = flat_pi();
        assert!(discretize(&m, (0.0, PI), 0.0, Dirichlet, Dirichlet).is_err());
        assert!(discretize(&m, (0.0, PI), 4.0, Dirichlet, Dirichlet).is_err());
        assert!(discretize(&m, (-1.0, PI), 0.1, Dirichlet, Dirichlet).is_err());
        let bad = WarpedModel::new(2, "t", "0", 0.0, (-1.0, 1.0), Params::new()).unwrap();
        assert!(matches!(
            discretize(&bad, (-1.0, 1.0), 0.1, Dirichlet, Dirichlet),
            Err(Error::NonPositiveWarp { .. })
        ));
        let op = discretize(&m, (0.0, PI), 0.5, Dirichlet, Dirichlet).unwrap();
        assert!(smallest_eigenpair(&op, 0).is_err());
        assert!(smallest_eigenpair(&op, 100).is_err());
    }

    #[test]
    fn closed_form_residuals() {
        let m = WarpedModel::sharp(2, 1.0, (-10.0, 10.0));
        let grid: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
        let f = Expr::parse("exp((1+theta)*t/2)").unwrap();
        let r = residual_of_closed_form(&m, &f, 1.0, &grid, DerivativeMode::Exact).unwrap();
        assert!(r <= 1e-12, "{r}");

        let flat = WarpedModel::flat(2, (0.0, PI));
        let sin = Expr::parse("sin(t)").unwrap();
        let grid: Vec<f64> = (1..100).map(|i| PI * i as f64 / 100.0).collect();
        let r = residual_of_closed_form(&flat, &sin, 1.0, &grid, DerivativeMode::Exact).unwrap();
        assert!(r <= 1e-12);

        let r1 = residual_of_closed_form(
            &flat,
            &sin,
            1.0,
            &grid,
            DerivativeMode::FiniteDifference { h: 0.02 },
        )
        .unwrap();
        let r2 = residual_of_closed_form(
            &flat,
            &sin,
            1.0,
            &grid,
            DerivativeMode::FiniteDifference { h: 0.01 },
        )
        .unwrap();
        assert!((r1 / r2 - 4.0).abs() < 0.8, "{}", r1 / r2);

        let neg = Expr::parse("cos(t)").unwrap();
        assert!(residual_of_closed_form(&flat, &neg, 1.0, &grid, DerivativeMode::Exact).is_err());
    }
}
