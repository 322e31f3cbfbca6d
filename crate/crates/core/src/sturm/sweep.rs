//! Domain exhaustion with one Richardson level in the mesh width.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{discretize, smallest_eigenpair, BoundaryCondition};
use crate::error::{Error, Result};
use crate::model::WarpedModel;

/// Which truncated problem approximates the bottom of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepStrategy {
    /// Ground state on `[c-T, c+T]` with Dirichlet ends.
    Dirichlet,
    /// Odd sector on `[c, c+T]`: Dirichlet at the center, `outer` at `c+T`.
    OddSector { outer: BoundaryCondition },
    /// Second eigenvalue on `[c-T, c+T]` with Neumann ends.
    NeumannSecond,
}

impl SweepStrategy {
    fn interval(self, center: f64, half_width: f64) -> (f64, f64) {
        match self {
            Self::OddSector { .. } => (center, center + half_width),
            _ => (center - half_width, center + half_width),
        }
    }

    fn bcs(self) -> (BoundaryCondition, BoundaryCondition) {
        use BoundaryCondition::*;
        match self {
            Self::Dirichlet => (Dirichlet, Dirichlet),
            Self::OddSector { outer } => (Dirichlet, outer),
            Self::NeumannSecond => (Neumann, Neumann),
        }
    }

    fn index(self) -> usize {
        match self {
            Self::NeumannSecond => 1,
            _ => 0,
        }
    }

    pub fn solve(self, model: &WarpedModel, center: f64, half_width: f64, h: f64) -> Result<f64> {
        let (l, r) = self.bcs();
        let op = discretize(model, self.interval(center, half_width), h, l, r)?;
        let k = self.index();
        Ok(smallest_eigenpair(&op, k + 1)?[k].lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub h: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub strategy: SweepStrategy,
    pub center: f64,
    pub rows: Vec<ConvergenceRow>,
    /// `λ(T_max, h/2)`.
    pub lambda_half_mesh: f64,
    /// `(4 λ(T_max, h/2) - λ(T_max, h)) / 3`.
    pub extrapolated: f64,
    /// Least-squares slope of `ln(λ(T) - λ∞)` against `ln T`.
    pub fitted_rate: Option<f64>,
}

pub fn domain_sweep(
    model: &WarpedModel,
    strategy: SweepStrategy,
    center: f64,
    t_list: &[f64],
    h: f64,
    lambda_inf: Option<f64>,
) -> Result<ConvergenceTable> {
    if t_list.is_empty() {
        return Err(Error::validation("T_list", "must not be empty"));
    }
    if t_list.windows(2).any(|w| !(w[0] < w[1])) || !(t_list[0] > 0.0) {
        return Err(Error::validation(
            "T_list",
            "must be positive and strictly increasing",
        ));
    }
    let t_max = *t_list.last().expect("non-empty");
    let mut jobs: Vec<(f64, f64)> = t_list.iter().map(|&t| (t, h)).collect();
    jobs.push((t_max, h / 2.0));
    let lambdas = jobs
        .par_iter()
        .map(|&(t, hh)| strategy.solve(model, center, t, hh))
        .collect::<Result<Vec<f64>>>()?;

    let rows: Vec<ConvergenceRow> = t_list
        .iter()
        .zip(&lambdas)
        .map(|(&t, &lambda)| ConvergenceRow { t, h, lambda })
        .collect();
    let coarse = rows.last().expect("non-empty").lambda;
    let fine = *lambdas.last().expect("non-empty");
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let fitted_rate = lambda_inf.and_then(|inf| fit_rate(&rows, inf));
    Ok(ConvergenceTable {
        strategy,
        center,
        rows,
        lambda_half_mesh: fine,
        extrapolated,
        fitted_rate,
    })
}

fn fit_rate(rows: &[ConvergenceRow], lambda_inf: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.lambda > lambda_inf)
        .map(|r| (r.t.ln(), (r.lambda - lambda_inf).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
