//! Cosine-squared cutoff `χ(ρ)`: 1 on `[0, R]`, `cos²(π(ρ-R)/(2R))` on
//! `(R, 2R)`, 0 beyond.
//!
//! On the transition band, with `x = π(ρ-R)/(2R)`,
//! `-χ'/√χ = (π/R) sin x ≤ π/R` and `χ'' = -(π²/(2R²)) cos 2x ≥ -π²/(2R²)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_CUTOFF_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    #[serde(rename = "R")]
    pub r: f64,
    pub grid: Vec<f64>,
    pub chi: Vec<f64>,
    pub chi_d1: Vec<f64>,
    pub chi_d2: Vec<f64>,
    /// Smallest `C` with `-C√χ ≤ χ' ≤ 0` and `χ'' ≥ -C` on the grid.
    pub certified_c: f64,
    /// `max(π/R, π²/(2R²))`, the supremum over the continuum.
    pub analytic_c: f64,
}

impl CutoffProfile {
    /// `(χ, χ', χ'')` at distance `rho ≥ 0`. At the glue point `ρ = R`,
    /// where `χ''` jumps, the smaller one-sided limit is returned.
    pub fn evaluate(r: f64, rho: f64) -> (f64, f64, f64) {
        let k = PI / (2.0 * r);
        if rho < r {
            (1.0, 0.0, 0.0)
        } else if rho == r {
            (1.0, 0.0, -2.0 * k * k)
        } else if rho >= 2.0 * r {
            (0.0, 0.0, 0.0)
        } else {
            let x = PI * (rho - r) / (2.0 * r);
            let c = x.cos();
            (c * c, -k * (2.0 * x).sin(), -2.0 * k * k * (2.0 * x).cos())
        }
    }

    /// Smallest slack over the grid of both derivative constraints at `c`.
    pub fn min_slack(&self, c: f64) -> f64 {
        let mut slack = f64::INFINITY;
        for i in 0..self.grid.len() {
            slack = slack
                .min(-self.chi_d1[i])
                .min(self.chi_d1[i] + c * self.chi[i].sqrt())
                .min(self.chi_d2[i] + c);
        }
        slack
    }
}

pub fn build_cutoff(r: f64, samples: usize) -> Result<CutoffProfile> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::validation("R", "must be positive"));
    }
    if samples < MIN_CUTOFF_SAMPLES {
        return Err(Error::validation("samples", "need at least 100 samples"));
    }
    // both halves end exactly on a glue point
    let inner = samples / 2;
    let outer = samples - inner;
    let grid: Vec<f64> = (0..inner)
        .map(|i| {
            if i + 1 == inner {
                r
            } else {
                r * i as f64 / (inner - 1) as f64
            }
        })
        .chain((1..=outer).map(|i| {
            if i == outer {
                2.0 * r
            } else {
                r + r * i as f64 / outer as f64
            }
        }))
        .collect();
    let mut chi = Vec::with_capacity(samples);
    let mut chi_d1 = Vec::with_capacity(samples);
    let mut chi_d2 = Vec::with_capacity(samples);
    let mut certified_c = 0.0f64;
    for &rho in &grid {
        let (c0, c1, c2) = CutoffProfile::evaluate(r, rho);
        if c0 > 0.0 {
            certified_c = certified_c.max(-c1 / c0.sqrt());
        }
        certified_c = certified_c.max(-c2);
        chi.push(c0);
        chi_d1.push(c1);
        chi_d2.push(c2);
    }
    Ok(CutoffProfile {
        r,
        grid,
        chi,
        chi_d1,
        chi_d2,
        certified_c,
        analytic_c: (PI / r).max(PI * PI / (2.0 * r * r)),
    })
}
