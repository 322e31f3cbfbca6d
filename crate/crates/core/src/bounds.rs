//! Closed-form first-eigenvalue and log-gradient bounds.
//!
//! Under `Ric(L) ≥ -(n-1)K` and `|∇φ| ≤ θ`, every `m₀ > n` gives the
//! effective m-dimensional bound `K̃ = K + θ²/((m₀-n)(n-1))` and
//!
//! ```text
//! F(m₀) = (m₀-1)(n-1)K + (m₀-1)θ²/(m₀-n),     λ ≤ F(m₀)/4.
//! ```
//!
//! `F` is minimized at `m₀* = n + θ/√K` with `F(m₀*) = ((n-1)√K + θ)²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default for the unspecified constant of the local gradient estimate.
pub const DEFAULT_C_LOCAL: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundQuery {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: f64,
    pub theta: f64,
    #[serde(default)]
    pub m0: Option<f64>,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default, rename = "R")]
    pub r: Option<f64>,
    #[serde(default, rename = "C_local")]
    pub c_local: Option<f64>,
}

impl BoundQuery {
    pub fn new(n: usize, k: f64, theta: f64) -> Self {
        Self {
            n,
            k,
            theta,
            m0: None,
            m: None,
            lambda: None,
            epsilon: None,
            r: None,
            c_local: None,
        }
    }

    pub fn with_m0(mut self, m0: f64) -> Self {
        self.m0 = Some(m0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_base(self.n, self.k, self.theta)?;
        if let Some(m0) = self.m0 {
            check_m0(self.n, m0)?;
        }
        if let Some(m) = self.m {
            if !(m >= self.n as f64) {
                return Err(Error::validation(
                    "m",
                    "Bakry-Emery dimension m must be at least n",
                ));
            }
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) {
                return Err(Error::validation("lambda", "must be non-negative"));
            }
        }
        if let Some(e) = self.epsilon {
            check_epsilon(e)?;
        }
        if let Some(r) = self.r {
            if !(r > 0.0) {
                return Err(Error::validation("R", "must be positive"));
            }
        }
        if let Some(c) = self.c_local {
            if !(c > 0.0) {
                return Err(Error::validation("C_local", "must be positive"));
            }
        }
        Ok(())
    }
}

fn check_base(n: usize, k: f64, theta: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::validation("n", "dimension must be at least 2"));
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::validation("K", "must be finite and non-negative"));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::validation(
            "theta",
            "must be finite and non-negative",
        ));
    }
    Ok(())
}

pub(crate) fn check_m0(n: usize, m0: f64) -> Result<()> {
    if !(m0 > n as f64) || !m0.is_finite() {
        return Err(Error::validation("m0", "m0 must exceed n"));
    }
    Ok(())
}

pub(crate) fn check_epsilon(e: f64) -> Result<()> {
    if !(e > 0.0 && e < 2.0) {
        return Err(Error::validation("epsilon", "must satisfy 0<ε<2"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub cheng: f64,
    pub theorem_a: Option<f64>,
    pub eq_2_3: Option<f64>,
    pub optimized_eigen: f64,
    pub theorem_1_1: Option<f64>,
    pub k_tilde: Option<f64>,
}

/// `F(m₀) = (m₀-1)(n-1)K + (m₀-1)θ²/(m₀-n)`.
pub fn f_of_m0(n: usize, k: f64, theta: f64, m0: f64) -> f64 {
    let nm1 = (n - 1) as f64;
    (m0 - 1.0) * nm1 * k + (m0 - 1.0) * theta * theta / (m0 - n as f64)
}

/// `K̃ = K + θ²/((m₀-n)(n-1))`.
pub fn k_tilde(n: usize, k: f64, theta: f64, m0: f64) -> f64 {
    k + theta * theta / ((m0 - n as f64) * (n - 1) as f64)
}

/// `((n-1)√K + θ)²`.
pub fn optimized_f(n: usize, k: f64, theta: f64) -> f64 {
    let s = (n - 1) as f64 * k.sqrt() + theta;
    s * s
}

pub fn eigenvalue_bounds(q: &BoundQuery) -> Result<BoundSet> {
    q.validate()?;
    let nm1 = (q.n - 1) as f64;
    let optimized_eigen = optimized_f(q.n, q.k, q.theta) / 4.0;
    Ok(BoundSet {
        cheng: nm1 * nm1 / 4.0,
        theorem_a: q.m.map(|m| (m - 1.0) * nm1 / 4.0),
        eq_2_3: q.m0.map(|m0| f_of_m0(q.n, q.k, q.theta, m0) / 4.0),
        optimized_eigen,
        theorem_1_1: (q.k == 1.0).then(|| (nm1 + q.theta).powi(2) / 4.0),
        k_tilde: q.m0.map(|m0| k_tilde(q.n, q.k, q.theta, m0)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum M0Star {
    Finite(f64),
    /// `K = 0, θ > 0`: `F` decreases to its infimum as `m₀ → ∞`.
    Infinite,
}

impl M0Star {
    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M0Optimum {
    pub m0_star: M0Star,
    pub f_star: f64,
    pub eigen_bound: f64,
}

pub fn optimize_m0(n: usize, k: f64, theta: f64) -> Result<M0Optimum> {
    check_base(n, k, theta)?;
    let nm1 = (n - 1) as f64;
    let (m0_star, f_star) = if theta == 0.0 {
        // boundary infimum; F(m₀) = (m₀-1)(n-1)K is increasing
        (M0Star::Finite(n as f64), nm1 * nm1 * k)
    } else if k == 0.0 {
        (M0Star::Infinite, theta * theta)
    } else {
        (
            M0Star::Finite(n as f64 + theta / k.sqrt()),
            optimized_f(n, k, theta),
        )
    };
    Ok(M0Optimum {
        m0_star,
        f_star,
        eigen_bound: f_star / 4.0,
    })
}

/// Right-hand side of the global log-gradient estimate,
/// `Q/2 - λ + √(Q²/4 - Qλ)`, with `Q = F(m₀)` or the optimized
/// `((n-1)√K+θ)²` when `m0` is `None`.
pub fn global_gradient_bound(
    n: usize,
    k: f64,
    theta: f64,
    lambda: f64,
    m0: Option<f64>,
) -> Result<f64> {
    check_base(n, k, theta)?;
    if !(lambda >= 0.0) {
        return Err(Error::validation("lambda", "must be non-negative"));
    }
    let q = match m0 {
        Some(m0) => {
            check_m0(n, m0)?;
            f_of_m0(n, k, theta, m0)
        }
        None => optimized_f(n, k, theta),
    };
    let disc = q * (q / 4.0 - lambda);
    if lambda > q / 4.0 {
        return Err(Error::NegativeDiscriminant {
            value: disc,
            reason: format!(
                "lambda = {lambda} exceeds the eigenvalue bound Q/4 = {}",
                q / 4.0
            ),
        });
    }
    Ok(q / 2.0 - lambda + disc.max(0.0).sqrt())
}

/// Right-hand side of the local gradient estimate on `B(R)` with caller
/// supplied constant `C`. `R = ∞` drops the cutoff term.
pub fn local_gradient_bound(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    let epsilon = q
        .epsilon
        .ok_or_else(|| Error::validation("epsilon", "required for the local estimate"))?;
    let m0 =
        q.m0.ok_or_else(|| Error::validation("m0", "required for the local estimate"))?;
    let c = q
        .c_local
        .ok_or_else(|| Error::validation("C_local", "required for the local estimate"))?;
    let r = q.r.unwrap_or(f64::INFINITY);
    let lambda = q.lambda.unwrap_or(0.0);
    let nm1 = (q.n - 1) as f64;
    let gap = m0 - q.n as f64;
    let curvature = (2.0 * (m0 - 1.0) * nm1 + epsilon) * q.k / (2.0 - epsilon);
    let weight = 2.0 * (m0 - 1.0) * q.theta * q.theta / (gap * (2.0 - epsilon));
    let cutoff = (1.0 + 1.0 / epsilon) / (r * r);
    Ok(curvature + weight + c * (cutoff + lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolitonBound {
    /// `Ric + Hess φ = 0` normalized by `R + |∇φ|² = a²`.
    Steady { a: f64 },
    /// `Ric + Hess φ = ρg`, `ρ > 0`, normalized with `φ ≤ b`.
    Shrinking { rho: f64, b: f64 },
    /// Traced shrinker with `φ > n/2`.
    ShrinkingTrace { rho: f64 },
    /// Expanding soliton with `φ ≥ c`: a bound on `|∇φ|²`, not on `λ₁`.
    Expanding { n: usize, rho: f64, c: f64 },
}

pub fn soliton_bounds(kind: SolitonBound) -> Result<f64> {
    match kind {
        SolitonBound::Steady { a } => {
            if !(a >= 0.0) {
                return Err(Error::validation(
                    "a",
                    "steady normalization constant must be >= 0",
                ));
            }
            Ok(a * a / 4.0)
        }
        SolitonBound::Shrinking { rho, b } => {
            if !(rho > 0.0) {
                return Err(Error::validation("rho", "shrinking solitons need rho > 0"));
            }
            if !(b > 0.0) {
                return Err(Error::validation("b", "must be positive"));
            }
            Ok(rho * b / 2.0)
        }
        SolitonBound::ShrinkingTrace { rho } => {
            if !(rho > 0.0) {
                return Err(Error::validation("rho", "shrinking solitons need rho > 0"));
            }
            Ok(2.0 * rho)
        }
        SolitonBound::Expanding { n, rho, c } => {
            if !(rho < 0.0) {
                return Err(Error::validation("rho", "expanding solitons need rho < 0"));
            }
            if !(c <= n as f64 / 2.0) {
                return Err(Error::validation(
                    "c",
                    "lower bound c must satisfy c <= n/2",
                ));
            }
            Ok(-(n as f64) * rho + 2.0 * c * rho)
        }
    }
}
