//! Step-size policies and the sufficient-decrease test.

use serde::Serialize;

use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum StepSizePolicy {
    /// `ρₖ = ρ`.
    Constant { rho: f64 },
    /// `ρₖ = (f̂ₖ(xₖ) − ε₂ − f*) / D²`; `D` defaults to the validated diameter.
    Optimal {
        f_star: f64,
        diameter: Option<f64>,
        eps2: f64,
    },
    /// `ρₖ = C_P (f̂ₖ(xₖ) − f_{k−1}(xₖ))` when positive, else `C_P`.
    Practical { cp: f64 },
    /// `ρ = β μ² v / (2 ε̄)`.
    SharpConstant { mu: f64, v: f64, eps_bar: f64 },
    /// `ρₖ = μ² / (f̂ₖ(xₖ) − ε₂ − f*)`.
    SharpOptimal { mu: f64, f_star: f64, eps2: f64 },
}

impl StepSizePolicy {
    pub fn check(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        match *self {
            Self::Constant { rho } if !(rho > 0.0 && rho.is_finite()) => bad("constant step size must be positive"),
            Self::Practical { cp } if !(cp > 0.0 && cp.is_finite()) => bad("practical constant C_P must be positive"),
            Self::SharpConstant { mu, v, eps_bar } if !(mu > 0.0 && v > 0.0 && v < 1.0 && eps_bar > 0.0) => {
                bad("sharp constant policy needs mu > 0, 0 < v < 1 and eps_bar > 0")
            }
            Self::Optimal { f_star, eps2, .. } | Self::SharpOptimal { f_star, eps2, .. }
                if !(f_star.is_finite() && eps2.is_finite() && eps2 >= 0.0) =>
            {
                bad("optimal policies need a finite f* and eps2 >= 0")
            }
            Self::SharpOptimal { mu, .. } if !(mu > 0.0) => bad("sharp optimal policy needs mu > 0"),
            _ => Ok(()),
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::Constant { rho } => format!("constant(rho={rho})"),
            Self::Optimal { f_star, .. } => format!("optimal(f*={f_star})"),
            Self::Practical { cp } => format!("practical(C_P={cp})"),
            Self::SharpConstant { mu, v, eps_bar } => format!("sharp-constant(mu={mu},v={v},eps_bar={eps_bar})"),
            Self::SharpOptimal { mu, f_star, .. } => format!("sharp-optimal(mu={mu},f*={f_star})"),
        }
    }
}

/// Gaps at or below this size relative to `1 + |f̂|` are treated as zero.
const ROUNDOFF: f64 = 1e-10;

/// What the policy sees at the start of outer iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    pub k: usize,
    pub beta: f64,
    /// `f̂ₖ(x_{k,0})`.
    pub fhat_center: f64,
    /// Model value of the previous outer iteration at the new center.
    pub last_model: Option<f64>,
    pub diameter: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepDecision {
    Rho(f64),
    /// The policy certifies the center as near-optimal.
    Terminate,
}

pub fn next_step_size(policy: &StepSizePolicy, ctx: &StepContext) -> Result<StepDecision, SolverError> {
    use StepDecision::*;
    Ok(match *policy {
        StepSizePolicy::Constant { rho } => Rho(rho),
        StepSizePolicy::Optimal { f_star, diameter, eps2 } => {
            let d = diameter
                .or(ctx.diameter)
                .ok_or_else(|| SolverError::MissingParameter("diameter D for the optimal policy".into()))?;
            let gap = ctx.fhat_center - eps2 - f_star;
            if gap > ROUNDOFF * (1.0 + ctx.fhat_center.abs()) {
                Rho(gap / (d * d))
            } else {
                Terminate
            }
        }
        StepSizePolicy::Practical { cp } => match ctx.last_model {
            Some(m) if ctx.k != 0 && ctx.fhat_center - m > ROUNDOFF * (1.0 + ctx.fhat_center.abs()) => {
                Rho(cp * (ctx.fhat_center - m))
            }
            _ => Rho(cp),
        },
        StepSizePolicy::SharpConstant { mu, v, eps_bar } => Rho(ctx.beta * mu * mu * v / (2.0 * eps_bar)),
        StepSizePolicy::SharpOptimal { mu, f_star, eps2 } => {
            let denom = ctx.fhat_center - eps2 - f_star;
            if denom > ROUNDOFF * (1.0 + ctx.fhat_center.abs()) {
                Rho(mu * mu / denom)
            } else {
                Terminate
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Serious,
    Null,
}

/// Serious iff `β (f̂_center − model_trial) ≤ f̂_center − f̂_trial`.
pub fn serious_test(fhat_center: f64, fhat_trial: f64, model_trial: f64, beta: f64) -> StepKind {
    if beta * (fhat_center - model_trial) <= fhat_center - fhat_trial {
        StepKind::Serious
    } else {
        StepKind::Null
    }
}
