//! Closed-form stable states: one pool attacking another, and `p` equal
//! pools attacking each other symmetrically.
//!
//! Both closed forms come from solving a quadratic, so each has two roots.
//! Only one lies in the feasible interval. For the one-attacker rate that is
//! the minus branch (the plus branch is negative), but roots are still
//! chosen by evaluating both and keeping the feasible one.

use crate::error::{Error, Result};
use crate::model::{BUDGET_EPSILON, POWER_SUM_SLACK};
use crate::optimize::{golden_section_max, INTERVAL_TOLERANCE};

/// Below this `|m1 + m2 - 1|` the one-attacker root is computed numerically.
pub const DEGENERATE_BAND: f64 = 1e-6;

const ROOT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneAttackerSolution {
    pub x12: f64,
    pub r1: f64,
    pub r2: f64,
    /// True when `m1 + m2 = 1` forced the numeric fallback.
    pub numeric_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSolution {
    pub pools: usize,
    pub power: f64,
    pub x: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootBranch {
    Plus,
    Minus,
}

impl RootBranch {
    fn sign(self) -> f64 {
        match self {
            RootBranch::Plus => 1.0,
            RootBranch::Minus => -1.0,
        }
    }
}

fn check_two_pool_sizes(m1: f64, m2: f64) -> Result<()> {
    if !(m1 > 0.0 && m2 > 0.0) || m1 + m2 > 1.0 + POWER_SUM_SLACK {
        return Err(Error::InfeasibleSizes(format!("m1={m1}, m2={m2}")));
    }
    Ok(())
}

/// Pool 1's density when it alone attacks pool 2 at rate `x`.
pub fn one_attacker_revenue(m1: f64, m2: f64, x: f64) -> Result<f64> {
    check_two_pool_sizes(m1, m2)?;
    let denom = m1 * (x - 1.0) * (m2 + x);
    if denom == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok((x * x - m1 * (m2 + x)) / denom)
}

/// Stable state `(x12, r1, r2)` on the given square-root branch.
///
/// Undefined on `m1 + m2 = 1` (both the rate and `r2` become 0/0).
pub fn one_attacker_state(m1: f64, m2: f64, branch: RootBranch) -> (f64, f64, f64) {
    let s = branch.sign() * (-m2 * m2 * (-1.0 + m1 + m1 * m2)).sqrt();
    let x = (m2 - m1 * m2 + s) / (-1.0 + m1 + m2);
    let r1 = (m1 + (2.0 + m1) * m2 + 2.0 * s) / (m1 * (1.0 + m2).powi(2));
    let r2 = -m2 * (-1.0 + m1 + m2).powi(2) / ((m2 * m2 + s) * (1.0 - m1 * (1.0 + m2) + s));
    (x, r1, r2)
}

/// Stable state when pool 1 best-responds and pool 2 never attacks.
pub fn one_attacker_optimum(m1: f64, m2: f64) -> Result<OneAttackerSolution> {
    check_two_pool_sizes(m1, m2)?;
    let victim = |x: f64| m2 / (1.0 - x) / (m2 + x);

    if (m1 + m2 - 1.0).abs() < DEGENERATE_BAND {
        let hi = m1 - BUDGET_EPSILON;
        let best = golden_section_max(
            |x| one_attacker_revenue(m1, m2, x).unwrap_or(f64::NEG_INFINITY),
            0.0,
            hi,
            INTERVAL_TOLERANCE,
        );
        return Ok(OneAttackerSolution {
            x12: best.arg,
            r1: best.value,
            r2: victim(best.arg),
            numeric_fallback: true,
        });
    }

    let x12 = [RootBranch::Plus, RootBranch::Minus]
        .into_iter()
        .map(|b| one_attacker_state(m1, m2, b).0)
        .filter(|x| x.is_finite() && *x >= -ROOT_SLACK && *x <= m1 + ROOT_SLACK)
        .map(|x| x.clamp(0.0, m1))
        .map(|x| {
            (
                x,
                one_attacker_revenue(m1, m2, x).unwrap_or(f64::NEG_INFINITY),
            )
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InfeasibleSizes(format!("no feasible root for m1={m1}, m2={m2}")))?;

    Ok(OneAttackerSolution {
        x12: x12.0,
        r1: x12.1,
        r2: victim(x12.0),
        numeric_fallback: false,
    })
}

fn check_symmetric_sizes(pools: usize, power: f64) -> Result<()> {
    if pools < 2 || power.is_nan() || power <= 0.0 || pools as f64 * power > 1.0 + POWER_SUM_SLACK {
        return Err(Error::InfeasibleSizes(format!("p={pools}, mi={power}")));
    }
    Ok(())
}

/// Density of pool 1 among `pools` equal pools when it attacks each other
/// pool at `x_own` and every other pool attacks each of its peers at `x_others`.
pub fn symmetric_revenue(pools: usize, power: f64, x_own: f64, x_others: f64) -> Result<f64> {
    check_symmetric_sizes(pools, power)?;
    let q = (pools - 1) as f64;
    let (a, b, m) = (x_own, x_others, power);
    let num = m * m + m * a - q * a * (q * b + a);
    let den = (q * a + q * q * b - 1.0) * ((m + a) * (m + q * b) - q * a * b);
    if den == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(-num / den)
}

/// Common attack rate and density at the symmetric equilibrium of `pools`
/// equal pools of power `power` each.
pub fn symmetric_equilibrium(pools: usize, power: f64) -> Result<SymmetricSolution> {
    check_symmetric_sizes(pools, power)?;
    let p = pools as f64;
    let m = power;
    let disc = (m - p).powi(2) - 4.0 * m * m * (p - 1.0).powi(2) * p;
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(disc));
    }
    let root = disc.sqrt();
    // minus root in the cancellation-free form 2 m^2 / (p - m + sqrt(disc))
    let minus = 2.0 * m * m / (p - m + root);
    let plus = (p - m + root) / (2.0 * (p - 1.0).powi(2) * p);
    let limit = m / p;
    let feasible = |x: f64| x >= -ROOT_SLACK && x <= limit + ROOT_SLACK;

    if feasible(minus) {
        let x = minus.clamp(0.0, limit);
        let r = 2.0 * p / (p - m + 2.0 * m * p + root);
        Ok(SymmetricSolution { pools, power, x, r })
    } else if feasible(plus) {
        let x = plus.clamp(0.0, limit);
        Ok(SymmetricSolution {
            pools,
            power,
            x,
            r: symmetric_revenue(pools, power, x, x)?,
        })
    } else {
        Err(Error::InfeasibleSizes(format!(
            "no feasible symmetric root for p={pools}, mi={power}"
        )))
    }
}
