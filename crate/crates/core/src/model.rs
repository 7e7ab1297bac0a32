//! Domain types shared by the solvers and the simulator.
//!
//! Total mining power is normalized to 1, so every power and infiltration
//! rate is a fraction of the whole network. Miners outside all pools mine
//! solo; they are never represented explicitly and never attack or get
//! attacked.

use std::fmt;

use thiserror::Error;

/// Slack kept between a pool's total infiltration and its loyal power.
pub const BUDGET_EPSILON: f64 = 1e-9;

/// Rounding slack accepted when pool powers sum to exactly one.
///
/// Grids built by repeated decimal steps (`0.3 + 0.7`) land a few ulps above 1.
pub const POWER_SUM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("at least one pool is required")]
    NoPools,
    #[error("pool {pool} has non-positive power {power}")]
    NegativePower { pool: usize, power: f64 },
    #[error("pool powers sum to {sum}, which exceeds 1")]
    PowerSumExceedsOne { sum: f64 },
    #[error("infiltration matrix is {rows}x{cols} but there are {pools} pools")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        pools: usize,
    },
    #[error("value {value} at ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("pool {from} infiltrates pool {to} at negative rate {rate}")]
    NegativeInfiltration { from: usize, to: usize, rate: f64 },
    #[error("pool {pool} infiltrates itself at rate {rate}")]
    SelfInfiltration { pool: usize, rate: f64 },
    #[error("pool {pool} spends {spent} on infiltration but only has {power} (budget is power - {BUDGET_EPSILON})")]
    BudgetExceeded { pool: usize, spent: f64, power: f64 },
    #[error("no mining power is left publishing blocks (effective power {effective})")]
    NoEffectivePower { effective: f64 },
    #[error("fee schedule has {got} entries but there are {pools} pools")]
    FeeLength { got: usize, pools: usize },
    #[error("pool {pool} has fee {fee} outside [0, 1]")]
    InvalidFee { pool: usize, fee: f64 },
}

impl ValidationError {
    /// Name of the violated constraint, e.g. `PowerSumExceedsOne`.
    pub fn constraint(&self) -> &'static str {
        match self {
            ValidationError::NoPools => "NoPools",
            ValidationError::NegativePower { .. } => "NegativePower",
            ValidationError::PowerSumExceedsOne { .. } => "PowerSumExceedsOne",
            ValidationError::DimensionMismatch { .. } => "DimensionMismatch",
            ValidationError::NonFinite { .. } => "NonFinite",
            ValidationError::NegativeInfiltration { .. } => "NegativeInfiltration",
            ValidationError::SelfInfiltration { .. } => "SelfInfiltration",
            ValidationError::BudgetExceeded { .. } => "BudgetExceeded",
            ValidationError::NoEffectivePower { .. } => "NoEffectivePower",
            ValidationError::FeeLength { .. } => "FeeLength",
            ValidationError::InvalidFee { .. } => "InvalidFee",
        }
    }
}

/// Loyal mining power of each pool. The solo remainder is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSystem {
    powers: Vec<f64>,
}

impl PoolSystem {
    pub fn new(powers: Vec<f64>) -> Result<Self, ValidationError> {
        if powers.is_empty() {
            return Err(ValidationError::NoPools);
        }
        for (pool, &power) in powers.iter().enumerate() {
            if !power.is_finite() {
                return Err(ValidationError::NonFinite {
                    row: pool,
                    col: 0,
                    value: power,
                });
            }
            if power <= 0.0 {
                return Err(ValidationError::NegativePower { pool, power });
            }
        }
        let sum: f64 = powers.iter().sum();
        if sum > 1.0 + POWER_SUM_SLACK {
            return Err(ValidationError::PowerSumExceedsOne { sum });
        }
        Ok(Self { powers })
    }

    pub fn pool_count(&self) -> usize {
        self.powers.len()
    }

    pub fn power(&self, pool: usize) -> f64 {
        self.powers[pool]
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Power of miners outside every pool.
    pub fn solo_power(&self) -> f64 {
        (1.0 - self.powers.iter().sum::<f64>()).max(0.0)
    }
}

/// Square matrix of infiltration rates; entry `(i, j)` is the power pool `i`
/// spends withholding blocks inside pool `j`.
///
/// Construction only checks shape. Feasibility against a [`PoolSystem`] is
/// checked by [`validate_system`] / [`Scenario::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct InfiltrationMatrix {
    size: usize,
    rates: Vec<f64>,
}

impl InfiltrationMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            rates: vec![0.0; size * size],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ValidationError> {
        let size = rows.len();
        let mut rates = Vec::with_capacity(size * size);
        for row in &rows {
            if row.len() != size {
                return Err(ValidationError::DimensionMismatch {
                    rows: size,
                    cols: row.len(),
                    pools: size,
                });
            }
            rates.extend_from_slice(row);
        }
        Ok(Self { size, rates })
    }

    /// Two-pool matrix with pool 0 attacking pool 1 at `x01` and vice versa.
    pub fn two_pool(x01: f64, x10: f64) -> Self {
        Self {
            size: 2,
            rates: vec![0.0, x01, x10, 0.0],
        }
    }

    /// Every pool attacks every other pool at the same rate.
    pub fn uniform(size: usize, rate: f64) -> Self {
        let mut m = Self::zeros(size);
        for i in 0..size {
            for j in 0..size {
                if i != j {
                    m.rates[i * size + j] = rate;
                }
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.rates[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.rates[from * self.size..(from + 1) * self.size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rates.chunks(self.size.max(1))
    }

    /// Power pool `from` spends on infiltration, summed over victims.
    pub fn outgoing(&self, from: usize) -> f64 {
        self.row(from).iter().sum()
    }

    /// Infiltrating power registered inside pool `to`.
    pub fn incoming(&self, to: usize) -> f64 {
        (0..self.size).map(|k| self.get(k, to)).sum()
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rates.iter().all(|&x| x == 0.0)
    }

    /// Copy with row `from` replaced.
    pub fn with_row(&self, from: usize, row: &[f64]) -> Self {
        assert_eq!(row.len(), self.size, "row length must equal pool count");
        let mut next = self.clone();
        next.rates[from * self.size..(from + 1) * self.size].copy_from_slice(row);
        next
    }

    /// Copy with a single entry replaced.
    pub fn with_entry(&self, from: usize, to: usize, rate: f64) -> Self {
        let mut next = self.clone();
        next.rates[from * self.size + to] = rate;
        next
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.rates
            .iter()
            .zip(&other.rates)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for InfiltrationMatrix {
    /// Rows separated by `;`, entries by `,` (the CLI `--x` syntax).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
        }
        Ok(())
    }
}

/// Per-pool fee fraction. The fee of pool `j` is withheld from whatever
/// pool `j` pays out to infiltrators.
#[derive(Debug, Clone, PartialEq)]
pub struct FeeSchedule {
    fees: Vec<f64>,
}

impl FeeSchedule {
    pub fn new(fees: Vec<f64>) -> Result<Self, ValidationError> {
        for (pool, &fee) in fees.iter().enumerate() {
            if !(0.0..=1.0).contains(&fee) {
                return Err(ValidationError::InvalidFee { pool, fee });
            }
        }
        Ok(Self { fees })
    }

    pub fn none(pools: usize) -> Self {
        Self {
            fees: vec![0.0; pools],
        }
    }

    pub fn fee(&self, pool: usize) -> f64 {
        self.fees[pool]
    }

    pub fn len(&self) -> usize {
        self.fees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fees.is_empty()
    }
}

/// A pool system together with an infiltration matrix that is feasible for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    system: PoolSystem,
    infiltration: InfiltrationMatrix,
}

impl Scenario {
    pub fn new(
        system: PoolSystem,
        infiltration: InfiltrationMatrix,
    ) -> Result<Self, ValidationError> {
        check_infiltration(&system, &infiltration)?;
        Ok(Self {
            system,
            infiltration,
        })
    }

    /// Pools of the given powers with nobody attacking.
    pub fn peaceful(powers: Vec<f64>) -> Result<Self, ValidationError> {
        let p = powers.len();
        Self::new(PoolSystem::new(powers)?, InfiltrationMatrix::zeros(p))
    }

    pub fn system(&self) -> &PoolSystem {
        &self.system
    }

    pub fn infiltration(&self) -> &InfiltrationMatrix {
        &self.infiltration
    }

    pub fn pool_count(&self) -> usize {
        self.system.pool_count()
    }

    pub fn into_parts(self) -> (PoolSystem, InfiltrationMatrix) {
        (self.system, self.infiltration)
    }

    /// Same pools, different infiltration matrix.
    pub fn with_infiltration(
        &self,
        infiltration: InfiltrationMatrix,
    ) -> Result<Self, ValidationError> {
        Self::new(self.system.clone(), infiltration)
    }

    /// Same pools, with one pool's attack row replaced.
    pub fn with_row(&self, from: usize, row: &[f64]) -> Result<Self, ValidationError> {
        self.with_infiltration(self.infiltration.with_row(from, row))
    }

    /// Mining power that still publishes full proofs.
    pub fn effective_power(&self) -> f64 {
        1.0 - self.infiltration.total()
    }

    /// Largest total infiltration pool `pool` may spend.
    pub fn budget(&self, pool: usize) -> f64 {
        (self.system.power(pool) - BUDGET_EPSILON).max(0.0)
    }
}

/// Validates a power vector and infiltration matrix as a feasible pair.
pub fn validate_system(
    powers: &[f64],
    infiltration: InfiltrationMatrix,
) -> Result<Scenario, ValidationError> {
    Scenario::new(PoolSystem::new(powers.to_vec())?, infiltration)
}

fn check_infiltration(system: &PoolSystem, x: &InfiltrationMatrix) -> Result<(), ValidationError> {
    let p = system.pool_count();
    if x.size() != p {
        return Err(ValidationError::DimensionMismatch {
            rows: x.size(),
            cols: x.size(),
            pools: p,
        });
    }
    for i in 0..p {
        for j in 0..p {
            let rate = x.get(i, j);
            if !rate.is_finite() {
                return Err(ValidationError::NonFinite {
                    row: i,
                    col: j,
                    value: rate,
                });
            }
            if i == j && rate != 0.0 {
                return Err(ValidationError::SelfInfiltration { pool: i, rate });
            }
            if rate < 0.0 {
                return Err(ValidationError::NegativeInfiltration {
                    from: i,
                    to: j,
                    rate,
                });
            }
        }
        let spent = x.outgoing(i);
        let power = system.power(i);
        if spent > power - BUDGET_EPSILON {
            return Err(ValidationError::BudgetExceeded {
                pool: i,
                spent,
                power,
            });
        }
    }
    let effective = 1.0 - x.total();
    if effective <= 0.0 {
        return Err(ValidationError::NoEffectivePower { effective });
    }
    Ok(())
}

/// The matrix `G[i][j] = x_i^j / (m_i + sum_k x_k^i)` whose powers carry
/// infiltration revenue from one step to the next.
pub fn infiltration_matrix_g(scenario: &Scenario) -> Vec<Vec<f64>> {
    let p = scenario.pool_count();
    let x = scenario.infiltration();
    (0..p)
        .map(|i| {
            let members = scenario.system().power(i) + x.incoming(i);
            (0..p).map(|j| x.get(i, j) / members).collect()
        })
        .collect()
}
