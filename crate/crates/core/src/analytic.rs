//! Direct mining rates and converged revenue densities for constant
//! infiltration rates.
//!
//! With infiltration held fixed, pool `i`'s revenue density satisfies
//!
//! ```text
//! r_i = (R_i + sum_j x_i^j (1 - f_j) r_j) / (m_i + sum_j x_j^i)
//! ```
//!
//! where `R_i` is the pool's share of published blocks. Each application of
//! the right-hand side is one protocol step: infiltration income earned in
//! pool `j` reaches pool `i` a step later. The map is a contraction because
//! every pool keeps part of its budget, so it has a unique fixed point which
//! we compute either by a direct linear solve or by iterating the step map.

use crate::error::{Error, Result};
use crate::model::{FeeSchedule, Scenario, ValidationError};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SolveMethod {
    #[default]
    DirectLinear,
    FixedPointIteration {
        max_steps: usize,
        tol: f64,
    },
}

impl SolveMethod {
    pub fn iteration(max_steps: usize, tol: f64) -> Self {
        assert!(max_steps >= 1, "max_steps must be at least 1");
        assert!(tol > 0.0, "tolerance must be positive");
        SolveMethod::FixedPointIteration { max_steps, tol }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevenueReport {
    /// Share of all published blocks found by each pool's own honest miners.
    pub direct_rates: Vec<f64>,
    /// Revenue density of each pool (1 = what its members would earn solo).
    pub densities: Vec<f64>,
    pub solo_density: f64,
    /// Max-norm distance between the densities and one more step of the map.
    pub residual: f64,
    /// Map applications performed; 0 for the direct solve.
    pub iterations: usize,
}

impl RevenueReport {
    /// `sum_i m_i r_i + solo_power * solo_density`; equals 1 when no fees are charged.
    pub fn total_revenue(&self, scenario: &Scenario) -> f64 {
        let system = scenario.system();
        let pools: f64 = system
            .powers()
            .iter()
            .zip(&self.densities)
            .map(|(m, r)| m * r)
            .sum();
        pools + system.solo_power() * self.solo_density
    }
}

/// `R_i = (m_i - sum_j x_i^j) / (1 - sum_jk x_j^k)`.
pub fn direct_rates(scenario: &Scenario) -> Vec<f64> {
    let x = scenario.infiltration();
    let effective = scenario.effective_power();
    scenario
        .system()
        .powers()
        .iter()
        .enumerate()
        .map(|(i, m)| (m - x.outgoing(i)) / effective)
        .collect()
}

fn resolve_fees(scenario: &Scenario, fees: Option<&FeeSchedule>) -> Result<FeeSchedule> {
    let p = scenario.pool_count();
    match fees {
        None => Ok(FeeSchedule::none(p)),
        Some(f) if f.len() == p => Ok(f.clone()),
        Some(f) => Err(ValidationError::FeeLength {
            got: f.len(),
            pools: p,
        }
        .into()),
    }
}

fn step_map(scenario: &Scenario, rates: &[f64], fees: &FeeSchedule, prev: &[f64]) -> Vec<f64> {
    let system = scenario.system();
    let x = scenario.infiltration();
    (0..scenario.pool_count())
        .map(|i| {
            let income: f64 = (0..scenario.pool_count())
                .map(|j| x.get(i, j) * (1.0 - fees.fee(j)) * prev[j])
                .sum();
            (rates[i] + income) / (system.power(i) + x.incoming(i))
        })
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

/// One step of revenue propagation: densities at step `t` given step `t - 1`.
pub fn iterate_revenue_step(
    scenario: &Scenario,
    prev: &[f64],
    fees: Option<&FeeSchedule>,
) -> Result<Vec<f64>> {
    assert_eq!(prev.len(), scenario.pool_count(), "one density per pool");
    let fees = resolve_fees(scenario, fees)?;
    Ok(step_map(scenario, &direct_rates(scenario), &fees, prev))
}

/// Converged revenue densities for constant infiltration rates.
pub fn converge_revenues(
    scenario: &Scenario,
    method: SolveMethod,
    fees: Option<&FeeSchedule>,
) -> Result<RevenueReport> {
    let fees = resolve_fees(scenario, fees)?;
    let rates = direct_rates(scenario);
    let solo_density = 1.0 / scenario.effective_power();

    let (densities, residual, iterations) = match method {
        SolveMethod::DirectLinear => {
            let densities = solve_direct(scenario, &rates, &fees)?;
            let residual = max_diff(&step_map(scenario, &rates, &fees, &densities), &densities);
            (densities, residual, 0)
        }
        SolveMethod::FixedPointIteration { max_steps, tol } => {
            let mut current = vec![1.0; scenario.pool_count()];
            let mut residual = f64::INFINITY;
            let mut steps = 0;
            while steps < max_steps {
                let next = step_map(scenario, &rates, &fees, &current);
                residual = max_diff(&next, &current);
                current = next;
                steps += 1;
                if residual <= tol {
                    break;
                }
            }
            if residual > tol {
                return Err(Error::NonConvergence { steps, residual });
            }
            (current, residual, steps)
        }
    };

    Ok(RevenueReport {
        direct_rates: rates,
        densities,
        solo_density,
        residual,
        iterations,
    })
}

// (diag(m_i + incoming_i) - X_f) r = R, with X_f[i][j] = x_i^j (1 - f_j).
fn solve_direct(scenario: &Scenario, rates: &[f64], fees: &FeeSchedule) -> Result<Vec<f64>> {
    let p = scenario.pool_count();
    let x = scenario.infiltration();
    let mut a = vec![vec![0.0; p]; p];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = -x.get(i, j) * (1.0 - fees.fee(j));
        }
        row[i] += scenario.system().power(i) + x.incoming(i);
    }
    solve_linear(a, rates.to_vec()).ok_or(Error::SingularSystem)
}

/// Gaussian elimination with partial pivoting. `None` if a pivot vanishes.
pub(crate) fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                let (upper, lower) = a.split_at_mut(row);
                for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *dst -= factor * src;
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut out = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * out[k]).sum();
        out[row] = (b[row] - tail) / a[row][row];
    }
    Some(out)
}

/// Closed-form densities for two pools attacking each other, no fees.
pub fn two_pool_revenues(m1: f64, m2: f64, x12: f64, x21: f64) -> Result<(f64, f64)> {
    crate::model::validate_system(
        &[m1, m2],
        crate::model::InfiltrationMatrix::two_pool(x12, x21),
    )?;
    let effective = 1.0 - x12 - x21;
    let r1_direct = (m1 - x12) / effective;
    let r2_direct = (m2 - x21) / effective;
    let denom = m1 * m2 + m1 * x12 + m2 * x21;
    let r1 = (m2 * r1_direct + x12 * (r1_direct + r2_direct)) / denom;
    let r2 = (m1 * r2_direct + x21 * (r1_direct + r2_direct)) / denom;
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_system, InfiltrationMatrix};
    use approx::assert_abs_diff_eq;

    fn two(m1: f64, m2: f64, x12: f64, x21: f64) -> Scenario {
        validate_system(&[m1, m2], InfiltrationMatrix::two_pool(x12, x21)).unwrap()
    }

    fn iter_method() -> SolveMethod {
        SolveMethod::iteration(1_000_000, 1e-12)
    }

    #[test]
    fn direct_rates_examples() {
        assert_eq!(direct_rates(&two(0.2, 0.3, 0.0, 0.0)), vec![0.2, 0.3]);

        let r = direct_rates(&two(0.2, 0.2, 0.05, 0.0));
        assert_abs_diff_eq!(r[0], 0.15 / 0.95, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.2 / 0.95, epsilon = 1e-15);

        let r = direct_rates(&two(0.2, 0.3, 0.1, 0.1));
        assert_abs_diff_eq!(r[0], 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn no_attack_baseline() {
        for method in [SolveMethod::DirectLinear, iter_method()] {
            let rep = converge_revenues(&two(0.2, 0.3, 0.0, 0.0), method, None).unwrap();
            assert_eq!(rep.densities, vec![1.0, 1.0]);
            assert_eq!(rep.solo_density, 1.0);
        }
    }

    #[test]
    fn one_attacker_example() {
        for method in [SolveMethod::DirectLinear, iter_method()] {
            let rep = converge_revenues(&two(0.2, 0.2, 0.05, 0.0), method, None).unwrap();
            assert_abs_diff_eq!(rep.densities[0], 1.0, epsilon = 1e-11);
            assert_abs_diff_eq!(rep.densities[1], 0.842105263157894_7, epsilon = 1e-11);
            assert_abs_diff_eq!(rep.solo_density, 1.0 / 0.95, epsilon = 1e-15);
        }
    }

    #[test]
    fn mutual_attack_example() {
        // 15/22 and 35/44
        let rep =
            converge_revenues(&two(0.2, 0.3, 0.1, 0.1), SolveMethod::DirectLinear, None).unwrap();
        assert_abs_diff_eq!(rep.densities[0], 15.0 / 22.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.densities[1], 35.0 / 44.0, epsilon = 1e-14);
        assert!(rep.residual <= DEFAULT_TOLERANCE);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn full_fee_cuts_infiltration_income() {
        let s = two(0.2, 0.3, 0.05, 0.0);
        let fees = FeeSchedule::new(vec![0.0, 1.0]).unwrap();
        let rep = converge_revenues(&s, SolveMethod::DirectLinear, Some(&fees)).unwrap();
        assert_abs_diff_eq!(rep.densities[0], 0.15 / 0.95 / 0.2, epsilon = 1e-14);

        let bad = FeeSchedule::new(vec![0.0]).unwrap();
        assert!(matches!(
            converge_revenues(&s, SolveMethod::DirectLinear, Some(&bad)),
            Err(Error::Validation(ValidationError::FeeLength { .. }))
        ));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let s = two(0.2, 0.3, 0.1, 0.1);
        let err = converge_revenues(&s, SolveMethod::iteration(2, 1e-15), None).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { steps: 2, .. }));
    }

    #[test]
    fn step_map_examples() {
        let s = two(0.2, 0.2, 0.05, 0.0);
        let next = iterate_revenue_step(&s, &[0.0, 0.0], None).unwrap();
        assert_abs_diff_eq!(next[0], 0.789_473_684_210_526_3, epsilon = 1e-14);
        assert_abs_diff_eq!(next[1], 0.842_105_263_157_894_7, epsilon = 1e-14);

        let fixed = converge_revenues(&s, SolveMethod::DirectLinear, None)
            .unwrap()
            .densities;
        let again = iterate_revenue_step(&s, &fixed, None).unwrap();
        assert_abs_diff_eq!(again[0], fixed[0], epsilon = 1e-15);
        assert_abs_diff_eq!(again[1], fixed[1], epsilon = 1e-15);

        let idle = two(0.2, 0.3, 0.0, 0.0);
        assert_eq!(
            iterate_revenue_step(&idle, &[7.0, 0.3], None).unwrap(),
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn two_pool_closed_form_examples() {
        assert_eq!(two_pool_revenues(0.2, 0.3, 0.0, 0.0).unwrap(), (1.0, 1.0));
        let (r1, r2) = two_pool_revenues(0.2, 0.3, 0.1, 0.1).unwrap();
        assert_abs_diff_eq!(r1, 15.0 / 22.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r2, 35.0 / 44.0, epsilon = 1e-14);
        let (r1, r2) = two_pool_revenues(0.2, 0.2, 0.05, 0.0).unwrap();
        assert_abs_diff_eq!(r1, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r2, 0.842_105_263_157_894_7, epsilon = 1e-14);
        assert!(two_pool_revenues(0.2, 0.3, 0.3, 0.0).is_err());
    }

    #[test]
    fn linear_solver_detects_singularity() {
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]).is_none());
        let x = solve_linear(vec![vec![0.0, 1.0], vec![2.0, 0.0]], vec![3.0, 4.0]).unwrap();
        assert_eq!(x, vec![2.0, 3.0]);
    }
}
