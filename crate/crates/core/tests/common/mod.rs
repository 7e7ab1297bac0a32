#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;

use pool_game::analytic::iterate_revenue_step;
use pool_game::model::{
    infiltration_matrix_g, validate_system, InfiltrationMatrix, Scenario, BUDGET_EPSILON,
};

/// Builds a valid scenario from raw unit-interval draws.
///
/// `weights` sets relative pool sizes, `total` the pooled share of all power,
/// `spend[i]` the fraction of pool `i`'s budget spent on attacks and
/// `split[i]` how that spend is divided among the other pools.
pub fn build_scenario(weights: &[f64], total: f64, spend: &[f64], split: &[Vec<f64>]) -> Scenario {
    let p = weights.len();
    let wsum: f64 = weights.iter().sum();
    let powers: Vec<f64> = weights.iter().map(|w| total * w / wsum).collect();
    let rows = (0..p)
        .map(|i| {
            let ssum: f64 = (0..p).filter(|&j| j != i).map(|j| split[i][j]).sum();
            let budget = (powers[i] - BUDGET_EPSILON) * spend[i];
            (0..p)
                .map(|j| {
                    if j == i || ssum == 0.0 {
                        0.0
                    } else {
                        budget * split[i][j] / ssum * 0.999_999
                    }
                })
                .collect()
        })
        .collect();
    validate_system(&powers, InfiltrationMatrix::from_rows(rows).unwrap()).unwrap()
}

pub fn scenario_strategy(
    pools: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Scenario> {
    pools.prop_flat_map(|p| {
        (
            prop::collection::vec(0.05..1.0f64, p),
            0.2..=1.0f64,
            prop::collection::vec(0.0..0.95f64, p),
            prop::collection::vec(prop::collection::vec(0.0..1.0f64, p), p),
        )
            .prop_map(|(w, t, s, sp)| build_scenario(&w, t, &s, &sp))
    })
}

pub fn random_scenario<R: Rng>(
    rng: &mut R,
    pools: std::ops::RangeInclusive<usize>,
    attack: bool,
) -> Scenario {
    let p = rng.random_range(pools);
    let weights: Vec<f64> = (0..p).map(|_| rng.random_range(0.05..1.0)).collect();
    let total = rng.random_range(0.2..=1.0);
    let spend: Vec<f64> = (0..p)
        .map(|_| {
            if attack {
                rng.random_range(0.0..0.95)
            } else {
                0.0
            }
        })
        .collect();
    let split: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    build_scenario(&weights, total, &spend, &split)
}

/// Spectral radius by Gelfand's formula, `lim ||G^(2^s)||^(1/2^s)`, with
/// renormalized repeated squaring. Unlike power iteration it is not fooled
/// by periodic (e.g. off-diagonal) matrices.
pub fn spectral_radius(g: &[Vec<f64>]) -> f64 {
    let n = g.len();
    let mut m = g.to_vec();
    let mut log_scale = 0.0;
    let squarings = 40;
    for _ in 0..squarings {
        let sq: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| m[i][k] * m[k][j]).sum())
                    .collect()
            })
            .collect();
        let norm = inf_norm(&sq);
        if norm == 0.0 {
            return 0.0;
        }
        log_scale = 2.0 * log_scale + norm.ln();
        m = sq
            .into_iter()
            .map(|row| row.into_iter().map(|v| v / norm).collect())
            .collect();
    }
    let norm = inf_norm(g);
    // Now G^(2^s) = exp(log_scale) * m with norm(m) = 1.
    (log_scale / 2f64.powi(squarings)).exp().min(norm)
}

pub fn inf_norm(g: &[Vec<f64>]) -> f64 {
    g.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Runs the revenue iteration from all-ones and checks that residuals shrink
/// by at least the row-sum bound of G every step and, asymptotically, at the
/// spectral radius of G.
pub fn check_geometric_decay(s: &Scenario) -> Result<(), String> {
    let g = infiltration_matrix_g(s);
    let rho = spectral_radius(&g);
    let contraction = inf_norm(&g);
    let mut r = vec![1.0; s.pool_count()];
    let mut residuals = Vec::new();
    for _ in 0..400 {
        let next = iterate_revenue_step(s, &r, None).map_err(|e| e.to_string())?;
        residuals.push(
            next.iter()
                .zip(&r)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
        r = next;
    }
    for k in 1..residuals.len() {
        if residuals[k] > contraction * residuals[k - 1] * (1.0 + 1e-9) + 1e-15 {
            return Err(format!(
                "residual grew at step {k}: {:e} -> {:e}",
                residuals[k - 1],
                residuals[k]
            ));
        }
    }
    // Spans are multiples of 6 so periodic G (period 2 or 3) averages out.
    let live: Vec<f64> = residuals
        .iter()
        .copied()
        .take_while(|&v| v > 1e-11)
        .collect();
    if live.len() > 13 {
        let k1 = live.len() - 1;
        let k0 = k1 - (k1 / 2) / 6 * 6;
        let rate = (live[k1] / live[k0]).powf(1.0 / (k1 - k0) as f64);
        if rate > rho + 0.05 {
            return Err(format!("decay rate {rate} exceeds spectral radius {rho}"));
        }
    }
    Ok(())
}
