//! Best responses and round-robin dynamics of the pool game.
//!
//! A pool's payoff is its converged revenue density. When it moves it
//! picks the infiltration row that maximizes that payoff while every other
//! pool's rates stay fixed. With two pools the payoff is concave in the
//! single rate a pool controls, so golden-section search finds the unique
//! maximizer. With more pools we run cyclic coordinate ascent over the row,
//! one golden-section search per victim, subject to the pool's budget.

use crate::analytic::{converge_revenues, RevenueReport, SolveMethod};
use crate::error::{Error, Result};
use crate::model::{InfiltrationMatrix, PoolSystem, Scenario};
use crate::optimize::{golden_section_max, INTERVAL_TOLERANCE};

/// Coordinate ascent stops once a sweep moves no rate by more than this.
pub const ROW_TOLERANCE: f64 = 1e-9;
pub const MAX_ASCENT_SWEEPS: usize = 1000;

pub const DEFAULT_X_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_CYCLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub actor: usize,
    /// Full attack row of the actor; the entry at `actor` is zero.
    pub row: Vec<f64>,
    /// Actor's revenue density after playing `row`.
    pub density: f64,
    /// Coordinate-ascent sweeps used (1 when there is at most one victim).
    pub sweeps: usize,
}

fn actor_density(scenario: &Scenario, actor: usize, row: &[f64]) -> f64 {
    scenario
        .with_row(actor, row)
        .map_err(Error::from)
        .and_then(|s| converge_revenues(&s, SolveMethod::DirectLinear, None))
        .map(|rep| rep.densities[actor])
        .unwrap_or(f64::NEG_INFINITY)
}

/// The actor's revenue-maximizing attack row against everyone else's current rates.
pub fn best_response(scenario: &Scenario, actor: usize) -> Result<BestResponse> {
    let p = scenario.pool_count();
    if actor >= p {
        return Err(Error::PoolIndex {
            index: actor,
            pools: p,
        });
    }
    let budget = scenario.budget(actor);
    let mut row = scenario.infiltration().row(actor).to_vec();
    let targets: Vec<usize> = (0..p).filter(|&j| j != actor).collect();

    if targets.is_empty() {
        let density =
            converge_revenues(scenario, SolveMethod::DirectLinear, None)?.densities[actor];
        return Ok(BestResponse {
            actor,
            row,
            density,
            sweeps: 0,
        });
    }

    let mut density = actor_density(scenario, actor, &row);
    let mut sweeps = 0;
    while sweeps < MAX_ASCENT_SWEEPS {
        sweeps += 1;
        let mut moved = 0.0_f64;
        for &j in &targets {
            let others: f64 = targets.iter().filter(|&&k| k != j).map(|&k| row[k]).sum();
            // one ulp of headroom so the summed row never trips the budget check
            let hi = (budget - others - f64::EPSILON * budget).max(0.0);
            let mut trial = row.clone();
            let best = golden_section_max(
                |v| {
                    trial[j] = v;
                    actor_density(scenario, actor, &trial)
                },
                0.0,
                hi,
                INTERVAL_TOLERANCE,
            );
            if best.value >= density {
                moved = moved.max((best.arg - row[j]).abs());
                row[j] = best.arg;
                density = best.value;
            }
        }
        if targets.len() == 1 || moved < ROW_TOLERANCE {
            break;
        }
    }
    Ok(BestResponse {
        actor,
        row,
        density,
        sweeps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRobinConfig {
    pub max_cycles: usize,
    pub x_tol: f64,
}

impl Default for RoundRobinConfig {
    fn default() -> Self {
        Self {
            max_cycles: DEFAULT_MAX_CYCLES,
            x_tol: DEFAULT_X_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub cycle: usize,
    pub actor: usize,
    pub row: Vec<f64>,
    pub report: RevenueReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameTrace {
    pub rounds: Vec<Round>,
    pub converged: bool,
    /// Full round-robin cycles played.
    pub cycles: usize,
    pub final_state: Scenario,
    pub final_report: RevenueReport,
}

impl GameTrace {
    pub fn final_x(&self) -> &InfiltrationMatrix {
        self.final_state.infiltration()
    }

    pub fn densities(&self) -> &[f64] {
        &self.final_report.densities
    }
}

/// Pools take turns best-responding in ascending index order, starting from
/// `start`, until a whole cycle changes no rate by `x_tol` or more.
///
/// Running out of cycles is not an error: the trace comes back with
/// `converged == false`.
pub fn round_robin_equilibrium(start: &Scenario, config: RoundRobinConfig) -> Result<GameTrace> {
    let p = start.pool_count();
    let mut state = start.clone();
    let mut rounds = Vec::new();
    let mut converged = false;
    let mut cycles = 0;

    while cycles < config.max_cycles {
        let mut change = 0.0_f64;
        for actor in 0..p {
            let br = best_response(&state, actor)?;
            change = change.max(
                br.row
                    .iter()
                    .zip(state.infiltration().row(actor))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
            state = state.with_row(actor, &br.row)?;
            let report = converge_revenues(&state, SolveMethod::DirectLinear, None)?;
            rounds.push(Round {
                cycle: cycles,
                actor,
                row: br.row,
                report,
            });
        }
        cycles += 1;
        if change < config.x_tol {
            converged = true;
            break;
        }
    }

    let final_report = converge_revenues(&state, SolveMethod::DirectLinear, None)?;
    Ok(GameTrace {
        rounds,
        converged,
        cycles,
        final_state: state,
        final_report,
    })
}

/// Round robin from the no-attack state.
pub fn equilibrium_from_peace(system: &PoolSystem, config: RoundRobinConfig) -> Result<GameTrace> {
    let start = Scenario::new(
        system.clone(),
        InfiltrationMatrix::zeros(system.pool_count()),
    )?;
    round_robin_equilibrium(&start, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCheck {
    pub is_nash: bool,
    /// Largest payoff gain any single pool gets by deviating.
    pub worst_gain: f64,
    pub gains: Vec<f64>,
}

pub fn verify_equilibrium(scenario: &Scenario, probe_tol: f64) -> Result<EquilibriumCheck> {
    let current = converge_revenues(scenario, SolveMethod::DirectLinear, None)?;
    let gains = (0..scenario.pool_count())
        .map(|actor| {
            best_response(scenario, actor)
                .map(|br| (br.density - current.densities[actor]).max(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_gain = gains.iter().copied().fold(0.0, f64::max);
    Ok(EquilibriumCheck {
        is_nash: worst_gain <= probe_tol,
        worst_gain,
        gains,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilemmaCell {
    pub x12: f64,
    pub x21: f64,
    pub r1: f64,
    pub r2: f64,
}

/// Attack / no-attack payoffs for two pools. "Attack" means best-responding.
#[derive(Debug, Clone, PartialEq)]
pub struct DilemmaMatrix {
    pub m1: f64,
    pub m2: f64,
    cells: [[DilemmaCell; 2]; 2],
    /// Whether the mutual-attack round robin converged.
    pub equilibrium_converged: bool,
}

impl DilemmaMatrix {
    pub fn cell(&self, pool1_attacks: bool, pool2_attacks: bool) -> DilemmaCell {
        self.cells[pool1_attacks as usize][pool2_attacks as usize]
    }

    /// Attacking pays strictly more than abstaining against both opponent choices.
    pub fn attack_dominant(&self, pool: usize) -> bool {
        match pool {
            0 => [false, true]
                .iter()
                .all(|&o| self.cell(true, o).r1 > self.cell(false, o).r1),
            1 => [false, true]
                .iter()
                .all(|&o| self.cell(o, true).r2 > self.cell(o, false).r2),
            _ => panic!("dilemma has two pools"),
        }
    }

    /// Both pools earn strictly more when neither attacks than at mutual attack.
    pub fn mutual_attack_pareto_dominated(&self) -> bool {
        let peace = self.cell(false, false);
        let war = self.cell(true, true);
        peace.r1 > war.r1 && peace.r2 > war.r2
    }

    pub fn is_prisoners_dilemma(&self) -> bool {
        self.attack_dominant(0) && self.attack_dominant(1) && self.mutual_attack_pareto_dominated()
    }
}

pub fn dilemma_matrix(m1: f64, m2: f64) -> Result<DilemmaMatrix> {
    let peace = Scenario::peaceful(vec![m1, m2])?;
    let cell_of = |s: &Scenario| -> Result<DilemmaCell> {
        let rep = converge_revenues(s, SolveMethod::DirectLinear, None)?;
        let x = s.infiltration();
        Ok(DilemmaCell {
            x12: x.get(0, 1),
            x21: x.get(1, 0),
            r1: rep.densities[0],
            r2: rep.densities[1],
        })
    };

    let no_no = cell_of(&peace)?;
    let first = best_response(&peace, 0)?;
    let attack_no = cell_of(&peace.with_row(0, &first.row)?)?;
    let second = best_response(&peace, 1)?;
    let no_attack = cell_of(&peace.with_row(1, &second.row)?)?;
    let trace = round_robin_equilibrium(&peace, RoundRobinConfig::default())?;
    let attack_attack = cell_of(&trace.final_state)?;

    Ok(DilemmaMatrix {
        m1,
        m2,
        cells: [[no_no, no_attack], [attack_no, attack_attack]],
        equilibrium_converged: trace.converged,
    })
}
