//! Grids of two-pool games over pool sizes.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::cli::format::{csv_line, sig6};
use crate::gamesolve::{
    best_response, round_robin_equilibrium, RoundRobinConfig, MAX_ASCENT_SWEEPS,
};
use crate::model::{Scenario, POWER_SUM_SLACK};

pub const DEFAULT_STEP: f64 = 0.01;
/// Coarser step used by CI-sized sweeps.
pub const COARSE_STEP: f64 = 0.05;

pub const SWEEP_HEADER: &str = "m1,m2,feasible,x12,x21,r1,r2,converged\n";

/// Grid `start, start + step, ...` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, String> {
        if step.is_nan() || step <= 0.0 || !step.is_finite() {
            return Err(format!("grid step must be positive, got {step}"));
        }
        if !(start.is_finite() && stop.is_finite()) || stop < start {
            return Err(format!("grid range {start}:{stop} is empty"));
        }
        Ok(Self { start, stop, step })
    }

    /// `step, 2 step, ..., 1 - step`.
    pub fn open_unit(step: f64) -> Result<Self, String> {
        Self::new(step, 1.0 - step, step)
    }

    /// Grid points, each computed as `start + k * step` and rounded to 12
    /// decimals so that printed values are exact decimals.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|k| ((self.start + k as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

impl FromStr for GridRange {
    type Err = String;

    /// `start:stop:step`, or `start:stop` with the default step.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad grid {s:?}: {e}"))
            })
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [start, stop] => Self::new(start, stop, DEFAULT_STEP),
            [start, stop, step] => Self::new(start, stop, step),
            _ => Err(format!("grid must be start:stop[:step], got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Pool 1 best-responds against a passive pool 2.
    OneAttacker,
    /// Both pools best-respond in turn until rates settle.
    TwoPool,
}

impl FromStr for SweepMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "one-attacker" => Ok(SweepMode::OneAttacker),
            "two-pool" | "two-pool-equilibrium" => Ok(SweepMode::TwoPool),
            _ => Err(format!(
                "unknown sweep mode {s:?} (one-attacker | two-pool)"
            )),
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMode::OneAttacker => "one-attacker",
            SweepMode::TwoPool => "two-pool",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub m1: GridRange,
    pub m2: GridRange,
    pub mode: SweepMode,
    pub solver: RoundRobinConfig,
}

impl SweepSpec {
    /// Both axes over `step .. 1 - step`.
    pub fn full(mode: SweepMode, step: f64) -> Result<Self, String> {
        let axis = GridRange::open_unit(step)?;
        Ok(Self {
            m1: axis,
            m2: axis,
            mode,
            solver: RoundRobinConfig::default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellOutcome {
    /// `m1 + m2 > 1`.
    Infeasible,
    /// The solver raised an error; recorded instead of aborting the sweep.
    Failed,
    Solved {
        x12: f64,
        x21: f64,
        r1: f64,
        r2: f64,
        converged: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m1: f64,
    pub m2: f64,
    pub outcome: CellOutcome,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let (m1, m2) = (sig6(self.m1), sig6(self.m2));
        match self.outcome {
            CellOutcome::Infeasible => csv_line([
                m1,
                m2,
                "false".into(),
                "".into(),
                "".into(),
                "".into(),
                "".into(),
                "".into(),
            ]),
            CellOutcome::Failed => csv_line([
                m1,
                m2,
                "true".into(),
                "".into(),
                "".into(),
                "".into(),
                "".into(),
                "false".into(),
            ]),
            CellOutcome::Solved {
                x12,
                x21,
                r1,
                r2,
                converged,
            } => csv_line([
                m1,
                m2,
                "true".into(),
                sig6(x12),
                sig6(x21),
                sig6(r1),
                sig6(r2),
                converged.to_string(),
            ]),
        }
    }
}

fn solve_cell(m1: f64, m2: f64, mode: SweepMode, solver: RoundRobinConfig) -> CellOutcome {
    if m1 + m2 > 1.0 + POWER_SUM_SLACK {
        return CellOutcome::Infeasible;
    }
    let Ok(peace) = Scenario::peaceful(vec![m1, m2]) else {
        return CellOutcome::Infeasible;
    };
    let solved = match mode {
        SweepMode::OneAttacker => best_response(&peace, 0).and_then(|br| {
            let s = peace.with_row(0, &br.row)?;
            let rep = crate::analytic::converge_revenues(
                &s,
                crate::analytic::SolveMethod::DirectLinear,
                None,
            )?;
            Ok(CellOutcome::Solved {
                x12: br.row[1],
                x21: 0.0,
                r1: rep.densities[0],
                r2: rep.densities[1],
                converged: br.sweeps < MAX_ASCENT_SWEEPS,
            })
        }),
        SweepMode::TwoPool => {
            round_robin_equilibrium(&peace, solver).map(|t| CellOutcome::Solved {
                x12: t.final_x().get(0, 1),
                x21: t.final_x().get(1, 0),
                r1: t.densities()[0],
                r2: t.densities()[1],
                converged: t.converged,
            })
        }
    };
    solved.unwrap_or(CellOutcome::Failed)
}

/// Solves every cell in parallel; rows come back row-major (m1, then m2).
pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    let cells: Vec<(f64, f64)> = spec
        .m1
        .values()
        .into_iter()
        .flat_map(|a| spec.m2.values().into_iter().map(move |b| (a, b)))
        .collect();
    cells
        .par_iter()
        .map(|&(m1, m2)| SweepRow {
            m1,
            m2,
            outcome: solve_cell(m1, m2, spec.mode, spec.solver),
        })
        .collect()
}

pub fn write_sweep_csv<W: Write + ?Sized>(rows: &[SweepRow], out: &mut W) -> io::Result<()> {
    out.write_all(SWEEP_HEADER.as_bytes())?;
    for row in rows {
        out.write_all(row.to_csv().as_bytes())?;
    }
    Ok(())
}
