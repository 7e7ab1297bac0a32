//! The `pool-game` command line.
//!
//! Every subcommand prints CSV (header row, LF endings) to stdout or to
//! `--out FILE`. Human-oriented summaries go to stderr unless
//! `--format table` is chosen, in which case everything is printed as
//! aligned text. Pools are numbered from 0.
//!
//! Exit codes: [`EXIT_OK`], [`EXIT_USAGE`] for malformed flags and invalid
//! inputs, [`EXIT_NOT_CONVERGED`] when a single-instance solve does not
//! converge. Sweeps record failures per row instead.

pub mod config;
pub mod format;
pub mod sweep;

use std::ffi::OsString;
use std::fmt;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{converge_revenues, SolveMethod, DEFAULT_TOLERANCE};
use crate::closedform::symmetric_equilibrium;
use crate::error::Error;
use crate::gamesolve::{
    best_response, dilemma_matrix, round_robin_equilibrium, RoundRobinConfig, DEFAULT_MAX_CYCLES,
    DEFAULT_X_TOL, MAX_ASCENT_SWEEPS,
};
use crate::model::{validate_system, FeeSchedule, InfiltrationMatrix, Scenario};
use crate::simproto::{
    self, SimConfig, DEFAULT_BATCHES, DEFAULT_LAMBDA_FULL, DEFAULT_LAMBDA_PARTIAL, DEFAULT_STEPS,
};
use config::ConfigFile;
use format::{csv_line, row_field, sig6};
use sweep::{run_sweep, write_sweep_csv, GridRange, SweepMode, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

pub const DEFAULT_MINERS: usize = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "pool-game",
    version,
    about = "Block-withholding games between mining pools"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Solver tolerance (revenue residual for `converge`, rate change otherwise).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// RNG seed for `simulate`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Direct,
    Iterate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Converged revenue densities for fixed infiltration rates.
    Converge {
        /// Pool powers, e.g. `0.2,0.3`.
        #[arg(long, allow_hyphen_values = true)]
        powers: String,
        /// Infiltration rows separated by `;`, or `zero`.
        #[arg(long, default_value = "zero", allow_hyphen_values = true)]
        x: String,
        /// Per-pool fees, e.g. `0.01,0.02`.
        #[arg(long, allow_hyphen_values = true)]
        fees: Option<String>,
        #[arg(long, value_enum, default_value_t = Method::Direct)]
        method: Method,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
    },
    /// Optimal infiltration row for one pool, others fixed.
    BestResponse {
        #[arg(long, allow_hyphen_values = true)]
        powers: String,
        #[arg(long, default_value = "zero", allow_hyphen_values = true)]
        x: String,
        #[arg(long)]
        actor: usize,
    },
    /// Round-robin best responses until the rates settle.
    Equilibrium {
        #[arg(long, allow_hyphen_values = true)]
        powers: String,
        /// Starting infiltration rows.
        #[arg(
            long = "x0",
            alias = "x",
            default_value = "zero",
            allow_hyphen_values = true
        )]
        x0: String,
        #[arg(long, default_value_t = DEFAULT_MAX_CYCLES)]
        max_cycles: usize,
        /// Print every round instead of the final state.
        #[arg(long)]
        trace: bool,
    },
    /// Closed-form symmetric equilibrium of `p` equal pools.
    Symmetric {
        #[arg(long)]
        p: usize,
        #[arg(long, allow_hyphen_values = true)]
        mi: f64,
    },
    /// Two-pool attack / no-attack payoff matrix.
    Dilemma {
        #[arg(long, allow_hyphen_values = true)]
        m1: f64,
        #[arg(long, allow_hyphen_values = true)]
        m2: f64,
    },
    /// Grid over pool sizes.
    Sweep {
        #[arg(long, default_value = "one-attacker")]
        mode: SweepMode,
        /// Grid step used for axes not given explicitly (0.05 for quick runs).
        #[arg(long, default_value_t = sweep::DEFAULT_STEP)]
        step: f64,
        /// m1 axis as `start:stop[:step]`.
        #[arg(long)]
        m1: Option<GridRange>,
        /// m2 axis as `start:stop[:step]`.
        #[arg(long)]
        m2: Option<GridRange>,
        #[arg(long, default_value_t = DEFAULT_MAX_CYCLES)]
        max_cycles: usize,
    },
    /// Monte Carlo run of the pool protocol.
    Simulate {
        /// `key = value` file; flags override its entries.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        powers: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long)]
        miners: Option<usize>,
        /// Horizon including warm-up.
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        lambda_partial: Option<f64>,
        #[arg(long)]
        lambda_full: Option<f64>,
        #[arg(long)]
        batches: Option<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Model(Error),
    NotConverged(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Model(_) => EXIT_USAGE,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Model(Error::Validation(v)) => write!(f, "{}: {v}", v.constraint()),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::NotConverged(m) => write!(f, "not converged: {m}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => CliError::NotConverged(e.to_string()),
            other => CliError::Model(other),
        }
    }
}

impl From<crate::model::ValidationError> for CliError {
    fn from(e: crate::model::ValidationError) -> Self {
        CliError::Model(e.into())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// What a command produced. `status` is nonzero when the result is printed
/// but did not converge.
#[derive(Debug, Default)]
struct Output {
    body: String,
    summary: String,
    status: i32,
}

/// `"0.2,0.3"` to a power vector.
pub fn parse_powers(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad power {v:?}: {e}")))
        })
        .collect()
}

/// `"0,0.1;0.1,0"` (rows separated by `;`) or `zero`.
pub fn parse_matrix(s: &str, pools: usize) -> Result<InfiltrationMatrix, CliError> {
    if s.trim() == "zero" {
        return Ok(InfiltrationMatrix::zeros(pools));
    }
    let rows = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Usage(format!("bad rate {v:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InfiltrationMatrix::from_rows(rows)?)
}

fn scenario_from(powers: &str, x: &str) -> Result<Scenario, CliError> {
    let powers = parse_powers(powers)?;
    let x = parse_matrix(x, powers.len())?;
    Ok(validate_system(&powers, x)?)
}

fn render(format: Format, header: &[&str], rows: &[Vec<String>]) -> String {
    match format {
        Format::Csv => {
            let mut s = csv_line(header);
            for r in rows {
                s.push_str(&csv_line(r));
            }
            s
        }
        Format::Table => {
            let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for r in rows {
                for (w, v) in widths.iter_mut().zip(r) {
                    *w = (*w).max(v.len());
                }
            }
            let line = |cells: Vec<&str>| {
                let padded: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect();
                format!("{}\n", padded.join("  ").trim_end())
            };
            let mut s = line(header.to_vec());
            for r in rows {
                s.push_str(&line(r.iter().map(String::as_str).collect()));
            }
            s
        }
    }
}

fn cmd_converge(
    common: &CommonArgs,
    powers: &str,
    x: &str,
    fees: Option<&str>,
    method: Method,
    max_steps: usize,
) -> Result<Output, CliError> {
    let s = scenario_from(powers, x)?;
    let fees = fees
        .map(|f| parse_powers(f).and_then(|v| Ok(FeeSchedule::new(v)?)))
        .transpose()?;
    let method = match method {
        Method::Direct => SolveMethod::DirectLinear,
        Method::Iterate => {
            SolveMethod::iteration(max_steps, common.tol.unwrap_or(DEFAULT_TOLERANCE))
        }
    };
    let rep = converge_revenues(&s, method, fees.as_ref())?;
    let rows: Vec<Vec<String>> = (0..s.pool_count())
        .map(|i| {
            vec![
                i.to_string(),
                sig6(s.system().power(i)),
                sig6(rep.direct_rates[i]),
                sig6(rep.densities[i]),
                sig6(rep.solo_density),
                sig6(rep.residual),
                rep.iterations.to_string(),
            ]
        })
        .collect();
    let header = [
        "pool",
        "power",
        "R",
        "r",
        "solo_density",
        "residual",
        "iterations",
    ];
    Ok(Output {
        body: render(common.format, &header, &rows),
        ..Default::default()
    })
}

fn cmd_best_response(
    common: &CommonArgs,
    powers: &str,
    x: &str,
    actor: usize,
) -> Result<Output, CliError> {
    let s = scenario_from(powers, x)?;
    let br = best_response(&s, actor)?;
    let rows: Vec<Vec<String>> = (0..s.pool_count())
        .filter(|&j| j != actor)
        .map(|j| {
            vec![
                actor.to_string(),
                j.to_string(),
                sig6(br.row[j]),
                sig6(br.density),
                br.sweeps.to_string(),
            ]
        })
        .collect();
    let header = ["actor", "target", "x", "r", "sweeps"];
    let status = if br.sweeps >= MAX_ASCENT_SWEEPS {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    };
    Ok(Output {
        body: render(common.format, &header, &rows),
        summary: String::new(),
        status,
    })
}

fn cmd_equilibrium(
    common: &CommonArgs,
    powers: &str,
    x0: &str,
    max_cycles: usize,
    trace: bool,
) -> Result<Output, CliError> {
    let start = scenario_from(powers, x0)?;
    let config = RoundRobinConfig {
        max_cycles,
        x_tol: common.tol.unwrap_or(DEFAULT_X_TOL),
    };
    let t = round_robin_equilibrium(&start, config)?;
    let body = if trace {
        let rows: Vec<Vec<String>> = t
            .rounds
            .iter()
            .enumerate()
            .map(|(k, r)| {
                vec![
                    k.to_string(),
                    r.cycle.to_string(),
                    r.actor.to_string(),
                    row_field(&r.row),
                    sig6(r.report.densities[r.actor]),
                ]
            })
            .collect();
        render(
            common.format,
            &["round", "cycle", "actor", "row", "r_actor"],
            &rows,
        )
    } else {
        let rows: Vec<Vec<String>> = (0..start.pool_count())
            .map(|i| {
                vec![
                    i.to_string(),
                    sig6(start.system().power(i)),
                    sig6(t.densities()[i]),
                    row_field(t.final_x().row(i)),
                    t.converged.to_string(),
                    t.cycles.to_string(),
                ]
            })
            .collect();
        render(
            common.format,
            &["pool", "power", "r", "x_row", "converged", "cycles"],
            &rows,
        )
    };
    let (status, summary) = if t.converged {
        (EXIT_OK, String::new())
    } else {
        (
            EXIT_NOT_CONVERGED,
            format!("round robin did not settle within {} cycles\n", t.cycles),
        )
    };
    Ok(Output {
        body,
        summary,
        status,
    })
}

fn cmd_symmetric(common: &CommonArgs, p: usize, mi: f64) -> Result<Output, CliError> {
    let sol = symmetric_equilibrium(p, mi)?;
    let rows = vec![vec![p.to_string(), sig6(mi), sig6(sol.x), sig6(sol.r)]];
    Ok(Output {
        body: render(common.format, &["p", "mi", "x", "r"], &rows),
        ..Default::default()
    })
}

fn cmd_dilemma(common: &CommonArgs, m1: f64, m2: f64) -> Result<Output, CliError> {
    let d = dilemma_matrix(m1, m2)?;
    let label = |a: bool| if a { "attack" } else { "no" };
    let flags = format!(
        "attack dominant for pool 0: {}\nattack dominant for pool 1: {}\nattack/attack Pareto-dominated by no/no: {}\n",
        d.attack_dominant(0),
        d.attack_dominant(1),
        d.mutual_attack_pareto_dominated()
    );
    let (body, summary) = match common.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> =
                [(false, false), (false, true), (true, false), (true, true)]
                    .iter()
                    .map(|&(a, b)| {
                        let c = d.cell(a, b);
                        vec![
                            label(a).into(),
                            label(b).into(),
                            sig6(c.x12),
                            sig6(c.x21),
                            sig6(c.r1),
                            sig6(c.r2),
                        ]
                    })
                    .collect();
            (
                render(
                    Format::Csv,
                    &["pool0", "pool1", "x12", "x21", "r1", "r2"],
                    &rows,
                ),
                flags,
            )
        }
        Format::Table => {
            let pair = |a, b| {
                let c = d.cell(a, b);
                format!("({}, {})", sig6(c.r1), sig6(c.r2))
            };
            let rows = vec![
                vec![
                    "pool 0 no".to_string(),
                    pair(false, false),
                    pair(false, true),
                ],
                vec![
                    "pool 0 attack".to_string(),
                    pair(true, false),
                    pair(true, true),
                ],
            ];
            let mut body = render(Format::Table, &["", "pool 1 no", "pool 1 attack"], &rows);
            body.push_str(&flags);
            (body, String::new())
        }
    };
    let status = if d.equilibrium_converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    };
    Ok(Output {
        body,
        summary,
        status,
    })
}

fn cmd_sweep(
    common: &CommonArgs,
    mode: SweepMode,
    step: f64,
    m1: Option<GridRange>,
    m2: Option<GridRange>,
    max_cycles: usize,
) -> Result<Output, CliError> {
    let axis = GridRange::open_unit(step).map_err(CliError::Usage)?;
    let spec = SweepSpec {
        m1: m1.unwrap_or(axis),
        m2: m2.unwrap_or(axis),
        mode,
        solver: RoundRobinConfig {
            max_cycles,
            x_tol: common.tol.unwrap_or(DEFAULT_X_TOL),
        },
    };
    let rows = run_sweep(&spec);
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    let failed = rows
        .iter()
        .filter(|r| {
            !matches!(
                r.outcome,
                sweep::CellOutcome::Solved {
                    converged: true,
                    ..
                } | sweep::CellOutcome::Infeasible
            )
        })
        .count();
    Ok(Output {
        body: String::from_utf8(buf).expect("CSV is ASCII"),
        summary: format!("{} cells, {failed} not converged\n", rows.len()),
        status: EXIT_OK,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    common: &CommonArgs,
    config: Option<&PathBuf>,
    powers: Option<&str>,
    x: Option<&str>,
    miners: Option<usize>,
    steps: Option<u64>,
    lambda_partial: Option<f64>,
    lambda_full: Option<f64>,
    batches: Option<usize>,
) -> Result<Output, CliError> {
    let file = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            ConfigFile::parse(&text).map_err(CliError::Usage)?
        }
        None => ConfigFile::default(),
    };
    const KEYS: [&str; 8] = [
        "powers",
        "x",
        "miners",
        "steps",
        "seed",
        "lambda-partial",
        "lambda-full",
        "batches",
    ];
    if let Some(k) = file.keys().find(|k| !KEYS.contains(k)) {
        return Err(CliError::Usage(format!("unknown config key {k:?}")));
    }
    let usage = CliError::Usage;
    let powers = powers
        .or(file.get("powers"))
        .ok_or_else(|| CliError::Usage("simulate needs --powers or a config with powers".into()))?;
    let x = x.or(file.get("x")).unwrap_or("zero");
    let seed = match common.seed {
        Some(s) => s,
        None => file
            .parse_value("seed")
            .map_err(usage)?
            .ok_or_else(|| CliError::Usage("simulate needs --seed or a config with seed".into()))?,
    };
    let miners = miners
        .or(file.parse_value("miners").map_err(usage)?)
        .unwrap_or(DEFAULT_MINERS);
    let steps = steps
        .or(file.parse_value("steps").map_err(usage)?)
        .unwrap_or(DEFAULT_STEPS);
    let lp = lambda_partial
        .or(file.parse_value("lambda-partial").map_err(usage)?)
        .unwrap_or(DEFAULT_LAMBDA_PARTIAL);
    let lf = lambda_full
        .or(file.parse_value("lambda-full").map_err(usage)?)
        .unwrap_or(DEFAULT_LAMBDA_FULL);
    let batches = batches
        .or(file.parse_value("batches").map_err(usage)?)
        .unwrap_or(DEFAULT_BATCHES);

    let scenario = scenario_from(powers, x)?;
    let cfg = SimConfig::from_scenario(&scenario, miners)?
        .with_seed(seed)
        .with_steps(steps)
        .with_rates(lp, lf)
        .with_batches(batches);
    let realized = cfg.realized_scenario()?;
    let analytic = converge_revenues(&realized, SolveMethod::DirectLinear, None)?;
    let rep = simproto::run(&cfg)?;

    let mut groups: Vec<(String, simproto::DensityEstimate, f64)> = rep
        .pools
        .iter()
        .enumerate()
        .map(|(i, est)| (format!("pool{i}"), *est, analytic.densities[i]))
        .collect();
    if let Some(solo) = rep.solo {
        groups.push(("solo".into(), solo, analytic.solo_density));
    }
    let rows: Vec<Vec<String>> = groups
        .iter()
        .map(|(name, est, a)| {
            vec![
                name.clone(),
                est.miners.to_string(),
                sig6(est.mean),
                sig6(est.se),
                sig6(*a),
                sig6(est.z_score(*a)),
            ]
        })
        .collect();
    let max_z = groups
        .iter()
        .filter(|g| g.1.miners > 0)
        .map(|g| g.1.z_score(g.2).abs())
        .fold(0.0, f64::max);
    let summary = format!(
        "seed {seed}, {miners} miners, {steps} steps ({} warm-up), max |z| {}\n",
        rep.warmup,
        sig6(max_z)
    );
    let header = ["group", "miners", "empirical", "se", "analytic", "z"];
    Ok(Output {
        body: render(common.format, &header, &rows),
        summary,
        status: EXIT_OK,
    })
}

fn execute(cli: &Cli) -> Result<Output, CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Converge {
            powers,
            x,
            fees,
            method,
            max_steps,
        } => cmd_converge(c, powers, x, fees.as_deref(), *method, *max_steps),
        Command::BestResponse { powers, x, actor } => cmd_best_response(c, powers, x, *actor),
        Command::Equilibrium {
            powers,
            x0,
            max_cycles,
            trace,
        } => cmd_equilibrium(c, powers, x0, *max_cycles, *trace),
        Command::Symmetric { p, mi } => cmd_symmetric(c, *p, *mi),
        Command::Dilemma { m1, m2 } => cmd_dilemma(c, *m1, *m2),
        Command::Sweep {
            mode,
            step,
            m1,
            m2,
            max_cycles,
        } => cmd_sweep(c, *mode, *step, *m1, *m2, *max_cycles),
        Command::Simulate {
            config,
            powers,
            x,
            miners,
            steps,
            lambda_partial,
            lambda_full,
            batches,
        } => cmd_simulate(
            c,
            config.as_ref(),
            powers.as_deref(),
            x.as_deref(),
            *miners,
            *steps,
            *lambda_partial,
            *lambda_full,
            *batches,
        ),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let output = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, &output.body),
        None => out.write_all(output.body.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_IO;
    }
    let _ = err.write_all(output.summary.as_bytes());
    output.status
}
