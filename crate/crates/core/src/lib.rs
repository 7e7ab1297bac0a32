//! Mining pools attacking each other with block withholding.
//!
//! A pool can register some of its own miners inside a victim pool. Those
//! miners submit partial proofs of work, so they collect a share of the
//! victim's payouts, but they discard every full proof. The victim's revenue
//! is diluted, the attacker's hashing power is partly wasted, and difficulty
//! adjustment redistributes the lost power across everyone.
//!
//! This crate computes what that game pays:
//!
//! - [`model`]: pool powers, infiltration matrices and their feasibility rules.
//! - [`analytic`]: direct mining rates and converged revenue densities.
//! - [`gamesolve`]: best responses, round-robin dynamics to a Nash
//!   equilibrium, equilibrium checks and the two-pool prisoner's dilemma.
//! - [`closedform`]: closed-form one-attacker and symmetric `p`-pool solutions.
//! - [`simproto`]: a seeded step-by-step protocol simulator that checks the
//!   continuous analysis by Monte Carlo.
//! - [`cli`]: CSV output, parameter sweeps and the `pool-game` command line.
//!
//! Total mining power is normalized to 1. A revenue density of 1 is what a
//! miner earns mining solo in a network with no attacks.
//!
//! ```
//! use pool_game::analytic::{converge_revenues, SolveMethod};
//! use pool_game::model::{validate_system, InfiltrationMatrix};
//!
//! let s = validate_system(&[0.2, 0.3], InfiltrationMatrix::two_pool(0.1, 0.1)).unwrap();
//! let rep = converge_revenues(&s, SolveMethod::DirectLinear, None).unwrap();
//! assert!((rep.densities[0] - 15.0 / 22.0).abs() < 1e-12);
//! ```

pub mod analytic;
pub mod cli;
pub mod closedform;
pub mod error;
pub mod gamesolve;
pub mod model;
pub mod optimize;
pub mod simproto;

pub use error::{Error, Result};
