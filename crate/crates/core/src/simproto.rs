//! Step-by-step stochastic simulation of pools, honest miners and block
//! withholding.
//!
//! Every step each miner draws a Poisson number of partial proofs and a
//! Poisson number of full proofs. What happens to them depends on its role:
//!
//! - solo miners publish their full proofs and keep the reward;
//! - honest pool miners hand both kinds to their pool, which publishes the
//!   full proofs;
//! - withholding miners and infiltrators hand over partial proofs only and
//!   drop every full proof;
//! - an infiltrator's payout from its victim goes to its home pool, which
//!   adds it to its revenue in the next step.
//!
//! A pool splits its step revenue across its registered miners in
//! proportion to their partial proofs. Difficulty is modeled as exact
//! normalization: a full proof pays `1 / (lambda_full * publishers)`, so the
//! expected revenue of the whole network is 1 per step no matter how much
//! power is withheld.
//!
//! Every miner owns a ChaCha8 stream keyed by the run seed with the miner's
//! index as stream id. Adding or removing miners does not change the draws
//! of the others, and equal seeds give bit-identical runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{InfiltrationMatrix, PoolSystem, Scenario};

pub const DEFAULT_LAMBDA_PARTIAL: f64 = 10.0;
pub const DEFAULT_LAMBDA_FULL: f64 = 0.01;
pub const DEFAULT_STEPS: u64 = 100_000;
pub const DEFAULT_BATCHES: usize = 50;
/// Warm-up used when the infiltration graph has a cycle and revenue only
/// converges geometrically.
pub const CYCLIC_WARMUP: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MinerRole {
    Solo,
    Honest {
        pool: usize,
    },
    /// Registered at `pool`, withholds every full proof and keeps its payout.
    Withholding {
        pool: usize,
    },
    /// Loyal to `owner`, registered at both pools, withholds inside `victim`.
    Infiltrator {
        owner: usize,
        victim: usize,
    },
    /// Loyal to `owner` and mines honestly there, while `host` believes the
    /// miner is its own infiltrator. The host's payouts go to `owner`.
    DoubleAgent {
        owner: usize,
        host: usize,
    },
}

impl MinerRole {
    /// Pool whose members' density this miner counts towards.
    pub fn loyal_pool(self) -> Option<usize> {
        match self {
            MinerRole::Honest { pool } => Some(pool),
            MinerRole::Infiltrator { owner, .. } | MinerRole::DoubleAgent { owner, .. } => {
                Some(owner)
            }
            MinerRole::Solo | MinerRole::Withholding { .. } => None,
        }
    }

    pub fn publishes(self) -> bool {
        matches!(
            self,
            MinerRole::Solo | MinerRole::Honest { .. } | MinerRole::DoubleAgent { .. }
        )
    }

    fn pools(self) -> Vec<usize> {
        match self {
            MinerRole::Solo => vec![],
            MinerRole::Honest { pool } | MinerRole::Withholding { pool } => vec![pool],
            MinerRole::Infiltrator { owner, victim } => vec![owner, victim],
            MinerRole::DoubleAgent { owner, host } => vec![owner, host],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub pools: usize,
    /// One entry per unit miner. Total power 1 is split evenly among them.
    pub roles: Vec<MinerRole>,
    pub lambda_partial: f64,
    pub lambda_full: f64,
    pub seed: u64,
    /// Horizon including warm-up.
    pub steps: u64,
    /// Batches used for the batch-means standard error.
    pub batches: usize,
}

impl SimConfig {
    pub fn new(pools: usize, roles: Vec<MinerRole>) -> Self {
        Self {
            pools,
            roles,
            lambda_partial: DEFAULT_LAMBDA_PARTIAL,
            lambda_full: DEFAULT_LAMBDA_FULL,
            seed: 0,
            steps: DEFAULT_STEPS,
            batches: DEFAULT_BATCHES,
        }
    }

    /// Discretizes a scenario to `miners` unit miners.
    ///
    /// Pool sizes and infiltration rates are rounded half-to-even to whole
    /// miners. Pool `i`'s infiltrators come first among its miners, ordered
    /// by victim, followed by its honest miners; solo miners come last.
    pub fn from_scenario(scenario: &Scenario, miners: usize) -> Result<Self> {
        let n = miners as f64;
        let p = scenario.pool_count();
        let mut roles = Vec::with_capacity(miners);
        for i in 0..p {
            let loyal = (scenario.system().power(i) * n).round_ties_even() as usize;
            let mut used = 0;
            for j in 0..p {
                let k = (scenario.infiltration().get(i, j) * n).round_ties_even() as usize;
                roles.extend(std::iter::repeat_n(
                    MinerRole::Infiltrator {
                        owner: i,
                        victim: j,
                    },
                    k,
                ));
                used += k;
            }
            if used >= loyal {
                return Err(Error::SimConfig(format!(
                    "pool {i} has {loyal} miners but {used} infiltrators after rounding"
                )));
            }
            roles.extend(std::iter::repeat_n(
                MinerRole::Honest { pool: i },
                loyal - used,
            ));
        }
        if roles.len() > miners {
            return Err(Error::SimConfig(format!(
                "rounded pools need {} of {miners} miners",
                roles.len()
            )));
        }
        roles.resize(miners, MinerRole::Solo);
        Ok(Self::new(p, roles))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_rates(mut self, lambda_partial: f64, lambda_full: f64) -> Self {
        self.lambda_partial = lambda_partial;
        self.lambda_full = lambda_full;
        self
    }

    pub fn with_batches(mut self, batches: usize) -> Self {
        self.batches = batches;
        self
    }

    pub fn miners_per_unit(&self) -> usize {
        self.roles.len()
    }

    pub fn publishers(&self) -> usize {
        self.roles.iter().filter(|r| r.publishes()).count()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::SimConfig(msg));
        if self.roles.is_empty() {
            return bad("no miners".into());
        }
        if !(self.lambda_full > 0.0 && self.lambda_full.is_finite()) {
            return bad(format!(
                "lambda_full must be positive, got {}",
                self.lambda_full
            ));
        }
        if !(self.lambda_partial > self.lambda_full && self.lambda_partial.is_finite()) {
            return bad(format!(
                "lambda_partial ({}) must exceed lambda_full ({})",
                self.lambda_partial, self.lambda_full
            ));
        }
        for (w, role) in self.roles.iter().enumerate() {
            if role.pools().iter().any(|&i| i >= self.pools) {
                return bad(format!(
                    "miner {w} refers to a pool outside 0..{}",
                    self.pools
                ));
            }
            match *role {
                MinerRole::Infiltrator { owner, victim } if owner == victim => {
                    return bad(format!("miner {w} infiltrates its own pool"));
                }
                MinerRole::DoubleAgent { owner, host } if owner == host => {
                    return bad(format!("miner {w} is a double agent inside its own pool"));
                }
                _ => {}
            }
        }
        if self.publishers() == 0 {
            return bad("no miner publishes full proofs".into());
        }
        if self.batches < 2 {
            return bad("at least two batches are needed for a standard error".into());
        }
        if self.steps < self.warmup() + self.batches as u64 {
            return bad(format!(
                "{} steps leave fewer than one step per batch after {} warm-up steps",
                self.steps,
                self.warmup()
            ));
        }
        Ok(())
    }

    /// Steps discarded before measuring: the longest chain of pools each
    /// infiltrating the next, or [`CYCLIC_WARMUP`] when the chain loops.
    pub fn warmup(&self) -> u64 {
        let mut edges = vec![vec![false; self.pools]; self.pools];
        for role in &self.roles {
            match *role {
                MinerRole::Infiltrator { owner, victim }
                    if owner < self.pools && victim < self.pools =>
                {
                    edges[owner][victim] = true
                }
                MinerRole::DoubleAgent { owner, host }
                    if owner < self.pools && host < self.pools =>
                {
                    edges[host][owner] = true
                }
                _ => {}
            }
        }
        match longest_chain(&edges) {
            Some(len) => len as u64,
            None => CYCLIC_WARMUP.max(self.pools as u64),
        }
    }

    /// The pool game instance this miner assignment realizes.
    ///
    /// Only defined for pure pool-game profiles (solo, honest and
    /// infiltrator roles).
    pub fn realized_scenario(&self) -> Result<Scenario> {
        let n = self.miners_per_unit() as f64;
        let mut loyal = vec![0usize; self.pools];
        let mut infiltrators = vec![vec![0usize; self.pools]; self.pools];
        for role in &self.roles {
            match *role {
                MinerRole::Solo => {}
                MinerRole::Honest { pool } => loyal[pool] += 1,
                MinerRole::Infiltrator { owner, victim } => {
                    loyal[owner] += 1;
                    infiltrators[owner][victim] += 1;
                }
                _ => {
                    return Err(Error::SimConfig(
                        "profile has roles outside the pool game".into(),
                    ))
                }
            }
        }
        let system = PoolSystem::new(loyal.iter().map(|&c| c as f64 / n).collect())?;
        let x = infiltrators
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / n).collect())
            .collect();
        Ok(Scenario::new(system, InfiltrationMatrix::from_rows(x)?)?)
    }
}

// None when the graph has a cycle.
fn longest_chain(edges: &[Vec<bool>]) -> Option<usize> {
    fn visit(v: usize, edges: &[Vec<bool>], state: &mut [u8], depth: &mut [usize]) -> bool {
        match state[v] {
            1 => return false,
            2 => return true,
            _ => {}
        }
        state[v] = 1;
        let mut best = 0;
        for (u, &e) in edges[v].iter().enumerate() {
            if e {
                if !visit(u, edges, state, depth) {
                    return false;
                }
                best = best.max(depth[u] + 1);
            }
        }
        depth[v] = best;
        state[v] = 2;
        true
    }
    let n = edges.len();
    let mut state = vec![0u8; n];
    let mut depth = vec![0usize; n];
    for v in 0..n {
        if !visit(v, edges, &mut state, &mut depth) {
            return None;
        }
    }
    Some(depth.into_iter().max().unwrap_or(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Payee {
    Miner(usize),
    Pool(usize),
}

/// Mutable simulation state. Single-threaded; run separate worlds for
/// separate seeds.
#[derive(Debug, Clone)]
pub struct SimWorld {
    config: SimConfig,
    streams: Vec<ChaCha8Rng>,
    partial_dist: Poisson<f64>,
    full_dist: Poisson<f64>,
    reward: f64,
    solo: Vec<usize>,
    members: Vec<Vec<(usize, Payee)>>,
    publishers: Vec<Vec<usize>>,
    partial: Vec<f64>,
    full: Vec<f64>,
    ledger: Vec<f64>,
    last_payout: Vec<f64>,
    pending: Vec<f64>,
    carry: Vec<f64>,
    last_infiltration_income: Vec<f64>,
    published_blocks: Vec<u64>,
    published_revenue: f64,
    step: u64,
}

impl SimWorld {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let n = config.miners_per_unit();
        let p = config.pools;
        let streams = (0..n)
            .map(|w| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(w as u64);
                rng
            })
            .collect();
        let poisson = |l: f64| Poisson::new(l).map_err(|e| Error::SimConfig(e.to_string()));
        let partial_dist = poisson(config.lambda_partial)?;
        let full_dist = poisson(config.lambda_full)?;

        let mut solo = Vec::new();
        let mut members = vec![Vec::new(); p];
        let mut publishers = vec![Vec::new(); p];
        for (w, role) in config.roles.iter().enumerate() {
            match *role {
                MinerRole::Solo => solo.push(w),
                MinerRole::Honest { pool } => {
                    members[pool].push((w, Payee::Miner(w)));
                    publishers[pool].push(w);
                }
                MinerRole::Withholding { pool } => members[pool].push((w, Payee::Miner(w))),
                MinerRole::Infiltrator { owner, victim } => {
                    members[owner].push((w, Payee::Miner(w)));
                    members[victim].push((w, Payee::Pool(owner)));
                }
                MinerRole::DoubleAgent { owner, host } => {
                    members[owner].push((w, Payee::Miner(w)));
                    publishers[owner].push(w);
                    members[host].push((w, Payee::Pool(owner)));
                }
            }
        }
        let reward = 1.0 / (config.lambda_full * config.publishers() as f64);

        Ok(Self {
            streams,
            partial_dist,
            full_dist,
            reward,
            solo,
            members,
            publishers,
            partial: vec![0.0; n],
            full: vec![0.0; n],
            ledger: vec![0.0; n],
            last_payout: vec![0.0; n],
            pending: vec![0.0; p],
            carry: vec![0.0; p],
            last_infiltration_income: vec![0.0; p],
            published_blocks: vec![0; p + 1],
            published_revenue: 0.0,
            step: 0,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Reward paid for one published full proof.
    pub fn block_reward(&self) -> f64 {
        self.reward
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Cumulative revenue credited to each miner.
    pub fn ledger(&self) -> &[f64] {
        &self.ledger
    }

    /// What each miner was credited in the most recent step.
    pub fn last_payouts(&self) -> &[f64] {
        &self.last_payout
    }

    /// Infiltration income each pool added to its revenue in the most recent step.
    pub fn last_infiltration_income(&self) -> &[f64] {
        &self.last_infiltration_income
    }

    /// Full proofs published so far through each pool; the last entry counts solo miners.
    pub fn published_blocks(&self) -> &[u64] {
        &self.published_blocks
    }

    pub fn published_revenue(&self) -> f64 {
        self.published_revenue
    }

    pub fn credited_revenue(&self) -> f64 {
        self.ledger.iter().sum()
    }

    /// Revenue earned but not yet credited to a miner: infiltration income
    /// awaiting the next step plus revenue of pools that saw no partial proofs.
    pub fn in_flight(&self) -> f64 {
        self.pending.iter().sum::<f64>() + self.carry.iter().sum::<f64>()
    }

    pub fn step(&mut self) {
        for (w, rng) in self.streams.iter_mut().enumerate() {
            self.partial[w] = self.partial_dist.sample(rng);
            self.full[w] = self.full_dist.sample(rng);
        }
        self.last_payout.fill(0.0);

        let p = self.config.pools;
        for &w in &self.solo {
            let amount = self.full[w] * self.reward;
            self.ledger[w] += amount;
            self.last_payout[w] = amount;
            self.published_revenue += amount;
            self.published_blocks[p] += self.full[w] as u64;
        }

        let mut next_pending = vec![0.0; p];
        for i in 0..p {
            let income = self.pending[i];
            self.last_infiltration_income[i] = income;
            let mut revenue = income + self.carry[i];
            for &w in &self.publishers[i] {
                let amount = self.full[w] * self.reward;
                revenue += amount;
                self.published_revenue += amount;
                self.published_blocks[i] += self.full[w] as u64;
            }
            let shares: f64 = self.members[i].iter().map(|&(w, _)| self.partial[w]).sum();
            if shares == 0.0 {
                self.carry[i] = revenue;
                continue;
            }
            self.carry[i] = 0.0;
            for &(w, payee) in &self.members[i] {
                let amount = revenue * self.partial[w] / shares;
                match payee {
                    Payee::Miner(m) => {
                        self.ledger[m] += amount;
                        self.last_payout[m] += amount;
                    }
                    Payee::Pool(k) => next_pending[k] += amount,
                }
            }
        }
        self.pending = next_pending;
        self.step += 1;
    }
}

/// Mean revenue density of a group of miners with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub miners: usize,
    pub mean: f64,
    pub se: f64,
}

impl DensityEstimate {
    pub fn z_score(&self, expected: f64) -> f64 {
        (self.mean - expected) / self.se
    }

    /// Within `max(abs_tol, sigmas * se)` of `expected`.
    pub fn agrees_with(&self, expected: f64, abs_tol: f64, sigmas: f64) -> bool {
        (self.mean - expected).abs() <= abs_tol.max(sigmas * self.se)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Density of each pool's loyal miners.
    pub pools: Vec<DensityEstimate>,
    pub solo: Option<DensityEstimate>,
    pub steps: u64,
    pub warmup: u64,
    pub miners_per_unit: usize,
    roles: Vec<MinerRole>,
    batch_steps: Vec<u64>,
    // miner-major: batch_revenue[w * batches + b]
    batch_revenue: Vec<f64>,
}

impl SimReport {
    pub fn measured_steps(&self) -> u64 {
        self.batch_steps.iter().sum()
    }

    pub fn roles(&self) -> &[MinerRole] {
        &self.roles
    }

    pub fn miners_where(&self, pred: impl Fn(MinerRole) -> bool) -> Vec<usize> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| pred(**r))
            .map(|(w, _)| w)
            .collect()
    }

    fn batch_densities(&self, group: &[usize]) -> Vec<f64> {
        let b = self.batch_steps.len();
        let scale = self.miners_per_unit as f64 / group.len() as f64;
        (0..b)
            .map(|k| {
                let total: f64 = group.iter().map(|&w| self.batch_revenue[w * b + k]).sum();
                total * scale / self.batch_steps[k] as f64
            })
            .collect()
    }

    /// Density of an arbitrary set of miners.
    pub fn group(&self, group: &[usize]) -> DensityEstimate {
        assert!(!group.is_empty(), "empty miner group");
        let total: f64 = group.iter().map(|&w| self.miner_revenue(w)).sum();
        let mean =
            total * self.miners_per_unit as f64 / group.len() as f64 / self.measured_steps() as f64;
        DensityEstimate {
            miners: group.len(),
            mean,
            se: batch_se(&self.batch_densities(group)),
        }
    }

    /// Measured revenue of one miner (warm-up excluded).
    pub fn miner_revenue(&self, miner: usize) -> f64 {
        let b = self.batch_steps.len();
        self.batch_revenue[miner * b..(miner + 1) * b].iter().sum()
    }

    /// Density of `group` in `self` minus its density in `other`, with the
    /// standard error of the batch-wise difference. Both runs must share
    /// seed, horizon and batching so that batches pair up.
    pub fn paired_difference(&self, other: &SimReport, group: &[usize]) -> DensityEstimate {
        assert_eq!(
            self.batch_steps, other.batch_steps,
            "runs are not batch-aligned"
        );
        let a = self.group(group);
        let b = other.group(group);
        let diffs: Vec<f64> = self
            .batch_densities(group)
            .iter()
            .zip(other.batch_densities(group))
            .map(|(x, y)| x - y)
            .collect();
        DensityEstimate {
            miners: group.len(),
            mean: a.mean - b.mean,
            se: batch_se(&diffs),
        }
    }
}

fn batch_se(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Runs a configuration to its horizon and summarizes densities.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    let mut world = SimWorld::new(config.clone())?;
    let warmup = config.warmup();
    for _ in 0..warmup {
        world.step();
    }

    let measured = config.steps - warmup;
    let batches = config.batches;
    let n = config.miners_per_unit();
    let mut batch_steps = vec![0u64; batches];
    let mut batch_revenue = vec![0.0; n * batches];
    for k in 0..measured {
        let b = (k as u128 * batches as u128 / measured as u128) as usize;
        world.step();
        batch_steps[b] += 1;
        for (w, &pay) in world.last_payouts().iter().enumerate() {
            batch_revenue[w * batches + b] += pay;
        }
    }

    let mut report = SimReport {
        pools: Vec::new(),
        solo: None,
        steps: config.steps,
        warmup,
        miners_per_unit: n,
        roles: config.roles.clone(),
        batch_steps,
        batch_revenue,
    };
    report.pools = (0..config.pools)
        .map(|i| {
            let group = report.miners_where(|r| r.loyal_pool() == Some(i));
            if group.is_empty() {
                DensityEstimate {
                    miners: 0,
                    mean: 0.0,
                    se: 0.0,
                }
            } else {
                report.group(&group)
            }
        })
        .collect();
    let solo = report.miners_where(|r| r == MinerRole::Solo);
    report.solo = (!solo.is_empty()).then(|| report.group(&solo));
    Ok(report)
}
