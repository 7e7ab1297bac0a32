//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pool_game::analytic::{converge_revenues, SolveMethod};
use pool_game::cli::sweep::{run_sweep, CellOutcome, SweepMode, SweepSpec, COARSE_STEP};
use pool_game::closedform::symmetric_equilibrium;
use pool_game::gamesolve::{
    dilemma_matrix, round_robin_equilibrium, verify_equilibrium, RoundRobinConfig,
};
use pool_game::model::{validate_system, InfiltrationMatrix, Scenario};
use pool_game::simproto::{self, MinerRole, SimConfig};

type Check = Result<String, String>;

/// Name, time limit in seconds, check.
type Criterion = (&'static str, f64, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Revenue gains below this are rounding noise (the m1 = m2 = 0.5 cell sits
/// exactly at r = 1).
const GAIN_TOLERANCE: f64 = 1e-9;

fn no_attack_baseline() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s = common::random_scenario(&mut rng, 1..=10, false);
        let rep =
            converge_revenues(&s, SolveMethod::DirectLinear, None).map_err(|e| e.to_string())?;
        for r in rep.densities.iter().chain([&rep.solo_density]) {
            worst = worst.max((r - 1.0).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max |r - 1| = {worst:e}"))?;
    Ok(format!("100 systems, max |r - 1| = {worst:e}"))
}

fn conservation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let s = common::random_scenario(&mut rng, 1..=10, true);
        let rep =
            converge_revenues(&s, SolveMethod::DirectLinear, None).map_err(|e| e.to_string())?;
        worst = worst.max((rep.total_revenue(&s) - 1.0).abs());
    }
    ensure(worst <= 1e-10, || {
        format!("max conservation error {worst:e}")
    })?;
    Ok(format!("1000 instances, max error {worst:e}"))
}

fn convergence_lemma() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let s = common::random_scenario(&mut rng, 2..=10, true);
        let a =
            converge_revenues(&s, SolveMethod::DirectLinear, None).map_err(|e| e.to_string())?;
        let b = converge_revenues(&s, SolveMethod::iteration(1_000_000, 1e-12), None)
            .map_err(|e| e.to_string())?;
        for (x, y) in a.densities.iter().zip(&b.densities) {
            worst = worst.max((x - y).abs());
        }
        common::check_geometric_decay(&s)?;
    }
    ensure(worst <= 1e-10, || {
        format!("direct vs iterated differ by {worst:e}")
    })?;
    Ok(format!(
        "1000 instances, max disagreement {worst:e}, decay within spectral radius"
    ))
}

fn one_attacker_profitability() -> Check {
    let rows = run_sweep(&SweepSpec::full(SweepMode::OneAttacker, COARSE_STEP)?);
    let mut feasible = 0;
    let mut spot = None;
    for row in &rows {
        match row.outcome {
            CellOutcome::Infeasible => {}
            CellOutcome::Failed => {
                return Err(format!("solver failed at ({}, {})", row.m1, row.m2))
            }
            CellOutcome::Solved { x12, r1, r2, .. } => {
                feasible += 1;
                ensure(x12 > 0.0 && r1 > 1.0 && r2 < 1.0, || {
                    format!("({}, {}): x = {x12}, r1 = {r1}, r2 = {r2}", row.m1, row.m2)
                })?;
                if (row.m1, row.m2) == (0.2, 0.3) {
                    spot = Some((x12, r1, r2));
                }
            }
        }
    }
    let (x, r1, r2) = spot.ok_or("grid misses (0.2, 0.3)")?;
    ensure(
        (x - 0.0361).abs() <= 0.001
            && (r1 - 1.0173).abs() <= 0.0005
            && (r2 - 0.9260).abs() <= 0.0005,
        || format!("(0.2, 0.3): x = {x}, r1 = {r1}, r2 = {r2}"),
    )?;
    Ok(format!(
        "{feasible} feasible cells; (0.2, 0.3): x = {x:.6}, r1 = {r1:.6}, r2 = {r2:.6}"
    ))
}

fn no_attack_not_nash() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut smallest = f64::INFINITY;
    for _ in 0..100 {
        let s = common::random_scenario(&mut rng, 2..=6, false);
        let check = verify_equilibrium(&s, 0.0).map_err(|e| e.to_string())?;
        ensure(!check.is_nash && check.worst_gain > 0.0, || {
            format!("{:?} looks like an equilibrium", s.system())
        })?;
        smallest = smallest.min(check.worst_gain);
    }
    Ok(format!("100 systems, smallest deviation gain {smallest:e}"))
}

fn two_pool_cross_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut sizes = vec![0.2];
    sizes.extend((0..20).map(|_| rand::Rng::random_range(&mut rng, 0.05..0.5)));
    let mut worst: f64 = 0.0;
    for &mi in &sizes {
        let sym = symmetric_equilibrium(2, mi).map_err(|e| e.to_string())?;
        let t = round_robin_equilibrium(
            &Scenario::peaceful(vec![mi, mi]).unwrap(),
            RoundRobinConfig::default(),
        )
        .map_err(|e| e.to_string())?;
        ensure(t.converged, || {
            format!("round robin did not converge for m = {mi}")
        })?;
        for (i, j) in [(0, 1), (1, 0)] {
            worst = worst
                .max((t.final_x().get(i, j) - sym.x).abs())
                .max((t.densities()[i] - sym.r).abs());
        }
        if mi == 0.2 {
            let x = t.final_x().get(0, 1);
            let r = t.densities()[0];
            ensure(
                (x - 0.022800).abs() <= 1e-5 && (r - 0.928333).abs() <= 1e-5,
                || format!("x = {x}, r = {r}"),
            )?;
        }
    }
    ensure(worst <= 1e-5, || {
        format!("round robin vs closed form differ by {worst:e}")
    })?;
    Ok(format!(
        "m = 0.2 plus 20 random sizes, max difference {worst:e}"
    ))
}

fn equilibrium_inferiority() -> Check {
    let mut highest: f64 = 0.0;
    let mut boundary: f64 = 0.0;
    for p in 2..=10 {
        for total in [0.2, 0.5, 0.9] {
            let sol = symmetric_equilibrium(p, total / p as f64).map_err(|e| e.to_string())?;
            ensure(sol.r < 1.0, || {
                format!("p = {p}, p*m = {total}: r = {}", sol.r)
            })?;
            highest = highest.max(sol.r);
        }
        let edge = symmetric_equilibrium(p, 1.0 / p as f64).map_err(|e| e.to_string())?;
        boundary = boundary.max((edge.r - 1.0).abs());
    }
    ensure(boundary <= 1e-9, || {
        format!("boundary r off by {boundary:e}")
    })?;
    Ok(format!(
        "highest interior r = {highest:.6}, boundary |r - 1| = {boundary:e}"
    ))
}

fn prisoners_dilemma() -> Check {
    let d = dilemma_matrix(0.2, 0.2).map_err(|e| e.to_string())?;
    ensure(d.attack_dominant(0) && d.attack_dominant(1), || {
        "attack is not dominant".into()
    })?;
    ensure(d.mutual_attack_pareto_dominated(), || {
        "attack/attack is not Pareto-dominated".into()
    })?;
    let peace = d.cell(false, false);
    let one = d.cell(true, false);
    let war = d.cell(true, true);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-3;
    ensure(peace.r1 == 1.0 && peace.r2 == 1.0, || {
        format!("no/no = {peace:?}")
    })?;
    ensure(close(one.r1, 1.0114) && close(one.r2, 0.9151), || {
        format!("attack/no = {one:?}")
    })?;
    ensure(close(war.r1, 0.9283) && close(war.r2, 0.9283), || {
        format!("attack/attack = {war:?}")
    })?;
    Ok(format!(
        "attack/no = ({:.4}, {:.4}), attack/attack = ({:.4}, {:.4})",
        one.r1, one.r2, war.r1, war.r2
    ))
}

fn majority_gain_region() -> Check {
    let rows = run_sweep(&SweepSpec::full(SweepMode::TwoPool, COARSE_STEP)?);
    let (mut gains, mut abstains) = (0, 0);
    for row in &rows {
        match row.outcome {
            CellOutcome::Infeasible => {}
            CellOutcome::Failed => {
                return Err(format!("solver failed at ({}, {})", row.m1, row.m2))
            }
            CellOutcome::Solved {
                x12,
                x21,
                r1,
                r2,
                converged,
            } => {
                let at = || format!("({}, {})", row.m1, row.m2);
                ensure(converged, || format!("{} did not converge", at()))?;
                ensure(r1 <= 1.0 + GAIN_TOLERANCE || row.m1 > 0.5, || {
                    format!("r1 = {r1} at {}", at())
                })?;
                ensure(r2 <= 1.0 + GAIN_TOLERANCE || row.m2 > 0.5, || {
                    format!("r2 = {r2} at {}", at())
                })?;
                ensure(x12 > 0.0 || row.m2 > 0.75, || {
                    format!("x12 = 0 at {}", at())
                })?;
                ensure(x21 > 0.0 || row.m1 > 0.75, || {
                    format!("x21 = 0 at {}", at())
                })?;
                gains +=
                    (r1 > 1.0 + GAIN_TOLERANCE) as usize + (r2 > 1.0 + GAIN_TOLERANCE) as usize;
                abstains += (x12 == 0.0) as usize + (x21 == 0.0) as usize;
            }
        }
    }
    Ok(format!(
        "{gains} pool-cells above 1 (all majority), {abstains} abstaining (all against > 0.75)"
    ))
}

fn monte_carlo() -> Check {
    let eq = symmetric_equilibrium(2, 0.2).map_err(|e| e.to_string())?;
    let attacked = validate_system(&[0.2, 0.2], InfiltrationMatrix::two_pool(eq.x, eq.x)).unwrap();
    let peace = Scenario::peaceful(vec![0.2, 0.2]).unwrap();
    let mut lines = Vec::new();
    for (name, s) in [("equilibrium", attacked), ("no-attack", peace)] {
        let cfg = SimConfig::from_scenario(&s, 1000)
            .map_err(|e| e.to_string())?
            .with_seed(10)
            .with_steps(100_000);
        let expected = converge_revenues(
            &cfg.realized_scenario().unwrap(),
            SolveMethod::DirectLinear,
            None,
        )
        .unwrap();
        let rep = simproto::run(&cfg).map_err(|e| e.to_string())?;
        let mut groups: Vec<_> = rep
            .pools
            .iter()
            .copied()
            .zip(expected.densities.iter().copied())
            .collect();
        groups.push((rep.solo.unwrap(), expected.solo_density));
        for (est, want) in groups {
            ensure(est.agrees_with(want, 0.01, 4.0), || {
                format!(
                    "{name}: {:.5} +- {:.5} vs analytic {want:.5}",
                    est.mean, est.se
                )
            })?;
        }
        lines.push(format!(
            "{name} pool 0 {:.4} +- {:.4} (analytic {:.4})",
            rep.pools[0].mean, rep.pools[0].se, expected.densities[0]
        ));
    }
    Ok(lines.join("; "))
}

fn classical_withholding() -> Check {
    // A concurrent honest peer shares the withholder's pool payouts, so the
    // loss shows up against a counterfactual run where the same miner, with
    // the same random draws, stays honest.
    let honest = SimConfig::from_scenario(&Scenario::peaceful(vec![0.2, 0.3]).unwrap(), 1000)
        .map_err(|e| e.to_string())?
        .with_seed(11)
        .with_steps(100_000);
    let mut cheating = honest.clone();
    let me = cheating
        .roles
        .iter()
        .position(|r| *r == MinerRole::Honest { pool: 0 })
        .unwrap();
    cheating.roles[me] = MinerRole::Withholding { pool: 0 };

    let a = simproto::run(&cheating).map_err(|e| e.to_string())?;
    let b = simproto::run(&honest).map_err(|e| e.to_string())?;
    let diff = a.paired_difference(&b, &[me]);
    let z = diff.mean / diff.se;
    ensure(z < -4.0, || {
        format!(
            "withholder vs itself honest: {:.5} +- {:.5}",
            diff.mean, diff.se
        )
    })?;

    // Reported only: the peers' expected density equals the withholder's.
    let peers = a.miners_where(|r| r == MinerRole::Honest { pool: 0 });
    let peer = a.group(&peers);
    Ok(format!(
        "loss {:.5} +- {:.5} (z = {z:.1}); withholder {:.5}, concurrent peers {:.5}",
        diff.mean,
        diff.se,
        a.group(&[me]).mean,
        peer.mean
    ))
}

fn determinism() -> Check {
    let capture = |args: &[&str]| {
        let mut out = Vec::new();
        let code = pool_game::cli::run(
            std::iter::once("pool-game").chain(args.iter().copied()),
            &mut out,
            &mut Vec::new(),
        );
        (code, out)
    };
    let sim = [
        "simulate",
        "--powers",
        "0.2,0.2",
        "--x",
        "0,0.0228;0.0228,0",
        "--seed",
        "12",
        "--steps",
        "20000",
    ];
    let sweep = ["sweep", "--mode", "two-pool", "--step", "0.05"];
    for args in [&sim[..], &sweep[..]] {
        let (c1, a) = capture(args);
        let (c2, b) = capture(args);
        ensure(c1 == 0 && c2 == 0, || format!("{} failed", args[0]))?;
        ensure(a == b, || {
            format!("{} output differs between runs", args[0])
        })?;
    }
    Ok("simulate and sweep CSV byte-identical across runs".into())
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("no-attack baseline", 1.0, no_attack_baseline),
        ("conservation", 5.0, conservation),
        ("convergence lemma", 10.0, convergence_lemma),
        (
            "one-attacker profitability",
            30.0,
            one_attacker_profitability,
        ),
        ("no-attack is not Nash", f64::INFINITY, no_attack_not_nash),
        (
            "two-pool equilibrium cross-check",
            10.0,
            two_pool_cross_check,
        ),
        (
            "equilibrium inferiority",
            f64::INFINITY,
            equilibrium_inferiority,
        ),
        (
            "prisoner's dilemma structure",
            f64::INFINITY,
            prisoners_dilemma,
        ),
        ("majority-gain region", f64::INFINITY, majority_gain_region),
        ("Monte Carlo validation", 60.0, monte_carlo),
        (
            "classical withholding",
            f64::INFINITY,
            classical_withholding,
        ),
        ("determinism", f64::INFINITY, determinism),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let result = match result {
            Ok(detail) if secs > *budget => {
                Err(format!("{detail}; took {secs:.1} s, limit {budget} s"))
            }
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2} s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2} s): {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
