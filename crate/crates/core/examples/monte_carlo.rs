//! Simulated pools at the two-pool equilibrium versus the analytic densities.

use pool_game::analytic::{converge_revenues, SolveMethod};
use pool_game::closedform::symmetric_equilibrium;
use pool_game::model::{validate_system, InfiltrationMatrix};
use pool_game::simproto::{run, SimConfig};

fn main() -> pool_game::Result<()> {
    let eq = symmetric_equilibrium(2, 0.2)?;
    let s = validate_system(&[0.2, 0.2], InfiltrationMatrix::two_pool(eq.x, eq.x))?;
    let cfg = SimConfig::from_scenario(&s, 1000)?
        .with_seed(2024)
        .with_steps(100_000);

    let realized = cfg.realized_scenario()?;
    let expected = converge_revenues(&realized, SolveMethod::DirectLinear, None)?;
    let rep = run(&cfg)?;

    for (i, est) in rep.pools.iter().enumerate() {
        let a = expected.densities[i];
        println!(
            "pool {i}: {:.5} +- {:.5} (analytic {a:.5}, z = {:.2})",
            est.mean,
            est.se,
            est.z_score(a)
        );
    }
    if let Some(solo) = rep.solo {
        println!(
            "solo:   {:.5} +- {:.5} (analytic {:.5})",
            solo.mean, solo.se, expected.solo_density
        );
    }
    Ok(())
}
