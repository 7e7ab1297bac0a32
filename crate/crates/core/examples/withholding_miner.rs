//! A single miner withholding full proofs inside its own pool loses money.
//!
//! The same seed is run twice, once with the miner honest, so both runs see
//! the same random draws and the difference is measured precisely.

use pool_game::model::Scenario;
use pool_game::simproto::{run, MinerRole, SimConfig};

fn main() -> pool_game::Result<()> {
    let honest = SimConfig::from_scenario(&Scenario::peaceful(vec![0.2, 0.3])?, 1000)?.with_seed(7);
    let mut withholding = honest.clone();
    let me = withholding
        .roles
        .iter()
        .position(|r| *r == MinerRole::Honest { pool: 0 })
        .unwrap();
    withholding.roles[me] = MinerRole::Withholding { pool: 0 };

    let a = run(&withholding)?;
    let b = run(&honest)?;
    let d = a.paired_difference(&b, &[me]);
    println!("withholder density {:.5}", a.group(&[me]).mean);
    println!("same miner honest  {:.5}", b.group(&[me]).mean);
    println!(
        "difference {:.5} +- {:.5} (z = {:.1})",
        d.mean,
        d.se,
        d.mean / d.se
    );
    Ok(())
}
