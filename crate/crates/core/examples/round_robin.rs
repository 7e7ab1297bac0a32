//! Pools take turns best-responding until nobody wants to move.

use pool_game::gamesolve::{equilibrium_from_peace, verify_equilibrium, RoundRobinConfig};
use pool_game::model::PoolSystem;

fn main() -> pool_game::Result<()> {
    let system = PoolSystem::new(vec![0.2, 0.3, 0.1])?;
    let trace = equilibrium_from_peace(&system, RoundRobinConfig::default())?;
    for round in trace.rounds.iter().take(6) {
        println!(
            "cycle {} pool {} -> row {:?}",
            round.cycle, round.actor, round.row
        );
    }
    println!(
        "converged: {} after {} cycles",
        trace.converged, trace.cycles
    );
    println!("final x:\n{}", trace.final_x());
    println!("densities: {:?}", trace.densities());

    let check = verify_equilibrium(&trace.final_state, 1e-7)?;
    println!(
        "Nash: {} (largest unilateral gain {:e})",
        check.is_nash, check.worst_gain
    );
    Ok(())
}
