//! Revenue densities when two pools attack each other at fixed rates.

use pool_game::analytic::{converge_revenues, SolveMethod};
use pool_game::model::{validate_system, InfiltrationMatrix};

fn main() -> pool_game::Result<()> {
    let s = validate_system(&[0.2, 0.3], InfiltrationMatrix::two_pool(0.1, 0.1))?;

    let direct = converge_revenues(&s, SolveMethod::DirectLinear, None)?;
    let iterated = converge_revenues(&s, SolveMethod::iteration(10_000, 1e-14), None)?;

    println!("direct mining rates R = {:?}", direct.direct_rates);
    println!("densities r          = {:?}", direct.densities);
    println!("solo density         = {}", direct.solo_density);
    println!(
        "iteration took {} steps, residual {:e}",
        iterated.iterations, iterated.residual
    );
    println!("total revenue        = {}", direct.total_revenue(&s));
    Ok(())
}
