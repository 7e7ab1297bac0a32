//! How much pool 0 should send into pool 1, and how it compares with the
//! closed form.

use pool_game::closedform::one_attacker_optimum;
use pool_game::gamesolve::best_response;
use pool_game::model::Scenario;

fn main() -> pool_game::Result<()> {
    for (m1, m2) in [(0.1, 0.1), (0.2, 0.3), (0.4, 0.5), (0.6, 0.3)] {
        let peace = Scenario::peaceful(vec![m1, m2])?;
        let numeric = best_response(&peace, 0)?;
        let exact = one_attacker_optimum(m1, m2)?;
        println!(
            "m = ({m1}, {m2}): x = {:.7} (closed form {:.7}), r1 = {:.6}, victim r2 = {:.6}",
            numeric.row[1], exact.x12, numeric.density, exact.r2
        );
    }

    // Three pools: the actor spreads its attack over both others.
    let peace = Scenario::peaceful(vec![0.2, 0.3, 0.25])?;
    let br = best_response(&peace, 0)?;
    println!(
        "three pools, pool 0 row = {:?}, r = {:.6}",
        br.row, br.density
    );
    Ok(())
}
