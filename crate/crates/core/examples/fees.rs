//! Pool fees shave what infiltrators carry home.

use pool_game::analytic::{converge_revenues, SolveMethod};
use pool_game::model::{validate_system, FeeSchedule, InfiltrationMatrix};

fn main() -> pool_game::Result<()> {
    let s = validate_system(&[0.2, 0.3], InfiltrationMatrix::two_pool(0.05, 0.0))?;
    for fee in [0.0, 0.01, 0.02, 0.05] {
        let fees = FeeSchedule::new(vec![fee, fee])?;
        let rep = converge_revenues(&s, SolveMethod::DirectLinear, Some(&fees))?;
        println!(
            "fee {fee:.2}: r = {:.6}, {:.6}",
            rep.densities[0], rep.densities[1]
        );
    }
    Ok(())
}
