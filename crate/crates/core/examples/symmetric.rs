//! Symmetric equilibria of p equal pools. Everyone loses compared with peace
//! unless the pools cover the whole network.

use pool_game::closedform::symmetric_equilibrium;

fn main() -> pool_game::Result<()> {
    println!("p,mi,x,r");
    for p in 2..=10 {
        for total in [0.2, 0.5, 0.9, 1.0] {
            let mi = total / p as f64;
            let sol = symmetric_equilibrium(p, mi)?;
            println!("{p},{mi:.4},{:.6},{:.6}", sol.x, sol.r);
        }
    }
    Ok(())
}
