//! The miner's dilemma: attacking is dominant, yet mutual attack pays less
//! than mutual restraint.

use pool_game::gamesolve::dilemma_matrix;

fn main() -> pool_game::Result<()> {
    for (m1, m2) in [(0.2, 0.2), (0.1, 0.3), (0.55, 0.2)] {
        let d = dilemma_matrix(m1, m2)?;
        println!("m = ({m1}, {m2})");
        for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
            let c = d.cell(a, b);
            println!(
                "  pool0 attacks={a:<5} pool1 attacks={b:<5} r = ({:.4}, {:.4})",
                c.r1, c.r2
            );
        }
        println!("  prisoner's dilemma: {}", d.is_prisoners_dilemma());
    }
    Ok(())
}
