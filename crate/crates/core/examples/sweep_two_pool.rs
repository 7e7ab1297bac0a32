//! Two-pool equilibria over all pool sizes. Writes CSV.
//!
//! `cargo run --release --example sweep_two_pool -- 0.01 > two_pool.csv`

use std::io;

use pool_game::cli::sweep::{run_sweep, write_sweep_csv, SweepMode, SweepSpec, COARSE_STEP};

fn main() -> io::Result<()> {
    let step = std::env::args()
        .nth(1)
        .map_or(COARSE_STEP, |s| s.parse().expect("step"));
    let spec = SweepSpec::full(SweepMode::TwoPool, step).expect("step");
    write_sweep_csv(&run_sweep(&spec), &mut io::stdout().lock())
}
