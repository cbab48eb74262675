//! Perturbation sweep on the K3 coloring game with fitted envelopes.

use syncround::game::builtin_game;
use syncround::generate::builtin_strategy;
use syncround::sweep::{configure_threads, run_sweep, SweepConfig};

fn main() -> syncround::Result<()> {
    configure_threads();
    let game = builtin_game("k3")?;
    let base = builtin_strategy("maxent", &game)?;
    let config = SweepConfig::log_grid(1e-4, 1e-1, 5, 10, 2024);
    let report = run_sweep(&game, &base, &config)?;
    print!("{}", report.csv());
    print!("{}", report.envelope_json());
    Ok(())
}
