//! Adding a synchronicity test: winning with probability 1 - eps forces delta <= eps / c.

use syncround::game::{builtin_game, with_sync_test};
use syncround::generate::{builtin_strategy, perturb_strategy};
use syncround::strategy::{correlation, embed_tracial, synchronicity, value_of_correlation};

fn main() -> syncround::Result<()> {
    let game = builtin_game("cycle:4:2")?;
    let base = builtin_strategy("rotated", &game)?;
    let c = 0.25;
    let tested = with_sync_test(&game, c)?;
    for eta in [1e-3, 1e-2, 1e-1, 0.5] {
        let corr = correlation(&embed_tracial(&perturb_strategy(&base, eta, 3)?))?;
        let eps = 1.0 - value_of_correlation(&tested, &corr)?;
        let delta = synchronicity(&game, &corr)?;
        println!("eta {eta:.0e}: delta {delta:.4e} <= eps/c {:.4e}", eps / c);
    }
    Ok(())
}
