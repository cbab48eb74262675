//! Round a perturbed perfect strategy into a mixture of synchronous ones.

use syncround::game::builtin_game;
use syncround::generate::{builtin_strategy, perturb_strategy};
use syncround::rounding::round_correlation;

fn main() -> syncround::Result<()> {
    let game = builtin_game("k3")?;
    let base = builtin_strategy("maxent", &game)?;
    for eta in [0.0, 1e-3, 1e-2, 1e-1] {
        let s = perturb_strategy(&base, eta, 42)?;
        let dec = round_correlation(&game, &s)?;
        println!(
            "eta {eta:.0e}: delta {:.3e} distance {:.3e} slices {} weights {:?}",
            dec.diagnostic("delta_in").unwrap_or(f64::NAN),
            dec.diagnostic("distance").unwrap_or(f64::NAN),
            dec.slices.len(),
            dec.weights()
                .iter()
                .map(|w| format!("{w:.3}"))
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}
