//! Transfer a consistency-type soundness property through the rounding.

use syncround::game::builtin_game;
use syncround::generate::{builtin_strategy, perturb_strategy};
use syncround::soundness::{soundness_transfer_demo, Kappa, OwnMeasurements, SoundnessInstance};

fn main() -> syncround::Result<()> {
    let game = builtin_game("k3")?;
    let base = builtin_strategy("maxent", &game)?;
    let inst = SoundnessInstance::consistency(&game, Kappa::Linear(1.0));
    for eta in [1e-3, 1e-2, 1e-1] {
        let s = perturb_strategy(&base, eta, 9)?;
        let r = soundness_transfer_demo(&game, &inst, &s, &OwnMeasurements)?;
        println!(
            "eta {eta:.0e}: delta {:.3e} transferred {:.4} vs kappa side {:.4} ({})",
            r.delta,
            r.transferred,
            r.kappa_side,
            if r.satisfied { "holds" } else { "fails" }
        );
    }
    Ok(())
}
