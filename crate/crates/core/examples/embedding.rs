//! Tensor-product strategy to tracial form: the correlations agree.

use syncround::game::builtin_game;
use syncround::generate::{builtin_strategy, perturb_strategy};
use syncround::strategy::{correlation, embed_tracial, synchronicity, value_of_correlation};

fn main() -> syncround::Result<()> {
    let game = builtin_game("k3")?;
    let base = builtin_strategy("skewed", &game)?;
    let s = perturb_strategy(&base, 0.05, 11)?;
    let t = embed_tracial(&s);
    println!(
        "dim_a={} dim_b={} tracial dim={}",
        s.dim_a(),
        s.dim_b(),
        t.dim()
    );
    let c = correlation(&t)?;
    println!("value      {:.6}", value_of_correlation(&game, &c)?);
    println!("delta_sync {:.6e}", synchronicity(&game, &c)?);
    println!("C(v0,v1,c0,c1) = {:.6}", c.get(0, 1, 0, 1));
    Ok(())
}
