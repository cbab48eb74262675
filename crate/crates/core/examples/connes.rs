//! Layer-cake slices of a positive state and the joint-distribution inequality.

use syncround::generate::{random_hermitian, seeded_rng};
use syncround::operator::{self, CMatrix};
use syncround::rounding::{projector_slices, reconstruct_square, verify_connes};

fn positive_normalized(n: usize, seed: u64) -> CMatrix {
    let mut rng = seeded_rng(seed);
    let h = random_hermitian(n, &mut rng);
    let p = &h * &h;
    // tau(sigma^2) = 1
    let scale = operator::tau(&(&p * &p)).re.sqrt();
    p.unscale(scale)
}

fn main() -> syncround::Result<()> {
    let sigma = positive_normalized(5, 1);
    let pieces = projector_slices(&sigma)?;
    for p in &pieces {
        println!(
            "piece {} measure {:.4} rank {}",
            p.breakpoint, p.measure, p.rank
        );
    }
    let err = operator::frobenius(&(reconstruct_square(&pieces, 5) - &sigma * &sigma));
    println!("|sum measure * projector - sigma^2| = {err:.2e}");

    let rho = positive_normalized(5, 2);
    let (lhs, rhs) = verify_connes(&rho, &sigma)?;
    println!("connes: lhs {lhs:.6} <= rhs {rhs:.6}");
    Ok(())
}
