//! Nearest projective measurement to a noisy POVM, against the 9 eps bound.

use syncround::generate::{haar_unitary, noisy_povm, seeded_rng};
use syncround::operator::identity;
use syncround::rounding::orthogonalize_checked;
use syncround::strategy::Povm;

fn main() -> syncround::Result<()> {
    let n = 6;
    let mut rng = seeded_rng(5);
    let u = haar_unitary(n, &mut rng);
    let pvm = Povm::computational(&[0, 0, 1, 1, 2, 2], 3).conjugate(&u);
    // maximally mixed state, normalized so that tau(sigma* sigma) = 1
    let sigma = identity(n);
    for weight in [0.0, 0.01, 0.05, 0.2] {
        let noisy = noisy_povm(&pvm, weight, &mut rng)?;
        let o = orthogonalize_checked(&noisy, &sigma)?;
        println!(
            "weight {weight:.2}: eps {:.3e} error {:.3e} bound {:.3e} projective={}",
            o.epsilon,
            o.error,
            o.bound(),
            o.pvm.is_projective()
        );
    }
    Ok(())
}
