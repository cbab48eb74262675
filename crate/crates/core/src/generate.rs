//! Seeded random strategies, perturbations and a few hand-built perfect strategies.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::operator::{self, unitary_exp, CMatrix};
use crate::strategy::{Povm, TensorStrategy};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn ginibre(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    DMatrix::from_fn(n, n, |_, _| gaussian(rng))
}

fn unit_vector(len: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..len).map(|_| gaussian(rng)).collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of `R`'s
/// diagonal moved back into `Q`.
pub fn haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let qr = ginibre(n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// GUE-like Hermitian matrix with spectrum of order one.
pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = ginibre(n, rng);
    (&g + g.adjoint()) * Complex64::new(0.5 / (n as f64).sqrt(), 0.0)
}

fn random_pvm(dim: usize, answers: usize, rng: &mut ChaCha8Rng) -> Povm {
    let u = haar_unitary(dim, rng);
    let assignment: Vec<usize> = (0..dim).map(|_| rng.random_range(0..answers)).collect();
    Povm::computational(&assignment, answers).conjugate(&u)
}

/// Random POVM built from Wishart blocks `W_a = G_a G_a*`, normalized by
/// `(sum_a W_a)^{-1/2}` on both sides.
pub fn random_povm(dim: usize, outcomes: usize, rng: &mut ChaCha8Rng) -> Result<Povm> {
    let blocks: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(dim, rng);
            &g * g.adjoint()
        })
        .collect();
    let total = blocks.iter().fold(operator::zero(dim), |acc, b| acc + b);
    let cutoff = operator::default_cutoff(&total)?;
    let s = operator::pseudo_inv_sqrt(&total, cutoff)?;
    let elements = blocks
        .iter()
        .map(|b| operator::hermitian_part(&(&s * b * &s)))
        .collect();
    Ok(Povm::from_hermitian(elements))
}

/// `(1 - weight) P + weight N` with `N` a fresh [`random_povm`].
pub fn noisy_povm(p: &Povm, weight: f64, rng: &mut ChaCha8Rng) -> Result<Povm> {
    let noise = random_povm(p.dim(), p.outcomes(), rng)?;
    let elements = p
        .elements()
        .iter()
        .zip(noise.elements())
        .map(|(a, n)| a * Complex64::new(1.0 - weight, 0.0) + n * Complex64::new(weight, 0.0))
        .collect();
    Ok(Povm::from_hermitian(elements))
}

/// [`random_strategy`] with every measurement mixed with POVM noise of the given weight.
pub fn random_noisy_strategy(
    dims: (usize, usize),
    alphabets: (usize, usize),
    weight: f64,
    seed: u64,
) -> Result<TensorStrategy> {
    let base = random_strategy(dims, alphabets, seed)?;
    let mut rng = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let alice = base
        .alice()
        .iter()
        .map(|p| noisy_povm(p, weight, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let bob = base
        .bob()
        .iter()
        .map(|p| noisy_povm(p, weight, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    TensorStrategy::new(dims.0, dims.1, base.state().to_vec(), alice, bob)
}

/// Seeded generator shared by the sweeps and tests.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    rng(seed)
}

/// Random projective strategy: each PVM rotates the computational basis by a
/// Haar unitary and hands every basis vector to a uniformly random answer; the
/// state is a normalized complex Gaussian vector.
pub fn random_strategy(
    dims: (usize, usize),
    alphabets: (usize, usize),
    seed: u64,
) -> Result<TensorStrategy> {
    let ((da, db), (nq, na)) = (dims, alphabets);
    if da == 0 || db == 0 || nq == 0 || na == 0 {
        return Err(Error::InvalidStrategy(
            "dimensions and alphabets must be positive".into(),
        ));
    }
    let mut rng = rng(seed);
    let alice = (0..nq).map(|_| random_pvm(da, na, &mut rng)).collect();
    let bob = (0..nq).map(|_| random_pvm(db, na, &mut rng)).collect();
    let state = unit_vector(da * db, &mut rng);
    TensorStrategy::new(da, db, state, alice, bob)
}

/// Moves a strategy by roughly `eta`: each of Bob's measurements is conjugated by
/// `exp(i eta H_y)` for a random Hermitian `H_y`, and the state becomes
/// `psi + eta g` renormalized. `eta = 0` returns an exact copy.
pub fn perturb_strategy(s: &TensorStrategy, eta: f64, seed: u64) -> Result<TensorStrategy> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "eta must be finite and nonnegative, got {eta}"
        )));
    }
    if eta == 0.0 {
        return Ok(s.clone());
    }
    let mut rng = rng(seed);
    let db = s.dim_b();
    let bob = s
        .bob()
        .iter()
        .map(|p| {
            let h = random_hermitian(db, &mut rng);
            Ok(p.conjugate(&unitary_exp(&h, eta)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let g = unit_vector(s.state().len(), &mut rng);
    let mut state: Vec<Complex64> = s.state().iter().zip(&g).map(|(p, q)| p + q * eta).collect();
    normalize(&mut state);
    TensorStrategy::new(s.dim_a(), s.dim_b(), state, s.alice().to_vec(), bob)
}

/// A deterministic synchronous strategy `f` winning every question pair, if any.
pub fn perfect_coloring(game: &Game) -> Option<Vec<usize>> {
    let (nq, na) = (game.num_questions(), game.num_answers());
    let mut f = vec![0usize; nq];
    fn extend(game: &Game, f: &mut Vec<usize>, x: usize, na: usize) -> bool {
        if x == f.len() {
            return true;
        }
        for a in 0..na {
            f[x] = a;
            let ok = (0..=x).all(|y| {
                (game.mu(x, y) == 0.0 || game.win(x, y, f[x], f[y]))
                    && (game.mu(y, x) == 0.0 || game.win(y, x, f[y], f[x]))
            });
            if ok && extend(game, f, x + 1, na) {
                return true;
            }
        }
        false
    }
    extend(game, &mut f, 0, na).then_some(f)
}

fn maximally_entangled(n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    for i in 0..n {
        v[i * n + i] = amp;
    }
    v
}

/// PVM on `C^k` sending basis vector `i` to answer `(i - shift) mod k`.
fn shifted_pvm(k: usize, shift: usize) -> Povm {
    let assignment: Vec<usize> = (0..k).map(|i| (i + k - shift % k) % k).collect();
    Povm::computational(&assignment, k)
}

fn dft(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |i, j| {
        Complex64::from_polar(
            scale,
            2.0 * std::f64::consts::PI * (i * j) as f64 / n as f64,
        )
    })
}

/// Names accepted by [`builtin_strategy`].
pub const BUILTIN_STRATEGIES: [&str; 4] = ["classical", "maxent", "rotated", "skewed"];

/// Builds a named strategy for `game`.
///
/// * `classical`: a perfect deterministic coloring in dimension 1.
/// * `maxent`: maximally entangled state on `C^k (x) C^k`, both players measure
///   in the computational basis shifted by the coloring.
/// * `rotated`: the same correlation after a complex change of basis on
///   Alice's side, with Bob using the complex conjugate operators.
/// * `skewed`: a non-maximally entangled state `sum_i c_i |i>|i+1>` whose
///   standard-form `sigma` is not normal.
/// * `random:DA:DB:SEED`: [`random_strategy`] with the game's alphabets.
pub fn builtin_strategy(name: &str, game: &Game) -> Result<TensorStrategy> {
    let (nq, na) = (game.num_questions(), game.num_answers());
    if let Some(rest) = name.strip_prefix("random:") {
        let nums = rest
            .split(':')
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("invalid number '{s}' in strategy '{name}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let [da, db, seed] = nums[..] else {
            return Err(Error::Parse(format!(
                "expected random:DA:DB:SEED, got '{name}'"
            )));
        };
        return random_strategy((da as usize, db as usize), (nq, na), seed);
    }
    let f = perfect_coloring(game).ok_or_else(|| {
        Error::InvalidStrategy(format!(
            "game has no perfect deterministic strategy for '{name}'"
        ))
    })?;
    let k = na;
    match name {
        "classical" => {
            let pvms: Vec<Povm> = f.iter().map(|&a| Povm::computational(&[a], na)).collect();
            TensorStrategy::new(1, 1, vec![Complex64::new(1.0, 0.0)], pvms.clone(), pvms)
        }
        "maxent" => {
            let pvms: Vec<Povm> = f.iter().map(|&a| shifted_pvm(k, a)).collect();
            TensorStrategy::new(k, k, maximally_entangled(k), pvms.clone(), pvms)
        }
        "rotated" => {
            let w = dft(k);
            let alice: Vec<Povm> = f.iter().map(|&a| shifted_pvm(k, a).conjugate(&w)).collect();
            let bob: Vec<Povm> = alice
                .iter()
                .map(|p| {
                    Povm::from_hermitian(p.elements().iter().map(|e| e.map(|z| z.conj())).collect())
                })
                .collect();
            TensorStrategy::new(k, k, maximally_entangled(k), alice, bob)
        }
        "skewed" => {
            let norm = ((1..=k).map(|i| (i * i) as f64).sum::<f64>()).sqrt();
            let mut state = vec![Complex64::new(0.0, 0.0); k * k];
            for i in 0..k {
                state[i * k + (i + 1) % k] = Complex64::new((i + 1) as f64 / norm, 0.0);
            }
            let alice: Vec<Povm> = f.iter().map(|&a| shifted_pvm(k, a)).collect();
            // Bob's basis vector i+1 is paired with Alice's i.
            let perm = DMatrix::from_fn(k, k, |i, j| {
                if i == (j + 1) % k {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let bob: Vec<Povm> = alice.iter().map(|p| p.conjugate(&perm)).collect();
            TensorStrategy::new(k, k, state, alice, bob)
        }
        other => Err(Error::Parse(format!("unknown builtin strategy '{other}'"))),
    }
}

/// `max |U*U - I|`; handy when checking generated unitaries.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    operator::max_abs_diff(&(u.adjoint() * u), &operator::identity(u.nrows()))
}
