//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use syncround::game::{builtin_game, Game};
use syncround::generate::{random_povm, seeded_rng};
use syncround::operator::CMatrix;
use syncround::strategy::{Povm, TensorStrategy, TracialStrategy};

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn ginibre(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Normalized trace computed entrywise.
pub fn tr_n(m: &CMatrix) -> Complex64 {
    let n = m.nrows();
    (0..n).map(|i| m[(i, i)]).sum::<Complex64>() / c(n as f64)
}

/// Random positive matrix with `tau(sigma^2) = 1`, with a few repeated or
/// vanishing eigenvalues mixed in.
pub fn random_positive(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = ginibre(n, rng);
    let q = g.qr().q();
    let mut vals: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    match rng.random_range(0..4) {
        0 if n > 1 => vals[1] = vals[0],
        1 => vals[n - 1] = 0.0,
        _ => {}
    }
    if vals.iter().all(|v| *v == 0.0) {
        vals[0] = 1.0;
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        vals.iter().map(|v| c(*v)),
    ));
    let p = &q * d * q.adjoint();
    let norm = tr_n(&(&p * &p)).re.sqrt();
    p.map(|z| z / norm)
}

/// Random (generally non-normal) state with `tau(sigma* sigma) = 1`.
pub fn random_sigma(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = ginibre(n, rng);
    let norm = tr_n(&(g.adjoint() * &g)).re.sqrt();
    g.map(|z| z / norm)
}

pub fn random_tracial(n: usize, questions: usize, answers: usize, seed: u64) -> TracialStrategy {
    let mut rng = seeded_rng(seed);
    let sigma = random_sigma(n, &mut rng);
    let alice = (0..questions)
        .map(|_| random_povm(n, answers, &mut rng).unwrap())
        .collect();
    let bob = (0..questions)
        .map(|_| random_povm(n, answers, &mut rng).unwrap())
        .collect();
    TracialStrategy::new(sigma, alice, bob).unwrap()
}

/// Coloring game on the complete graph, a synchronous game of any shape.
pub fn game_of_shape(questions: usize, answers: usize) -> Game {
    builtin_game(&format!("complete:{questions}:{answers}")).unwrap()
}

/// `<psi| A_a^x (x) B_b^y |psi>` from explicit Kronecker products, flattened as
/// `((x * Q + y) * A + a) * A + b`.
pub fn tensor_correlation(s: &TensorStrategy) -> Vec<f64> {
    let psi = DMatrix::from_column_slice(s.state().len(), 1, s.state());
    let (q, n) = (s.num_questions(), s.num_answers());
    let mut out = Vec::with_capacity(q * q * n * n);
    for x in 0..q {
        for y in 0..q {
            for a in 0..n {
                for b in 0..n {
                    let op = s.alice()[x].element(a).kronecker(s.bob()[y].element(b));
                    let v = (psi.adjoint() * op * &psi)[(0, 0)];
                    out.push(v.re);
                }
            }
        }
    }
    out
}

/// Polar parts from the singular value decomposition `M = U S V*`:
/// `u = U V*` restricted to the support and `|M| = V S V*`.
pub fn svd_polar(m: &CMatrix) -> (CMatrix, CMatrix) {
    let svd = m.clone().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let n = m.nrows();
    let mut uu = CMatrix::zeros(n, n);
    let mut pos = CMatrix::zeros(n, n);
    for k in 0..svd.singular_values.len() {
        let s = svd.singular_values[k];
        let v = vt.row(k).adjoint();
        pos += &v * v.adjoint() * c(s);
        if s > 1e-12 {
            uu += u.column(k) * v.adjoint();
        }
    }
    (uu, pos)
}

pub fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_valid_povm(p: &Povm, tol: f64) -> bool {
    let n = p.dim();
    let sum = p
        .elements()
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, e| acc + e);
    max_entry(&(sum - CMatrix::identity(n, n))) <= tol
        && p.elements().iter().all(|e| min_eig(e) >= -tol)
}

pub fn is_valid_pvm(p: &Povm, tol: f64) -> bool {
    is_valid_povm(p, tol) && p.elements().iter().all(|e| max_entry(&(e * e - e)) <= tol)
}
