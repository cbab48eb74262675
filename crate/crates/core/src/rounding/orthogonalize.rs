//! Nearest projective measurement in the `sigma`-weighted 2-norm.
//!
//! For a POVM `{A_x}` and `rho = sigma sigma*` the error of a PVM `{P_x}` is
//! `E(P) = sum_x tau(sigma* (A_x - P_x)^2 sigma)`. Since `sum_x P_x = I`,
//! `E(P) = const - sum_x tau(P_x K_x)` with `K_x = rho A_x + A_x rho`, so every
//! search below maximizes that linear functional. A PVM is carried as an
//! orthonormal frame whose columns are labelled by outcome.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{self, eig_hermitian, tau, tau_product, CMatrix};
use crate::strategy::Povm;

/// Additive slack on the `9 eps` guarantee.
pub const BOUND_SLACK: f64 = 1e-8;

const GREEDY_ROUNDS: usize = 64;
const REFINE_ROUNDS: usize = 16;
const GRADIENT_STEPS: usize = 60;
const ARMIJO: f64 = 1e-4;

/// Result of an orthogonalization with the quantities of its guarantee.
#[derive(Debug, Clone)]
pub struct Orthogonalization {
    pub pvm: Povm,
    /// `sum_x tau(sigma* (A_x - P_x)^2 sigma)`.
    pub error: f64,
    /// `tau(sigma* sigma) - sum_x tau(sigma* A_x^2 sigma)`.
    pub epsilon: f64,
}

impl Orthogonalization {
    pub fn bound(&self) -> f64 {
        9.0 * self.epsilon
    }

    pub fn within_bound(&self) -> bool {
        self.error <= self.bound() + BOUND_SLACK
    }
}

/// Orthogonalizes `povm` and checks `error <= 9 eps + 1e-8`, returning the PVM and its error.
pub fn orthogonalize_povm(povm: &Povm, sigma: &CMatrix) -> Result<(Povm, f64)> {
    let out = orthogonalize_checked(povm, sigma)?;
    Ok((out.pvm, out.error))
}

/// [`nearest_pvm`] followed by the bound check.
pub fn orthogonalize_checked(povm: &Povm, sigma: &CMatrix) -> Result<Orthogonalization> {
    let out = nearest_pvm(povm, sigma)?;
    if !out.within_bound() {
        return Err(Error::BoundViolated {
            error: out.error,
            bound: out.bound(),
        });
    }
    Ok(out)
}

/// `sum_x tau(sigma* (A_x - P_x)^2 sigma)`.
pub fn orthogonalization_error(povm: &Povm, pvm: &Povm, sigma: &CMatrix) -> f64 {
    let rho = sigma * sigma.adjoint();
    povm.elements()
        .iter()
        .zip(pvm.elements())
        .map(|(a, p)| {
            let d = a - p;
            tau_product(&(&d * &d), &rho).re
        })
        .sum()
}

/// Best PVM found by the search, without enforcing the `9 eps` bound.
///
/// Candidates are sequential spectral rounding (answers in decreasing order of
/// `tau(sigma* A_x sigma)`, each taking `chi_{>= 1/2}` of its compression to what
/// is left, the last answer taking the remainder) and per-vector argmax
/// assignments in the eigenbases of `rho`, each `A_x` and each `K_x`. Every
/// candidate is refined by alternating block rediagonalization with argmax
/// relabelling and Riemannian gradient ascent along `P_x -> e^{tW} P_x e^{-tW}`,
/// `W = sum_x [K_x, P_x]`. A projective input is returned unchanged.
pub fn nearest_pvm(povm: &Povm, sigma: &CMatrix) -> Result<Orthogonalization> {
    let n = povm.dim();
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sigma.nrows(),
        });
    }
    let rho = operator::hermitian_part(&(sigma * sigma.adjoint()));
    let total = tau(&rho).re;
    let second_moment: f64 = povm
        .elements()
        .iter()
        .map(|a| tau_product(&(a * a), &rho).re)
        .sum();
    if !(second_moment > 0.0) {
        return Err(Error::InvalidStrategy(
            "sum_x tau(sigma* A_x^2 sigma) vanishes".into(),
        ));
    }
    let epsilon = total - second_moment;
    if povm.is_projective() {
        return Ok(Orthogonalization {
            pvm: povm.clone(),
            error: 0.0,
            epsilon,
        });
    }

    let k: Vec<CMatrix> = povm
        .elements()
        .iter()
        .map(|a| operator::hermitian_part(&(&rho * a + a * &rho)))
        .collect();
    let search = Search { k: &k, n };

    let mut candidates = vec![sequential_rounding(povm, &rho)?];
    let mut bases = vec![eig_hermitian(&rho)?.eigenvectors];
    for m in povm.elements().iter().chain(&k) {
        bases.push(eig_hermitian(m)?.eigenvectors);
    }
    for b in bases {
        candidates.push(search.argmax_frame(b));
    }

    let mut best: Option<(f64, Frame)> = None;
    for mut frame in candidates {
        search.refine(&mut frame)?;
        let value = search.objective(&frame);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, frame));
        }
    }
    let (_, frame) = best.expect("at least one candidate");
    let pvm = frame.to_pvm(povm.outcomes());
    let error = orthogonalization_error(povm, &pvm, sigma).max(0.0);
    Ok(Orthogonalization {
        pvm,
        error,
        epsilon,
    })
}

/// Orthonormal columns, each labelled with an outcome.
#[derive(Debug, Clone)]
struct Frame {
    vectors: CMatrix,
    labels: Vec<usize>,
}

impl Frame {
    fn columns_with(&self, x: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == x)
            .collect()
    }

    fn to_pvm(&self, outcomes: usize) -> Povm {
        let elements = (0..outcomes)
            .map(|x| {
                let b = self.vectors.select_columns(self.columns_with(x).iter());
                operator::hermitian_part(&(&b * b.adjoint()))
            })
            .collect();
        Povm::from_hermitian(elements)
    }
}

fn sequential_rounding(povm: &Povm, rho: &CMatrix) -> Result<Frame> {
    let n = povm.dim();
    let mut order: Vec<usize> = (0..povm.outcomes()).collect();
    let weight: Vec<f64> = povm
        .elements()
        .iter()
        .map(|a| tau_product(a, rho).re)
        .collect();
    order.sort_by(|&a, &b| weight[b].total_cmp(&weight[a]));

    let mut remaining = operator::identity(n);
    let mut vectors: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (step, &x) in order.iter().enumerate() {
        if remaining.ncols() == 0 {
            break;
        }
        if step + 1 == order.len() {
            for c in remaining.column_iter() {
                vectors.push(c.into_owned());
                labels.push(x);
            }
            break;
        }
        let compressed = remaining.adjoint() * povm.element(x) * &remaining;
        let eig = eig_hermitian(&compressed)?;
        let rotated = &remaining * &eig.eigenvectors;
        let mut keep = Vec::new();
        for (j, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam >= 0.5 {
                vectors.push(rotated.column(j).into_owned());
                labels.push(x);
            } else {
                keep.push(j);
            }
        }
        remaining = rotated.select_columns(keep.iter());
    }
    Ok(Frame {
        vectors: CMatrix::from_columns(&vectors),
        labels,
    })
}

struct Search<'a> {
    k: &'a [CMatrix],
    n: usize,
}

impl Search<'_> {
    fn score(&self, v: nalgebra::DVectorView<'_, Complex64>, x: usize) -> f64 {
        (v.adjoint() * &self.k[x] * v)[(0, 0)].re
    }

    fn best_label(&self, v: nalgebra::DVectorView<'_, Complex64>, current: Option<usize>) -> usize {
        let mut best = current.unwrap_or(0);
        let mut best_score = self.score(v, best);
        for x in 0..self.k.len() {
            let s = self.score(v, x);
            if s > best_score + 1e-14 * (1.0 + best_score.abs()) {
                best = x;
                best_score = s;
            }
        }
        best
    }

    fn argmax_frame(&self, vectors: CMatrix) -> Frame {
        let labels = (0..vectors.ncols())
            .map(|i| self.best_label(vectors.column(i), None))
            .collect();
        Frame { vectors, labels }
    }

    /// `sum_x tau(P_x K_x) = (1/n) sum_i <v_i, K_{label(i)} v_i>`.
    fn objective(&self, f: &Frame) -> f64 {
        (0..f.labels.len())
            .map(|i| self.score(f.vectors.column(i), f.labels[i]))
            .sum::<f64>()
            / self.n as f64
    }

    fn projectors(&self, f: &Frame) -> Vec<CMatrix> {
        (0..self.k.len())
            .map(|x| {
                let b = f.vectors.select_columns(f.columns_with(x).iter());
                &b * b.adjoint()
            })
            .collect()
    }

    /// Rediagonalizes each block against its own `K_x`, then moves every vector
    /// to the outcome that scores it highest. Returns whether any label changed.
    fn greedy(&self, f: &mut Frame) -> Result<bool> {
        let mut changed_any = false;
        for _ in 0..GREEDY_ROUNDS {
            for x in 0..self.k.len() {
                let cols = f.columns_with(x);
                if cols.len() < 2 {
                    continue;
                }
                let b = f.vectors.select_columns(cols.iter());
                let eig = eig_hermitian(&(b.adjoint() * &self.k[x] * &b))?;
                let rotated = &b * &eig.eigenvectors;
                for (j, &c) in cols.iter().enumerate() {
                    f.vectors.set_column(c, &rotated.column(j));
                }
            }
            let mut changed = false;
            for i in 0..f.labels.len() {
                let best = self.best_label(f.vectors.column(i), Some(f.labels[i]));
                if best != f.labels[i] {
                    f.labels[i] = best;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            changed_any = true;
        }
        Ok(changed_any)
    }

    /// Armijo line search along the unitary orbit. Returns the total gain.
    fn gradient(&self, f: &mut Frame) -> Result<f64> {
        let start = self.objective(f);
        let mut value = start;
        let mut step = f64::NAN;
        for _ in 0..GRADIENT_STEPS {
            let p = self.projectors(f);
            let w = p
                .iter()
                .zip(self.k)
                .fold(operator::zero(self.n), |acc, (p, k)| acc + k * p - p * k);
            let slope = tau_product(&w.adjoint(), &w).re;
            if slope <= 1e-15 * (1.0 + value.abs()) {
                break;
            }
            if !step.is_finite() {
                step = 1.0 / operator::frobenius(&w);
            }
            // exp(tW) = exp(i t H) with H = -iW Hermitian.
            let h = &w * Complex64::new(0.0, -1.0);
            let mut accepted = false;
            for _ in 0..40 {
                let u = operator::unitary_exp(&h, step)?;
                let trial = Frame {
                    vectors: &u * &f.vectors,
                    labels: f.labels.clone(),
                };
                let v = self.objective(&trial);
                if v >= value + ARMIJO * step * slope {
                    *f = trial;
                    value = v;
                    accepted = true;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok(value - start)
    }

    fn refine(&self, f: &mut Frame) -> Result<()> {
        for _ in 0..REFINE_ROUNDS {
            let changed = self.greedy(f)?;
            let gain = self.gradient(f)?;
            if !changed && gain <= 1e-15 {
                break;
            }
        }
        reorthonormalize(f);
        Ok(())
    }
}

// Unitary steps accumulate roundoff; a QR pass restores an exact frame.
fn reorthonormalize(f: &mut Frame) {
    let n = f.vectors.nrows();
    if n == 0 {
        return;
    }
    let qr = f.vectors.clone().qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    f.vectors = q;
}
