//! Transfer of per-slice measurement families back to the full algebra.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::operator::{
    self, default_cutoff, eig_hermitian, expand_corner, hermitian_part, pseudo_inv_sqrt, CMatrix,
};
use crate::rounding::{round_correlation, Slice};
use crate::strategy::{
    correlation, embed_tracial, synchronicity_unchecked, value_of_correlation, Povm, TensorStrategy,
};

/// Allowed failure of `B <= A`.
pub const DOMINATION_TOL: f64 = 1e-10;
/// POVM tolerance for aggregated families.
pub const AGGREGATE_POVM_TOL: f64 = 1e-9;
/// Tolerance on `sigma H sigma = sum measure * expand(G)`.
pub const AGGREGATE_RECONSTRUCTION_TOL: f64 = 1e-8;

/// `C = A^{-1/2} B A^{-1/2}` on the support of `A` (eigenvalues above `cutoff`),
/// zero on its kernel, so that `A^{1/2} C A^{1/2} = B` whenever `0 <= B <= A`.
pub fn dominated_factorization(a: &CMatrix, b: &CMatrix, cutoff: f64) -> Result<CMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let gap = operator::min_eigenvalue(&(a - b))?;
    if gap < -DOMINATION_TOL {
        return Err(Error::DominationViolated {
            min_eigenvalue: gap,
        });
    }
    let b_min = operator::min_eigenvalue(b)?;
    if b_min < -DOMINATION_TOL {
        return Err(Error::NotPositive {
            min_eigenvalue: b_min,
        });
    }
    let inv = pseudo_inv_sqrt(a, cutoff)?;
    Ok(hermitian_part(&(&inv * b * &inv)))
}

/// Per-slice measurement family handed back by a [`SliceOracle`].
#[derive(Debug, Clone)]
pub struct SliceFamily {
    pub measure: f64,
    /// Orthonormal columns spanning the slice's corner.
    pub basis: CMatrix,
    /// One POVM per auxiliary question, acting on the corner.
    pub povms: Vec<Povm>,
}

/// `H_b^y = S (sum_j measure_j B_j G_b^{j,y} B_j*) S` with `S = (sigma^2)^{-1/2}` on the
/// support; the deficit `I - supp(sigma)` is added to answer 0 so each family
/// is a POVM. Checks `sigma H sigma` against the aggregated sum.
pub fn aggregate_slice_povms(sigma: &CMatrix, slices: &[SliceFamily]) -> Result<Vec<Povm>> {
    let n = sigma.nrows();
    let first = slices
        .first()
        .ok_or_else(|| Error::NotPovm("no slices to aggregate".into()))?;
    let (nq, nb) = (
        first.povms.len(),
        first.povms.first().map_or(0, Povm::outcomes),
    );
    for s in slices {
        if s.povms.len() != nq || s.povms.iter().any(|p| p.outcomes() != nb) {
            return Err(Error::NotPovm(
                "slice families have different shapes".into(),
            ));
        }
        if s.basis.nrows() != n || s.povms.iter().any(|p| p.dim() != s.basis.ncols()) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.basis.nrows(),
            });
        }
    }
    let square = hermitian_part(&(sigma * sigma));
    let inv = pseudo_inv_sqrt(&square, default_cutoff(&square)?)?;
    let support = hermitian_part(&(&inv * &square * &inv));
    let deficit = operator::identity(n) - &support;

    let mut out = Vec::with_capacity(nq);
    for y in 0..nq {
        let mut elements = Vec::with_capacity(nb);
        for b in 0..nb {
            let total = slices.iter().fold(operator::zero(n), |acc, s| {
                acc + expand_corner(s.povms[y].element(b), &s.basis)
                    * Complex64::new(s.measure, 0.0)
            });
            let mut h = hermitian_part(&(&inv * &total * &inv));
            let back = sigma * &h * sigma;
            let err = operator::max_abs_diff(&back, &total);
            if err > AGGREGATE_RECONSTRUCTION_TOL {
                return Err(Error::NotPovm(format!(
                    "sigma H sigma misses the aggregate by {err:.3e} at ({y},{b})"
                )));
            }
            if b == 0 {
                h += &deficit;
            }
            elements.push(h);
        }
        let povm = Povm::from_hermitian(elements);
        let sum_err = povm.completeness_defect();
        if sum_err > AGGREGATE_POVM_TOL {
            return Err(Error::NotPovm(format!(
                "family {y} sums to identity only up to {sum_err:.3e}"
            )));
        }
        for (b, e) in povm.elements().iter().enumerate() {
            let min = eig_hermitian(e)?.min_eigenvalue();
            if min < -AGGREGATE_POVM_TOL {
                return Err(Error::NotPovm(format!(
                    "element ({y},{b}) has eigenvalue {min:.3e}"
                )));
            }
        }
        out.push(povm);
    }
    Ok(out)
}

/// Convex nonnegative profile applied to a winning probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    Zero,
    /// `slope * t`.
    Linear(f64),
    /// `t^p` with `p >= 1`.
    Power(f64),
}

impl Kappa {
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match *self {
            Kappa::Zero => 0.0,
            Kappa::Linear(s) => s * t,
            Kappa::Power(p) => t.powf(p),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Kappa::Linear(s) if !(s >= 0.0 && s.is_finite()) => Err(Error::InvalidInstance(
                format!("kappa slope {s} must be finite and nonnegative"),
            )),
            Kappa::Power(p) if !(p >= 1.0 && p.is_finite()) => Err(Error::InvalidInstance(
                format!("kappa exponent {p} must be at least 1 for convexity"),
            )),
            _ => Ok(()),
        }
    }
}

/// Auxiliary questions and answers, a distribution `rho` over `X x Y`, the answer
/// map `g(x, y, a)` (a subset of the auxiliary answers) and the profile `kappa`.
#[derive(Debug, Clone)]
pub struct SoundnessInstance {
    pub aux_questions: usize,
    pub aux_answers: usize,
    /// Row-major `|X| x |Y|`.
    pub rho: Vec<f64>,
    /// `g[(x * |Y| + y) * |A| + a]`.
    pub g: Vec<Vec<usize>>,
    pub kappa: Kappa,
}

impl SoundnessInstance {
    /// `Y = X`, `B = A`, `rho = mu_x` on the diagonal and `g(x, x, a) = {a}`:
    /// the soundness property then says the auxiliary measurement reproduces Alice's answer.
    pub fn consistency(game: &Game, kappa: Kappa) -> Self {
        let (nq, na) = (game.num_questions(), game.num_answers());
        let mut rho = vec![0.0; nq * nq];
        for x in 0..nq {
            rho[x * nq + x] = game.mu_x(x);
        }
        let g = (0..nq * nq * na).map(|i| vec![i % na]).collect();
        Self {
            aux_questions: nq,
            aux_answers: na,
            rho,
            g,
            kappa,
        }
    }

    pub fn g(&self, x: usize, y: usize, a: usize, answers: usize) -> &[usize] {
        &self.g[(x * self.aux_questions + y) * answers + a]
    }

    /// Shapes, normalization of `rho` and disjointness of `g(x, y, .)`.
    pub fn validate(&self, game: &Game) -> Result<()> {
        let (nq, na) = (game.num_questions(), game.num_answers());
        let ny = self.aux_questions;
        if self.rho.len() != nq * ny {
            return Err(Error::InvalidInstance(format!(
                "rho has {} entries, expected {}",
                self.rho.len(),
                nq * ny
            )));
        }
        if self.rho.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInstance(
                "rho has a negative or non-finite entry".into(),
            ));
        }
        let total: f64 = self.rho.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInstance(format!("rho sums to {total}")));
        }
        if self.g.len() != nq * ny * na {
            return Err(Error::InvalidInstance(format!(
                "g has {} entries, expected {}",
                self.g.len(),
                nq * ny * na
            )));
        }
        for x in 0..nq {
            for y in 0..ny {
                let mut seen = vec![None; self.aux_answers];
                for a in 0..na {
                    for &b in self.g(x, y, a, na) {
                        if b >= self.aux_answers {
                            return Err(Error::InvalidInstance(format!(
                                "g({x},{y},{a}) contains unknown answer {b}"
                            )));
                        }
                        if let Some(prev) = seen[b] {
                            if prev != a {
                                return Err(Error::InvalidInstance(format!(
                                    "g({x},{y},{prev}) and g({x},{y},{a}) share answer {b}"
                                )));
                            }
                        }
                        seen[b] = Some(a);
                    }
                }
            }
        }
        self.kappa.validate()
    }
}

/// Supplies the measurement family promised for each synchronous slice.
pub trait SliceOracle: Sync {
    /// One POVM per auxiliary question on the slice's `sub_dim`-dimensional corner.
    fn family(&self, index: usize, slice: &Slice) -> Result<Vec<Povm>>;
}

/// Hands back each slice's own PVMs; pairs with [`SoundnessInstance::consistency`].
#[derive(Debug, Clone, Copy, Default)]
pub struct OwnMeasurements;

impl SliceOracle for OwnMeasurements {
    fn family(&self, _index: usize, slice: &Slice) -> Result<Vec<Povm>> {
        Ok(slice.pvms.clone())
    }
}

/// Raw quantities of the soundness transfer. No inequality is asserted: the
/// constants in the transferred bound are unknown, so `kappa_side` uses unit
/// constants (`poly(delta) = delta`, coefficient 1 on `delta^{1/8}`).
#[derive(Debug, Clone, Serialize)]
pub struct SoundnessReport {
    pub delta: f64,
    pub value: f64,
    pub distance: f64,
    pub slices: usize,
    /// `E_{x ~ rho} sum_{a != b} C(x, x, a, b)`, the marginal condition's left side.
    pub marginal_sync: f64,
    /// `E_{(x,y) ~ rho} sum_a tau(sigma A_a^x sigma H^y_{g(a)})` on the rounded strategy.
    pub transferred: f64,
    /// Weighted per-slice soundness expectations.
    pub slice_expectation: f64,
    /// `sum_j w_j kappa(omega_j)`.
    pub kappa_slices: f64,
    /// `kappa(omega - delta) - delta^{1/8}`.
    pub kappa_side: f64,
    pub satisfied: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

fn sum_elements(p: &Povm, set: &[usize], n: usize) -> CMatrix {
    set.iter()
        .fold(operator::zero(n), |acc, &b| acc + p.element(b))
}

fn soundness_expectation(
    game: &Game,
    inst: &SoundnessInstance,
    sigma: &CMatrix,
    alice: &[Povm],
    aux: &[Povm],
) -> f64 {
    let (nq, na, ny) = (game.num_questions(), game.num_answers(), inst.aux_questions);
    let n = sigma.nrows();
    let mut total = 0.0;
    for (x, ax) in alice.iter().enumerate().take(nq) {
        for (y, hy) in aux.iter().enumerate().take(ny) {
            let p = inst.rho[x * ny + y];
            if p == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for a in 0..na {
                let h = sum_elements(hy, inst.g(x, y, a, na), n);
                inner += operator::tau_product(&(sigma * ax.element(a) * sigma), &h).re;
            }
            total += p * inner;
        }
    }
    total
}

/// Rounds `s`, asks the oracle for a family on every slice, aggregates them and
/// evaluates both sides of the transferred soundness bound.
pub fn soundness_transfer_demo(
    game: &Game,
    inst: &SoundnessInstance,
    s: &TensorStrategy,
    oracle: &dyn SliceOracle,
) -> Result<SoundnessReport> {
    inst.validate(game)?;
    let tracial = embed_tracial(s);
    let c_in = correlation(&tracial)?;
    let value = value_of_correlation(game, &c_in)?;
    let delta = synchronicity_unchecked(game, &c_in);

    let (nq, na, ny) = (game.num_questions(), game.num_answers(), inst.aux_questions);
    let mut marginal_sync = 0.0;
    for x in 0..nq {
        let rx: f64 = (0..ny).map(|y| inst.rho[x * ny + y]).sum();
        let off: f64 = (0..na)
            .flat_map(|a| (0..na).filter(move |&b| b != a).map(move |b| (a, b)))
            .map(|(a, b)| c_in.get(x, x, a, b))
            .sum();
        marginal_sync += rx * off;
    }

    let dec = round_correlation(game, s)?;
    let (sym, _) = crate::rounding::symmetrize(game, &tracial)?;
    let (rounded, _) = crate::rounding::projectivize(game, &sym)?;

    let mut families = Vec::with_capacity(dec.slices.len());
    let mut slice_expectation = 0.0;
    let mut kappa_slices = 0.0;
    for (j, slice) in dec.slices.iter().enumerate() {
        let fam = oracle.family(j, slice)?;
        if fam.len() != ny || fam.iter().any(|p| p.outcomes() != inst.aux_answers) {
            return Err(Error::InvalidInstance(format!(
                "oracle family for slice {j} does not match the auxiliary alphabets"
            )));
        }
        let corner = operator::identity(slice.sub_dim);
        slice_expectation +=
            slice.weight * soundness_expectation(game, inst, &corner, &slice.pvms, &fam);
        let omega = value_of_correlation(game, &dec.correlations[j])?;
        kappa_slices += slice.weight * inst.kappa.eval(omega);
        families.push(SliceFamily {
            measure: slice.measure,
            basis: slice.basis.clone(),
            povms: fam,
        });
    }
    let h = aggregate_slice_povms(rounded.sigma(), &families)?;
    let transferred = soundness_expectation(game, inst, rounded.sigma(), rounded.alice(), &h);
    let kappa_side = inst.kappa.eval(value - delta) - delta.powf(0.125);

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("weight_sum".into(), dec.weight_sum());
    diagnostics.insert("rounded_dim".into(), rounded.dim() as f64);
    Ok(SoundnessReport {
        delta,
        value,
        distance: dec.diagnostic("distance").unwrap_or(f64::NAN),
        slices: dec.slices.len(),
        marginal_sync,
        transferred,
        slice_expectation,
        kappa_slices,
        kappa_side,
        satisfied: transferred >= kappa_side,
        diagnostics,
    })
}
