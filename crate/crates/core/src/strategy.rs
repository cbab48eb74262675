//! Strategy representations and the quantities they induce on a game.
//!
//! A [`TensorStrategy`] is the familiar `C^{dA} (x) C^{dB}` model. A
//! [`TracialStrategy`] is the same data in the standard form of `M_n(C)`: the
//! state is `sigma |tau>` with `|tau> = n^{-1/2} sum_i |ii>`, Alice's operators act
//! on the left and Bob's act through the opposite map, i.e. by right
//! multiplication. Bob's operators are stored as left-algebra matrices so that
//! every correlation is the dimension-`n` trace `tau(sigma* A sigma B)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::game::{is_synchronous_game, Game};
use crate::operator::{
    self, hermitize, idempotency_defect, identity, tau_product, CMatrix, HERMITIZE_TOL,
};

/// Positivity floor for POVM elements.
pub const POVM_POSITIVITY_TOL: f64 = 1e-10;
/// Entrywise tolerance on `sum_a A_a = I`.
pub const POVM_SUM_TOL: f64 = 1e-9;
/// Bound on `||P^2 - P||_F` for an element to count as a projector.
pub const PROJECTIVE_TOL: f64 = 1e-9;
/// Tolerance on `||psi|| = 1`.
pub const STATE_NORM_TOL: f64 = 1e-12;
/// Tolerance on `tau(sigma* sigma) = 1`.
pub const SIGMA_NORM_TOL: f64 = 1e-10;
/// Tolerance on correlation entries lying in `[0, 1]`.
pub const CORRELATION_ENTRY_TOL: f64 = 1e-9;
/// Tolerance on `sum_{a,b} C(x,y,a,b) = 1`.
pub const CORRELATION_SUM_TOL: f64 = 1e-8;
/// Imaginary residue above which a correlation evaluation is rejected.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-7;

/// A measurement: positive matrices summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
    projective: bool,
}

impl Povm {
    /// Validates and hermitizes the elements; the projective flag is detected.
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no outcomes".into()));
        }
        let n = elements[0].nrows();
        let mut herm = Vec::with_capacity(elements.len());
        for (a, e) in elements.iter().enumerate() {
            if e.nrows() != n || e.ncols() != n {
                return Err(Error::InvalidPovm(format!(
                    "element {a} has the wrong shape"
                )));
            }
            if !operator::is_finite(e) {
                return Err(Error::InvalidPovm(format!("element {a} is not finite")));
            }
            let h = hermitize(e, HERMITIZE_TOL)
                .map_err(|err| Error::InvalidPovm(format!("element {a}: {err}")))?;
            let min = operator::min_eigenvalue(&h)?;
            if min < -POVM_POSITIVITY_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {a} has eigenvalue {min:.3e}"
                )));
            }
            herm.push(h);
        }
        let sum_err = operator::max_abs_diff(&sum(&herm, n), &identity(n));
        if sum_err > POVM_SUM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only up to {sum_err:.3e}"
            )));
        }
        Ok(Self::from_hermitian(herm))
    }

    /// Wraps elements already known to be a POVM; only the projective flag is computed.
    pub fn from_hermitian(elements: Vec<CMatrix>) -> Self {
        let projective = elements
            .iter()
            .all(|e| idempotency_defect(e) <= PROJECTIVE_TOL);
        Self {
            elements,
            projective,
        }
    }

    /// Diagonal PVM on `C^dim`: basis vector `i` is assigned to outcome `assignment[i]`.
    pub fn computational(assignment: &[usize], outcomes: usize) -> Self {
        let dim = assignment.len();
        let mut elements = vec![operator::zero(dim); outcomes];
        for (i, &a) in assignment.iter().enumerate() {
            elements[a][(i, i)] = Complex64::new(1.0, 0.0);
        }
        Self {
            elements,
            projective: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, a: usize) -> &CMatrix {
        &self.elements[a]
    }

    pub fn is_projective(&self) -> bool {
        self.projective
    }

    /// `U A_a U*` for every element.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        let elements = self
            .elements
            .iter()
            .map(|e| operator::hermitian_part(&(u * e * u.adjoint())))
            .collect();
        Self::from_hermitian(elements)
    }

    /// Elementwise opposite map (transpose).
    pub fn opposite(&self) -> Self {
        Self {
            elements: self.elements.iter().map(opposite).collect(),
            projective: self.projective,
        }
    }

    /// Embeds into dimension `n >= dim`; the padding block goes entirely to outcome 0.
    pub fn pad(&self, n: usize) -> Self {
        let d = self.dim();
        if n == d {
            return self.clone();
        }
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(a, e)| {
                let mut out = operator::zero(n);
                out.view_mut((0, 0), (d, d)).copy_from(e);
                if a == 0 {
                    for i in d..n {
                        out[(i, i)] = Complex64::new(1.0, 0.0);
                    }
                }
                out
            })
            .collect();
        Self {
            elements,
            projective: self.projective,
        }
    }

    /// `max_a ||A_a^2 - A_a||_F`.
    pub fn projectivity_defect(&self) -> f64 {
        self.elements
            .iter()
            .map(idempotency_defect)
            .fold(0.0, f64::max)
    }

    /// Entrywise deviation of `sum_a A_a` from the identity.
    pub fn completeness_defect(&self) -> f64 {
        operator::max_abs_diff(&sum(&self.elements, self.dim()), &identity(self.dim()))
    }
}

fn sum(elements: &[CMatrix], n: usize) -> CMatrix {
    elements.iter().fold(operator::zero(n), |acc, e| acc + e)
}

/// The opposite map at finite dimension: entrywise transpose, no conjugation.
pub fn opposite(m: &CMatrix) -> CMatrix {
    m.transpose()
}

fn check_family(povms: &[Povm], dim: usize, outcomes: usize, who: &str) -> Result<()> {
    for (x, p) in povms.iter().enumerate() {
        if p.dim() != dim {
            return Err(Error::InvalidStrategy(format!(
                "{who} POVM {x} has dimension {} (expected {dim})",
                p.dim()
            )));
        }
        if p.outcomes() != outcomes {
            return Err(Error::InvalidStrategy(format!(
                "{who} POVM {x} has {} outcomes (expected {outcomes})",
                p.outcomes()
            )));
        }
    }
    Ok(())
}

/// A strategy on `C^{dA} (x) C^{dB}`; the state is stored row-major, index `i * dB + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorStrategy {
    dim_a: usize,
    dim_b: usize,
    state: Vec<Complex64>,
    alice: Vec<Povm>,
    bob: Vec<Povm>,
}

impl TensorStrategy {
    pub fn new(
        dim_a: usize,
        dim_b: usize,
        state: Vec<Complex64>,
        alice: Vec<Povm>,
        bob: Vec<Povm>,
    ) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::InvalidStrategy("dimensions must be positive".into()));
        }
        if state.len() != dim_a * dim_b {
            return Err(Error::InvalidStrategy(format!(
                "state has {} amplitudes, expected {}",
                state.len(),
                dim_a * dim_b
            )));
        }
        let norm = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= STATE_NORM_TOL) {
            return Err(Error::InvalidStrategy(format!("state norm is {norm}")));
        }
        if alice.is_empty() || alice.len() != bob.len() {
            return Err(Error::InvalidStrategy(
                "Alice and Bob need the same nonempty question set".into(),
            ));
        }
        let outcomes = alice[0].outcomes();
        check_family(&alice, dim_a, outcomes, "Alice")?;
        check_family(&bob, dim_b, outcomes, "Bob")?;
        Ok(Self {
            dim_a,
            dim_b,
            state,
            alice,
            bob,
        })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn state(&self) -> &[Complex64] {
        &self.state
    }

    pub fn alice(&self) -> &[Povm] {
        &self.alice
    }

    pub fn bob(&self) -> &[Povm] {
        &self.bob
    }

    pub fn num_questions(&self) -> usize {
        self.alice.len()
    }

    pub fn num_answers(&self) -> usize {
        self.alice[0].outcomes()
    }
}

/// A strategy in standard form: state `sigma |tau>`, Alice's POVMs on the left,
/// Bob's POVMs stored as left-algebra matrices acting by right multiplication.
#[derive(Debug, Clone, PartialEq)]
pub struct TracialStrategy {
    sigma: CMatrix,
    alice: Vec<Povm>,
    bob_left: Vec<Povm>,
}

impl TracialStrategy {
    pub fn new(sigma: CMatrix, alice: Vec<Povm>, bob_left: Vec<Povm>) -> Result<Self> {
        let n = sigma.nrows();
        if n == 0 || sigma.ncols() != n {
            return Err(Error::InvalidStrategy(
                "sigma must be square and nonempty".into(),
            ));
        }
        let norm = tau_product(&sigma.adjoint(), &sigma).re;
        if !((norm - 1.0).abs() <= SIGMA_NORM_TOL) {
            return Err(Error::InvalidStrategy(format!(
                "tau(sigma* sigma) = {norm}, expected 1"
            )));
        }
        if alice.is_empty() || alice.len() != bob_left.len() {
            return Err(Error::InvalidStrategy(
                "Alice and Bob need the same nonempty question set".into(),
            ));
        }
        let outcomes = alice[0].outcomes();
        check_family(&alice, n, outcomes, "Alice")?;
        check_family(&bob_left, n, outcomes, "Bob")?;
        Ok(Self {
            sigma,
            alice,
            bob_left,
        })
    }

    /// Symmetric strategy `(sigma, {A}, {A})`.
    pub fn symmetric(sigma: CMatrix, povms: Vec<Povm>) -> Result<Self> {
        Self::new(sigma, povms.clone(), povms)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &CMatrix {
        &self.sigma
    }

    pub fn alice(&self) -> &[Povm] {
        &self.alice
    }

    pub fn bob_left(&self) -> &[Povm] {
        &self.bob_left
    }

    pub fn num_questions(&self) -> usize {
        self.alice.len()
    }

    pub fn num_answers(&self) -> usize {
        self.alice[0].outcomes()
    }

    pub fn is_symmetric(&self) -> bool {
        self.alice == self.bob_left
    }

    pub fn is_projective(&self) -> bool {
        self.alice
            .iter()
            .chain(&self.bob_left)
            .all(Povm::is_projective)
    }
}

/// Rewrites a tensor-product strategy in standard form.
///
/// Both sides are padded to `n = max(dA, dB)`, the coefficient matrix `Psi` of
/// the padded state gives `sigma = sqrt(n) Psi`, and Bob's operators become
/// their transposes.
pub fn embed_tracial(s: &TensorStrategy) -> TracialStrategy {
    let n = s.dim_a.max(s.dim_b);
    let scale = (n as f64).sqrt();
    let mut sigma = operator::zero(n);
    for i in 0..s.dim_a {
        for j in 0..s.dim_b {
            sigma[(i, j)] = s.state[i * s.dim_b + j] * scale;
        }
    }
    let alice = s.alice.iter().map(|p| p.pad(n)).collect();
    let bob_left = s.bob.iter().map(|p| p.pad(n).opposite()).collect();
    TracialStrategy {
        sigma,
        alice,
        bob_left,
    }
}

/// Joint answer probabilities `C(x, y, a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    questions: usize,
    answers: usize,
    data: Vec<f64>,
}

impl Correlation {
    /// Validated constructor; `data` is indexed `((x * nq + y) * na + a) * na + b`.
    pub fn new(questions: usize, answers: usize, data: Vec<f64>) -> Result<Self> {
        let c = Self::new_unchecked(questions, answers, data)?;
        c.validate()?;
        Ok(c)
    }

    pub fn new_unchecked(questions: usize, answers: usize, data: Vec<f64>) -> Result<Self> {
        let expected = questions * questions * answers * answers;
        if data.len() != expected {
            return Err(Error::InvalidCorrelation(format!(
                "table has {} entries, expected {expected}",
                data.len()
            )));
        }
        Ok(Self {
            questions,
            answers,
            data,
        })
    }

    pub fn from_fn(
        questions: usize,
        answers: usize,
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(questions * questions * answers * answers);
        for x in 0..questions {
            for y in 0..questions {
                for a in 0..answers {
                    for b in 0..answers {
                        data.push(f(x, y, a, b));
                    }
                }
            }
        }
        Self {
            questions,
            answers,
            data,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &v) in self.data.iter().enumerate() {
            if !(-CORRELATION_ENTRY_TOL..=1.0 + CORRELATION_ENTRY_TOL).contains(&v) {
                return Err(Error::InvalidCorrelation(format!(
                    "entry {i} = {v} is outside [0, 1]"
                )));
            }
        }
        for x in 0..self.questions {
            for y in 0..self.questions {
                let s = self.block_sum(x, y);
                if !((s - 1.0).abs() <= CORRELATION_SUM_TOL) {
                    return Err(Error::InvalidCorrelation(format!(
                        "sum over answers for ({x},{y}) is {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn block_sum(&self, x: usize, y: usize) -> f64 {
        let na = self.answers;
        let start = (x * self.questions + y) * na * na;
        self.data[start..start + na * na].iter().sum()
    }

    pub fn questions(&self) -> usize {
        self.questions
    }

    pub fn answers(&self) -> usize {
        self.answers
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        let (nq, na) = (self.questions, self.answers);
        self.data[((x * nq + y) * na + a) * na + b]
    }

    /// `sum_i w_i C_i`; all tables must share shapes.
    pub fn mixture(parts: &[(f64, &Correlation)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidCorrelation("empty mixture".into()))?
            .1;
        let mut data = vec![0.0; first.data.len()];
        for (w, c) in parts {
            if c.questions != first.questions || c.answers != first.answers {
                return Err(Error::AlphabetMismatch(
                    "mixture of differently shaped tables".into(),
                ));
            }
            for (d, v) in data.iter_mut().zip(&c.data) {
                *d += w * v;
            }
        }
        Ok(Self {
            questions: first.questions,
            answers: first.answers,
            data,
        })
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Correlation) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `Re tau(sigma* A_a^x sigma B_b^y)` for arbitrary families sharing one `sigma`.
pub fn correlation_of(sigma: &CMatrix, alice: &[Povm], bob_left: &[Povm]) -> Result<Correlation> {
    let nq = alice.len();
    if nq == 0 || bob_left.len() != nq {
        return Err(Error::InvalidStrategy("question sets differ".into()));
    }
    let na = alice[0].outcomes();
    let sigma_adj = sigma.adjoint();
    let conjugated: Vec<Vec<CMatrix>> = alice
        .iter()
        .map(|p| {
            p.elements()
                .iter()
                .map(|a| &sigma_adj * a * sigma)
                .collect()
        })
        .collect();
    let mut data = Vec::with_capacity(nq * nq * na * na);
    for xa in &conjugated {
        for by in bob_left {
            for m in xa {
                for b in by.elements() {
                    let z = tau_product(m, b);
                    if z.im.abs() > IMAGINARY_RESIDUE_TOL {
                        return Err(Error::NonRealCorrelation {
                            residue: z.im.abs(),
                        });
                    }
                    data.push(z.re);
                }
            }
        }
    }
    Correlation::new_unchecked(nq, na, data)
}

/// Correlation of a tracial strategy, `C(x,y,a,b) = Re tau(sigma* A_a^x sigma B_b^y)`.
pub fn correlation(s: &TracialStrategy) -> Result<Correlation> {
    correlation_of(&s.sigma, &s.alice, &s.bob_left)
}

fn check_alphabets(game: &Game, c: &Correlation) -> Result<()> {
    if game.num_questions() != c.questions() || game.num_answers() != c.answers() {
        return Err(Error::AlphabetMismatch(format!(
            "game has {} questions / {} answers, correlation has {} / {}",
            game.num_questions(),
            game.num_answers(),
            c.questions(),
            c.answers()
        )));
    }
    Ok(())
}

/// `sum_{x,y} mu(x,y) sum_{a,b} V(x,y,a,b) C(x,y,a,b)`.
pub fn value_of_correlation(game: &Game, c: &Correlation) -> Result<f64> {
    check_alphabets(game, c)?;
    let na = game.num_answers();
    let mut total = 0.0;
    for (x, y, p) in game.support() {
        let mut inner = 0.0;
        for a in 0..na {
            for b in 0..na {
                if game.win(x, y, a, b) {
                    inner += c.get(x, y, a, b);
                }
            }
        }
        total += p * inner;
    }
    Ok(total)
}

/// Winning probability of a tracial strategy.
pub fn winning_probability(game: &Game, s: &TracialStrategy) -> Result<f64> {
    if game.num_questions() != s.num_questions() || game.num_answers() != s.num_answers() {
        return Err(Error::AlphabetMismatch(format!(
            "game has {} questions / {} answers, strategy has {} / {}",
            game.num_questions(),
            game.num_answers(),
            s.num_questions(),
            s.num_answers()
        )));
    }
    value_of_correlation(game, &correlation(s)?)
}

/// `delta_sync = E_{x ~ mu_x} sum_{a != b} C(x, x, a, b)`.
pub fn synchronicity(game: &Game, c: &Correlation) -> Result<f64> {
    if !is_synchronous_game(game) {
        return Err(Error::NotSynchronousGame);
    }
    check_alphabets(game, c)?;
    Ok(synchronicity_unchecked(game, c))
}

/// Same quantity without the synchronous-game precondition.
pub(crate) fn synchronicity_unchecked(game: &Game, c: &Correlation) -> f64 {
    let na = game.num_answers();
    (0..game.num_questions())
        .map(|x| {
            let off: f64 = (0..na)
                .flat_map(|a| (0..na).filter(move |&b| b != a).map(move |b| (a, b)))
                .map(|(a, b)| c.get(x, x, a, b))
                .sum();
            game.mu_x(x) * off
        })
        .sum()
}

/// `E_{(x,y) ~ mu} sum_{a,b} |C1 - C2|`.
pub fn correlation_distance(game: &Game, c1: &Correlation, c2: &Correlation) -> Result<f64> {
    check_alphabets(game, c1)?;
    check_alphabets(game, c2)?;
    let na = game.num_answers();
    let mut total = 0.0;
    for (x, y, p) in game.support() {
        let mut inner = 0.0;
        for a in 0..na {
            for b in 0..na {
                inner += (c1.get(x, y, a, b) - c2.get(x, y, a, b)).abs();
            }
        }
        total += p * inner;
    }
    Ok(total)
}
