//! Two-player nonlocal games with a shared question set and a shared answer set.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance for the normalization of `mu` and the stored marginal.
pub const DISTRIBUTION_TOL: f64 = 1e-12;

/// A nonlocal game `(X^2, A^2, mu, V)`.
///
/// Questions and answers are dense index ranges `0..n`; labels are kept only for I/O.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    name: Option<String>,
    question_labels: Vec<String>,
    answer_labels: Vec<String>,
    mu: Vec<f64>,
    mu_x: Vec<f64>,
    win: Vec<bool>,
}

/// A broken [`Game`] invariant, as reported by [`validate_game`].
#[derive(Debug, Clone, PartialEq)]
pub enum GameViolation {
    EmptyQuestions,
    EmptyAnswers,
    NonFiniteProbability {
        x: usize,
        y: usize,
    },
    NegativeProbability {
        x: usize,
        y: usize,
        value: f64,
    },
    DistributionNotNormalized {
        sum: f64,
    },
    MarginalInconsistent {
        x: usize,
        stored: f64,
        computed: f64,
    },
}

impl fmt::Display for GameViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameViolation::EmptyQuestions => write!(f, "question set is empty"),
            GameViolation::EmptyAnswers => write!(f, "answer set is empty"),
            GameViolation::NonFiniteProbability { x, y } => {
                write!(f, "mu({x},{y}) is not finite")
            }
            GameViolation::NegativeProbability { x, y, value } => {
                write!(f, "mu({x},{y}) = {value} is negative")
            }
            GameViolation::DistributionNotNormalized { sum } => {
                write!(f, "mu sums to {sum}, not 1")
            }
            GameViolation::MarginalInconsistent {
                x,
                stored,
                computed,
            } => write!(
                f,
                "marginal mu_x({x}) stored as {stored} but mu gives {computed}"
            ),
        }
    }
}

impl Game {
    /// Builds and validates a game. `mu` is indexed `mu[x][y]`.
    pub fn new(
        question_labels: Vec<String>,
        answer_labels: Vec<String>,
        mu: Vec<Vec<f64>>,
        win: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let game = Self::new_unchecked(question_labels, answer_labels, mu, win)?;
        let violations = validate_game(&game);
        if violations.is_empty() {
            Ok(game)
        } else {
            Err(Error::InvalidGame(join_violations(&violations)))
        }
    }

    /// Builds a game without checking the distribution; only the shapes are checked.
    pub fn new_unchecked(
        question_labels: Vec<String>,
        answer_labels: Vec<String>,
        mu: Vec<Vec<f64>>,
        win: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let nq = question_labels.len();
        let na = answer_labels.len();
        if mu.len() != nq || mu.iter().any(|row| row.len() != nq) {
            return Err(Error::InvalidGame(format!("mu must be a {nq}x{nq} matrix")));
        }
        let flat: Vec<f64> = mu.into_iter().flatten().collect();
        let mu_x = marginal(&flat, nq);
        let mut table = Vec::with_capacity(nq * nq * na * na);
        for x in 0..nq {
            for y in 0..nq {
                for a in 0..na {
                    for b in 0..na {
                        table.push(win(x, y, a, b));
                    }
                }
            }
        }
        Ok(Self {
            name: None,
            question_labels,
            answer_labels,
            mu: flat,
            mu_x,
            win: table,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn num_questions(&self) -> usize {
        self.question_labels.len()
    }

    pub fn num_answers(&self) -> usize {
        self.answer_labels.len()
    }

    pub fn question_labels(&self) -> &[String] {
        &self.question_labels
    }

    pub fn answer_labels(&self) -> &[String] {
        &self.answer_labels
    }

    pub fn mu(&self, x: usize, y: usize) -> f64 {
        self.mu[x * self.num_questions() + y]
    }

    /// Marginal of the first question, `mu_x(x) = sum_y mu(x, y)`.
    pub fn mu_x(&self, x: usize) -> f64 {
        self.mu_x[x]
    }

    pub fn win(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        let (nq, na) = (self.num_questions(), self.num_answers());
        self.win[((x * nq + y) * na + a) * na + b]
    }

    /// Question pairs with positive probability, in row-major order.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let nq = self.num_questions();
        (0..nq * nq).filter_map(move |i| {
            let p = self.mu[i];
            (p > 0.0).then_some((i / nq, i % nq, p))
        })
    }
}

fn marginal(mu: &[f64], nq: usize) -> Vec<f64> {
    (0..nq)
        .map(|x| mu[x * nq..(x + 1) * nq].iter().sum())
        .collect()
}

fn join_violations(v: &[GameViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Lists every broken invariant; empty iff the game is well formed.
pub fn validate_game(game: &Game) -> Vec<GameViolation> {
    let mut out = Vec::new();
    let nq = game.num_questions();
    if nq == 0 {
        out.push(GameViolation::EmptyQuestions);
    }
    if game.num_answers() == 0 {
        out.push(GameViolation::EmptyAnswers);
    }
    for x in 0..nq {
        for y in 0..nq {
            let p = game.mu(x, y);
            if !p.is_finite() {
                out.push(GameViolation::NonFiniteProbability { x, y });
            } else if p < 0.0 {
                out.push(GameViolation::NegativeProbability { x, y, value: p });
            }
        }
    }
    let sum: f64 = game.mu.iter().sum();
    if !((sum - 1.0).abs() <= DISTRIBUTION_TOL) {
        out.push(GameViolation::DistributionNotNormalized { sum });
    }
    let computed = marginal(&game.mu, nq);
    for (x, (&stored, &c)) in game.mu_x.iter().zip(&computed).enumerate() {
        if !((stored - c).abs() <= DISTRIBUTION_TOL) {
            out.push(GameViolation::MarginalInconsistent {
                x,
                stored,
                computed: c,
            });
        }
    }
    out
}

/// `V(x, x, a, b) = [a == b]` wherever `mu(x, x) > 0`; the rule is vacuous on
/// diagonal pairs the referee never asks.
pub fn is_synchronous_game(game: &Game) -> bool {
    let na = game.num_answers();
    (0..game.num_questions())
        .filter(|&x| game.mu(x, x) > 0.0)
        .all(|x| (0..na).all(|a| (0..na).all(|b| game.win(x, x, a, b) == (a == b))))
}

/// Adds a synchronicity test: with probability `c` the referee samples `x ~ mu_x`
/// and asks `(x, x)`. Diagonal pairs enforce `V(x, x, a, b) = [a == b]`.
pub fn with_sync_test(game: &Game, c: f64) -> Result<Game> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidProbability(c));
    }
    let nq = game.num_questions();
    let mu: Vec<Vec<f64>> = (0..nq)
        .map(|x| {
            (0..nq)
                .map(|y| {
                    let diag = if x == y { game.mu_x(x) } else { 0.0 };
                    (1.0 - c) * game.mu(x, y) + c * diag
                })
                .collect()
        })
        .collect();
    let mut out = Game::new_unchecked(
        game.question_labels.clone(),
        game.answer_labels.clone(),
        mu,
        |x, y, a, b| if x == y { a == b } else { game.win(x, y, a, b) },
    )?;
    out.name = game.name.as_ref().map(|n| format!("{n}+sync({c})"));
    Ok(out)
}

/// Graph `k`-coloring game: questions are vertices, answers are colors, `mu` is
/// uniform over diagonal pairs and ordered edge pairs.
pub fn coloring_game(adjacency: &[Vec<bool>], k: usize) -> Result<Game> {
    let n = adjacency.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if k == 0 {
        return Err(Error::InvalidGame(
            "coloring game needs at least one color".into(),
        ));
    }
    for (i, row) in adjacency.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidGame("adjacency matrix is not square".into()));
        }
        if row[i] {
            return Err(Error::InvalidGame(format!("self-loop at vertex {i}")));
        }
        for (j, &e) in row.iter().enumerate() {
            if e != adjacency[j][i] {
                return Err(Error::InvalidGame(format!(
                    "adjacency is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    let pairs = n + adjacency.iter().flatten().filter(|&&e| e).count();
    let w = 1.0 / pairs as f64;
    let mu = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| if x == y || adjacency[x][y] { w } else { 0.0 })
                .collect()
        })
        .collect();
    let questions = (0..n).map(|v| format!("v{v}")).collect();
    let answers = (0..k).map(|c| format!("c{c}")).collect();
    Game::new(questions, answers, mu, |x, y, a, b| {
        if x == y {
            a == b
        } else if adjacency[x][y] {
            a != b
        } else {
            true
        }
    })
}

pub fn complete_graph(n: usize) -> Vec<Vec<bool>> {
    (0..n).map(|i| (0..n).map(|j| i != j).collect()).collect()
}

pub fn cycle_graph(n: usize) -> Vec<Vec<bool>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && ((i + 1) % n == j || (j + 1) % n == i))
                .collect()
        })
        .collect()
}

pub fn path_graph(n: usize) -> Vec<Vec<bool>> {
    (0..n)
        .map(|i| (0..n).map(|j| i.abs_diff(j) == 1).collect())
        .collect()
}

/// Resolves a builtin game name: `k3`, `complete:N:K`, `cycle:N:K`, `path:N:K`.
pub fn builtin_game(spec: &str) -> Result<Game> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Parse(format!("invalid number '{s}' in game spec '{spec}'")))
    };
    let (graph, k) = match parts.as_slice() {
        ["k3"] => (complete_graph(3), 3),
        ["edge"] => (path_graph(2), 2),
        [kind, n, k] => {
            let n = parse(n)?;
            let graph = match *kind {
                "complete" => complete_graph(n),
                "cycle" => cycle_graph(n),
                "path" => path_graph(n),
                other => return Err(Error::Parse(format!("unknown graph family '{other}'"))),
            };
            (graph, parse(k)?)
        }
        _ => return Err(Error::Parse(format!("unknown builtin game '{spec}'"))),
    };
    Ok(coloring_game(&graph, k)?.with_name(spec))
}

/// Classical value by enumerating all pairs of deterministic strategies.
/// Exponential in `|X|`; intended for small test games.
pub fn classical_value(game: &Game) -> f64 {
    let nq = game.num_questions() as u32;
    let na = game.num_answers();
    let total = na.pow(nq);
    let decode = |mut code: usize| -> Vec<usize> {
        (0..nq)
            .map(|_| {
                let a = code % na;
                code /= na;
                a
            })
            .collect()
    };
    let mut best = 0.0f64;
    for fa in 0..total {
        let f = decode(fa);
        for gb in 0..total {
            let g = decode(gb);
            let v: f64 = game
                .support()
                .filter(|&(x, y, _)| game.win(x, y, f[x], g[y]))
                .map(|(_, _, p)| p)
                .sum();
            best = best.max(v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn coloring_games_are_synchronous() {
        let g = builtin_game("k3").unwrap();
        assert!(is_synchronous_game(&g));
        assert!(validate_game(&g).is_empty());
        assert_eq!(g.num_questions(), 3);
        assert!((g.mu(0, 1) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_rule_violation_detected() {
        let g = Game::new(
            labels(2),
            labels(2),
            vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            |x, _, a, b| !(x == 1 && a == b && a == 0),
        )
        .unwrap();
        assert!(!is_synchronous_game(&g));
    }

    #[test]
    fn diagonal_rule_is_vacuous_off_support() {
        let g = Game::new(
            labels(2),
            labels(2),
            vec![vec![0.0, 0.5], vec![0.5, 0.0]],
            |_, _, _, _| false,
        )
        .unwrap();
        assert!(is_synchronous_game(&g));
    }

    #[test]
    fn sync_test_mixture() {
        let base = Game::new(
            labels(2),
            labels(2),
            vec![vec![0.0, 0.5], vec![0.5, 0.0]],
            |x, y, a, b| x == y && a == b || x != y,
        )
        .unwrap();
        let same = with_sync_test(&base, 0.0).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(same.mu(x, y), base.mu(x, y));
            }
        }
        let half = with_sync_test(&base, 0.5).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!((half.mu(x, y) - 0.25).abs() < 1e-15);
            }
        }
        let full = with_sync_test(&base, 1.0).unwrap();
        assert!((full.mu(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(full.mu(0, 1), 0.0);
        assert!(is_synchronous_game(&full));
        assert!(matches!(
            with_sync_test(&base, 1.5),
            Err(Error::InvalidProbability(_))
        ));
    }

    #[test]
    fn coloring_values() {
        assert!((classical_value(&builtin_game("k3").unwrap()) - 1.0).abs() < 1e-12);
        assert!(classical_value(&builtin_game("complete:3:2").unwrap()) < 1.0 - 1e-9);
        assert!((classical_value(&builtin_game("edge").unwrap()) - 1.0).abs() < 1e-12);
        assert!(matches!(coloring_game(&[], 2), Err(Error::EmptyGraph)));
    }

    #[test]
    fn validation_reports_violations() {
        let g = Game::new_unchecked(
            labels(2),
            labels(2),
            vec![vec![0.45, 0.0], vec![0.0, 0.45]],
            |_, _, _, _| true,
        )
        .unwrap();
        assert_eq!(
            validate_game(&g),
            vec![GameViolation::DistributionNotNormalized { sum: 0.9 }]
        );
        let g = Game::new_unchecked(
            labels(2),
            labels(2),
            vec![vec![1.1, 0.0], vec![0.0, -0.1]],
            |_, _, _, _| true,
        )
        .unwrap();
        let v = validate_game(&g);
        assert_eq!(v.len(), 1);
        assert!(matches!(
            v[0],
            GameViolation::NegativeProbability { x: 1, y: 1, .. }
        ));
    }
}
