//! JSON files for games, strategies, correlations and decompositions.
//!
//! Every document carries `schema_version` and `kind`. Complex numbers are
//! `[re, im]` pairs, matrices are row-major nested arrays, and correlation
//! tables nest as `data[x][y][a][b]`. Output is pretty-printed with a fixed key
//! order, so saving a loaded file reproduces it byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::operator::CMatrix;
use crate::rounding::{RoundingDecomposition, Slice};
use crate::strategy::{Correlation, Povm, TensorStrategy};

pub const SCHEMA_VERSION: u32 = 1;

type Pair = [f64; 2];
type MatrixJson = Vec<Vec<Pair>>;

fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
        .collect()
}

fn matrix_from_json(rows: &MatrixJson, what: &str) -> Result<CMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Parse(format!("{what}: ragged matrix rows")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn povm_to_json(p: &Povm) -> Vec<MatrixJson> {
    p.elements().iter().map(matrix_to_json).collect()
}

fn povm_from_json(elements: &[MatrixJson], what: &str) -> Result<Povm> {
    let mats = elements
        .iter()
        .enumerate()
        .map(|(a, m)| matrix_from_json(m, &format!("{what}[{a}]")))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(mats).map_err(|e| match e {
        Error::InvalidPovm(msg) => Error::InvalidPovm(format!("{what}: {msg}")),
        other => other,
    })
}

fn table_to_json(c: &Correlation) -> Vec<Vec<Vec<Vec<f64>>>> {
    let (nq, na) = (c.questions(), c.answers());
    (0..nq)
        .map(|x| {
            (0..nq)
                .map(|y| {
                    (0..na)
                        .map(|a| (0..na).map(|b| c.get(x, y, a, b)).collect())
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn table_from_json(t: &[Vec<Vec<Vec<f64>>>], what: &str) -> Result<Correlation> {
    let nq = t.len();
    let na = t.first().and_then(|r| r.first()).map_or(0, Vec::len);
    let mut data = Vec::with_capacity(nq * nq * na * na);
    for row in t {
        if row.len() != nq {
            return Err(Error::Parse(format!(
                "{what}: expected {nq} second-question entries"
            )));
        }
        for block in row {
            if block.len() != na || block.iter().any(|r| r.len() != na) {
                return Err(Error::Parse(format!(
                    "{what}: expected {na}x{na} answer blocks"
                )));
            }
            data.extend(block.iter().flatten());
        }
    }
    Correlation::new_unchecked(nq, na, data)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameJson {
    schema_version: u32,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    questions: Vec<String>,
    answers: Vec<String>,
    mu: Vec<Vec<f64>>,
    win: Vec<Vec<Vec<Vec<bool>>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyJson {
    schema_version: u32,
    kind: String,
    dim_a: usize,
    dim_b: usize,
    state: Vec<Pair>,
    alice: Vec<Vec<MatrixJson>>,
    bob: Vec<Vec<MatrixJson>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrelationJson {
    schema_version: u32,
    kind: String,
    data: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SliceJson {
    weight: f64,
    measure: f64,
    sub_dim: usize,
    breakpoint: usize,
    basis: MatrixJson,
    pvms: Vec<Vec<MatrixJson>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecompositionJson {
    schema_version: u32,
    kind: String,
    slices: Vec<SliceJson>,
    correlations: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
    mixed: Vec<Vec<Vec<Vec<f64>>>>,
    diagnostics: BTreeMap<String, f64>,
}

/// Checks `schema_version` and `kind` before the typed parse so that version
/// errors are reported as such rather than as shape errors.
fn parse_document<T: DeserializeOwned>(text: &str, kind: &str) -> Result<T> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse("expected a JSON object at top level".into()))?;
    let version = obj
        .get("schema_version")
        .ok_or_else(|| Error::Parse("missing field `schema_version`".into()))?
        .as_u64()
        .ok_or_else(|| Error::Parse("field `schema_version` must be an integer".into()))?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(Error::SchemaVersionMismatch {
            expected: SCHEMA_VERSION,
            found: u32::try_from(version).unwrap_or(u32::MAX),
        });
    }
    match obj.get("kind").and_then(|k| k.as_str()) {
        Some(k) if k == kind => {}
        Some(k) => {
            return Err(Error::Parse(format!(
                "field `kind`: expected \"{kind}\", found \"{k}\""
            )))
        }
        None => return Err(Error::Parse("missing field `kind`".into())),
    }
    // Re-parse from text so serde reports line and column on shape errors.
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn to_text<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
    s.push('\n');
    s
}

pub fn game_to_json(game: &Game) -> String {
    let (nq, na) = (game.num_questions(), game.num_answers());
    let doc = GameJson {
        schema_version: SCHEMA_VERSION,
        kind: "game".into(),
        name: game.name().map(str::to_owned),
        questions: game.question_labels().to_vec(),
        answers: game.answer_labels().to_vec(),
        mu: (0..nq)
            .map(|x| (0..nq).map(|y| game.mu(x, y)).collect())
            .collect(),
        win: (0..nq)
            .map(|x| {
                (0..nq)
                    .map(|y| {
                        (0..na)
                            .map(|a| (0..na).map(|b| game.win(x, y, a, b)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect(),
    };
    to_text(&doc)
}

pub fn game_from_json(text: &str) -> Result<Game> {
    let doc: GameJson = parse_document(text, "game")?;
    let (nq, na) = (doc.questions.len(), doc.answers.len());
    let shape_ok = doc.win.len() == nq
        && doc.win.iter().all(|r| {
            r.len() == nq
                && r.iter()
                    .all(|b| b.len() == na && b.iter().all(|row| row.len() == na))
        });
    if !shape_ok {
        return Err(Error::Parse(format!(
            "field `win` must have shape {nq}x{nq}x{na}x{na}"
        )));
    }
    let win = doc.win;
    let game = Game::new(doc.questions, doc.answers, doc.mu, |x, y, a, b| {
        win[x][y][a][b]
    })?;
    Ok(match doc.name {
        Some(n) => game.with_name(n),
        None => game,
    })
}

pub fn strategy_to_json(s: &TensorStrategy) -> String {
    let doc = StrategyJson {
        schema_version: SCHEMA_VERSION,
        kind: "tensor_strategy".into(),
        dim_a: s.dim_a(),
        dim_b: s.dim_b(),
        state: s.state().iter().copied().map(pair).collect(),
        alice: s.alice().iter().map(povm_to_json).collect(),
        bob: s.bob().iter().map(povm_to_json).collect(),
    };
    to_text(&doc)
}

pub fn strategy_from_json(text: &str) -> Result<TensorStrategy> {
    let doc: StrategyJson = parse_document(text, "tensor_strategy")?;
    let state = doc
        .state
        .iter()
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    let alice = doc
        .alice
        .iter()
        .enumerate()
        .map(|(x, p)| povm_from_json(p, &format!("alice[{x}]")))
        .collect::<Result<Vec<_>>>()?;
    let bob = doc
        .bob
        .iter()
        .enumerate()
        .map(|(y, p)| povm_from_json(p, &format!("bob[{y}]")))
        .collect::<Result<Vec<_>>>()?;
    TensorStrategy::new(doc.dim_a, doc.dim_b, state, alice, bob)
}

pub fn correlation_to_json(c: &Correlation) -> String {
    to_text(&CorrelationJson {
        schema_version: SCHEMA_VERSION,
        kind: "correlation".into(),
        data: table_to_json(c),
    })
}

/// Parses and validates a correlation table.
pub fn correlation_from_json(text: &str) -> Result<Correlation> {
    let doc: CorrelationJson = parse_document(text, "correlation")?;
    let c = table_from_json(&doc.data, "data")?;
    c.validate()?;
    Ok(c)
}

pub fn decomposition_to_json(d: &RoundingDecomposition) -> String {
    let doc = DecompositionJson {
        schema_version: SCHEMA_VERSION,
        kind: "rounding_decomposition".into(),
        slices: d
            .slices
            .iter()
            .map(|s| SliceJson {
                weight: s.weight,
                measure: s.measure,
                sub_dim: s.sub_dim,
                breakpoint: s.breakpoint,
                basis: matrix_to_json(&s.basis),
                pvms: s.pvms.iter().map(povm_to_json).collect(),
            })
            .collect(),
        correlations: d.correlations.iter().map(table_to_json).collect(),
        mixed: table_to_json(&d.mixed),
        diagnostics: d.diagnostics.clone(),
    };
    to_text(&doc)
}

pub fn decomposition_from_json(text: &str) -> Result<RoundingDecomposition> {
    let doc: DecompositionJson = parse_document(text, "rounding_decomposition")?;
    let slices = doc
        .slices
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let basis = matrix_from_json(&s.basis, &format!("slices[{j}].basis"))?;
            if basis.ncols() != s.sub_dim {
                return Err(Error::Parse(format!(
                    "slices[{j}]: basis has {} columns but sub_dim is {}",
                    basis.ncols(),
                    s.sub_dim
                )));
            }
            let pvms = s
                .pvms
                .iter()
                .enumerate()
                .map(|(x, p)| povm_from_json(p, &format!("slices[{j}].pvms[{x}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(Slice {
                weight: s.weight,
                measure: s.measure,
                projector: &basis * basis.adjoint(),
                basis,
                sub_dim: s.sub_dim,
                breakpoint: s.breakpoint,
                pvms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let correlations = doc
        .correlations
        .iter()
        .enumerate()
        .map(|(j, t)| table_from_json(t, &format!("correlations[{j}]")))
        .collect::<Result<Vec<_>>>()?;
    if correlations.len() != slices.len() {
        return Err(Error::Parse(
            "one correlation table per slice expected".into(),
        ));
    }
    let mixed = table_from_json(&doc.mixed, "mixed")?;
    Ok(RoundingDecomposition {
        slices,
        correlations,
        mixed,
        diagnostics: doc.diagnostics,
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_game(path: impl AsRef<Path>) -> Result<Game> {
    game_from_json(&read(path.as_ref())?)
}

pub fn save_game(path: impl AsRef<Path>, game: &Game) -> Result<()> {
    write(path.as_ref(), &game_to_json(game))
}

pub fn load_strategy(path: impl AsRef<Path>) -> Result<TensorStrategy> {
    strategy_from_json(&read(path.as_ref())?)
}

pub fn save_strategy(path: impl AsRef<Path>, s: &TensorStrategy) -> Result<()> {
    write(path.as_ref(), &strategy_to_json(s))
}

pub fn load_correlation(path: impl AsRef<Path>) -> Result<Correlation> {
    correlation_from_json(&read(path.as_ref())?)
}

pub fn save_correlation(path: impl AsRef<Path>, c: &Correlation) -> Result<()> {
    write(path.as_ref(), &correlation_to_json(c))
}

pub fn load_decomposition(path: impl AsRef<Path>) -> Result<RoundingDecomposition> {
    decomposition_from_json(&read(path.as_ref())?)
}

pub fn save_decomposition(path: impl AsRef<Path>, d: &RoundingDecomposition) -> Result<()> {
    write(path.as_ref(), &decomposition_to_json(d))
}
