//! Command-line front end. The `syncround` binary is a thin wrapper around [`run`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::game::{builtin_game, is_synchronous_game, with_sync_test, Game};
use crate::generate::{builtin_strategy, perturb_strategy};
use crate::io;
use crate::rounding::{lemma_report, round_correlation};
use crate::soundness::{soundness_transfer_demo, Kappa, OwnMeasurements, SoundnessInstance};
use crate::strategy::{
    correlation, embed_tracial, synchronicity, value_of_correlation, TensorStrategy,
};
use crate::sweep::{configure_threads, run_sweep_to_csv, SweepConfig};

/// Distances below this are reported as `dist≤1e-8`.
const EXACT_DISTANCE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "syncround",
    version,
    about = "Round approximately synchronous strategies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the correlation, winning probability and synchronicity of a strategy.
    Evaluate(Input),
    /// Play the game with an added synchronicity test and check delta <= eps / c.
    Sync {
        #[command(flatten)]
        input: Input,
        /// Probability of asking a same-question pair.
        #[arg(long = "c", default_value_t = 0.5)]
        c: f64,
    },
    /// Round a strategy and write the decomposition.
    Round(Input),
    /// Evaluate both sides of every lemma inequality.
    Lemmas(Input),
    /// Perturbation sweep with CSV rows and fitted envelopes.
    Sweep(SweepArgs),
    /// Transfer a soundness bound through the rounding.
    SoundnessDemo {
        #[command(flatten)]
        input: Input,
        /// `zero`, `linear:SLOPE` or `power:P`.
        #[arg(long, default_value = "linear:1")]
        kappa: String,
    },
}

#[derive(Debug, Args)]
pub struct Input {
    /// Builtin game (`k3`, `edge`, `complete:N:K`, `cycle:N:K`, `path:N:K`) or a JSON file.
    #[arg(long, default_value = "k3")]
    pub game: String,
    /// Builtin strategy (`classical`, `maxent`, `rotated`, `skewed`, `random:DA:DB:SEED`) or a JSON file.
    #[arg(long, default_value = "maxent")]
    pub strategy: String,
    /// Perturb the strategy by this amount before use.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a JSON result here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "k3")]
    pub game: String,
    #[arg(long, default_value = "maxent")]
    pub strategy: String,
    /// Comma-separated eta grid; defaults to five log-spaced points in [1e-4, 1e-1].
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Envelope JSON destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall time per run (makes output nondeterministic).
    #[arg(long)]
    pub timing: bool,
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(out, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Evaluate(input) => evaluate(&input, out),
        Command::Sync { input, c } => sync(&input, c, out),
        Command::Round(input) => round(&input, out),
        Command::Lemmas(input) => lemmas(&input, out),
        Command::Sweep(args) => sweep(&args, out),
        Command::SoundnessDemo { input, kappa } => soundness_demo(&input, &kappa, out),
    }
}

/// A builtin name, or a JSON file when the argument names an existing path.
pub fn resolve_game(spec: &str) -> Result<Game> {
    if Path::new(spec).is_file() {
        io::load_game(spec)
    } else {
        builtin_game(spec)
    }
}

pub fn resolve_strategy(spec: &str, game: &Game) -> Result<TensorStrategy> {
    if Path::new(spec).is_file() {
        io::load_strategy(spec)
    } else {
        builtin_strategy(spec, game)
    }
}

pub fn parse_kappa(spec: &str) -> Result<Kappa> {
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("invalid number '{s}' in kappa '{spec}'")))
    };
    match spec.split_once(':') {
        None if spec == "zero" => Ok(Kappa::Zero),
        Some(("linear", s)) => Ok(Kappa::Linear(num(s)?)),
        Some(("power", p)) => Ok(Kappa::Power(num(p)?)),
        _ => Err(Error::Parse(format!(
            "unknown kappa '{spec}' (expected zero, linear:S or power:P)"
        ))),
    }
}

fn load(input: &Input) -> Result<(Game, TensorStrategy)> {
    let game = resolve_game(&input.game)?;
    let mut s = resolve_strategy(&input.strategy, &game)?;
    if let Some(eta) = input.eta {
        s = perturb_strategy(&s, eta, input.seed)?;
    }
    Ok((game, s))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn evaluate(input: &Input, out: &mut dyn Write) -> Result<()> {
    let (game, s) = load(input)?;
    let c = correlation(&embed_tracial(&s))?;
    let value = value_of_correlation(&game, &c)?;
    let (q, a) = (game.question_labels(), game.answer_labels());
    writeln!(out, "x\ty\ta\tb\tp")?;
    for x in 0..game.num_questions() {
        for y in 0..game.num_questions() {
            for ai in 0..game.num_answers() {
                for bi in 0..game.num_answers() {
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{:.6}",
                        q[x],
                        q[y],
                        a[ai],
                        a[bi],
                        c.get(x, y, ai, bi)
                    )?;
                }
            }
        }
    }
    writeln!(out, "value {value:.6}")?;
    if is_synchronous_game(&game) {
        writeln!(out, "delta_sync {:.6}", synchronicity(&game, &c)?)?;
    } else {
        writeln!(out, "delta_sync n/a (game is not synchronous)")?;
    }
    if let Some(path) = &input.out {
        write_file(path, &io::correlation_to_json(&c))?;
    }
    Ok(())
}

fn sync(input: &Input, c: f64, out: &mut dyn Write) -> Result<()> {
    let (game, s) = load(input)?;
    let tested = with_sync_test(&game, c)?;
    let corr = correlation(&embed_tracial(&s))?;
    let delta = synchronicity(&game, &corr)?;
    let value = value_of_correlation(&game, &corr)?;
    let tested_value = value_of_correlation(&tested, &corr)?;
    let eps = (1.0 - tested_value).max(0.0);
    writeln!(out, "c {c:.6}")?;
    writeln!(out, "value {value:.6}")?;
    writeln!(out, "tested_value {tested_value:.6}")?;
    writeln!(out, "delta_sync {delta:.6}")?;
    if c > 0.0 {
        let bound = eps / c;
        let ok = delta <= bound + 1e-12;
        writeln!(
            out,
            "bound eps/c {bound:.6} {}",
            if ok { "holds" } else { "VIOLATED" }
        )?;
        if !ok {
            return Err(Error::BoundViolated {
                error: delta,
                bound,
            });
        }
    } else {
        writeln!(out, "bound eps/c undefined for c = 0")?;
    }
    Ok(())
}

fn round(input: &Input, out: &mut dyn Write) -> Result<()> {
    let (game, s) = load(input)?;
    let dec = round_correlation(&game, &s)?;
    let delta = dec.diagnostic("delta_in").unwrap_or(f64::NAN);
    let dist = dec.diagnostic("distance").unwrap_or(f64::NAN);
    let dist = if dist <= EXACT_DISTANCE {
        "dist≤1e-8".to_string()
    } else {
        format!("dist={dist:.3e}")
    };
    writeln!(out, "slices={} delta={delta:.3e} {dist}", dec.slices.len())?;
    if let Some(path) = &input.out {
        write_file(path, &io::decomposition_to_json(&dec))?;
    }
    Ok(())
}

fn lemmas(input: &Input, out: &mut dyn Write) -> Result<()> {
    let (game, s) = load(input)?;
    let report = lemma_report(&game, &embed_tracial(&s))?;
    writeln!(
        out,
        "{:<30} {:>14} {:>14} {:>14}",
        "lemma", "lhs", "rhs", "slack"
    )?;
    for (name, c) in &report {
        writeln!(
            out,
            "{name:<30} {:>14.6e} {:>14.6e} {:>14.6e}",
            c.lhs, c.rhs, c.slack
        )?;
    }
    if let Some(path) = &input.out {
        let map: std::collections::BTreeMap<_, _> = report
            .iter()
            .map(|(k, c)| {
                (
                    k.clone(),
                    serde_json::json!({"lhs": c.lhs, "rhs": c.rhs, "slack": c.slack}),
                )
            })
            .collect();
        let mut text = serde_json::to_string_pretty(&map).expect("report serializes");
        text.push('\n');
        write_file(path, &text)?;
    }
    Ok(())
}

fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    configure_threads();
    let game = resolve_game(&args.game)?;
    let base = resolve_strategy(&args.strategy, &game)?;
    let mut config = SweepConfig::log_grid(1e-4, 1e-1, 5, args.trials, args.seed);
    if !args.eta.is_empty() {
        config.etas = args.eta.clone();
    }
    config.record_timing = args.timing;
    config.validate()?;
    let report = match &args.csv {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            run_sweep_to_csv(&game, &base, &config, &mut file)?
        }
        None => run_sweep_to_csv(&game, &base, &config, out)?,
    };
    let env = &report.envelopes.distance;
    writeln!(
        out,
        "rows={} flagged={} fitted_exponent={:.4} K(1/8)={:.4e}",
        report.rows.len(),
        report.flagged,
        env.fitted_exponent,
        env.k_reference
    )?;
    if let Some(path) = &args.out {
        write_file(path, &report.envelope_json())?;
    }
    Ok(())
}

fn soundness_demo(input: &Input, kappa: &str, out: &mut dyn Write) -> Result<()> {
    let kappa = parse_kappa(kappa)?;
    let (game, s) = load(input)?;
    let inst = SoundnessInstance::consistency(&game, kappa);
    let report = soundness_transfer_demo(&game, &inst, &s, &OwnMeasurements)?;
    writeln!(out, "delta {:.6e}", report.delta)?;
    writeln!(out, "value {:.6}", report.value)?;
    writeln!(out, "distance {:.6e}", report.distance)?;
    writeln!(out, "slices {}", report.slices)?;
    writeln!(out, "marginal_sync {:.6e}", report.marginal_sync)?;
    writeln!(out, "transferred {:.6}", report.transferred)?;
    writeln!(out, "slice_expectation {:.6}", report.slice_expectation)?;
    writeln!(out, "kappa_slices {:.6}", report.kappa_slices)?;
    writeln!(out, "kappa_side {:.6}", report.kappa_side)?;
    writeln!(out, "satisfied {}", report.satisfied)?;
    if let Some(path) = &input.out {
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        write_file(path, &text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run(
            std::iter::once("syncround").chain(args.iter().copied()),
            &mut buf,
        );
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn perfect_round_summary() {
        let (code, text) = run_str(&["round", "--game", "k3", "--strategy", "classical"]);
        assert_eq!(code, 0, "{text}");
        assert_eq!(text.trim(), "slices=1 delta=0.000e0 dist≤1e-8");
    }

    #[test]
    fn kappa_parsing() {
        assert_eq!(parse_kappa("zero").unwrap(), Kappa::Zero);
        assert_eq!(parse_kappa("linear:2").unwrap(), Kappa::Linear(2.0));
        assert_eq!(parse_kappa("power:1.5").unwrap(), Kappa::Power(1.5));
        assert!(parse_kappa("cubic").is_err());
    }

    #[test]
    fn unknown_flag_is_a_parse_error() {
        assert_eq!(run_str(&["round", "--bogus"]).0, 2);
    }
}
