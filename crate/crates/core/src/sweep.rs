//! Perturbation sweeps: round many perturbed copies of a strategy and fit
//! power-law envelopes to the achieved distances.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::generate::perturb_strategy;
use crate::rounding::{lemma_report, round_tracial};
use crate::strategy::{embed_tracial, TensorStrategy};

pub const CSV_HEADER: &str = "eta,seed,delta,distance,slices,slack_min,wall_ms";

/// Slack below which a run is flagged.
pub const SLACK_TOL: f64 = 1e-8;

/// Env var capping the worker pool.
pub const THREADS_ENV: &str = "SYNCROUND_THREADS";

/// Installs the global worker pool, honouring `SYNCROUND_THREADS`. Later calls are no-ops.
pub fn configure_threads() {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        builder = builder.num_threads(n);
    }
    let _ = builder.build_global();
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Perturbation strengths, strictly positive and strictly increasing.
    pub etas: Vec<f64>,
    pub trials: usize,
    /// Trial `t` perturbs with seed `seed + t`, the same for every eta.
    pub seed: u64,
    /// Measure wall time per run. Off by default so that output is reproducible.
    pub record_timing: bool,
}

impl SweepConfig {
    /// `points` log-spaced etas from `lo` to `hi` inclusive.
    pub fn log_grid(lo: f64, hi: f64, points: usize, trials: usize, seed: u64) -> Self {
        let etas = if points == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.log10(), hi.log10());
            (0..points)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
                .collect()
        };
        Self {
            etas,
            trials,
            seed,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.etas.is_empty() {
            return Err(Error::InvalidConfig("eta grid is empty".into()));
        }
        if self.etas.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidConfig(
                "eta values must be finite and positive".into(),
            ));
        }
        if self.etas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "eta grid must be strictly increasing".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// One rounding run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub eta: f64,
    pub seed: u64,
    pub delta: f64,
    pub distance: f64,
    pub slices: usize,
    pub slack_min: f64,
    pub wall_ms: f64,
    pub symmetrize_distance: f64,
    pub slice_residual: f64,
    /// Some lemma slack fell below `-1e-8`.
    pub flagged: bool,
}

impl RunRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{:e},{},{:.12e},{:.12e},{},{:.12e},{:.3}",
            self.eta,
            self.seed,
            self.delta,
            self.distance,
            self.slices,
            self.slack_min,
            self.wall_ms
        )
    }
}

/// Least-squares fit of `log y = log k + p log delta`, plus the smallest `K`
/// with `y <= K delta^{reference_exponent}` on every point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub reference_exponent: f64,
    pub k_reference: f64,
    pub fitted_exponent: f64,
    pub fitted_k: f64,
    pub points: usize,
}

pub fn fit_envelope(deltas: &[f64], values: &[f64], reference_exponent: f64) -> EnvelopeFit {
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .zip(values)
        .filter(|(d, v)| **d > 0.0 && **v > 0.0 && d.is_finite() && v.is_finite())
        .map(|(d, v)| (d.ln(), v.ln()))
        .collect();
    let k_reference = deltas
        .iter()
        .zip(values)
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, v)| v / d.powf(reference_exponent))
        .fold(0.0, f64::max);
    let n = pts.len() as f64;
    let (fitted_exponent, fitted_k) = if pts.len() >= 2 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            let slope = sxy / sxx;
            (slope, (my - slope * mx).exp())
        } else {
            (f64::NAN, f64::NAN)
        }
    } else {
        (f64::NAN, f64::NAN)
    };
    EnvelopeFit {
        reference_exponent,
        k_reference,
        fitted_exponent,
        fitted_k,
        points: pts.len(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Envelopes {
    pub distance: EnvelopeFit,
    pub symmetrize_distance: EnvelopeFit,
    pub slice_residual: EnvelopeFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub rows: Vec<RunRow>,
    pub envelopes: Envelopes,
    pub flagged: usize,
    /// `log10(max delta / min delta)` over runs with `delta > 0`.
    pub delta_decades: f64,
}

impl RunReport {
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    /// Envelope summary as pretty JSON (rows omitted).
    pub fn envelope_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: u32,
            kind: &'static str,
            rows: usize,
            flagged: usize,
            delta_decades: f64,
            envelopes: &'a Envelopes,
        }
        let mut s = serde_json::to_string_pretty(&Doc {
            schema_version: crate::io::SCHEMA_VERSION,
            kind: "sweep_envelope",
            rows: self.rows.len(),
            flagged: self.flagged,
            delta_decades: self.delta_decades,
            envelopes: &self.envelopes,
        })
        .expect("report serializes");
        s.push('\n');
        s
    }
}

fn run_one(
    game: &Game,
    base: &TensorStrategy,
    eta: f64,
    seed: u64,
    timing: bool,
) -> Result<RunRow> {
    let start = Instant::now();
    let s = embed_tracial(&perturb_strategy(base, eta, seed)?);
    let dec = round_tracial(game, &s)?;
    let lemmas = lemma_report(game, &s)?;
    let slack_min = lemmas
        .values()
        .map(|c| c.slack)
        .fold(f64::INFINITY, f64::min);
    let wall_ms = if timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let get = |k: &str| dec.diagnostic(k).unwrap_or(f64::NAN);
    Ok(RunRow {
        eta,
        seed,
        delta: get("delta_in"),
        distance: get("distance"),
        slices: dec.slices.len(),
        slack_min,
        wall_ms,
        symmetrize_distance: get("symmetrize_distance"),
        slice_residual: get("slice_residual"),
        flagged: slack_min < -SLACK_TOL,
    })
}

/// Runs the sweep. Rows for each eta are computed in parallel, sorted by seed
/// and handed to `sink` before the next eta starts, so an interrupted sweep
/// leaves every finished eta on disk.
pub fn run_sweep_with(
    game: &Game,
    base: &TensorStrategy,
    config: &SweepConfig,
    mut sink: impl FnMut(&[RunRow]) -> Result<()>,
) -> Result<RunReport> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.etas.len() * config.trials);
    for &eta in &config.etas {
        let mut batch = (0..config.trials as u64)
            .into_par_iter()
            .map(|t| {
                run_one(
                    game,
                    base,
                    eta,
                    config.seed.wrapping_add(t),
                    config.record_timing,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        batch.sort_by_key(|r| r.seed);
        sink(&batch)?;
        rows.extend(batch);
    }
    rows.sort_by(|a, b| a.eta.total_cmp(&b.eta).then(a.seed.cmp(&b.seed)));

    let deltas: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let col = |f: fn(&RunRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let envelopes = Envelopes {
        distance: fit_envelope(&deltas, &col(|r| r.distance), 0.125),
        symmetrize_distance: fit_envelope(&deltas, &col(|r| r.symmetrize_distance), 0.5),
        slice_residual: fit_envelope(&deltas, &col(|r| r.slice_residual), 0.25),
    };
    let positive: Vec<f64> = deltas.iter().copied().filter(|d| *d > 0.0).collect();
    let delta_decades = if positive.is_empty() {
        0.0
    } else {
        let max = positive.iter().copied().fold(f64::MIN, f64::max);
        let min = positive.iter().copied().fold(f64::MAX, f64::min);
        (max / min).log10()
    };
    let flagged = rows.iter().filter(|r| r.flagged).count();
    Ok(RunReport {
        rows,
        envelopes,
        flagged,
        delta_decades,
    })
}

pub fn run_sweep(game: &Game, base: &TensorStrategy, config: &SweepConfig) -> Result<RunReport> {
    run_sweep_with(game, base, config, |_| Ok(()))
}

/// [`run_sweep_with`] streaming CSV rows to `out` as each eta finishes.
pub fn run_sweep_to_csv(
    game: &Game,
    base: &TensorStrategy,
    config: &SweepConfig,
    out: &mut dyn Write,
) -> Result<RunReport> {
    config.validate()?;
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;
    run_sweep_with(game, base, config, |batch| {
        for r in batch {
            writeln!(out, "{}", r.csv_line())?;
        }
        out.flush()?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_game;
    use crate::generate::builtin_strategy;

    #[test]
    fn config_validation() {
        let ok = SweepConfig::log_grid(1e-3, 1e-2, 2, 2, 0);
        ok.validate().unwrap();
        let mut bad = ok.clone();
        bad.etas = vec![1e-2, 1e-3];
        assert!(bad.validate().is_err());
        bad.etas = vec![0.0, 1e-3];
        assert!(bad.validate().is_err());
        let mut zero = ok;
        zero.trials = 0;
        assert!(zero.validate().is_err());
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let d = [1e-6, 1e-4, 1e-2];
        let v: Vec<f64> = d.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        let fit = fit_envelope(&d, &v, 0.125);
        assert!((fit.fitted_exponent - 0.5).abs() < 1e-12);
        assert!((fit.fitted_k - 3.0).abs() < 1e-10);
        assert!((fit.k_reference - 3.0 * 1e-2f64.powf(0.375)).abs() < 1e-12);
    }

    #[test]
    fn row_count_and_determinism() {
        let g = builtin_game("k3").unwrap();
        let base = builtin_strategy("maxent", &g).unwrap();
        let cfg = SweepConfig {
            etas: vec![1e-3, 1e-2],
            trials: 2,
            seed: 7,
            record_timing: false,
        };
        let a = run_sweep(&g, &base, &cfg).unwrap();
        let b = run_sweep(&g, &base, &cfg).unwrap();
        assert_eq!(a.rows.len(), 4);
        assert_eq!(a.csv(), b.csv());
        assert!(a.csv().starts_with(CSV_HEADER));
    }
}
