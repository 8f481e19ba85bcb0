//! Monte-Carlo experiment runner.
//!
//! Every realization index owns an independent random stream keyed by
//! `(seed, index)`. All relay modes of one sweep point consume the same
//! channel draw, realizations are merged in index order, and every
//! reduction runs sequentially over that order, so a sweep is bit-identical
//! for any worker count.

pub mod checks;
pub mod output;
pub mod presets;
pub mod signal;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metrics::{all_users_se, sum_se, Diagnostics, SimulationResult};
use crate::model::{draw_channels, ChannelSet, SystemConfig};
use crate::relay_design::{design_relay, max_interpair_leakage, RelayMode};
use crate::terminal_design::{iterate_alpha, RelayCascade};
use crate::{Error, Result};

/// Failed realizations are redrawn at most this many times.
pub const MAX_RESAMPLES: u64 = 3;
pub const DEFAULT_REALIZATIONS: usize = 1000;
pub const CI_REALIZATIONS: usize = 50;

/// Random stream used by resample attempt `attempt` of realization `index`.
pub fn realization_stream(index: u64, attempt: u64) -> u64 {
    index | (attempt << 48)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "N_R")]
    RelayAntennas,
    #[serde(rename = "K")]
    Pairs,
    #[serde(rename = "M_D")]
    Streams,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::SnrDb => "snr_db",
            SweepVar::RelayAntennas => "N_R",
            SweepVar::Pairs => "K",
            SweepVar::Streams => "M_D",
        }
    }

    /// `base` with this variable set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Scenario(format!("{} must be a positive integer, got {value}", self.as_str())))
            }
        };
        match self {
            SweepVar::SnrDb => cfg = cfg.with_snr_db(value),
            SweepVar::RelayAntennas => cfg.relay_antennas = count()?,
            SweepVar::Pairs => {
                cfg.pairs = count()?;
                cfg.rf_chains = cfg.total_user_antennas();
            }
            SweepVar::Streams => cfg.streams = count()?,
        }
        Ok(cfg)
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVar {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "snr_db" => Ok(SweepVar::SnrDb),
            "N_R" => Ok(SweepVar::RelayAntennas),
            "K" => Ok(SweepVar::Pairs),
            "M_D" => Ok(SweepVar::Streams),
            other => Err(format!("unknown sweep variable `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub base: SystemConfig,
    pub sweep: Sweep,
    pub realizations: usize,
    pub modes: Vec<RelayMode>,
}

impl Scenario {
    /// Configuration of every sweep point, validated.
    pub fn points(&self) -> Result<Vec<SystemConfig>> {
        if self.realizations == 0 {
            return Err(Error::Scenario(format!("{}: realizations must be at least 1", self.name)));
        }
        if self.modes.is_empty() {
            return Err(Error::Scenario(format!("{}: no relay modes selected", self.name)));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::Scenario(format!("{}: empty sweep", self.name)));
        }
        self.sweep
            .values
            .iter()
            .map(|&v| self.sweep.var.apply(&self.base, v)?.validated())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.points().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_var: SweepVar,
    pub value: f64,
    pub mode: RelayMode,
    pub mean_sum_se: f64,
    pub stderr: f64,
    pub n: usize,
    pub convergence_rate: f64,
    pub mean_leakage: f64,
}

/// Per-realization outcomes of one sweep point, indexed like `modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSamples {
    pub value: f64,
    pub modes: Vec<RelayMode>,
    /// `results[mode][i]`; `None` when the realization failed every attempt.
    pub results: Vec<Vec<Option<SimulationResult>>>,
    pub resampled: usize,
}

impl PointSamples {
    pub fn mode(&self, mode: RelayMode) -> Option<&[Option<SimulationResult>]> {
        self.modes
            .iter()
            .position(|&m| m == mode)
            .map(|i| self.results[i].as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Raw per-realization results; empty when read back from CSV.
    pub samples: Vec<PointSamples>,
}

impl SweepResult {
    pub fn row(&self, value: f64, mode: RelayMode) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value && r.mode == mode)
    }

    pub fn resampled(&self) -> usize {
        self.samples.iter().map(|p| p.resampled).sum()
    }
}

/// Full pipeline for one channel realization: relay chain, amplification
/// iteration, spectral efficiency.
pub fn run_on_channels(cfg: &SystemConfig, channels: &ChannelSet, mode: RelayMode, realization_index: u64) -> Result<SimulationResult> {
    let relay = design_relay(cfg, channels, mode)?;
    let leakage = max_interpair_leakage(&relay, channels)?;
    let cascade = RelayCascade::new(&relay, channels)?;
    let (state, codecs) = iterate_alpha(cfg, &cascade, relay.alpha)?;
    let rates = all_users_se(&cascade, state.alpha, &codecs, cfg)?;
    let per_user_se: Vec<f64> = rates.iter().map(|r| r.value).collect();
    Ok(SimulationResult {
        realization_index,
        sum_se: sum_se(&per_user_se),
        per_user_se,
        diagnostics: Diagnostics {
            alpha: state.alpha,
            converged: state.converged,
            iterations: state.iterations,
            leakage,
            regularized_users: rates.iter().filter(|r| r.regularized).count(),
        },
    })
}

/// [`run_on_channels`] on the channel draw of `(cfg.seed, realization_index)`.
pub fn run_realization(cfg: &SystemConfig, mode: RelayMode, realization_index: u64) -> Result<SimulationResult> {
    let channels = draw_channels(cfg, realization_index);
    run_on_channels(cfg, &channels, mode, realization_index)
}

/// All modes on one shared channel draw, redrawing on failure.
fn run_paired(cfg: &SystemConfig, modes: &[RelayMode], index: u64) -> (Option<Vec<SimulationResult>>, usize) {
    for attempt in 0..=MAX_RESAMPLES {
        let channels = draw_channels(cfg, realization_stream(index, attempt));
        let out: Result<Vec<_>> = modes
            .iter()
            .map(|&m| run_on_channels(cfg, &channels, m, index))
            .collect();
        if let Ok(v) = out {
            return (Some(v), attempt as usize);
        }
    }
    (None, MAX_RESAMPLES as usize + 1)
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(scenario: &Scenario) -> Result<SweepResult> {
    let points = scenario.points()?;
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..scenario.realizations as u64).map(move |r| (p, r)))
        .collect();
    let outcomes: Vec<(Option<Vec<SimulationResult>>, usize)> = jobs
        .par_iter()
        .map(|&(p, r)| run_paired(&points[p], &scenario.modes, r))
        .collect();

    let n_modes = scenario.modes.len();
    let mut rows = Vec::with_capacity(points.len() * n_modes);
    let mut samples = Vec::with_capacity(points.len());
    for (p, chunk) in outcomes.chunks(scenario.realizations).enumerate() {
        let value = scenario.sweep.values[p];
        let mut results = vec![Vec::with_capacity(scenario.realizations); n_modes];
        let mut resampled = 0;
        for (out, attempts) in chunk {
            resampled += *attempts;
            match out {
                Some(v) => {
                    for (slot, r) in results.iter_mut().zip(v) {
                        slot.push(Some(r.clone()));
                    }
                }
                None => results.iter_mut().for_each(|slot| slot.push(None)),
            }
        }
        for (mi, &mode) in scenario.modes.iter().enumerate() {
            rows.push(aggregate(scenario.sweep.var, value, mode, &results[mi]));
        }
        samples.push(PointSamples {
            value,
            modes: scenario.modes.clone(),
            results,
            resampled,
        });
    }
    Ok(SweepResult { rows, samples })
}

/// Runs the sweep on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(scenario: &Scenario, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Scenario(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(scenario))
}

/// A point with any realization that failed every resample is invalid and
/// reports NaN statistics.
fn aggregate(var: SweepVar, value: f64, mode: RelayMode, results: &[Option<SimulationResult>]) -> SweepRow {
    let ok: Vec<&SimulationResult> = results.iter().flatten().collect();
    let n = ok.len();
    let invalid = n < results.len() || n == 0;
    let mean = ok.iter().map(|r| r.sum_se).sum::<f64>() / n as f64;
    let variance = if n > 1 {
        ok.iter().map(|r| (r.sum_se - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let stderr = (variance / n as f64).sqrt();
    let convergence_rate = ok.iter().filter(|r| r.diagnostics.converged).count() as f64 / n as f64;
    let mean_leakage = ok.iter().map(|r| r.diagnostics.leakage).sum::<f64>() / n as f64;
    let nan_if = |x: f64| if invalid { f64::NAN } else { x };
    SweepRow {
        sweep_var: var,
        value,
        mode,
        mean_sum_se: nan_if(mean),
        stderr: nan_if(stderr),
        n,
        convergence_rate,
        mean_leakage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario() -> Scenario {
        Scenario {
            name: "small".into(),
            base: SystemConfig::from_snr_db(10.0, 2, 2, 2, 16),
            sweep: Sweep {
                var: SweepVar::SnrDb,
                values: vec![0.0, 20.0],
            },
            realizations: 4,
            modes: RelayMode::ALL.to_vec(),
        }
    }

    #[test]
    fn sweep_shape() {
        let s = small_scenario();
        let r = run_sweep(&s).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.rows.iter().all(|row| row.n == 4 && row.mean_sum_se > 0.0));
        assert_eq!(r.samples.len(), 2);
    }

    #[test]
    fn sweep_apply() {
        let base = SystemConfig::from_snr_db(10.0, 2, 2, 2, 32);
        let k = SweepVar::Pairs.apply(&base, 5.0).unwrap();
        assert_eq!((k.pairs, k.rf_chains), (5, 20));
        assert!(SweepVar::Pairs.apply(&base, 2.5).is_err());
        let s = SweepVar::SnrDb.apply(&base, 20.0).unwrap();
        assert!((s.relay_power - 100.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_point_is_rejected() {
        let mut s = small_scenario();
        s.sweep = Sweep {
            var: SweepVar::Streams,
            values: vec![1.0, 3.0],
        };
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn aggregate_marks_failed_points() {
        let row = aggregate(SweepVar::SnrDb, 0.0, RelayMode::Hybrid, &[None]);
        assert!(row.mean_sum_se.is_nan());
        assert_eq!(row.n, 0);
    }
}
