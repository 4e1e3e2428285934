//! Scenario configuration, seeded Monte-Carlo execution and the CRB
//! reference.
//!
//! A scenario spans a grid of (mode, SNR, delay) cells. Every trial derives
//! its randomness from the master seed, the cell's grid point and the trial
//! index; the derivation deliberately excludes the mode so that competing
//! modes face identical data and noise, which sharpens paired comparisons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{build_frame_bits, FrameLayout, PreambleSpec};
use crate::mapping::map_stream;
use crate::report::{BiasPoint, CellReport, CrbPoint, ReportMeta, RunReport};
use crate::synchronizer::{run_loop, s_curve, LoopConfig, SyncMode, TimingTrajectory};
use crate::waveform::{
    add_noise, matched_filter, noise_sigma2, pulse_second_moment, shape, PulseShape,
};

/// Noise-variance floor handed to the likelihood machinery when a cell runs
/// without noise, keeping the soft demapper well defined.
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// Transmit/receive pulse parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub rolloff: f64,
    pub span: usize,
    pub sps: usize,
}

impl Default for PulseParams {
    fn default() -> Self {
        PulseParams {
            rolloff: 0.3,
            span: 8,
            sps: 8,
        }
    }
}

impl PulseParams {
    pub fn build(&self) -> Result<PulseShape> {
        PulseShape::srrc(self.rolloff, self.span, self.sps)
    }
}

/// Full experiment description: the cell grid plus everything shared
/// between cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub snr_db: Vec<f64>,
    pub tau: Vec<f64>,
    pub modes: Vec<SyncMode>,
    pub trials: usize,
    pub master_seed: u64,
    pub layout: FrameLayout,
    pub preamble: PreambleSpec,
    pub pulse: PulseParams,
    pub loop_config: LoopConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            snr_db: vec![10.0],
            tau: vec![0.1],
            modes: vec![SyncMode::Da, SyncMode::Soft, SyncMode::Nda],
            trials: 500,
            master_seed: 0x5eed,
            layout: FrameLayout::standard(),
            preamble: PreambleSpec::default(),
            pulse: PulseParams::default(),
            loop_config: LoopConfig::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.snr_db.is_empty() || self.tau.is_empty() || self.modes.is_empty() {
            return Err(Error::invalid(
                "grid",
                "snr_db, tau and modes lists must be non-empty",
            ));
        }
        for &t in &self.tau {
            if !(-0.4..=0.4).contains(&t) {
                return Err(Error::invalid("tau", "delays must lie in [-0.4, 0.4]"));
            }
        }
        for &s in &self.snr_db {
            if s.is_nan() {
                return Err(Error::invalid("snr_db", "must not be NaN"));
            }
        }
        self.pulse.build()?;
        self.loop_config.validate()?;
        if self.layout.has_region(crate::frame::RegionKind::Preamble) {
            let bits = self.preamble.bits()?;
            if bits.len() != self.layout.bit_count(crate::frame::RegionKind::Preamble) {
                return Err(Error::invalid(
                    "preamble",
                    "preamble bit count does not match the layout",
                ));
            }
        }
        Ok(())
    }

    /// The cell grid in deterministic order: mode-major, then SNR, then
    /// delay.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &mode in &self.modes {
            for &snr_db in &self.snr_db {
                for &tau in &self.tau {
                    out.push(Cell { mode, snr_db, tau });
                }
            }
        }
        out
    }
}

/// One grid point of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub mode: SyncMode,
    pub snr_db: f64,
    pub tau: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Grid-point key shared by all modes at the same (SNR, delay) so paired
/// mode comparisons see common randomness.
fn point_key(scenario: &Scenario, cell: &Cell) -> u64 {
    let mut h = splitmix64(scenario.master_seed ^ 0x706f_696e_745f_6b65);
    h = splitmix64(h ^ cell.snr_db.to_bits());
    h = splitmix64(h ^ cell.tau.to_bits());
    h = splitmix64(h ^ scenario.layout.total_symbols() as u64);
    for region in scenario.layout.regions() {
        h = splitmix64(h ^ ((region.kind.rank() as u64) << 32 | region.symbols as u64));
        h = splitmix64(h ^ region.modulation.bits_per_symbol() as u64);
    }
    h = splitmix64(h ^ scenario.pulse.rolloff.to_bits());
    h = splitmix64(h ^ ((scenario.pulse.span as u64) << 32 | scenario.pulse.sps as u64));
    h = splitmix64(h ^ scenario.loop_config.step_size.to_bits());
    h = splitmix64(h ^ scenario.loop_config.initial_estimate.to_bits());
    h
}

/// Deterministic (data, noise) seeds for one trial of a cell.
pub fn trial_seeds(scenario: &Scenario, cell: &Cell, trial_index: usize) -> (u64, u64) {
    let base = splitmix64(point_key(scenario, cell) ^ splitmix64(trial_index as u64));
    (splitmix64(base ^ 1), splitmix64(base ^ 2))
}

struct TrialSummary {
    final_error: f64,
    estimates: Vec<f64>,
    clamp_events: usize,
}

fn run_trial_with(
    scenario: &Scenario,
    cell: &Cell,
    trial_index: usize,
    pulse: &PulseShape,
) -> Result<(TimingTrajectory, f64)> {
    let (bits_seed, noise_seed) = trial_seeds(scenario, cell, trial_index);
    let bits = build_frame_bits(&scenario.layout, &scenario.preamble, bits_seed)?;
    let stream = map_stream(&bits, &scenario.layout)?;
    let tx = shape(&stream, pulse, cell.tau)?;
    let rx = add_noise(&tx, cell.snr_db, noise_seed);
    let bank = matched_filter(&rx, pulse)?;
    let sigma2 = noise_sigma2(cell.snr_db).max(SIGMA2_FLOOR);
    let config = LoopConfig {
        payload_mode: cell.mode,
        ..scenario.loop_config
    };
    let trajectory = run_loop(&bank, &scenario.layout, &stream, sigma2, &config)?;
    let final_error = trajectory.final_estimate() - cell.tau;
    Ok((trajectory, final_error))
}

/// Runs a single seeded trial: frame build, mapping, shaping, noise,
/// matched filtering and the timing loop. Returns the trajectory and the
/// final normalized error.
pub fn run_trial(
    scenario: &Scenario,
    cell: &Cell,
    trial_index: usize,
) -> Result<(TimingTrajectory, f64)> {
    scenario.validate()?;
    let pulse = scenario.pulse.build()?;
    run_trial_with(scenario, cell, trial_index, &pulse)
}

/// Raw per-cell Monte-Carlo output before report aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub final_errors: Vec<f64>,
    pub bias_mean: Vec<f64>,
    pub bias_stderr: Vec<f64>,
    pub clamp_events: usize,
    pub updates_per_trial: usize,
}

impl CellResult {
    pub fn mse(&self) -> f64 {
        mean_squared(&self.final_errors)
    }

    pub fn clamp_rate(&self) -> f64 {
        let total = self.final_errors.len() * self.updates_per_trial;
        if total == 0 {
            0.0
        } else {
            self.clamp_events as f64 / total as f64
        }
    }
}

pub fn mean_squared(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().map(|e| e * e).sum::<f64>() / values.len() as f64
}

fn summarize_trial(traj: &TimingTrajectory, final_error: f64) -> TrialSummary {
    TrialSummary {
        final_error,
        estimates: traj.estimates().to_vec(),
        clamp_events: traj.clamp_events(),
    }
}

fn aggregate(cell: &Cell, tau: f64, summaries: Vec<TrialSummary>) -> CellResult {
    let trials = summaries.len();
    let updates = summaries.first().map_or(0, |s| s.estimates.len());
    let mut sum = vec![0.0f64; updates];
    let mut sumsq = vec![0.0f64; updates];
    let mut final_errors = Vec::with_capacity(trials);
    let mut clamp_events = 0usize;
    for s in &summaries {
        for (i, est) in s.estimates.iter().enumerate() {
            let bias = est - tau;
            sum[i] += bias;
            sumsq[i] += bias * bias;
        }
        final_errors.push(s.final_error);
        clamp_events += s.clamp_events;
    }
    let n = trials as f64;
    let mut bias_mean = Vec::with_capacity(updates);
    let mut bias_stderr = Vec::with_capacity(updates);
    for i in 0..updates {
        let mean = sum[i] / n;
        let var = (sumsq[i] / n - mean * mean).max(0.0);
        let stderr = if trials > 1 {
            (var / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        bias_mean.push(mean);
        bias_stderr.push(stderr);
    }
    CellResult {
        cell: *cell,
        final_errors,
        bias_mean,
        bias_stderr,
        clamp_events,
        updates_per_trial: updates,
    }
}

/// Runs all trials of one cell, in parallel when the `parallel` feature is
/// enabled. Trial outputs are indexed by trial number, so the aggregation
/// is independent of execution order.
pub fn run_cell(scenario: &Scenario, cell: &Cell) -> Result<CellResult> {
    let pulse = scenario.pulse.build()?;
    #[cfg(feature = "parallel")]
    let summaries: Vec<TrialSummary> = (0..scenario.trials)
        .into_par_iter()
        .map(|t| {
            run_trial_with(scenario, cell, t, &pulse)
                .map(|(traj, err)| summarize_trial(&traj, err))
        })
        .collect::<Result<Vec<_>>>()?;
    #[cfg(not(feature = "parallel"))]
    let summaries: Vec<TrialSummary> = (0..scenario.trials)
        .map(|t| {
            run_trial_with(scenario, cell, t, &pulse)
                .map(|(traj, err)| summarize_trial(&traj, err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(cell, cell.tau, summaries))
}

/// Single-threaded twin of `run_cell`, available regardless of features.
pub fn run_cell_sequential(scenario: &Scenario, cell: &Cell) -> Result<CellResult> {
    let pulse = scenario.pulse.build()?;
    let summaries: Vec<TrialSummary> = (0..scenario.trials)
        .map(|t| {
            run_trial_with(scenario, cell, t, &pulse)
                .map(|(traj, err)| summarize_trial(&traj, err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(cell, cell.tau, summaries))
}

/// Percentile bootstrap confidence interval for the mean squared error.
pub fn bootstrap_mse_ci(errors: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    if errors.is_empty() {
        return (0.0, 0.0);
    }
    let squares: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let n = squares.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut acc = 0.0;
        for _ in 0..n {
            acc += squares[rng.random_range(0..n)];
        }
        means.push(acc / n as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo_idx = ((resamples - 1) as f64 * 0.025).floor() as usize;
    let hi_idx = ((resamples - 1) as f64 * 0.975).floor() as usize;
    (means[lo_idx], means[hi_idx])
}

/// Cramer-Rao bound on the normalized delay MSE for a data-aided block of
/// `block_len` symbols.
pub fn crb_reference(snr_db: f64, block_len: usize, rolloff: f64) -> Result<f64> {
    if block_len == 0 {
        return Err(Error::invalid("block_len", "must be at least 1"));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr_db", "must be finite"));
    }
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(Error::invalid("rolloff", "must lie in [0, 1]"));
    }
    let xi = pulse_second_moment(rolloff);
    let snr = 10f64.powf(snr_db / 10.0);
    Ok(1.0 / (8.0 * PI * PI * xi * block_len as f64 * snr))
}

fn bootstrap_seed(scenario: &Scenario, cell: &Cell) -> u64 {
    splitmix64(point_key(scenario, cell) ^ (cell.mode.label().len() as u64) ^ 0xb007_57a9)
}

fn build_report(scenario: &Scenario, results: Vec<CellResult>) -> Result<RunReport> {
    let modulation = scenario.layout.payload_modulation();
    let block_len = scenario.layout.total_symbols();
    let mut cells = Vec::with_capacity(results.len());
    for result in &results {
        let crb = if result.cell.snr_db.is_finite() {
            crb_reference(result.cell.snr_db, block_len, scenario.pulse.rolloff)?
        } else {
            0.0
        };
        let (ci_lo, ci_hi) = bootstrap_mse_ci(
            &result.final_errors,
            1000,
            bootstrap_seed(scenario, &result.cell),
        );
        let bias_curve = result
            .bias_mean
            .iter()
            .zip(&result.bias_stderr)
            .enumerate()
            .map(|(i, (mean, stderr))| BiasPoint {
                symbol_index: i,
                mean: *mean,
                ci_lo: mean - 1.96 * stderr,
                ci_hi: mean + 1.96 * stderr,
            })
            .collect();
        cells.push(CellReport {
            mode: result.cell.mode,
            modulation,
            snr_db: result.cell.snr_db,
            tau_over_t: result.cell.tau,
            trials: result.final_errors.len(),
            mse: result.mse(),
            mse_ci_lo: ci_lo,
            mse_ci_hi: ci_hi,
            crb,
            clamp_rate: result.clamp_rate(),
            bias_curve,
        });
    }
    let mut crb_curve = Vec::new();
    for &snr_db in &scenario.snr_db {
        if snr_db.is_finite() {
            crb_curve.push(CrbPoint {
                snr_db,
                block_len,
                crb: crb_reference(snr_db, block_len, scenario.pulse.rolloff)?,
            });
        }
    }
    Ok(RunReport {
        meta: ReportMeta {
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.clone(),
        },
        cells,
        crb_curve,
    })
}

/// Runs the whole scenario grid and aggregates a report. Uses the parallel
/// trial executor when available.
pub fn monte_carlo(scenario: &Scenario) -> Result<RunReport> {
    scenario.validate()?;
    let mut results = Vec::new();
    for cell in scenario.cells() {
        results.push(run_cell(scenario, &cell)?);
    }
    build_report(scenario, results)
}

/// Fully sequential scenario run; bitwise-identical to `monte_carlo`.
pub fn monte_carlo_sequential(scenario: &Scenario) -> Result<RunReport> {
    scenario.validate()?;
    let mut results = Vec::new();
    for cell in scenario.cells() {
        results.push(run_cell_sequential(scenario, &cell)?);
    }
    build_report(scenario, results)
}

/// One S-curve sample: the mean detector output at candidate offset `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SCurvePoint {
    pub mode: SyncMode,
    pub snr_db: f64,
    pub tau_over_t: f64,
    pub u_over_t: f64,
    pub mean_error: f64,
}

/// Sweeps the detector S-curve for every (mode, SNR, delay) cell, averaging
/// over `frames` seeded frames on a grid of `grid_points` offsets spanning
/// +/-0.45 symbol periods around the true delay.
pub fn s_curve_sweep(
    scenario: &Scenario,
    grid_points: usize,
    frames: usize,
) -> Result<Vec<SCurvePoint>> {
    scenario.validate()?;
    if grid_points < 2 {
        return Err(Error::invalid("grid_points", "must be at least 2"));
    }
    if frames == 0 {
        return Err(Error::invalid("frames", "must be at least 1"));
    }
    let pulse = scenario.pulse.build()?;
    let mut out = Vec::new();
    for cell in scenario.cells() {
        let grid: Vec<f64> = (0..grid_points)
            .map(|i| cell.tau - 0.45 + 0.9 * i as f64 / (grid_points - 1) as f64)
            .collect();
        let mut acc = vec![0.0f64; grid.len()];
        for frame in 0..frames {
            let (bits_seed, noise_seed) = trial_seeds(scenario, &cell, frame);
            let bits = build_frame_bits(&scenario.layout, &scenario.preamble, bits_seed)?;
            let stream = map_stream(&bits, &scenario.layout)?;
            let tx = shape(&stream, &pulse, cell.tau)?;
            let rx = add_noise(&tx, cell.snr_db, noise_seed);
            let bank = matched_filter(&rx, &pulse)?;
            let sigma2 = noise_sigma2(cell.snr_db).max(SIGMA2_FLOOR);
            let curve = s_curve(
                &bank,
                &scenario.layout,
                &stream,
                sigma2,
                cell.mode,
                scenario.loop_config.tanh,
                &grid,
            )?;
            for (a, c) in acc.iter_mut().zip(&curve) {
                *a += c;
            }
        }
        for (u, a) in grid.iter().zip(&acc) {
            out.push(SCurvePoint {
                mode: cell.mode,
                snr_db: cell.snr_db,
                tau_over_t: cell.tau,
                u_over_t: *u,
                mean_error: a / frames as f64,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Modulation;

    fn block_scenario(modulation: Modulation, symbols: usize) -> Scenario {
        Scenario {
            layout: FrameLayout::payload_block(modulation, symbols).unwrap(),
            ..Scenario::default()
        }
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::default().validate().is_ok());
        let bad = Scenario {
            trials: 0,
            ..Scenario::default()
        };
        assert!(bad.validate().is_err());
        let bad = Scenario {
            tau: vec![0.45],
            ..Scenario::default()
        };
        assert!(bad.validate().is_err());
        let bad = Scenario {
            modes: vec![],
            ..Scenario::default()
        };
        assert!(bad.validate().is_err());
        let bad = Scenario {
            snr_db: vec![f64::NAN],
            ..Scenario::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cell_grid_order_is_mode_major() {
        let scenario = Scenario {
            snr_db: vec![0.0, 10.0],
            tau: vec![0.1, 0.3],
            modes: vec![SyncMode::Da, SyncMode::Nda],
            ..Scenario::default()
        };
        let cells = scenario.cells();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].mode, SyncMode::Da);
        assert_eq!(cells[0].snr_db, 0.0);
        assert_eq!(cells[0].tau, 0.1);
        assert_eq!(cells[1].tau, 0.3);
        assert_eq!(cells[4].mode, SyncMode::Nda);
    }

    #[test]
    fn trial_seeds_ignore_mode_but_track_everything_else() {
        let scenario = Scenario::default();
        let da = Cell {
            mode: SyncMode::Da,
            snr_db: 10.0,
            tau: 0.1,
        };
        let soft = Cell {
            mode: SyncMode::Soft,
            ..da
        };
        assert_eq!(trial_seeds(&scenario, &da, 3), trial_seeds(&scenario, &soft, 3));

        let other_snr = Cell { snr_db: 5.0, ..da };
        assert_ne!(
            trial_seeds(&scenario, &da, 3),
            trial_seeds(&scenario, &other_snr, 3)
        );
        assert_ne!(trial_seeds(&scenario, &da, 3), trial_seeds(&scenario, &da, 4));

        let reseeded = Scenario {
            master_seed: 77,
            ..Scenario::default()
        };
        assert_ne!(
            trial_seeds(&scenario, &da, 3),
            trial_seeds(&reseeded, &da, 3)
        );
    }

    #[test]
    fn run_trial_is_deterministic() {
        let scenario = Scenario {
            trials: 2,
            ..block_scenario(Modulation::Dbpsk, 60)
        };
        let cell = Cell {
            mode: SyncMode::Soft,
            snr_db: 10.0,
            tau: 0.1,
        };
        let (ta, ea) = run_trial(&scenario, &cell, 0).unwrap();
        let (tb, eb) = run_trial(&scenario, &cell, 0).unwrap();
        assert_eq!(ta, tb);
        assert_eq!(ea, eb);
        let (_, ec) = run_trial(&scenario, &cell, 1).unwrap();
        assert_ne!(ea, ec);
    }

    #[test]
    fn noise_free_da_trial_converges() {
        let scenario = Scenario {
            loop_config: LoopConfig {
                step_size: 0.01,
                ..LoopConfig::default()
            },
            ..block_scenario(Modulation::Dbpsk, 100)
        };
        let cell = Cell {
            mode: SyncMode::Da,
            snr_db: f64::INFINITY,
            tau: 0.1,
        };
        let (_, err) = run_trial(&scenario, &cell, 0).unwrap();
        // Residual = unconverged bias plus detector self noise, both of
        // order 0.01 at this step size (measured 0.011 on this seed).
        assert!(err.abs() < 0.02, "final error {err}");
    }

    #[test]
    fn crb_reference_examples() {
        let crb = crb_reference(10.0, 100, 0.3).unwrap();
        assert!((crb - 1.45e-4).abs() < 5e-6, "crb {crb}");
        // 1/L scaling.
        let halved = crb_reference(10.0, 200, 0.3).unwrap();
        assert!((halved * 2.0 - crb).abs() < 1e-18);
        // 10 dB of SNR is a factor of 10 in the bound.
        let low = crb_reference(0.0, 100, 0.3).unwrap();
        assert!((low / crb - 10.0).abs() < 1e-9);
        assert!(crb_reference(10.0, 0, 0.3).is_err());
        assert!(crb_reference(f64::INFINITY, 100, 0.3).is_err());
        assert!(crb_reference(10.0, 100, 1.5).is_err());
    }

    #[test]
    fn bootstrap_is_deterministic_and_brackets_the_mean() {
        let errors: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 500.0).collect();
        let mse = mean_squared(&errors);
        let (lo, hi) = bootstrap_mse_ci(&errors, 1000, 42);
        let (lo2, hi2) = bootstrap_mse_ci(&errors, 1000, 42);
        assert_eq!((lo, hi), (lo2, hi2));
        assert!(lo <= mse && mse <= hi, "mse {mse} not in [{lo}, {hi}]");
        assert!(lo < hi);

        // Constant errors give a degenerate interval.
        let flat = vec![0.1; 50];
        let (lo, hi) = bootstrap_mse_ci(&flat, 200, 7);
        assert!((lo - 0.01).abs() < 1e-15 && (hi - 0.01).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_report_structure() {
        let scenario = Scenario {
            snr_db: vec![10.0],
            tau: vec![0.1],
            modes: vec![SyncMode::Da, SyncMode::Soft],
            trials: 25,
            ..block_scenario(Modulation::Dbpsk, 50)
        };
        let report = monte_carlo(&scenario).unwrap();
        assert_eq!(report.cells.len(), 2);
        assert_eq!(report.crb_curve.len(), 1);
        for cell in &report.cells {
            assert_eq!(cell.trials, 25);
            assert_eq!(cell.bias_curve.len(), 50);
            assert!(cell.mse >= 0.0);
            assert!(cell.mse_ci_lo <= cell.mse && cell.mse <= cell.mse_ci_hi);
            assert!(cell.crb > 0.0);
            assert_eq!(cell.modulation, Modulation::Dbpsk);
            for point in &cell.bias_curve {
                assert!(point.ci_lo <= point.mean && point.mean <= point.ci_hi);
            }
        }
    }

    #[test]
    #[cfg(feature = "parallel")]
    fn parallel_and_sequential_agree_exactly() {
        let scenario = Scenario {
            snr_db: vec![5.0],
            tau: vec![0.2],
            modes: vec![SyncMode::Soft, SyncMode::Nda],
            trials: 20,
            ..block_scenario(Modulation::Dqpsk, 40)
        };
        let par = monte_carlo(&scenario).unwrap();
        let seq = monte_carlo_sequential(&scenario).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn mse_standard_error_is_sane() {
        // Gaussian-approximation bound on the spread of squared errors;
        // violations would indicate aggregation bugs.
        let scenario = Scenario {
            snr_db: vec![10.0],
            tau: vec![0.1],
            modes: vec![SyncMode::Da],
            trials: 200,
            loop_config: LoopConfig {
                step_size: 0.01,
                ..LoopConfig::default()
            },
            ..block_scenario(Modulation::Dbpsk, 100)
        };
        let cell = scenario.cells()[0];
        let result = run_cell(&scenario, &cell).unwrap();
        let mse = result.mse();
        let n = result.final_errors.len() as f64;
        let var_sq = result
            .final_errors
            .iter()
            .map(|e| (e * e - mse) * (e * e - mse))
            .sum::<f64>()
            / (n - 1.0);
        let stderr = (var_sq / n).sqrt();
        assert!(
            stderr <= mse * (2.0 / n).sqrt() * 1.2,
            "stderr {stderr}, mse {mse}"
        );
    }

    #[test]
    fn s_curve_sweep_shape() {
        let scenario = Scenario {
            snr_db: vec![f64::INFINITY],
            tau: vec![0.1],
            modes: vec![SyncMode::Da],
            trials: 1,
            ..block_scenario(Modulation::Dbpsk, 60)
        };
        let points = s_curve_sweep(&scenario, 7, 2).unwrap();
        assert_eq!(points.len(), 7);
        assert!((points[0].u_over_t - (0.1 - 0.45)).abs() < 1e-12);
        assert!((points[6].u_over_t - (0.1 + 0.45)).abs() < 1e-12);
        // Restoring polarity on either side of the true delay.
        assert!(points[1].mean_error > 0.0);
        assert!(points[5].mean_error < 0.0);
    }
}
