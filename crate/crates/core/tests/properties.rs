//! Statistical invariants of the timing loop, checked end to end through
//! the Monte-Carlo harness.
//!
//! Modes share per-trial randomness (data and noise seeds exclude the mode),
//! so mode comparisons are paired and resolve differences far smaller than
//! the raw Monte-Carlo spread. Bootstrap checks are phrased as
//! no-significant-violation: an ordering claim fails only when the paired
//! 95% interval of the MSE difference lies entirely on the wrong side.

use nbsync::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn warm_scenario(modulation: Modulation, snr_db: Vec<f64>, step_size: f64) -> Scenario {
    Scenario {
        snr_db,
        tau: vec![0.1],
        modes: vec![SyncMode::Da, SyncMode::Soft, SyncMode::Nda],
        trials: 500,
        layout: FrameLayout::preamble_payload(modulation, 100).unwrap(),
        loop_config: LoopConfig {
            step_size,
            ..LoopConfig::default()
        },
        ..Scenario::default()
    }
}

fn cell_errors(scenario: &Scenario, mode: SyncMode, snr_db: f64) -> Vec<f64> {
    let cell = Cell {
        mode,
        snr_db,
        tau: 0.1,
    };
    run_cell(scenario, &cell).unwrap().final_errors
}

/// Percentile CI of mean(b^2 - a^2) under paired resampling of trial indices.
fn paired_mse_diff_ci(a: &[f64], b: &[f64], seed: u64) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| y * y - x * x).collect();
    let n = diffs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let resamples = 1000;
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut acc = 0.0;
        for _ in 0..n {
            acc += diffs[rng.random_range(0..n)];
        }
        means.push(acc / n as f64);
    }
    means.sort_by(|x, y| x.partial_cmp(y).unwrap());
    (means[24], means[974])
}

fn mse(errors: &[f64]) -> f64 {
    errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64
}

#[test]
fn mode_dominance_holds_with_bootstrap_confidence() {
    let scenario = warm_scenario(Modulation::Dqpsk, vec![0.0, 5.0, 10.0], 0.008);
    for &snr in &[0.0, 5.0, 10.0] {
        let da = cell_errors(&scenario, SyncMode::Da, snr);
        let soft = cell_errors(&scenario, SyncMode::Soft, snr);
        let nda = cell_errors(&scenario, SyncMode::Nda, snr);

        // DA <= Soft <= NDA must not be significantly violated.
        let (_, hi) = paired_mse_diff_ci(&da, &soft, 0xd0d0 + snr as u64);
        assert!(hi >= 0.0, "soft beats DA significantly at {snr} dB");
        let (_, hi) = paired_mse_diff_ci(&soft, &nda, 0xd1d1 + snr as u64);
        assert!(hi >= 0.0, "NDA beats soft significantly at {snr} dB");

        // At low SNR the separation is strict, not just unviolated.
        if snr < 7.0 {
            assert!(
                mse(&da) < mse(&soft) && mse(&soft) < mse(&nda),
                "expected strict ordering at {snr} dB: da {:.3e} soft {:.3e} nda {:.3e}",
                mse(&da),
                mse(&soft),
                mse(&nda)
            );
        }
    }
}

#[test]
fn soft_matches_da_at_high_snr() {
    let scenario = warm_scenario(Modulation::Dbpsk, vec![15.0], 0.005);
    let da = mse(&cell_errors(&scenario, SyncMode::Da, 15.0));
    let soft = mse(&cell_errors(&scenario, SyncMode::Soft, 15.0));
    assert!(
        (soft / da - 1.0).abs() <= 0.25,
        "soft {soft:.3e} vs da {da:.3e}"
    );
}

#[test]
fn mse_saturates_toward_a_self_noise_floor() {
    let scenario = warm_scenario(Modulation::Dbpsk, vec![20.0, 25.0], 0.005);
    for mode in [SyncMode::Da, SyncMode::Soft] {
        let at20 = mse(&cell_errors(&scenario, mode, 20.0));
        let at25 = mse(&cell_errors(&scenario, mode, 25.0));
        // Noise-only scaling would put the ratio at 10^-0.5 = 0.32; the
        // detector's data-dependent self noise keeps it well above that.
        assert!(
            at25 / at20 > 0.45,
            "{mode}: 25 dB {at25:.3e} vs 20 dB {at20:.3e}"
        );
        let crb = crb_reference(25.0, 100, 0.3).unwrap();
        assert!(at25 > 2.0 * crb, "{mode}: floor {at25:.3e} vs crb {crb:.3e}");
    }
}

#[test]
fn soft_final_error_mean_is_unbiased_at_ten_db() {
    // The last updates of a frame see truncated ISI, which leaves a small
    // deterministic offset of order 0.5*mu in the final estimate for every
    // mode (measured +2.5e-3 here). Unbiasedness of the soft reference is
    // therefore asserted relative to DA under paired randomness, plus a
    // frozen absolute bound on the raw mean.
    let scenario = warm_scenario(Modulation::Dbpsk, vec![10.0], 0.005);
    let da = cell_errors(&scenario, SyncMode::Da, 10.0);
    let soft = cell_errors(&scenario, SyncMode::Soft, 10.0);
    let n = soft.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let soft_mean = mean(&soft);
    let diffs: Vec<f64> = soft.iter().zip(&da).map(|(s, d)| s - d).collect();
    let dmean = mean(&diffs);
    let dvar = diffs.iter().map(|x| (x - dmean) * (x - dmean)).sum::<f64>() / (n - 1.0);
    let dstderr = (dvar / n).sqrt().max(1e-12);
    assert!(
        dmean.abs() < 3.0 * dstderr,
        "soft-vs-da mean shift {dmean:.3e}, stderr {dstderr:.3e}"
    );
    assert!(soft_mean.abs() < 5e-3, "soft mean {soft_mean:.3e}");
}

#[test]
fn s_curve_slopes_order_da_steepest() {
    let tau = 0.1;
    let delta = 0.06;
    let scenario = Scenario {
        snr_db: vec![5.0],
        tau: vec![tau],
        ..Scenario::default()
    };
    let pulse = scenario.pulse.build().unwrap();
    let mut slopes = Vec::new();
    for mode in [SyncMode::Da, SyncMode::Soft, SyncMode::Nda] {
        let cell = Cell {
            mode,
            snr_db: 5.0,
            tau,
        };
        let mut lo = 0.0;
        let mut hi = 0.0;
        for frame in 0..200 {
            let (bits_seed, noise_seed) = trial_seeds(&scenario, &cell, frame);
            let bits = build_frame_bits(&scenario.layout, &scenario.preamble, bits_seed).unwrap();
            let stream = map_stream(&bits, &scenario.layout).unwrap();
            let tx = shape(&stream, &pulse, tau).unwrap();
            let rx = add_noise(&tx, 5.0, noise_seed);
            let bank = matched_filter(&rx, &pulse).unwrap();
            let curve = s_curve(
                &bank,
                &scenario.layout,
                &stream,
                noise_sigma2(5.0),
                mode,
                TanhShape::Exact,
                &[tau - delta, tau + delta],
            )
            .unwrap();
            lo += curve[0];
            hi += curve[1];
        }
        slopes.push((lo - hi) / (2.0 * delta) / 200.0);
    }
    let (da, soft, nda) = (slopes[0], slopes[1], slopes[2]);
    assert!(da > 0.0 && soft > 0.0 && nda > 0.0, "slopes {slopes:?}");
    // Pilots give the steepest restoring response; the posterior-mean
    // reference trades a little slope (tanh shrinkage) for noise rejection,
    // landing within a few percent of the hard-decision slope.
    assert!(da >= 1.10 * soft.max(nda), "da {da:.3} soft {soft:.3} nda {nda:.3}");
    assert!(
        (soft - nda).abs() <= 0.08 * nda,
        "soft {soft:.3} vs nda {nda:.3}"
    );
}
