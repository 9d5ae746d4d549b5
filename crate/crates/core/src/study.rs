//! Sampling-cost study: how many repetitions each protocol needs to push
//! its overlap estimator below a target variance.
//!
//! One repetition means one shot in every measured basis (a single shot for
//! the Bell-basis route, which has one setting). For each subsample size
//! `N_p` the estimator is bootstrapped over resampled repetition sets, the
//! resulting variance curve is fitted to `v = a * N_p^(-b)`, and the fit is
//! inverted at the target. Reported counts are floored at the smallest
//! bootstrapped subsample size; extrapolating the power law below the
//! measured grid is unsupported, so the raw fit value is kept alongside.
//!
//! Tomography repetitions are scored with a linear per-repetition kernel:
//! every Pauli is read from its canonical setting (positive signs, `Z` on
//! identity positions) with per-bit readout debiasing, so the kernel mean
//! is an unbiased overlap estimate and single-repetition variance is well
//! defined. A randomized-measurement repetition is a single basis-tagged
//! record from the pooled positive-settings dataset, scored by the
//! cross-correlation kernel of its record; the greedy basis selection is
//! redrawn for every bootstrap resample.

use crate::analysis::{bootstrap_variance, repetitions_for_variance, VarianceCurve};
use crate::circuit::Axis;
use crate::error::{Error, Result};
use crate::measure::{positive_settings, positive_to_tomography_id, tomography_settings};
use crate::noise::{ConfusionMatrix, NoiseModel};
use crate::protocols::bbm::{outcome_parity, record_parity};
use crate::protocols::rm::{rm_greedy_select, rm_view_of_tomography};
use crate::protocols::sweep::ghz_pair_state;
use crate::protocols::Protocol;
use crate::sim::{
    outcome_distribution, run_circuit_from_ground, sample_shots, split_outcome, DatasetMeta,
    ShotDataset, ShotRecord,
};
use crate::circuit::{bbm_circuit, pair_prep_circuit};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Knobs for one study run. Dataset sizes are repetitions per setting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub tomography_shots: usize,
    pub bbm_shots: usize,
    pub resamples: usize,
    pub grid_points: usize,
    /// Smallest bootstrapped subsample size; also the reporting floor.
    pub grid_min: usize,
    pub target_variance: f64,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            tomography_shots: 10_000,
            bbm_shots: 150_000,
            resamples: 100,
            grid_points: 8,
            grid_min: 50,
            target_variance: 1e-3,
            seed: 7,
        }
    }
}

/// Required repetitions for one protocol at one size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyPoint {
    pub protocol: Protocol,
    pub n: usize,
    /// Fitted requirement, floored at the smallest subsample size.
    pub required: u64,
    /// Unfloored fit inversion.
    pub raw_required: f64,
    pub curve: VarianceCurve,
}

/// Sub-seed tag for tomography dataset generation.
pub const TAG_TOMOGRAPHY: u64 = 1;
/// Sub-seed tag for Bell-basis dataset generation.
pub const TAG_BELL: u64 = 2;
/// Sub-seed tag for the bootstrap resampling stream.
pub const TAG_CURVE: u64 = 3;
/// Sub-seed tag for the basis-selection stream.
pub const TAG_SELECT: u64 = 4;

/// Decorrelates sub-seeds derived from one study seed.
pub fn sub_seed(seed: u64, tag: u64, n: usize) -> u64 {
    seed ^ (tag << 32 | n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Joint dataset over all `6^n` signed settings, `shots` repetitions each,
/// sampled setting-major from the noisy pair state. Setting `s` draws from
/// sub-stream `s + 1` of `seed`, so settings are independent and stable
/// under reordering. Records within a setting are shuffled: repetition `k`
/// pairs the `k`-th record of every setting, so each setting's sequence
/// must be exchangeable, and the sampler groups equal outcomes.
pub fn generate_tomography_dataset(
    n: usize,
    phi_a: f64,
    phi_b: f64,
    nm: &NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<ShotDataset> {
    nm.validate()?;
    if shots < 1 {
        return Err(Error::Domain("shot count must be at least 1".into()));
    }
    let rho = ghz_pair_state(n, phi_a, phi_b, nm)?;
    let cm = nm.confusion(2 * n)?;
    let mut ds = ShotDataset::new(DatasetMeta {
        n,
        protocol: "qst".into(),
        seed,
        shots_per_setting: shots,
    });
    for s in &tomography_settings(n)? {
        let rot = s.pair_rotation();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s.id() as u64 + 1);
        let mut outcomes = sample_shots(&rho, Some(&rot), shots, &cm, &mut rng)?;
        outcomes.shuffle(&mut rng);
        for outcome in outcomes {
            let (a, b) = split_outcome(outcome, n);
            ds.records.push(ShotRecord { setting: s.id(), a, b });
        }
    }
    Ok(ds)
}

/// Bell-basis dataset: `shots` repetitions of the single entangling
/// setting, from the full noisy pair preparation plus Bell rotation.
pub fn generate_bbm_dataset(
    n: usize,
    phi_a: f64,
    phi_b: f64,
    nm: &NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<ShotDataset> {
    nm.validate()?;
    if shots < 1 {
        return Err(Error::Domain("shot count must be at least 1".into()));
    }
    let mut circuit = pair_prep_circuit(n, phi_a, phi_b)?;
    circuit.extend(&bbm_circuit(n)?)?;
    let rho = run_circuit_from_ground(&circuit, nm)?;
    let cm = nm.confusion(2 * n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut outcomes = sample_shots(&rho, None, shots, &cm, &mut rng)?;
    outcomes.shuffle(&mut rng);
    let mut ds = ShotDataset::new(DatasetMeta {
        n,
        protocol: "bbm".into(),
        seed,
        shots_per_setting: shots,
    });
    for outcome in outcomes {
        let (a, b) = split_outcome(outcome, n);
        ds.records.push(ShotRecord { setting: 0, a, b });
    }
    Ok(ds)
}

/// Number of complete repetitions across the given per-setting index lists.
fn repetition_count(lists: &[&[usize]]) -> Result<usize> {
    let reps = lists.iter().map(|l| l.len()).min().unwrap_or(0);
    if reps == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(reps)
}

/// Per-repetition overlap kernels for linear tomography with readout
/// debiasing. Repetition `k` combines the `k`-th record of each positive
/// setting: the setting's non-`Z` axes contribute their debiased two-module
/// product, and each `Z` axis contributes the factor `1 + z_A z_B`, which
/// sums the served Pauli with and without that `Z`. The kernel mean over
/// any index set is an unbiased estimate of `tr(rho_A rho_B)`.
pub fn qst_repetition_kernels(ds: &ShotDataset, cm: &ConfusionMatrix) -> Result<Vec<f64>> {
    let n = ds.meta.n;
    if cm.n() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: cm.n(),
        });
    }
    let groups = ds.indices_by_setting();
    let positives = positive_settings(n)?;
    let mut canonical = Vec::with_capacity(positives.len());
    for s in &positives {
        let tid = positive_to_tomography_id(s.id(), n);
        let idx = groups.get(&tid).ok_or_else(|| {
            Error::IncompleteDataset(format!("no records for canonical setting {}", s.label()))
        })?;
        canonical.push((s, idx.as_slice()));
    }
    let reps = repetition_count(&canonical.iter().map(|(_, i)| *i).collect::<Vec<_>>())?;
    let mut kernels = vec![0.0f64; reps];
    for (s, idx) in &canonical {
        let mut all_z = true;
        for ax in s.axes() {
            if ax.axis != Axis::Z {
                all_z = false;
            }
        }
        for (k, kernel) in kernels.iter_mut().enumerate() {
            let r = &ds.records[idx[k]];
            let mut block = 1.0;
            for (q, ax) in s.axes().iter().enumerate() {
                let pos = n - 1 - q;
                let za = cm.debiased_value(q, ((r.a >> pos) & 1) as u8)?;
                let zb = cm.debiased_value(n + q, ((r.b >> pos) & 1) as u8)?;
                let zz = za * zb;
                block *= if ax.axis == Axis::Z { 1.0 + zz } else { zz };
            }
            if all_z {
                block -= 1.0;
            }
            *kernel += block;
        }
    }
    let scale = (1u64 << n) as f64;
    for kernel in kernels.iter_mut() {
        *kernel = (1.0 + *kernel) / scale;
    }
    Ok(kernels)
}

/// Per-setting, per-repetition cross-correlation kernels for randomized
/// measurements, `2^n * (-2)^(-D)` with `D` the Hamming distance between
/// the modules' readouts. Takes a positive-settings dataset (base-3 ids)
/// and returns one row per pool setting. No readout correction.
pub fn rm_setting_kernels(ds: &ShotDataset) -> Result<Vec<Vec<f64>>> {
    let n = ds.meta.n;
    if n < 1 || n > 3 {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 3 });
    }
    let pool = 3usize.pow(n as u32);
    let groups = ds.indices_by_setting();
    let mut lists = Vec::with_capacity(pool);
    for id in 0..pool as u32 {
        let idx = groups.get(&id).ok_or_else(|| {
            Error::IncompleteDataset(format!("no records for pool setting {id}"))
        })?;
        lists.push(idx.as_slice());
    }
    let reps = repetition_count(&lists)?;
    let scale = (1u64 << n) as f64;
    let mut rows = Vec::with_capacity(pool);
    for idx in lists {
        let mut row = Vec::with_capacity(reps);
        for &i in idx.iter().take(reps) {
            let r = &ds.records[i];
            let d = (r.a ^ r.b).count_ones();
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            row.push(sign * scale / (1u64 << d) as f64);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Per-record cross-correlation kernels for the pooled randomized-
/// measurement dataset, with each record's setting id alongside. The mean
/// kernel over records drawn uniformly from a complete pool is an unbiased
/// overlap estimate.
pub fn rm_pooled_kernels(ds: &ShotDataset) -> Result<(Vec<f64>, Vec<u32>)> {
    let n = ds.meta.n;
    if n < 1 || n > 3 {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 3 });
    }
    if ds.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pool = 3u32.pow(n as u32);
    let mut seen = vec![false; pool as usize];
    let scale = (1u64 << n) as f64;
    let mut kernels = Vec::with_capacity(ds.records.len());
    let mut settings = Vec::with_capacity(ds.records.len());
    for r in &ds.records {
        if r.setting >= pool {
            return Err(Error::Domain(format!(
                "setting id {} is not a positive setting for n = {n}",
                r.setting
            )));
        }
        seen[r.setting as usize] = true;
        let d = (r.a ^ r.b).count_ones();
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        kernels.push(sign * scale / (1u64 << d) as f64);
        settings.push(r.setting);
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::IncompleteDataset(format!(
            "no records for pool setting {missing}"
        )));
    }
    Ok((kernels, settings))
}

/// Per-repetition overlap kernels for the Bell-basis route,
/// `1 - 2 * parity`.
pub fn bbm_repetition_kernels(ds: &ShotDataset) -> Result<Vec<f64>> {
    if ds.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(ds
        .records
        .iter()
        .map(|r| 1.0 - 2.0 * record_parity(r) as f64)
        .collect())
}

/// Log-spaced subsample sizes from `min` to `max` inclusive, deduplicated.
pub fn subsample_grid(max: usize, points: usize, min: usize) -> Vec<usize> {
    let lo = min.clamp(2, max.max(2));
    let hi = max.max(lo);
    if points < 2 || lo == hi {
        return vec![hi];
    }
    let (la, lb) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (la + t * (lb - la)).exp().round() as usize
        })
        .collect();
    grid[0] = lo;
    *grid.last_mut().unwrap() = hi;
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Bootstraps `estimator` at each grid size and fits the variance curve.
pub fn variance_curve<R, F>(
    reps: usize,
    grid: &[usize],
    resamples: usize,
    rng: &mut R,
    mut estimator: F,
) -> Result<VarianceCurve>
where
    R: Rng + ?Sized,
    F: FnMut(&[usize]) -> Result<f64>,
{
    let mut points = Vec::with_capacity(grid.len());
    for &n_p in grid {
        let v = bootstrap_variance(reps, n_p, resamples, rng, &mut estimator)?;
        points.push((n_p, v));
    }
    VarianceCurve::fit(points)
}

fn finish_point(
    protocol: Protocol,
    n: usize,
    curve: VarianceCurve,
    config: &StudyConfig,
) -> Result<StudyPoint> {
    let raw = (curve.amplitude / config.target_variance).powf(1.0 / curve.exponent);
    let fitted = repetitions_for_variance(&curve, config.target_variance)?;
    Ok(StudyPoint {
        protocol,
        n,
        required: fitted.max(config.grid_min as u64),
        raw_required: raw,
        curve,
    })
}

/// Study point for linear tomography on a joint signed-settings dataset.
pub fn qst_study_point(
    ds: &ShotDataset,
    cm: &ConfusionMatrix,
    config: &StudyConfig,
) -> Result<StudyPoint> {
    let n = ds.meta.n;
    let kernels = qst_repetition_kernels(ds, cm)?;
    let grid = subsample_grid(kernels.len(), config.grid_points, config.grid_min);
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_CURVE, n));
    rng.set_stream(Protocol::Qst as u64 + 1);
    let curve = variance_curve(kernels.len(), &grid, config.resamples, &mut rng, |idx| {
        Ok(idx.iter().map(|&i| kernels[i]).sum::<f64>() / idx.len() as f64)
    })?;
    finish_point(Protocol::Qst, n, curve, config)
}

/// Study point for randomized measurements on a positive-settings dataset.
/// Repetitions are pooled basis-tagged records. Every bootstrap resample
/// redraws a greedy basis selection over the full pool and averages the
/// kernels of drawn records whose setting was selected.
pub fn rm_study_point(ds: &ShotDataset, config: &StudyConfig) -> Result<StudyPoint> {
    let n = ds.meta.n;
    let (kernels, settings) = rm_pooled_kernels(ds)?;
    let reps = kernels.len();
    let pool = positive_settings(n)?;
    let mut sel_rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_SELECT, n));
    let mut selected = vec![false; pool.len()];
    let grid = subsample_grid(reps, config.grid_points, config.grid_min);
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_CURVE, n));
    rng.set_stream(Protocol::Rm as u64 + 1);
    let curve = variance_curve(reps, &grid, config.resamples, &mut rng, |idx| {
        selected.iter_mut().for_each(|s| *s = false);
        for s in rm_greedy_select(&pool, pool.len(), &mut sel_rng)? {
            selected[s as usize] = true;
        }
        let mut sum = 0.0;
        let mut kept = 0usize;
        for &i in idx {
            if selected[settings[i] as usize] {
                sum += kernels[i];
                kept += 1;
            }
        }
        if kept == 0 {
            return Err(Error::Domain(
                "basis selection excluded every drawn record".into(),
            ));
        }
        Ok(sum / kept as f64)
    })?;
    finish_point(Protocol::Rm, n, curve, config)
}

/// Study point for the Bell-basis route on its single-setting dataset.
pub fn bbm_study_point(ds: &ShotDataset, config: &StudyConfig) -> Result<StudyPoint> {
    let n = ds.meta.n;
    let kernels = bbm_repetition_kernels(ds)?;
    let grid = subsample_grid(kernels.len(), config.grid_points, config.grid_min);
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_CURVE, n));
    rng.set_stream(Protocol::Bbm as u64 + 1);
    let curve = variance_curve(kernels.len(), &grid, config.resamples, &mut rng, |idx| {
        Ok(idx.iter().map(|&i| kernels[i]).sum::<f64>() / idx.len() as f64)
    })?;
    finish_point(Protocol::Bbm, n, curve, config)
}

/// Full study: each requested protocol at each size, on identical-pair
/// datasets (`phi = 0`) regenerated per size under `nm`. Tomography and
/// randomized measurements share one dataset per size; the latter sees its
/// positive-settings view.
pub fn run_study(
    protocols: &[Protocol],
    sizes: &[usize],
    nm: &NoiseModel,
    config: &StudyConfig,
) -> Result<Vec<StudyPoint>> {
    nm.validate()?;
    let mut out = Vec::new();
    for &n in sizes {
        let needs_tomography = protocols
            .iter()
            .any(|p| matches!(p, Protocol::Qst | Protocol::Rm));
        let tomography = if needs_tomography {
            Some(generate_tomography_dataset(
                n,
                0.0,
                0.0,
                nm,
                config.tomography_shots,
                sub_seed(config.seed, TAG_TOMOGRAPHY, n),
            )?)
        } else {
            None
        };
        for &protocol in protocols {
            let point = match protocol {
                Protocol::Qst => {
                    let ds = tomography.as_ref().expect("tomography dataset present");
                    qst_study_point(ds, &nm.confusion(2 * n)?, config)?
                }
                Protocol::Rm => {
                    let ds = tomography.as_ref().expect("tomography dataset present");
                    rm_study_point(&rm_view_of_tomography(ds), config)?
                }
                Protocol::Bbm => {
                    let ds = generate_bbm_dataset(
                        n,
                        0.0,
                        0.0,
                        nm,
                        config.bbm_shots,
                        sub_seed(config.seed, TAG_BELL, n),
                    )?;
                    bbm_study_point(&ds, config)?
                }
            };
            out.push(point);
        }
    }
    Ok(out)
}

/// Expectation of the Bell-basis kernel under the full noisy pipeline;
/// the sampled kernel mean converges here.
pub fn bbm_kernel_expectation(n: usize, nm: &NoiseModel) -> Result<f64> {
    let mut circuit = pair_prep_circuit(n, 0.0, 0.0)?;
    circuit.extend(&bbm_circuit(n)?)?;
    let rho = run_circuit_from_ground(&circuit, nm)?;
    let probs = outcome_distribution(&rho, None, Some(&nm.confusion(2 * n)?))?;
    Ok(probs
        .iter()
        .enumerate()
        .map(|(o, &p)| p * (1.0 - 2.0 * outcome_parity(o as u16, n) as f64))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::qst;
    use crate::sim::Module;
    use approx::assert_abs_diff_eq;

    fn dataset_from(n: usize, rows: &[(u32, u16, u16)]) -> ShotDataset {
        let mut ds = ShotDataset::new(DatasetMeta {
            n,
            protocol: "qst".into(),
            seed: 0,
            shots_per_setting: 0,
        });
        ds.records = rows
            .iter()
            .map(|&(setting, a, b)| ShotRecord { setting, a, b })
            .collect();
        ds
    }

    #[test]
    fn grid_is_log_spaced_and_hits_both_ends() {
        let g = subsample_grid(10_000, 8, 50);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 50);
        assert_eq!(*g.last().unwrap(), 10_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let ratios: Vec<f64> = g.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
        for r in &ratios {
            assert_abs_diff_eq!(*r, ratios[0], epsilon = 0.2);
        }
    }

    #[test]
    fn grid_degenerates_gracefully() {
        assert_eq!(subsample_grid(30, 8, 50), vec![30]);
        assert_eq!(subsample_grid(50, 8, 50), vec![50]);
        let g = subsample_grid(60, 4, 50);
        assert_eq!(g[0], 50);
        assert_eq!(*g.last().unwrap(), 60);
    }

    #[test]
    fn tomography_kernels_reproduce_a_hand_computed_case() {
        // Ideal single-qubit pair in |00>: X and Y settings see all four
        // outcome pairs once, the Z setting always agrees. Signed ids:
        // +X = 0, +Y = 2, +Z = 4.
        let mut rows = Vec::new();
        for setting in [0u32, 2] {
            for (a, b) in [(0u16, 0u16), (0, 1), (1, 0), (1, 1)] {
                rows.push((setting, a, b));
            }
        }
        for _ in 0..4 {
            rows.push((4u32, 0, 0));
        }
        let ds = dataset_from(1, &rows);
        let cm = NoiseModel::noiseless().confusion(2).unwrap();
        let t = qst_repetition_kernels(&ds, &cm).unwrap();
        // Per repetition: (1 + x + y + z) / 2 with z = (1+1) - 1 = 1.
        assert_eq!(t.len(), 4);
        assert_abs_diff_eq!(t[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[3], 2.0, epsilon = 1e-12);
        let mean: f64 = t.iter().sum::<f64>() / t.len() as f64;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tomography_kernels_debias_symmetric_readout() {
        let rows = vec![(0u32, 0u16, 0u16), (2, 0, 0), (4, 0, 0)];
        let ds = dataset_from(1, &rows);
        let mut nm = NoiseModel::noiseless();
        nm.eps_ro = 0.1;
        let cm = nm.confusion(2).unwrap();
        let t = qst_repetition_kernels(&ds, &cm).unwrap();
        // Each debiased value is 1/(1 - 2 * 0.1) = 1.25, so every product
        // is 1.5625 and t = (1 + 2 * 1.5625 + 1.5625) / 2.
        assert_abs_diff_eq!(t[0], (1.0 + 3.0 * 1.5625) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn tomography_kernels_reject_missing_canonical_settings() {
        let ds = dataset_from(1, &[(0u32, 0, 0), (2, 0, 0)]);
        let cm = NoiseModel::noiseless().confusion(2).unwrap();
        assert!(matches!(
            qst_repetition_kernels(&ds, &cm),
            Err(Error::IncompleteDataset(_))
        ));
    }

    #[test]
    fn tomography_kernel_mean_matches_the_exact_overlap() {
        // Unbiasedness under noise: the kernel mean over a large dataset
        // approaches the trace overlap of the exactly reconstructed
        // modules.
        let n = 1;
        let nm = NoiseModel::median();
        let ds = generate_tomography_dataset(n, 0.0, 0.0, &nm, 20_000, 11).unwrap();
        let cm = nm.confusion(2 * n).unwrap();
        let t = qst_repetition_kernels(&ds, &cm).unwrap();
        let mean = t.iter().sum::<f64>() / t.len() as f64;

        let rho = ghz_pair_state(n, 0.0, 0.0, &nm).unwrap();
        let mut dists_a = std::collections::BTreeMap::new();
        let mut dists_b = std::collections::BTreeMap::new();
        for s in &tomography_settings(n).unwrap() {
            let probs =
                outcome_distribution(&rho, Some(&s.pair_rotation()), Some(&cm)).unwrap();
            let dim = 1usize << n;
            let mut fa = vec![0.0; dim];
            let mut fb = vec![0.0; dim];
            for (o, &p) in probs.iter().enumerate() {
                let (a, b) = split_outcome(o as u16, n);
                fa[a as usize] += p;
                fb[b as usize] += p;
            }
            dists_a.insert(s.id(), fa);
            dists_b.insert(s.id(), fb);
        }
        let single = nm.confusion(n).unwrap();
        let ca = qst::correct_distributions(&dists_a, &single).unwrap();
        let cb = qst::correct_distributions(&dists_b, &single).unwrap();
        let ra = qst::reconstruct_from_distributions(n, &ca).unwrap();
        let rb = qst::reconstruct_from_distributions(n, &cb).unwrap();
        let exact = crate::states::trace_overlap(&ra, &rb).unwrap();
        assert_abs_diff_eq!(mean, exact, epsilon = 0.02);
    }

    #[test]
    fn rm_kernels_take_the_four_hamming_values() {
        let rows = vec![
            (0u32, 0u16, 0u16),
            (0, 0, 1),
            (1, 0, 0),
            (1, 1, 1),
            (2, 0, 0),
            (2, 1, 0),
        ];
        let ds = dataset_from(1, &rows);
        let rows = rm_setting_kernels(&ds).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], vec![2.0, -1.0]);
        assert_eq!(rows[1], vec![2.0, 2.0]);
        assert_eq!(rows[2], vec![2.0, -1.0]);
    }

    #[test]
    fn rm_kernel_mean_reproduces_the_ground_state_overlap() {
        // |0> against |0>: X and Y outcomes are uniform so their kernels
        // average to 1/2 each, the Z kernel is always 2, and the pool mean
        // is (1/2 + 1/2 + 2) / 3 = 1.
        let mut rows = Vec::new();
        for setting in [0u32, 1] {
            for (a, b) in [(0u16, 0u16), (0, 1), (1, 0), (1, 1)] {
                rows.push((setting, a, b));
            }
        }
        for _ in 0..4 {
            rows.push((2u32, 0, 0));
        }
        let ds = dataset_from(1, &rows);
        let kernels = rm_setting_kernels(&ds).unwrap();
        let mean: f64 = kernels
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .sum::<f64>()
            / kernels.len() as f64;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bell_kernels_flip_sign_with_parity() {
        let ds = dataset_from(2, &[(0u32, 0b11, 0b01), (0, 0b11, 0b11)]);
        let t = bbm_repetition_kernels(&ds).unwrap();
        assert_eq!(t, vec![-1.0, 1.0]);
    }

    #[test]
    fn generated_tomography_dataset_is_complete_and_shuffled() {
        let nm = NoiseModel::median();
        let ds = generate_tomography_dataset(1, 0.0, 0.0, &nm, 200, 3).unwrap();
        assert_eq!(ds.records.len(), 6 * 200);
        let groups = ds.indices_by_setting();
        assert_eq!(groups.len(), 6);
        for idx in groups.values() {
            assert_eq!(idx.len(), 200);
        }
        // The Z-basis records mix the two GHZ branches; a sorted sequence
        // would put every (0, 0) before every (1, 1).
        let z_idx = &groups[&4];
        let first = ds.records[z_idx[0]];
        assert!(z_idx
            .iter()
            .any(|&i| ds.records[i].a != first.a || ds.records[i].b != first.b));
        let sorted = z_idx
            .windows(2)
            .all(|w| ds.records[w[0]].a <= ds.records[w[1]].a);
        assert!(!sorted, "records within a setting should be shuffled");
    }

    #[test]
    fn generated_datasets_are_deterministic() {
        let nm = NoiseModel::median();
        let a = generate_tomography_dataset(1, 0.0, 0.3, &nm, 100, 9).unwrap();
        let b = generate_tomography_dataset(1, 0.0, 0.3, &nm, 100, 9).unwrap();
        assert_eq!(a, b);
        let c = generate_bbm_dataset(2, 0.0, 0.0, &nm, 500, 9).unwrap();
        let d = generate_bbm_dataset(2, 0.0, 0.0, &nm, 500, 9).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn bell_study_point_matches_the_binomial_prediction() {
        let n = 2;
        let nm = NoiseModel::median();
        let config = StudyConfig {
            bbm_shots: 40_000,
            ..StudyConfig::default()
        };
        let ds = generate_bbm_dataset(n, 0.0, 0.0, &nm, config.bbm_shots, 21).unwrap();
        let point = bbm_study_point(&ds, &config).unwrap();
        let overlap = bbm_kernel_expectation(n, &nm).unwrap();
        let p_even = (1.0 + overlap) / 2.0;
        let predicted = 4.0 * p_even * (1.0 - p_even) / config.target_variance;
        assert!(
            (point.raw_required / predicted - 1.0).abs() < 0.3,
            "raw {} vs predicted {predicted}",
            point.raw_required
        );
        assert!(point.required >= config.grid_min as u64);
    }

    #[test]
    fn reported_requirement_is_floored_at_the_grid_minimum() {
        // A nearly deterministic dataset needs almost no repetitions; the
        // report floors at the smallest measured subsample size while the
        // raw fit value stays below it.
        let nm = NoiseModel::noiseless();
        let mut low = nm.clone();
        low.eps_ro = 0.002;
        let config = StudyConfig {
            bbm_shots: 30_000,
            ..StudyConfig::default()
        };
        let ds = generate_bbm_dataset(1, 0.0, 0.0, &low, config.bbm_shots, 5).unwrap();
        let point = bbm_study_point(&ds, &config).unwrap();
        assert_eq!(point.required, config.grid_min as u64);
        assert!(
            point.raw_required < config.grid_min as f64,
            "raw {}",
            point.raw_required
        );
    }

    #[test]
    fn study_is_deterministic() {
        let nm = NoiseModel::median();
        let config = StudyConfig {
            tomography_shots: 400,
            bbm_shots: 2_000,
            resamples: 40,
            ..StudyConfig::default()
        };
        let protocols = [Protocol::Qst, Protocol::Rm, Protocol::Bbm];
        let a = run_study(&protocols, &[1], &nm, &config).unwrap();
        let b = run_study(&protocols, &[1], &nm, &config).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn rm_study_point_runs_on_the_tomography_view() {
        let nm = NoiseModel::median();
        let config = StudyConfig {
            tomography_shots: 2_000,
            resamples: 60,
            ..StudyConfig::default()
        };
        let ds = generate_tomography_dataset(1, 0.0, 0.0, &nm, 2_000, 13).unwrap();
        let point = rm_study_point(&rm_view_of_tomography(&ds), &config).unwrap();
        assert_eq!(point.protocol, Protocol::Rm);
        assert!(point.curve.exponent > 0.5 && point.curve.exponent < 1.5);
        assert!(point.required >= config.grid_min as u64);
    }

    #[test]
    fn empirical_module_marginals_match_the_generator_state() {
        // The dataset's module A frequencies in the Z basis should match
        // the exact outcome distribution of the pair state.
        let n = 1;
        let nm = NoiseModel::median();
        let ds = generate_tomography_dataset(n, 0.0, 0.0, &nm, 40_000, 17).unwrap();
        let freqs = qst::empirical_distributions(&ds, Module::A);
        let rho = ghz_pair_state(n, 0.0, 0.0, &nm).unwrap();
        let cm = nm.confusion(2 * n).unwrap();
        let z_id = 4u32;
        let s = crate::measure::tomography_setting(n, z_id).unwrap();
        let probs = outcome_distribution(&rho, Some(&s.pair_rotation()), Some(&cm)).unwrap();
        let mut pa = vec![0.0; 1 << n];
        for (o, &p) in probs.iter().enumerate() {
            let (a, _) = split_outcome(o as u16, n);
            pa[a as usize] += p;
        }
        for (f, p) in freqs[&z_id].iter().zip(&pa) {
            assert_abs_diff_eq!(f, p, epsilon = 0.01);
        }
    }
}
