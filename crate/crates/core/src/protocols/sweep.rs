//! Phase sweeps: prepare a pair of entangled states with a relative phase
//! and estimate their overlap with each protocol.
//!
//! Module A always prepares the zero-phase state; module B sweeps its
//! phase. Sampling is aggregate (multinomial outcome counts per setting),
//! with one deterministic RNG sub-stream per sweep point.

use crate::circuit::{bbm_circuit, pair_prep_circuit};
use crate::error::{Error, Result};
use crate::measure::{positive_settings, tomography_settings};
use crate::noise::{ConfusionMatrix, NoiseModel};
use crate::protocols::{bbm, qst, rm, EstimateReport, Protocol};
use crate::sim::{outcome_distribution, run_circuit_from_ground, sample_counts, split_outcome};
use crate::states::{trace_overlap, DensityMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Equally spaced phases covering `[0, 2 pi]` inclusive.
pub fn phase_grid(points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.0];
    }
    (0..points)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / (points - 1) as f64)
        .collect()
}

/// Joint `2n`-qubit state of both modules after noisy preparation.
pub fn ghz_pair_state(
    n: usize,
    phi_a: f64,
    phi_b: f64,
    nm: &NoiseModel,
) -> Result<DensityMatrix> {
    run_circuit_from_ground(&pair_prep_circuit(n, phi_a, phi_b)?, nm)
}

fn module_frequencies(counts: &[u64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let dim = 1usize << n;
    let total: u64 = counts.iter().sum();
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    for (o, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let (oa, ob) = split_outcome(o as u16, n);
        a[oa as usize] += c as f64;
        b[ob as usize] += c as f64;
    }
    for v in a.iter_mut().chain(b.iter_mut()) {
        *v /= total as f64;
    }
    (a, b)
}

/// Samples per-setting joint outcomes for both modules under shared
/// settings and returns the per-module frequency tables.
fn sampled_setting_frequencies(
    rho: &DensityMatrix,
    settings: &[crate::measure::BasisSetting],
    cm_joint: &ConfusionMatrix,
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> Result<(BTreeMap<u32, Vec<f64>>, BTreeMap<u32, Vec<f64>>)> {
    let n = settings[0].n();
    let mut dists_a = BTreeMap::new();
    let mut dists_b = BTreeMap::new();
    for s in settings {
        let rot = s.pair_rotation();
        let probs = outcome_distribution(rho, Some(&rot), Some(cm_joint))?;
        let counts = sample_counts(&probs, shots, rng);
        let (fa, fb) = module_frequencies(&counts, n);
        dists_a.insert(s.id(), fa);
        dists_b.insert(s.id(), fb);
    }
    Ok((dists_a, dists_b))
}

/// One overlap estimate per phase. `shots` counts repetitions per setting
/// (the Bell-basis route has a single setting). All reports carry the
/// sweep-level seed; per-point randomness uses disjoint sub-streams.
pub fn phase_sweep(
    protocol: Protocol,
    n: usize,
    phis: &[f64],
    nm: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<Vec<EstimateReport>> {
    nm.validate()?;
    if n < 1 || n > 3 {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 3 });
    }
    if phis.is_empty() {
        return Err(Error::Domain("empty phase list".into()));
    }
    if shots < 1 {
        return Err(Error::Domain("shot count must be at least 1".into()));
    }
    let cm_joint = nm.confusion(2 * n)?;
    let cm_single = nm.confusion(n)?;
    let mut out = Vec::with_capacity(phis.len());
    for (i, &phi) in phis.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        let (overlap, variance) = match protocol {
            Protocol::Qst => {
                let rho = ghz_pair_state(n, 0.0, phi, nm)?;
                let settings = tomography_settings(n)?;
                let (da, db) =
                    sampled_setting_frequencies(&rho, &settings, &cm_joint, shots, &mut rng)?;
                let ca = qst::correct_distributions(&da, &cm_single)?;
                let cb = qst::correct_distributions(&db, &cm_single)?;
                let rho_a = qst::reconstruct_from_distributions(n, &ca)?;
                let rho_b = qst::reconstruct_from_distributions(n, &cb)?;
                (trace_overlap(&rho_a, &rho_b)?, None)
            }
            Protocol::Rm => {
                let rho = ghz_pair_state(n, 0.0, phi, nm)?;
                let pool = positive_settings(n)?;
                let selected = rm::rm_greedy_select(&pool, pool.len(), &mut rng)?;
                let (da, db) =
                    sampled_setting_frequencies(&rho, &pool, &cm_joint, shots, &mut rng)?;
                (
                    rm::rm_estimate_from_distributions(n, &da, &db, &selected)?,
                    None,
                )
            }
            Protocol::Bbm => {
                let mut circuit = pair_prep_circuit(n, 0.0, phi)?;
                circuit.extend(&bbm_circuit(n)?)?;
                let rho = run_circuit_from_ground(&circuit, nm)?;
                let probs = outcome_distribution(&rho, None, Some(&cm_joint))?;
                let counts = sample_counts(&probs, shots, &mut rng);
                let odd: u64 = counts
                    .iter()
                    .enumerate()
                    .filter(|(o, _)| bbm::outcome_parity(*o as u16, n) == 1)
                    .map(|(_, &c)| c)
                    .sum();
                let mean_parity = odd as f64 / shots as f64;
                let even = 1.0 - mean_parity;
                (
                    1.0 - 2.0 * mean_parity,
                    Some(4.0 * even * (1.0 - even) / shots as f64),
                )
            }
        };
        out.push(EstimateReport {
            protocol,
            n,
            phi: Some(phi),
            overlap,
            variance,
            shots,
            seed,
        });
    }
    Ok(out)
}
