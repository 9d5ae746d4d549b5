//! Overlap estimation from pairwise Bell-basis measurements.
//!
//! A transversal entangling layer plus local rotations map the singlet of
//! each qubit pair (A_i, B_i) onto the outcome (1, 1), so the parity of the
//! bitwise AND of the two modules' readouts flags the antisymmetric
//! subspace. The overlap follows from the mean parity over repetitions:
//! `tr(rho_A rho_B) = 1 - 2 * mean(parity)`.

use crate::circuit::{bbm_circuit, pair_prep_circuit};
use crate::error::{Error, Result};
use crate::linalg::kron;
use crate::noise::NoiseModel;
use crate::protocols::{EstimateReport, Protocol};
use crate::sim::{
    outcome_distribution, run_circuit, run_circuit_from_ground, split_outcome, ShotDataset,
    ShotRecord,
};
use crate::states::DensityMatrix;

/// Parity of the bitwise AND of the two module bitstrings.
pub fn record_parity(r: &ShotRecord) -> u8 {
    ((r.a & r.b).count_ones() & 1) as u8
}

/// Parity of a joint `2n`-qubit outcome.
pub fn outcome_parity(outcome: u16, n: usize) -> u8 {
    let (a, b) = split_outcome(outcome, n);
    ((a & b).count_ones() & 1) as u8
}

/// Overlap and its binomial variance from a Bell-basis dataset.
pub fn bbm_estimate(ds: &ShotDataset) -> Result<EstimateReport> {
    if ds.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let total = ds.records.len() as f64;
    let odd: f64 = ds.records.iter().map(|r| record_parity(r) as f64).sum();
    let mean_parity = odd / total;
    let even_fraction = 1.0 - mean_parity;
    Ok(EstimateReport {
        protocol: Protocol::Bbm,
        n: ds.meta.n,
        phi: None,
        overlap: 1.0 - 2.0 * mean_parity,
        variance: Some(4.0 * even_fraction * (1.0 - even_fraction) / total),
        shots: ds.records.len() as u64,
        seed: ds.meta.seed,
    })
}

/// Expectation of the overlap estimator for the full noisy pair experiment:
/// GHZ preparation with phases `(0, phi)` on both modules, Bell rotation,
/// and readout confusion, all under `nm`, with no shot sampling.
pub fn expected_overlap(n: usize, phi: f64, nm: &NoiseModel) -> Result<f64> {
    let mut circuit = pair_prep_circuit(n, 0.0, phi)?;
    circuit.extend(&bbm_circuit(n)?)?;
    let rho = run_circuit_from_ground(&circuit, nm)?;
    let cm = nm.confusion(2 * n)?;
    let probs = outcome_distribution(&rho, None, Some(&cm))?;
    let mean_parity: f64 = probs
        .iter()
        .enumerate()
        .map(|(o, &p)| p * outcome_parity(o as u16, n) as f64)
        .sum();
    Ok(1.0 - 2.0 * mean_parity)
}

/// Even-parity probability from noiseless circuit statistics on
/// `rho_A x rho_B`; equals `(1 + tr(rho_A rho_B)) / 2` analytically.
pub fn exact_even_parity_probability(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
) -> Result<f64> {
    if rho_a.n() != rho_b.n() {
        return Err(Error::DimensionMismatch {
            expected: rho_a.dim(),
            got: rho_b.dim(),
        });
    }
    let n = rho_a.n();
    let joint = DensityMatrix::trusted(2 * n, kron(rho_a.matrix(), rho_b.matrix()));
    let circuit = bbm_circuit(n)?;
    let out = run_circuit(&circuit, &joint, &NoiseModel::noiseless())?;
    let probs = outcome_distribution(&out, None, None)?;
    Ok(probs
        .iter()
        .enumerate()
        .filter(|(o, _)| outcome_parity(*o as u16, n) == 0)
        .map(|(_, &p)| p)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::DatasetMeta;
    use crate::states::{random_density_matrix, trace_overlap};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(n: usize, records: Vec<(u16, u16)>) -> ShotDataset {
        let mut ds = ShotDataset::new(DatasetMeta {
            n,
            protocol: "bbm".into(),
            seed: 1,
            shots_per_setting: records.len(),
        });
        ds.records = records
            .into_iter()
            .map(|(a, b)| ShotRecord { setting: 0, a, b })
            .collect();
        ds
    }

    #[test]
    fn all_zero_records_give_unit_overlap() {
        let ds = dataset(3, vec![(0, 0); 10]);
        let r = bbm_estimate(&ds).unwrap();
        assert_abs_diff_eq!(r.overlap, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.variance.unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn even_parity_split_gives_zero_overlap() {
        let ds = dataset(1, vec![(1, 1), (0, 0), (1, 1), (0, 1)]);
        // Parities 1, 0, 1, 0.
        let r = bbm_estimate(&ds).unwrap();
        assert_abs_diff_eq!(r.overlap, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.variance.unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn variance_tracks_the_even_fraction() {
        let ds = dataset(2, vec![(0, 0), (0, 0), (0b11, 0b11), (0b01, 0b01)]);
        // Parities 0, 0, 0, 1 -> even fraction 3/4.
        let r = bbm_estimate(&ds).unwrap();
        assert_abs_diff_eq!(r.overlap, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.variance.unwrap(), 4.0 * 0.75 * 0.25 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let ds = dataset(1, vec![]);
        assert!(matches!(bbm_estimate(&ds), Err(Error::EmptyDataset)));
    }

    #[test]
    fn noiseless_expected_overlap_is_the_phase_cosine() {
        let nm = NoiseModel::noiseless();
        for n in 1..=3 {
            for phi in [0.0, 1.0, std::f64::consts::PI] {
                let got = expected_overlap(n, phi, &nm).unwrap();
                assert_abs_diff_eq!(got, (1.0 + phi.cos()) / 2.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn noise_pulls_the_expected_overlap_off_the_ideal_value() {
        let nm = NoiseModel::median();
        let got = expected_overlap(2, 0.0, &nm).unwrap();
        assert!(got < 0.95 && got > 0.5, "overlap {got}");
    }

    #[test]
    fn circuit_parity_statistics_match_the_analytic_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..=2 {
            let a = random_density_matrix(n, &mut rng).unwrap();
            let b = random_density_matrix(n, &mut rng).unwrap();
            let p_even = exact_even_parity_probability(&a, &b).unwrap();
            let expect = (1.0 + trace_overlap(&a, &b).unwrap()) / 2.0;
            assert_abs_diff_eq!(p_even, expect, epsilon = 1e-12);
        }
    }
}
