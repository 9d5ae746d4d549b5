//! Overlap estimation through full state tomography of both modules.
//!
//! Each module is measured in all `6^n` signed product bases. Per-setting
//! outcome distributions are readout-corrected by inverting the per-qubit
//! confusion matrices, Pauli expectations are averaged over every setting
//! that covers them (sign flips included), and the linear-inversion
//! estimate is projected to the closest physical state.

use crate::circuit::Axis;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::measure::tomography_settings;
use crate::noise::{clip_and_renormalize, ConfusionMatrix};
use crate::protocols::{EstimateReport, Protocol};
use crate::sim::{Module, ShotDataset};
use crate::states::{
    all_pauli_strings, project_to_physical, trace_overlap, DensityMatrix, Pauli,
};
use std::collections::BTreeMap;

fn pauli_axis(p: Pauli) -> Option<Axis> {
    match p {
        Pauli::I => None,
        Pauli::X => Some(Axis::X),
        Pauli::Y => Some(Axis::Y),
        Pauli::Z => Some(Axis::Z),
    }
}

/// Per-qubit confusion matrices estimated from computational-basis
/// calibration shots. The calibration dataset tags the prepared register in
/// the setting column: 0 for all zeros, 1 for all ones.
pub fn confusion_from_calibration(ds: &ShotDataset, module: Module) -> Result<ConfusionMatrix> {
    let n = ds.meta.n;
    let groups = ds.indices_by_setting();
    for prepared in 0..2u32 {
        if !groups.contains_key(&prepared) {
            return Err(Error::IncompleteDataset(format!(
                "calibration is missing the all-{prepared}s preparation"
            )));
        }
    }
    let flip_rate = |prepared: u32, q: usize| -> f64 {
        let pos = n - 1 - q;
        let idx = &groups[&prepared];
        let mismatches = idx
            .iter()
            .filter(|&&k| {
                let bit = (ds.records[k].bits(module) >> pos) & 1;
                u32::from(bit) != prepared
            })
            .count();
        mismatches as f64 / idx.len() as f64
    };
    let per_qubit = (0..n)
        .map(|q| {
            let e0 = flip_rate(0, q);
            let e1 = flip_rate(1, q);
            [[1.0 - e0, e0], [e1, 1.0 - e1]]
        })
        .collect();
    ConfusionMatrix::new(per_qubit)
}

/// Empirical per-setting outcome frequencies for one module.
pub fn empirical_distributions(ds: &ShotDataset, module: Module) -> BTreeMap<u32, Vec<f64>> {
    let mut map = ds.module_counts(module);
    for dist in map.values_mut() {
        let total: f64 = dist.iter().sum();
        for v in dist.iter_mut() {
            *v /= total;
        }
    }
    map
}

/// Inverts readout misassignment on every per-setting distribution, then
/// clips negatives and renormalizes.
pub fn correct_distributions(
    dists: &BTreeMap<u32, Vec<f64>>,
    cm: &ConfusionMatrix,
) -> Result<BTreeMap<u32, Vec<f64>>> {
    let mut out = BTreeMap::new();
    for (&id, dist) in dists {
        let mut corrected = cm.correct_distribution(dist)?;
        clip_and_renormalize(&mut corrected)?;
        out.insert(id, corrected);
    }
    Ok(out)
}

/// Linear-inversion reconstruction from per-setting outcome distributions
/// over the full signed basis table, projected to a physical state.
///
/// Every non-identity Pauli expectation is averaged over all settings whose
/// per-qubit axes cover it, with outcome eigenvalues sign-flipped on
/// negative axes.
pub fn reconstruct_from_distributions(
    n: usize,
    dists: &BTreeMap<u32, Vec<f64>>,
) -> Result<DensityMatrix> {
    let settings = tomography_settings(n)?;
    let dim = 1usize << n;
    for s in &settings {
        match dists.get(&s.id()) {
            None => {
                return Err(Error::IncompleteDataset(format!(
                    "no shots for setting {} ({})",
                    s.id(),
                    s.label()
                )))
            }
            Some(d) if d.len() != dim => {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: d.len(),
                })
            }
            _ => {}
        }
    }
    let mut acc = crate::linalg::CMat::identity(dim, dim);
    for string in all_pauli_strings(n)?.iter().skip(1) {
        let support: Vec<(usize, Axis)> = string
            .letters()
            .iter()
            .enumerate()
            .filter_map(|(q, &l)| pauli_axis(l).map(|a| (q, a)))
            .collect();
        let mut total = 0.0;
        let mut covering = 0usize;
        for setting in &settings {
            if !support.iter().all(|&(q, a)| setting.axes()[q].axis == a) {
                continue;
            }
            covering += 1;
            let dist = &dists[&setting.id()];
            let mut est = 0.0;
            for (outcome, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let mut value = 1.0;
                for &(q, _) in &support {
                    let bit = (outcome >> (n - 1 - q)) & 1;
                    let mut z = 1.0 - 2.0 * bit as f64;
                    if setting.axes()[q].negative {
                        z = -z;
                    }
                    value *= z;
                }
                est += p * value;
            }
            total += est;
        }
        let expectation = total / covering as f64;
        acc += string.matrix() * C64::new(expectation, 0.0);
    }
    acc /= C64::new(dim as f64, 0.0);
    project_to_physical(n, &acc)
}

/// Full tomography of one module from a dataset covering all `6^n`
/// settings. When calibration shots are given, the confusion matrices are
/// estimated from them instead of taken from `cm`.
pub fn qst_reconstruct(
    ds: &ShotDataset,
    module: Module,
    cm: &ConfusionMatrix,
    calibration: Option<&ShotDataset>,
) -> Result<DensityMatrix> {
    let n = ds.meta.n;
    if cm.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cm.n(),
        });
    }
    let effective = match calibration {
        Some(cal) => confusion_from_calibration(cal, module)?,
        None => cm.clone(),
    };
    let raw = empirical_distributions(ds, module);
    let corrected = correct_distributions(&raw, &effective)?;
    reconstruct_from_distributions(n, &corrected)
}

/// Overlap between module A of `ds_a` and module B of `ds_b`, each fully
/// reconstructed. Pass the same joint dataset twice when both modules were
/// measured together. The reported shot count is per module.
pub fn qst_inner_product(
    ds_a: &ShotDataset,
    ds_b: &ShotDataset,
    cm: &ConfusionMatrix,
    calibration: Option<&ShotDataset>,
) -> Result<EstimateReport> {
    if ds_a.meta.n != ds_b.meta.n {
        return Err(Error::DimensionMismatch {
            expected: ds_a.meta.n,
            got: ds_b.meta.n,
        });
    }
    let rho_a = qst_reconstruct(ds_a, Module::A, cm, calibration)?;
    let rho_b = qst_reconstruct(ds_b, Module::B, cm, calibration)?;
    Ok(EstimateReport {
        protocol: Protocol::Qst,
        n: ds_a.meta.n,
        phi: None,
        overlap: trace_overlap(&rho_a, &rho_b)?,
        variance: None,
        shots: ds_a.len().max(ds_b.len()) as u64,
        seed: ds_a.meta.seed,
    })
}
