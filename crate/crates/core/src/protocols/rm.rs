//! Overlap estimation from cross-correlated randomized local measurements.
//!
//! Both modules measure in the same product Pauli basis drawn from the
//! `3^n` positive settings; the overlap is recovered from a
//! Hamming-distance-weighted cross-correlation of the two modules' outcome
//! statistics. Basis choice uses a greedy spread over the pool: the first
//! basis is uniform random, each further one maximizes the summed unitary
//! distance to those already picked.

use crate::error::{Error, Result};
use crate::measure::{tomography_to_positive_id, BasisSetting};
use crate::protocols::{EstimateReport, Protocol};
use crate::sim::{Module, ShotDataset};
use crate::states::UnitaryOp;
use rand::Rng;
use std::collections::BTreeMap;

/// Distance between two basis rotations,
/// `sqrt(2 - |tr(U^dag V)| / 2^(n-1))`; zero for identical rotations,
/// maximal for trace-orthogonal ones.
pub fn rotation_distance(a: &UnitaryOp, b: &UnitaryOp) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.matrix().nrows(),
            got: b.matrix().nrows(),
        });
    }
    let overlap = (a.matrix().adjoint() * b.matrix()).trace().norm();
    let scale = (1u64 << (a.n() - 1)) as f64;
    Ok((2.0 - overlap / scale).max(0.0).sqrt())
}

/// Greedy spread selection of `k` settings from `pool`. Returns setting ids
/// in selection order. Deterministic given the RNG state; ties go to the
/// lowest id.
pub fn rm_greedy_select<R: Rng>(
    pool: &[BasisSetting],
    k: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if pool.is_empty() || k < 1 {
        return Err(Error::Domain("selection needs a non-empty pool and k >= 1".into()));
    }
    if k > pool.len() {
        return Err(Error::Domain(format!(
            "selection size {k} exceeds pool size {}",
            pool.len()
        )));
    }
    let rotations: Vec<UnitaryOp> = pool.iter().map(|s| s.rotation()).collect();
    let m = pool.len();
    let mut dist = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let d = rotation_distance(&rotations[i], &rotations[j])?;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut chosen = vec![rng.gen_range(0..m)];
    let mut in_set = vec![false; m];
    in_set[chosen[0]] = true;
    while chosen.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..m {
            if in_set[cand] {
                continue;
            }
            let spread: f64 = chosen.iter().map(|&c| dist[c][cand]).sum();
            best = match best {
                None => Some((cand, spread)),
                Some((b, s)) => {
                    if spread > s + 1e-12 {
                        Some((cand, spread))
                    } else if (spread - s).abs() <= 1e-12 && pool[cand].id() < pool[b].id() {
                        Some((cand, spread))
                    } else {
                        Some((b, s))
                    }
                }
            };
        }
        let (next, _) = best.expect("candidates remain while chosen < k");
        in_set[next] = true;
        chosen.push(next);
    }
    Ok(chosen.into_iter().map(|i| pool[i].id()).collect())
}

/// Cross-correlation estimator on per-setting outcome distributions:
/// `2^n * mean_over_settings[ sum_{s,s'} (-2)^(-D(s,s')) P_A(s) P_B(s') ]`
/// with D the Hamming distance between outcomes.
pub fn rm_estimate_from_distributions(
    n: usize,
    dists_a: &BTreeMap<u32, Vec<f64>>,
    dists_b: &BTreeMap<u32, Vec<f64>>,
    selected: &[u32],
) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::Domain("no settings selected".into()));
    }
    let dim = 1usize << n;
    let weights: Vec<f64> = (0..=n).map(|d| (-0.5f64).powi(d as i32)).collect();
    let mut total = 0.0;
    for &id in selected {
        let (pa, pb) = match (dists_a.get(&id), dists_b.get(&id)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Domain(format!(
                    "setting {id} missing from one of the datasets"
                )))
            }
        };
        if pa.len() != dim || pb.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: pa.len().min(pb.len()),
            });
        }
        let mut kernel = 0.0;
        for (s, &fa) in pa.iter().enumerate() {
            if fa == 0.0 {
                continue;
            }
            for (t, &fb) in pb.iter().enumerate() {
                let d = (s ^ t).count_ones() as usize;
                kernel += weights[d] * fa * fb;
            }
        }
        total += kernel * dim as f64;
    }
    Ok(total / selected.len() as f64)
}

/// Re-keys the positive settings of a signed-table dataset into the
/// positive base-3 id space, dropping records taken in negative bases.
/// Record order within each setting is preserved.
pub fn rm_view_of_tomography(ds: &ShotDataset) -> ShotDataset {
    let n = ds.meta.n;
    let mut view = ShotDataset::new(crate::sim::DatasetMeta {
        n,
        protocol: "rm".into(),
        seed: ds.meta.seed,
        shots_per_setting: ds.meta.shots_per_setting,
    });
    view.records = ds
        .records
        .iter()
        .filter_map(|r| {
            tomography_to_positive_id(r.setting, n).map(|id| crate::sim::ShotRecord {
                setting: id,
                ..*r
            })
        })
        .collect();
    view
}

/// Overlap estimate from module A of `ds_a` and module B of `ds_b` over the
/// selected positive settings (base-3 ids). Pass the same joint dataset
/// twice when both modules were measured together. Outcome frequencies are
/// used as measured; no readout correction is applied.
pub fn rm_estimate(
    ds_a: &ShotDataset,
    ds_b: &ShotDataset,
    selected: &[u32],
) -> Result<EstimateReport> {
    if ds_a.meta.n != ds_b.meta.n {
        return Err(Error::DimensionMismatch {
            expected: ds_a.meta.n,
            got: ds_b.meta.n,
        });
    }
    let n = ds_a.meta.n;
    let dists_a = crate::protocols::qst::empirical_distributions(ds_a, Module::A);
    let dists_b = crate::protocols::qst::empirical_distributions(ds_b, Module::B);
    let overlap = rm_estimate_from_distributions(n, &dists_a, &dists_b, selected)?;
    let shots: usize = ds_a
        .indices_by_setting()
        .iter()
        .filter(|(id, _)| selected.contains(id))
        .map(|(_, idx)| idx.len())
        .sum();
    Ok(EstimateReport {
        protocol: Protocol::Rm,
        n,
        phi: None,
        overlap,
        variance: None,
        shots: shots as u64,
        seed: ds_a.meta.seed,
    })
}
