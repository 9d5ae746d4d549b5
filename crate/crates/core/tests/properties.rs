//! Property tests for the structural invariants: state physicality,
//! channel trace preservation, id-table roundtrips, serialization
//! roundtrips, and sampling determinism.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xpv_core::circuit::ghz_prep_circuit;
use xpv_core::linalg::{hermiticity_error, min_eigenvalue};
use xpv_core::measure::{
    positive_settings, positive_to_tomography_id, tomography_to_positive_id,
};
use xpv_core::noise::{depolarize, thermal_relax, NoiseModel};
use xpv_core::protocols::{EstimateReport, Protocol};
use xpv_core::sim::{sample_shots, split_outcome, DatasetMeta, ShotDataset, ShotRecord};
use xpv_core::states::{
    all_pauli_strings, fidelity, ghz_state, pauli_expectation, project_to_physical,
    random_density_matrix, trace_overlap, DensityMatrix,
};
use xpv_core::study::subsample_grid;

fn seeded_state(n: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density_matrix(n, &mut rng).unwrap()
}

proptest! {
    #[test]
    fn ghz_overlap_follows_the_cosine_law(n in 1usize..=3, phi in -10.0f64..10.0) {
        let a = ghz_state(n, 0.0).unwrap().to_density();
        let b = ghz_state(n, phi).unwrap().to_density();
        let got = trace_overlap(&a, &b).unwrap();
        let want = (1.0 + phi.cos()) / 2.0;
        prop_assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_one_on_itself(n in 1usize..=3, sa in 0u64..500, sb in 500u64..1000) {
        let a = seeded_state(n, sa);
        let b = seeded_state(n, sb);
        let ab = fidelity(&a, &b).unwrap();
        let ba = fidelity(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-8);
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn physicality_projection_is_sane(n in 1usize..=3, seed in 0u64..1000, shift in -0.3f64..0.3) {
        // Perturb a valid state off the physical set, project, and check
        // the result is physical and that projecting twice changes nothing.
        let rho = seeded_state(n, seed);
        let dim = 1usize << n;
        let mut mat = rho.matrix().clone();
        for k in 0..dim {
            mat[(k, k)] += xpv_core::linalg::C64::new(shift * if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        }
        let projected = project_to_physical(n, &mat).unwrap();
        prop_assert!(hermiticity_error(projected.matrix()) < 1e-10);
        let trace: f64 = (0..dim).map(|k| projected.matrix()[(k, k)].re).sum();
        prop_assert!((trace - 1.0).abs() < 1e-10);
        prop_assert!(min_eigenvalue(projected.matrix()) > -1e-9);
        let again = project_to_physical(n, projected.matrix()).unwrap();
        prop_assert!(projected.trace_distance(&again).unwrap() < 1e-9);
    }

    #[test]
    fn pauli_expansion_roundtrips(n in 1usize..=3, seed in 0u64..1000) {
        let rho = seeded_state(n, seed);
        let dim = 1usize << n;
        let mut rebuilt = xpv_core::linalg::CMat::zeros(dim, dim);
        for p in all_pauli_strings(n).unwrap() {
            let coeff = pauli_expectation(&rho, &p).unwrap();
            rebuilt += p.matrix() * xpv_core::linalg::C64::new(coeff / dim as f64, 0.0);
        }
        let max_err = (rho.matrix() - &rebuilt)
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        prop_assert!(max_err < 1e-10);
    }

    #[test]
    fn noise_channels_preserve_physicality(
        n in 1usize..=2,
        seed in 0u64..1000,
        p in 0.0f64..1.0,
        t_ns in 0.0f64..500.0,
    ) {
        let rho = seeded_state(n, seed);
        let qubits: Vec<usize> = (0..n).collect();
        let nm = NoiseModel::median();
        let after_dep = depolarize(&rho, p, &qubits).unwrap();
        let mut after_rel = after_dep.clone();
        for &q in &qubits {
            after_rel =
                thermal_relax(&after_rel, q, t_ns, nm.t1_us, nm.t2_us, nm.p_th, false).unwrap();
        }
        for m in [&after_dep, &after_rel] {
            let trace: f64 = (0..1usize << n).map(|k| m.matrix()[(k, k)].re).sum();
            prop_assert!((trace - 1.0).abs() < 1e-9);
            prop_assert!(hermiticity_error(m.matrix()) < 1e-9);
            prop_assert!(min_eigenvalue(m.matrix()) > -1e-9);
        }
    }

    #[test]
    fn confusion_matrix_rows_are_stochastic_and_debiasing_inverts(
        eps in 0.0f64..0.4,
        n in 1usize..=3,
    ) {
        let mut nm = NoiseModel::median();
        nm.eps_ro = eps;
        let cm = nm.confusion(n).unwrap();
        for q in 0..n {
            let m = cm.qubit(q);
            for t in 0..2 {
                prop_assert!((m[t][0] + m[t][1] - 1.0).abs() < 1e-12);
            }
            // E[f(reported) | true t] must equal the ideal eigenvalue.
            for t in 0..2usize {
                let expect = m[t][0] * cm.debiased_value(q, 0).unwrap()
                    + m[t][1] * cm.debiased_value(q, 1).unwrap();
                let ideal = 1.0 - 2.0 * t as f64;
                prop_assert!((expect - ideal).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unphysical_noise_parameters_are_rejected(t1 in 1.0f64..50.0, factor in 2.001f64..4.0) {
        let mut nm = NoiseModel::median();
        nm.t1_us = t1;
        nm.t2_us = t1 * factor;
        prop_assert!(nm.validate().is_err());
    }

    #[test]
    fn positive_and_signed_setting_ids_roundtrip(n in 1usize..=3) {
        for s in positive_settings(n).unwrap() {
            let signed = positive_to_tomography_id(s.id(), n);
            prop_assert_eq!(tomography_to_positive_id(signed, n), Some(s.id()));
        }
        // A setting with any negative axis has no positive counterpart:
        // signed id 1 is -X on the last qubit.
        prop_assert_eq!(tomography_to_positive_id(1, n), None);
    }

    #[test]
    fn outcome_split_respects_module_widths(outcome in 0u16..4096, n in 1usize..=6) {
        let masked = outcome & ((1u16 << (2 * n).min(12)) - 1);
        let (a, b) = split_outcome(masked, n);
        prop_assert!(a < 1 << n);
        prop_assert!(b < 1 << n);
        prop_assert_eq!(((a as u32) << n) | b as u32, masked as u32);
    }

    #[test]
    fn subsample_grids_are_monotone_within_bounds(
        max in 2usize..100_000,
        points in 2usize..12,
        min in 2usize..200,
    ) {
        let g = subsample_grid(max, points, min);
        prop_assert!(!g.is_empty());
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(*g.last().unwrap() == max.max(min.clamp(2, max.max(2))));
        prop_assert!(g[0] >= 2);
        prop_assert!(g.len() <= points);
    }

    #[test]
    fn estimate_reports_roundtrip_through_jsonl(
        overlap in -0.5f64..1.5,
        variance in proptest::option::of(0.0f64..0.1),
        phi in proptest::option::of(0.0f64..7.0),
        shots in 1u64..1_000_000,
        seed in 0u64..u64::MAX,
        n in 1usize..=3,
    ) {
        let reports = vec![EstimateReport {
            protocol: Protocol::Bbm,
            n,
            phi,
            overlap,
            variance,
            shots,
            seed,
        }];
        let mut buf = Vec::new();
        EstimateReport::write_jsonl(&reports, &mut buf).unwrap();
        let back = EstimateReport::read_jsonl(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0].protocol, &reports[0].protocol);
        prop_assert_eq!(back[0].overlap.to_bits(), reports[0].overlap.to_bits());
        prop_assert_eq!(back[0].shots, reports[0].shots);
    }

    #[test]
    fn shot_datasets_roundtrip_through_tsv(
        n in 1usize..=3,
        seed in 0u64..u64::MAX,
        rows in proptest::collection::vec((0u32..216, 0u16..8, 0u16..8), 1..40),
    ) {
        let mut ds = ShotDataset::new(DatasetMeta {
            n,
            protocol: "qst".into(),
            seed,
            shots_per_setting: rows.len(),
        });
        let mask = (1u16 << n) - 1;
        ds.records = rows
            .iter()
            .map(|&(setting, a, b)| ShotRecord { setting, a: a & mask, b: b & mask })
            .collect();
        let mut buf = Vec::new();
        ds.write_tsv(&mut buf).unwrap();
        let back = ShotDataset::read_tsv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, ds);
    }
}

#[test]
fn shot_sampling_is_deterministic_per_seed() {
    let nm = NoiseModel::median();
    let circuit = ghz_prep_circuit(2, 0.0).unwrap();
    let rho = xpv_core::sim::run_circuit_from_ground(&circuit, &nm).unwrap();
    let cm = nm.confusion(2).unwrap();
    let draw = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_shots(&rho, None, 500, &cm, &mut rng).unwrap()
    };
    assert_eq!(draw(42), draw(42));
    assert_ne!(draw(42), draw(43));
}
