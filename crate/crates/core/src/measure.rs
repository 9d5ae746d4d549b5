//! Measurement settings and their pre-rotations.
//!
//! A setting assigns one signed Pauli axis to each qubit. The tomography
//! table enumerates all `6^n` signed settings; the randomized-measurement
//! pool is the `3^n` positive ones. Setting ids are stable base-6 (signed)
//! or base-3 (positive) encodings with qubit 0 as the most significant
//! digit, so datasets can be cross-referenced between the two tables.
//!
//! The pre-rotation for a signed axis maps its +1 eigenstate to `|0>`, so a
//! reported bit 0 always means eigenvalue +1 of the signed observable.

use crate::circuit::Axis;
use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, C64, ONE, ZERO};
use crate::states::UnitaryOp;
use std::f64::consts::FRAC_1_SQRT_2;

/// One qubit's measured axis with sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedAxis {
    pub axis: Axis,
    pub negative: bool,
}

impl SignedAxis {
    pub fn label(&self) -> String {
        let sign = if self.negative { '-' } else { '+' };
        let axis = match self.axis {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        };
        format!("{sign}{axis}")
    }

    /// Single-qubit rotation taking this axis' +1 eigenstate to `|0>`.
    pub fn rotation(&self) -> CMat {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let i = C64::new(0.0, 1.0);
        let hadamard = CMat::from_row_slice(2, 2, &[h, h, h, -h]);
        let s_dag = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -i]);
        let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let positive = match self.axis {
            Axis::X => hadamard,
            Axis::Y => hadamard * s_dag,
            Axis::Z => CMat::identity(2, 2),
        };
        if self.negative {
            x * positive
        } else {
            positive
        }
    }
}

/// Per-qubit measurement bases identified by a stable integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSetting {
    id: u32,
    axes: Vec<SignedAxis>,
}

impl BasisSetting {
    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn axes(&self) -> &[SignedAxis] {
        &self.axes
    }

    pub fn n(&self) -> usize {
        self.axes.len()
    }

    pub fn label(&self) -> String {
        self.axes
            .iter()
            .map(|a| a.label())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Tensor product of the per-qubit pre-rotations (qubit 0 leftmost).
    pub fn rotation(&self) -> UnitaryOp {
        let mut u = self.axes[0].rotation();
        for axis in &self.axes[1..] {
            u = kron(&u, &axis.rotation());
        }
        UnitaryOp::new(self.n(), u).expect("setting rotations are unitary")
    }

    /// The same per-qubit rotation applied to both modules of a `2n`
    /// register (module B qubit `n+i` mirrors module A qubit `i`).
    pub fn pair_rotation(&self) -> UnitaryOp {
        let single = self.rotation();
        let full = kron(single.matrix(), single.matrix());
        UnitaryOp::new(2 * self.n(), full).expect("setting rotations are unitary")
    }
}

const SIGNED_ORDER: [SignedAxis; 6] = [
    SignedAxis { axis: Axis::X, negative: false },
    SignedAxis { axis: Axis::X, negative: true },
    SignedAxis { axis: Axis::Y, negative: false },
    SignedAxis { axis: Axis::Y, negative: true },
    SignedAxis { axis: Axis::Z, negative: false },
    SignedAxis { axis: Axis::Z, negative: true },
];

const POSITIVE_ORDER: [SignedAxis; 3] = [
    SignedAxis { axis: Axis::X, negative: false },
    SignedAxis { axis: Axis::Y, negative: false },
    SignedAxis { axis: Axis::Z, negative: false },
];

fn check_n(n: usize) -> Result<()> {
    if n < 1 || n > crate::states::MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange {
            n,
            min: 1,
            max: crate::states::MAX_QUBITS,
        });
    }
    Ok(())
}

/// All `6^n` signed settings; id is the base-6 digit string over
/// (+X, -X, +Y, -Y, +Z, -Z) with qubit 0 as the most significant digit.
pub fn tomography_settings(n: usize) -> Result<Vec<BasisSetting>> {
    check_n(n)?;
    let count = 6u32.pow(n as u32);
    let mut out = Vec::with_capacity(count as usize);
    for id in 0..count {
        out.push(tomography_setting(n, id)?);
    }
    Ok(out)
}

/// Decodes one signed setting id.
pub fn tomography_setting(n: usize, id: u32) -> Result<BasisSetting> {
    check_n(n)?;
    if id >= 6u32.pow(n as u32) {
        return Err(Error::Domain(format!(
            "setting id {id} out of range for {n} qubits"
        )));
    }
    let mut axes = vec![SIGNED_ORDER[0]; n];
    let mut rest = id;
    for q in (0..n).rev() {
        axes[q] = SIGNED_ORDER[(rest % 6) as usize];
        rest /= 6;
    }
    Ok(BasisSetting { id, axes })
}

/// The `3^n` positive settings; id is base-3 over (X, Y, Z), qubit 0 most
/// significant.
pub fn positive_settings(n: usize) -> Result<Vec<BasisSetting>> {
    check_n(n)?;
    let count = 3u32.pow(n as u32);
    let mut out = Vec::with_capacity(count as usize);
    for id in 0..count {
        let mut axes = vec![POSITIVE_ORDER[0]; n];
        let mut rest = id;
        for q in (0..n).rev() {
            axes[q] = POSITIVE_ORDER[(rest % 3) as usize];
            rest /= 3;
        }
        out.push(BasisSetting { id, axes });
    }
    Ok(out)
}

/// Maps a positive-pool setting id to the matching signed-table id
/// (positive digit d becomes signed digit 2d).
pub fn positive_to_tomography_id(rm_id: u32, n: usize) -> u32 {
    let mut rest = rm_id;
    let mut digits = vec![0u32; n];
    for q in (0..n).rev() {
        digits[q] = rest % 3;
        rest /= 3;
    }
    digits.iter().fold(0, |acc, d| acc * 6 + 2 * d)
}

/// Inverse of [`positive_to_tomography_id`]: `None` when any digit carries
/// a negative sign.
pub fn tomography_to_positive_id(tomography_id: u32, n: usize) -> Option<u32> {
    let mut rest = tomography_id;
    let mut digits = vec![0u32; n];
    for q in (0..n).rev() {
        let d = rest % 6;
        if d % 2 != 0 {
            return None;
        }
        digits[q] = d / 2;
        rest /= 6;
    }
    Some(digits.iter().fold(0, |acc, d| acc * 3 + d))
}

/// Canonical signed setting measuring a given axis assignment with all
/// positive signs; axes not listed default to Z.
pub fn canonical_setting_id(axes: &[(usize, Axis)], n: usize) -> u32 {
    let mut digits = vec![4u32; n]; // +Z
    for &(q, axis) in axes {
        digits[q] = match axis {
            Axis::X => 0,
            Axis::Y => 2,
            Axis::Z => 4,
        };
    }
    digits.iter().fold(0, |acc, d| acc * 6 + d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVec;
    use approx::assert_abs_diff_eq;

    fn apply(u: &CMat, amps: &[C64]) -> CVec {
        u * CVec::from_vec(amps.to_vec())
    }

    #[test]
    fn rotations_send_plus_one_eigenstates_to_zero() {
        let h = FRAC_1_SQRT_2;
        let cases: Vec<(SignedAxis, Vec<C64>)> = vec![
            (
                SignedAxis { axis: Axis::X, negative: false },
                vec![C64::new(h, 0.0), C64::new(h, 0.0)],
            ),
            (
                SignedAxis { axis: Axis::X, negative: true },
                vec![C64::new(h, 0.0), C64::new(-h, 0.0)],
            ),
            (
                SignedAxis { axis: Axis::Y, negative: false },
                vec![C64::new(h, 0.0), C64::new(0.0, h)],
            ),
            (
                SignedAxis { axis: Axis::Y, negative: true },
                vec![C64::new(h, 0.0), C64::new(0.0, -h)],
            ),
            (
                SignedAxis { axis: Axis::Z, negative: false },
                vec![ONE, ZERO],
            ),
            (
                SignedAxis { axis: Axis::Z, negative: true },
                vec![ZERO, ONE],
            ),
        ];
        for (axis, eigenstate) in cases {
            let rotated = apply(&axis.rotation(), &eigenstate);
            assert!(
                (rotated[0].norm() - 1.0).abs() < 1e-12,
                "{} should map its +1 eigenstate to |0>",
                axis.label()
            );
        }
    }

    #[test]
    fn setting_tables_have_expected_sizes_and_ids() {
        for n in 1..=3 {
            let tomo = tomography_settings(n).unwrap();
            assert_eq!(tomo.len(), 6usize.pow(n as u32));
            for (k, s) in tomo.iter().enumerate() {
                assert_eq!(s.id() as usize, k);
            }
            let pos = positive_settings(n).unwrap();
            assert_eq!(pos.len(), 3usize.pow(n as u32));
        }
    }

    #[test]
    fn id_encoding_uses_qubit_zero_as_most_significant_digit() {
        // id 7 in base 6 over 2 qubits: digits (1, 1) -> (-X, -X).
        let s = tomography_setting(2, 7).unwrap();
        assert_eq!(s.label(), "-X,-X");
        // id 9: digits (1, 3) -> (-X, -Y).
        let s = tomography_setting(2, 9).unwrap();
        assert_eq!(s.label(), "-X,-Y");
    }

    #[test]
    fn positive_pool_maps_into_the_signed_table() {
        for n in 1..=3usize {
            let pos = positive_settings(n).unwrap();
            for s in &pos {
                let tomo_id = positive_to_tomography_id(s.id(), n);
                let t = tomography_setting(n, tomo_id).unwrap();
                for (a, b) in s.axes().iter().zip(t.axes()) {
                    assert_eq!(a.axis, b.axis);
                    assert!(!b.negative);
                }
                assert_eq!(tomography_to_positive_id(tomo_id, n), Some(s.id()));
            }
            // Settings with any negative axis fall outside the pool.
            assert_eq!(tomography_to_positive_id(1, n), None);
        }
    }

    #[test]
    fn canonical_setting_defaults_to_z_off_support() {
        // Axis X on qubit 0 of 3 -> digits (0, 4, 4).
        let id = canonical_setting_id(&[(0, Axis::X)], 3);
        assert_eq!(id, 4 + 4 * 6);
        let s = tomography_setting(3, id).unwrap();
        assert_eq!(s.label(), "+X,+Z,+Z");
    }

    #[test]
    fn pair_rotation_is_the_same_rotation_on_both_modules() {
        let s = tomography_setting(1, 2).unwrap(); // +Y
        let single = s.rotation();
        let pair = s.pair_rotation();
        let manual = kron(single.matrix(), single.matrix());
        assert!((pair.matrix() - manual).norm() < 1e-12);
    }

    #[test]
    fn rotated_measurement_reproduces_pauli_statistics() {
        // For |0><0| measured along +Z / -Z the bit-0 probability is 1 / 0.
        let zero = crate::states::PureState::basis(1, 0).unwrap().to_density();
        for (id, expect_p0) in [(4u32, 1.0), (5u32, 0.0), (0u32, 0.5)] {
            let s = tomography_setting(1, id).unwrap();
            let u = s.rotation();
            let rotated = u.conjugate(&zero).unwrap();
            assert_abs_diff_eq!(rotated.matrix()[(0, 0)].re, expect_p0, epsilon = 1e-12);
        }
    }
}
