//! Unitary fidelity estimation between two modules.
//!
//! With one unitary applied per module to a shared input state, the squared
//! state overlap read out by a Bell-basis measurement becomes an input-state
//! fidelity sample. Averaging over the six single-qubit cardinal states
//! (a 2-design only in dimension 2) gives the average gate fidelity;
//! averaging over computational inputs gives a cheaper multi-qubit proxy.

use crate::error::{Error, Result};
use crate::protocols::bbm::exact_even_parity_probability;
use crate::sim::sample_counts;
use crate::states::{cardinal_states, PureState, UnitaryOp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn input_overlap(u_a: &UnitaryOp, u_b: &UnitaryOp, input: &PureState) -> Result<f64> {
    let a = u_a.apply_to_state(input)?;
    let b = u_b.apply_to_state(input)?;
    Ok(a.overlap_with(&b)?.norm_sqr())
}

/// Mean of `|<k| U_A^dag U_B |k>|^2` over the six cardinal states; exact
/// evaluation. Restricted to single-qubit unitaries, where the cardinal
/// states form a 2-design.
pub fn unitary_avg_fidelity(u_a: &UnitaryOp, u_b: &UnitaryOp) -> Result<f64> {
    if u_a.n() != 1 || u_b.n() != 1 {
        return Err(Error::Domain(
            "cardinal-state averaging is defined for single-qubit unitaries only".into(),
        ));
    }
    let mut total = 0.0;
    for k in cardinal_states() {
        total += input_overlap(u_a, u_b, &k)?;
    }
    Ok(total / 6.0)
}

/// Average fidelity estimated through sampled Bell-basis parities: for each
/// cardinal input, both modules prepare the rotated state and the parity of
/// `shots` joint readouts estimates the squared overlap.
pub fn unitary_avg_fidelity_sampled(
    u_a: &UnitaryOp,
    u_b: &UnitaryOp,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    if u_a.n() != 1 || u_b.n() != 1 {
        return Err(Error::Domain(
            "cardinal-state averaging is defined for single-qubit unitaries only".into(),
        ));
    }
    sampled_mean_overlap(u_a, u_b, &cardinal_states(), shots, seed)
}

/// Converts an average fidelity over a 2-design into a process fidelity:
/// `((d + 1) f_av - 1) / d`.
pub fn process_fidelity_from_avg(f_av: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_av) || f_av.is_nan() {
        return Err(Error::Domain(format!(
            "average fidelity {f_av} outside [0, 1]"
        )));
    }
    if d < 2 {
        return Err(Error::Domain(format!("dimension {d} below 2")));
    }
    Ok(((d as f64 + 1.0) * f_av - 1.0) / d as f64)
}

/// Mean of `|<p| U_A^dag U_B |p>|^2` over all computational basis inputs;
/// exact evaluation, up to two qubits.
pub fn computational_basis_fidelity(u_a: &UnitaryOp, u_b: &UnitaryOp) -> Result<f64> {
    let n = check_pair(u_a, u_b)?;
    let mut total = 0.0;
    for p in 0..(1usize << n) {
        let input = PureState::basis(n, p)?;
        total += input_overlap(u_a, u_b, &input)?;
    }
    Ok(total / (1u64 << n) as f64)
}

/// Computational-basis fidelity estimated through sampled Bell-basis
/// parities over all `2^n` inputs.
pub fn computational_basis_fidelity_sampled(
    u_a: &UnitaryOp,
    u_b: &UnitaryOp,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    let n = check_pair(u_a, u_b)?;
    let inputs: Vec<PureState> = (0..(1usize << n))
        .map(|p| PureState::basis(n, p))
        .collect::<Result<_>>()?;
    sampled_mean_overlap(u_a, u_b, &inputs, shots, seed)
}

fn check_pair(u_a: &UnitaryOp, u_b: &UnitaryOp) -> Result<usize> {
    if u_a.n() != u_b.n() {
        return Err(Error::DimensionMismatch {
            expected: u_a.matrix().nrows(),
            got: u_b.matrix().nrows(),
        });
    }
    if u_a.n() > 2 {
        return Err(Error::Domain(
            "computational-basis fidelity is supported up to two qubits".into(),
        ));
    }
    Ok(u_a.n())
}

fn sampled_mean_overlap(
    u_a: &UnitaryOp,
    u_b: &UnitaryOp,
    inputs: &[PureState],
    shots: u64,
    seed: u64,
) -> Result<f64> {
    if shots < 1 {
        return Err(Error::Domain("shot count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for input in inputs {
        let a = u_a.apply_to_state(input)?.to_density();
        let b = u_b.apply_to_state(input)?.to_density();
        let p_even = exact_even_parity_probability(&a, &b)?;
        let counts = sample_counts(&[p_even, 1.0 - p_even], shots, &mut rng);
        let mean_parity = counts[1] as f64 / shots as f64;
        total += 1.0 - 2.0 * mean_parity;
    }
    Ok(total / inputs.len() as f64)
}
