//! Error channels and the device noise model.
//!
//! Three error mechanisms are modeled: symmetric depolarizing noise attached
//! to physical gates, thermal relaxation (T1 toward a residual excited
//! population, T2 on coherences) on idling qubits, and per-qubit readout
//! misassignment described by confusion matrices.
//!
//! Reported gate error rates are average infidelities; the
//! `depolarizing_conversion` switch rescales them by `d/(d-1)` into the
//! depolarizing parameter of the channel. The printed relaxation equations
//! send the *ground* population to the residual excited population, which is
//! unphysical for cold devices; the default here relaxes the excited
//! population to `p_th`, with the literal index convention available behind
//! `literal_relaxation`.

use crate::circuit::GateDurations;
use crate::error::{Error, Result};
use crate::linalg::{self};
use crate::states::DensityMatrix;

/// Median single-qubit gate error rate.
pub const MEDIAN_SINGLE_QUBIT_ERROR: f64 = 0.0011;
/// Median two-qubit gate error rate.
pub const MEDIAN_TWO_QUBIT_ERROR: f64 = 0.0145;
/// Median readout assignment error.
pub const MEDIAN_READOUT_ERROR: f64 = 0.0101;
/// Default longitudinal relaxation time, microseconds.
pub const DEFAULT_T1_US: f64 = 30.0;
/// Default transverse relaxation time, microseconds.
pub const DEFAULT_T2_US: f64 = 20.0;
/// Default residual excited-state population.
pub const DEFAULT_P_TH: f64 = 0.01;

/// Per-gate-class and per-qubit noise parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Single-qubit gate error rate.
    pub p_1q: f64,
    /// Two-qubit gate error rate.
    pub p_2q: f64,
    /// Symmetric per-qubit readout misassignment probability.
    pub eps_ro: f64,
    /// Longitudinal relaxation time in microseconds.
    pub t1_us: f64,
    /// Transverse relaxation time in microseconds.
    pub t2_us: f64,
    /// Residual excited-state population.
    pub p_th: f64,
    /// Rescale gate error rates by `d/(d-1)` into depolarizing parameters.
    pub depolarizing_conversion: bool,
    /// Use the printed index convention for relaxation (ground -> p_th).
    pub literal_relaxation: bool,
    pub durations: GateDurations,
}

impl NoiseModel {
    /// Median device error rates with default relaxation parameters.
    pub fn median() -> Self {
        Self {
            p_1q: MEDIAN_SINGLE_QUBIT_ERROR,
            p_2q: MEDIAN_TWO_QUBIT_ERROR,
            eps_ro: MEDIAN_READOUT_ERROR,
            t1_us: DEFAULT_T1_US,
            t2_us: DEFAULT_T2_US,
            p_th: DEFAULT_P_TH,
            depolarizing_conversion: true,
            literal_relaxation: false,
            durations: GateDurations::default(),
        }
    }

    pub fn noiseless() -> Self {
        Self {
            p_1q: 0.0,
            p_2q: 0.0,
            eps_ro: 0.0,
            t1_us: f64::INFINITY,
            t2_us: f64::INFINITY,
            p_th: 0.0,
            depolarizing_conversion: true,
            literal_relaxation: false,
            durations: GateDurations::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("p_1q", self.p_1q),
            ("p_2q", self.p_2q),
            ("eps_ro", self.eps_ro),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::UnphysicalParameters(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        if !(self.t1_us > 0.0) || !(self.t2_us > 0.0) {
            return Err(Error::UnphysicalParameters(format!(
                "relaxation times must be positive (T1 = {}, T2 = {})",
                self.t1_us, self.t2_us
            )));
        }
        if self.t2_us > 2.0 * self.t1_us {
            return Err(Error::UnphysicalParameters(format!(
                "T2 = {} exceeds 2*T1 = {}",
                self.t2_us,
                2.0 * self.t1_us
            )));
        }
        if !(0.0..=0.5).contains(&self.p_th) || self.p_th.is_nan() {
            return Err(Error::UnphysicalParameters(format!(
                "p_th = {} outside [0, 0.5]",
                self.p_th
            )));
        }
        if self.durations.single_qubit_ns < 0.0 || self.durations.two_qubit_ns < 0.0 {
            return Err(Error::UnphysicalParameters(
                "gate durations must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// All error rates multiplied by `factor` (relaxation rates included, so
    /// T1 and T2 are divided by it). Used for the reduced-noise simulations.
    pub fn with_rates_scaled(&self, factor: f64) -> Self {
        Self {
            p_1q: self.p_1q * factor,
            p_2q: self.p_2q * factor,
            eps_ro: self.eps_ro * factor,
            t1_us: self.t1_us / factor,
            t2_us: self.t2_us / factor,
            p_th: self.p_th * factor,
            ..self.clone()
        }
    }

    /// Readout error halved; gate times untouched.
    pub fn with_readout_halved(&self) -> Self {
        Self {
            eps_ro: self.eps_ro / 2.0,
            ..self.clone()
        }
    }

    /// Single-qubit gate error halved together with the gate duration.
    pub fn with_single_qubit_halved(&self) -> Self {
        let mut durations = self.durations;
        durations.single_qubit_ns /= 2.0;
        Self {
            p_1q: self.p_1q / 2.0,
            durations,
            ..self.clone()
        }
    }

    /// Two-qubit gate error halved together with the gate duration.
    pub fn with_two_qubit_halved(&self) -> Self {
        let mut durations = self.durations;
        durations.two_qubit_ns /= 2.0;
        Self {
            p_2q: self.p_2q / 2.0,
            durations,
            ..self.clone()
        }
    }

    fn convert(&self, rate: f64, dim: f64) -> f64 {
        if self.depolarizing_conversion {
            (rate * dim / (dim - 1.0)).min(1.0)
        } else {
            rate
        }
    }

    /// Depolarizing parameter applied after single-qubit gates.
    pub fn p_1q_effective(&self) -> f64 {
        self.convert(self.p_1q, 2.0)
    }

    /// Depolarizing parameter applied after two-qubit gates.
    pub fn p_2q_effective(&self) -> f64 {
        self.convert(self.p_2q, 4.0)
    }

    pub fn confusion(&self, n: usize) -> Result<ConfusionMatrix> {
        ConfusionMatrix::symmetric(n, self.eps_ro)
    }
}

/// Replaces the subsystem on `qubits` by the maximally mixed state with
/// weight `p`, leaving the complement untouched.
pub fn depolarize(rho: &DensityMatrix, p: f64, qubits: &[usize]) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::Domain(format!(
            "depolarizing parameter {p} outside [0, 1]"
        )));
    }
    let n = rho.n();
    let mut seen = std::collections::HashSet::new();
    for &q in qubits {
        if q >= n {
            return Err(Error::Domain(format!(
                "qubit {q} outside register of size {n}"
            )));
        }
        if !seen.insert(q) {
            return Err(Error::Domain(format!("qubit {q} listed twice")));
        }
    }
    if qubits.is_empty() || p == 0.0 {
        return Ok(rho.clone());
    }
    let kept = linalg::partial_trace(rho.matrix(), qubits, n);
    let mixed_in = linalg::insert_mixed(&kept, qubits, n);
    let out = rho.matrix() * crate::linalg::C64::new(1.0 - p, 0.0)
        + mixed_in * crate::linalg::C64::new(p, 0.0);
    Ok(DensityMatrix::trusted(n, out))
}

/// Thermal relaxation of one qubit for `t_ns` nanoseconds: populations decay
/// toward the equilibrium excited population `p_th` at rate `1/T1`,
/// coherences decay at rate `1/T2`. Applied fiber-wise as the linear
/// extension of the single-qubit channel embedded in the register.
pub fn thermal_relax(
    rho: &DensityMatrix,
    qubit: usize,
    t_ns: f64,
    t1_us: f64,
    t2_us: f64,
    p_th: f64,
    literal_indices: bool,
) -> Result<DensityMatrix> {
    if t_ns < 0.0 || t_ns.is_nan() {
        return Err(Error::Domain(format!("negative duration {t_ns} ns")));
    }
    if !(t1_us > 0.0) || !(t2_us > 0.0) {
        return Err(Error::UnphysicalParameters(
            "relaxation times must be positive".into(),
        ));
    }
    if t2_us > 2.0 * t1_us {
        return Err(Error::UnphysicalParameters(format!(
            "T2 = {t2_us} exceeds 2*T1 = {}",
            2.0 * t1_us
        )));
    }
    if !(0.0..=0.5).contains(&p_th) {
        return Err(Error::UnphysicalParameters(format!(
            "p_th = {p_th} outside [0, 0.5]"
        )));
    }
    let n = rho.n();
    if qubit >= n {
        return Err(Error::Domain(format!(
            "qubit {qubit} outside register of size {n}"
        )));
    }
    let t_us = t_ns * 1e-3;
    let e1 = (-t_us / t1_us).exp();
    let e2 = (-t_us / t2_us).exp();
    if e1 == 1.0 && e2 == 1.0 {
        return Ok(rho.clone());
    }
    let (ground_weight, excited_weight) = if literal_indices {
        (p_th, 1.0 - p_th)
    } else {
        (1.0 - p_th, p_th)
    };
    let dim = rho.dim();
    let mask = 1usize << (n - 1 - qubit);
    let mut out = rho.matrix().clone();
    for i0 in 0..dim {
        if i0 & mask != 0 {
            continue;
        }
        let i1 = i0 | mask;
        for j0 in 0..dim {
            if j0 & mask != 0 {
                continue;
            }
            let j1 = j0 | mask;
            let m00 = rho.matrix()[(i0, j0)];
            let m01 = rho.matrix()[(i0, j1)];
            let m10 = rho.matrix()[(i1, j0)];
            let m11 = rho.matrix()[(i1, j1)];
            let s = m00 + m11;
            let decayed = crate::linalg::C64::new(1.0 - e1, 0.0) * s;
            out[(i0, j0)] = m00 * crate::linalg::C64::new(e1, 0.0)
                + decayed * crate::linalg::C64::new(ground_weight, 0.0);
            out[(i1, j1)] = m11 * crate::linalg::C64::new(e1, 0.0)
                + decayed * crate::linalg::C64::new(excited_weight, 0.0);
            out[(i0, j1)] = m01 * crate::linalg::C64::new(e2, 0.0);
            out[(i1, j0)] = m10 * crate::linalg::C64::new(e2, 0.0);
        }
    }
    Ok(DensityMatrix::trusted(n, out))
}

/// Per-qubit readout assignment probabilities `P(reported | true)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    /// `per_qubit[q][true_bit][reported_bit]`.
    per_qubit: Vec<[[f64; 2]; 2]>,
}

impl ConfusionMatrix {
    pub fn new(per_qubit: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        if per_qubit.is_empty() {
            return Err(Error::Domain("confusion matrix for zero qubits".into()));
        }
        for (q, m) in per_qubit.iter().enumerate() {
            for row in m {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::Domain(format!(
                        "confusion row for qubit {q} sums to {sum}, not 1"
                    )));
                }
                if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::Domain(format!(
                        "confusion entry for qubit {q} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self { per_qubit })
    }

    /// Identical symmetric flip probability on every qubit.
    pub fn symmetric(n: usize, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) || eps.is_nan() {
            return Err(Error::Domain(format!(
                "readout error {eps} outside [0, 1]"
            )));
        }
        Self::new(vec![[[1.0 - eps, eps], [eps, 1.0 - eps]]; n])
    }

    pub fn ideal(n: usize) -> Self {
        Self::symmetric(n, 0.0).unwrap()
    }

    pub fn n(&self) -> usize {
        self.per_qubit.len()
    }

    pub fn qubit(&self, q: usize) -> &[[f64; 2]; 2] {
        &self.per_qubit[q]
    }

    pub fn is_ideal(&self) -> bool {
        self.per_qubit
            .iter()
            .all(|m| m[0][0] == 1.0 && m[1][1] == 1.0)
    }

    /// Misassignment applied to an outcome distribution:
    /// `P'(r) = sum_t P(t) prod_q m_q[t_q][r_q]`.
    pub fn apply_to_distribution(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if p.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: p.len(),
            });
        }
        let mut out = p.to_vec();
        for q in 0..n {
            // Matrix acting on the reported index: row r, column t.
            let m = self.per_qubit[q];
            let a = [[m[0][0], m[1][0]], [m[0][1], m[1][1]]];
            contract_qubit_axis(&mut out, q, n, &a);
        }
        Ok(out)
    }

    /// Unbiased single-shot eigenvalue for a reported bit: the unique
    /// `f(bit)` with `E[f | true bit t] = 1 - 2t` under this qubit's
    /// misassignment probabilities.
    pub fn debiased_value(&self, q: usize, bit: u8) -> Result<f64> {
        let m = self.per_qubit[q];
        let (e0, e1) = (m[0][1], m[1][0]);
        let det = 1.0 - e0 - e1;
        if det.abs() < 1e-9 {
            return Err(Error::CorrectionFailed(format!(
                "confusion matrix for qubit {q} is singular"
            )));
        }
        Ok(match bit {
            0 => (1.0 + e0 - e1) / det,
            _ => -(1.0 + e1 - e0) / det,
        })
    }

    /// Inverts the misassignment on a distribution. The result may contain
    /// negative entries; callers decide how to clip.
    pub fn correct_distribution(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if p.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: p.len(),
            });
        }
        let mut out = p.to_vec();
        for q in 0..n {
            let m = self.per_qubit[q];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() < 1e-9 {
                return Err(Error::CorrectionFailed(format!(
                    "confusion matrix for qubit {q} is singular"
                )));
            }
            // Inverse of the reported-from-true action used above.
            let a = [
                [m[1][1] / det, -m[1][0] / det],
                [-m[0][1] / det, m[0][0] / det],
            ];
            contract_qubit_axis(&mut out, q, n, &a);
        }
        Ok(out)
    }
}

/// Applies a 2x2 matrix along the axis of qubit `q` of a length `2^n` vector:
/// `new[beta] = sum_alpha a[beta][alpha] old[alpha]` on that index.
fn contract_qubit_axis(p: &mut [f64], q: usize, n: usize, a: &[[f64; 2]; 2]) {
    let mask = 1usize << (n - 1 - q);
    for i in 0..p.len() {
        if i & mask != 0 {
            continue;
        }
        let lo = p[i];
        let hi = p[i | mask];
        p[i] = a[0][0] * lo + a[0][1] * hi;
        p[i | mask] = a[1][0] * lo + a[1][1] * hi;
    }
}

/// Clips negative entries to zero and renormalizes in place.
pub fn clip_and_renormalize(p: &mut [f64]) -> Result<()> {
    let mut total = 0.0;
    for v in p.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
        total += *v;
    }
    if total <= 0.0 {
        return Err(Error::CorrectionFailed(
            "all probability mass clipped away".into(),
        ));
    }
    for v in p.iter_mut() {
        *v /= total;
    }
    Ok(())
}
