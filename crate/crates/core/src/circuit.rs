//! Gate-level circuits organized as timed layers.
//!
//! A layer is a set of gates on disjoint qubits; its duration is the longest
//! gate it contains. Virtual-Z gates, barriers and measurement markers take
//! no time and carry no noise. Physical gate durations are resolved through a
//! [`GateDurations`] table so that analysis code can rescale gate times
//! without rebuilding circuits.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::states::MAX_QUBITS;
use std::collections::HashSet;
use std::f64::consts::FRAC_1_SQRT_2;

/// Default physical gate durations in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateDurations {
    pub single_qubit_ns: f64,
    pub two_qubit_ns: f64,
}

impl Default for GateDurations {
    fn default() -> Self {
        Self {
            single_qubit_ns: 40.0,
            two_qubit_ns: 100.0,
        }
    }
}

impl GateDurations {
    /// Both durations multiplied by `factor`; used when halving gate times.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            single_qubit_ns: self.single_qubit_ns * factor,
            two_qubit_ns: self.two_qubit_ns * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    /// `exp(-i angle/2 * sigma_axis)`.
    Rotation { axis: Axis, angle: f64 },
    Hadamard,
    /// Frame rotation `diag(1, e^{i angle})`: zero duration, zero noise.
    VirtualZ { angle: f64 },
    Cnot,
    Cz,
    /// Timing no-op separating layers.
    Barrier,
    /// Marks computational readout of the listed qubits.
    Measure,
}

/// Duration class a gate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateClass {
    SingleQubit,
    TwoQubit,
    /// Virtual-Z, barrier, measurement marker: zero duration.
    Instant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: Vec<usize>,
    duration_override_ns: Option<f64>,
}

impl Gate {
    pub fn rotation(axis: Axis, angle: f64, qubit: usize) -> Self {
        Self {
            kind: GateKind::Rotation { axis, angle },
            qubits: vec![qubit],
            duration_override_ns: None,
        }
    }

    pub fn hadamard(qubit: usize) -> Self {
        Self {
            kind: GateKind::Hadamard,
            qubits: vec![qubit],
            duration_override_ns: None,
        }
    }

    pub fn virtual_z(angle: f64, qubit: usize) -> Self {
        Self {
            kind: GateKind::VirtualZ { angle },
            qubits: vec![qubit],
            duration_override_ns: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            qubits: vec![control, target],
            duration_override_ns: None,
        }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::Cz,
            qubits: vec![a, b],
            duration_override_ns: None,
        }
    }

    pub fn barrier(qubits: Vec<usize>) -> Self {
        Self {
            kind: GateKind::Barrier,
            qubits,
            duration_override_ns: None,
        }
    }

    pub fn measure(qubits: Vec<usize>) -> Self {
        Self {
            kind: GateKind::Measure,
            qubits,
            duration_override_ns: None,
        }
    }

    pub fn with_duration(mut self, ns: f64) -> Self {
        self.duration_override_ns = Some(ns);
        self
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    /// True for gates realized by a physical pulse (they carry noise and
    /// occupy their qubits for the layer duration).
    pub fn is_physical(&self) -> bool {
        matches!(
            self.kind,
            GateKind::Rotation { .. } | GateKind::Hadamard | GateKind::Cnot | GateKind::Cz
        )
    }

    pub fn class(&self) -> GateClass {
        match self.kind {
            GateKind::Rotation { .. } | GateKind::Hadamard => GateClass::SingleQubit,
            GateKind::Cnot | GateKind::Cz => GateClass::TwoQubit,
            GateKind::VirtualZ { .. } | GateKind::Barrier | GateKind::Measure => {
                GateClass::Instant
            }
        }
    }

    pub fn duration_ns(&self, durations: &GateDurations) -> f64 {
        if let Some(ns) = self.duration_override_ns {
            return ns;
        }
        match self.class() {
            GateClass::SingleQubit => durations.single_qubit_ns,
            GateClass::TwoQubit => durations.two_qubit_ns,
            GateClass::Instant => 0.0,
        }
    }

    /// Local matrix (2x2 or 4x4); `None` for barriers and measure markers.
    pub fn unitary(&self) -> Option<CMat> {
        let i = C64::new(0.0, 1.0);
        match &self.kind {
            GateKind::Rotation { axis, angle } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                let m = match axis {
                    Axis::X => CMat::from_row_slice(
                        2,
                        2,
                        &[
                            C64::new(c, 0.0),
                            -i * C64::new(s, 0.0),
                            -i * C64::new(s, 0.0),
                            C64::new(c, 0.0),
                        ],
                    ),
                    Axis::Y => CMat::from_row_slice(
                        2,
                        2,
                        &[
                            C64::new(c, 0.0),
                            C64::new(-s, 0.0),
                            C64::new(s, 0.0),
                            C64::new(c, 0.0),
                        ],
                    ),
                    Axis::Z => CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![
                        C64::from_polar(1.0, -angle / 2.0),
                        C64::from_polar(1.0, angle / 2.0),
                    ])),
                };
                Some(m)
            }
            GateKind::Hadamard => {
                let h = C64::new(FRAC_1_SQRT_2, 0.0);
                Some(CMat::from_row_slice(2, 2, &[h, h, h, -h]))
            }
            GateKind::VirtualZ { angle } => Some(CMat::from_diagonal(
                &crate::linalg::CVec::from_vec(vec![ONE, C64::from_polar(1.0, *angle)]),
            )),
            GateKind::Cnot => Some(CMat::from_row_slice(
                4,
                4,
                &[
                    ONE, ZERO, ZERO, ZERO, //
                    ZERO, ONE, ZERO, ZERO, //
                    ZERO, ZERO, ZERO, ONE, //
                    ZERO, ZERO, ONE, ZERO,
                ],
            )),
            GateKind::Cz => Some(CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![
                ONE, ONE, ONE, -ONE,
            ]))),
            GateKind::Barrier | GateKind::Measure => None,
        }
    }

    fn expected_arity(&self) -> Option<usize> {
        match self.kind {
            GateKind::Rotation { .. } | GateKind::Hadamard | GateKind::VirtualZ { .. } => Some(1),
            GateKind::Cnot | GateKind::Cz => Some(2),
            GateKind::Barrier | GateKind::Measure => None,
        }
    }
}

/// Set of gates executed simultaneously on disjoint qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    gates: Vec<Gate>,
}

impl Layer {
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn duration_ns(&self, durations: &GateDurations) -> f64 {
        self.gates
            .iter()
            .map(|g| g.duration_ns(durations))
            .fold(0.0, f64::max)
    }

    /// Qubits occupied by a physical pulse; everything else idles for the
    /// layer duration.
    pub fn busy_qubits(&self) -> HashSet<usize> {
        self.gates
            .iter()
            .filter(|g| g.is_physical())
            .flat_map(|g| g.qubits().iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    layers: Vec<Layer>,
}

impl Circuit {
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange {
                n,
                min: 1,
                max: MAX_QUBITS,
            });
        }
        Ok(Self { n, layers: Vec::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn add_layer(&mut self, gates: Vec<Gate>) -> Result<&mut Self> {
        if gates.is_empty() {
            return Err(Error::InvalidCircuit("empty layer".into()));
        }
        let mut seen = HashSet::new();
        for gate in &gates {
            if let Some(arity) = gate.expected_arity() {
                if gate.qubits().len() != arity {
                    return Err(Error::InvalidCircuit(format!(
                        "gate {:?} expects {arity} qubit(s), got {}",
                        gate.kind(),
                        gate.qubits().len()
                    )));
                }
            }
            for &q in gate.qubits() {
                if q >= self.n {
                    return Err(Error::InvalidCircuit(format!(
                        "qubit {q} outside register of size {}",
                        self.n
                    )));
                }
                if !seen.insert(q) {
                    return Err(Error::InvalidCircuit(format!(
                        "qubit {q} used twice in one layer"
                    )));
                }
            }
        }
        self.layers.push(Layer { gates });
        Ok(self)
    }

    /// Appends all layers of `other`; register sizes must match.
    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n != self.n {
            return Err(Error::InvalidCircuit(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.n, self.n
            )));
        }
        self.layers.extend(other.layers.iter().cloned());
        Ok(self)
    }

    /// Product of all gate unitaries in layer order (noiseless action).
    pub fn unitary(&self) -> CMat {
        let dim = 1usize << self.n;
        let mut total = CMat::identity(dim, dim);
        for layer in &self.layers {
            for gate in &layer.gates {
                if let Some(u) = gate.unitary() {
                    total = linalg::embed_unitary(&u, gate.qubits(), self.n) * total;
                }
            }
        }
        total
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.gates.iter())
            .filter(|g| g.class() == GateClass::TwoQubit)
            .count()
    }
}

/// Preparation of `(|0..0> + e^{i phi}|1..1>)/sqrt(2)` on `n` qubits: one
/// Hadamard, a chain of `n-1` CNOTs, then the phase as a virtual-Z on the
/// last qubit.
pub fn ghz_prep_circuit(n: usize, phi: f64) -> Result<Circuit> {
    if n < 1 || n > 3 {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 3 });
    }
    let mut c = Circuit::new(n)?;
    c.add_layer(vec![Gate::hadamard(0)])?;
    for q in 1..n {
        c.add_layer(vec![Gate::cnot(q - 1, q)])?;
    }
    c.add_layer(vec![Gate::virtual_z(phi, n - 1)])?;
    Ok(c)
}

/// Both modules prepared on a `2n`-qubit register: module A is qubits
/// `0..n` with phase `phi_a`, module B is qubits `n..2n` with `phi_b`.
///
/// Physical gates are scheduled one per layer, module A's chain first and
/// then module B's, so every qubit that is not being driven accrues idle
/// relaxation for the duration of each gate. This mirrors a serially
/// executed gate stream, which is how the error model counts idling.
pub fn pair_prep_circuit(n: usize, phi_a: f64, phi_b: f64) -> Result<Circuit> {
    if n < 1 || n > 3 {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 3 });
    }
    let mut c = Circuit::new(2 * n)?;
    for base in [0, n] {
        c.add_layer(vec![Gate::hadamard(base)])?;
        for q in 1..n {
            c.add_layer(vec![Gate::cnot(base + q - 1, base + q)])?;
        }
    }
    c.add_layer(vec![
        Gate::virtual_z(phi_a, n - 1),
        Gate::virtual_z(phi_b, 2 * n - 1),
    ])?;
    Ok(c)
}

/// Pairwise Bell-basis rotation on a `2n`-qubit register: CNOT from each
/// module-A qubit `i` to its partner `n+i`, a Hadamard on the module-A
/// qubit, then computational readout of everything. After this circuit the
/// pair `(a_i, b_i) = (1, 1)` flags the singlet, so the parity of the
/// bitwise AND estimates the overlap as `1 - 2*mean(parity)`.
///
/// As in [`pair_prep_circuit`], physical gates run one per layer (pair by
/// pair), so undriven qubits idle for each gate's duration.
pub fn bbm_circuit(n: usize) -> Result<Circuit> {
    if n < 1 || n > 3 {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 3 });
    }
    let mut c = Circuit::new(2 * n)?;
    for i in 0..n {
        c.add_layer(vec![Gate::cnot(i, n + i)])?;
        c.add_layer(vec![Gate::hadamard(i)])?;
    }
    c.add_layer(vec![Gate::measure((0..2 * n).collect())])?;
    Ok(c)
}
