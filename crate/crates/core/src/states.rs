//! State, operator and Pauli-string types with their physicality checks.
//!
//! Conventions used throughout:
//!
//! * qubit 0 is the most significant bit of a basis-state index;
//! * density matrices are validated on construction (Hermitian, unit trace,
//!   no eigenvalue below `-EIG_TOL`);
//! * overlaps and expectation values must come out real up to `IMAG_TOL`,
//!   anything larger is reported as a numerical error rather than silently
//!   truncated.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, ONE, ZERO};
use rand::Rng;
use std::f64::consts::FRAC_1_SQRT_2;

/// Largest register handled by this crate.
pub const MAX_QUBITS: usize = 6;

/// Tolerance for state-vector normalization.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for Hermiticity and unit-trace checks on density matrices.
pub const HERM_TOL: f64 = 1e-10;
/// Eigenvalues above `-EIG_TOL` count as non-negative.
pub const EIG_TOL: f64 = 1e-9;
/// Imaginary parts below this are considered numerical dust.
pub const IMAG_TOL: f64 = 1e-9;
/// Tolerance for unitarity checks.
pub const UNITARY_TOL: f64 = 1e-10;

fn check_qubit_count(n: usize) -> Result<()> {
    if n < 1 || n > MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange {
            n,
            min: 1,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Normalized pure state on `n` qubits.
#[derive(Debug, Clone)]
pub struct PureState {
    n: usize,
    amplitudes: CVec,
}

impl PureState {
    pub fn new(n: usize, amplitudes: CVec) -> Result<Self> {
        check_qubit_count(n)?;
        let dim = 1usize << n;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized((norm - 1.0).abs()));
        }
        Ok(Self { n, amplitudes })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubit_count(n)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::Domain(format!(
                "basis index {index} out of range for {n} qubits"
            )));
        }
        let mut amplitudes = CVec::zeros(dim);
        amplitudes[index] = ONE;
        Ok(Self { n, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn to_density(&self) -> DensityMatrix {
        let mat = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix {
            n: self.n,
            mat,
        }
    }

    pub fn overlap_with(&self, other: &PureState) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                got: other.amplitudes.len(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }
}

/// `(|0..0> + e^{i phi} |1..1>)/sqrt(2)` on `n` qubits.
pub fn ghz_state(n: usize, phi: f64) -> Result<PureState> {
    check_qubit_count(n)?;
    let dim = 1usize << n;
    let mut amplitudes = CVec::zeros(dim);
    amplitudes[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    amplitudes[dim - 1] = C64::from_polar(FRAC_1_SQRT_2, phi);
    PureState::new(n, amplitudes)
}

/// The six single-qubit cardinal states `|0>, |1>, |+>, |->, |+i>, |-i>`.
pub fn cardinal_states() -> Vec<PureState> {
    let h = FRAC_1_SQRT_2;
    let make = |a: C64, b: C64| PureState::new(1, CVec::from_vec(vec![a, b])).unwrap();
    vec![
        make(ONE, ZERO),
        make(ZERO, ONE),
        make(C64::new(h, 0.0), C64::new(h, 0.0)),
        make(C64::new(h, 0.0), C64::new(-h, 0.0)),
        make(C64::new(h, 0.0), C64::new(0.0, h)),
        make(C64::new(h, 0.0), C64::new(0.0, -h)),
    ]
}

/// Validated density matrix on `n` qubits.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    n: usize,
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(n: usize, mat: CMat) -> Result<Self> {
        check_qubit_count(n)?;
        let dim = 1usize << n;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mat.nrows(),
            });
        }
        let herm = linalg::hermiticity_error(&mat);
        if herm > HERM_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let trace_dev = (mat.trace().re - 1.0).abs().max(mat.trace().im.abs());
        if trace_dev > HERM_TOL {
            return Err(Error::TraceNotUnit(trace_dev));
        }
        let min_eig = linalg::min_eigenvalue(&mat);
        if min_eig < -EIG_TOL {
            return Err(Error::NotPositive(min_eig));
        }
        Ok(Self { n, mat })
    }

    /// Skips the eigenvalue check; used by channels whose output is physical
    /// by construction. Debug builds still verify the cheap invariants.
    pub(crate) fn trusted(n: usize, mat: CMat) -> Self {
        debug_assert!(linalg::hermiticity_error(&mat) <= 1e-8);
        debug_assert!((mat.trace().re - 1.0).abs() <= 1e-8);
        Self { n, mat }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        psi.to_density()
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_qubit_count(n)?;
        let dim = 1usize << n;
        let mat = CMat::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
        Ok(Self { n, mat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.mat.nrows() {
            for j in 0..self.mat.ncols() {
                acc += (self.mat[(i, j)] * self.mat[(j, i)]).re;
            }
        }
        acc
    }

    /// Probabilities of computational-basis outcomes (the diagonal).
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re.max(0.0)).collect()
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let diff = &self.mat - &other.mat;
        let (vals, _) = linalg::eigh(&diff);
        Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
    }
}

/// `tr(a b)` for two density matrices; real and inside `[0, 1]` up to
/// numerical dust, which is clamped only within `EIG_TOL` of the boundary.
pub fn trace_overlap(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut acc = ZERO;
    for i in 0..a.mat.nrows() {
        for j in 0..a.mat.ncols() {
            acc += a.mat[(i, j)] * b.mat[(j, i)];
        }
    }
    if acc.im.abs() > IMAG_TOL {
        return Err(Error::Numerical(format!(
            "trace overlap has imaginary part {:.3e}",
            acc.im
        )));
    }
    let mut value = acc.re;
    if value < 0.0 && value > -EIG_TOL {
        value = 0.0;
    }
    if value > 1.0 && value < 1.0 + EIG_TOL {
        value = 1.0;
    }
    Ok(value)
}

/// Overlap normalized by the larger purity: `tr(ab) / max(tr a^2, tr b^2)`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let denom = a.purity().max(b.purity());
    if denom <= f64::EPSILON {
        return Err(Error::Domain(
            "fidelity undefined: both states have zero purity".into(),
        ));
    }
    let overlap = trace_overlap(a, b)?;
    Ok(overlap / denom)
}

/// Euclidean projection of a real vector onto the probability simplex.
fn project_to_simplex(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            threshold = candidate;
        }
    }
    values.iter().map(|&v| (v - threshold).max(0.0)).collect()
}

/// Nearest (Frobenius) positive semidefinite unit-trace matrix: keeps the
/// eigenbasis, truncates negative eigenvalues and redistributes the trace
/// over the rest. Idempotent on already-physical inputs.
pub fn project_to_physical(n: usize, mat: &CMat) -> Result<DensityMatrix> {
    check_qubit_count(n)?;
    let dim = 1usize << n;
    if mat.nrows() != dim || mat.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mat.nrows(),
        });
    }
    let herm = linalg::hermiticity_error(mat);
    if herm > 1e-8 {
        return Err(Error::NotHermitian(herm));
    }
    let trace_dev = (mat.trace().re - 1.0).abs();
    if trace_dev > 1e-8 {
        return Err(Error::TraceNotUnit(trace_dev));
    }
    let (values, vectors) = linalg::eigh(mat);
    let projected = project_to_simplex(&values);
    let diag = CMat::from_diagonal(&CVec::from_iterator(
        dim,
        projected.iter().map(|&v| C64::new(v, 0.0)),
    ));
    let rebuilt = &vectors * diag * vectors.adjoint();
    // Symmetrize away floating-point dust before revalidating.
    let sym = (&rebuilt + rebuilt.adjoint()) * C64::new(0.5, 0.0);
    Ok(DensityMatrix::trusted(n, sym))
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMat {
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => CMat::identity(2, 2),
            Pauli::X => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => CMat::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
            Pauli::Z => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Signed tensor product of Pauli letters, e.g. `-XYY`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    letters: Vec<Pauli>,
    sign: i8,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, sign: i8) -> Result<Self> {
        check_qubit_count(letters.len())?;
        if sign != 1 && sign != -1 {
            return Err(Error::Domain(format!("Pauli sign must be +-1, got {sign}")));
        }
        Ok(Self { letters, sign })
    }

    /// Parses strings like `"XXI"` or `"-XYY"`.
    pub fn parse(text: &str) -> Result<Self> {
        let (sign, body) = match text.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, text.strip_prefix('+').unwrap_or(text)),
        };
        let letters = body
            .chars()
            .map(|ch| match ch {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Parse(format!("invalid Pauli letter '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters, sign)
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn matrix(&self) -> CMat {
        let mut out = self.letters[0].matrix();
        for p in &self.letters[1..] {
            out = linalg::kron(&out, &p.matrix());
        }
        out * C64::new(self.sign as f64, 0.0)
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.sign < 0 {
            write!(f, "-")?;
        }
        for p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

/// All `4^n` unsigned Pauli strings in lexicographic I,X,Y,Z order with
/// qubit 0 as the most significant digit.
pub fn all_pauli_strings(n: usize) -> Result<Vec<PauliString>> {
    check_qubit_count(n)?;
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut out = Vec::with_capacity(4usize.pow(n as u32));
    for code in 0..4usize.pow(n as u32) {
        let mut digits = Vec::with_capacity(n);
        for q in 0..n {
            let shift = 2 * (n - 1 - q);
            digits.push(letters[(code >> shift) & 3]);
        }
        out.push(PauliString::new(digits, 1)?);
    }
    Ok(out)
}

/// `tr(rho P)`; real up to `IMAG_TOL`.
pub fn pauli_expectation(rho: &DensityMatrix, pauli: &PauliString) -> Result<f64> {
    if rho.n() != pauli.n() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: 1usize << pauli.n(),
        });
    }
    let p = pauli.matrix();
    let mut acc = ZERO;
    for i in 0..rho.mat.nrows() {
        for j in 0..rho.mat.ncols() {
            acc += rho.mat[(i, j)] * p[(j, i)];
        }
    }
    if acc.im.abs() > IMAG_TOL {
        return Err(Error::Numerical(format!(
            "Pauli expectation has imaginary part {:.3e}",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Validated unitary operator.
#[derive(Debug, Clone)]
pub struct UnitaryOp {
    n: usize,
    mat: CMat,
}

impl UnitaryOp {
    pub fn new(n: usize, mat: CMat) -> Result<Self> {
        check_qubit_count(n)?;
        let dim = 1usize << n;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mat.nrows(),
            });
        }
        let dev = (mat.adjoint() * &mat - CMat::identity(dim, dim)).norm();
        if dev > UNITARY_TOL * dim as f64 {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { n, mat })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_qubit_count(n)?;
        let dim = 1usize << n;
        Ok(Self {
            n,
            mat: CMat::identity(dim, dim),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn apply_to_state(&self, psi: &PureState) -> Result<PureState> {
        if psi.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: 1usize << self.n,
                got: psi.amplitudes().len(),
            });
        }
        PureState::new(self.n, &self.mat * psi.amplitudes())
    }

    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: 1usize << self.n,
                got: rho.dim(),
            });
        }
        Ok(DensityMatrix::trusted(
            self.n,
            &self.mat * &rho.mat * self.mat.adjoint(),
        ))
    }
}

/// Random pure state with Haar-distributed direction.
pub fn random_pure_state<R: Rng>(n: usize, rng: &mut R) -> Result<PureState> {
    check_qubit_count(n)?;
    let dim = 1usize << n;
    let mut amplitudes = CVec::zeros(dim);
    loop {
        for k in 0..dim {
            amplitudes[k] = C64::new(gauss(rng), gauss(rng));
        }
        let norm = amplitudes.norm();
        if norm > 1e-6 {
            amplitudes /= C64::new(norm, 0.0);
            break;
        }
    }
    PureState::new(n, amplitudes)
}

/// Random full-rank density matrix (normalized Ginibre product `G G^dag`).
pub fn random_density_matrix<R: Rng>(n: usize, rng: &mut R) -> Result<DensityMatrix> {
    check_qubit_count(n)?;
    let dim = 1usize << n;
    let mut g = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = C64::new(gauss(rng), gauss(rng));
        }
    }
    let mut rho = &g * g.adjoint();
    let trace = rho.trace().re;
    rho /= C64::new(trace, 0.0);
    let sym = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(n, sym)
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; good enough for test-state generation.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
