//! Noisy circuit execution and seeded shot sampling.
//!
//! Layer semantics, in order: all gate unitaries, then a depolarizing
//! channel on each physical gate's qubits, then thermal relaxation for the
//! layer duration on every qubit not occupied by a physical gate. Results
//! are deterministic for a fixed RNG stream.

use crate::circuit::{Circuit, GateClass};
use crate::error::{Error, Result};
use crate::linalg;
use crate::noise::{depolarize, thermal_relax, ConfusionMatrix, NoiseModel};
use crate::states::{DensityMatrix, UnitaryOp};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

/// Runs `c` on `rho0` under the noise model.
pub fn run_circuit(c: &Circuit, rho0: &DensityMatrix, nm: &NoiseModel) -> Result<DensityMatrix> {
    nm.validate()?;
    if rho0.n() != c.n() {
        return Err(Error::DimensionMismatch {
            expected: 1usize << c.n(),
            got: rho0.dim(),
        });
    }
    let n = c.n();
    let mut rho = rho0.clone();
    for layer in c.layers() {
        for gate in layer.gates() {
            if let Some(u) = gate.unitary() {
                let full = linalg::conjugate_on_qubits(rho.matrix(), &u, gate.qubits(), n);
                rho = DensityMatrix::trusted(n, full);
            }
        }
        for gate in layer.gates() {
            let p = match gate.class() {
                GateClass::SingleQubit => nm.p_1q_effective(),
                GateClass::TwoQubit => nm.p_2q_effective(),
                GateClass::Instant => continue,
            };
            if p > 0.0 {
                rho = depolarize(&rho, p, gate.qubits())?;
            }
        }
        let duration = layer.duration_ns(&nm.durations);
        if duration > 0.0 {
            let busy = layer.busy_qubits();
            for q in 0..n {
                if !busy.contains(&q) {
                    rho = thermal_relax(
                        &rho,
                        q,
                        duration,
                        nm.t1_us,
                        nm.t2_us,
                        nm.p_th,
                        nm.literal_relaxation,
                    )?;
                }
            }
        }
    }
    Ok(rho)
}

/// Prepares the all-zeros register and runs the circuit.
pub fn run_circuit_from_ground(c: &Circuit, nm: &NoiseModel) -> Result<DensityMatrix> {
    let ground = crate::states::PureState::basis(c.n(), 0)?.to_density();
    run_circuit(c, &ground, nm)
}

/// Born-rule outcome distribution in the frame reached by `rotation`,
/// optionally pushed through readout confusion.
pub fn outcome_distribution(
    rho: &DensityMatrix,
    rotation: Option<&UnitaryOp>,
    cm: Option<&ConfusionMatrix>,
) -> Result<Vec<f64>> {
    let rotated = match rotation {
        Some(u) => u.conjugate(rho)?,
        None => rho.clone(),
    };
    let mut probs = rotated.diagonal_probabilities();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "outcome probabilities sum to {total:.12}, not 1"
        )));
    }
    for p in probs.iter_mut() {
        *p /= total;
    }
    match cm {
        Some(cm) => cm.apply_to_distribution(&probs),
        None => Ok(probs),
    }
}

/// Multinomial counts over `probs` for `shots` draws, via the conditional
/// binomial decomposition. Deterministic for a fixed RNG.
pub fn sample_counts<R: Rng>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left = 1.0f64;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() || mass_left <= 0.0 {
            counts[k] = remaining;
            break;
        }
        let q = (p / mass_left).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q)
            .map(|d| d.sample(rng))
            .unwrap_or(0);
        counts[k] = draw.min(remaining);
        remaining -= counts[k];
        mass_left -= p;
    }
    counts
}

/// Draws `shots` outcomes (true indices, then per-qubit readout flips per
/// the confusion matrix) in the frame reached by `rotation`.
pub fn sample_shots<R: Rng>(
    rho: &DensityMatrix,
    rotation: Option<&UnitaryOp>,
    shots: usize,
    cm: &ConfusionMatrix,
    rng: &mut R,
) -> Result<Vec<u16>> {
    if shots < 1 {
        return Err(Error::Domain("shot count must be at least 1".into()));
    }
    let n = rho.n();
    if cm.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cm.n(),
        });
    }
    let probs = outcome_distribution(rho, rotation, None)?;
    let counts = sample_counts(&probs, shots as u64, rng);
    let skip_flips = cm.is_ideal();
    let mut out = Vec::with_capacity(shots);
    for (outcome, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let mut bits = outcome as u16;
            if !skip_flips {
                for q in 0..n {
                    let pos = n - 1 - q;
                    let t = ((bits >> pos) & 1) as usize;
                    let flip_prob = cm.qubit(q)[t][1 - t];
                    if rng.gen::<f64>() < flip_prob {
                        bits ^= 1 << pos;
                    }
                }
            }
            out.push(bits);
        }
    }
    Ok(out)
}

/// Which module's bits to read from a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    A,
    B,
}

/// One repetition: a setting id and one bitstring per module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotRecord {
    pub setting: u32,
    pub a: u16,
    pub b: u16,
}

impl ShotRecord {
    pub fn bits(&self, module: Module) -> u16 {
        match module {
            Module::A => self.a,
            Module::B => self.b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    /// Qubits per module.
    pub n: usize,
    pub protocol: String,
    pub seed: u64,
    pub shots_per_setting: usize,
}

/// Collection of repetitions tagged with basis settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotDataset {
    pub meta: DatasetMeta,
    pub records: Vec<ShotRecord>,
}

impl ShotDataset {
    pub fn new(meta: DatasetMeta) -> Self {
        Self {
            meta,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record indices grouped by setting id, in id order.
    pub fn indices_by_setting(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut map: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (k, r) in self.records.iter().enumerate() {
            map.entry(r.setting).or_default().push(k);
        }
        map
    }

    /// Empirical outcome counts for one module, per setting.
    pub fn module_counts(&self, module: Module) -> BTreeMap<u32, Vec<f64>> {
        let dim = 1usize << self.meta.n;
        let mut map: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            let entry = map.entry(r.setting).or_insert_with(|| vec![0.0; dim]);
            entry[r.bits(module) as usize] += 1.0;
        }
        map
    }

    pub fn write_tsv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# n={}", self.meta.n)?;
        writeln!(w, "# protocol={}", self.meta.protocol)?;
        writeln!(w, "# seed={}", self.meta.seed)?;
        writeln!(w, "# shots_per_setting={}", self.meta.shots_per_setting)?;
        let width = self.meta.n;
        for r in &self.records {
            writeln!(
                w,
                "{}\t{:0width$b}\t{:0width$b}",
                r.setting, r.a, r.b,
                width = width
            )?;
        }
        Ok(())
    }

    pub fn write_to_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_tsv(&mut w)
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut headers: BTreeMap<String, String> = BTreeMap::new();
        let mut records = Vec::new();
        let mut n: Option<usize> = None;
        for (line_no, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    headers.insert(k.trim().to_string(), v.trim().to_string());
                    if k.trim() == "n" {
                        n = Some(v.trim().parse().map_err(|_| {
                            Error::Parse(format!("bad qubit count {:?}", v.trim()))
                        })?);
                    }
                }
                continue;
            }
            let n = n.ok_or_else(|| {
                Error::Parse("records before the '# n=' header".into())
            })?;
            let mut fields = line.split('\t');
            let (setting, a, b) = match (fields.next(), fields.next(), fields.next(), fields.next())
            {
                (Some(s), Some(a), Some(b), None) => (s, a, b),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected 3 tab-separated fields",
                        line_no + 1
                    )))
                }
            };
            let setting: u32 = setting.parse().map_err(|_| {
                Error::Parse(format!("line {}: bad setting id {setting:?}", line_no + 1))
            })?;
            let parse_bits = |s: &str| -> Result<u16> {
                if s.len() != n || !s.bytes().all(|b| b == b'0' || b == b'1') {
                    return Err(Error::Parse(format!(
                        "line {}: bitstring {s:?} is not {n} binary digits",
                        line_no + 1
                    )));
                }
                Ok(u16::from_str_radix(s, 2).unwrap())
            };
            records.push(ShotRecord {
                setting,
                a: parse_bits(a)?,
                b: parse_bits(b)?,
            });
        }
        let n = n.ok_or_else(|| Error::Parse("missing '# n=' header".into()))?;
        let get = |key: &str| -> Result<&String> {
            headers
                .get(key)
                .ok_or_else(|| Error::Parse(format!("missing '# {key}=' header")))
        };
        let meta = DatasetMeta {
            n,
            protocol: get("protocol")?.clone(),
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Parse("bad seed header".into()))?,
            shots_per_setting: get("shots_per_setting")?
                .parse()
                .map_err(|_| Error::Parse("bad shots_per_setting header".into()))?,
        };
        Ok(Self { meta, records })
    }

    pub fn read_from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_tsv(std::io::BufReader::new(file))
    }
}

/// Splits a joint `2n`-qubit outcome into module bitstrings (module A holds
/// the high bits, qubit 0 being the most significant).
pub fn split_outcome(outcome: u16, n: usize) -> (u16, u16) {
    let mask = (1u16 << n) - 1;
    (outcome >> n, outcome & mask)
}
