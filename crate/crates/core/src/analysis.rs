//! Sampling-cost analysis and error budgeting.
//!
//! The bootstrap machinery answers "how many repetitions does an estimator
//! need to reach a target variance": subsample a dataset with replacement at
//! several sizes, fit the measured variances to `a * N^(-b)`, and invert the
//! fit at the target. Scaling fits compare how that repetition count grows
//! with qubit number across protocols.
//!
//! The error budget ranks noise sources by their leverage on the Bell-basis
//! overlap experiment: halve each source in turn (gate sources halve their
//! gate time along with the rate, so idling shrinks with them), take the
//! finite-difference change in total error, and normalize the changes into
//! fractions.

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::protocols::bbm::expected_overlap;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

/// Bootstrap variance of an estimator over subsamples of `n_p` repetitions.
///
/// Draws `resamples` index subsamples of size `n_p` with replacement from
/// `0..reps` and applies `estimator` to each; returns the sample variance of
/// the estimates. The estimator sees repetition indices so that callers
/// decide what a "repetition" means (for tomography a repetition spans every
/// measured basis; selection-dependent estimators can reselect per call).
pub fn bootstrap_variance<R, F>(
    reps: usize,
    n_p: usize,
    resamples: usize,
    rng: &mut R,
    mut estimator: F,
) -> Result<f64>
where
    R: Rng + ?Sized,
    F: FnMut(&[usize]) -> Result<f64>,
{
    if reps == 0 {
        return Err(Error::EmptyDataset);
    }
    if n_p < 2 {
        return Err(Error::Domain(format!(
            "subsample size {n_p} too small to estimate a variance"
        )));
    }
    if resamples < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 resamples, got {resamples}"
        )));
    }
    let mut estimates = Vec::with_capacity(resamples);
    let mut indices = vec![0usize; n_p];
    for k in 0..resamples {
        for slot in indices.iter_mut() {
            *slot = rng.gen_range(0..reps);
        }
        let value = estimator(&indices)
            .map_err(|e| Error::Domain(format!("estimator failed on subsample {k}: {e}")))?;
        estimates.push(value);
    }
    let mean = estimates.iter().sum::<f64>() / resamples as f64;
    let var = estimates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var)
}

/// Measured bootstrap variances at increasing subsample sizes, with the
/// fitted power law `variance = amplitude * N^(-exponent)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceCurve {
    /// `(subsample size, variance)` pairs, sizes strictly increasing.
    pub points: Vec<(usize, f64)>,
    pub amplitude: f64,
    pub exponent: f64,
}

impl VarianceCurve {
    /// Fit a power law to measured `(size, variance)` points.
    pub fn fit(points: Vec<(usize, f64)>) -> Result<Self> {
        let as_f64: Vec<(f64, f64)> = points.iter().map(|&(n, v)| (n as f64, v)).collect();
        let (amplitude, exponent) = fit_power_law(&as_f64)?;
        if !points.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::Domain(
                "subsample sizes must be strictly increasing".into(),
            ));
        }
        Ok(Self { points, amplitude, exponent })
    }
}

/// Least-squares fit of `v = a * x^(-b)` in log-log coordinates.
///
/// Returns `(a, b)`; `b > 0` means the variance shrinks with size.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, v)| x <= 0.0 || v <= 0.0) {
        return Err(Error::Domain(
            "power-law fit requires positive sizes and variances".into(),
        ));
    }
    let m = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, v) in points {
        let lx = x.ln();
        let ly = v.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::FitFailed("degenerate abscissa in power-law fit".into()));
    }
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    Ok((intercept.exp(), -slope))
}

/// Repetitions needed for the fitted curve to reach `target` variance.
///
/// Inverts `a * N^(-b) = target`; the result is rounded up, except that
/// values within 1e-9 of an integer round to it so exact inversions do not
/// overshoot by one.
pub fn repetitions_for_variance(curve: &VarianceCurve, target: f64) -> Result<u64> {
    if !(target > 0.0) {
        return Err(Error::Domain(format!("target variance {target} must be positive")));
    }
    if curve.exponent <= 0.0 {
        return Err(Error::FitFailed(format!(
            "variance does not decrease with repetitions (exponent {})",
            curve.exponent
        )));
    }
    let raw = (curve.amplitude / target).powf(1.0 / curve.exponent);
    if !raw.is_finite() {
        return Err(Error::FitFailed(format!("non-finite repetition count {raw}")));
    }
    let nearest = raw.round();
    let n = if (raw - nearest).abs() < 1e-9 { nearest } else { raw.ceil() };
    Ok(n.max(1.0) as u64)
}

/// Functional form for repetition counts versus qubit number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingModel {
    /// `N = c * 2^(b*n)`.
    Exponential,
    /// `N = alpha + beta*n + gamma*n^2`.
    Quadratic,
}

/// Fitted parameters of a [`ScalingModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScalingFit {
    Exponential { c: f64, b: f64 },
    Quadratic { alpha: f64, beta: f64, gamma: f64 },
}

/// Fit repetition counts `(n, N)` to the chosen scaling model.
pub fn scaling_fit(points: &[(f64, f64)], model: ScalingModel) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    match model {
        ScalingModel::Exponential => {
            if points.iter().any(|&(_, y)| y <= 0.0) {
                return Err(Error::Domain(
                    "exponential fit requires positive repetition counts".into(),
                ));
            }
            // log2 N = log2 c + b*n, ordinary least squares.
            let m = points.len() as f64;
            let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
            for &(n, y) in points {
                let ly = y.log2();
                sx += n;
                sy += ly;
                sxx += n * n;
                sxy += n * ly;
            }
            let denom = m * sxx - sx * sx;
            if denom.abs() < 1e-12 {
                return Err(Error::FitFailed("degenerate abscissa in scaling fit".into()));
            }
            let b = (m * sxy - sx * sy) / denom;
            let c = 2f64.powf((sy - b * sx) / m);
            Ok(ScalingFit::Exponential { c, b })
        }
        ScalingModel::Quadratic => {
            // Normal equations for [1, n, n^2] coefficients.
            let mut ata = [[0.0f64; 3]; 3];
            let mut aty = [0.0f64; 3];
            for &(n, y) in points {
                let row = [1.0, n, n * n];
                for i in 0..3 {
                    for j in 0..3 {
                        ata[i][j] += row[i] * row[j];
                    }
                    aty[i] += row[i] * y;
                }
            }
            let a = nalgebra::Matrix3::from_fn(|i, j| ata[i][j]);
            let y = nalgebra::Vector3::from_row_slice(&aty);
            let sol = a
                .lu()
                .solve(&y)
                .ok_or_else(|| Error::FitFailed("singular normal equations".into()))?;
            Ok(ScalingFit::Quadratic {
                alpha: sol[0],
                beta: sol[1],
                gamma: sol[2],
            })
        }
    }
}

/// Fractional attribution of the Bell-measurement experiment's total error
/// to readout, single-qubit gates, and two-qubit gates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub n: usize,
    /// `1 - overlap` for identical preparations at full rates.
    pub total_error: f64,
    pub measurement: f64,
    pub single_qubit: f64,
    pub two_qubit: f64,
}

impl ErrorBudget {
    pub fn fractions(&self) -> [f64; 3] {
        [self.measurement, self.single_qubit, self.two_qubit]
    }
}

/// Error budget for the Bell-measurement experiment on two identical
/// zero-phase preparations of `n` qubits.
///
/// The experiment error is `E = 1 - overlap` from the exact noisy
/// expectation. Each source is halved in turn - readout halves only the
/// confusion probability, gate sources halve their rate and their gate
/// duration together so the idling they cause shrinks too - and the drops
/// `E_full - E_halved` are normalized into fractions. With `shots` given,
/// each expectation is replaced by a parity-sampling estimate of that many
/// repetitions, reproducing a finite-statistics budget; `seed` feeds that
/// mode only.
pub fn error_budget(
    nm: &NoiseModel,
    n: usize,
    shots: Option<u64>,
    seed: u64,
) -> Result<ErrorBudget> {
    nm.validate()?;
    if n < 1 || n > 3 {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 3 });
    }
    let variants = [
        nm.clone(),
        nm.with_readout_halved(),
        nm.with_single_qubit_halved(),
        nm.with_two_qubit_halved(),
    ];
    let mut errors = [0.0f64; 4];
    for (i, variant) in variants.iter().enumerate() {
        let overlap = match shots {
            None => expected_overlap(n, 0.0, variant)?,
            Some(reps) => sampled_overlap(n, variant, reps, seed.wrapping_add(i as u64))?,
        };
        errors[i] = 1.0 - overlap;
    }
    let drops: Vec<f64> = errors[1..].iter().map(|e| (errors[0] - e).max(0.0)).collect();
    let total: f64 = drops.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateBudget);
    }
    Ok(ErrorBudget {
        n,
        total_error: errors[0],
        measurement: drops[0] / total,
        single_qubit: drops[1] / total,
        two_qubit: drops[2] / total,
    })
}

/// Overlap estimate from `reps` sampled parities of the noisy experiment.
fn sampled_overlap(n: usize, nm: &NoiseModel, reps: u64, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    if reps == 0 {
        return Err(Error::Domain("sampled budget needs at least one shot".into()));
    }
    let p_odd = ((1.0 - expected_overlap(n, 0.0, nm)?) / 2.0).clamp(0.0, 1.0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dist = Binomial::new(reps, p_odd)
        .map_err(|e| Error::Numerical(format!("binomial parameters: {e}")))?;
    let odd = dist.sample(&mut rng) as f64;
    Ok(1.0 - 2.0 * odd / reps as f64)
}
