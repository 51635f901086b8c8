//! Phase-sweep measurement records and least-squares state reconstruction.
//!
//! The estimate minimizes `Σ_{βγ} (p^emp_{βγ} − Tr[Π_{βγ} ρ])²` over density
//! matrices. Writing `ρ` in an orthonormal real basis of Hermitian matrices
//! turns the objective into a fixed quadratic form `xᵀGx − 2bᵀx + c`, so every
//! iteration costs `O(d⁴)` regardless of how many outcomes were recorded.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::linalg::{self, CMatrix};
use crate::metrics;
use crate::povm::{self, LoSetting, PovmSet, Truncation, Uncertainties};
use crate::tmd::DetectorModel;

pub const DEFAULT_SHOTS: u64 = 100_000;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Largest negative probability attributed to roundoff.
const PROBABILITY_FLOOR: f64 = -1e-12;

/// Named phase sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepPreset {
    /// 20 evenly spaced phases (phase-averaged states).
    Pa20,
    /// 100 evenly spaced phases.
    Full100,
}

impl SweepPreset {
    pub fn phases(self) -> usize {
        match self {
            SweepPreset::Pa20 => 20,
            SweepPreset::Full100 => 100,
        }
    }
}

impl std::str::FromStr for SweepPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pa20" => Ok(SweepPreset::Pa20),
            "full100" => Ok(SweepPreset::Full100),
            other => Err(Error::param("sweep", format!("unknown preset `{other}`"))),
        }
    }
}

/// LO settings visited by an experiment and the shots taken at each.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepProtocol {
    pub settings: Vec<LoSetting>,
    /// Shots per setting; zero means exact probabilities.
    pub shots: u64,
}

impl SweepProtocol {
    pub fn new(settings: Vec<LoSetting>, shots: u64) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::param("settings", "need at least one setting"));
        }
        Ok(Self { settings, shots })
    }

    /// `phases` evenly spaced LO phases `2πk/phases`.
    pub fn evenly_spaced(phases: usize, amplitude: f64, coupling: f64, shots: u64) -> Result<Self> {
        let settings = (0..phases)
            .map(|k| {
                LoSetting::new(
                    amplitude,
                    2.0 * std::f64::consts::PI * k as f64 / phases as f64,
                    coupling,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(settings, shots)
    }

    pub fn preset(preset: SweepPreset, amplitude: f64, coupling: f64, shots: u64) -> Result<Self> {
        Self::evenly_spaced(preset.phases(), amplitude, coupling, shots)
    }
}

/// Counts (or exact probabilities when `shots == 0`) per setting and outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickRecord {
    pub settings: Vec<LoSetting>,
    pub shots: u64,
    pub outcomes_a: usize,
    pub outcomes_b: usize,
    /// `counts[setting][k_a * outcomes_b + k_b]`.
    pub counts: Vec<Vec<f64>>,
}

impl ClickRecord {
    pub fn outcomes(&self) -> usize {
        self.outcomes_a * self.outcomes_b
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings.len() != self.counts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.settings.len(),
                found: self.counts.len(),
            });
        }
        for row in &self.counts {
            if row.len() != self.outcomes() {
                return Err(Error::DimensionMismatch {
                    expected: self.outcomes(),
                    found: row.len(),
                });
            }
            if row.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(Error::Format(
                    "counts must be finite and non-negative".into(),
                ));
            }
            let sum: f64 = row.iter().sum();
            if self.shots > 0 && (sum - self.shots as f64).abs() > 1e-9 * self.shots as f64 {
                return Err(Error::Format(format!(
                    "counts sum to {sum}, expected {} shots",
                    self.shots
                )));
            }
        }
        Ok(())
    }

    /// Empirical frequencies for one setting.
    pub fn frequencies(&self, setting: usize) -> Vec<f64> {
        let row = &self.counts[setting];
        if self.shots == 0 {
            row.clone()
        } else {
            row.iter().map(|c| c / self.shots as f64).collect()
        }
    }
}

/// Outcome probabilities with negatives from roundoff clipped, checked
/// against the set's completeness defect.
pub fn outcome_probabilities(rho: &DensityOperator, set: &PovmSet) -> Result<Vec<f64>> {
    let mut probs = set.probabilities(rho)?;
    if let Some(&worst) = probs.iter().min_by(|a, b| a.total_cmp(b)) {
        if worst < PROBABILITY_FLOOR {
            return Err(Error::NotPositive {
                min_eigenvalue: worst,
            });
        }
    }
    probs.iter_mut().for_each(|p| *p = p.max(0.0));
    let sum: f64 = probs.iter().sum();
    let trace = rho.trace();
    if (sum - trace).abs() > set.defect * trace + 1e-9 {
        return Err(Error::Incomplete {
            sum,
            defect: set.defect,
        });
    }
    Ok(probs)
}

/// Multinomial draw by sequential conditional binomials.
fn multinomial(rng: &mut ChaCha8Rng, shots: u64, probs: &[f64]) -> Vec<f64> {
    let total: f64 = probs.iter().sum();
    let mut remaining = shots;
    let mut mass = total;
    let mut out = vec![0.0; probs.len()];
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= 0.0 {
            out[i] = remaining as f64;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q)
            .expect("probability in [0, 1]")
            .sample(rng);
        out[i] = draw as f64;
        remaining -= draw;
        mass -= p;
    }
    out
}

/// Simulates a record from prebuilt POVM sets. Each setting draws from its
/// own ChaCha stream, so results do not depend on evaluation order.
pub fn simulate_record_with(
    rho: &DensityOperator,
    sets: &[PovmSet],
    shots: u64,
    seed: u64,
) -> Result<ClickRecord> {
    let first = sets
        .first()
        .ok_or_else(|| Error::param("sets", "need at least one POVM set"))?;
    let counts = sets
        .par_iter()
        .enumerate()
        .map(|(i, set)| {
            let probs = outcome_probabilities(rho, set)?;
            if shots == 0 {
                return Ok(probs);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            Ok(multinomial(&mut rng, shots, &probs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClickRecord {
        settings: sets.iter().map(|s| s.setting).collect(),
        shots,
        outcomes_a: first.outcomes_a,
        outcomes_b: first.outcomes_b,
        counts,
    })
}

/// Builds the POVMs for `protocol` and simulates a record.
pub fn simulate_record(
    rho: &DensityOperator,
    protocol: &SweepProtocol,
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    trunc: &Truncation,
    seed: u64,
) -> Result<ClickRecord> {
    let sets = povm::povm_sets(&protocol.settings, model_a, model_b, trunc)?;
    simulate_record_with(rho, &sets, protocol.shots, seed)
}

/// Real coordinates of a Hermitian matrix in an orthonormal basis:
/// diagonal entries, then `√2 Re` and `√2 Im` of the upper triangle.
pub fn hermitian_coordinates(m: &CMatrix) -> DVector<f64> {
    let d = m.nrows();
    let mut x = DVector::zeros(d * d);
    let mut k = d;
    for n in 0..d {
        x[n] = m[(n, n)].re;
        for j in (n + 1)..d {
            x[k] = std::f64::consts::SQRT_2 * m[(n, j)].re;
            x[k + 1] = std::f64::consts::SQRT_2 * m[(n, j)].im;
            k += 2;
        }
    }
    x
}

pub fn from_hermitian_coordinates(x: &DVector<f64>, d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    let mut k = d;
    for n in 0..d {
        m[(n, n)] = num_complex::Complex64::new(x[n], 0.0);
        for j in (n + 1)..d {
            let v = num_complex::Complex64::new(x[k], x[k + 1]) / std::f64::consts::SQRT_2;
            m[(n, j)] = v;
            m[(j, n)] = v.conj();
            k += 2;
        }
    }
    m
}

/// Euclidean projection of a vector onto the probability simplex.
fn project_to_simplex(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    values.iter().map(|v| (v - shift).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm: eigenvalues projected onto
/// the simplex, eigenvectors kept.
pub fn project_to_density(m: &CMatrix) -> DensityOperator {
    let (values, vectors) = linalg::hermitian_eigen(m);
    let projected = DVector::from_vec(project_to_simplex(values.as_slice()));
    DensityOperator::from_matrix_unchecked(linalg::hermitize(&linalg::from_eigen(
        &projected, &vectors,
    )))
}

/// The quadratic least-squares objective for a record and its POVMs.
#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    dim: usize,
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    constant: f64,
    curvature: f64,
}

impl LeastSquaresProblem {
    pub fn new(record: &ClickRecord, sets: &[PovmSet]) -> Result<Self> {
        record.validate()?;
        if sets.len() != record.settings.len() {
            return Err(Error::DimensionMismatch {
                expected: record.settings.len(),
                found: sets.len(),
            });
        }
        let dim = sets
            .first()
            .ok_or_else(|| Error::param("sets", "need at least one setting"))?
            .dim();
        let n = dim * dim;
        let mut gram = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        let mut constant = 0.0;
        for (i, set) in sets.iter().enumerate() {
            if set.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: set.dim(),
                });
            }
            if set.len() != record.outcomes() {
                return Err(Error::DimensionMismatch {
                    expected: record.outcomes(),
                    found: set.len(),
                });
            }
            let freqs = record.frequencies(i);
            let rows = DMatrix::from_columns(
                &set.elements
                    .iter()
                    .map(|e| hermitian_coordinates(&e.matrix))
                    .collect::<Vec<_>>(),
            );
            gram += &rows * rows.transpose();
            let p = DVector::from_vec(freqs);
            rhs += &rows * &p;
            constant += p.norm_squared();
        }
        let curvature = 2.0 * gram.clone().symmetric_eigen().eigenvalues.max();
        Ok(Self {
            dim,
            gram,
            rhs,
            constant,
            curvature,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        (x.dot(&(&self.gram * x)) - 2.0 * self.rhs.dot(x) + self.constant).max(0.0)
    }

    pub fn objective_at(&self, rho: &DensityOperator) -> f64 {
        self.objective(&hermitian_coordinates(rho.matrix()))
    }

    /// `f(to) − f(from)` evaluated as `dᵀ(∇f(from) + G d)` with `d = to − from`,
    /// free of the cancellation in differencing two objective values.
    pub fn change(&self, from: &DVector<f64>, to: &DVector<f64>) -> f64 {
        let d = to - from;
        let gd = &self.gram * &d;
        d.dot(&(self.gradient(from) + gd))
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.gram * x - &self.rhs) * 2.0
    }

    /// The Gram matrix `G` of the quadratic form.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Lipschitz constant of the gradient, `2 λ_max(G)`.
    pub fn curvature(&self) -> f64 {
        self.curvature
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub rho: DensityOperator,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest per-step objective increase seen (zero for a monotone run).
    pub max_objective_increase: f64,
}

/// Constrained least-squares solver.
pub trait Solver {
    fn solve(&self, problem: &LeastSquaresProblem) -> ReconstructionResult;
}

/// Projected gradient descent with step `1/L`, started from `I/d`.
///
/// With `accelerated` set, Nesterov momentum is added (FISTA) and reset
/// whenever a step would raise the objective; the rejected step is replaced
/// by a plain projected-gradient step from the last accepted iterate, so the
/// accepted objective sequence stays nonincreasing in both modes.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedGradient {
    pub max_iterations: usize,
    /// Stop once a plain step lowers the objective by less than this.
    pub tolerance: f64,
    pub accelerated: bool,
}

impl Default for ProjectedGradient {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            accelerated: true,
        }
    }
}

impl ProjectedGradient {
    pub fn plain() -> Self {
        Self {
            accelerated: false,
            ..Self::default()
        }
    }

    fn step(
        problem: &LeastSquaresProblem,
        from: &DVector<f64>,
        step: f64,
    ) -> (DensityOperator, DVector<f64>) {
        let trial = from - problem.gradient(from) * step;
        let rho = project_to_density(&from_hermitian_coordinates(&trial, problem.dim()));
        let x = hermitian_coordinates(rho.matrix());
        (rho, x)
    }
}

impl Solver for ProjectedGradient {
    fn solve(&self, problem: &LeastSquaresProblem) -> ReconstructionResult {
        let mut rho = DensityOperator::maximally_mixed(problem.dim());
        let mut x = hermitian_coordinates(rho.matrix());
        let step = if problem.curvature() > 0.0 {
            1.0 / problem.curvature()
        } else {
            0.0
        };
        // extrapolated point and momentum weight (FISTA's y and t)
        let mut y = x.clone();
        let mut t = 1.0f64;
        let mut plain_step = true;
        let mut max_increase = 0.0f64;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < self.max_iterations {
            iterations += 1;
            let (next, next_x) = Self::step(problem, &y, step);
            let delta = problem.change(&x, &next_x);
            if self.accelerated && !plain_step && delta > 0.0 {
                // restart momentum; the next step is a plain descent step
                y = x.clone();
                t = 1.0;
                plain_step = true;
                continue;
            }
            max_increase = max_increase.max(delta);
            let decrease = -delta;
            if self.accelerated {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                y = &next_x + (&next_x - &x) * ((t - 1.0) / t_next);
                t = t_next;
            } else {
                y = next_x.clone();
            }
            let was_plain = plain_step;
            plain_step = !self.accelerated;
            rho = next;
            x = next_x;
            if decrease < self.tolerance && (was_plain || decrease <= 0.0) {
                converged = true;
                break;
            }
        }
        let f = problem.objective(&x);
        ReconstructionResult {
            rho,
            objective: f,
            iterations,
            converged,
            max_objective_increase: max_increase,
        }
    }
}

/// Reconstructs with the default projected-gradient solver.
pub fn reconstruct(record: &ClickRecord, sets: &[PovmSet]) -> Result<ReconstructionResult> {
    reconstruct_with(record, sets, &ProjectedGradient::default())
}

pub fn reconstruct_with(
    record: &ClickRecord,
    sets: &[PovmSet],
    solver: &impl Solver,
) -> Result<ReconstructionResult> {
    let problem = LeastSquaresProblem::new(record, sets)?;
    Ok(solver.solve(&problem))
}

/// Extreme-parameter POVM sweeps.
#[derive(Debug, Clone)]
pub struct ExtremeSweeps {
    pub max: Vec<PovmSet>,
    pub min: Vec<PovmSet>,
}

pub fn extreme_sweeps(
    settings: &[LoSetting],
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    unc: &Uncertainties,
    trunc: &Truncation,
) -> Result<ExtremeSweeps> {
    let build = |sign: f64| -> Result<Vec<PovmSet>> {
        let mut shifted = Vec::with_capacity(settings.len());
        let mut models = None;
        for s in settings {
            let (s2, a, b) = povm::extreme_parameters(s, model_a, model_b, unc, sign)?;
            shifted.push(s2);
            models = Some((a, b));
        }
        let (a, b) = models.ok_or_else(|| Error::param("settings", "need at least one setting"))?;
        povm::povm_sets(&shifted, &a, &b, trunc)
    };
    Ok(ExtremeSweeps {
        max: build(1.0)?,
        min: build(-1.0)?,
    })
}

/// Reconstructions under both extreme POVMs and `Δ = 1 − F(ρ_max, ρ_min)`.
#[derive(Debug, Clone)]
pub struct ErrorBand {
    pub max: ReconstructionResult,
    pub min: ReconstructionResult,
    pub delta: f64,
}

pub fn error_band(record: &ClickRecord, extremes: &ExtremeSweeps) -> Result<ErrorBand> {
    let (max, min) = rayon::join(
        || reconstruct(record, &extremes.max),
        || reconstruct(record, &extremes.min),
    );
    let (max, min) = (max?, min?);
    let f = metrics::fidelity(&max.rho, &min.rho)?;
    Ok(ErrorBand {
        max,
        min,
        delta: (1.0 - f).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, fock_state, HilbertDim};
    use num_complex::Complex64;

    fn ideal() -> DetectorModel {
        DetectorModel::ideal(8)
    }

    #[test]
    fn vacuum_exact_record() {
        let protocol = SweepProtocol::evenly_spaced(3, 0.0, 0.5, 0).unwrap();
        let vac = fock_state(0, HilbertDim::default()).unwrap().density();
        let rec = simulate_record(
            &vac,
            &protocol,
            &ideal(),
            &ideal(),
            &Truncation::default(),
            1,
        )
        .unwrap();
        for i in 0..3 {
            let f = rec.frequencies(i);
            assert!((f[0] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_probabilities_sum_within_defect() {
        let trunc = Truncation::default();
        let a = DetectorModel::tmd(0.10).unwrap();
        let b = DetectorModel::tmd(0.15).unwrap();
        let s = LoSetting::new(1.5, 0.3, 0.5).unwrap();
        let set = povm::povm_set(&s, &a, &b, &trunc).unwrap();
        let rho = fock::phase_averaged_dm(0.6, HilbertDim::default())
            .unwrap()
            .normalized()
            .unwrap();
        let p = outcome_probabilities(&rho, &set).unwrap();
        let sum: f64 = p.iter().sum();
        assert!((1.0 - sum).abs() <= set.defect + 1e-12);
    }

    #[test]
    fn sampling_is_reproducible_and_order_independent() {
        let trunc = Truncation::default();
        let a = DetectorModel::tmd(0.3).unwrap();
        let protocol = SweepProtocol::evenly_spaced(4, 0.5, 0.5, 1000).unwrap();
        let rho = fock::coherent_state(Complex64::new(0.7, 0.0), HilbertDim::default())
            .normalized()
            .unwrap()
            .density();
        let sets = povm::povm_sets(&protocol.settings, &a, &a, &trunc).unwrap();
        let r1 = simulate_record_with(&rho, &sets, 1000, 42).unwrap();
        let r2 = simulate_record_with(&rho, &sets, 1000, 42).unwrap();
        assert_eq!(r1, r2);
        let r3 = simulate_record_with(&rho, &sets[2..3], 1000, 42).unwrap();
        assert_ne!(r3.counts[0], r1.counts[2]); // stream index follows position
        let reversed: Vec<_> = sets.iter().rev().cloned().collect();
        let r4 = simulate_record_with(&rho, &reversed, 1000, 42).unwrap();
        assert_eq!(r4.settings[0], r1.settings[3]);
        for row in &r1.counts {
            assert_eq!(row.iter().sum::<f64>(), 1000.0);
        }
        r1.validate().unwrap();
    }

    #[test]
    fn coordinates_round_trip() {
        let m = CMatrix::from_fn(4, 4, |i, j| {
            Complex64::new((i + j) as f64, i as f64 - j as f64)
        });
        let h = linalg::hermitize(&m);
        let x = hermitian_coordinates(&h);
        assert!(linalg::max_abs(&(from_hermitian_coordinates(&x, 4) - &h)) < 1e-14);
        // Frobenius inner product equals the coordinate dot product
        let g = linalg::hermitize(&CMatrix::from_fn(4, 4, |i, j| {
            Complex64::new(1.0 / (1 + i + j) as f64, (i * j) as f64)
        }));
        let direct = povm::trace_product(&h, &g);
        assert!((direct - x.dot(&hermitian_coordinates(&g))).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_to_simplex(&[0.2, 0.3, 0.5]), vec![0.2, 0.3, 0.5]);
        let p = project_to_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_to_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn ideal_detector_reconstruction() {
        let trunc = Truncation::default();
        let protocol = SweepProtocol::evenly_spaced(8, 0.8, 0.5, 0).unwrap();
        let truth = fock::coherent_state(Complex64::new(0.5, 0.3), HilbertDim::default())
            .normalized()
            .unwrap()
            .density();
        let sets = povm::povm_sets(&protocol.settings, &ideal(), &ideal(), &trunc).unwrap();
        let rec = simulate_record_with(&truth, &sets, 0, 0).unwrap();
        let res = reconstruct(&rec, &sets).unwrap();
        assert!(res.max_objective_increase <= 1e-15);
        let f = metrics::fidelity(&res.rho, &truth).unwrap();
        assert!(f > 0.9999, "{f} after {} iterations", res.iterations);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let trunc = Truncation::default();
        let protocol = SweepProtocol::evenly_spaced(2, 0.5, 0.5, 0).unwrap();
        let sets = povm::povm_sets(&protocol.settings, &ideal(), &ideal(), &trunc).unwrap();
        let vac = fock_state(0, HilbertDim::default()).unwrap().density();
        let rec = simulate_record_with(&vac, &sets, 0, 0).unwrap();
        assert!(reconstruct(&rec, &sets[..1]).is_err());
    }

    #[test]
    fn presets() {
        assert_eq!("pa20".parse::<SweepPreset>().unwrap().phases(), 20);
        assert_eq!("full100".parse::<SweepPreset>().unwrap().phases(), 100);
        assert!("full99".parse::<SweepPreset>().is_err());
        let p = SweepProtocol::preset(SweepPreset::Pa20, 0.2, 0.5, 10).unwrap();
        assert_eq!(p.settings.len(), 20);
        assert!((p.settings[5].phase - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
