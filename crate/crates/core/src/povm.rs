//! POVM elements of the photon-number-resolving homodyne detector.
//!
//! The LO `|α⟩` enters mode a, the signal enters mode b, the beam splitter
//! `U = exp(iξ(b†a + a†b))` mixes them and each output is counted by a TMD.
//! Tracing out the LO gives, for outcome `(k_a, k_b)`,
//!
//! ```text
//! Π = Tr_a[(|α⟩⟨α| ⊗ I) U† (E^a_{k_a} ⊗ E^b_{k_b}) U]
//! ```
//!
//! `U` conserves total photon number, so `U|j, m⟩` is evaluated exactly in
//! its sector `N = j + m` with no cutoff on the output photon numbers. The
//! only truncations are the LO Fock expansion (internal dimension) and the
//! signal space (reconstruction dimension); the first one bounds the
//! completeness defect by `1 − ‖|α⟩_trunc‖²`.

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{self, BeamSplitter, DensityOperator, HilbertDim, StateVector};
use crate::linalg::{self, CMatrix, CVector, ZERO};
use crate::tmd::DetectorModel;

/// Eigenvalue floor below which an element is a construction failure.
pub const POSITIVITY_FLOOR: f64 = -1e-9;
/// Hermiticity tolerance before the final symmetrization.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Additive slack in the completeness bound.
pub const COMPLETENESS_SLACK: f64 = 1e-9;

/// Reconstruction and internal truncations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Truncation {
    /// Largest signal photon number kept in POVM elements (9×9 by default).
    pub n_max: usize,
    /// Fock dimension used for the LO coherent state.
    pub internal_dim: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            n_max: 8,
            internal_dim: 17,
        }
    }
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        if self.internal_dim == 0 {
            return Err(Error::param("internal_dim", "must be at least 1"));
        }
        Ok(())
    }

    pub fn signal(&self) -> HilbertDim {
        HilbertDim::new(self.n_max)
    }

    pub fn signal_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn internal(&self) -> HilbertDim {
        HilbertDim::new(self.internal_dim - 1)
    }
}

/// Local-oscillator setting `γ = (|α|, θ)` plus the coupling `R = cos²ξ`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LoSetting {
    pub amplitude: f64,
    pub phase: f64,
    pub coupling: f64,
}

impl LoSetting {
    pub fn new(amplitude: f64, phase: f64, coupling: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::param("amplitude", "must be finite and non-negative"));
        }
        if !phase.is_finite() {
            return Err(Error::param("phase", "must be finite"));
        }
        if !(0.0..=1.0).contains(&coupling) {
            return Err(Error::param(
                "coupling",
                format!("{coupling} is outside [0, 1]"),
            ));
        }
        Ok(Self {
            amplitude,
            phase: fock::wrap_phase(phase),
            coupling,
        })
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    pub fn xi(&self) -> f64 {
        fock::mixing_angle(self.coupling)
    }

    pub fn with_phase(&self, phase: f64) -> Self {
        Self {
            phase: fock::wrap_phase(phase),
            ..*self
        }
    }

    pub fn mean_lo_photons(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

/// Joint click outcome `(k_a, k_b)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct Outcome {
    pub k_a: usize,
    pub k_b: usize,
}

impl Outcome {
    pub const fn new(k_a: usize, k_b: usize) -> Self {
        Self { k_a, k_b }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    pub outcome: Outcome,
    pub matrix: CMatrix,
}

/// All joint-outcome elements for one LO setting, ordered `k_a` major.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmSet {
    pub setting: LoSetting,
    pub outcomes_a: usize,
    pub outcomes_b: usize,
    pub elements: Vec<PovmElement>,
    /// `‖Σ Π − I‖` in operator norm.
    pub defect: f64,
    /// Analytic bound on `defect` from the LO truncation.
    pub bound: f64,
}

impl PovmSet {
    pub fn dim(&self) -> usize {
        self.elements.first().map_or(0, |e| e.matrix.nrows())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index(&self, outcome: Outcome) -> usize {
        outcome.k_a * self.outcomes_b + outcome.k_b
    }

    pub fn element(&self, outcome: Outcome) -> Option<&PovmElement> {
        if outcome.k_a >= self.outcomes_a || outcome.k_b >= self.outcomes_b {
            return None;
        }
        self.elements.get(self.index(outcome))
    }

    pub fn sum(&self) -> CMatrix {
        let d = self.dim();
        self.elements
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, e| acc + &e.matrix)
    }

    /// `Tr[Π ρ]` for every outcome.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        Ok(self
            .elements
            .iter()
            .map(|e| trace_product(&e.matrix, rho.matrix()))
            .collect())
    }

    /// Same set for LO phase `θ + φ`, via `Π → e^{iφn} Π e^{−iφn}`.
    pub fn rotated(&self, phi: f64) -> PovmSet {
        PovmSet {
            setting: self.setting.with_phase(self.setting.phase + phi),
            elements: self
                .elements
                .iter()
                .map(|e| PovmElement {
                    outcome: e.outcome,
                    matrix: linalg::rotate_number_phase(&e.matrix, -phi),
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// `Re Tr[A B]` for Hermitian `A`, `B`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// `|χ⟩ = ⟨α|_a U† |n_a⟩|n_b⟩` at `R = 1/2`, built from the closed form
/// `e^{−|α|²/2} (α* − i b†)^{n_a} (b† − i α*)^{n_b} |0⟩ / √(2^{n_a+n_b} n_a! n_b!)`.
pub fn ideal_projector(
    n_a: usize,
    n_b: usize,
    alpha: Complex64,
    dim: HilbertDim,
) -> Result<StateVector> {
    if n_a + n_b > dim.n_max() {
        return Err(Error::param(
            "n_a + n_b",
            format!("{} exceeds the internal cutoff {}", n_a + n_b, dim.n_max()),
        ));
    }
    let bd = fock::creation(dim);
    let ac = alpha.conj();
    let minus_i = Complex64::new(0.0, -1.0);
    let mut v = CVector::zeros(dim.dim());
    v[0] = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 1..=n_b {
        v = (&bd * &v + v.scale(1.0) * (minus_i * ac)).unscale((2.0 * k as f64).sqrt());
    }
    for k in 1..=n_a {
        v = (v.clone() * ac + (&bd * &v) * minus_i).unscale((2.0 * k as f64).sqrt());
    }
    let deficit = (1.0 - v.norm_squared()).max(0.0);
    Ok(StateVector::with_deficit(v, deficit))
}

/// Two-mode output amplitudes `⟨n_a, N − n_a| U |α, m⟩` for every sector `N`
/// and signal photon number `m`.
struct OutputAmplitudes {
    /// `sectors[N][(n_a, m)]`.
    sectors: Vec<CMatrix>,
    lo_norm_sqr: f64,
}

impl OutputAmplitudes {
    fn new(alpha: Complex64, coupling: f64, trunc: &Truncation) -> Self {
        let lo = fock::coherent_state(alpha, trunc.internal());
        let sig = trunc.signal_dim();
        let max_total = trunc.internal_dim - 1 + trunc.n_max;
        let bs = BeamSplitter::from_coupling(coupling, max_total);
        let sectors = (0..=max_total)
            .map(|total| {
                let mut w = CMatrix::zeros(total + 1, sig);
                for m in 0..sig.min(total + 1) {
                    // the input |j, m⟩ of this sector has j = N − m
                    let j = total - m;
                    if j >= trunc.internal_dim {
                        continue;
                    }
                    let c = lo.amplitude(j);
                    for out_a in 0..=total {
                        w[(out_a, m)] = c * bs.amplitude(total, out_a, j);
                    }
                }
                w
            })
            .collect();
        Self {
            sectors,
            lo_norm_sqr: lo.norm_sqr(),
        }
    }

    fn max_total(&self) -> usize {
        self.sectors.len() - 1
    }

    fn sig_dim(&self) -> usize {
        self.sectors[0].ncols()
    }

    /// `Σ_s weight(n_a, n_b) conj(w_s) w_sᵀ`.
    fn accumulate(&self, weight: impl Fn(usize, usize) -> f64) -> CMatrix {
        let d = self.sig_dim();
        let mut pi = CMatrix::zeros(d, d);
        for (total, w) in self.sectors.iter().enumerate() {
            for out_a in 0..=total {
                let g = weight(out_a, total - out_a);
                if g == 0.0 {
                    continue;
                }
                for m in 0..d {
                    let wm = w[(out_a, m)].conj() * g;
                    if wm == ZERO {
                        continue;
                    }
                    for n in 0..d {
                        pi[(m, n)] += wm * w[(out_a, n)];
                    }
                }
            }
        }
        pi
    }
}

fn finish_element(outcome: Outcome, raw: CMatrix) -> Result<PovmElement> {
    let defect = linalg::hermiticity_defect(&raw);
    if defect > HERMITICITY_TOL {
        return Err(Error::Truncation(format!(
            "element {outcome:?} has Hermiticity defect {defect:.3e}"
        )));
    }
    let matrix = linalg::hermitize(&raw);
    let min = linalg::hermitian_eigenvalues(&matrix)[0];
    if min < POSITIVITY_FLOOR {
        return Err(Error::Truncation(format!(
            "element {outcome:?} has eigenvalue {min:.3e}"
        )));
    }
    Ok(PovmElement { outcome, matrix })
}

fn validate_inputs(
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    trunc: &Truncation,
) -> Result<()> {
    model_a.validate()?;
    model_b.validate()?;
    trunc.validate()
}

fn element_from(
    amps: &OutputAmplitudes,
    outcome: Outcome,
    resp_a: &nalgebra::DMatrix<f64>,
    resp_b: &nalgebra::DMatrix<f64>,
) -> Result<PovmElement> {
    let raw = amps.accumulate(|n_a, n_b| resp_a[(outcome.k_a, n_a)] * resp_b[(outcome.k_b, n_b)]);
    finish_element(outcome, raw)
}

/// One element `Π_{(k_a, k_b)}` built directly at the setting's phase.
pub fn povm_element(
    outcome: Outcome,
    setting: &LoSetting,
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    trunc: &Truncation,
) -> Result<PovmElement> {
    validate_inputs(model_a, model_b, trunc)?;
    if outcome.k_a >= model_a.outcomes() || outcome.k_b >= model_b.outcomes() {
        return Err(Error::param(
            "outcome",
            format!("{outcome:?} is not a detector outcome"),
        ));
    }
    let amps = OutputAmplitudes::new(setting.alpha(), setting.coupling, trunc);
    let photons = amps.max_total() + 1;
    element_from(
        &amps,
        outcome,
        &model_a.response_matrix(photons),
        &model_b.response_matrix(photons),
    )
}

fn build_set(
    alpha: Complex64,
    setting: &LoSetting,
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    trunc: &Truncation,
) -> Result<PovmSet> {
    validate_inputs(model_a, model_b, trunc)?;
    let amps = OutputAmplitudes::new(alpha, setting.coupling, trunc);
    let photons = amps.max_total() + 1;
    let resp_a = model_a.response_matrix(photons);
    let resp_b = model_b.response_matrix(photons);
    let outcomes: Vec<Outcome> = (0..model_a.outcomes())
        .flat_map(|k_a| (0..model_b.outcomes()).map(move |k_b| Outcome::new(k_a, k_b)))
        .collect();
    let elements = outcomes
        .par_iter()
        .map(|&o| element_from(&amps, o, &resp_a, &resp_b))
        .collect::<Result<Vec<_>>>()?;
    let mut set = PovmSet {
        setting: *setting,
        outcomes_a: model_a.outcomes(),
        outcomes_b: model_b.outcomes(),
        elements,
        defect: 0.0,
        bound: 2.0 * (1.0 - amps.lo_norm_sqr).max(0.0) + COMPLETENESS_SLACK,
    };
    let d = set.dim();
    set.defect = linalg::operator_norm(&(set.sum() - linalg::identity(d)));
    if set.defect > set.bound {
        return Err(Error::Truncation(format!(
            "completeness defect {:.3e} exceeds bound {:.3e}; increase internal_dim (now {}) for |alpha| = {}",
            set.defect, set.bound, trunc.internal_dim, setting.amplitude
        )));
    }
    Ok(set)
}

/// All joint-outcome elements for `setting`. Built at `θ = 0` and rotated.
pub fn povm_set(
    setting: &LoSetting,
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    trunc: &Truncation,
) -> Result<PovmSet> {
    let base_setting = setting.with_phase(0.0);
    let base = build_set(
        Complex64::new(setting.amplitude, 0.0),
        &base_setting,
        model_a,
        model_b,
        trunc,
    )?;
    Ok(if setting.phase == 0.0 {
        base
    } else {
        base.rotated(setting.phase)
    })
}

/// Same as [`povm_set`] but evaluated at the complex LO amplitude directly.
pub fn povm_set_direct(
    setting: &LoSetting,
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    trunc: &Truncation,
) -> Result<PovmSet> {
    build_set(setting.alpha(), setting, model_a, model_b, trunc)
}

/// POVM sets for many settings; settings sharing `(|α|, R)` reuse one build.
pub fn povm_sets(
    settings: &[LoSetting],
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    trunc: &Truncation,
) -> Result<Vec<PovmSet>> {
    let mut bases: Vec<PovmSet> = Vec::new();
    let mut out = Vec::with_capacity(settings.len());
    for s in settings {
        let base = match bases
            .iter()
            .find(|b| b.setting.amplitude == s.amplitude && b.setting.coupling == s.coupling)
        {
            Some(b) => b,
            None => {
                bases.push(povm_set(&s.with_phase(0.0), model_a, model_b, trunc)?);
                bases.last().expect("just pushed")
            }
        };
        out.push(if s.phase == 0.0 {
            base.clone()
        } else {
            base.rotated(s.phase)
        });
    }
    Ok(out)
}

/// `Π / Tr Π`, usable as a density operator.
pub fn normalize_element(element: &CMatrix) -> Result<DensityOperator> {
    let t = linalg::trace(element).re;
    if t.is_nan() || t <= 0.0 {
        return Err(Error::ZeroTrace);
    }
    DensityOperator::new(linalg::hermitize(&element.unscale(t)))
}

/// Relative uncertainties of the calibrated parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Uncertainties {
    /// Relative uncertainty of `⟨n_LO⟩ = |α|²`.
    pub n_lo: f64,
    pub eta_a: f64,
    pub eta_b: f64,
}

impl Uncertainties {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_lo", self.n_lo),
            ("eta_a", self.eta_a),
            ("eta_b", self.eta_b),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "uncertainty",
                    reason: format!("{name} = {v} must be non-negative"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExtremePovms {
    pub max: PovmSet,
    pub min: PovmSet,
}

fn scaled_efficiency(eta: f64, factor: f64, which: &str) -> f64 {
    let v = eta * factor;
    if !(0.0..=1.0).contains(&v) {
        warn!("{which} efficiency extreme {v} clipped to [0, 1]");
    }
    v.clamp(0.0, 1.0)
}

/// Extreme-parameter models: `(amplitude, model_a, model_b)` at the upper
/// (`sign = 1`) or lower (`sign = −1`) end of every uncertainty.
pub fn extreme_parameters(
    setting: &LoSetting,
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    unc: &Uncertainties,
    sign: f64,
) -> Result<(LoSetting, DetectorModel, DetectorModel)> {
    unc.validate()?;
    let n_lo = setting.mean_lo_photons() * (1.0 + sign * unc.n_lo);
    if n_lo < 0.0 {
        warn!("LO photon number extreme {n_lo} clipped to 0");
    }
    let s = LoSetting {
        amplitude: n_lo.max(0.0).sqrt(),
        ..*setting
    };
    let a = model_a.with_efficiency(scaled_efficiency(
        model_a.efficiency,
        1.0 + sign * unc.eta_a,
        "detector a",
    ))?;
    let b = model_b.with_efficiency(scaled_efficiency(
        model_b.efficiency,
        1.0 + sign * unc.eta_b,
        "detector b",
    ))?;
    Ok((s, a, b))
}

/// POVM sets at the all-upper and all-lower parameter extremes.
pub fn extreme_povm_sets(
    setting: &LoSetting,
    model_a: &DetectorModel,
    model_b: &DetectorModel,
    unc: &Uncertainties,
    trunc: &Truncation,
) -> Result<ExtremePovms> {
    let (s, a, b) = extreme_parameters(setting, model_a, model_b, unc, 1.0)?;
    let max = povm_set(&s, &a, &b, trunc)?;
    let (s, a, b) = extreme_parameters(setting, model_a, model_b, unc, -1.0)?;
    let min = povm_set(&s, &a, &b, trunc)?;
    Ok(ExtremePovms { max, min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::fock_state;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ideal() -> DetectorModel {
        DetectorModel::ideal(8)
    }

    #[test]
    fn vacuum_projector() {
        let chi = ideal_projector(0, 0, ZERO, HilbertDim::new(16)).unwrap();
        assert!((chi.amplitude(0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(chi.amplitudes().iter().skip(1).all(|c| c.norm() == 0.0));
    }

    #[test]
    fn single_photon_projector_by_hand() {
        // (α* − i b†)|0⟩ / √2 at α = 0 is −i|1⟩/√2
        let chi = ideal_projector(1, 0, ZERO, HilbertDim::new(16)).unwrap();
        assert!((chi.amplitude(1) - Complex64::new(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((chi.norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projector_rejects_cutoff_overflow() {
        assert!(ideal_projector(10, 7, ZERO, HilbertDim::new(16)).is_err());
    }

    #[test]
    fn general_construction_matches_closed_form() {
        let trunc = Truncation::default();
        let setting = LoSetting::new(1.2, 0.4, 0.5).unwrap();
        let set = povm_set(&setting, &ideal(), &ideal(), &trunc).unwrap();
        for n_a in 0..=2 {
            for n_b in 0..=2 {
                let chi = ideal_projector(n_a, n_b, setting.alpha(), trunc.internal())
                    .unwrap()
                    .truncated(9);
                let expect = linalg::outer(chi.amplitudes());
                let got = &set.element(Outcome::new(n_a, n_b)).unwrap().matrix;
                assert!(linalg::operator_norm(&(got - expect)) < 1e-10);
            }
        }
    }

    #[test]
    fn unit_coupling_decouples_signal() {
        let trunc = Truncation::default();
        let model_a = DetectorModel::tmd(0.6).unwrap();
        let model_b = DetectorModel::tmd(0.3).unwrap();
        let setting = LoSetting::new(1.0, 0.0, 1.0).unwrap();
        let set = povm_set(&setting, &model_a, &model_b, &trunc).unwrap();
        let lo = fock::coherent_state(setting.alpha(), trunc.internal());
        let lo_pops: Vec<f64> = lo.amplitudes().iter().map(|c| c.norm_sqr()).collect();
        let ra = model_a.response_matrix(17);
        let eb = crate::tmd::tmd_povm(&model_b, 9);
        for k_a in 0..9 {
            let weight: f64 = (0..17).map(|j| ra[(k_a, j)] * lo_pops[j]).sum();
            for (k_b, e) in eb.iter().enumerate() {
                let expect = e.scale(weight);
                let got = &set.element(Outcome::new(k_a, k_b)).unwrap().matrix;
                assert!(linalg::max_abs(&(got - expect)) < 1e-13);
            }
        }
    }

    #[test]
    fn vacuum_lo_no_photons() {
        let set = povm_set(
            &LoSetting::new(0.0, 0.0, 0.5).unwrap(),
            &ideal(),
            &ideal(),
            &Truncation::default(),
        )
        .unwrap();
        let e = &set.element(Outcome::new(0, 0)).unwrap().matrix;
        let vac = fock_state(0, HilbertDim::default()).unwrap().density();
        assert!(linalg::max_abs(&(e - vac.matrix())) < 1e-14);
        assert!(set.defect < 1e-12);
    }

    #[test]
    fn completeness_at_large_amplitude() {
        let trunc = Truncation::default();
        let a = DetectorModel::tmd(0.10).unwrap();
        let b = DetectorModel::tmd(0.15).unwrap();
        let set = povm_set(&LoSetting::new(1.5, 0.0, 0.5).unwrap(), &a, &b, &trunc).unwrap();
        assert_eq!(set.len(), 81);
        assert!(set.defect < 1e-5, "{}", set.defect);
        assert!(set.defect <= set.bound);
    }

    #[test]
    fn rotation_equals_direct_construction() {
        let trunc = Truncation::default();
        let a = DetectorModel::tmd(0.4).unwrap();
        let b = DetectorModel::tmd(0.7).unwrap();
        let s = LoSetting::new(0.9, 1.3, 0.3).unwrap();
        let rotated = povm_set(&s, &a, &b, &trunc).unwrap();
        let direct = povm_set_direct(&s, &a, &b, &trunc).unwrap();
        for (x, y) in rotated.elements.iter().zip(&direct.elements) {
            assert!(linalg::max_abs(&(&x.matrix - &y.matrix)) < 1e-12);
        }
    }

    #[test]
    fn single_element_matches_set() {
        let trunc = Truncation::default();
        let a = DetectorModel::tmd(0.9).unwrap();
        let s = LoSetting::new(1.5, 0.2, 0.5).unwrap();
        let set = povm_set(&s, &a, &a, &trunc).unwrap();
        let one = povm_element(Outcome::new(1, 3), &s, &a, &a, &trunc).unwrap();
        assert!(
            linalg::max_abs(&(&set.element(Outcome::new(1, 3)).unwrap().matrix - one.matrix))
                < 1e-12
        );
        assert!(povm_element(Outcome::new(9, 0), &s, &a, &a, &trunc).is_err());
    }

    #[test]
    fn normalization() {
        let rho = normalize_element(&linalg::identity(9)).unwrap();
        assert!(linalg::max_abs(&(rho.matrix() - linalg::identity(9).unscale(9.0))) < 1e-15);
        assert!(matches!(
            normalize_element(&CMatrix::zeros(9, 9)),
            Err(Error::ZeroTrace)
        ));
    }

    #[test]
    fn extremes_collapse_without_uncertainty() {
        let trunc = Truncation::default();
        let a = DetectorModel::tmd(0.10).unwrap();
        let b = DetectorModel::tmd(0.15).unwrap();
        let s = LoSetting::new(0.5, 0.0, 0.5).unwrap();
        let nominal = povm_set(&s, &a, &b, &trunc).unwrap();
        let ext = extreme_povm_sets(&s, &a, &b, &Uncertainties::default(), &trunc).unwrap();
        assert_eq!(ext.max, nominal);
        assert_eq!(ext.min, nominal);
    }

    #[test]
    fn extreme_efficiencies_are_clipped() {
        let a = DetectorModel::tmd(0.95).unwrap();
        let s = LoSetting::new(0.5, 0.0, 0.5).unwrap();
        let unc = Uncertainties {
            n_lo: 0.0,
            eta_a: 0.1,
            eta_b: 0.1,
        };
        let (_, hi, _) = extreme_parameters(&s, &a, &a, &unc, 1.0).unwrap();
        assert_eq!(hi.efficiency, 1.0);
    }

    #[test]
    fn setting_validation() {
        assert!(LoSetting::new(-1.0, 0.0, 0.5).is_err());
        assert!(LoSetting::new(1.0, 0.0, 1.5).is_err());
        let s = LoSetting::new(1.0, -0.5, 0.5).unwrap();
        assert!(s.phase >= 0.0 && s.phase < 2.0 * std::f64::consts::PI);
    }
}
