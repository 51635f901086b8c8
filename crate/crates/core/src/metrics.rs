//! Figures of merit and ideal reference states.

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{self, DensityOperator, HilbertDim};
use crate::linalg::{self, CMatrix};

/// Eigenvalues in `[−CLIP, 0)` are treated as zero when taking square roots.
pub const EIGENVALUE_CLIP: f64 = 1e-10;
/// Tolerance on unit trace for fidelity and overlap inputs.
pub const TRACE_TOL: f64 = 1e-6;
/// First off-diagonal magnitude below which a state carries no phase.
pub const PHASE_THRESHOLD: f64 = 1e-9;

fn clipped_eigen(m: &CMatrix) -> Result<(nalgebra::DVector<f64>, CMatrix)> {
    let (mut values, vectors) = linalg::hermitian_eigen(m);
    if values[0] < -EIGENVALUE_CLIP {
        return Err(Error::NotPositive {
            min_eigenvalue: values[0],
        });
    }
    values.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok((values, vectors))
}

fn check_unit_trace(rho: &DensityOperator) -> Result<()> {
    let t = rho.trace();
    if (t - 1.0).abs() > TRACE_TOL {
        return Err(Error::NotNormalized { trace: t });
    }
    Ok(())
}

fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = clipped_eigen(m)?;
    Ok(linalg::from_eigen(&values.map(f64::sqrt), &vectors))
}

/// Uhlmann fidelity `(Tr √(√ρ₁ ρ₂ √ρ₁))²`.
pub fn fidelity(rho1: &DensityOperator, rho2: &DensityOperator) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho1.dim(),
            found: rho2.dim(),
        });
    }
    check_unit_trace(rho1)?;
    check_unit_trace(rho2)?;
    let s = psd_sqrt(rho1.matrix())?;
    let inner = &s * rho2.matrix() * &s;
    // √ρ₁ ρ₂ √ρ₁ is PSD up to roundoff of the products
    let (values, _) = linalg::hermitian_eigen(&inner);
    let root_trace: f64 = values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(root_trace * root_trace)
}

/// `p = Tr[Π_norm ρ_target]`.
pub fn overlap(normalized_element: &DensityOperator, target: &DensityOperator) -> Result<f64> {
    if normalized_element.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: normalized_element.dim(),
            found: target.dim(),
        });
    }
    check_unit_trace(normalized_element)?;
    check_unit_trace(target)?;
    let p: Complex64 = (normalized_element.matrix() * target.matrix()).trace();
    if p.im.abs() > 1e-10 {
        return Err(Error::Format(format!(
            "overlap has imaginary part {:.3e}",
            p.im
        )));
    }
    Ok(p.re)
}

/// `⟨n⟩ = Σ n ρ_nn`.
pub fn mean_photon_number(rho: &DensityOperator) -> f64 {
    rho.populations()
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}

/// Mean photon number with the half-spread of two extreme reconstructions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhotonNumberEstimate {
    pub mean: f64,
    pub uncertainty: f64,
}

pub fn mean_photon_number_with_band(
    rho: &DensityOperator,
    rho_max: &DensityOperator,
    rho_min: &DensityOperator,
) -> PhotonNumberEstimate {
    let hi = mean_photon_number(rho_max);
    let lo = mean_photon_number(rho_min);
    PhotonNumberEstimate {
        mean: mean_photon_number(rho),
        uncertainty: 0.5 * (hi - lo).abs(),
    }
}

/// Phase from the magnitude-weighted first off-diagonal,
/// `θ = arg Σ_n |ρ_{n,n+1}| ρ_{n,n+1}`, matching `ρ_{n,m} ∝ e^{−i(n−m)θ}`.
pub fn estimate_phase(rho: &DensityOperator) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut largest = 0.0f64;
    for n in 0..rho.dim().saturating_sub(1) {
        let c = rho.entry(n, n + 1);
        largest = largest.max(c.norm());
        acc += c * c.norm();
    }
    if largest < PHASE_THRESHOLD {
        return Err(Error::UndefinedPhase {
            threshold: PHASE_THRESHOLD,
        });
    }
    Ok(fock::wrap_phase(acc.arg()))
}

/// `ρ_{n,m} = ⟨n⟩^{(n+m)/2} e^{−⟨n⟩} e^{−i(n−m)θ} / √(n! m!)`, i.e. the
/// coherent state with `α = √⟨n⟩ e^{−iθ}`, truncated (trace may fall below 1).
pub fn ideal_coherent_dm(mean_n: f64, theta: f64, dim: HilbertDim) -> Result<DensityOperator> {
    if !(mean_n.is_finite() && mean_n >= 0.0) {
        return Err(Error::param("mean_n", "must be finite and non-negative"));
    }
    if !theta.is_finite() {
        return Err(Error::param("theta", "must be finite"));
    }
    let state = fock::coherent_state(Complex64::from_polar(mean_n.sqrt(), -theta), dim);
    if state.truncation_unsafe() {
        warn!(
            "coherent reference with <n> = {mean_n} loses {:.2e} to truncation",
            state.norm_deficit()
        );
    }
    Ok(state.density())
}

/// Ideal phase-averaged coherent state (diagonal Poisson).
pub fn ideal_phase_averaged_dm(mean_n: f64, dim: HilbertDim) -> Result<DensityOperator> {
    fock::phase_averaged_dm(mean_n, dim)
}

/// Fidelity and variance `Δ = 1 − F`, with optional state estimates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeritReport {
    pub fidelity: f64,
    pub variance: f64,
    pub mean_photon_number: Option<f64>,
    pub phase: Option<f64>,
}

impl MeritReport {
    pub fn from_fidelity(fidelity: f64) -> Result<Self> {
        if !(fidelity.is_finite() && (0.0..=1.0 + 1e-9).contains(&fidelity)) {
            return Err(Error::param(
                "fidelity",
                format!("{fidelity} is outside [0, 1]"),
            ));
        }
        Ok(Self {
            fidelity,
            variance: 1.0 - fidelity,
            mean_photon_number: None,
            phase: None,
        })
    }
}
