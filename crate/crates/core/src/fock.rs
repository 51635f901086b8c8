//! Truncated Fock-space states and operators.
//!
//! Basis index equals photon number. Two-mode operators use the product
//! basis `|n_a, n_b⟩` flattened as `n_a * dim_b + n_b` (mode a major).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ZERO};

/// Hermiticity tolerance for density operators.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Unitarity tolerance for beam-splitter blocks.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Norm deficit above which a truncated state is reported as unsafe.
pub const TRUNCATION_WARNING: f64 = 1e-3;
/// Cat amplitudes below this are treated as the vacuum limit.
pub const CAT_VACUUM_LIMIT: f64 = 1e-6;

/// Tolerances used when validating constructed states and operators.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub eigenvalue_floor: f64,
    pub unitarity: f64,
    pub truncation_warning: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: HERMITICITY_TOL,
            eigenvalue_floor: EIGENVALUE_FLOOR,
            unitarity: UNITARITY_TOL,
            truncation_warning: TRUNCATION_WARNING,
        }
    }
}

/// Single-mode truncation: photon numbers `0..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct HilbertDim {
    n_max: usize,
}

impl HilbertDim {
    pub const fn new(n_max: usize) -> Self {
        Self { n_max }
    }

    pub fn from_dim(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        Ok(Self { n_max: dim - 1 })
    }

    pub const fn n_max(self) -> usize {
        self.n_max
    }

    pub const fn dim(self) -> usize {
        self.n_max + 1
    }
}

impl Default for HilbertDim {
    fn default() -> Self {
        Self::new(8)
    }
}

/// Pure state in a truncated single mode, possibly with norm below one.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
    norm_deficit: f64,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::param("amplitudes", "empty state vector"));
        }
        if amplitudes
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::param("amplitudes", "non-finite entry"));
        }
        let norm_sqr = amplitudes.norm_squared();
        if norm_sqr > 1.0 + 1e-9 {
            return Err(Error::param(
                "amplitudes",
                format!("squared norm {norm_sqr} exceeds 1"),
            ));
        }
        Ok(Self {
            amplitudes,
            norm_deficit: (1.0 - norm_sqr).max(0.0),
        })
    }

    /// Unchecked constructor for states whose deficit is known analytically.
    pub(crate) fn with_deficit(amplitudes: CVector, norm_deficit: f64) -> Self {
        Self {
            amplitudes,
            norm_deficit,
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> Complex64 {
        self.amplitudes.get(n).copied().unwrap_or(ZERO)
    }

    /// Probability weight lost to truncation, `1 - Σ|c_n|²`.
    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn truncation_unsafe(&self) -> bool {
        self.norm_deficit > TRUNCATION_WARNING
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let norm = self.amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::param("state", "zero vector cannot be normalized"));
        }
        Ok(Self::with_deficit(self.amplitudes.unscale(norm), 0.0))
    }

    /// First `dim` amplitudes; the dropped weight is added to the deficit.
    pub fn truncated(&self, dim: usize) -> StateVector {
        let keep = dim.min(self.dim());
        let head = self.amplitudes.rows(0, keep).into_owned();
        let dropped = self.norm_sqr() - head.norm_squared();
        Self::with_deficit(head, self.norm_deficit + dropped.max(0.0))
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_matrix_unchecked(linalg::outer(&self.amplitudes))
    }
}

/// Truncated single-mode density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity and positivity with the default tolerances.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.is_empty() {
            return Err(Error::param("matrix", "empty operator"));
        }
        if matrix
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::param("matrix", "non-finite entry"));
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > tol.hermiticity {
            return Err(Error::NotHermitian { defect });
        }
        let matrix = linalg::hermitize(&matrix);
        let min_eigenvalue = linalg::hermitian_eigenvalues(&matrix)[0];
        if min_eigenvalue < tol.eigenvalue_floor {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn entry(&self, n: usize, m: usize) -> Complex64 {
        self.matrix[(n, m)]
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
            .iter()
            .copied()
            .collect()
    }

    /// Photon-number distribution (diagonal entries).
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|c| c.re).collect()
    }

    /// Phase-space rotation `e^{-iφn̂} ρ e^{iφn̂}`.
    pub fn rotated(&self, phi: f64) -> DensityOperator {
        Self::from_matrix_unchecked(linalg::rotate_number_phase(&self.matrix, phi))
    }

    /// Copy scaled to unit trace.
    pub fn normalized(&self) -> Result<DensityOperator> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::ZeroTrace);
        }
        Ok(Self::from_matrix_unchecked(self.matrix.unscale(t)))
    }

    /// Leading `dim × dim` block.
    pub fn truncated(&self, dim: usize) -> DensityOperator {
        Self::from_matrix_unchecked(linalg::project(&self.matrix, dim.min(self.dim())))
    }

    pub fn maximally_mixed(dim: usize) -> DensityOperator {
        Self::from_matrix_unchecked(linalg::identity(dim).unscale(dim as f64))
    }
}

/// Operator on two truncated modes, index `n_a * dim_b + n_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeOperator {
    dim_a: HilbertDim,
    dim_b: HilbertDim,
    matrix: CMatrix,
    /// Total-photon sectors that are cut by the truncation.
    straddling_sectors: Vec<usize>,
}

impl TwoModeOperator {
    pub fn dim_a(&self) -> HilbertDim {
        self.dim_a
    }

    pub fn dim_b(&self) -> HilbertDim {
        self.dim_b
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn straddling_sectors(&self) -> &[usize] {
        &self.straddling_sectors
    }

    pub fn index(&self, n_a: usize, n_b: usize) -> usize {
        n_a * self.dim_b.dim() + n_b
    }

    pub fn modes(&self, index: usize) -> (usize, usize) {
        (index / self.dim_b.dim(), index % self.dim_b.dim())
    }
}

/// Coherent state `|α⟩` truncated at `dim`.
pub fn coherent_state(alpha: Complex64, dim: HilbertDim) -> StateVector {
    let mut amps = CVector::zeros(dim.dim());
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps[0] = c;
    for n in 1..dim.dim() {
        c = c * alpha / (n as f64).sqrt();
        amps[n] = c;
    }
    let deficit = (1.0 - amps.norm_squared()).max(0.0);
    StateVector::with_deficit(amps, deficit)
}

pub fn fock_state(n: usize, dim: HilbertDim) -> Result<StateVector> {
    if n > dim.n_max() {
        return Err(Error::param(
            "n",
            format!("photon number {n} exceeds n_max {}", dim.n_max()),
        ));
    }
    let mut amps = CVector::zeros(dim.dim());
    amps[n] = linalg::ONE;
    Ok(StateVector::with_deficit(amps, 0.0))
}

/// Truncated annihilation operator, `⟨n-1|b|n⟩ = √n`.
pub fn annihilation(dim: HilbertDim) -> CMatrix {
    let d = dim.dim();
    CMatrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

pub fn creation(dim: HilbertDim) -> CMatrix {
    annihilation(dim).adjoint()
}

pub fn number_operator(dim: HilbertDim) -> CMatrix {
    linalg::real_diagonal((0..dim.dim()).map(|n| n as f64))
}

/// Mixing angle for a given LO coupling, `R = cos²ξ`.
pub fn mixing_angle(coupling: f64) -> f64 {
    coupling.clamp(0.0, 1.0).sqrt().acos()
}

/// Beam splitter `exp(iξ(b†a + a†b))` stored as exact blocks per total
/// photon number `N`. Block `N` acts on the basis `|n_a, N - n_a⟩`
/// indexed by `n_a`.
#[derive(Debug, Clone)]
pub struct BeamSplitter {
    xi: f64,
    blocks: Vec<CMatrix>,
}

impl BeamSplitter {
    pub fn new(xi: f64, max_total: usize) -> Self {
        let blocks = (0..=max_total).map(|n| sector_unitary(xi, n)).collect();
        Self { xi, blocks }
    }

    pub fn from_coupling(coupling: f64, max_total: usize) -> Self {
        Self::new(mixing_angle(coupling), max_total)
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn sector(&self, total: usize) -> &CMatrix {
        &self.blocks[total]
    }

    /// `⟨out_a, N - out_a| U |in_a, N - in_a⟩`.
    pub fn amplitude(&self, total: usize, out_a: usize, in_a: usize) -> Complex64 {
        self.blocks[total][(out_a, in_a)]
    }
}

/// Real symmetric generator `b†a + a†b` restricted to sector `N`.
pub(crate) fn sector_generator(total: usize) -> DMatrix<f64> {
    let d = total + 1;
    let mut h = DMatrix::<f64>::zeros(d, d);
    // a†b |n_a, N - n_a⟩ = √(n_a + 1) √(N - n_a) |n_a + 1, N - n_a - 1⟩
    for n_a in 0..total {
        let v = ((n_a + 1) as f64).sqrt() * ((total - n_a) as f64).sqrt();
        h[(n_a + 1, n_a)] = v;
        h[(n_a, n_a + 1)] = v;
    }
    h
}

fn sector_unitary(xi: f64, total: usize) -> CMatrix {
    let d = total + 1;
    if d == 1 {
        return linalg::identity(1);
    }
    let eig = sector_generator(total).symmetric_eigen();
    let mut u = CMatrix::zeros(d, d);
    for k in 0..d {
        let phase = Complex64::from_polar(1.0, xi * eig.eigenvalues[k]);
        for i in 0..d {
            let vik = eig.eigenvectors[(i, k)] * phase;
            for j in 0..d {
                u[(i, j)] += vik * eig.eigenvectors[(j, k)];
            }
        }
    }
    u
}

/// Dense two-mode beam-splitter matrix on `dim_a ⊗ dim_b`.
///
/// Sectors with `N ≤ min(n_max_a, n_max_b)` are exact; larger sectors are
/// cut by the truncation and listed in `straddling_sectors`.
pub fn beam_splitter_unitary(xi: f64, dim_a: HilbertDim, dim_b: HilbertDim) -> TwoModeOperator {
    let max_total = dim_a.n_max() + dim_b.n_max();
    let bs = BeamSplitter::new(xi, max_total);
    let size = dim_a.dim() * dim_b.dim();
    let mut matrix = CMatrix::zeros(size, size);
    let idx = |n_a: usize, n_b: usize| n_a * dim_b.dim() + n_b;
    for total in 0..=max_total {
        let lo = total.saturating_sub(dim_b.n_max());
        let hi = total.min(dim_a.n_max());
        for out_a in lo..=hi {
            for in_a in lo..=hi {
                matrix[(idx(out_a, total - out_a), idx(in_a, total - in_a))] =
                    bs.amplitude(total, out_a, in_a);
            }
        }
    }
    let exact = dim_a.n_max().min(dim_b.n_max());
    TwoModeOperator {
        dim_a,
        dim_b,
        matrix,
        straddling_sectors: ((exact + 1)..=max_total).collect(),
    }
}

/// Displacement operator `D(α)` with a flag for truncation safety.
#[derive(Debug, Clone)]
pub struct Displacement {
    pub matrix: CMatrix,
    /// Set when `|α|²` exceeds `n_max / 2`.
    pub truncation_unsafe: bool,
}

/// `D(α)` truncated to `dim`, from the closed-form Laguerre matrix elements.
pub fn displacement_operator(alpha: Complex64, dim: HilbertDim) -> Displacement {
    Displacement {
        matrix: displacement_block(alpha, dim.dim(), dim.dim()),
        truncation_unsafe: alpha.norm_sqr() > dim.n_max() as f64 / 2.0,
    }
}

/// Rows `0..rows`, columns `0..cols` of the untruncated `D(α)`.
pub fn displacement_block(alpha: Complex64, rows: usize, cols: usize) -> CMatrix {
    let lf = LnFactorial::up_to(rows.max(cols));
    CMatrix::from_fn(rows, cols, |m, n| displacement_element(alpha, m, n, &lf))
}

/// Table of `ln n!`.
#[derive(Debug, Clone)]
pub(crate) struct LnFactorial(Vec<f64>);

impl LnFactorial {
    pub(crate) fn up_to(n: usize) -> Self {
        let mut t = Vec::with_capacity(n + 1);
        t.push(0.0);
        for k in 1..=n {
            t.push(t[k - 1] + (k as f64).ln());
        }
        Self(t)
    }

    pub(crate) fn get(&self, n: usize) -> f64 {
        self.0[n]
    }
}

/// Generalized Laguerre polynomial `L_n^{(k)}(x)` by upward recurrence.
pub(crate) fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let k = k as f64;
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 + k - x) * cur - (j + k) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

pub(crate) fn displacement_element(
    alpha: Complex64,
    m: usize,
    n: usize,
    lf: &LnFactorial,
) -> Complex64 {
    let x = alpha.norm_sqr();
    let (small, big, base) = if m >= n {
        (n, m, alpha)
    } else {
        (m, n, -alpha.conj())
    };
    let k = big - small;
    let lag = laguerre(small, k, x);
    if k == 0 {
        return Complex64::new((-x / 2.0).exp() * lag, 0.0);
    }
    if x == 0.0 {
        return ZERO;
    }
    let log_mag = 0.5 * (lf.get(small) - lf.get(big)) + k as f64 * x.sqrt().ln() - x / 2.0;
    Complex64::from_polar(log_mag.exp() * lag, k as f64 * base.arg())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Cat state `∝ |α⟩ ± |−α⟩`, normalized after truncation.
pub fn cat_state(alpha: Complex64, parity: Parity, dim: HilbertDim) -> Result<StateVector> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::param("alpha", "non-finite amplitude"));
    }
    if alpha.norm() < CAT_VACUUM_LIMIT {
        return match parity {
            Parity::Even => fock_state(0, dim),
            Parity::Odd => Err(Error::param(
                "alpha",
                format!(
                    "odd cat with |alpha| < {CAT_VACUUM_LIMIT:e} has no normalizable truncation"
                ),
            )),
        };
    }
    let coherent = coherent_state(alpha, dim);
    let keep_odd = parity == Parity::Odd;
    let amps = CVector::from_iterator(
        dim.dim(),
        coherent.amplitudes().iter().enumerate().map(|(n, &c)| {
            if (n % 2 == 1) == keep_odd {
                c
            } else {
                ZERO
            }
        }),
    );
    let norm = amps.norm();
    if norm == 0.0 {
        return Err(Error::param(
            "dim",
            "truncation removes all support of the cat state",
        ));
    }
    Ok(StateVector::with_deficit(amps.unscale(norm), 0.0))
}

/// Displaced cat `D(δ)(|β⟩ ± |−β⟩)`, normalized in the untruncated space;
/// the deficit records the truncated tail.
pub fn displaced_cat_state(
    beta: Complex64,
    delta: Complex64,
    parity: Parity,
    dim: HilbertDim,
) -> Result<StateVector> {
    if ![beta.re, beta.im, delta.re, delta.im]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::param("beta", "non-finite amplitude"));
    }
    if beta.norm() < CAT_VACUUM_LIMIT && parity == Parity::Odd {
        return Err(Error::param(
            "beta",
            format!("odd cat with |beta| < {CAT_VACUUM_LIMIT:e} is not normalizable"),
        ));
    }
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    // D(δ)|±β⟩ = e^{±i Im(δβ*)} |δ ± β⟩
    let phase = Complex64::from_polar(1.0, (delta * beta.conj()).im);
    let (plus, minus) = (delta + beta, delta - beta);
    let cross = (-(plus.norm_sqr() + minus.norm_sqr()) / 2.0 + plus.conj() * minus).exp();
    let norm_sqr = 2.0 + 2.0 * sign * (phase.conj() * phase.conj() * cross).re;
    if norm_sqr <= 0.0 {
        return Err(Error::param("beta", "cat superposition cancels"));
    }
    let a = coherent_state(plus, dim);
    let b = coherent_state(minus, dim);
    let amps =
        (a.amplitudes() * phase + b.amplitudes() * (phase.conj() * sign)).unscale(norm_sqr.sqrt());
    let deficit = (1.0 - amps.norm_squared()).max(0.0);
    Ok(StateVector::with_deficit(amps, deficit))
}

/// Squeezed vacuum `S(r e^{iφ})|0⟩`; the deficit records the truncated tail.
pub fn squeezed_vacuum(r: f64, phi: f64, dim: HilbertDim) -> Result<StateVector> {
    if !(r.is_finite() && phi.is_finite()) {
        return Err(Error::param("r", "squeezing parameters must be finite"));
    }
    let ratio = -Complex64::from_polar(r.tanh(), phi);
    let mut amps = CVector::zeros(dim.dim());
    let mut c = Complex64::new(1.0 / r.cosh().sqrt(), 0.0);
    let mut pair = 0usize;
    while 2 * pair <= dim.n_max() {
        amps[2 * pair] = c;
        // c_{2n+2} / c_{2n} = √((2n+1)(2n+2)) / (2(n+1)) · (−e^{iφ} tanh r)
        let n = pair as f64;
        c = c * ratio * (((2.0 * n + 1.0) * (2.0 * n + 2.0)).sqrt() / (2.0 * (n + 1.0)));
        pair += 1;
    }
    let deficit = (1.0 - amps.norm_squared()).max(0.0);
    Ok(StateVector::with_deficit(amps, deficit))
}

/// Poisson mixture of Fock states, the phase average of a coherent state.
pub fn phase_averaged_dm(mean_n: f64, dim: HilbertDim) -> Result<DensityOperator> {
    if !(mean_n.is_finite() && mean_n >= 0.0) {
        return Err(Error::param("mean_n", "must be finite and non-negative"));
    }
    Ok(DensityOperator::from_matrix_unchecked(
        linalg::real_diagonal(poisson_weights(mean_n, dim.dim())),
    ))
}

/// `e^{-λ} λ^n / n!` for `n < len`.
pub(crate) fn poisson_weights(lambda: f64, len: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(len);
    let mut p = (-lambda).exp();
    for n in 0..len {
        if n > 0 {
            p *= lambda / n as f64;
        }
        w.push(p);
    }
    w
}

/// Phase-space angle of a coherent amplitude, in `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent tail sum `Σ_{n>8} e^{-λ} λ^n / n!`, summed from the far end.
    fn poisson_tail(lambda: f64, from: usize) -> f64 {
        let mut terms = Vec::new();
        let mut p = (-lambda).exp();
        for n in 0..200 {
            if n > 0 {
                p *= lambda / n as f64;
            }
            if n >= from {
                terms.push(p);
            }
        }
        terms.iter().rev().sum()
    }

    #[test]
    fn vacuum_coherent_state() {
        let s = coherent_state(c(0.0, 0.0), HilbertDim::default());
        assert_eq!(s.amplitude(0), c(1.0, 0.0));
        assert_eq!(s.norm_deficit(), 0.0);
    }

    #[test]
    fn coherent_deficit_is_poisson_tail() {
        let s = coherent_state(c(1.5, 0.0), HilbertDim::default());
        let tail = poisson_tail(2.25, 9);
        assert!(
            (s.norm_deficit() - tail).abs() < 1e-14,
            "{} vs {tail}",
            s.norm_deficit()
        );
        let mean: f64 = (0..9).map(|n| n as f64 * s.amplitude(n).norm_sqr()).sum();
        let mut p = (-2.25f64).exp();
        let mut tail_mean = 0.0;
        for n in 1..200 {
            p *= 2.25 / n as f64;
            if n >= 9 {
                tail_mean += n as f64 * p;
            }
        }
        assert!((mean + tail_mean - 2.25).abs() < 1e-12);
    }

    #[test]
    fn fock_states_are_orthonormal() {
        let dim = HilbertDim::default();
        for m in 0..9 {
            for n in 0..9 {
                let ip = fock_state(m, dim)
                    .unwrap()
                    .inner(&fock_state(n, dim).unwrap());
                assert_eq!(ip, if m == n { c(1.0, 0.0) } else { c(0.0, 0.0) });
            }
        }
        assert!(fock_state(9, dim).is_err());
        assert_eq!(fock_state(8, dim).unwrap().amplitude(8), c(1.0, 0.0));
    }

    #[test]
    fn ladder_operators() {
        let dim = HilbertDim::default();
        let b = annihilation(dim);
        let v0 = fock_state(0, dim).unwrap();
        let v1 = fock_state(1, dim).unwrap();
        assert_eq!((&b * v0.amplitudes()).norm(), 0.0);
        assert!((&b * v1.amplitudes() - v0.amplitudes()).norm() < 1e-15);
        let bd = creation(dim);
        let comm = &b * &bd - &bd * &b;
        for i in 0..9 {
            for j in 0..9 {
                let expect = if i == j && i < 8 { 1.0 } else { 0.0 };
                if i < 8 || j < 8 {
                    assert!((comm[(i, j)] - c(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
        // the truncation edge carries the whole defect
        assert!((comm[(8, 8)] - c(-8.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn beam_splitter_identity_at_zero() {
        let u = beam_splitter_unitary(0.0, HilbertDim::new(3), HilbertDim::new(3));
        assert!((u.matrix() - linalg::identity(16)).norm() < 1e-14);
    }

    #[test]
    fn beam_splitter_single_photon() {
        let dim = HilbertDim::new(3);
        let u = beam_splitter_unitary(FRAC_PI_4, dim, dim);
        let input = u.index(0, 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u.matrix()[(u.index(0, 1), input)] - c(s, 0.0)).norm() < 1e-14);
        assert!((u.matrix()[(u.index(1, 0), input)] - c(0.0, s)).norm() < 1e-14);
    }

    #[test]
    fn hong_ou_mandel() {
        let dim = HilbertDim::new(3);
        let u = beam_splitter_unitary(FRAC_PI_4, dim, dim);
        let i11 = u.index(1, 1);
        assert!(u.matrix()[(i11, i11)].norm() < 1e-14);
    }

    #[test]
    fn two_mode_index_round_trip() {
        let u = beam_splitter_unitary(0.3, HilbertDim::new(4), HilbertDim::new(2));
        for idx in 0..15 {
            let (a, b) = u.modes(idx);
            assert_eq!(u.index(a, b), idx);
        }
        assert_eq!(u.index(1, 0), 3);
        assert_eq!(u.straddling_sectors(), &[3, 4, 5, 6]);
    }

    #[test]
    fn squeezed_and_cat_limits() {
        let dim = HilbertDim::default();
        let s = squeezed_vacuum(0.0, 0.3, dim).unwrap();
        assert!((s.amplitude(0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(s.norm_deficit() < 1e-15);
        let s = squeezed_vacuum(0.5, 0.0, dim).unwrap();
        assert!(s
            .amplitudes()
            .iter()
            .skip(1)
            .step_by(2)
            .all(|a| a.norm() == 0.0));

        let odd = cat_state(c(1e-4, 0.0), Parity::Odd, dim).unwrap();
        assert!((odd.amplitude(1).norm() - 1.0).abs() < 1e-7);
        assert!(cat_state(c(1e-8, 0.0), Parity::Odd, dim).is_err());
        let even = cat_state(c(1e-8, 0.0), Parity::Even, dim).unwrap();
        assert_eq!(even.amplitude(0), c(1.0, 0.0));
    }

    #[test]
    fn phase_averaged_vacuum_weight() {
        let rho = phase_averaged_dm(1.0, HilbertDim::default()).unwrap();
        assert!((rho.entry(0, 0).re - (-1.0f64).exp()).abs() < 1e-15);
        assert!((rho.entry(0, 0).re - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn displacement_basics() {
        let dim = HilbertDim::default();
        let d0 = displacement_operator(c(0.0, 0.0), dim);
        assert!((d0.matrix - linalg::identity(9)).norm() < 1e-15);
        let alpha = c(0.8, -0.5);
        let d = displacement_operator(alpha, dim);
        let coh = coherent_state(alpha, dim);
        assert!((d.matrix.column(0) - coh.amplitudes()).norm() < 1e-14);
        assert!(!d.truncation_unsafe);
        assert!(displacement_operator(c(2.5, 0.0), dim).truncation_unsafe);
    }

    #[test]
    fn density_validation() {
        let mut m = linalg::identity(2);
        m[(0, 1)] = c(0.0, 1e-6);
        assert!(matches!(
            DensityOperator::new(m),
            Err(Error::NotHermitian { .. })
        ));
        let m = linalg::real_diagonal([1.0, -0.1]);
        assert!(matches!(
            DensityOperator::new(m),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn displaced_cat_matches_operator_path() {
        let big = HilbertDim::new(60);
        let (beta, delta) = (c(1.1, 0.2), c(-0.3, 0.6));
        for parity in [Parity::Even, Parity::Odd] {
            let cat = cat_state(beta, parity, big).unwrap();
            let d = displacement_operator(delta, big);
            let expect = &d.matrix * cat.amplitudes();
            let got = displaced_cat_state(beta, delta, parity, big).unwrap();
            assert!((got.amplitudes() - &expect).norm() < 1e-10);
            let small = displaced_cat_state(beta, delta, parity, HilbertDim::default()).unwrap();
            assert!((small.norm_sqr() + small.norm_deficit() - 1.0).abs() < 1e-12);
            assert!(small.norm_deficit() > 0.0);
        }
        assert!(displaced_cat_state(c(0.0, 0.0), delta, Parity::Odd, big).is_err());
    }
}
