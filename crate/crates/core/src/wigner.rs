//! Wigner functions by displaced parity.
//!
//! Convention: `ħ = 1`, `α = (x + ip)/√2`, `∬ W dx dp = 1`, so the vacuum
//! peaks at `1/π`. Each point evaluates
//! `W(x, p) = (1/π) Σ_k (−1)^k ⟨k| D†(α) ρ D(α) |k⟩`, where the sum over `k`
//! runs over the untruncated displaced basis (`D` columns from the closed
//! Laguerre form), so the result is exact for the truncated `ρ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{displacement_element, DensityOperator, LnFactorial};

pub const CONVENTION: &str = "hbar=1; alpha=(x+ip)/sqrt(2); integral W dx dp = 1";
pub const DEFAULT_EXTENT: f64 = 4.0;
pub const DEFAULT_POINTS: usize = 161;

/// Rectangular `(x, p)` grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub x_points: usize,
    pub p_points: usize,
}

impl Default for PhaseSpaceGrid {
    fn default() -> Self {
        Self::square(DEFAULT_EXTENT, DEFAULT_POINTS)
    }
}

impl PhaseSpaceGrid {
    pub fn square(extent: f64, points: usize) -> Self {
        Self {
            x_min: -extent,
            x_max: extent,
            p_min: -extent,
            p_max: extent,
            x_points: points,
            p_points: points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.p_min, self.p_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.p_min >= self.p_max {
            return Err(Error::param("grid", "ranges must be finite and increasing"));
        }
        if self.x_points < 2 || self.p_points < 2 {
            return Err(Error::param("grid", "need at least 2 points per axis"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.x_points - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.p_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }
}

/// Wigner values on a grid; `values[(i, j)]` is `W(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub grid: PhaseSpaceGrid,
    pub values: DMatrix<f64>,
    /// Points where `|α|² > n_max / 2`, outside the truncation-reliable disc.
    pub unreliable: DMatrix<bool>,
    /// Largest discarded imaginary part of the parity expectation (times 1/π).
    pub max_imag_residue: f64,
}

impl WignerMap {
    pub fn unreliable_count(&self) -> usize {
        self.unreliable.iter().filter(|&&u| u).count()
    }

    /// Trapezoidal `∬ W dx dp`.
    pub fn integral(&self) -> f64 {
        trapezoid(&marginal(self, Quadrature::X), self.grid.dx())
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }
}

/// Parity expectation and discarded imaginary part at one point.
pub fn wigner_point(rho: &DensityOperator, x: f64, p: f64) -> (f64, f64) {
    let alpha = Complex64::new(x, p) / 2f64.sqrt();
    let d = rho.dim();
    let r2 = alpha.norm_sqr();
    let cutoff = d + (r2 + 10.0 * r2.sqrt() + 20.0).ceil() as usize;
    let lf = LnFactorial::up_to(cutoff + d);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut col = vec![Complex64::new(0.0, 0.0); d];
    for k in 0..cutoff {
        for (n, c) in col.iter_mut().enumerate() {
            *c = displacement_element(alpha, n, k, &lf);
        }
        // ⟨k|D† ρ D|k⟩ = Σ_{n,m} conj(D_nk) ρ_nm D_mk
        let mut e = Complex64::new(0.0, 0.0);
        for n in 0..d {
            if col[n] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row: Complex64 = col
                .iter()
                .enumerate()
                .map(|(m, c)| rho.entry(n, m) * c)
                .sum();
            e += col[n].conj() * row;
        }
        if k % 2 == 0 {
            acc += e;
        } else {
            acc -= e;
        }
    }
    (acc.re / PI, acc.im / PI)
}

/// Wigner function of a unit-trace operator on `grid`.
pub fn wigner(rho: &DensityOperator, grid: &PhaseSpaceGrid) -> Result<WignerMap> {
    grid.validate()?;
    let t = rho.trace();
    if (t - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { trace: t });
    }
    let reliable_r2 = (rho.dim() - 1) as f64 / 2.0;
    let rows: Vec<Vec<(f64, f64)>> = (0..grid.x_points)
        .into_par_iter()
        .map(|i| {
            (0..grid.p_points)
                .map(|j| wigner_point(rho, grid.x(i), grid.p(j)))
                .collect()
        })
        .collect();
    let values = DMatrix::from_fn(grid.x_points, grid.p_points, |i, j| rows[i][j].0);
    let max_imag_residue = rows
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &(_, im)| acc.max(im.abs()));
    let unreliable = DMatrix::from_fn(grid.x_points, grid.p_points, |i, j| {
        (grid.x(i).powi(2) + grid.p(j).powi(2)) / 2.0 > reliable_r2
    });
    Ok(WignerMap {
        grid: *grid,
        values,
        unreliable,
        max_imag_residue,
    })
}

/// Which quadrature the marginal is a density of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    step * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Integrates out the other quadrature (trapezoid rule).
pub fn marginal(map: &WignerMap, quadrature: Quadrature) -> Vec<f64> {
    match quadrature {
        Quadrature::X => (0..map.grid.x_points)
            .map(|i| {
                let row: Vec<f64> = map.values.row(i).iter().copied().collect();
                trapezoid(&row, map.grid.dp())
            })
            .collect(),
        Quadrature::P => (0..map.grid.p_points)
            .map(|j| trapezoid(map.values.column(j).as_slice(), map.grid.dx()))
            .collect(),
    }
}

/// Largest spread of `W` over angles on circles of the given radii,
/// relative to `|W|` max over the same samples.
pub fn angular_deviation(rho: &DensityOperator, radii: &[f64], angles: usize) -> f64 {
    let mut peak = wigner_point(rho, 0.0, 0.0).0.abs();
    let mut worst = 0.0f64;
    for &r in radii {
        let vals: Vec<f64> = (0..angles)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / angles as f64;
                wigner_point(rho, r * phi.cos(), r * phi.sin()).0
            })
            .collect();
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        peak = peak.max(hi.abs()).max(lo.abs());
        worst = worst.max(hi - lo);
    }
    if peak == 0.0 {
        0.0
    } else {
        worst / peak
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, fock_state, HilbertDim};

    fn dim() -> HilbertDim {
        HilbertDim::default()
    }

    #[test]
    fn vacuum_and_single_photon_at_origin() {
        let vac = fock_state(0, dim()).unwrap().density();
        assert!((wigner_point(&vac, 0.0, 0.0).0 - 1.0 / PI).abs() < 1e-14);
        let one = fock_state(1, dim()).unwrap().density();
        assert!((wigner_point(&one, 0.0, 0.0).0 + 1.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn coherent_state_is_displaced_gaussian() {
        let beta = Complex64::new(1.0, 0.0);
        let rho = fock::coherent_state(beta, HilbertDim::new(20))
            .normalized()
            .unwrap()
            .density();
        let grid = PhaseSpaceGrid::square(3.0, 31);
        let map = wigner(&rho, &grid).unwrap();
        let sx = 2f64.sqrt() * beta.re;
        let sp = 2f64.sqrt() * beta.im;
        for i in 0..grid.x_points {
            for j in 0..grid.p_points {
                let (x, p) = (grid.x(i), grid.p(j));
                let expect = (-(x - sx).powi(2) - (p - sp).powi(2)).exp() / PI;
                assert!((map.values[(i, j)] - expect).abs() < 1e-4);
            }
        }
        assert!((wigner_point(&rho, sx, sp).0 - 1.0 / PI).abs() < 1e-4);
    }

    #[test]
    fn vacuum_marginal_is_gaussian() {
        let vac = fock_state(0, dim()).unwrap().density();
        let map = wigner(&vac, &PhaseSpaceGrid::square(5.0, 101)).unwrap();
        let m = marginal(&map, Quadrature::X);
        for (i, v) in m.iter().enumerate() {
            let x = map.grid.x(i);
            let expect = (-x * x).exp() / PI.sqrt();
            assert!((v - expect).abs() < 1e-3);
        }
        assert!((map.integral() - 1.0).abs() < 1e-3);
        assert!(map.max_imag_residue < 1e-10);
    }

    #[test]
    fn diagonal_state_marginal_is_symmetric() {
        let rho = fock::phase_averaged_dm(0.29, dim())
            .unwrap()
            .normalized()
            .unwrap();
        let map = wigner(&rho, &PhaseSpaceGrid::square(4.0, 81)).unwrap();
        let m = marginal(&map, Quadrature::X);
        let n = m.len();
        for i in 0..n / 2 {
            assert!((m[i] - m[n - 1 - i]).abs() < 1e-6);
        }
    }

    #[test]
    fn reliability_flags() {
        let vac = fock_state(0, dim()).unwrap().density();
        let map = wigner(&vac, &PhaseSpaceGrid::square(4.0, 9)).unwrap();
        assert!(map.unreliable[(0, 0)]);
        assert!(!map.unreliable[(4, 4)]);
    }

    #[test]
    fn rejects_unnormalized_and_bad_grids() {
        let half = DensityOperator::new(crate::linalg::real_diagonal([0.5, 0.0])).unwrap();
        assert!(wigner(&half, &PhaseSpaceGrid::default()).is_err());
        let vac = fock_state(0, dim()).unwrap().density();
        assert!(wigner(&vac, &PhaseSpaceGrid::square(1.0, 1)).is_err());
    }
}
