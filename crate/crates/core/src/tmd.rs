//! Time-multiplexed photon-number-resolving detectors.
//!
//! A TMD maps an incoming photon-number distribution to click statistics
//! through binomial loss `L` followed by the bin-splitting convolution `C`.
//! Because the detector is phase insensitive its POVM is diagonal in the
//! Fock basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::poisson_weights;
use crate::linalg::{self, CMatrix};

pub const DEFAULT_BINS: usize = 8;
pub const DEFAULT_MAX_CLICKS: usize = 8;
/// Relative uncertainty of the ND-filter transmission used for LO calibration.
pub const ND_TRANSMISSION_REL_ERROR: f64 = 0.05;
/// Largest bin count accepted for unequal splitting (the DP is exponential in it).
pub const MAX_WEIGHTED_BINS: usize = 16;

/// How photons are distributed over the binary detectors of the TMD.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSplitting {
    /// `M` bins with probability `1/M` each.
    Uniform { bins: usize },
    /// Arbitrary per-bin probabilities summing to one.
    Weighted { probabilities: Vec<f64> },
    /// Perfect photon-number resolution (clicks equal photons).
    Resolving,
}

impl BinSplitting {
    pub fn bins(&self) -> Option<usize> {
        match self {
            BinSplitting::Uniform { bins } => Some(*bins),
            BinSplitting::Weighted { probabilities } => Some(probabilities.len()),
            BinSplitting::Resolving => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            BinSplitting::Uniform { bins } if *bins == 0 => {
                Err(Error::param("bins", "need at least one bin"))
            }
            BinSplitting::Weighted { probabilities } => {
                if probabilities.is_empty() || probabilities.len() > MAX_WEIGHTED_BINS {
                    return Err(Error::param(
                        "probabilities",
                        format!("need 1..={MAX_WEIGHTED_BINS} bins"),
                    ));
                }
                if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::param(
                        "probabilities",
                        "entries must be non-negative",
                    ));
                }
                let sum: f64 = probabilities.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::param("probabilities", format!("sum {sum} is not 1")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Click-given-photon matrix, rows `k = 0..=bins`, columns `n < photons`.
    fn convolution(&self, photons: usize) -> DMatrix<f64> {
        match self {
            BinSplitting::Uniform { bins } => convolution_matrix(*bins, photons),
            BinSplitting::Weighted { probabilities } => {
                weighted_convolution_matrix(probabilities, photons)
            }
            BinSplitting::Resolving => DMatrix::identity(photons, photons),
        }
    }
}

/// Loss and bin structure of one TMD.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub splitting: BinSplitting,
    /// Click counts at or above this value are reported as `max_clicks`.
    pub max_clicks: usize,
}

impl DetectorModel {
    pub fn new(efficiency: f64, splitting: BinSplitting, max_clicks: usize) -> Result<Self> {
        let model = Self {
            efficiency,
            splitting,
            max_clicks,
        };
        model.validate()?;
        Ok(model)
    }

    /// Uniform TMD with the default 8 bins and 8 resolvable clicks.
    pub fn tmd(efficiency: f64) -> Result<Self> {
        Self::new(
            efficiency,
            BinSplitting::Uniform { bins: DEFAULT_BINS },
            DEFAULT_MAX_CLICKS,
        )
    }

    /// Lossless photon-number-resolving detector.
    pub fn ideal(max_clicks: usize) -> Self {
        Self {
            efficiency: 1.0,
            splitting: BinSplitting::Resolving,
            max_clicks,
        }
    }

    pub fn with_efficiency(&self, efficiency: f64) -> Result<Self> {
        Self::new(efficiency, self.splitting.clone(), self.max_clicks)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::param(
                "efficiency",
                format!("{} is outside [0, 1]", self.efficiency),
            ));
        }
        self.splitting.validate()?;
        if let Some(bins) = self.splitting.bins() {
            if self.max_clicks > bins {
                return Err(Error::param(
                    "max_clicks",
                    format!("{} exceeds the {bins} bins", self.max_clicks),
                ));
            }
        }
        Ok(())
    }

    pub fn outcomes(&self) -> usize {
        self.max_clicks + 1
    }

    /// Response `C·L`: entry `(k, n)` is the probability of `k` clicks given
    /// `n` incident photons, for `n < photons`. Counts above `max_clicks`
    /// are merged into the last row so columns stay stochastic.
    pub fn response_matrix(&self, photons: usize) -> DMatrix<f64> {
        let cl = self.splitting.convolution(photons) * loss_matrix(self.efficiency, photons);
        let rows = self.outcomes();
        DMatrix::from_fn(rows, photons, |k, n| {
            if k + 1 < rows {
                cl.get((k, n)).copied().unwrap_or(0.0)
            } else {
                (k..cl.nrows()).map(|j| cl[(j, n)]).sum()
            }
        })
    }
}

/// Binomial loss: `L[m, n] = C(n, m) η^m (1 − η)^(n − m)`.
pub fn loss_matrix(eta: f64, dim: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        // binomial pmf by the multiplicative recurrence, stable at η ∈ {0, 1}
        let mut row = vec![0.0; n + 1];
        row[0] = 1.0;
        for _ in 0..n {
            for m in (0..=n).rev() {
                let stay = row[m] * (1.0 - eta);
                let from = if m > 0 { row[m - 1] * eta } else { 0.0 };
                row[m] = stay + from;
            }
        }
        for (m, v) in row.into_iter().enumerate() {
            l[(m, n)] = v;
        }
    }
    l
}

/// Equal-splitting convolution over `bins` binary detectors:
/// `C[k, n] = C(M, k) Σ_j (−1)^j C(k, j) ((k − j)/M)^n`.
pub fn convolution_matrix(bins: usize, dim: usize) -> DMatrix<f64> {
    let m = bins as f64;
    let mut c = DMatrix::zeros(bins + 1, dim);
    for n in 0..dim {
        for k in 0..=bins.min(n) {
            let mut acc = 0.0;
            let mut kj = 1.0; // C(k, j)
            for j in 0..=k {
                if j > 0 {
                    kj *= (k - j + 1) as f64 / j as f64;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * kj * ((k - j) as f64 / m).powi(n as i32);
            }
            c[(k, n)] = binomial(bins, k) * acc;
        }
    }
    // n = 0 → zero clicks (0^0 = 1 is already handled by powi)
    c
}

/// Convolution for unequal bins by dynamic programming over occupied-bin sets.
pub fn weighted_convolution_matrix(probabilities: &[f64], dim: usize) -> DMatrix<f64> {
    let bins = probabilities.len();
    let mut c = DMatrix::zeros(bins + 1, dim);
    let mut occupancy = vec![0.0f64; 1 << bins];
    occupancy[0] = 1.0;
    for n in 0..dim {
        if n > 0 {
            let mut next = vec![0.0f64; 1 << bins];
            for (mask, &p) in occupancy.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (i, &q) in probabilities.iter().enumerate() {
                    next[mask | (1 << i)] += p * q;
                }
            }
            occupancy = next;
        }
        for (mask, &p) in occupancy.iter().enumerate() {
            c[(mask.count_ones() as usize, n)] += p;
        }
    }
    c
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Single-mode TMD POVM: one diagonal operator per click count on `dim`.
pub fn tmd_povm(model: &DetectorModel, dim: usize) -> Vec<CMatrix> {
    let r = model.response_matrix(dim);
    (0..model.outcomes())
        .map(|k| linalg::real_diagonal((0..dim).map(|n| r[(k, n)])))
        .collect()
}

/// Probability distribution over click counts `0..=max_clicks`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClickDistribution {
    probabilities: Vec<f64>,
}

impl ClickDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::param(
                "probabilities",
                "entries must be non-negative",
            ));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param("probabilities", format!("sum {sum} is not 1")));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }
}

/// `k = C·L·ρ` for a photon-number distribution `ρ`.
pub fn click_statistics(photon_dist: &[f64], model: &DetectorModel) -> Result<ClickDistribution> {
    if photon_dist.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::param("photon_dist", "entries must be non-negative"));
    }
    let sum: f64 = photon_dist.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::param("photon_dist", format!("sum {sum} is not 1")));
    }
    let r = model.response_matrix(photon_dist.len());
    let rho = nalgebra::DVector::from_column_slice(photon_dist);
    ClickDistribution::new((r * rho).iter().copied().collect())
}

/// Poisson photon distribution long enough that the dropped tail is below
/// `1e-15`, renormalized.
fn poisson_photons(mean: f64) -> Vec<f64> {
    let len = (mean + 12.0 * mean.sqrt() + 30.0).ceil() as usize;
    let mut w = poisson_weights(mean, len);
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|p| *p /= s);
    w
}

/// Mean click count produced by a coherent beam of the given mean photon number.
pub fn mean_clicks_for_coherent(mean_photons: f64, model: &DetectorModel) -> Result<f64> {
    Ok(click_statistics(&poisson_photons(mean_photons), model)?.mean())
}

/// Fits the efficiency whose predicted mean click count for a coherent
/// input of `expected_mean_photons` matches the observed mean (bisection).
pub fn fit_efficiency(
    observed: &ClickDistribution,
    expected_mean_photons: f64,
    splitting: &BinSplitting,
) -> Result<f64> {
    if !(expected_mean_photons.is_finite() && expected_mean_photons > 0.0) {
        return Err(Error::param("expected_mean_photons", "must be positive"));
    }
    let max_clicks = observed.probabilities().len().saturating_sub(1);
    let target = observed.mean();
    if target == 0.0 {
        return Ok(0.0);
    }
    let model_at = |eta: f64| DetectorModel::new(eta, splitting.clone(), max_clicks);
    let mean_at = |eta: f64| -> Result<f64> {
        mean_clicks_for_coherent(expected_mean_photons, &model_at(eta)?)
    };
    let top = mean_at(1.0)?;
    if target > top + 1e-12 {
        return Err(Error::NoFit(format!(
            "observed mean {target} exceeds the lossless prediction {top}"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// LO amplitude from an attenuated power calibration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LoCalibration {
    pub amplitude: f64,
    pub relative_error: f64,
}

/// `|α| = √(T ⟨n_meas⟩)` with the default 5% transmission uncertainty.
pub fn lo_amplitude_from_calibration(
    transmission: f64,
    mean_measured: f64,
) -> Result<LoCalibration> {
    lo_amplitude_with_uncertainty(transmission, mean_measured, ND_TRANSMISSION_REL_ERROR)
}

pub fn lo_amplitude_with_uncertainty(
    transmission: f64,
    mean_measured: f64,
    transmission_rel_error: f64,
) -> Result<LoCalibration> {
    if !(transmission > 0.0 && transmission <= 1.0) {
        return Err(Error::param("transmission", "must lie in (0, 1]"));
    }
    if !(mean_measured.is_finite() && mean_measured >= 0.0) {
        return Err(Error::param("mean_measured", "must be non-negative"));
    }
    if !(transmission_rel_error.is_finite() && transmission_rel_error >= 0.0) {
        return Err(Error::param(
            "transmission_rel_error",
            "must be non-negative",
        ));
    }
    Ok(LoCalibration {
        amplitude: (transmission * mean_measured).sqrt(),
        relative_error: transmission_rel_error / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_sums(m: &DMatrix<f64>) -> Vec<f64> {
        (0..m.ncols()).map(|j| m.column(j).sum()).collect()
    }

    #[test]
    fn loss_edge_cases() {
        assert_eq!(loss_matrix(1.0, 5), DMatrix::identity(5, 5));
        let l0 = loss_matrix(0.0, 5);
        for n in 0..5 {
            assert_eq!(l0[(0, n)], 1.0);
        }
        let l = loss_matrix(0.5, 3);
        assert_eq!(l.column(2).as_slice(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn convolution_small_cases() {
        let c = convolution_matrix(8, 4);
        assert_eq!(c[(0, 0)], 1.0);
        assert_eq!(c[(1, 1)], 1.0);
        assert!((c[(1, 2)] - 1.0 / 8.0).abs() < 1e-15);
        assert!((c[(2, 2)] - 7.0 / 8.0).abs() < 1e-15);
    }

    /// Brute force over all `M^n` bin assignments.
    fn enumerate_clicks(bins: usize, photons: usize) -> Vec<f64> {
        let mut counts = vec![0.0; bins + 1];
        let total = bins.pow(photons as u32);
        for code in 0..total {
            let mut c = code;
            let mut occupied = vec![false; bins];
            for _ in 0..photons {
                occupied[c % bins] = true;
                c /= bins;
            }
            counts[occupied.iter().filter(|&&o| o).count()] += 1.0;
        }
        counts.iter().map(|x| x / total as f64).collect()
    }

    #[test]
    fn convolution_matches_enumeration() {
        let c = convolution_matrix(8, 6);
        for n in 0..6 {
            let brute = enumerate_clicks(8, n);
            for k in 0..=8 {
                assert!((c[(k, n)] - brute[k]).abs() < 1e-13, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn weighted_dp_matches_uniform_formula() {
        let uniform = convolution_matrix(6, 12);
        let dp = weighted_convolution_matrix(&[1.0 / 6.0; 6], 12);
        assert!((uniform - dp).amax() < 1e-12);
    }

    #[test]
    fn matrices_are_column_stochastic() {
        for eta in [0.0, 0.1, 0.37, 0.9, 1.0] {
            for s in column_sums(&loss_matrix(eta, 25)) {
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
        for bins in [1, 2, 8, 12] {
            for s in column_sums(&convolution_matrix(bins, 25)) {
                assert!((s - 1.0).abs() < 1e-12, "bins={bins} sum={s}");
            }
        }
        let dp = weighted_convolution_matrix(&[0.1, 0.2, 0.3, 0.4], 20);
        for s in column_sums(&dp) {
            assert!((s - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn povm_completeness_and_structure() {
        for model in [
            DetectorModel::tmd(0.1).unwrap(),
            DetectorModel::tmd(0.9).unwrap(),
            DetectorModel::ideal(8),
            DetectorModel::new(0.5, BinSplitting::Uniform { bins: 8 }, 4).unwrap(),
        ] {
            let povm = tmd_povm(&model, 17);
            let sum = povm.iter().fold(CMatrix::zeros(17, 17), |acc, e| acc + e);
            assert!(linalg::max_abs(&(sum - linalg::identity(17))) < 1e-12);
            for e in &povm {
                for i in 0..17 {
                    for j in 0..17 {
                        if i != j {
                            assert_eq!(e[(i, j)].norm(), 0.0);
                        }
                    }
                    assert!(e[(i, i)].re >= 0.0);
                }
            }
        }
    }

    #[test]
    fn low_efficiency_single_photon() {
        let povm = tmd_povm(&DetectorModel::tmd(0.1).unwrap(), 9);
        assert!((povm[0][(1, 1)].re - 0.9).abs() < 1e-15);
    }

    #[test]
    fn many_bins_approach_fock_projectors() {
        let model = DetectorModel::new(1.0, BinSplitting::Uniform { bins: 10_000 }, 8).unwrap();
        let povm = tmd_povm(&model, 9);
        for (k, element) in povm.iter().enumerate().take(4) {
            for n in 0..9 {
                let expect = if n == k { 1.0 } else { 0.0 };
                assert!((element[(n, n)].re - expect).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn click_statistics_examples() {
        let model = DetectorModel::tmd(0.15).unwrap();
        let vac = click_statistics(&[1.0, 0.0, 0.0], &model).unwrap();
        assert_eq!(vac.probabilities()[0], 1.0);
        let one = click_statistics(&[0.0, 1.0, 0.0], &model).unwrap();
        assert!((one.probabilities()[1] - 0.15).abs() < 1e-15);
        assert!((one.probabilities()[0] - 0.85).abs() < 1e-15);
        assert!(click_statistics(&[1.2, -0.2], &model).is_err());
    }

    #[test]
    fn thinned_poisson_click_mean() {
        // Loss thins Poisson(2.25) to Poisson(0.225). Exact clicks for a
        // Poisson input into M equal bins: each bin sees Poisson(λ/M).
        let lambda = 0.225;
        let m = 8.0f64;
        let exact_mean = m * (1.0 - (-lambda / m).exp());
        let mut rho = poisson_weights(2.25, 9);
        let s: f64 = rho.iter().sum();
        rho.iter_mut().for_each(|p| *p /= s);
        let model = DetectorModel::tmd(0.10).unwrap();
        let mean = click_statistics(&rho, &model).unwrap().mean();
        assert!((mean - exact_mean).abs() / exact_mean < 0.02);
        assert!((mean - 0.225).abs() / 0.225 < 0.02);
    }

    #[test]
    fn fock_input_gives_convolution_column() {
        let model = DetectorModel::tmd(1.0).unwrap();
        let c = convolution_matrix(8, 9);
        for n in 0..9 {
            let mut rho = vec![0.0; 9];
            rho[n] = 1.0;
            let k = click_statistics(&rho, &model).unwrap();
            for kk in 0..9 {
                assert!((k.probabilities()[kk] - c[(kk, n)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn efficiency_fit_round_trip() {
        let model = DetectorModel::tmd(0.10).unwrap();
        let photons = poisson_photons(0.5);
        let observed = click_statistics(&photons, &model).unwrap();
        let eta = fit_efficiency(&observed, 0.5, &model.splitting).unwrap();
        assert!((eta - 0.10).abs() < 1e-6, "{eta}");

        let zero = ClickDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(fit_efficiency(&zero, 0.5, &model.splitting).unwrap(), 0.0);

        let impossible = ClickDistribution::new(vec![0.0, 0.0, 1.0]).unwrap();
        let err = fit_efficiency(&impossible, 0.01, &BinSplitting::Uniform { bins: 2 });
        assert!(matches!(err, Err(Error::NoFit(_))));
    }

    #[test]
    fn lo_calibration() {
        let c = lo_amplitude_from_calibration(1.0, 2.25).unwrap();
        assert_eq!(c.amplitude, 1.5);
        let c = lo_amplitude_from_calibration(0.01, 225.0).unwrap();
        assert!((c.amplitude - 1.5).abs() < 1e-15);
        assert!((c.relative_error - 0.025).abs() < 1e-15);
        assert!(lo_amplitude_from_calibration(-0.1, 1.0).is_err());
        assert!(lo_amplitude_from_calibration(0.5, -1.0).is_err());
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(DetectorModel::tmd(1.1).is_err());
        assert!(DetectorModel::new(0.5, BinSplitting::Uniform { bins: 4 }, 8).is_err());
        assert!(DetectorModel::new(
            0.5,
            BinSplitting::Weighted {
                probabilities: vec![0.5, 0.4]
            },
            2
        )
        .is_err());
    }
}
