//! Randomized invariants and parser robustness.

use num_complex::Complex64;
use proptest::prelude::*;

use pnrhd::fock::HilbertDim;
use pnrhd::formats::{
    self, OperatorFile, PovmManifest, PovmSetFile, Provenance, RunSummary, StateSpec,
};
use pnrhd::linalg::{self, CMatrix};
use pnrhd::povm::{self, LoSetting, Truncation};
use pnrhd::tmd::DetectorModel;
use pnrhd::tomography::{self, ClickRecord};

fn hermitian(dim: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(-3.0f64..3.0, 2 * dim * dim).prop_map(move |v| {
        let m = CMatrix::from_fn(dim, dim, |i, j| {
            Complex64::new(v[i * dim + j], v[dim * dim + i * dim + j])
        });
        linalg::hermitize(&m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lands_on_density_operators(m in hermitian(5)) {
        let rho = tomography::project_to_density(&m);
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        let min = linalg::hermitian_eigenvalues(rho.matrix()).min();
        prop_assert!(min > -1e-12, "{}", min);
        let again = tomography::project_to_density(rho.matrix());
        prop_assert!(linalg::max_abs(&(again.matrix() - rho.matrix())) < 1e-10);
    }

    #[test]
    fn projection_is_the_nearest_density_operator(m in hermitian(4), w in proptest::collection::vec(0.0f64..1.0, 4)) {
        // Compare against a random diagonal density operator in the
        // eigenbasis of `m`: no feasible point may be closer.
        let rho = tomography::project_to_density(&m);
        let (_, vectors) = linalg::hermitian_eigen(&m);
        let total: f64 = w.iter().sum::<f64>().max(1e-9);
        let values = nalgebra::DVector::from_iterator(4, w.iter().map(|x| x / total));
        let other = linalg::from_eigen(&values, &vectors);
        let d_proj = (rho.matrix() - &m).norm();
        let d_other = (other - &m).norm();
        prop_assert!(d_proj <= d_other + 1e-9, "{} > {}", d_proj, d_other);
    }

    #[test]
    fn povm_sets_are_complete_and_positive(
        amplitude in 0.0f64..1.5,
        phase in 0.0f64..std::f64::consts::TAU,
        coupling in 0.05f64..0.95,
        eta_a in 0.0f64..=1.0,
        eta_b in 0.0f64..=1.0,
    ) {
        let setting = LoSetting::new(amplitude, phase, coupling).unwrap();
        let a = DetectorModel::tmd(eta_a).unwrap();
        let b = DetectorModel::tmd(eta_b).unwrap();
        let set = povm::povm_set(&setting, &a, &b, &Truncation::default()).unwrap();
        prop_assert!(set.defect <= set.bound);
        let residual = linalg::operator_norm(&(set.sum() - linalg::identity(set.dim())));
        prop_assert!(residual <= set.bound);
        for e in &set.elements {
            prop_assert!(linalg::hermiticity_defect(&e.matrix) < 1e-10);
            prop_assert!(linalg::hermitian_eigenvalues(&e.matrix).min() > povm::POSITIVITY_FLOOR);
        }
    }

    #[test]
    fn click_records_round_trip(
        counts in proptest::collection::vec(proptest::collection::vec(0u32..50, 4), 1..5),
        amplitude in 0.0f64..2.0,
    ) {
        let settings: Vec<_> = (0..counts.len())
            .map(|k| LoSetting::new(amplitude, 0.3 * k as f64, 0.5).unwrap())
            .collect();
        // Give every setting the same total by topping up the first cell.
        let shots = counts.iter().map(|r| r.iter().sum::<u32>()).max().unwrap_or(0).max(1) as u64;
        let counts: Vec<Vec<f64>> = counts
            .iter()
            .map(|r| {
                let mut row: Vec<f64> = r.iter().map(|&c| c as f64).collect();
                row[0] += shots as f64 - row.iter().sum::<f64>();
                row
            })
            .collect();
        let record = ClickRecord { settings, shots, outcomes_a: 2, outcomes_b: 2, counts };
        let prov = Provenance::new(None);
        let text = formats::write_click_record(&record, &prov).unwrap();
        let (back, p) = formats::parse_click_record(&text).unwrap();
        prop_assert_eq!(back, record);
        prop_assert_eq!(p, prov);
    }

    #[test]
    fn operator_files_round_trip_exactly(m in hermitian(3)) {
        let text = OperatorFile::new(formats::OperatorKind::PovmDifference, &m, Provenance::new(Some("h".into())))
            .unwrap()
            .to_json()
            .unwrap();
        let back = OperatorFile::from_json(&text).unwrap().matrix().unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn parsers_never_panic_on_arbitrary_text(text in "\\PC{0,400}") {
        let _ = formats::parse_click_record(&text);
        let _ = formats::parse_wigner(&text);
        let _ = OperatorFile::from_json(&text);
        let _ = PovmSetFile::from_json(&text);
        let _ = PovmManifest::from_json(&text);
        let _ = RunSummary::from_json(&text);
        if let Ok(spec) = text.parse::<StateSpec>() {
            let _ = spec.density(HilbertDim::new(8));
        }
    }

    #[test]
    fn parsers_never_panic_on_mutated_records(cut in 0usize..2000, insert in "[-,0-9.e#: \\n]{0,8}") {
        let record = ClickRecord {
            settings: vec![LoSetting::new(0.5, 0.0, 0.5).unwrap(), LoSetting::new(0.5, 1.0, 0.5).unwrap()],
            shots: 10,
            outcomes_a: 2,
            outcomes_b: 1,
            counts: vec![vec![3.0, 7.0], vec![10.0, 0.0]],
        };
        let text = formats::write_click_record(&record, &Provenance::new(None)).unwrap();
        let at = cut.min(text.len());
        let at = (0..=at).rev().find(|&i| text.is_char_boundary(i)).unwrap_or(0);
        let mutated = format!("{}{}{}", &text[..at], insert, &text[at..]);
        let _ = formats::parse_click_record(&mutated);
    }
}
