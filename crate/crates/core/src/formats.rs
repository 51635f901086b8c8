//! On-disk formats.
//!
//! * Operator and POVM-set files are JSON documents with the matrix stored as
//!   row-major `real` and `imag` arrays. Numbers are written in the shortest
//!   representation that parses back to the same `f64`, so round trips are
//!   exact.
//! * Click records and Wigner grids are comma-separated text preceded by
//!   `# key: value` header lines.
//! * Every document carries the toolkit version and, when produced from a
//!   configuration, its hash. No timestamps are written, so identical inputs
//!   give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, DensityOperator, HilbertDim, Parity};
use crate::linalg::{self, CMatrix};
use crate::metrics;
use crate::povm::{LoSetting, Outcome, PovmElement, PovmSet, Truncation, Uncertainties};
use crate::tmd::DetectorModel;
use crate::tomography::ClickRecord;
use crate::wigner::{PhaseSpaceGrid, WignerMap};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const FORMAT_VERSION: u32 = 1;
/// Basis and sign conventions recorded in operator documents.
pub const OPERATOR_CONVENTION: &str =
    "Fock basis |0>..|n_max>; entry (n, m) = <n|O|m>; row-major; LO phase theta rotates as exp(+i theta n) O exp(-i theta n)";

const OPERATOR_TAG: &str = "pnrhd-operator";
const POVM_SET_TAG: &str = "pnrhd-povm-set";
const MANIFEST_TAG: &str = "pnrhd-povm-manifest";
const SUMMARY_TAG: &str = "pnrhd-run-summary";
const RECORD_TAG: &str = "pnrhd-click-record";
const WIGNER_TAG: &str = "pnrhd-wigner-grid";

/// Largest operator dimension accepted from files.
pub const MAX_FILE_DIM: usize = 64;
/// Largest number of settings accepted from record files.
pub const MAX_FILE_SETTINGS: usize = 100_000;

/// Version and configuration hash stamped on every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit_version: String,
    pub config_hash: Option<String>,
}

impl Provenance {
    pub fn new(config_hash: Option<String>) -> Self {
        Self {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            config_hash,
        }
    }
}

fn check_tag(found: &str, expected: &str, version: u32) -> Result<()> {
    if found != expected {
        return Err(Error::Format(format!(
            "expected a `{expected}` document, found `{found}`"
        )));
    }
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version} (this build reads {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

fn check_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "{what} contains a non-finite number"
        )))
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        message: e.to_string(),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn split_matrix(m: &CMatrix) -> (Vec<f64>, Vec<f64>) {
    let d = m.nrows();
    let mut re = Vec::with_capacity(d * d);
    let mut im = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            re.push(m[(i, j)].re);
            im.push(m[(i, j)].im);
        }
    }
    (re, im)
}

fn join_matrix(dim: usize, re: &[f64], im: &[f64]) -> Result<CMatrix> {
    if dim == 0 || dim > MAX_FILE_DIM {
        return Err(Error::Format(format!(
            "dimension {dim} outside 1..={MAX_FILE_DIM}"
        )));
    }
    if re.len() != dim * dim || im.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: re.len().min(im.len()),
        });
    }
    check_finite(re.iter().chain(im).copied(), "matrix")?;
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(re[i * dim + j], im[i * dim + j])
    }))
}

fn validated_setting(s: &LoSetting) -> Result<LoSetting> {
    let checked = LoSetting::new(s.amplitude, s.phase, s.coupling)?;
    if checked.phase != s.phase {
        return Err(Error::Format(format!(
            "setting phase {} outside [0, 2π)",
            s.phase
        )));
    }
    Ok(checked)
}

/// What an operator document holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    PovmElement,
    NormalizedPovmElement,
    PovmDifference,
    DensityOperator,
}

/// A single operator with its metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub format: String,
    pub format_version: u32,
    #[serde(flatten)]
    pub provenance: Provenance,
    pub kind: OperatorKind,
    pub convention: String,
    pub outcome: Option<Outcome>,
    pub setting: Option<LoSetting>,
    pub dim: usize,
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
}

impl OperatorFile {
    pub fn new(kind: OperatorKind, matrix: &CMatrix, provenance: Provenance) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let (real, imag) = split_matrix(matrix);
        check_finite(real.iter().chain(&imag).copied(), "matrix")?;
        Ok(Self {
            format: OPERATOR_TAG.into(),
            format_version: FORMAT_VERSION,
            provenance,
            kind,
            convention: OPERATOR_CONVENTION.into(),
            outcome: None,
            setting: None,
            dim: matrix.nrows(),
            real,
            imag,
        })
    }

    pub fn density(rho: &DensityOperator, provenance: Provenance) -> Result<Self> {
        Self::new(OperatorKind::DensityOperator, rho.matrix(), provenance)
    }

    pub fn element(
        kind: OperatorKind,
        matrix: &CMatrix,
        outcome: Outcome,
        setting: LoSetting,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut f = Self::new(kind, matrix, provenance)?;
        f.outcome = Some(outcome);
        f.setting = Some(setting);
        Ok(f)
    }

    pub fn matrix(&self) -> Result<CMatrix> {
        join_matrix(self.dim, &self.real, &self.imag)
    }

    /// The operator as a validated density operator (any kind except
    /// differences, which are not positive).
    pub fn to_density(&self) -> Result<DensityOperator> {
        if self.kind == OperatorKind::PovmDifference {
            return Err(Error::Format(
                "a POVM difference is not a density operator".into(),
            ));
        }
        DensityOperator::new(self.matrix()?)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text).map_err(json_error)?;
        check_tag(&f.format, OPERATOR_TAG, f.format_version)?;
        f.matrix()?;
        if let Some(s) = &f.setting {
            validated_setting(s)?;
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementEntry {
    pub outcome: Outcome,
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
}

/// All elements of one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmSetFile {
    pub format: String,
    pub format_version: u32,
    #[serde(flatten)]
    pub provenance: Provenance,
    pub convention: String,
    pub setting: LoSetting,
    pub outcomes_a: usize,
    pub outcomes_b: usize,
    pub dim: usize,
    pub defect: f64,
    pub bound: f64,
    pub elements: Vec<ElementEntry>,
}

impl PovmSetFile {
    pub fn new(set: &PovmSet, provenance: Provenance) -> Result<Self> {
        let elements = set
            .elements
            .iter()
            .map(|e| {
                let (real, imag) = split_matrix(&e.matrix);
                check_finite(real.iter().chain(&imag).copied(), "POVM element")?;
                Ok(ElementEntry {
                    outcome: e.outcome,
                    real,
                    imag,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            format: POVM_SET_TAG.into(),
            format_version: FORMAT_VERSION,
            provenance,
            convention: OPERATOR_CONVENTION.into(),
            setting: set.setting,
            outcomes_a: set.outcomes_a,
            outcomes_b: set.outcomes_b,
            dim: set.dim(),
            defect: set.defect,
            bound: set.bound,
            elements,
        })
    }

    /// Rebuilds the set, recomputing the completeness defect.
    pub fn to_povm_set(&self) -> Result<PovmSet> {
        check_tag(&self.format, POVM_SET_TAG, self.format_version)?;
        let setting = validated_setting(&self.setting)?;
        check_finite([self.defect, self.bound], "defect")?;
        let expected = self
            .outcomes_a
            .checked_mul(self.outcomes_b)
            .filter(|n| (1..=MAX_FILE_DIM * MAX_FILE_DIM).contains(n))
            .ok_or_else(|| Error::Format("invalid outcome counts".into()))?;
        if self.elements.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.elements.len(),
            });
        }
        let mut elements = Vec::with_capacity(expected);
        for (i, e) in self.elements.iter().enumerate() {
            let want = Outcome::new(i / self.outcomes_b, i % self.outcomes_b);
            if e.outcome != want {
                return Err(Error::Format(format!(
                    "element {i} is {:?}, expected {want:?}",
                    e.outcome
                )));
            }
            let matrix = join_matrix(self.dim, &e.real, &e.imag)?;
            if linalg::hermiticity_defect(&matrix) > crate::povm::HERMITICITY_TOL {
                return Err(Error::Format(format!("element {want:?} is not Hermitian")));
            }
            elements.push(PovmElement {
                outcome: want,
                matrix,
            });
        }
        let mut set = PovmSet {
            setting,
            outcomes_a: self.outcomes_a,
            outcomes_b: self.outcomes_b,
            elements,
            defect: 0.0,
            bound: self.bound,
        };
        set.defect = linalg::operator_norm(&(set.sum() - linalg::identity(self.dim)));
        if set.defect > self.bound {
            return Err(Error::Format(format!(
                "completeness defect {:.3e} exceeds the recorded bound {:.3e}",
                set.defect, self.bound
            )));
        }
        Ok(set)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text).map_err(json_error)?;
        check_tag(&f.format, POVM_SET_TAG, f.format_version)?;
        Ok(f)
    }
}

/// One setting's files in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub index: usize,
    pub setting: LoSetting,
    pub file: String,
    pub sha256: String,
    pub defect: f64,
    pub bound: f64,
    /// Extreme-parameter sets, when uncertainties were configured.
    pub max_file: Option<String>,
    pub min_file: Option<String>,
}

/// Index of the POVM files written for a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmManifest {
    pub format: String,
    pub format_version: u32,
    #[serde(flatten)]
    pub provenance: Provenance,
    pub convention: String,
    pub truncation: Truncation,
    pub detector_a: DetectorModel,
    pub detector_b: DetectorModel,
    pub uncertainties: Option<Uncertainties>,
    pub max_defect: f64,
    pub entries: Vec<ManifestEntry>,
}

impl PovmManifest {
    pub fn new(
        truncation: Truncation,
        detector_a: DetectorModel,
        detector_b: DetectorModel,
        uncertainties: Option<Uncertainties>,
        entries: Vec<ManifestEntry>,
        provenance: Provenance,
    ) -> Self {
        let max_defect = entries.iter().map(|e| e.defect).fold(0.0, f64::max);
        Self {
            format: MANIFEST_TAG.into(),
            format_version: FORMAT_VERSION,
            provenance,
            convention: OPERATOR_CONVENTION.into(),
            truncation,
            detector_a,
            detector_b,
            uncertainties,
            max_defect,
            entries,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(json_error)?;
        check_tag(&m.format, MANIFEST_TAG, m.format_version)?;
        m.detector_a.validate()?;
        m.detector_b.validate()?;
        m.truncation.validate()?;
        for (i, e) in m.entries.iter().enumerate() {
            if e.index != i {
                return Err(Error::Format(format!(
                    "manifest entry {i} has index {}",
                    e.index
                )));
            }
            validated_setting(&e.setting)?;
            for file in [Some(&e.file), e.max_file.as_ref(), e.min_file.as_ref()]
                .into_iter()
                .flatten()
            {
                check_relative_name(file)?;
            }
        }
        Ok(m)
    }
}

/// Manifest file names must stay inside the manifest's directory.
fn check_relative_name(name: &str) -> Result<()> {
    let path = std::path::Path::new(name);
    let plain = !name.is_empty()
        && path
            .components()
            .all(|c| matches!(c, std::path::Component::Normal(_)));
    if plain {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "file name `{name}` must be a relative path without `..`"
        )))
    }
}

/// Result summary of a reconstruction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub format: String,
    pub format_version: u32,
    #[serde(flatten)]
    pub provenance: Provenance,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mean_photon_number: f64,
    pub phase: Option<f64>,
    /// `Δ = 1 − F(ρ_max, ρ_min)` when extreme POVMs were supplied.
    pub delta: Option<f64>,
    pub mean_photon_number_band: Option<metrics::PhotonNumberEstimate>,
    /// Fidelity against a known reference, when one was given.
    pub fidelity: Option<f64>,
}

impl RunSummary {
    pub fn new(
        provenance: Provenance,
        objective: f64,
        iterations: usize,
        converged: bool,
        rho: &DensityOperator,
    ) -> Self {
        Self {
            format: SUMMARY_TAG.into(),
            format_version: FORMAT_VERSION,
            provenance,
            objective,
            iterations,
            converged,
            mean_photon_number: metrics::mean_photon_number(rho),
            phase: metrics::estimate_phase(rho).ok(),
            delta: None,
            mean_photon_number_band: None,
            fidelity: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(json_error)?;
        check_tag(&s.format, SUMMARY_TAG, s.format_version)?;
        Ok(s)
    }
}

/// `# key: value` header lines followed by CSV rows.
struct Delimited<'a> {
    header: BTreeMap<String, String>,
    body: &'a str,
    body_line: usize,
}

fn split_header(text: &str) -> Result<Delimited<'_>> {
    let mut header = BTreeMap::new();
    let mut offset = 0;
    let mut line_no = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if !trimmed.starts_with('#') {
            break;
        }
        line_no += 1;
        offset += line.len();
        let (key, value) = trimmed[1..].split_once(':').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "header lines must read `# key: value`".into(),
        })?;
        if header
            .insert(key.trim().to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate header key `{}`", key.trim()),
            });
        }
    }
    Ok(Delimited {
        header,
        body: &text[offset..],
        body_line: line_no,
    })
}

impl Delimited<'_> {
    fn get(&self, key: &str) -> Result<&str> {
        self.header
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("missing header `{key}`")))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Format(format!("header `{key}` has an invalid value")))
    }

    fn provenance(&self) -> Result<Provenance> {
        Ok(Provenance {
            toolkit_version: self.get("toolkit_version")?.to_string(),
            config_hash: self
                .header
                .get("config_hash")
                .filter(|h| *h != "none")
                .cloned(),
        })
    }

    fn rows(&self, columns: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(self.body.as_bytes());
        let head = reader.headers().map_err(|e| self.csv_error(e))?.clone();
        if head.iter().collect::<Vec<_>>() != columns {
            return Err(Error::Parse {
                line: self.body_line + 1,
                message: format!("expected columns {}", columns.join(",")),
            });
        }
        let mut out = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| self.csv_error(e))?;
            let line = record.position().map_or(0, |p| p.line() as usize) + self.body_line;
            out.push((line, record));
        }
        Ok(out)
    }

    fn csv_error(&self, e: csv::Error) -> Error {
        let line = e.position().map_or(0, |p| p.line() as usize) + self.body_line;
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}

fn field<T: FromStr>(record: &csv::StringRecord, i: usize, line: usize, name: &str) -> Result<T> {
    record
        .get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid `{name}`"),
        })
}

/// Shortest text that parses back to `x`, without a trailing `.0` on
/// integers and in exponent form for very small or large magnitudes.
fn num(x: f64) -> String {
    let s = format!("{x:?}");
    match s.strip_suffix(".0") {
        Some(int) => int.to_string(),
        None => s,
    }
}

fn write_header(out: &mut String, tag: &str, provenance: &Provenance, extra: &[(&str, String)]) {
    let _ = writeln!(out, "# format: {tag}");
    let _ = writeln!(out, "# format_version: {FORMAT_VERSION}");
    let _ = writeln!(out, "# toolkit_version: {}", provenance.toolkit_version);
    let _ = writeln!(
        out,
        "# config_hash: {}",
        provenance.config_hash.as_deref().unwrap_or("none")
    );
    for (k, v) in extra {
        let _ = writeln!(out, "# {k}: {v}");
    }
}

fn check_delimited_tag(d: &Delimited<'_>, tag: &str) -> Result<()> {
    check_tag(d.get("format")?, tag, d.parse("format_version")?)
}

const RECORD_COLUMNS: [&str; 7] = [
    "setting",
    "amplitude",
    "theta",
    "coupling",
    "k_a",
    "k_b",
    "count",
];

/// Writes a click record; exact probabilities are written when `shots == 0`.
pub fn write_click_record(record: &ClickRecord, provenance: &Provenance) -> Result<String> {
    record.validate()?;
    let mut out = String::new();
    write_header(
        &mut out,
        RECORD_TAG,
        provenance,
        &[
            ("shots", record.shots.to_string()),
            ("outcomes_a", record.outcomes_a.to_string()),
            ("outcomes_b", record.outcomes_b.to_string()),
        ],
    );
    out.push_str(&RECORD_COLUMNS.join(","));
    out.push('\n');
    for (i, (s, row)) in record.settings.iter().zip(&record.counts).enumerate() {
        for (k, c) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{},{}",
                num(s.amplitude),
                num(s.phase),
                num(s.coupling),
                k / record.outcomes_b,
                k % record.outcomes_b,
                num(*c)
            );
        }
    }
    Ok(out)
}

/// Parses a click record; every `(setting, k_a, k_b)` must appear exactly once.
pub fn parse_click_record(text: &str) -> Result<(ClickRecord, Provenance)> {
    let d = split_header(text)?;
    check_delimited_tag(&d, RECORD_TAG)?;
    let provenance = d.provenance()?;
    let shots: u64 = d.parse("shots")?;
    let outcomes_a: usize = d.parse("outcomes_a")?;
    let outcomes_b: usize = d.parse("outcomes_b")?;
    let outcomes = outcomes_a
        .checked_mul(outcomes_b)
        .filter(|n| (1..=MAX_FILE_DIM * MAX_FILE_DIM).contains(n))
        .ok_or_else(|| Error::Format("invalid outcome counts".into()))?;
    let rows = d.rows(&RECORD_COLUMNS)?;
    if rows.is_empty() || rows.len() % outcomes != 0 || rows.len() / outcomes > MAX_FILE_SETTINGS {
        return Err(Error::Format(format!(
            "{} rows is not a whole number of {outcomes}-outcome settings",
            rows.len()
        )));
    }
    let n_settings = rows.len() / outcomes;
    let mut settings = Vec::with_capacity(n_settings);
    let mut counts = vec![vec![f64::NAN; outcomes]; n_settings];
    for (line, r) in &rows {
        let line = *line;
        let i: usize = field(r, 0, line, "setting")?;
        let amplitude: f64 = field(r, 1, line, "amplitude")?;
        let theta: f64 = field(r, 2, line, "theta")?;
        let coupling: f64 = field(r, 3, line, "coupling")?;
        let k_a: usize = field(r, 4, line, "k_a")?;
        let k_b: usize = field(r, 5, line, "k_b")?;
        let count: f64 = field(r, 6, line, "count")?;
        let parse_err = |message: String| Error::Parse { line, message };
        if i >= n_settings || k_a >= outcomes_a || k_b >= outcomes_b {
            return Err(parse_err(format!("index ({i}, {k_a}, {k_b}) out of range")));
        }
        if i == settings.len() {
            let s =
                LoSetting::new(amplitude, theta, coupling).map_err(|e| parse_err(e.to_string()))?;
            if s.phase != theta {
                return Err(parse_err(format!("theta {theta} outside [0, 2π)")));
            }
            settings.push(s);
        } else if i > settings.len() {
            return Err(parse_err(format!(
                "setting {i} appears before setting {}",
                settings.len()
            )));
        } else {
            let s = settings[i];
            if (s.amplitude, s.phase, s.coupling) != (amplitude, theta, coupling) {
                return Err(parse_err(format!("setting {i} changes its LO parameters")));
            }
        }
        let slot = &mut counts[i][k_a * outcomes_b + k_b];
        if !slot.is_nan() {
            return Err(parse_err(format!("duplicate row for ({i}, {k_a}, {k_b})")));
        }
        if !(count.is_finite() && count >= 0.0) || (shots > 0 && count.fract() != 0.0) {
            return Err(parse_err(format!("invalid count {count}")));
        }
        *slot = count;
    }
    let record = ClickRecord {
        settings,
        shots,
        outcomes_a,
        outcomes_b,
        counts,
    };
    record.validate()?;
    if shots == 0 {
        for (i, row) in record.counts.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-3 {
                return Err(Error::Format(format!(
                    "probabilities of setting {i} sum to {sum}"
                )));
            }
        }
    }
    Ok((record, provenance))
}

const WIGNER_COLUMNS: [&str; 4] = ["x", "p", "w", "unreliable"];

pub fn write_wigner(map: &WignerMap, provenance: &Provenance) -> String {
    let mut out = String::new();
    let g = &map.grid;
    write_header(
        &mut out,
        WIGNER_TAG,
        provenance,
        &[
            ("convention", crate::wigner::CONVENTION.to_string()),
            ("x_min", num(g.x_min)),
            ("x_max", num(g.x_max)),
            ("x_points", g.x_points.to_string()),
            ("p_min", num(g.p_min)),
            ("p_max", num(g.p_max)),
            ("p_points", g.p_points.to_string()),
            ("max_imag_residue", num(map.max_imag_residue)),
        ],
    );
    out.push_str(&WIGNER_COLUMNS.join(","));
    out.push('\n');
    for i in 0..g.x_points {
        for j in 0..g.p_points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                num(g.x(i)),
                num(g.p(j)),
                num(map.values[(i, j)]),
                u8::from(map.unreliable[(i, j)])
            );
        }
    }
    out
}

/// Largest grid accepted from files.
pub const MAX_FILE_GRID_POINTS: usize = 4096;

pub fn parse_wigner(text: &str) -> Result<(WignerMap, Provenance)> {
    let d = split_header(text)?;
    check_delimited_tag(&d, WIGNER_TAG)?;
    let provenance = d.provenance()?;
    let grid = PhaseSpaceGrid {
        x_min: d.parse("x_min")?,
        x_max: d.parse("x_max")?,
        x_points: d.parse("x_points")?,
        p_min: d.parse("p_min")?,
        p_max: d.parse("p_max")?,
        p_points: d.parse("p_points")?,
    };
    grid.validate()?;
    if grid.x_points > MAX_FILE_GRID_POINTS || grid.p_points > MAX_FILE_GRID_POINTS {
        return Err(Error::Format("grid too large".into()));
    }
    let max_imag_residue: f64 = d.parse("max_imag_residue")?;
    let rows = d.rows(&WIGNER_COLUMNS)?;
    if rows.len() != grid.x_points * grid.p_points {
        return Err(Error::DimensionMismatch {
            expected: grid.x_points * grid.p_points,
            found: rows.len(),
        });
    }
    let mut values = DMatrix::zeros(grid.x_points, grid.p_points);
    let mut unreliable = DMatrix::from_element(grid.x_points, grid.p_points, false);
    for (k, (line, r)) in rows.iter().enumerate() {
        let (i, j) = (k / grid.p_points, k % grid.p_points);
        let x: f64 = field(r, 0, *line, "x")?;
        let p: f64 = field(r, 1, *line, "p")?;
        let tol = 1e-9 * (1.0 + x.abs().max(p.abs()));
        if (x - grid.x(i)).abs() > tol || (p - grid.p(j)).abs() > tol {
            return Err(Error::Parse {
                line: *line,
                message: "row does not match the grid order".into(),
            });
        }
        let w: f64 = field(r, 2, *line, "w")?;
        check_finite([w], "Wigner value")?;
        values[(i, j)] = w;
        unreliable[(i, j)] = match field::<u8>(r, 3, *line, "unreliable")? {
            0 => false,
            1 => true,
            _ => {
                return Err(Error::Parse {
                    line: *line,
                    message: "`unreliable` must be 0 or 1".into(),
                })
            }
        };
    }
    Ok((
        WignerMap {
            grid,
            values,
            unreliable,
            max_imag_residue,
        },
        provenance,
    ))
}

/// A named test or reference state, e.g. `coherent:mean=0.59,theta=0.3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    Vacuum,
    Fock {
        n: usize,
    },
    /// Coherent state with `α = √mean e^{−iθ}`.
    Coherent {
        mean: f64,
        theta: f64,
    },
    PhaseAveraged {
        mean: f64,
    },
    Cat {
        alpha: f64,
        phase: f64,
        parity: Parity,
    },
    Squeezed {
        r: f64,
        phi: f64,
    },
}

impl StateSpec {
    /// Unit-trace density operator (truncated states are renormalized).
    pub fn density(&self, dim: HilbertDim) -> Result<DensityOperator> {
        let rho = match *self {
            StateSpec::Vacuum => fock::fock_state(0, dim)?.density(),
            StateSpec::Fock { n } => fock::fock_state(n, dim)?.density(),
            StateSpec::Coherent { mean, theta } => metrics::ideal_coherent_dm(mean, theta, dim)?,
            StateSpec::PhaseAveraged { mean } => metrics::ideal_phase_averaged_dm(mean, dim)?,
            StateSpec::Cat {
                alpha,
                phase,
                parity,
            } => fock::cat_state(Complex64::from_polar(alpha, phase), parity, dim)?.density(),
            StateSpec::Squeezed { r, phi } => fock::squeezed_vacuum(r, phi, dim)?.density(),
        };
        rho.normalized()
    }

    /// Mean photon number of the untruncated state, when defined by the spec.
    pub fn nominal_mean(&self) -> f64 {
        match *self {
            StateSpec::Vacuum => 0.0,
            StateSpec::Fock { n } => n as f64,
            StateSpec::Coherent { mean, .. } | StateSpec::PhaseAveraged { mean } => mean,
            StateSpec::Cat { alpha, parity, .. } => {
                let a2 = alpha * alpha;
                match parity {
                    Parity::Even => a2 * a2.tanh(),
                    Parity::Odd => a2 / a2.tanh(),
                }
            }
            StateSpec::Squeezed { r, .. } => r.sinh().powi(2),
        }
    }
}

fn spec_error(message: impl Into<String>) -> Error {
    Error::Parse {
        line: 1,
        message: message.into(),
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = BTreeMap::new();
        for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| spec_error(format!("expected key=value, found `{pair}`")))?;
            if params.insert(k.trim(), v.trim()).is_some() {
                return Err(spec_error(format!("duplicate key `{}`", k.trim())));
            }
        }
        let parity = match params.remove("parity") {
            None | Some("odd") => Some(Parity::Odd),
            Some("even") => Some(Parity::Even),
            Some(_) => None,
        };
        if kind != "cat" && parity != Some(Parity::Odd) {
            return Err(spec_error(format!("unknown key `parity` for `{kind}`")));
        }
        let mut take = |key: &str, default: Option<f64>| -> Result<f64> {
            match params.remove(key) {
                Some(v) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| spec_error(format!("`{key}` must be a finite number"))),
                None => default.ok_or_else(|| spec_error(format!("missing `{key}`"))),
            }
        };
        let non_negative = |key: &str, v: f64| -> Result<f64> {
            if v < 0.0 {
                Err(spec_error(format!("`{key}` must be non-negative")))
            } else {
                Ok(v)
            }
        };
        let spec = match kind {
            "vacuum" => StateSpec::Vacuum,
            "fock" => {
                let n = take("n", None)?;
                if n < 0.0 || n.fract() != 0.0 || n > MAX_FILE_DIM as f64 {
                    return Err(spec_error("`n` must be a small non-negative integer"));
                }
                StateSpec::Fock { n: n as usize }
            }
            "coherent" => StateSpec::Coherent {
                mean: non_negative("mean", take("mean", None)?)?,
                theta: take("theta", Some(0.0))?,
            },
            "phase-averaged" => StateSpec::PhaseAveraged {
                mean: non_negative("mean", take("mean", None)?)?,
            },
            "cat" => {
                let parity =
                    parity.ok_or_else(|| spec_error("`parity` must be `odd` or `even`"))?;
                StateSpec::Cat {
                    alpha: non_negative("alpha", take("alpha", None)?)?,
                    phase: take("phase", Some(0.0))?,
                    parity,
                }
            }
            "squeezed" => StateSpec::Squeezed {
                r: non_negative("r", take("r", None)?)?,
                phi: take("phi", Some(0.0))?,
            },
            other => return Err(spec_error(format!("unknown state kind `{other}`"))),
        };
        if let Some(key) = params.keys().next() {
            return Err(spec_error(format!("unknown key `{key}` for `{kind}`")));
        }
        Ok(spec)
    }
}
