//! Subcommand implementations. Each command validates its inputs and computes
//! every output in memory before the first file is written, so a failed run
//! leaves no partial output behind.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use pnrhd::fock::DensityOperator;
use pnrhd::formats::{
    self, OperatorFile, OperatorKind, PovmManifest, PovmSetFile, Provenance, RunSummary, StateSpec,
};
use pnrhd::metrics::{self, MeritReport};
use pnrhd::povm::{self, Outcome, PovmSet};
use pnrhd::tomography::{self, ExtremeSweeps};
use pnrhd::wigner::{self, PhaseSpaceGrid};

use crate::config::{ConfigErrors, RunConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORD_FILE: &str = "record.csv";
pub const TRUE_STATE_FILE: &str = "true_state.json";
pub const ESTIMATE_FILE: &str = "estimate.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.json";

/// Failure classes with their process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<pnrhd::Error> for CliError {
    fn from(e: pnrhd::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

fn context(path: &Path) -> impl FnOnce(pnrhd::Error) -> CliError + '_ {
    move |e| match CliError::from(e) {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Files to write, in order, relative to an output directory.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    fn push(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn contents(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn output_dir(cli: Option<&Path>, config: Option<&RunConfig>) -> Result<PathBuf, CliError> {
    cli.map(Path::to_path_buf)
        .or_else(|| config.and_then(|c| c.output.clone()))
        .ok_or_else(|| {
            CliError::Validation("no output directory: pass --out or set [output] directory".into())
        })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    Ok(RunConfig::parse(&read(path)?)?)
}

fn set_file_name(index: usize, suffix: &str) -> String {
    format!("set_{index:03}{suffix}.json")
}

/// POVM set files, optional extreme sets and normalized elements, plus a
/// manifest.
pub fn build_povm(config: &RunConfig) -> Result<Outputs, CliError> {
    let prov = Provenance::new(Some(config.hash.clone()));
    let sets = povm::povm_sets(
        &config.settings,
        &config.detector_a,
        &config.detector_b,
        &config.truncation,
    )?;
    let extremes = config
        .uncertainties
        .as_ref()
        .map(|u| {
            tomography::extreme_sweeps(
                &config.settings,
                &config.detector_a,
                &config.detector_b,
                u,
                &config.truncation,
            )
        })
        .transpose()?;
    let mut out = Outputs::default();
    let mut entries = Vec::with_capacity(sets.len());
    for (i, set) in sets.iter().enumerate() {
        let text = PovmSetFile::new(set, prov.clone())?.to_json()?;
        let file = set_file_name(i, "");
        let sha = sha256(&text);
        out.push(file.clone(), text);
        let (mut max_file, mut min_file) = (None, None);
        if let Some(ext) = &extremes {
            for (sets, suffix, slot) in [
                (&ext.max, "_max", &mut max_file),
                (&ext.min, "_min", &mut min_file),
            ] {
                let name = set_file_name(i, suffix);
                out.push(
                    name.clone(),
                    PovmSetFile::new(&sets[i], prov.clone())?.to_json()?,
                );
                *slot = Some(name);
            }
        }
        for &o in &config.emit_elements {
            let element = set.element(o).ok_or_else(|| {
                CliError::Validation(format!("no element ({}, {})", o.k_a, o.k_b))
            })?;
            let normalized = povm::normalize_element(&element.matrix)?;
            let file = OperatorFile::element(
                OperatorKind::NormalizedPovmElement,
                normalized.matrix(),
                o,
                set.setting,
                prov.clone(),
            )?;
            out.push(
                format!("element_{i:03}_{}_{}.json", o.k_a, o.k_b),
                file.to_json()?,
            );
        }
        entries.push(formats::ManifestEntry {
            index: i,
            setting: set.setting,
            file,
            sha256: sha,
            defect: set.defect,
            bound: set.bound,
            max_file,
            min_file,
        });
    }
    let manifest = PovmManifest::new(
        config.truncation,
        config.detector_a.clone(),
        config.detector_b.clone(),
        config.uncertainties,
        entries,
        prov,
    );
    out.push(MANIFEST_FILE, manifest.to_json()?);
    Ok(out)
}

pub fn cmd_build_povm(config_path: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let config = load_config(config_path)?;
    let dir = output_dir(out, Some(&config))?;
    build_povm(&config)?.write(&dir)
}

/// A manifest with its POVM sets loaded and checked.
pub struct LoadedManifest {
    pub manifest: PovmManifest,
    pub sets: Vec<PovmSet>,
    pub extremes: Option<ExtremeSweeps>,
}

fn load_set(dir: &Path, name: &str, sha: Option<&str>) -> Result<PovmSet, CliError> {
    let path = dir.join(name);
    let text = read(&path)?;
    if let Some(expected) = sha {
        if sha256(&text) != expected {
            return Err(CliError::Validation(format!(
                "{} does not match its manifest checksum",
                path.display()
            )));
        }
    }
    let set = PovmSetFile::from_json(&text)
        .and_then(|f| f.to_povm_set())
        .map_err(context(&path))?;
    Ok(set)
}

pub fn load_manifest(path: &Path) -> Result<LoadedManifest, CliError> {
    let manifest = PovmManifest::from_json(&read(path)?).map_err(context(path))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut sets = Vec::with_capacity(manifest.entries.len());
    let mut max = Vec::new();
    let mut min = Vec::new();
    for e in &manifest.entries {
        let set = load_set(dir, &e.file, Some(&e.sha256))?;
        if set.setting != e.setting {
            return Err(CliError::Validation(format!(
                "{} holds a different setting than the manifest",
                e.file
            )));
        }
        sets.push(set);
        if let (Some(hi), Some(lo)) = (&e.max_file, &e.min_file) {
            max.push(load_set(dir, hi, None)?);
            min.push(load_set(dir, lo, None)?);
        }
    }
    let extremes = match max.len() {
        0 => None,
        n if n == sets.len() => Some(ExtremeSweeps { max, min }),
        _ => {
            return Err(CliError::Validation(
                "extreme sets must be given for every setting or none".into(),
            ))
        }
    };
    Ok(LoadedManifest {
        manifest,
        sets,
        extremes,
    })
}

fn density_of(spec: &StateSpec, dim: usize) -> Result<DensityOperator, CliError> {
    Ok(spec.density(pnrhd::fock::HilbertDim::from_dim(dim)?)?)
}

/// Simulated click record for `state` plus the true state it came from.
pub fn simulate(config: &RunConfig, state: &StateSpec, seed: u64) -> Result<Outputs, CliError> {
    let prov = Provenance::new(Some(config.hash.clone()));
    let rho = density_of(state, config.truncation.signal_dim())?;
    let sets = povm::povm_sets(
        &config.settings,
        &config.detector_a,
        &config.detector_b,
        &config.truncation,
    )?;
    let record = tomography::simulate_record_with(&rho, &sets, config.shots, seed)?;
    let mut out = Outputs::default();
    out.push(RECORD_FILE, formats::write_click_record(&record, &prov)?);
    out.push(
        TRUE_STATE_FILE,
        OperatorFile::density(&rho, prov)?.to_json()?,
    );
    Ok(out)
}

pub fn cmd_simulate(
    config_path: &Path,
    state: &str,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<Vec<PathBuf>, CliError> {
    let config = load_config(config_path)?;
    let spec: StateSpec = state
        .parse()
        .map_err(|e: pnrhd::Error| CliError::Validation(format!("--state: {e}")))?;
    let dir = output_dir(out, Some(&config))?;
    simulate(&config, &spec, seed.unwrap_or(config.seed))?.write(&dir)
}

/// Least-squares estimate and run summary, with the error band when the
/// manifest carries extreme POVMs.
pub fn reconstruct(record_text: &str, loaded: &LoadedManifest) -> Result<Outputs, CliError> {
    let (record, record_prov) = formats::parse_click_record(record_text)?;
    if record.settings.len() != loaded.sets.len() {
        return Err(CliError::Validation(format!(
            "record has {} settings, manifest has {}",
            record.settings.len(),
            loaded.sets.len()
        )));
    }
    for (i, (r, s)) in record.settings.iter().zip(&loaded.sets).enumerate() {
        if r != &s.setting {
            return Err(CliError::Validation(format!(
                "setting {i} differs between record and manifest"
            )));
        }
    }
    if record_prov.config_hash != loaded.manifest.provenance.config_hash {
        log::warn!("record and manifest were produced from different configurations");
    }
    let prov = Provenance::new(loaded.manifest.provenance.config_hash.clone());
    let result = tomography::reconstruct(&record, &loaded.sets)?;
    if !result.converged {
        log::warn!(
            "solver stopped after {} iterations without converging",
            result.iterations
        );
    }
    let mut summary = RunSummary::new(
        prov.clone(),
        result.objective,
        result.iterations,
        result.converged,
        &result.rho,
    );
    if let Some(ext) = &loaded.extremes {
        let band = tomography::error_band(&record, ext)?;
        summary.delta = Some(band.delta);
        summary.mean_photon_number_band = Some(metrics::mean_photon_number_with_band(
            &result.rho,
            &band.max.rho,
            &band.min.rho,
        ));
    }
    let mut out = Outputs::default();
    out.push(
        ESTIMATE_FILE,
        OperatorFile::density(&result.rho, prov)?.to_json()?,
    );
    out.push(SUMMARY_FILE, summary.to_json()?);
    Ok(out)
}

pub fn cmd_reconstruct(
    record: &Path,
    manifest: &Path,
    out: Option<&Path>,
) -> Result<Vec<PathBuf>, CliError> {
    let text = read(record)?;
    let loaded = load_manifest(manifest)?;
    let dir = output_dir(out, None)?;
    reconstruct(&text, &loaded)
        .map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", record.display())),
            other => other,
        })?
        .write(&dir)
}

/// Where the reference state of a report comes from.
pub enum Reference {
    Spec(StateSpec),
    File(PathBuf),
}

fn load_density(path: &Path) -> Result<(DensityOperator, Provenance), CliError> {
    let file = OperatorFile::from_json(&read(path)?).map_err(context(path))?;
    let rho = file.to_density().map_err(context(path))?;
    Ok((rho, file.provenance))
}

/// Report document: merits of an estimate against a reference.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub reference: String,
    #[serde(flatten)]
    pub merits: MeritReport,
}

pub fn report(
    estimate: &DensityOperator,
    prov: Provenance,
    reference: &Reference,
) -> Result<Outputs, CliError> {
    let (target, label) = match reference {
        Reference::Spec(spec) => (density_of(spec, estimate.dim())?, format!("{spec:?}")),
        Reference::File(path) => (
            load_density(path)?.0.normalized()?,
            path.display().to_string(),
        ),
    };
    if target.dim() != estimate.dim() {
        return Err(CliError::Validation(format!(
            "reference has dimension {}, estimate has {}",
            target.dim(),
            estimate.dim()
        )));
    }
    let mut merits = MeritReport::from_fidelity(metrics::fidelity(estimate, &target)?.min(1.0))?;
    merits.mean_photon_number = Some(metrics::mean_photon_number(estimate));
    merits.phase = metrics::estimate_phase(estimate).ok();
    let file = ReportFile {
        provenance: prov,
        reference: label,
        merits,
    };
    let mut text =
        serde_json::to_string_pretty(&file).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    let mut out = Outputs::default();
    out.push(REPORT_FILE, text);
    Ok(out)
}

pub fn cmd_report(
    estimate: &Path,
    reference: &Reference,
    out: Option<&Path>,
) -> Result<(Vec<PathBuf>, String), CliError> {
    let (rho, prov) = load_density(estimate)?;
    let outputs = report(&rho, Provenance::new(prov.config_hash), reference)?;
    let text = outputs
        .contents(REPORT_FILE)
        .unwrap_or_default()
        .to_string();
    let written = match out {
        Some(dir) => outputs.write(dir)?,
        None => Vec::new(),
    };
    Ok((written, text))
}

/// Input for the Wigner command: an operator file, or one element of a set.
pub fn wigner_input(
    path: &Path,
    element: Option<Outcome>,
) -> Result<(DensityOperator, Provenance, String), CliError> {
    let text = read(path)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("operator")
        .to_string();
    match element {
        None => {
            let file = OperatorFile::from_json(&text).map_err(context(path))?;
            let rho = match file.kind {
                OperatorKind::PovmElement => povm::normalize_element(&file.matrix()?)?,
                _ => file.to_density().map_err(context(path))?,
            };
            Ok((rho, file.provenance, stem))
        }
        Some(o) => {
            let set = PovmSetFile::from_json(&text)
                .and_then(|f| f.to_povm_set().map(|s| (s, f.provenance)))
                .map_err(context(path))?;
            let e = set.0.element(o).ok_or_else(|| {
                CliError::Validation(format!(
                    "{}: no element ({}, {})",
                    path.display(),
                    o.k_a,
                    o.k_b
                ))
            })?;
            Ok((
                povm::normalize_element(&e.matrix)?,
                set.1,
                format!("{stem}_{}_{}", o.k_a, o.k_b),
            ))
        }
    }
}

pub fn wigner_grid(
    rho: &DensityOperator,
    prov: &Provenance,
    grid: &PhaseSpaceGrid,
    name: &str,
) -> Result<Outputs, CliError> {
    let map = wigner::wigner(rho, grid)?;
    if map.unreliable_count() > 0 {
        log::warn!(
            "{} grid points are beyond the truncation's reliable radius",
            map.unreliable_count()
        );
    }
    let mut out = Outputs::default();
    out.push(
        format!("{name}.wigner.csv"),
        formats::write_wigner(&map, prov),
    );
    Ok(out)
}

pub fn cmd_wigner(
    input: &Path,
    element: Option<Outcome>,
    grid: &PhaseSpaceGrid,
    out: Option<&Path>,
) -> Result<Vec<PathBuf>, CliError> {
    grid.validate()?;
    if grid.x_points > formats::MAX_FILE_GRID_POINTS
        || grid.p_points > formats::MAX_FILE_GRID_POINTS
    {
        return Err(CliError::Validation("grid too large".into()));
    }
    let (rho, prov, name) = wigner_input(input, element)?;
    let dir = output_dir(out, None)?;
    wigner_grid(&rho, &Provenance::new(prov.config_hash), grid, &name)?.write(&dir)
}
