use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chorbench_core::ingest::{parse_choreography, preprocess, PreprocessReport};
use chorbench_core::net::{assess_model, GateConfig, GateReport, InteractionNet};
use chorbench_core::ChoreographyModel;
use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use crate::{io_err, RunError};

/// One model file after parsing, preprocessing and the generatability gate.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    /// Path relative to the dataset root, with `/` separators.
    pub file: String,
    pub model_id: String,
    pub model: Option<ChoreographyModel>,
    pub preprocess: Option<PreprocessReport>,
    pub net: Option<InteractionNet>,
    pub gate: GateReport,
}

impl DatasetEntry {
    pub fn accepted(&self) -> bool {
        self.gate.accepted
    }
}

/// Serialisable gate verdict for one file.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GateRecord {
    pub file: String,
    pub model_id: String,
    pub accepted: bool,
    pub reasons: Vec<String>,
}

impl From<&DatasetEntry> for GateRecord {
    fn from(e: &DatasetEntry) -> Self {
        Self { file: e.file.clone(), model_id: e.model_id.clone(), accepted: e.gate.accepted, reasons: e.gate.reasons.clone() }
    }
}

fn is_model_file(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("bpmn") || e.eq_ignore_ascii_case("xml"))
}

fn load(root: &Path, path: &Path, gate: &GateConfig) -> Result<DatasetEntry, RunError> {
    let file = path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/");
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    match parse_choreography(&text) {
        Err(e) => Ok(DatasetEntry {
            file,
            model_id: stem,
            model: None,
            preprocess: None,
            net: None,
            gate: GateReport { accepted: false, reasons: vec![format!("parse error: {e}")], explored_markings: 0 },
        }),
        Ok(raw) => {
            let (model, report) = preprocess(&raw);
            let (net, verdict) = assess_model(&model, gate);
            Ok(DatasetEntry { file, model_id: model.model_id.clone(), model: Some(model), preprocess: Some(report), net, gate: verdict })
        }
    }
}

/// Recursively loads every `.bpmn`/`.xml` file under `root`, ordered by
/// relative path, and gates each one.
pub fn scan_dataset(root: &Path, gate: &GateConfig) -> Result<Vec<DatasetEntry>, RunError> {
    if !root.is_dir() {
        return Err(RunError::ConfigInvalid(format!("dataset directory {} does not exist", root.display())));
    }
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| RunError::Io {
            path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("directory walk failed")),
        })?;
        if entry.file_type().is_file() && is_model_file(entry.path()) {
            paths.push(entry.into_path());
        }
    }
    paths.sort();
    let entries: Vec<DatasetEntry> = paths.par_iter().map(|p| load(root, p, gate)).collect::<Result<_, _>>()?;

    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    for e in entries.iter().filter(|e| e.accepted()) {
        if let Some(first) = seen.insert(&e.model_id, &e.file) {
            return Err(RunError::ConfigInvalid(format!(
                "model id `{}` appears in both {first} and {}",
                e.model_id, e.file
            )));
        }
    }
    Ok(entries)
}
