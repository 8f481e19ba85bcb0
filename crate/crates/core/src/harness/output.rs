//! CSV results, run manifests and scenario files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Scenario, SweepResult, SweepRow};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "sweep_var",
    "value",
    "mode",
    "mean_sum_se",
    "stderr",
    "n",
    "convergence_rate",
    "mean_leakage",
];

/// Everything needed to re-run a sweep bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub csv_file: String,
    pub csv_sha256: String,
    pub resampled: usize,
    pub scenario: Scenario,
}

#[derive(Debug, Clone)]
pub struct EmittedFiles {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the scenario's canonical TOML form.
pub fn config_hash(scenario: &Scenario) -> String {
    let text = toml::to_string(scenario).expect("scenario serializes to TOML");
    sha256_hex(text.as_bytes())
}

pub fn csv_bytes(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_HEADER)
            .map_err(|e| Error::Scenario(format!("csv: {e}")))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| Error::Scenario(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| Error::Scenario(format!("csv: {e}")))
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    fs::write(path, csv_bytes(rows)?).map_err(io_err(path))
}

/// Reads a results CSV back; `samples` of the result is empty.
pub fn read_csv(path: &Path) -> Result<SweepResult> {
    let mut r = csv::Reader::from_path(path).map_err(|e| parse_err(path, e))?;
    let header = r.headers().map_err(|e| parse_err(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(parse_err(path, format!("unexpected header {header:?}")));
    }
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()
        .map_err(|e| parse_err(path, e))?;
    Ok(SweepResult {
        rows,
        samples: Vec::new(),
    })
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.manifest.toml`.
pub fn emit_results(scenario: &Scenario, result: &SweepResult, dir: &Path) -> Result<EmittedFiles> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_name = format!("{}.csv", scenario.name);
    let csv_path = dir.join(&csv_name);
    let bytes = csv_bytes(&result.rows)?;
    fs::write(&csv_path, &bytes).map_err(io_err(&csv_path))?;
    let manifest = Manifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: scenario.base.seed,
        config_hash: config_hash(scenario),
        csv_file: csv_name,
        csv_sha256: sha256_hex(&bytes),
        resampled: result.resampled(),
        scenario: scenario.clone(),
    };
    let manifest_path = dir.join(format!("{}.manifest.toml", scenario.name));
    let text = toml::to_string(&manifest).map_err(|e| parse_err(&manifest_path, e))?;
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;
    Ok(EmittedFiles {
        csv: csv_path,
        manifest: manifest_path,
    })
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| parse_err(path, e))?;
    let expected = config_hash(&manifest.scenario);
    if manifest.config_hash != expected {
        return Err(parse_err(
            path,
            format!("config hash {} does not match scenario ({expected})", manifest.config_hash),
        ));
    }
    Ok(manifest)
}

#[derive(Deserialize)]
struct ScenarioList {
    scenarios: Vec<Scenario>,
}

/// Parses a scenario file: either one scenario or a `[[scenarios]]` list.
pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    if let Ok(list) = toml::from_str::<ScenarioList>(&text) {
        return Ok(list.scenarios);
    }
    toml::from_str::<Scenario>(&text)
        .map(|s| vec![s])
        .map_err(|e| parse_err(path, e))
}
