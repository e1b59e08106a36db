use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Experiment, ExperimentConfig, MeasureSpec};
use super::run::{run, RunOutput, DEFAULT_SEED};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputHash {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// Hash of the resolved config in compact JSON.
    pub config_sha256: String,
    /// The resolved config: seed fixed, measure files inlined.
    pub config: ExperimentConfig,
    pub seed: u64,
    pub passed: bool,
    pub outputs: Vec<OutputHash>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Fixes the seed and inlines referenced measure files so the config is self-contained.
pub fn resolve(config: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    c.seed = Some(config.seed_or(DEFAULT_SEED));
    let inline = |m: &mut MeasureSpec| -> Result<()> {
        if let MeasureSpec::File { .. } = m {
            *m = MeasureSpec::Explicit(m.build(base_dir)?);
        }
        Ok(())
    };
    match &mut c.experiment {
        Experiment::HkCheck(p) => inline(&mut p.measure)?,
        Experiment::SamplerValidate(p) => inline(&mut p.measure)?,
        Experiment::ResolventCompare(p) => inline(&mut p.measure)?,
        Experiment::DecayCheck(p) => inline(&mut p.measure)?,
        Experiment::Epsilon0(_) | Experiment::Bifurcation(_) => {}
    }
    Ok(c)
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    sha256_hex(serde_json::to_string(config).expect("config serializes").as_bytes())
}

/// Writes the artifacts, the resolved config and the manifest into `dir`.
pub fn write_run(dir: &Path, resolved: &ExperimentConfig, output: &RunOutput) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for a in &output.artifacts {
        fs::write(dir.join(&a.name), &a.bytes)?;
        outputs.push(OutputHash { file: a.name.clone(), sha256: sha256_hex(&a.bytes), bytes: a.bytes.len() as u64 });
    }
    fs::write(dir.join(CONFIG_FILE), resolved.to_json() + "\n")?;
    let manifest = Manifest {
        command: output.command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(resolved),
        config: resolved.clone(),
        seed: output.seed,
        passed: output.passed(),
        outputs,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Resolves, runs and records one experiment.
pub fn run_and_record(config: &ExperimentConfig, base_dir: &Path, dir: &Path) -> Result<(RunOutput, Manifest)> {
    let errors = config.validate(base_dir);
    if !errors.is_empty() {
        return Err(Error::Config(errors.join("; ")));
    }
    let resolved = resolve(config, base_dir)?;
    let output = run(&resolved, base_dir)?;
    let manifest = write_run(dir, &resolved, &output)?;
    Ok((output, manifest))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read manifest {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub identical: bool,
    /// Files whose hash differs, or that are missing on one side.
    pub mismatched: Vec<String>,
    pub output_dir: PathBuf,
}

/// Re-runs a manifest's config into `dir` and compares every output hash.
pub fn replay(manifest: &Manifest, dir: &Path) -> Result<ReplayReport> {
    if config_hash(&manifest.config) != manifest.config_sha256 {
        return Err(Error::Config("manifest config does not match its recorded hash".into()));
    }
    let (_, fresh) = run_and_record(&manifest.config, Path::new("."), dir)?;
    let mut mismatched = Vec::new();
    for old in &manifest.outputs {
        match fresh.outputs.iter().find(|o| o.file == old.file) {
            Some(new) if new.sha256 == old.sha256 => {}
            _ => mismatched.push(old.file.clone()),
        }
    }
    for new in &fresh.outputs {
        if !manifest.outputs.iter().any(|o| o.file == new.file) {
            mismatched.push(new.file.clone());
        }
    }
    Ok(ReplayReport { identical: mismatched.is_empty(), mismatched, output_dir: dir.to_path_buf() })
}
