//! Config-driven experiments: validation, runners, result tables and
//! reproducibility manifests.

mod config;
mod manifest;
mod run;
mod suite;

pub use config::*;
pub use manifest::{
    config_hash, read_manifest, replay, resolve, run_and_record, sha256_hex, write_run, Manifest, OutputHash,
    ReplayReport, CONFIG_FILE, MANIFEST_FILE,
};
pub use run::{calibrate_fd, run, Artifact, AssertionFailure, RunOutput, DEFAULT_SEED};
pub use suite::*;
