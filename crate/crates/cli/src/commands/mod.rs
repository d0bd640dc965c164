pub mod extract;
pub mod features;
pub mod fit;
pub mod loocv;
pub mod lr;
pub mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::Manifest;

/// Everything a subcommand gets from the global flags.
pub struct Ctx {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub config_sha256: String,
}

impl Ctx {
    pub fn ensure_out(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| {
            CliError::Input(format!(
                "cannot create output directory {}: {e}",
                self.out.display()
            ))
        })
    }

    pub fn manifest(&self, command: &str) -> Manifest {
        Manifest::new(command, self.seed, &self.config_sha256)
    }
}

/// Expands a mix of files and directories into a sorted, deduplicated file
/// list. Directories are scanned one level deep for the given extensions
/// (case-insensitive); files named explicitly are taken as-is.
pub fn expand_inputs(paths: &[PathBuf], exts: &[&str]) -> Result<Vec<PathBuf>, CliError> {
    let mut found = BTreeSet::new();
    for path in paths {
        let meta = fs::metadata(path)
            .map_err(|e| CliError::Input(format!("cannot access {}: {e}", path.display())))?;
        if meta.is_dir() {
            let entries = fs::read_dir(path)
                .map_err(|e| CliError::Input(format!("cannot list {}: {e}", path.display())))?;
            for entry in entries {
                let entry = entry
                    .map_err(|e| CliError::Input(format!("cannot list {}: {e}", path.display())))?;
                let p = entry.path();
                if p.is_file() && has_extension(&p, exts) {
                    found.insert(p);
                }
            }
        } else {
            found.insert(path.clone());
        }
    }
    Ok(found.into_iter().collect())
}

fn has_extension(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|want| e.eq_ignore_ascii_case(want)))
}

/// File stem used as the pattern id.
pub fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Turns a hypothesis label into a safe file-name fragment.
pub fn slug(label: &str) -> String {
    let mut out: String = label
        .chars()
        .map(|c| {
            let c = c.to_ascii_lowercase();
            if c.is_ascii_alphanumeric() {
                c
            } else {
                '-'
            }
        })
        .collect();
    while out.contains("--") {
        out = out.replace("--", "-");
    }
    let trimmed = out.trim_matches('-');
    if trimmed.is_empty() {
        "unnamed".into()
    } else {
        trimmed.into()
    }
}
