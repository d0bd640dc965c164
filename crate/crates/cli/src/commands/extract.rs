use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use spatter::io;
use spatter::pipeline::{extract_pattern_detailed, ColorImage, ExtractionStats, PipelineConfig};
use spatter::types::{Ellipse, MIN_ELLIPSES};

use super::{expand_inputs, stem_of, Ctx};
use crate::error::CliError;
use crate::manifest::{self, InputDigest};

const IMAGE_EXTS: [&str; 5] = ["png", "jpg", "jpeg", "tif", "tiff"];

/// One line of `extraction_log.json`.
#[derive(Debug, Serialize)]
struct LogEntry {
    file: String,
    pattern_id: String,
    /// `accepted`, `rejected` (too few ellipses for modeling) or `error`.
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_ellipses: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<ExtractionStats>,
}

struct FileOutcome {
    entry: LogEntry,
    table: Option<(String, Vec<Ellipse>)>,
    digest: Option<InputDigest>,
}

pub fn run(ctx: &Ctx, images: &[PathBuf], cfg: &PipelineConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let files = expand_inputs(images, &IMAGE_EXTS)?;
    if files.is_empty() {
        return Err(CliError::Input("no input images".into()));
    }

    // Each image's table is written under its file stem, so stems must be
    // unique across the whole input set.
    let mut stems: BTreeMap<String, &Path> = BTreeMap::new();
    for f in &files {
        if let Some(prev) = stems.insert(stem_of(f), f) {
            return Err(CliError::Input(format!(
                "duplicate pattern id {:?}: {} and {}",
                stem_of(f),
                prev.display(),
                f.display()
            )));
        }
    }

    ctx.ensure_out()?;

    let outcomes: Vec<FileOutcome> = files.par_iter().map(|path| process(path, cfg)).collect();

    let failed = outcomes.iter().filter(|o| o.entry.status == "error").count();
    if failed == files.len() {
        return Err(CliError::Input(format!(
            "all {} input images failed; see stderr",
            files.len()
        )));
    }

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut entries = Vec::with_capacity(outcomes.len());
    let mut mf = ctx.manifest("extract");
    for outcome in outcomes {
        match outcome.entry.status {
            "accepted" => accepted += 1,
            "rejected" => rejected += 1,
            _ => eprintln!(
                "warning: {}: {}",
                outcome.entry.file,
                outcome.entry.reason.as_deref().unwrap_or("failed")
            ),
        }
        if let Some((stem, ellipses)) = outcome.table {
            io::write_ellipse_csv(&ctx.out.join(format!("{stem}.csv")), &ellipses)?;
        }
        if let Some(digest) = outcome.digest {
            mf.extend_inputs([digest]);
        }
        entries.push(outcome.entry);
    }

    io::write_json_9sig(&ctx.out.join("extraction_log.json"), &entries)?;
    mf.write(&ctx.out)?;

    println!(
        "extract: {} images -> {} accepted, {} rejected, {} failed ({})",
        files.len(),
        accepted,
        rejected,
        failed,
        ctx.out.display()
    );
    Ok(())
}

fn process(path: &Path, cfg: &PipelineConfig) -> FileOutcome {
    let file = path.display().to_string();
    let id = stem_of(path);
    let error = |reason: String, digest: Option<InputDigest>| FileOutcome {
        entry: LogEntry {
            file: file.clone(),
            pattern_id: id.clone(),
            status: "error",
            reason: Some(reason),
            n_ellipses: None,
            stats: None,
        },
        table: None,
        digest,
    };

    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => return error(format!("cannot read: {e}"), None),
    };
    let digest = InputDigest {
        path: file.clone(),
        sha256: manifest::sha256_hex(&bytes),
    };

    let img = match ColorImage::load(path) {
        Ok(img) => img,
        Err(e) => return error(e.to_string(), Some(digest)),
    };
    let extraction = match extract_pattern_detailed(&img, &id, cfg) {
        Ok(x) => x,
        Err(e) => return error(e.to_string(), Some(digest)),
    };

    let n = extraction.record.ellipses.len();
    let (status, reason) = if n >= MIN_ELLIPSES {
        ("accepted", None)
    } else {
        (
            "rejected",
            Some(format!("only {n} ellipses, need at least {MIN_ELLIPSES}")),
        )
    };
    FileOutcome {
        entry: LogEntry {
            file,
            pattern_id: id.clone(),
            status,
            reason,
            n_ellipses: Some(n),
            stats: Some(extraction.stats),
        },
        table: Some((id, extraction.record.ellipses)),
        digest: Some(digest),
    }
}
