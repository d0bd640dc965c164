use std::path::{Path, PathBuf};

use spatter::features::{feature_vector, FeatureConfig};
use spatter::io::{self, FeatureRecord};
use spatter::types::{validate_pattern, FeatureKind, PatternRecord};

use super::{expand_inputs, stem_of, Ctx};
use crate::error::CliError;
use crate::labels::LabelSource;

pub fn run(
    ctx: &Ctx,
    ellipses: &[PathBuf],
    labels: Option<&Path>,
    kinds: &[FeatureKind],
    cfg: &FeatureConfig,
) -> Result<(), CliError> {
    let files = expand_inputs(ellipses, &["csv"])?;
    if files.is_empty() {
        return Err(CliError::Input("no ellipse tables".into()));
    }
    let label_src = LabelSource::load(labels)?;

    let mut records: Vec<FeatureRecord> = Vec::new();
    let mut skipped = 0usize;
    for file in &files {
        let id = stem_of(file);
        let table = io::read_ellipse_csv(file)?;
        let resolved = label_src.resolve(&id);
        let mut pattern = PatternRecord::new(id, table);
        pattern.mechanism = resolved.mechanism;
        pattern.source_meta = resolved.meta;
        match validate_pattern(pattern) {
            Ok(valid) => {
                for &kind in kinds {
                    let fv = feature_vector(&valid, kind, cfg);
                    records.push(FeatureRecord {
                        pattern_id: fv.pattern_id,
                        kind,
                        f1: fv.f1,
                        f2: fv.f2,
                        n_ellipses: valid.ellipses.len(),
                        mechanism: valid.mechanism.clone(),
                    });
                }
            }
            Err(rejection) => {
                eprintln!("warning: skipping {}: {rejection}", file.display());
                skipped += 1;
            }
        }
    }
    if records.is_empty() {
        return Err(CliError::Input(format!(
            "no usable patterns among {} tables ({skipped} skipped)",
            files.len()
        )));
    }
    records.sort_by(|a, b| {
        (a.pattern_id.as_str(), a.kind.to_string()).cmp(&(b.pattern_id.as_str(), b.kind.to_string()))
    });

    ctx.ensure_out()?;
    io::write_features_csv(&ctx.out.join("features.csv"), &records)?;

    let mut mf = ctx.manifest("features");
    for file in &files {
        mf.add_input(file)?;
    }
    if let Some(labels) = labels {
        mf.add_input(labels)?;
    }
    mf.write(&ctx.out)?;

    println!(
        "features: {} rows from {} patterns ({} skipped) -> {}",
        records.len(),
        files.len() - skipped,
        skipped,
        ctx.out.join("features.csv").display()
    );
    Ok(())
}
