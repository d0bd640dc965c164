use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector2;

use spatter::io;
use spatter::model::{CovarianceDivisor, GaussianModel};
use spatter::types::FeatureKind;

use super::{slug, Ctx};
use crate::error::CliError;

pub fn run(
    ctx: &Ctx,
    features: &Path,
    label: Option<&str>,
    kinds: &[FeatureKind],
    divisor: CovarianceDivisor,
) -> Result<(), CliError> {
    let rows = io::read_features_csv(features)?;
    ctx.ensure_out()?;

    let mut written = Vec::new();
    let mut unlabeled = 0usize;
    for &kind in kinds {
        let mut groups: BTreeMap<String, Vec<Vector2<f64>>> = BTreeMap::new();
        for row in rows.iter().filter(|r| r.kind == kind) {
            match &row.mechanism {
                Some(m) => groups
                    .entry(m.label().to_string())
                    .or_default()
                    .push(Vector2::new(row.f1, row.f2)),
                None => unlabeled += 1,
            }
        }
        if let Some(want) = label {
            if groups.contains_key(want) {
                groups.retain(|k, _| k == want);
            } else {
                continue;
            }
        }
        for (hypothesis, points) in groups {
            let model = GaussianModel::fit_with(&points, kind, hypothesis.clone(), divisor)?;
            let name = format!("model_{}_{kind}.json", slug(&hypothesis));
            io::write_model_json(&ctx.out.join(&name), &model)?;
            written.push(name);
        }
    }

    if written.is_empty() {
        return Err(match label {
            Some(want) => CliError::Input(format!(
                "label {want:?} not present in {}",
                features.display()
            )),
            None => CliError::Input(format!(
                "no labeled feature rows in {} ({unlabeled} unlabeled)",
                features.display()
            )),
        });
    }
    if unlabeled > 0 {
        eprintln!("warning: {unlabeled} unlabeled rows ignored");
    }

    let mut mf = ctx.manifest("fit");
    mf.add_input(features)?;
    mf.write(&ctx.out)?;

    println!(
        "fit: {} models -> {} ({})",
        written.len(),
        written.join(", "),
        ctx.out.display()
    );
    Ok(())
}
