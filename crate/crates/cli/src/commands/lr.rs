use std::path::{Path, PathBuf};

use spatter::io;
use spatter::model::{generalized_lr, likelihood_ratio, GaussianModel, HypothesisSet, LRResult};
use spatter::types::FeatureVector;

use super::Ctx;
use crate::error::CliError;

pub fn run(
    ctx: &Ctx,
    features: &Path,
    numerator: &Path,
    denominators: &[PathBuf],
    weights: Option<&[f64]>,
) -> Result<(), CliError> {
    let num = io::read_model_json(numerator)?;
    let dens: Vec<GaussianModel> = denominators
        .iter()
        .map(|p| io::read_model_json(p))
        .collect::<Result<_, _>>()?;
    if let Some(w) = weights {
        if w.len() != dens.len() {
            return Err(CliError::Usage(format!(
                "{} weights given for {} denominator models",
                w.len(),
                dens.len()
            )));
        }
    }

    let rows = io::read_features_csv(features)?;
    let vectors: Vec<FeatureVector> = rows
        .iter()
        .filter(|r| r.kind == num.kind)
        .map(|r| FeatureVector {
            pattern_id: r.pattern_id.clone(),
            kind: r.kind,
            f1: r.f1,
            f2: r.f2,
        })
        .collect();
    if vectors.is_empty() {
        return Err(CliError::Input(format!(
            "no {} feature rows in {}",
            num.kind,
            features.display()
        )));
    }

    // A single unweighted denominator takes the direct two-model path; with
    // several alternatives the denominator is their prior-weighted mixture.
    let results: Vec<LRResult> = if dens.len() == 1 && weights.is_none() {
        vectors
            .iter()
            .map(|v| likelihood_ratio(v, &num, &dens[0]))
            .collect::<Result<_, _>>()?
    } else {
        let set = match weights {
            Some(w) => HypothesisSet::with_weights(dens, w.to_vec())?,
            None => HypothesisSet::new(dens)?,
        };
        vectors
            .iter()
            .map(|v| generalized_lr(v, &num, &set))
            .collect::<Result<_, _>>()?
    };

    ctx.ensure_out()?;
    io::write_lr_csv(&ctx.out.join("lr.csv"), &results)?;

    let mut mf = ctx.manifest("lr");
    mf.add_input(features)?;
    mf.add_input(numerator)?;
    for p in denominators {
        mf.add_input(p)?;
    }
    mf.write(&ctx.out)?;

    println!(
        "lr: {} patterns scored against {:?} -> {}",
        results.len(),
        num.hypothesis,
        ctx.out.join("lr.csv").display()
    );
    Ok(())
}
