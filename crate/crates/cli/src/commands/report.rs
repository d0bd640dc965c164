use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use spatter::eval::{
    condition_breakdown, confusion_threshold, confusion_zones, tippett, EvalConfig,
    EvaluationReport, ScoredPattern,
};
use spatter::io::{self, fmt_f64, LabelRecord};
use spatter::model::LRResult;

use super::Ctx;
use crate::error::CliError;
use crate::labels::LabelSource;

/// Rebuilds an evaluation report from already-scored ratios plus a labels
/// table. Unlike `loocv` this never refits anything, so the report carries
/// no confidence ellipses; everything else is recomputed from the scores.
pub fn run(ctx: &Ctx, lr: &Path, labels: &Path, cfg: &EvalConfig) -> Result<(), CliError> {
    let scored_rows = io::read_lr_csv(lr)?;
    if scored_rows.is_empty() {
        return Err(CliError::Input(format!("no scored ratios in {}", lr.display())));
    }
    let kind = scored_rows[0].kind;
    if scored_rows.iter().any(|r| r.kind != kind) {
        return Err(CliError::Input(format!(
            "{} mixes circular and spherical rows; evaluate one kind at a time",
            lr.display()
        )));
    }

    let label_map: HashMap<String, LabelRecord> = io::read_labels_csv(labels)?
        .into_iter()
        .map(|r| (r.pattern_id.clone(), r))
        .collect();

    let mut true_labels = Vec::with_capacity(scored_rows.len());
    let mut distinct = BTreeSet::new();
    for row in &scored_rows {
        let rec = label_map.get(&row.pattern_id).ok_or_else(|| {
            CliError::Input(format!(
                "pattern {:?} missing from {}",
                row.pattern_id,
                labels.display()
            ))
        })?;
        let mechanism = rec.mechanism.clone().ok_or_else(|| {
            CliError::Input(format!(
                "pattern {:?} has no mechanism label",
                row.pattern_id
            ))
        })?;
        let label = mechanism.label().to_string();
        distinct.insert(label.clone());
        true_labels.push(label);
    }
    let distinct: Vec<String> = distinct.into_iter().collect();
    if distinct.len() != 2 {
        return Err(CliError::Input(format!(
            "need exactly 2 mechanism labels, found {distinct:?}"
        )));
    }
    let (num_label, den_label) = match cfg.numerator.as_deref() {
        None => (distinct[0].clone(), distinct[1].clone()),
        Some(l) if l == distinct[0] => (distinct[0].clone(), distinct[1].clone()),
        Some(l) if l == distinct[1] => (distinct[1].clone(), distinct[0].clone()),
        Some(l) => {
            return Err(CliError::Usage(format!(
                "numerator {l:?} not among mechanisms {distinct:?}"
            )))
        }
    };

    let scored: Vec<ScoredPattern> = scored_rows
        .into_iter()
        .zip(true_labels)
        .map(|(row, true_label)| ScoredPattern {
            meta: label_map.get(&row.pattern_id).and_then(LabelSource::meta_of),
            result: LRResult {
                pattern_id: row.pattern_id,
                kind,
                lr: row.lr,
                log10_lr: row.log10_lr,
                numerator_hypothesis: num_label.clone(),
                denominator_hypothesis: den_label.clone(),
            },
            true_label,
        })
        .collect();

    let confusion = confusion_threshold(&scored, 1.0, cfg.tie_rule)?;
    let zones = confusion_zones(&scored, cfg.zone_lower, cfg.zone_upper)?;
    let curves = tippett(&scored)?;
    let breakdown = condition_breakdown(&scored, cfg.distance_bucket_cm, cfg.tie_rule)?;
    let report = EvaluationReport {
        kind,
        numerator_label: num_label,
        denominator_label: den_label,
        n_patterns: scored.len(),
        error_rate: confusion.error_rate(),
        confusion,
        zones,
        tippett: curves,
        confidence_ellipses: Vec::new(),
        breakdown,
        results: scored,
    };

    ctx.ensure_out()?;
    io::write_json_9sig(&ctx.out.join(format!("report_{kind}.json")), &report)?;
    io::write_tippett_csv(&ctx.out.join(format!("tippett_{kind}.csv")), &report.tippett)?;

    let mut mf = ctx.manifest("report");
    mf.add_input(lr)?;
    mf.add_input(labels)?;
    mf.write(&ctx.out)?;

    println!(
        "report {kind}: {} patterns, {:?} vs {:?}, threshold-1 error rate {}",
        report.n_patterns,
        report.numerator_label,
        report.denominator_label,
        fmt_f64(report.error_rate)
    );
    Ok(())
}
