use std::path::Path;

use spatter::eval::{evaluate, EvalConfig, FeatureRow};
use spatter::io::{self, fmt_f64};
use spatter::types::FeatureKind;

use super::Ctx;
use crate::error::CliError;
use crate::labels::LabelSource;

pub fn run(
    ctx: &Ctx,
    features: &Path,
    labels: Option<&Path>,
    kinds: &[FeatureKind],
    cfg: &EvalConfig,
) -> Result<(), CliError> {
    let records = io::read_features_csv(features)?;
    let label_src = LabelSource::load(labels)?;
    ctx.ensure_out()?;

    let mut reports = 0usize;
    for &kind in kinds {
        let mut rows = Vec::new();
        for rec in records.iter().filter(|r| r.kind == kind) {
            // The sidecar wins over the table's own mechanism column; the
            // column fills in for patterns the sidecar does not mention.
            let sidecar = label_src.sidecar_get(&rec.pattern_id);
            let mechanism = sidecar
                .and_then(|s| s.mechanism.clone())
                .or_else(|| rec.mechanism.clone())
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "pattern {:?} has no mechanism label",
                        rec.pattern_id
                    ))
                })?;
            rows.push(FeatureRow {
                pattern_id: rec.pattern_id.clone(),
                kind,
                f1: rec.f1,
                f2: rec.f2,
                mechanism,
                meta: sidecar.and_then(LabelSource::meta_of),
            });
        }
        if rows.is_empty() {
            eprintln!("note: no {kind} rows in {}", features.display());
            continue;
        }

        let report = evaluate(&rows, cfg)?;
        io::write_json_9sig(&ctx.out.join(format!("report_{kind}.json")), &report)?;
        io::write_tippett_csv(&ctx.out.join(format!("tippett_{kind}.csv")), &report.tippett)?;
        println!(
            "loocv {kind}: {} patterns, {:?} vs {:?}, threshold-1 error rate {}",
            report.n_patterns,
            report.numerator_label,
            report.denominator_label,
            fmt_f64(report.error_rate)
        );
        reports += 1;
    }

    if reports == 0 {
        return Err(CliError::Input(format!(
            "no feature rows of the requested kind in {}",
            features.display()
        )));
    }

    let mut mf = ctx.manifest("loocv");
    mf.add_input(features)?;
    if let Some(labels) = labels {
        mf.add_input(labels)?;
    }
    mf.write(&ctx.out)?;
    Ok(())
}
