use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use spatter::io::{self, LabelRecord};
use spatter::types::{Mechanism, SourceMeta};

use crate::error::CliError;

/// Ground-truth metadata for one pattern, however it was obtained.
#[derive(Debug, Clone, Default)]
pub struct Resolved {
    pub mechanism: Option<Mechanism>,
    pub meta: Option<SourceMeta>,
}

/// Label lookup backed by an optional sidecar CSV, falling back to a
/// best-effort parse of the pattern id itself.
///
/// When the sidecar has a row for a pattern, that row wins outright; the
/// filename is only consulted for patterns the sidecar does not mention.
pub struct LabelSource {
    sidecar: HashMap<String, LabelRecord>,
}

impl LabelSource {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut sidecar = HashMap::new();
        if let Some(path) = path {
            for rec in io::read_labels_csv(path)? {
                sidecar.insert(rec.pattern_id.clone(), rec);
            }
        }
        Ok(LabelSource { sidecar })
    }

    pub fn resolve(&self, pattern_id: &str) -> Resolved {
        if let Some(rec) = self.sidecar.get(pattern_id) {
            return Resolved {
                mechanism: rec.mechanism.clone(),
                meta: Self::meta_of(rec),
            };
        }
        infer_from_name(pattern_id)
    }

    /// The sidecar row itself, without the filename fallback.
    pub fn sidecar_get(&self, pattern_id: &str) -> Option<&LabelRecord> {
        self.sidecar.get(pattern_id)
    }

    /// Acquisition metadata carried by a sidecar row, if any.
    pub fn meta_of(rec: &LabelRecord) -> Option<SourceMeta> {
        pack_meta(rec.distance_cm, rec.velocity_level.clone())
    }
}

fn pack_meta(distance_cm: Option<f64>, velocity_level: Option<String>) -> Option<SourceMeta> {
    let meta = SourceMeta {
        distance_cm,
        velocity_level,
    };
    (!meta.is_empty()).then_some(meta)
}

/// Pulls mechanism, distance and velocity level out of a pattern id like
/// `impact_high_30cm_007` or `Gunshot-d45-2`. Purely heuristic: anything
/// that does not match stays unknown.
pub fn infer_from_name(pattern_id: &str) -> Resolved {
    static MECHANISM: OnceLock<Regex> = OnceLock::new();
    static DISTANCE: OnceLock<Regex> = OnceLock::new();
    static VELOCITY: OnceLock<Regex> = OnceLock::new();
    let mech_re = MECHANISM
        .get_or_init(|| Regex::new(r"(?i)(?:^|[_\-\s.])(impact|gunshot|gun)(?:$|[_\-\s.0-9])").unwrap());
    let dist_re = DISTANCE
        .get_or_init(|| Regex::new(r"(?i)(?:^|[_\-\s.])(?:d(\d+)|(\d+)\s*cm)(?:$|[_\-\s.])").unwrap());
    let vel_re = VELOCITY
        .get_or_init(|| Regex::new(r"(?i)(?:^|[_\-\s.])(high|medium|low)(?:$|[_\-\s.])").unwrap());

    let mechanism = mech_re.captures(pattern_id).map(|c| {
        match c[1].to_ascii_lowercase().as_str() {
            "impact" => Mechanism::Impact,
            _ => Mechanism::Gunshot,
        }
    });
    let distance_cm = dist_re.captures(pattern_id).and_then(|c| {
        c.get(1)
            .or_else(|| c.get(2))
            .and_then(|m| m.as_str().parse::<f64>().ok())
    });
    let velocity_level = vel_re
        .captures(pattern_id)
        .map(|c| c[1].to_ascii_lowercase());

    Resolved {
        mechanism,
        meta: pack_meta(distance_cm, velocity_level),
    }
}
