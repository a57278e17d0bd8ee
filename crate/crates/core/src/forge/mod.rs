//! Keyframe densification, motion-tag injection and record augmentation.

pub mod io;
pub mod oracle;
pub mod synthetic;

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::MotionDescriptor;
use crate::record::AnnotationRecord;
use crate::track::{motion_descriptor, GeometryError, MotionConfig, Sample, Track};
use crate::trace::{normalize_name, parse_trace, serialize_trace, MotionTag, ParseError, Segment};

pub use io::{read_records, write_records, ReadMode, RecordReader, SkippedLine};
pub use synthetic::{generate_synthetic, MotionKind, SyntheticSpec};

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid densify config: {0}")]
    InvalidConfig(String),
}

/// How boxes between two keyframes are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolator {
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensifyConfig {
    pub stride: f64,
    pub interpolator: Interpolator,
}

impl Default for DensifyConfig {
    fn default() -> Self {
        Self {
            stride: 0.5,
            interpolator: Interpolator::Linear,
        }
    }
}

impl DensifyConfig {
    pub fn validate(&self) -> Result<(), ForgeError> {
        if self.stride.is_finite() && self.stride > 0.0 {
            Ok(())
        } else {
            Err(ForgeError::InvalidConfig(format!("stride must be positive, got {}", self.stride)))
        }
    }
}

/// Inserted points closer than this to the next keyframe are dropped, so
/// float drift in `t_a + k * stride` never duplicates a keyframe.
const TIME_EPSILON: f64 = 1e-9;

/// Inserts samples every `stride` seconds inside each gap between
/// consecutive keyframes, anchored at the gap's left keyframe. Original
/// keyframes are kept unchanged.
pub fn densify_track(sparse: &Track, cfg: &DensifyConfig) -> Result<Track, ForgeError> {
    cfg.validate()?;
    let samples = sparse.samples();
    if samples.len() < 2 {
        return Err(GeometryError::TrackTooShort {
            len: samples.len(),
            needed: 2,
        }
        .into());
    }
    let mut dense = Vec::with_capacity(samples.len());
    for pair in samples.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        dense.push(a);
        let gap = b.t - a.t;
        let mut k = 1u64;
        loop {
            let t = a.t + k as f64 * cfg.stride;
            if b.t - t <= TIME_EPSILON {
                break;
            }
            let bbox = match cfg.interpolator {
                Interpolator::Linear => a.bbox.lerp(&b.bbox, (t - a.t) / gap),
            };
            dense.push(Sample::new(t, bbox));
            k += 1;
        }
    }
    dense.push(samples[samples.len() - 1]);
    Ok(Track::new(sparse.object_name(), dense)?)
}

/// Descriptor of every object with at least two keyframes, computed on its
/// densified track. Shorter objects are skipped.
pub fn compute_descriptors(
    record: &AnnotationRecord,
    dcfg: &DensifyConfig,
    mcfg: &MotionConfig,
) -> BTreeMap<String, MotionDescriptor> {
    let mut out = BTreeMap::new();
    for object in &record.record.objects {
        if object.keyframes.len() < 2 {
            continue;
        }
        let result = Track::new(object.name.clone(), object.keyframes.clone())
            .map_err(ForgeError::from)
            .and_then(|t| densify_track(&t, dcfg))
            .and_then(|t| Ok(motion_descriptor(&t, mcfg)?));
        match result {
            Ok(d) => {
                out.insert(object.name.clone(), d);
            }
            Err(e) => warn!("{}: skipping `{}`: {e}", record.record.video_id, object.name),
        }
    }
    out
}

/// Places one canonical motion tag right after the final evidence item of
/// every described object. A tag for the same object already sitting in
/// that slot is replaced, so injection is idempotent.
pub fn inject_motion_tags(trace_text: &str, descriptors: &BTreeMap<String, MotionDescriptor>) -> Result<String, ParseError> {
    let mut trace = parse_trace(trace_text)?;
    let by_key: BTreeMap<String, &MotionDescriptor> = descriptors
        .iter()
        .map(|(name, d)| (normalize_name(name), d))
        .collect();

    let mut last_mention: BTreeMap<String, usize> = BTreeMap::new();
    for (i, segment) in trace.segments.iter().enumerate() {
        if let Segment::Evidence(item) = segment {
            last_mention.insert(normalize_name(&item.object_name), i);
        }
    }

    let mut slots: Vec<(usize, String)> = last_mention
        .into_iter()
        .filter(|(key, _)| by_key.contains_key(key))
        .map(|(key, i)| (i, key))
        .collect();
    // back to front so earlier indices stay valid
    slots.sort_by_key(|s| std::cmp::Reverse(s.0));

    for (index, key) in slots {
        let Segment::Evidence(item) = &trace.segments[index] else {
            unreachable!("slot indices point at evidence items");
        };
        let tag = Segment::Motion(MotionTag::new(item.object_name.clone(), *by_key[&key]));
        let next = index + 1;
        let occupied = matches!(
            trace.segments.get(next),
            Some(Segment::Motion(m)) if normalize_name(&m.object_name) == key
        );
        if occupied {
            trace.segments[next] = tag;
        } else {
            trace.segments.insert(next, tag);
        }
    }
    Ok(serialize_trace(&trace))
}

/// Densifies keyframes, stores descriptors and tags the reasoning trace.
/// Per-object and per-trace problems are logged and skipped.
pub fn augment_record(record: &AnnotationRecord, dcfg: &DensifyConfig, mcfg: &MotionConfig) -> AnnotationRecord {
    let mut out = record.clone();
    let mut computed = BTreeMap::new();
    for object in &mut out.record.objects {
        if object.keyframes.len() < 2 {
            if !object.keyframes.is_empty() {
                warn!(
                    "{}: `{}` has a single keyframe; no descriptor",
                    record.record.video_id, object.name
                );
            }
            continue;
        }
        let dense = Track::new(object.name.clone(), object.keyframes.clone())
            .map_err(ForgeError::from)
            .and_then(|t| densify_track(&t, dcfg));
        let dense = match dense {
            Ok(t) => t,
            Err(e) => {
                warn!("{}: skipping `{}`: {e}", record.record.video_id, object.name);
                continue;
            }
        };
        match motion_descriptor(&dense, mcfg) {
            Ok(d) => {
                computed.insert(object.name.clone(), d);
            }
            Err(e) => warn!("{}: no descriptor for `{}`: {e}", record.record.video_id, object.name),
        }
        object.keyframes = dense.samples().to_vec();
    }

    if !computed.is_empty() {
        let stored = out.record.gt_descriptors.get_or_insert_with(BTreeMap::new);
        for (name, d) in &computed {
            stored.insert(name.clone(), vec![*d]);
        }
    }

    if let Some(trace) = &record.think_trace {
        match inject_motion_tags(trace, &computed) {
            Ok(tagged) => out.think_trace = Some(tagged),
            Err(e) => warn!("{}: trace left untouched: {e}", record.record.video_id),
        }
    }
    out
}
