//! Reasoning-trace data model: `<think>` segments (free text, grounded
//! evidence, motion tags) followed by an `<answer>` block.

mod parser;
mod serialize;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::BBox;
use crate::motion::{Direction, MotionDescriptor, Scale, Speed};

pub use parser::{parse_trace, validate_format};
pub use serialize::{format_number, serialize_trace};

/// One grounded observation: `<obj>o</obj><box>[..]</box> at <t>t</t>s`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceItem {
    pub object_name: String,
    pub bbox: BBox,
    pub timestamp: f64,
}

/// A self-closing `<motion obj=".." dir=".." speed=".." scale=".."/>` tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionTag {
    pub object_name: String,
    pub direction: Direction,
    pub speed: Speed,
    pub scale: Scale,
}

impl MotionTag {
    pub fn new(object_name: impl Into<String>, descriptor: MotionDescriptor) -> Self {
        Self {
            object_name: object_name.into(),
            direction: descriptor.direction,
            speed: descriptor.speed,
            scale: descriptor.scale,
        }
    }

    pub fn descriptor(&self) -> MotionDescriptor {
        MotionDescriptor::new(self.direction, self.speed, self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Text(String),
    Evidence(EvidenceItem),
    Motion(MotionTag),
}

/// A parsed response. Segment order is source order; free text is kept
/// verbatim so that serialization is lossless up to tag canonicalization.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub segments: Vec<Segment>,
    pub answer: String,
}

impl Trace {
    pub fn evidence(&self) -> impl Iterator<Item = &EvidenceItem> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Evidence(e) => Some(e),
            _ => None,
        })
    }

    pub fn motion_tags(&self) -> impl Iterator<Item = &MotionTag> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Motion(m) => Some(m),
            _ => None,
        })
    }
}

/// Character-offset span `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    MissingThink,
    UnbalancedThink,
    DuplicateThink,
    MissingAnswer,
    UnbalancedAnswer,
    DuplicateAnswer,
    MisorderedBlocks,
    TextOutsideBlocks,
    StrayTag,
    UnclosedTag,
    IncompleteEvidence,
    MalformedBox,
    BoxOutOfRange,
    DegenerateBox,
    MalformedTimestamp,
    NegativeTimestamp,
    EmptyObjectName,
    MalformedMotion,
    MissingMotionAttr,
    UnknownMotionAttr,
    DuplicateMotionAttr,
    BadDirectionVocab,
    BadSpeedVocab,
    BadScaleVocab,
    StatSpeedMismatch,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::MissingThink => "missing-think",
            Rule::UnbalancedThink => "unbalanced-think",
            Rule::DuplicateThink => "duplicate-think",
            Rule::MissingAnswer => "missing-answer",
            Rule::UnbalancedAnswer => "unbalanced-answer",
            Rule::DuplicateAnswer => "duplicate-answer",
            Rule::MisorderedBlocks => "misordered-blocks",
            Rule::TextOutsideBlocks => "text-outside-blocks",
            Rule::StrayTag => "stray-tag",
            Rule::UnclosedTag => "unclosed-tag",
            Rule::IncompleteEvidence => "incomplete-evidence",
            Rule::MalformedBox => "malformed-box",
            Rule::BoxOutOfRange => "box-out-of-range",
            Rule::DegenerateBox => "degenerate-box",
            Rule::MalformedTimestamp => "malformed-timestamp",
            Rule::NegativeTimestamp => "negative-timestamp",
            Rule::EmptyObjectName => "empty-object-name",
            Rule::MalformedMotion => "malformed-motion",
            Rule::MissingMotionAttr => "missing-motion-attr",
            Rule::UnknownMotionAttr => "unknown-motion-attr",
            Rule::DuplicateMotionAttr => "duplicate-motion-attr",
            Rule::BadDirectionVocab => "bad-direction-vocab",
            Rule::BadSpeedVocab => "bad-speed-vocab",
            Rule::BadScaleVocab => "bad-scale-vocab",
            Rule::StatSpeedMismatch => "stat-speed-mismatch",
        }
    }

    /// Rules the parser can tolerate; they only fail validation.
    pub fn is_lint_only(self) -> bool {
        matches!(self, Rule::NegativeTimestamp | Rule::StatSpeedMismatch)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: Rule,
    pub location: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{rule} at {}..{}: {message}", location.start, location.end)]
pub struct ParseError {
    pub rule: Rule,
    pub location: Span,
    pub message: String,
}

/// Case-insensitive identity key: lowercase with internal whitespace collapsed.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Evidence grouped by normalized object name, each group sorted by
/// timestamp. Of several items sharing a timestamp the later one wins.
pub fn extract_tracks(trace: &Trace) -> BTreeMap<String, Vec<(f64, BBox)>> {
    let mut groups: BTreeMap<String, Vec<(f64, BBox)>> = BTreeMap::new();
    for item in trace.evidence() {
        groups
            .entry(normalize_name(&item.object_name))
            .or_default()
            .push((item.timestamp, item.bbox));
    }
    for samples in groups.values_mut() {
        // stable sort keeps source order among equal timestamps
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut deduped: Vec<(f64, BBox)> = Vec::with_capacity(samples.len());
        for sample in samples.drain(..) {
            match deduped.last_mut() {
                Some(last) if last.0 == sample.0 => *last = sample,
                _ => deduped.push(sample),
            }
        }
        *samples = deduped;
    }
    groups
}

/// Motion tags grouped by normalized object name, in order of appearance.
pub fn extract_motion_tags(trace: &Trace) -> BTreeMap<String, Vec<MotionTag>> {
    let mut groups: BTreeMap<String, Vec<MotionTag>> = BTreeMap::new();
    for tag in trace.motion_tags() {
        groups
            .entry(normalize_name(&tag.object_name))
            .or_default()
            .push(tag.clone());
    }
    groups
}
