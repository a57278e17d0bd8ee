//! Annotated video records: the ground truth that rewards are computed
//! against, and the line-delimited form the dataset tools read and write.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::MotionDescriptor;
use crate::track::{Sample, Track};
use crate::trace::normalize_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerKind {
    Mcq,
    Freeform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAnnotation {
    pub name: String,
    pub keyframes: Vec<Sample>,
}

impl ObjectAnnotation {
    pub fn track(&self) -> Option<Track> {
        Track::new(self.name.clone(), self.keyframes.clone()).ok()
    }
}

pub type DescriptorMap = BTreeMap<String, Vec<MotionDescriptor>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub video_id: String,
    pub duration: f64,
    pub question: String,
    pub answer_kind: AnswerKind,
    pub gt_answer: String,
    pub objects: Vec<ObjectAnnotation>,
    #[serde(rename = "descriptors", default, skip_serializing_if = "Option::is_none")]
    pub gt_descriptors: Option<DescriptorMap>,
}

/// A structural problem with a record, located by a field path such as
/// `objects[1].keyframes[0].t`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Prepends `prefix` to the path, e.g. `[1].record`.
    pub fn within(mut self, prefix: &str) -> Self {
        self.path = join_path(prefix, &self.path);
        self
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

pub(crate) fn join_path(prefix: &str, path: &str) -> String {
    match (prefix.is_empty(), path.is_empty()) {
        (true, _) => path.to_string(),
        (_, true) => prefix.to_string(),
        _ if path.starts_with('[') => format!("{prefix}{path}"),
        _ => format!("{prefix}.{path}"),
    }
}

/// Deserializes JSON, reporting failures with the offending field path.
pub fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::new(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    Ok(value)
}

/// Like [`from_json_str`] for an already parsed value.
pub fn from_json_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, SchemaError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::new(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

impl GroundTruthRecord {
    pub fn validate(&self) -> Result<(), SchemaError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(SchemaError::new("duration", "must be a positive number of seconds"));
        }
        let mut seen = BTreeSet::new();
        for (i, object) in self.objects.iter().enumerate() {
            let key = normalize_name(&object.name);
            if key.is_empty() {
                return Err(SchemaError::new(format!("objects[{i}].name"), "object name is empty"));
            }
            if !seen.insert(key) {
                return Err(SchemaError::new(
                    format!("objects[{i}].name"),
                    format!("duplicate object `{}`", object.name),
                ));
            }
            for (k, kf) in object.keyframes.iter().enumerate() {
                if !(kf.t.is_finite() && kf.t >= 0.0) {
                    return Err(SchemaError::new(
                        format!("objects[{i}].keyframes[{k}].t"),
                        "timestamp must be a finite, non-negative number",
                    ));
                }
                if k > 0 && object.keyframes[k - 1].t >= kf.t {
                    return Err(SchemaError::new(
                        format!("objects[{i}].keyframes[{k}].t"),
                        "keyframes must be strictly time-ordered",
                    ));
                }
            }
        }
        if let Some(descriptors) = &self.gt_descriptors {
            for (name, list) in descriptors {
                if let Some(j) = list.iter().position(|d| !d.is_coupled()) {
                    return Err(SchemaError::new(
                        format!("descriptors.{name}[{j}]"),
                        "dir STAT and speed stationary must occur together",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Looks up an object by normalized name.
    pub fn object(&self, name: &str) -> Option<&ObjectAnnotation> {
        let key = normalize_name(name);
        self.objects.iter().find(|o| normalize_name(&o.name) == key)
    }

    pub fn keyframe_count(&self) -> usize {
        self.objects.iter().map(|o| o.keyframes.len()).sum()
    }
}

/// A ground-truth record plus an optional reasoning trace to augment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "AnnotationWire", into = "AnnotationWire")]
pub struct AnnotationRecord {
    pub record: GroundTruthRecord,
    pub think_trace: Option<String>,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<(), SchemaError> {
        self.record.validate()
    }
}

impl From<GroundTruthRecord> for AnnotationRecord {
    fn from(record: GroundTruthRecord) -> Self {
        Self {
            record,
            think_trace: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AnnotationWire {
    video_id: String,
    duration: f64,
    question: String,
    answer_kind: AnswerKind,
    gt_answer: String,
    objects: Vec<ObjectAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    descriptors: Option<DescriptorMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    think_trace: Option<String>,
}

impl From<AnnotationWire> for AnnotationRecord {
    fn from(w: AnnotationWire) -> Self {
        Self {
            record: GroundTruthRecord {
                video_id: w.video_id,
                duration: w.duration,
                question: w.question,
                answer_kind: w.answer_kind,
                gt_answer: w.gt_answer,
                objects: w.objects,
                gt_descriptors: w.descriptors,
            },
            think_trace: w.think_trace,
        }
    }
}

impl From<AnnotationRecord> for AnnotationWire {
    fn from(a: AnnotationRecord) -> Self {
        let r = a.record;
        Self {
            video_id: r.video_id,
            duration: r.duration,
            question: r.question,
            answer_kind: r.answer_kind,
            gt_answer: r.gt_answer,
            objects: r.objects,
            descriptors: r.gt_descriptors,
            think_trace: a.think_trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"video_id":"v1","duration":10,"question":"where?","answer_kind":"mcq","gt_answer":"B","objects":[{"name":"duck","keyframes":[{"t":1,"box":[0.1,0.1,0.2,0.2]},{"t":2,"box":[0.3,0.1,0.4,0.2]}]}],"descriptors":{"duck":[{"dir":"E","speed":"slow","scale":"stable"}]},"think_trace":"<think></think><answer>B</answer>"}"#;

    #[test]
    fn parses_wire_schema() {
        let rec: AnnotationRecord = from_json_str(LINE).unwrap();
        assert_eq!(rec.record.video_id, "v1");
        assert_eq!(rec.record.objects[0].keyframes.len(), 2);
        assert!(rec.think_trace.is_some());
        assert!(rec.validate().is_ok());
        let back = serde_json::to_string(&rec).unwrap();
        assert_eq!(back, LINE.replace("\"duration\":10", "\"duration\":10.0").replace("\"t\":1,", "\"t\":1.0,").replace("\"t\":2,", "\"t\":2.0,"));
    }

    #[test]
    fn missing_field_is_named() {
        let line = LINE.replace(r#""video_id":"v1","#, "");
        let err = from_json_str::<AnnotationRecord>(&line).unwrap_err();
        assert!(err.message.contains("video_id"), "{err}");
    }

    #[test]
    fn bad_box_has_path() {
        let line = LINE.replace("[0.3,0.1,0.4,0.2]", "[0.5,0.1,0.4,0.2]");
        let err = from_json_str::<AnnotationRecord>(&line).unwrap_err();
        assert_eq!(err.path, "objects[0].keyframes[1].box");
    }

    #[test]
    fn semantic_validation() {
        let mut rec: AnnotationRecord = from_json_str(LINE).unwrap();
        rec.record.objects[0].keyframes.swap(0, 1);
        assert_eq!(rec.validate().unwrap_err().path, "objects[0].keyframes[1].t");

        let mut rec: AnnotationRecord = from_json_str(LINE).unwrap();
        rec.record.duration = 0.0;
        assert_eq!(rec.validate().unwrap_err().path, "duration");

        let mut rec: AnnotationRecord = from_json_str(LINE).unwrap();
        let dup = rec.record.objects[0].clone();
        rec.record.objects.push(ObjectAnnotation { name: "Duck ".into(), ..dup });
        assert_eq!(rec.validate().unwrap_err().path, "objects[1].name");
    }

    #[test]
    fn path_prefixing() {
        let e = SchemaError::new("objects[0].name", "x").within("[1].record");
        assert_eq!(e.path, "[1].record.objects[0].name");
        assert_eq!(SchemaError::new("", "x").within("[2]").path, "[2]");
        assert_eq!(SchemaError::new("[0]", "x").within("objects").path, "objects[0]");
    }
}
