//! Wire types of the scoring service and their in-process evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::record::{from_json_value, GroundTruthRecord, SchemaError};
use crate::reward::{score_detailed, ObjectScores, RewardBreakdown, RewardConfig, RewardConfigOverrides, MotionConfigOverrides};
use crate::track::{motion_descriptor, GeometryError, MotionConfig, Sample, Track};
use crate::motion::MotionDescriptor;
use crate::trace::FormatReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub prediction: String,
    pub record: GroundTruthRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masked_prediction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_overrides: Option<RewardConfigOverrides>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub breakdown: RewardBreakdown,
    /// Present only when the prediction fails format validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<FormatReport>,
    pub per_object: BTreeMap<String, ObjectScores>,
}

impl ScoreResponse {
    pub fn compute(prediction: &str, record: &GroundTruthRecord, masked_prediction: Option<&str>, cfg: &RewardConfig) -> Self {
        let detail = score_detailed(prediction, record, masked_prediction, cfg);
        Self {
            breakdown: detail.breakdown,
            diagnostics: (!detail.report.valid).then_some(detail.report),
            per_object: detail.per_object,
        }
    }

    /// All-zero response for a prediction that could not be joined to a record.
    pub fn zero() -> Self {
        Self {
            breakdown: RewardBreakdown::default(),
            diagnostics: None,
            per_object: BTreeMap::new(),
        }
    }
}

impl ScoreRequest {
    /// Structural checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), SchemaError> {
        self.record.validate().map_err(|e| e.within("record"))
    }

    pub fn effective_config(&self, base: &RewardConfig) -> Result<RewardConfig, SchemaError> {
        let mut cfg = *base;
        if let Some(o) = &self.config_overrides {
            cfg.apply(o);
            cfg.validate()
                .map_err(|m| SchemaError::new("config_overrides", m))?;
        }
        Ok(cfg)
    }
}

/// Scores one validated request against a base configuration.
pub fn score_request(request: &ScoreRequest, base: &RewardConfig) -> Result<ScoreResponse, SchemaError> {
    request.validate()?;
    let cfg = request.effective_config(base)?;
    Ok(ScoreResponse::compute(
        &request.prediction,
        &request.record,
        request.masked_prediction.as_deref(),
        &cfg,
    ))
}

/// Parses and validates a request body: either one request object or an
/// array of them. Errors carry the field path, e.g. `[1].record.objects`.
pub fn parse_score_body(body: serde_json::Value) -> Result<ScoreBody, SchemaError> {
    match body {
        serde_json::Value::Array(items) => {
            let mut requests = Vec::with_capacity(items.len());
            for (i, item) in items.into_iter().enumerate() {
                let prefix = format!("[{i}]");
                let req: ScoreRequest = from_json_value(item).map_err(|e| e.within(&prefix))?;
                req.validate().map_err(|e| e.within(&prefix))?;
                requests.push(req);
            }
            Ok(ScoreBody::Batch(requests))
        }
        single => {
            let req: ScoreRequest = from_json_value(single)?;
            req.validate()?;
            Ok(ScoreBody::Single(Box::new(req)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreBody {
    Single(Box<ScoreRequest>),
    Batch(Vec<ScoreRequest>),
}

impl ScoreBody {
    pub fn len(&self) -> usize {
        match self {
            ScoreBody::Single(_) => 1,
            ScoreBody::Batch(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Body of a descriptor request: a track plus optional threshold overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorRequest {
    #[serde(default)]
    pub object_name: String,
    pub samples: Vec<Sample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<MotionConfigOverrides>,
}

#[derive(Debug, thiserror::Error)]
pub enum DescriptorError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl DescriptorError {
    /// Short machine-readable name, e.g. `TrackTooShort`.
    pub fn kind(&self) -> &'static str {
        match self {
            DescriptorError::Schema(_) => "SchemaError",
            DescriptorError::Geometry(g) => match g {
                GeometryError::TrackTooShort { .. } => "TrackTooShort",
                GeometryError::ZeroDuration => "ZeroDuration",
                GeometryError::ZeroVector => "ZeroVector",
                GeometryError::Unordered { .. } => "UnorderedTrack",
                GeometryError::InvalidConfig(_) => "InvalidConfig",
            },
        }
    }
}

pub fn describe_track(request: &DescriptorRequest, base: &MotionConfig) -> Result<MotionDescriptor, DescriptorError> {
    let mut cfg = *base;
    if let Some(o) = &request.config {
        o.apply(&mut cfg);
    }
    cfg.validate()?;
    let track = Track::new(request.object_name.clone(), request.samples.clone())?;
    Ok(motion_descriptor(&track, &cfg)?)
}
