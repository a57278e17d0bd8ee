//! Spatial-temporal-trajectory reasoning traces.
//!
//! * [`trace`] parses, validates and re-serializes `<think>`/`<answer>`
//!   responses with grounded evidence and `<motion/>` tags.
//! * [`track`] derives discrete motion descriptors from box tracks.
//! * [`reward`] scores responses against annotated records.
//! * [`forge`] densifies sparse annotations and injects motion tags.
//! * [`service`] holds the request/response types of the scoring service.

pub mod bbox;
pub mod forge;
pub mod motion;
pub mod record;
pub mod reward;
pub mod service;
pub mod testkit;
pub mod trace;
pub mod track;

pub use bbox::{BBox, BoxError};
pub use forge::{
    augment_record, compute_descriptors, densify_track, generate_synthetic, inject_motion_tags,
    DensifyConfig, ForgeError, Interpolator, MotionKind, SyntheticSpec,
};
pub use motion::{Direction, MotionDescriptor, Scale, Speed};
pub use record::{AnnotationRecord, AnswerKind, GroundTruthRecord, ObjectAnnotation, SchemaError};
pub use reward::{score, score_detailed, RewardBreakdown, RewardConfig, RewardConfigOverrides};
pub use service::{score_request, ScoreRequest, ScoreResponse};
pub use trace::{
    extract_motion_tags, extract_tracks, parse_trace, serialize_trace, validate_format,
    EvidenceItem, FormatReport, MotionTag, ParseError, Segment, Trace,
};
pub use track::{motion_descriptor, GeometryError, MotionConfig, Sample, Track};
