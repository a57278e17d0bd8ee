//! Trajectory-grounded reward stack.
//!
//! The scalar reward is `r_acc + r_thk + r_fmt` with
//! `r_thk = r_t + r_s + r_motion` and `r_motion = r_traj + r_ground`.
//! Every atomic component lies in `[0, 1]`, so the total lies in `[0, 6]`.

pub mod rouge;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::BBox;
use crate::motion::{Direction, MotionDescriptor, Scale, Speed};
use crate::record::{AnswerKind, GroundTruthRecord};
use crate::track::{motion_descriptor, MotionConfig};
use crate::trace::{
    extract_motion_tags, extract_tracks, normalize_name, parse_trace, validate_format,
    FormatReport, MotionTag,
};

pub use rouge::rouge_l_f1;

/// Weights of direction, speed and scale in the trajectory reward.
pub const TRAJECTORY_WEIGHTS: AttributeWeights = AttributeWeights {
    direction: 0.4,
    speed: 0.3,
    scale: 0.3,
};

/// Weights of a changed direction, speed and scale in the grounding reward.
pub const GROUNDING_WEIGHTS: AttributeWeights = AttributeWeights {
    direction: 0.5,
    speed: 0.3,
    scale: 0.2,
};

pub const EXACT_CREDIT: f64 = 1.0;
pub const ADJACENT_CREDIT: f64 = 0.5;
pub const MISS_CREDIT: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeWeights {
    pub direction: f64,
    pub speed: f64,
    pub scale: f64,
}

/// Predicted evidence per normalized object name, sorted by timestamp.
pub type TrackMap = BTreeMap<String, Vec<(f64, BBox)>>;
/// Motion tags per normalized object name, in order of appearance.
pub type TagMap = BTreeMap<String, Vec<MotionTag>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("cannot compare a {pred} bin with a {gt} bin")]
    VocabularyMismatch { pred: &'static str, gt: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub temporal_sigma_floor: f64,
    pub temporal_sigma_fraction: f64,
    pub spatial_gate: f64,
    pub motion_config: MotionConfig,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            temporal_sigma_floor: 1.0,
            temporal_sigma_fraction: 0.1,
            spatial_gate: 1.0,
            motion_config: MotionConfig::default(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("temporal_sigma_floor", self.temporal_sigma_floor),
            ("temporal_sigma_fraction", self.temporal_sigma_fraction),
            ("spatial_gate", self.spatial_gate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        self.motion_config.validate().map_err(|e| e.to_string())
    }

    /// Temporal tolerance for a video of the given length.
    pub fn sigma(&self, duration: f64) -> f64 {
        self.temporal_sigma_floor
            .max(self.temporal_sigma_fraction * duration)
    }

    pub fn apply(&mut self, overrides: &RewardConfigOverrides) {
        if let Some(v) = overrides.temporal_sigma_floor {
            self.temporal_sigma_floor = v;
        }
        if let Some(v) = overrides.temporal_sigma_fraction {
            self.temporal_sigma_fraction = v;
        }
        if let Some(v) = overrides.spatial_gate {
            self.spatial_gate = v;
        }
        if let Some(m) = &overrides.motion_config {
            m.apply(&mut self.motion_config);
        }
    }
}

/// Partial [`RewardConfig`]; absent fields keep their current value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_sigma_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_sigma_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial_gate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion_config: Option<MotionConfigOverrides>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary_speed_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slow_moderate_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moderate_fast_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_stable_log_threshold: Option<f64>,
}

impl MotionConfigOverrides {
    pub fn apply(&self, cfg: &mut MotionConfig) {
        if let Some(v) = self.stationary_speed_threshold {
            cfg.stationary_speed_threshold = v;
        }
        if let Some(v) = self.slow_moderate_threshold {
            cfg.slow_moderate_threshold = v;
        }
        if let Some(v) = self.moderate_fast_threshold {
            cfg.moderate_fast_threshold = v;
        }
        if let Some(v) = self.scale_stable_log_threshold {
            cfg.scale_stable_log_threshold = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_fmt: f64,
    pub r_acc: f64,
    pub r_t: f64,
    pub r_s: f64,
    pub r_traj: f64,
    pub r_ground: f64,
    pub r_motion: f64,
    pub r_thk: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn from_components(r_fmt: f64, r_acc: f64, r_t: f64, r_s: f64, r_traj: f64, r_ground: f64) -> Self {
        let r_motion = r_traj + r_ground;
        let r_thk = r_t + r_s + r_motion;
        Self {
            r_fmt,
            r_acc,
            r_t,
            r_s,
            r_traj,
            r_ground,
            r_motion,
            r_thk,
            total: r_acc + r_t + r_s + r_traj + r_ground + r_fmt,
        }
    }

    pub fn atomic(&self) -> [f64; 6] {
        [self.r_fmt, self.r_acc, self.r_t, self.r_s, self.r_traj, self.r_ground]
    }
}

/// Binary format reward: 1 iff the trace passes every format rule.
pub fn reward_format(source: &str) -> f64 {
    if validate_format(source).valid {
        1.0
    } else {
        0.0
    }
}

/// Option letter of an answer like `B`, `(B)`, `B.` or `B) the cup`.
fn option_letter(answer: &str) -> Option<char> {
    let s = answer.trim();
    let s = s.strip_prefix('(').unwrap_or(s);
    let mut chars = s.chars();
    let letter = chars.next().filter(char::is_ascii_alphabetic)?;
    let rest = chars.as_str();
    let terminated = rest.is_empty()
        || rest.starts_with([')', '.', ':', ','])
        || rest.starts_with(char::is_whitespace);
    terminated.then(|| letter.to_ascii_uppercase())
}

fn normalize_answer(answer: &str) -> String {
    normalize_name(answer.trim().trim_end_matches('.'))
}

/// Multiple-choice answers must match exactly (option letter when the key is
/// a single letter); free-form answers score ROUGE-L F1.
pub fn reward_accuracy(pred_answer: &str, record: &GroundTruthRecord) -> f64 {
    match record.answer_kind {
        AnswerKind::Mcq => {
            let gt = record.gt_answer.trim();
            let gt_letter = option_letter(gt).filter(|_| {
                gt.trim_matches(|c: char| "().:".contains(c) || c.is_whitespace())
                    .chars()
                    .count()
                    == 1
            });
            let hit = match gt_letter {
                Some(letter) => option_letter(pred_answer) == Some(letter),
                None => normalize_answer(pred_answer) == normalize_answer(gt),
            };
            if hit {
                1.0
            } else {
                0.0
            }
        }
        AnswerKind::Freeform => rouge_l_f1(pred_answer, &record.gt_answer),
    }
}

/// Nearest predicted sample to `t` (earliest on ties).
fn nearest(samples: &[(f64, BBox)], t: f64) -> Option<(f64, BBox)> {
    samples
        .iter()
        .map(|(ts, b)| ((ts - t).abs(), *b))
        .fold(None, |best: Option<(f64, BBox)>, cand| match best {
            Some(b) if b.0 <= cand.0 => Some(b),
            _ => Some(cand),
        })
}

fn keyframe_mean(record: &GroundTruthRecord, mut per_keyframe: impl FnMut(&str, f64, &BBox) -> f64) -> f64 {
    let count = record.keyframe_count();
    if count == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for object in &record.objects {
        let key = normalize_name(&object.name);
        for kf in &object.keyframes {
            sum += per_keyframe(&key, kf.t, &kf.bbox);
        }
    }
    sum / count as f64
}

/// Mean over ground-truth keyframes of `max(0, 1 - dt / sigma)` where `dt`
/// is the gap to the nearest same-object predicted timestamp.
pub fn reward_temporal(pred_tracks: &TrackMap, record: &GroundTruthRecord, cfg: &RewardConfig) -> f64 {
    let sigma = cfg.sigma(record.duration);
    keyframe_mean(record, |key, t, _| {
        match pred_tracks.get(key).and_then(|s| nearest(s, t)) {
            Some((dt, _)) => (1.0 - dt / sigma).max(0.0),
            None => 0.0,
        }
    })
}

/// Mean over ground-truth keyframes of the IoU with the nearest predicted
/// box of the same object, counted only when that prediction lies within
/// the temporal gate.
pub fn reward_spatial(pred_tracks: &TrackMap, record: &GroundTruthRecord, cfg: &RewardConfig) -> f64 {
    keyframe_mean(record, |key, t, gt_box| {
        match pred_tracks.get(key).and_then(|s| nearest(s, t)) {
            Some((dt, pred_box)) if dt <= cfg.spatial_gate => pred_box.iou(gt_box),
            _ => 0.0,
        }
    })
}

/// Bins with ordinal adjacency for partial credit.
pub trait BinMatch: Copy + PartialEq {
    fn is_adjacent(self, other: Self) -> bool;

    fn match_score(self, gt: Self) -> f64 {
        if self == gt {
            EXACT_CREDIT
        } else if self.is_adjacent(gt) {
            ADJACENT_CREDIT
        } else {
            MISS_CREDIT
        }
    }
}

impl BinMatch for Direction {
    /// Neighbours on the 8-point compass; `STAT` has no neighbours.
    fn is_adjacent(self, other: Self) -> bool {
        match (self.compass_index(), other.compass_index()) {
            (Some(a), Some(b)) => {
                let d = a.abs_diff(b);
                d == 1 || d == 7
            }
            _ => false,
        }
    }
}

impl BinMatch for Speed {
    fn is_adjacent(self, other: Self) -> bool {
        self.rank().abs_diff(other.rank()) == 1
    }
}

impl BinMatch for Scale {
    fn is_adjacent(self, other: Self) -> bool {
        self.rank().abs_diff(other.rank()) == 1
    }
}

/// A bin from any of the three attribute vocabularies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bin {
    Direction(Direction),
    Speed(Speed),
    Scale(Scale),
}

impl Bin {
    fn kind(self) -> &'static str {
        match self {
            Bin::Direction(_) => "direction",
            Bin::Speed(_) => "speed",
            Bin::Scale(_) => "scale",
        }
    }
}

/// 1.0 exact, 0.5 adjacent, 0.0 otherwise.
pub fn bin_match_score(pred: Bin, gt: Bin) -> Result<f64, RewardError> {
    match (pred, gt) {
        (Bin::Direction(p), Bin::Direction(g)) => Ok(p.match_score(g)),
        (Bin::Speed(p), Bin::Speed(g)) => Ok(p.match_score(g)),
        (Bin::Scale(p), Bin::Scale(g)) => Ok(p.match_score(g)),
        _ => Err(RewardError::VocabularyMismatch {
            pred: pred.kind(),
            gt: gt.kind(),
        }),
    }
}

/// Weighted attribute agreement of one predicted tag with one descriptor.
pub fn trajectory_pair_score(pred: &MotionDescriptor, gt: &MotionDescriptor) -> f64 {
    TRAJECTORY_WEIGHTS.direction * pred.direction.match_score(gt.direction)
        + TRAJECTORY_WEIGHTS.speed * pred.speed.match_score(gt.speed)
        + TRAJECTORY_WEIGHTS.scale * pred.scale.match_score(gt.scale)
}

/// Weighted attribute change between the original and motion-masked tag.
pub fn grounding_pair_score(original: &MotionDescriptor, masked: &MotionDescriptor) -> f64 {
    let changed = |differs: bool| if differs { 1.0 } else { 0.0 };
    GROUNDING_WEIGHTS.direction * changed(original.direction != masked.direction)
        + GROUNDING_WEIGHTS.speed * changed(original.speed != masked.speed)
        + GROUNDING_WEIGHTS.scale * changed(original.scale != masked.scale)
}

/// Ground-truth descriptor lists for every object observed at least twice,
/// keyed by normalized name. Supplied descriptors take precedence over ones
/// computed from keyframes.
pub fn ground_truth_descriptors(record: &GroundTruthRecord, cfg: &MotionConfig) -> BTreeMap<String, Vec<MotionDescriptor>> {
    let supplied: BTreeMap<String, &Vec<MotionDescriptor>> = record
        .gt_descriptors
        .iter()
        .flatten()
        .map(|(name, list)| (normalize_name(name), list))
        .collect();
    let mut out = BTreeMap::new();
    for object in record.objects.iter().filter(|o| o.keyframes.len() >= 2) {
        let key = normalize_name(&object.name);
        let list = match supplied.get(&key) {
            Some(list) => (*list).clone(),
            None => match object.track().map(|t| motion_descriptor(&t, cfg)) {
                Some(Ok(d)) => vec![d],
                _ => continue,
            },
        };
        out.insert(key, list);
    }
    out
}

/// Per-object trajectory scores. Tags and descriptors are paired in order;
/// unpaired slots on either side score zero.
pub fn trajectory_per_object(pred_tags: &TagMap, record: &GroundTruthRecord, cfg: &RewardConfig) -> BTreeMap<String, f64> {
    ground_truth_descriptors(record, &cfg.motion_config)
        .into_iter()
        .map(|(key, gt)| {
            let pred = pred_tags.get(&key).map(Vec::as_slice).unwrap_or(&[]);
            let slots = pred.len().max(gt.len());
            let score = if slots == 0 {
                0.0
            } else {
                pred.iter()
                    .zip(&gt)
                    .map(|(p, g)| trajectory_pair_score(&p.descriptor(), g))
                    .sum::<f64>()
                    / slots as f64
            };
            (key, score)
        })
        .collect()
}

pub fn reward_trajectory(pred_tags: &TagMap, record: &GroundTruthRecord, cfg: &RewardConfig) -> f64 {
    mean(trajectory_per_object(pred_tags, record, cfg).values().copied())
}

/// Per-object grounding scores over the original chain's tags. Tags with no
/// counterpart in the masked chain count as fully grounded.
pub fn grounding_per_object(tags_original: &TagMap, tags_masked: &TagMap) -> BTreeMap<String, f64> {
    tags_original
        .iter()
        .filter(|(_, tags)| !tags.is_empty())
        .map(|(key, tags)| {
            let masked = tags_masked.get(key).map(Vec::as_slice).unwrap_or(&[]);
            let total: f64 = tags
                .iter()
                .enumerate()
                .map(|(i, tag)| match masked.get(i) {
                    Some(m) => grounding_pair_score(&tag.descriptor(), &m.descriptor()),
                    None => 1.0,
                })
                .sum();
            (key.clone(), total / tags.len() as f64)
        })
        .collect()
}

pub fn reward_grounding(tags_original: &TagMap, tags_masked: &TagMap) -> f64 {
    mean(grounding_per_object(tags_original, tags_masked).values().copied())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectScores {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traj: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground: Option<f64>,
}

/// Breakdown plus the evidence behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDetail {
    pub breakdown: RewardBreakdown,
    pub report: FormatReport,
    pub per_object: BTreeMap<String, ObjectScores>,
}

/// Answer text of an unparseable response: what follows the last `<answer>`,
/// up to `</answer>` if present.
fn raw_answer_tail(source: &str) -> Option<&str> {
    let start = source.rfind("<answer>")? + "<answer>".len();
    let tail = &source[start..];
    Some(tail.find("</answer>").map_or(tail, |end| &tail[..end]))
}

pub fn score(prediction: &str, record: &GroundTruthRecord, masked_prediction: Option<&str>, cfg: &RewardConfig) -> RewardBreakdown {
    score_detailed(prediction, record, masked_prediction, cfg).breakdown
}

/// Scores one response. Never fails: unparseable input degrades to zeros.
pub fn score_detailed(prediction: &str, record: &GroundTruthRecord, masked_prediction: Option<&str>, cfg: &RewardConfig) -> ScoreDetail {
    let report = validate_format(prediction);
    let trace = match parse_trace(prediction) {
        Ok(trace) => trace,
        Err(_) => {
            let r_acc = raw_answer_tail(prediction)
                .map(|a| reward_accuracy(a, record))
                .unwrap_or(0.0);
            return ScoreDetail {
                breakdown: RewardBreakdown::from_components(0.0, r_acc, 0.0, 0.0, 0.0, 0.0),
                report,
                per_object: BTreeMap::new(),
            };
        }
    };

    let r_fmt = if report.valid { 1.0 } else { 0.0 };
    let r_acc = reward_accuracy(&trace.answer, record);
    let tracks = extract_tracks(&trace);
    let tags = extract_motion_tags(&trace);
    let r_t = reward_temporal(&tracks, record, cfg);
    let r_s = reward_spatial(&tracks, record, cfg);

    let traj = trajectory_per_object(&tags, record, cfg);
    let r_traj = mean(traj.values().copied());

    // an absent or unparseable masked chain gives no grounding credit
    let masked_tags = masked_prediction
        .and_then(|m| parse_trace(m).ok())
        .map(|t| extract_motion_tags(&t));
    let ground = match &masked_tags {
        Some(masked) => grounding_per_object(&tags, masked),
        None => BTreeMap::new(),
    };
    let r_ground = mean(ground.values().copied());

    let mut per_object: BTreeMap<String, ObjectScores> = BTreeMap::new();
    for (key, v) in traj {
        per_object.entry(key).or_default().traj = Some(v);
    }
    for (key, v) in ground {
        per_object.entry(key).or_default().ground = Some(v);
    }

    ScoreDetail {
        breakdown: RewardBreakdown::from_components(r_fmt, r_acc, r_t, r_s, r_traj, r_ground),
        report,
        per_object,
    }
}

/// Exact and within-one-bin agreement rates for one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributeAccuracy {
    pub exact: f64,
    pub adjacent: f64,
}

/// Per-attribute tag accuracy against ground-truth descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TagAccuracy {
    pub count: usize,
    pub direction: AttributeAccuracy,
    pub speed: AttributeAccuracy,
    pub scale: AttributeAccuracy,
    /// Macro-average of the three exact-match rates.
    pub average_exact: f64,
}

/// Accuracy over `(predicted, ground truth)` pairs. "Adjacent" counts a
/// prediction within one bin of the truth, exact matches included.
pub fn tag_accuracy(pairs: impl IntoIterator<Item = (MotionDescriptor, MotionDescriptor)>) -> TagAccuracy {
    let mut acc = TagAccuracy::default();
    for (p, g) in pairs {
        acc.count += 1;
        let tally = |a: &mut AttributeAccuracy, exact: bool, adjacent: bool| {
            if exact {
                a.exact += 1.0;
            }
            if exact || adjacent {
                a.adjacent += 1.0;
            }
        };
        tally(&mut acc.direction, p.direction == g.direction, p.direction.is_adjacent(g.direction));
        tally(&mut acc.speed, p.speed == g.speed, p.speed.is_adjacent(g.speed));
        tally(&mut acc.scale, p.scale == g.scale, p.scale.is_adjacent(g.scale));
    }
    if acc.count > 0 {
        let n = acc.count as f64;
        for a in [&mut acc.direction, &mut acc.speed, &mut acc.scale] {
            a.exact /= n;
            a.adjacent /= n;
        }
        acc.average_exact = (acc.direction.exact + acc.speed.exact + acc.scale.exact) / 3.0;
    }
    acc
}
