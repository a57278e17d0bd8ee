//! Seeded random fixtures: traces, records and score requests.
//!
//! Used by the integration suites and the benchmarks. Everything here is
//! driven by a caller-supplied RNG so that runs are reproducible.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::bbox::BBox;
use crate::motion::{Direction, MotionDescriptor, Scale, Speed};
use crate::record::{AnswerKind, GroundTruthRecord, ObjectAnnotation};
use crate::reward::{MotionConfigOverrides, RewardConfigOverrides};
use crate::service::ScoreRequest;
use crate::trace::{serialize_trace, EvidenceItem, MotionTag, Segment, Trace};
use crate::track::{Sample, Track};

const NAMES: &[&str] = &[
    "person", "dog", "red car", "ball", "cup", "cyclist", "duck", "white van", "bird", "chair",
];

const WORDS: &[&str] = &[
    "the", "then", "moves", "toward", "left", "right", "camera", "slowly", "while", "near", "holds",
    "appears", "again", "so", "it", "is", "far", "from", "door", "and", "table", "after", "before",
];

const PUNCT: &[&str] = &[" ", " ", " ", ", ", ". ", "\n", "; "];

/// Millesimal value in `[lo, hi]`, so it survives parse quantization.
pub fn milli(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let a = (lo * 1000.0).ceil() as i64;
    let b = (hi * 1000.0).floor() as i64;
    rng.random_range(a..=b) as f64 / 1000.0
}

pub fn random_name(rng: &mut impl Rng) -> String {
    NAMES.choose(rng).unwrap().to_string()
}

/// A valid box whose corners are multiples of 1e-3.
pub fn random_box(rng: &mut impl Rng) -> BBox {
    let w = milli(rng, 0.01, 0.5);
    let h = milli(rng, 0.01, 0.5);
    let x1 = milli(rng, 0.0, 1.0 - w);
    let y1 = milli(rng, 0.0, 1.0 - h);
    let x2 = ((x1 + w) * 1000.0).round() / 1000.0;
    let y2 = ((y1 + h) * 1000.0).round() / 1000.0;
    BBox::new(x1, y1, x2.min(1.0), y2.min(1.0)).expect("generated box is valid")
}

/// Box near `b`: each corner moved by at most `jitter`, clipped to the image.
pub fn jitter_box(rng: &mut impl Rng, b: &BBox, jitter: f64) -> BBox {
    let [x1, y1, x2, y2] = b.corners();
    let mut j = |v: f64| (v + rng.random_range(-jitter..=jitter)).clamp(0.0, 1.0);
    let (nx1, ny1, nx2, ny2) = (j(x1), j(y1), j(x2), j(y2));
    let (lx, hx) = (nx1.min(nx2), nx1.max(nx2));
    let (ly, hy) = (ny1.min(ny2), ny1.max(ny2));
    let q = |v: f64| (v * 1000.0).round() / 1000.0;
    BBox::new(q(lx), q(ly), q(hx.max(lx + 0.002)).min(1.0), q(hy.max(ly + 0.002)).min(1.0))
        .unwrap_or(*b)
}

/// A direction/speed/scale triple that respects the STAT coupling.
pub fn random_descriptor(rng: &mut impl Rng) -> MotionDescriptor {
    let direction = *Direction::ALL.choose(rng).unwrap();
    let speed = if direction == Direction::Stat {
        Speed::Stationary
    } else {
        *[Speed::Slow, Speed::Moderate, Speed::Fast].choose(rng).unwrap()
    };
    let scale = *[Scale::Approaching, Scale::Stable, Scale::Receding].choose(rng).unwrap();
    MotionDescriptor::new(direction, speed, scale)
}

pub fn random_text(rng: &mut impl Rng, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words.max(1));
    let mut s = String::new();
    for _ in 0..n {
        s.push_str(WORDS.choose(rng).unwrap());
        s.push_str(PUNCT.choose(rng).unwrap());
    }
    s
}

/// A structurally valid trace with up to `max_segments` think segments.
/// Adjacent text segments are never generated, since the parser would merge
/// them.
pub fn random_trace(rng: &mut impl Rng, max_segments: usize) -> Trace {
    let n = rng.random_range(0..=max_segments);
    let mut segments = Vec::with_capacity(n);
    for _ in 0..n {
        let last_text = matches!(segments.last(), Some(Segment::Text(_)));
        let roll = rng.random_range(0..10);
        let segment = if roll < 4 && !last_text {
            Segment::Text(random_text(rng, 8))
        } else if roll < 8 {
            Segment::Evidence(EvidenceItem {
                object_name: random_name(rng),
                bbox: random_box(rng),
                timestamp: milli(rng, 0.0, 300.0),
            })
        } else {
            Segment::Motion(MotionTag::new(random_name(rng), random_descriptor(rng)))
        };
        segments.push(segment);
    }
    Trace {
        segments,
        answer: random_text(rng, 4).trim().to_string(),
    }
}

/// A schema-valid record with `1..=max_objects` objects of
/// `1..=max_keyframes` keyframes each.
pub fn random_record(rng: &mut impl Rng, max_objects: usize, max_keyframes: usize) -> GroundTruthRecord {
    let duration = milli(rng, 2.0, 120.0);
    let mut names: Vec<&str> = NAMES.to_vec();
    let count = rng.random_range(1..=max_objects.clamp(1, NAMES.len()));
    let mut objects = Vec::with_capacity(count);
    for _ in 0..count {
        let i = rng.random_range(0..names.len());
        let name = names.swap_remove(i).to_string();
        let k = rng.random_range(1..=max_keyframes.max(1));
        let mut times: Vec<f64> = (0..k).map(|_| milli(rng, 0.0, duration)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut b = random_box(rng);
        let keyframes = times
            .into_iter()
            .map(|t| {
                b = jitter_box(rng, &b, 0.08);
                Sample::new(t, b)
            })
            .collect();
        objects.push(ObjectAnnotation { name, keyframes });
    }
    let (answer_kind, gt_answer) = if rng.random_bool(0.6) {
        (AnswerKind::Mcq, ["A", "B", "C", "D"].choose(rng).unwrap().to_string())
    } else {
        (AnswerKind::Freeform, random_text(rng, 6).trim().to_string())
    };
    GroundTruthRecord {
        video_id: format!("vid-{:08x}", rng.random::<u32>()),
        duration,
        question: random_text(rng, 10),
        answer_kind,
        gt_answer,
        objects,
        gt_descriptors: None,
    }
}

/// A plausible model response for `record`: noisy observations of its
/// objects, a motion tag for some of them and a possibly wrong answer.
pub fn grounded_prediction(rng: &mut impl Rng, record: &GroundTruthRecord) -> String {
    let mut segments = Vec::new();
    segments.push(Segment::Text(random_text(rng, 12)));
    for object in &record.objects {
        for kf in &object.keyframes {
            if rng.random_bool(0.8) {
                segments.push(Segment::Evidence(EvidenceItem {
                    object_name: object.name.clone(),
                    bbox: jitter_box(rng, &kf.bbox, 0.03),
                    timestamp: (kf.t + milli(rng, -0.8, 0.8)).max(0.0),
                }));
                segments.push(Segment::Text(random_text(rng, 10)));
            }
        }
        if rng.random_bool(0.7) {
            segments.push(Segment::Motion(MotionTag::new(object.name.clone(), random_descriptor(rng))));
            segments.push(Segment::Text(random_text(rng, 6)));
        }
    }
    let answer = if rng.random_bool(0.5) {
        record.gt_answer.clone()
    } else {
        match record.answer_kind {
            AnswerKind::Mcq => ["A", "B", "C", "D"].choose(rng).unwrap().to_string(),
            AnswerKind::Freeform => random_text(rng, 6).trim().to_string(),
        }
    };
    serialize_trace(&Trace { segments, answer })
}

/// Corrupts text with random cuts, duplications and grammar fragments.
pub fn mutate(rng: &mut impl Rng, source: &str) -> String {
    const FRAGMENTS: &[&str] = &[
        "<think>", "</think>", "<answer>", "</answer>", "<obj>", "</obj>", "<box>", "</box>", "<t>",
        "</t>", "<motion ", "/>", "obj=\"", "dir=\"STAT\"", "speed=\"fast\"", "[", "]", ",", "\"",
        "-1", "1e9", "NaN", "é", "\u{0}", "<",
    ];
    let mut chars: Vec<char> = source.chars().collect();
    for _ in 0..rng.random_range(1..=4) {
        let at = rng.random_range(0..=chars.len());
        match rng.random_range(0..4) {
            0 if !chars.is_empty() => {
                let end = rng.random_range(at..=chars.len().min(at + 12));
                chars.drain(at..end);
            }
            1 => {
                let frag: Vec<char> = FRAGMENTS.choose(rng).unwrap().chars().collect();
                chars.splice(at..at, frag);
            }
            2 => {
                let c = char::from_u32(rng.random_range(0..0x250)).unwrap_or('?');
                chars.insert(at, c);
            }
            _ => {
                let end = chars.len().min(at + 16);
                let copy: Vec<char> = chars[at..end].to_vec();
                chars.splice(at..at, copy);
            }
        }
    }
    chars.into_iter().collect()
}

/// A score request over a random record. Roughly one in ten predictions is
/// malformed and one in four carries a masked chain or config overrides.
pub fn random_score_request(rng: &mut impl Rng) -> ScoreRequest {
    let record = random_record(rng, 5, 4);
    let mut prediction = grounded_prediction(rng, &record);
    if rng.random_bool(0.1) {
        prediction = mutate(rng, &prediction);
    }
    let masked_prediction = rng
        .random_bool(0.25)
        .then(|| grounded_prediction(rng, &record));
    let config_overrides = rng.random_bool(0.25).then(|| RewardConfigOverrides {
        temporal_sigma_floor: rng.random_bool(0.5).then(|| milli(rng, 0.2, 3.0)),
        temporal_sigma_fraction: None,
        spatial_gate: rng.random_bool(0.5).then(|| milli(rng, 0.1, 2.0)),
        motion_config: rng.random_bool(0.3).then(|| MotionConfigOverrides {
            slow_moderate_threshold: Some(milli(rng, 0.2, 1.0)),
            ..Default::default()
        }),
    });
    ScoreRequest {
        prediction,
        record,
        masked_prediction,
        config_overrides,
    }
}

fn map_boxes(track: &Track, f: impl Fn(&BBox) -> Option<BBox>) -> Option<Track> {
    let samples = track
        .samples()
        .iter()
        .map(|s| f(&s.bbox).map(|b| Sample::new(s.t, b)))
        .collect::<Option<Vec<_>>>()?;
    Track::new(track.object_name(), samples).ok()
}

/// Moves every centroid by `steps` x 45 degrees counterclockwise (as seen
/// on screen) about the image center, keeping box sizes. `None` if a box
/// would leave the image.
pub fn rotate_track(track: &Track, steps: usize) -> Option<Track> {
    let a = (steps % 8) as f64 * std::f64::consts::FRAC_PI_4;
    let (sin, cos) = a.sin_cos();
    map_boxes(track, |b| {
        let (cx, cy) = b.centroid();
        let (ux, uy) = (cx - 0.5, 0.5 - cy);
        let (rx, ry) = (cos * ux - sin * uy, sin * ux + cos * uy);
        let (nx, ny) = (0.5 + rx, 0.5 - ry);
        let (hw, hh) = (b.width() / 2.0, b.height() / 2.0);
        BBox::new(nx - hw, ny - hh, nx + hw, ny + hh).ok()
    })
}

/// Adds `(dx, dy)` to every corner.
pub fn translate_track(track: &Track, dx: f64, dy: f64) -> Option<Track> {
    map_boxes(track, |b| {
        let [x1, y1, x2, y2] = b.corners();
        BBox::new(x1 + dx, y1 + dy, x2 + dx, y2 + dy).ok()
    })
}

/// Scales every corner by `factor` about the image center.
pub fn scale_track(track: &Track, factor: f64) -> Option<Track> {
    let s = |v: f64| 0.5 + factor * (v - 0.5);
    map_boxes(track, |b| {
        let [x1, y1, x2, y2] = b.corners();
        BBox::new(s(x1), s(y1), s(x2), s(y2)).ok()
    })
}

/// Plays the track backwards over the same time span.
pub fn reverse_track(track: &Track) -> Track {
    let samples = track.samples();
    let (t0, t1) = (samples[0].t, samples[samples.len() - 1].t);
    let reversed = samples
        .iter()
        .rev()
        .map(|s| Sample::new(t0 + (t1 - s.t), s.bbox))
        .collect();
    Track::new(track.object_name(), reversed).expect("reversal keeps times ordered")
}
