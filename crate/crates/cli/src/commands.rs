//! File-level implementations of the `score`, `augment`, `validate` and
//! `descriptor` subcommands. All inputs are line-delimited JSON.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use log::warn;
use rayon::prelude::*;
use serde_json::Value;
use stt_core::forge::io::{read_records, RecordIoError, RecordReader, ReadMode};
use stt_core::record::from_json_value;
use stt_core::service::{describe_track, DescriptorRequest};
use stt_core::{
    augment_record, validate_format, AnnotationRecord, DensifyConfig, MotionConfig, MotionDescriptor, RewardBreakdown,
    RewardConfig, ScoreResponse,
};

/// Opens `path` for reading, `-` meaning standard input.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        Ok(Box::new(BufReader::new(f)))
    }
}

/// Opens `path` for writing, standard output when absent or `-`.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) if p == Path::new("-") => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn join_value(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct ScoreOptions {
    pub join_key: String,
    pub permissive: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            join_key: "video_id".into(),
            permissive: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSummary {
    pub lines: usize,
    /// 1-based line numbers that could not be scored (permissive mode only).
    pub unmatched: Vec<usize>,
    pub mean: RewardBreakdown,
}

impl ScoreSummary {
    pub fn render(&self) -> String {
        let m = &self.mean;
        format!(
            "scored {} predictions ({} unmatched)\nmean r_fmt={:.4} r_acc={:.4} r_t={:.4} r_s={:.4} r_traj={:.4} r_ground={:.4} total={:.4}",
            self.lines,
            self.unmatched.len(),
            m.r_fmt,
            m.r_acc,
            m.r_t,
            m.r_s,
            m.r_traj,
            m.r_ground,
            m.total
        )
    }
}

struct PredictionLine {
    line: usize,
    job: Result<(String, Option<String>, String), String>,
}

fn parse_prediction(text: &str, join_key: &str) -> Result<(String, Option<String>, String), String> {
    let v: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let field = |name: &str| v.get(name).and_then(Value::as_str).map(str::to_string);
    let prediction = field("prediction").ok_or("missing string field `prediction`")?;
    let masked = match v.get("masked_prediction") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err("`masked_prediction` must be a string".into()),
    };
    let key = v
        .get(join_key)
        .and_then(join_value)
        .ok_or_else(|| format!("missing join key `{join_key}`"))?;
    Ok((prediction, masked, key))
}

/// Joins predictions to records and writes one `ScoreResponse` per
/// prediction line, in input order.
pub fn score_files(
    predictions: &Path,
    records: &Path,
    out: &mut dyn Write,
    cfg: &RewardConfig,
    opts: &ScoreOptions,
) -> Result<ScoreSummary> {
    let mode = if opts.permissive { ReadMode::Permissive } else { ReadMode::Strict };
    let (records, skipped) = read_records(records, mode).map_err(|e| anyhow!("{}: {e}", records.display()))?;
    for s in &skipped {
        warn!("records line {}: skipped: {}", s.line, s.error);
    }
    let mut index: HashMap<String, &AnnotationRecord> = HashMap::with_capacity(records.len());
    for r in &records {
        let v = serde_json::to_value(&r.record)?;
        match v.get(&opts.join_key).and_then(join_value) {
            Some(k) => match index.entry(k) {
                Entry::Occupied(e) => warn!("duplicate join key {:?} in records; keeping the first", e.key()),
                Entry::Vacant(e) => {
                    e.insert(r);
                }
            },
            None => warn!("record {:?} has no join key `{}`", r.record.video_id, opts.join_key),
        }
    }

    let mut lines = Vec::new();
    for (i, text) in open_input(predictions)?.lines().enumerate() {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        lines.push(PredictionLine {
            line: i + 1,
            job: parse_prediction(&text, &opts.join_key),
        });
    }

    let mut unmatched = Vec::new();
    for l in &lines {
        let problem = match &l.job {
            Err(e) => Some(e.clone()),
            Ok((_, _, key)) if !index.contains_key(key) => Some(format!("no record with {} {key:?}", opts.join_key)),
            Ok(_) => None,
        };
        if let Some(p) = problem {
            if !opts.permissive {
                bail!("predictions line {}: {p}", l.line);
            }
            warn!("predictions line {}: {p}; scored as zero", l.line);
            unmatched.push(l.line);
        }
    }

    let responses: Vec<ScoreResponse> = lines
        .par_iter()
        .map(|l| match &l.job {
            Ok((pred, masked, key)) => match index.get(key) {
                Some(r) => ScoreResponse::compute(pred, &r.record, masked.as_deref(), cfg),
                None => ScoreResponse::zero(),
            },
            Err(_) => ScoreResponse::zero(),
        })
        .collect();

    let mut sum = [0.0; 7];
    for r in &responses {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
        let b = &r.breakdown;
        for (acc, v) in sum.iter_mut().zip([b.r_fmt, b.r_acc, b.r_t, b.r_s, b.r_traj, b.r_ground, b.total]) {
            *acc += v;
        }
    }
    out.flush()?;
    let n = responses.len().max(1) as f64;
    let [f, a, t, s, tr, g, _] = sum.map(|v| v / n);
    Ok(ScoreSummary {
        lines: responses.len(),
        unmatched,
        mean: RewardBreakdown::from_components(f, a, t, s, tr, g),
    })
}

/// Densifies every record and fills in descriptors and motion tags.
/// Returns the number of records written.
pub fn augment_stream(
    input: impl BufRead,
    out: &mut dyn Write,
    dcfg: &DensifyConfig,
    mcfg: &MotionConfig,
    permissive: bool,
) -> Result<usize> {
    dcfg.validate()?;
    mcfg.validate()?;
    let mut written = 0;
    for item in RecordReader::new(input) {
        match item {
            Ok(record) => {
                serde_json::to_writer(&mut *out, &augment_record(&record, dcfg, mcfg))?;
                out.write_all(b"\n")?;
                written += 1;
            }
            Err(RecordIoError::Schema { line, error }) if permissive => {
                warn!("line {line}: skipped: {error}");
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.flush()?;
    Ok(written)
}

fn trace_of(text: &str) -> Result<Option<String>, String> {
    let v: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    match v {
        Value::String(s) => Ok(Some(s)),
        Value::Object(map) => {
            for field in ["prediction", "think_trace"] {
                match map.get(field) {
                    Some(Value::String(s)) => return Ok(Some(s.clone())),
                    Some(Value::Null) | None => continue,
                    Some(_) => return Err(format!("`{field}` must be a string")),
                }
            }
            Ok(None)
        }
        _ => Err("expected a JSON string or object".into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidateSummary {
    pub traces: usize,
    pub invalid: usize,
}

/// Writes one `FormatReport` per trace. A line may be a JSON string or an
/// object carrying the trace in `prediction` or `think_trace`; objects with
/// neither are skipped.
pub fn validate_stream(input: impl BufRead, out: &mut dyn Write) -> Result<ValidateSummary> {
    let mut summary = ValidateSummary::default();
    for (i, text) in input.lines().enumerate() {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let Some(trace) = trace_of(&text).map_err(|e| anyhow!("line {}: {e}", i + 1))? else {
            continue;
        };
        let report = validate_format(&trace);
        summary.traces += 1;
        if !report.valid {
            summary.invalid += 1;
        }
        serde_json::to_writer(&mut *out, &report)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(summary)
}

pub fn descriptor_from_reader(mut input: impl Read, cfg: &MotionConfig) -> Result<MotionDescriptor> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let value: Value = serde_json::from_str(&text).context("invalid JSON")?;
    let request: DescriptorRequest = from_json_value(value)?;
    Ok(describe_track(&request, cfg)?)
}
