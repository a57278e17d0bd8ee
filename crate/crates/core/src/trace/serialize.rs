use std::fmt::Write;

use super::{EvidenceItem, MotionTag, Segment, Trace};

/// Formats with at most three decimals, dropping trailing zeros.
pub fn format_number(value: f64) -> String {
    let mut s = format!("{value:.3}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

pub(crate) fn write_evidence(out: &mut String, item: &EvidenceItem) {
    let [x1, y1, x2, y2] = item.bbox.corners();
    let _ = write!(
        out,
        "<obj>{}</obj><box>[{},{},{},{}]</box> at <t>{}</t>s",
        item.object_name,
        format_number(x1),
        format_number(y1),
        format_number(x2),
        format_number(y2),
        format_number(item.timestamp)
    );
}

pub(crate) fn write_motion(out: &mut String, tag: &MotionTag) {
    let _ = write!(
        out,
        r#"<motion obj="{}" dir="{}" speed="{}" scale="{}"/>"#,
        tag.object_name, tag.direction, tag.speed, tag.scale
    );
}

/// Canonical surface form of a trace.
pub fn serialize_trace(trace: &Trace) -> String {
    let mut out = String::with_capacity(64 + trace.answer.len());
    out.push_str("<think>");
    for segment in &trace.segments {
        match segment {
            Segment::Text(text) => out.push_str(text),
            Segment::Evidence(item) => write_evidence(&mut out, item),
            Segment::Motion(tag) => write_motion(&mut out, tag),
        }
    }
    out.push_str("</think><answer>");
    out.push_str(&trace.answer);
    out.push_str("</answer>");
    out
}
