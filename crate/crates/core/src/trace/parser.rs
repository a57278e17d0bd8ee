//! Single-pass scanner shared by [`parse_trace`] and [`validate_format`].
//!
//! The scanner records every violation it meets and keeps going where it
//! can, so validation reports all problems while parsing stops at the first
//! one that the data model cannot represent.

use super::{
    normalize_name, EvidenceItem, FormatReport, MotionTag, ParseError, Rule, Segment, Span,
    Trace, Violation,
};
use crate::bbox::BBox;
use crate::motion::{Direction, Scale, Speed};

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";

/// Tags that are only meaningful inside an evidence triple or motion tag.
const INNER_TAGS: [&str; 6] = ["</obj>", "<box>", "</box>", "<t>", "</t>", "</motion>"];

pub fn parse_trace(source: &str) -> Result<Trace, ParseError> {
    let scan = Scanner::run(source);
    match scan.violations.iter().find(|v| !v.rule.is_lint_only()) {
        Some(v) => Err(ParseError {
            rule: v.rule,
            location: char_span(source, v.start, v.end),
            message: v.message.clone(),
        }),
        None => Ok(scan
            .trace
            .expect("a scan without fatal violations always yields a trace")),
    }
}

pub fn validate_format(source: &str) -> FormatReport {
    let scan = Scanner::run(source);
    let violations: Vec<Violation> = scan
        .violations
        .into_iter()
        .map(|v| Violation {
            rule_id: v.rule,
            location: char_span(source, v.start, v.end),
            message: v.message,
        })
        .collect();
    FormatReport {
        valid: violations.is_empty(),
        violations,
    }
}

fn char_span(source: &str, start: usize, end: usize) -> Span {
    let start_chars = source[..start].chars().count();
    Span {
        start: start_chars,
        end: start_chars + source[start..end].chars().count(),
    }
}

/// Numbers carry at most three decimals in the canonical form; finer input
/// is rounded on read so that canonicalization is a fixed point.
fn quantize(value: f64) -> f64 {
    let q = (value * 1000.0).round() / 1000.0;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Plain decimal literal: optional sign, digits, optional fraction.
fn parse_number(raw: &str) -> Option<f64> {
    let s = raw.trim();
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if int.len() + frac.len() == 0 || !all_digits(int) || !all_digits(frac) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct RawViolation {
    rule: Rule,
    start: usize,
    end: usize,
    message: String,
}

struct Scanner<'a> {
    src: &'a str,
    violations: Vec<RawViolation>,
    trace: Option<Trace>,
}

impl<'a> Scanner<'a> {
    fn run(src: &'a str) -> Self {
        let mut scanner = Scanner {
            src,
            violations: Vec::new(),
            trace: None,
        };
        scanner.scan_document();
        scanner
    }

    fn report(&mut self, rule: Rule, start: usize, end: usize, message: impl Into<String>) {
        self.violations.push(RawViolation {
            rule,
            start,
            end,
            message: message.into(),
        });
    }

    fn positions(&self, tag: &str) -> Vec<usize> {
        self.src.match_indices(tag).map(|(i, _)| i).collect()
    }

    /// Checks one open/close block pair; returns `(open, close)` when the
    /// block occurs exactly once and is properly ordered.
    fn block(
        &mut self,
        open_tag: &str,
        close_tag: &str,
        missing: Rule,
        unbalanced: Rule,
        duplicate: Rule,
    ) -> Option<(usize, usize)> {
        let opens = self.positions(open_tag);
        let closes = self.positions(close_tag);
        if opens.is_empty() && closes.is_empty() {
            self.report(missing, 0, 0, format!("no {open_tag}..{close_tag} block"));
            return None;
        }
        if opens.len() != closes.len() {
            let at = match (opens.first(), closes.first()) {
                (Some(&o), _) if opens.len() > closes.len() => (o, o + open_tag.len()),
                (_, Some(&c)) => (c, c + close_tag.len()),
                (Some(&o), None) => (o, o + open_tag.len()),
                (None, None) => (0, 0),
            };
            self.report(
                unbalanced,
                at.0,
                at.1,
                format!(
                    "{} {open_tag} vs {} {close_tag}",
                    opens.len(),
                    closes.len()
                ),
            );
            return None;
        }
        if opens.len() > 1 {
            for &o in &opens[1..] {
                self.report(duplicate, o, o + open_tag.len(), format!("repeated {open_tag} block"));
            }
            return None;
        }
        let (open, close) = (opens[0], closes[0]);
        if close < open {
            self.report(
                Rule::MisorderedBlocks,
                close,
                close + close_tag.len(),
                format!("{close_tag} precedes {open_tag}"),
            );
            return None;
        }
        Some((open, close))
    }

    fn require_blank(&mut self, start: usize, end: usize, what: &str) {
        let gap = &self.src[start..end];
        if !gap.trim().is_empty() {
            let lead = gap.len() - gap.trim_start().len();
            let trail = gap.len() - gap.trim_end().len();
            self.report(
                Rule::TextOutsideBlocks,
                start + lead,
                end - trail,
                format!("non-whitespace text {what}"),
            );
        }
    }

    fn scan_document(&mut self) {
        let think = self.block(
            THINK_OPEN,
            THINK_CLOSE,
            Rule::MissingThink,
            Rule::UnbalancedThink,
            Rule::DuplicateThink,
        );
        let answer = self.block(
            ANSWER_OPEN,
            ANSWER_CLOSE,
            Rule::MissingAnswer,
            Rule::UnbalancedAnswer,
            Rule::DuplicateAnswer,
        );

        let segments = think.map(|(open, close)| self.scan_think(open + THINK_OPEN.len(), close));

        let (Some((t_open, t_close)), Some((a_open, a_close))) = (think, answer) else {
            return;
        };
        if a_open < t_close + THINK_CLOSE.len() {
            self.report(
                Rule::MisorderedBlocks,
                a_open,
                a_open + ANSWER_OPEN.len(),
                "answer block must follow the think block",
            );
            return;
        }
        self.require_blank(0, t_open, "before <think>");
        self.require_blank(t_close + THINK_CLOSE.len(), a_open, "between </think> and <answer>");
        self.require_blank(a_close + ANSWER_CLOSE.len(), self.src.len(), "after </answer>");

        let answer = self.src[a_open + ANSWER_OPEN.len()..a_close].to_string();
        self.trace = Some(Trace {
            segments: segments.unwrap_or_default(),
            answer,
        });
    }

    fn scan_think(&mut self, start: usize, end: usize) -> Vec<Segment> {
        let src = self.src;
        let mut segments = Vec::new();
        let mut text_start = start;
        let mut pos = start;
        let flush = |segments: &mut Vec<Segment>, from: usize, to: usize| {
            if from < to {
                segments.push(Segment::Text(src[from..to].to_string()));
            }
        };

        while let Some(rel) = src[pos..end].find('<') {
            let lt = pos + rel;
            let rest = &src[lt..end];
            if rest.starts_with("<obj>") {
                flush(&mut segments, text_start, lt);
                let (item, next) = self.scan_evidence(lt, end);
                if let Some(item) = item {
                    segments.push(Segment::Evidence(item));
                }
                pos = next;
                text_start = next;
            } else if rest.starts_with("<motion")
                && rest[7..]
                    .chars()
                    .next()
                    .is_none_or(|c| c.is_whitespace() || c == '/' || c == '>')
            {
                flush(&mut segments, text_start, lt);
                let (tag, next) = self.scan_motion(lt, end);
                if let Some(tag) = tag {
                    segments.push(Segment::Motion(tag));
                }
                pos = next;
                text_start = next;
            } else if let Some(tag) = INNER_TAGS.iter().find(|t| rest.starts_with(**t)) {
                self.report(
                    Rule::StrayTag,
                    lt,
                    lt + tag.len(),
                    format!("{tag} outside an evidence triple"),
                );
                pos = lt + tag.len();
            } else {
                pos = lt + 1;
            }
        }
        flush(&mut segments, text_start, end);
        segments
    }

    fn skip_ws(&self, mut pos: usize, end: usize) -> usize {
        while let Some(c) = self.src[pos..end].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            pos += c.len_utf8();
        }
        pos
    }

    /// Content of `<tag>...</tag>` starting right after the opening tag.
    /// Returns `(content_end, after_close)`.
    fn enclosed(&mut self, tag: &str, open_at: usize, from: usize, end: usize) -> Option<(usize, usize)> {
        let close = format!("</{tag}>");
        let body = &self.src[from..end];
        let close_at = body.find(&close);
        let next_lt = body.find('<');
        match close_at {
            Some(c) if next_lt == Some(c) => Some((from + c, from + c + close.len())),
            _ => {
                self.report(
                    Rule::UnclosedTag,
                    open_at,
                    from,
                    format!("<{tag}> is not closed by {close}"),
                );
                None
            }
        }
    }

    fn expect(&mut self, literal: &str, pos: usize, end: usize, item_start: usize) -> Option<usize> {
        if self.src[pos..end].starts_with(literal) {
            Some(pos + literal.len())
        } else {
            self.report(
                Rule::IncompleteEvidence,
                item_start,
                pos,
                format!("evidence triple expects `{literal}` here"),
            );
            None
        }
    }

    fn scan_evidence(&mut self, start: usize, end: usize) -> (Option<EvidenceItem>, usize) {
        let before = self.violations.len();
        let mut pos = start + "<obj>".len();

        let Some((name_end, after)) = self.enclosed("obj", start, pos, end) else {
            return (None, pos);
        };
        let name = self.src[pos..name_end].to_string();
        if normalize_name(&name).is_empty() {
            self.report(Rule::EmptyObjectName, start, after, "object name is empty");
        }
        pos = self.skip_ws(after, end);

        let Some(box_open) = self.expect("<box>", pos, end, start) else {
            return (None, pos);
        };
        let Some((box_end, after)) = self.enclosed("box", pos, box_open, end) else {
            return (None, box_open);
        };
        let bbox = self.box_literal(box_open, box_end);
        pos = self.skip_ws(after, end);

        let Some(p) = self.expect("at", pos, end, start) else {
            return (None, pos);
        };
        pos = self.skip_ws(p, end);
        let Some(t_open) = self.expect("<t>", pos, end, start) else {
            return (None, pos);
        };
        let Some((t_end, after)) = self.enclosed("t", pos, t_open, end) else {
            return (None, t_open);
        };
        let timestamp = match parse_number(&self.src[t_open..t_end]) {
            Some(t) => {
                if t < 0.0 {
                    self.report(Rule::NegativeTimestamp, t_open, t_end, "timestamp is negative");
                }
                Some(quantize(t))
            }
            None => {
                self.report(
                    Rule::MalformedTimestamp,
                    t_open,
                    t_end,
                    format!("`{}` is not a number", &self.src[t_open..t_end]),
                );
                None
            }
        };
        pos = self.skip_ws(after, end);
        let Some(next) = self.expect("s", pos, end, start) else {
            return (None, pos);
        };

        let fatal = self.violations[before..]
            .iter()
            .any(|v| !v.rule.is_lint_only());
        let item = match (bbox, timestamp) {
            (Some(bbox), Some(timestamp)) if !fatal => Some(EvidenceItem {
                object_name: name,
                bbox,
                timestamp,
            }),
            _ => None,
        };
        (item, next)
    }

    fn box_literal(&mut self, start: usize, end: usize) -> Option<BBox> {
        let raw = self.src[start..end].trim();
        let inner = raw.strip_prefix('[').and_then(|r| r.strip_suffix(']'));
        let values: Option<Vec<f64>> = inner.and_then(|r| r.split(',').map(parse_number).collect());
        let values = match values {
            Some(v) if v.len() == 4 => v,
            _ => {
                self.report(
                    Rule::MalformedBox,
                    start,
                    end,
                    format!("`{raw}` is not a list of four numbers"),
                );
                return None;
            }
        };
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            self.report(
                Rule::BoxOutOfRange,
                start,
                end,
                format!("coordinate {v} lies outside [0, 1]"),
            );
            return None;
        }
        let q: Vec<f64> = values.into_iter().map(quantize).collect();
        match BBox::new(q[0], q[1], q[2], q[3]) {
            Ok(b) => Some(b),
            Err(e) => {
                self.report(Rule::DegenerateBox, start, end, e.to_string());
                None
            }
        }
    }

    /// Skips to just past the next `>` (or `end`) after a malformed motion tag.
    fn recover_motion(&self, pos: usize, end: usize) -> usize {
        self.src[pos..end].find('>').map_or(end, |i| pos + i + 1)
    }

    fn scan_motion(&mut self, start: usize, end: usize) -> (Option<MotionTag>, usize) {
        let before = self.violations.len();
        let mut pos = start + "<motion".len();
        let mut attrs: Vec<(&'a str, String, usize, usize)> = Vec::new();

        loop {
            pos = self.skip_ws(pos, end);
            let rest = &self.src[pos..end];
            if rest.starts_with("/>") {
                pos += 2;
                break;
            }
            if rest.is_empty() {
                self.report(Rule::UnclosedTag, start, end, "<motion is never closed");
                return (None, end);
            }
            if rest.starts_with('>') {
                self.report(Rule::MalformedMotion, start, pos + 1, "<motion> must be self-closing");
                return (None, pos + 1);
            }
            let name_len = rest
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_' || *b == b'-')
                .count();
            if name_len == 0 {
                self.report(Rule::MalformedMotion, start, pos, "expected an attribute name");
                return (None, self.recover_motion(pos, end));
            }
            let attr_name = &self.src[pos..pos + name_len];
            let attr_start = pos;
            pos = self.skip_ws(pos + name_len, end);
            if !self.src[pos..end].starts_with('=') {
                self.report(Rule::MalformedMotion, attr_start, pos, format!("attribute `{attr_name}` has no value"));
                return (None, self.recover_motion(pos, end));
            }
            pos = self.skip_ws(pos + 1, end);
            if !self.src[pos..end].starts_with('"') {
                self.report(Rule::MalformedMotion, attr_start, pos, format!("value of `{attr_name}` must be double-quoted"));
                return (None, self.recover_motion(pos, end));
            }
            let value_start = pos + 1;
            let value_len = self.src[value_start..end].find(['"', '<']);
            match value_len {
                Some(len) if self.src[value_start + len..].starts_with('"') => {
                    let value = self.src[value_start..value_start + len].to_string();
                    attrs.push((attr_name, value, attr_start, value_start + len + 1));
                    pos = value_start + len + 1;
                }
                _ => {
                    self.report(Rule::UnclosedTag, attr_start, value_start, format!("value of `{attr_name}` is not terminated"));
                    return (None, self.recover_motion(value_start, end));
                }
            }
        }

        let mut obj = None;
        let mut dir = None;
        let mut speed = None;
        let mut scale = None;
        for (name, value, a, b) in attrs {
            let slot_taken = match name {
                "obj" => obj.replace((value, a, b)).is_some(),
                "dir" => dir.replace((value, a, b)).is_some(),
                "speed" => speed.replace((value, a, b)).is_some(),
                "scale" => scale.replace((value, a, b)).is_some(),
                other => {
                    self.report(Rule::UnknownMotionAttr, a, b, format!("unknown attribute `{other}`"));
                    false
                }
            };
            if slot_taken {
                self.report(Rule::DuplicateMotionAttr, a, b, format!("attribute `{name}` repeated"));
            }
        }
        for (present, name) in [
            (obj.is_some(), "obj"),
            (dir.is_some(), "dir"),
            (speed.is_some(), "speed"),
            (scale.is_some(), "scale"),
        ] {
            if !present {
                self.report(Rule::MissingMotionAttr, start, pos, format!("missing attribute `{name}`"));
            }
        }

        if let Some((name, a, b)) = &obj {
            if normalize_name(name).is_empty() {
                self.report(Rule::EmptyObjectName, *a, *b, "object name is empty");
            }
        }
        let direction = dir.and_then(|(v, a, b)| {
            v.parse::<Direction>()
                .map_err(|e| self.report(Rule::BadDirectionVocab, a, b, e.to_string()))
                .ok()
        });
        let speed = speed.and_then(|(v, a, b)| {
            v.parse::<Speed>()
                .map_err(|e| self.report(Rule::BadSpeedVocab, a, b, e.to_string()))
                .ok()
        });
        let scale = scale.and_then(|(v, a, b)| {
            v.parse::<Scale>()
                .map_err(|e| self.report(Rule::BadScaleVocab, a, b, e.to_string()))
                .ok()
        });
        if let (Some(d), Some(s)) = (direction, speed) {
            if (d == Direction::Stat) != (s == Speed::Stationary) {
                self.report(
                    Rule::StatSpeedMismatch,
                    start,
                    pos,
                    format!("dir=\"{d}\" is inconsistent with speed=\"{s}\""),
                );
            }
        }

        let fatal = self.violations[before..]
            .iter()
            .any(|v| !v.rule.is_lint_only());
        let tag = match (obj, direction, speed, scale) {
            (Some((object_name, _, _)), Some(direction), Some(speed), Some(scale)) if !fatal => {
                Some(MotionTag {
                    object_name,
                    direction,
                    speed,
                    scale,
                })
            }
            _ => None,
        };
        (tag, pos)
    }
}
