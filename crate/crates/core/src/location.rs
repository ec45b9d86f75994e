//! Clip-to-chapter location matching and the chapter ingest text format.
//!
//! Chapter ingest files hold one chapter per line:
//!
//! ```text
//! # comments and blank lines are ignored
//! 00:00:00-00:10:00	JP	Tokyo	Shibuya Crossing
//! 00:10:00-01:02:30.500	JP	Tokyo
//! ```
//!
//! i.e. `START-END`, country code, city and an optional place, separated by
//! single tab characters. Timestamps are `H:MM:SS` with optional `.mmm`
//! milliseconds; hours may have any number of digits.

use serde::Serialize;

use crate::interval_tree::IntervalTree;
use crate::manifest::{Chapter, Location, VideoRecord};
use crate::time::{Millis, Span};

/// Interval index over one video's chapters.
#[derive(Clone, Debug, Default)]
pub struct ChapterIndex {
    tree: IntervalTree<Location>,
}

impl ChapterIndex {
    pub fn build(video: &VideoRecord) -> Self {
        Self::from_chapters(&video.chapters)
    }

    pub fn from_chapters(chapters: &[Chapter]) -> Self {
        ChapterIndex {
            tree: IntervalTree::new(
                chapters
                    .iter()
                    .map(|c| (c.start_s.0, c.end_s.0, c.location.clone())),
            ),
        }
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// Chapters containing an instant.
    pub fn at(&self, t: Millis) -> Vec<&Location> {
        self.tree.stab(t.0)
    }

    /// Location of the single chapter that fully contains `span`, or the
    /// number of containing chapters when that is not exactly one.
    pub fn match_span(&self, span: Span) -> MatchOutcome {
        let hits = self.tree.containing(span.start.0, span.end.0);
        match hits.as_slice() {
            [one] => MatchOutcome::Unique((*one).clone()),
            _ => MatchOutcome::Ambiguous { containing: hits.len() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchOutcome {
    Unique(Location),
    Ambiguous { containing: usize },
}

/// Same rule as [`ChapterIndex::match_span`] by scanning every chapter.
pub fn match_linear(chapters: &[Chapter], span: Span) -> MatchOutcome {
    let hits: Vec<&Chapter> = chapters
        .iter()
        .filter(|c| c.start_s < c.end_s && c.span().contains_span(&span))
        .collect();
    match hits.as_slice() {
        [one] => MatchOutcome::Unique(one.location.clone()),
        _ => MatchOutcome::Ambiguous { containing: hits.len() },
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("chapter line {line}: {message}")]
pub struct ChapterParseError {
    pub line: usize,
    pub message: String,
}

fn parse_timestamp(s: &str) -> Option<Millis> {
    let (hms, frac) = match s.split_once('.') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let parts: Vec<&str> = hms.split(':').collect();
    let [h, m, sec] = parts.as_slice() else {
        return None;
    };
    let digits = |x: &str| !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit());
    if !digits(h) || m.len() != 2 || sec.len() != 2 || !digits(m) || !digits(sec) {
        return None;
    }
    let (h, m, sec): (i64, i64, i64) = (h.parse().ok()?, m.parse().ok()?, sec.parse().ok()?);
    if m >= 60 || sec >= 60 {
        return None;
    }
    let ms = match frac {
        None => 0,
        Some(f) if f.len() == 3 && digits(f) => f.parse().ok()?,
        Some(_) => return None,
    };
    Some(Millis(((h * 60 + m) * 60 + sec) * 1000 + ms))
}

pub fn format_timestamp(t: Millis) -> String {
    let ms = t.0;
    let (s, frac) = (ms / 1000, ms % 1000);
    let base = format!("{:02}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60);
    if frac == 0 {
        base
    } else {
        format!("{base}.{frac:03}")
    }
}

pub fn parse_chapters(text: &str) -> Result<Vec<Chapter>, ChapterParseError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ChapterParseError { line: idx + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(err(format!("expected 3 or 4 tab-separated fields, got {}", fields.len())));
        }
        let (a, b) = fields[0]
            .split_once('-')
            .ok_or_else(|| err(format!("bad range {:?}", fields[0])))?;
        let start = parse_timestamp(a).ok_or_else(|| err(format!("bad timestamp {a:?}")))?;
        let end = parse_timestamp(b).ok_or_else(|| err(format!("bad timestamp {b:?}")))?;
        if start >= end {
            return Err(err(format!("chapter {} is empty", fields[0])));
        }
        let location = Location {
            country_code: fields[1].to_string(),
            city: fields[2].to_string(),
            place: fields.get(3).filter(|p| !p.is_empty()).map(|p| p.to_string()),
        };
        if !location.has_valid_country_code() {
            return Err(err(format!("invalid country code {:?}", fields[1])));
        }
        if location.city.is_empty() {
            return Err(err("empty city".into()));
        }
        out.push(Chapter { start_s: start, end_s: end, location });
    }
    out.sort_by_key(|c| (c.start_s, c.end_s));
    Ok(out)
}

pub fn format_chapters(chapters: &[Chapter]) -> String {
    let mut out = String::new();
    for c in chapters {
        out.push_str(&format!(
            "{}-{}\t{}\t{}",
            format_timestamp(c.start_s),
            format_timestamp(c.end_s),
            c.location.country_code,
            c.location.city
        ));
        if let Some(p) = &c.location.place {
            out.push('\t');
            out.push_str(p);
        }
        out.push('\n');
    }
    out
}
