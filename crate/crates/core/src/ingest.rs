//! Readers and writers for detection streams, ground truth and track assignments.
//!
//! Detection stream: tab-separated, one detection per line, first non-comment line is
//! a header naming the columns. Lines starting with `#` are ignored.
//!
//! ```text
//! frame  det_id  x  y  w  h  confidence  yaw  pitch  roll  blur  embedding
//! ```
//!
//! `embedding` holds a comma-separated float list and may be empty (or the column
//! absent) for detections without a face template.
//!
//! Ground truth: `frame,identity,x,y,w,h` CSV, optional header, no quoting.
//!
//! Assignments: `frame,track_id,x,y,w,h,det_id` CSV with header.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::geometry::{BBox, QualityAttrs};

pub type FrameIndex = u64;

/// Track identifier, assigned in increasing order as tracklets spawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackId(pub u64);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub frame: FrameIndex,
    pub det_id: u32,
    pub bbox: BBox,
    pub quality: QualityAttrs,
    pub embedding: Option<Embedding>,
}

pub const DETECTION_COLUMNS: [&str; 12] = [
    "frame",
    "det_id",
    "x",
    "y",
    "w",
    "h",
    "confidence",
    "yaw",
    "pitch",
    "roll",
    "blur",
    "embedding",
];

#[derive(Deserialize)]
struct RawDetection {
    frame: u64,
    det_id: u32,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    confidence: f64,
    yaw: f64,
    pitch: f64,
    roll: f64,
    blur: f64,
    #[serde(default)]
    embedding: Option<String>,
}

fn line_of(pos: Option<&csv::Position>) -> u64 {
    pos.map(|p| p.line()).unwrap_or(0)
}

fn csv_error(err: csv::Error) -> Error {
    let line = line_of(err.position());
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        kind => Error::Parse {
            line,
            message: csv_kind_message(kind),
        },
    }
}

fn csv_kind_message(kind: csv::ErrorKind) -> String {
    match kind {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(i) => format!("field {}: {}", i + 1, err.kind()),
            None => err.kind().to_string(),
        },
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        csv::ErrorKind::Utf8 { err, .. } => format!("invalid UTF-8: {err}"),
        other => format!("{other:?}"),
    }
}

fn parse_embedding(text: &str, line: u64) -> Result<Option<Embedding>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(None);
    }
    let values = text
        .split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("embedding entry `{s}`: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Embedding::new(values)
        .map(Some)
        .map_err(|e| Error::validation(line, "embedding", e.to_string()))
}

/// Reads a detection stream, inferring the embedding dimension from the first template.
pub fn parse_detections<R: Read>(source: R) -> Result<Vec<DetectionRecord>> {
    parse_detections_with_dim(source, None)
}

/// Reads a detection stream. When `embedding_dim` is set, every template must have it;
/// otherwise all templates must share the dimension of the first one.
pub fn parse_detections_with_dim<R: Read>(
    source: R,
    embedding_dim: Option<usize>,
) -> Result<Vec<DetectionRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    for col in &DETECTION_COLUMNS[..11] {
        if !headers.iter().any(|h| h == *col) {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing column `{col}` in header"),
            });
        }
    }

    let mut dim = embedding_dim;
    let mut out = Vec::new();
    let mut seen: HashSet<u32> = HashSet::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(csv_error)? {
        let line = line_of(record.position());
        let raw: RawDetection = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::Parse {
                line,
                message: match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => match err.field() {
                        Some(i) => format!(
                            "column `{}`: {}",
                            headers.get(i as usize).unwrap_or("?"),
                            err.kind()
                        ),
                        None => err.kind().to_string(),
                    },
                    _ => e.to_string(),
                },
            })?;
        let bbox = BBox::new(raw.x, raw.y, raw.w, raw.h)
            .map_err(|e| Error::validation(line, "box", e.to_string()))?;
        let quality = QualityAttrs {
            det_confidence: raw.confidence,
            yaw: raw.yaw,
            pitch: raw.pitch,
            roll: raw.roll,
            blur: raw.blur,
        };
        quality
            .check()
            .map_err(|(field, msg)| Error::validation(line, field, msg))?;
        let embedding = match raw.embedding.as_deref() {
            Some(text) => parse_embedding(text, line)?,
            None => None,
        };
        if let Some(e) = &embedding {
            match dim {
                Some(d) if d != e.dim() => {
                    return Err(Error::validation(
                        line,
                        "embedding",
                        Error::DimensionMismatch {
                            expected: d,
                            found: e.dim(),
                        }
                        .to_string(),
                    ))
                }
                Some(_) => {}
                None => dim = Some(e.dim()),
            }
        }

        if let Some(prev) = out.last().map(|r: &DetectionRecord| r.frame) {
            if raw.frame < prev {
                return Err(Error::Ordering {
                    line,
                    frame: raw.frame,
                    previous: prev,
                });
            }
            if raw.frame != prev {
                seen.clear();
            }
        }
        if !seen.insert(raw.det_id) {
            return Err(Error::validation(
                line,
                "det_id",
                format!("duplicate det_id {} in frame {}", raw.det_id, raw.frame),
            ));
        }
        out.push(DetectionRecord {
            frame: raw.frame,
            det_id: raw.det_id,
            bbox,
            quality,
            embedding,
        });
    }
    Ok(out)
}

pub fn write_detections<W: Write>(records: &[DetectionRecord], mut sink: W) -> Result<()> {
    writeln!(sink, "{}", DETECTION_COLUMNS.join("\t"))?;
    for r in records {
        let q = &r.quality;
        write!(
            sink,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t",
            r.frame,
            r.det_id,
            r.bbox.x(),
            r.bbox.y(),
            r.bbox.width(),
            r.bbox.height(),
            q.det_confidence,
            q.yaw,
            q.pitch,
            q.roll,
            q.blur
        )?;
        if let Some(e) = &r.embedding {
            for (i, v) in e.values().iter().enumerate() {
                if i > 0 {
                    sink.write_all(b",")?;
                }
                write!(sink, "{v}")?;
            }
        }
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Splits a frame-sorted stream into per-frame slices.
pub fn frames(
    records: &[DetectionRecord],
) -> impl Iterator<Item = (FrameIndex, &[DetectionRecord])> {
    records
        .chunk_by(|a, b| a.frame == b.frame)
        .map(|chunk| (chunk[0].frame, chunk))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtEntry {
    pub frame: FrameIndex,
    pub identity: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub entries: Vec<GtEntry>,
}

impl GroundTruth {
    pub fn new(entries: Vec<GtEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            check_identity_label(&e.identity, i as u64 + 1)?;
            if !seen.insert((e.frame, e.identity.as_str())) {
                return Err(Error::validation(
                    i as u64 + 1,
                    "identity",
                    format!("duplicate identity `{}` in frame {}", e.identity, e.frame),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_identity_label(label: &str, line: u64) -> Result<()> {
    if label.is_empty() || label.contains([',', '\n', '\r', '"']) {
        return Err(Error::validation(
            line,
            "identity",
            format!("label `{label}` must be non-empty without commas, quotes or newlines"),
        ));
    }
    Ok(())
}

/// Opens a headerless CSV reader; the caller skips a leading header row itself.
fn plain_csv<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source)
}

fn is_header(record: &csv::StringRecord) -> bool {
    record
        .get(0)
        .is_some_and(|f| f.eq_ignore_ascii_case("frame"))
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, name: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    let line = line_of(record.position());
    let raw = record.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column `{name}`"),
    })?;
    raw.parse::<T>().map_err(|e| Error::Parse {
        line,
        message: format!("column `{name}`: `{raw}`: {e}"),
    })
}

fn expect_width(record: &csv::StringRecord, width: usize) -> Result<()> {
    if record.len() != width {
        return Err(Error::Parse {
            line: line_of(record.position()),
            message: format!("expected {width} fields, found {}", record.len()),
        });
    }
    Ok(())
}

fn read_box(record: &csv::StringRecord, first: usize) -> Result<BBox> {
    let line = line_of(record.position());
    BBox::new(
        field(record, first, "x")?,
        field(record, first + 1, "y")?,
        field(record, first + 2, "w")?,
        field(record, first + 3, "h")?,
    )
    .map_err(|e| Error::validation(line, "box", e.to_string()))
}

pub fn parse_ground_truth<R: Read>(source: R) -> Result<GroundTruth> {
    let mut reader = plain_csv(source);
    let mut entries = Vec::new();
    let mut seen: HashSet<(FrameIndex, String)> = HashSet::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while reader.read_record(&mut record).map_err(csv_error)? {
        if std::mem::take(&mut first) && is_header(&record) {
            continue;
        }
        let line = line_of(record.position());
        expect_width(&record, 6)?;
        let frame: FrameIndex = field(&record, 0, "frame")?;
        let identity = record[1].to_string();
        check_identity_label(&identity, line)?;
        let bbox = read_box(&record, 2)?;
        if !seen.insert((frame, identity.clone())) {
            return Err(Error::validation(
                line,
                "identity",
                format!("duplicate identity `{identity}` in frame {frame}"),
            ));
        }
        entries.push(GtEntry {
            frame,
            identity,
            bbox,
        });
    }
    Ok(GroundTruth { entries })
}

pub fn write_ground_truth<W: Write>(gt: &GroundTruth, mut sink: W) -> Result<()> {
    writeln!(sink, "frame,identity,x,y,w,h")?;
    for e in &gt.entries {
        writeln!(
            sink,
            "{},{},{},{},{},{}",
            e.frame,
            e.identity,
            e.bbox.x(),
            e.bbox.y(),
            e.bbox.width(),
            e.bbox.height()
        )?;
    }
    sink.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub frame: FrameIndex,
    pub det_id: u32,
    pub bbox: BBox,
    pub track_id: TrackId,
}

/// Every (frame, detection, track) decision made over a stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssignmentLog {
    pub entries: Vec<Assignment>,
}

impl AssignmentLog {
    pub fn new(entries: Vec<Assignment>) -> Result<Self> {
        let log = Self { entries };
        log.validate()?;
        Ok(log)
    }

    /// Checks one track per (frame, det_id) and one det_id per (frame, track_id).
    /// Error lines count data rows from 1.
    pub fn validate(&self) -> Result<()> {
        let mut dets = HashSet::new();
        let mut tracks = HashSet::new();
        for (i, a) in self.entries.iter().enumerate() {
            let line = i as u64 + 1;
            if !dets.insert((a.frame, a.det_id)) {
                return Err(Error::validation(
                    line,
                    "det_id",
                    format!("detection {} assigned twice in frame {}", a.det_id, a.frame),
                ));
            }
            if !tracks.insert((a.frame, a.track_id)) {
                return Err(Error::validation(
                    line,
                    "track_id",
                    format!(
                        "track {} holds two detections in frame {}",
                        a.track_id, a.frame
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct track IDs in order of first appearance.
    pub fn track_ids(&self) -> Vec<TrackId> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .filter(|a| seen.insert(a.track_id))
            .map(|a| a.track_id)
            .collect()
    }
}

pub const ASSIGNMENT_HEADER: &str = "frame,track_id,x,y,w,h,det_id";

pub fn write_assignment_row<W: Write>(a: &Assignment, sink: &mut W) -> Result<()> {
    writeln!(
        sink,
        "{},{},{},{},{},{},{}",
        a.frame,
        a.track_id,
        a.bbox.x(),
        a.bbox.y(),
        a.bbox.width(),
        a.bbox.height(),
        a.det_id
    )?;
    Ok(())
}

pub fn write_assignments<W: Write>(log: &AssignmentLog, mut sink: W) -> Result<()> {
    writeln!(sink, "{ASSIGNMENT_HEADER}")?;
    for a in &log.entries {
        write_assignment_row(a, &mut sink)?;
    }
    sink.flush()?;
    Ok(())
}

pub fn parse_assignments<R: Read>(source: R) -> Result<AssignmentLog> {
    let mut reader = plain_csv(source);
    let mut entries = Vec::new();
    let mut dets = HashSet::new();
    let mut tracks = HashSet::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while reader.read_record(&mut record).map_err(csv_error)? {
        if std::mem::take(&mut first) && is_header(&record) {
            continue;
        }
        let line = line_of(record.position());
        expect_width(&record, 7)?;
        let a = Assignment {
            frame: field(&record, 0, "frame")?,
            track_id: TrackId(field(&record, 1, "track_id")?),
            bbox: read_box(&record, 2)?,
            det_id: field(&record, 6, "det_id")?,
        };
        if !dets.insert((a.frame, a.det_id)) {
            return Err(Error::validation(
                line,
                "det_id",
                format!("detection {} assigned twice in frame {}", a.det_id, a.frame),
            ));
        }
        if !tracks.insert((a.frame, a.track_id)) {
            return Err(Error::validation(
                line,
                "track_id",
                format!(
                    "track {} holds two detections in frame {}",
                    a.track_id, a.frame
                ),
            ));
        }
        entries.push(a);
    }
    Ok(AssignmentLog { entries })
}
