//! Long-term tracking metrics: soft/hard mismatch errors, fragmentation (Frag),
//! identity switches (IDSW), completion rates (CR_X) and their sum (CRS).
//!
//! Predicted boxes are tied to ground truth per frame by a maximum-IOU matching
//! restricted to pairs with IOU >= 0.5. Every later count is taken on that matching.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::association::{solve_assignment, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::ingest::{AssignmentLog, FrameIndex, GroundTruth, TrackId};

pub const MATCH_IOU: f64 = 0.5;

/// Number of completion-rate thresholds summed into CRS (X = 1..=100).
pub const CR_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct FramePairs {
    pub frame: FrameIndex,
    /// `(identity index, predicted track)`, sorted by identity index.
    pub pairs: Vec<(usize, TrackId)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatching {
    /// Ground-truth identity labels in order of first appearance.
    pub identities: Vec<String>,
    /// Ground-truth detections per identity.
    pub gt_counts: Vec<usize>,
    /// Frames with at least one matched pair, in increasing order.
    pub frames: Vec<FramePairs>,
}

impl FrameMatching {
    pub fn num_dets(&self) -> usize {
        self.gt_counts.iter().sum()
    }
}

pub fn match_frames(gt: &GroundTruth, log: &AssignmentLog) -> FrameMatching {
    let mut identities: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut gt_counts: Vec<usize> = Vec::new();
    let mut gt_by_frame: BTreeMap<FrameIndex, Vec<(usize, BBox)>> = BTreeMap::new();
    for e in &gt.entries {
        let idx = *index.entry(e.identity.as_str()).or_insert_with(|| {
            identities.push(e.identity.clone());
            gt_counts.push(0);
            identities.len() - 1
        });
        gt_counts[idx] += 1;
        gt_by_frame.entry(e.frame).or_default().push((idx, e.bbox));
    }
    let mut pred_by_frame: HashMap<FrameIndex, Vec<(TrackId, BBox)>> = HashMap::new();
    for a in &log.entries {
        pred_by_frame
            .entry(a.frame)
            .or_default()
            .push((a.track_id, a.bbox));
    }

    let mut frames = Vec::new();
    for (&frame, truth) in &gt_by_frame {
        let Some(preds) = pred_by_frame.get(&frame) else {
            continue;
        };
        let costs = CostMatrix::from_fn(truth.len(), preds.len(), |r, c| {
            let v = iou(&truth[r].1, &preds[c].1);
            if v >= MATCH_IOU {
                v
            } else {
                0.0
            }
        });
        let mut pairs: Vec<(usize, TrackId)> = solve_assignment(&costs)
            .matches
            .into_iter()
            .filter(|&(r, c)| costs.get(r, c) >= MATCH_IOU)
            .map(|(r, c)| (truth[r].0, preds[c].0))
            .collect();
        if pairs.is_empty() {
            continue;
        }
        pairs.sort_unstable();
        frames.push(FramePairs { frame, pairs });
    }
    FrameMatching {
        identities,
        gt_counts,
        frames,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MismatchKind {
    /// Switched to a track ID never matched before.
    Soft,
    /// Switched to a track ID already matched earlier (or to another identity now).
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MismatchEvent {
    pub identity: usize,
    pub frame: FrameIndex,
    pub from: TrackId,
    pub to: TrackId,
    pub kind: MismatchKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MismatchEvents {
    pub events: Vec<MismatchEvent>,
}

impl MismatchEvents {
    pub fn soft(&self) -> usize {
        self.count(MismatchKind::Soft)
    }

    pub fn hard(&self) -> usize {
        self.count(MismatchKind::Hard)
    }

    fn count(&self, kind: MismatchKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// Events of one identity, in frame order.
    pub fn for_identity(&self, identity: usize) -> impl Iterator<Item = &MismatchEvent> {
        self.events.iter().filter(move |e| e.identity == identity)
    }
}

pub fn classify_mismatches(matching: &FrameMatching) -> MismatchEvents {
    let mut seen: HashSet<TrackId> = HashSet::new();
    let mut last: Vec<Option<TrackId>> = vec![None; matching.identities.len()];
    let mut events = Vec::new();
    for fp in &matching.frames {
        for &(identity, id) in &fp.pairs {
            if let Some(prev) = last[identity] {
                if prev != id {
                    let elsewhere = fp.pairs.iter().any(|&(j, x)| j != identity && x == id);
                    let kind = if seen.contains(&id) || elsewhere {
                        MismatchKind::Hard
                    } else {
                        MismatchKind::Soft
                    };
                    events.push(MismatchEvent {
                        identity,
                        frame: fp.frame,
                        from: prev,
                        to: id,
                        kind,
                    });
                }
            }
            last[identity] = Some(id);
        }
        seen.extend(fp.pairs.iter().map(|&(_, id)| id));
    }
    MismatchEvents { events }
}

fn ratio(count: usize, num_dets: usize, name: &str) -> Result<f64> {
    if num_dets == 0 {
        return Err(Error::UndefinedMetric(format!(
            "{name} needs at least one ground-truth detection"
        )));
    }
    Ok(count as f64 / num_dets as f64)
}

/// Soft mismatches per ground-truth detection.
pub fn frag(events: &MismatchEvents, num_dets: usize) -> Result<f64> {
    ratio(events.soft(), num_dets, "Frag")
}

/// Hard mismatches per ground-truth detection.
pub fn idsw(events: &MismatchEvents, num_dets: usize) -> Result<f64> {
    ratio(events.hard(), num_dets, "IDSW")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCompletion {
    pub identity: String,
    /// Track matched to this identity on the most frames; absent if never matched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_track: Option<TrackId>,
    pub matched_frames: usize,
    pub gt_frames: usize,
}

impl IdentityCompletion {
    pub fn completion(&self) -> f64 {
        self.matched_frames as f64 / self.gt_frames as f64
    }

    /// Completion is at least `percent`%, compared exactly on integers.
    pub fn reaches(&self, percent: usize) -> bool {
        self.matched_frames * 100 >= percent * self.gt_frames
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRates {
    /// `cr[x]` for x in 0..=100.
    pub cr: Vec<f64>,
    pub crs: f64,
    pub per_identity: Vec<IdentityCompletion>,
}

pub fn completion_rates(matching: &FrameMatching, gt: &GroundTruth) -> Result<CompletionRates> {
    debug_assert_eq!(matching.num_dets(), gt.len());
    let n = matching.identities.len();
    // Per identity: track -> (frames matched, order of first appearance).
    let mut tallies: Vec<HashMap<TrackId, (usize, usize)>> = vec![HashMap::new(); n];
    for fp in &matching.frames {
        for &(identity, id) in &fp.pairs {
            let order = tallies[identity].len();
            tallies[identity].entry(id).or_insert((0, order)).0 += 1;
        }
    }
    let per_identity: Vec<IdentityCompletion> = (0..n)
        .map(|i| {
            let best = tallies[i]
                .iter()
                .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
                .map(|(&id, &(count, _))| (id, count));
            IdentityCompletion {
                identity: matching.identities[i].clone(),
                canonical_track: best.map(|b| b.0),
                matched_frames: best.map_or(0, |b| b.1),
                gt_frames: matching.gt_counts[i],
            }
        })
        .collect();
    let (cr, crs) = cr_curve(&per_identity)?;
    Ok(CompletionRates {
        cr,
        crs,
        per_identity,
    })
}

/// CR_X for X in 0..=100 and their mean over 1..=100. Identities without ground-truth
/// detections are left out.
pub fn cr_curve(per_identity: &[IdentityCompletion]) -> Result<(Vec<f64>, f64)> {
    let counted: Vec<&IdentityCompletion> =
        per_identity.iter().filter(|p| p.gt_frames > 0).collect();
    if counted.is_empty() {
        return Err(Error::UndefinedMetric(
            "completion rate needs at least one ground-truth identity".into(),
        ));
    }
    let total = counted.len() as f64;
    let cr: Vec<f64> = (0..=CR_STEPS)
        .map(|x| counted.iter().filter(|p| p.reaches(x)).count() as f64 / total)
        .collect();
    let crs = cr[1..].iter().sum::<f64>() / CR_STEPS as f64;
    Ok((cr, crs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub video: String,
    pub frag: f64,
    pub idsw: f64,
    pub crs: f64,
    pub num_dets: usize,
    pub soft_mismatches: usize,
    pub hard_mismatches: usize,
    pub num_identities: usize,
    /// Engine frames per second, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    pub cr: Vec<f64>,
    pub per_identity: Vec<IdentityCompletion>,
}

/// Scores one video.
pub fn evaluate(video: &str, gt: &GroundTruth, log: &AssignmentLog) -> Result<MetricsReport> {
    let matching = match_frames(gt, log);
    let events = classify_mismatches(&matching);
    let num_dets = matching.num_dets();
    let rates = completion_rates(&matching, gt)?;
    Ok(MetricsReport {
        video: video.to_string(),
        frag: frag(&events, num_dets)?,
        idsw: idsw(&events, num_dets)?,
        crs: rates.crs,
        num_dets,
        soft_mismatches: events.soft(),
        hard_mismatches: events.hard(),
        num_identities: rates.per_identity.len(),
        fps: None,
        cr: rates.cr,
        per_identity: rates.per_identity,
    })
}

/// Pools several videos: mismatch counts and detections are summed before dividing,
/// and every video's identities enter one completion-rate curve.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let num_dets: usize = reports.iter().map(|r| r.num_dets).sum();
    let soft: usize = reports.iter().map(|r| r.soft_mismatches).sum();
    let hard: usize = reports.iter().map(|r| r.hard_mismatches).sum();
    let per_identity: Vec<IdentityCompletion> = reports
        .iter()
        .flat_map(|r| {
            r.per_identity.iter().map(move |p| IdentityCompletion {
                identity: format!("{}/{}", r.video, p.identity),
                ..p.clone()
            })
        })
        .collect();
    let (cr, crs) = cr_curve(&per_identity)?;
    Ok(MetricsReport {
        video: "aggregate".into(),
        frag: ratio(soft, num_dets, "Frag")?,
        idsw: ratio(hard, num_dets, "IDSW")?,
        crs,
        num_dets,
        soft_mismatches: soft,
        hard_mismatches: hard,
        num_identities: per_identity.len(),
        fps: None,
        cr,
        per_identity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// TOML.
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub aggregate: MetricsReport,
    pub videos: Vec<MetricsReport>,
}

impl ReportFile {
    pub fn new(videos: Vec<MetricsReport>) -> Result<Self> {
        let mut aggregate = aggregate(&videos)?;
        if let [single] = videos.as_slice() {
            aggregate.fps = single.fps;
        }
        Ok(Self { aggregate, videos })
    }
}

pub fn emit_report<W: Write>(report: &ReportFile, format: ReportFormat, mut sink: W) -> Result<()> {
    let text = match format {
        ReportFormat::Text => toml::to_string(report)
            .map_err(|e| Error::Config(format!("cannot serialize report: {e}")))?,
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)
                .map_err(|e| Error::Config(format!("cannot serialize report: {e}")))?;
            s.push('\n');
            s
        }
    };
    sink.write_all(text.as_bytes())?;
    sink.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(mut source: R, format: ReportFormat) -> Result<ReportFile> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    match format {
        ReportFormat::Text => toml::from_str(&text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].matches('\n').count() as u64 + 1)
                .unwrap_or(0),
            message: e.message().to_string(),
        }),
        ReportFormat::Json => serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        }),
    }
}

/// Completion-rate plot as `X,CR_X` rows for X = 0..=100.
pub fn emit_crp<W: Write>(report: &MetricsReport, mut sink: W) -> Result<()> {
    writeln!(sink, "X,CR_X")?;
    for (x, v) in report.cr.iter().enumerate() {
        writeln!(sink, "{x},{v}")?;
    }
    sink.flush()?;
    Ok(())
}

const SVG_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Step plot of one or more CR curves (each indexed by X = 0..=100).
pub fn render_crp_svg(series: &[(&str, &[f64])]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const LEFT: f64 = 50.0;
    const TOP: f64 = 20.0;
    const PW: f64 = 400.0;
    const PH: f64 = 250.0;
    let px = |x: f64| LEFT + x / 100.0 * PW;
    let py = |y: f64| TOP + (1.0 - y) * PH;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PW}" height="{PH}" fill="none" stroke="black"/>"#
    );
    for tick in (0..=100).step_by(20) {
        let t = tick as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{tick}</text>"#,
            px(t),
            TOP + PH + 15.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
            LEFT - 5.0,
            py(t / 100.0) + 4.0,
            t / 100.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">X (% of ground-truth detections)</text>"#,
        LEFT + PW / 2.0,
        H - 8.0
    );
    for (i, (name, cr)) in series.iter().enumerate() {
        let color = SVG_COLORS[i % SVG_COLORS.len()];
        let mut d = String::new();
        for (x, &v) in cr.iter().enumerate() {
            let (xf, yf) = (px(x as f64), py(v));
            if x == 0 {
                let _ = write!(d, "M{xf:.2},{yf:.2}");
            } else {
                let _ = write!(d, " H{xf:.2} V{yf:.2}");
            }
        }
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            LEFT + 10.0,
            TOP + 15.0 + 14.0 * i as f64,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
