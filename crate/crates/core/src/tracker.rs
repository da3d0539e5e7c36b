//! Tracklet lifecycle: predict every live tracklet, associate by IOU, update or spawn,
//! age out silent tracklets, and optionally reconnect fragments by face similarity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::association::{gate_matches, solve_assignment, CostMatrix};
use crate::correction::{MergeEvent, MergeSet};
use crate::error::{Error, Result};
use crate::fbtr::{reconnect, QualityGates, TemplatePool, DEFAULT_POOL_CAP};
use crate::geometry::BBox;
use crate::ingest::{frames, Assignment, AssignmentLog, DetectionRecord, FrameIndex, TrackId};

/// Position model used to carry a tracklet through frames without a matching detection.
pub trait Predictor: fmt::Debug + Send {
    fn observe(&mut self, frame: FrameIndex, bbox: BBox);
    fn predict(&self, frame: FrameIndex) -> BBox;
    fn last_box(&self) -> BBox;
}

#[derive(Debug, Clone)]
pub struct HoldLast {
    last: BBox,
}

impl HoldLast {
    pub fn new(bbox: BBox) -> Self {
        Self { last: bbox }
    }
}

impl Predictor for HoldLast {
    fn observe(&mut self, _frame: FrameIndex, bbox: BBox) {
        self.last = bbox;
    }

    fn predict(&self, _frame: FrameIndex) -> BBox {
        self.last
    }

    fn last_box(&self) -> BBox {
        self.last
    }
}

/// Moves the box centre along an exponentially smoothed per-frame velocity; size is held.
/// The first velocity sample is taken as-is, later ones are blended with weight `alpha`.
#[derive(Debug, Clone)]
pub struct ConstantVelocity {
    alpha: f64,
    last: BBox,
    last_frame: FrameIndex,
    velocity: Option<(f64, f64)>,
}

impl ConstantVelocity {
    pub fn new(frame: FrameIndex, bbox: BBox, alpha: f64) -> Self {
        Self {
            alpha,
            last: bbox,
            last_frame: frame,
            velocity: None,
        }
    }

    pub fn velocity(&self) -> (f64, f64) {
        self.velocity.unwrap_or((0.0, 0.0))
    }
}

impl Predictor for ConstantVelocity {
    fn observe(&mut self, frame: FrameIndex, bbox: BBox) {
        if frame > self.last_frame {
            let dt = (frame - self.last_frame) as f64;
            let (cx0, cy0) = self.last.center();
            let (cx1, cy1) = bbox.center();
            let sample = ((cx1 - cx0) / dt, (cy1 - cy0) / dt);
            self.velocity = Some(match self.velocity {
                None => sample,
                Some((vx, vy)) => (
                    self.alpha * sample.0 + (1.0 - self.alpha) * vx,
                    self.alpha * sample.1 + (1.0 - self.alpha) * vy,
                ),
            });
        }
        self.last = bbox;
        self.last_frame = frame;
    }

    fn predict(&self, frame: FrameIndex) -> BBox {
        let Some((vx, vy)) = self.velocity else {
            return self.last;
        };
        let dt = frame.saturating_sub(self.last_frame) as f64;
        let (cx, cy) = self.last.center();
        self.last.recentered(cx + vx * dt, cy + vy * dt)
    }

    fn last_box(&self) -> BBox {
        self.last
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    HoldLast,
    ConstantVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Matches must have IOU strictly above this.
    pub iou_threshold: f64,
    /// Frames a tracklet may go without a detection before it dies.
    pub t_max: u32,
    pub predictor: PredictorKind,
    /// Velocity smoothing weight for the constant-velocity predictor.
    pub cv_smoothing: f64,
    pub fbtr_enabled: bool,
    pub cm_enabled: bool,
    /// Minimum similarity for a reconnection (inclusive).
    pub fbtr_threshold: f64,
    pub gates: QualityGates,
    pub pool_cap: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.25,
            t_max: 10,
            predictor: PredictorKind::ConstantVelocity,
            cv_smoothing: 0.5,
            fbtr_enabled: true,
            cm_enabled: true,
            fbtr_threshold: 0.7,
            gates: QualityGates::default(),
            pool_cap: DEFAULT_POOL_CAP,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.iou_threshold) {
            return Err(Error::Config(format!(
                "IOU threshold {} must be in [0, 1)",
                self.iou_threshold
            )));
        }
        if !(-1.0..=1.0).contains(&self.fbtr_threshold) {
            return Err(Error::Config(format!(
                "reconnection threshold {} must be in [-1, 1]",
                self.fbtr_threshold
            )));
        }
        if !(self.cv_smoothing > 0.0 && self.cv_smoothing <= 1.0) {
            return Err(Error::Config(format!(
                "velocity smoothing {} must be in (0, 1]",
                self.cv_smoothing
            )));
        }
        if self.pool_cap == 0 {
            return Err(Error::Config("template pool cap must be at least 1".into()));
        }
        self.gates.validate()
    }

    fn new_predictor(&self, frame: FrameIndex, bbox: BBox) -> Box<dyn Predictor> {
        match self.predictor {
            PredictorKind::HoldLast => Box::new(HoldLast::new(bbox)),
            PredictorKind::ConstantVelocity => {
                Box::new(ConstantVelocity::new(frame, bbox, self.cv_smoothing))
            }
        }
    }
}

/// The five module combinations compared in an ablation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ablation {
    Da,
    DaFbtr,
    DaTm,
    DaTmFbtr,
    DaTmFbtrCm,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Da,
        Ablation::DaFbtr,
        Ablation::DaTm,
        Ablation::DaTmFbtr,
        Ablation::DaTmFbtrCm,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Ablation::Da => "DA",
            Ablation::DaFbtr => "DA+FBTR",
            Ablation::DaTm => "DA+TM",
            Ablation::DaTmFbtr => "DA+TM+FBTR",
            Ablation::DaTmFbtrCm => "DA+TM+FBTR+CM",
        }
    }

    /// `base` with the module switches set for this combination. Without the tracking
    /// module, tracklets hold their last box and die on the first missed frame.
    pub fn config(&self, base: &TrackerConfig) -> TrackerConfig {
        let mut c = base.clone();
        let (tm, fbtr, cm) = match self {
            Ablation::Da => (false, false, false),
            Ablation::DaFbtr => (false, true, false),
            Ablation::DaTm => (true, false, false),
            Ablation::DaTmFbtr => (true, true, false),
            Ablation::DaTmFbtrCm => (true, true, true),
        };
        if !tm {
            c.predictor = PredictorKind::HoldLast;
            c.t_max = 0;
        }
        c.fbtr_enabled = fbtr;
        c.cm_enabled = cm;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackState {
    Active,
    Lost,
    Dead,
}

#[derive(Debug)]
pub struct Tracklet {
    id: TrackId,
    state: TrackState,
    predictor: Box<dyn Predictor>,
    frames_since_update: u32,
    birth_frame: FrameIndex,
    last_frame: FrameIndex,
    detections: Vec<(FrameIndex, u32)>,
    pool: TemplatePool,
}

impl Tracklet {
    pub fn id(&self) -> TrackId {
        self.id
    }

    pub fn state(&self) -> TrackState {
        self.state
    }

    pub fn last_box(&self) -> BBox {
        self.predictor.last_box()
    }

    pub fn frames_since_update(&self) -> u32 {
        self.frames_since_update
    }

    pub fn birth_frame(&self) -> FrameIndex {
        self.birth_frame
    }

    /// Frame of the most recent detection.
    pub fn last_frame(&self) -> FrameIndex {
        self.last_frame
    }

    pub fn detections(&self) -> &[(FrameIndex, u32)] {
        &self.detections
    }

    pub fn pool(&self) -> &TemplatePool {
        &self.pool
    }

    pub fn predict(&self, frame: FrameIndex) -> Result<BBox> {
        if self.state == TrackState::Dead {
            return Err(Error::Lifecycle(self.id.0));
        }
        Ok(self.predictor.predict(frame))
    }

    fn update(&mut self, record: &DetectionRecord) {
        self.predictor.observe(record.frame, record.bbox);
        self.frames_since_update = 0;
        self.state = TrackState::Active;
        self.last_frame = record.frame;
        self.detections.push((record.frame, record.det_id));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackEvent {
    Spawned { frame: FrameIndex, id: TrackId },
    Died { frame: FrameIndex, id: TrackId },
    Merged(MergeEvent),
}

#[derive(Debug, Clone, Default)]
pub struct StepOutput {
    pub assignments: Vec<Assignment>,
    pub events: Vec<TrackEvent>,
}

/// Per-stream tracking state. Frames must be fed in strictly increasing order;
/// skipped frame indices are processed as frames without detections.
#[derive(Debug)]
pub struct Tracker {
    config: TrackerConfig,
    tracklets: Vec<Tracklet>,
    next_id: u64,
    last_frame: Option<FrameIndex>,
    merges: MergeSet,
    merge_events: Vec<MergeEvent>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            tracklets: Vec::new(),
            next_id: 1,
            last_frame: None,
            merges: MergeSet::new(),
            merge_events: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Retained tracklets: live ones plus dead ones that may still be reconnected.
    pub fn tracklets(&self) -> &[Tracklet] {
        &self.tracklets
    }

    pub fn tracklet(&self, id: TrackId) -> Option<&Tracklet> {
        self.tracklets.iter().find(|t| t.id == id)
    }

    pub fn merges(&self) -> &MergeSet {
        &self.merges
    }

    pub fn merge_events(&self) -> &[MergeEvent] {
        &self.merge_events
    }

    pub fn step(
        &mut self,
        frame: FrameIndex,
        detections: &[DetectionRecord],
    ) -> Result<StepOutput> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::FrameRegression { frame, last });
            }
        }
        if let Some(bad) = detections.iter().find(|d| d.frame != frame) {
            return Err(Error::Config(format!(
                "detection for frame {} passed to step for frame {frame}",
                bad.frame
            )));
        }
        let mut out = StepOutput::default();
        if let Some(last) = self.last_frame {
            let mut gap = last + 1;
            while gap < frame && self.tracklets.iter().any(|t| t.state != TrackState::Dead) {
                self.advance(gap, &[], &mut out);
                gap += 1;
            }
        }
        self.advance(frame, detections, &mut out);
        Ok(out)
    }

    fn advance(&mut self, frame: FrameIndex, detections: &[DetectionRecord], out: &mut StepOutput) {
        self.last_frame = Some(frame);

        let live: Vec<usize> = (0..self.tracklets.len())
            .filter(|&i| self.tracklets[i].state != TrackState::Dead)
            .collect();
        let predictions: Vec<BBox> = live
            .iter()
            .map(|&i| self.tracklets[i].predictor.predict(frame))
            .collect();
        let boxes: Vec<BBox> = detections.iter().map(|d| d.bbox).collect();
        let costs = CostMatrix::iou(&predictions, &boxes);
        let result = gate_matches(&solve_assignment(&costs), &costs, self.config.iou_threshold);

        let mut owner: Vec<usize> = vec![usize::MAX; detections.len()];
        for &(r, c) in &result.matches {
            let t = live[r];
            self.tracklets[t].update(&detections[c]);
            owner[c] = t;
        }
        for &c in &result.unmatched_cols {
            owner[c] = self.spawn(&detections[c]);
            out.events.push(TrackEvent::Spawned {
                frame,
                id: self.tracklets[owner[c]].id,
            });
        }
        for &r in &result.unmatched_rows {
            let t = &mut self.tracklets[live[r]];
            t.frames_since_update += 1;
            if t.frames_since_update > self.config.t_max {
                t.state = TrackState::Dead;
                out.events.push(TrackEvent::Died { frame, id: t.id });
            } else {
                t.state = TrackState::Lost;
            }
        }

        let mut absorbed = vec![false; self.tracklets.len()];
        if self.config.fbtr_enabled && !detections.is_empty() {
            for (c, det) in detections.iter().enumerate() {
                self.tracklets[owner[c]]
                    .pool
                    .ingest(det, &self.config.gates);
            }
            let mut assigned = vec![false; self.tracklets.len()];
            for &t in &owner {
                assigned[t] = true;
            }
            // Tracklets with a detection in this frame, oldest first.
            let mut order: Vec<usize> = (0..detections.len()).collect();
            order.sort_by_key(|&c| self.tracklets[owner[c]].id);
            for c in order {
                let k = owner[c];
                let first_frame = self.tracklets[k].birth_frame;
                let candidates =
                    self.tracklets.iter().enumerate().filter(|(i, t)| {
                        !assigned[*i] && !absorbed[*i] && t.last_frame < first_frame
                    });
                let found = reconnect(
                    self.tracklets[k].id,
                    &self.tracklets[k].pool,
                    candidates.map(|(_, t)| (t.id, &t.pool)),
                    self.config.fbtr_threshold,
                );
                let Some(found) = found else {
                    continue;
                };
                let i = self
                    .tracklets
                    .iter()
                    .position(|t| t.id == found.pair.surviving)
                    .expect("candidate comes from the tracklet list");
                self.join(k, i);
                absorbed[k] = true;
                assigned[i] = true;
                owner[c] = i;
                let event = MergeEvent {
                    frame,
                    pair: found.pair,
                };
                self.merges.record_merge(found.pair);
                self.merge_events.push(event);
                out.events.push(TrackEvent::Merged(event));
            }
        }

        out.assignments
            .extend(detections.iter().enumerate().map(|(c, d)| Assignment {
                frame,
                det_id: d.det_id,
                bbox: d.bbox,
                track_id: self.tracklets[owner[c]].id,
            }));

        let fbtr = self.config.fbtr_enabled;
        let mut idx = 0;
        self.tracklets.retain(|t| {
            let keep = !absorbed.get(idx).copied().unwrap_or(false)
                && (t.state != TrackState::Dead || (fbtr && t.pool.enrollable_count() > 0));
            idx += 1;
            keep
        });
    }

    fn spawn(&mut self, record: &DetectionRecord) -> usize {
        let id = TrackId(self.next_id);
        self.next_id += 1;
        self.tracklets.push(Tracklet {
            id,
            state: TrackState::Active,
            predictor: self.config.new_predictor(record.frame, record.bbox),
            frames_since_update: 0,
            birth_frame: record.frame,
            last_frame: record.frame,
            detections: vec![(record.frame, record.det_id)],
            pool: TemplatePool::new(self.config.pool_cap),
        });
        self.tracklets.len() - 1
    }

    /// Folds tracklet `k` (newer, holding this frame's detection) into `i`.
    fn join(&mut self, k: usize, i: usize) {
        let (newer, older) = if k < i {
            let (a, b) = self.tracklets.split_at_mut(i);
            (&mut a[k], &mut b[0])
        } else {
            let (a, b) = self.tracklets.split_at_mut(k);
            (&mut b[0], &mut a[i])
        };
        std::mem::swap(&mut older.predictor, &mut newer.predictor);
        older.state = TrackState::Active;
        older.frames_since_update = 0;
        older.last_frame = newer.last_frame;
        older.detections.append(&mut newer.detections);
        older.pool.absorb(std::mem::take(&mut newer.pool));
        newer.state = TrackState::Dead;
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrackingOutput {
    pub log: AssignmentLog,
    pub merges: Vec<MergeEvent>,
}

/// Tracks a whole stream. When correction is enabled the returned log carries the
/// canonical (oldest) ID of every merged identity throughout.
pub fn run(stream: &[DetectionRecord], config: &TrackerConfig) -> Result<TrackingOutput> {
    run_streaming(stream, config, |_| {})
}

/// Like [`run`], handing each frame's uncorrected output to `on_frame` as soon as it
/// is produced.
pub fn run_streaming(
    stream: &[DetectionRecord],
    config: &TrackerConfig,
    mut on_frame: impl FnMut(&StepOutput),
) -> Result<TrackingOutput> {
    let mut tracker = Tracker::new(config.clone())?;
    let mut entries = Vec::with_capacity(stream.len());
    for (frame, dets) in frames(stream) {
        let step = tracker.step(frame, dets)?;
        on_frame(&step);
        entries.extend(step.assignments);
    }
    let mut log = AssignmentLog { entries };
    if config.cm_enabled {
        tracker.merges().apply_in_place(&mut log);
    }
    Ok(TrackingOutput {
        log,
        merges: tracker.merge_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Embedding;
    use crate::geometry::QualityAttrs;

    fn det(frame: u64, det_id: u32, x: f64, y: f64) -> DetectionRecord {
        DetectionRecord {
            frame,
            det_id,
            bbox: BBox::new(x, y, 50.0, 50.0).unwrap(),
            quality: QualityAttrs {
                det_confidence: 0.99,
                yaw: 0.0,
                pitch: 0.0,
                roll: 0.0,
                blur: 0.95,
            },
            embedding: None,
        }
    }

    fn with_embedding(mut d: DetectionRecord, v: &[f64], blur: f64) -> DetectionRecord {
        d.embedding = Some(Embedding::new(v.to_vec()).unwrap());
        d.quality.blur = blur;
        d
    }

    #[test]
    fn hold_last_predicts_last_box() {
        let b = BBox::new(1.0, 2.0, 3.0, 4.0).unwrap();
        let mut p = HoldLast::new(b);
        assert_eq!(p.predict(10), b);
        let b2 = BBox::new(5.0, 2.0, 3.0, 4.0).unwrap();
        p.observe(11, b2);
        assert_eq!(p.predict(20), b2);
    }

    #[test]
    fn constant_velocity_extrapolates() {
        let mut p = ConstantVelocity::new(0, BBox::from_center(0.0, 0.0, 10.0, 10.0).unwrap(), 1.0);
        assert_eq!(
            p.predict(1),
            BBox::from_center(0.0, 0.0, 10.0, 10.0).unwrap()
        );
        p.observe(1, BBox::from_center(2.0, 0.0, 10.0, 10.0).unwrap());
        // One gap frame (2) then predicting frame 2 from the last update at frame 1.
        assert_eq!(p.predict(2).center(), (4.0, 0.0));
        assert_eq!(p.predict(3).center(), (6.0, 0.0));
    }

    #[test]
    fn constant_velocity_smooths() {
        let mut p = ConstantVelocity::new(0, BBox::from_center(0.0, 0.0, 10.0, 10.0).unwrap(), 0.5);
        p.observe(1, BBox::from_center(2.0, 0.0, 10.0, 10.0).unwrap());
        p.observe(2, BBox::from_center(6.0, 0.0, 10.0, 10.0).unwrap());
        // 0.5 * 4 + 0.5 * 2
        assert_eq!(p.velocity(), (3.0, 0.0));
        // Velocity samples are normalized by the frame gap.
        p.observe(4, BBox::from_center(12.0, 0.0, 10.0, 10.0).unwrap());
        assert_eq!(p.velocity(), (3.0, 0.0));
    }

    #[test]
    fn cold_start_spawns_distinct_ids() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        let out = t
            .step(
                0,
                &[
                    det(0, 0, 0.0, 0.0),
                    det(0, 1, 200.0, 0.0),
                    det(0, 2, 400.0, 0.0),
                ],
            )
            .unwrap();
        let ids: Vec<u64> = out.assignments.iter().map(|a| a.track_id.0).collect();
        assert_eq!(ids, vec![1, 2, 3]);
    }

    #[test]
    fn matched_detection_continues_track() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.step(0, &[det(0, 0, 0.0, 0.0)]).unwrap();
        let out = t.step(1, &[det(1, 0, 1.0, 0.0)]).unwrap();
        assert_eq!(out.assignments[0].track_id, TrackId(1));
    }

    #[test]
    fn dies_after_t_max_silent_frames() {
        let t_max = 4;
        let config = TrackerConfig {
            t_max,
            ..TrackerConfig::default()
        };
        let mut t = Tracker::new(config).unwrap();
        let birth = 3;
        t.step(birth, &[det(birth, 0, 0.0, 0.0)]).unwrap();
        let mut died_at = None;
        for f in birth + 1..=birth + 10 {
            let out = t.step(f, &[]).unwrap();
            for e in out.events {
                if let TrackEvent::Died { frame, id } = e {
                    assert_eq!(id, TrackId(1));
                    died_at = Some(frame);
                }
            }
            if died_at.is_none() {
                let tr = t.tracklet(TrackId(1)).unwrap();
                assert!(tr.frames_since_update() <= t_max);
                assert_eq!(tr.state(), TrackState::Lost);
            }
        }
        assert_eq!(died_at, Some(birth + t_max as u64 + 1));
        // A detection at the old position now starts a new tracklet.
        let out = t.step(birth + 11, &[det(birth + 11, 0, 0.0, 0.0)]).unwrap();
        assert_eq!(out.assignments[0].track_id, TrackId(2));
    }

    #[test]
    fn skipped_frames_count_as_silent() {
        let config = TrackerConfig {
            t_max: 2,
            fbtr_enabled: false,
            ..TrackerConfig::default()
        };
        let mut t = Tracker::new(config.clone()).unwrap();
        t.step(0, &[det(0, 0, 0.0, 0.0)]).unwrap();
        let out = t.step(3, &[det(3, 0, 0.0, 0.0)]).unwrap();
        assert_eq!(out.assignments[0].track_id, TrackId(1));
        let out = t.step(7, &[det(7, 0, 0.0, 0.0)]).unwrap();
        assert!(out.events.contains(&TrackEvent::Died {
            frame: 6,
            id: TrackId(1)
        }));
        assert_eq!(out.assignments[0].track_id, TrackId(2));
    }

    #[test]
    fn dead_tracklet_cannot_predict() {
        let config = TrackerConfig {
            t_max: 0,
            ..TrackerConfig::default()
        };
        let mut t = Tracker::new(config).unwrap();
        let mut d = det(0, 0, 0.0, 0.0);
        d = with_embedding(d, &[1.0, 0.0], 0.95);
        t.step(0, &[d]).unwrap();
        t.step(1, &[]).unwrap();
        let tr = t.tracklet(TrackId(1)).unwrap();
        assert_eq!(tr.state(), TrackState::Dead);
        assert!(matches!(tr.predict(2), Err(Error::Lifecycle(1))));
    }

    #[test]
    fn frame_regression_rejected() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.step(5, &[]).unwrap();
        assert!(matches!(t.step(5, &[]), Err(Error::FrameRegression { .. })));
        assert!(matches!(t.step(2, &[]), Err(Error::FrameRegression { .. })));
    }

    #[test]
    fn empty_stream_gives_empty_log() {
        let out = run(&[], &TrackerConfig::default()).unwrap();
        assert!(out.log.is_empty() && out.merges.is_empty());
    }

    #[test]
    fn reconnects_after_long_gap() {
        let config = TrackerConfig {
            t_max: 2,
            ..TrackerConfig::default()
        };
        let mut stream = Vec::new();
        for f in 0..5 {
            stream.push(with_embedding(det(f, 0, 0.0, 0.0), &[1.0, 0.0, 0.0], 0.95));
        }
        // Reappears far away; two low-quality frames, then a verifiable face.
        for f in 10..12 {
            stream.push(with_embedding(det(f, 0, 500.0, 0.0), &[1.0, 0.0, 0.0], 0.3));
        }
        for f in 12..14 {
            stream.push(with_embedding(
                det(f, 0, 500.0, 0.0),
                &[0.99, 0.1, 0.0],
                0.8,
            ));
        }
        let no_cm = run(
            &stream,
            &TrackerConfig {
                cm_enabled: false,
                ..config.clone()
            },
        )
        .unwrap();
        let ids: Vec<u64> = no_cm.log.entries.iter().map(|a| a.track_id.0).collect();
        assert_eq!(ids, vec![1, 1, 1, 1, 1, 2, 2, 1, 1]);
        assert_eq!(no_cm.merges.len(), 1);
        assert_eq!(no_cm.merges[0].frame, 12);

        let with_cm = run(&stream, &config).unwrap();
        assert_eq!(with_cm.log.track_ids(), vec![TrackId(1)]);
    }

    #[test]
    fn no_reconnection_without_enrollable_faces() {
        let config = TrackerConfig {
            t_max: 2,
            ..TrackerConfig::default()
        };
        let mut stream = Vec::new();
        for f in 0..5 {
            stream.push(with_embedding(det(f, 0, 0.0, 0.0), &[1.0, 0.0], 0.8));
        }
        for f in 10..14 {
            stream.push(with_embedding(det(f, 0, 500.0, 0.0), &[1.0, 0.0], 0.8));
        }
        let out = run(&stream, &config).unwrap();
        assert_eq!(out.log.track_ids(), vec![TrackId(1), TrackId(2)]);
    }

    #[test]
    fn concurrent_tracklets_are_not_candidates() {
        // Two detections of the same face in one frame: neither can absorb the other.
        let config = TrackerConfig::default();
        let a = with_embedding(det(0, 0, 0.0, 0.0), &[1.0, 0.0], 0.95);
        let b = with_embedding(det(0, 1, 300.0, 0.0), &[1.0, 0.0], 0.95);
        let out = run(&[a, b], &config).unwrap();
        assert_eq!(out.log.track_ids().len(), 2);
        assert!(out.merges.is_empty());
    }

    #[test]
    fn output_ignores_embeddings_without_fbtr() {
        let config = TrackerConfig {
            fbtr_enabled: false,
            cm_enabled: false,
            t_max: 1,
            ..TrackerConfig::default()
        };
        let mut plain = Vec::new();
        for f in 0..6 {
            plain.push(det(f, 0, f as f64 * 3.0, 0.0));
            plain.push(det(f, 1, 300.0 - f as f64 * 3.0, 10.0));
        }
        let decorated: Vec<_> = plain
            .iter()
            .cloned()
            .map(|d| with_embedding(d, &[0.3, 0.1], 0.1))
            .collect();
        assert_eq!(
            run(&plain, &config).unwrap().log,
            run(&decorated, &config).unwrap().log
        );
    }

    #[test]
    fn config_validation() {
        assert!(TrackerConfig::default().validate().is_ok());
        let bad = TrackerConfig {
            iou_threshold: 1.5,
            ..TrackerConfig::default()
        };
        assert!(Tracker::new(bad).is_err());
        let bad = TrackerConfig {
            fbtr_threshold: 2.0,
            ..TrackerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrackerConfig {
            pool_cap: 0,
            ..TrackerConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ablation_presets() {
        let base = TrackerConfig::default();
        let da = Ablation::Da.config(&base);
        assert_eq!((da.predictor, da.t_max), (PredictorKind::HoldLast, 0));
        assert!(!da.fbtr_enabled && !da.cm_enabled);
        let full = Ablation::DaTmFbtrCm.config(&base);
        assert_eq!(full.predictor, PredictorKind::ConstantVelocity);
        assert!(full.fbtr_enabled && full.cm_enabled);
        assert_eq!(
            Ablation::ALL.map(|a| a.label()).join(" "),
            "DA DA+FBTR DA+TM DA+TM+FBTR DA+TM+FBTR+CM"
        );
    }
}
