//! Face-based tracklet reconnection: quality gating, per-tracklet template pools and
//! the similarity test that joins a fresh tracklet to an earlier one.

use std::cell::OnceCell;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::correction::MergePair;
use crate::embedding::{mean_embedding, similarity, Embedding};
use crate::error::{Error, Result};
use crate::geometry::QualityAttrs;
use crate::ingest::{DetectionRecord, TrackId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QualityClass {
    Enrollable,
    Verifiable,
    Discarded,
}

/// Lower threshold that is either exclusive (`Above`) or inclusive (`AtLeast`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBound {
    Above(f64),
    AtLeast(f64),
}

impl LowerBound {
    pub fn admits(&self, v: f64) -> bool {
        match *self {
            LowerBound::Above(t) => v > t,
            LowerBound::AtLeast(t) => v >= t,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            LowerBound::Above(t) | LowerBound::AtLeast(t) => t,
        }
    }

    /// True when every value admitted by `self` is admitted by `other`.
    fn at_least_as_strict_as(&self, other: &LowerBound) -> bool {
        match (self, other) {
            (LowerBound::AtLeast(a), LowerBound::Above(b)) => a > b,
            _ => self.value() >= other.value(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub min_confidence: LowerBound,
    /// Bound on |yaw|, |pitch| and |roll|, inclusive.
    pub max_abs_angle: f64,
    pub min_blur: LowerBound,
}

impl Gate {
    pub fn admits(&self, q: &QualityAttrs) -> bool {
        self.min_confidence.admits(q.det_confidence)
            && q.max_abs_angle() <= self.max_abs_angle
            && self.min_blur.admits(q.blur)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityGates {
    pub enroll: Gate,
    pub verify: Gate,
}

impl Default for QualityGates {
    fn default() -> Self {
        Self {
            enroll: Gate {
                min_confidence: LowerBound::Above(0.95),
                max_abs_angle: 25.0,
                min_blur: LowerBound::Above(0.9),
            },
            verify: Gate {
                min_confidence: LowerBound::Above(0.8),
                max_abs_angle: 60.0,
                // Open-ended above so that enrollable faces are also verifiable.
                min_blur: LowerBound::AtLeast(0.75),
            },
        }
    }
}

impl QualityGates {
    pub fn validate(&self) -> Result<()> {
        let e = &self.enroll;
        let v = &self.verify;
        if !e.min_confidence.at_least_as_strict_as(&v.min_confidence)
            || !e.min_blur.at_least_as_strict_as(&v.min_blur)
            || e.max_abs_angle > v.max_abs_angle
        {
            return Err(Error::Config(
                "enrollment gates must be at least as strict as verification gates".into(),
            ));
        }
        for g in [e, v] {
            if !(g.max_abs_angle.is_finite() && g.max_abs_angle >= 0.0) {
                return Err(Error::Config("angle bound must be non-negative".into()));
            }
        }
        Ok(())
    }
}

pub fn classify(quality: &QualityAttrs, gates: &QualityGates) -> QualityClass {
    if gates.enroll.admits(quality) {
        QualityClass::Enrollable
    } else if gates.verify.admits(quality) {
        QualityClass::Verifiable
    } else {
        QualityClass::Discarded
    }
}

pub const DEFAULT_POOL_CAP: usize = 64;

/// Enrollable and verifiable templates of one tracklet. Enrollable templates are
/// also stored as verifiable. Each pool keeps at most `cap` entries, dropping the
/// oldest first. Means are cached until the next insertion.
#[derive(Debug, Clone)]
pub struct TemplatePool {
    cap: usize,
    enrollables: VecDeque<Embedding>,
    verifiables: VecDeque<Embedding>,
    enroll_mean: OnceCell<Option<Embedding>>,
    verify_mean: OnceCell<Option<Embedding>>,
}

impl Default for TemplatePool {
    fn default() -> Self {
        Self::new(DEFAULT_POOL_CAP)
    }
}

impl TemplatePool {
    pub fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            enrollables: VecDeque::new(),
            verifiables: VecDeque::new(),
            enroll_mean: OnceCell::new(),
            verify_mean: OnceCell::new(),
        }
    }

    pub fn enrollable_count(&self) -> usize {
        self.enrollables.len()
    }

    pub fn verifiable_count(&self) -> usize {
        self.verifiables.len()
    }

    pub fn insert(&mut self, class: QualityClass, template: Embedding) {
        match class {
            QualityClass::Discarded => {}
            QualityClass::Enrollable => {
                push_capped(&mut self.enrollables, template.clone(), self.cap);
                push_capped(&mut self.verifiables, template, self.cap);
                self.enroll_mean.take();
                self.verify_mean.take();
            }
            QualityClass::Verifiable => {
                push_capped(&mut self.verifiables, template, self.cap);
                self.verify_mean.take();
            }
        }
    }

    /// Classifies the detection and stores its template accordingly. A detection
    /// without an embedding (or with a zero one) counts as discarded.
    pub fn ingest(&mut self, record: &DetectionRecord, gates: &QualityGates) -> QualityClass {
        let Some(template) = record.embedding.as_ref().and_then(|e| e.normalized().ok()) else {
            return QualityClass::Discarded;
        };
        let class = classify(&record.quality, gates);
        self.insert(class, template);
        class
    }

    /// Mean enrollable template; `None` while no enrollable face has been seen.
    pub fn enrollable_mean(&self) -> Option<&Embedding> {
        self.enroll_mean
            .get_or_init(|| mean_embedding(&self.enrollables).ok())
            .as_ref()
    }

    pub fn verifiable_mean(&self) -> Option<&Embedding> {
        self.verify_mean
            .get_or_init(|| mean_embedding(&self.verifiables).ok())
            .as_ref()
    }

    /// Appends `newer` after this pool's templates, then re-applies the cap.
    pub fn absorb(&mut self, newer: TemplatePool) {
        for t in newer.enrollables {
            push_capped(&mut self.enrollables, t, self.cap);
        }
        for t in newer.verifiables {
            push_capped(&mut self.verifiables, t, self.cap);
        }
        self.enroll_mean.take();
        self.verify_mean.take();
    }
}

fn push_capped(pool: &mut VecDeque<Embedding>, t: Embedding, cap: usize) {
    if pool.len() == cap {
        pool.pop_front();
    }
    pool.push_back(t);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconnection {
    pub pair: MergePair,
    pub similarity: f64,
}

/// Picks the candidate whose mean enrollable template is most similar to the query's
/// mean verifiable template, provided the score reaches `threshold`. Ties go to the
/// lower track ID. Candidates without enrollable templates, and the query itself,
/// are skipped.
pub fn reconnect<'a, I>(
    query_id: TrackId,
    query: &TemplatePool,
    candidates: I,
    threshold: f64,
) -> Option<Reconnection>
where
    I: IntoIterator<Item = (TrackId, &'a TemplatePool)>,
{
    let probe = query.verifiable_mean()?;
    let mut best: Option<(TrackId, f64)> = None;
    for (id, pool) in candidates {
        if id == query_id {
            continue;
        }
        let Some(reference) = pool.enrollable_mean() else {
            continue;
        };
        let Ok(score) = similarity(reference, probe) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((best_id, best_score)) => {
                score > best_score || (score == best_score && id < best_id)
            }
        };
        if better {
            best = Some((id, score));
        }
    }
    best.filter(|&(_, score)| score >= threshold)
        .map(|(surviving, score)| Reconnection {
            pair: MergePair {
                absorbed: query_id,
                surviving,
            },
            similarity: score,
        })
}
