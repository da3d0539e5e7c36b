//! Retroactive identity correction. Merges reported by reconnection are kept in a
//! union-find keyed by track ID whose representative is the lowest ID of each class;
//! rewriting a log replaces every track ID by its representative.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AssignmentLog, FrameIndex, TrackId};

/// `absorbed` (the newer tracklet) was identified as `surviving`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MergePair {
    pub absorbed: TrackId,
    pub surviving: TrackId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub frame: FrameIndex,
    pub pair: MergePair,
}

#[derive(Debug, Clone, Default)]
pub struct MergeSet {
    parent: HashMap<TrackId, TrackId>,
}

impl MergeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a MergeEvent>) -> Self {
        let mut set = Self::new();
        for e in events {
            set.record_merge(e.pair);
        }
        set
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn record_merge(&mut self, pair: MergePair) {
        let a = self.find(pair.absorbed);
        let b = self.find(pair.surviving);
        if a == b {
            return;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.parent.insert(hi, lo);
    }

    /// Representative of `id`'s class, compressing the path on the way.
    pub fn find(&mut self, id: TrackId) -> TrackId {
        let root = self.canonical(id);
        let mut cur = id;
        while let Some(&next) = self.parent.get(&cur) {
            if next == root {
                break;
            }
            self.parent.insert(cur, root);
            cur = next;
        }
        root
    }

    /// Representative of `id`'s class without mutating the set.
    pub fn canonical(&self, id: TrackId) -> TrackId {
        let mut cur = id;
        while let Some(&next) = self.parent.get(&cur) {
            cur = next;
        }
        cur
    }

    /// Copy of `log` with every track ID replaced by its representative.
    pub fn apply(&self, log: &AssignmentLog) -> AssignmentLog {
        let mut out = log.clone();
        self.apply_in_place(&mut out);
        out
    }

    pub fn apply_in_place(&self, log: &mut AssignmentLog) {
        if self.parent.is_empty() {
            return;
        }
        let mut memo: HashMap<TrackId, TrackId> = HashMap::new();
        for a in &mut log.entries {
            a.track_id = *memo
                .entry(a.track_id)
                .or_insert_with(|| self.canonical(a.track_id));
        }
    }
}

pub const MERGE_EVENT_HEADER: &str = "frame,absorbed_id,surviving_id";

pub fn write_merge_events<W: Write>(events: &[MergeEvent], mut sink: W) -> Result<()> {
    writeln!(sink, "{MERGE_EVENT_HEADER}")?;
    for e in events {
        writeln!(sink, "{},{},{}", e.frame, e.pair.absorbed, e.pair.surviving)?;
    }
    sink.flush()?;
    Ok(())
}

pub fn parse_merge_events<R: Read>(source: R) -> Result<Vec<MergeEvent>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        if i == 0 && rec.get(0) == Some("frame") {
            continue;
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let nums = rec
            .iter()
            .map(|f| f.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        let [frame, absorbed, surviving] = nums[..] else {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", nums.len()),
            });
        };
        out.push(MergeEvent {
            frame,
            pair: MergePair {
                absorbed: TrackId(absorbed),
                surviving: TrackId(surviving),
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::ingest::Assignment;
    use proptest::prelude::*;

    fn pair(a: u64, s: u64) -> MergePair {
        MergePair {
            absorbed: TrackId(a),
            surviving: TrackId(s),
        }
    }

    #[test]
    fn canonical_examples() {
        let mut set = MergeSet::new();
        assert_eq!(set.canonical(TrackId(7)), TrackId(7));
        set.record_merge(pair(4, 3));
        assert_eq!(set.find(TrackId(4)), TrackId(3));
        set.record_merge(pair(5, 4));
        assert_eq!(set.find(TrackId(5)), TrackId(3));
        // Re-merging is a no-op.
        set.record_merge(pair(5, 3));
        assert_eq!(set.canonical(TrackId(5)), TrackId(3));
    }

    #[test]
    fn representative_is_minimum_regardless_of_direction() {
        let mut set = MergeSet::new();
        set.record_merge(pair(2, 9));
        assert_eq!(set.canonical(TrackId(9)), TrackId(2));
    }

    fn log_of(ids: &[(u64, u64)]) -> AssignmentLog {
        AssignmentLog::new(
            ids.iter()
                .map(|&(frame, track)| Assignment {
                    frame,
                    det_id: 0,
                    bbox: BBox::new(frame as f64, 0.0, 10.0, 10.0).unwrap(),
                    track_id: TrackId(track),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_set_leaves_log() {
        let log = log_of(&[(0, 1), (1, 2)]);
        assert_eq!(MergeSet::new().apply(&log), log);
    }

    #[test]
    fn rewrites_absorbed_tracklet() {
        // Tracklet 4 starts after 3 is lost; identification at frame 6.
        let log = log_of(&[(0, 3), (1, 3), (4, 4), (5, 4), (6, 3), (7, 3)]);
        let set = MergeSet::from_events(&[MergeEvent {
            frame: 6,
            pair: pair(4, 3),
        }]);
        let out = set.apply(&log);
        assert!(out.entries.iter().all(|a| a.track_id == TrackId(3)));
    }

    #[test]
    fn chained_merges_leave_one_id() {
        let log = log_of(&[(0, 1), (1, 1), (5, 2), (6, 2), (10, 3), (11, 3)]);
        let mut set = MergeSet::new();
        set.record_merge(pair(2, 1));
        set.record_merge(pair(3, 2));
        assert_eq!(set.apply(&log).track_ids(), vec![TrackId(1)]);
    }

    #[test]
    fn merge_events_round_trip() {
        let events = vec![
            MergeEvent {
                frame: 6,
                pair: pair(4, 3),
            },
            MergeEvent {
                frame: 12,
                pair: pair(7, 1),
            },
        ];
        let mut out = Vec::new();
        write_merge_events(&events, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out.clone()).unwrap(),
            "frame,absorbed_id,surviving_id\n6,4,3\n12,7,1\n"
        );
        assert_eq!(parse_merge_events(out.as_slice()).unwrap(), events);
    }

    proptest! {
        #[test]
        fn apply_is_idempotent_and_shape_preserving(
            tracks in prop::collection::vec(1u64..12, 0..60),
            merges in prop::collection::vec((1u64..12, 1u64..12), 0..10),
        ) {
            let log = log_of(&tracks.iter().enumerate().map(|(f, &t)| (f as u64, t)).collect::<Vec<_>>());
            let mut set = MergeSet::new();
            let mut history = Vec::new();
            for (a, b) in merges {
                set.record_merge(pair(a, b));
                // Canonical IDs never increase as merges accumulate.
                for t in 1..12 {
                    let c = set.canonical(TrackId(t));
                    prop_assert!(c <= TrackId(t));
                    prop_assert_eq!(set.canonical(c), c);
                    if let Some(&(_, prev)) = history.iter().rev().find(|(id, _)| *id == t) {
                        prop_assert!(c <= prev);
                    }
                    history.push((t, c));
                }
            }
            let once = set.apply(&log);
            prop_assert_eq!(set.apply(&once), once.clone());
            prop_assert_eq!(once.len(), log.len());
            for (a, b) in once.entries.iter().zip(&log.entries) {
                prop_assert_eq!((a.frame, a.det_id, a.bbox), (b.frame, b.det_id, b.bbox));
            }
        }
    }
}
