//! From raw fixation records to ordered AOI sequences and transitions.
//!
//! Merging works at object granularity and happens before AOI mapping, so two
//! consecutive dwells on different objects of the same AOI still yield an AOI
//! self-transition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AoiMap, FixationRecord, Role, StageAnnotation};

/// Default maximum gap (ms) between same-object fixations that still fuse.
pub const DEFAULT_MERGE_GAP_MS: u64 = 300;

/// Identifies one participant's gaze stream within one session.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParticipantKey {
    pub session_id: String,
    pub participant_id: String,
    pub role: Role,
}

impl ParticipantKey {
    pub fn of(record: &FixationRecord) -> Self {
        ParticipantKey {
            session_id: record.session_id.clone(),
            participant_id: record.participant_id.clone(),
            role: record.role,
        }
    }
}

/// A dwell on one object, possibly fused from several raw fixations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectFixation {
    pub object_id: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub merged_count: usize,
}

/// A merged dwell after AOI mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedFixation {
    pub aoi: String,
    pub object_id: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub merged_count: usize,
}

/// Time-ordered AOI dwells for one participant, optionally within one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AoiSequence {
    pub key: ParticipantKey,
    pub stage_label: Option<String>,
    pub fixations: Vec<MergedFixation>,
}

impl AoiSequence {
    pub fn new(key: ParticipantKey) -> Self {
        AoiSequence {
            key,
            stage_label: None,
            fixations: Vec::new(),
        }
    }

    /// Builds a bare sequence from AOI labels, with synthetic timings.
    pub fn from_labels<S: AsRef<str>>(key: ParticipantKey, labels: &[S]) -> Self {
        let fixations = labels
            .iter()
            .enumerate()
            .map(|(i, l)| MergedFixation {
                aoi: l.as_ref().to_string(),
                object_id: l.as_ref().to_string(),
                start_ms: i as u64 * 1000,
                end_ms: i as u64 * 1000 + 500,
                merged_count: 1,
            })
            .collect();
        AoiSequence {
            key,
            stage_label: None,
            fixations,
        }
    }

    pub fn len(&self) -> usize {
        self.fixations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixations.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.fixations.iter().map(|f| f.aoi.as_str())
    }
}

/// Directed move of gaze between consecutive dwells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from_aoi: String,
    pub to_aoi: String,
}

/// Stable-sorts records by onset so they can be merged.
pub fn sort_by_start(records: &mut [FixationRecord]) {
    records.sort_by_key(|r| r.start_ms);
}

/// Splits a log into per-participant streams, each kept in onset order.
pub fn partition_by_participant(
    records: &[FixationRecord],
) -> BTreeMap<ParticipantKey, Vec<FixationRecord>> {
    let mut parts: BTreeMap<ParticipantKey, Vec<FixationRecord>> = BTreeMap::new();
    for r in records {
        parts
            .entry(ParticipantKey::of(r))
            .or_default()
            .push(r.clone());
    }
    for recs in parts.values_mut() {
        sort_by_start(recs);
    }
    parts
}

fn fuse(out: &mut Vec<ObjectFixation>, next: ObjectFixation, gap_ms: u64) {
    if let Some(last) = out.last_mut() {
        if last.object_id == next.object_id && next.start_ms <= last.end_ms.saturating_add(gap_ms) {
            last.end_ms = last.end_ms.max(next.end_ms);
            last.merged_count += next.merged_count;
            return;
        }
    }
    out.push(next);
}

/// Fuses consecutive same-object fixations whose gap
/// (`next.start_ms - prev.end_ms`) is at most `gap_ms`.
///
/// Saccades are skipped but do not block fusion; only elapsed time matters.
/// Input must belong to one participant and be sorted by `start_ms`.
pub fn merge_fixations(records: &[FixationRecord], gap_ms: u64) -> Result<Vec<ObjectFixation>> {
    if let Some(first) = records.first() {
        for (index, pair) in records.windows(2).enumerate() {
            if pair[1].start_ms < pair[0].start_ms {
                return Err(Error::Unsorted { index: index + 1 });
            }
        }
        if records
            .iter()
            .any(|r| r.participant_id != first.participant_id || r.session_id != first.session_id)
        {
            return Err(Error::MixedParticipants);
        }
    }
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.is_fixation()) {
        let next = ObjectFixation {
            object_id: r.object_id.clone(),
            start_ms: r.start_ms,
            end_ms: r.end_ms,
            merged_count: 1,
        };
        fuse(&mut out, next, gap_ms);
    }
    Ok(out)
}

/// Applies the fusion rule to already merged dwells; a fixed point for
/// the output of [`merge_fixations`] with the same gap.
pub fn remerge(fixations: &[ObjectFixation], gap_ms: u64) -> Result<Vec<ObjectFixation>> {
    for (index, pair) in fixations.windows(2).enumerate() {
        if pair[1].start_ms < pair[0].start_ms {
            return Err(Error::Unsorted { index: index + 1 });
        }
    }
    let mut out = Vec::with_capacity(fixations.len());
    for f in fixations {
        fuse(&mut out, f.clone(), gap_ms);
    }
    Ok(out)
}

/// Result of AOI mapping: the sequence plus how many dwells had no AOI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceBuild {
    pub sequence: AoiSequence,
    pub dropped: usize,
}

/// Maps merged dwells to AOI labels, dropping objects absent from `map`.
pub fn build_aoi_sequence(
    key: ParticipantKey,
    merged: &[ObjectFixation],
    map: &AoiMap,
) -> SequenceBuild {
    let mut sequence = AoiSequence::new(key);
    let mut dropped = 0;
    for f in merged {
        match map.label_of(&f.object_id) {
            Some(aoi) => sequence.fixations.push(MergedFixation {
                aoi: aoi.to_string(),
                object_id: f.object_id.clone(),
                start_ms: f.start_ms,
                end_ms: f.end_ms,
                merged_count: f.merged_count,
            }),
            None => dropped += 1,
        }
    }
    SequenceBuild { sequence, dropped }
}

/// Splits a sequence into one sequence per stage of its session.
///
/// A dwell belongs to the stage whose `[start_ms, end_ms)` window holds its
/// onset; dwells outside every window are discarded. With no stages at all
/// the sequence is returned unchanged.
pub fn segment_by_stage(seq: &AoiSequence, stages: &[StageAnnotation]) -> Vec<AoiSequence> {
    if stages.is_empty() {
        return vec![seq.clone()];
    }
    let mut session_stages: Vec<&StageAnnotation> = stages
        .iter()
        .filter(|s| s.session_id == seq.key.session_id)
        .collect();
    session_stages.sort_by_key(|s| s.start_ms);
    session_stages
        .into_iter()
        .map(|stage| AoiSequence {
            key: seq.key.clone(),
            stage_label: Some(stage.stage_label.clone()),
            fixations: seq
                .fixations
                .iter()
                .filter(|f| stage.contains(f.start_ms))
                .cloned()
                .collect(),
        })
        .collect()
}

/// Consecutive AOI pairs of a sequence, in order.
pub fn extract_transitions(seq: &AoiSequence) -> Vec<Transition> {
    seq.fixations
        .windows(2)
        .map(|w| Transition {
            from_aoi: w[0].aoi.clone(),
            to_aoi: w[1].aoi.clone(),
        })
        .collect()
}
