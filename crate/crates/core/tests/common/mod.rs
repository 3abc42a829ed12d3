//! Brute-force reference implementations shared by the integration tests.
//! Written directly from the formulas on plain strings and hash maps, with
//! no code shared with the library.

#![allow(dead_code)]

use std::collections::HashMap;

use gaze_tna::ingest::{FixationKind, FixationRecord, Role};
use rand::rngs::StdRng;
use rand::Rng;

pub struct OracleMetrics {
    pub p: Vec<Vec<f64>>,
    pub entropy: Option<f64>,
    pub self_loop: f64,
    pub cross_scan: f64,
}

/// P_ij = (C_ij + a) / (sum_k C_ik + K a) for rows with transitions,
/// entropy over the off-diagonal part of each such row, and the
/// fixation-weighted mean of the diagonal.
pub fn oracle_metrics(
    labels: &[&str],
    order: &[&str],
    alpha: f64,
    renormalize: bool,
) -> OracleMetrics {
    let k = order.len();
    let mut pair_counts: HashMap<(&str, &str), u64> = HashMap::new();
    for w in labels.windows(2) {
        *pair_counts.entry((w[0], w[1])).or_insert(0) += 1;
    }
    let mut visits: HashMap<&str, u64> = HashMap::new();
    for l in labels {
        *visits.entry(l).or_insert(0) += 1;
    }

    let mut p = vec![vec![0.0; k]; k];
    let mut supported = vec![false; k];
    for (i, from) in order.iter().enumerate() {
        let row_total: u64 = order
            .iter()
            .map(|to| pair_counts.get(&(*from, *to)).copied().unwrap_or(0))
            .sum();
        if row_total == 0 {
            continue;
        }
        supported[i] = true;
        for (j, to) in order.iter().enumerate() {
            let c = pair_counts.get(&(*from, *to)).copied().unwrap_or(0) as f64;
            p[i][j] = (c + alpha) / (row_total as f64 + k as f64 * alpha);
        }
    }

    let mut row_entropies = Vec::new();
    for i in 0..k {
        if !supported[i] {
            continue;
        }
        let off_mass: f64 = (0..k).filter(|&j| j != i).map(|j| p[i][j]).sum();
        let mut h = 0.0;
        for (j, &pij) in p[i].iter().enumerate() {
            if j == i || pij <= 0.0 {
                continue;
            }
            let q = if renormalize { pij / off_mass } else { pij };
            h -= q * q.log2();
        }
        row_entropies.push(h);
    }
    let entropy = if row_entropies.is_empty() {
        None
    } else {
        Some(row_entropies.iter().sum::<f64>() / row_entropies.len() as f64)
    };

    let n = labels.len() as f64;
    let self_loop: f64 = order
        .iter()
        .enumerate()
        .map(|(i, l)| visits.get(l).copied().unwrap_or(0) as f64 / n * p[i][i])
        .sum();
    OracleMetrics {
        p,
        entropy,
        self_loop,
        cross_scan: 1.0 - self_loop,
    }
}

pub const LETTERS: [&str; 7] = ["A", "B", "C", "D", "E", "F", "G"];

/// A random label sequence over the first `k` letters.
pub fn random_labels(rng: &mut StdRng, k: usize, len: usize) -> Vec<&'static str> {
    (0..len).map(|_| LETTERS[rng.random_range(0..k)]).collect()
}

pub fn fixation(participant: &str, start_ms: u64, end_ms: u64, object: &str) -> FixationRecord {
    FixationRecord {
        session_id: "s1".into(),
        participant_id: participant.into(),
        role: Role::Cpr,
        start_ms,
        end_ms,
        object_id: object.into(),
        kind: FixationKind::Fixation,
    }
}

pub fn saccade(participant: &str, start_ms: u64, end_ms: u64) -> FixationRecord {
    FixationRecord {
        kind: FixationKind::Saccade,
        object_id: String::new(),
        ..fixation(participant, start_ms, end_ms, "")
    }
}

/// Merged dwell as `(object, start, end, merged_count)`.
pub type Dwell = (String, u64, u64, usize);

/// Reference merge: walk the fixations, opening a new dwell whenever the
/// object changes or the pause since the current dwell ended exceeds `gap`.
pub fn oracle_merge(records: &[FixationRecord], gap: u64) -> Vec<Dwell> {
    let mut dwells: Vec<Dwell> = Vec::new();
    for r in records.iter().filter(|r| r.kind == FixationKind::Fixation) {
        let extend = match dwells.last() {
            Some((obj, _, end, _)) => {
                let pause = r.start_ms as i128 - *end as i128;
                *obj == r.object_id && pause <= gap as i128
            }
            None => false,
        };
        if extend {
            let last = dwells.last_mut().unwrap();
            last.2 = last.2.max(r.end_ms);
            last.3 += 1;
        } else {
            dwells.push((r.object_id.clone(), r.start_ms, r.end_ms, 1));
        }
    }
    dwells
}

/// Sorted random log for one participant over objects `o0..o{objects}`,
/// including some saccades, with gaps straddling the 300 ms threshold.
pub fn random_log(rng: &mut StdRng, len: usize, objects: usize) -> Vec<FixationRecord> {
    let mut t = 0u64;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let dwell = rng.random_range(50..400);
        let gap = *[0u64, 1, 150, 299, 300, 301, 302, 450]
            .get(rng.random_range(0..8))
            .unwrap();
        if rng.random_bool(0.15) {
            out.push(saccade("p1", t, t + 20));
            t += 20;
        }
        let obj = format!("o{}", rng.random_range(0..objects));
        out.push(fixation("p1", t, t + dwell, &obj));
        t += dwell + gap;
    }
    out
}
