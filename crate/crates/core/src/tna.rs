//! Transition counts, smoothed transition matrices and the network metrics
//! derived from them (transition entropy, self-loop and cross-scan rates).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{extract_transitions, AoiSequence, Transition};

/// Laplace pseudo-count applied to non-empty rows by default.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Raw transition tallies over a fixed AOI order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    aoi_order: Vec<String>,
    /// Row-major `K x K`; entry `(i, j)` counts `i -> j` transitions.
    counts: Vec<u64>,
    fixation_totals: Vec<u64>,
}

impl TransitionCounts {
    pub fn zeros(aoi_order: &[String]) -> Self {
        let k = aoi_order.len();
        TransitionCounts {
            aoi_order: aoi_order.to_vec(),
            counts: vec![0; k * k],
            fixation_totals: vec![0; k],
        }
    }

    pub fn aoi_order(&self) -> &[String] {
        &self.aoi_order
    }

    pub fn k(&self) -> usize {
        self.aoi_order.len()
    }

    pub fn count(&self, from: usize, to: usize) -> u64 {
        self.counts[from * self.k() + to]
    }

    pub fn row(&self, from: usize) -> &[u64] {
        let k = self.k();
        &self.counts[from * k..(from + 1) * k]
    }

    pub fn row_total(&self, from: usize) -> u64 {
        self.row(from).iter().sum()
    }

    pub fn fixation_totals(&self) -> &[u64] {
        &self.fixation_totals
    }

    pub fn total_transitions(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total_fixations(&self) -> u64 {
        self.fixation_totals.iter().sum()
    }

    /// Adds another tally over the same AOI order (pooling participants).
    pub fn add(&mut self, other: &TransitionCounts) -> Result<()> {
        if self.aoi_order != other.aoi_order {
            return Err(Error::Config(
                "cannot pool counts over different AOI orders".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.fixation_totals.iter_mut().zip(&other.fixation_totals) {
            *a += b;
        }
        Ok(())
    }
}

fn order_index(order: &[String]) -> HashMap<&str, usize> {
    order
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect()
}

/// Tabulates transitions and per-AOI dwell totals.
pub fn count_transitions(
    transitions: &[Transition],
    fixations: &AoiSequence,
    order: &[String],
) -> Result<TransitionCounts> {
    let index = order_index(order);
    let lookup = |label: &str| {
        index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownAoi(label.to_string()))
    };
    let mut c = TransitionCounts::zeros(order);
    let k = c.k();
    for t in transitions {
        let (i, j) = (lookup(&t.from_aoi)?, lookup(&t.to_aoi)?);
        c.counts[i * k + j] += 1;
    }
    for label in fixations.labels() {
        c.fixation_totals[lookup(label)?] += 1;
    }
    Ok(c)
}

/// Counts for a single sequence: its transitions and its dwells.
pub fn count_sequence(seq: &AoiSequence, order: &[String]) -> Result<TransitionCounts> {
    count_transitions(&extract_transitions(seq), seq, order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    alpha: f64,
    smooth_empty_rows: bool,
}

impl SmoothingConfig {
    pub fn new(alpha: f64, smooth_empty_rows: bool) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::Config(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(SmoothingConfig {
            alpha,
            smooth_empty_rows,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn smooth_empty_rows(&self) -> bool {
        self.smooth_empty_rows
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            alpha: DEFAULT_ALPHA,
            smooth_empty_rows: false,
        }
    }
}

/// Row-stochastic transition probabilities. Rows without outgoing
/// transitions stay all-zero unless empty-row smoothing was requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    aoi_order: Vec<String>,
    probs: Vec<f64>,
    row_support: Vec<u64>,
    alpha: f64,
}

impl TransitionMatrix {
    pub fn aoi_order(&self) -> &[String] {
        &self.aoi_order
    }

    pub fn k(&self) -> usize {
        self.aoi_order.len()
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[from * self.k() + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let k = self.k();
        &self.probs[from * k..(from + 1) * k]
    }

    /// Raw outgoing-transition totals per row.
    pub fn row_support(&self) -> &[u64] {
        &self.row_support
    }

    pub fn has_support(&self, row: usize) -> bool {
        self.row_support[row] > 0
    }

    /// Pseudo-count the matrix was smoothed with.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `P[i][j] = (C[i][j] + alpha) / (sum_k C[i][k] + K * alpha)` for every
/// non-empty row.
pub fn smooth_and_normalize(c: &TransitionCounts, cfg: SmoothingConfig) -> TransitionMatrix {
    let k = c.k();
    let alpha = cfg.alpha;
    let mut probs = vec![0.0; k * k];
    let mut row_support = Vec::with_capacity(k);
    for i in 0..k {
        let support = c.row_total(i);
        row_support.push(support);
        if support == 0 && !cfg.smooth_empty_rows {
            continue;
        }
        let denom = support as f64 + k as f64 * alpha;
        if denom == 0.0 {
            continue;
        }
        for (j, &n) in c.row(i).iter().enumerate() {
            probs[i * k + j] = (n as f64 + alpha) / denom;
        }
    }
    TransitionMatrix {
        aoi_order: c.aoi_order.clone(),
        probs,
        row_support,
        alpha,
    }
}

/// Per-row transition entropy in bits, self-transitions excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// `None` for rows without outgoing transitions.
    pub per_aoi: Vec<Option<f64>>,
    /// Mean over rows that have outgoing transitions.
    pub mean: Option<f64>,
    pub rows_used: usize,
}

fn shannon_bits<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    let h: f64 = probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum();
    if h == 0.0 {
        0.0
    } else {
        -h
    }
}

/// Off-diagonal row entropies. With `renormalize`, each row's off-diagonal
/// slice is rescaled to sum to one first; a row with no off-diagonal mass
/// has entropy zero.
pub fn entropy(p: &TransitionMatrix, renormalize: bool) -> EntropyReport {
    let k = p.k();
    let per_aoi: Vec<Option<f64>> = (0..k)
        .map(|i| {
            if !p.has_support(i) {
                return None;
            }
            let row = p.row(i);
            let off = || {
                row.iter()
                    .enumerate()
                    .filter(move |&(j, _)| j != i)
                    .map(|(_, &v)| v)
            };
            let h = if renormalize {
                let mass: f64 = off().sum();
                if mass > 0.0 {
                    shannon_bits(off().map(|v| v / mass))
                } else {
                    0.0
                }
            } else {
                shannon_bits(off())
            };
            Some(h)
        })
        .collect();
    let used: Vec<f64> = per_aoi.iter().flatten().copied().collect();
    let mean = if used.is_empty() {
        None
    } else {
        Some(used.iter().sum::<f64>() / used.len() as f64)
    };
    EntropyReport {
        per_aoi,
        mean,
        rows_used: used.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfLoop {
    pub self_loop: f64,
    pub cross_scan: f64,
    /// Share of all merged fixations landing on each AOI.
    pub weights: Vec<f64>,
}

/// Fixation-weighted mean of the diagonal, `sum_i w_i * P[i][i]`.
pub fn self_loop_rate(p: &TransitionMatrix, c: &TransitionCounts) -> Result<SelfLoop> {
    let total = c.total_fixations();
    if total == 0 {
        return Err(Error::EmptySequence);
    }
    let weights: Vec<f64> = c
        .fixation_totals()
        .iter()
        .map(|&n| n as f64 / total as f64)
        .collect();
    let self_loop: f64 = (0..p.k())
        .filter(|&i| p.has_support(i))
        .map(|i| weights[i] * p.prob(i, i))
        .sum();
    Ok(SelfLoop {
        self_loop,
        cross_scan: 1.0 - self_loop,
        weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub smoothing: SmoothingConfig,
    pub entropy_renormalize: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            smoothing: SmoothingConfig::default(),
            entropy_renormalize: true,
        }
    }
}

/// Everything measured on one sequence (or one pooled set of counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnaMetrics {
    /// Mean off-diagonal entropy in bits; absent when no row has support.
    pub entropy: Option<f64>,
    pub per_aoi_entropy: Vec<Option<f64>>,
    pub entropy_rows: usize,
    pub self_loop_rate: f64,
    pub cross_scan_rate: f64,
    pub weights: Vec<f64>,
    pub n_fixations: u64,
    pub n_transitions: u64,
}

/// Counts, smoothed matrix and metrics from one analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub counts: TransitionCounts,
    pub matrix: TransitionMatrix,
    pub metrics: TnaMetrics,
}

/// Metrics from an existing tally.
pub fn analyze_counts(c: TransitionCounts, cfg: &AnalysisConfig) -> Result<Analysis> {
    let matrix = smooth_and_normalize(&c, cfg.smoothing);
    let h = entropy(&matrix, cfg.entropy_renormalize);
    let sl = self_loop_rate(&matrix, &c)?;
    let metrics = TnaMetrics {
        entropy: h.mean,
        per_aoi_entropy: h.per_aoi,
        entropy_rows: h.rows_used,
        self_loop_rate: sl.self_loop,
        cross_scan_rate: sl.cross_scan,
        weights: sl.weights,
        n_fixations: c.total_fixations(),
        n_transitions: c.total_transitions(),
    };
    Ok(Analysis {
        counts: c,
        matrix,
        metrics,
    })
}

/// Full per-sequence pipeline: transitions, counts, smoothing, metrics.
pub fn analyze_sequence(
    seq: &AoiSequence,
    order: &[String],
    cfg: &AnalysisConfig,
) -> Result<TnaMetrics> {
    Ok(analyze_sequence_full(seq, order, cfg)?.metrics)
}

pub fn analyze_sequence_full(
    seq: &AoiSequence,
    order: &[String],
    cfg: &AnalysisConfig,
) -> Result<Analysis> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    analyze_counts(count_sequence(seq, order)?, cfg)
}
