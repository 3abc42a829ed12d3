//! End-to-end batch runs over a whole fixation log: per-participant
//! metrics, role/stage group samples, pooled networks and input validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{opt_num, round6};
use crate::ingest::{AoiMap, FixationRecord, Role, StageAnnotation};
use crate::network::{network_from_analysis, TnaNetwork};
use crate::sequence::{
    build_aoi_sequence, merge_fixations, partition_by_participant, segment_by_stage, AoiSequence,
    ParticipantKey, DEFAULT_MERGE_GAP_MS,
};
use crate::stats::GroupSample;
use crate::synth::slug;
use crate::tna::{
    analyze_counts, analyze_sequence_full, count_sequence, Analysis, AnalysisConfig, TnaMetrics,
};

/// Parsed inputs of one run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub records: Vec<FixationRecord>,
    pub aoi_map: AoiMap,
    pub stages: Vec<StageAnnotation>,
}

/// Which dimensions split the data into cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GroupBy {
    pub role: bool,
    pub stage: bool,
    pub participant: bool,
}

impl GroupBy {
    pub fn role() -> Self {
        GroupBy {
            role: true,
            ..GroupBy::default()
        }
    }
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut g = GroupBy::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "role" => g.role = true,
                "stage" => g.stage = true,
                "participant" => g.participant = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown group-by dimension `{other}` (role|stage|participant)"
                    )))
                }
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub analysis: AnalysisConfig,
    pub gap_ms: u64,
    pub group_by: GroupBy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            analysis: AnalysisConfig::default(),
            gap_ms: DEFAULT_MERGE_GAP_MS,
            group_by: GroupBy::role(),
        }
    }
}

/// One analysed (participant, stage) sequence.
#[derive(Debug, Clone)]
pub struct SequenceResult {
    pub sequence: AoiSequence,
    pub dropped_unmapped: usize,
    /// `None` when the sequence was empty and skipped.
    pub analysis: Option<Analysis>,
}

impl SequenceResult {
    pub fn metrics(&self) -> Option<&TnaMetrics> {
        self.analysis.as_ref().map(|a| &a.metrics)
    }

    pub fn key(&self) -> &ParticipantKey {
        &self.sequence.key
    }
}

/// Builds every participant's AOI sequence, split by stage when the
/// config groups by stage and stage windows are available.
pub fn build_sequences(inputs: &Inputs, cfg: &PipelineConfig) -> Result<Vec<(AoiSequence, usize)>> {
    let mut out = Vec::new();
    for (key, records) in partition_by_participant(&inputs.records) {
        let merged = merge_fixations(&records, cfg.gap_ms)?;
        let built = build_aoi_sequence(key, &merged, &inputs.aoi_map);
        if cfg.group_by.stage && !inputs.stages.is_empty() {
            for part in segment_by_stage(&built.sequence, &inputs.stages) {
                out.push((part, built.dropped));
            }
        } else {
            out.push((built.sequence, built.dropped));
        }
    }
    Ok(out)
}

fn sort_key(r: &SequenceResult) -> (String, Role, String, String) {
    let k = r.key();
    (
        k.participant_id.clone(),
        k.role,
        r.sequence.stage_label.clone().unwrap_or_default(),
        k.session_id.clone(),
    )
}

/// Metrics for every sequence, ordered by participant, role, then stage.
pub fn analyze_all(inputs: &Inputs, cfg: &PipelineConfig) -> Result<Vec<SequenceResult>> {
    let order = inputs.aoi_map.aoi_order();
    let mut results = build_sequences(inputs, cfg)?
        .into_iter()
        .map(|(sequence, dropped_unmapped)| {
            let analysis = if sequence.is_empty() {
                None
            } else {
                Some(analyze_sequence_full(&sequence, order, &cfg.analysis)?)
            };
            Ok(SequenceResult {
                sequence,
                dropped_unmapped,
                analysis,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(sort_key);
    Ok(results)
}

fn entropy_column(label: &str) -> String {
    format!("entropy_{}", slug(label))
}

/// Metrics table as CSV. The leading columns are
/// `participant_id,role,stage,entropy,self_loop,cross_scan,n_fixations,n_transitions`,
/// followed by one entropy column per AOI and bookkeeping columns.
pub fn metrics_csv(
    results: &[SequenceResult],
    aoi_order: &[String],
    full_precision: bool,
) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "participant_id",
        "role",
        "stage",
        "entropy",
        "self_loop",
        "cross_scan",
        "n_fixations",
        "n_transitions",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(aoi_order.iter().map(|l| entropy_column(l)));
    header.extend(["session_id", "dropped_unmapped", "skipped"].map(String::from));
    wtr.write_record(&header)?;
    for r in results {
        let k = r.key();
        let mut row = vec![
            k.participant_id.clone(),
            k.role.to_string(),
            r.sequence.stage_label.clone().unwrap_or_default(),
        ];
        match r.metrics() {
            Some(m) => {
                row.push(opt_num(m.entropy, full_precision));
                row.push(opt_num(Some(m.self_loop_rate), full_precision));
                row.push(opt_num(Some(m.cross_scan_rate), full_precision));
                row.push(m.n_fixations.to_string());
                row.push(m.n_transitions.to_string());
                row.extend(
                    m.per_aoi_entropy
                        .iter()
                        .map(|h| opt_num(*h, full_precision)),
                );
            }
            None => {
                row.extend(std::iter::repeat_n(String::new(), 3));
                row.push("0".into());
                row.push("0".into());
                row.extend(std::iter::repeat_n(String::new(), aoi_order.len()));
            }
        }
        row.push(k.session_id.clone());
        row.push(r.dropped_unmapped.to_string());
        row.push(r.analysis.is_none().to_string());
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Serialize)]
struct MetricsJsonRow<'a> {
    participant_id: &'a str,
    role: Role,
    stage: Option<&'a str>,
    session_id: &'a str,
    entropy: Option<f64>,
    self_loop: Option<f64>,
    cross_scan: Option<f64>,
    n_fixations: u64,
    n_transitions: u64,
    per_aoi_entropy: BTreeMap<&'a str, Option<f64>>,
    dropped_unmapped: usize,
    skipped: bool,
}

/// JSON mirror of [`metrics_csv`].
pub fn metrics_json(
    results: &[SequenceResult],
    aoi_order: &[String],
    full_precision: bool,
) -> Result<String> {
    let round = |x: f64| if full_precision { x } else { round6(x) };
    let rows: Vec<MetricsJsonRow> = results
        .iter()
        .map(|r| {
            let k = r.key();
            let m = r.metrics();
            MetricsJsonRow {
                participant_id: &k.participant_id,
                role: k.role,
                stage: r.sequence.stage_label.as_deref(),
                session_id: &k.session_id,
                entropy: m.and_then(|m| m.entropy).map(round),
                self_loop: m.map(|m| round(m.self_loop_rate)),
                cross_scan: m.map(|m| round(m.cross_scan_rate)),
                n_fixations: m.map_or(0, |m| m.n_fixations),
                n_transitions: m.map_or(0, |m| m.n_transitions),
                per_aoi_entropy: aoi_order
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), m.and_then(|m| m.per_aoi_entropy[i]).map(round)))
                    .collect(),
                dropped_unmapped: r.dropped_unmapped,
                skipped: r.analysis.is_none(),
            }
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&rows)?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Entropy,
    SelfLoop,
    CrossScan,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Entropy => "entropy",
            Metric::SelfLoop => "self_loop",
            Metric::CrossScan => "cross_scan",
        }
    }

    pub fn of(self, m: &TnaMetrics) -> Option<f64> {
        match self {
            Metric::Entropy => m.entropy,
            Metric::SelfLoop => Some(m.self_loop_rate),
            Metric::CrossScan => Some(m.cross_scan_rate),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "entropy" => Ok(Metric::Entropy),
            "self_loop" => Ok(Metric::SelfLoop),
            "cross_scan" => Ok(Metric::CrossScan),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareBy {
    Role,
    Stage,
}

impl FromStr for CompareBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "role" => Ok(CompareBy::Role),
            "stage" => Ok(CompareBy::Stage),
            other => Err(Error::Config(format!(
                "cannot compare by `{other}` (role|stage)"
            ))),
        }
    }
}

/// Metric values grouped by role (in role order) or by stage label.
/// Skipped sequences and absent values are left out.
pub fn group_samples(
    results: &[SequenceResult],
    by: CompareBy,
    metric: Metric,
) -> Vec<GroupSample> {
    let mut groups: BTreeMap<(u8, String), Vec<f64>> = BTreeMap::new();
    for r in results {
        let Some(value) = r.metrics().and_then(|m| metric.of(m)) else {
            continue;
        };
        let label = match by {
            CompareBy::Role => (r.key().role as u8, r.key().role.to_string()),
            CompareBy::Stage => match &r.sequence.stage_label {
                Some(s) => (0, s.clone()),
                None => continue,
            },
        };
        groups.entry(label).or_default().push(value);
    }
    groups
        .into_iter()
        .map(|((_, label), values)| GroupSample::new(label, values))
        .collect()
}

/// Key of one pooled network cell; absent parts are pooled over.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub role: Option<Role>,
    pub stage: Option<String>,
    pub participant: Option<String>,
}

fn file_part(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

impl CellKey {
    /// File stem such as `tna_CPR_stage5` (pooled parts read `all`).
    pub fn file_stem(&self, prefix: &str) -> String {
        let mut stem = format!(
            "{prefix}_{}_{}",
            self.role.map_or("all".to_string(), |r| r.to_string()),
            self.stage.as_deref().map_or("all".to_string(), file_part)
        );
        if let Some(p) = &self.participant {
            stem.push('_');
            stem.push_str(&file_part(p));
        }
        stem
    }
}

/// A pooled cell: its network, or `None` when it holds no fixations.
#[derive(Debug, Clone)]
pub struct CellNetwork {
    pub key: CellKey,
    pub analysis: Option<Analysis>,
    pub network: Option<TnaNetwork>,
}

/// Pools raw counts over all sequences in each cell, then smooths once.
pub fn pooled_networks(
    inputs: &Inputs,
    cfg: &PipelineConfig,
    min_prob: f64,
) -> Result<Vec<CellNetwork>> {
    let order = inputs.aoi_map.aoi_order();
    let g = cfg.group_by;
    let mut cells: BTreeMap<CellKey, crate::tna::TransitionCounts> = BTreeMap::new();
    for (seq, _) in build_sequences(inputs, cfg)? {
        let key = CellKey {
            role: g.role.then_some(seq.key.role),
            stage: if g.stage {
                seq.stage_label.clone()
            } else {
                None
            },
            participant: g.participant.then(|| seq.key.participant_id.clone()),
        };
        let counts = count_sequence(&seq, order)?;
        match cells.get_mut(&key) {
            Some(pooled) => pooled.add(&counts)?,
            None => {
                cells.insert(key, counts);
            }
        }
    }
    cells
        .into_iter()
        .map(|(key, counts)| {
            if counts.total_fixations() == 0 {
                return Ok(CellNetwork {
                    key,
                    analysis: None,
                    network: None,
                });
            }
            let analysis = analyze_counts(counts, &cfg.analysis)?;
            let mut net = network_from_analysis(&analysis, min_prob)?;
            net.metadata.role = key.role.map(|r| r.to_string());
            net.metadata.stage = key.stage.clone();
            net.metadata.participant = key.participant.clone();
            Ok(CellNetwork {
                key,
                analysis: Some(analysis),
                network: Some(net),
            })
        })
        .collect()
}

/// Counts gathered while checking a set of inputs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub records: usize,
    pub fixations: usize,
    pub saccades: usize,
    pub sessions: usize,
    pub participants: usize,
    pub aois: usize,
    pub mapped_objects: usize,
    pub stages: usize,
    pub merged_fixations: usize,
    pub dropped_unmapped: usize,
    pub sequences: usize,
    pub transitions: usize,
    /// Raw fixation count per object id missing from the AOI map.
    pub unmapped_objects: BTreeMap<String, usize>,
    /// Sessions in the log without any stage window.
    pub sessions_without_stages: Vec<String>,
}

pub fn validate_inputs(inputs: &Inputs, gap_ms: u64) -> Result<ValidationReport> {
    let mut report = ValidationReport {
        records: inputs.records.len(),
        aois: inputs.aoi_map.aoi_order().len(),
        mapped_objects: inputs.aoi_map.entries().len(),
        stages: inputs.stages.len(),
        ..ValidationReport::default()
    };
    let mut sessions = BTreeSet::new();
    for r in &inputs.records {
        sessions.insert(r.session_id.as_str());
        if r.is_fixation() {
            report.fixations += 1;
            if inputs.aoi_map.label_of(&r.object_id).is_none() {
                *report
                    .unmapped_objects
                    .entry(r.object_id.clone())
                    .or_default() += 1;
            }
        } else {
            report.saccades += 1;
        }
    }
    report.sessions = sessions.len();
    if !inputs.stages.is_empty() {
        let staged: BTreeSet<&str> = inputs
            .stages
            .iter()
            .map(|s| s.session_id.as_str())
            .collect();
        report.sessions_without_stages = sessions
            .iter()
            .filter(|s| !staged.contains(*s))
            .map(|s| s.to_string())
            .collect();
    }
    let parts = partition_by_participant(&inputs.records);
    report.participants = parts.len();
    for (key, records) in parts {
        let merged = merge_fixations(&records, gap_ms)?;
        let built = build_aoi_sequence(key, &merged, &inputs.aoi_map);
        report.merged_fixations += merged.len();
        report.dropped_unmapped += built.dropped;
        if !built.sequence.is_empty() {
            report.sequences += 1;
            report.transitions += built.sequence.len() - 1;
        }
    }
    Ok(report)
}

impl ValidationReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "fixation log: {} records ({} fixations, {} saccades)",
            self.records, self.fixations, self.saccades
        );
        let _ = writeln!(
            out,
            "sessions: {}  participants: {}",
            self.sessions, self.participants
        );
        let _ = writeln!(
            out,
            "aoi map: {} AOIs, {} mapped objects",
            self.aois, self.mapped_objects
        );
        let _ = writeln!(out, "stages: {}", self.stages);
        let _ = writeln!(
            out,
            "merged fixations: {}  dropped (unmapped): {}  sequences: {}  transitions: {}",
            self.merged_fixations, self.dropped_unmapped, self.sequences, self.transitions
        );
        if !self.unmapped_objects.is_empty() {
            let _ = writeln!(
                out,
                "unmapped object ids ({}):",
                self.unmapped_objects.len()
            );
            for (obj, n) in &self.unmapped_objects {
                let _ = writeln!(out, "  {obj}: {n}");
            }
        }
        if !self.sessions_without_stages.is_empty() {
            let _ = writeln!(
                out,
                "sessions without stage windows: {}",
                self.sessions_without_stages.join(", ")
            );
        }
        out
    }
}
