//! Seeded synthetic fixation logs drawn from a known AOI transition matrix.
//!
//! Randomness comes from xoshiro256** seeded through SplitMix64, and every
//! draw is mapped to numbers with plain integer/float arithmetic, so a given
//! spec and seed produce the same log on every platform.
//!
//! Each step draws the next AOI from the current row of the ground-truth
//! matrix (the first AOI uniformly), an object uniformly among the AOI's
//! `objects_per_aoi` objects, a dwell and a gap. Consecutive draws of the
//! same object separated by a gap within the merge threshold later fuse
//! into one dwell, so measured self-transition rates fall below the ground
//! truth unless `objects_per_aoi` is large or gaps exceed the threshold.

use std::collections::BTreeMap;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256StarStar};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AoiMap, FixationKind, FixationRecord, Role, StageAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformRange {
    pub min: u64,
    pub max: u64,
}

fn default_session() -> String {
    "sim".to_string()
}

fn default_participant() -> String {
    "p1".to_string()
}

fn default_role() -> Role {
    Role::Airway
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub aoi_order: Vec<String>,
    /// Ground-truth row-stochastic matrix, rows and columns in `aoi_order`.
    pub transition_probs: Vec<Vec<f64>>,
    pub dwell_ms: UniformRange,
    pub gap_ms: UniformRange,
    pub objects_per_aoi: usize,
    pub length: usize,
    pub seed: u64,
    #[serde(default = "default_session")]
    pub session_id: String,
    #[serde(default = "default_participant")]
    pub participant_id: String,
    #[serde(default = "default_role")]
    pub role: Role,
    /// Onset of the first fixation.
    #[serde(default)]
    pub start_ms: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.aoi_order.len();
        if k < 2 {
            return Err(Error::Generator("at least two AOIs are required".into()));
        }
        if self.transition_probs.len() != k {
            return Err(Error::Generator(format!(
                "transition matrix has {} rows for {k} AOIs",
                self.transition_probs.len()
            )));
        }
        for (i, row) in self.transition_probs.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Generator(format!(
                    "row {i} has {} entries",
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Generator(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Generator(format!("row {i} sums to {sum}, not 1")));
            }
        }
        for (name, r) in [("dwell_ms", self.dwell_ms), ("gap_ms", self.gap_ms)] {
            if r.min > r.max {
                return Err(Error::Generator(format!("{name}: min exceeds max")));
            }
        }
        if self.objects_per_aoi == 0 {
            return Err(Error::Generator("objects_per_aoi must be positive".into()));
        }
        let mut labels: Vec<&String> = self.aoi_order.iter().collect();
        labels.sort();
        labels.dedup();
        if labels.len() != k {
            return Err(Error::Generator("duplicate AOI label".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GeneratorSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Object id for the `n`-th object of AOI `aoi`.
    pub fn object_id(&self, aoi: usize, n: usize) -> String {
        format!("{}-{n}", slug(&self.aoi_order[aoi]))
    }

    /// AOI map covering every object the generator can emit.
    pub fn aoi_map(&self) -> Result<AoiMap> {
        let mut entries = BTreeMap::new();
        for (i, label) in self.aoi_order.iter().enumerate() {
            for n in 0..self.objects_per_aoi {
                entries.insert(self.object_id(i, n), label.clone());
            }
        }
        AoiMap::new(self.aoi_order.clone(), entries)
    }
}

/// Lower-case ASCII slug: runs of non-alphanumerics become one `-`.
pub fn slug(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for ch in label.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

/// Portable uniform draws on top of xoshiro256**.
pub struct SeededRng(Xoshiro256StarStar);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    pub fn range(&mut self, r: UniformRange) -> u64 {
        r.min + self.index((r.max - r.min + 1) as usize) as u64
    }

    /// Draws from a discrete distribution by inverse CDF.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.unit();
        let mut acc = 0.0;
        for (j, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // rounding left u above the final cumulative sum
        probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Child seeds derived from one base seed via SplitMix64.
pub fn derive_seeds(base: u64, count: usize) -> Vec<u64> {
    let mut sm = SplitMix64::seed_from_u64(base);
    (0..count).map(|_| sm.next_u64()).collect()
}

/// AOI index sequence drawn from the spec's chain, before timing.
pub fn generate_aoi_path(spec: &GeneratorSpec, rng: &mut SeededRng) -> Vec<usize> {
    let k = spec.aoi_order.len();
    let mut path = Vec::with_capacity(spec.length);
    if spec.length == 0 {
        return path;
    }
    let mut current = rng.index(k);
    path.push(current);
    for _ in 1..spec.length {
        current = rng.categorical(&spec.transition_probs[current]);
        path.push(current);
    }
    path
}

/// Generates a fixation log following `spec`; deterministic in `spec.seed`.
pub fn generate(spec: &GeneratorSpec) -> Result<Vec<FixationRecord>> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let k = spec.aoi_order.len();
    let mut records = Vec::with_capacity(spec.length);
    let mut t = spec.start_ms;
    let mut current = 0;
    for step in 0..spec.length {
        current = if step == 0 {
            rng.index(k)
        } else {
            rng.categorical(&spec.transition_probs[current])
        };
        let object = rng.index(spec.objects_per_aoi);
        let dwell = rng.range(spec.dwell_ms);
        let gap = rng.range(spec.gap_ms);
        records.push(FixationRecord {
            session_id: spec.session_id.clone(),
            participant_id: spec.participant_id.clone(),
            role: spec.role,
            start_ms: t,
            end_ms: t + dwell,
            object_id: spec.object_id(current, object),
            kind: FixationKind::Fixation,
        });
        t += dwell + gap;
    }
    Ok(records)
}

const PRESETS: [(&str, &str); 8] = [
    (
        "airway-stage1",
        include_str!("../presets/airway-stage1.json"),
    ),
    (
        "airway-stage5",
        include_str!("../presets/airway-stage5.json"),
    ),
    ("cpr-stage1", include_str!("../presets/cpr-stage1.json")),
    ("cpr-stage5", include_str!("../presets/cpr-stage5.json")),
    ("defib-stage1", include_str!("../presets/defib-stage1.json")),
    ("defib-stage5", include_str!("../presets/defib-stage5.json")),
    (
        "teamlead-stage1",
        include_str!("../presets/teamlead-stage1.json"),
    ),
    (
        "teamlead-stage5",
        include_str!("../presets/teamlead-stage5.json"),
    ),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Looks up a preset such as `cpr-stage5`.
pub fn preset_by_name(name: &str) -> Result<GeneratorSpec> {
    let lowered = name.to_ascii_lowercase();
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == lowered)
        .ok_or_else(|| Error::Generator(format!("unknown preset `{name}`")))?;
    GeneratorSpec::from_json(text)
}

/// Illustrative ground truth for a role in `stage1` or `stage5`.
pub fn role_preset(role: Role, stage: &str) -> Result<GeneratorSpec> {
    let stage = match stage.to_ascii_lowercase().as_str() {
        "stage1" | "1" => "stage1",
        "stage5" | "5" => "stage5",
        other => return Err(Error::Generator(format!("no presets for stage `{other}`"))),
    };
    let mut spec = preset_by_name(&format!("{}-{stage}", role.as_str().to_ascii_lowercase()))?;
    spec.role = role;
    Ok(spec)
}

/// Stage windows used by the demo corpus.
pub const DEMO_STAGES: [(&str, u64, u64); 2] =
    [("stage1", 0, 360_000), ("stage5", 360_000, 720_000)];
pub const DEMO_SESSIONS: usize = 10;

#[derive(Debug, Clone)]
pub struct DemoCorpus {
    pub records: Vec<FixationRecord>,
    pub stages: Vec<StageAnnotation>,
    pub aoi_map: AoiMap,
}

/// Ten four-person sessions; every participant contributes a stage-1 and a
/// stage-5 segment drawn from their role's presets.
pub fn demo_corpus(seed: u64) -> Result<DemoCorpus> {
    let stage_names: Vec<&str> = DEMO_STAGES.iter().map(|s| s.0).collect();
    let seeds = derive_seeds(seed, DEMO_SESSIONS * Role::ALL.len() * stage_names.len());
    let mut seeds = seeds.into_iter();
    let mut records = Vec::new();
    let mut stages = Vec::new();
    let mut aoi_map = None;
    for session in 0..DEMO_SESSIONS {
        let session_id = format!("s{:02}", session + 1);
        for (r, role) in Role::ALL.into_iter().enumerate() {
            let participant_id = format!("P{:02}", session * Role::ALL.len() + r + 1);
            for &(stage, start, end) in &DEMO_STAGES {
                let mut spec = role_preset(role, stage)?;
                spec.seed = seeds.next().expect("one seed per segment");
                spec.session_id = session_id.clone();
                spec.participant_id = participant_id.clone();
                spec.start_ms = start;
                let segment = generate(&spec)?;
                if segment.last().is_some_and(|f| f.start_ms >= end) {
                    return Err(Error::Generator(format!(
                        "preset {stage} overruns its window"
                    )));
                }
                if aoi_map.is_none() {
                    aoi_map = Some(spec.aoi_map()?);
                }
                records.extend(segment);
            }
        }
        for &(stage, start, end) in &DEMO_STAGES {
            stages.push(StageAnnotation {
                session_id: session_id.clone(),
                stage_label: stage.to_string(),
                start_ms: start,
                end_ms: end,
            });
        }
    }
    Ok(DemoCorpus {
        records,
        stages,
        aoi_map: aoi_map.expect("at least one segment generated"),
    })
}
