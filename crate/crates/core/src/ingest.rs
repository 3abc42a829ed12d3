//! Typed records for fixation logs, AOI mapping tables and stage windows.
//!
//! Three text inputs are understood:
//!
//! * fixation logs, as CSV with the header
//!   `session_id,participant_id,role,start_ms,end_ms,object_id,kind`
//!   or as JSON lines carrying the same keys;
//! * AOI maps: an `aois: A|B|...` declaration line followed by
//!   `object_id,aoi_label` rows;
//! * stage windows, as CSV `session_id,stage_label,start_ms,end_ms`.
//!
//! Timestamps are integer milliseconds from session start. Fractional input
//! is truncated toward zero.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FIXATION_COLUMNS: [&str; 7] = [
    "session_id",
    "participant_id",
    "role",
    "start_ms",
    "end_ms",
    "object_id",
    "kind",
];

pub const STAGE_COLUMNS: [&str; 4] = ["session_id", "stage_label", "start_ms", "end_ms"];

/// The seven AOIs used for resuscitation-team gaze analysis, in matrix order.
pub const DEFAULT_AOIS: [&str; 7] = [
    "Equipment - Airway",
    "Equipment - CPR",
    "Equipment - Defib",
    "Equipment - Meds & IV",
    "Patient Vitals Monitor",
    "Other Team Members",
    "Patient",
];

/// Standardized team role of a participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Airway,
    #[serde(rename = "CPR")]
    Cpr,
    Defib,
    TeamLead,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Airway, Role::Cpr, Role::Defib, Role::TeamLead];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Airway => "Airway",
            Role::Cpr => "CPR",
            Role::Defib => "Defib",
            Role::TeamLead => "TeamLead",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixationKind {
    Fixation,
    Saccade,
}

impl FixationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FixationKind::Fixation => "fixation",
            FixationKind::Saccade => "saccade",
        }
    }
}

impl FromStr for FixationKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        if s.eq_ignore_ascii_case("fixation") {
            Ok(FixationKind::Fixation)
        } else if s.eq_ignore_ascii_case("saccade") {
            Ok(FixationKind::Saccade)
        } else {
            Err(())
        }
    }
}

/// One raw gaze event from a fixation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixationRecord {
    pub session_id: String,
    pub participant_id: String,
    pub role: Role,
    pub start_ms: u64,
    pub end_ms: u64,
    pub object_id: String,
    pub kind: FixationKind,
}

impl FixationRecord {
    pub fn is_fixation(&self) -> bool {
        self.kind == FixationKind::Fixation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" | "ndjson" => Ok(LogFormat::Jsonl),
            other => Err(Error::Config(format!("unknown log format `{other}`"))),
        }
    }
}

fn field_err(line: u64, field: &str, message: impl Into<String>) -> Error {
    Error::Field {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_ms(raw: &str, line: u64, field: &str) -> Result<u64> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v.trunc() as u64),
        Ok(_) => Err(field_err(
            line,
            field,
            format!("`{raw}` is not a non-negative time"),
        )),
        Err(_) => Err(field_err(line, field, format!("`{raw}` is not a number"))),
    }
}

fn build_record(line: u64, get: impl Fn(&str) -> Result<String>) -> Result<FixationRecord> {
    let role_raw = get("role")?;
    let role = role_raw.parse::<Role>().map_err(|_| Error::UnknownRole {
        line,
        value: role_raw.clone(),
    })?;
    let start_ms = parse_ms(&get("start_ms")?, line, "start_ms")?;
    let end_ms = parse_ms(&get("end_ms")?, line, "end_ms")?;
    if end_ms < start_ms {
        return Err(Error::NegativeDuration { line });
    }
    let kind_raw = get("kind")?;
    let kind = kind_raw.parse::<FixationKind>().map_err(|_| {
        field_err(
            line,
            "kind",
            format!("`{kind_raw}` is not fixation|saccade"),
        )
    })?;
    Ok(FixationRecord {
        session_id: get("session_id")?,
        participant_id: get("participant_id")?,
        role,
        start_ms,
        end_ms,
        object_id: get("object_id")?,
        kind,
    })
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(bytes)
}

/// Maps required column names to positions, failing on the first absent one.
fn column_positions(
    headers: &csv::StringRecord,
    required: &[&str],
    source_name: &str,
) -> Result<HashMap<String, usize>> {
    let mut positions = HashMap::new();
    for col in required {
        let idx = headers
            .iter()
            .position(|h| h == *col)
            .ok_or_else(|| Error::MissingColumn {
                source_name: source_name.to_string(),
                column: col.to_string(),
            })?;
        positions.insert(col.to_string(), idx);
    }
    Ok(positions)
}

/// Parses a fixation log. Records come back in file order.
pub fn parse_fixation_log(bytes: &[u8], format: LogFormat) -> Result<Vec<FixationRecord>> {
    match format {
        LogFormat::Csv => parse_fixation_csv(bytes),
        LogFormat::Jsonl => parse_fixation_jsonl(bytes),
    }
}

fn parse_fixation_csv(bytes: &[u8]) -> Result<Vec<FixationRecord>> {
    let mut rdr = csv_reader(bytes);
    let positions = column_positions(rdr.headers()?, &FIXATION_COLUMNS, "fixation log")?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let rec = build_record(line, |name| {
            row.get(positions[name])
                .map(str::to_string)
                .ok_or_else(|| field_err(line, name, "missing value"))
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn parse_fixation_jsonl(bytes: &[u8]) -> Result<Vec<FixationRecord>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| field_err(0, "encoding", format!("input is not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(raw)
            .map_err(|e| field_err(line, "record", format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| field_err(line, "record", "expected a JSON object"))?;
        let rec = build_record(line, |name| match obj.get(name) {
            Some(serde_json::Value::String(s)) => Ok(s.trim().to_string()),
            Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
            Some(other) => Err(field_err(line, name, format!("unexpected value {other}"))),
            None => Err(field_err(line, name, "missing key")),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Writes records as fixation CSV, header included.
pub fn write_fixation_csv<W: Write>(records: &[FixationRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(FIXATION_COLUMNS)?;
    for r in records {
        wtr.write_record([
            r.session_id.as_str(),
            r.participant_id.as_str(),
            r.role.as_str(),
            &r.start_ms.to_string(),
            &r.end_ms.to_string(),
            r.object_id.as_str(),
            r.kind.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes records as JSON lines, one object per record.
pub fn write_fixation_jsonl<W: Write>(records: &[FixationRecord], mut writer: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Object-to-AOI lookup plus the AOI order that fixes matrix rows and columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AoiMap {
    entries: BTreeMap<String, String>,
    aoi_order: Vec<String>,
}

impl AoiMap {
    pub fn new(aoi_order: Vec<String>, entries: BTreeMap<String, String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for label in &aoi_order {
            if label.is_empty() {
                return Err(Error::AoiMap("empty AOI label in declaration".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::AoiMap(format!("AOI `{label}` declared twice")));
            }
        }
        if aoi_order.len() < 2 {
            return Err(Error::AoiMap("at least two AOIs must be declared".into()));
        }
        if let Some((obj, label)) = entries.iter().find(|(_, l)| !seen.contains(l.as_str())) {
            return Err(Error::AoiMap(format!(
                "object `{obj}` maps to undeclared AOI `{label}`"
            )));
        }
        Ok(AoiMap { entries, aoi_order })
    }

    /// An empty map over the default seven AOIs.
    pub fn with_default_order() -> Self {
        AoiMap {
            entries: BTreeMap::new(),
            aoi_order: DEFAULT_AOIS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn aoi_order(&self) -> &[String] {
        &self.aoi_order
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn label_of(&self, object_id: &str) -> Option<&str> {
        self.entries.get(object_id).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.aoi_order.iter().position(|l| l == label)
    }

    /// Renders the map in its file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("aois: {}\nobject_id,aoi_label\n", self.aoi_order.join("|"));
        let mut wtr = csv::WriterBuilder::new().from_writer(Vec::new());
        for (obj, label) in &self.entries {
            // writing to a Vec cannot fail
            wtr.write_record([obj, label]).expect("in-memory csv write");
        }
        let body = wtr.into_inner().expect("in-memory csv flush");
        out.push_str(&String::from_utf8_lossy(&body));
        out
    }
}

/// Parses an AOI map file.
///
/// The first non-blank line may be `aois: A|B|...`; without it the default
/// seven-AOI order applies. An `object_id,aoi_label` header row is optional.
pub fn parse_aoi_map(bytes: &[u8]) -> Result<AoiMap> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::AoiMap(format!("input is not UTF-8: {e}")))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    let aoi_order: Vec<String> = match lines.peek() {
        Some((_, first)) if first.trim_start().to_ascii_lowercase().starts_with("aois:") => {
            let decl = first.trim_start()["aois:".len()..].to_string();
            lines.next();
            decl.split('|').map(|s| s.trim().to_string()).collect()
        }
        _ => DEFAULT_AOIS.iter().map(|s| s.to_string()).collect(),
    };

    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(raw.as_bytes());
        let row = match rdr.records().next() {
            Some(r) => r?,
            None => continue,
        };
        if row.len() != 2 {
            return Err(Error::AoiMap(format!(
                "line {line}: expected `object_id,aoi_label`, found {} fields",
                row.len()
            )));
        }
        let (obj, label) = (&row[0], &row[1]);
        if obj == "object_id" && label == "aoi_label" {
            continue;
        }
        if !aoi_order.iter().any(|l| l == label) {
            return Err(Error::AoiMap(format!(
                "line {line}: AOI `{label}` is not declared in the aois header"
            )));
        }
        if let Some(prev) = entries.get(obj) {
            if prev != label {
                return Err(Error::AoiMap(format!(
                    "line {line}: object `{obj}` mapped to both `{prev}` and `{label}`"
                )));
            }
            continue;
        }
        entries.insert(obj.to_string(), label.to_string());
    }
    AoiMap::new(aoi_order, entries)
}

/// Half-open time window `[start_ms, end_ms)` naming a scenario stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageAnnotation {
    pub session_id: String,
    pub stage_label: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

impl StageAnnotation {
    pub fn contains(&self, t_ms: u64) -> bool {
        self.start_ms <= t_ms && t_ms < self.end_ms
    }
}

/// Parses stage windows, returning them sorted by session then start time.
pub fn parse_stage_annotations(bytes: &[u8]) -> Result<Vec<StageAnnotation>> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(Vec::new());
    }
    let mut rdr = csv_reader(bytes);
    let positions = column_positions(rdr.headers()?, &STAGE_COLUMNS, "stage file")?;
    let mut stages = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |name: &str| row.get(positions[name]).unwrap_or_default().to_string();
        let stage = StageAnnotation {
            session_id: get("session_id"),
            stage_label: get("stage_label"),
            start_ms: parse_ms(&get("start_ms"), line, "start_ms")?,
            end_ms: parse_ms(&get("end_ms"), line, "end_ms")?,
        };
        if stage.end_ms <= stage.start_ms {
            return Err(Error::Stage(format!(
                "line {line}: stage `{}` ends at or before it starts",
                stage.stage_label
            )));
        }
        stages.push(stage);
    }
    validate_stages(&mut stages)?;
    Ok(stages)
}

/// Sorts stages by (session, start) and rejects overlaps within a session.
pub fn validate_stages(stages: &mut [StageAnnotation]) -> Result<()> {
    stages.sort_by(|a, b| {
        (a.session_id.as_str(), a.start_ms).cmp(&(b.session_id.as_str(), b.start_ms))
    });
    for pair in stages.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.session_id == b.session_id && b.start_ms < a.end_ms {
            return Err(Error::Stage(format!(
                "session `{}`: stages `{}` and `{}` overlap",
                a.session_id, a.stage_label, b.stage_label
            )));
        }
    }
    Ok(())
}

/// Renders stage windows in the stage CSV format.
pub fn write_stage_csv<W: Write>(stages: &[StageAnnotation], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(STAGE_COLUMNS)?;
    for s in stages {
        wtr.write_record([
            s.session_id.as_str(),
            s.stage_label.as_str(),
            &s.start_ms.to_string(),
            &s.end_ms.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
