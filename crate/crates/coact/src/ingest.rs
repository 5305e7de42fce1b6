//! Decision-log I/O: schema-driven parsing of csv / json-lines files into
//! [`DecisionRecord`]s, row-level validation, participant screening, and the
//! matching writers.
//!
//! Parsing never aborts on a malformed row; each bad row lands in the
//! [`ValidationReport`] with its row number and a reason. Screening removes
//! whole participants, never single rows: first anyone whose team decisions
//! break a hard value cap, then (iterated to a fixed point, which makes the
//! operation idempotent) anyone whose mean team loss is a MAD outlier among
//! the remaining participants.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DecisionRecord, DecisionValue, LossKind};
use crate::stats;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv header unreadable: {0}")]
    Header(csv::Error),
    #[error("header is missing required columns: {0:?}")]
    MissingColumns(Vec<String>),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("screening misuse: {0}")]
    BadScreen(String),
    #[error("no records to screen")]
    NoRecords,
}

/// File format of a decision log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogFormat {
    Csv,
    JsonLines,
}

/// What the decisions are: real-valued predictions or class labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    Classification,
}

impl TaskKind {
    pub fn loss_kind(self) -> LossKind {
        match self {
            TaskKind::Regression => LossKind::AbsoluteError,
            TaskKind::Classification => LossKind::ZeroOne,
        }
    }
}

/// Explicit description of a log file: format, the seven field names, and the
/// task kind (with its label set for classification). Schemas are always
/// spelled out — never sniffed from headers — so an analysis reruns
/// identically on a renamed file only when its schema says so.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSchema {
    pub format: LogFormat,
    pub participant_id: String,
    pub condition_id: String,
    pub instance_id: String,
    pub truth: String,
    pub human: String,
    pub ai: String,
    pub team: String,
    pub task_kind: TaskKind,
    /// Allowed class names; required iff `task_kind` is classification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_set: Option<Vec<String>>,
}

impl LogSchema {
    /// Conventional column names for a regression log.
    pub fn regression(format: LogFormat) -> Self {
        LogSchema {
            format,
            participant_id: "participant_id".into(),
            condition_id: "condition_id".into(),
            instance_id: "instance_id".into(),
            truth: "truth".into(),
            human: "human".into(),
            ai: "ai".into(),
            team: "team".into(),
            task_kind: TaskKind::Regression,
            label_set: None,
        }
    }

    /// Conventional column names for a classification log with `labels`.
    pub fn classification(format: LogFormat, labels: Vec<String>) -> Self {
        LogSchema {
            task_kind: TaskKind::Classification,
            label_set: Some(labels),
            ..LogSchema::regression(format)
        }
    }

    fn field_names(&self) -> [(&'static str, &str); 7] {
        [
            ("participant_id", &self.participant_id),
            ("condition_id", &self.condition_id),
            ("instance_id", &self.instance_id),
            ("truth", &self.truth),
            ("human", &self.human),
            ("ai", &self.ai),
            ("team", &self.team),
        ]
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let names = self.field_names();
        let distinct: BTreeSet<&str> = names.iter().map(|(_, n)| *n).collect();
        if distinct.len() != names.len() {
            return Err(IngestError::InvalidSchema(
                "field names must be distinct".into(),
            ));
        }
        if names.iter().any(|(_, n)| n.is_empty()) {
            return Err(IngestError::InvalidSchema(
                "field names must be non-empty".into(),
            ));
        }
        match (self.task_kind, &self.label_set) {
            (TaskKind::Classification, None) => Err(IngestError::InvalidSchema(
                "classification schema needs a label_set".into(),
            )),
            (TaskKind::Classification, Some(l)) if l.len() < 2 => Err(IngestError::InvalidSchema(
                "label_set needs at least two classes".into(),
            )),
            (TaskKind::Regression, Some(_)) => Err(IngestError::InvalidSchema(
                "regression schema must not carry a label_set".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Why a row was rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectReason {
    MissingField { field: String },
    BadNumber { field: String, value: String },
    OutOfRange { field: String, value: String },
    UnknownLabel { field: String, label: String },
    DuplicateKey { participant_id: String, condition_id: String, instance_id: String },
    MalformedLine { detail: String },
}

/// A rejected row: 1-based data-row number (csv header excluded) and reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub row: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngestWarning {
    /// Participant's instance set differs from the first participant's in the
    /// same condition.
    UnequalInstanceSet { participant_id: String, condition_id: String },
    SingleParticipantCondition { condition_id: String },
    /// MAD screening was requested but there were too few participants.
    ScreeningSkipped { detail: String },
}

/// Why a whole participant was removed during screening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScreenRule {
    /// Some team decision exceeded the communicated maximum value.
    MaxValueExceeded { limit: f64, worst: f64 },
    /// Mean team loss was a MAD outlier (in screening round `round`).
    MadOutlier { threshold: f64, round: usize },
    /// A raw team prediction was a MAD outlier against the pooled predictions.
    MadOutlierRawPrediction { threshold: f64, round: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedParticipant {
    pub participant_id: String,
    pub rule: ScreenRule,
}

/// Outcome of a parse or screening pass. Every input row is accounted for:
/// `accepted_count + rejected.len() == total_rows`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ValidationReport {
    pub total_rows: usize,
    pub accepted_count: usize,
    pub rejected: Vec<RejectedRow>,
    pub warnings: Vec<IngestWarning>,
    pub dropped_participants: Vec<DroppedParticipant>,
}

enum FieldOutcome {
    Value(DecisionValue),
    Reject(RejectReason),
}

fn parse_value_str(raw: &str, field: &str, schema: &LogSchema) -> FieldOutcome {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return FieldOutcome::Reject(RejectReason::MissingField { field: field.into() });
    }
    match schema.task_kind {
        TaskKind::Regression => match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => FieldOutcome::Value(DecisionValue::Real(v)),
            Ok(_) => FieldOutcome::Reject(RejectReason::OutOfRange {
                field: field.into(),
                value: trimmed.into(),
            }),
            Err(_) => FieldOutcome::Reject(RejectReason::BadNumber {
                field: field.into(),
                value: trimmed.into(),
            }),
        },
        TaskKind::Classification => {
            let labels = schema.label_set.as_ref().expect("validated schema");
            if labels.iter().any(|l| l == trimmed) {
                FieldOutcome::Value(DecisionValue::Label(trimmed.into()))
            } else {
                FieldOutcome::Reject(RejectReason::UnknownLabel {
                    field: field.into(),
                    label: trimmed.into(),
                })
            }
        }
    }
}

/// Raw string fields of one row, in (participant, condition, instance,
/// truth, human, ai, team) order.
struct RawRow<'a> {
    fields: [Option<&'a str>; 7],
}

fn assemble_record(
    raw: &RawRow,
    schema: &LogSchema,
    seen: &mut BTreeSet<(String, String, String)>,
) -> Result<DecisionRecord, RejectReason> {
    const NAMES: [&str; 7] = [
        "participant_id", "condition_id", "instance_id", "truth", "human", "ai", "team",
    ];
    let mut ids = Vec::with_capacity(3);
    for k in 0..3 {
        match raw.fields[k].map(str::trim) {
            Some(s) if !s.is_empty() => ids.push(s.to_string()),
            _ => return Err(RejectReason::MissingField { field: NAMES[k].into() }),
        }
    }
    let mut values = Vec::with_capacity(4);
    for k in 3..7 {
        let raw_value = raw.fields[k].ok_or_else(|| RejectReason::MissingField {
            field: NAMES[k].into(),
        })?;
        match parse_value_str(raw_value, NAMES[k], schema) {
            FieldOutcome::Value(v) => values.push(v),
            FieldOutcome::Reject(r) => return Err(r),
        }
    }
    let key = (ids[0].clone(), ids[1].clone(), ids[2].clone());
    if !seen.insert(key) {
        return Err(RejectReason::DuplicateKey {
            participant_id: ids[0].clone(),
            condition_id: ids[1].clone(),
            instance_id: ids[2].clone(),
        });
    }
    let mut it = values.into_iter();
    Ok(DecisionRecord {
        participant_id: ids[0].clone(),
        condition_id: ids[1].clone(),
        instance_id: ids[2].clone(),
        truth: it.next().unwrap(),
        human: it.next().unwrap(),
        ai: it.next().unwrap(),
        team: it.next().unwrap(),
    })
}

/// Streaming parse of a decision log. Malformed rows are collected in the
/// report, never abort the file; an unreadable stream or a csv header missing
/// schema columns is fatal.
pub fn parse_log<R: Read>(
    source: R,
    schema: &LogSchema,
) -> Result<(Vec<DecisionRecord>, ValidationReport), IngestError> {
    schema.validate()?;
    let mut records = Vec::new();
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();

    match schema.format {
        LogFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(source);
            let headers = reader.headers().map_err(IngestError::Header)?.clone();
            let mut indices = [0usize; 7];
            let mut missing = Vec::new();
            for (slot, (_, name)) in schema.field_names().iter().enumerate() {
                match headers.iter().position(|h| h == *name) {
                    Some(i) => indices[slot] = i,
                    None => missing.push(name.to_string()),
                }
            }
            if !missing.is_empty() {
                return Err(IngestError::MissingColumns(missing));
            }
            for (row_idx, result) in reader.records().enumerate() {
                let row = row_idx + 1;
                report.total_rows += 1;
                match result {
                    Ok(rec) => {
                        let raw = RawRow {
                            fields: indices.map(|i| rec.get(i)),
                        };
                        match assemble_record(&raw, schema, &mut seen) {
                            Ok(r) => records.push(r),
                            Err(reason) => report.rejected.push(RejectedRow { row, reason }),
                        }
                    }
                    Err(e) => report.rejected.push(RejectedRow {
                        row,
                        reason: RejectReason::MalformedLine { detail: e.to_string() },
                    }),
                }
            }
        }
        LogFormat::JsonLines => {
            let reader = BufReader::new(source);
            let mut row = 0usize;
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                row += 1;
                report.total_rows += 1;
                let value: serde_json::Value = match serde_json::from_str(&line) {
                    Ok(v) => v,
                    Err(e) => {
                        report.rejected.push(RejectedRow {
                            row,
                            reason: RejectReason::MalformedLine { detail: e.to_string() },
                        });
                        continue;
                    }
                };
                let obj = match value.as_object() {
                    Some(o) => o,
                    None => {
                        report.rejected.push(RejectedRow {
                            row,
                            reason: RejectReason::MalformedLine {
                                detail: "line is not a json object".into(),
                            },
                        });
                        continue;
                    }
                };
                // render each field to its string form, then share the csv path
                let rendered: Vec<Option<String>> = schema
                    .field_names()
                    .iter()
                    .map(|(_, name)| {
                        obj.get(*name).and_then(|v| match v {
                            serde_json::Value::String(s) => Some(s.clone()),
                            serde_json::Value::Number(n) => Some(n.to_string()),
                            _ => None,
                        })
                    })
                    .collect();
                let mut fields: [Option<&str>; 7] = [None; 7];
                for (slot, r) in rendered.iter().enumerate() {
                    fields[slot] = r.as_deref();
                }
                match assemble_record(&RawRow { fields }, schema, &mut seen) {
                    Ok(r) => records.push(r),
                    Err(reason) => report.rejected.push(RejectedRow { row, reason }),
                }
            }
        }
    }

    report.accepted_count = records.len();
    report.warnings = structural_warnings(&records);
    Ok((records, report))
}

/// Instance-set and cohort-size warnings over parsed records.
fn structural_warnings(records: &[DecisionRecord]) -> Vec<IngestWarning> {
    let mut by_condition: BTreeMap<&str, BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
    for r in records {
        by_condition
            .entry(&r.condition_id)
            .or_default()
            .entry(&r.participant_id)
            .or_default()
            .insert(&r.instance_id);
    }
    let mut warnings = Vec::new();
    for (condition, participants) in &by_condition {
        if participants.len() == 1 {
            warnings.push(IngestWarning::SingleParticipantCondition {
                condition_id: condition.to_string(),
            });
        }
        let reference = participants.values().next();
        if let Some(reference) = reference {
            for (pid, instances) in participants {
                if instances != reference {
                    warnings.push(IngestWarning::UnequalInstanceSet {
                        participant_id: pid.to_string(),
                        condition_id: condition.to_string(),
                    });
                }
            }
        }
    }
    warnings
}

/// What MAD screening is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScreenBasis {
    /// Per-participant mean team loss (default).
    #[default]
    TeamLossMean,
    /// Every raw team prediction, pooled across participants; a participant
    /// falls if any of their predictions is flagged. Regression only.
    RawTeamPredictions,
}

fn team_loss(record: &DecisionRecord) -> f64 {
    match (&record.team, &record.truth) {
        (DecisionValue::Real(d), DecisionValue::Real(t)) => (d - t).abs(),
        (DecisionValue::Label(d), DecisionValue::Label(t)) => {
            if d == t { 0.0 } else { 1.0 }
        }
        _ => f64::NAN, // records from parse_log are kind-consistent
    }
}

/// Removes whole participants: first those whose team decisions exceed
/// `max_value` (regression only), then MAD outliers at `mad_threshold`,
/// re-screening the survivors until the set is stable. Passing neither
/// parameter is the identity. The report names every dropped participant and
/// the rule that removed them.
pub fn screen_participants(
    records: &[DecisionRecord],
    max_value: Option<f64>,
    mad_threshold: Option<f64>,
) -> Result<(Vec<DecisionRecord>, ValidationReport), IngestError> {
    screen_participants_with(records, max_value, mad_threshold, ScreenBasis::TeamLossMean)
}

/// [`screen_participants`] with an explicit MAD basis.
pub fn screen_participants_with(
    records: &[DecisionRecord],
    max_value: Option<f64>,
    mad_threshold: Option<f64>,
    basis: ScreenBasis,
) -> Result<(Vec<DecisionRecord>, ValidationReport), IngestError> {
    if records.is_empty() {
        return Err(IngestError::NoRecords);
    }
    let numeric = records.iter().all(|r| r.team.is_real() && r.truth.is_real());
    if max_value.is_some() && !numeric {
        return Err(IngestError::BadScreen(
            "max_value screening needs real-valued team decisions".into(),
        ));
    }
    if basis == ScreenBasis::RawTeamPredictions && mad_threshold.is_some() && !numeric {
        return Err(IngestError::BadScreen(
            "raw-prediction screening needs real-valued team decisions".into(),
        ));
    }

    let mut report = ValidationReport {
        total_rows: records.len(),
        ..ValidationReport::default()
    };
    let mut dropped: BTreeSet<String> = BTreeSet::new();

    if let Some(limit) = max_value {
        let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
        for r in records {
            if let DecisionValue::Real(v) = r.team {
                let w = worst.entry(&r.participant_id).or_insert(f64::NEG_INFINITY);
                *w = w.max(v);
            }
        }
        for (pid, w) in worst {
            if w > limit {
                dropped.insert(pid.to_string());
                report.dropped_participants.push(DroppedParticipant {
                    participant_id: pid.to_string(),
                    rule: ScreenRule::MaxValueExceeded { limit, worst: w },
                });
            }
        }
    }

    if let Some(threshold) = mad_threshold {
        let mut round = 0usize;
        loop {
            round += 1;
            // participant -> screening values among survivors
            let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for r in records {
                if dropped.contains(r.participant_id.as_str()) {
                    continue;
                }
                let v = match basis {
                    ScreenBasis::TeamLossMean => team_loss(r),
                    ScreenBasis::RawTeamPredictions => match r.team {
                        DecisionValue::Real(v) => v,
                        DecisionValue::Label(_) => unreachable!("checked numeric above"),
                    },
                };
                values.entry(&r.participant_id).or_default().push(v);
            }
            let sample: Vec<(&str, Vec<f64>)> = match basis {
                ScreenBasis::TeamLossMean => values
                    .into_iter()
                    .map(|(pid, vs)| {
                        let mean = vs.iter().sum::<f64>() / vs.len() as f64;
                        (pid, vec![mean])
                    })
                    .collect(),
                ScreenBasis::RawTeamPredictions => values.into_iter().collect(),
            };
            let flat: Vec<f64> = sample.iter().flat_map(|(_, vs)| vs.iter().copied()).collect();
            if sample.len() < 3 {
                report.warnings.push(IngestWarning::ScreeningSkipped {
                    detail: format!(
                        "MAD screening needs at least 3 participants, have {}",
                        sample.len()
                    ),
                });
                break;
            }
            let flags = stats::mad_outliers(&flat, threshold)
                .expect("n >= 3 and positive threshold checked");
            let mut newly_dropped = false;
            let mut offset = 0usize;
            for (pid, vs) in &sample {
                let flagged = flags[offset..offset + vs.len()].iter().any(|&f| f);
                offset += vs.len();
                if flagged {
                    newly_dropped = true;
                    dropped.insert(pid.to_string());
                    report.dropped_participants.push(DroppedParticipant {
                        participant_id: pid.to_string(),
                        rule: match basis {
                            ScreenBasis::TeamLossMean => ScreenRule::MadOutlier { threshold, round },
                            ScreenBasis::RawTeamPredictions => {
                                ScreenRule::MadOutlierRawPrediction { threshold, round }
                            }
                        },
                    });
                }
            }
            if !newly_dropped {
                break;
            }
        }
    }

    let kept: Vec<DecisionRecord> = records
        .iter()
        .filter(|r| !dropped.contains(r.participant_id.as_str()))
        .cloned()
        .collect();
    report.accepted_count = kept.len();
    report.rejected = Vec::new();
    Ok((kept, report))
}

fn value_to_string(v: &DecisionValue) -> String {
    match v {
        // Display for f64 prints the shortest string that parses back to the
        // same bits, so csv round-trips are exact
        DecisionValue::Real(x) => format!("{x}"),
        DecisionValue::Label(s) => s.clone(),
    }
}

/// Writes records in the schema's format; [`parse_log`] on the output yields
/// the identical records.
pub fn write_log<W: Write>(
    records: &[DecisionRecord],
    schema: &LogSchema,
    writer: W,
) -> Result<(), IngestError> {
    schema.validate()?;
    match schema.format {
        LogFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            w.write_record(schema.field_names().iter().map(|(_, n)| *n))?;
            for r in records {
                w.write_record([
                    r.participant_id.as_str(),
                    r.condition_id.as_str(),
                    r.instance_id.as_str(),
                    &value_to_string(&r.truth),
                    &value_to_string(&r.human),
                    &value_to_string(&r.ai),
                    &value_to_string(&r.team),
                ])?;
            }
            w.flush()?;
        }
        LogFormat::JsonLines => {
            let mut w = writer;
            for r in records {
                let mut obj = serde_json::Map::new();
                let ids = [
                    (&schema.participant_id, &r.participant_id),
                    (&schema.condition_id, &r.condition_id),
                    (&schema.instance_id, &r.instance_id),
                ];
                for (name, value) in ids {
                    obj.insert(name.clone(), serde_json::Value::String(value.clone()));
                }
                let values = [
                    (&schema.truth, &r.truth),
                    (&schema.human, &r.human),
                    (&schema.ai, &r.ai),
                    (&schema.team, &r.team),
                ];
                for (name, value) in values {
                    let json = match value {
                        DecisionValue::Real(x) => serde_json::json!(x),
                        DecisionValue::Label(s) => serde_json::Value::String(s.clone()),
                    };
                    obj.insert(name.clone(), json);
                }
                serde_json::to_writer(&mut w, &serde_json::Value::Object(obj))
                    .map_err(|e| IngestError::Io(e.into()))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

impl From<csv::Error> for IngestError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => IngestError::Io(io),
            other => IngestError::InvalidSchema(format!("csv write failed: {other:?}")),
        }
    }
}
