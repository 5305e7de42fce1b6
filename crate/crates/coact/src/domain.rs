//! Core data model for two-member decision-making teams.
//!
//! A task is a set of instances with known ground truth. For every instance a
//! human, an AI model, and the combined team each produce one decision. A loss
//! function turns a (decision, truth) pair into a non-negative number, and a
//! [`ParticipantProfile`] stores those per-instance losses for one participant.
//! Everything downstream (the complementarity decomposition, condition
//! summaries, significance tests) consumes profiles only, so alternative loss
//! functions can be plugged in here without touching the metric definitions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while building or validating the decision model.
#[derive(Debug, Error)]
pub enum DomainError {
    #[error("decision value for {context} is not finite")]
    NonFiniteValue { context: String },
    #[error("loss kind {kind:?} cannot score a {got} decision (record {context})")]
    KindMismatch {
        kind: LossKind,
        got: &'static str,
        context: String,
    },
    #[error("records mix real-valued and categorical decisions (first offender: {context})")]
    MixedKinds { context: String },
    #[error("label {label:?} is not in the declared label set (record {context})")]
    UnknownLabel { label: String, context: String },
    #[error("profile for participant {participant_id:?} has no instances")]
    EmptyProfile { participant_id: String },
    #[error("loss for instance {instance_id:?} is negative or non-finite")]
    InvalidLoss { instance_id: String },
    #[error("duplicate (participant, instance) pair: ({participant_id:?}, {instance_id:?})")]
    DuplicateInstance {
        participant_id: String,
        instance_id: String,
    },
}

/// A single decision: either a real-valued prediction (in task units) or a
/// categorical label from the task's label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DecisionValue {
    Real(f64),
    Label(String),
}

impl DecisionValue {
    pub fn real(value: f64, context: &str) -> Result<Self, DomainError> {
        if value.is_finite() {
            Ok(DecisionValue::Real(value))
        } else {
            Err(DomainError::NonFiniteValue {
                context: context.to_string(),
            })
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DecisionValue::Real(_) => "real",
            DecisionValue::Label(_) => "categorical",
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, DecisionValue::Real(_))
    }
}

/// One row of a decision log: what the truth was and what the human, the AI,
/// and the integrated team each decided for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub participant_id: String,
    pub condition_id: String,
    pub instance_id: String,
    pub truth: DecisionValue,
    pub human: DecisionValue,
    pub ai: DecisionValue,
    pub team: DecisionValue,
}

impl DecisionRecord {
    /// All four decision values must share one kind.
    pub fn validate_kinds(&self) -> Result<(), DomainError> {
        let want = self.truth.is_real();
        for v in [&self.human, &self.ai, &self.team] {
            if v.is_real() != want {
                return Err(DomainError::MixedKinds {
                    context: format!("{}/{}", self.participant_id, self.instance_id),
                });
            }
        }
        Ok(())
    }
}

/// The decision roles within one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Human,
    Ai,
    Team,
}

/// How a decision is scored against the truth.
///
/// `AbsoluteError` applies to real-valued decisions only, `ZeroOne` to
/// categorical decisions only. Real-valued equality is deliberately not
/// scored with `ZeroOne`; floating-point equality semantics are rejected at
/// validation instead of being defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    AbsoluteError,
    ZeroOne,
}

/// Per-instance loss of one decision against the truth.
///
/// Absolute error returns `|decision - truth|`; zero-one returns 0 for a
/// matching label and 1 otherwise.
pub fn instance_loss(
    kind: LossKind,
    decision: &DecisionValue,
    truth: &DecisionValue,
    context: &str,
) -> Result<f64, DomainError> {
    match (kind, decision, truth) {
        (LossKind::AbsoluteError, DecisionValue::Real(d), DecisionValue::Real(t)) => {
            Ok((d - t).abs())
        }
        (LossKind::ZeroOne, DecisionValue::Label(d), DecisionValue::Label(t)) => {
            Ok(if d == t { 0.0 } else { 1.0 })
        }
        (kind, decision, _) => Err(DomainError::KindMismatch {
            kind,
            got: decision.kind_name(),
            context: context.to_string(),
        }),
    }
}

/// Per-instance loss triple for one participant: how far the human, the AI,
/// and the team landed from the truth on that instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceLosses {
    pub instance_id: String,
    pub human: f64,
    pub ai: f64,
    pub team: f64,
}

impl InstanceLosses {
    pub fn loss(&self, role: Role) -> f64 {
        match role {
            Role::Human => self.human,
            Role::Ai => self.ai,
            Role::Team => self.team,
        }
    }
}

/// All per-instance losses of one participant on one task, in instance order.
///
/// Immutable after construction; every operation on it is pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub participant_id: String,
    pub condition_id: String,
    pub instances: Vec<InstanceLosses>,
}

impl ParticipantProfile {
    /// Builds a profile, rejecting empty instance lists and invalid losses.
    pub fn new(
        participant_id: impl Into<String>,
        condition_id: impl Into<String>,
        instances: Vec<InstanceLosses>,
    ) -> Result<Self, DomainError> {
        let participant_id = participant_id.into();
        if instances.is_empty() {
            return Err(DomainError::EmptyProfile { participant_id });
        }
        for inst in &instances {
            for l in [inst.human, inst.ai, inst.team] {
                if !l.is_finite() || l < 0.0 {
                    return Err(DomainError::InvalidLoss {
                        instance_id: inst.instance_id.clone(),
                    });
                }
            }
        }
        Ok(ParticipantProfile {
            participant_id,
            condition_id: condition_id.into(),
            instances,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Overall loss of a role: the average of its per-instance losses.
    ///
    /// Always the average, never the sum; summation runs left to right in
    /// instance order so parallel callers see identical floating-point
    /// results.
    pub fn overall_loss(&self, role: Role) -> f64 {
        let sum: f64 = self.instances.iter().map(|i| i.loss(role)).sum();
        sum / self.instances.len() as f64
    }
}

/// Warnings produced while grouping records into profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileWarning {
    /// A participant's instance set differs from the first participant's.
    UnequalInstanceSet { participant_id: String },
}

/// One profile per participant, with per-instance losses scored by `kind`.
///
/// Grouping is deterministic: participants are ordered by id, instances stay
/// in first-seen order per participant. Participants whose instance set
/// differs from the reference participant's are kept but flagged with a
/// warning, mirroring how unbalanced experiment exports are usually handled.
pub fn build_profiles(
    records: &[DecisionRecord],
    kind: LossKind,
) -> Result<(Vec<ParticipantProfile>, Vec<ProfileWarning>), DomainError> {
    let mut grouped: BTreeMap<(String, String), Vec<InstanceLosses>> = BTreeMap::new();
    for rec in records {
        rec.validate_kinds()?;
        let context = format!("{}/{}", rec.participant_id, rec.instance_id);
        let expects_real = matches!(kind, LossKind::AbsoluteError);
        if rec.truth.is_real() != expects_real {
            return Err(DomainError::KindMismatch {
                kind,
                got: rec.truth.kind_name(),
                context,
            });
        }
        let losses = InstanceLosses {
            instance_id: rec.instance_id.clone(),
            human: instance_loss(kind, &rec.human, &rec.truth, &context)?,
            ai: instance_loss(kind, &rec.ai, &rec.truth, &context)?,
            team: instance_loss(kind, &rec.team, &rec.truth, &context)?,
        };
        let entry = grouped
            .entry((rec.participant_id.clone(), rec.condition_id.clone()))
            .or_default();
        if entry.iter().any(|i| i.instance_id == rec.instance_id) {
            return Err(DomainError::DuplicateInstance {
                participant_id: rec.participant_id.clone(),
                instance_id: rec.instance_id.clone(),
            });
        }
        entry.push(losses);
    }

    let mut profiles = Vec::with_capacity(grouped.len());
    for ((participant_id, condition_id), instances) in grouped {
        profiles.push(ParticipantProfile::new(
            participant_id,
            condition_id,
            instances,
        )?);
    }

    let mut warnings = Vec::new();
    if let Some(first) = profiles.first() {
        let reference: Vec<&str> = {
            let mut ids: Vec<&str> = first.instances.iter().map(|i| i.instance_id.as_str()).collect();
            ids.sort_unstable();
            ids
        };
        for p in &profiles {
            let mut ids: Vec<&str> = p.instances.iter().map(|i| i.instance_id.as_str()).collect();
            ids.sort_unstable();
            if ids != reference {
                warnings.push(ProfileWarning::UnequalInstanceSet {
                    participant_id: p.participant_id.clone(),
                });
            }
        }
    }
    Ok((profiles, warnings))
}
