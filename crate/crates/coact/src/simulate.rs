//! Synthetic decision-log generation with controllable asymmetry between the
//! team members.
//!
//! Two generators mirror the two classic study designs. The regression
//! scenario draws house-price-like truths from a clipped log-normal and gives
//! each member additive Laplace noise sized to an MAE target; an optional
//! second condition re-runs every participant with a lower human MAE (an
//! analog of giving humans extra contextual information). The classification
//! scenario plants a joint error table over (human errs, AI errs) where the
//! `error_overlap` knob sets how much the AI's errors coincide with the
//! human's — lower overlap means more complementary members.
//!
//! Determinism is a contract: participant k always draws from stream k of a
//! counter-based generator seeded by the scenario, and truths from stream 0,
//! so output is identical run-to-run, participants could be generated in
//! parallel without changing it, and two scenarios differing only in a
//! treatment parameter stay instance-by-instance paired (common random
//! numbers).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::domain::{DecisionRecord, DecisionValue};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("calibration infeasible: {0}")]
    Infeasible(String),
}

/// How the team decision is formed from the two individual ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegrationPolicy {
    /// Team = w·ai + (1−w)·human with w ~ Beta, parameterized by its mean and
    /// concentration. The team decision always lands between the two
    /// individual decisions (inclusive).
    ConvexBlend { ai_weight_mean: f64, concentration: f64 },
    /// Team adopts the AI's decision with probability `ai_prob`, else the
    /// human's; it is always one of the two.
    PickOne { ai_prob: f64 },
}

impl IntegrationPolicy {
    fn validate(&self) -> Result<(), SimulateError> {
        let bad = |msg: String| Err(SimulateError::InvalidScenario(msg));
        match *self {
            IntegrationPolicy::ConvexBlend { ai_weight_mean, concentration } => {
                if !(0.0..=1.0).contains(&ai_weight_mean) {
                    return bad(format!("ai_weight_mean must be in [0,1], got {ai_weight_mean}"));
                }
                if !(concentration > 0.0) {
                    return bad(format!("concentration must be positive, got {concentration}"));
                }
                Ok(())
            }
            IntegrationPolicy::PickOne { ai_prob } => {
                if !(0.0..=1.0).contains(&ai_prob) {
                    return bad(format!("ai_prob must be in [0,1], got {ai_prob}"));
                }
                Ok(())
            }
        }
    }
}

/// How the simulated human handles the AI's recommendation in the
/// classification setting. On agreement the shared label is always kept. On
/// disagreement the AI label is adopted with `p_adopt_when_disagree`, raised
/// by `difficulty_boost` on instances the human got wrong themselves (a crude
/// stand-in for "harder for the human → leans on the AI more").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliancePolicy {
    pub p_adopt_when_disagree: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty_boost: Option<f64>,
}

impl ReliancePolicy {
    fn validate(&self) -> Result<(), SimulateError> {
        if !(0.0..=1.0).contains(&self.p_adopt_when_disagree) {
            return Err(SimulateError::InvalidScenario(format!(
                "p_adopt_when_disagree must be in [0,1], got {}",
                self.p_adopt_when_disagree
            )));
        }
        if let Some(b) = self.difficulty_boost {
            if !(0.0..=1.0).contains(&b) {
                return Err(SimulateError::InvalidScenario(format!(
                    "difficulty_boost must be in [0,1], got {b}"
                )));
            }
        }
        Ok(())
    }
}

/// A real-valued estimation task: truths from a log-normal clipped to
/// `[truth_min, truth_max]` and calibrated to `truth_mean`; member
/// predictions are truth plus zero-median Laplace noise whose scale equals
/// the MAE target. When `uhci_human_mae_target` is set, a second condition
/// (`uhci`) is emitted with every participant re-run at the lower human
/// noise level, paired draw-for-draw with the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionScenario {
    pub n_participants: usize,
    pub n_instances: usize,
    pub truth_min: f64,
    pub truth_max: f64,
    pub truth_mean: f64,
    pub ai_mae_target: f64,
    /// May be 0: a noise-free, perfectly accurate human.
    pub human_mae_target: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uhci_human_mae_target: Option<f64>,
    pub integration: IntegrationPolicy,
    pub seed: u64,
}

impl RegressionScenario {
    pub fn validate(&self) -> Result<(), SimulateError> {
        let bad = |msg: String| Err(SimulateError::InvalidScenario(msg));
        if self.n_participants < 2 {
            return bad("need at least 2 participants".into());
        }
        if self.n_instances == 0 {
            return bad("need at least 1 instance".into());
        }
        if !(self.truth_min > 0.0) {
            return bad(format!("truth_min must be positive, got {}", self.truth_min));
        }
        if !(self.truth_min < self.truth_mean && self.truth_mean < self.truth_max) {
            return bad(format!(
                "need truth_min < truth_mean < truth_max, got {} / {} / {}",
                self.truth_min, self.truth_mean, self.truth_max
            ));
        }
        let width = self.truth_max - self.truth_min;
        let mut targets = vec![("ai_mae_target", self.ai_mae_target),
                               ("human_mae_target", self.human_mae_target)];
        if let Some(u) = self.uhci_human_mae_target {
            targets.push(("uhci_human_mae_target", u));
        }
        for (name, t) in targets {
            if !(t >= 0.0) {
                return bad(format!("{name} must be non-negative, got {t}"));
            }
            if t > width {
                return Err(SimulateError::Infeasible(format!(
                    "{name} = {t} exceeds the truth range width {width}"
                )));
            }
        }
        self.integration.validate()
    }
}

/// A label-choice task. The joint per-instance error table is induced by the
/// two marginal error rates and `error_overlap` = P(AI errs | human errs):
/// lower overlap means the AI fails on different instances than the human —
/// the capability-asymmetry knob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScenario {
    pub n_participants: usize,
    pub n_instances: usize,
    pub n_classes: usize,
    pub ai_error_target: f64,
    pub human_error_target: f64,
    pub error_overlap: f64,
    pub reliance: ReliancePolicy,
    pub seed: u64,
    /// Condition label on the emitted records; defaults to `baseline`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_id: Option<String>,
}

/// The per-instance joint error probabilities implied by a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointErrorTable {
    pub both: f64,
    pub human_only: f64,
    pub ai_only: f64,
    pub neither: f64,
}

impl ClassificationScenario {
    pub fn validate(&self) -> Result<(), SimulateError> {
        let bad = |msg: String| Err(SimulateError::InvalidScenario(msg));
        if self.n_participants < 2 {
            return bad("need at least 2 participants".into());
        }
        if self.n_instances == 0 {
            return bad("need at least 1 instance".into());
        }
        if self.n_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.n_classes));
        }
        for (name, v) in [
            ("ai_error_target", self.ai_error_target),
            ("human_error_target", self.human_error_target),
            ("error_overlap", self.error_overlap),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0,1], got {v}"));
            }
        }
        self.reliance.validate()?;
        self.joint_table().map(|_| ())
    }

    /// The joint table, or an error when the three rates are inconsistent
    /// (e.g. more overlap than the AI's total error budget allows).
    pub fn joint_table(&self) -> Result<JointErrorTable, SimulateError> {
        let h = self.human_error_target;
        let a = self.ai_error_target;
        let both = h * self.error_overlap;
        let table = JointErrorTable {
            both,
            human_only: h - both,
            ai_only: a - both,
            neither: 1.0 - h - a + both,
        };
        for (name, p) in [
            ("P(both err)", table.both),
            ("P(human only)", table.human_only),
            ("P(ai only)", table.ai_only),
            ("P(neither)", table.neither),
        ] {
            if p < -1e-12 {
                return Err(SimulateError::Infeasible(format!(
                    "{name} = {p:.6} is negative; adjust error targets or overlap"
                )));
            }
        }
        Ok(table)
    }
}

fn participant_width(n: usize) -> usize {
    n.max(1).to_string().len()
}

fn instance_ids(n: usize) -> Vec<String> {
    let width = participant_width(n);
    (1..=n).map(|i| format!("i{i:0width$}")).collect()
}

/// Stream layout: truths on stream 0, participant k on stream k.
fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform draw nudged into the open interval (0,1) so inverse-CDF transforms
/// stay finite.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen::<f64>().clamp(1e-300, 1.0 - 1e-16)
}

/// Inverse-CDF Laplace sample with E|X| = scale; consumes exactly one draw.
fn laplace(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let u = open_unit(rng);
    if scale == 0.0 {
        0.0
    } else if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}

/// Mean of a LogNormal(mu, sigma) truncated to [a, b].
fn truncated_lognormal_mean(mu: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    let alpha = (a.ln() - mu) / sigma;
    let beta = (b.ln() - mu) / sigma;
    let mass = n.cdf(beta) - n.cdf(alpha);
    let shifted = n.cdf(beta - sigma) - n.cdf(alpha - sigma);
    (mu + sigma * sigma / 2.0).exp() * shifted / mass
}

/// Calibrates the log-scale sigma (with mu fixed at the log-midpoint of the
/// range) so the truncated mean hits the target; bisection, since the
/// truncated mean rises monotonically in sigma from the geometric mean of the
/// bounds toward the 1/x-density limit.
fn calibrate_sigma(min: f64, max: f64, target_mean: f64) -> Result<(f64, f64), SimulateError> {
    let mu = (min.ln() + max.ln()) / 2.0;
    let (mut lo, mut hi) = (1e-6, 30.0);
    let mean_lo = truncated_lognormal_mean(mu, lo, min, max);
    let mean_hi = truncated_lognormal_mean(mu, hi, min, max);
    if target_mean <= mean_lo || target_mean >= mean_hi {
        return Err(SimulateError::Infeasible(format!(
            "truth_mean {target_mean} is outside the achievable range \
             ({mean_lo:.1}, {mean_hi:.1}) for bounds [{min}, {max}]"
        )));
    }
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if truncated_lognormal_mean(mu, mid, min, max) < target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((mu, (lo + hi) / 2.0))
}

fn sample_truncated_lognormal(
    rng: &mut ChaCha8Rng,
    mu: f64,
    sigma: f64,
    a: f64,
    b: f64,
) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    let c_lo = n.cdf((a.ln() - mu) / sigma);
    let c_hi = n.cdf((b.ln() - mu) / sigma);
    let u = c_lo + open_unit(rng) * (c_hi - c_lo);
    (mu + sigma * n.inverse_cdf(u.clamp(1e-300, 1.0 - 1e-16))).exp().clamp(a, b)
}

/// Generates the regression log: condition `baseline`, plus condition `uhci`
/// re-running the same participants with the lower human noise when
/// requested. Same scenario, same bytes, every time.
pub fn simulate_regression_team(
    scenario: &RegressionScenario,
) -> Result<Vec<DecisionRecord>, SimulateError> {
    scenario.validate()?;
    let (mu, sigma) = calibrate_sigma(scenario.truth_min, scenario.truth_max, scenario.truth_mean)?;

    let mut truth_rng = stream(scenario.seed, 0);
    let truths: Vec<f64> = (0..scenario.n_instances)
        .map(|_| {
            sample_truncated_lognormal(
                &mut truth_rng,
                mu,
                sigma,
                scenario.truth_min,
                scenario.truth_max,
            )
        })
        .collect();
    let ids = instance_ids(scenario.n_instances);
    let p_width = participant_width(scenario.n_participants);

    let mut conditions = vec![("baseline", scenario.human_mae_target)];
    if let Some(uhci) = scenario.uhci_human_mae_target {
        conditions.push(("uhci", uhci));
    }

    let mut records =
        Vec::with_capacity(conditions.len() * scenario.n_participants * scenario.n_instances);
    for (condition, human_scale) in conditions {
        for k in 1..=scenario.n_participants {
            // a fresh stream per participant per condition: the baseline and
            // uhci runs of participant k consume identical draws, so the two
            // conditions differ only through the human noise scale
            let mut rng = stream(scenario.seed, k as u64);
            let pid = format!("p{k:0p_width$}");
            for (i, &truth) in truths.iter().enumerate() {
                let ai = truth + laplace(&mut rng, scenario.ai_mae_target);
                let human = truth + laplace(&mut rng, human_scale);
                let team = match scenario.integration {
                    IntegrationPolicy::ConvexBlend { ai_weight_mean, concentration } => {
                        let w = if ai_weight_mean == 0.0 || ai_weight_mean == 1.0 {
                            ai_weight_mean
                        } else {
                            let alpha = ai_weight_mean * concentration;
                            let beta = (1.0 - ai_weight_mean) * concentration;
                            Beta::new(alpha, beta)
                                .expect("validated blend parameters")
                                .sample(&mut rng)
                        };
                        w * ai + (1.0 - w) * human
                    }
                    IntegrationPolicy::PickOne { ai_prob } => {
                        if rng.gen::<f64>() < ai_prob { ai } else { human }
                    }
                };
                records.push(DecisionRecord {
                    participant_id: pid.clone(),
                    condition_id: condition.to_string(),
                    instance_id: ids[i].clone(),
                    truth: DecisionValue::Real(truth),
                    human: DecisionValue::Real(human),
                    ai: DecisionValue::Real(ai),
                    team: DecisionValue::Real(team),
                });
            }
        }
    }
    Ok(records)
}

/// Generates the classification log. Per (participant, instance) the joint
/// error cell, both members' wrong labels, and the reliance draw consume a
/// fixed four draws, so two scenarios differing only in `error_overlap` (or
/// reliance) stay paired draw-for-draw under the same seed.
/// The label alphabet a classification scenario emits: `c00`, `c01`, …
/// zero-padded to the class count's width. Exposed so a log schema can be
/// built to match.
pub fn class_labels(n_classes: usize) -> Vec<String> {
    let width = n_classes.to_string().len();
    (0..n_classes).map(|c| format!("c{c:0width$}")).collect()
}

pub fn simulate_classification_team(
    scenario: &ClassificationScenario,
) -> Result<Vec<DecisionRecord>, SimulateError> {
    scenario.validate()?;
    let table = scenario.joint_table()?;
    let labels = class_labels(scenario.n_classes);
    // truths round-robin over the classes: evenly distributed, no draws
    let truth_idx: Vec<usize> = (0..scenario.n_instances)
        .map(|i| i % scenario.n_classes)
        .collect();
    let ids = instance_ids(scenario.n_instances);
    let p_width = participant_width(scenario.n_participants);
    let condition = scenario.condition_id.clone().unwrap_or_else(|| "baseline".into());

    let wrong_label = |u: f64, truth: usize, n_classes: usize| -> usize {
        let pick = (u * (n_classes - 1) as f64) as usize;
        let pick = pick.min(n_classes - 2);
        if pick >= truth { pick + 1 } else { pick }
    };

    let mut records = Vec::with_capacity(scenario.n_participants * scenario.n_instances);
    for k in 1..=scenario.n_participants {
        let mut rng = stream(scenario.seed, k as u64);
        let pid = format!("p{k:0p_width$}");
        for (i, &truth) in truth_idx.iter().enumerate() {
            let u_cell = rng.gen::<f64>();
            let u_label_h = rng.gen::<f64>();
            let u_label_ai = rng.gen::<f64>();
            let u_rely = rng.gen::<f64>();

            let (human_errs, ai_errs) = if u_cell < table.both {
                (true, true)
            } else if u_cell < table.both + table.human_only {
                (true, false)
            } else if u_cell < table.both + table.human_only + table.ai_only {
                (false, true)
            } else {
                (false, false)
            };
            let human = if human_errs {
                wrong_label(u_label_h, truth, scenario.n_classes)
            } else {
                truth
            };
            let ai = if ai_errs {
                wrong_label(u_label_ai, truth, scenario.n_classes)
            } else {
                truth
            };
            let team = if human == ai {
                human
            } else {
                let mut p = scenario.reliance.p_adopt_when_disagree;
                if human_errs {
                    p = (p + scenario.reliance.difficulty_boost.unwrap_or(0.0)).min(1.0);
                }
                if u_rely < p { ai } else { human }
            };
            records.push(DecisionRecord {
                participant_id: pid.clone(),
                condition_id: condition.clone(),
                instance_id: ids[i].clone(),
                truth: DecisionValue::Label(labels[truth].clone()),
                human: DecisionValue::Label(labels[human].clone()),
                ai: DecisionValue::Label(labels[ai].clone()),
                team: DecisionValue::Label(labels[team].clone()),
            });
        }
    }
    Ok(records)
}
