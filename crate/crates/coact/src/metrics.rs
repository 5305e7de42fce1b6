//! The complementarity decomposition.
//!
//! For one participant's profile the module answers three questions. Did the
//! team strictly beat its better member (complementary team performance)?
//! How much loss could the pairing remove at best (complementarity potential,
//! split into an inherent part reachable by picking the per-instance better
//! decision and a collaborative part requiring decisions neither member
//! proposed)? And how much of that was actually realized (complementarity
//! effect, same split, where the collaborative part can go negative when the
//! collaboration hurt)?
//!
//! Both splits are additive: `cp_inh + cp_coll = cp = min(L_H, L_AI)` and
//! `ce_inh + ce_coll = ce = min(L_H, L_AI) - L_I`, which the property tests
//! pin down. All sums run left to right in instance order, so results are
//! reproducible bit-for-bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{InstanceLosses, ParticipantProfile, Role};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("profiles disagree on the instance set (participant {participant_id:?})")]
    MismatchedInstances { participant_id: String },
    #[error("no profiles given")]
    NoProfiles,
}

/// One of the two individual team members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Member {
    Human,
    Ai,
}

impl Member {
    pub fn role(self) -> Role {
        match self {
            Member::Human => Role::Human,
            Member::Ai => Role::Ai,
        }
    }

    pub fn other(self) -> Member {
        match self {
            Member::Human => Member::Ai,
            Member::Ai => Member::Human,
        }
    }
}

/// How one (participant, instance) cell played out, relative to that
/// participant's overall better member T*.
///
/// With T* = AI the five cases partition all loss orderings:
/// `l_I > l_AI` is `NegativeCollaborative`, `l_I = l_AI` is `Neutral`,
/// `l_AI > l_I >= l_H` is `PartialInherent`, `l_AI > l_H > l_I` is
/// `FullInherent`, and `l_H >= l_AI > l_I` is `PositiveCollaborative`
/// (the mirror image applies when T* = H).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioTag {
    PartialInherent,
    FullInherent,
    NegativeCollaborative,
    PositiveCollaborative,
    Neutral,
}

/// The full decomposition for one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityBreakdown {
    pub participant_id: String,
    pub condition_id: String,
    pub n_instances: usize,
    /// The overall individually better member; ties go to the AI.
    pub t_star: Member,
    pub l_human: f64,
    pub l_ai: f64,
    pub l_team: f64,
    /// Complementary team performance: team strictly beats both members.
    pub ctp: bool,
    pub cp: f64,
    pub cp_inh: f64,
    pub cp_coll: f64,
    pub ce: f64,
    pub ce_inh: f64,
    pub ce_coll: f64,
    /// ce_inh / cp_inh; absent when there is no inherent potential.
    pub realization_ratio: Option<f64>,
}

/// Per-instance view across participants: mean losses, one scenario tag per
/// participant, and whether the mean team loss beat both mean individual
/// losses on this instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEffectRow {
    pub instance_id: String,
    pub mean_l_human: f64,
    pub mean_l_ai: f64,
    pub mean_l_team: f64,
    pub tags: Vec<(String, ScenarioTag)>,
    pub positive_coll_flag: bool,
}

/// The overall individually better member: AI when `L_AI <= L_H`, else the
/// human. The tie goes to the AI deliberately; it is the reference member
/// everywhere, so the choice must be fixed and documented.
pub fn determine_tstar(profile: &ParticipantProfile) -> Member {
    if profile.overall_loss(Role::Ai) <= profile.overall_loss(Role::Human) {
        Member::Ai
    } else {
        Member::Human
    }
}

/// True iff the team's overall loss is strictly below both individual overall
/// losses. Equality does not count.
pub fn ctp(profile: &ParticipantProfile) -> bool {
    let l_team = profile.overall_loss(Role::Team);
    l_team < profile.overall_loss(Role::Human).min(profile.overall_loss(Role::Ai))
}

/// Complementarity potential: the overall loss of the better member, i.e., the
/// most loss a perfect collaboration could remove.
pub fn cp(profile: &ParticipantProfile) -> f64 {
    profile
        .overall_loss(Role::Human)
        .min(profile.overall_loss(Role::Ai))
}

fn cp_inh_term(t_star: Member, l: &InstanceLosses) -> f64 {
    match t_star {
        Member::Ai => (l.ai - l.human).max(0.0),
        Member::Human => (l.human - l.ai).max(0.0),
    }
}

/// Splits the potential into its inherent part (per-instance advantages of the
/// overall weaker member) and its collaborative part (the per-instance minimum
/// loss, removable only by decisions differing from both members').
pub fn cp_split(profile: &ParticipantProfile) -> (f64, f64) {
    cp_split_for(profile, determine_tstar(profile))
}

fn cp_split_for(profile: &ParticipantProfile, t_star: Member) -> (f64, f64) {
    let n = profile.len() as f64;
    let inh: f64 = profile
        .instances
        .iter()
        .map(|l| cp_inh_term(t_star, l))
        .sum();
    let coll: f64 = profile.instances.iter().map(|l| l.human.min(l.ai)).sum();
    (inh / n, coll / n)
}

/// Complementarity effect: how much better the team did than the better
/// member. Negative when the collaboration made things worse.
pub fn ce(profile: &ParticipantProfile) -> f64 {
    cp(profile) - profile.overall_loss(Role::Team)
}

fn ce_inh_term(t_star: Member, l: &InstanceLosses) -> f64 {
    match t_star {
        Member::Ai if l.ai > l.team && l.team >= l.human => l.ai - l.team,
        Member::Ai if l.ai > l.human && l.human > l.team => l.ai - l.human,
        Member::Human if l.human > l.team && l.team >= l.ai => l.human - l.team,
        Member::Human if l.human > l.ai && l.ai > l.team => l.human - l.ai,
        _ => 0.0,
    }
}

fn ce_coll_term(t_star: Member, l: &InstanceLosses) -> f64 {
    if l.ai >= l.human && l.human > l.team {
        l.human - l.team
    } else if l.human > l.ai && l.ai > l.team {
        l.ai - l.team
    } else if t_star == Member::Ai && l.team > l.ai {
        l.ai - l.team
    } else if t_star == Member::Human && l.team > l.human {
        l.human - l.team
    } else {
        0.0
    }
}

/// Splits the effect into realized inherent potential (never negative) and the
/// collaborative remainder (negative when the team fell behind the reference
/// member on instances it should have left alone).
///
/// The first two collaborative cases apply regardless of which member is
/// better overall; the two negative cases are conditioned on T*. All
/// inequalities are strict exactly where stated, including the boundary
/// `l_I = l_AI` contributing nothing.
pub fn ce_split(profile: &ParticipantProfile) -> (f64, f64) {
    ce_split_for(profile, determine_tstar(profile))
}

fn ce_split_for(profile: &ParticipantProfile, t_star: Member) -> (f64, f64) {
    let n = profile.len() as f64;
    let inh: f64 = profile
        .instances
        .iter()
        .map(|l| ce_inh_term(t_star, l))
        .sum();
    let coll: f64 = profile
        .instances
        .iter()
        .map(|l| ce_coll_term(t_star, l))
        .sum();
    (inh / n, coll / n)
}

/// Scenario classification of a single instance for a participant whose
/// overall better member is `t_star`.
pub fn scenario_tag(t_star: Member, l: &InstanceLosses) -> ScenarioTag {
    let (better, worse) = match t_star {
        Member::Ai => (l.ai, l.human),
        Member::Human => (l.human, l.ai),
    };
    if l.team > better {
        ScenarioTag::NegativeCollaborative
    } else if l.team == better {
        ScenarioTag::Neutral
    } else if l.team >= worse {
        ScenarioTag::PartialInherent
    } else if better > worse {
        ScenarioTag::FullInherent
    } else {
        ScenarioTag::PositiveCollaborative
    }
}

/// One instance's contribution to a participant's effect split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEffect {
    pub instance_id: String,
    pub tag: ScenarioTag,
    /// Contribution to ce_inh before the 1/N averaging; never negative.
    pub ce_inh_term: f64,
    /// Contribution to ce_coll before the 1/N averaging; negative when the
    /// collaboration lost ground on this instance.
    pub ce_coll_term: f64,
}

/// Per-instance effect contributions and scenario tags for one participant,
/// using the participant's own T*.
pub fn instance_effects(profile: &ParticipantProfile) -> Vec<InstanceEffect> {
    let t_star = determine_tstar(profile);
    profile
        .instances
        .iter()
        .map(|l| InstanceEffect {
            instance_id: l.instance_id.clone(),
            tag: scenario_tag(t_star, l),
            ce_inh_term: ce_inh_term(t_star, l),
            ce_coll_term: ce_coll_term(t_star, l),
        })
        .collect()
}

/// The full decomposition for one participant, with T* determined from the
/// participant's own overall losses.
pub fn breakdown(profile: &ParticipantProfile) -> ComplementarityBreakdown {
    breakdown_for(profile, determine_tstar(profile))
}

/// Like [`breakdown`], but with the reference member forced, for sensitivity
/// analyses that fix T* globally per condition instead of per participant.
/// `cp` and `ce` are then taken relative to the forced member (so both
/// additivity identities still hold); `ctp` keeps its strict min-based
/// definition.
pub fn breakdown_with_tstar(
    profile: &ParticipantProfile,
    t_star: Member,
) -> ComplementarityBreakdown {
    breakdown_for(profile, t_star)
}

fn breakdown_for(profile: &ParticipantProfile, t_star: Member) -> ComplementarityBreakdown {
    let l_human = profile.overall_loss(Role::Human);
    let l_ai = profile.overall_loss(Role::Ai);
    let l_team = profile.overall_loss(Role::Team);
    let cp = profile.overall_loss(t_star.role());
    let (cp_inh, cp_coll) = cp_split_for(profile, t_star);
    let ce = cp - l_team;
    let (ce_inh, ce_coll) = ce_split_for(profile, t_star);
    ComplementarityBreakdown {
        participant_id: profile.participant_id.clone(),
        condition_id: profile.condition_id.clone(),
        n_instances: profile.len(),
        t_star,
        l_human,
        l_ai,
        l_team,
        ctp: ctp(profile),
        cp,
        cp_inh,
        cp_coll,
        ce,
        ce_inh,
        ce_coll,
        realization_ratio: if cp_inh > 0.0 { Some(ce_inh / cp_inh) } else { None },
    }
}

/// One row per instance across participants: participant-mean losses per role,
/// each participant's scenario tag, and a flag marking instances whose mean
/// team loss strictly beats both mean individual losses.
///
/// All profiles must share one instance set; rows come out in the first
/// profile's instance order.
pub fn per_instance_table(
    profiles: &[ParticipantProfile],
) -> Result<Vec<InstanceEffectRow>, MetricsError> {
    let first = profiles.first().ok_or(MetricsError::NoProfiles)?;
    for p in profiles {
        let same = p.len() == first.len()
            && p.instances
                .iter()
                .zip(&first.instances)
                .all(|(a, b)| a.instance_id == b.instance_id);
        if !same {
            return Err(MetricsError::MismatchedInstances {
                participant_id: p.participant_id.clone(),
            });
        }
    }
    let t_stars: Vec<Member> = profiles.iter().map(determine_tstar).collect();
    let n = profiles.len() as f64;
    let mut rows = Vec::with_capacity(first.len());
    for idx in 0..first.len() {
        let mean_l_human: f64 =
            profiles.iter().map(|p| p.instances[idx].human).sum::<f64>() / n;
        let mean_l_ai: f64 = profiles.iter().map(|p| p.instances[idx].ai).sum::<f64>() / n;
        let mean_l_team: f64 = profiles.iter().map(|p| p.instances[idx].team).sum::<f64>() / n;
        let tags = profiles
            .iter()
            .zip(&t_stars)
            .map(|(p, &t)| (p.participant_id.clone(), scenario_tag(t, &p.instances[idx])))
            .collect();
        rows.push(InstanceEffectRow {
            instance_id: first.instances[idx].instance_id.clone(),
            mean_l_human,
            mean_l_ai,
            mean_l_team,
            tags,
            positive_coll_flag: mean_l_team < mean_l_human.min(mean_l_ai),
        });
    }
    Ok(rows)
}

/// The guide's running example as a profile: 25 zero-one decisions where the
/// AI errs on 13 instances, the human on 15, both on 5 of those, and the team
/// on 9 — it fixes 3 of the AI's solo errors and 3 of the shared ones while
/// newly fumbling 2 instances the AI had right.
///
/// Its decomposition comes out to cp = 0.52 (inh 0.32, coll 0.20) and
/// ce = 0.16 (inh 0.12, coll 0.04); in counts over the 25 instances that is a
/// potential of 13 (8 + 5) and an effect of 4 (3 + 1).
pub fn worked_example_profile() -> ParticipantProfile {
    // (human, ai, team) error counts per bucket, in instance order:
    //   8x human right / AI wrong   (team fixes 3)
    //  10x human wrong / AI right   (team newly errs on 2)
    //   5x both wrong               (team fixes 3)
    //   2x both right
    let mut buckets: Vec<(u32, f64, f64, Vec<f64>)> = Vec::new();
    buckets.push((8, 0.0, 1.0, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]));
    buckets.push((
        10,
        1.0,
        0.0,
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0],
    ));
    buckets.push((5, 1.0, 1.0, vec![0.0, 0.0, 0.0, 1.0, 1.0]));
    buckets.push((2, 0.0, 0.0, vec![0.0, 0.0]));

    let mut instances = Vec::with_capacity(25);
    let mut id = 0;
    for (count, human, ai, team) in buckets {
        for k in 0..count as usize {
            id += 1;
            instances.push(InstanceLosses {
                instance_id: format!("i{id:02}"),
                human,
                ai,
                team: team[k],
            });
        }
    }
    ParticipantProfile::new("example", "example", instances).expect("static example is valid")
}
