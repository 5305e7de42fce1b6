//! Deliberately naive reference implementation backing the acceptance suite.
//!
//! The decomposition here is a line-by-line transcription of the defining
//! case tables — per-branch `if` chains, no shared helpers with the library —
//! so that agreement between the two is evidence, not tautology.

use coact::domain::{InstanceLosses, ParticipantProfile};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleBreakdown {
    pub t_star_is_ai: bool,
    pub l_human: f64,
    pub l_ai: f64,
    pub l_team: f64,
    pub ctp: bool,
    pub cp: f64,
    pub cp_inh: f64,
    pub cp_coll: f64,
    pub ce: f64,
    pub ce_inh: f64,
    pub ce_coll: f64,
    pub realization_ratio: Option<f64>,
}

pub fn oracle_breakdown(profile: &ParticipantProfile) -> OracleBreakdown {
    let n = profile.instances.len() as f64;
    let l_human = profile.instances.iter().map(|l| l.human).sum::<f64>() / n;
    let l_ai = profile.instances.iter().map(|l| l.ai).sum::<f64>() / n;
    let l_team = profile.instances.iter().map(|l| l.team).sum::<f64>() / n;

    let t_star_is_ai = l_ai <= l_human;
    let ctp = l_team < l_human && l_team < l_ai;
    let cp = if t_star_is_ai { l_ai } else { l_human };

    let mut cp_inh = 0.0;
    let mut cp_coll = 0.0;
    let mut ce_inh = 0.0;
    let mut ce_coll = 0.0;
    for l in &profile.instances {
        // inherent potential: the excess of the better member's instance loss
        // over the other member's, when there is one
        cp_inh += if t_star_is_ai {
            if l.ai > l.human {
                l.ai - l.human
            } else {
                0.0
            }
        } else if l.human > l.ai {
            l.human - l.ai
        } else {
            0.0
        };

        // collaborative potential: the floor neither member gets below
        cp_coll += if l.human < l.ai { l.human } else { l.ai };

        // inherent effect, four cases on the better member's branch
        ce_inh += if t_star_is_ai {
            if l.ai > l.team && l.team >= l.human {
                l.ai - l.team
            } else if l.ai > l.human && l.human > l.team {
                l.ai - l.human
            } else {
                0.0
            }
        } else if l.human > l.team && l.team >= l.ai {
            l.human - l.team
        } else if l.human > l.ai && l.ai > l.team {
            l.human - l.ai
        } else {
            0.0
        };

        // collaborative effect: two branch-free gain cases, and a
        // branch-gated loss case when the team fell behind the better member
        ce_coll += if l.ai >= l.human && l.human > l.team {
            l.human - l.team
        } else if l.human > l.ai && l.ai > l.team {
            l.ai - l.team
        } else if t_star_is_ai && l.team > l.ai {
            l.ai - l.team
        } else if !t_star_is_ai && l.team > l.human {
            l.human - l.team
        } else {
            0.0
        };
    }
    cp_inh /= n;
    cp_coll /= n;
    ce_inh /= n;
    ce_coll /= n;

    let min_l = if l_human < l_ai { l_human } else { l_ai };
    let ce = min_l - l_team;
    let realization_ratio = if cp_inh > 0.0 { Some(ce_inh / cp_inh) } else { None };

    OracleBreakdown {
        t_star_is_ai,
        l_human,
        l_ai,
        l_team,
        ctp,
        cp,
        cp_inh,
        cp_coll,
        ce,
        ce_inh,
        ce_coll,
        realization_ratio,
    }
}

/// Relative closeness at the scale of the larger magnitude (floored at 1).
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Seeded random profile: up to 6 instances, losses either drawn from the
/// discrete grid {0, 0.5, 1, 2} or continuous uniform on [0, 2].
pub fn random_profile(seed: u64) -> ParticipantProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=6usize);
    let discrete = seed % 2 == 0;
    let grid = [0.0, 0.5, 1.0, 2.0];
    let mut draw = |rng: &mut ChaCha8Rng| {
        if discrete {
            grid[rng.gen_range(0..grid.len())]
        } else {
            rng.gen_range(0.0..2.0)
        }
    };
    let instances = (0..n)
        .map(|i| InstanceLosses {
            instance_id: format!("i{i}"),
            human: draw(&mut rng),
            ai: draw(&mut rng),
            team: draw(&mut rng),
        })
        .collect();
    ParticipantProfile::new(format!("p{seed}"), "rand", instances)
        .expect("generated losses are finite and non-negative")
}

/// One visible verdict line per acceptance criterion.
pub fn pass(criterion: &str, detail: &str) {
    println!("ACCEPTANCE {criterion}: PASS ({detail})");
}
