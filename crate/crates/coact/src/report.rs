//! Condition summaries, the cross-condition comparison battery, and document
//! rendering.
//!
//! A summary averages each decomposition metric over the participants of one
//! condition and attaches dispersion (SD plus a confidence interval, t-based
//! by default, seeded bootstrap on request). Comparisons run a caller-chosen
//! test per metric and Bonferroni-adjust over the declared family. Rendering
//! produces canonical JSON (sorted keys, six significant digits — repeated
//! renders are byte-identical), a markdown digest with the CP/CE
//! decomposition table, or a CSV bundle with one file per table; every format
//! also ships bar-chart data (mean plus CI bounds per member loss).

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::metrics::{ComplementarityBreakdown, InstanceEffectRow, ScenarioTag};
use crate::stats::{self, StatsError, TVariant, TestResult};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no breakdowns supplied")]
    Empty,
    #[error("breakdowns span multiple conditions: {0} and {1}")]
    MixedConditions(String, String),
    #[error("csv rendering failed: {0}")]
    Csv(String),
}

/// The participant-level quantities a summary or comparison can range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    LHuman,
    LAi,
    LTeam,
    Cp,
    CpInh,
    CpColl,
    Ce,
    CeInh,
    CeColl,
    RealizationRatio,
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::LHuman,
        Metric::LAi,
        Metric::LTeam,
        Metric::Cp,
        Metric::CpInh,
        Metric::CpColl,
        Metric::Ce,
        Metric::CeInh,
        Metric::CeColl,
        Metric::RealizationRatio,
    ];

    /// Key used in JSON documents and CSV cells.
    pub fn key(self) -> &'static str {
        match self {
            Metric::LHuman => "l_human",
            Metric::LAi => "l_ai",
            Metric::LTeam => "l_team",
            Metric::Cp => "cp",
            Metric::CpInh => "cp_inh",
            Metric::CpColl => "cp_coll",
            Metric::Ce => "ce",
            Metric::CeInh => "ce_inh",
            Metric::CeColl => "ce_coll",
            Metric::RealizationRatio => "realization_ratio",
        }
    }

    /// Human-facing label used in markdown tables.
    pub fn label(self) -> &'static str {
        match self {
            Metric::LHuman => "L_H",
            Metric::LAi => "L_AI",
            Metric::LTeam => "L_I",
            Metric::Cp => "CP",
            Metric::CpInh => "CP^inh",
            Metric::CpColl => "CP^coll",
            Metric::Ce => "CE",
            Metric::CeInh => "CE^inh",
            Metric::CeColl => "CE^coll",
            Metric::RealizationRatio => "Realization",
        }
    }

    /// The participant's value, absent only for an undefined realization
    /// ratio.
    pub fn of(self, b: &ComplementarityBreakdown) -> Option<f64> {
        match self {
            Metric::LHuman => Some(b.l_human),
            Metric::LAi => Some(b.l_ai),
            Metric::LTeam => Some(b.l_team),
            Metric::Cp => Some(b.cp),
            Metric::CpInh => Some(b.cp_inh),
            Metric::CpColl => Some(b.cp_coll),
            Metric::Ce => Some(b.ce),
            Metric::CeInh => Some(b.ce_inh),
            Metric::CeColl => Some(b.ce_coll),
            Metric::RealizationRatio => b.realization_ratio,
        }
    }

    /// Whether the counts view (mean × N instances) makes sense; it does for
    /// every loss-denominated metric, not for a ratio.
    pub fn countable(self) -> bool {
        self != Metric::RealizationRatio
    }
}

/// Mean, dispersion and CI of one metric over a condition's participants.
/// `n` is the number of contributing participants, which for the realization
/// ratio excludes those where it is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
}

/// How the interval in a summary is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CiMethod {
    /// Student-t interval for the mean.
    TBased,
    /// Seeded percentile bootstrap of the mean; deterministic per seed.
    Bootstrap { seed: u64, resamples: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition_id: String,
    pub n_participants: usize,
    /// Fraction of participants whose team strictly beat both members.
    pub ctp_rate: f64,
    pub metrics: BTreeMap<Metric, MetricSummary>,
    /// mean ce_inh / mean cp_inh over all participants, the pooled
    /// alternative to averaging per-participant ratios; absent when the
    /// condition has no inherent potential at all.
    pub realization_ratio_pooled: Option<f64>,
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sd_of(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean_of(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn bootstrap_ci(xs: &[f64], level: f64, seed: u64, resamples: u32) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples.max(1))
        .map(|_| {
            (0..xs.len()).map(|_| xs[rng.gen_range(0..xs.len())]).sum::<f64>() / xs.len() as f64
        })
        .collect();
    means.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let idx = p * (means.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        means[lo] + (means[hi] - means[lo]) * (idx - lo as f64)
    };
    (q((1.0 - level) / 2.0), q((1.0 + level) / 2.0))
}

fn summarize_values(xs: &[f64], level: f64, method: CiMethod) -> MetricSummary {
    let mean = mean_of(xs);
    let (ci_lo, ci_hi) = if xs.len() < 2 {
        (mean, mean)
    } else {
        match method {
            CiMethod::TBased => {
                stats::confidence_interval(xs, level).expect("n >= 2 and level checked")
            }
            CiMethod::Bootstrap { seed, resamples } => bootstrap_ci(xs, level, seed, resamples),
        }
    };
    MetricSummary { mean, sd: sd_of(xs), ci_lo, ci_hi, n: xs.len() }
}

fn check_single_condition(
    breakdowns: &[ComplementarityBreakdown],
) -> Result<&str, ReportError> {
    let first = breakdowns.first().ok_or(ReportError::Empty)?;
    for b in breakdowns {
        if b.condition_id != first.condition_id {
            return Err(ReportError::MixedConditions(
                first.condition_id.clone(),
                b.condition_id.clone(),
            ));
        }
    }
    Ok(&first.condition_id)
}

/// Participant-level averages of every metric with 95% t-based intervals.
pub fn summarize_condition(
    breakdowns: &[ComplementarityBreakdown],
) -> Result<ConditionSummary, ReportError> {
    summarize_condition_opts(breakdowns, 0.95, CiMethod::TBased)
}

pub fn summarize_condition_opts(
    breakdowns: &[ComplementarityBreakdown],
    ci_level: f64,
    method: CiMethod,
) -> Result<ConditionSummary, ReportError> {
    let condition_id = check_single_condition(breakdowns)?.to_string();
    let mut metrics = BTreeMap::new();
    for metric in Metric::ALL {
        let xs: Vec<f64> = breakdowns.iter().filter_map(|b| metric.of(b)).collect();
        if !xs.is_empty() {
            metrics.insert(metric, summarize_values(&xs, ci_level, method));
        }
    }
    let ctp_rate =
        breakdowns.iter().filter(|b| b.ctp).count() as f64 / breakdowns.len() as f64;
    let mean_ce_inh = mean_of(&breakdowns.iter().map(|b| b.ce_inh).collect::<Vec<_>>());
    let mean_cp_inh = mean_of(&breakdowns.iter().map(|b| b.cp_inh).collect::<Vec<_>>());
    let realization_ratio_pooled =
        (mean_cp_inh > 0.0).then(|| mean_ce_inh / mean_cp_inh);
    Ok(ConditionSummary {
        condition_id,
        n_participants: breakdowns.len(),
        ctp_rate,
        metrics,
        realization_ratio_pooled,
    })
}

/// Which test a comparison runs; the choice is the caller's (no automatic
/// normality screening) and is recorded on the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    StudentT,
    WelchT,
    MannWhitneyU,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherInA,
    HigherInB,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComparisonSpec {
    pub metric: Metric,
    pub test: TestKind,
}

impl ComparisonSpec {
    /// One spec per metric (realization ratio included), all with the same
    /// test — the usual full battery.
    pub fn full_battery(test: TestKind) -> Vec<ComparisonSpec> {
        Metric::ALL.iter().map(|&metric| ComparisonSpec { metric, test }).collect()
    }
}

/// One metric's cross-condition test. When the underlying samples are
/// degenerate (e.g. zero variance) the test outcome is replaced by `error`
/// and the remaining comparisons are unaffected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metric: Metric,
    pub condition_a: String,
    pub condition_b: String,
    pub test: TestKind,
    pub result: Option<TestResult>,
    pub error: Option<String>,
    pub direction: Direction,
    pub family_size: u32,
}

fn run_test(kind: TestKind, a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    match kind {
        TestKind::StudentT => stats::t_test(a, b),
        TestKind::WelchT => stats::t_test_variant(a, b, TVariant::Welch),
        TestKind::MannWhitneyU => stats::mann_whitney_u(a, b),
    }
}

/// Runs the configured test per metric between two conditions and attaches
/// `p_adjusted = bonferroni(p, family_size)`.
pub fn compare_conditions(
    a: &[ComplementarityBreakdown],
    b: &[ComplementarityBreakdown],
    specs: &[ComparisonSpec],
    family_size: u32,
) -> Result<Vec<ComparisonReport>, ReportError> {
    let condition_a = check_single_condition(a)?.to_string();
    let condition_b = check_single_condition(b)?.to_string();
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let xs: Vec<f64> = a.iter().filter_map(|r| spec.metric.of(r)).collect();
        let ys: Vec<f64> = b.iter().filter_map(|r| spec.metric.of(r)).collect();
        let direction = if xs.is_empty() || ys.is_empty() {
            Direction::Equal
        } else {
            match mean_of(&xs).total_cmp(&mean_of(&ys)) {
                std::cmp::Ordering::Greater => Direction::HigherInA,
                std::cmp::Ordering::Less => Direction::HigherInB,
                std::cmp::Ordering::Equal => Direction::Equal,
            }
        };
        let (result, error) = match run_test(spec.test, &xs, &ys) {
            Ok(mut r) => {
                r.p_adjusted = Some(stats::bonferroni(r.p_value, family_size));
                (Some(r), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        out.push(ComparisonReport {
            metric: spec.metric,
            condition_a: condition_a.clone(),
            condition_b: condition_b.clone(),
            test: spec.test,
            result,
            error,
            direction,
            family_size,
        });
    }
    Ok(out)
}

/// Everything a rendered document contains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub summaries: Vec<ConditionSummary>,
    pub comparisons: Vec<ComparisonReport>,
    pub instances: Vec<InstanceEffectRow>,
    /// When set, loss-denominated metrics are additionally shown as instance
    /// counts `mean × n / n` — the natural view for zero-one losses.
    pub counts_n: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    CsvBundle,
}

/// A named output file; a format renders to one or more of these.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Formats with six significant digits, trimming trailing zeros, switching to
/// scientific notation outside [1e-4, 1e6) — printf's `%.6g`, which keeps
/// documents compact and makes rendering a stable function of the value.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("{:e} always has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..6).contains(&exp) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    }
}

fn write_json_value(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_g6(n.as_f64().expect("number is i64, u64 or f64")));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings always serialize"))
        }
        Value::Array(xs) => {
            out.push('[');
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_json_value(out, x);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            // the map is ordered by key, making the output canonical
            for (i, (k, x)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("strings always serialize"));
                out.push(':');
                write_json_value(out, x);
            }
            out.push('}');
        }
    }
}

/// Canonical JSON: compact, keys sorted, floats at six significant digits.
/// Rendering a parsed canonical document reproduces it byte for byte.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_json_value(&mut out, value);
    out
}

fn chart_data(summaries: &[ConditionSummary]) -> Value {
    let mut bars = Vec::new();
    for s in summaries {
        for metric in [Metric::LHuman, Metric::LAi, Metric::LTeam] {
            if let Some(m) = s.metrics.get(&metric) {
                bars.push(json!({
                    "label": format!("{} {}", s.condition_id, metric.key()),
                    "mean": m.mean,
                    "ci_lo": m.ci_lo,
                    "ci_hi": m.ci_hi,
                }));
            }
        }
    }
    Value::Array(bars)
}

fn percent(x: f64) -> String {
    format!("{}%", format_g6(x * 100.0))
}

fn counts_cell(mean: f64, n: u64) -> String {
    format!("{}/{n}", format_g6(mean * n as f64))
}

fn tag_counts(tags: &[(String, ScenarioTag)]) -> BTreeMap<&'static str, usize> {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (_, tag) in tags {
        let name = match tag {
            ScenarioTag::PartialInherent => "partial_inherent",
            ScenarioTag::FullInherent => "full_inherent",
            ScenarioTag::NegativeCollaborative => "negative_collaborative",
            ScenarioTag::PositiveCollaborative => "positive_collaborative",
            ScenarioTag::Neutral => "neutral",
        };
        *counts.entry(name).or_default() += 1;
    }
    counts
}

fn render_markdown(report: &Report) -> String {
    let mut md = String::from("# Complementarity report\n");
    for s in &report.summaries {
        md.push_str(&format!("\n## Condition `{}`\n\n", s.condition_id));
        md.push_str(&format!("- participants: {}\n", s.n_participants));
        md.push_str(&format!("- CTP rate: {}\n", percent(s.ctp_rate)));
        if let (Some(cp), Some(ce)) = (s.metrics.get(&Metric::Cp), s.metrics.get(&Metric::Ce)) {
            if cp.mean > 0.0 {
                md.push_str(&format!(
                    "- potential realized (CE/CP): {}\n",
                    percent(ce.mean / cp.mean)
                ));
            }
        }
        if let Some(pooled) = s.realization_ratio_pooled {
            md.push_str(&format!(
                "- realization ratio (pooled CE^inh/CP^inh): {}\n",
                percent(pooled)
            ));
        }
        let counts = report.counts_n;
        md.push('\n');
        md.push_str(if counts.is_some() {
            "| Metric | Mean | Count | SD | 95% CI |\n|---|---|---|---|---|\n"
        } else {
            "| Metric | Mean | SD | 95% CI |\n|---|---|---|---|\n"
        });
        for metric in Metric::ALL {
            let Some(m) = s.metrics.get(&metric) else { continue };
            let ci = format!("[{}, {}]", format_g6(m.ci_lo), format_g6(m.ci_hi));
            match counts {
                Some(n) if metric.countable() => md.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    metric.label(),
                    format_g6(m.mean),
                    counts_cell(m.mean, n),
                    format_g6(m.sd),
                    ci
                )),
                Some(_) => md.push_str(&format!(
                    "| {} | {} | - | {} | {} |\n",
                    metric.label(),
                    format_g6(m.mean),
                    format_g6(m.sd),
                    ci
                )),
                None => md.push_str(&format!(
                    "| {} | {} | {} | {} |\n",
                    metric.label(),
                    format_g6(m.mean),
                    format_g6(m.sd),
                    ci
                )),
            }
        }
    }

    if !report.comparisons.is_empty() {
        md.push_str("\n## Comparisons\n\n");
        md.push_str(
            "| Metric | A | B | Test | Statistic | p | p adjusted | d | Direction | Family | Note |\n",
        );
        md.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
        for c in &report.comparisons {
            let test = match c.test {
                TestKind::StudentT => "Student t",
                TestKind::WelchT => "Welch t",
                TestKind::MannWhitneyU => "Mann-Whitney U",
            };
            let direction = match c.direction {
                Direction::HigherInA => format!("higher in {}", c.condition_a),
                Direction::HigherInB => format!("higher in {}", c.condition_b),
                Direction::Equal => "equal".to_string(),
            };
            let (stat, p, p_adj, d, note) = match (&c.result, &c.error) {
                (Some(r), _) => (
                    format_g6(r.statistic),
                    format_g6(r.p_value),
                    r.p_adjusted.map(format_g6).unwrap_or_else(|| "-".into()),
                    format_g6(r.effect_size_d),
                    String::new(),
                ),
                (None, Some(e)) => ("-".into(), "-".into(), "-".into(), "-".into(), e.clone()),
                (None, None) => ("-".into(), "-".into(), "-".into(), "-".into(), String::new()),
            };
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                c.metric.label(),
                c.condition_a,
                c.condition_b,
                test,
                stat,
                p,
                p_adj,
                d,
                direction,
                c.family_size,
                note
            ));
        }
    }

    if !report.instances.is_empty() {
        md.push_str("\n## Per-instance effects\n\n");
        md.push_str("| Instance | Mean L_H | Mean L_AI | Mean L_I | Scenario tags | Team beat both |\n");
        md.push_str("|---|---|---|---|---|---|\n");
        for row in &report.instances {
            let tags = tag_counts(&row.tags)
                .iter()
                .map(|(name, k)| format!("{name}×{k}"))
                .collect::<Vec<_>>()
                .join(", ");
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                row.instance_id,
                format_g6(row.mean_l_human),
                format_g6(row.mean_l_ai),
                format_g6(row.mean_l_team),
                tags,
                if row.positive_coll_flag { "yes" } else { "no" }
            ));
        }
    }
    md
}

fn csv_into_bytes(rows: Vec<Vec<String>>) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| ReportError::Csv(e.to_string()))?;
    }
    w.into_inner().map_err(|e| ReportError::Csv(e.to_string()))
}

fn render_csv_bundle(report: &Report) -> Result<Vec<RenderedFile>, ReportError> {
    let mut summary_rows = vec![vec![
        "condition_id".into(),
        "metric".into(),
        "mean".into(),
        "sd".into(),
        "ci_lo".into(),
        "ci_hi".into(),
        "n".into(),
    ]];
    for s in &report.summaries {
        for metric in Metric::ALL {
            let Some(m) = s.metrics.get(&metric) else { continue };
            summary_rows.push(vec![
                s.condition_id.clone(),
                metric.key().into(),
                format_g6(m.mean),
                format_g6(m.sd),
                format_g6(m.ci_lo),
                format_g6(m.ci_hi),
                m.n.to_string(),
            ]);
        }
        summary_rows.push(vec![
            s.condition_id.clone(),
            "ctp_rate".into(),
            format_g6(s.ctp_rate),
            String::new(),
            String::new(),
            String::new(),
            s.n_participants.to_string(),
        ]);
    }

    let mut comparison_rows = vec![vec![
        "metric".into(),
        "condition_a".into(),
        "condition_b".into(),
        "test".into(),
        "statistic".into(),
        "p_value".into(),
        "p_adjusted".into(),
        "effect_size_d".into(),
        "direction".into(),
        "family_size".into(),
        "note".into(),
    ]];
    for c in &report.comparisons {
        let test = match c.test {
            TestKind::StudentT => "student_t",
            TestKind::WelchT => "welch_t",
            TestKind::MannWhitneyU => "mann_whitney_u",
        };
        let direction = match c.direction {
            Direction::HigherInA => "higher_in_a",
            Direction::HigherInB => "higher_in_b",
            Direction::Equal => "equal",
        };
        let (stat, p, p_adj, d, note) = match (&c.result, &c.error) {
            (Some(r), _) => (
                format_g6(r.statistic),
                format_g6(r.p_value),
                r.p_adjusted.map(format_g6).unwrap_or_default(),
                format_g6(r.effect_size_d),
                String::new(),
            ),
            (None, Some(e)) => (
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ),
            (None, None) => Default::default(),
        };
        comparison_rows.push(vec![
            c.metric.key().into(),
            c.condition_a.clone(),
            c.condition_b.clone(),
            test.into(),
            stat,
            p,
            p_adj,
            d,
            direction.into(),
            c.family_size.to_string(),
            note,
        ]);
    }

    let mut instance_rows = vec![vec![
        "instance_id".into(),
        "mean_l_human".into(),
        "mean_l_ai".into(),
        "mean_l_team".into(),
        "neutral".into(),
        "partial_inherent".into(),
        "full_inherent".into(),
        "positive_collaborative".into(),
        "negative_collaborative".into(),
        "team_beat_both".into(),
    ]];
    for row in &report.instances {
        let counts = tag_counts(&row.tags);
        let k = |name: &str| counts.get(name).copied().unwrap_or(0).to_string();
        instance_rows.push(vec![
            row.instance_id.clone(),
            format_g6(row.mean_l_human),
            format_g6(row.mean_l_ai),
            format_g6(row.mean_l_team),
            k("neutral"),
            k("partial_inherent"),
            k("full_inherent"),
            k("positive_collaborative"),
            k("negative_collaborative"),
            if row.positive_coll_flag { "yes" } else { "no" }.to_string(),
        ]);
    }

    Ok(vec![
        RenderedFile { name: "summary.csv".into(), bytes: csv_into_bytes(summary_rows)? },
        RenderedFile {
            name: "comparisons.csv".into(),
            bytes: csv_into_bytes(comparison_rows)?,
        },
        RenderedFile { name: "instances.csv".into(), bytes: csv_into_bytes(instance_rows)? },
        RenderedFile {
            name: "chart.json".into(),
            bytes: canonical_json(&chart_data(&report.summaries)).into_bytes(),
        },
    ])
}

/// Renders the report in the requested format. Rendering is pure: the same
/// report yields the same bytes, file by file.
pub fn render(report: &Report, format: ReportFormat) -> Result<Vec<RenderedFile>, ReportError> {
    match format {
        ReportFormat::Json => {
            let mut doc = serde_json::to_value(report)
                .expect("report structs contain only finite numbers");
            doc.as_object_mut()
                .expect("a report serializes to an object")
                .insert("chart".into(), chart_data(&report.summaries));
            Ok(vec![RenderedFile {
                name: "report.json".into(),
                bytes: canonical_json(&doc).into_bytes(),
            }])
        }
        ReportFormat::Markdown => Ok(vec![
            RenderedFile { name: "report.md".into(), bytes: render_markdown(report).into_bytes() },
            RenderedFile {
                name: "chart.json".into(),
                bytes: canonical_json(&chart_data(&report.summaries)).into_bytes(),
            },
        ]),
        ReportFormat::CsvBundle => render_csv_bundle(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{self, Member};
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn worked_breakdown() -> ComplementarityBreakdown {
        metrics::breakdown(&metrics::worked_example_profile())
    }

    /// A breakdown whose cp carries the given value; the remaining fields are
    /// filled consistently enough for summaries and comparisons.
    fn planted(condition: &str, participant: usize, cp: f64) -> ComplementarityBreakdown {
        ComplementarityBreakdown {
            participant_id: format!("p{participant:03}"),
            condition_id: condition.to_string(),
            n_instances: 10,
            t_star: Member::Ai,
            l_human: cp + 0.1,
            l_ai: cp,
            l_team: cp * 0.8,
            ctp: cp > 0.0,
            cp,
            cp_inh: cp / 2.0,
            cp_coll: cp / 2.0,
            ce: cp * 0.2,
            ce_inh: cp * 0.15,
            ce_coll: cp * 0.05,
            realization_ratio: (cp != 0.0).then_some(0.3),
        }
    }

    fn worked_report() -> Report {
        let b = worked_breakdown();
        let instances = metrics::per_instance_table(&[metrics::worked_example_profile()]).unwrap();
        Report {
            summaries: vec![summarize_condition(std::slice::from_ref(&b)).unwrap()],
            comparisons: Vec::new(),
            instances,
            counts_n: Some(25),
        }
    }

    #[test]
    fn worked_example_summary() {
        let s = summarize_condition(&[worked_breakdown()]).unwrap();
        assert_eq!(s.n_participants, 1);
        assert_eq!(s.ctp_rate, 1.0);
        let m = |metric: Metric| s.metrics[&metric];
        assert!((m(Metric::Cp).mean - 0.52).abs() < 1e-12);
        assert!((m(Metric::CpInh).mean - 0.32).abs() < 1e-12);
        assert!((m(Metric::CpColl).mean - 0.20).abs() < 1e-12);
        assert!((m(Metric::Ce).mean - 0.16).abs() < 1e-12);
        // single participant: no spread, the interval collapses to the point
        assert_eq!(m(Metric::Cp).sd, 0.0);
        assert_eq!(m(Metric::Cp).ci_lo, m(Metric::Cp).ci_hi);
        assert!((s.realization_ratio_pooled.unwrap() - 0.375).abs() < 1e-12);
    }

    #[test]
    fn additivity_of_means() {
        let breakdowns: Vec<_> =
            (0..7).map(|k| planted("c", k, 0.1 + 0.07 * k as f64)).collect();
        let s = summarize_condition(&breakdowns).unwrap();
        let m = |metric: Metric| s.metrics[&metric].mean;
        assert!((m(Metric::Cp) - m(Metric::CpInh) - m(Metric::CpColl)).abs() < 1e-12);
        assert!((m(Metric::Ce) - m(Metric::CeInh) - m(Metric::CeColl)).abs() < 1e-12);
    }

    #[test]
    fn summary_rejects_bad_input() {
        assert!(matches!(summarize_condition(&[]), Err(ReportError::Empty)));
        let mixed = vec![planted("a", 1, 0.2), planted("b", 2, 0.2)];
        assert!(matches!(
            summarize_condition(&mixed),
            Err(ReportError::MixedConditions(_, _))
        ));
    }

    #[test]
    fn identical_data_identical_summaries() {
        let a: Vec<_> = (0..5).map(|k| planted("a", k, 0.1 * k as f64)).collect();
        let b: Vec<_> = (0..5).map(|k| planted("b", k, 0.1 * k as f64)).collect();
        let mut sa = summarize_condition(&a).unwrap();
        let sb = summarize_condition(&b).unwrap();
        sa.condition_id = sb.condition_id.clone();
        assert_eq!(sa, sb);
    }

    #[test]
    fn bootstrap_ci_is_seeded_and_sane() {
        let xs: Vec<_> = (0..40).map(|k| planted("a", k, 0.01 * k as f64)).collect();
        let method = CiMethod::Bootstrap { seed: 5, resamples: 2000 };
        let s1 = summarize_condition_opts(&xs, 0.95, method).unwrap();
        let s2 = summarize_condition_opts(&xs, 0.95, method).unwrap();
        assert_eq!(s1, s2);
        let boot = s1.metrics[&Metric::Cp];
        let t = summarize_condition(&xs).unwrap().metrics[&Metric::Cp];
        assert!(boot.ci_lo < boot.mean && boot.mean < boot.ci_hi);
        // same data, same mean; widths agree loosely for a well-behaved sample
        assert!((boot.mean - t.mean).abs() < 1e-12);
        assert!((boot.ci_hi - boot.ci_lo) < 2.0 * (t.ci_hi - t.ci_lo));
    }

    #[test]
    fn comparisons_on_identical_data() {
        let a: Vec<_> = (0..6).map(|k| planted("a", k, 0.1 * k as f64)).collect();
        let b: Vec<_> = (0..6).map(|k| planted("b", k, 0.1 * k as f64)).collect();
        let specs = [ComparisonSpec { metric: Metric::Cp, test: TestKind::StudentT }];
        let reports = compare_conditions(&a, &b, &specs, 1).unwrap();
        let r = reports[0].result.as_ref().unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.effect_size_d, 0.0);
        assert_eq!(reports[0].direction, Direction::Equal);
    }

    #[test]
    fn family_size_scales_p_adjusted_only() {
        let a: Vec<_> = (0..6).map(|k| planted("a", k, 0.1 * k as f64)).collect();
        let b: Vec<_> = (0..6).map(|k| planted("b", k, 0.3 + 0.1 * k as f64)).collect();
        let specs = [ComparisonSpec { metric: Metric::Cp, test: TestKind::StudentT }];
        let one = &compare_conditions(&a, &b, &specs, 1).unwrap()[0];
        let six = &compare_conditions(&a, &b, &specs, 6).unwrap()[0];
        let (r1, r6) = (one.result.as_ref().unwrap(), six.result.as_ref().unwrap());
        assert_eq!(r1.p_value, r6.p_value);
        let expected = (r1.p_value * 6.0).min(1.0);
        assert!((r6.p_adjusted.unwrap() - expected).abs() < 1e-15);
        assert_eq!(six.family_size, 6);
    }

    #[test]
    fn degenerate_metric_does_not_abort_battery() {
        // constant cp in both conditions → zero variance for the t-test
        let a: Vec<_> = (0..5).map(|k| planted("a", k, 0.4)).collect();
        let b: Vec<_> = (0..5).map(|k| planted("b", k, 0.4)).collect();
        let specs = [
            ComparisonSpec { metric: Metric::Cp, test: TestKind::StudentT },
            ComparisonSpec { metric: Metric::LHuman, test: TestKind::MannWhitneyU },
        ];
        let reports = compare_conditions(&a, &b, &specs, 2).unwrap();
        assert!(reports[0].result.is_none());
        assert!(reports[0].error.as_ref().unwrap().contains("variance"));
        assert!(reports[1].result.is_some());
    }

    /// Sampling check on the whole battery path: a planted standardized mean
    /// difference of 1.0 at n = 50 per arm should come back as d near 1 and
    /// survive a six-way correction nearly always.
    #[test]
    fn comparison_recovers_planted_effect() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut d_sum = 0.0;
        let mut significant = 0;
        let reps = 100;
        for seed in 0..reps {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<_> = (0..50)
                .map(|k| planted("a", k, 1.0 + normal.sample(&mut rng)))
                .collect();
            let b: Vec<_> = (0..50)
                .map(|k| planted("b", k, 2.0 + normal.sample(&mut rng)))
                .collect();
            let specs = [ComparisonSpec { metric: Metric::Cp, test: TestKind::StudentT }];
            let r = compare_conditions(&a, &b, &specs, 6).unwrap();
            let result = r[0].result.as_ref().unwrap();
            d_sum += result.effect_size_d.abs();
            if result.p_adjusted.unwrap() < 0.01 {
                significant += 1;
            }
            assert_eq!(r[0].direction, Direction::HigherInB);
        }
        let mean_d = d_sum / reps as f64;
        assert!((mean_d - 1.0).abs() < 0.3, "mean |d| = {mean_d}");
        assert!(significant >= 90, "only {significant}/{reps} cleared the corrected threshold");
    }

    #[test]
    fn format_g6_cases() {
        assert_eq!(format_g6(0.0), "0");
        assert_eq!(format_g6(-0.0), "0");
        assert_eq!(format_g6(0.52), "0.52");
        assert_eq!(format_g6(0.2), "0.2");
        assert_eq!(format_g6(13.000000000000002), "13");
        assert_eq!(format_g6(1234567.0), "1.23457e+06");
        assert_eq!(format_g6(0.0001), "0.0001");
        assert_eq!(format_g6(0.000012345678), "1.23457e-05");
        assert_eq!(format_g6(-2.5), "-2.5");
        assert_eq!(format_g6(163080.0), "163080");
        assert_eq!(format_g6(999999.6), "1e+06");
        assert_eq!(format_g6(0.1 + 0.2), "0.3");
    }

    #[test]
    fn markdown_contains_decomposition_rows() {
        let files = render(&worked_report(), ReportFormat::Markdown).unwrap();
        let md = std::str::from_utf8(&files[0].bytes).unwrap();
        assert!(md.contains("| CP | 0.52 | 13/25 |"), "missing CP row in:\n{md}");
        assert!(md.contains("| CP^inh | 0.32 | 8/25 |"));
        assert!(md.contains("| CP^coll | 0.2 | 5/25 |"));
        assert!(md.contains("| CE | 0.16 | 4/25 |"));
        assert!(md.contains("| CE^inh | 0.12 | 3/25 |"));
        assert!(md.contains("| CE^coll | 0.04 | 1/25 |"));
        assert!(md.contains("potential realized (CE/CP): 30.7692%"));
        assert!(md.contains("realization ratio (pooled CE^inh/CP^inh): 37.5%"));
        // empty comparisons: the section is omitted entirely
        assert!(!md.contains("## Comparisons"));
        assert!(md.contains("## Per-instance effects"));
    }

    #[test]
    fn json_render_parse_render_is_byte_identical() {
        let report = worked_report();
        let first = render(&report, ReportFormat::Json).unwrap();
        let again = render(&report, ReportFormat::Json).unwrap();
        assert_eq!(first, again);
        let parsed: Value = serde_json::from_slice(&first[0].bytes).unwrap();
        let re_rendered = canonical_json(&parsed).into_bytes();
        assert_eq!(first[0].bytes, re_rendered);
        // keys come out sorted at the top level
        let text = std::str::from_utf8(&first[0].bytes).unwrap();
        assert!(text.starts_with("{\"chart\":"));
    }

    #[test]
    fn csv_bundle_has_one_file_per_table() {
        let b = worked_breakdown();
        let specs = [ComparisonSpec { metric: Metric::Cp, test: TestKind::StudentT }];
        let comparisons =
            compare_conditions(std::slice::from_ref(&b), std::slice::from_ref(&b), &specs, 1)
                .unwrap();
        let report = Report { comparisons, ..worked_report() };
        let files = render(&report, ReportFormat::CsvBundle).unwrap();
        let names: Vec<&str> = files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["summary.csv", "comparisons.csv", "instances.csv", "chart.json"]);
        let mut rdr = csv::Reader::from_reader(files[0].bytes.as_slice());
        // 10 metric rows + the ctp_rate row
        assert_eq!(rdr.records().count(), 11);
        let mut rdr = csv::Reader::from_reader(files[2].bytes.as_slice());
        assert_eq!(rdr.records().count(), 25);
    }

    #[test]
    fn chart_data_covers_member_losses_per_condition() {
        let report = worked_report();
        let files = render(&report, ReportFormat::Markdown).unwrap();
        let chart: Value = serde_json::from_slice(&files[1].bytes).unwrap();
        let bars = chart.as_array().unwrap();
        assert_eq!(bars.len(), 3);
        let labels: Vec<&str> =
            bars.iter().map(|b| b["label"].as_str().unwrap()).collect();
        assert_eq!(labels, ["example l_human", "example l_ai", "example l_team"]);
        for bar in bars {
            assert!(bar["ci_lo"].as_f64().unwrap() <= bar["mean"].as_f64().unwrap());
            assert!(bar["mean"].as_f64().unwrap() <= bar["ci_hi"].as_f64().unwrap());
        }
    }

    proptest! {
        /// format(parse(format(x))) is stable, which is what makes canonical
        /// JSON re-renderable byte for byte.
        #[test]
        fn g6_round_trip_is_stable(x in -1e12f64..1e12) {
            let once = format_g6(x);
            let back: f64 = once.parse().unwrap();
            prop_assert_eq!(format_g6(back), once);
        }

        /// Mean additivity holds for arbitrary participant sets, which keeps
        /// the summary's decomposition rows internally consistent.
        #[test]
        fn summary_additivity(cps in proptest::collection::vec(0.0f64..2.0, 1..40)) {
            let breakdowns: Vec<_> = cps
                .iter()
                .enumerate()
                .map(|(k, &cp)| planted("c", k, cp))
                .collect();
            let s = summarize_condition(&breakdowns).unwrap();
            let m = |metric: Metric| s.metrics[&metric].mean;
            prop_assert!((m(Metric::Cp) - m(Metric::CpInh) - m(Metric::CpColl)).abs() < 1e-9);
            prop_assert!((m(Metric::Ce) - m(Metric::CeInh) - m(Metric::CeColl)).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&s.ctp_rate));
        }
    }
}
