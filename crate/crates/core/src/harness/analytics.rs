//! Scores, quantile series, coverage regions, conflicts and result
//! distributions over benchmark records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{BenchmarkRecord, Expected, RunResult, WitnessValidation};

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreScheme {
    Base,
    /// Base points, overridden by penalties where a definite answer
    /// contradicts the ground truth.
    Punished(BTreeMap<String, Expected>),
}

pub const WRONG_FALSE: i64 = -16;
pub const WRONG_TRUE: i64 = -32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("task `{0}` has no ground truth")]
    MissingGroundTruth(String),
}

fn base_points(r: &BenchmarkRecord) -> i64 {
    match (r.result, r.witness_validation) {
        (RunResult::False, WitnessValidation::Correct) => 1,
        (RunResult::True, WitnessValidation::Correct) => 2,
        (RunResult::True, WitnessValidation::NotRun | WitnessValidation::Unknown) => 1,
        _ => 0,
    }
}

pub fn score(r: &BenchmarkRecord, scheme: &ScoreScheme) -> Result<i64, ScoreError> {
    match scheme {
        ScoreScheme::Base => Ok(base_points(r)),
        ScoreScheme::Punished(truth) => {
            let t = truth
                .get(&r.task)
                .ok_or_else(|| ScoreError::MissingGroundTruth(r.task.clone()))?;
            Ok(match (r.result, t) {
                (RunResult::False, Expected::True) => WRONG_FALSE,
                (RunResult::True, Expected::False) => WRONG_TRUE,
                _ => base_points(r),
            })
        }
    }
}

fn tools(records: &[BenchmarkRecord]) -> BTreeSet<&str> {
    records.iter().map(|r| r.tool.as_str()).collect()
}

/// Per tool: definite runs sorted by CPU time, each point being the
/// accumulated score so far and that run's own CPU time. Records without
/// ground truth under the punished scheme are skipped with a warning.
pub fn quantile_data(records: &[BenchmarkRecord], scheme: &ScoreScheme) -> BTreeMap<String, Vec<(i64, f64)>> {
    let mut out = BTreeMap::new();
    for tool in tools(records) {
        let mut runs: Vec<(f64, i64)> = Vec::new();
        for r in records.iter().filter(|r| r.tool == tool && r.result.is_definite()) {
            match score(r, scheme) {
                Ok(p) => runs.push((r.cpu_time_s, p)),
                Err(e) => log::warn!("{tool}: skipping record: {e}"),
            }
        }
        runs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0;
        let series = runs
            .into_iter()
            .map(|(t, p)| {
                acc += p;
                (acc, t)
            })
            .collect();
        out.insert(tool.to_string(), series);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coverage {
    /// The top tools, by number of definite answers.
    pub tools: Vec<String>,
    /// One entry per non-empty subset of `tools`: the tasks covered by
    /// exactly that subset of the top tools.
    pub regions: Vec<(Vec<String>, usize)>,
    /// Tasks none of the top tools answered.
    pub uncovered: usize,
}

impl Coverage {
    pub fn region(&self, members: &[&str]) -> Option<usize> {
        let mut want: Vec<&str> = members.to_vec();
        want.sort();
        self.regions.iter().find_map(|(m, n)| {
            let mut have: Vec<&str> = m.iter().map(String::as_str).collect();
            have.sort();
            (have == want).then_some(*n)
        })
    }
}

pub fn coverage_sets(records: &[BenchmarkRecord], top_n: usize) -> Coverage {
    let tasks: BTreeSet<&str> = records.iter().map(|r| r.task.as_str()).collect();
    let mut covered: BTreeMap<&str, BTreeSet<&str>> = tools(records).into_iter().map(|t| (t, BTreeSet::new())).collect();
    for r in records.iter().filter(|r| r.result.is_definite()) {
        covered.get_mut(r.tool.as_str()).unwrap().insert(&r.task);
    }
    let mut ranked: Vec<(&str, usize)> = covered.iter().map(|(t, s)| (*t, s.len())).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let top: Vec<&str> = ranked.iter().take(top_n).map(|x| x.0).collect();
    let mut counts = vec![0usize; 1 << top.len()];
    for t in &tasks {
        let mask = top
            .iter()
            .enumerate()
            .filter(|(_, tool)| covered[**tool].contains(t))
            .fold(0, |m, (i, _)| m | (1 << i));
        counts[mask] += 1;
    }
    Coverage {
        tools: top.iter().map(|s| s.to_string()).collect(),
        regions: (1..counts.len())
            .map(|mask| {
                let members = top
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, t)| t.to_string())
                    .collect();
                (members, counts[mask])
            })
            .collect(),
        uncovered: counts[0],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictRow {
    pub true_set: Vec<String>,
    pub false_set: Vec<String>,
    pub count: usize,
}

pub fn conflict_table(records: &[BenchmarkRecord]) -> Vec<ConflictRow> {
    let mut per_task: BTreeMap<&str, (BTreeSet<String>, BTreeSet<String>)> = BTreeMap::new();
    for r in records {
        let e = per_task.entry(&r.task).or_default();
        match r.result {
            RunResult::True => e.0.insert(r.tool.clone()),
            RunResult::False => e.1.insert(r.tool.clone()),
            RunResult::Unknown => false,
        };
    }
    let mut groups: BTreeMap<(Vec<String>, Vec<String>), usize> = BTreeMap::new();
    for (t, f) in per_task.into_values() {
        if !t.is_empty() && !f.is_empty() {
            *groups.entry((t.into_iter().collect(), f.into_iter().collect())).or_default() += 1;
        }
    }
    let mut rows: Vec<ConflictRow> = groups
        .into_iter()
        .map(|((true_set, false_set), count)| ConflictRow {
            true_set,
            false_set,
            count,
        })
        .collect();
    // The map already orders signatures; a stable sort keeps that among equal counts.
    rows.sort_by(|a, b| b.count.cmp(&a.count));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolSummary {
    pub total: usize,
    pub true_pct: f64,
    pub false_pct: f64,
    pub unknown_pct: f64,
    /// Unknown results by reason, as a percentage of all runs of the tool.
    pub unknown_reasons: BTreeMap<String, f64>,
}

fn pct(n: usize, total: usize) -> f64 {
    (n as f64 * 1000.0 / total as f64).round() / 10.0
}

pub fn summarize(records: &[BenchmarkRecord]) -> BTreeMap<String, ToolSummary> {
    let mut out = BTreeMap::new();
    for tool in tools(records) {
        let runs: Vec<&BenchmarkRecord> = records.iter().filter(|r| r.tool == tool).collect();
        let n = runs.len();
        let count = |res: RunResult| runs.iter().filter(|r| r.result == res).count();
        let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
        for r in runs.iter().filter(|r| r.result == RunResult::Unknown) {
            *reasons.entry(r.reason.clone()).or_default() += 1;
        }
        out.insert(
            tool.to_string(),
            ToolSummary {
                total: n,
                true_pct: pct(count(RunResult::True), n),
                false_pct: pct(count(RunResult::False), n),
                unknown_pct: pct(count(RunResult::Unknown), n),
                unknown_reasons: reasons.into_iter().map(|(k, c)| (k, pct(c, n))).collect(),
            },
        );
    }
    out
}

fn join(s: &[String]) -> String {
    s.join("+")
}

/// Writes the analyses next to each other under `dir`: `quantile_<tool>.dat`
/// (gnuplot columns: accumulated score, CPU seconds) for each scheme,
/// `coverage.csv`, `conflicts.csv` and `summary.csv`.
pub fn write_reports(
    records: &[BenchmarkRecord],
    truth: &BTreeMap<String, Expected>,
    top_n: usize,
    dir: &Path,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut schemes = vec![("base", ScoreScheme::Base)];
    if !truth.is_empty() {
        schemes.push(("punished", ScoreScheme::Punished(truth.clone())));
    }
    for (name, scheme) in &schemes {
        for (tool, series) in quantile_data(records, scheme) {
            let mut s = format!("# {tool} ({name} scoring)\n# accumulated_score cpu_time_s\n");
            for (acc, t) in series {
                writeln!(s, "{acc} {t:.3}").unwrap();
            }
            std::fs::write(dir.join(format!("quantile_{name}_{}.dat", super::file_key(&tool))), s)?;
        }
    }
    let cov = coverage_sets(records, top_n);
    let mut s = String::from("region,tasks\n");
    for (members, n) in &cov.regions {
        writeln!(s, "{},{n}", join(members)).unwrap();
    }
    writeln!(s, "uncovered,{}", cov.uncovered).unwrap();
    std::fs::write(dir.join("coverage.csv"), s)?;

    let mut s = String::from("true_set,false_set,count\n");
    for row in conflict_table(records) {
        writeln!(s, "{},{},{}", join(&row.true_set), join(&row.false_set), row.count).unwrap();
    }
    std::fs::write(dir.join("conflicts.csv"), s)?;

    let mut s = String::from("tool,total,true_pct,false_pct,unknown_pct,unknown_reasons\n");
    for (tool, t) in summarize(records) {
        let reasons: Vec<String> = t.unknown_reasons.iter().map(|(k, v)| format!("{k}={v:.1}")).collect();
        writeln!(
            s,
            "{tool},{},{:.1},{:.1},{:.1},{}",
            t.total,
            t.true_pct,
            t.false_pct,
            t.unknown_pct,
            reasons.join(";")
        )
        .unwrap();
    }
    std::fs::write(dir.join("summary.csv"), s)
}
