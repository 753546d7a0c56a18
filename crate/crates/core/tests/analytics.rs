use std::collections::BTreeMap;

use kinduct::harness::{
    conflict_table, coverage_sets, quantile_data, read_csv, score, summarize, to_csv, BenchmarkRecord, Expected,
    Limits, RunResult, ScoreError, ScoreScheme, WitnessValidation, CSV_HEADER,
};
use proptest::prelude::*;

fn rec(task: &str, tool: &str, result: RunResult, wv: WitnessValidation, cpu: f64) -> BenchmarkRecord {
    BenchmarkRecord {
        task: task.into(),
        tool: tool.into(),
        result,
        reason: if result == RunResult::Unknown { "timeout".into() } else { String::new() },
        cpu_time_s: cpu,
        mem_peak_mb: 10.0,
        solver_time_s: Some(cpu / 2.0),
        depth: Some(3),
        witness_validation: wv,
        wall_time_s: cpu,
    }
}

use RunResult::{False as F, True as T, Unknown as U};
use WitnessValidation::{Correct, Invalid, NotRun, Unknown as WU};

#[test]
fn base_score_table() {
    let cases = [
        (F, Correct, 1),
        (F, WU, 0),
        (F, Invalid, 0),
        (F, NotRun, 0),
        (T, Correct, 2),
        (T, WU, 1),
        (T, NotRun, 1),
        (T, Invalid, 0),
        (U, NotRun, 0),
    ];
    for (r, w, pts) in cases {
        assert_eq!(score(&rec("t", "a", r, w, 1.0), &ScoreScheme::Base), Ok(pts), "{r:?} {w:?}");
    }
}

#[test]
fn punished_scores() {
    let truth: BTreeMap<String, Expected> =
        [("safe".to_string(), Expected::True), ("bug".to_string(), Expected::False)].into();
    let s = ScoreScheme::Punished(truth);
    assert_eq!(score(&rec("bug", "a", T, Correct, 1.0), &s), Ok(-32));
    assert_eq!(score(&rec("safe", "a", F, Correct, 1.0), &s), Ok(-16));
    assert_eq!(score(&rec("safe", "a", T, Correct, 1.0), &s), Ok(2));
    assert_eq!(score(&rec("bug", "a", F, Correct, 1.0), &s), Ok(1));
    assert_eq!(score(&rec("bug", "a", U, NotRun, 1.0), &s), Ok(0));
    assert_eq!(
        score(&rec("other", "a", T, Correct, 1.0), &s),
        Err(ScoreError::MissingGroundTruth("other".into()))
    );
}

#[test]
fn quantile_examples() {
    let rs = vec![
        rec("t2", "a", T, NotRun, 100.0),
        rec("t1", "a", T, Correct, 10.0),
        rec("t3", "a", U, NotRun, 1.0),
        rec("t1", "b", U, NotRun, 5.0),
    ];
    let q = quantile_data(&rs, &ScoreScheme::Base);
    assert_eq!(q["a"], vec![(2, 10.0), (3, 100.0)]);
    assert!(q["b"].is_empty());

    let truth = [("x".to_string(), Expected::False)].into();
    let q = quantile_data(&[rec("x", "c", T, Correct, 50.0)], &ScoreScheme::Punished(truth));
    assert_eq!(q["c"], vec![(-32, 50.0)]);
    // Records lacking ground truth are skipped, not fatal.
    let q = quantile_data(&[rec("y", "c", T, Correct, 50.0)], &ScoreScheme::Punished(BTreeMap::new()));
    assert!(q["c"].is_empty());
}

#[test]
fn coverage_examples() {
    let rs = vec![
        rec("t1", "A", T, Correct, 1.0),
        rec("t2", "A", F, Correct, 1.0),
        rec("t3", "A", U, NotRun, 1.0),
        rec("t1", "B", U, NotRun, 1.0),
        rec("t2", "B", T, NotRun, 1.0),
        rec("t3", "B", U, NotRun, 1.0),
    ];
    let c = coverage_sets(&rs, 2);
    assert_eq!(c.tools, vec!["A", "B"]);
    assert_eq!(c.regions.len(), 3);
    assert_eq!(c.region(&["A"]), Some(1));
    assert_eq!(c.region(&["A", "B"]), Some(1));
    assert_eq!(c.region(&["B"]), Some(0));
    assert_eq!(c.uncovered, 1);

    let all = vec![rec("t1", "A", T, Correct, 1.0), rec("t2", "A", F, Correct, 1.0)];
    let c = coverage_sets(&all, 3);
    assert_eq!(c.regions, vec![(vec!["A".to_string()], 2)]);
    assert_eq!(c.uncovered, 0);
}

#[test]
fn conflict_examples() {
    let rs = vec![rec("t", "A", T, NotRun, 1.0), rec("t", "B", F, NotRun, 1.0), rec("t", "C", U, NotRun, 1.0)];
    let rows = conflict_table(&rs);
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].true_set.clone(), rows[0].false_set.clone(), rows[0].count), (vec!["A".into()], vec!["B".into()], 1));
    assert!(conflict_table(&[rec("t", "A", T, NotRun, 1.0), rec("t", "B", T, NotRun, 1.0)]).is_empty());

    let mut many = Vec::new();
    for i in 0..4 {
        many.push(rec(&format!("x{i}"), "BTC", T, NotRun, 1.0));
        many.push(rec(&format!("x{i}"), "CBMC", T, NotRun, 1.0));
        many.push(rec(&format!("x{i}"), "Taipan", F, NotRun, 1.0));
    }
    many.push(rec("y", "A", F, NotRun, 1.0));
    many.push(rec("y", "Z", T, NotRun, 1.0));
    let rows = conflict_table(&many);
    assert_eq!(rows[0].count, 4);
    assert_eq!(rows[0].true_set, vec!["BTC", "CBMC"]);
    assert_eq!(rows[0].false_set, vec!["Taipan"]);
    assert_eq!(rows[1].count, 1);
}

fn distribution(tool: &str, t: usize, f: usize, u: usize) -> Vec<BenchmarkRecord> {
    let mut v = Vec::new();
    for (n, r) in [(t, T), (f, F), (u, U)] {
        for i in 0..n {
            v.push(rec(&format!("{r:?}{i}"), tool, r, NotRun, 1.0));
        }
    }
    v
}

#[test]
fn summary_examples() {
    let mut rs = distribution("s105", 59, 23, 23);
    rs.extend(distribution("s74", 41, 20, 13));
    let s = summarize(&rs);
    let a = &s["s105"];
    assert_eq!((a.total, a.true_pct, a.false_pct, a.unknown_pct), (105, 56.2, 21.9, 21.9));
    assert_eq!(a.unknown_reasons["timeout"], 21.9);
    let b = &s["s74"];
    assert_eq!((b.total, b.true_pct, b.false_pct, b.unknown_pct), (74, 55.4, 27.0, 17.6));
    assert!(summarize(&[]).is_empty());
}

#[test]
fn csv_round_trip() {
    let mut rs = vec![rec("t1", "a", T, Correct, 1.23456), rec("t,2", "b", U, NotRun, 0.5)];
    rs[1].solver_time_s = None;
    rs[1].depth = None;
    let limits = Limits::default();
    let text = to_csv(&rs, &limits);
    assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
    assert!(text.contains("t1,a,True,,1.235,10.0,0.617,3,Correct\n"), "{text}");
    let back = read_csv(&text).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!(back[1].task, "t,2");
    assert_eq!(back[1].solver_time_s, None);
    assert_eq!(to_csv(&back, &limits), text);
}

fn arb_record() -> impl Strategy<Value = BenchmarkRecord> {
    (0..6u8, 0..3u8, 0..3u8, 0..4u8, 0.0..100.0f64).prop_map(|(task, tool, r, w, cpu)| {
        let result = [T, F, U][r as usize];
        let wv = if result == U { NotRun } else { [Correct, Invalid, WU, NotRun][w as usize] };
        rec(&format!("t{task}"), &format!("tool{tool}"), result, wv, cpu)
    })
}

proptest! {
    #[test]
    fn summary_percentages_sum_to_100(rs in prop::collection::vec(arb_record(), 1..60)) {
        for s in summarize(&rs).values() {
            let sum = s.true_pct + s.false_pct + s.unknown_pct;
            prop_assert!((sum - 100.0).abs() <= 0.2, "{sum}");
        }
    }

    #[test]
    fn quantile_series_are_sorted_and_base_is_monotone(rs in prop::collection::vec(arb_record(), 0..60)) {
        for series in quantile_data(&rs, &ScoreScheme::Base).values() {
            for w in series.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
                prop_assert!(w[0].0 <= w[1].0);
            }
        }
        let truth = (0..6).map(|i| (format!("t{i}"), if i % 2 == 0 { Expected::True } else { Expected::False })).collect();
        let scheme = ScoreScheme::Punished(truth);
        for series in quantile_data(&rs, &scheme).values() {
            for w in series.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
        }
        for r in &rs {
            prop_assert_eq!(score(r, &scheme), score(r, &scheme));
        }
    }

    #[test]
    fn coverage_regions_partition_the_tasks(rs in prop::collection::vec(arb_record(), 1..60), top in 1usize..4) {
        let c = coverage_sets(&rs, top);
        let tasks: std::collections::BTreeSet<&str> = rs.iter().map(|r| r.task.as_str()).collect();
        prop_assert_eq!(c.regions.len(), (1 << c.tools.len()) - 1);
        prop_assert_eq!(c.regions.iter().map(|r| r.1).sum::<usize>() + c.uncovered, tasks.len());
    }
}
