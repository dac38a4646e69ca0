use std::time::{Duration, Instant};

use hadamard_core::suites::{self, SuiteReport, SUITES};
use hadamard_core::Exec;

const SEED: u64 = 42;

struct Gate {
    lines: Vec<String>,
    failed: usize,
}

impl Gate {
    fn record(&mut self, id: usize, title: &str, ok: bool, detail: String) {
        let status = if ok { "PASS" } else { "FAIL" };
        self.failed += usize::from(!ok);
        self.lines.push(format!("criterion {id:>2} {status} {title}: {detail}"));
    }
}

fn timed(name: &str) -> (SuiteReport, Duration) {
    let index = SUITES.iter().position(|s| *s == name).expect("known suite") as u64;
    let start = Instant::now();
    let report = suites::run_suite(name, None, SEED + index, Exec::default()).expect("suite runs");
    (report, start.elapsed())
}

/// Checks selected by `pick`, all passing, with a readable summary.
fn judge(report: &SuiteReport, pick: impl Fn(&str) -> bool) -> (bool, String) {
    let chosen: Vec<_> = report.checks.iter().filter(|c| pick(&c.name)).collect();
    let bad: Vec<_> = chosen.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let worst = chosen
        .iter()
        .filter(|c| c.tol > 0.0)
        .map(|c| c.worst / c.tol)
        .fold(0.0_f64, f64::max);
    let ok = !chosen.is_empty() && bad.is_empty();
    let mut detail = format!("{} checks, worst/tol {:.2e}", chosen.len(), worst);
    if !bad.is_empty() {
        detail.push_str(&format!(", failing {bad:?}"));
    }
    (ok, detail)
}

fn with_time(ok: bool, detail: String, took: Duration, limit: Duration) -> (bool, String) {
    (
        ok && took < limit,
        format!("{detail}, {:.2}s (limit {}s)", took.as_secs_f64(), limit.as_secs()),
    )
}

#[test]
fn acceptance() {
    let mut gate = Gate {
        lines: Vec::new(),
        failed: 0,
    };
    let secs = Duration::from_secs;

    let (r, t) = timed("geometry");
    let (ok, d) = judge(&r, |n| n.ends_with("/round_trip") || n.ends_with("/comparison"));
    let (ok, d) = with_time(ok && r.passed, d, t, secs(10));
    gate.record(1, "geometry round trip and comparison", ok, d);

    let (r, t) = timed("busemann");
    let (ok, d) = judge(&r, |n| n != "flat_regularizer_identity");
    let (ok, d) = with_time(ok, d, t, secs(30));
    gate.record(2, "busemann suite on H2", ok, d);
    let (ok, d) = judge(&r, |n| n == "flat_regularizer_identity");
    gate.record(3, "flat regularizer identity", ok, d);

    let (r, t) = timed("jensen");
    let (ok, d) = judge(&r, |n| n.contains("/N="));
    let (ok, d) = with_time(ok && r.checks.len() == 36, d, t, secs(120));
    gate.record(4, "jensen inequalities", ok, d);

    let (r, _) = timed("combinations");
    let (ok, d) = judge(&r, |n| {
        n.starts_with("permutation_invariance/") || n.starts_with("euclidean_collapse/") || n == "spd_geometric_mean_identity"
    });
    gate.record(5, "commutative combination", ok, d);

    let (r, _) = timed("monotone");
    let (ok, d) = judge(&r, |n| n.starts_with("regularized/"));
    gate.record(6, "regularized monotonicity", ok, d);

    let (r, t) = timed("resolvent");
    let (ok, d) = judge(&r, |_| true);
    let (ok, d) = with_time(ok, d, t, secs(60));
    gate.record(7, "resolvent", ok, d);

    let (r, _) = timed("ppa");
    let (ok, d) = judge(&r, |_| true);
    gate.record(8, "proximal point", ok, d);

    let (r, t) = timed("helly");
    let (ok, d) = judge(&r, |_| true);
    let (ok, d) = with_time(ok, d, t, secs(120));
    gate.record(9, "helly harness", ok, d);

    let all = vec!["all".to_string()];
    let a = suites::verify_suites(&all, None, SEED, Exec::default()).expect("verify runs");
    let b = suites::verify_suites(&all, None, SEED, Exec::default()).expect("verify runs");
    let same = serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();
    gate.record(
        10,
        "determinism of verify all",
        same && a.passed,
        format!("identical = {same}, failures = {}", a.failures),
    );

    for line in &gate.lines {
        println!("{line}");
    }
    assert_eq!(gate.failed, 0, "{}", gate.lines.join("\n"));
}
