//! Acceptance run: one PASS/FAIL line per criterion. With `-- --strict`
//! the process exits nonzero if any criterion fails; without it the run
//! only reports, so `cargo test` goes on to the remaining test targets.

mod common;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config as RunnerConfig, TestRunner};
use upn_core::codegen::{from_flowgraph, HaltArcs, Strategy};
use upn_core::compression::{compress, merge_arcs, MergeOutcome};
use upn_core::harness::{check_step, golden_diff, grid, sweep, StateMap, StepCheck};
use upn_core::machines::{rm_to_flowgraph, u22, Config};
use upn_core::petri::{
    export_incidence, import_incidence, Delimiter, Metrics, Net, NetDocument, RunStatus,
};

use common::{arc_pair, check_merge, golden};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const GRID: u64 = 6;
const LIMIT: u64 = 10_000_000;

/// Strategies in the order the size vectors are listed.
const LISTED: [(Strategy, (usize, usize, usize, usize)); 6] = [
    (Strategy::Direct, (30, 34, 13, 3)),
    (Strategy::Compressed, (14, 31, 51, 8)),
    (Strategy::Binary, (11, 31, 79, 11)),
    (Strategy::IncMerge, (21, 25, 13, 5)),
    (Strategy::Checker, (67, 64, 8, 3)),
    (Strategy::CheckerMerge, (58, 55, 8, 5)),
];

fn sizes() -> Outcome {
    let start = Instant::now();
    let got: Vec<(Strategy, Metrics)> = LISTED
        .iter()
        .map(|&(s, _)| (s, s.reference().net.metrics()))
        .collect();
    let elapsed = start.elapsed();
    let wrong: Vec<String> = LISTED
        .iter()
        .zip(&got)
        .filter(|((_, want), (_, m))| m.as_tuple() != *want)
        .map(|((s, want), (_, m))| format!("{s}: got ({m}) want {want:?}"))
        .collect();
    let fast = elapsed < Duration::from_secs(1);
    if wrong.is_empty() && fast {
        return outcome(true, format!("six vectors exact in {elapsed:?}"));
    }
    let kept = from_flowgraph(&rm_to_flowgraph(&u22()), HaltArcs::Consume)
        .unwrap()
        .metrics();
    outcome(
        false,
        format!(
            "{}; {elapsed:?}. The golden n1 table has 34 transitions and 12 inhibitor \
             arcs, so h=13 and t=34 cannot both hold: keeping the operation-free zero \
             branch into the final state gives ({kept}), dropping it (as built, and as the \
             table does) gives h=12. inc-merge inherits the same branch.",
            wrong.join("; ")
        ),
    )
}

fn golden_n1() -> Outcome {
    let d = golden_diff(&Strategy::Direct.reference().net, &golden("n1"));
    match d.is_empty() && d.renamed().count() == 0 {
        true => outcome(true, "direct(u22) equals golden n1 up to row order"),
        false => outcome(false, d.to_string()),
    }
}

fn weak_imports() -> Outcome {
    let want = [
        ("nw1", (27, 31, 12, 3)),
        ("nw2", (14, 21, 23, 8)),
        ("nw3", (10, 21, 44, 10)),
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, w) in want {
        let m = golden(name).metrics();
        let ok = m.as_tuple() == w;
        pass &= ok;
        lines.push(format!(
            "{name} ({m}) {}",
            if ok { "ok" } else { "differs" }
        ));
    }
    let mut detail = lines.join("; ");
    if !pass {
        detail.push_str(
            ". The tables as printed carry 11 inhibitor cells in nw1 and only 13 columns \
             with a widest row of 7 arcs in nw2; the stated sizes do not follow from them.",
        );
    }
    outcome(pass, detail)
}

fn compression_power() -> Outcome {
    let g = compress(&rm_to_flowgraph(&u22()));
    let halting = g.halting().len();
    let pinned = 7;
    let pass = g.state_count() <= 7 && halting == 1 && g.state_count() == pinned;
    outcome(
        pass,
        format!(
            "{} states ({} halting), {} arcs; pinned {pinned}",
            g.state_count(),
            halting,
            g.arcs().len()
        ),
    )
}

fn behaviour(nondeterministic: &mut usize) -> Outcome {
    let start = Instant::now();
    let report = sweep(&Strategy::ALL, None, &grid(GRID), LIMIT).expect("sweep runs");
    let verified = report
        .verdicts
        .iter()
        .filter(|e| e.verdict.verified)
        .count();
    let unverified = report.verdicts.len() - verified;
    *nondeterministic += report
        .verdicts
        .iter()
        .filter(|e| e.verdict.net_status == Some(RunStatus::NondeterminismDetected))
        .count();
    let bad: Vec<String> = report
        .verdicts
        .iter()
        .filter(|e| {
            !e.verdict.passed()
                || (e.verdict.verified && e.verdict.net_status != Some(RunStatus::Deadlock))
        })
        .map(|e| {
            format!(
                "{} {:?}: {:?}",
                e.strategy, e.verdict.inputs, e.verdict.divergence
            )
        })
        .collect();
    outcome(
        bad.is_empty() && verified > 0,
        format!(
            "{verified} runs certified, {unverified} beyond {LIMIT} oracle steps, {} failures in {:?}{}",
            bad.len(),
            start.elapsed(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}

/// Register vectors: all registers at `v`, or one register at `v`.
fn register_patterns(k: usize) -> Vec<Vec<u64>> {
    let mut out = BTreeSet::new();
    for v in 0..=3 {
        out.insert(vec![v; k]);
        for r in 0..k {
            let mut x = vec![0; k];
            x[r] = v;
            out.insert(x);
        }
    }
    out.into_iter().collect()
}

fn gadgets(nondeterministic: &mut usize) -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut failures = Vec::new();
    for s in Strategy::ALL {
        let c = s.reference();
        let o = c.program.oracle();
        let map = StateMap::for_compiled(&c).expect("state map");
        for state in (0..o.states().len()).filter(|&q| map.represents(q)) {
            for registers in register_patterns(o.registers()) {
                let cfg = Config { state, registers };
                checked += 1;
                match check_step(o, &c.net, &map, &cfg).expect("step check") {
                    StepCheck::Agree { .. } => {}
                    StepCheck::Nondeterministic(d) => {
                        *nondeterministic += 1;
                        failures.push(format!("{s}: {d}"));
                    }
                    StepCheck::Diverge(d) => failures.push(format!("{s}: {d}")),
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(1),
        format!(
            "{checked} single-step checks over six strategies, {} failures, {elapsed:?}{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!("; first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn determinism(nondeterministic: usize) -> Outcome {
    outcome(
        nondeterministic == 0,
        format!("{nondeterministic} markings with two or more enabled transitions"),
    )
}

fn same_up_to_order(a: &Net, b: &Net) -> bool {
    let d = golden_diff(a, b);
    d.is_empty() && d.renamed().count() == 0
}

fn round_trip() -> Outcome {
    let mut nets: Vec<(String, Net)> = Strategy::ALL
        .iter()
        .map(|s| (s.name().to_string(), s.reference().net))
        .collect();
    for g in ["n1", "n2", "n3", "nw1", "nw2", "nw3"] {
        nets.push((g.to_string(), golden(g)));
    }
    let mut bad = Vec::new();
    for (name, net) in &nets {
        for delim in [Delimiter::Tab, Delimiter::Comma] {
            let back = import_incidence(&export_incidence(net, delim), delim).expect("import");
            if !same_up_to_order(&back, net) || back.metrics() != net.metrics() {
                bad.push(format!("{name} ({delim:?})"));
            }
        }
        let doc = NetDocument::from_json(&NetDocument::of(net).to_json()).expect("json");
        let back = doc.into_net().expect("document");
        if back.to_string() != net.to_string() || back.initial_marking() != net.initial_marking() {
            bad.push(format!("{name} (json)"));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} nets, tab, comma and json; failing: {bad:?}", nets.len()),
    )
}

fn merge_rules() -> Outcome {
    let cases = 10_000;
    let seen = RefCell::new(BTreeSet::new());
    let mut runner = TestRunner::new(RunnerConfig {
        cases,
        failure_persistence: None,
        ..RunnerConfig::default()
    });
    let result = runner.run(&arc_pair(), |(a_in, a_out)| {
        let outcome = merge_arcs(&a_in, &a_out);
        match &outcome {
            MergeOutcome::Arc { rules, .. } => {
                seen.borrow_mut().extend(rules.iter().map(|r| r.kind.tag()))
            }
            MergeOutcome::Infeasible(rule) => {
                seen.borrow_mut().insert(rule.kind.tag());
            }
            MergeOutcome::Blocked(_) => {}
        }
        check_merge(&a_in, &a_out, &outcome).map_err(proptest::test_runner::TestCaseError::fail)
    });
    let seen = seen.into_inner();
    let all_rules = seen.len() == 6;
    match result {
        Ok(()) => outcome(
            all_rules,
            format!("{cases} random pairs, no counterexample; rules exercised: {seen:?}"),
        ),
        Err(e) => outcome(false, format!("counterexample: {e}")),
    }
}

fn main() {
    let mut nondeterministic = 0;
    let results = [
        ("size reproduction", sizes()),
        ("golden table n1", golden_n1()),
        ("imported weak-net sizes", weak_imports()),
        ("compression power", compression_power()),
        ("behavioural equivalence", behaviour(&mut nondeterministic)),
        ("gadget semantics", gadgets(&mut nondeterministic)),
        ("determinism audit", determinism(nondeterministic)),
        ("round trip", round_trip()),
        ("merge rules", merge_rules()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} criterion {} ({name}): {}", i + 1, o.detail);
    }
    println!(
        "{} of {} criteria pass",
        results.len() - failed,
        results.len()
    );
    if failed > 0 && std::env::args().any(|a| a == "--strict") {
        std::process::exit(1);
    }
}
