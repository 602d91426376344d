mod common;

use upn_core::codegen::Strategy;
use upn_core::harness::{certify, golden_diff, grid, sweep, SweepReport};
use upn_core::machines::MachineStatus;
use upn_core::petri::RunStatus;

use common::golden;

fn steps(s: Strategy, input: [u64; 2]) -> (u64, u64) {
    let v = certify(&s.reference(), &input, 10_000).unwrap();
    assert!(
        v.verified && v.passed(),
        "{s} {input:?}: {:?}",
        v.divergence
    );
    assert_eq!(v.net_status, Some(RunStatus::Deadlock));
    (v.oracle_steps, v.net_steps)
}

#[test]
fn step_counts_on_halting_inputs() {
    let table = [
        (Strategy::Direct, [1, 0], (57, 56)),
        (Strategy::IncMerge, [1, 0], (57, 34)),
        (Strategy::Checker, [1, 0], (57, 127)),
        (Strategy::CheckerMerge, [1, 0], (57, 105)),
        (Strategy::Direct, [5, 0], (218, 217)),
        (Strategy::IncMerge, [5, 0], (218, 124)),
        (Strategy::Checker, [5, 0], (218, 468)),
        (Strategy::CheckerMerge, [5, 0], (218, 375)),
        (Strategy::Compressed, [0, 0], (20, 20)),
        (Strategy::Binary, [0, 0], (20, 20)),
        (Strategy::Compressed, [4, 0], (82, 82)),
        (Strategy::Binary, [4, 0], (82, 82)),
    ];
    for (s, input, want) in table {
        assert_eq!(steps(s, input), want, "{s} {input:?}");
    }
}

#[test]
fn halting_inputs_compute_zero() {
    for s in Strategy::ALL {
        let c = s.reference();
        for input in grid(6) {
            let v = certify(&c, &input, 2_000).unwrap();
            if v.verified {
                assert_eq!(v.oracle_status, MachineStatus::Halted);
                assert_eq!(v.net_output, Some(0), "{s} {input:?}");
            }
        }
    }
}

#[test]
fn small_limit_sweep() {
    let r = sweep(&Strategy::ALL, None, &grid(6), 1_000).unwrap();
    assert!(r.all_passed(), "{}", r.summary());
    assert_eq!(r.verdicts.len(), 6 * 36);
    for s in Strategy::ALL {
        let verified = r
            .verdicts
            .iter()
            .filter(|e| e.strategy == s && e.verdict.verified)
            .count();
        assert_eq!(verified, 12, "{s}");
    }
    let back: SweepReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
    let summary = r.summary();
    assert!(summary
        .lines()
        .any(|l| l.starts_with("binary") && l.contains("p=11 t=31 h=79 d=11")));
    assert!(!summary.contains("FAIL"));
}

#[test]
fn sweep_is_deterministic() {
    let a = sweep(&Strategy::ALL, None, &grid(3), 500).unwrap();
    let b = sweep(&Strategy::ALL, None, &grid(3), 500).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn compressed_goldens_differ_in_one_column() {
    for (s, name) in [(Strategy::Compressed, "n2"), (Strategy::Binary, "n3")] {
        let net = s.reference().net;
        let d = golden_diff(&net, &golden(name));
        assert!(
            d.missing_places.is_empty() && d.extra_places.is_empty(),
            "{d}"
        );
        assert!(d.missing_rows.is_empty() && d.extra_rows.is_empty(), "{d}");
        assert_eq!(d.mismatched.len(), 3, "{name}: {d}");
        assert!(
            d.mismatched
                .iter()
                .all(|r| r.cells.len() == 1 && r.cells[0].0 == "R6"),
            "{d}"
        );
    }
}

#[test]
fn direct_matches_golden_n1() {
    let d = golden_diff(&Strategy::Direct.reference().net, &golden("n1"));
    assert!(d.is_empty(), "{d}");
}
