#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;
use upn_core::compression::MergeOutcome;
use upn_core::machines::{Condition, FlowArc, Operation, Sense};
use upn_core::petri::{load_net, Net};

pub const REGISTERS: usize = 4;

pub fn golden(name: &str) -> Net {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("golden")
        .join(format!("{name}.tsv"));
    load_net(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[derive(Clone, Copy, Debug)]
struct Side {
    sense: Option<Sense>,
    dec: bool,
    inc: u8,
}

fn side(max_inc: u8) -> impl Strategy<Value = Side> {
    (
        prop_oneof![
            Just(None),
            Just(Some(Sense::Zero)),
            Just(Some(Sense::NonZero))
        ],
        any::<bool>(),
        0..=max_inc,
    )
        .prop_map(|(sense, dec, inc)| Side {
            sense,
            dec: dec && sense == Some(Sense::NonZero),
            inc,
        })
}

fn arc(from: usize, to: usize, sides: &[Side]) -> FlowArc {
    let mut conditions = Vec::new();
    let mut ops = Vec::new();
    for (r, s) in sides.iter().enumerate() {
        match s.sense {
            Some(Sense::Zero) => conditions.push(Condition::zero(r)),
            Some(Sense::NonZero) => conditions.push(Condition::nonzero(r)),
            None => {}
        }
        if s.dec {
            ops.push(Operation::dec(r));
        }
    }
    for (r, s) in sides.iter().enumerate() {
        ops.extend((0..s.inc).map(|_| Operation::inc(r)));
    }
    FlowArc::new(from, to, conditions, ops)
}

/// Adjacent arcs `0 -> 1 -> 2` whose decrements are guarded by nonzero
/// tests, and where the second arc never tests a register the first one
/// decrements.
pub fn arc_pair() -> impl Strategy<Value = (FlowArc, FlowArc)> {
    (
        prop::collection::vec(side(2), REGISTERS),
        prop::collection::vec(side(1), REGISTERS),
    )
        .prop_map(|(a, mut b)| {
            for (x, y) in a.iter().zip(b.iter_mut()) {
                if x.dec {
                    y.sense = None;
                    y.dec = false;
                }
            }
            (arc(0, 1, &a), arc(1, 2, &b))
        })
}

/// Applies the arc if its conditions hold; panics if an operation would
/// drop a register below zero, which guarded arcs never do.
pub fn take(a: &FlowArc, regs: &[u64]) -> Option<Vec<u64>> {
    if !a.enabled(regs) {
        return None;
    }
    let mut r = regs.to_vec();
    for op in &a.operations {
        if op.is_inc() {
            r[op.register] += 1;
        } else {
            r[op.register] = r[op.register].checked_sub(1).expect("guarded decrement");
        }
    }
    Some(r)
}

pub fn valuations(k: usize, max: u64) -> impl Iterator<Item = Vec<u64>> {
    (0..(max + 1).pow(k as u32)).map(move |mut n| {
        (0..k)
            .map(|_| {
                let d = n % (max + 1);
                n /= max + 1;
                d
            })
            .collect()
    })
}

/// Checks a merge outcome against walking both arcs on every register
/// valuation in `[0, 3]`. Returns a counterexample description.
pub fn check_merge(a_in: &FlowArc, a_out: &FlowArc, outcome: &MergeOutcome) -> Result<(), String> {
    let merged = match outcome {
        MergeOutcome::Arc { arc, .. } => {
            if arc.from != a_in.from || arc.to != a_out.to {
                return Err(format!(
                    "merged arc has endpoints {} -> {}",
                    arc.from, arc.to
                ));
            }
            if arc
                .conditions
                .windows(2)
                .any(|w| w[0].register == w[1].register)
            {
                return Err(format!("two conditions on one register: {arc}"));
            }
            Some(arc)
        }
        MergeOutcome::Infeasible(_) => None,
        MergeOutcome::Blocked(reason) => return Err(format!("blocked: {reason}")),
    };
    for v in valuations(REGISTERS, 3) {
        let two_step = take(a_in, &v).and_then(|mid| take(a_out, &mid));
        let one_step = merged.and_then(|m| take(m, &v));
        if two_step != one_step {
            return Err(format!(
                "at {v:?}: path gives {two_step:?}, merge gives {one_step:?} ({a_in} then {a_out})"
            ));
        }
    }
    Ok(())
}
