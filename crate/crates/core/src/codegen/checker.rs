use std::collections::BTreeSet;

use super::{
    apply_encoding, direct_check, fold_increments, register_places, set_interface, state_place,
    waiting_place, ArcEncoding, IncidenceCell,
};
use crate::error::{Error, Result};
use crate::machines::{rm_to_flowgraph, FlowArc, FlowGraph, RegisterMachine, Sense};
use crate::petri::{Net, NetBuilder, PlaceId, TransitionId};

/// How a live state leaves: one unconditional increment-only arc, or a
/// zero test on one register.
enum Shape<'a> {
    Plain(&'a FlowArc),
    Test {
        register: usize,
        nonzero: &'a FlowArc,
        zero: &'a FlowArc,
    },
}

fn increments_only(ops: &[crate::machines::Operation]) -> bool {
    ops.iter().all(|o| o.is_inc())
}

fn shape<'a>(g: &'a FlowGraph, s: usize) -> Result<Shape<'a>> {
    let out: Vec<&FlowArc> = g.outgoing(s).collect();
    let unsupported = || Error::Unsupported {
        state: g.state_name(s).to_string(),
        kind: "arc shape".to_string(),
    };
    match out[..] {
        [a] if a.conditions.is_empty() && increments_only(&a.operations) => Ok(Shape::Plain(a)),
        [a, b] => {
            let (nz, z) = match (a.conditions.as_slice(), b.conditions.as_slice()) {
                ([c], [d]) if c.register == d.register && c.sense == Sense::NonZero => (a, b),
                ([c], [d]) if c.register == d.register && d.sense == Sense::NonZero => (b, a),
                _ => return Err(unsupported()),
            };
            let r = nz.conditions[0].register;
            let ok = z.conditions[0].sense == Sense::Zero
                && nz
                    .operations
                    .first()
                    .is_some_and(|o| o.register == r && !o.is_inc())
                && increments_only(&nz.operations[1..])
                && increments_only(&z.operations);
            if ok {
                Ok(Shape::Test {
                    register: r,
                    nonzero: nz,
                    zero: z,
                })
            } else {
                Err(unsupported())
            }
        }
        _ => Err(unsupported()),
    }
}

fn increments(arc: &FlowArc, skip: usize) -> ArcEncoding {
    let mut enc = ArcEncoding::default();
    for o in &arc.operations[skip..] {
        enc.cells
            .entry(o.register)
            .or_insert(IncidenceCell::default())
            .post += 1;
    }
    enc
}

/// Checker translation: no transition of the machine part carries an
/// inhibitor. A zero test at `Qj` on `Ri` splits into `Qj'` and a request
/// token on `Ci`; the register block answers on `CiNZ` (taking one token
/// from `Ri`) or `CiZ` (under the block's only inhibitor), and a join
/// moves on to the branch target. Blocks exist only for tested registers.
pub fn checker_from_flowgraph(g: &FlowGraph) -> Result<Net> {
    let live = g.live_states();
    let shapes: Vec<(usize, Shape)> = live
        .iter()
        .map(|&s| shape(g, s).map(|sh| (s, sh)))
        .collect::<Result<_>>()?;
    let tested: BTreeSet<usize> = shapes
        .iter()
        .filter_map(|(_, sh)| match sh {
            Shape::Test { register, .. } => Some(*register),
            Shape::Plain(_) => None,
        })
        .collect();

    let mut b = Net::builder();
    let mut control: Vec<Option<PlaceId>> = vec![None; g.state_count()];
    for &s in &live {
        control[s] = Some(b.new_place(&state_place(g.state_name(s))));
    }
    let mut waiting: Vec<Option<PlaceId>> = vec![None; g.state_count()];
    for (s, sh) in &shapes {
        if let Shape::Test { .. } = sh {
            waiting[*s] = Some(b.new_place(&waiting_place(g.state_name(*s))));
        }
    }
    let blocks: Vec<(usize, [PlaceId; 3])> = tested
        .iter()
        .map(|&r| {
            let c = b.new_place(&format!("C{r}"));
            let z = b.new_place(&format!("C{r}Z"));
            let nz = b.new_place(&format!("C{r}NZ"));
            (r, [c, z, nz])
        })
        .collect();
    let block = |r: usize| {
        blocks
            .iter()
            .find(|(x, _)| *x == r)
            .expect("block exists")
            .1
    };
    let regs = register_places(&mut b, g.registers());

    let mut n = 0;
    let mut next = |b: &mut NetBuilder| -> TransitionId {
        n += 1;
        b.transition(&format!("T{n}"))
    };
    let enter = |b: &mut NetBuilder, t: TransitionId, to: usize| {
        if let Some(p) = control[to] {
            b.produce(t, p, 1);
        }
    };
    for (s, sh) in &shapes {
        let qs = control[*s].expect("live state has a place");
        match sh {
            Shape::Plain(a) => {
                let t = next(&mut b);
                b.consume(qs, t, 1);
                apply_encoding(&mut b, t, &regs, &increments(a, 0));
                enter(&mut b, t, a.to);
            }
            Shape::Test {
                register,
                nonzero,
                zero,
            } => {
                let [c, cz, cnz] = block(*register);
                let w = waiting[*s].expect("test state waits");
                let t = next(&mut b);
                b.consume(qs, t, 1).produce(t, w, 1).produce(t, c, 1);
                let t = next(&mut b);
                b.consume(w, t, 1).consume(cnz, t, 1);
                apply_encoding(&mut b, t, &regs, &increments(nonzero, 1));
                enter(&mut b, t, nonzero.to);
                let t = next(&mut b);
                b.consume(w, t, 1).consume(cz, t, 1);
                apply_encoding(&mut b, t, &regs, &increments(zero, 0));
                enter(&mut b, t, zero.to);
            }
        }
    }
    for (r, [c, cz, cnz]) in &blocks {
        let t = next(&mut b);
        b.consume(*c, t, 1)
            .consume(regs[*r], t, 1)
            .produce(t, *cnz, 1);
        let t = next(&mut b);
        b.consume(*c, t, 1).inhibit(regs[*r], t).produce(t, *cz, 1);
    }
    if let Some(p) = control[g.initial()] {
        b.initial_tokens(p, 1);
    }
    set_interface(&mut b, &regs, g.io());
    b.build()
}

/// Checker translation of a machine using `RiP`, `RiZM` and `STOP`.
pub fn checker(m: &RegisterMachine) -> Result<Net> {
    direct_check(m)?;
    checker_from_flowgraph(&rm_to_flowgraph(m))
}

/// Checker translation with increment states folded into joins.
pub fn checker_inc_merge(m: &RegisterMachine) -> Result<Net> {
    direct_check(m)?;
    checker_from_flowgraph(&fold_increments(&rm_to_flowgraph(m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::Metrics;

    fn doubler() -> RegisterMachine {
        "registers 3\nq1 R1ZM q2 qf\nq2 R0P q3\nq3 R0P q1\nqf STOP"
            .parse()
            .unwrap()
    }

    #[test]
    fn one_block_per_tested_register() {
        let net = checker(&doubler()).unwrap();
        assert_eq!(
            net.places(),
            ["Q1", "Q2", "Q3", "Q1'", "C1", "C1Z", "C1NZ", "R0", "R1", "R2"]
        );
        assert_eq!(net.metrics().h, 1);
        assert_eq!(net.compute(&[3, 0], 1000).unwrap(), Some(6));
    }

    #[test]
    fn folded_joins() {
        let net = checker_inc_merge(&doubler()).unwrap();
        assert_eq!(
            net.places(),
            ["Q1", "Q1'", "C1", "C1Z", "C1NZ", "R0", "R1", "R2"]
        );
        assert_eq!(net.metrics(), Metrics::new(8, 5, 1, 4));
        assert_eq!(net.compute(&[4, 1], 1000).unwrap(), Some(8));
    }

    #[test]
    fn rejects_multiway_states() {
        let g: FlowGraph = "a -> a | R1!=0, R2!=0 | R1M\na -> h | R1=0 |"
            .parse()
            .unwrap();
        assert!(matches!(
            checker_from_flowgraph(&g),
            Err(Error::Unsupported { .. })
        ));
    }
}
