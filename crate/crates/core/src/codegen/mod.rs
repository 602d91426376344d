//! Translations from register machines and flow graphs to nets.
//!
//! Place names are stable so generated tables can be compared with
//! reference tables: `Q<state>` for control, `R<i>` for registers,
//! `Q<state>'` for checker waiting places and `C<i>`, `C<i>Z`, `C<i>NZ` for
//! checker blocks. A state's place drops a leading `q`, so `q7` owns `Q7`.

mod binary;
mod checker;
mod strategy;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compression::compress_state;
use crate::error::{Error, Result};
use crate::machines::{
    place_suffix, rm_to_flowgraph, FlowArc, FlowGraph, Instruction, Io, RegisterMachine, Sense,
};
use crate::petri::{IncidenceCell, Net, NetBuilder, PlaceId, TransitionId};

pub use binary::{assign_codes, binary, StateCode};
pub use checker::{checker, checker_from_flowgraph, checker_inc_merge};
pub use strategy::{Compiled, Strategy};

/// What to do with arcs that enter a halting state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HaltArcs {
    /// Consume the control token and produce none; the net deadlocks with
    /// no control token left.
    #[default]
    Consume,
    /// Drop operation-free arcs into halting states, so the net deadlocks in
    /// the source state instead. Remaining arcs into a halting state put the
    /// control token on that state's place.
    Erase,
}

pub fn state_place(state: &str) -> String {
    format!("Q{}", place_suffix(state))
}

pub fn waiting_place(state: &str) -> String {
    format!("Q{}'", place_suffix(state))
}

pub fn register_place(r: usize) -> String {
    format!("R{r}")
}

/// Register cells of one flow-graph arc, keyed by register.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ArcEncoding {
    pub cells: BTreeMap<usize, IncidenceCell>,
}

impl ArcEncoding {
    pub fn cell(&self, register: usize) -> IncidenceCell {
        self.cells.get(&register).copied().unwrap_or_default()
    }
}

/// Register weights for an arc. Per register, with `inc`/`dec` the number
/// of increments/decrements:
/// a zero test gives an inhibitor and produces `inc`;
/// a nonzero test with `dec >= 1` consumes `dec` and produces `inc`;
/// a nonzero test with no decrement reads the token back, `(1, 1 + inc)`;
/// an untested register consumes `dec` and produces `inc` uncancelled.
///
/// Decrements that follow increments of the same register in the
/// operation list only consume what the earlier increments have not
/// covered (`R1P R1M` needs no token), so the consumed weight is the
/// deepest the register dips below its starting value, and the produced
/// weight keeps the net effect. The same goes for a zero test, which only
/// rejects a decrement that is not covered.
pub fn encode_arc(arc: &FlowArc) -> Result<ArcEncoding> {
    let mut cells = BTreeMap::new();
    for r in arc.registers() {
        let inc = arc.increments(r) as i64;
        let dec = arc.decrements(r) as i64;
        let dip = dip(arc, r);
        let cell = match arc.condition(r) {
            Some(Sense::Zero) if dip > 0 => {
                return Err(Error::IllFormedArc(format!(
                    "R{r} decremented under a zero test"
                )))
            }
            Some(Sense::Zero) => IncidenceCell {
                pre: -1,
                post: (inc - dec) as u32,
            },
            Some(Sense::NonZero) => {
                let pre = dip.max(1);
                IncidenceCell {
                    pre,
                    post: (pre + inc - dec) as u32,
                }
            }
            None => IncidenceCell {
                pre: dip,
                post: (dip + inc - dec) as u32,
            },
        };
        if !cell.is_empty() {
            cells.insert(r, cell);
        }
    }
    Ok(ArcEncoding { cells })
}

/// Largest drop of register `r` below its value on entry while applying
/// the arc's operations in order.
fn dip(arc: &FlowArc, r: usize) -> i64 {
    let mut level = 0i64;
    let mut low = 0i64;
    for op in arc.operations.iter().filter(|op| op.register == r) {
        level += if op.is_inc() { 1 } else { -1 };
        low = low.min(level);
    }
    -low
}

pub(crate) fn register_places(b: &mut NetBuilder, registers: usize) -> Vec<PlaceId> {
    (0..registers)
        .map(|r| b.new_place(&register_place(r)))
        .collect()
}

pub(crate) fn apply_encoding(
    b: &mut NetBuilder,
    t: TransitionId,
    regs: &[PlaceId],
    enc: &ArcEncoding,
) {
    for (&r, cell) in &enc.cells {
        b.set_weight_in(regs[r], t, cell.pre);
        b.produce(t, regs[r], cell.post);
    }
}

pub(crate) fn set_interface(b: &mut NetBuilder, regs: &[PlaceId], io: &Io) {
    for &r in &io.inputs {
        b.input_place(regs[r]);
    }
    if let Some(&out) = regs.get(io.output) {
        b.output_place(out);
    }
}

fn erased(g: &FlowGraph, halt: HaltArcs, a: &FlowArc) -> bool {
    halt == HaltArcs::Erase && g.is_halting(a.to) && a.operations.is_empty()
}

/// Control places of a one-hot translation: live states always, halting
/// states only when some surviving arc enters them.
fn control_places(g: &FlowGraph, halt: HaltArcs, b: &mut NetBuilder) -> Vec<Option<PlaceId>> {
    (0..g.state_count())
        .map(|s| {
            let needed = !g.is_halting(s)
                || (halt == HaltArcs::Erase
                    && g.arcs().iter().any(|a| a.to == s && !erased(g, halt, a)));
            needed.then(|| b.new_place(&state_place(g.state_name(s))))
        })
        .collect()
}

/// One place per state, one per register, one transition per arc.
pub fn from_flowgraph(g: &FlowGraph, halt: HaltArcs) -> Result<Net> {
    let mut b = Net::builder();
    let control = control_places(g, halt, &mut b);
    let regs = register_places(&mut b, g.registers());
    let mut n = 0;
    for a in g.arcs() {
        if erased(g, halt, a) {
            continue;
        }
        let enc = encode_arc(a)?;
        n += 1;
        let t = b.transition(&format!("T{n}"));
        apply_encoding(&mut b, t, &regs, &enc);
        let src = control[a.from].expect("live state has a place");
        b.consume(src, t, 1);
        if let Some(dst) = control[a.to] {
            b.produce(t, dst, 1);
        }
    }
    if let Some(p) = control[g.initial()] {
        b.initial_tokens(p, 1);
    }
    set_interface(&mut b, &regs, g.io());
    b.build()
}

/// Explicit gadget translation of a machine using only `RiP`, `RiZM` and
/// `STOP`. An increment consumes `Qj` and produces `Qk` and `Ri`. A
/// zero-test-and-decrement has a nonzero branch consuming `Qj` and `Ri`
/// and a zero branch consuming `Qj` under an inhibitor on `Ri`. The zero
/// branch into the final state is left out, as with [`HaltArcs::Erase`].
pub fn direct(m: &RegisterMachine) -> Result<Net> {
    let fin = m.final_state();
    let mut enters_final = false;
    for ins in m.program() {
        match *ins {
            Instruction::Inc { next, .. } => enters_final |= next == fin,
            Instruction::ZeroTestDec { nonzero, .. } => enters_final |= nonzero == fin,
            Instruction::Stop => {}
            other => {
                return Err(Error::Unsupported {
                    state: m
                        .state_name(m.program().iter().position(|i| *i == other).unwrap_or(0))
                        .to_string(),
                    kind: other.kind().to_string(),
                })
            }
        }
    }
    let mut b = Net::builder();
    let control: Vec<Option<PlaceId>> = (0..m.state_count())
        .map(|s| (s != fin || enters_final).then(|| b.new_place(&state_place(m.state_name(s)))))
        .collect();
    let regs = register_places(&mut b, m.registers());
    let mut n = 0;
    let mut next_transition = |b: &mut NetBuilder| {
        n += 1;
        b.transition(&format!("T{n}"))
    };
    for (j, ins) in m.program().iter().enumerate() {
        if j == fin {
            continue;
        }
        let qj = control[j].expect("non-final state has a place");
        match *ins {
            Instruction::Inc { register, next } => {
                let t = next_transition(&mut b);
                b.consume(qj, t, 1).produce(t, regs[register], 1);
                b.produce(t, control[next].expect("target has a place"), 1);
            }
            Instruction::ZeroTestDec {
                register,
                nonzero,
                zero,
            } => {
                let t = next_transition(&mut b);
                b.consume(qj, t, 1).consume(regs[register], t, 1);
                b.produce(t, control[nonzero].expect("target has a place"), 1);
                if zero == fin {
                    continue;
                }
                let t = next_transition(&mut b);
                b.consume(qj, t, 1).inhibit(regs[register], t);
                b.produce(t, control[zero].expect("target has a place"), 1);
            }
            _ => {}
        }
    }
    b.initial_tokens(control[m.initial()].expect("initial has a place"), 1);
    set_interface(&mut b, &regs, m.io());
    b.build()
}

/// Folds every increment-only state into its predecessors: a non-initial
/// state whose single outgoing arc is unconditional and only increments is
/// removed, and each incoming arc takes over its increments and target.
/// Chains fold transitively.
pub fn fold_increments(g: &FlowGraph) -> FlowGraph {
    let mut g = g.clone();
    loop {
        let foldable = (0..g.state_count()).find(|&s| {
            if s == g.initial() || g.is_halting(s) {
                return false;
            }
            let mut out = g.outgoing(s);
            match (out.next(), out.next()) {
                (Some(a), None) => {
                    !a.is_loop()
                        && a.conditions.is_empty()
                        && a.operations.iter().all(|o| o.is_inc())
                        && g.incoming(s).all(|i| !i.is_loop())
                }
                _ => false,
            }
        });
        match foldable {
            Some(s) => g = compress_state(&g, s).expect("increment-only state is compressible"),
            None => return g,
        }
    }
}

/// Gadget translation with increment states folded into the transitions
/// that enter them.
pub fn inc_merge(m: &RegisterMachine) -> Result<Net> {
    direct_check(m)?;
    from_flowgraph(&fold_increments(&rm_to_flowgraph(m)), HaltArcs::Erase)
}

pub(crate) fn direct_check(m: &RegisterMachine) -> Result<()> {
    for (s, ins) in m.program().iter().enumerate() {
        if let Instruction::Dec { .. } | Instruction::Test { .. } = ins {
            return Err(Error::Unsupported {
                state: m.state_name(s).to_string(),
                kind: ins.kind().to_string(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::{u22, Condition, Operation};
    use crate::petri::Metrics;

    #[test]
    fn encoding_rules() {
        let enc =
            |c: Vec<Condition>, o: Vec<Operation>| encode_arc(&FlowArc::new(0, 1, c, o)).unwrap();
        let z = enc(vec![Condition::zero(5)], vec![Operation::inc(5)]);
        assert_eq!(z.cell(5), IncidenceCell { pre: -1, post: 1 });
        let nz = enc(vec![Condition::nonzero(6)], vec![Operation::dec(6)]);
        assert_eq!(nz.cell(6), IncidenceCell { pre: 1, post: 0 });
        let read = enc(vec![Condition::nonzero(6)], vec![]);
        assert_eq!(read.cell(6), IncidenceCell { pre: 1, post: 1 });
        let free = enc(vec![], vec![Operation::dec(3), Operation::inc(3)]);
        assert_eq!(free.cell(3), IncidenceCell { pre: 1, post: 1 });
        let covered = enc(vec![], vec![Operation::inc(3), Operation::dec(3)]);
        assert!(covered.cells.is_empty());
        let ops = vec![
            Operation::inc(4),
            Operation::dec(4),
            Operation::dec(4),
            Operation::inc(4),
        ];
        let guarded = enc(vec![Condition::nonzero(4)], ops);
        assert_eq!(guarded.cell(4), IncidenceCell { pre: 1, post: 1 });
        let bad = encode_arc(&FlowArc::new(
            0,
            1,
            vec![Condition::zero(2)],
            vec![Operation::dec(2)],
        ));
        assert!(matches!(bad, Err(Error::IllFormedArc(_))));
        let ops = vec![Operation::inc(2), Operation::dec(2)];
        let cancelled = enc(vec![Condition::zero(2)], ops);
        assert_eq!(cancelled.cell(2), IncidenceCell { pre: -1, post: 0 });
    }

    #[test]
    fn single_arc_into_halt() {
        let g: FlowGraph = "a -> h | | R0P".parse().unwrap();
        let net = from_flowgraph(&g, HaltArcs::Consume).unwrap();
        assert_eq!(net.metrics(), Metrics::new(2, 1, 0, 2));
        assert_eq!(net.compute(&[], 10).unwrap(), Some(1));
    }

    #[test]
    fn one_increment_machine() {
        let m: RegisterMachine = "q0 R0P qf\nqf STOP".parse().unwrap();
        let net = direct(&m).unwrap();
        assert_eq!(net.metrics(), Metrics::new(3, 1, 0, 3));
        assert_eq!(net.places(), ["Q0", "Qf", "R0"]);
    }

    #[test]
    fn direct_rejects_plain_decrement() {
        let m: RegisterMachine = "q0 R0M qf\nqf STOP".parse().unwrap();
        assert!(matches!(direct(&m), Err(Error::Unsupported { .. })));
        assert!(matches!(inc_merge(&m), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn direct_matches_flowgraph_route() {
        let m = u22();
        let a = direct(&m).unwrap();
        let b = from_flowgraph(&rm_to_flowgraph(&m), HaltArcs::Erase).unwrap();
        assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn no_increments_means_no_folding() {
        let m: RegisterMachine = "q0 R0ZM q0x qf\nq0x R1ZM q0 qf\nqf STOP".parse().unwrap();
        assert_eq!(
            inc_merge(&m).unwrap().to_string(),
            direct(&m).unwrap().to_string()
        );
    }

    #[test]
    fn folded_fragment() {
        let m: RegisterMachine = "q7 R6ZM q9 qf\nq9 R5P q10\nq10 R6ZM q7 qf\nqf STOP"
            .parse()
            .unwrap();
        let net = inc_merge(&m).unwrap();
        let t = &net.transitions()[0];
        let names: Vec<(&str, i64, u32)> = net
            .place_ids()
            .map(|p| {
                (
                    net.place_name(p),
                    net.weight_in(p, TransitionId(0)),
                    net.weight_out(TransitionId(0), p),
                )
            })
            .filter(|&(_, a, b)| a != 0 || b != 0)
            .collect();
        assert_eq!(t.degree(), 4);
        assert_eq!(net.metrics().t, 2);
        assert_eq!(
            names,
            vec![("Q7", 1, 0), ("Q10", 0, 1), ("R5", 0, 1), ("R6", 1, 0)]
        );
    }
}
