//! Built-in programs: the 22-instruction strongly universal register
//! machine and its 7-state compressed flow graph.

use super::{FlowGraph, RegisterMachine};

const U22_HEAD: &str = "\
registers 8
initial q1
inputs R1 R2
output R0
q1 R1ZM q3 q6
q3 R7P q1
q4 R5ZM q6 q7
q6 R6P q4
q7 R6ZM q9 q4
q9 R5P q10
q10 R7ZM q12 q13
q12 R1P q7
q13 R6ZM q33 q1
q14 R4ZM q1 q16
q16 R5ZM q18 q23
q18 R5ZM q20 q27
q20 R5ZM q22 q30
q22 R4P q16
q23 R2ZM q32 q25
q25 R0ZM q1 q32
";

const U22_TAIL: &str = "\
q29 R0P q1
q30 R2P q31
q31 R3P q32
q32 R4ZM q1 qf
q33 R6P q14
qf STOP
";

/// The 22-instruction machine with q27's zero branch through q29, which is
/// how the compiled net tables and the compressed 7-state graph route it.
pub fn u22() -> RegisterMachine {
    format!("{U22_HEAD}q27 R3ZM q32 q29\n{U22_TAIL}")
        .parse()
        .expect("built-in program parses")
}

/// The rule list verbatim: q27's zero branch returns to q1 and q29 is
/// unreachable.
pub fn u22_as_listed() -> RegisterMachine {
    format!("{U22_HEAD}q27 R3ZM q32 q1\n{U22_TAIL}")
        .parse()
        .expect("built-in program parses")
}

const U7: &str = "\
registers 8
states 1 2 3 4 5 6 7
initial 1
halting 7
inputs R1 R2
output R0
1 -> 1 | R1!=0 | R1M R7P
1 -> 2 | R1=0 | R6P R7P
2 -> 2 | R5=0, R6=0 |
2 -> 2 | R5!=0 | R5M R6P
2 -> 3 | R5=0, R6!=0 | R5P R6M
3 -> 1 | R1!=0, R6=0, R7=0 | R1M
3 -> 1 | R1!=0, R4!=0, R6!=0, R7=0 | R1M R4M
3 -> 2 | R6=0, R7!=0 | R1P R7M
3 -> 2 | R1=0, R4!=0, R6!=0, R7=0 | R4M R6P
3 -> 2 | R1=0, R6=0, R7=0 | R6P
3 -> 3 | R6!=0, R7!=0 | R1P R5P R6M R7M
3 -> 4 | R4=0, R6!=0, R7=0 |
4 -> 1 | R0!=0, R1!=0, R2=0, R5=0 | R0M R1M
4 -> 1 | R1!=0, R2!=0, R4!=0, R5=0 | R1M R2M R4M
4 -> 1 | R0=0, R1!=0, R2=0, R4!=0, R5=0 | R1M R4M
4 -> 2 | R0!=0, R1=0, R2=0, R5=0 | R0M R6P
4 -> 2 | R1=0, R2!=0, R4!=0, R5=0 | R2M R4M R6P
4 -> 2 | R0=0, R1=0, R2=0, R4!=0, R5=0 | R4M R6P
4 -> 5 | R5!=0 | R5M
4 -> 7 | R0=0, R2=0, R4=0, R5=0 |
4 -> 7 | R2!=0, R4=0, R5=0 | R2M
5 -> 1 | R1!=0, R3=0, R5=0 | R0P R1M
5 -> 1 | R1!=0, R3!=0, R4!=0, R5=0 | R1M R3M R4M
5 -> 2 | R1=0, R3=0, R5=0 | R0P R6P
5 -> 2 | R1=0, R3!=0, R4!=0, R5=0 | R3M R4M R6P
5 -> 6 | R5!=0 | R5M
5 -> 7 | R3!=0, R4=0, R5=0 | R3M
6 -> 1 | R1!=0, R4!=0, R5=0 | R1M R2P R3P R4M
6 -> 2 | R1=0, R4!=0, R5=0 | R2P R3P R4M R6P
6 -> 4 | R5!=0 | R4P R5M
6 -> 7 | R4=0, R5=0 | R2P R3P
";

/// The 7-state flow graph, state 7 halting, entered at state 1.
pub fn u7() -> FlowGraph {
    U7.parse().expect("built-in program parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::{
        rm_to_flowgraph, run_fg, run_rm, step_fg, step_rm, Condition, Config, Instruction,
        InstructionKind, MachineStatus, MachineStep, Operation,
    };

    fn regs(pairs: &[(usize, u64)]) -> Vec<u64> {
        let mut r = vec![0; 8];
        for &(i, v) in pairs {
            r[i] = v;
        }
        r
    }

    #[test]
    fn u22_shape() {
        let m = u22();
        assert_eq!(m.state_count(), 23);
        assert_eq!(m.registers(), 8);
        assert_eq!(m.state_name(m.initial()), "q1");
        assert_eq!(m.state_name(m.final_state()), "qf");
        let counts = m.kind_counts();
        assert_eq!(counts[&InstructionKind::Inc], 9);
        assert_eq!(counts[&InstructionKind::ZeroTestDec], 13);
        assert_eq!(counts.len(), 2);
        let s = |n: &str| m.state(n).unwrap();
        assert_eq!(
            *m.instruction(s("q13")),
            Instruction::ZeroTestDec {
                register: 6,
                nonzero: s("q33"),
                zero: s("q1")
            }
        );
        assert_eq!(
            *m.instruction(s("q31")),
            Instruction::Inc {
                register: 3,
                next: s("q32")
            }
        );
    }

    #[test]
    fn listed_variant_differs_only_at_q27() {
        let (a, b) = (u22(), u22_as_listed());
        let q27 = a.state("q27").unwrap();
        for s in 0..a.state_count() {
            if s != q27 {
                assert_eq!(a.instruction(s), b.instruction(s));
            }
        }
        assert!(!b.reachable()[b.state("q29").unwrap()]);
        assert!(a.reachable()[a.state("q29").unwrap()]);
        assert_eq!(b.prune_unreachable().state_count(), 22);
    }

    #[test]
    fn u22_first_instruction() {
        let m = u22();
        let c = Config {
            state: m.initial(),
            registers: regs(&[(1, 5)]),
        };
        let MachineStep::Next(n) = step_rm(&m, &c) else {
            panic!()
        };
        assert_eq!((m.state_name(n.state), n.registers[1]), ("q3", 4));
        let c = Config {
            state: m.initial(),
            registers: regs(&[]),
        };
        let MachineStep::Next(n) = step_rm(&m, &c) else {
            panic!()
        };
        assert_eq!((m.state_name(n.state), n.registers[1]), ("q6", 0));
    }

    #[test]
    fn u22_text_round_trip() {
        for m in [u22(), u22_as_listed()] {
            let again: RegisterMachine = m.to_string().parse().unwrap();
            assert_eq!(again, m);
        }
    }

    #[test]
    fn u22_flowgraph_arc_count() {
        let g = rm_to_flowgraph(&u22());
        assert_eq!(g.arcs().len(), 35);
        let pruned = rm_to_flowgraph(&u22_as_listed().prune_unreachable());
        assert_eq!(pruned.arcs().len(), 34);
        let q10 = g.state("q10").unwrap();
        let out: Vec<_> = g.outgoing(q10).collect();
        assert_eq!(out.len(), 2);
        assert_eq!(g.state_name(out[0].to), "q12");
        assert_eq!(out[0].conditions, vec![Condition::nonzero(7)]);
        assert_eq!(out[0].operations, vec![Operation::dec(7)]);
        assert_eq!(g.state_name(out[1].to), "q13");
        assert_eq!(out[1].conditions, vec![Condition::zero(7)]);
        assert!(out[1].operations.is_empty());
    }

    #[test]
    fn u7_shape() {
        let g = u7();
        assert_eq!(g.state_count(), 7);
        assert_eq!(g.arcs().len(), 31);
        assert_eq!(g.out_degree(g.state("4").unwrap()), 9);
        assert!(g.is_halting(g.state("7").unwrap()));
        let first = &g.arcs()[0];
        assert_eq!((first.from, first.to), (0, 0));
        assert_eq!(first.conditions, vec![Condition::nonzero(1)]);
        assert_eq!(first.operations, vec![Operation::dec(1), Operation::inc(7)]);
        let six_four = g
            .arcs()
            .iter()
            .find(|a| g.state_name(a.from) == "6" && g.state_name(a.to) == "4")
            .unwrap();
        assert_eq!(six_four.conditions, vec![Condition::nonzero(5)]);
        assert_eq!(
            six_four.operations,
            vec![Operation::inc(4), Operation::dec(5)]
        );
        let again: FlowGraph = g.to_string().parse().unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn u7_state_two_loops() {
        let g = u7();
        let two = g.state("2").unwrap();
        let c = Config {
            state: two,
            registers: regs(&[]),
        };
        assert_eq!(step_fg(&g, &c).unwrap(), MachineStep::Next(c.clone()));
        let c = Config {
            state: two,
            registers: regs(&[(5, 3)]),
        };
        let MachineStep::Next(n) = step_fg(&g, &c).unwrap() else {
            panic!()
        };
        assert_eq!(n.state, two);
        assert_eq!((n.registers[5], n.registers[6]), (2, 1));
    }

    // Prefix of the run from (q1, 0, 0), stepped by hand from the rule list.
    #[test]
    fn u22_hand_stepped_prefix() {
        let m = u22();
        let expected = [
            ("q1", &[][..]),
            ("q6", &[]),
            ("q4", &[(6, 1)]),
            ("q7", &[(6, 1)]),
            ("q9", &[]),
            ("q10", &[(5, 1)]),
            ("q13", &[(5, 1)]),
            ("q1", &[(5, 1)]),
            ("q6", &[(5, 1)]),
            ("q4", &[(5, 1), (6, 1)]),
            ("q6", &[(6, 1)]),
            ("q4", &[(6, 2)]),
            ("q7", &[(6, 2)]),
            ("q9", &[(6, 1)]),
            ("q10", &[(5, 1), (6, 1)]),
            ("q13", &[(5, 1), (6, 1)]),
            ("q33", &[(5, 1)]),
            ("q14", &[(5, 1), (6, 1)]),
            ("q16", &[(5, 1), (6, 1)]),
            ("q18", &[(6, 1)]),
            ("q27", &[(6, 1)]),
            ("q29", &[(6, 1)]),
            ("q1", &[(0, 1), (6, 1)]),
        ];
        let mut c = m.initial_config(&[0, 0]).unwrap();
        for (i, (state, r)) in expected.iter().enumerate() {
            assert_eq!(m.state_name(c.state), *state, "step {i}");
            assert_eq!(c.registers, regs(r), "step {i}");
            if let MachineStep::Next(n) = step_rm(&m, &c) {
                c = n;
            }
        }
    }

    #[test]
    fn u7_matches_u22_entered_at_q3() {
        let m = u22().with_initial("q3").unwrap();
        let g = u7();
        for a in 0..4 {
            for b in 0..4 {
                let x = run_rm(&m, &m.initial_config(&[a, b]).unwrap(), 20_000);
                let y = run_fg(&g, &g.initial_config(&[a, b]).unwrap(), 20_000).unwrap();
                assert_eq!(
                    x.status == MachineStatus::Halted,
                    y.status == MachineStatus::Halted
                );
                if x.status == MachineStatus::Halted {
                    assert_eq!(x.config.registers[0], y.config.registers[0]);
                }
            }
        }
    }
}
