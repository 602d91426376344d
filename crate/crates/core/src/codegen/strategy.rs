use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    assign_codes, binary, checker, checker_from_flowgraph, checker_inc_merge, direct,
    fold_increments, from_flowgraph, inc_merge, HaltArcs,
};
use crate::compression::compress;
use crate::error::{Error, Result};
use crate::machines::{rm_to_flowgraph, u22, u7, FlowGraph, Instruction, Program};
use crate::petri::Net;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Direct,
    IncMerge,
    Compressed,
    Binary,
    Checker,
    CheckerMerge,
}

/// A compiled net together with the program it should simulate and, for
/// binary control, the state codes keyed by state name.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub strategy: Strategy,
    pub net: Net,
    pub program: Program,
    pub codes: Option<BTreeMap<String, u64>>,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Direct,
        Strategy::IncMerge,
        Strategy::Compressed,
        Strategy::Binary,
        Strategy::Checker,
        Strategy::CheckerMerge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Direct => "direct",
            Strategy::IncMerge => "inc-merge",
            Strategy::Compressed => "compressed",
            Strategy::Binary => "binary",
            Strategy::Checker => "checker",
            Strategy::CheckerMerge => "checker-merge",
        }
    }

    /// The built-in program each strategy is normally applied to: the
    /// 22-instruction machine, or the 7-state graph for the two strategies
    /// that start from a compressed graph.
    pub fn reference_program(self) -> Program {
        match self {
            Strategy::Compressed | Strategy::Binary => Program::Flow(u7()),
            _ => Program::Register(u22()),
        }
    }

    pub fn reference(self) -> Compiled {
        self.compile(&self.reference_program())
            .expect("built-in programs compile")
    }

    /// Compiles `program`. Register machines with `RiM` or `Ri`
    /// instructions go through their flow graph for the gadget strategies.
    /// The compressed and binary strategies compress a register machine
    /// first but take a flow graph as already compressed.
    pub fn compile(self, program: &Program) -> Result<Compiled> {
        let mut codes = None;
        let net = match (self, program) {
            (Strategy::Direct, Program::Register(m)) if gadget_only(m) => direct(m)?,
            (Strategy::IncMerge, Program::Register(m)) if gadget_only(m) => inc_merge(m)?,
            (Strategy::Checker, Program::Register(m)) => checker(m)?,
            (Strategy::CheckerMerge, Program::Register(m)) => checker_inc_merge(m)?,
            (Strategy::Direct, p) => from_flowgraph(&p.to_flowgraph(), HaltArcs::Erase)?,
            (Strategy::IncMerge, p) => {
                from_flowgraph(&fold_increments(&p.to_flowgraph()), HaltArcs::Erase)?
            }
            (Strategy::Checker, Program::Flow(g)) => checker_from_flowgraph(g)?,
            (Strategy::CheckerMerge, Program::Flow(g)) => {
                checker_from_flowgraph(&fold_increments(g))?
            }
            (Strategy::Compressed | Strategy::Binary, p) => {
                let g = compressed_graph(p);
                if self == Strategy::Compressed {
                    from_flowgraph(&g, HaltArcs::Consume)?
                } else {
                    codes = Some(
                        assign_codes(&g)
                            .into_iter()
                            .map(|c| (g.state_name(c.state).to_string(), c.code))
                            .collect(),
                    );
                    binary(&g)?
                }
            }
        };
        Ok(Compiled {
            strategy: self,
            net,
            program: program.clone(),
            codes,
        })
    }
}

fn gadget_only(m: &crate::machines::RegisterMachine) -> bool {
    m.program().iter().all(|i| {
        matches!(
            i,
            Instruction::Inc { .. } | Instruction::ZeroTestDec { .. } | Instruction::Stop
        )
    })
}

fn compressed_graph(p: &Program) -> FlowGraph {
    match p {
        Program::Register(m) => compress(&rm_to_flowgraph(m)),
        Program::Flow(g) => g.clone(),
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::Metrics;

    #[test]
    fn names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("fast".parse::<Strategy>().is_err());
    }

    #[test]
    fn reference_metrics() {
        let got: Vec<Metrics> = Strategy::ALL
            .iter()
            .map(|s| s.reference().net.metrics())
            .collect();
        let want = [
            (30, 34, 12, 3),
            (21, 25, 12, 5),
            (14, 31, 51, 8),
            (11, 31, 79, 11),
            (67, 64, 8, 3),
            (58, 55, 8, 5),
        ];
        for (s, (g, w)) in Strategy::ALL.iter().zip(got.iter().zip(want)) {
            assert_eq!(*g, Metrics::from(w), "{s}");
        }
    }

    #[test]
    fn general_machines_fall_back() {
        let p = Program::parse("q0 R0P q1\nq1 R0M qf\nqf STOP").unwrap();
        for s in Strategy::ALL {
            let c = s.compile(&p);
            match s {
                Strategy::Checker | Strategy::CheckerMerge => assert!(c.is_err(), "{s}"),
                _ => assert!(c.is_ok(), "{s}"),
            }
        }
    }
}
