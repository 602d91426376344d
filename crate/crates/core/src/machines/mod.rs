//! Register machines and flow-graph machines.
//!
//! A flow graph generalizes a register machine: arcs carry a set of zero /
//! nonzero register tests and an ordered list of increments and decrements.

mod flowgraph;
mod programs;
mod register;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use flowgraph::{rm_to_flowgraph, run_fg, step_fg, FlowArc, FlowGraph};
pub use programs::{u22, u22_as_listed, u7};
pub use register::{run_rm, step_rm, Instruction, InstructionKind, RegisterMachine};

/// A machine configuration: current state index plus register values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Config {
    pub state: usize,
    pub registers: Vec<u64>,
}

pub type RmConfig = Config;
pub type FgConfig = Config;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MachineStatus {
    Halted,
    /// No move possible outside a halting state (e.g. `RiM` on zero).
    Stuck,
    LimitExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineRun {
    pub config: Config,
    pub steps: u64,
    pub status: MachineStatus,
}

/// Result of a single machine step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MachineStep {
    Next(Config),
    Halted,
    Stuck,
}

/// In-place step outcome; `touched` is false when no register changed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Advance {
    Moved { touched: bool },
    Halted,
    Stuck,
}

/// Which registers carry the inputs and which one the result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Io {
    pub inputs: Vec<usize>,
    pub output: usize,
}

impl Io {
    /// Inputs in R1, R2 (when present), output in R0.
    pub fn standard(registers: usize) -> Io {
        Io {
            inputs: (1..registers.min(3)).collect(),
            output: 0,
        }
    }

    fn check(&self, registers: usize) -> Result<()> {
        if registers == 0 {
            return if self.inputs.is_empty() {
                Ok(())
            } else {
                Err(Error::InvalidMachine(
                    "inputs on a machine without registers".into(),
                ))
            };
        }
        match self
            .inputs
            .iter()
            .chain([&self.output])
            .find(|&&r| r >= registers)
        {
            Some(r) => Err(Error::InvalidMachine(format!("register R{r} out of range"))),
            None => Ok(()),
        }
    }

    pub(crate) fn initial_registers(&self, registers: usize, inputs: &[u64]) -> Result<Vec<u64>> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::ArityMismatch {
                expected: self.inputs.len(),
                actual: inputs.len(),
            });
        }
        let mut regs = vec![0; registers];
        for (&r, &v) in self.inputs.iter().zip(inputs) {
            regs[r] += v;
        }
        Ok(regs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sense {
    Zero,
    NonZero,
}

/// `Ri=0` or `Ri!=0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub register: usize,
    pub sense: Sense,
}

impl Condition {
    pub fn zero(register: usize) -> Self {
        Condition {
            register,
            sense: Sense::Zero,
        }
    }

    pub fn nonzero(register: usize) -> Self {
        Condition {
            register,
            sense: Sense::NonZero,
        }
    }

    pub fn holds(&self, registers: &[u64]) -> bool {
        (registers[self.register] == 0) == (self.sense == Sense::Zero)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sense {
            Sense::Zero => write!(f, "R{}=0", self.register),
            Sense::NonZero => write!(f, "R{}!=0", self.register),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Delta {
    Inc,
    Dec,
}

/// `RiP` or `RiM`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Operation {
    pub register: usize,
    pub delta: Delta,
}

impl Operation {
    pub fn inc(register: usize) -> Self {
        Operation {
            register,
            delta: Delta::Inc,
        }
    }

    pub fn dec(register: usize) -> Self {
        Operation {
            register,
            delta: Delta::Dec,
        }
    }

    pub fn is_inc(&self) -> bool {
        self.delta == Delta::Inc
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.delta {
            Delta::Inc => write!(f, "R{}P", self.register),
            Delta::Dec => write!(f, "R{}M", self.register),
        }
    }
}

/// Either kind of program, as read from text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Program {
    Register(RegisterMachine),
    Flow(FlowGraph),
}

impl Program {
    /// Flow-graph text is recognized by its `->` arcs.
    pub fn parse(text: &str) -> Result<Program> {
        let is_flow = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .any(|l| l.contains("->"));
        if is_flow {
            Ok(Program::Flow(text.parse()?))
        } else {
            Ok(Program::Register(text.parse()?))
        }
    }

    pub fn to_flowgraph(&self) -> FlowGraph {
        match self {
            Program::Register(m) => rm_to_flowgraph(m),
            Program::Flow(g) => g.clone(),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Program::Register(m) => m.fmt(f),
            Program::Flow(g) => g.fmt(f),
        }
    }
}

/// Suffix used for the state's place: `q7` becomes `7`, `qf` becomes `f`.
pub fn place_suffix(state: &str) -> &str {
    match state.strip_prefix('q') {
        Some(rest) if !rest.is_empty() => rest,
        _ => state,
    }
}

pub(crate) fn parse_register(token: &str) -> Option<usize> {
    let digits = token.strip_prefix('R')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Non-blank lines with `#` comments removed, numbered from 1.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Whitespace-separated tokens paired with their 1-based byte column.
pub(crate) fn tokens(line: &str) -> Vec<(usize, &str)> {
    let base = line.as_ptr() as usize;
    line.split_whitespace()
        .map(|t| (t.as_ptr() as usize - base + 1, t))
        .collect()
}
