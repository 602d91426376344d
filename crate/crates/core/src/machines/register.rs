use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::{
    content_lines, parse_register, tokens, Advance, Config, Io, MachineRun, MachineStatus,
    MachineStep,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    /// `RiP`: increment and move on.
    Inc {
        register: usize,
        next: usize,
    },
    /// `RiM`: decrement; stuck on zero.
    Dec {
        register: usize,
        next: usize,
    },
    /// `Ri`: branch on zero without modifying.
    Test {
        register: usize,
        nonzero: usize,
        zero: usize,
    },
    /// `RiZM`: decrement and branch if nonzero, otherwise branch.
    ZeroTestDec {
        register: usize,
        nonzero: usize,
        zero: usize,
    },
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InstructionKind {
    Inc,
    Dec,
    Test,
    ZeroTestDec,
    Stop,
}

impl fmt::Display for InstructionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstructionKind::Inc => "RiP",
            InstructionKind::Dec => "RiM",
            InstructionKind::Test => "Ri",
            InstructionKind::ZeroTestDec => "RiZM",
            InstructionKind::Stop => "STOP",
        })
    }
}

impl Instruction {
    pub fn kind(&self) -> InstructionKind {
        match self {
            Instruction::Inc { .. } => InstructionKind::Inc,
            Instruction::Dec { .. } => InstructionKind::Dec,
            Instruction::Test { .. } => InstructionKind::Test,
            Instruction::ZeroTestDec { .. } => InstructionKind::ZeroTestDec,
            Instruction::Stop => InstructionKind::Stop,
        }
    }

    pub fn register(&self) -> Option<usize> {
        match *self {
            Instruction::Inc { register, .. }
            | Instruction::Dec { register, .. }
            | Instruction::Test { register, .. }
            | Instruction::ZeroTestDec { register, .. } => Some(register),
            Instruction::Stop => None,
        }
    }

    pub fn successors(&self) -> Vec<usize> {
        match *self {
            Instruction::Inc { next, .. } | Instruction::Dec { next, .. } => vec![next],
            Instruction::Test { nonzero, zero, .. }
            | Instruction::ZeroTestDec { nonzero, zero, .. } => vec![nonzero, zero],
            Instruction::Stop => vec![],
        }
    }

    fn remap(&self, map: &[usize]) -> Instruction {
        match *self {
            Instruction::Inc { register, next } => Instruction::Inc {
                register,
                next: map[next],
            },
            Instruction::Dec { register, next } => Instruction::Dec {
                register,
                next: map[next],
            },
            Instruction::Test {
                register,
                nonzero,
                zero,
            } => Instruction::Test {
                register,
                nonzero: map[nonzero],
                zero: map[zero],
            },
            Instruction::ZeroTestDec {
                register,
                nonzero,
                zero,
            } => Instruction::ZeroTestDec {
                register,
                nonzero: map[nonzero],
                zero: map[zero],
            },
            Instruction::Stop => Instruction::Stop,
        }
    }
}

/// A register machine with one instruction per state and a single `STOP`
/// state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterMachine {
    states: Vec<String>,
    registers: usize,
    initial: usize,
    final_state: usize,
    program: Vec<Instruction>,
    io: Io,
    index: HashMap<String, usize>,
}

impl RegisterMachine {
    pub fn new(
        states: Vec<String>,
        registers: usize,
        initial: usize,
        program: Vec<Instruction>,
    ) -> Result<Self> {
        Self::with_io(states, registers, initial, program, Io::standard(registers))
    }

    pub fn with_io(
        states: Vec<String>,
        registers: usize,
        initial: usize,
        program: Vec<Instruction>,
        io: Io,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidMachine(msg));
        if states.len() != program.len() {
            return invalid(format!(
                "{} states but {} instructions",
                states.len(),
                program.len()
            ));
        }
        let mut index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() || s.contains(char::is_whitespace) {
                return invalid(format!("bad state name `{s}`"));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::DuplicateName(s.clone()));
            }
        }
        if initial >= states.len() {
            return invalid("initial state out of range".into());
        }
        let stops: Vec<usize> = (0..program.len())
            .filter(|&i| program[i] == Instruction::Stop)
            .collect();
        let final_state = match stops[..] {
            [f] => f,
            _ => return invalid(format!("expected exactly one STOP, found {}", stops.len())),
        };
        for (i, ins) in program.iter().enumerate() {
            if let Some(r) = ins.register() {
                if r >= registers {
                    return invalid(format!("R{r} out of range at `{}`", states[i]));
                }
            }
            if ins.successors().iter().any(|&s| s >= states.len()) {
                return invalid(format!("target out of range at `{}`", states[i]));
            }
            if let Instruction::Inc { next, .. } | Instruction::Dec { next, .. } = *ins {
                if next == i {
                    return invalid(format!("`{}` jumps to itself", states[i]));
                }
            }
        }
        io.check(registers)?;
        Ok(RegisterMachine {
            states,
            registers,
            initial,
            final_state,
            program,
            io,
            index,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn registers(&self) -> usize {
        self.registers
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn final_state(&self) -> usize {
        self.final_state
    }

    pub fn program(&self) -> &[Instruction] {
        &self.program
    }

    pub fn instruction(&self, s: usize) -> &Instruction {
        &self.program[s]
    }

    pub fn io(&self) -> &Io {
        &self.io
    }

    /// Number of instructions of each kind, `STOP` excluded.
    pub fn kind_counts(&self) -> HashMap<InstructionKind, usize> {
        let mut counts = HashMap::new();
        for ins in &self.program {
            if *ins != Instruction::Stop {
                *counts.entry(ins.kind()).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Same machine entered at another state.
    pub fn with_initial(&self, name: &str) -> Result<Self> {
        let s = self
            .state(name)
            .ok_or_else(|| Error::UnknownState(name.to_string()))?;
        Ok(RegisterMachine {
            initial: s,
            ..self.clone()
        })
    }

    pub fn initial_config(&self, inputs: &[u64]) -> Result<Config> {
        Ok(Config {
            state: self.initial,
            registers: self.io.initial_registers(self.registers, inputs)?,
        })
    }

    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for t in self.program[s].successors() {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// Drops states unreachable from the initial state; the final state is
    /// always kept.
    pub fn prune_unreachable(&self) -> RegisterMachine {
        let mut keep = self.reachable();
        keep[self.final_state] = true;
        let mut map = vec![usize::MAX; self.states.len()];
        let mut states = Vec::new();
        for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            map[i] = states.len();
            states.push(self.states[i].clone());
        }
        let program = (0..self.states.len())
            .filter(|&i| keep[i])
            .map(|i| self.program[i].remap(&map))
            .collect();
        RegisterMachine::with_io(
            states,
            self.registers,
            map[self.initial],
            program,
            self.io.clone(),
        )
        .expect("pruning keeps a valid machine")
    }

    /// Executes one instruction in place.
    pub fn advance(&self, c: &mut Config) -> Advance {
        let regs = &mut c.registers;
        match self.program[c.state] {
            Instruction::Inc { register, next } => {
                regs[register] += 1;
                c.state = next;
                Advance::Moved { touched: true }
            }
            Instruction::Dec { register, next } => {
                if regs[register] == 0 {
                    return Advance::Stuck;
                }
                regs[register] -= 1;
                c.state = next;
                Advance::Moved { touched: true }
            }
            Instruction::Test {
                register,
                nonzero,
                zero,
            } => {
                c.state = if regs[register] > 0 { nonzero } else { zero };
                Advance::Moved { touched: false }
            }
            Instruction::ZeroTestDec {
                register,
                nonzero,
                zero,
            } => {
                if regs[register] > 0 {
                    regs[register] -= 1;
                    c.state = nonzero;
                    Advance::Moved { touched: true }
                } else {
                    c.state = zero;
                    Advance::Moved { touched: false }
                }
            }
            Instruction::Stop => Advance::Halted,
        }
    }
}

pub fn step_rm(m: &RegisterMachine, c: &Config) -> MachineStep {
    let mut next = c.clone();
    match m.advance(&mut next) {
        Advance::Moved { .. } => MachineStep::Next(next),
        Advance::Halted => MachineStep::Halted,
        Advance::Stuck => MachineStep::Stuck,
    }
}

pub fn run_rm(m: &RegisterMachine, c0: &Config, step_limit: u64) -> MachineRun {
    let mut config = c0.clone();
    let mut steps = 0;
    let status = loop {
        if m.program[config.state] == Instruction::Stop {
            break MachineStatus::Halted;
        }
        if steps >= step_limit {
            break MachineStatus::LimitExceeded;
        }
        match m.advance(&mut config) {
            Advance::Moved { .. } => steps += 1,
            Advance::Halted => break MachineStatus::Halted,
            Advance::Stuck => break MachineStatus::Stuck,
        }
    };
    MachineRun {
        config,
        steps,
        status,
    }
}

impl fmt::Display for RegisterMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "registers {}", self.registers)?;
        writeln!(f, "initial {}", self.states[self.initial])?;
        write!(f, "inputs")?;
        for r in &self.io.inputs {
            write!(f, " R{r}")?;
        }
        writeln!(f)?;
        writeln!(f, "output R{}", self.io.output)?;
        let name = |s: usize| self.states[s].as_str();
        for (i, ins) in self.program.iter().enumerate() {
            match *ins {
                Instruction::Inc { register, next } => {
                    writeln!(f, "{} R{register}P {}", name(i), name(next))?
                }
                Instruction::Dec { register, next } => {
                    writeln!(f, "{} R{register}M {}", name(i), name(next))?
                }
                Instruction::Test {
                    register,
                    nonzero,
                    zero,
                } => writeln!(
                    f,
                    "{} R{register} {} {}",
                    name(i),
                    name(nonzero),
                    name(zero)
                )?,
                Instruction::ZeroTestDec {
                    register,
                    nonzero,
                    zero,
                } => writeln!(
                    f,
                    "{} R{register}ZM {} {}",
                    name(i),
                    name(nonzero),
                    name(zero)
                )?,
                Instruction::Stop => writeln!(f, "{} STOP", name(i))?,
            }
        }
        Ok(())
    }
}

enum RawKind {
    Inc,
    Dec,
    Test,
    ZeroTestDec,
    Stop,
}

struct RawInstruction<'a> {
    line: usize,
    kind: RawKind,
    register: usize,
    targets: Vec<(usize, &'a str)>,
}

fn parse_opcode(op: &str) -> Option<(RawKind, usize)> {
    if op == "STOP" {
        return Some((RawKind::Stop, 0));
    }
    for (suffix, kind) in [
        ("ZM", RawKind::ZeroTestDec),
        ("P", RawKind::Inc),
        ("M", RawKind::Dec),
    ] {
        if let Some(r) = op.strip_suffix(suffix).and_then(parse_register) {
            return Some((kind, r));
        }
    }
    parse_register(op).map(|r| (RawKind::Test, r))
}

fn register_list(line: usize, toks: &[(usize, &str)]) -> Result<Vec<usize>> {
    toks.iter()
        .map(|&(col, t)| {
            parse_register(t)
                .ok_or_else(|| Error::parse(line, col, format!("expected register, found `{t}`")))
        })
        .collect()
}

/// Parses the one-instruction-per-line format, e.g. `q1 R1ZM q3 q6`,
/// `q3 R7P q1`, `qf STOP`. Optional directives: `registers N`,
/// `initial <state>`, `inputs R1 R2`, `output R0`.
impl FromStr for RegisterMachine {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut registers = None;
        let mut initial = None;
        let mut inputs = None;
        let mut output = None;
        let mut states: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut raw = Vec::new();
        for (line, content) in content_lines(text) {
            let toks = tokens(content);
            let (col, head) = toks[0];
            match head {
                "registers" => {
                    let &[_, (c, n)] = &toks[..] else {
                        return Err(Error::parse(line, col, "usage: registers N"));
                    };
                    registers = Some(
                        n.parse::<usize>()
                            .map_err(|_| Error::parse(line, c, format!("bad count `{n}`")))?,
                    );
                }
                "initial" => {
                    let &[_, (c, s)] = &toks[..] else {
                        return Err(Error::parse(line, col, "usage: initial <state>"));
                    };
                    initial = Some((line, c, s));
                }
                "inputs" => inputs = Some(register_list(line, &toks[1..])?),
                "output" => {
                    let regs = register_list(line, &toks[1..])?;
                    let &[r] = &regs[..] else {
                        return Err(Error::parse(line, col, "usage: output R<i>"));
                    };
                    output = Some(r);
                }
                _ => {
                    if toks.len() < 2 {
                        return Err(Error::parse(line, col, "missing opcode"));
                    }
                    let (ocol, op) = toks[1];
                    let (kind, register) = parse_opcode(op).ok_or_else(|| {
                        Error::parse(line, ocol, format!("unknown opcode `{op}`"))
                    })?;
                    let arity = match kind {
                        RawKind::Stop => 0,
                        RawKind::Inc | RawKind::Dec => 1,
                        RawKind::Test | RawKind::ZeroTestDec => 2,
                    };
                    if toks.len() != 2 + arity {
                        return Err(Error::parse(
                            line,
                            ocol,
                            format!("`{op}` takes {arity} target(s)"),
                        ));
                    }
                    if index.insert(head.to_string(), states.len()).is_some() {
                        return Err(Error::DuplicateName(head.to_string()));
                    }
                    states.push(head.to_string());
                    raw.push(RawInstruction {
                        line,
                        kind,
                        register,
                        targets: toks[2..].to_vec(),
                    });
                }
            }
        }
        let mut program = Vec::with_capacity(raw.len());
        for r in &raw {
            let t =
                r.targets
                    .iter()
                    .map(|&(col, name)| {
                        index.get(name).copied().ok_or_else(|| {
                            Error::parse(r.line, col, format!("unknown state `{name}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            let register = r.register;
            program.push(match r.kind {
                RawKind::Inc => Instruction::Inc {
                    register,
                    next: t[0],
                },
                RawKind::Dec => Instruction::Dec {
                    register,
                    next: t[0],
                },
                RawKind::Test => Instruction::Test {
                    register,
                    nonzero: t[0],
                    zero: t[1],
                },
                RawKind::ZeroTestDec => Instruction::ZeroTestDec {
                    register,
                    nonzero: t[0],
                    zero: t[1],
                },
                RawKind::Stop => Instruction::Stop,
            });
        }
        let used = program
            .iter()
            .filter_map(Instruction::register)
            .chain(inputs.iter().flatten().copied())
            .chain(output)
            .map(|r| r + 1)
            .max()
            .unwrap_or(0);
        let registers = registers.unwrap_or(used);
        let initial = match initial {
            None if states.is_empty() => {
                return Err(Error::InvalidMachine("no instructions".into()))
            }
            None => 0,
            Some((line, col, name)) => index
                .get(name)
                .copied()
                .ok_or_else(|| Error::parse(line, col, format!("unknown state `{name}`")))?,
        };
        let mut io = Io::standard(registers);
        if let Some(i) = inputs {
            io.inputs = i;
        }
        if let Some(o) = output {
            io.output = o;
        }
        RegisterMachine::with_io(states, registers, initial, program, io)
    }
}
