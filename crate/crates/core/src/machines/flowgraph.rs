use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::{
    content_lines, parse_register, Advance, Condition, Config, Delta, Instruction, Io, MachineRun,
    MachineStatus, MachineStep, Operation, RegisterMachine, Sense,
};

/// Arc of a flow graph. Conditions are read at the source state; the
/// operations then apply in order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    /// Sorted by register, at most one per register.
    pub conditions: Vec<Condition>,
    pub operations: Vec<Operation>,
}

impl FlowArc {
    pub fn new(
        from: usize,
        to: usize,
        mut conditions: Vec<Condition>,
        operations: Vec<Operation>,
    ) -> Self {
        conditions.sort();
        FlowArc {
            from,
            to,
            conditions,
            operations,
        }
    }

    pub fn condition(&self, register: usize) -> Option<Sense> {
        self.conditions
            .iter()
            .find(|c| c.register == register)
            .map(|c| c.sense)
    }

    pub fn increments(&self, register: usize) -> usize {
        self.operations
            .iter()
            .filter(|o| o.register == register && o.delta == Delta::Inc)
            .count()
    }

    pub fn decrements(&self, register: usize) -> usize {
        self.operations
            .iter()
            .filter(|o| o.register == register && o.delta == Delta::Dec)
            .count()
    }

    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }

    /// Registers tested or modified by this arc, ascending.
    pub fn registers(&self) -> BTreeSet<usize> {
        self.conditions
            .iter()
            .map(|c| c.register)
            .chain(self.operations.iter().map(|o| o.register))
            .collect()
    }

    /// Per-register sum of the operations, zero entries omitted.
    pub fn net_effect(&self) -> BTreeMap<usize, i64> {
        let mut effect = BTreeMap::new();
        for o in &self.operations {
            *effect.entry(o.register).or_insert(0) += if o.is_inc() { 1 } else { -1 };
        }
        effect.retain(|_, v| *v != 0);
        effect
    }

    pub fn enabled(&self, registers: &[u64]) -> bool {
        self.conditions.iter().all(|c| c.holds(registers))
    }

    fn check(&self, states: usize, registers: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::IllFormedArc(msg));
        if self.from >= states || self.to >= states {
            return bad("state out of range".into());
        }
        if self
            .conditions
            .windows(2)
            .any(|w| w[0].register == w[1].register)
        {
            return bad("two conditions on one register".into());
        }
        if let Some(r) = self.registers().into_iter().find(|&r| r >= registers) {
            return bad(format!("R{r} out of range"));
        }
        Ok(())
    }
}

/// Generalized register machine: states joined by arcs with condition sets
/// and operation lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowGraph {
    states: Vec<String>,
    registers: usize,
    initial: usize,
    halting: BTreeSet<usize>,
    arcs: Vec<FlowArc>,
    io: Io,
    index: HashMap<String, usize>,
    outgoing: Vec<Vec<usize>>,
}

impl FlowGraph {
    pub fn new(
        states: Vec<String>,
        registers: usize,
        initial: usize,
        halting: impl IntoIterator<Item = usize>,
        arcs: Vec<FlowArc>,
    ) -> Result<Self> {
        Self::with_io(
            states,
            registers,
            initial,
            halting,
            arcs,
            Io::standard(registers),
        )
    }

    pub fn with_io(
        states: Vec<String>,
        registers: usize,
        initial: usize,
        halting: impl IntoIterator<Item = usize>,
        arcs: Vec<FlowArc>,
        io: Io,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidMachine(msg));
        let mut index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() || s.contains(char::is_whitespace) || s.contains('|') {
                return invalid(format!("bad state name `{s}`"));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::DuplicateName(s.clone()));
            }
        }
        if initial >= states.len() {
            return invalid("initial state out of range".into());
        }
        let halting: BTreeSet<usize> = halting.into_iter().collect();
        if halting.iter().any(|&h| h >= states.len()) {
            return invalid("halting state out of range".into());
        }
        let mut outgoing = vec![Vec::new(); states.len()];
        for (i, a) in arcs.iter().enumerate() {
            a.check(states.len(), registers)?;
            if halting.contains(&a.from) {
                return invalid(format!(
                    "halting state `{}` has an outgoing arc",
                    states[a.from]
                ));
            }
            outgoing[a.from].push(i);
        }
        io.check(registers)?;
        Ok(FlowGraph {
            states,
            registers,
            initial,
            halting,
            arcs,
            io,
            index,
            outgoing,
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

    pub fn halting(&self) -> &BTreeSet<usize> {
        &self.halting
    }

    pub fn is_halting(&self, s: usize) -> bool {
        self.halting.contains(&s)
    }

    /// Non-halting states in index order.
    pub fn live_states(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|s| !self.is_halting(*s))
            .collect()
    }

    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }

    pub fn io(&self) -> &Io {
        &self.io
    }

    pub fn outgoing(&self, s: usize) -> impl Iterator<Item = &FlowArc> + '_ {
        self.outgoing[s].iter().map(move |&i| &self.arcs[i])
    }

    pub fn incoming(&self, s: usize) -> impl Iterator<Item = &FlowArc> + '_ {
        self.arcs.iter().filter(move |a| a.to == s)
    }

    pub fn out_degree(&self, s: usize) -> usize {
        self.outgoing[s].len()
    }

    pub fn with_initial(&self, name: &str) -> Result<Self> {
        let s = self
            .state(name)
            .ok_or_else(|| Error::UnknownState(name.to_string()))?;
        Ok(FlowGraph {
            initial: s,
            ..self.clone()
        })
    }

    /// Rebuilds the graph with different arcs over the same states.
    pub fn with_arcs(&self, arcs: Vec<FlowArc>) -> Result<Self> {
        FlowGraph::with_io(
            self.states.clone(),
            self.registers,
            self.initial,
            self.halting.iter().copied(),
            arcs,
            self.io.clone(),
        )
    }

    /// Removes state `q`, which must have no incident arcs left in `arcs`.
    pub(crate) fn without_state(&self, q: usize, arcs: Vec<FlowArc>) -> Result<Self> {
        if q == self.initial {
            return Err(Error::InvalidMachine(
                "cannot remove the initial state".into(),
            ));
        }
        let shift = |s: usize| if s > q { s - 1 } else { s };
        let arcs = arcs
            .into_iter()
            .map(|a| {
                debug_assert!(a.from != q && a.to != q);
                FlowArc {
                    from: shift(a.from),
                    to: shift(a.to),
                    ..a
                }
            })
            .collect();
        let mut states = self.states.clone();
        states.remove(q);
        FlowGraph::with_io(
            states,
            self.registers,
            shift(self.initial),
            self.halting.iter().filter(|&&h| h != q).map(|&h| shift(h)),
            arcs,
            self.io.clone(),
        )
    }

    pub fn initial_config(&self, inputs: &[u64]) -> Result<Config> {
        Ok(Config {
            state: self.initial,
            registers: self.io.initial_registers(self.registers, inputs)?,
        })
    }

    /// Takes the unique enabled arc in place.
    pub fn advance(&self, c: &mut Config) -> Result<Advance> {
        let mut chosen = None;
        let mut count = 0;
        for &i in &self.outgoing[c.state] {
            if self.arcs[i].enabled(&c.registers) {
                count += 1;
                chosen.get_or_insert(i);
            }
        }
        let Some(i) = chosen else {
            return Ok(if self.is_halting(c.state) {
                Advance::Halted
            } else {
                Advance::Stuck
            });
        };
        if count > 1 {
            return Err(Error::Nondeterminism {
                state: self.states[c.state].clone(),
                count,
            });
        }
        let arc = &self.arcs[i];
        for op in &arc.operations {
            let r = &mut c.registers[op.register];
            match op.delta {
                Delta::Inc => *r += 1,
                Delta::Dec if *r == 0 => {
                    return Err(Error::NegativeRegister {
                        state: self.states[c.state].clone(),
                        register: op.register,
                    })
                }
                Delta::Dec => *r -= 1,
            }
        }
        c.state = arc.to;
        Ok(Advance::Moved {
            touched: !arc.operations.is_empty(),
        })
    }
}

pub fn step_fg(g: &FlowGraph, c: &Config) -> Result<MachineStep> {
    let mut next = c.clone();
    Ok(match g.advance(&mut next)? {
        Advance::Moved { .. } => MachineStep::Next(next),
        Advance::Halted => MachineStep::Halted,
        Advance::Stuck => MachineStep::Stuck,
    })
}

pub fn run_fg(g: &FlowGraph, c0: &Config, step_limit: u64) -> Result<MachineRun> {
    let mut config = c0.clone();
    let mut steps = 0;
    let status = loop {
        if g.is_halting(config.state) {
            break MachineStatus::Halted;
        }
        if steps >= step_limit {
            break MachineStatus::LimitExceeded;
        }
        match g.advance(&mut config)? {
            Advance::Moved { .. } => steps += 1,
            Advance::Halted => break MachineStatus::Halted,
            Advance::Stuck => break MachineStatus::Stuck,
        }
    };
    Ok(MachineRun {
        config,
        steps,
        status,
    })
}

/// One state per machine state; each instruction becomes one or two arcs.
pub fn rm_to_flowgraph(m: &RegisterMachine) -> FlowGraph {
    let mut arcs = Vec::new();
    for (q, ins) in m.program().iter().enumerate() {
        match *ins {
            Instruction::Inc { register, next } => arcs.push(FlowArc::new(
                q,
                next,
                vec![],
                vec![Operation::inc(register)],
            )),
            Instruction::Dec { register, next } => arcs.push(FlowArc::new(
                q,
                next,
                vec![],
                vec![Operation::dec(register)],
            )),
            Instruction::Test {
                register,
                nonzero,
                zero,
            } => {
                arcs.push(FlowArc::new(
                    q,
                    nonzero,
                    vec![Condition::nonzero(register)],
                    vec![],
                ));
                arcs.push(FlowArc::new(
                    q,
                    zero,
                    vec![Condition::zero(register)],
                    vec![],
                ));
            }
            Instruction::ZeroTestDec {
                register,
                nonzero,
                zero,
            } => {
                arcs.push(FlowArc::new(
                    q,
                    nonzero,
                    vec![Condition::nonzero(register)],
                    vec![Operation::dec(register)],
                ));
                arcs.push(FlowArc::new(
                    q,
                    zero,
                    vec![Condition::zero(register)],
                    vec![],
                ));
            }
            Instruction::Stop => {}
        }
    }
    FlowGraph::with_io(
        m.states().to_vec(),
        m.registers(),
        m.initial(),
        [m.final_state()],
        arcs,
        m.io().clone(),
    )
    .expect("register machines translate to valid flow graphs")
}

impl fmt::Display for FlowArc {
    /// Arc body without state names: `R1!=0 | R1M R7P`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let conds: Vec<String> = self.conditions.iter().map(|c| c.to_string()).collect();
        let ops: Vec<String> = self.operations.iter().map(|o| o.to_string()).collect();
        write!(f, "{} | {}", conds.join(", "), ops.join(" "))
    }
}

impl fmt::Display for FlowGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "registers {}", self.registers)?;
        writeln!(f, "states {}", self.states.join(" "))?;
        writeln!(f, "initial {}", self.states[self.initial])?;
        let halting: Vec<&str> = self
            .halting
            .iter()
            .map(|&h| self.states[h].as_str())
            .collect();
        writeln!(f, "halting {}", halting.join(" "))?;
        let inputs: Vec<String> = self.io.inputs.iter().map(|r| format!("R{r}")).collect();
        writeln!(f, "inputs {}", inputs.join(" "))?;
        writeln!(f, "output R{}", self.io.output)?;
        for a in &self.arcs {
            let line = format!("{} -> {} | {}", self.states[a.from], self.states[a.to], a);
            writeln!(f, "{}", line.trim_end())?;
        }
        Ok(())
    }
}

fn column(line: &str, part: &str) -> usize {
    part.as_ptr() as usize - line.as_ptr() as usize + 1
}

fn parse_condition(tok: &str) -> Option<Condition> {
    if let Some(r) = tok.strip_suffix("!=0").and_then(parse_register) {
        Some(Condition::nonzero(r))
    } else {
        tok.strip_suffix("=0")
            .and_then(parse_register)
            .map(Condition::zero)
    }
}

fn parse_operation(tok: &str) -> Option<Operation> {
    if let Some(r) = tok.strip_suffix('P').and_then(parse_register) {
        Some(Operation::inc(r))
    } else {
        tok.strip_suffix('M')
            .and_then(parse_register)
            .map(Operation::dec)
    }
}

/// Parses `from -> to | conditions | operations` lines. Conditions are
/// `Ri=0` / `Ri!=0` separated by commas or blanks; operations are `RiP` /
/// `RiM`. Optional directives: `registers N`, `states ...`,
/// `initial <state>`, `halting ...`, `inputs R1 R2`, `output R0`. Without a
/// `halting` directive, states with no outgoing arc are halting.
impl FromStr for FlowGraph {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut states: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut declare = |name: &str, states: &mut Vec<String>| -> usize {
            *index.entry(name.to_string()).or_insert_with(|| {
                states.push(name.to_string());
                states.len() - 1
            })
        };
        let mut registers = None;
        let mut initial = None;
        let mut halting: Option<Vec<(usize, usize, String)>> = None;
        let mut inputs = None;
        let mut output = None;
        let mut arcs = Vec::new();
        let mut used = 0;
        for (line_no, line) in content_lines(text) {
            let mut words = line.split_whitespace();
            let head = words.next().expect("content line");
            let rest: Vec<&str> = words.collect();
            let reg_list = |toks: &[&str]| -> Result<Vec<usize>> {
                toks.iter()
                    .map(|t| {
                        parse_register(t).ok_or_else(|| {
                            Error::parse(
                                line_no,
                                column(line, t),
                                format!("expected register, found `{t}`"),
                            )
                        })
                    })
                    .collect()
            };
            match head {
                "registers" => {
                    let n = rest
                        .first()
                        .filter(|_| rest.len() == 1)
                        .and_then(|n| n.parse::<usize>().ok())
                        .ok_or_else(|| {
                            Error::parse(line_no, column(line, head), "usage: registers N")
                        })?;
                    registers = Some(n);
                }
                "states" => {
                    for s in rest {
                        if index_has(&states, s) {
                            return Err(Error::DuplicateName(s.to_string()));
                        }
                        declare(s, &mut states);
                    }
                }
                "initial" => {
                    let &[s] = &rest[..] else {
                        return Err(Error::parse(
                            line_no,
                            column(line, head),
                            "usage: initial <state>",
                        ));
                    };
                    initial = Some((line_no, column(line, s), s.to_string()));
                }
                "halting" => {
                    halting = Some(
                        rest.iter()
                            .map(|s| (line_no, column(line, s), s.to_string()))
                            .collect(),
                    );
                }
                "inputs" => inputs = Some(reg_list(&rest)?),
                "output" => {
                    let regs = reg_list(&rest)?;
                    let &[r] = &regs[..] else {
                        return Err(Error::parse(
                            line_no,
                            column(line, head),
                            "usage: output R<i>",
                        ));
                    };
                    output = Some(r);
                }
                _ => {
                    let mut fields = line.split('|');
                    let ends = fields.next().expect("split yields one field");
                    let (from, to) = ends.split_once("->").ok_or_else(|| {
                        Error::parse(line_no, column(line, head), "expected `from -> to`")
                    })?;
                    let (from, to) = (from.trim(), to.trim());
                    if from.is_empty() || to.is_empty() || to.contains(char::is_whitespace) {
                        return Err(Error::parse(
                            line_no,
                            column(line, head),
                            "expected `from -> to`",
                        ));
                    }
                    let conds_text = fields.next().unwrap_or("");
                    let ops_text = fields.next().unwrap_or("");
                    if let Some(extra) = fields.next() {
                        return Err(Error::parse(
                            line_no,
                            column(line, extra),
                            "too many `|` fields",
                        ));
                    }
                    let conditions = conds_text
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|t| !t.is_empty())
                        .map(|t| {
                            parse_condition(t).ok_or_else(|| {
                                Error::parse(
                                    line_no,
                                    column(line, t),
                                    format!("bad condition `{t}`"),
                                )
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let operations = ops_text
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|t| !t.is_empty())
                        .map(|t| {
                            parse_operation(t).ok_or_else(|| {
                                Error::parse(
                                    line_no,
                                    column(line, t),
                                    format!("bad operation `{t}`"),
                                )
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let from = declare(from, &mut states);
                    let to = declare(to, &mut states);
                    let arc = FlowArc::new(from, to, conditions, operations);
                    used = used.max(arc.registers().iter().map(|r| r + 1).max().unwrap_or(0));
                    arcs.push(arc);
                }
            }
        }
        if states.is_empty() {
            return Err(Error::InvalidMachine("no states".into()));
        }
        let lookup = |(line, col, name): &(usize, usize, String)| {
            states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::parse(*line, *col, format!("unknown state `{name}`")))
        };
        let initial = initial.as_ref().map(lookup).transpose()?.unwrap_or(0);
        let halting: Vec<usize> = match &halting {
            Some(list) => list.iter().map(lookup).collect::<Result<_>>()?,
            None => (0..states.len())
                .filter(|&s| arcs.iter().all(|a: &FlowArc| a.from != s))
                .collect(),
        };
        used = used.max(
            inputs
                .iter()
                .flatten()
                .chain(output.iter())
                .map(|r| r + 1)
                .max()
                .unwrap_or(0),
        );
        let registers = registers.unwrap_or(used);
        let mut io = Io::standard(registers);
        if let Some(i) = inputs {
            io.inputs = i;
        }
        if let Some(o) = output {
            io.output = o;
        }
        FlowGraph::with_io(states, registers, initial, halting, arcs, io)
    }
}

fn index_has(states: &[String], name: &str) -> bool {
    states.iter().any(|s| s == name)
}
