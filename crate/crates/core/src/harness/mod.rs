//! Lock-step co-simulation of compiled nets against the programs they were
//! compiled from.

mod golden;
mod sweep;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::codegen::{register_place, state_place, Compiled};
use crate::error::{Error, Result};
use crate::machines::{
    Advance, Config, FlowGraph, MachineRun, MachineStatus, Program, RegisterMachine,
};
use crate::petri::{Marking, Net, PlaceId, RunStatus, Step, Stepper};

pub use golden::{golden_diff, GoldenDiff, RowDiff};
pub use sweep::{grid, sweep, SweepEntry, SweepReport};

/// A machine the nets are checked against.
pub trait Oracle: Sync {
    fn states(&self) -> &[String];
    fn registers(&self) -> usize;
    fn is_halting(&self, s: usize) -> bool;
    fn output_register(&self) -> usize;
    fn initial_config(&self, inputs: &[u64]) -> Result<Config>;
    fn advance(&self, c: &mut Config) -> Result<Advance>;
}

impl Oracle for RegisterMachine {
    fn states(&self) -> &[String] {
        RegisterMachine::states(self)
    }
    fn registers(&self) -> usize {
        RegisterMachine::registers(self)
    }
    fn is_halting(&self, s: usize) -> bool {
        s == self.final_state()
    }
    fn output_register(&self) -> usize {
        self.io().output
    }
    fn initial_config(&self, inputs: &[u64]) -> Result<Config> {
        RegisterMachine::initial_config(self, inputs)
    }
    fn advance(&self, c: &mut Config) -> Result<Advance> {
        Ok(RegisterMachine::advance(self, c))
    }
}

impl Oracle for FlowGraph {
    fn states(&self) -> &[String] {
        FlowGraph::states(self)
    }
    fn registers(&self) -> usize {
        FlowGraph::registers(self)
    }
    fn is_halting(&self, s: usize) -> bool {
        FlowGraph::is_halting(self, s)
    }
    fn output_register(&self) -> usize {
        self.io().output
    }
    fn initial_config(&self, inputs: &[u64]) -> Result<Config> {
        FlowGraph::initial_config(self, inputs)
    }
    fn advance(&self, c: &mut Config) -> Result<Advance> {
        FlowGraph::advance(self, c)
    }
}

impl Program {
    pub fn oracle(&self) -> &dyn Oracle {
        match self {
            Program::Register(m) => m,
            Program::Flow(g) => g,
        }
    }
}

/// Runs an oracle alone for at most `limit` steps.
pub fn run_oracle(o: &dyn Oracle, inputs: &[u64], limit: u64) -> Result<MachineRun> {
    let mut c = o.initial_config(inputs)?;
    let mut steps = 0;
    let status = loop {
        if steps >= limit {
            break match o.advance(&mut c.clone())? {
                Advance::Halted => MachineStatus::Halted,
                Advance::Stuck => MachineStatus::Stuck,
                Advance::Moved { .. } => MachineStatus::LimitExceeded,
            };
        }
        match o.advance(&mut c)? {
            Advance::Moved { .. } => steps += 1,
            Advance::Halted => break MachineStatus::Halted,
            Advance::Stuck => break MachineStatus::Stuck,
        }
    };
    Ok(MachineRun {
        config: c,
        steps,
        status,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Control {
    OneHot(Vec<Option<PlaceId>>),
    Binary {
        bits: Vec<PlaceId>,
        states: HashMap<u64, usize>,
    },
}

/// How markings of one net read as configurations of one oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateMap {
    control: Control,
    registers: Vec<PlaceId>,
    /// Waiting places: a token there is the control locus while a check
    /// is in flight.
    waiting: Vec<PlaceId>,
    /// Checker request and answer places.
    scratch: Vec<PlaceId>,
}

/// A marking read through a [`StateMap`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Projection {
    /// `state` is `None` when no control token is left.
    Stable {
        state: Option<usize>,
        registers: Vec<u64>,
    },
    InFlight,
}

fn register_ids(net: &Net, count: usize) -> Result<Vec<PlaceId>> {
    (0..count)
        .map(|r| {
            net.place(&register_place(r))
                .ok_or_else(|| Error::UnknownPlace(register_place(r)))
        })
        .collect()
}

impl StateMap {
    /// One place `Q<state>` per represented oracle state. States without a
    /// place are passed through by the oracle between synchronisations.
    pub fn one_hot(net: &Net, oracle: &dyn Oracle) -> Result<StateMap> {
        let registers = register_ids(net, oracle.registers())?;
        let control: Vec<Option<PlaceId>> = oracle
            .states()
            .iter()
            .map(|s| net.place(&state_place(s)))
            .collect();
        Self::classify(net, Control::OneHot(control), registers)
    }

    /// Bit places `Q<n-1>..Q0` holding the code of the current state.
    pub fn binary(
        net: &Net,
        oracle: &dyn Oracle,
        codes: &BTreeMap<String, u64>,
    ) -> Result<StateMap> {
        let registers = register_ids(net, oracle.registers())?;
        let n = (0..)
            .take_while(|i| net.place(&format!("Q{i}")).is_some())
            .count();
        let bits = (0..n)
            .rev()
            .map(|i| net.place(&format!("Q{i}")).expect("bit place exists"))
            .collect();
        let mut states = HashMap::new();
        for (name, &code) in codes {
            if code == 0 {
                continue;
            }
            let s = oracle
                .states()
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| Error::UnknownState(name.clone()))?;
            states.insert(code, s);
        }
        Self::classify(net, Control::Binary { bits, states }, registers)
    }

    pub fn for_compiled(c: &Compiled) -> Result<StateMap> {
        match &c.codes {
            Some(codes) => StateMap::binary(&c.net, c.program.oracle(), codes),
            None => StateMap::one_hot(&c.net, c.program.oracle()),
        }
    }

    fn classify(net: &Net, control: Control, registers: Vec<PlaceId>) -> Result<StateMap> {
        let mut known: Vec<PlaceId> = registers.clone();
        match &control {
            Control::OneHot(places) => known.extend(places.iter().flatten()),
            Control::Binary { bits, .. } => known.extend(bits),
        }
        let (mut waiting, mut scratch) = (Vec::new(), Vec::new());
        for p in net.place_ids().filter(|p| !known.contains(p)) {
            match net.place_name(p).ends_with('\'') {
                true => waiting.push(p),
                false => scratch.push(p),
            }
        }
        Ok(StateMap {
            control,
            registers,
            waiting,
            scratch,
        })
    }

    /// Whether the oracle state has its own control pattern.
    pub fn represents(&self, state: usize) -> bool {
        match &self.control {
            Control::OneHot(places) => places.get(state).is_some_and(|p| p.is_some()),
            Control::Binary { states, .. } => states.values().any(|&s| s == state),
        }
    }
}

impl StateMap {
    /// The stable marking standing for `c`, if its state is represented.
    pub fn embed(&self, net: &Net, c: &Config) -> Option<Marking> {
        let mut m = Marking::zeros(net.place_count());
        match &self.control {
            Control::OneHot(places) => m.set((*places.get(c.state)?)?, 1),
            Control::Binary { bits, states } => {
                let code = states.iter().find(|(_, &s)| s == c.state)?.0;
                for (i, &p) in bits.iter().enumerate() {
                    m.set(p, (code >> (bits.len() - 1 - i)) & 1);
                }
            }
        }
        for (&p, &v) in self.registers.iter().zip(&c.registers) {
            m.set(p, v);
        }
        Some(m)
    }
}

/// Outcome of [`check_step`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepCheck {
    /// The net reached the oracle's next represented configuration, or both
    /// stopped, after `fired` firings.
    Agree {
        fired: u64,
    },
    Diverge(String),
    Nondeterministic(String),
}

/// Starts the net at the marking standing for `c` and fires until the next
/// stable marking, then compares it with the oracle's next represented
/// configuration. A net that cannot fire must face an oracle that halts,
/// possibly after operation-free moves, or is stuck.
pub fn check_step(oracle: &dyn Oracle, net: &Net, map: &StateMap, c: &Config) -> Result<StepCheck> {
    let m0 = map
        .embed(net, c)
        .ok_or_else(|| Error::UnknownState(oracle.states()[c.state].clone()))?;
    let mut stepper = Stepper::new(net, m0);
    let reached = loop {
        match stepper.step() {
            Step::Fired(_) => {
                if stepper.steps() > 64 {
                    return Ok(StepCheck::Diverge(
                        "no stable marking within 64 firings".into(),
                    ));
                }
                match project_config(net, stepper.marking(), map) {
                    Ok(Projection::InFlight) => continue,
                    Ok(p) => break Some(p),
                    Err(e) => return Ok(StepCheck::Diverge(e.to_string())),
                }
            }
            Step::Deadlock => break None,
            Step::Nondeterministic(ts) => {
                return Ok(StepCheck::Nondeterministic(format!(
                    "{} transitions enabled at {}",
                    ts.len(),
                    net.format_marking(stepper.marking())
                )))
            }
        }
    };
    let mut o = c.clone();
    let fired = stepper.steps();
    let agree = match reached {
        Some(Projection::Stable { state, registers }) => {
            let mut moved = false;
            while let Advance::Moved { .. } = oracle.advance(&mut o)? {
                moved = true;
                if map.represents(o.state) || oracle.is_halting(o.state) {
                    break;
                }
            }
            let want = (map.represents(o.state) || !oracle.is_halting(o.state)).then_some(o.state);
            moved && state == want && registers == o.registers
        }
        Some(Projection::InFlight) => false,
        None => {
            if stepper.steps() > 0 {
                false
            } else {
                loop {
                    match oracle.advance(&mut o)? {
                        Advance::Moved { touched: false } => continue,
                        Advance::Moved { touched: true } => break false,
                        Advance::Halted | Advance::Stuck => break o.registers == c.registers,
                    }
                }
            }
        }
    };
    Ok(if agree {
        StepCheck::Agree { fired }
    } else {
        StepCheck::Diverge(format!(
            "from {} {:?}: net reached {}, oracle reached {} {:?}",
            oracle.states()[c.state],
            c.registers,
            net.format_marking(stepper.marking()),
            oracle.states()[o.state],
            o.registers
        ))
    })
}

/// Reads `m` as an oracle configuration. A marking with more than one
/// control locus, a bit place above 1, or a stray checker token is an
/// error.
pub fn project_config(net: &Net, m: &Marking, map: &StateMap) -> Result<Projection> {
    let corrupt =
        |what: &str| Error::CorruptMarking(format!("{what} at {}", net.format_marking(m)));
    let waiting: u64 = map.waiting.iter().map(|&p| m.get(p)).sum();
    let scratch: u64 = map.scratch.iter().map(|&p| m.get(p)).sum();
    let (state, loci) = match &map.control {
        Control::OneHot(places) => {
            let mut state = None;
            let mut loci = 0;
            for (s, p) in places.iter().enumerate() {
                if let Some(p) = p {
                    let k = m.get(*p);
                    if k > 0 {
                        loci += k;
                        state = Some(s);
                    }
                }
            }
            (state, loci)
        }
        Control::Binary { bits, states } => {
            let mut code = 0;
            for &p in bits {
                match m.get(p) {
                    0 => code <<= 1,
                    1 => code = code << 1 | 1,
                    _ => return Err(corrupt("bit place above 1")),
                }
            }
            if code == 0 {
                (None, 0)
            } else {
                let s = *states
                    .get(&code)
                    .ok_or_else(|| corrupt("unassigned code"))?;
                (Some(s), 1)
            }
        }
    };
    if loci + waiting > 1 {
        return Err(corrupt("two control loci"));
    }
    if scratch > 1 || (scratch > 0 && waiting == 0) {
        return Err(corrupt("stray checker token"));
    }
    if waiting > 0 {
        return Ok(Projection::InFlight);
    }
    Ok(Projection::Stable {
        state,
        registers: map.registers.iter().map(|&p| m.get(p)).collect(),
    })
}

/// Result of one co-simulated input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub inputs: Vec<u64>,
    /// False when the oracle did not finish within the limit; the net is
    /// not run then and the flags hold vacuously.
    pub verified: bool,
    pub status_match: bool,
    pub output_match: bool,
    pub register_match: bool,
    pub oracle_status: MachineStatus,
    pub oracle_steps: u64,
    pub oracle_output: u64,
    pub net_status: Option<RunStatus>,
    pub net_steps: u64,
    pub net_output: Option<u64>,
    /// Stable markings compared against the oracle.
    pub sync_points: u64,
    pub divergence: Option<String>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status_match && self.output_match && self.register_match
    }

    fn unverified(inputs: &[u64], run: &MachineRun, output: usize) -> Verdict {
        Verdict {
            inputs: inputs.to_vec(),
            verified: false,
            status_match: true,
            output_match: true,
            register_match: true,
            oracle_status: run.status,
            oracle_steps: run.steps,
            oracle_output: run.config.registers.get(output).copied().unwrap_or(0),
            net_status: None,
            net_steps: 0,
            net_output: None,
            sync_points: 0,
            divergence: None,
        }
    }
}

/// Net steps allowed per oracle step; a zero test through a checker block
/// takes three firings.
pub const NET_STEPS_PER_ORACLE_STEP: u64 = 4;

/// Runs the oracle alone first; if it finishes within `limit` steps the
/// net is run in lock-step with it. At every stable marking the oracle is
/// advanced to the next state the net represents and the full register
/// vector is compared. At the net's deadlock the oracle may still take
/// operation-free moves into a halting state.
pub fn cosimulate(
    oracle: &dyn Oracle,
    net: &Net,
    map: &StateMap,
    inputs: &[u64],
    limit: u64,
) -> Result<Verdict> {
    let run = run_oracle(oracle, inputs, limit)?;
    lockstep(oracle, net, map, inputs, limit, &run)
}

pub(crate) fn lockstep(
    oracle: &dyn Oracle,
    net: &Net,
    map: &StateMap,
    inputs: &[u64],
    limit: u64,
    alone: &MachineRun,
) -> Result<Verdict> {
    let out_reg = oracle.output_register();
    if alone.status == MachineStatus::LimitExceeded {
        return Ok(Verdict::unverified(inputs, alone, out_reg));
    }
    let mut v = Verdict::unverified(inputs, alone, out_reg);
    v.verified = true;
    let mut c = oracle.initial_config(inputs)?;
    let mut stepper = Stepper::new(net, net.input_marking(inputs)?);
    let mut oracle_steps = 0u64;
    let cap = limit.saturating_mul(NET_STEPS_PER_ORACLE_STEP).max(16);
    let expected =
        |c: &Config| (map.represents(c.state) || !oracle.is_halting(c.state)).then_some(c.state);
    let describe = |c: &Config, m: &Marking| {
        format!(
            "oracle at {} {:?}, net at {}",
            oracle.states()[c.state],
            c.registers,
            net.format_marking(m)
        )
    };
    let fail = |v: &mut Verdict, what: String, regs: bool| {
        v.status_match = false;
        v.register_match &= !regs;
        v.divergence.get_or_insert(what);
    };

    let check = |p: &Projection, c: &Config| -> bool {
        matches!(p, Projection::Stable { state, registers }
            if *state == expected(c) && *registers == c.registers)
    };
    let p0 = project_config(net, stepper.marking(), map)?;
    if !check(&p0, &c) {
        let msg = format!(
            "initial marking disagrees: {}",
            describe(&c, stepper.marking())
        );
        fail(&mut v, msg, true);
        return Ok(finish(v, &stepper, oracle_steps, None, net));
    }
    let status = loop {
        if stepper.steps() >= cap {
            let msg = format!(
                "net exceeded {cap} steps: {}",
                describe(&c, stepper.marking())
            );
            fail(&mut v, msg, false);
            break RunStatus::StepLimitExceeded;
        }
        match stepper.step() {
            Step::Fired(_) => {
                let p = match project_config(net, stepper.marking(), map) {
                    Ok(p) => p,
                    Err(e) => {
                        fail(&mut v, e.to_string(), true);
                        break RunStatus::StepLimitExceeded;
                    }
                };
                if p == Projection::InFlight {
                    continue;
                }
                v.sync_points += 1;
                // one oracle step, then through any states the net skips
                let mut moved = false;
                while let Advance::Moved { .. } = oracle.advance(&mut c)? {
                    oracle_steps += 1;
                    moved = true;
                    if map.represents(c.state) || oracle.is_halting(c.state) {
                        break;
                    }
                }
                if !moved || !check(&p, &c) {
                    let step = stepper.steps();
                    let msg = format!("step {step}: {}", describe(&c, stepper.marking()));
                    fail(&mut v, msg, true);
                    break RunStatus::StepLimitExceeded;
                }
            }
            Step::Deadlock => break RunStatus::Deadlock,
            Step::Nondeterministic(ts) => {
                let names: Vec<&str> = ts
                    .iter()
                    .map(|&t| net.transitions()[t.index()].name())
                    .collect();
                let msg = format!(
                    "{} enabled together: {}",
                    names.join(", "),
                    describe(&c, stepper.marking())
                );
                fail(&mut v, msg, false);
                break RunStatus::NondeterminismDetected;
            }
        }
    };
    if status == RunStatus::Deadlock {
        // erased halting arcs leave the net in the source state
        let at = c.state;
        let mut end = oracle.advance(&mut c.clone())?;
        while let Advance::Moved { touched: false } = end {
            oracle.advance(&mut c)?;
            oracle_steps += 1;
            end = oracle.advance(&mut c.clone())?;
        }
        let p = project_config(net, stepper.marking(), map)?;
        let registers_agree =
            matches!(&p, Projection::Stable { registers, .. } if *registers == c.registers);
        let status_agrees = match (&p, end) {
            (Projection::Stable { state, .. }, Advance::Halted) => {
                state.is_none() || *state == Some(c.state) || *state == Some(at)
            }
            (Projection::Stable { state, .. }, Advance::Stuck) => *state == Some(c.state),
            _ => false,
        };
        if !status_agrees || !registers_agree {
            let msg = format!("deadlock disagrees: {}", describe(&c, stepper.marking()));
            fail(&mut v, msg, !registers_agree);
        }
    }
    Ok(finish(v, &stepper, oracle_steps, Some(status), net))
}

fn finish(
    mut v: Verdict,
    stepper: &Stepper,
    oracle_steps: u64,
    status: Option<RunStatus>,
    net: &Net,
) -> Verdict {
    v.net_steps = stepper.steps();
    v.net_status = status;
    let out = net.output_place().map(|p| stepper.marking().get(p));
    v.net_output = out.filter(|_| status == Some(RunStatus::Deadlock));
    v.output_match = v.net_output == Some(v.oracle_output);
    if v.status_match && oracle_steps != v.oracle_steps {
        v.status_match = false;
        v.divergence = Some(format!(
            "oracle took {oracle_steps} steps in lock-step but {} alone",
            v.oracle_steps
        ));
    }
    v
}

/// Co-simulates a compiled net against the program it came from.
pub fn certify(c: &Compiled, inputs: &[u64], limit: u64) -> Result<Verdict> {
    let map = StateMap::for_compiled(c)?;
    cosimulate(c.program.oracle(), &c.net, &map, inputs, limit)
}
