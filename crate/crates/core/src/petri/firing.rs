use crate::error::{Error, Result};

use super::{InputArc, Marking, Net, TransitionId};

/// Firing budget used when the caller does not supply one.
pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum RunStatus {
    Deadlock,
    StepLimitExceeded,
    NondeterminismDetected,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub final_marking: Marking,
    pub steps: u64,
    pub status: RunStatus,
    pub trace: Option<Vec<TransitionId>>,
}

/// Outcome of a single [`Stepper::step`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Fired(TransitionId),
    Deadlock,
    /// Two or more transitions enabled; nothing fired.
    Nondeterministic(Vec<TransitionId>),
}

impl Net {
    #[inline]
    fn is_enabled(&self, m: &[u64], t: usize) -> bool {
        self.transitions[t].inputs.iter().all(|&(p, arc)| {
            let have = m[p.index()];
            match arc {
                InputArc::Consume(w) => have >= u64::from(w),
                InputArc::Inhibit => have == 0,
            }
        })
    }

    #[inline]
    fn fire_unchecked(&self, m: &mut [u64], t: usize) {
        let tr = &self.transitions[t];
        for &(p, arc) in &tr.inputs {
            if let InputArc::Consume(w) = arc {
                m[p.index()] -= u64::from(w);
            }
        }
        for &(p, w) in &tr.outputs {
            m[p.index()] += u64::from(w);
        }
    }

    fn sized(&self, m: &Marking) -> Marking {
        let mut v = m.0.clone();
        if v.len() < self.places.len() {
            v.resize(self.places.len(), 0);
        }
        Marking(v)
    }

    /// Whether `t` may fire at `m`.
    pub fn enabled(&self, m: &Marking, t: TransitionId) -> Result<bool> {
        self.transition(t)?;
        Ok(self.is_enabled(&self.sized(m).0, t.index()))
    }

    /// Fires `t` at `m`, returning the successor marking.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking> {
        let name = self.transition(t)?.name.clone();
        let mut next = self.sized(m);
        if !self.is_enabled(&next.0, t.index()) {
            return Err(Error::NotEnabled(name));
        }
        self.fire_unchecked(&mut next.0, t.index());
        Ok(next)
    }

    /// All transitions enabled at `m`, in index order.
    pub fn enabled_set(&self, m: &Marking) -> Vec<TransitionId> {
        let m = self.sized(m);
        (0..self.transitions.len())
            .filter(|&t| self.is_enabled(&m.0, t))
            .map(|t| TransitionId(t as u32))
            .collect()
    }

    /// Fires the unique enabled transition until none is enabled, two are
    /// enabled at once, or `step_limit` firings have happened.
    pub fn run_to_deadlock(&self, m0: &Marking, step_limit: u64, trace: bool) -> RunResult {
        let mut stepper = Stepper::new(self, m0.clone());
        let mut fired = trace.then(Vec::new);
        let status = loop {
            if stepper.steps() >= step_limit {
                // a deadlocked or ambiguous marking still reports as such
                match stepper.peek() {
                    Step::Deadlock => break RunStatus::Deadlock,
                    Step::Nondeterministic(_) => break RunStatus::NondeterminismDetected,
                    Step::Fired(_) => break RunStatus::StepLimitExceeded,
                }
            }
            match stepper.step() {
                Step::Fired(t) => {
                    if let Some(f) = fired.as_mut() {
                        f.push(t);
                    }
                }
                Step::Deadlock => break RunStatus::Deadlock,
                Step::Nondeterministic(_) => break RunStatus::NondeterminismDetected,
            }
        };
        RunResult {
            steps: stepper.steps(),
            final_marking: stepper.into_marking(),
            status,
            trace: fired,
        }
    }

    /// Runs the net on `inputs` added to the input places and reads the
    /// output place at deadlock. `None` when the run does not deadlock.
    pub fn compute(&self, inputs: &[u64], step_limit: u64) -> Result<Option<u64>> {
        let m0 = self.input_marking(inputs)?;
        let out = self
            .output_place
            .ok_or_else(|| Error::Metadata("net has no output place".into()))?;
        let run = self.run_to_deadlock(&m0, step_limit, false);
        Ok(match run.status {
            RunStatus::Deadlock => Some(run.final_marking.get(out)),
            _ => None,
        })
    }

    /// The initial marking with `inputs[j]` extra tokens on input place `j`.
    pub fn input_marking(&self, inputs: &[u64]) -> Result<Marking> {
        if inputs.len() != self.input_places.len() {
            return Err(Error::ArityMismatch {
                expected: self.input_places.len(),
                actual: inputs.len(),
            });
        }
        let mut m = self.sized(&self.initial_marking);
        for (&p, &v) in self.input_places.iter().zip(inputs) {
            m.add(p, v);
        }
        Ok(m)
    }
}

/// Sequential executor that checks for ambiguity at every marking.
pub struct Stepper<'a> {
    net: &'a Net,
    marking: Marking,
    steps: u64,
}

impl<'a> Stepper<'a> {
    pub fn new(net: &'a Net, m0: Marking) -> Self {
        let marking = net.sized(&m0);
        Stepper {
            net,
            marking,
            steps: 0,
        }
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn into_marking(self) -> Marking {
        self.marking
    }

    fn scan(&self) -> Step {
        let m = &self.marking.0;
        let n = self.net.transitions.len();
        let mut first = None;
        for t in 0..n {
            if self.net.is_enabled(m, t) {
                if first.is_some() {
                    return Step::Nondeterministic(self.net.enabled_set(&self.marking));
                }
                first = Some(t);
            }
        }
        match first {
            Some(t) => Step::Fired(TransitionId(t as u32)),
            None => Step::Deadlock,
        }
    }

    /// What [`Stepper::step`] would do, without firing.
    pub fn peek(&self) -> Step {
        self.scan()
    }

    pub fn step(&mut self) -> Step {
        let s = self.scan();
        if let Step::Fired(t) = s {
            self.net.fire_unchecked(&mut self.marking.0, t.index());
            self.steps += 1;
        }
        s
    }
}
