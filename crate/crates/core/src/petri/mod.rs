//! Place/transition nets with inhibitor arcs.
//!
//! A [`Net`] is immutable once built. Arc weights follow the usual
//! convention: `weight(p, t)` is the number of tokens consumed from `p`
//! (or `-1` for an inhibitor arc, which requires `p` to be empty), and
//! `weight(t, p)` is the number of tokens produced on `p`.

mod firing;
mod incidence;
mod metrics;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use firing::{RunResult, RunStatus, Step, Stepper, DEFAULT_STEP_LIMIT};
pub use incidence::{
    export_incidence, import_incidence, load_net, save_net, sidecar_path, Delimiter, IncidenceCell,
    NetDocument, NetMetadata,
};
pub use metrics::Metrics;

/// Index of a place within its net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlaceId(pub u32);

/// Index of a transition within its net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransitionId(pub u32);

impl PlaceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TransitionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Arc from a place into a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputArc {
    /// Consume this many tokens (always at least 1).
    Consume(u32),
    /// Require the place to be empty.
    Inhibit,
}

impl InputArc {
    /// The integer weight: `-1` for inhibitors.
    pub fn weight(self) -> i64 {
        match self {
            InputArc::Consume(w) => i64::from(w),
            InputArc::Inhibit => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    name: String,
    /// Sorted by place, one entry per place.
    inputs: Vec<(PlaceId, InputArc)>,
    /// Sorted by place, one entry per place, weights >= 1.
    outputs: Vec<(PlaceId, u32)>,
}

impl Transition {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &[(PlaceId, InputArc)] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[(PlaceId, u32)] {
        &self.outputs
    }

    pub fn input(&self, p: PlaceId) -> Option<InputArc> {
        self.inputs
            .binary_search_by_key(&p, |&(q, _)| q)
            .ok()
            .map(|i| self.inputs[i].1)
    }

    pub fn output(&self, p: PlaceId) -> u32 {
        self.outputs
            .binary_search_by_key(&p, |&(q, _)| q)
            .map(|i| self.outputs[i].1)
            .unwrap_or(0)
    }

    /// Number of incident arcs, counting each direction separately.
    pub fn degree(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }
}

/// Token counts per place. Places beyond the stored length hold 0.
#[derive(Clone, Debug, Default)]
pub struct Marking(Vec<u64>);

impl Marking {
    fn trimmed(&self) -> &[u64] {
        let end = self.0.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
        &self.0[..end]
    }
}

impl PartialEq for Marking {
    fn eq(&self, other: &Self) -> bool {
        self.trimmed() == other.trimmed()
    }
}

impl Eq for Marking {}

impl std::hash::Hash for Marking {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.trimmed().hash(state);
    }
}

impl Marking {
    pub fn zeros(places: usize) -> Self {
        Marking(vec![0; places])
    }

    pub fn get(&self, p: PlaceId) -> u64 {
        self.0.get(p.index()).copied().unwrap_or(0)
    }

    pub fn set(&mut self, p: PlaceId, count: u64) {
        let i = p.index();
        if i >= self.0.len() {
            self.0.resize(i + 1, 0);
        }
        self.0[i] = count;
    }

    pub fn add(&mut self, p: PlaceId, count: u64) {
        let current = self.get(p);
        self.set(p, current + count);
    }

    /// Places holding at least one token, in index order.
    pub fn support(&self) -> impl Iterator<Item = (PlaceId, u64)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (PlaceId(i as u32), c))
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

/// A place/transition net with inhibitor arcs plus its computation
/// interface (initial marking, input places, output place).
#[derive(Clone, Debug)]
pub struct Net {
    places: Vec<String>,
    transitions: Vec<Transition>,
    initial_marking: Marking,
    input_places: Vec<PlaceId>,
    output_place: Option<PlaceId>,
    place_index: HashMap<String, PlaceId>,
    transition_index: HashMap<String, TransitionId>,
}

impl Net {
    pub fn builder() -> NetBuilder {
        NetBuilder::default()
    }

    pub fn empty() -> Net {
        NetBuilder::default().build().expect("empty net is valid")
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn place_ids(&self) -> impl Iterator<Item = PlaceId> {
        (0..self.places.len() as u32).map(PlaceId)
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransitionId> {
        (0..self.transitions.len() as u32).map(TransitionId)
    }

    pub fn place(&self, name: &str) -> Option<PlaceId> {
        self.place_index.get(name).copied()
    }

    pub fn transition_id(&self, name: &str) -> Option<TransitionId> {
        self.transition_index.get(name).copied()
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p.index()]
    }

    pub fn transition(&self, t: TransitionId) -> Result<&Transition> {
        self.transitions
            .get(t.index())
            .ok_or_else(|| Error::UnknownTransition(format!("#{}", t.0)))
    }

    /// `weight(p, t)`: tokens consumed, `-1` for an inhibitor, `0` if absent.
    pub fn weight_in(&self, p: PlaceId, t: TransitionId) -> i64 {
        self.transitions
            .get(t.index())
            .and_then(|tr| tr.input(p))
            .map_or(0, InputArc::weight)
    }

    /// `weight(t, p)`: tokens produced, `0` if absent.
    pub fn weight_out(&self, t: TransitionId, p: PlaceId) -> u32 {
        self.transitions.get(t.index()).map_or(0, |tr| tr.output(p))
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial_marking
    }

    pub fn input_places(&self) -> &[PlaceId] {
        &self.input_places
    }

    pub fn output_place(&self) -> Option<PlaceId> {
        self.output_place
    }

    pub fn degree(&self, t: TransitionId) -> Result<usize> {
        Ok(self.transition(t)?.degree())
    }

    pub fn metrics(&self) -> Metrics {
        Metrics::of(self)
    }

    /// A marking sized for this net from `(place name, count)` pairs.
    pub fn marking(&self, pairs: &[(&str, u64)]) -> Result<Marking> {
        let mut m = Marking::zeros(self.places.len());
        for &(name, count) in pairs {
            let p = self
                .place(name)
                .ok_or_else(|| Error::UnknownPlace(name.to_string()))?;
            m.add(p, count);
        }
        Ok(m)
    }

    /// Renders the support of `m` as `{Q1:1, R1:4}`.
    pub fn format_marking(&self, m: &Marking) -> String {
        let cells: Vec<String> = m
            .support()
            .filter(|(p, _)| p.index() < self.places.len())
            .map(|(p, c)| format!("{}:{}", self.place_name(p), c))
            .collect();
        format!("{{{}}}", cells.join(", "))
    }

    /// Same net with a different computation interface.
    pub fn with_interface(
        mut self,
        initial_marking: Marking,
        input_places: Vec<PlaceId>,
        output_place: Option<PlaceId>,
    ) -> Result<Net> {
        let n = self.places.len();
        if input_places
            .iter()
            .chain(output_place.iter())
            .any(|p| p.index() >= n)
        {
            return Err(Error::InvalidNet("interface place out of range".into()));
        }
        let mut m = initial_marking;
        m.0.resize(n.max(m.0.len()), 0);
        self.initial_marking = m;
        self.input_places = input_places;
        self.output_place = output_place;
        Ok(self)
    }
}

impl fmt::Display for Net {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}",
            export_incidence(self, Delimiter::Tab).trim_end_matches('\n')
        )
    }
}

/// Name, input arcs and output arcs of a transition under construction.
type PendingTransition = (String, Vec<(PlaceId, InputArc)>, Vec<(PlaceId, u32)>);

/// Incremental constructor for [`Net`].
#[derive(Clone, Debug, Default)]
pub struct NetBuilder {
    places: Vec<String>,
    place_index: HashMap<String, PlaceId>,
    transitions: Vec<PendingTransition>,
    transition_index: HashMap<String, TransitionId>,
    initial: Vec<(PlaceId, u64)>,
    inputs: Vec<PlaceId>,
    output: Option<PlaceId>,
    error: Option<Error>,
}

impl NetBuilder {
    /// Adds a place, or returns the existing one with that name.
    pub fn place(&mut self, name: &str) -> PlaceId {
        if let Some(&p) = self.place_index.get(name) {
            return p;
        }
        let p = PlaceId(self.places.len() as u32);
        self.places.push(name.to_string());
        self.place_index.insert(name.to_string(), p);
        p
    }

    /// Adds a place and records an error if the name is already taken.
    pub fn new_place(&mut self, name: &str) -> PlaceId {
        if self.place_index.contains_key(name) || self.transition_index.contains_key(name) {
            self.fail(Error::DuplicateName(name.to_string()));
        }
        self.place(name)
    }

    pub fn has_place(&self, name: &str) -> bool {
        self.place_index.contains_key(name)
    }

    pub fn transition(&mut self, name: &str) -> TransitionId {
        if self.transition_index.contains_key(name) || self.place_index.contains_key(name) {
            self.fail(Error::DuplicateName(name.to_string()));
        }
        let t = TransitionId(self.transitions.len() as u32);
        self.transitions
            .push((name.to_string(), Vec::new(), Vec::new()));
        self.transition_index.insert(name.to_string(), t);
        t
    }

    /// Sets `weight(p, t)` from its integer form (`-1`, `0`, or positive).
    pub fn set_weight_in(&mut self, p: PlaceId, t: TransitionId, weight: i64) -> &mut Self {
        let arc = match weight {
            0 => None,
            -1 => Some(InputArc::Inhibit),
            w if w > 0 && w <= i64::from(u32::MAX) => Some(InputArc::Consume(w as u32)),
            w => {
                self.fail(Error::InvalidNet(format!("input weight {w} out of range")));
                None
            }
        };
        let inputs = &mut self.transitions[t.index()].1;
        inputs.retain(|&(q, _)| q != p);
        if let Some(arc) = arc {
            inputs.push((p, arc));
        }
        self
    }

    pub fn consume(&mut self, p: PlaceId, t: TransitionId, weight: u32) -> &mut Self {
        self.set_weight_in(p, t, i64::from(weight))
    }

    pub fn inhibit(&mut self, p: PlaceId, t: TransitionId) -> &mut Self {
        self.set_weight_in(p, t, -1)
    }

    /// Sets `weight(t, p)`.
    pub fn produce(&mut self, t: TransitionId, p: PlaceId, weight: u32) -> &mut Self {
        let outputs = &mut self.transitions[t.index()].2;
        outputs.retain(|&(q, _)| q != p);
        if weight > 0 {
            outputs.push((p, weight));
        }
        self
    }

    pub fn initial_tokens(&mut self, p: PlaceId, count: u64) -> &mut Self {
        self.initial.push((p, count));
        self
    }

    pub fn input_place(&mut self, p: PlaceId) -> &mut Self {
        self.inputs.push(p);
        self
    }

    pub fn output_place(&mut self, p: PlaceId) -> &mut Self {
        self.output = Some(p);
        self
    }

    fn fail(&mut self, e: Error) {
        if self.error.is_none() {
            self.error = Some(e);
        }
    }

    pub fn build(self) -> Result<Net> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let transitions = self
            .transitions
            .into_iter()
            .map(|(name, mut inputs, mut outputs)| {
                inputs.sort_by_key(|&(p, _)| p);
                outputs.sort_by_key(|&(p, _)| p);
                Transition {
                    name,
                    inputs,
                    outputs,
                }
            })
            .collect();
        let mut initial_marking = Marking::zeros(self.places.len());
        for (p, c) in self.initial {
            initial_marking.add(p, c);
        }
        Ok(Net {
            places: self.places,
            transitions,
            initial_marking,
            input_places: self.inputs,
            output_place: self.output,
            place_index: self.place_index,
            transition_index: self.transition_index,
        })
    }
}
