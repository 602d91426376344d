//! State compression on flow graphs.
//!
//! A state is removed by replacing every two-step path `pred -> q -> succ`
//! with a single merged arc. The conditions of the outgoing arc are
//! rewritten to the values seen at `pred`, which is possible as long as the
//! incoming arc never decrements a register the outgoing arc tests.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::machines::{Condition, FlowArc, FlowGraph, Sense};

/// How a same-register interaction between the two arcs was resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RuleKind {
    /// Incoming arc increments, outgoing tests nonzero: the test is dropped.
    RedundantCheck,
    /// Incoming arc increments, outgoing tests zero: never traversable.
    ImpossibleCheck,
    /// Both test zero.
    ZeroZero,
    /// Zero then nonzero.
    ZeroNonZero,
    /// Nonzero then zero.
    NonZeroZero,
    /// Both test nonzero.
    NonZeroNonZero,
}

impl RuleKind {
    pub fn tag(&self) -> &'static str {
        match self {
            RuleKind::RedundantCheck => "redundant-check",
            RuleKind::ImpossibleCheck => "impossible-check",
            RuleKind::ZeroZero => "scenario-1",
            RuleKind::ZeroNonZero => "scenario-2",
            RuleKind::NonZeroZero => "scenario-3",
            RuleKind::NonZeroNonZero => "scenario-4",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MergeRule {
    pub register: usize,
    pub kind: RuleKind,
}

impl fmt::Display for MergeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(R{})", self.kind.tag(), self.register)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BlockReason {
    /// The arcs do not share a middle state.
    NotAdjacent,
    /// One of the arcs is a loop on the middle state.
    Loop,
    /// The outgoing arc tests a register the incoming arc decrements.
    DecrementedThenTested(usize),
}

impl fmt::Display for BlockReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockReason::NotAdjacent => f.write_str("blocked(not-adjacent)"),
            BlockReason::Loop => f.write_str("blocked(loop)"),
            BlockReason::DecrementedThenTested(r) => write!(f, "blocked(decrement-then-test R{r})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergeOutcome {
    /// The merged arc and the same-register rules that shaped it.
    Arc {
        arc: FlowArc,
        rules: Vec<MergeRule>,
    },
    /// The two-step path can never be taken.
    Infeasible(MergeRule),
    Blocked(BlockReason),
}

impl MergeOutcome {
    pub fn arc(&self) -> Option<&FlowArc> {
        match self {
            MergeOutcome::Arc { arc, .. } => Some(arc),
            _ => None,
        }
    }
}

/// Whether `q` may be removed: not initial, not halting, no loop on it, and
/// no outgoing test of a register that an incoming arc decrements.
pub fn is_compressible(g: &FlowGraph, q: usize) -> bool {
    if q == g.initial() || g.is_halting(q) {
        return false;
    }
    if g.outgoing(q).any(FlowArc::is_loop) {
        return false;
    }
    let decremented: HashSet<usize> = g
        .incoming(q)
        .flat_map(|a| a.operations.iter())
        .filter(|o| !o.is_inc())
        .map(|o| o.register)
        .collect();
    !g.outgoing(q)
        .flat_map(|a| a.conditions.iter())
        .any(|c| decremented.contains(&c.register))
}

/// Combines `a_in: pred -> q` with `a_out: q -> succ`.
pub fn merge_arcs(a_in: &FlowArc, a_out: &FlowArc) -> MergeOutcome {
    if a_in.to != a_out.from {
        return MergeOutcome::Blocked(BlockReason::NotAdjacent);
    }
    if a_in.is_loop() || a_out.is_loop() {
        return MergeOutcome::Blocked(BlockReason::Loop);
    }
    if let Some(c) = a_out
        .conditions
        .iter()
        .find(|c| a_in.decrements(c.register) > 0)
    {
        return MergeOutcome::Blocked(BlockReason::DecrementedThenTested(c.register));
    }
    let mut conditions: BTreeMap<usize, Sense> = a_in
        .conditions
        .iter()
        .map(|c| (c.register, c.sense))
        .collect();
    let mut rules = Vec::new();
    for c in &a_out.conditions {
        let register = c.register;
        let inc = a_in.increments(register) > 0;
        let rule = |kind| MergeRule { register, kind };
        match (a_in.condition(register), c.sense) {
            (None, Sense::NonZero) if inc => rules.push(rule(RuleKind::RedundantCheck)),
            (None, Sense::Zero) if inc => {
                return MergeOutcome::Infeasible(rule(RuleKind::ImpossibleCheck))
            }
            (None, sense) => {
                conditions.insert(register, sense);
            }
            (Some(Sense::Zero), Sense::Zero) => {
                if inc {
                    return MergeOutcome::Infeasible(rule(RuleKind::ZeroZero));
                }
                rules.push(rule(RuleKind::ZeroZero));
            }
            (Some(Sense::Zero), Sense::NonZero) => {
                if !inc {
                    return MergeOutcome::Infeasible(rule(RuleKind::ZeroNonZero));
                }
                rules.push(rule(RuleKind::ZeroNonZero));
            }
            (Some(Sense::NonZero), Sense::Zero) => {
                return MergeOutcome::Infeasible(rule(RuleKind::NonZeroZero))
            }
            (Some(Sense::NonZero), Sense::NonZero) => rules.push(rule(RuleKind::NonZeroNonZero)),
        }
    }
    let conditions = conditions
        .into_iter()
        .map(|(register, sense)| Condition { register, sense })
        .collect();
    let operations = a_in
        .operations
        .iter()
        .chain(&a_out.operations)
        .copied()
        .collect();
    MergeOutcome::Arc {
        arc: FlowArc::new(a_in.from, a_out.to, conditions, operations),
        rules,
    }
}

/// One attempted merge through a removed state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MergeRecord {
    pub pred: String,
    pub state: String,
    pub succ: String,
    pub scenario: String,
    pub outcome: String,
}

impl fmt::Display for MergeRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} -> {}\t{}\t{}",
            self.pred, self.state, self.succ, self.scenario, self.outcome
        )
    }
}

fn record(g: &FlowGraph, a_in: &FlowArc, a_out: &FlowArc, outcome: &MergeOutcome) -> MergeRecord {
    let (scenario, result) = match outcome {
        MergeOutcome::Arc { rules, .. } => {
            let tags: Vec<String> = rules.iter().map(|r| r.to_string()).collect();
            let tags = if tags.is_empty() {
                "plain".to_string()
            } else {
                tags.join(",")
            };
            (tags, "added".to_string())
        }
        MergeOutcome::Infeasible(rule) => (rule.to_string(), "infeasible".to_string()),
        MergeOutcome::Blocked(reason) => (reason.to_string(), "blocked".to_string()),
    };
    MergeRecord {
        pred: g.state_name(a_in.from).to_string(),
        state: g.state_name(a_in.to).to_string(),
        succ: g.state_name(a_out.to).to_string(),
        scenario,
        outcome: result,
    }
}

/// Removes `q`, returning the new graph and one record per attempted merge.
/// Merged arcs identical to an existing arc are dropped.
pub fn compress_state_logged(g: &FlowGraph, q: usize) -> Result<(FlowGraph, Vec<MergeRecord>)> {
    if q >= g.state_count() {
        return Err(Error::UnknownState(format!("#{q}")));
    }
    if !is_compressible(g, q) {
        return Err(Error::NotCompressible(g.state_name(q).to_string()));
    }
    let mut seen: HashSet<FlowArc> = g
        .arcs()
        .iter()
        .filter(|a| a.from != q && a.to != q)
        .cloned()
        .collect();
    let mut arcs = Vec::new();
    let mut log = Vec::new();
    // merged arcs take the place of the arc they extend
    for a_in in g.arcs() {
        if a_in.from == q {
            continue;
        }
        if a_in.to != q {
            arcs.push(a_in.clone());
            continue;
        }
        for a_out in g.outgoing(q) {
            let outcome = merge_arcs(a_in, a_out);
            log.push(record(g, a_in, a_out, &outcome));
            if let MergeOutcome::Arc { arc, .. } = outcome {
                if seen.insert(arc.clone()) {
                    arcs.push(arc);
                }
            }
        }
    }
    Ok((g.without_state(q, arcs)?, log))
}

pub fn compress_state(g: &FlowGraph, q: usize) -> Result<FlowGraph> {
    compress_state_logged(g, q).map(|(h, _)| h)
}

/// Which compressible state to remove next.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CompressOrder {
    /// Fewest outgoing arcs first, ties by state index.
    #[default]
    FewestExits,
    /// Lowest state index first.
    Ascending,
    /// Uniformly random among the compressible states.
    Seeded(u64),
}

#[derive(Clone, Debug)]
pub struct Compression {
    pub graph: FlowGraph,
    /// Names of the removed states, in removal order.
    pub removed: Vec<String>,
    pub log: Vec<MergeRecord>,
}

/// Removes compressible states one at a time, rescanning after each
/// removal, until none is left.
pub fn compress_with(g: &FlowGraph, order: CompressOrder) -> Compression {
    let mut rng = match order {
        CompressOrder::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut graph = g.clone();
    let mut removed = Vec::new();
    let mut log = Vec::new();
    loop {
        let candidates: Vec<usize> = (0..graph.state_count())
            .filter(|&q| is_compressible(&graph, q))
            .collect();
        let pick = match (order, rng.as_mut()) {
            (CompressOrder::Ascending, _) => candidates.first().copied(),
            (CompressOrder::FewestExits, _) => candidates
                .iter()
                .copied()
                .min_by_key(|&q| (graph.out_degree(q), q)),
            (CompressOrder::Seeded(_), Some(rng)) => candidates.choose(rng).copied(),
            (CompressOrder::Seeded(_), None) => unreachable!(),
        };
        let Some(q) = pick else { break };
        removed.push(graph.state_name(q).to_string());
        let (next, entries) = compress_state_logged(&graph, q).expect("candidate is compressible");
        log.extend(entries);
        graph = next;
    }
    Compression {
        graph,
        removed,
        log,
    }
}

pub fn compress(g: &FlowGraph) -> FlowGraph {
    compress_with(g, CompressOrder::default()).graph
}

/// How arcs are compared by [`isomorphism`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcEquivalence {
    /// Same operation list.
    Exact,
    /// Same per-register sum of operations.
    NetEffect,
}

type ArcKey = (usize, usize, Vec<Condition>, Vec<(usize, i64)>);

fn arc_key(a: &FlowArc, map: &[usize], eq: ArcEquivalence) -> ArcKey {
    let ops = match eq {
        ArcEquivalence::Exact => a
            .operations
            .iter()
            .map(|o| (o.register, if o.is_inc() { 1 } else { -1 }))
            .collect(),
        ArcEquivalence::NetEffect => a.net_effect().into_iter().collect(),
    };
    (map[a.from], map[a.to], a.conditions.clone(), ops)
}

fn arc_multiset(g: &FlowGraph, map: &[usize], eq: ArcEquivalence) -> Vec<ArcKey> {
    let mut keys: Vec<ArcKey> = g.arcs().iter().map(|a| arc_key(a, map, eq)).collect();
    keys.sort();
    keys
}

/// A state bijection from `g` to `h` that maps initial to initial, halting
/// to halting and arcs onto arcs, if one exists. Entry `i` is the image of
/// state `i`. Exhaustive, so meant for small graphs.
pub fn isomorphism(g: &FlowGraph, h: &FlowGraph, eq: ArcEquivalence) -> Option<Vec<usize>> {
    let n = g.state_count();
    if n != h.state_count()
        || g.arcs().len() != h.arcs().len()
        || g.halting().len() != h.halting().len()
        || n > 10
    {
        return None;
    }
    let identity: Vec<usize> = (0..n).collect();
    let target = arc_multiset(h, &identity, eq);
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    map[g.initial()] = h.initial();
    used[h.initial()] = true;
    let order: Vec<usize> = (0..n).filter(|&s| s != g.initial()).collect();
    fn search(
        g: &FlowGraph,
        h: &FlowGraph,
        order: &[usize],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        target: &[ArcKey],
        eq: ArcEquivalence,
    ) -> bool {
        let Some((&s, rest)) = order.split_first() else {
            return arc_multiset(g, map, eq) == target;
        };
        for t in 0..h.state_count() {
            if used[t] || g.is_halting(s) != h.is_halting(t) || g.out_degree(s) != h.out_degree(t) {
                continue;
            }
            map[s] = t;
            used[t] = true;
            if search(g, h, rest, map, used, target, eq) {
                return true;
            }
            used[t] = false;
        }
        map[s] = usize::MAX;
        false
    }
    if g.is_halting(g.initial()) != h.is_halting(h.initial()) {
        return None;
    }
    search(g, h, &order, &mut map, &mut used, &target, eq).then_some(map)
}
