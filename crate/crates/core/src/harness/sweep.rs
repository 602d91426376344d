use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lockstep, run_oracle, StateMap, Verdict};
use crate::codegen::{Compiled, Strategy};
use crate::error::Result;
use crate::machines::{MachineRun, Program};
use crate::petri::Metrics;

/// All pairs `(a, b)` with `a, b < k`.
pub fn grid(k: u64) -> Vec<Vec<u64>> {
    (0..k)
        .flat_map(|a| (0..k).map(move |b| vec![a, b]))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub strategy: Strategy,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyMetrics {
    pub strategy: Strategy,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub limit: u64,
    pub metrics: Vec<StrategyMetrics>,
    pub verdicts: Vec<SweepEntry>,
}

/// Compiles each strategy (from `program`, or from its reference program)
/// and co-simulates it on every grid input. Oracle runs are shared between
/// strategies compiled from the same program.
pub fn sweep(
    strategies: &[Strategy],
    program: Option<&Program>,
    inputs: &[Vec<u64>],
    limit: u64,
) -> Result<SweepReport> {
    let compiled: Vec<Compiled> = strategies
        .iter()
        .map(|s| match program {
            Some(p) => s.compile(p),
            None => Ok(s.reference()),
        })
        .collect::<Result<_>>()?;
    let maps: Vec<StateMap> = compiled
        .iter()
        .map(StateMap::for_compiled)
        .collect::<Result<_>>()?;

    let mut programs: Vec<&Program> = Vec::new();
    let mut texts: Vec<String> = Vec::new();
    let mut index = Vec::new();
    for c in &compiled {
        let text = c.program.to_string();
        let i = match texts.iter().position(|t| *t == text) {
            Some(i) => i,
            None => {
                texts.push(text);
                programs.push(&c.program);
                texts.len() - 1
            }
        };
        index.push(i);
    }
    let jobs: Vec<(usize, usize)> = (0..programs.len())
        .flat_map(|p| (0..inputs.len()).map(move |i| (p, i)))
        .collect();
    let runs: HashMap<(usize, usize), MachineRun> = jobs
        .par_iter()
        .map(|&(p, i)| Ok(((p, i), run_oracle(programs[p].oracle(), &inputs[i], limit)?)))
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..compiled.len())
        .flat_map(|s| (0..inputs.len()).map(move |i| (s, i)))
        .collect();
    let verdicts: Vec<SweepEntry> = pairs
        .par_iter()
        .map(|&(s, i)| {
            let c = &compiled[s];
            let run = &runs[&(index[s], i)];
            let verdict = lockstep(c.program.oracle(), &c.net, &maps[s], &inputs[i], limit, run)?;
            Ok(SweepEntry {
                strategy: c.strategy,
                verdict,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        limit,
        metrics: compiled
            .iter()
            .map(|c| StrategyMetrics {
                strategy: c.strategy,
                metrics: c.net.metrics(),
            })
            .collect(),
        verdicts,
    })
}

impl SweepReport {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|e| e.verdict.passed())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepEntry> {
        self.verdicts.iter().filter(|e| !e.verdict.passed())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per strategy: metrics, then verified / unverified / failed
    /// counts.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:<24} {:>8} {:>10} {:>6}",
            "strategy", "metrics", "verified", "unverified", "failed"
        );
        for m in &self.metrics {
            let mine = || self.verdicts.iter().filter(|e| e.strategy == m.strategy);
            let verified = mine()
                .filter(|e| e.verdict.verified && e.verdict.passed())
                .count();
            let unverified = mine().filter(|e| !e.verdict.verified).count();
            let failed = mine().filter(|e| !e.verdict.passed()).count();
            let _ = writeln!(
                out,
                "{:<14} {:<24} {:>8} {:>10} {:>6}",
                m.strategy.name(),
                m.metrics.to_string(),
                verified,
                unverified,
                failed
            );
        }
        for e in self.failures() {
            let _ = writeln!(
                out,
                "FAIL {} {:?}: {}",
                e.strategy,
                e.verdict.inputs,
                e.verdict.divergence.as_deref().unwrap_or("output differs")
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order() {
        assert_eq!(
            grid(2),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        assert!(grid(0).is_empty());
    }

    #[test]
    fn empty_grid_reports_metrics_only() {
        let r = sweep(&Strategy::ALL, None, &[], 100).unwrap();
        assert_eq!(r.metrics.len(), 6);
        assert!(r.verdicts.is_empty() && r.all_passed());
        assert!(r.summary().contains("checker-merge"));
    }
}
