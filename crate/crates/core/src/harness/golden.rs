use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::petri::{IncidenceCell, Net, PlaceId, TransitionId};

/// A generated row paired with a golden row that differs in some cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiff {
    pub generated: String,
    pub golden: String,
    /// `(golden place, generated cell, golden cell)`
    pub cells: Vec<(String, String, String)>,
}

/// Cell-level comparison of two nets up to row and column order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenDiff {
    /// `(generated place, golden place)` pairs used for the comparison.
    pub place_map: Vec<(String, String)>,
    pub missing_places: Vec<String>,
    pub extra_places: Vec<String>,
    pub mismatched: Vec<RowDiff>,
    pub missing_rows: Vec<String>,
    pub extra_rows: Vec<String>,
}

impl GoldenDiff {
    pub fn is_empty(&self) -> bool {
        self.missing_places.is_empty()
            && self.extra_places.is_empty()
            && self.mismatched.is_empty()
            && self.missing_rows.is_empty()
            && self.extra_rows.is_empty()
    }

    /// Pairs whose names differ.
    pub fn renamed(&self) -> impl Iterator<Item = &(String, String)> {
        self.place_map.iter().filter(|(a, b)| a != b)
    }
}

impl fmt::Display for GoldenDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            writeln!(f, "no differences")?;
        }
        for (a, b) in self.renamed() {
            writeln!(f, "column {a} compared as {b}")?;
        }
        for p in &self.missing_places {
            writeln!(f, "missing column {p}")?;
        }
        for p in &self.extra_places {
            writeln!(f, "extra column {p}")?;
        }
        for r in &self.mismatched {
            let cells = r
                .cells
                .iter()
                .map(|(p, a, b)| format!("{p}: {a:?} vs {b:?}"))
                .join(", ");
            writeln!(f, "row {} vs {}: {cells}", r.generated, r.golden)?;
        }
        for t in &self.missing_rows {
            writeln!(f, "missing row {t}")?;
        }
        for t in &self.extra_rows {
            writeln!(f, "extra row {t}")?;
        }
        Ok(())
    }
}

/// Name with digits removed: `Q12` and `Q3` share a class, `Q12'` does not.
fn class(name: &str) -> String {
    name.chars().filter(|c| !c.is_ascii_digit()).collect()
}

type Row = Vec<IncidenceCell>;

fn rows(net: &Net, columns: &[Option<PlaceId>]) -> Vec<Row> {
    net.transition_ids()
        .map(|t| {
            columns
                .iter()
                .map(|p| p.map_or_else(IncidenceCell::default, |p| IncidenceCell::of(net, p, t)))
                .collect()
        })
        .collect()
}

fn distance(a: &Row, b: &Row) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Rows matched exactly, then the rest paired by fewest differing cells.
fn match_rows(gen: &[Row], gold: &[Row]) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    let mut by_sig: BTreeMap<&Row, Vec<usize>> = BTreeMap::new();
    for (j, r) in gold.iter().enumerate().rev() {
        by_sig.entry(r).or_default().push(j);
    }
    let mut pairs = Vec::new();
    let mut gen_left = Vec::new();
    for (i, r) in gen.iter().enumerate() {
        match by_sig.get_mut(r).and_then(|v| v.pop()) {
            Some(j) => pairs.push((i, j)),
            None => gen_left.push(i),
        }
    }
    let mut gold_left: Vec<usize> = by_sig.into_values().flatten().sorted().collect();
    let mut candidates: Vec<(usize, usize, usize)> = gen_left
        .iter()
        .flat_map(|&i| gold_left.iter().map(move |&j| (i, j)))
        .map(|(i, j)| (distance(&gen[i], &gold[j]), i, j))
        .collect();
    candidates.sort();
    let mut fuzzy = Vec::new();
    for (_, i, j) in candidates {
        if gen_left.contains(&i) && gold_left.contains(&j) {
            gen_left.retain(|&x| x != i);
            gold_left.retain(|&x| x != j);
            fuzzy.push((i, j));
        }
    }
    pairs.extend(fuzzy);
    (pairs, gen_left, gold_left)
}

fn cost(gen: &[Row], gold: &[Row]) -> (usize, usize) {
    let (pairs, gen_left, gold_left) = match_rows(gen, gold);
    let cells: usize = pairs
        .iter()
        .map(|&(i, j)| distance(&gen[i], &gold[j]))
        .sum();
    let wrong = pairs.iter().filter(|&&(i, j)| gen[i] != gold[j]).count();
    (wrong + gen_left.len() + gold_left.len(), cells)
}

/// Largest class whose members are aligned by trying every permutation.
const MAX_PERMUTED: usize = 8;

/// Compares `generated` with `golden` cell by cell, up to row and column
/// order. Places are paired by name. Within a class of places whose names
/// differ between the two nets (same size, at most 8 places), the pairing
/// with the fewest mismatched rows is chosen, first found on ties.
pub fn golden_diff(generated: &Net, golden: &Net) -> GoldenDiff {
    let gold_cols: Vec<PlaceId> = golden.place_ids().collect();
    // for each golden column, the generated place compared with it
    let mut assign: Vec<Option<PlaceId>> = gold_cols
        .iter()
        .map(|&p| generated.place(golden.place_name(p)))
        .collect();
    let mut classes: BTreeMap<String, (Vec<PlaceId>, Vec<usize>)> = BTreeMap::new();
    for p in generated.place_ids() {
        classes
            .entry(class(generated.place_name(p)))
            .or_default()
            .0
            .push(p);
    }
    for (j, &p) in gold_cols.iter().enumerate() {
        classes
            .entry(class(golden.place_name(p)))
            .or_default()
            .1
            .push(j);
    }
    let gold_rows = rows(
        golden,
        &gold_cols.iter().map(|&p| Some(p)).collect::<Vec<_>>(),
    );
    for (gen_ps, gold_js) in classes.values() {
        let same_names =
            gen_ps.len() == gold_js.len() && gold_js.iter().all(|&j| assign[j].is_some());
        if same_names || gen_ps.len() != gold_js.len() || gen_ps.len() > MAX_PERMUTED {
            continue;
        }
        let mut best: Option<((usize, usize), Vec<PlaceId>)> = None;
        for perm in gen_ps.iter().copied().permutations(gen_ps.len()) {
            for (&j, &p) in gold_js.iter().zip(&perm) {
                assign[j] = Some(p);
            }
            let c = cost(&rows(generated, &assign), &gold_rows);
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, perm));
            }
        }
        if let Some((_, perm)) = best {
            for (&j, &p) in gold_js.iter().zip(&perm) {
                assign[j] = Some(p);
            }
        }
    }

    let mut diff = GoldenDiff::default();
    for (j, a) in assign.iter().enumerate() {
        let gname = golden.place_name(gold_cols[j]).to_string();
        match a {
            Some(p) => diff
                .place_map
                .push((generated.place_name(*p).to_string(), gname)),
            None => diff.missing_places.push(gname),
        }
    }
    diff.extra_places = generated
        .place_ids()
        .filter(|p| !assign.contains(&Some(*p)))
        .map(|p| generated.place_name(p).to_string())
        .collect();

    let gen_rows = rows(generated, &assign);
    let (pairs, gen_left, gold_left) = match_rows(&gen_rows, &gold_rows);
    let tname = |net: &Net, i: usize| {
        net.transitions()[TransitionId(i as u32).index()]
            .name()
            .to_string()
    };
    for (i, j) in pairs {
        if gen_rows[i] == gold_rows[j] {
            continue;
        }
        let cells = (0..gold_cols.len())
            .filter(|&k| gen_rows[i][k] != gold_rows[j][k])
            .map(|k| {
                (
                    golden.place_name(gold_cols[k]).to_string(),
                    gen_rows[i][k].to_string(),
                    gold_rows[j][k].to_string(),
                )
            })
            .collect();
        diff.mismatched.push(RowDiff {
            generated: tname(generated, i),
            golden: tname(golden, j),
            cells,
        });
    }
    diff.mismatched
        .sort_by(|a, b| a.generated.cmp(&b.generated));
    diff.extra_rows = gen_left.into_iter().map(|i| tname(generated, i)).collect();
    diff.missing_rows = gold_left.into_iter().map(|j| tname(golden, j)).collect();
    diff
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::Strategy;

    fn tiny(names: [&str; 3], weights: [u32; 2]) -> Net {
        let mut b = Net::builder();
        let ps: Vec<PlaceId> = names.iter().map(|n| b.new_place(n)).collect();
        let t = b.transition("T1");
        b.consume(ps[0], t, 1)
            .produce(t, ps[1], 1)
            .produce(t, ps[2], weights[0]);
        let t = b.transition("T2");
        b.consume(ps[1], t, 1)
            .inhibit(ps[2], t)
            .produce(t, ps[0], weights[1]);
        b.build().unwrap()
    }

    #[test]
    fn net_against_itself() {
        let net = Strategy::Checker.reference().net;
        let d = golden_diff(&net, &net);
        assert!(d.is_empty(), "{d}");
        assert_eq!(d.renamed().count(), 0);
    }

    #[test]
    fn renamed_columns_are_aligned() {
        let a = tiny(["Q1", "Q2", "R0"], [1, 1]);
        let b = tiny(["Q7", "Q9", "R0"], [1, 1]);
        let d = golden_diff(&a, &b);
        assert!(d.is_empty(), "{d}");
        assert_eq!(d.renamed().count(), 2);
    }

    #[test]
    fn differing_cell_is_reported() {
        let a = tiny(["Q1", "Q2", "R0"], [2, 1]);
        let b = tiny(["Q1", "Q2", "R0"], [1, 1]);
        let d = golden_diff(&a, &b);
        assert_eq!(d.mismatched.len(), 1);
        assert_eq!(
            d.mismatched[0].cells,
            vec![("R0".to_string(), "0,2".to_string(), "0,1".to_string())]
        );
    }

    #[test]
    fn extra_column_and_row() {
        let a = tiny(["Q1", "Q2", "R0"], [1, 1]);
        let mut b = Net::builder();
        for n in ["Q1", "Q2"] {
            b.new_place(n);
        }
        let d = golden_diff(&a, &b.build().unwrap());
        assert_eq!(d.extra_places, vec!["R0"]);
        assert_eq!(d.extra_rows, vec!["T1", "T2"]);
    }
}
