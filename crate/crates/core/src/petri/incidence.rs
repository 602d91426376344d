//! Incidence-table text format.
//!
//! The first record is a header whose first field is blank and whose other
//! fields name the places. Every following record starts with a transition
//! name and carries one cell per place: `a,b` with `a = weight(p, t)` and
//! `b = weight(t, p)`, or an empty field for `0,0`. Fields are tab-separated
//! by default; with commas, cells are quoted.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Marking, Net, PlaceId, TransitionId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Delimiter {
    #[default]
    Tab,
    Comma,
}

impl Delimiter {
    fn byte(self) -> u8 {
        match self {
            Delimiter::Tab => b'\t',
            Delimiter::Comma => b',',
        }
    }

    /// Tab if the header line contains one, comma otherwise.
    pub fn detect(text: &str) -> Delimiter {
        match text.lines().next() {
            Some(line) if line.contains('\t') => Delimiter::Tab,
            Some(line) if line.contains(',') => Delimiter::Comma,
            _ => Delimiter::Tab,
        }
    }
}

/// One `(weight(p,t), weight(t,p))` pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IncidenceCell {
    pub pre: i64,
    pub post: u32,
}

impl IncidenceCell {
    pub fn is_empty(&self) -> bool {
        self.pre == 0 && self.post == 0
    }

    pub fn of(net: &Net, p: PlaceId, t: TransitionId) -> Self {
        IncidenceCell {
            pre: net.weight_in(p, t),
            post: net.weight_out(t, p),
        }
    }
}

impl fmt::Display for IncidenceCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            Ok(())
        } else {
            write!(f, "{},{}", self.pre, self.post)
        }
    }
}

impl FromStr for IncidenceCell {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(IncidenceCell::default());
        }
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("cell `{s}` is not of the form `a,b`"))?;
        let digits = |x: &str| !x.is_empty() && x.bytes().all(|c| c.is_ascii_digit());
        let a_digits = a.strip_prefix('-').unwrap_or(a);
        if !digits(a_digits) || !digits(b) {
            return Err(format!("cell `{s}` is not of the form `a,b`"));
        }
        let pre: i64 = a
            .parse()
            .map_err(|_| format!("weight `{a}` out of range"))?;
        let post: u32 = b
            .parse()
            .map_err(|_| format!("weight `{b}` out of range"))?;
        if pre < -1 {
            return Err(format!("input weight {pre} below -1"));
        }
        Ok(IncidenceCell { pre, post })
    }
}

fn is_register_place(name: &str) -> bool {
    name.starts_with('R')
}

/// Column order used on export: non-register places, then register places,
/// each in declaration order.
pub(crate) fn export_order(net: &Net) -> Vec<PlaceId> {
    let (regs, others): (Vec<PlaceId>, Vec<PlaceId>) = net
        .place_ids()
        .partition(|&p| is_register_place(net.place_name(p)));
    others.into_iter().chain(regs).collect()
}

pub fn export_incidence(net: &Net, delimiter: Delimiter) -> String {
    let order = export_order(net);
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter.byte())
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    let header = std::iter::once("").chain(order.iter().map(|&p| net.place_name(p)));
    w.write_record(header).expect("in-memory write");
    for t in net.transition_ids() {
        let name = net.transitions()[t.index()].name().to_string();
        let cells = order
            .iter()
            .map(|&p| IncidenceCell::of(net, p, t).to_string());
        w.write_record(std::iter::once(name).chain(cells))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Parses an incidence table. The computation interface (initial marking,
/// inputs, output) is left empty; see [`NetMetadata::apply`].
pub fn import_incidence(text: &str, delimiter: Delimiter) -> Result<Net> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter.byte())
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        None => return Ok(Net::empty()),
        Some(r) => r.map_err(|e| Error::parse(1, 1, e.to_string()))?,
    };
    let mut b = Net::builder();
    let places: Vec<PlaceId> = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(col, name)| {
            let name = name.trim();
            if name.is_empty() {
                b.new_place("");
                return Err(Error::parse(1, col + 1, "empty place name"));
            }
            Ok(b.new_place(name))
        })
        .collect::<Result<_>>()?;
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, 1, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != places.len() + 1 {
            return Err(Error::parse(
                line,
                record.len(),
                format!(
                    "expected {} fields, found {}",
                    places.len() + 1,
                    record.len()
                ),
            ));
        }
        let name = record[0].trim();
        if name.is_empty() {
            return Err(Error::parse(line, 1, "empty transition name"));
        }
        let t = b.transition(name);
        for (col, (&p, raw)) in places.iter().zip(record.iter().skip(1)).enumerate() {
            let cell: IncidenceCell = raw
                .parse()
                .map_err(|msg: String| Error::parse(line, col + 2, msg))?;
            b.set_weight_in(p, t, cell.pre).produce(t, p, cell.post);
        }
    }
    b.build()
}

/// Sidecar describing a net's computation interface.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetMetadata {
    #[serde(default)]
    pub initial_marking: BTreeMap<String, u64>,
    #[serde(default)]
    pub input_places: Vec<String>,
    #[serde(default)]
    pub output_place: Option<String>,
}

impl NetMetadata {
    pub fn of(net: &Net) -> Self {
        NetMetadata {
            initial_marking: net
                .initial_marking()
                .support()
                .map(|(p, c)| (net.place_name(p).to_string(), c))
                .collect(),
            input_places: net
                .input_places()
                .iter()
                .map(|&p| net.place_name(p).to_string())
                .collect(),
            output_place: net.output_place().map(|p| net.place_name(p).to_string()),
        }
    }

    pub fn apply(&self, net: Net) -> Result<Net> {
        let lookup = |name: &str| {
            net.place(name)
                .ok_or_else(|| Error::Metadata(format!("unknown place `{name}`")))
        };
        let mut m = Marking::zeros(net.place_count());
        for (name, &count) in &self.initial_marking {
            m.add(lookup(name)?, count);
        }
        let inputs = self
            .input_places
            .iter()
            .map(|n| lookup(n))
            .collect::<Result<Vec<_>>>()?;
        let output = self.output_place.as_deref().map(lookup).transpose()?;
        net.with_interface(m, inputs, output)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Metadata(e.to_string()))
    }
}

/// Self-contained JSON form of a net.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDocument {
    pub places: Vec<String>,
    pub transitions: Vec<TransitionDocument>,
    #[serde(flatten)]
    pub metadata: NetMetadata,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionDocument {
    pub name: String,
    /// `weight(p, t)` by place name; `-1` marks an inhibitor.
    pub inputs: BTreeMap<String, i64>,
    pub outputs: BTreeMap<String, u32>,
}

impl NetDocument {
    pub fn of(net: &Net) -> Self {
        let transitions = net
            .transitions()
            .iter()
            .map(|t| TransitionDocument {
                name: t.name().to_string(),
                inputs: t
                    .inputs()
                    .iter()
                    .map(|&(p, a)| (net.place_name(p).to_string(), a.weight()))
                    .collect(),
                outputs: t
                    .outputs()
                    .iter()
                    .map(|&(p, w)| (net.place_name(p).to_string(), w))
                    .collect(),
            })
            .collect();
        NetDocument {
            places: net.places().to_vec(),
            transitions,
            metadata: NetMetadata::of(net),
        }
    }

    pub fn into_net(self) -> Result<Net> {
        let mut b = Net::builder();
        for p in &self.places {
            b.new_place(p);
        }
        for doc in &self.transitions {
            let t = b.transition(&doc.name);
            for (name, &w) in &doc.inputs {
                if !b.has_place(name) {
                    return Err(Error::UnknownPlace(name.clone()));
                }
                let p = b.place(name);
                b.set_weight_in(p, t, w);
            }
            for (name, &w) in &doc.outputs {
                if !b.has_place(name) {
                    return Err(Error::UnknownPlace(name.clone()));
                }
                let p = b.place(name);
                b.produce(t, p, w);
            }
        }
        self.metadata.apply(b.build()?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("net serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Metadata(e.to_string()))
    }
}

/// The metadata file stored next to a table: same stem, `.json`.
pub fn sidecar_path(table: &Path) -> PathBuf {
    table.with_extension("json")
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Reads a net from a table file, or from a self-contained `.json`
/// document. A table's sidecar is applied when it exists.
pub fn load_net(path: &Path) -> Result<Net> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        return NetDocument::from_json(&text)?.into_net();
    }
    let net = import_incidence(&text, Delimiter::detect(&text))?;
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(net);
    }
    let meta = fs::read_to_string(&side).map_err(|e| io_error(&side, e))?;
    NetMetadata::from_json(&meta)?.apply(net)
}

/// Writes the table and its sidecar.
pub fn save_net(net: &Net, path: &Path, delimiter: Delimiter) -> Result<()> {
    fs::write(path, export_incidence(net, delimiter)).map_err(|e| io_error(path, e))?;
    let side = sidecar_path(path);
    fs::write(&side, NetMetadata::of(net).to_json() + "\n").map_err(|e| io_error(&side, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Net {
        let mut b = Net::builder();
        let r1 = b.place("R1");
        let q1 = b.place("Q1");
        let q3 = b.place("Q3");
        let t = b.transition("T1");
        b.consume(q1, t, 1).produce(t, q3, 1).consume(r1, t, 1);
        let t = b.transition("T2");
        b.consume(q1, t, 1).inhibit(r1, t).produce(t, r1, 1);
        b.initial_tokens(q1, 1).input_place(r1).output_place(r1);
        b.build().unwrap()
    }

    #[test]
    fn cell_parsing() {
        assert_eq!("1,0".parse(), Ok(IncidenceCell { pre: 1, post: 0 }));
        assert_eq!("-1,1".parse(), Ok(IncidenceCell { pre: -1, post: 1 }));
        assert_eq!(" 2,0 ".parse(), Ok(IncidenceCell { pre: 2, post: 0 }));
        assert_eq!("".parse(), Ok(IncidenceCell::default()));
        for bad in ["1", "a,b", "-2,0", "1,-1", "1,,0", "+1,0", "--1,0", ",1"] {
            assert!(bad.parse::<IncidenceCell>().is_err(), "{bad}");
        }
    }

    #[test]
    fn export_puts_state_places_first() {
        let text = export_incidence(&sample(), Delimiter::Tab);
        assert_eq!(text, "\tQ1\tQ3\tR1\nT1\t1,0\t0,1\t1,0\nT2\t1,0\t\t-1,1\n");
    }

    #[test]
    fn csv_export_quotes_cells() {
        let text = export_incidence(&sample(), Delimiter::Comma);
        assert_eq!(text.lines().nth(1).unwrap(), "T1,\"1,0\",\"0,1\",\"1,0\"");
        let back = import_incidence(&text, Delimiter::Comma).unwrap();
        assert_eq!(
            export_incidence(&back, Delimiter::Tab),
            export_incidence(&sample(), Delimiter::Tab)
        );
    }

    #[test]
    fn empty_net_is_header_only() {
        let text = export_incidence(&Net::empty(), Delimiter::Tab);
        assert_eq!(text.lines().count(), 1);
        let back = import_incidence(&text, Delimiter::Tab).unwrap();
        assert_eq!(back.metrics(), crate::petri::Metrics::default());
    }

    #[test]
    fn single_cell_table() {
        let net = import_incidence("\tP\nT\t1,0\n", Delimiter::Tab).unwrap();
        assert_eq!(net.place_count(), 1);
        assert_eq!(net.transition_count(), 1);
        assert_eq!(net.weight_in(PlaceId(0), TransitionId(0)), 1);
        assert_eq!(net.weight_out(TransitionId(0), PlaceId(0)), 0);
    }

    #[test]
    fn malformed_cell_reports_location() {
        let err = import_incidence("\tP\tQ\nT1\t1,0\t\nT2\t\tx\n", Delimiter::Tab).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        assert_eq!(
            import_incidence("\tP\tP\n", Delimiter::Tab).unwrap_err(),
            Error::DuplicateName("P".into())
        );
        assert_eq!(
            import_incidence("\tP\nT\t\nT\t\n", Delimiter::Tab).unwrap_err(),
            Error::DuplicateName("T".into())
        );
    }

    #[test]
    fn ragged_row_rejected() {
        assert!(matches!(
            import_incidence("\tP\tQ\nT\t1,0\n", Delimiter::Tab),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn metadata_round_trip() {
        let net = sample();
        let meta = NetMetadata::of(&net);
        assert_eq!(meta.initial_marking.get("Q1"), Some(&1));
        let parsed = NetMetadata::from_json(&meta.to_json()).unwrap();
        assert_eq!(parsed, meta);
        let bare =
            import_incidence(&export_incidence(&net, Delimiter::Tab), Delimiter::Tab).unwrap();
        let full = parsed.apply(bare).unwrap();
        assert_eq!(
            full.compute(&[0], 10).unwrap(),
            net.compute(&[0], 10).unwrap()
        );
        let bad = NetMetadata {
            output_place: Some("nope".into()),
            ..NetMetadata::default()
        };
        assert!(matches!(bad.apply(net), Err(Error::Metadata(_))));
    }

    #[test]
    fn document_round_trip() {
        let net = sample();
        let doc = NetDocument::of(&net);
        let back = NetDocument::from_json(&doc.to_json())
            .unwrap()
            .into_net()
            .unwrap();
        assert_eq!(NetDocument::of(&back), doc);
    }

    #[test]
    fn detects_delimiter() {
        assert_eq!(Delimiter::detect("\tA\tB\n"), Delimiter::Tab);
        assert_eq!(Delimiter::detect(",A,B\n"), Delimiter::Comma);
    }
}
