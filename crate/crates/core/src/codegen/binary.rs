use serde::{Deserialize, Serialize};

use super::{apply_encoding, encode_arc, register_places, set_interface};
use crate::error::Result;
use crate::machines::FlowGraph;
use crate::petri::{Net, PlaceId};

/// Binary code of a state; halting states get code 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateCode {
    pub state: usize,
    pub code: u64,
    pub bits: u32,
}

fn bit_length(n: u64) -> u32 {
    u64::BITS - n.leading_zeros()
}

/// Codes for every state. Live states take codes counting down from
/// `2^bits - 1`, busiest states first (ties by state order), so the most
/// frequently left states carry the most ones. Returned in state order.
pub fn assign_codes(g: &FlowGraph) -> Vec<StateCode> {
    let live = g.live_states();
    let bits = bit_length(live.len() as u64);
    let mut order = live.clone();
    order.sort_by_key(|&s| (std::cmp::Reverse(g.out_degree(s)), s));
    let top = (1u64 << bits) - 1;
    let mut codes: Vec<StateCode> = (0..g.state_count())
        .map(|state| StateCode {
            state,
            code: 0,
            bits,
        })
        .collect();
    for (rank, s) in order.into_iter().enumerate() {
        codes[s].code = top - rank as u64;
    }
    codes
}

/// Control encoded in `ceil(log2(live + 1))` bit places `Q<n-1>..Q0`.
/// Each transition reads the source code and writes the target code bit
/// by bit: a one stays a one with `1,1`, is cleared with `1,0`; a zero is
/// checked with an inhibitor and set with `-1,1` or left with `-1,0`.
/// Entering a halting state writes the all-zero code.
pub fn binary(g: &FlowGraph) -> Result<Net> {
    let codes = assign_codes(g);
    let bits = codes.first().map_or(0, |c| c.bits);
    let mut b = Net::builder();
    let bit_places: Vec<PlaceId> = (0..bits)
        .rev()
        .map(|i| b.new_place(&format!("Q{i}")))
        .collect();
    let regs = register_places(&mut b, g.registers());
    let bit = |code: u64, place: usize| (code >> (bits as usize - 1 - place)) & 1 == 1;
    for (n, a) in g.arcs().iter().enumerate() {
        let enc = encode_arc(a)?;
        let t = b.transition(&format!("T{}", n + 1));
        apply_encoding(&mut b, t, &regs, &enc);
        let (from, to) = (codes[a.from].code, codes[a.to].code);
        for (i, &p) in bit_places.iter().enumerate() {
            match bit(from, i) {
                true => b.consume(p, t, 1),
                false => b.inhibit(p, t),
            };
            if bit(to, i) {
                b.produce(t, p, 1);
            }
        }
    }
    let start = codes[g.initial()].code;
    for (i, &p) in bit_places.iter().enumerate() {
        if bit(start, i) {
            b.initial_tokens(p, 1);
        }
    }
    set_interface(&mut b, &regs, g.io());
    b.build()
}
