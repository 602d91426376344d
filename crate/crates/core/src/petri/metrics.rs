use std::fmt;

use serde::{Deserialize, Serialize};

use super::{InputArc, Net};

/// Descriptional complexity of a net: places, transitions, inhibitor arcs
/// and the maximal transition degree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Metrics {
    pub p: usize,
    pub t: usize,
    pub h: usize,
    pub d: usize,
}

impl Metrics {
    pub const fn new(p: usize, t: usize, h: usize, d: usize) -> Self {
        Metrics { p, t, h, d }
    }

    pub fn of(net: &Net) -> Self {
        let h = net
            .transitions()
            .iter()
            .flat_map(|t| t.inputs())
            .filter(|(_, arc)| *arc == InputArc::Inhibit)
            .count();
        let d = net
            .transitions()
            .iter()
            .map(|t| t.degree())
            .max()
            .unwrap_or(0);
        Metrics {
            p: net.place_count(),
            t: net.transition_count(),
            h,
            d,
        }
    }

    pub fn as_tuple(&self) -> (usize, usize, usize, usize) {
        (self.p, self.t, self.h, self.d)
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} t={} h={} d={}", self.p, self.t, self.h, self.d)
    }
}

impl From<(usize, usize, usize, usize)> for Metrics {
    fn from((p, t, h, d): (usize, usize, usize, usize)) -> Self {
        Metrics { p, t, h, d }
    }
}
