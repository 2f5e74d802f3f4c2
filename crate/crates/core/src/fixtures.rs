//! Small named graphs used throughout the docs, tests and CLI examples.

use crate::format::{parse_admg, parse_graph, GraphDocument};
use crate::graph::{Admg, Cadmg};

pub const IV: &str = include_str!("../../../fixtures/iv.admg");
pub const IV_HIDDEN: &str = include_str!("../../../fixtures/iv_hidden.admg");
pub const GADGET: &str = include_str!("../../../fixtures/gadget.admg");
pub const VERMA: &str = include_str!("../../../fixtures/verma.admg");
pub const PROJECTION: &str = include_str!("../../../fixtures/projection.admg");
pub const ARID: &str = include_str!("../../../fixtures/arid.admg");
pub const STUBBORN: &str = include_str!("../../../fixtures/stubborn.admg");
pub const DIRECTED_PAIR: &str = include_str!("../../../fixtures/directed_pair.admg");
pub const BIDIRECTED_PAIR: &str = include_str!("../../../fixtures/bidirected_pair.admg");

fn admg(text: &str) -> Admg {
    parse_admg(text).expect("bundled fixture parses")
}

fn document(text: &str) -> GraphDocument {
    parse_graph(text).expect("bundled fixture parses")
}

/// `a -> b -> c` with `b <-> c`.
pub fn iv() -> Admg {
    admg(IV)
}

/// The instrumental model with its confounder `h` flagged latent.
pub fn iv_hidden() -> GraphDocument {
    document(IV_HIDDEN)
}

pub fn gadget() -> Admg {
    admg(GADGET)
}

pub fn verma() -> Admg {
    admg(VERMA)
}

/// The Verma graph after fixing `a` and `c`.
pub fn verma_fixed_ac() -> Cadmg {
    document("vertices: a b c d\nfixed: a c\na -> b\nc -> d\nb <-> d\n").graph
}

pub fn projection() -> GraphDocument {
    document(PROJECTION)
}

pub fn arid() -> Admg {
    admg(ARID)
}

pub fn stubborn() -> Admg {
    admg(STUBBORN)
}

pub fn directed_pair() -> Admg {
    admg(DIRECTED_PAIR)
}

pub fn bidirected_pair() -> Admg {
    admg(BIDIRECTED_PAIR)
}
