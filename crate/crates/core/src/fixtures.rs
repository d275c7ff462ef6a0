//! The three example graphs shipped with the crate.
//!
//! `g2` and `g3` join two vertices by two and three parallel lines, all
//! oriented into vertex `1`. `g4` is the four-vertex graph whose vertex
//! constraints read `n1 + n2 = Na`, `n3 - n1 - n5 = Nb`, `-n3 - n4 = Nc`.

use crate::graph::MatsubaraGraph;

pub const G2_JSON: &str = include_str!("../fixtures/g2.json");
pub const G3_JSON: &str = include_str!("../fixtures/g3.json");
pub const G4_JSON: &str = include_str!("../fixtures/g4.json");

pub fn g2() -> MatsubaraGraph {
    MatsubaraGraph::from_json(G2_JSON).expect("g2 fixture is valid")
}

pub fn g3() -> MatsubaraGraph {
    MatsubaraGraph::from_json(G3_JSON).expect("g3 fixture is valid")
}

pub fn g4() -> MatsubaraGraph {
    MatsubaraGraph::from_json(G4_JSON).expect("g4 fixture is valid")
}

/// `(name, graph)` for every fixture.
pub fn all() -> Vec<(&'static str, MatsubaraGraph)> {
    vec![("g2", g2()), ("g3", g3()), ("g4", g4())]
}
