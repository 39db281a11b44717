//! Small named instances used in tests and examples.

use crate::graph::Graph;
use crate::polytope::WeightedPoint;
use crate::rational::{frac, int};

/// Two triangles `0,1,2` and `3,4,5` joined by the matching `i – i+3`.
pub fn prism() -> Graph {
    Graph::new(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)])
        .expect("prism is simple")
}

/// Weight 1 on the matching edges and 1/2 on the triangle edges.
pub fn prism_classic() -> WeightedPoint {
    let g = prism();
    let w = g
        .edges()
        .iter()
        .map(|&(u, v)| if v == u + 3 { int(1) } else { frac(1, 2) })
        .collect();
    WeightedPoint::new(g, w).expect("classic prism point is feasible")
}

pub fn k33() -> Graph {
    Graph::new(6, (0..3).flat_map(|u| (3..6).map(move |v| (u, v)))).expect("K_{3,3} is simple")
}
