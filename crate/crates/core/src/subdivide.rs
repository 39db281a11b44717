//! Extreme points with a degree-2 vertex, obtained by subdividing a
//! weight-1 edge of an extreme point on one vertex fewer.

use num_traits::One;
use rayon::prelude::*;
use thiserror::Error;

use crate::canon::{canonical_form, DedupStore};
use crate::graph::Graph;
use crate::polytope::{is_extreme, WeightedPoint};
use crate::rational::int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubdivideError {
    #[error("subdividing edge {edge:?} of `{parent}` does not give an extreme point")]
    NotExtreme { parent: String, edge: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubdivisionCandidate {
    pub parent: WeightedPoint,
    pub edge: (usize, usize),
    pub child: WeightedPoint,
}

impl SubdivisionCandidate {
    /// Replaces the 1-edge `{u, v}` by the path `u, w, v` with `w = n`.
    pub fn new(parent: &WeightedPoint, edge: (usize, usize)) -> Self {
        let (u, v) = edge;
        assert!(
            parent.weight(u, v).is_some_and(|w| w.is_one()),
            "only weight-1 edges are subdivided"
        );
        let w = parent.n();
        let mut pairs: Vec<((usize, usize), _)> = parent
            .edges()
            .filter(|&(e, _)| e != edge)
            .map(|(e, x)| (e, x.clone()))
            .collect();
        pairs.push(((u, w), int(1)));
        pairs.push(((v, w), int(1)));
        pairs.sort_by_key(|&(e, _)| e);
        let graph = Graph::new(w + 1, pairs.iter().map(|&(e, _)| e)).expect("subdivision keeps the graph simple");
        let child = WeightedPoint::new(graph, pairs.into_iter().map(|(_, x)| x).collect())
            .expect("subdivision of a subtour point is a subtour point");
        Self {
            parent: parent.clone(),
            edge,
            child,
        }
    }
}

/// The store for `n = 3`: the triangle tour.
pub fn seed_base() -> DedupStore {
    let mut store = DedupStore::new();
    store.insert(&WeightedPoint::tour(&[0, 1, 2]));
    store
}

/// One child per weight-1 edge of `p`, each verified extreme.
pub fn subdivide_one_edges(p: &WeightedPoint) -> Result<Vec<WeightedPoint>, SubdivideError> {
    p.edges()
        .filter(|(_, x)| x.is_one())
        .map(|(e, _)| {
            let cand = SubdivisionCandidate::new(p, e);
            if is_extreme(cand.child.graph(), &cand.child).expect("child lives on its own graph") {
                Ok(cand.child)
            } else {
                Err(SubdivideError::NotExtreme {
                    parent: p.graph().to_string(),
                    edge: e,
                })
            }
        })
        .collect()
}

/// All subdivisions of points of `prev`, deduplicated.
pub fn step3_closure(prev: &DedupStore) -> Result<DedupStore, SubdivideError> {
    let parents: Vec<&WeightedPoint> = prev.points().collect();
    let per_parent = parents
        .par_iter()
        .map(|p| {
            let children = subdivide_one_edges(p)?;
            Ok(children.iter().map(canonical_form).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, SubdivideError>>()?;
    let mut out = DedupStore::new();
    for (key, rep) in per_parent.into_iter().flatten() {
        out.insert_canonical(key, rep);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::prism_classic;
    use crate::rational::frac;

    #[test]
    fn seed_chain_gives_cycles() {
        let mut store = seed_base();
        assert_eq!(store.len(), 1);
        for n in 4..=6 {
            store = step3_closure(&store).unwrap();
            assert_eq!(store.len(), 1, "n={n}");
            let p = store.points().next().unwrap();
            assert!(p.graph().is_cycle() && p.n() == n);
        }
    }

    #[test]
    fn prism_children_collapse() {
        let p = prism_classic();
        let kids = subdivide_one_edges(&p).unwrap();
        assert_eq!(kids.len(), 3);
        let mut store = DedupStore::new();
        for k in &kids {
            assert_eq!(k.n(), 7);
            assert_eq!(k.graph().degree(6), 2);
            assert!(k.is_half_integral());
            store.insert(k);
        }
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn fractional_point_has_no_children() {
        let g = crate::fixtures::k33();
        let p = WeightedPoint::new(g.clone(), vec![frac(2, 3); g.num_edges()]).unwrap();
        assert!(subdivide_one_edges(&p).unwrap().is_empty());
    }
}
