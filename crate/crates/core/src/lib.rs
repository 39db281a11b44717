//! Exact enumeration of the extreme points of the subtour elimination
//! polytope of the symmetric TSP, and certified computation of their
//! integrality gaps.

pub mod canon;
pub mod exact;
pub mod fixtures;
pub mod gap;
pub mod graph;
pub mod graphgen;
pub mod io;
pub mod lp;
pub mod pipeline;
pub mod polytope;
pub mod rational;
pub mod subdivide;
pub mod vertexenum;

pub use graph::Graph;
pub use graphgen::Mode;
pub use polytope::WeightedPoint;
pub use rational::Rational;
