//! Bounded symmetric convex bodies.

mod body;
mod directions;
mod john;
mod json;
mod lp;
mod polygon;

pub use body::{ConvexBody, SupportBody, DEGENERACY_TOL};
pub use directions::{default_count, DirectionGrid};
pub use john::{john_ellipsoid, JohnResult, JOHN_SLACK_TOL};
pub use json::BodyJson;
pub use lp::{support_lp, LpSolution};
pub use polygon::{SymPolygon, P2};

pub(crate) use body::proportional;
