//! Finite-scale model of a glued space of hyperbolic-hexagon blocks with
//! colored coverings, a certified distance oracle, and a verification
//! harness for the quantitative covering bounds.
//!
//! The space is assembled from blocks `H0 x R`, where `H0` is the surface
//! tiled by right-angled equilateral hexagons of side 1 (the orbit of one
//! hexagon under reflections in alternating sides), glued along boundary
//! planes with the two factors swapped. On top of it the crate builds the
//! staged coverings: two-colored tree coverings per factor, four-colored
//! block coverings, the merged cross-block families, and the final
//! eight-colored covering with its disjointness and boundedness guarantees.

pub mod hex;
pub(crate) mod util;
pub mod theta;
pub mod cover;
pub mod model;
pub mod oracle;
pub mod covering;
pub mod coloring;
pub mod verify;

pub use hex::{HexError, HexagonGeometry, HIsometry, HPoint};
pub use theta::{BoundaryLineRef, HexAddress, RealFactorPoint, ThetaGeometry, ThetaPoint};
pub use cover::{CoverSpec, TreeClassId};
pub use model::{BlockPath, Model, ModelConfig, ModelPoint, PlaneRef};
pub use oracle::{ConvexSetDescriptor, DistanceCertificate};
pub use covering::{BlockCoverSpec, BlockMemberId, WClassId};
pub use coloring::{ExtendedComponent, FinalClassId};
pub use verify::{SampleConfig, VerificationReport};
