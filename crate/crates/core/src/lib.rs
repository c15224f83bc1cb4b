//! Numerical geometry of the density manifold over a finite sample space:
//! regular Riemannian metrics (Fisher–Rao, Otto), their α-connections,
//! torsion, curvature, duality and geodesics.
//!
//! Densities live on a [`Space`]: either a periodic grid or a weighted graph
//! with reference volumes. Tangent vectors are signed measures of zero total
//! mass, stored as densities with respect to the reference volume.

pub mod connections;
pub mod density;
pub mod discretization;
pub mod error;
pub mod geodesics;
pub mod metric;
pub mod random;

pub use connections::{ConnectionSpec, ConnectionVariant, OttoClosedForms};
pub use density::{Density, MeanZeroField, TangentVector};
pub use discretization::{EdgeField, LaplacianStyle, MuLaplacian, ScalarField, Space, SpaceKind};
pub use error::{GeometryError, Result};
pub use geodesics::{compare_geodesics, integrate_geodesic, GeodesicComparison, GeodesicState};
pub use metric::{FisherRao, LocalMetric, Otto, RegularMetric};
pub use random::SeededRng;
