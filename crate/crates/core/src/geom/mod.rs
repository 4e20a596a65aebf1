//! Hypersurface representations and intrinsic distances.

pub mod catalog;
pub mod chart;
pub mod distance;
pub mod jet;
pub mod mesh;
pub mod profile;

pub use catalog::{catalog_listing, Surface};
pub use chart::{Chart, ChartMap, HeightFn, JetMode, ParamDomain, ProfileFn, SurfacePoint};
pub use distance::{distance_field, DistanceField};
pub use mesh::{mesh_load, mesh_shape, MeshPatch};
pub use profile::SampledProfile;
