//! Vector and box primitives plus the slab-method segment/box test shared by
//! the blockage detector and the LiDAR simulator.

mod fit;
mod shapes;
mod slab;
mod vector;

pub use fit::{fit_aabb, fit_obb, jacobi_eigen, ObbFit, JACOBI_TOL};
pub use shapes::{Aabb, Cylinder, Obb, Segment, ORTHONORMAL_TOL};
pub use slab::{slab_clip_aabb, slab_intersect_aabb, slab_intersect_obb, PARALLEL_EPS};
pub use vector::{Mat3, RigidTransform, Vec2, Vec3};
