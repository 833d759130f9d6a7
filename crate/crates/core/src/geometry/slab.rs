//! Segment/box intersection by slab clipping.
//!
//! A box is three pairs of parallel planes. The segment parameter range
//! `[0, length]` is clipped against each pair in turn; whatever survives is
//! the part of the segment inside the box.

use super::shapes::{Aabb, Obb, Segment};

/// Direction components smaller than this are treated as parallel to the
/// slab pair instead of being divided by.
pub const PARALLEL_EPS: f64 = 1e-12;

/// Surviving parameter interval `[t_enter, t_exit]` of `seg` inside `aabb`.
///
/// Grazing contact (`t_enter == t_exit`) is reported as an intersection.
pub fn slab_clip_aabb(seg: &Segment, aabb: &Aabb) -> Option<(f64, f64)> {
    let o = seg.origin();
    let d = seg.direction();
    let mut t_min = 0.0f64;
    let mut t_max = seg.length();

    for axis in 0..3 {
        let (oa, da) = (o[axis], d[axis]);
        let (lo, hi) = (aabb.min[axis], aabb.max[axis]);
        if da.abs() < PARALLEL_EPS {
            if oa < lo || oa > hi {
                return None;
            }
            continue;
        }
        let inv = 1.0 / da;
        let mut t1 = (lo - oa) * inv;
        let mut t2 = (hi - oa) * inv;
        if t1 > t2 {
            std::mem::swap(&mut t1, &mut t2);
        }
        t_min = t_min.max(t1);
        t_max = t_max.min(t2);
        if t_min > t_max {
            return None;
        }
    }
    Some((t_min, t_max))
}

/// Distance from the segment origin to where it first enters `aabb`.
/// Zero when the origin is already inside.
pub fn slab_intersect_aabb(seg: &Segment, aabb: &Aabb) -> Option<f64> {
    slab_clip_aabb(seg, aabb).map(|(t, _)| t)
}

/// Moves both endpoints into the box's object frame and clips there. The
/// returned distance is valid in world space because the transform is rigid.
pub fn slab_intersect_obb(seg: &Segment, obb: &Obb) -> Option<f64> {
    let local = Segment::new(obb.to_object(seg.origin()), obb.to_object(seg.target())).ok()?;
    slab_intersect_aabb(&local, &obb.object_extents())
}
