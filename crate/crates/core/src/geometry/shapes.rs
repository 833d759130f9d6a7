use serde::{Deserialize, Serialize};

use super::vector::{Mat3, Vec2, Vec3};
use crate::error::{Error, Result};

/// Tolerance on `MᵀM − I` accepted for an OBB rotation.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// Finite segment from `origin` (the transmitter) to `target`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    origin: Vec3,
    target: Vec3,
    dir: Vec3,
    len: f64,
}

impl Segment {
    pub fn new(origin: Vec3, target: Vec3) -> Result<Self> {
        if !origin.is_finite() || !target.is_finite() {
            return Err(Error::invalid("segment endpoints must be finite"));
        }
        let d = target - origin;
        let len = d.norm();
        if len <= 0.0 {
            return Err(Error::invalid("segment has zero length"));
        }
        Ok(Segment {
            origin,
            target,
            dir: d * (1.0 / len),
            len,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn target(&self) -> Vec3 {
        self.target
    }

    /// Unit direction.
    pub fn direction(&self) -> Vec3 {
        self.dir
    }

    pub fn length(&self) -> f64 {
        self.len
    }

    pub fn point_at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::invalid("box corners must be finite"));
        }
        if min.x > max.x || min.y > max.y || min.z > max.z {
            return Err(Error::invalid(format!(
                "box min {min:?} exceeds max {max:?}"
            )));
        }
        Ok(Aabb { min, max })
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn half_extents(&self) -> Vec3 {
        (self.max - self.min) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let e = self.max - self.min;
        e.x * e.y * e.z
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Distance from `p` to the box surface (zero on the surface, positive
    /// on both sides).
    pub fn distance_to_boundary(&self, p: Vec3) -> f64 {
        if self.contains(p) {
            let lo = p - self.min;
            let hi = self.max - p;
            lo.x.min(lo.y).min(lo.z).min(hi.x).min(hi.y).min(hi.z)
        } else {
            let d = (self.min - p).max(p - self.max).max(Vec3::ZERO);
            d.norm()
        }
    }

    pub fn translated(&self, by: Vec3) -> Aabb {
        Aabb {
            min: self.min + by,
            max: self.max + by,
        }
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }
}

/// Oriented box: a world point `p` lies inside when
/// `rotationᵀ · (p − center)` lies in `[min_obj, max_obj]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub min_obj: Vec3,
    pub max_obj: Vec3,
    pub rotation: Mat3,
    pub center: Vec3,
}

impl Obb {
    pub fn new(min_obj: Vec3, max_obj: Vec3, rotation: Mat3, center: Vec3) -> Result<Self> {
        let extents = Aabb::new(min_obj, max_obj)?;
        if !rotation.is_orthonormal(ORTHONORMAL_TOL) {
            return Err(Error::invalid(format!(
                "OBB rotation is not orthonormal (error {:.3e})",
                rotation.orthonormality_error()
            )));
        }
        if !center.is_finite() {
            return Err(Error::invalid("OBB center must be finite"));
        }
        Ok(Obb {
            min_obj: extents.min,
            max_obj: extents.max,
            rotation,
            center,
        })
    }

    /// Identity-rotation box with the object frame at the world origin, so
    /// object coordinates coincide bit-for-bit with world coordinates.
    pub fn from_aabb(aabb: &Aabb) -> Obb {
        Obb {
            min_obj: aabb.min,
            max_obj: aabb.max,
            rotation: Mat3::IDENTITY,
            center: Vec3::ZERO,
        }
    }

    pub fn object_extents(&self) -> Aabb {
        Aabb {
            min: self.min_obj,
            max: self.max_obj,
        }
    }

    pub fn to_object(&self, p: Vec3) -> Vec3 {
        self.rotation.tmul_vec(p - self.center)
    }

    pub fn to_world(&self, q: Vec3) -> Vec3 {
        self.rotation.mul_vec(q) + self.center
    }

    /// Geometric center of the box in world space.
    pub fn box_center(&self) -> Vec3 {
        self.to_world((self.min_obj + self.max_obj) * 0.5)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.object_extents().contains(self.to_object(p))
    }

    pub fn volume(&self) -> f64 {
        self.object_extents().volume()
    }

    pub fn corners(&self) -> [Vec3; 8] {
        self.object_extents().corners().map(|c| self.to_world(c))
    }
}

/// Upright solid cylinder standing on the ground plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cylinder {
    pub base: Vec2,
    pub radius: f64,
    pub height: f64,
}

impl Cylinder {
    pub fn contains(&self, p: Vec3) -> bool {
        p.z >= 0.0 && p.z <= self.height && p.xy().distance(self.base) <= self.radius
    }

    /// Parameter interval `[t0, t1]` along `origin + t·dir` spent inside the
    /// solid, if any. `dir` need not be unit length.
    pub fn ray_interval(&self, origin: Vec3, dir: Vec3) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);

        // Radial part: |o_xy + t d_xy − base|² ≤ r²
        let ox = origin.x - self.base.x;
        let oy = origin.y - self.base.y;
        let a = dir.x * dir.x + dir.y * dir.y;
        let c = ox * ox + oy * oy - self.radius * self.radius;
        if a <= 1e-24 {
            if c > 0.0 {
                return None;
            }
        } else {
            let b = ox * dir.x + oy * dir.y;
            let disc = b * b - a * c;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            lo = (-b - sq) / a;
            hi = (-b + sq) / a;
        }

        // Height clamp: 0 ≤ o_z + t d_z ≤ h
        if dir.z.abs() <= 1e-24 {
            if origin.z < 0.0 || origin.z > self.height {
                return None;
            }
        } else {
            let t0 = -origin.z / dir.z;
            let t1 = (self.height - origin.z) / dir.z;
            let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            lo = lo.max(t0);
            hi = hi.min(t1);
        }

        (lo <= hi).then_some((lo, hi))
    }

    /// Entry distance along a finite segment, clamped to `[0, length]`.
    pub fn intersect_segment(&self, seg: &Segment) -> Option<f64> {
        let (t0, t1) = self.ray_interval(seg.origin(), seg.direction())?;
        let entry = t0.max(0.0);
        (entry <= t1.min(seg.length())).then_some(entry)
    }
}
