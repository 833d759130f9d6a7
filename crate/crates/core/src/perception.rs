//! Human detection in registered point clouds: background subtraction
//! against the static map, ground-plane clustering with a size-driven
//! split/merge pass, and box fitting.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fit_aabb, fit_obb, Aabb, Obb, Vec2, Vec3};
use crate::lidar::PointCloudFrame;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    /// A live point within this distance of a map point is background.
    pub background_radius: f64,
    /// Single-linkage distance on the ground plane.
    pub cluster_tolerance: f64,
    pub min_cluster_points: usize,
    /// Accepted range for the highest point of a cluster above the floor.
    pub min_height: f64,
    pub max_height: f64,
    /// Largest accepted ground-plane diameter of one person.
    pub max_footprint: f64,
    /// Clusters wider than this are tried as two people.
    pub split_footprint: f64,
    /// Fragments are joined while their union is at most this wide.
    pub merge_footprint: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            background_radius: 0.1,
            cluster_tolerance: 0.25,
            min_cluster_points: 10,
            min_height: 0.8,
            max_height: 2.2,
            max_footprint: 1.2,
            split_footprint: 0.8,
            merge_footprint: 0.7,
        }
    }
}

impl PerceptionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.background_radius > 0.0) || !(self.cluster_tolerance > 0.0) {
            return Err(Error::invalid("background radius and cluster tolerance must be > 0"));
        }
        if !(self.min_height <= self.max_height) {
            return Err(Error::invalid("min_height must not exceed max_height"));
        }
        if !(self.split_footprint > 0.0) || !(self.max_footprint > 0.0) {
            return Err(Error::invalid("footprint limits must be > 0"));
        }
        if !(self.merge_footprint < self.split_footprint) {
            return Err(Error::invalid("merge_footprint must be below split_footprint"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    pub centroid: Vec3,
    pub aabb: Aabb,
    pub obb: Obb,
    pub n_points: usize,
}

impl Detection {
    pub fn from_points(points: &[Vec3]) -> Result<Detection> {
        let n = points.len();
        if n == 0 {
            return Err(Error::EmptyPointSet);
        }
        let centroid = points.iter().fold(Vec3::ZERO, |a, p| a + *p) * (1.0 / n as f64);
        Ok(Detection {
            centroid,
            aabb: fit_aabb(points)?,
            obb: fit_obb(points)?.obb,
            n_points: n,
        })
    }
}

/// Static map bucketed into cubic cells of side `radius`, so every map
/// point within `radius` of a query lies in the 27 surrounding cells.
#[derive(Clone, Debug)]
pub struct BackgroundGrid {
    radius: f64,
    inv_radius: f64,
    origin: Vec3,
    dims: [usize; 3],
    offsets: Vec<u32>,
    points: Vec<Vec3>,
}

impl BackgroundGrid {
    pub fn new(global_map: &PointCloudFrame, radius: f64) -> Result<Self> {
        if global_map.is_empty() {
            return Err(Error::invalid("global map is empty"));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid("background radius must be > 0"));
        }
        let bounds = fit_aabb(&global_map.points)?;
        let origin = bounds.min;
        let span = bounds.max - bounds.min;
        let dims = [0, 1, 2].map(|a| (span[a] / radius).floor() as usize + 1);
        let n_cells = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .filter(|&n| n < u32::MAX as usize)
            .ok_or_else(|| Error::invalid("background grid too large for this radius"))?;

        let mut grid = BackgroundGrid {
            radius,
            inv_radius: 1.0 / radius,
            origin,
            dims,
            offsets: Vec::new(),
            points: Vec::new(),
        };
        let mut keyed: Vec<(usize, Vec3)> = global_map
            .points
            .iter()
            .map(|p| {
                let c = grid.cell_of(*p).expect("map point inside its own bounds");
                (grid.linear(c), *p)
            })
            .collect();
        keyed.sort_by_key(|k| k.0);

        let mut offsets = vec![0u32; n_cells + 1];
        for (c, _) in &keyed {
            offsets[c + 1] += 1;
        }
        for i in 0..n_cells {
            offsets[i + 1] += offsets[i];
        }
        grid.offsets = offsets;
        grid.points = keyed.into_iter().map(|(_, p)| p).collect();
        Ok(grid)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn cell_of(&self, p: Vec3) -> Option<[i64; 3]> {
        let mut c = [0i64; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) * self.inv_radius).floor();
            // a query up to one cell outside the map can still match
            if !(f >= -1.0 && f <= self.dims[a] as f64) {
                return None;
            }
            c[a] = f as i64;
        }
        Some(c)
    }

    fn linear(&self, c: [i64; 3]) -> usize {
        (c[2] as usize * self.dims[1] + c[1] as usize) * self.dims[0] + c[0] as usize
    }

    fn cell_has_near(&self, c: [i64; 3], p: Vec3) -> bool {
        if (0..3).any(|a| c[a] < 0 || c[a] >= self.dims[a] as i64) {
            return false;
        }
        let i = self.linear(c);
        let r2 = self.radius * self.radius;
        self.points[self.offsets[i] as usize..self.offsets[i + 1] as usize]
            .iter()
            .any(|q| {
                let d = *q - p;
                d.dot(d) <= r2
            })
    }

    /// True when some map point lies within `radius` of `p`.
    pub fn is_background(&self, p: Vec3) -> bool {
        let Some(c) = self.cell_of(p) else {
            return false;
        };
        if self.cell_has_near(c, p) {
            return true;
        }
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy, dz) != (0, 0, 0)
                        && self.cell_has_near([c[0] + dx, c[1] + dy, c[2] + dz], p)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn subtract(&self, frame: &PointCloudFrame) -> Vec<Vec3> {
        frame
            .points
            .iter()
            .copied()
            .filter(|p| !self.is_background(*p))
            .collect()
    }
}

/// Points of `frame` with no `global_map` point within `radius`.
pub fn subtract_background(
    frame: &PointCloudFrame,
    global_map: &PointCloudFrame,
    radius: f64,
) -> Result<Vec<Vec3>> {
    Ok(BackgroundGrid::new(global_map, radius)?.subtract(frame))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins so labels do not depend on merge order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage clusters of the ground-plane projections at distance
/// `tol`. Clusters are ordered by their lowest point index.
pub fn euclidean_clusters(points: &[Vec3], tol: f64) -> Vec<Vec<Vec3>> {
    if points.is_empty() {
        return Vec::new();
    }
    let key = |p: &Vec3| ((p.x / tol).floor() as i64, (p.y / tol).floor() as i64);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| (key(&points[i]), i));
    let keys: Vec<(i64, i64)> = order.iter().map(|&i| key(&points[i])).collect();

    let cell_range = |k: (i64, i64)| {
        let lo = keys.partition_point(|c| *c < k);
        let hi = keys.partition_point(|c| *c <= k);
        lo..hi
    };

    let tol2 = tol * tol;
    let mut uf = UnionFind::new(points.len());
    for (pos, &i) in order.iter().enumerate() {
        let (cx, cy) = keys[pos];
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &j in &order[cell_range((cx + dx, cy + dy))] {
                    if j <= i {
                        continue;
                    }
                    let d = points[j].xy() - points[i].xy();
                    if d.dot(d) <= tol2 {
                        uf.union(i, j);
                    }
                }
            }
        }
    }

    let mut label_of_root = vec![usize::MAX; points.len()];
    let mut clusters: Vec<Vec<Vec3>> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let r = uf.find(i);
        if label_of_root[r] == usize::MAX {
            label_of_root[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[label_of_root[r]].push(*p);
    }
    clusters
}

fn convex_hull(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).perp_dot(b - o);
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let base = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= base + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// The two ground-plane points farthest apart, and their distance.
pub fn footprint_extremes(points: &[Vec3]) -> Option<(Vec2, Vec2, f64)> {
    let hull = convex_hull(points.iter().map(|p| p.xy()).collect());
    let first = *hull.first()?;
    let mut best = (first, first, 0.0);
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            let d = a.distance(*b);
            if d > best.2 {
                best = (*a, *b, d);
            }
        }
    }
    Some(best)
}

pub fn footprint_diameter(points: &[Vec3]) -> f64 {
    footprint_extremes(points).map_or(0.0, |(_, _, d)| d)
}

fn plausible_body(points: &[Vec3], cfg: &PerceptionConfig) -> bool {
    if points.len() < cfg.min_cluster_points {
        return false;
    }
    let top = points.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
    (cfg.min_height..=cfg.max_height).contains(&top)
}

fn plausible(points: &[Vec3], cfg: &PerceptionConfig) -> bool {
    plausible_body(points, cfg) && footprint_diameter(points) <= cfg.max_footprint
}

/// Ground-plane 2-means seeded at the two most distant points.
fn two_means(points: &[Vec3]) -> Option<(Vec<Vec3>, Vec<Vec3>)> {
    let (mut ca, mut cb, d) = footprint_extremes(points)?;
    if d == 0.0 {
        return None;
    }
    let mut assign = vec![false; points.len()];
    for _ in 0..50 {
        let mut changed = false;
        for (slot, p) in assign.iter_mut().zip(points) {
            let q = p.xy();
            let to_b = q.distance(cb) < q.distance(ca);
            changed |= *slot != to_b;
            *slot = to_b;
        }
        let mean = |want: bool| {
            let (s, n) = points
                .iter()
                .zip(&assign)
                .filter(|(_, &b)| b == want)
                .fold((Vec2::ZERO, 0usize), |(s, n), (p, _)| (s + p.xy(), n + 1));
            (n > 0).then(|| s * (1.0 / n as f64))
        };
        match (mean(false), mean(true)) {
            (Some(a), Some(b)) => {
                ca = a;
                cb = b;
            }
            _ => return None,
        }
        if !changed {
            break;
        }
    }
    let (a, b): (Vec<_>, Vec<_>) = points.iter().zip(&assign).partition(|(_, &b)| !b);
    Some((
        a.into_iter().map(|(p, _)| *p).collect(),
        b.into_iter().map(|(p, _)| *p).collect(),
    ))
}

fn split_merge(points: Vec<Vec3>, cfg: &PerceptionConfig, out: &mut Vec<Vec<Vec3>>) {
    if footprint_diameter(&points) <= cfg.split_footprint {
        out.push(points);
        return;
    }
    match two_means(&points) {
        Some((a, b)) if plausible_body(&a, cfg) && plausible_body(&b, cfg) => {
            split_merge(a, cfg, out);
            split_merge(b, cfg, out);
        }
        // a fragment that cannot be a person goes back with its sibling
        _ => out.push(points),
    }
}

/// Joins fragments whose union still fits one body, closest pairs first.
/// Catches a person seen as two arcs from opposite sensors.
fn merge_fragments(parts: &mut Vec<Vec<Vec3>>, cfg: &PerceptionConfig) {
    loop {
        let centers: Vec<Vec2> = parts
            .iter()
            .map(|c| c.iter().fold(Vec2::ZERO, |a, p| a + p.xy()) * (1.0 / c.len() as f64))
            .collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                if centers[i].distance(centers[j]) > cfg.merge_footprint {
                    continue;
                }
                let joined: Vec<Vec3> = parts[i].iter().chain(&parts[j]).copied().collect();
                let d = footprint_diameter(&joined);
                if d <= cfg.merge_footprint && best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else {
            return;
        };
        let moved = parts.remove(j);
        parts[i].extend(moved);
    }
}

/// Clusters dynamic points into person candidates.
pub fn cluster_humans(points: &[Vec3], cfg: &PerceptionConfig) -> Vec<Vec<Vec3>> {
    let mut parts = Vec::new();
    for c in euclidean_clusters(points, cfg.cluster_tolerance) {
        split_merge(c, cfg, &mut parts);
    }
    merge_fragments(&mut parts, cfg);
    parts.retain(|c| plausible(c, cfg));
    parts
}

/// Background model plus clustering parameters, reusable across frames.
#[derive(Clone, Debug)]
pub struct Detector {
    pub config: PerceptionConfig,
    grid: BackgroundGrid,
}

impl Detector {
    pub fn new(global_map: &PointCloudFrame, config: PerceptionConfig) -> Result<Self> {
        config.validate()?;
        let grid = BackgroundGrid::new(global_map, config.background_radius)?;
        Ok(Detector { config, grid })
    }

    pub fn dynamic_points(&self, frame: &PointCloudFrame) -> Vec<Vec3> {
        self.grid.subtract(frame)
    }

    pub fn detect(&self, frame: &PointCloudFrame) -> Vec<Detection> {
        let dynamic = self.dynamic_points(frame);
        cluster_humans(&dynamic, &self.config)
            .iter()
            .map(|c| Detection::from_points(c).expect("clusters are nonempty"))
            .collect()
    }
}

pub fn detect(
    frame: &PointCloudFrame,
    global_map: &PointCloudFrame,
    config: &PerceptionConfig,
) -> Result<Vec<Detection>> {
    Ok(Detector::new(global_map, config.clone())?.detect(frame))
}

pub const DETECTION_CSV_HEADER: &str = "frame,cx,cy,cz,aabb_min_x,aabb_min_y,aabb_min_z,\
aabb_max_x,aabb_max_y,aabb_max_z,obb_cx,obb_cy,obb_cz,obb_min_x,obb_min_y,obb_min_z,\
obb_max_x,obb_max_y,obb_max_z,r00,r01,r02,r10,r11,r12,r20,r21,r22,n_points";

/// Debug dump, one line per detection.
pub fn write_detections_csv(path: &Path, frames: &[(usize, Vec<Detection>)]) -> Result<()> {
    let mut out = String::new();
    out.push_str(DETECTION_CSV_HEADER);
    out.push('\n');
    for (frame, dets) in frames {
        for d in dets {
            let mut fields = vec![frame.to_string()];
            let vecs = [
                d.centroid,
                d.aabb.min,
                d.aabb.max,
                d.obb.center,
                d.obb.min_obj,
                d.obb.max_obj,
            ];
            for v in vecs {
                fields.extend(v.to_array().iter().map(|x| x.to_string()));
            }
            for row in d.obb.rotation.m {
                fields.extend(row.iter().map(|x| x.to_string()));
            }
            fields.push(d.n_points.to_string());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
