//! Spinning multi-ring LiDAR simulation over a box-shaped room with people
//! modeled as cylinders, registration of several sensors into one world
//! frame, and point-cloud frame files.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cylinder, Mat3, RigidTransform, Vec3};
use crate::scene::Scene;
use crate::seed::SeedSplitter;

/// Magic bytes of the compact binary cloud format.
pub const CLOUD_MAGIC: [u8; 4] = *b"LBPC";
pub const CLOUD_VERSION: u32 = 1;

/// Empty square room: floor at z = 0 and four walls, no ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Room {
    /// Half the side length; walls at x, y = ±half_width.
    pub half_width: f64,
    pub height: f64,
}

impl Default for Room {
    fn default() -> Self {
        Room {
            half_width: 14.0,
            height: 12.0,
        }
    }
}

/// Which static surface a ray ended on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    Floor,
    /// Wall index: 0 = +x, 1 = −x, 2 = +y, 3 = −y.
    Wall(u8),
    Human(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub position: Vec3,
    /// Heading the sensor is tilted toward, degrees from +x.
    pub yaw_deg: f64,
    /// Downward tilt, degrees.
    pub tilt_deg: f64,
    pub n_rings: usize,
    pub vfov_up_deg: f64,
    pub vfov_down_deg: f64,
    pub azimuth_step_deg: f64,
    pub max_range: f64,
    pub range_noise_sigma: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            position: Vec3::new(-13.5, -13.5, 10.0),
            yaw_deg: 45.0,
            tilt_deg: 35.0,
            n_rings: 32,
            vfov_up_deg: 10.67,
            vfov_down_deg: -30.67,
            azimuth_step_deg: 0.2,
            max_range: 50.0,
            range_noise_sigma: 0.02,
        }
    }
}

impl SensorConfig {
    /// Sensor mounted at `position`, tilted down toward the room center.
    pub fn facing_center(position: Vec3) -> Self {
        SensorConfig {
            position,
            yaw_deg: (-position.y).atan2(-position.x).to_degrees(),
            ..SensorConfig::default()
        }
    }

    /// Two sensors in opposite corners of `room`, 0.5 m in from the walls.
    pub fn default_pair(room: &Room) -> Vec<SensorConfig> {
        let c = room.half_width - 0.5;
        let h = SensorConfig::default().position.z;
        vec![
            SensorConfig::facing_center(Vec3::new(-c, -c, h)),
            SensorConfig::facing_center(Vec3::new(c, c, h)),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_range > 0.0) {
            return Err(Error::invalid("max_range must be > 0"));
        }
        if !(self.azimuth_step_deg > 0.0 && self.azimuth_step_deg <= 10.0) {
            return Err(Error::invalid("azimuth_step must be in (0, 10] degrees"));
        }
        if self.n_rings == 0 {
            return Err(Error::invalid("n_rings must be >= 1"));
        }
        if !(self.range_noise_sigma >= 0.0) {
            return Err(Error::invalid("range_noise_sigma must be >= 0"));
        }
        Ok(())
    }

    pub fn rotation(&self) -> Mat3 {
        Mat3::rot_z(self.yaw_deg.to_radians()).mul_mat(&Mat3::rot_y(self.tilt_deg.to_radians()))
    }

    /// Sensor-to-world transform.
    pub fn extrinsic(&self) -> RigidTransform {
        RigidTransform::new(self.rotation(), self.position)
    }

    pub fn ring_elevations_deg(&self) -> Vec<f64> {
        if self.n_rings == 1 {
            return vec![self.vfov_down_deg];
        }
        let span = self.vfov_up_deg - self.vfov_down_deg;
        (0..self.n_rings)
            .map(|k| self.vfov_down_deg + span * k as f64 / (self.n_rings - 1) as f64)
            .collect()
    }

    /// Unit ray directions in the sensor frame, ring-major.
    pub fn local_directions(&self) -> Vec<Vec3> {
        let n_az = (360.0 / self.azimuth_step_deg).round() as usize;
        let mut dirs = Vec::with_capacity(n_az * self.n_rings);
        for e in self.ring_elevations_deg() {
            let (se, ce) = e.to_radians().sin_cos();
            for k in 0..n_az {
                let (sa, ca) = (k as f64 * self.azimuth_step_deg).to_radians().sin_cos();
                dirs.push(Vec3::new(ce * ca, ce * sa, se));
            }
        }
        dirs
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloudFrame {
    pub frame: usize,
    pub points: Vec<Vec3>,
}

impl PointCloudFrame {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Nearest hit of a world-space ray, as `(distance, surface)`.
pub fn cast_ray(
    origin: Vec3,
    dir: Vec3,
    room: &Room,
    humans: &[Cylinder],
    max_range: f64,
) -> Option<(f64, Surface)> {
    let mut best: Option<(f64, Surface)> = None;
    let mut consider = |t: f64, s: Surface| {
        if t >= 0.0 && t <= max_range && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, s));
        }
    };
    let hw = room.half_width;
    let inside = |v: f64| v.abs() <= hw;

    if dir.z < 0.0 {
        let t = -origin.z / dir.z;
        let p = origin + dir * t;
        if inside(p.x) && inside(p.y) {
            consider(t, Surface::Floor);
        }
    }
    let walls = [(0usize, hw, 0u8), (0, -hw, 1), (1, hw, 2), (1, -hw, 3)];
    for (axis, at, id) in walls {
        let (o, d) = if axis == 0 { (origin.x, dir.x) } else { (origin.y, dir.y) };
        if d.abs() < 1e-15 {
            continue;
        }
        let t = (at - o) / d;
        if t < 0.0 {
            continue;
        }
        let p = origin + dir * t;
        let along = if axis == 0 { p.y } else { p.x };
        if inside(along) && p.z >= 0.0 && p.z <= room.height {
            consider(t, Surface::Wall(id));
        }
    }
    for (i, c) in humans.iter().enumerate() {
        if let Some((t0, _)) = c.ray_interval(origin, dir) {
            consider(t0, Surface::Human(i));
        }
    }
    best
}

/// One sweep of `sensor` over the static room and `humans`. Points are in
/// the sensor frame.
pub fn scan_cylinders(
    humans: &[Cylinder],
    sensor: &SensorConfig,
    room: &Room,
    frame: usize,
    rng_seed: u64,
) -> Result<PointCloudFrame> {
    let points = scan_labeled(humans, sensor, room, rng_seed)?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    Ok(PointCloudFrame { frame, points })
}

/// Like [`scan_cylinders`] but keeps which surface each return came from.
pub fn scan_labeled(
    humans: &[Cylinder],
    sensor: &SensorConfig,
    room: &Room,
    rng_seed: u64,
) -> Result<Vec<(Vec3, Surface)>> {
    sensor.validate()?;
    let rot = sensor.rotation();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let noise = (sensor.range_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, sensor.range_noise_sigma))
        .transpose()
        .map_err(|e| Error::invalid(format!("noise sigma: {e}")))?;

    let dirs = sensor.local_directions();
    let mut out = Vec::with_capacity(dirs.len());
    for d in dirs {
        let world = rot.mul_vec(d);
        if let Some((t, surface)) = cast_ray(sensor.position, world, room, humans, sensor.max_range)
        {
            let r = match &noise {
                Some(n) => t + n.sample(&mut rng),
                None => t,
            };
            if r > 0.0 && r <= sensor.max_range {
                out.push((d * r, surface));
            }
        }
    }
    Ok(out)
}

/// Scans frame `t` of `scene`, optionally without the people in it.
pub fn scan_frame(
    scene: &Scene,
    t: usize,
    sensor: &SensorConfig,
    room: &Room,
    include_humans: bool,
    rng_seed: u64,
) -> Result<PointCloudFrame> {
    if t >= scene.n_frames() {
        return Err(Error::invalid(format!(
            "frame {t} outside scene of {} frames",
            scene.n_frames()
        )));
    }
    let humans = if include_humans {
        scene.cylinders(t)
    } else {
        Vec::new()
    };
    scan_cylinders(&humans, sensor, room, t, rng_seed)
}

/// Maps each sensor-local cloud through its extrinsic and concatenates.
pub fn register_clouds(
    clouds: &[PointCloudFrame],
    extrinsics: &[RigidTransform],
) -> Result<PointCloudFrame> {
    if clouds.len() != extrinsics.len() {
        return Err(Error::LengthMismatch {
            what: "clouds vs sensor extrinsics",
            left: clouds.len(),
            right: extrinsics.len(),
        });
    }
    let frame = clouds.first().map_or(0, |c| c.frame);
    let total = clouds.iter().map(|c| c.len()).sum();
    let mut points = Vec::with_capacity(total);
    for (cloud, ext) in clouds.iter().zip(extrinsics) {
        points.extend(cloud.points.iter().map(|p| ext.apply(*p)));
    }
    Ok(PointCloudFrame { frame, points })
}

/// Scans every sensor at one instant and registers the result.
pub fn scan_registered(
    humans: &[Cylinder],
    sensors: &[SensorConfig],
    room: &Room,
    frame: usize,
    seeds: &SeedSplitter,
) -> Result<PointCloudFrame> {
    let clouds = sensors
        .iter()
        .enumerate()
        .map(|(k, s)| {
            scan_cylinders(humans, s, room, frame, seeds.derive2("scan", frame as u64, k as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let ext: Vec<_> = sensors.iter().map(|s| s.extrinsic()).collect();
    register_clouds(&clouds, &ext)
}

struct SensorRays {
    position: Vec3,
    rotation: Mat3,
    world_dirs: Vec<Vec3>,
    static_hits: Vec<Option<f64>>,
    n_az: usize,
    step_rad: f64,
    max_range: f64,
    noise: Option<Normal<f64>>,
}

/// Precomputed rays and static-room hits for a fixed sensor rig. Produces
/// the same registered frames as [`scan_registered`] (to rounding) while
/// only testing people against the rays that can reach them.
pub struct Scanner {
    rigs: Vec<SensorRays>,
}

impl Scanner {
    pub fn new(sensors: &[SensorConfig], room: &Room) -> Result<Scanner> {
        let mut rigs = Vec::with_capacity(sensors.len());
        for s in sensors {
            s.validate()?;
            let rotation = s.rotation();
            let world_dirs: Vec<Vec3> =
                s.local_directions().iter().map(|d| rotation.mul_vec(*d)).collect();
            let static_hits = world_dirs
                .iter()
                .map(|d| cast_ray(s.position, *d, room, &[], s.max_range).map(|(t, _)| t))
                .collect();
            let noise = (s.range_noise_sigma > 0.0)
                .then(|| Normal::new(0.0, s.range_noise_sigma))
                .transpose()
                .map_err(|e| Error::invalid(format!("noise sigma: {e}")))?;
            rigs.push(SensorRays {
                position: s.position,
                rotation,
                n_az: (360.0 / s.azimuth_step_deg).round() as usize,
                step_rad: s.azimuth_step_deg.to_radians(),
                world_dirs,
                static_hits,
                max_range: s.max_range,
                noise,
            });
        }
        Ok(Scanner { rigs })
    }

    /// Azimuth index range (inclusive, may wrap) of rays that can reach `c`,
    /// or `None` when every azimuth has to be tried.
    fn azimuth_window(rig: &SensorRays, c: &Cylinder) -> Option<(i64, i64)> {
        let mut angles = Vec::with_capacity(8);
        for dx in [-c.radius, c.radius] {
            for dy in [-c.radius, c.radius] {
                for z in [0.0, c.height] {
                    let w = Vec3::new(c.base.x + dx, c.base.y + dy, z);
                    let l = rig.rotation.tmul_vec(w - rig.position);
                    if l.xy().norm() < 1e-9 {
                        return None;
                    }
                    angles.push(l.xy().angle());
                }
            }
        }
        let a0 = angles[0];
        let wrap = |a: f64| {
            let d = (a - a0).rem_euclid(std::f64::consts::TAU);
            if d > std::f64::consts::PI {
                d - std::f64::consts::TAU
            } else {
                d
            }
        };
        let (lo, hi) = angles
            .iter()
            .map(|a| wrap(*a))
            .fold((0.0f64, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        // the footprint surrounds the sensor axis
        if hi - lo >= std::f64::consts::PI {
            return None;
        }
        let k_lo = ((a0 + lo) / rig.step_rad).floor() as i64 - 1;
        let k_hi = ((a0 + hi) / rig.step_rad).ceil() as i64 + 1;
        Some((k_lo, k_hi))
    }

    /// Registered cloud of `humans` at `frame`, noise seeded like
    /// [`scan_registered`].
    pub fn scan(&self, humans: &[Cylinder], frame: usize, seeds: &SeedSplitter) -> PointCloudFrame {
        let mut points = Vec::new();
        for (k, rig) in self.rigs.iter().enumerate() {
            let mut hits = rig.static_hits.clone();
            let n_rays = hits.len();
            let n_rings = n_rays / rig.n_az;
            for c in humans {
                let mut test = |i: usize| {
                    if let Some((t0, _)) = c.ray_interval(rig.position, rig.world_dirs[i]) {
                        if t0 >= 0.0 && t0 <= rig.max_range && hits[i].is_none_or(|t| t0 < t) {
                            hits[i] = Some(t0);
                        }
                    }
                };
                match Self::azimuth_window(rig, c) {
                    Some((lo, hi)) if hi - lo < rig.n_az as i64 => {
                        for ring in 0..n_rings {
                            for kk in lo..=hi {
                                let az = kk.rem_euclid(rig.n_az as i64) as usize;
                                test(ring * rig.n_az + az);
                            }
                        }
                    }
                    _ => (0..n_rays).for_each(&mut test),
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seeds.derive2("scan", frame as u64, k as u64));
            for (d, hit) in rig.world_dirs.iter().zip(&hits) {
                if let Some(t) = hit {
                    let r = match &rig.noise {
                        Some(n) => t + n.sample(&mut rng),
                        None => *t,
                    };
                    if r > 0.0 && r <= rig.max_range {
                        points.push(rig.position + *d * r);
                    }
                }
            }
        }
        PointCloudFrame { frame, points }
    }
}

/// Registered static-only cloud of the empty room.
pub fn build_global_map(room: &Room, sensors: &[SensorConfig], seed: u64) -> Result<PointCloudFrame> {
    let seeds = SeedSplitter::new(seed);
    let clouds = sensors
        .iter()
        .enumerate()
        .map(|(k, s)| scan_cylinders(&[], s, room, 0, seeds.derive2("global-map", 0, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let ext: Vec<_> = sensors.iter().map(|s| s.extrinsic()).collect();
    register_clouds(&clouds, &ext)
}

pub fn frame_file_name(frame: usize) -> String {
    format!("frame_{frame:06}.ply")
}

pub fn write_ply(path: &Path, cloud: &PointCloudFrame) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(w, "ply")?;
        writeln!(w, "format ascii 1.0")?;
        writeln!(w, "element vertex {}", cloud.len())?;
        writeln!(w, "property float x")?;
        writeln!(w, "property float y")?;
        writeln!(w, "property float z")?;
        writeln!(w, "end_header")?;
        for p in &cloud.points {
            writeln!(w, "{} {} {}", p.x as f32, p.y as f32, p.z as f32)?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

pub fn read_ply(path: &Path, frame: usize) -> Result<PointCloudFrame> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::format("ply", "unexpected end of file"))?
            .map_err(|e| Error::io(path, e))
    };
    if next()?.trim() != "ply" {
        return Err(Error::format("ply", "missing 'ply' magic"));
    }
    let mut count = None;
    loop {
        let line = next()?;
        let line = line.trim();
        if line == "end_header" {
            break;
        }
        if let Some(rest) = line.strip_prefix("element vertex ") {
            count = Some(
                rest.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::format("ply", e.to_string()))?,
            );
        } else if line.starts_with("format ") && line != "format ascii 1.0" {
            return Err(Error::format("ply", format!("unsupported {line}")));
        }
    }
    let count = count.ok_or_else(|| Error::format("ply", "no vertex element"))?;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let line = next()?;
        let v: Vec<f64> = line
            .split_whitespace()
            .take(3)
            .map(|s| s.parse::<f32>().map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format("ply", e.to_string()))?;
        if v.len() != 3 {
            return Err(Error::format("ply", format!("bad vertex line '{line}'")));
        }
        points.push(Vec3::new(v[0], v[1], v[2]));
    }
    Ok(PointCloudFrame { frame, points })
}

/// 16-byte header (magic, u32 version, u64 count) then f32 xyz triples,
/// all little-endian.
pub fn write_cloud_bin(path: &Path, cloud: &PointCloudFrame) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + cloud.len() * 12);
    buf.extend_from_slice(&CLOUD_MAGIC);
    buf.extend_from_slice(&CLOUD_VERSION.to_le_bytes());
    buf.extend_from_slice(&(cloud.len() as u64).to_le_bytes());
    for p in &cloud.points {
        for c in [p.x, p.y, p.z] {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_cloud_bin(path: &Path, frame: usize) -> Result<PointCloudFrame> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_cloud_bin(&bytes, frame)
}

pub fn decode_cloud_bin(bytes: &[u8], frame: usize) -> Result<PointCloudFrame> {
    if bytes.len() < 16 || bytes[0..4] != CLOUD_MAGIC {
        return Err(Error::format("cloud", "bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CLOUD_VERSION {
        return Err(Error::format("cloud", format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() != count * 12 {
        return Err(Error::format(
            "cloud",
            format!("expected {} payload bytes, found {}", count * 12, body.len()),
        ));
    }
    let f = |i: usize| f32::from_le_bytes(body[i..i + 4].try_into().unwrap()) as f64;
    let points = (0..count)
        .map(|k| Vec3::new(f(k * 12), f(k * 12 + 4), f(k * 12 + 8)))
        .collect();
    Ok(PointCloudFrame { frame, points })
}
