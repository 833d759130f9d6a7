use super::shapes::{Aabb, Obb};
use super::vector::{Mat3, Vec3};
use crate::error::{Error, Result};

/// Off-diagonal magnitude at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Componentwise min/max envelope of `points`.
pub fn fit_aabb(points: &[Vec3]) -> Result<Aabb> {
    let (first, rest) = points.split_first().ok_or(Error::EmptyPointSet)?;
    let (min, max) = rest
        .iter()
        .fold((*first, *first), |(lo, hi), p| (lo.min(*p), hi.max(*p)));
    Aabb::new(min, max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObbFit {
    pub obb: Obb,
    /// Covariance eigenvalues, descending, matching the rotation columns.
    pub eigenvalues: [f64; 3],
    /// Set when the covariance was rank ≤ 1 and the axis-aligned basis was used.
    pub degenerate: bool,
}

/// PCA box: covariance eigenvectors give the orientation, extents are the
/// min/max of the points projected on that basis.
pub fn fit_obb(points: &[Vec3]) -> Result<ObbFit> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vec3::ZERO, |acc, p| acc + *p) * (1.0 / n);

    let mut cov = [[0.0; 3]; 3];
    for p in points {
        let d = (*p - mean).to_array();
        for i in 0..3 {
            for j in i..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
    }

    let (values, vectors) = jacobi_eigen(cov);
    let scale = values[0].abs().max(f64::MIN_POSITIVE);
    let degenerate = points.len() < 3 || values[1].abs() <= 1e-12 * scale;

    let rotation = if degenerate {
        Mat3::IDENTITY
    } else {
        let c0 = canonical_sign(vectors.col(0));
        let c1 = canonical_sign(vectors.col(1));
        Mat3::from_cols(c0, c1, c0.cross(c1))
    };

    let mut lo = Vec3::splat(f64::INFINITY);
    let mut hi = Vec3::splat(f64::NEG_INFINITY);
    for p in points {
        let q = rotation.tmul_vec(*p - mean);
        lo = lo.min(q);
        hi = hi.max(q);
    }

    Ok(ObbFit {
        obb: Obb::new(lo, hi, rotation, mean)?,
        eigenvalues: values,
        degenerate,
    })
}

/// Flips `v` so its largest-magnitude component is positive.
fn canonical_sign(v: Vec3) -> Vec3 {
    let a = v.to_array();
    let k = (0..3)
        .max_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
        .unwrap_or(0);
    if a[k] < 0.0 {
        -v
    } else {
        v
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric 3x3 matrix. Returns
/// eigenvalues in descending order and the matching eigenvectors as columns.
pub fn jacobi_eigen(mut a: [[f64; 3]; 3]) -> ([f64; 3], Mat3) {
    let mut v = Mat3::IDENTITY.m;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off < JACOBI_TOL {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q].abs() < f64::MIN_POSITIVE {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            // A ← Jᵀ A J
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.map(|i| a[i][i]);
    let cols = order.map(|i| Vec3::new(v[0][i], v[1][i], v[2][i]));
    (values, Mat3::from_cols(cols[0], cols[1], cols[2]))
}
