//! Geometric primitives, rigid poses, and voxelization.
//!
//! A primitive is a canonical unit shape (living in the [-1, 1]^3 box,
//! boundary included) stretched by per-axis half-extents and placed by an
//! affine pose. Voxel centers sit at integer coordinates; a voxel is
//! foreground iff its center lies inside the posed shape (center-inside rule,
//! boundary-inclusive).
//!
//! Every canonical shape is star-shaped about the origin, so growing all
//! half-extents by a common factor never removes foreground voxels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Coord, Grid3, OccupancyMask, Shape};

/// The five supported shapes.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Ellipsoid,
    Cuboid,
    Cylinder,
    Cone,
    Prism,
}

pub const ALL_KINDS: [PrimitiveKind; 5] = [
    PrimitiveKind::Ellipsoid,
    PrimitiveKind::Cuboid,
    PrimitiveKind::Cylinder,
    PrimitiveKind::Cone,
    PrimitiveKind::Prism,
];

/// Rotation, per-axis scale, then translation: `x -> R (s .* x) + t`.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct AffineTransform {
    /// Row-major rotation matrix. Orthonormal with determinant +1.
    pub rotation: [[f64; 3]; 3],
    /// Per-axis scale factors, all strictly positive.
    pub scale: [f64; 3],
    pub translation: [f64; 3],
}

impl AffineTransform {
    pub fn identity() -> Self {
        AffineTransform {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            scale: [1.0, 1.0, 1.0],
            translation: [0.0, 0.0, 0.0],
        }
    }

    pub fn translate(t: [f64; 3]) -> Self {
        AffineTransform {
            translation: t,
            ..AffineTransform::identity()
        }
    }

    pub fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        let s = [
            self.scale[0] * x[0],
            self.scale[1] * x[1],
            self.scale[2] * x[2],
        ];
        let r = mat_vec(&self.rotation, s);
        [
            r[0] + self.translation[0],
            r[1] + self.translation[1],
            r[2] + self.translation[2],
        ]
    }

    /// Maps a world point back to canonical coordinates.
    pub fn inverse_apply(&self, p: [f64; 3]) -> [f64; 3] {
        let d = [
            p[0] - self.translation[0],
            p[1] - self.translation[1],
            p[2] - self.translation[2],
        ];
        let r = mat_transpose_vec(&self.rotation, d);
        [r[0] / self.scale[0], r[1] / self.scale[1], r[2] / self.scale[2]]
    }

    /// Max absolute deviation of R^T R from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = 0.0;
                for k in 0..3 {
                    dot += self.rotation[k][i] * self.rotation[k][j];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                err = err.max((dot - expected).abs());
            }
        }
        err
    }

    pub fn rotation_determinant(&self) -> f64 {
        let r = &self.rotation;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }
}

fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn mat_transpose_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

/// A posed, sized shape.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    /// Per-axis half-extents in voxels; the shape's AABB in canonical frame
    /// is exactly [-h, h] per axis.
    pub half_extents: [f64; 3],
    pub pose: AffineTransform,
}

/// Canonical unit-shape membership (boundary-inclusive).
///
/// All shapes fill the [-1, 1]^3 box tightly and are star-shaped about 0:
/// scaling a member point by lambda in [0, 1] keeps it a member.
fn unit_inside(kind: PrimitiveKind, u: [f64; 3]) -> bool {
    let [x, y, z] = u;
    match kind {
        PrimitiveKind::Ellipsoid => x * x + y * y + z * z <= 1.0,
        PrimitiveKind::Cuboid => x.abs() <= 1.0 && y.abs() <= 1.0 && z.abs() <= 1.0,
        PrimitiveKind::Cylinder => x * x + y * y <= 1.0 && z.abs() <= 1.0,
        // Apex at z = +1, unit-radius base disc at z = -1.
        PrimitiveKind::Cone => {
            let r = (1.0 - z) / 2.0;
            z.abs() <= 1.0 && x * x + y * y <= r * r
        }
        // Triangular cross-section: apex edge at y = +1, base face at y = -1.
        PrimitiveKind::Prism => {
            y.abs() <= 1.0 && z.abs() <= 1.0 && x.abs() <= (1.0 - y) / 2.0
        }
    }
}

impl Primitive {
    /// True iff the world point lies inside the posed shape.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let c = self.pose.inverse_apply(p);
        let u = [
            c[0] / self.half_extents[0],
            c[1] / self.half_extents[1],
            c[2] / self.half_extents[2],
        ];
        unit_inside(self.kind, u)
    }

    /// Half-extents of the world-frame AABB: `|R| (s .* h)` per axis.
    pub fn aabb_half_extents(&self) -> [f64; 3] {
        let sh = [
            self.pose.scale[0] * self.half_extents[0],
            self.pose.scale[1] * self.half_extents[1],
            self.pose.scale[2] * self.half_extents[2],
        ];
        let r = &self.pose.rotation;
        [
            r[0][0].abs() * sh[0] + r[0][1].abs() * sh[1] + r[0][2].abs() * sh[2],
            r[1][0].abs() * sh[0] + r[1][1].abs() * sh[1] + r[1][2].abs() * sh[2],
            r[2][0].abs() * sh[0] + r[2][1].abs() * sh[1] + r[2][2].abs() * sh[2],
        ]
    }

    /// True iff the world-frame AABB lies fully inside the voxel-center
    /// lattice of the domain, i.e. within [0, n-1] per axis.
    pub fn fits_domain(&self, domain: Shape) -> bool {
        let r = self.aabb_half_extents();
        let t = self.pose.translation;
        let n = domain.as_array();
        (0..3).all(|i| t[i] - r[i] >= 0.0 && t[i] + r[i] <= (n[i] - 1) as f64)
    }
}

/// A grid restricted to an axis-aligned window of the domain.
#[derive(Clone, Debug)]
pub(crate) struct Cropped<T> {
    /// Domain coordinate of the window's (0, 0, 0) voxel.
    pub lo: Coord,
    pub grid: Grid3<T>,
}

impl<T> Cropped<T> {
    #[cfg(test)]
    pub fn from_domain(&self, c: Coord) -> Option<Coord> {
        let l = [
            c[0].checked_sub(self.lo[0])?,
            c[1].checked_sub(self.lo[1])?,
            c[2].checked_sub(self.lo[2])?,
        ];
        self.grid.shape.contains(l).then_some(l)
    }
}

/// Inclusive voxel bounds of the primitive's AABB clamped to the domain.
/// None when the AABB misses the voxel lattice entirely.
fn voxel_bounds(p: &Primitive, domain: Shape) -> Option<(Coord, Coord)> {
    let r = p.aabb_half_extents();
    let t = p.pose.translation;
    let n = domain.as_array();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for i in 0..3 {
        let a = (t[i] - r[i]).ceil().max(0.0);
        let b = (t[i] + r[i]).floor().min((n[i] - 1) as f64);
        if a > b {
            return None;
        }
        lo[i] = a as usize;
        hi[i] = b as usize;
    }
    Some((lo, hi))
}

/// Rasterizes the primitive over the full domain.
///
/// Voxel v (center at integer coordinates) is foreground iff the center is
/// inside the posed shape; surface-touching centers are included.
pub fn voxelize(p: &Primitive, domain: Shape) -> OccupancyMask {
    let mut mask = Grid3::filled(domain, false);
    if let Some((lo, hi)) = voxel_bounds(p, domain) {
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    if p.contains([x as f64, y as f64, z as f64]) {
                        mask.set([x, y, z], true);
                    }
                }
            }
        }
    }
    mask
}

/// Rasterizes into a window covering the AABB plus `pad` voxels per side,
/// clamped to the domain. Voxels outside the window are guaranteed
/// background. Returns an all-background 1-voxel window when the AABB misses
/// the lattice.
pub(crate) fn voxelize_cropped(p: &Primitive, domain: Shape, pad: usize) -> Cropped<bool> {
    let Some((blo, bhi)) = voxel_bounds(p, domain) else {
        return Cropped {
            lo: [0, 0, 0],
            grid: Grid3::filled(Shape::new(1, 1, 1), false),
        };
    };
    let n = domain.as_array();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for i in 0..3 {
        lo[i] = blo[i].saturating_sub(pad);
        hi[i] = (bhi[i] + pad).min(n[i] - 1);
    }
    let shape = Shape::new(hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1);
    let mut grid = Grid3::filled(shape, false);
    for z in blo[2]..=bhi[2] {
        for y in blo[1]..=bhi[1] {
            for x in blo[0]..=bhi[0] {
                if p.contains([x as f64, y as f64, z as f64]) {
                    grid.set([x - lo[0], y - lo[1], z - lo[2]], true);
                }
            }
        }
    }
    Cropped { lo, grid }
}

/// Uniformly distributed rotation matrix (Shoemake's quaternion method).
pub(crate) fn uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> [[f64; 3]; 3] {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let u3: f64 = rng.gen();
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (qx, qy) = (a * (tau * u2).sin(), a * (tau * u2).cos());
    let (qz, qw) = (b * (tau * u3).sin(), b * (tau * u3).cos());
    quat_to_matrix(qx, qy, qz, qw)
}

fn quat_to_matrix(x: f64, y: f64, z: f64, w: f64) -> [[f64; 3]; 3] {
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, xz, yz) = (x * y, x * z, y * z);
    let (wx, wy, wz) = (w * x, w * y, w * z);
    [
        [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
        [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
        [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
    ]
}

/// Draws a random affine: optional uniform rotation, per-axis scale and
/// translation drawn i.i.d. from the given closed ranges.
pub fn random_affine<R: Rng + ?Sized>(
    rng: &mut R,
    rotation: bool,
    scale_range: (f64, f64),
    translation_range: (f64, f64),
) -> AffineTransform {
    let rot = if rotation {
        uniform_rotation(rng)
    } else {
        AffineTransform::identity().rotation
    };
    let mut draw = |lo: f64, hi: f64| {
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..hi)
        }
    };
    let scale = [
        draw(scale_range.0, scale_range.1),
        draw(scale_range.0, scale_range.1),
        draw(scale_range.0, scale_range.1),
    ];
    let translation = [
        draw(translation_range.0, translation_range.1),
        draw(translation_range.0, translation_range.1),
        draw(translation_range.0, translation_range.1),
    ];
    AffineTransform {
        rotation: rot,
        scale,
        translation,
    }
}

const PLACEMENT_ATTEMPTS: u32 = 1000;

/// Draws a primitive that fits fully inside the domain: kind uniform over
/// the five shapes, half-extents i.i.d. uniform in `size_range`, uniform
/// rotation, and a translation drawn uniformly over the poses whose AABB
/// stays inside the voxel lattice.
///
/// Errors when no drawn (kind, size, rotation) admits any valid translation
/// after 1000 attempts.
pub fn sample_primitive<R: Rng + ?Sized>(
    rng: &mut R,
    domain: Shape,
    size_range: (f64, f64),
) -> Result<Primitive> {
    if !(size_range.0 > 0.0 && size_range.0 <= size_range.1) {
        return Err(Error::invalid(
            "size_range",
            format!(
                "need 0 < min <= max, got ({}, {})",
                size_range.0, size_range.1
            ),
        ));
    }
    let n = domain.as_array();
    for _ in 0..PLACEMENT_ATTEMPTS {
        let kind = ALL_KINDS[rng.gen_range(0..ALL_KINDS.len())];
        let he = |rng: &mut R| {
            if size_range.0 == size_range.1 {
                size_range.0
            } else {
                rng.gen_range(size_range.0..size_range.1)
            }
        };
        let half_extents = [he(rng), he(rng), he(rng)];
        let rotation = uniform_rotation(rng);
        let mut candidate = Primitive {
            kind,
            half_extents,
            pose: AffineTransform {
                rotation,
                scale: [1.0, 1.0, 1.0],
                translation: [0.0, 0.0, 0.0],
            },
        };
        let r = candidate.aabb_half_extents();
        let mut translation = [0.0; 3];
        let mut ok = true;
        for i in 0..3 {
            let max = (n[i] - 1) as f64 - r[i];
            if r[i] > max {
                ok = false;
                break;
            }
            translation[i] = if r[i] == max {
                r[i]
            } else {
                rng.gen_range(r[i]..max)
            };
        }
        if !ok {
            continue;
        }
        candidate.pose.translation = translation;
        return Ok(candidate);
    }
    Err(Error::PrimitiveDoesNotFit {
        attempts: PLACEMENT_ATTEMPTS,
    })
}
