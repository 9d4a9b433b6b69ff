//! Texture-bearing core regions: the intersection of an independently
//! posed inner primitive with the distance-safe zone of the outer object.
//!
//! Confining texture to this intersection breaks the spatial correlation
//! between an object's internal pattern and its outline: the texture
//! support follows the inner primitive, not the outer boundary, and stays
//! at least `tau_shell + tau_gap` voxels away from any background voxel.

use crate::geometry::{uniform_rotation, AffineTransform, Primitive, ALL_KINDS};
use crate::grid::{Coord, DistanceField};
use crate::rng::Stream;
use rand::Rng;

/// The voxel support for one object's texture, plus the geometry that
/// produced it (recorded so a stored scene is self-describing).
#[derive(Clone, Debug)]
pub struct CoreRegion {
    voxels: Vec<Coord>,
    pub inner_primitive: Primitive,
    pub inner_affine: AffineTransform,
}

impl CoreRegion {
    /// Region voxels in memory order (x fastest).
    pub fn voxels(&self) -> &[Coord] {
        &self.voxels
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }
}

/// Intersects the transformed inner primitive with the safe zone
/// `{x : D(x) > tau_shell + tau_gap}`.
///
/// Membership in the transformed primitive uses the same center-inside rule
/// as voxelization: the voxel center is pulled back through the extra
/// affine, then through the primitive's own pose. The safe-zone test
/// compares exact squared distances against the squared threshold. An empty
/// region is legal; the composer decides whether to resample.
pub fn core_region(
    d: &DistanceField,
    inner: &Primitive,
    a: &AffineTransform,
    tau_shell: u32,
    tau_gap: u32,
) -> CoreRegion {
    let threshold = tau_shell as f64 + tau_gap as f64;
    let threshold_sq = threshold * threshold;
    let shape = d.shape;
    let mut voxels = Vec::new();
    for (idx, c) in shape.iter().enumerate() {
        if d.squared_slice()[idx] > threshold_sq {
            let p = [c[0] as f64, c[1] as f64, c[2] as f64];
            if inner.contains(a.inverse_apply(p)) {
                voxels.push(c);
            }
        }
    }
    CoreRegion {
        voxels,
        inner_primitive: inner.clone(),
        inner_affine: a.clone(),
    }
}

/// Draws an inner primitive and an extra affine for the given outer
/// primitive, with kind and orientation independent of the outer's.
///
/// The inner shape is any of the five kinds, with half-extents drawn
/// per-axis as 0.35..0.85 of the outer's, its own uniform rotation, and a
/// center offset of up to 40% of the outer half-extents. The extra affine
/// rotates uniformly and scales per-axis by 0.8..1.25 about the inner
/// center, then jitters the center by up to 2 voxels per axis. The inner
/// primitive may stick out of the outer object or the domain: only its
/// intersection with the safe zone is ever used.
pub fn sample_inner(rng: &mut Stream, outer: &Primitive) -> (Primitive, AffineTransform) {
    let kind = ALL_KINDS[rng.gen_range(0..ALL_KINDS.len())];
    let mut half_extents = [0.0f64; 3];
    for (h, &outer_h) in half_extents.iter_mut().zip(outer.half_extents.iter()) {
        *h = outer_h * rng.gen_range(0.35..0.85);
    }
    let rotation = uniform_rotation(rng);
    let mut center = [0.0f64; 3];
    for i in 0..3 {
        center[i] = outer.pose.translation[i] + outer.half_extents[i] * rng.gen_range(-0.4..0.4);
    }
    let inner = Primitive {
        kind,
        half_extents,
        pose: AffineTransform {
            rotation,
            scale: [1.0, 1.0, 1.0],
            translation: center,
        },
    };

    let extra_rotation = uniform_rotation(rng);
    let scale = [
        rng.gen_range(0.8..1.25),
        rng.gen_range(0.8..1.25),
        rng.gen_range(0.8..1.25),
    ];
    let jitter = [
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    ];
    // Rotate and scale about the inner center c, then jitter: the map is
    // x -> R(s (x - c)) + c + j, whose translation in R(s x) + t form is
    // t = c + j - R(s c).
    let scaled_center = [
        scale[0] * center[0],
        scale[1] * center[1],
        scale[2] * center[2],
    ];
    let mut rotated = [0.0f64; 3];
    for (i, row) in extra_rotation.iter().enumerate() {
        rotated[i] = row[0] * scaled_center[0] + row[1] * scaled_center[1] + row[2] * scaled_center[2];
    }
    let translation = [
        center[0] + jitter[0] - rotated[0],
        center[1] + jitter[1] - rotated[1],
        center[2] + jitter[2] - rotated[2],
    ];
    let affine = AffineTransform {
        rotation: extra_rotation,
        scale,
        translation,
    };
    (inner, affine)
}
