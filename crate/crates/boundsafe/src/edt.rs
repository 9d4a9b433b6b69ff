//! Exact Euclidean distance transform and boundary extraction.
//!
//! Distances run from foreground voxel centers to the nearest background
//! voxel center, measured inside the domain only (the outside world is
//! neither foreground nor background). The transform is the separable
//! lower-envelope-of-parabolas method applied once per axis on squared
//! distances, which is exact: every squared distance is an integer, and
//! integers this small are exact in f64.

use crate::error::{Error, Result};
use crate::grid::{offset, Coord, DistanceField, OccupancyMask, FACE_NEIGHBORS};

const INF: f64 = f64::INFINITY;

/// One-dimensional squared-distance transform (lower envelope of parabolas).
///
/// `f` holds the input costs, `d` receives the transformed costs; `v` and
/// `z` are scratch (parabola apex indices and envelope breakpoints).
fn transform_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;

    let intersect = |p: usize, q: usize| -> f64 {
        // Abscissa where the parabolas rooted at p and q cross. A parabola
        // with infinite offset never wins, so push the crossing to +inf.
        if f[q] == INF {
            INF
        } else if f[p] == INF {
            -INF
        } else {
            let (pf, qf) = (p as f64, q as f64);
            ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
        }
    };

    for q in 1..n {
        let mut s = intersect(v[k], q);
        while k > 0 && s <= z[k] {
            k -= 1;
            s = intersect(v[k], q);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = INF;
    }

    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dx = q as f64 - v[k] as f64;
        d[q] = dx * dx + f[v[k]];
    }
}

/// Squared EDT over a boolean mask, without the background-presence check.
/// Returns INF everywhere when the mask has no background voxel.
pub(crate) fn squared_distances(mask: &OccupancyMask) -> Vec<f64> {
    let shape = mask.shape;
    let (nx, ny, nz) = (shape.nx, shape.ny, shape.nz);
    let mut sq: Vec<f64> = mask
        .data
        .iter()
        .map(|&fg| if fg { INF } else { 0.0 })
        .collect();

    let max_dim = nx.max(ny).max(nz);
    let mut f = vec![0.0; max_dim];
    let mut d = vec![0.0; max_dim];
    let mut v = vec![0usize; max_dim];
    let mut z = vec![0.0; max_dim + 1];

    // X rows.
    for zz in 0..nz {
        for yy in 0..ny {
            let base = (zz * ny + yy) * nx;
            f[..nx].copy_from_slice(&sq[base..base + nx]);
            transform_1d(&f[..nx], &mut d[..nx], &mut v, &mut z);
            sq[base..base + nx].copy_from_slice(&d[..nx]);
        }
    }
    // Y columns.
    for zz in 0..nz {
        for xx in 0..nx {
            for yy in 0..ny {
                f[yy] = sq[(zz * ny + yy) * nx + xx];
            }
            transform_1d(&f[..ny], &mut d[..ny], &mut v, &mut z);
            for yy in 0..ny {
                sq[(zz * ny + yy) * nx + xx] = d[yy];
            }
        }
    }
    // Z columns.
    for yy in 0..ny {
        for xx in 0..nx {
            for zz in 0..nz {
                f[zz] = sq[(zz * ny + yy) * nx + xx];
            }
            transform_1d(&f[..nz], &mut d[..nz], &mut v, &mut z);
            for zz in 0..nz {
                sq[(zz * ny + yy) * nx + xx] = d[zz];
            }
        }
    }
    sq
}

/// Exact Euclidean distance transform of the mask.
///
/// Background voxels get distance 0; foreground voxels get the distance to
/// the nearest background voxel center. Errors when the mask has no
/// background voxel to reference.
pub fn compute_edt(mask: &OccupancyMask) -> Result<DistanceField> {
    if mask.data.iter().all(|&fg| fg) {
        return Err(Error::NoBackgroundReference);
    }
    Ok(DistanceField::from_squared(
        mask.shape,
        squared_distances(mask),
    ))
}

/// Foreground voxels with at least one face-adjacent in-domain background
/// voxel, in memory (x-fastest) order.
///
/// Domain faces are not background: a foreground voxel flush against the
/// volume edge is only a boundary voxel if an in-domain neighbor is empty.
/// This keeps the invariant that boundary voxels have EDT distance exactly 1.
pub fn boundary_voxels(mask: &OccupancyMask) -> Vec<Coord> {
    let shape = mask.shape;
    let mut out = Vec::new();
    for c in shape.iter() {
        if !*mask.get(c) {
            continue;
        }
        let exposed = FACE_NEIGHBORS
            .iter()
            .any(|&d| matches!(offset(shape, c, d), Some(n) if !*mask.get(n)));
        if exposed {
            out.push(c);
        }
    }
    out
}

/// Brute-force oracle: min squared distance from every foreground voxel to
/// every background voxel. Quadratic; for tests and small masks only.
pub fn brute_force_squared(mask: &OccupancyMask) -> Vec<f64> {
    let shape = mask.shape;
    let background: Vec<Coord> = shape.iter().filter(|&c| !*mask.get(c)).collect();
    shape
        .iter()
        .map(|c| {
            if !*mask.get(c) {
                return 0.0;
            }
            let mut best = INF;
            for b in &background {
                let mut d2 = 0.0;
                for i in 0..3 {
                    let d = c[i] as f64 - b[i] as f64;
                    d2 += d * d;
                }
                if d2 < best {
                    best = d2;
                }
            }
            best
        })
        .collect()
}
