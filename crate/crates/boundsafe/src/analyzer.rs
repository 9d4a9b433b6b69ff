//! Boundary-aliasing analysis: discrete gradients, the two-term gradient
//! decomposition at annotation boundaries, and the boundary saliency ratio
//! (BSR) map.
//!
//! All arithmetic runs in f64 on values promoted from the rendered f32
//! volumes. Because every painted constant and texture sample is exactly
//! representable in f32, re-evaluating a field through the same pipeline
//! reproduces the rendered values bitwise, which is what makes the exactness
//! guarantees below testable at zero tolerance.

use serde::{Deserialize, Serialize};

use crate::composer::{realize_mixture, ObjectSpec, RenderedSample};
use crate::config::RenderMode;
use crate::decoupling::core_region;
use crate::edt::{boundary_voxels, compute_edt};
use crate::error::{Error, Result};
use crate::geometry::voxelize;
use crate::grid::{Coord, Grid3, OccupancyMask, Shape, VolumeGrid};
use crate::shielding::Stratum;
use crate::texture::TextureModel;

/// Regularizer added to the BSR denominator.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Monte Carlo realizations used to estimate the expected texture-gradient
/// energy in the BSR denominator.
pub const DEFAULT_MC_REALIZATIONS: u32 = 16;

/// Dense per-voxel 3-vectors, x-fastest like every other grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub shape: Shape,
    pub data: Vec<[f64; 3]>,
}

impl VectorField {
    pub fn get(&self, c: Coord) -> [f64; 3] {
        self.data[self.shape.linear(c)]
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Discrete spatial gradient at unit voxel spacing: central differences
/// (f(x+1) - f(x-1))/2 on the interior, one-sided differences on the domain
/// faces. Exact for fields that are linear in the coordinates.
pub fn spatial_gradient(v: &VolumeGrid) -> Result<VectorField> {
    let [nx, ny, nz] = v.shape.as_array();
    if nx < 3 || ny < 3 || nz < 3 {
        return Err(Error::invalid(
            "volume",
            format!("every dimension must be at least 3, got {nx}x{ny}x{nz}"),
        ));
    }
    let at = |c: Coord| f64::from(*v.get(c));
    let mut data = Vec::with_capacity(v.shape.len());
    let n = [nx, ny, nz];
    for c in v.shape.iter() {
        let mut g = [0.0; 3];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut hi = c;
            let mut lo = c;
            *gi = if c[i] == 0 {
                hi[i] = 1;
                at(hi) - at(c)
            } else if c[i] == n[i] - 1 {
                lo[i] = n[i] - 2;
                at(c) - at(lo)
            } else {
                hi[i] += 1;
                lo[i] -= 1;
                (at(hi) - at(lo)) / 2.0
            };
        }
        data.push(g);
    }
    Ok(VectorField { shape: v.shape, data })
}

/// Central difference of the realized image at `c`; `None` when the 6-voxel
/// stencil leaves the domain.
fn image_gradient_interior(image: &VolumeGrid, c: Coord) -> Option<[f64; 3]> {
    let n = image.shape.as_array();
    let mut g = [0.0; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        if c[i] == 0 || c[i] == n[i] - 1 {
            return None;
        }
        let mut hi = c;
        let mut lo = c;
        hi[i] += 1;
        lo[i] -= 1;
        *gi = (f64::from(*image.get(hi)) - f64::from(*image.get(lo))) / 2.0;
    }
    Some(g)
}

/// Central difference of a binary mask with one-sided fallback at the faces.
/// Interior components lie in {-1/2, 0, 1/2}.
fn mask_gradient(mask: &OccupancyMask, c: Coord) -> [f64; 3] {
    let n = mask.shape.as_array();
    let at = |c: Coord| if *mask.get(c) { 1.0 } else { 0.0 };
    let mut g = [0.0; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut hi = c;
        let mut lo = c;
        *gi = if c[i] == 0 {
            hi[i] = 1;
            at(hi) - at(c)
        } else if c[i] == n[i] - 1 {
            lo[i] = n[i] - 2;
            at(c) - at(lo)
        } else {
            hi[i] += 1;
            lo[i] -= 1;
            (at(hi) - at(lo)) / 2.0
        };
    }
    g
}

/// The per-object foreground field T: the constant shell intensity for
/// shielded samples, the object's realized texture for naive samples.
/// Evaluated in continuous coordinates so stencils mayread outside the
/// domain lattice.
enum ForegroundField {
    Constant(f64),
    Texture(TextureModel),
}

impl ForegroundField {
    fn for_object(mode: RenderMode, obj: &ObjectSpec) -> Result<ForegroundField> {
        Ok(match mode {
            RenderMode::Shielded => ForegroundField::Constant(obj.shield.mu_shell),
            RenderMode::Naive => ForegroundField::Texture(TextureModel::new(&obj.mixture)?),
        })
    }

    fn at(&self, p: [f64; 3]) -> f64 {
        match self {
            ForegroundField::Constant(c) => *c,
            ForegroundField::Texture(m) => f64::from(m.value(p)),
        }
    }

    fn at_voxel(&self, c: Coord) -> f64 {
        self.at([c[0] as f64, c[1] as f64, c[2] as f64])
    }

    /// Central-difference gradient, optionally with an affine intensity
    /// transform applied to the field values first. The stencil may extend
    /// past the lattice; the field is defined everywhere.
    fn gradient(&self, c: Coord, scale: f64, shift: f64) -> [f64; 3] {
        match self {
            ForegroundField::Constant(_) => [0.0; 3],
            ForegroundField::Texture(_) => {
                let p = [c[0] as f64, c[1] as f64, c[2] as f64];
                let mut g = [0.0; 3];
                for (i, gi) in g.iter_mut().enumerate() {
                    let mut hi = p;
                    let mut lo = p;
                    hi[i] += 1.0;
                    lo[i] -= 1.0;
                    let vh = self.at(hi) * scale + shift;
                    let vl = self.at(lo) * scale + shift;
                    *gi = (vh - vl) / 2.0;
                }
                g
            }
        }
    }
}

/// Residual statistics of the boundary gradient decomposition for one
/// object: at each usable boundary voxel of the object's own mask, the
/// measured image gradient is compared against geometric term plus texture
/// interference term.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub object_index: usize,
    /// |mu at the object boundary - mu_bg| as recorded in the scene
    /// description.
    pub nominal_contrast: f64,
    pub boundary_total: usize,
    pub evaluated: usize,
    /// Boundary voxels whose value or stencil is overwritten by another
    /// object.
    pub skipped_occluded: usize,
    /// Boundary voxels whose central-difference stencil leaves the domain.
    pub skipped_clipped: usize,
    pub residuals: Vec<f64>,
    pub geometric_norms: Vec<f64>,
    pub interference_norms: Vec<f64>,
    pub notice: Option<String>,
}

/// Checks the two-term decomposition of the image gradient at the boundary
/// of object `object_index` (zero-based).
///
/// At each boundary voxel x_b of the object's own mask M, with T the
/// object's foreground field and B the constant background:
/// geometric = (T(x_b) - B(x_b)) * grad M, interference = M(x_b) * grad T,
/// both with raw central differences; the report records
/// ||measured - geometric - interference|| per voxel. For shielded samples
/// the interference term is exactly zero because T is constant.
pub fn decomposition_check(
    sample: &RenderedSample,
    object_index: usize,
) -> Result<DecompositionReport> {
    let spec = &sample.spec;
    let Some(obj) = spec.objects.get(object_index) else {
        return Err(Error::invalid(
            "object_index",
            format!(
                "scene has {} objects, index {object_index} out of range",
                spec.objects.len()
            ),
        ));
    };
    let own_label = (object_index + 1) as u16;
    let mask = voxelize(&obj.primitive, spec.domain_shape);
    let boundary = boundary_voxels(&mask);
    let field = ForegroundField::for_object(spec.mode, obj)?;
    let background = spec.mu_bg;

    let mut report = DecompositionReport {
        object_index,
        nominal_contrast: obj.shield.contrast(),
        boundary_total: boundary.len(),
        evaluated: 0,
        skipped_occluded: 0,
        skipped_clipped: 0,
        residuals: Vec::new(),
        geometric_norms: Vec::new(),
        interference_norms: Vec::new(),
        notice: None,
    };

    let n = spec.domain_shape.as_array();
    'voxels: for &c in &boundary {
        let Some(measured) = image_gradient_interior(&sample.image, c) else {
            report.skipped_clipped += 1;
            continue;
        };
        if *sample.labels.get(c) != own_label {
            report.skipped_occluded += 1;
            continue;
        }
        for i in 0..3 {
            for d in [-1isize, 1] {
                let mut nb = c;
                nb[i] = (nb[i] as isize + d) as usize;
                debug_assert!(nb[i] < n[i], "interior stencil stays in domain");
                let l = *sample.labels.get(nb);
                if l != 0 && l != own_label {
                    report.skipped_occluded += 1;
                    continue 'voxels;
                }
            }
        }

        let step = field.at_voxel(c) - background;
        let gm = mask_gradient(&mask, c);
        let geometric = [step * gm[0], step * gm[1], step * gm[2]];
        let interference = field.gradient(c, 1.0, 0.0);
        let residual = norm3([
            measured[0] - geometric[0] - interference[0],
            measured[1] - geometric[1] - interference[1],
            measured[2] - geometric[2] - interference[2],
        ]);
        report.evaluated += 1;
        report.residuals.push(residual);
        report.geometric_norms.push(norm3(geometric));
        report.interference_norms.push(norm3(interference));
    }

    if report.evaluated == 0 {
        report.notice = Some(format!(
            "object {object_index} has no usable boundary voxels \
             ({} total, {} occluded, {} clipped); nothing to evaluate",
            report.boundary_total, report.skipped_occluded, report.skipped_clipped
        ));
    }
    Ok(report)
}

/// One row of the aliasing report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryVoxelStat {
    pub coord: Coord,
    pub bsr: f64,
    pub geometric_term: [f64; 3],
    pub interference_norm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AliasingSummary {
    pub bsr_min: f64,
    pub bsr_median: f64,
    pub bsr_p05: f64,
    /// Fraction of boundary voxels with BSR < 1.
    pub frac_aliased: f64,
    /// Shielded samples only: max image-gradient norm over voxels whose full
    /// 3x3x3 neighborhood lies in the same object's gap stratum.
    pub gap_gradient_max: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AliasingReport {
    pub mode: RenderMode,
    pub epsilon: f64,
    pub mc_realizations: u32,
    pub per_boundary_voxel: Vec<BoundaryVoxelStat>,
    pub summary: AliasingSummary,
    pub notice: Option<String>,
}

/// Linear-interpolation quantile of a sorted slice (0 on empty input).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Boundary saliency ratio at every boundary voxel of the union foreground
/// mask:
///
///   BSR(x_b) = (X(x_b) - mu_bg)^2 / (E_z ||grad T(x_b; z)||^2 + epsilon)
///
/// The numerator uses the realized boundary intensity against the
/// background constant. The denominator expectation is estimated by
/// re-synthesizing the owning object's texture under `mc_realizations`
/// fresh texture draws (weights and noise seeds resampled, geometry fixed).
/// For shielded samples the field at and around the boundary is the
/// constant shell, so the denominator is exactly epsilon.
pub fn bsr_map(
    sample: &RenderedSample,
    epsilon: f64,
    mc_realizations: u32,
) -> Result<AliasingReport> {
    bsr_map_transformed(sample, epsilon, mc_realizations, 0.0, 1.0)
}

/// [`bsr_map`] over the affinely transformed image scale*X + shift, with all
/// transformed values computed in f64 (nothing is re-quantized to f32). The
/// BSR is invariant under shift, and invariant under scaling when epsilon is
/// scaled by scale^2 alongside.
pub fn bsr_map_transformed(
    sample: &RenderedSample,
    epsilon: f64,
    mc_realizations: u32,
    shift: f64,
    scale: f64,
) -> Result<AliasingReport> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    if mc_realizations < 1 {
        return Err(Error::invalid("mc_realizations", "must be at least 1"));
    }
    let spec = &sample.spec;
    let boundary = boundary_voxels(&sample.binary_mask);

    let mut report = AliasingReport {
        mode: spec.mode,
        epsilon,
        mc_realizations,
        per_boundary_voxel: Vec::with_capacity(boundary.len()),
        summary: AliasingSummary {
            bsr_min: 0.0,
            bsr_median: 0.0,
            bsr_p05: 0.0,
            frac_aliased: 0.0,
            gap_gradient_max: None,
        },
        notice: None,
    };
    if boundary.is_empty() {
        report.notice = Some("sample has no boundary voxels; empty report".to_string());
        if spec.mode == RenderMode::Shielded {
            report.summary.gap_gradient_max = Some(0.0);
        }
        return Ok(report);
    }

    // Realized texture field per object (interference diagnostic) and the
    // fresh-realization fields for the denominator, built lazily for
    // objects that actually own boundary voxels.
    let n_objects = spec.objects.len();
    let mut realized: Vec<Option<ForegroundField>> = (0..n_objects).map(|_| None).collect();
    let mut fresh: Vec<Option<Vec<ForegroundField>>> = (0..n_objects).map(|_| None).collect();

    let mu_bg_t = spec.mu_bg * scale + shift;
    for &c in &boundary {
        let label = *sample.labels.get(c);
        debug_assert!(label != 0, "boundary voxels are foreground");
        let k = (label - 1) as usize;
        let obj = &spec.objects[k];

        let x_t = f64::from(*sample.image.get(c)) * scale + shift;
        let step = x_t - mu_bg_t;
        let numerator = step * step;

        let denominator_mean = match spec.mode {
            RenderMode::Shielded => 0.0,
            RenderMode::Naive => {
                let fields = match &mut fresh[k] {
                    Some(f) => f,
                    slot => {
                        let mut f = Vec::with_capacity(mc_realizations as usize);
                        for r in 0..mc_realizations {
                            let mix = realize_mixture(obj, r as u64)?;
                            f.push(ForegroundField::Texture(TextureModel::new(&mix)?));
                        }
                        slot.insert(f)
                    }
                };
                let mut acc = 0.0;
                for field in fields.iter() {
                    let g = field.gradient(c, scale, shift);
                    acc += g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
                }
                acc / mc_realizations as f64
            }
        };
        let bsr = numerator / (denominator_mean + epsilon);

        let gm = mask_gradient(&sample.binary_mask, c);
        let geometric_term = [step * gm[0], step * gm[1], step * gm[2]];
        let interference_norm = {
            let field = match &mut realized[k] {
                Some(f) => f,
                slot => slot.insert(ForegroundField::for_object(spec.mode, obj)?),
            };
            norm3(field.gradient(c, scale, shift))
        };

        report.per_boundary_voxel.push(BoundaryVoxelStat {
            coord: c,
            bsr,
            geometric_term,
            interference_norm,
        });
    }

    let mut values: Vec<f64> = report.per_boundary_voxel.iter().map(|s| s.bsr).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("BSR values are finite"));
    let aliased = values.iter().filter(|&&v| v < 1.0).count();
    report.summary.bsr_min = values[0];
    report.summary.bsr_median = quantile(&values, 0.5);
    report.summary.bsr_p05 = quantile(&values, 0.05);
    report.summary.frac_aliased = aliased as f64 / values.len() as f64;
    if spec.mode == RenderMode::Shielded {
        report.summary.gap_gradient_max = Some(shield_audit(sample)?.gap_gradient_max);
    }
    Ok(report)
}

/// Structural audit of a shielded sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShieldAudit {
    /// Voxels whose full 3x3x3 neighborhood lies in the same object's gap.
    pub eligible_gap_voxels: usize,
    /// Max central-difference gradient norm of the image over those voxels.
    pub gap_gradient_max: f64,
    /// Boundary voxels across all objects' own masks.
    pub boundary_voxels: usize,
    /// Boundary voxels whose 3x3x3 stencil reaches the same object's
    /// textured core region.
    pub boundary_stencils_touching_core: usize,
}

/// Verifies the structural shielding guarantees on a rendered sample: the
/// image is constant on gap interiors (gradient exactly zero wherever a full
/// 3x3x3 neighborhood is same-object gap), and no boundary voxel's 3x3x3
/// stencil reaches the object's own textured core.
pub fn shield_audit(sample: &RenderedSample) -> Result<ShieldAudit> {
    let spec = &sample.spec;
    if spec.mode != RenderMode::Shielded {
        return Err(Error::invalid("mode", "shield audit applies to shielded samples"));
    }
    let domain = spec.domain_shape;
    let n = domain.as_array();

    let mut audit = ShieldAudit {
        eligible_gap_voxels: 0,
        gap_gradient_max: 0.0,
        boundary_voxels: 0,
        boundary_stencils_touching_core: 0,
    };

    for (k, obj) in spec.objects.iter().enumerate() {
        let label = (k + 1) as u16;
        let mask = voxelize(&obj.primitive, domain);
        let d = compute_edt(&mask)?;
        let strata =
            crate::shielding::partition_regions(&d, obj.shield.tau_shell, obj.shield.tau_gap)?;

        let core: Grid3<bool> = {
            let mut g = Grid3::filled(domain, false);
            if !obj.core_fallback_constant {
                let region = core_region(
                    &d,
                    &obj.inner_primitive,
                    &obj.inner_affine,
                    obj.shield.tau_shell,
                    obj.shield.tau_gap,
                );
                for &c in region.voxels() {
                    g.set(c, true);
                }
            }
            g
        };

        // Gap interiors: every voxel of the full 3x3x3 neighborhood must be
        // this object's gap and still owned by it in the composite labels.
        for (idx, c) in domain.iter().enumerate() {
            if strata.data[idx] != Stratum::Gap || sample.labels.data[idx] != label {
                continue;
            }
            if !full_stencil(c, n, |nb| {
                *sample.labels.get(nb) == label && *strata.get(nb) == Stratum::Gap
            }) {
                continue;
            }
            audit.eligible_gap_voxels += 1;
            let g = image_gradient_interior(&sample.image, c)
                .expect("full-stencil voxels are interior");
            let norm = norm3(g);
            if norm > audit.gap_gradient_max {
                audit.gap_gradient_max = norm;
            }
        }

        for b in boundary_voxels(&mask) {
            audit.boundary_voxels += 1;
            let touches = !full_stencil(b, n, |nb| !*core.get(nb));
            if touches {
                audit.boundary_stencils_touching_core += 1;
            }
        }
    }
    Ok(audit)
}

/// True iff `pred` holds on every in-domain voxel of the 3x3x3 neighborhood
/// and the whole neighborhood is in-domain.
fn full_stencil(c: Coord, n: [usize; 3], pred: impl Fn(Coord) -> bool) -> bool {
    for i in 0..3 {
        if c[i] == 0 || c[i] + 1 >= n[i] {
            return false;
        }
    }
    for dz in -1isize..=1 {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let nb = [
                    (c[0] as isize + dx) as usize,
                    (c[1] as isize + dy) as usize,
                    (c[2] as isize + dz) as usize,
                ];
                if !pred(nb) {
                    return false;
                }
            }
        }
    }
    true
}
