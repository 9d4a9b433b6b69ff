//! Scene assembly: samples multi-object scene descriptions and renders them
//! into volume/label pairs.
//!
//! A scene is fully described by a serializable [`SceneSpec`]; rendering is a
//! pure function of that description, so a stored spec can be re-rendered
//! bit-identically on any machine. Randomness is organized as one root
//! counter-based stream per volume index, with per-object and per-texture
//! substreams derived by tagged seed mixing; volumes are therefore
//! independent of each other and of how work is scheduled across threads.

use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::config::{GenConfig, RenderMode};
use crate::decoupling::sample_inner;
use crate::edt::compute_edt;
use crate::error::{Error, Result};
use crate::geometry::{sample_primitive, voxelize, voxelize_cropped, AffineTransform, Cropped, Primitive};
use crate::grid::{Coord, DistanceField, Grid3, LabelGrid, OccupancyMask, Shape, VolumeGrid};
use crate::rng::{derive_seed, stream, Stream};
use crate::shielding::{partition_regions, ShieldParams, Stratum};
use crate::texture::{
    sample_weights_masked, BasisKind, MixtureParams, NoiseBasisParams, TextureModel,
};

/// Version stamp written into every scene description.
pub const SPEC_FORMAT_VERSION: u32 = 1;

/// Seed tag offset for per-object substreams: object k uses
/// `derive_seed(scene_seed, OBJECT_SEED_TAG + k)`.
const OBJECT_SEED_TAG: u64 = 1_000;

/// Seed tag for the texture identity substream of an object. Realization r
/// of the same geometry uses `TEXTURE_SEED_TAG + 1 + r`, so fresh texture
/// draws never collide with the recorded one.
const TEXTURE_SEED_TAG: u64 = 40_000;

/// Seed tag offset for the three per-basis noise seeds inside a texture
/// identity.
const BASIS_SEED_TAG: u64 = 10;

/// Fixed spectral ladder shared by all bases.
const FIXED_OCTAVES: u32 = 4;
const FIXED_PERSISTENCE: f64 = 0.5;
const FIXED_LACUNARITY: f64 = 2.0;

/// Pairwise overlap cap used during placement: |A and B| / min(|A|, |B|).
/// Best effort; after `OVERLAP_TRIES` rejected draws the last candidate is
/// kept so sampling always terminates.
const OVERLAP_CAP: f64 = 0.3;
const OVERLAP_TRIES: usize = 10;

/// Retries for an inner primitive whose textured region is non-empty before
/// falling back to a constant core.
const INNER_TRIES: usize = 10;

/// Draws of a constant before the deterministic contrast nudge kicks in.
const CONTRAST_TRIES: usize = 64;

/// One object of a scene: outer primitive, stratum constants, the inner
/// primitive plus extra affine that carve the textured region, and the
/// realized texture mixture.
///
/// `seed` is the object's substream seed; together with
/// `texture_kinds_enabled` it lets an analyzer re-draw fresh texture
/// realizations for the same geometry. `core_fallback_constant` records that
/// every inner-primitive try produced an empty textured region, so the core
/// renders as the constant `mixture.mu_core`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub primitive: Primitive,
    pub shield: ShieldParams,
    pub inner_primitive: Primitive,
    pub inner_affine: AffineTransform,
    pub mixture: MixtureParams,
    pub texture_kinds_enabled: [bool; 3],
    pub seed: u64,
    pub core_fallback_constant: bool,
}

/// Complete, serializable description of one volume.
///
/// All intensity constants are stored as f64 values that are exactly
/// representable in f32 (they were quantized at draw time), so rendering and
/// any later analysis agree bitwise on the painted values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub format_version: u32,
    pub domain_shape: Shape,
    pub global_seed: u64,
    pub volume_index: u64,
    pub mode: RenderMode,
    pub mu_bg: f64,
    pub objects: Vec<ObjectSpec>,
}

impl SceneSpec {
    /// Structural checks a spec must pass before rendering. Deliberately
    /// does not re-check the gap-width rule: re-rendering a stored spec
    /// honors whatever was generated, unsafe gaps included.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != SPEC_FORMAT_VERSION {
            return Err(Error::invalid(
                "format_version",
                format!(
                    "unsupported version {} (expected {})",
                    self.format_version, SPEC_FORMAT_VERSION
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.mu_bg) {
            return Err(Error::invalid("mu_bg", "must lie in [0, 1]"));
        }
        if self.objects.len() > u16::MAX as usize {
            return Err(Error::invalid(
                "objects",
                format!("at most {} objects per scene, got {}", u16::MAX, self.objects.len()),
            ));
        }
        for (k, obj) in self.objects.iter().enumerate() {
            if obj.shield.tau_shell < 1 {
                return Err(Error::invalid(
                    "tau_shell",
                    format!("object {k}: shell thickness must be at least 1"),
                ));
            }
            obj.mixture.validate()?;
        }
        Ok(())
    }
}

/// A rendered volume: intensity image, instance labels (0 = background,
/// k + 1 = object k, later objects win ties), and the union foreground mask.
#[derive(Clone, Debug)]
pub struct RenderedSample {
    pub spec: SceneSpec,
    pub image: VolumeGrid,
    pub labels: LabelGrid,
    pub binary_mask: OccupancyMask,
}

fn quantize_unit(x: f64) -> f64 {
    (x as f32) as f64
}

fn range_draw(rng: &mut Stream, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Quantized draw from [lo, hi) that keeps at least `floor` contrast against
/// `reference`. After `CONTRAST_TRIES` rejected draws, walks deterministically
/// away from the reference; if the requested floor exceeds what the unit
/// interval admits, the farthest endpoint is returned as best effort.
fn quantized_with_floor(rng: &mut Stream, lo: f64, hi: f64, reference: f64, floor: f64) -> f64 {
    for _ in 0..CONTRAST_TRIES {
        let c = quantize_unit(range_draw(rng, lo, hi));
        if (c - reference).abs() >= floor {
            return c;
        }
    }
    let up = reference < 0.5;
    let mut delta = floor;
    loop {
        let target = if up { reference + delta } else { reference - delta };
        if !(0.0..=1.0).contains(&target) {
            return if up { 1.0 } else { 0.0 };
        }
        let q = quantize_unit(target);
        if (q - reference).abs() >= floor {
            return q;
        }
        delta += 1e-6;
    }
}

struct PlacedMask {
    crop: Cropped<bool>,
    count: usize,
}

fn foreground_count(grid: &Grid3<bool>) -> usize {
    grid.data.iter().filter(|&&v| v).count()
}

/// |A and B| / min(|A|, |B|) over the two cropped masks; 0 when either is
/// empty or the windows are disjoint.
fn overlap_fraction(a: &PlacedMask, b: &PlacedMask) -> f64 {
    let denom = a.count.min(b.count);
    if denom == 0 {
        return 0.0;
    }
    let (alo, ana) = (a.crop.lo, a.crop.grid.shape.as_array());
    let (blo, bna) = (b.crop.lo, b.crop.grid.shape.as_array());
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for i in 0..3 {
        lo[i] = alo[i].max(blo[i]);
        let ahigh = alo[i] + ana[i] - 1;
        let bhigh = blo[i] + bna[i] - 1;
        hi[i] = ahigh.min(bhigh);
        if lo[i] > hi[i] {
            return 0.0;
        }
    }
    let mut inter = 0usize;
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let av = *a.crop.grid.get([x - alo[0], y - alo[1], z - alo[2]]);
                let bv = *b.crop.grid.get([x - blo[0], y - blo[1], z - blo[2]]);
                if av && bv {
                    inter += 1;
                }
            }
        }
    }
    inter as f64 / denom as f64
}

/// Occupancy mask plus its distance field, either on the padded crop window
/// (the common case) or on the full domain.
struct ObjectField {
    lo: Coord,
    dist: DistanceField,
}

/// True iff no boundary-plane voxel of the crop window is foreground. In
/// that case every domain voxel outside the window is strictly farther from
/// the foreground than some in-window background voxel, so the cropped
/// distance field equals the full-domain one on the window.
fn crop_self_contained(grid: &Grid3<bool>) -> bool {
    let [nx, ny, nz] = grid.shape.as_array();
    let at = |g: &Grid3<bool>, c: Coord| g.data[g.shape.linear(c)];
    for z in [0, nz - 1] {
        for y in 0..ny {
            for x in 0..nx {
                if at(grid, [x, y, z]) {
                    return false;
                }
            }
        }
    }
    for y in [0, ny - 1] {
        for z in 0..nz {
            for x in 0..nx {
                if at(grid, [x, y, z]) {
                    return false;
                }
            }
        }
    }
    for x in [0, nx - 1] {
        for z in 0..nz {
            for y in 0..ny {
                if at(grid, [x, y, z]) {
                    return false;
                }
            }
        }
    }
    true
}

fn build_field(primitive: &Primitive, crop: Cropped<bool>, domain: Shape) -> Result<ObjectField> {
    if crop_self_contained(&crop.grid) {
        let dist = compute_edt(&crop.grid)?;
        Ok(ObjectField { lo: crop.lo, dist })
    } else {
        let mask = voxelize(primitive, domain);
        let dist = compute_edt(&mask)?;
        Ok(ObjectField { lo: [0, 0, 0], dist })
    }
}

fn to_global(local: Coord, lo: Coord) -> Coord {
    [local[0] + lo[0], local[1] + lo[1], local[2] + lo[2]]
}

/// Textured-region voxels in domain coordinates: deeper than
/// tau_shell + tau_gap inside the object and inside the transformed inner
/// primitive.
fn core_voxels(
    field: &ObjectField,
    inner: &Primitive,
    extra: &AffineTransform,
    tau_shell: u32,
    tau_gap: u32,
) -> Vec<Coord> {
    let threshold = tau_shell as f64 + tau_gap as f64;
    let threshold_sq = threshold * threshold;
    let mut out = Vec::new();
    for (idx, local) in field.dist.shape.iter().enumerate() {
        if field.dist.squared_slice()[idx] > threshold_sq {
            let g = to_global(local, field.lo);
            let p = [g[0] as f64, g[1] as f64, g[2] as f64];
            if inner.contains(extra.inverse_apply(p)) {
                out.push(g);
            }
        }
    }
    out
}

fn has_core_voxel(
    field: &ObjectField,
    inner: &Primitive,
    extra: &AffineTransform,
    tau_shell: u32,
    tau_gap: u32,
) -> bool {
    let threshold = tau_shell as f64 + tau_gap as f64;
    let threshold_sq = threshold * threshold;
    for (idx, local) in field.dist.shape.iter().enumerate() {
        if field.dist.squared_slice()[idx] > threshold_sq {
            let g = to_global(local, field.lo);
            let p = [g[0] as f64, g[1] as f64, g[2] as f64];
            if inner.contains(extra.inverse_apply(p)) {
                return true;
            }
        }
    }
    false
}

pub(crate) fn build_bases(
    texture_seed: u64,
    granular_freq: f64,
    fibrous_freq: f64,
    direction: [f64; 3],
    anisotropy_ratio: f64,
    porous_freq: f64,
    porosity_threshold: f64,
) -> [NoiseBasisParams; 3] {
    let seed = |i: u64| derive_seed(texture_seed, BASIS_SEED_TAG + i);
    let base = |kind, freq, s| NoiseBasisParams {
        kind,
        base_frequency: freq,
        octaves: FIXED_OCTAVES,
        persistence: FIXED_PERSISTENCE,
        lacunarity: FIXED_LACUNARITY,
        direction: None,
        anisotropy_ratio: None,
        porosity_threshold: None,
        seed: s,
    };
    let mut fibrous = base(BasisKind::Fibrous, fibrous_freq, seed(1));
    fibrous.direction = Some(direction);
    fibrous.anisotropy_ratio = Some(anisotropy_ratio);
    let mut porous = base(BasisKind::Porous, porous_freq, seed(2));
    porous.porosity_threshold = Some(porosity_threshold);
    [
        base(BasisKind::Granular, granular_freq, seed(0)),
        fibrous,
        porous,
    ]
}

/// Draws one object from its dedicated substream. The draw order is frozen:
/// placement (with overlap rejection), intensity constants, noise-basis
/// geometry, then the inner primitive. All three bases are drawn regardless
/// of which kinds are enabled so the sequence does not depend on the mask;
/// disabled kinds receive zero mixture weight instead.
fn sample_object(
    object_seed: u64,
    mu_bg: f64,
    accepted: &[PlacedMask],
    config: &GenConfig,
) -> Result<(ObjectSpec, PlacedMask)> {
    let domain = config.domain_shape;
    let mut rng = stream(object_seed);

    let mut chosen: Option<(Primitive, PlacedMask)> = None;
    for _ in 0..OVERLAP_TRIES {
        let candidate = sample_primitive(&mut rng, domain, config.size_range)?;
        let crop = voxelize_cropped(&candidate, domain, 1);
        let count = foreground_count(&crop.grid);
        let placed = PlacedMask { crop, count };
        let ok = accepted
            .iter()
            .all(|p| overlap_fraction(&placed, p) <= OVERLAP_CAP);
        chosen = Some((candidate, placed));
        if ok {
            break;
        }
    }
    let (primitive, placed) = chosen.expect("at least one placement try");

    let floor = config.contrast_min;
    let (shield, mu_core) = match config.mode {
        RenderMode::Shielded => {
            let mu_shell = quantized_with_floor(&mut rng, 0.0, 1.0, mu_bg, floor);
            let mu_gap = quantize_unit(range_draw(&mut rng, 0.0, 1.0));
            let mu_core = quantize_unit(range_draw(&mut rng, 0.0, 1.0));
            (
                ShieldParams {
                    tau_shell: config.tau_shell,
                    tau_gap: config.tau_gap,
                    mu_shell,
                    mu_gap,
                    mu_bg,
                },
                mu_core,
            )
        }
        RenderMode::Naive => {
            let mu_core = quantized_with_floor(&mut rng, 0.35, 0.65, mu_bg, floor);
            (
                ShieldParams {
                    tau_shell: config.tau_shell,
                    tau_gap: config.tau_gap,
                    mu_shell: mu_core,
                    mu_gap: mu_core,
                    mu_bg,
                },
                mu_core,
            )
        }
    };

    let (flo, fhi) = config.resolved_frequency_range();
    let granular_freq = range_draw(&mut rng, flo, fhi);
    let fibrous_freq = range_draw(&mut rng, flo, fhi);
    let direction: [f64; 3] = UnitSphere.sample(&mut rng);
    let anisotropy_ratio = rng.gen_range(2.0..6.0);
    let porous_freq = range_draw(&mut rng, flo, fhi);
    let threshold_span = match config.mode {
        RenderMode::Shielded => 0.2,
        RenderMode::Naive => 0.05,
    };
    let porosity_threshold = rng.gen_range(-threshold_span..threshold_span);

    let texture_seed = derive_seed(object_seed, TEXTURE_SEED_TAG);
    let enabled = config.texture_kinds_enabled;
    let weights = sample_weights_masked(
        &mut stream(texture_seed),
        config.dirichlet_concentration,
        enabled,
    )?;
    let bases = build_bases(
        texture_seed,
        granular_freq,
        fibrous_freq,
        direction,
        anisotropy_ratio,
        porous_freq,
        porosity_threshold,
    );
    let mixture = MixtureParams {
        weights,
        concentration: config.dirichlet_concentration,
        mu_core,
        amplitude: config.resolved_amplitude(),
        bases,
    };
    mixture.validate()?;

    let field = build_field(&primitive, placed.crop.clone(), domain)?;
    let mut inner_pick: Option<(Primitive, AffineTransform, bool)> = None;
    for _ in 0..INNER_TRIES {
        let (inner, extra) = sample_inner(&mut rng, &primitive);
        let nonempty = has_core_voxel(&field, &inner, &extra, config.tau_shell, config.tau_gap);
        inner_pick = Some((inner, extra, !nonempty));
        if nonempty {
            break;
        }
    }
    let (inner_primitive, inner_affine, core_fallback_constant) =
        inner_pick.expect("at least one inner try");

    let spec = ObjectSpec {
        primitive,
        shield,
        inner_primitive,
        inner_affine,
        mixture,
        texture_kinds_enabled: enabled,
        seed: object_seed,
        core_fallback_constant,
    };
    Ok((spec, placed))
}

/// Samples the complete description of volume `volume_index`.
///
/// The scene substream is `derive_seed(global_seed, volume_index)` and draws
/// only the object count and the background intensity; each object then owns
/// `derive_seed(scene_seed, OBJECT_SEED_TAG + k)`. Different volume indices
/// are therefore statistically independent, and the result depends only on
/// `(global_seed, volume_index, config)`.
pub fn sample_scene(global_seed: u64, volume_index: u64, config: &GenConfig) -> Result<SceneSpec> {
    let scene_seed = derive_seed(global_seed, volume_index);
    let mut scene_rng = stream(scene_seed);
    let (olo, ohi) = config.objects_range;
    let n_objects = if olo == ohi {
        olo
    } else {
        scene_rng.gen_range(olo..=ohi)
    };
    let mu_bg = match config.mode {
        RenderMode::Shielded => quantize_unit(range_draw(&mut scene_rng, 0.0, 1.0)),
        RenderMode::Naive => quantize_unit(range_draw(&mut scene_rng, 0.2, 0.8)),
    };

    let mut objects = Vec::with_capacity(n_objects as usize);
    let mut accepted: Vec<PlacedMask> = Vec::with_capacity(n_objects as usize);
    for k in 0..n_objects {
        let object_seed = derive_seed(scene_seed, OBJECT_SEED_TAG + k as u64);
        let (spec, placed) = sample_object(object_seed, mu_bg, &accepted, config)?;
        accepted.push(placed);
        objects.push(spec);
    }

    Ok(SceneSpec {
        format_version: SPEC_FORMAT_VERSION,
        domain_shape: config.domain_shape,
        global_seed,
        volume_index,
        mode: config.mode,
        mu_bg,
        objects,
    })
}

fn paint_object(
    image: &mut VolumeGrid,
    labels: &mut LabelGrid,
    label: u16,
    obj: &ObjectSpec,
    mode: RenderMode,
    domain: Shape,
) -> Result<()> {
    let crop = voxelize_cropped(&obj.primitive, domain, 1);
    match mode {
        RenderMode::Shielded => {
            let field = build_field(&obj.primitive, crop, domain)?;
            let strata = partition_regions(&field.dist, obj.shield.tau_shell, obj.shield.tau_gap)?;
            let shell = obj.shield.mu_shell as f32;
            let gap = obj.shield.mu_gap as f32;
            let core = obj.mixture.mu_core as f32;
            for (idx, local) in strata.shape.iter().enumerate() {
                let v = match strata.data[idx] {
                    Stratum::Background => continue,
                    Stratum::Shell => shell,
                    Stratum::Gap => gap,
                    Stratum::CoreZone => core,
                };
                let g = to_global(local, field.lo);
                image.set(g, v);
                labels.set(g, label);
            }
            if !obj.core_fallback_constant {
                let model = TextureModel::new(&obj.mixture)?;
                let region = core_voxels(
                    &field,
                    &obj.inner_primitive,
                    &obj.inner_affine,
                    obj.shield.tau_shell,
                    obj.shield.tau_gap,
                );
                for g in region {
                    image.set(g, model.value_at_voxel(g));
                }
            }
        }
        RenderMode::Naive => {
            let model = TextureModel::new(&obj.mixture)?;
            for (idx, local) in crop.grid.shape.iter().enumerate() {
                if crop.grid.data[idx] {
                    let g = to_global(local, crop.lo);
                    image.set(g, model.value_at_voxel(g));
                    labels.set(g, label);
                }
            }
        }
    }
    Ok(())
}

/// Renders a scene description into image, instance labels, and foreground
/// mask. Objects are painted in spec order onto a background-filled canvas;
/// only foreground voxels are painted, so earlier objects keep their voxels
/// unless a later object's foreground covers them.
pub fn render(spec: &SceneSpec) -> Result<RenderedSample> {
    spec.validate()?;
    let domain = spec.domain_shape;
    let mut image = VolumeGrid::filled(domain, spec.mu_bg as f32);
    let mut labels = LabelGrid::filled(domain, 0u16);
    for (k, obj) in spec.objects.iter().enumerate() {
        paint_object(&mut image, &mut labels, (k + 1) as u16, obj, spec.mode, domain)?;
    }
    let mask_data: Vec<bool> = labels.data.iter().map(|&l| l != 0).collect();
    let binary_mask = OccupancyMask::from_vec(domain, mask_data);
    Ok(RenderedSample {
        spec: spec.clone(),
        image,
        labels,
        binary_mask,
    })
}

/// Samples and renders volume `index` under `config`.
pub fn generate_sample(config: &GenConfig, index: u64) -> Result<RenderedSample> {
    let spec = sample_scene(config.global_seed, index, config).map_err(|e| e.at_index(index))?;
    render(&spec).map_err(|e| e.at_index(index))
}

/// Re-draws the mixture weights and per-basis noise seeds for one object
/// while keeping its geometry (frequencies, fibrous frame, porosity
/// threshold, spectral ladder, intensity constants) fixed. Realization
/// indices enumerate an unbounded family of fresh textures that never
/// collides with the recorded one.
pub fn realize_mixture(object: &ObjectSpec, realization: u64) -> Result<MixtureParams> {
    let seed = derive_seed(object.seed, TEXTURE_SEED_TAG + 1 + realization);
    let mut trng = stream(seed);
    let weights = sample_weights_masked(
        &mut trng,
        object.mixture.concentration,
        object.texture_kinds_enabled,
    )?;
    let mut mix = object.mixture.clone();
    mix.weights = weights;
    for (i, basis) in mix.bases.iter_mut().enumerate() {
        basis.seed = derive_seed(seed, BASIS_SEED_TAG + i as u64);
    }
    Ok(mix)
}

/// Worker count: `requested` (at least 1), clamped by the optional
/// environment cap.
pub fn effective_parallelism(requested: usize, env_cap: Option<usize>) -> usize {
    let base = requested.max(1);
    match env_cap {
        Some(cap) if cap >= 1 => base.min(cap),
        _ => base,
    }
}

/// Reads the `BOUNDSAFE_THREADS` cap; unset or unparsable means no cap.
pub fn env_thread_cap() -> Option<usize> {
    std::env::var("BOUNDSAFE_THREADS").ok()?.parse().ok()
}

/// Generates `config.count` volumes and hands each `(index, result)` to
/// `consume` on the calling thread. Per-volume failures are delivered
/// through the callback with the index attached, and generation continues.
///
/// With more than one worker the callback sees volumes in completion order;
/// the content of each volume is independent of scheduling, so any
/// per-index output is identical across parallelism levels.
pub fn render_batch<F>(config: &GenConfig, parallelism: usize, mut consume: F) -> Result<()>
where
    F: FnMut(u64, Result<RenderedSample>),
{
    config.validate()?;
    let threads = effective_parallelism(parallelism, env_thread_cap());
    let count = config.count;
    if threads == 1 {
        for index in 0..count {
            consume(index, generate_sample(config, index));
        }
        return Ok(());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid("parallelism", e.to_string()))?;
    let (tx, rx) = std::sync::mpsc::sync_channel::<(u64, Result<RenderedSample>)>(threads * 2);
    std::thread::scope(|scope| {
        scope.spawn(move || {
            pool.install(|| {
                use rayon::prelude::*;
                (0..count).into_par_iter().for_each_with(tx, |tx, index| {
                    let result = generate_sample(config, index);
                    // A closed channel means the consumer is gone; nothing
                    // sensible to do with the sample then.
                    let _ = tx.send((index, result));
                });
            });
        });
        for (index, result) in rx.iter() {
            consume(index, result);
        }
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoupling::core_region;
    use crate::geometry::PrimitiveKind;
    use crate::shielding::render_shield;
    use crate::texture::synthesize_texture;

    fn test_config(mode: RenderMode) -> GenConfig {
        GenConfig {
            domain_shape: Shape::cube(48),
            count: 2,
            global_seed: 11,
            mode,
            objects_range: (1, 3),
            size_range: (6.0, 12.0),
            tau_shell: 2,
            tau_gap: 3,
            allow_unsafe_gap: true,
            ..GenConfig::default()
        }
    }

    fn image_bits(g: &VolumeGrid) -> Vec<u32> {
        g.data.iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn scene_spec_is_deterministic() {
        let config = test_config(RenderMode::Shielded);
        let a = sample_scene(7, 3, &config).unwrap();
        let b = sample_scene(7, 3, &config).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn volume_indices_give_distinct_scenes() {
        let config = test_config(RenderMode::Shielded);
        let a = sample_scene(7, 0, &config).unwrap();
        let b = sample_scene(7, 1, &config).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn objects_range_is_respected() {
        let mut config = test_config(RenderMode::Shielded);
        config.objects_range = (3, 3);
        let spec = sample_scene(5, 0, &config).unwrap();
        assert_eq!(spec.objects.len(), 3);
        let sample = render(&spec).unwrap();
        let max_label = sample.labels.data.iter().copied().max().unwrap();
        assert_eq!(max_label, 3);
    }

    #[test]
    fn intensity_constants_are_f32_exact() {
        for mode in [RenderMode::Shielded, RenderMode::Naive] {
            let config = test_config(mode);
            let spec = sample_scene(13, 0, &config).unwrap();
            let exact = |x: f64| x == (x as f32) as f64;
            assert!(exact(spec.mu_bg));
            for obj in &spec.objects {
                assert!(exact(obj.shield.mu_shell));
                assert!(exact(obj.shield.mu_gap));
                assert!(exact(obj.mixture.mu_core));
            }
        }
    }

    #[test]
    fn contrast_floor_holds() {
        for mode in [RenderMode::Shielded, RenderMode::Naive] {
            let config = test_config(mode);
            for index in 0..10 {
                let spec = sample_scene(99, index, &config).unwrap();
                for obj in &spec.objects {
                    let boundary_mu = match mode {
                        RenderMode::Shielded => obj.shield.mu_shell,
                        RenderMode::Naive => obj.mixture.mu_core,
                    };
                    assert!(
                        (boundary_mu - spec.mu_bg).abs() >= config.contrast_min,
                        "mode {mode:?} index {index}: contrast {} below {}",
                        (boundary_mu - spec.mu_bg).abs(),
                        config.contrast_min
                    );
                }
            }
        }
    }

    #[test]
    fn contrast_nudge_is_deterministic_and_sufficient() {
        // A reference dead center with a floor that is attainable only at
        // the interval edge forces the fallback walk.
        let mut a = stream(1);
        let mut b = stream(1);
        let va = quantized_with_floor(&mut a, 0.49, 0.51, 0.5, 0.4);
        let vb = quantized_with_floor(&mut b, 0.49, 0.51, 0.5, 0.4);
        assert_eq!(va, vb);
        assert!((va - 0.5).abs() >= 0.4);
        assert!((0.0..=1.0).contains(&va));
    }

    #[test]
    fn single_object_render_matches_full_domain_composition() {
        let mut config = test_config(RenderMode::Shielded);
        config.objects_range = (1, 1);
        let spec = sample_scene(21, 0, &config).unwrap();
        let sample = render(&spec).unwrap();
        let obj = &spec.objects[0];

        let mask = voxelize(&obj.primitive, spec.domain_shape);
        let d = compute_edt(&mask).unwrap();
        let strata = partition_regions(&d, obj.shield.tau_shell, obj.shield.tau_gap).unwrap();
        let canvas = VolumeGrid::filled(spec.domain_shape, spec.mu_bg as f32);
        let mut expected = render_shield(&strata, &obj.shield, canvas).unwrap();
        for (i, &s) in strata.data.iter().enumerate() {
            if s == Stratum::CoreZone {
                expected.data[i] = obj.mixture.mu_core as f32;
            }
        }
        if !obj.core_fallback_constant {
            let region = core_region(
                &d,
                &obj.inner_primitive,
                &obj.inner_affine,
                obj.shield.tau_shell,
                obj.shield.tau_gap,
            );
            assert!(!region.voxels().is_empty());
            let sparse = synthesize_texture(region.voxels(), &obj.mixture).unwrap();
            for (c, v) in sparse.iter() {
                expected.set(c, v);
            }
        }
        assert_eq!(image_bits(&sample.image), image_bits(&expected));

        for (i, &m) in mask.data.iter().enumerate() {
            assert_eq!(sample.labels.data[i], if m { 1 } else { 0 });
        }
    }

    #[test]
    fn strata_constants_and_texture_localization() {
        let mut config = test_config(RenderMode::Shielded);
        config.objects_range = (3, 3);
        let spec = sample_scene(31, 0, &config).unwrap();
        let sample = render(&spec).unwrap();

        for (k, obj) in spec.objects.iter().enumerate() {
            let label = (k + 1) as u16;
            let mask = voxelize(&obj.primitive, spec.domain_shape);
            let d = compute_edt(&mask).unwrap();
            let strata = partition_regions(&d, obj.shield.tau_shell, obj.shield.tau_gap).unwrap();
            let region: std::collections::BTreeSet<Coord> = if obj.core_fallback_constant {
                Default::default()
            } else {
                core_region(
                    &d,
                    &obj.inner_primitive,
                    &obj.inner_affine,
                    obj.shield.tau_shell,
                    obj.shield.tau_gap,
                )
                .voxels()
                .iter()
                .copied()
                .collect()
            };
            let mut owned = 0usize;
            for (i, c) in spec.domain_shape.iter().enumerate() {
                if sample.labels.data[i] != label {
                    continue;
                }
                owned += 1;
                let got = sample.image.data[i];
                match strata.data[i] {
                    Stratum::Background => panic!("labeled voxel outside own foreground"),
                    Stratum::Shell => assert_eq!(got.to_bits(), (obj.shield.mu_shell as f32).to_bits()),
                    Stratum::Gap => assert_eq!(got.to_bits(), (obj.shield.mu_gap as f32).to_bits()),
                    Stratum::CoreZone => {
                        if !region.contains(&c) {
                            assert_eq!(got.to_bits(), (obj.mixture.mu_core as f32).to_bits());
                        }
                    }
                }
            }
            assert!(owned > 0, "object {k} fully occluded in test scene");
        }
    }

    fn handcrafted_scene(mode: RenderMode, constant: f64, amplitude: f64) -> SceneSpec {
        let primitive = Primitive {
            kind: PrimitiveKind::Ellipsoid,
            half_extents: [10.0, 10.0, 10.0],
            pose: AffineTransform {
                rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                scale: [1.0, 1.0, 1.0],
                translation: [16.0, 16.0, 16.0],
            },
        };
        let bases = build_bases(42, 0.1, 0.1, [0.0, 0.0, 1.0], 2.0, 0.1, 0.0);
        let object = ObjectSpec {
            primitive: primitive.clone(),
            shield: ShieldParams {
                tau_shell: 2,
                tau_gap: 3,
                mu_shell: constant,
                mu_gap: constant,
                mu_bg: 0.125,
            },
            inner_primitive: primitive,
            inner_affine: AffineTransform {
                rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                scale: [1.0, 1.0, 1.0],
                translation: [0.0, 0.0, 0.0],
            },
            mixture: MixtureParams {
                weights: [1.0, 0.0, 0.0],
                concentration: 1.0,
                mu_core: constant,
                amplitude,
                bases,
            },
            texture_kinds_enabled: [true, true, true],
            seed: 7,
            core_fallback_constant: false,
        };
        SceneSpec {
            format_version: SPEC_FORMAT_VERSION,
            domain_shape: Shape::cube(33),
            global_seed: 0,
            volume_index: 0,
            mode,
            mu_bg: 0.125,
            objects: vec![object],
        }
    }

    #[test]
    fn naive_zero_amplitude_equals_constant_shield() {
        let constant = 0.625;
        let shielded = render(&handcrafted_scene(RenderMode::Shielded, constant, 0.0)).unwrap();
        let naive = render(&handcrafted_scene(RenderMode::Naive, constant, 0.0)).unwrap();
        assert_eq!(image_bits(&shielded.image), image_bits(&naive.image));
        assert_eq!(shielded.labels.data, naive.labels.data);
    }

    #[test]
    fn fallback_spec_renders_constant_core() {
        let mut spec = handcrafted_scene(RenderMode::Shielded, 0.625, 1.0);
        spec.objects[0].core_fallback_constant = true;
        let sample = render(&spec).unwrap();
        let obj = &spec.objects[0];
        let mask = voxelize(&obj.primitive, spec.domain_shape);
        let d = compute_edt(&mask).unwrap();
        let strata = partition_regions(&d, 2, 3).unwrap();
        let mut core_voxels = 0usize;
        for (i, &s) in strata.data.iter().enumerate() {
            if s == Stratum::CoreZone {
                core_voxels += 1;
                assert_eq!(
                    sample.image.data[i].to_bits(),
                    (obj.mixture.mu_core as f32).to_bits()
                );
            }
        }
        assert!(core_voxels > 0);
    }

    #[test]
    fn later_objects_win_label_ties() {
        let mut spec = handcrafted_scene(RenderMode::Naive, 0.375, 0.0);
        let mut second = spec.objects[0].clone();
        second.primitive.pose.translation = [22.0, 16.0, 16.0];
        second.inner_primitive = second.primitive.clone();
        second.mixture.mu_core = 0.875;
        second.shield.mu_shell = 0.875;
        second.shield.mu_gap = 0.875;
        spec.objects.push(second);
        spec.domain_shape = Shape::cube(40);
        let sample = render(&spec).unwrap();

        let mask_a = voxelize(&spec.objects[0].primitive, spec.domain_shape);
        let mask_b = voxelize(&spec.objects[1].primitive, spec.domain_shape);
        let mut overlap = 0usize;
        for (i, (&a, &b)) in mask_a.data.iter().zip(mask_b.data.iter()).enumerate() {
            let expected = if b {
                2
            } else if a {
                1
            } else {
                0
            };
            assert_eq!(sample.labels.data[i], expected);
            if a && b {
                overlap += 1;
                assert_eq!(sample.image.data[i].to_bits(), 0.875f32.to_bits());
            }
        }
        assert!(overlap > 0, "test geometry should overlap");
    }

    #[test]
    fn binary_mask_matches_labels() {
        let config = test_config(RenderMode::Shielded);
        let sample = generate_sample(&config, 0).unwrap();
        for (&m, &l) in sample.binary_mask.data.iter().zip(sample.labels.data.iter()) {
            assert_eq!(m, l != 0);
        }
    }

    #[test]
    fn batch_output_is_independent_of_parallelism() {
        let mut config = test_config(RenderMode::Shielded);
        config.count = 3;
        config.domain_shape = Shape::cube(32);
        let collect = |parallelism: usize| {
            let mut out = std::collections::BTreeMap::new();
            render_batch(&config, parallelism, |index, result| {
                let sample = result.unwrap();
                let json = serde_json::to_string(&sample.spec).unwrap();
                out.insert(index, (image_bits(&sample.image), sample.labels.data, json));
            })
            .unwrap();
            out
        };
        let serial = collect(1);
        let parallel = collect(3);
        assert_eq!(serial.len(), 3);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn zero_count_batch_is_rejected() {
        let mut config = test_config(RenderMode::Shielded);
        config.count = 0;
        let err = render_batch(&config, 1, |_, _| panic!("no samples expected")).unwrap_err();
        assert!(err.to_string().contains("count"));
    }

    #[test]
    fn effective_parallelism_caps() {
        assert_eq!(effective_parallelism(0, None), 1);
        assert_eq!(effective_parallelism(8, None), 8);
        assert_eq!(effective_parallelism(8, Some(2)), 2);
        assert_eq!(effective_parallelism(1, Some(8)), 1);
        assert_eq!(effective_parallelism(4, Some(0)), 4);
    }

    #[test]
    fn realize_mixture_varies_weights_fixes_geometry() {
        let mut config = test_config(RenderMode::Shielded);
        config.objects_range = (1, 1);
        let spec = sample_scene(17, 0, &config).unwrap();
        let obj = &spec.objects[0];
        let r0 = realize_mixture(obj, 0).unwrap();
        let r1 = realize_mixture(obj, 1).unwrap();

        assert_ne!(r0.weights, obj.mixture.weights);
        assert_ne!(r0.weights, r1.weights);
        for mix in [&r0, &r1] {
            let sum: f64 = mix.weights.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            assert_eq!(mix.mu_core, obj.mixture.mu_core);
            assert_eq!(mix.amplitude, obj.mixture.amplitude);
            for (a, b) in mix.bases.iter().zip(obj.mixture.bases.iter()) {
                assert_eq!(a.base_frequency, b.base_frequency);
                assert_eq!(a.direction, b.direction);
                assert_eq!(a.anisotropy_ratio, b.anisotropy_ratio);
                assert_eq!(a.porosity_threshold, b.porosity_threshold);
                assert_ne!(a.seed, b.seed);
            }
        }
        assert_ne!(
            r0.bases.iter().map(|b| b.seed).collect::<Vec<_>>(),
            r1.bases.iter().map(|b| b.seed).collect::<Vec<_>>()
        );
    }

    #[test]
    fn disabled_kinds_get_zero_weight() {
        let mut config = test_config(RenderMode::Shielded);
        config.texture_kinds_enabled = [true, false, false];
        for index in 0..3 {
            let spec = sample_scene(23, index, &config).unwrap();
            for obj in &spec.objects {
                assert_eq!(obj.mixture.weights[0], 1.0);
                assert_eq!(obj.mixture.weights[1], 0.0);
                assert_eq!(obj.mixture.weights[2], 0.0);
                let realized = realize_mixture(obj, 4).unwrap();
                assert_eq!(realized.weights, [1.0, 0.0, 0.0]);
            }
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let config = test_config(RenderMode::Naive);
        let spec = sample_scene(29, 1, &config).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: SceneSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let a = render(&spec).unwrap();
        let b = render(&back).unwrap();
        assert_eq!(image_bits(&a.image), image_bits(&b.image));
    }
}
