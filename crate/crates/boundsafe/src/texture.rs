//! Procedural noise bases and their Dirichlet-weighted spectral mixture.
//!
//! Three biophysical archetypes are available: isotropic granular noise,
//! direction-elongated fibrous noise, and thresholded two-level porous
//! noise. A convex mixture of the three, offset by a core intensity and
//! scaled by an amplitude, produces the scalar texture painted into core
//! regions.

use crate::error::{Error, Result};
use crate::grid::Coord;
use crate::rng::Stream;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

/// Single-octave noise values are divided by this constant.
///
/// The trilinear quintic-fade blend of lattice gradient dot products can
/// exceed 1 in magnitude: maximizing the blend over all points and all
/// per-corner gradient assignments gives a supremum below 1.0542 (grid
/// search plus a Lipschitz slack). Dividing by 17/16 = 1.0625, which is
/// exact in binary, therefore keeps every octave strictly inside [-1, 1]
/// while preserving exact zeros on lattice points.
const NOISE_NORMALIZER: f64 = 1.0625;

/// Seeded classic gradient-lattice noise with quintic-fade interpolation.
///
/// The permutation table is derived from the seed, so evaluation is a pure
/// function of `(seed, point)` and is bit-identical across runs and threads.
#[derive(Clone)]
pub struct Perlin {
    perm: [u8; 512],
}

impl Perlin {
    pub fn new(seed: u64) -> Self {
        let mut table: [u8; 256] = core::array::from_fn(|i| i as u8);
        // Fisher-Yates driven by a splitmix64 sequence: cheap, seedable and
        // independent of any external RNG's stream layout.
        const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut state = seed;
        for i in (1..256usize).rev() {
            state = state.wrapping_add(GOLDEN_GAMMA);
            let j = (crate::rng::mix64(state) % (i as u64 + 1)) as usize;
            table.swap(i, j);
        }
        let mut perm = [0u8; 512];
        for (i, slot) in perm.iter_mut().enumerate() {
            *slot = table[i & 255];
        }
        Perlin { perm }
    }

    /// Single-octave noise at `p`, strictly inside [-1, 1], exactly 0.0 on
    /// integer lattice points.
    pub fn noise(&self, p: [f64; 3]) -> f64 {
        let xs = p[0].floor();
        let ys = p[1].floor();
        let zs = p[2].floor();
        let xi = (xs as i64).rem_euclid(256) as usize;
        let yi = (ys as i64).rem_euclid(256) as usize;
        let zi = (zs as i64).rem_euclid(256) as usize;
        let x = p[0] - xs;
        let y = p[1] - ys;
        let z = p[2] - zs;
        let u = fade(x);
        let v = fade(y);
        let w = fade(z);

        let a = self.perm[xi] as usize + yi;
        let aa = self.perm[a] as usize + zi;
        let ab = self.perm[a + 1] as usize + zi;
        let b = self.perm[xi + 1] as usize + yi;
        let ba = self.perm[b] as usize + zi;
        let bb = self.perm[b + 1] as usize + zi;

        let n000 = grad(self.perm[aa], x, y, z);
        let n100 = grad(self.perm[ba], x - 1.0, y, z);
        let n010 = grad(self.perm[ab], x, y - 1.0, z);
        let n110 = grad(self.perm[bb], x - 1.0, y - 1.0, z);
        let n001 = grad(self.perm[aa + 1], x, y, z - 1.0);
        let n101 = grad(self.perm[ba + 1], x - 1.0, y, z - 1.0);
        let n011 = grad(self.perm[ab + 1], x, y - 1.0, z - 1.0);
        let n111 = grad(self.perm[bb + 1], x - 1.0, y - 1.0, z - 1.0);

        let x00 = lerp(u, n000, n100);
        let x10 = lerp(u, n010, n110);
        let x01 = lerp(u, n001, n101);
        let x11 = lerp(u, n011, n111);
        let y0 = lerp(v, x00, x10);
        let y1 = lerp(v, x01, x11);
        lerp(w, y0, y1) / NOISE_NORMALIZER
    }
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn lerp(t: f64, a: f64, b: f64) -> f64 {
    a + t * (b - a)
}

fn grad(h: u8, x: f64, y: f64, z: f64) -> f64 {
    let h = h & 15;
    let u = if h < 8 { x } else { y };
    let v = if h < 4 {
        y
    } else if h == 12 || h == 14 {
        x
    } else {
        z
    };
    (if h & 1 == 0 { u } else { -u }) + (if h & 2 == 0 { v } else { -v })
}

/// The three biophysical noise archetypes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Granular,
    Fibrous,
    Porous,
}

/// Parameters of one noise basis.
///
/// `direction` and `anisotropy_ratio` apply only to the fibrous kind;
/// `porosity_threshold` only to the porous kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseBasisParams {
    pub kind: BasisKind,
    /// Cycles per voxel of the first octave.
    pub base_frequency: f64,
    pub octaves: u32,
    /// Per-octave amplitude decay, in (0, 1].
    pub persistence: f64,
    /// Per-octave frequency growth, > 1.
    pub lacunarity: f64,
    /// Fiber axis (unit vector). Features elongate along it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
    /// Correlation-length stretch along `direction`, >= 1. At 1 the basis
    /// degenerates to granular noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anisotropy_ratio: Option<f64>,
    /// Two-level cut point in (-1, 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub porosity_threshold: Option<f64>,
    pub seed: u64,
}

impl NoiseBasisParams {
    /// Convenience constructor for an isotropic basis; kind-specific fields
    /// are filled by the callers that need them.
    pub fn granular(seed: u64, base_frequency: f64) -> Self {
        NoiseBasisParams {
            kind: BasisKind::Granular,
            base_frequency,
            octaves: 4,
            persistence: 0.5,
            lacunarity: 2.0,
            direction: None,
            anisotropy_ratio: None,
            porosity_threshold: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_frequency.is_finite() && self.base_frequency > 0.0) {
            return Err(Error::invalid("base_frequency", "must be finite and positive"));
        }
        if self.octaves == 0 {
            return Err(Error::invalid("octaves", "must be at least 1"));
        }
        if !(self.persistence.is_finite() && self.persistence > 0.0 && self.persistence <= 1.0) {
            return Err(Error::invalid("persistence", "must lie in (0, 1]"));
        }
        if !(self.lacunarity.is_finite() && self.lacunarity > 1.0) {
            return Err(Error::invalid("lacunarity", "must be greater than 1"));
        }
        match self.kind {
            BasisKind::Granular => {}
            BasisKind::Fibrous => {
                let dir = self
                    .direction
                    .ok_or_else(|| Error::invalid("direction", "required for the fibrous kind"))?;
                let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
                if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid("direction", "must have unit norm within 1e-9"));
                }
                let ratio = self.anisotropy_ratio.ok_or_else(|| {
                    Error::invalid("anisotropy_ratio", "required for the fibrous kind")
                })?;
                if !(ratio.is_finite() && ratio >= 1.0) {
                    return Err(Error::invalid("anisotropy_ratio", "must be at least 1"));
                }
            }
            BasisKind::Porous => {
                let t = self.porosity_threshold.ok_or_else(|| {
                    Error::invalid("porosity_threshold", "required for the porous kind")
                })?;
                if !(t.is_finite() && t > -1.0 && t < 1.0) {
                    return Err(Error::invalid("porosity_threshold", "must lie in (-1, 1)"));
                }
            }
        }
        Ok(())
    }
}

/// Multi-octave noise: amplitudes decay by `persistence`, frequencies grow
/// by `lacunarity`, and the sum is normalized by the total amplitude, so the
/// result always lies in [-1, 1]. Deterministic in `(point, params.seed)`.
pub fn perlin_fbm(point: [f64; 3], params: &NoiseBasisParams) -> f64 {
    fbm_with(&Perlin::new(params.seed), point, params)
}

/// Same as [`perlin_fbm`] with a prebuilt permutation table, for call sites
/// that evaluate many points per basis.
pub(crate) fn fbm_with(perlin: &Perlin, point: [f64; 3], params: &NoiseBasisParams) -> f64 {
    let mut sum = 0.0;
    let mut total_amplitude = 0.0;
    let mut amplitude = 1.0;
    let mut frequency = params.base_frequency;
    for _ in 0..params.octaves {
        sum += amplitude
            * perlin.noise([point[0] * frequency, point[1] * frequency, point[2] * frequency]);
        total_amplitude += amplitude;
        amplitude *= params.persistence;
        frequency *= params.lacunarity;
    }
    sum / total_amplitude
}

/// A noise basis bound to its permutation table, ready for bulk evaluation.
pub struct Basis {
    params: NoiseBasisParams,
    perlin: Perlin,
}

impl Basis {
    pub fn new(params: NoiseBasisParams) -> Result<Self> {
        params.validate()?;
        let perlin = Perlin::new(params.seed);
        Ok(Basis { params, perlin })
    }

    /// Evaluate the basis at a continuous point.
    ///
    /// Granular: plain multi-octave noise. Fibrous: the coordinate component
    /// along `direction` is divided by `anisotropy_ratio` before evaluation,
    /// which elongates features along the fiber axis. Porous: +1 where the
    /// noise exceeds the threshold, -1 elsewhere.
    pub fn value(&self, p: [f64; 3]) -> f64 {
        match self.params.kind {
            BasisKind::Granular => fbm_with(&self.perlin, p, &self.params),
            BasisKind::Fibrous => {
                let dir = self.params.direction.expect("validated at construction");
                let ratio = self.params.anisotropy_ratio.expect("validated at construction");
                let q = if ratio == 1.0 {
                    p
                } else {
                    let along = dir[0] * p[0] + dir[1] * p[1] + dir[2] * p[2];
                    let shift = along * (1.0 / ratio - 1.0);
                    [p[0] + shift * dir[0], p[1] + shift * dir[1], p[2] + shift * dir[2]]
                };
                fbm_with(&self.perlin, q, &self.params)
            }
            BasisKind::Porous => {
                let threshold = self.params.porosity_threshold.expect("validated at construction");
                if fbm_with(&self.perlin, p, &self.params) > threshold {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn params(&self) -> &NoiseBasisParams {
        &self.params
    }
}

/// Scalar values defined only on an explicit set of voxels.
///
/// Coordinates are held sorted, so membership queries are logarithmic.
/// Querying a voxel outside the region is a bug in the caller and panics in
/// debug builds.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseField {
    coords: Vec<Coord>,
    values: Vec<f32>,
}

impl SparseField {
    pub(crate) fn from_region(region: &[Coord], values: Vec<f32>) -> Self {
        assert_eq!(region.len(), values.len());
        let mut order: Vec<usize> = (0..region.len()).collect();
        order.sort_unstable_by_key(|&i| region[i]);
        let coords: Vec<Coord> = order.iter().map(|&i| region[i]).collect();
        let values: Vec<f32> = order.iter().map(|&i| values[i]).collect();
        debug_assert!(coords.windows(2).all(|w| w[0] < w[1]), "region voxels must be unique");
        SparseField { coords, values }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coord, f32)> + '_ {
        self.coords.iter().copied().zip(self.values.iter().copied())
    }

    /// Value at `coord` if the voxel belongs to the region.
    pub fn get(&self, coord: Coord) -> Option<f32> {
        self.coords.binary_search(&coord).ok().map(|i| self.values[i])
    }

    /// Value at `coord`; the voxel must belong to the region.
    pub fn value_at(&self, coord: Coord) -> f32 {
        match self.get(coord) {
            Some(v) => v,
            None => {
                debug_assert!(false, "queried voxel {coord:?} outside the textured region");
                0.0
            }
        }
    }
}

/// Evaluate one basis over a voxel region.
pub fn basis_field(region: &[Coord], params: &NoiseBasisParams) -> Result<SparseField> {
    let basis = Basis::new(params.clone())?;
    let values = region
        .iter()
        .map(|&c| basis.value([c[0] as f64, c[1] as f64, c[2] as f64]) as f32)
        .collect();
    Ok(SparseField::from_region(region, values))
}

/// A convex mixture of the three bases with a core offset and an amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    /// Convex weights over `bases`; non-negative, summing to 1.
    pub weights: [f64; 3],
    /// Dirichlet concentration the weights were drawn with (recorded so a
    /// stored scene is self-describing).
    pub concentration: f64,
    /// Baseline core intensity in [0, 1].
    pub mu_core: f64,
    /// Scale applied to the mixed noise before the final clamp; >= 0.
    pub amplitude: f64,
    pub bases: [NoiseBasisParams; 3],
}

impl MixtureParams {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights", "must be finite and non-negative"));
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("weights", "must sum to 1 within 1e-12"));
        }
        if !(self.concentration.is_finite() && self.concentration > 0.0) {
            return Err(Error::invalid("concentration", "must be positive"));
        }
        if !(self.mu_core.is_finite() && (0.0..=1.0).contains(&self.mu_core)) {
            return Err(Error::invalid("mu_core", "must lie in [0, 1]"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "must be finite and non-negative"));
        }
        for basis in &self.bases {
            basis.validate()?;
        }
        Ok(())
    }
}

/// Symmetric Dirichlet draw over the 3-simplex via normalized Gamma samples.
pub fn sample_mixture_weights(rng: &mut Stream, concentration: f64) -> Result<[f64; 3]> {
    sample_weights_masked(rng, concentration, [true; 3])
}

/// Dirichlet draw restricted to the enabled components; disabled components
/// get weight exactly 0 and the enabled ones still sum to 1.
pub(crate) fn sample_weights_masked(
    rng: &mut Stream,
    concentration: f64,
    enabled: [bool; 3],
) -> Result<[f64; 3]> {
    if !(concentration.is_finite() && concentration > 0.0) {
        return Err(Error::invalid("concentration", "must be positive"));
    }
    if !enabled.iter().any(|&e| e) {
        return Err(Error::invalid("enabled", "at least one basis must be enabled"));
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::invalid("concentration", format!("gamma setup failed: {e}")))?;
    // Gamma draws can underflow to 0 for small concentrations; redraw until
    // the normalizer is usable.
    for _ in 0..64 {
        let mut draws = [0.0f64; 3];
        for (slot, &on) in draws.iter_mut().zip(enabled.iter()) {
            if on {
                *slot = gamma.sample(rng);
            }
        }
        let sum: f64 = draws.iter().sum();
        if sum.is_finite() && sum > 0.0 {
            return Ok([draws[0] / sum, draws[1] / sum, draws[2] / sum]);
        }
    }
    Err(Error::invalid("concentration", "gamma draws degenerate; concentration too extreme"))
}

/// A mixture bound to its permutation tables, ready for bulk evaluation.
pub struct TextureModel {
    bases: [Basis; 3],
    weights: [f64; 3],
    mu_core: f64,
    amplitude: f64,
}

impl TextureModel {
    pub fn new(mix: &MixtureParams) -> Result<Self> {
        mix.validate()?;
        let [b0, b1, b2] = mix.bases.clone();
        Ok(TextureModel {
            bases: [Basis::new(b0)?, Basis::new(b1)?, Basis::new(b2)?],
            weights: mix.weights,
            mu_core: mix.mu_core,
            amplitude: mix.amplitude,
        })
    }

    /// mu_core + amplitude * sum(w_i * basis_i), clamped to [0, 1].
    ///
    /// Accumulation runs in f64; the result is quantized once to f32 so that
    /// stored volumes and recomputed values agree bitwise.
    pub fn value(&self, p: [f64; 3]) -> f32 {
        let mut acc = self.mu_core;
        if self.amplitude != 0.0 {
            for (basis, &w) in self.bases.iter().zip(self.weights.iter()) {
                if w != 0.0 {
                    acc += self.amplitude * w * basis.value(p);
                }
            }
        }
        acc.clamp(0.0, 1.0) as f32
    }

    pub fn value_at_voxel(&self, c: Coord) -> f32 {
        self.value([c[0] as f64, c[1] as f64, c[2] as f64])
    }
}

/// Evaluate the full mixture over a voxel region.
pub fn synthesize_texture(region: &[Coord], mix: &MixtureParams) -> Result<SparseField> {
    let model = TextureModel::new(mix)?;
    let values = region.iter().map(|&c| model.value_at_voxel(c)).collect();
    Ok(SparseField::from_region(region, values))
}
