//! Generation configuration: a flat key=value file with defaults, parsing
//! diagnostics that carry line numbers, and validation that names the
//! violated rule.

use crate::error::{Error, Result};
use crate::grid::Shape;
use crate::shielding::validate_gap_width;
use crate::texture::BasisKind;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Scene assembly style.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    /// Shell/gap strata around every object; texture confined to the
    /// decoupled core region.
    Shielded,
    /// Texture painted across each object's full mask, directly against the
    /// background.
    Naive,
}

/// Volume persistence format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Raw,
    Nifti,
}

/// Batch generation parameters.
///
/// `texture_amplitude` and `base_frequency_range` default per mode: the
/// shielded profile favors smooth low-frequency texture, while the naive
/// profile uses full-swing high-frequency texture so that boundary texture
/// gradients dominate the contrast step (the aliasing regime the naive
/// baseline exists to exhibit). Use the accessors to get resolved values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub domain_shape: Shape,
    pub count: u64,
    pub global_seed: u64,
    pub mode: RenderMode,
    /// Inclusive bounds on the number of objects per volume.
    pub objects_range: (u32, u32),
    /// Bounds on primitive half-extents, in voxels.
    pub size_range: (f64, f64),
    pub tau_shell: u32,
    pub tau_gap: u32,
    /// Minimum |mu at the outer boundary - mu_bg|.
    pub contrast_min: f64,
    pub dirichlet_concentration: f64,
    pub texture_amplitude: Option<f64>,
    pub base_frequency_range: Option<(f64, f64)>,
    /// Enabled bases, indexed granular/fibrous/porous.
    pub texture_kinds_enabled: [bool; 3],
    pub output_format: OutputFormat,
    pub output_dir: String,
    /// Permit tau_gap below the safe floor (emits a warning instead of an
    /// error).
    pub allow_unsafe_gap: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            domain_shape: Shape::cube(96),
            count: 1,
            global_seed: 0,
            mode: RenderMode::Shielded,
            objects_range: (1, 6),
            size_range: (8.0, 24.0),
            tau_shell: 2,
            tau_gap: 9,
            contrast_min: 0.2,
            dirichlet_concentration: 1.0,
            texture_amplitude: None,
            base_frequency_range: None,
            texture_kinds_enabled: [true; 3],
            output_format: OutputFormat::Raw,
            output_dir: "out".to_string(),
            allow_unsafe_gap: false,
        }
    }
}

impl GenConfig {
    /// Texture amplitude, resolved against the mode default.
    pub fn resolved_amplitude(&self) -> f64 {
        self.texture_amplitude.unwrap_or(match self.mode {
            RenderMode::Shielded => 0.25,
            RenderMode::Naive => 1.0,
        })
    }

    /// First-octave frequency bounds, resolved against the mode default.
    pub fn resolved_frequency_range(&self) -> (f64, f64) {
        self.base_frequency_range.unwrap_or(match self.mode {
            RenderMode::Shielded => (0.02, 0.15),
            RenderMode::Naive => (0.25, 0.5),
        })
    }

    pub fn enabled_kinds(&self) -> impl Iterator<Item = BasisKind> + '_ {
        [BasisKind::Granular, BasisKind::Fibrous, BasisKind::Porous]
            .into_iter()
            .zip(self.texture_kinds_enabled)
            .filter_map(|(k, on)| on.then_some(k))
    }

    /// Checks every invariant; returns human-readable warnings for allowed
    /// but risky settings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.domain_shape.min_dim() < 3 {
            return Err(Error::DomainTooSmall {
                min: 3,
                got: self.domain_shape.as_array(),
            });
        }
        if self.count < 1 {
            return Err(Error::invalid("count", "must be at least 1"));
        }
        let (olo, ohi) = self.objects_range;
        if olo < 1 || olo > ohi {
            return Err(Error::invalid("objects_range", "need 1 <= min <= max"));
        }
        if ohi as usize > u16::MAX as usize {
            return Err(Error::invalid("objects_range", "label volume is 16-bit"));
        }
        let (slo, shi) = self.size_range;
        let cap = self.domain_shape.min_dim() as f64 / 2.0;
        if !(slo > 0.0 && slo <= shi && shi <= cap) {
            return Err(Error::invalid(
                "size_range",
                format!("need 0 < min <= max <= min(domain)/2 = {cap}"),
            ));
        }
        if self.tau_shell < 1 {
            return Err(Error::invalid("tau_shell", "must be at least 1"));
        }
        match validate_gap_width(self.tau_gap, 3) {
            Ok(()) => {}
            Err(e) if self.allow_unsafe_gap => {
                warnings.push(format!(
                    "unsafe gap width accepted by override: {e}; boundary gradients may leak \
                     into textured voxels"
                ));
            }
            Err(e) => return Err(e),
        }
        if !(self.contrast_min.is_finite() && (0.0..1.0).contains(&self.contrast_min)) {
            return Err(Error::invalid("contrast_min", "must lie in [0, 1)"));
        }
        if !(self.dirichlet_concentration.is_finite() && self.dirichlet_concentration > 0.0) {
            return Err(Error::invalid("dirichlet_concentration", "must be positive"));
        }
        if let Some(a) = self.texture_amplitude {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::invalid("texture_amplitude", "must be finite and >= 0"));
            }
        }
        if let Some((flo, fhi)) = self.base_frequency_range {
            if !(flo.is_finite() && flo > 0.0 && flo <= fhi && fhi.is_finite()) {
                return Err(Error::invalid("base_frequency_range", "need 0 < min <= max"));
            }
        }
        if !self.texture_kinds_enabled.iter().any(|&k| k) {
            return Err(Error::invalid(
                "texture_kinds_enabled",
                "at least one texture kind must be enabled",
            ));
        }
        if self.output_dir.is_empty() {
            return Err(Error::invalid("output_dir", "must not be empty"));
        }
        Ok(warnings)
    }
}

/// Parses a flat key=value config file. Unknown keys, malformed values, and
/// duplicate keys are reported with their line number. Blank lines and
/// `#` comments are ignored; missing keys keep their defaults.
pub fn parse_config(text: &str, origin: &str) -> Result<GenConfig> {
    let mut config = GenConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let fail = |message: String| Error::ConfigParse {
            path: origin.into(),
            line: lineno,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| fail("expected `key = value`".into()))?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(fail(format!("duplicate key `{key}`")));
        }
        seen.push(key.to_string());
        match key {
            "domain_shape" => {
                let [nx, ny, nz] = parse_list::<usize, 3>(value).map_err(&fail)?;
                config.domain_shape = Shape::new(nx, ny, nz);
            }
            "count" => {
                // Parse signed so negative counts give a validation message
                // rather than an integer-parse one.
                let v: i64 = value.parse().map_err(|e| fail(format!("count: {e}")))?;
                if v < 1 {
                    return Err(Error::invalid("count", "must be at least 1"));
                }
                config.count = v as u64;
            }
            "global_seed" => config.global_seed = value.parse().map_err(|e| fail(format!("global_seed: {e}")))?,
            "mode" => {
                config.mode = match value {
                    "shielded" => RenderMode::Shielded,
                    "naive" => RenderMode::Naive,
                    other => return Err(fail(format!("mode: expected shielded|naive, got `{other}`"))),
                }
            }
            "objects_range" => {
                let [lo, hi] = parse_list::<u32, 2>(value).map_err(&fail)?;
                config.objects_range = (lo, hi);
            }
            "size_range" => {
                let [lo, hi] = parse_list::<f64, 2>(value).map_err(&fail)?;
                config.size_range = (lo, hi);
            }
            "tau_shell" => config.tau_shell = value.parse().map_err(|e| fail(format!("tau_shell: {e}")))?,
            "tau_gap" => config.tau_gap = value.parse().map_err(|e| fail(format!("tau_gap: {e}")))?,
            "contrast_min" => config.contrast_min = value.parse().map_err(|e| fail(format!("contrast_min: {e}")))?,
            "dirichlet_concentration" => {
                config.dirichlet_concentration =
                    value.parse().map_err(|e| fail(format!("dirichlet_concentration: {e}")))?
            }
            "texture_amplitude" => {
                config.texture_amplitude =
                    Some(value.parse().map_err(|e| fail(format!("texture_amplitude: {e}")))?)
            }
            "base_frequency_range" => {
                let [lo, hi] = parse_list::<f64, 2>(value).map_err(&fail)?;
                config.base_frequency_range = Some((lo, hi));
            }
            "texture_kinds_enabled" => {
                let mut kinds = [false; 3];
                for part in value.split(',') {
                    match part.trim() {
                        "granular" => kinds[0] = true,
                        "fibrous" => kinds[1] = true,
                        "porous" => kinds[2] = true,
                        other => {
                            return Err(fail(format!(
                                "texture_kinds_enabled: unknown kind `{other}`"
                            )))
                        }
                    }
                }
                config.texture_kinds_enabled = kinds;
            }
            "output_format" => {
                config.output_format = match value {
                    "raw" => OutputFormat::Raw,
                    "nifti" => OutputFormat::Nifti,
                    other => return Err(fail(format!("output_format: expected raw|nifti, got `{other}`"))),
                }
            }
            "output_dir" => config.output_dir = value.to_string(),
            "allow_unsafe_gap" => {
                config.allow_unsafe_gap = match value {
                    "true" => true,
                    "false" => false,
                    other => return Err(fail(format!("allow_unsafe_gap: expected true|false, got `{other}`"))),
                }
            }
            other => return Err(fail(format!("unknown key `{other}`"))),
        }
    }
    Ok(config)
}

fn parse_list<T: std::str::FromStr, const N: usize>(value: &str) -> std::result::Result<[T; N], String>
where
    T::Err: std::fmt::Display,
{
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated values, got {}", parts.len()));
    }
    let mut out = Vec::with_capacity(N);
    for p in parts {
        out.push(p.parse::<T>().map_err(|e| format!("`{p}`: {e}"))?);
    }
    Ok(out.try_into().map_err(|_| "length mismatch".to_string())?)
}

/// Reads, parses, and validates a config file; returns the config together
/// with any validation warnings.
pub fn load_config(path: &Path) -> Result<(GenConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path)?;
    let config = parse_config(&text, &path.display().to_string())?;
    let warnings = config.validate()?;
    Ok((config, warnings))
}
