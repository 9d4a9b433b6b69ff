//! Distance-based strata and constant-intensity shield rendering.
//!
//! A foreground mask is split by its EDT into three strata: a shell hugging
//! the boundary, a buffer gap behind it, and the core zone beyond both.
//! Shell and gap render as exact constants, so every image gradient whose
//! stencil stays inside one object's gap is exactly zero; texture is only
//! ever painted deeper than gap, where no boundary stencil can reach it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DistanceField, Grid3, VolumeGrid};

/// Per-voxel stratum classification.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[repr(u8)]
pub enum Stratum {
    /// Distance 0: outside the object.
    Background = 0,
    /// 0 < D <= tau_shell.
    Shell = 1,
    /// tau_shell < D <= tau_shell + tau_gap.
    Gap = 2,
    /// D > tau_shell + tau_gap.
    CoreZone = 3,
}

pub type StratumLabels = Grid3<Stratum>;

/// Intensity and width parameters for one object's shield.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct ShieldParams {
    /// Shell thickness in voxels (>= 1).
    pub tau_shell: u32,
    /// Gap thickness in voxels. Safe against k^3 stencils when
    /// tau_gap >= k - 1; 2 is the floor for the default 3x3x3 stencil.
    pub tau_gap: u32,
    pub mu_shell: f64,
    pub mu_gap: f64,
    pub mu_bg: f64,
}

impl ShieldParams {
    /// Boundary contrast |mu_shell - mu_bg|.
    pub fn contrast(&self) -> f64 {
        (self.mu_shell - self.mu_bg).abs()
    }
}

/// Rejects gap widths that a k^3 gradient stencil could bridge.
///
/// A stencil centered on a shell voxel reaches (kernel_size - 1) / 2 voxels
/// past it; textured voxels start after the gap, so tau_gap must be at
/// least kernel_size - 1.
pub fn validate_gap_width(tau_gap: u32, kernel_size: u32) -> Result<()> {
    if kernel_size < 3 || kernel_size % 2 == 0 {
        return Err(Error::invalid(
            "kernel_size",
            format!("need an odd kernel >= 3, got {kernel_size}"),
        ));
    }
    let required = kernel_size - 1;
    if tau_gap < required {
        return Err(Error::UnsafeGapWidth {
            tau_gap,
            kernel_size,
            required,
        });
    }
    Ok(())
}

/// Classifies every voxel by distance.
///
/// Thresholds compare on squared distances, which are exact integers, so no
/// voxel is ever misclassified by rounding. `tau_gap` may be 0 (empty gap:
/// the unsafe-override configuration); `tau_shell` must be >= 1.
pub fn partition_regions(
    distance: &DistanceField,
    tau_shell: u32,
    tau_gap: u32,
) -> Result<StratumLabels> {
    if tau_shell < 1 {
        return Err(Error::invalid("tau_shell", "must be >= 1"));
    }
    let shell_sq = (tau_shell as f64) * (tau_shell as f64);
    let outer = (tau_shell + tau_gap) as f64;
    let outer_sq = outer * outer;
    let data = distance
        .squared_slice()
        .iter()
        .map(|&d2| {
            if d2 == 0.0 {
                Stratum::Background
            } else if d2 <= shell_sq {
                Stratum::Shell
            } else if d2 <= outer_sq {
                Stratum::Gap
            } else {
                Stratum::CoreZone
            }
        })
        .collect();
    Ok(StratumLabels::from_vec(distance.shape, data))
}

/// Paints the shell, gap, and background strata as exact constants onto the
/// canvas; core-zone voxels are left untouched for the texture stage.
pub fn render_shield(
    labels: &StratumLabels,
    params: &ShieldParams,
    mut canvas: VolumeGrid,
) -> Result<VolumeGrid> {
    if labels.shape != canvas.shape {
        return Err(Error::ShapeMismatch {
            expected: labels.shape.as_array(),
            got: canvas.shape.as_array(),
        });
    }
    let (shell, gap, bg) = (
        params.mu_shell as f32,
        params.mu_gap as f32,
        params.mu_bg as f32,
    );
    for (v, &label) in canvas.data.iter_mut().zip(labels.data.iter()) {
        match label {
            Stratum::Background => *v = bg,
            Stratum::Shell => *v = shell,
            Stratum::Gap => *v = gap,
            Stratum::CoreZone => {}
        }
    }
    Ok(canvas)
}
