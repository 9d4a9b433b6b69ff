//! Procedural generator for synthetic 3D volume/annotation pairs whose
//! object boundaries are free of texture-induced gradient artifacts, plus a
//! numerical analyzer that quantifies such artifacts.
//!
//! The generator scatters random geometric primitives through a voxel
//! domain and fills them with mixtures of procedural texture. In its
//! shielded mode, each object is wrapped in constant-intensity shell and
//! gap strata sized from an exact Euclidean distance transform, and texture
//! is confined to a core region strictly inside the gap, so the intensity
//! gradient in a neighborhood of every annotated boundary is exactly the
//! labeled contrast step: zero within the gap, with no texture term
//! leaking across. The naive mode paints texture directly against the
//! background and exists as the aliased baseline the analyzer is meant to
//! expose.
//!
//! The analyzer measures, per boundary voxel, the ratio of the squared
//! annotated contrast step to the expected squared texture gradient under
//! re-synthesis (the boundary saliency ratio), and decomposes measured
//! boundary gradients into geometric and texture-interference terms.
//!
//! Everything is deterministic: a scene is a pure function of (seed,
//! volume index), every sampled intensity is exactly representable in f32,
//! and rendered volumes round-trip bitwise through both supported file
//! formats. Module map:
//!
//! - [`grid`], [`geometry`]: dense voxel grids; primitives, poses,
//!   voxelization.
//! - [`edt`]: exact squared Euclidean distance transform.
//! - [`shielding`]: shell/gap/core stratification and constant-stratum
//!   rendering.
//! - [`decoupling`]: texture-bearing core regions decorrelated from the
//!   outer boundary.
//! - [`texture`]: gradient noise, fibrous/porous bases, Dirichlet-weighted
//!   mixtures.
//! - [`composer`]: scene sampling, deterministic rendering, parallel
//!   batches.
//! - [`analyzer`]: gradient fields, saliency ratios, decomposition and
//!   shield audits.
//! - [`io`], [`config`]: raw + NIfTI-1 persistence with self-sufficient
//!   sidecars; flat key=value configuration.

pub mod analyzer;
pub mod composer;
pub mod config;
pub mod decoupling;
pub mod edt;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod rng;
pub mod shielding;
pub mod texture;
