//! Sample persistence.
//!
//! Primary format: raw little-endian payloads (`<index>_img.f32`,
//! `<index>_lbl.u16`) with a `<index>_meta.json` sidecar carrying the shape,
//! dtypes, storage order, payload checksums, and the complete scene
//! description. Interchange format: single-file NIfTI-1 volumes with the
//! same sidecar. Checksums are always computed over the canonical raw
//! little-endian payload bytes, so they are identical across formats, and
//! the sidecar alone is sufficient to re-render the volumes bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::composer::{render, RenderedSample, SceneSpec};
use crate::config::OutputFormat;
use crate::error::{Error, Result};
use crate::grid::{Grid3, LabelGrid, OccupancyMask, VolumeGrid};

/// Version stamp of the sidecar layout.
pub const SIDECAR_VERSION: u32 = 1;

/// Byte offset of voxel data in the NIfTI-1 files written here: 348-byte
/// header plus the 4-byte empty extension flag.
const NIFTI_VOX_OFFSET: usize = 352;

const NIFTI_DT_FLOAT32: i16 = 16;
const NIFTI_DT_UINT16: i16 = 512;

/// JSON sidecar written next to every sample, for both output formats.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleMeta {
    pub sidecar_version: u32,
    pub index: u64,
    pub shape: [usize; 3],
    /// Storage order of both payloads: x varies fastest, then y, then z.
    pub order: String,
    pub image_dtype: String,
    pub label_dtype: String,
    pub output_format: OutputFormat,
    /// SHA-256 of the canonical little-endian image payload.
    pub image_sha256: String,
    /// SHA-256 of the canonical little-endian label payload.
    pub labels_sha256: String,
    pub scene: SceneSpec,
}

/// Paths produced by [`write_sample`].
#[derive(Clone, Debug)]
pub struct WrittenPaths {
    pub image: PathBuf,
    pub labels: PathBuf,
    pub meta: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Canonical image payload: little-endian f32, x-fastest.
pub fn image_payload(image: &VolumeGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(image.data.len() * 4);
    for v in &image.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Canonical label payload: little-endian u16, x-fastest.
pub fn labels_payload(labels: &LabelGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(labels.data.len() * 2);
    for v in &labels.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn meta_path(dir: &Path, index: u64) -> PathBuf {
    dir.join(format!("{index}_meta.json"))
}

pub fn image_path(dir: &Path, index: u64, format: OutputFormat) -> PathBuf {
    match format {
        OutputFormat::Raw => dir.join(format!("{index}_img.f32")),
        OutputFormat::Nifti => dir.join(format!("{index}_img.nii")),
    }
}

pub fn labels_path(dir: &Path, index: u64, format: OutputFormat) -> PathBuf {
    match format {
        OutputFormat::Raw => dir.join(format!("{index}_lbl.u16")),
        OutputFormat::Nifti => dir.join(format!("{index}_lbl.nii")),
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: format!("write failed: {e}"),
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: format!("read failed: {e}"),
    })
}

/// Minimal single-file NIfTI-1 header: 348 bytes, little-endian, identity
/// affine (sform code 1), no quaternion form, no extensions.
fn nifti_header(shape: [usize; 3], datatype: i16, bitpix: i16) -> Result<Vec<u8>> {
    for (i, &d) in shape.iter().enumerate() {
        if d > i16::MAX as usize {
            return Err(Error::invalid(
                "domain_shape",
                format!("axis {i} extent {d} exceeds the NIfTI-1 dimension limit 32767"),
            ));
        }
    }
    let mut h = vec![0u8; 348];
    let put_i32 = |h: &mut [u8], at: usize, v: i32| h[at..at + 4].copy_from_slice(&v.to_le_bytes());
    let put_i16 = |h: &mut [u8], at: usize, v: i16| h[at..at + 2].copy_from_slice(&v.to_le_bytes());
    let put_f32 = |h: &mut [u8], at: usize, v: f32| h[at..at + 4].copy_from_slice(&v.to_le_bytes());

    put_i32(&mut h, 0, 348); // sizeof_hdr
    h[38] = b'r'; // regular, conventional
    // dim[8]
    put_i16(&mut h, 40, 3);
    put_i16(&mut h, 42, shape[0] as i16);
    put_i16(&mut h, 44, shape[1] as i16);
    put_i16(&mut h, 46, shape[2] as i16);
    for k in 4..8 {
        put_i16(&mut h, 40 + 2 * k, 1);
    }
    put_i16(&mut h, 70, datatype);
    put_i16(&mut h, 72, bitpix);
    // pixdim: qfac then unit spacings
    for k in 0..4 {
        put_f32(&mut h, 76 + 4 * k, 1.0);
    }
    put_f32(&mut h, 108, NIFTI_VOX_OFFSET as f32); // vox_offset
    put_f32(&mut h, 112, 1.0); // scl_slope
    let descrip = b"boundsafe synthetic volume";
    h[148..148 + descrip.len()].copy_from_slice(descrip);
    put_i16(&mut h, 252, 0); // qform_code
    put_i16(&mut h, 254, 1); // sform_code: identity affine
    put_f32(&mut h, 280, 1.0); // srow_x
    put_f32(&mut h, 300, 1.0); // srow_y = e_y
    put_f32(&mut h, 320, 1.0); // srow_z = e_z
    h[344..348].copy_from_slice(b"n+1\0");
    Ok(h)
}

fn write_nifti(path: &Path, shape: [usize; 3], datatype: i16, bitpix: i16, payload: &[u8]) -> Result<()> {
    let mut bytes = nifti_header(shape, datatype, bitpix)?;
    bytes.extend_from_slice(&[0u8; 4]); // no header extensions
    bytes.extend_from_slice(payload);
    write_bytes(path, &bytes)
}

/// Reads the voxel payload of a NIfTI-1 file written by this module,
/// verifying the header fields the reader depends on.
fn read_nifti(path: &Path, shape: [usize; 3], datatype: i16) -> Result<Vec<u8>> {
    let bytes = read_bytes(path)?;
    let fail =|message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < NIFTI_VOX_OFFSET {
        return Err(fail(format!("file too short for a NIfTI-1 header: {} bytes", bytes.len())));
    }
    let get_i32 = |at: usize| i32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let get_i16 = |at: usize| i16::from_le_bytes(bytes[at..at + 2].try_into().unwrap());
    let get_f32 = |at: usize| f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    if get_i32(0) != 348 {
        return Err(fail(format!("sizeof_hdr is {}, expected 348", get_i32(0))));
    }
    if &bytes[344..347] != b"n+1" {
        return Err(fail("magic is not n+1 (single-file NIfTI-1)".to_string()));
    }
    if get_i16(70) != datatype {
        return Err(fail(format!(
            "datatype is {}, expected {datatype}",
            get_i16(70)
        )));
    }
    let dims = [get_i16(42), get_i16(44), get_i16(46)];
    if get_i16(40) != 3 || dims != shape.map(|d| d as i16) {
        return Err(fail(format!("dim is {:?}, expected 3x{shape:?}", dims)));
    }
    let offset = get_f32(108) as usize;
    if offset < NIFTI_VOX_OFFSET || offset > bytes.len() {
        return Err(fail(format!("vox_offset {offset} out of range")));
    }
    Ok(bytes[offset..].to_vec())
}

/// Persists one rendered sample under `dir`, named by its volume index.
/// Both formats get the JSON sidecar; checksums are over the canonical raw
/// payloads regardless of format.
pub fn write_sample(
    sample: &RenderedSample,
    format: OutputFormat,
    dir: &Path,
) -> Result<WrittenPaths> {
    let index = sample.spec.volume_index;
    let shape = sample.spec.domain_shape.as_array();
    let image_bytes = image_payload(&sample.image);
    let label_bytes = labels_payload(&sample.labels);

    let paths = WrittenPaths {
        image: image_path(dir, index, format),
        labels: labels_path(dir, index, format),
        meta: meta_path(dir, index),
    };
    match format {
        OutputFormat::Raw => {
            write_bytes(&paths.image, &image_bytes)?;
            write_bytes(&paths.labels, &label_bytes)?;
        }
        OutputFormat::Nifti => {
            write_nifti(&paths.image, shape, NIFTI_DT_FLOAT32, 32, &image_bytes)?;
            write_nifti(&paths.labels, shape, NIFTI_DT_UINT16, 16, &label_bytes)?;
        }
    }

    let meta = SampleMeta {
        sidecar_version: SIDECAR_VERSION,
        index,
        shape,
        order: "x-fastest".to_string(),
        image_dtype: "float32".to_string(),
        label_dtype: "uint16".to_string(),
        output_format: format,
        image_sha256: sha256_hex(&image_bytes),
        labels_sha256: sha256_hex(&label_bytes),
        scene: sample.spec.clone(),
    };
    let json = serde_json::to_string_pretty(&meta)?;
    write_bytes(&paths.meta, json.as_bytes())?;
    Ok(paths)
}

/// Loads and structurally validates a sidecar.
pub fn load_meta(path: &Path) -> Result<SampleMeta> {
    let bytes = read_bytes(path)?;
    let meta: SampleMeta = serde_json::from_slice(&bytes)?;
    if meta.sidecar_version != SIDECAR_VERSION {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!(
                "unsupported sidecar version {} (expected {SIDECAR_VERSION})",
                meta.sidecar_version
            ),
        });
    }
    if meta.shape != meta.scene.domain_shape.as_array() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!(
                "sidecar shape {:?} disagrees with scene domain {:?}",
                meta.shape,
                meta.scene.domain_shape.as_array()
            ),
        });
    }
    meta.scene.validate()?;
    Ok(meta)
}

fn decode_image(payload: &[u8], meta: &SampleMeta, path: &Path) -> Result<VolumeGrid> {
    let expected = meta.scene.domain_shape.len() * 4;
    if payload.len() != expected {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("image payload is {} bytes, expected {expected}", payload.len()),
        });
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Grid3::from_vec(meta.scene.domain_shape, data))
}

fn decode_labels(payload: &[u8], meta: &SampleMeta, path: &Path) -> Result<LabelGrid> {
    let expected = meta.scene.domain_shape.len() * 2;
    if payload.len() != expected {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("label payload is {} bytes, expected {expected}", payload.len()),
        });
    }
    let data: Vec<u16> = payload
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Grid3::from_vec(meta.scene.domain_shape, data))
}

fn verify_checksum(path: &Path, expected: &str, payload: &[u8]) -> Result<()> {
    let got = sha256_hex(payload);
    if got != expected {
        return Err(Error::ChecksumMismatch {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            got,
        });
    }
    Ok(())
}

/// Reads a persisted sample back, verifying payload checksums against the
/// sidecar. The volumes round-trip bit-identically in both formats.
pub fn read_sample(dir: &Path, index: u64) -> Result<RenderedSample> {
    let meta = load_meta(&meta_path(dir, index))?;
    let shape = meta.shape;
    let format = meta.output_format;
    let ipath = image_path(dir, index, format);
    let lpath = labels_path(dir, index, format);
    let (image_bytes, label_bytes) = match format {
        OutputFormat::Raw => (read_bytes(&ipath)?, read_bytes(&lpath)?),
        OutputFormat::Nifti => (
            read_nifti(&ipath, shape, NIFTI_DT_FLOAT32)?,
            read_nifti(&lpath, shape, NIFTI_DT_UINT16)?,
        ),
    };
    verify_checksum(&ipath, &meta.image_sha256, &image_bytes)?;
    verify_checksum(&lpath, &meta.labels_sha256, &label_bytes)?;
    let image = decode_image(&image_bytes, &meta, &ipath)?;
    let labels = decode_labels(&label_bytes, &meta, &lpath)?;
    let mask_data: Vec<bool> = labels.data.iter().map(|&l| l != 0).collect();
    let binary_mask = OccupancyMask::from_vec(meta.scene.domain_shape, mask_data);
    Ok(RenderedSample {
        spec: meta.scene,
        image,
        labels,
        binary_mask,
    })
}

/// Result of re-rendering a sample from its sidecar alone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RerenderOutcome {
    pub index: u64,
    pub image_matches: bool,
    pub labels_match: bool,
    pub archived_image_sha256: String,
    pub rerendered_image_sha256: String,
    pub archived_labels_sha256: String,
    pub rerendered_labels_sha256: String,
}

impl RerenderOutcome {
    pub fn matches(&self) -> bool {
        self.image_matches && self.labels_match
    }
}

/// Re-renders the scene recorded in a sidecar and compares the payload
/// checksums against the archived ones. No payload files are consulted: the
/// sidecar's scene description alone must reproduce them.
pub fn rerender_check(meta_file: &Path) -> Result<RerenderOutcome> {
    let meta = load_meta(meta_file)?;
    let sample = render(&meta.scene)?;
    let image_sha = sha256_hex(&image_payload(&sample.image));
    let labels_sha = sha256_hex(&labels_payload(&sample.labels));
    Ok(RerenderOutcome {
        index: meta.index,
        image_matches: image_sha == meta.image_sha256,
        labels_match: labels_sha == meta.labels_sha256,
        archived_image_sha256: meta.image_sha256,
        rerendered_image_sha256: image_sha,
        archived_labels_sha256: meta.labels_sha256,
        rerendered_labels_sha256: labels_sha,
    })
}

/// Convenience for loading only the scene description.
pub fn load_scene(meta_file: &Path) -> Result<SceneSpec> {
    Ok(load_meta(meta_file)?.scene)
}
