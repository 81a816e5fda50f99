//! Binary model format.
//!
//! ```text
//! "CADM"            4 bytes
//! version           u16 LE
//! header length     u32 LE
//! header            UTF-8 JSON
//! parameters        f64 LE, layer by layer: weight (out x in, row-major), then bias
//! crc32             u32 LE over every preceding byte
//! ```

use std::path::Path;

use cadence_core::net::ModelMeta;
use cadence_core::{AutoencoderModel, KernelFamily};
use serde::{Deserialize, Serialize};

use crate::error::ModelFileError;
use crate::fsutil::write_atomic;

pub const MAGIC: &[u8; 4] = b"CADM";
pub const FORMAT_VERSION: u16 = 1;
const PREFIX_LEN: usize = 4 + 2 + 4;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    widths: Vec<usize>,
    latent_index: usize,
    linear_output: bool,
    kernel: KernelFamily,
    frozen_gamma: Option<f64>,
    meta: ModelMeta,
    param_count: usize,
    checksum: String,
}

pub fn encode_model(model: &AutoencoderModel) -> Vec<u8> {
    let header = Header {
        widths: model.widths(),
        latent_index: model.encoder.len(),
        linear_output: model.linear_output,
        kernel: model.meta.kernel,
        frozen_gamma: model.frozen_gamma,
        meta: model.meta.clone(),
        param_count: model.param_count(),
        checksum: "crc32".into(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(PREFIX_LEN + json.len() + 8 * header.param_count + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for layer in model.layers() {
        for v in layer.weight.as_slice().iter().chain(&layer.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<AutoencoderModel, ModelFileError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(ModelFileError::BadFormat("missing CADM magic".into()));
    }
    if bytes.len() < 6 {
        return Err(ModelFileError::ChecksumMismatch);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(ModelFileError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < PREFIX_LEN + 4 {
        return Err(ModelFileError::ChecksumMismatch);
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(payload) != stored {
        return Err(ModelFileError::ChecksumMismatch);
    }
    let header_len = u32::from_le_bytes(payload[6..10].try_into().unwrap()) as usize;
    let header_end = PREFIX_LEN
        .checked_add(header_len)
        .filter(|&e| e <= payload.len())
        .ok_or_else(|| ModelFileError::BadFormat("header length exceeds file".into()))?;
    let header: Header = serde_json::from_slice(&payload[PREFIX_LEN..header_end])
        .map_err(|e| ModelFileError::BadFormat(format!("header: {e}")))?;
    let body = &payload[header_end..];
    if body.len() != 8 * header.param_count {
        return Err(ModelFileError::BadFormat(format!(
            "expected {} parameters, found {} bytes",
            header.param_count,
            body.len()
        )));
    }
    let mut model = AutoencoderModel::from_widths(&header.widths, header.latent_index, header.meta)
        .map_err(|e| ModelFileError::BadFormat(e.to_string()))?;
    if model.param_count() != header.param_count {
        return Err(ModelFileError::BadFormat("parameter count does not match widths".into()));
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for layer in model.layers_mut() {
        for v in layer.weight.as_mut_slice().iter_mut().chain(layer.bias.iter_mut()) {
            *v = values.next().expect("length checked");
        }
    }
    model.linear_output = header.linear_output;
    model.frozen_gamma = header.frozen_gamma;
    model.meta.kernel = header.kernel;
    Ok(model)
}

pub fn save_model(model: &AutoencoderModel, path: &Path) -> Result<(), ModelFileError> {
    write_atomic(path, &encode_model(model)).map_err(|source| ModelFileError::IoFailure {
        path: path.into(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<AutoencoderModel, ModelFileError> {
    let bytes = std::fs::read(path).map_err(|source| ModelFileError::IoFailure {
        path: path.into(),
        source,
    })?;
    decode_model(&bytes)
}
