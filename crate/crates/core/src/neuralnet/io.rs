//! Binary model file.
//!
//! ```text
//! magic      8 bytes   "HFLSTM01"
//! header_len u32 LE
//! header     JSON      config, feature pipeline, parameter order
//! count      u64 LE    number of scalars
//! values     f64 LE    W, U, b, w_out, b_out, each row-major
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{FeatureSpec, Model};
use super::params::{param_count, ModelParameters, PARAM_ORDER};
use super::ModelConfig;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"HFLSTM01";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    format_version: u32,
    config: ModelConfig,
    features: Option<FeatureSpec>,
    param_order: Vec<String>,
    param_count: usize,
}

pub fn encode_model(model: &Model) -> Result<Vec<u8>> {
    let values = model.params.to_flat();
    let header = ModelHeader {
        format_version: MODEL_FORMAT_VERSION,
        config: model.config.clone(),
        features: model.features,
        param_order: PARAM_ORDER.iter().map(|s| s.to_string()).collect(),
        param_count: values.len(),
    };
    let header = serde_json::to_vec(&header).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut out = Vec::with_capacity(8 + 4 + header.len() + 8 + 8 * values.len());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::validation(format!("model file truncated in {what}")));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

pub fn decode_model(mut bytes: &[u8]) -> Result<Model> {
    if take(&mut bytes, 8, "magic")? != MODEL_MAGIC {
        return Err(Error::validation("not a model file (bad magic)"));
    }
    let header_len =
        u32::from_le_bytes(take(&mut bytes, 4, "header length")?.try_into().expect("4 bytes"));
    let header: ModelHeader = serde_json::from_slice(take(&mut bytes, header_len as usize, "header")?)
        .map_err(|e| Error::validation(format!("bad model header: {e}")))?;
    if header.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::validation(format!(
            "unsupported model format version {}",
            header.format_version
        )));
    }
    if header.param_order != PARAM_ORDER {
        return Err(Error::validation(format!(
            "unexpected parameter order {:?}",
            header.param_order
        )));
    }
    header.config.validate()?;
    let expected = param_count(&header.config);
    let count = u64::from_le_bytes(take(&mut bytes, 8, "count")?.try_into().expect("8 bytes")) as usize;
    if count != expected || header.param_count != expected {
        return Err(Error::validation(format!(
            "model with D={} H={} needs {expected} parameters, file declares {count}",
            header.config.input_dim, header.config.hidden_units
        )));
    }
    if bytes.len() != 8 * count {
        return Err(Error::validation(format!(
            "model file holds {} bytes of parameters, expected {}",
            bytes.len(),
            8 * count
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let params = ModelParameters::from_flat(
        header.config.input_dim,
        header.config.hidden_units,
        &values,
    )?;
    if let Some(features) = header.features {
        if features.dim() != header.config.input_dim {
            return Err(Error::validation(format!(
                "model header names features `{}` ({} columns) but D={}",
                features.selection,
                features.dim(),
                header.config.input_dim
            )));
        }
    }
    let mut model = Model::new(header.config, params)?;
    model.features = header.features;
    Ok(model)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes).map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}
