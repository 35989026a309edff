//! Model file: one JSON header line `{"layer_dims":[...]}` followed by every
//! parameter as a little-endian `f64`, in [`MlpClassifier::params_flat`] order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::MlpClassifier;
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    layer_dims: Vec<usize>,
}

pub fn write_model<T: Scalar, W: Write>(model: &MlpClassifier<T>, mut w: W) -> Result<()> {
    let header = Header {
        layer_dims: model.layer_dims().to_vec(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for p in model.params_flat() {
        w.write_all(&p.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model<T: Scalar, R: BufRead>(mut r: R) -> Result<MlpClassifier<T>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: Header =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::ModelFormat(format!("bad header: {e}")))?;
    let mut model = MlpClassifier::zeros(&header.layer_dims)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = model.num_params() * 8;
    if bytes.len() != expected {
        return Err(Error::ModelFormat(format!(
            "expected {expected} parameter bytes, found {}",
            bytes.len()
        )));
    }
    let params: Vec<T> = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    model.set_params_flat(&params)?;
    Ok(model)
}
