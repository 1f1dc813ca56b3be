//! Model file: the magic line `MLPMODEL-1`, one line of JSON manifest, then
//! the parameters as little-endian f64. Offsets in the manifest count f64
//! elements from the start of the parameter blob; each layer stores its
//! weights row-major (`outputs x inputs`) followed by its biases.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::mlp::{Dense, Mlp, OutputActivation};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "MLPMODEL-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub inputs: usize,
    pub outputs: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub dims: Vec<usize>,
    pub hidden_activation: String,
    pub output_activation: String,
    pub steps_trained: u64,
    pub param_count: usize,
    pub layers: Vec<LayerEntry>,
    /// Free-form provenance (task, seeds, training config, ...).
    pub meta: BTreeMap<String, String>,
}

pub fn write_model<W: Write>(net: &Mlp, meta: &BTreeMap<String, String>, mut out: W) -> Result<()> {
    let mut offset = 0;
    let layers = net
        .layers()
        .iter()
        .map(|l| {
            let e = LayerEntry {
                inputs: l.inputs,
                outputs: l.outputs,
                weight_offset: offset,
                bias_offset: offset + l.weights.len(),
            };
            offset += l.weights.len() + l.biases.len();
            e
        })
        .collect();
    let manifest = ModelManifest {
        dims: net.dims().to_vec(),
        hidden_activation: "relu".into(),
        output_activation: net.output_activation().name().into(),
        steps_trained: net.steps_trained(),
        param_count: net.param_count(),
        layers,
        meta: meta.clone(),
    };
    let json = serde_json::to_string(&manifest).map_err(|e| Error::format(e.to_string()))?;
    writeln!(out, "{MODEL_MAGIC}")?;
    writeln!(out, "{json}")?;
    for l in net.layers() {
        for v in l.weights.iter().chain(&l.biases) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_model<R: BufRead>(mut input: R) -> Result<(Mlp, ModelManifest)> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    if line.trim_end() != MODEL_MAGIC {
        return Err(Error::format("not an MLPMODEL-1 file"));
    }
    line.clear();
    input.read_line(&mut line)?;
    let manifest: ModelManifest =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::format(format!("model manifest: {e}")))?;
    if manifest.hidden_activation != "relu" {
        return Err(Error::format("only relu hidden layers are supported"));
    }
    let output = OutputActivation::from_name(&manifest.output_activation)?;
    let mut blob = Vec::new();
    input.read_to_end(&mut blob)?;
    if blob.len() != manifest.param_count * 8 {
        return Err(Error::format(format!(
            "parameter blob has {} bytes, manifest declares {} parameters",
            blob.len(),
            manifest.param_count
        )));
    }
    let params: Vec<f64> = blob
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let slice = |start: usize, len: usize| -> Result<Vec<f64>> {
        params
            .get(start..start + len)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| Error::format("layer offset outside parameter blob"))
    };
    let layers = manifest
        .layers
        .iter()
        .map(|e| {
            Ok(Dense {
                inputs: e.inputs,
                outputs: e.outputs,
                weights: slice(e.weight_offset, e.inputs * e.outputs)?,
                biases: slice(e.bias_offset, e.outputs)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let net = Mlp::from_layers(layers, output, manifest.steps_trained)
        .map_err(|e| Error::format(e.to_string()))?;
    if net.dims() != manifest.dims.as_slice() {
        return Err(Error::format("manifest dims disagree with layer entries"));
    }
    Ok((net, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_every_bit() {
        let net = Mlp::he_uniform(&[5, 9, 4, 3], OutputActivation::Sigmoid, 8).unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("task".to_string(), "demod".to_string());
        let mut buf = Vec::new();
        write_model(&net, &meta, &mut buf).unwrap();
        assert!(buf.starts_with(b"MLPMODEL-1\n"));
        let (back, manifest) = read_model(&buf[..]).unwrap();
        assert_eq!(back, net);
        assert_eq!(manifest.meta, meta);
        assert_eq!(manifest.layers[1].weight_offset, 5 * 9 + 9);
    }

    #[test]
    fn rejects_truncated_blob_and_bad_magic() {
        let net = Mlp::he_uniform(&[2, 3, 1], OutputActivation::Sigmoid, 8).unwrap();
        let mut buf = Vec::new();
        write_model(&net, &BTreeMap::new(), &mut buf).unwrap();
        assert!(read_model(&buf[..buf.len() - 8]).is_err());
        assert!(read_model(&b"MLPMODEL-2\n{}\n"[..]).is_err());
    }
}
