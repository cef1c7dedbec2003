//! JSON parameter snapshots: named tensors with shape headers.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Dense, Mlp, MlpParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tensors: Vec<TensorRecord>,
}

impl Snapshot {
    pub fn from_params(params: &MlpParams) -> Self {
        let tensors = params
            .tensor_shapes()
            .into_iter()
            .zip(params.tensors())
            .map(|((name, shape), data)| TensorRecord {
                name,
                shape,
                data: data.to_vec(),
            })
            .collect();
        Self { tensors }
    }

    pub fn to_params(&self) -> Result<MlpParams> {
        let mut policy = Vec::new();
        let mut value = Vec::new();
        let mut iter = self.tensors.iter();
        while let Some(w) = iter.next() {
            let b = iter
                .next()
                .ok_or_else(|| Error::Snapshot(format!("{} has no bias", w.name)))?;
            let (net, layer) = parse_name(&w.name, "weight")?;
            if parse_name(&b.name, "bias")? != (net, layer) {
                return Err(Error::Snapshot(format!("{} is not paired with {}", b.name, w.name)));
            }
            let [rows, cols] = w.shape[..] else {
                return Err(Error::Snapshot(format!("{} must be 2-d", w.name)));
            };
            if b.shape != [rows] || w.data.len() != rows * cols || b.data.len() != rows {
                return Err(Error::Snapshot(format!("bad shape header for {}", w.name)));
            }
            let dense = Dense {
                weight: Array2::from_shape_vec((rows, cols), w.data.clone())
                    .map_err(|e| Error::Snapshot(e.to_string()))?,
                bias: Array1::from(b.data.clone()),
            };
            let target = if net == "policy" { &mut policy } else { &mut value };
            if layer != target.len() {
                return Err(Error::Snapshot(format!("layer {} out of order", w.name)));
            }
            target.push(dense);
        }
        if policy.is_empty() || value.is_empty() {
            return Err(Error::Snapshot("missing policy or value network".into()));
        }
        let chained = |layers: &[Dense]| layers.windows(2).all(|p| p[0].outputs() == p[1].inputs());
        if !chained(&policy) || !chained(&value) || policy[0].inputs() != value[0].inputs() {
            return Err(Error::Snapshot("layer shapes do not chain".into()));
        }
        Ok(MlpParams {
            policy: Mlp { layers: policy },
            value: Mlp { layers: value },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn parse_name<'a>(name: &'a str, kind: &str) -> Result<(&'a str, usize)> {
    let bad = || Error::Snapshot(format!("unexpected tensor name '{name}'"));
    let mut parts = name.split('.');
    let (Some(net), Some(idx), Some(k), None) = (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(bad());
    };
    if !(net == "policy" || net == "value") || k != kind {
        return Err(bad());
    }
    Ok((net, idx.parse().map_err(|_| bad())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mlp_init;
    use crate::rng::{stream, Stream};

    #[test]
    fn json_round_trip_is_bitwise() {
        let mut p = mlp_init(2, 4, &mut stream(4, Stream::NetInit));
        // give the zero head awkward values too
        for (i, w) in p.policy.layers[2].weight.iter_mut().enumerate() {
            *w = (i as f64 * 0.1234567).sin() / 3.0;
        }
        let json = Snapshot::from_params(&p).to_json();
        let q = Snapshot::from_json(&json).unwrap().to_params().unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.json");
        let p = mlp_init(4, 2, &mut stream(4, Stream::NetInit));
        Snapshot::from_params(&p).save(&path).unwrap();
        assert_eq!(Snapshot::load(&path).unwrap().to_params().unwrap(), p);
    }

    #[test]
    fn corrupted_shapes_rejected() {
        let p = mlp_init(4, 2, &mut stream(4, Stream::NetInit));
        let mut s = Snapshot::from_params(&p);
        s.tensors[0].shape = vec![63, 4];
        assert!(s.to_params().is_err());
        let mut s = Snapshot::from_params(&p);
        s.tensors[2].name = "policy.1.bias".into();
        assert!(s.to_params().is_err());
        assert!(Snapshot::from_json("{").is_err());
    }
}
