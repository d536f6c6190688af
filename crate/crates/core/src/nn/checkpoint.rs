//! Versioned JSON layout for [`DenseNet`]: per layer the shape
//! `[out, in]`, the activation, then row-major weights and bias.

use serde::{Deserialize, Serialize};

use super::dense::Dense;
use super::{Activation, DenseNet, NnError, Tensor};

pub const NET_FORMAT: &str = "cellprobe-densenet";
pub const NET_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    pub shape: [usize; 2],
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub format: String,
    pub version: u32,
    pub layers: Vec<LayerCheckpoint>,
}

impl From<DenseNet> for NetCheckpoint {
    fn from(net: DenseNet) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| LayerCheckpoint {
                shape: [l.output_dim(), l.input_dim()],
                activation: l.activation(),
                weights: l.weights().values().to_vec(),
                bias: l.bias().values().to_vec(),
            })
            .collect();
        NetCheckpoint {
            format: NET_FORMAT.into(),
            version: NET_VERSION,
            layers,
        }
    }
}

impl TryFrom<NetCheckpoint> for DenseNet {
    type Error = NnError;

    fn try_from(ckpt: NetCheckpoint) -> Result<Self, NnError> {
        if ckpt.format != NET_FORMAT {
            return Err(NnError::Checkpoint(format!("unknown format {:?}", ckpt.format)));
        }
        if ckpt.version != NET_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported version {} (expected {NET_VERSION})",
                ckpt.version
            )));
        }
        let layers = ckpt
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                let [out, inp] = l.shape;
                let weights =
                    Tensor::matrix(out, inp, l.weights).map_err(|e| NnError::Checkpoint(format!("layer {i}: {e}")))?;
                if l.bias.iter().chain(weights.values()).any(|v| !v.is_finite()) {
                    return Err(NnError::Checkpoint(format!("layer {i}: non-finite parameter")));
                }
                Dense::new(weights, Tensor::vector(l.bias), l.activation)
                    .map_err(|e| NnError::Checkpoint(format!("layer {i}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        DenseNet::new(layers).map_err(|e| NnError::Checkpoint(e.to_string()))
    }
}

impl DenseNet {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, NnError> {
        serde_json::from_str(text).map_err(|e| NnError::Checkpoint(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let net = DenseNet::five_stage(5, [4, 3, 3, 2], 2, 0.2, Activation::Tanh, 8);
        let back = DenseNet::from_json(&net.to_json()).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn broken_chain_is_rejected() {
        let net = DenseNet::random(&[3, 4, 2], Activation::leaky_relu(), Activation::Identity, 1);
        let mut ckpt = NetCheckpoint::from(net);
        ckpt.layers[1].shape = [1, 8];
        ckpt.layers[1].weights = vec![0.0; 8];
        ckpt.layers[1].bias = vec![0.0];
        let text = serde_json::to_string(&ckpt).unwrap();
        assert!(matches!(DenseNet::from_json(&text), Err(NnError::Checkpoint(_))));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let net = DenseNet::random(&[2, 1], Activation::Identity, Activation::Identity, 1);
        let mut ckpt = NetCheckpoint::from(net);
        ckpt.version = 99;
        let text = serde_json::to_string(&ckpt).unwrap();
        assert!(DenseNet::from_json(&text).is_err());
    }
}
