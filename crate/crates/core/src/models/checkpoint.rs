use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GcnModel, GgnnModel, Model};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// JSON checkpoint. Floats are written in shortest round-trip form, so a
/// loaded model reproduces forwards bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub architecture: String,
    /// GCN: `[input, hidden..., classes]`; GGNN: `[input, hidden, classes]`.
    pub dims: Vec<usize>,
    /// GCN layers or GGNN propagation steps.
    pub steps: usize,
    pub params: Vec<Tensor>,
    pub seed: u64,
    pub dataset: String,
    pub test_fraction: f64,
}

impl Checkpoint {
    pub fn from_model(model: &Model, seed: u64, dataset: &str, test_fraction: f64) -> Self {
        let dims = match model {
            Model::Gcn(m) => m.dims().to_vec(),
            Model::Ggnn(m) => vec![m.input_dim(), m.hidden(), m.num_classes()],
        };
        Checkpoint {
            architecture: model.architecture().to_string(),
            dims,
            steps: model.steps(),
            params: model.params().into_iter().cloned().collect(),
            seed,
            dataset: dataset.to_string(),
            test_fraction,
        }
    }

    pub fn to_model(&self) -> Result<Model> {
        match self.architecture.as_str() {
            "gcn" => {
                let layers = self.dims.len().saturating_sub(1);
                if layers != self.steps || self.params.len() != 2 * layers {
                    return Err(Error::arg(format!(
                        "gcn checkpoint with dims {:?} needs {} parameter tensors, found {}",
                        self.dims,
                        2 * layers,
                        self.params.len()
                    )));
                }
                let (w, b) = self.params.split_at(layers);
                Ok(Model::Gcn(GcnModel::from_parts(w.to_vec(), b.to_vec())?))
            }
            "ggnn" => {
                let [input, hidden, classes] = self.dims[..] else {
                    return Err(Error::arg(format!(
                        "ggnn checkpoint dims must have 3 entries, got {:?}",
                        self.dims
                    )));
                };
                Ok(Model::Ggnn(GgnnModel::from_params(
                    input,
                    hidden,
                    classes,
                    self.steps,
                    self.params.clone(),
                )?))
            }
            other => Err(Error::arg(format!("unknown architecture tag {other:?}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("checkpoint serialization cannot fail");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        for p in &ckpt.params {
            if p.data().len() != p.rows() * p.cols() {
                return Err(Error::arg(format!(
                    "{}: parameter tensor with inconsistent shape",
                    path.display()
                )));
            }
        }
        Ok(ckpt)
    }
}
