//! JSON tensor files: `{"shape": [..], "data": [..]}` with row-major data.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tuckerlite::Tensor;

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorFile {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
}

impl TensorFile {
    pub fn from_tensor(t: &Tensor, name: Option<String>) -> Self {
        Self {
            shape: t.shape().to_vec(),
            data: t.data().to_vec(),
            name,
            symmetric: Some(t.is_symmetric(tuckerlite::tensor::DEFAULT_SYMMETRY_TOL)),
        }
    }

    pub fn into_tensor(self) -> Result<Tensor, Failure> {
        let expected: usize = self.shape.iter().product();
        if self.data.len() != expected {
            return Err(Failure::Validation(format!(
                "data has {} values but shape {:?} needs {expected}",
                self.data.len(),
                self.shape
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Failure::Validation(
                "tensor data contains non-finite values".into(),
            ));
        }
        Ok(Tensor::new(self.shape, self.data)?)
    }
}

pub fn load_tensor(path: &Path) -> Result<Tensor, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    let file: TensorFile = serde_json::from_str(&text).map_err(|e| {
        Failure::Validation(format!("malformed tensor file {}: {e}", path.display()))
    })?;
    file.into_tensor()
}

pub fn save_tensor(t: &Tensor, path: &Path, name: Option<String>) -> Result<(), Failure> {
    let text = serde_json::to_string(&TensorFile::from_tensor(t, name))
        .map_err(|e| Failure::Validation(format!("cannot encode tensor: {e}")))?;
    fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}
