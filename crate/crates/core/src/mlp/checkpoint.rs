//! JSON weight files with a self-describing shape header.
//!
//! ```json
//! {"format":"kfm-mlp","version":1,"activation":"selu",
//!  "layer_sizes":[3,32,32,32,2],"params":[...]}
//! ```
//!
//! `params` is the flat parameter vector: for each layer the row-major
//! `out × in` weight matrix followed by the bias.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::MlpField;
use crate::error::{Error, Result};

pub const FORMAT: &str = "kfm-mlp";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct WeightFile {
    format: String,
    version: u32,
    activation: String,
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

pub fn to_json(net: &MlpField) -> Result<String> {
    let file = WeightFile {
        format: FORMAT.into(),
        version: VERSION,
        activation: "selu".into(),
        layer_sizes: net.layer_sizes().to_vec(),
        params: net.params().to_vec(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn from_json(text: &str) -> Result<MlpField> {
    let file: WeightFile = serde_json::from_str(text)?;
    if file.format != FORMAT || file.version != VERSION {
        return Err(Error::input(format!("unsupported weight file {} v{}", file.format, file.version)));
    }
    if file.activation != "selu" {
        return Err(Error::input(format!("unsupported activation {}", file.activation)));
    }
    MlpField::from_parts(file.layer_sizes, file.params)
}

pub fn save(net: &MlpField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json(net)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<MlpField> {
    from_json(&fs::read_to_string(path)?)
}
