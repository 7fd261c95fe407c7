use fmeca_core::FmecaModel;
use sha2::{Digest, Sha256};

use crate::document::{write_model, ModelDocument, ModelFormat};

/// `sha256:<hex>` of the canonical structured form of `model`, metadata
/// excluded. Equal models hash equally whatever order they were written in.
pub fn model_digest(model: &FmecaModel) -> String {
    let bytes = write_model(&ModelDocument::new(model.clone()), ModelFormat::Structured);
    format!("sha256:{}", hex::encode(Sha256::digest(&bytes)))
}
