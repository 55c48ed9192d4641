//! Extreme-ratio image compression by vector quantization of patch latents.
//!
//! The pipeline maps an image to one latent vector per 16x16 patch
//! ([`transform`]), replaces each vector with the index of its nearest
//! codeword ([`codebook`]), range-codes the index map ([`entropy`]) and frames
//! it in a small checksummed container ([`container`]). Smaller codebooks for
//! lower rates come from clustering a large root codebook. Indices lost in
//! transit can be predicted from their causal neighbourhood ([`restoration`]).

pub mod codebook;
pub mod config;
pub mod container;
pub mod entropy;
mod error;
mod hash;
pub mod image_io;
pub mod metrics;
pub mod pipeline;
pub mod restoration;
pub mod synth;
pub mod transform;

pub use codebook::{dequantize, quantize, Codebook, IndexMap, LADDER};
pub use config::Config;
pub use entropy::{decode_indices, encode_indices, CodedPayload};
pub use error::{Error, Result};
pub use image_io::{read_ppm, write_ppm, Image};
pub use metrics::{psnr, RdPoint};
pub use restoration::{apply_mask, restore, train_predictor, ContextModel, MaskedIndexMap};
pub use transform::{analyze, synthesize, LatentGrid, TransformSpec};
