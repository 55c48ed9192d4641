use thiserror::Error;

use crate::codebook::file::CodebookFileError;
use crate::codebook::CodebookError;
use crate::container::ContainerError;
use crate::entropy::EntropyError;
use crate::image_io::PpmError;
use crate::metrics::DimensionMismatch;
use crate::restoration::model_file::ModelFileError;
use crate::restoration::RestorationError;
use crate::transform::TransformError;

/// Any failure of the end-to-end pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ppm(#[from] PpmError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    CodebookFile(#[from] CodebookFileError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Restoration(#[from] RestorationError),
    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
    #[error(transparent)]
    Dimensions(#[from] DimensionMismatch),
    #[error("stream is bound to codebook {stream:016x} (K={stream_k}, n_z={stream_dim}) but codebook {codebook:016x} (K={codebook_k}, n_z={codebook_dim}) was given")]
    Binding {
        stream: u64,
        stream_k: usize,
        stream_dim: usize,
        codebook: u64,
        codebook_k: usize,
        codebook_dim: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
