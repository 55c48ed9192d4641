//! Mapping from failures to process exit codes.
//!
//! | code | class |
//! |------|-------|
//! | 1 | anything not listed below |
//! | 2 | usage (reported by clap before any work starts) |
//! | 3 | filesystem I/O |
//! | 4 | malformed input file (PPM, stream, codebook, predictor) |
//! | 5 | stream/codebook binding mismatch |
//! | 6 | invalid configuration or flag value |
//! | 7 | no usable input images |
//! | 8 | computation rejected its inputs (too few samples, geometry, alphabet) |

use vqic_core::Error;

use crate::commands::CliError;

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(cli) = cause.downcast_ref::<CliError>() {
            return match cli {
                CliError::NoImages(_) => 7,
                CliError::BadArgument(_) => 6,
                CliError::UnknownFile(_) => 4,
            };
        }
        if let Some(core) = cause.downcast_ref::<Error>() {
            return match core {
                Error::Io { .. } => 3,
                Error::Ppm(_) | Error::Container(_) | Error::Entropy(_) | Error::CodebookFile(_) | Error::ModelFile(_) => 4,
                Error::Binding { .. } => 5,
                Error::Config(_) => 6,
                Error::Codebook(_) | Error::Transform(_) | Error::Restoration(_) | Error::Dimensions(_) => 8,
                Error::Csv(_) => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    1
}
