//! The ten handcrafted descriptors plus MFCC, and their assembly into a
//! channels × frames [`FeatureMatrix`].
//!
//! | group          | channels                          | analysis frame |
//! |----------------|-----------------------------------|----------------|
//! | prosodic       | F0, ENERGY, VPROB                 | 60 ms          |
//! | voice quality  | JITTER, DJITTER, SHIMMER, HNR     | 60 ms          |
//! | spectral       | SFLUX, SHARP                      | 20 ms          |
//! | temporal       | ZCR                               | 20 ms          |
//! | cepstral       | MFCC_0 .. MFCC_12                 | 20 ms          |
//!
//! Every channel advances on the same 10 ms hop.

mod descriptors;
mod extract;
mod id;
mod matrix;
mod mfcc;

pub use descriptors::{
    energy, hnr, jitter, jitter_derivative, sharpness, shimmer, spectral_centroid, spectral_flux, zcr,
};
pub use extract::{extract_corpus, extract_matrix, FeatureConfig, FeatureExtractor};
pub use id::{parse_feature_set, FeatureGroup, FeatureId, NUM_MFCC};
pub use matrix::{apply_norm, fit_norm, FeatureMatrix, NormStats, STD_FLOOR};
pub use mfcc::{Mfcc, MfccConfig};
