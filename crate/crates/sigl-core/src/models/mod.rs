//! Trainable architectures: the sinusoidal INR and the GCN encoder.

pub mod gcn;
pub mod siren;

pub use gcn::{graph_operators, minmax_normalize, random_features, GcnEncoder};
pub use siren::{SirenDoc, SirenInr, SCHEMA_VERSION};
