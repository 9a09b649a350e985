//! Domain types, matrix and label I/O, synthetic data and mean statistics.

mod io;
mod model;
mod stats;
mod synth;
mod types;

pub use io::{load_labels, load_matrix, save_labels, save_matrix, MatrixFormat};
pub use model::{IterationRecord, LearnedModel, TrainStatus};
pub use stats::MeanStats;
pub use synth::{
    generate_synthetic, random_projection_features, random_projection_with, SynthSpec,
    SyntheticProblem,
};
pub use types::{CoefBundle, Dataset, DictionaryBundle, HyperParams};
