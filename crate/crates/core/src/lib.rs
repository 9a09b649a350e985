//! Discriminative dictionary learning with per-class dictionaries and a
//! low-rank shared dictionary, plus the matching sparse-representation
//! classifier.
//!
//! Training alternates between sparse coding ([`learner::sparse_code_train`]),
//! class-dictionary updates ([`dictupdate::update_class_dicts`]) and the
//! nuclear-norm regularized shared-dictionary update
//! ([`dictupdate::update_shared_dict`]). [`classifier::classify`] codes a test
//! sample against the learned dictionaries and picks the class with the
//! smallest combined residual and coefficient distance.

pub mod archive;
pub mod classifier;
pub mod cli;
pub mod datamodel;
pub mod dictupdate;
pub mod error;
pub mod gradients;
pub mod learner;
pub mod linalg;
pub mod par;
pub mod prox;

pub use classifier::{classify, encode_test, evaluate, Evaluation, Prediction};
pub use datamodel::{
    generate_synthetic, CoefBundle, Dataset, DictionaryBundle, HyperParams, LearnedModel, SynthSpec,
};
pub use error::{Error, Result};
pub use learner::{fit, Coder, TrainConfig};
pub use par::ExecMode;
