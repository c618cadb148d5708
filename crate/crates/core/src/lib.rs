//! Binary sentiment classification with a from-scratch Transformer encoder
//! whose hyperparameters are tuned by an Arctic Puffin swarm optimizer.
//!
//! | module | role |
//! |---|---|
//! | [`corpus`] | CSV ingestion and stratified splits |
//! | [`textprep`] | tokenization, stemming, vocabulary, TF-IDF |
//! | [`tinyformer`] | encoder forward/backward, checkpoints |
//! | [`trainer`] | cross-entropy, clipping, Adam, step schedule |
//! | [`puffin`] | bound-constrained swarm minimizer |
//! | [`hypertune`] | swarm search over learning rate, heads and width |
//! | [`evalkit`] | confusion matrix, Kappa, F, AUC, polygon area |
//! | [`cli`] | the `prep`/`tune`/`train`/`eval` workflow |

pub mod cli;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod hypertune;
pub mod puffin;
pub mod rng;
pub mod textprep;
pub mod tinyformer;
pub mod trainer;

pub use error::{Error, Result};
