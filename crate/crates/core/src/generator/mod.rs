//! Phase two for the open category: a dual-LSTM subtoken generator.

mod beam;
pub mod lstm;
mod model;
mod train;

pub use beam::{beam_decode, beam_decode_with_prefix, Candidate, DecodeConfig};
pub use lstm::{lstm_step, LstmParams};
pub use model::{Example, GeneratorGrad, GeneratorModel, DEFAULT_MAX_CONTEXT};
pub use train::{train_generator, train_generator_with_vocabs, GeneratorConfig, TrainedGenerator};
