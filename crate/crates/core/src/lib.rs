//! Sequence-to-tuple event extraction.
//!
//! A sentence is encoded token by token, then a recurrent decoder emits one
//! complete event frame per step: trigger span, event type, argument span and
//! role. Spans are chosen by two pointer networks; the frame sequence ends
//! with a null frame.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod evaluator;
pub mod frame_codec;
pub mod inferencer;
pub mod model;
pub mod nn;
pub mod synth;
pub mod trainer;
pub mod wordpiece;

pub use error::{Error, Result};
