//! Detection and elimination of pseudo multi-sense in multi-sense word
//! embeddings.
//!
//! A multi-sense embedding assigns several vectors to one word. Some of those
//! vectors often denote the same meaning ("pseudo multi-sense"). This crate
//!
//! - scores each pair of senses of a word by comparing the domains and
//!   hypernyms of their nearest neighbors ([`detector`]),
//! - learns one global linear map that pulls every detected group onto a
//!   representative vector and applies it to the whole space ([`projector`]),
//! - evaluates original and projected spaces on word similarity
//!   ([`similarity`]) and analogy ([`analogy`]) benchmarks.
//!
//! [`pipeline`] wires the stages together through files; the `pseudosense`
//! binary exposes them as subcommands.

pub mod analogy;
pub mod detector;
pub mod embedding;
mod error;
pub mod lexical;
pub mod pipeline;
pub mod projector;
pub mod similarity;
mod union_find;

pub use error::{Error, Result};
