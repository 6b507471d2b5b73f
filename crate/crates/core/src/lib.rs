//! Toolkit for turning doctor-patient dialogue corpora into SOAP-note
//! training data and scoring generated notes.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! * [`corpus`] loads `<split>/<id>.dialogue.txt` / `<id>.note.txt` pairs and
//!   computes per-split statistics.
//! * [`dialogue`] normalizes transcripts and splits them into speaker turns.
//! * [`soap`] sectionizes notes and maps surface headers onto the four
//!   canonical SOAP sections.
//! * [`instruct`] builds `(instruction, input, output)` records and reads and
//!   writes them as JSON lines.
//! * [`metrics`] implements ROUGE-1/2/Lsum and BERTScore over precomputed
//!   embeddings.
//! * [`adapters`] holds the LoRA and 4-bit blockwise quantization numerics
//!   plus a toy training loop.
//! * [`report`] renders statistics tables and leaderboards.

pub mod adapters;
pub mod corpus;
pub mod dialogue;
mod error;
pub mod instruct;
pub mod io;
pub mod metrics;
pub mod report;
pub mod soap;

pub use error::{Error, Result};
