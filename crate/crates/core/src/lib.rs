//! Executable combinatorics of countable Urysohn metric spaces with finite
//! distance sets.
//!
//! The crate decides universality of a finite distance set and splits it into
//! blocks ([`distset`]), grows finite approximants of the Urysohn space
//! ([`space`], [`builder`]), computes distances between orbits of Katětov
//! functions ([`orbits`]), handles the jump-number quotient ([`quotient`]) and
//! plays the indivisibility game against 2-colourings, emitting certificates
//! that can be checked without trusting the construction ([`engine`]).

pub mod builder;
pub mod cli;
pub mod distset;
pub mod engine;
pub mod error;
pub mod orbits;
pub mod quotient;
pub mod space;

pub use distset::{Block, Dist, DistIdx, DistanceSet, UniversalityWitness};
pub use error::{Error, Result};
pub use space::{DGraph, Embedding, Space, TypeFn};
