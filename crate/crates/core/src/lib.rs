//! Structural retrieval of CDR-like loop fragments and retrieval-conditioned
//! sequence design by multinomial diffusion.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`structmodel`] parses PDB files into alpha-carbon traces and cuts the
//!    query loop out of an antibody chain.
//! 2. [`retrieval`] superposes the loop onto every window of a corpus
//!    ([`geom::kabsch`]) and keeps windows under a length-dependent RMSD
//!    threshold, persisting the ranked hits as a fragment database.
//! 3. [`diffusion`] samples loop sequences with a reverse categorical chain
//!    whose denoiser ([`denoise::ProfileDenoiser`]) predicts residues from the
//!    retrieved fragment sequences.
//!
//! [`evalx`] measures amino-acid recovery against known sequences.

pub mod alphabet;
pub mod cli;
pub mod denoise;
pub mod diffusion;
pub mod error;
pub mod evalx;
pub mod geom;
pub mod retrieval;
pub mod structmodel;

pub use error::{Error, Result};
