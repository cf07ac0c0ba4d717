//! Retrieval-conditioned denoisers and conditioning data.

mod msa;
mod profile;

pub use msa::{build_pseudo_msa, export_msa, read_msa_fasta, PseudoMsa};
pub use profile::{
    build_profile, graft_top1, profile_denoise, usable_matches, FragmentSequenceMatrix,
    ProfileDenoiser, ProfileStats, DEFAULT_BLEND_WEIGHT, DEFAULT_K, DEFAULT_PSEUDOCOUNT, MAX_K,
};
