//! Synthetic generators, text and image loaders, and SNP window splitting.

mod io;
mod pgm;
mod synthetic;
mod windows;

pub use io::{
    encode_sign, format_dense, load_genotypes, load_sign_matrix, parse_dense, parse_genotypes,
    parse_sign_matrix, read_dense, write_dense,
};
pub use pgm::{encode_p2, encode_p5, load_grayscale, parse_pgm};
pub use synthetic::{
    coherent_design, gen_coherent, gen_gaussian, gen_lowrank_noise, gen_lowrank_parts, generate,
    CoherentDesign, LowRankParts, SyntheticSpec,
};
pub use windows::{rank_residual_ratio, split_windows};
