//! File formats: netpbm images, binary codebooks and cost tables, and text
//! histograms, weights and caption corpora.

mod netpbm;
mod tables;
mod text;

pub use netpbm::{decode_pnm, encode_pgm, read_image, write_pgm};
pub use tables::{
    decode_adjacency, decode_codebook, decode_position, encode_adjacency, encode_codebook,
    encode_position, read_adjacency, read_codebook, read_position, write_adjacency, write_codebook,
    write_position,
};
pub use text::{
    format_histogram, format_word_grid, parse_histogram, parse_weights, parse_word_grid,
    read_caption_corpus, read_histogram, read_weights, read_word_grid, write_histogram,
};
