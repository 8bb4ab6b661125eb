//! File formats: JSON lens configuration, binary PGM/PPM images, and the
//! FMAP (dense float map) and SMAP (subsampled map) containers.

mod config;
mod containers;
mod pnm;

pub use config::{config_to_json, load_config, parse_config};
pub use containers::{
    decode_fmap, decode_map, decode_smap, encode_fmap, encode_smap, read_map, write_map, MapArtifact,
    FMAP_MAGIC, FMAP_VERSION, SMAP_MAGIC, SMAP_VERSION,
};
pub use pnm::{decode_pnm, encode_pnm, read_pnm, write_pnm};
