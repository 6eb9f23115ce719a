//! Model objects: block spectra with their noise, Anderson strips and their
//! channel decomposition, and the band-edge (Jordan block) family.

pub mod band;
pub mod block;
pub mod channel;
pub mod noise;
pub mod strip;

pub use band::{build_band_edge, jordan_alpha, BandEdgeModel, ClosedFormRelation};
pub use block::BlockSpectrum;
pub use channel::{
    build_goe_channel, classify_channels, decompose_channels, is_chaotic, ChannelData, ChannelKind, ChaosVerdict, Relation,
};
pub use noise::{NoiseModel, Sampler};
pub use strip::{build_transfer, StripModel};
