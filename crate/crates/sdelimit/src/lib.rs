//! Coefficients, increment laws and integrators of the limiting matrix SDEs.

pub mod channel_sde;
pub mod coeffs;
pub mod gaussian;
pub mod haar;
pub mod path;

pub use channel_sde::{anderson_sde, endpoint, goe_limit_matrix, goe_sde, ChannelSde};
pub use coeffs::{compute_coefficients, compute_coefficients_with, cross_coefficients, CrossCoefficients, CrossTensor, MagnitudeBlock, SDECoefficients};
pub use gaussian::{sample_increment, ComplexGaussianSpec};
pub use haar::{haar_average, HaarMeta, HaarMethod, Integrand, PhaseAverager};
pub use path::{band_edge_sde, euler_maruyama, SDEPath};
