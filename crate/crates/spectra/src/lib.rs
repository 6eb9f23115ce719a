//! Eigenvalue point processes of finite strips and of the limit SDE, and
//! their gap statistics.

pub mod finite;
pub mod gaps;
pub mod goe;
pub mod limit;
pub mod process;

pub use finite::{determinant_scan, strip_eigenvalues, strip_eigenvalues_sturm, SturmCounter, DENSE_CAP};
pub use gaps::{central_gaps, ecdf, gap_statistics, gaps_of, goe_reference_gaps, ks_distance, pooled_central_gaps, GapStatistics, WindowCounts};
pub use goe::{compare_with_reference, GoeComparison, ResonantStrip};
pub use limit::{operator_oracle, sde_eigenvalue_process, BoundaryDeterminant, OperatorOracle};
pub use process::{linspace, PointProcess};
