//! Numerical laboratory for second-level geometric rough paths (`2 < p < 3`)
//! on Wiener space, evaluated exactly on dyadic grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domains;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lift;
pub mod path;
pub mod rng;
pub mod variation;
pub mod wpi;

pub use error::{Error, Result};
pub use lift::{cross, lift, rough_distance, CrossIntegral, RoughLift};
pub use path::{sample_brownian, DiscretePath};
pub use rng::RngStream;
pub use variation::{
    cp_norm, dyadic_domination_constant, dyadic_norm, level1_norm, level2_norm, max_qvar, pvar_norm, qvar, qvar_naive,
    qvar_pruned, qvar_with_partition, TableComponent, TwoParamTable, VarParams,
};
