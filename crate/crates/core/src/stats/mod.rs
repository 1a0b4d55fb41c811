//! Group statistics: least squares, distribution functions and ANCOVA.

pub mod ancova;
pub mod dist;
pub mod ols;

pub use ancova::{
    ancova_csv, ancova_feature, ancova_table, join_cohort, read_meta_csv, stars, write_ancova_csv, AncovaResult,
    AncovaRow, CohortRecord, Group, MetaRecord,
};
pub use dist::{beta_inc, f_sf, ln_gamma, t_cdf, t_quantile};
pub use ols::{has_full_column_rank, ols_fit, LinearModelFit};
