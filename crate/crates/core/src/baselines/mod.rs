//! Comparison methods: random polynomial features with ridge regression,
//! exact polynomial kernel ridge regression and second-order Factorization
//! Machines.

mod fm;
mod krr;
mod random_features;
mod ridge;

pub use fm::{fm2_eval, fm2_fit, FmFitConfig, FmParams};
pub use krr::{krr_poly, poly_kernel, poly_kernel_matrix, KrrConfig, DEFAULT_KRR_CAP};
pub use random_features::{
    apply_map, craftmaps_project, kk_map, DegreePolicy, FeatureMap, FeatureMapDescriptor,
    Projection,
};
pub use ridge::ridge_on_features;
