//! Multiplier families, scale-invariant Sobolev norms, and lower-bound
//! experiments on Euclidean space (DFT) and the Grushin plane (dense
//! eigendecomposition).

mod cutoff;
mod euclid;
mod experiment;
mod grid;
mod grushin;
mod sobolev;

pub use cutoff::CutoffSpec;
pub use euclid::{euclidean_l2_ratio, euclidean_opnorm_l1, OpNormOptions, OpNormResult, MAX_GRID_POINTS, REFINEMENT_LIMIT};
pub use experiment::{
    expected, mh_lowerbound_experiment, mp_lowerbound_experiment, Band, ExperimentKind, ExperimentResult, ExperimentRow,
    Target, MIN_LAMBDAS, MIN_R2,
};
pub use grid::{schrodinger_multiplier, wave_multiplier, Family, GridSpec, MultiplierGrid, QUAD_RTOL};
pub use grushin::{
    apply_function, apply_multiplier_spectral, grushin_operator_matrix, lp_norm, norm_inf, norm_one, spectral_operator_matrix,
    GrushinBox, GrushinMatrix, SpectralDecomposition, GRUSHIN_SIZE_LIMIT,
};
pub use sobolev::{default_t_samples, sobolev_sloc_norm, SobolevNorm, SOBOLEV_GRID, T_SAMPLES};
