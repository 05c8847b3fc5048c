//! Anisotropic local constant kernel regression for change-point data.
//!
//! The local constant (Nadaraya–Watson) estimator averages outcomes with
//! weights that depend only on regressor distance, so it blurs jumps. The
//! anisotropic estimator adds a range kernel on differences of a pilot
//! estimate of the regression function: observations near in `x` but far in
//! the pilot's value are down-weighted, which smooths along a change-point
//! without smoothing across it.
//!
//! Modules:
//! - [`kernels`]: uniform, Gaussian and Epanechnikov kernels;
//! - [`estimators`]: LC, ALC (pilot or oracle) and iterated fits;
//! - [`bandwidth`]: AIC_c and least-squares cross-validation, rate rules;
//! - [`simulation`], [`montecarlo`]: test processes, MESE tables, rate slopes;
//! - [`imaging`]: per-channel image smoothing.

pub mod bandwidth;
pub mod data;
pub mod error;
pub mod estimators;
pub mod imaging;
pub mod kernels;
pub mod montecarlo;
pub mod simulation;

pub use bandwidth::{
    aicc_scores, aicc_scores_alc, default_range_bandwidth, lscv_scores, lscv_scores_alc, rate_rule, scale_for_alc,
    select_aicc, select_aicc_alc, select_lscv, select_lscv_alc, BandwidthGrid, BandwidthPlan, CvPilot, DomainMethod,
    RangeRule, RateExponent,
};
pub use data::{read_points_csv, Dataset, Points};
pub use error::{Error, Result};
pub use estimators::{alc_fit, fit, lc_fit, EstimatorKind, EstimatorSpec, FitResult, PilotPolicy, RangeBandwidth};
pub use imaging::{load_image, smooth_channel, smooth_image, Channel, ImageFrame, ImageSmoother};
pub use kernels::{eval_kernel, product_kernel, Bandwidths, KernelFamily};
pub use montecarlo::{
    rate_check, run_monte_carlo, AlcSelection, McConfig, McEstimator, McTable, PipelineConfig, RateConfig, RateReport,
};
pub use simulation::{dgp_eval, mese, simulate_dataset, simulate_fire_video, Dgp, DgpSpec, FireSpec};
