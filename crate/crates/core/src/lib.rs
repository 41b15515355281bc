//! Hankel dynamic mode decomposition with control (HDMDc) for forced time
//! series, with Bayesian and frequentist ensembles, forecast metrics and
//! block-bootstrap density bands.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`). The `*64`
//! aliases below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod ensemble;
pub mod error;
pub mod hankel;
pub mod linalg;
pub mod metrics;
pub mod model_io;
pub mod regress;
pub mod scalar;
pub mod stats;
pub mod sweep;
pub mod synthetic;
pub mod timeseries;

pub use bootstrap::{
    bootstrap_densities, kde_bandwidth, kde_pdf, mbb_resample, optimal_block_length, pdf_confidence,
    pdf_confidence_with_plan, summarize_densities, MbbPlan, PdfEstimate,
};
pub use ensemble::{
    bayesian_forecast, combine_members, frequentist_forecast, sample_hyperparams, BayesianConfig, EnsembleForecast,
    EnsembleOutcome, HyperparamPrior,
};
pub use error::{Error, Result};
pub use hankel::{build_matrices, DataMatrices, EmbeddingDims};
pub use linalg::Matrix;
pub use metrics::{jsd, kl_divergence, nrmse, shared_grid, GriddedPdf, NrmseConfig, SigmaSource};
pub use model_io::{load_model, save_model};
pub use regress::{fit, FitOptions, Forecast, HdmdcModel, Hyperparameters, Scaling};
pub use scalar::Real;
pub use sweep::{enumerate, evaluate_grid, select_best, SweepGrid, SweepOptions, SweepResult};
pub use synthetic::{gen_duffing_run, gen_lti_run, gen_wave_signal, DuffingSpec, LtiSystem, WaveSignal, WaveSpec};
pub use timeseries::{load_run, ChannelSchema, Normalization, SplitManifest, TimeSeriesRun};

pub type Matrix64 = Matrix<f64>;
pub type Run64 = TimeSeriesRun<f64>;
pub type Model64 = HdmdcModel<f64>;
pub type Hyper64 = Hyperparameters<f64>;
pub type Forecast64 = Forecast<f64>;
pub type Ensemble64 = EnsembleForecast<f64>;
pub type Pdf64 = GriddedPdf<f64>;
