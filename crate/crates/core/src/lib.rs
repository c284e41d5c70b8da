//! Core library for a phone-sensing depression screening pipeline.
//!
//! The crate is organized around the pipeline stages:
//!
//! * [`signal`]: accelerometer stream regularization, Butterworth filtering,
//!   gravity separation and window segmentation,
//! * [`har`]: a depthwise-separable 1-D CNN that labels activity windows,
//! * [`text`]: tweet tokenization, lexicon polarity scoring and a multinomial
//!   naive Bayes sentiment classifier,
//! * [`features`]: daily and weekly behavioral feature construction,
//! * [`predict`]: lasso GDS regression, severity classifiers (SVM, KNN, MLP),
//!   participant-level cross-validation and evaluation metrics.
//!
//! Numeric kernels are generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below pin the `f64` instantiations the pipeline crates use.

pub mod features;
pub mod har;
pub mod predict;
pub mod scalar;
pub mod signal;
pub mod text;

pub use scalar::Real;

pub type AccelSample = signal::AccelSample<f64>;
pub type ActivityWindow = signal::ActivityWindow<f64>;
pub type GravitySplit = signal::GravitySplit<f64>;
pub type ButterworthSpec = signal::ButterworthSpec<f64>;
pub type LowpassFilter = signal::LowpassFilter<f64>;
pub type CnnModel = har::CnnModel<f64>;
pub type NaiveBayesModel = text::NaiveBayesModel<f64>;
pub type DailyFeatures = features::DailyFeatures<f64>;
pub type WeeklyFeatureVector = features::WeeklyFeatureVector<f64>;
pub type ParticipantWeek = predict::ParticipantWeek<f64>;
pub type LassoModel = predict::LassoModel<f64>;
pub type SvmModel = predict::SvmModel<f64>;
pub type KnnModel = predict::KnnModel<f64>;
pub type MlpModel = predict::MlpModel<f64>;
