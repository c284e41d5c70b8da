//! One module per subcommand. Every stage validates its inputs, writes its
//! artifacts under the configured data root, and returns a one-line
//! summary for the terminal.

pub mod classify;
pub mod evaluate;
pub mod featurize;
pub mod fit_gds;
pub mod generate;
pub mod preprocess;
pub mod report;
pub mod select_features;
pub mod serve;
pub mod train_har;
pub mod train_sentiment;
