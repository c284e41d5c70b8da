//! Human activity recognition over body-acceleration windows.
//!
//! A small depthwise-separable 1-D CNN maps each fixed-length window to one
//! of six locomotion classes. The depthwise factorization trades the dense
//! cross-channel kernel of a standard convolution for a per-channel kernel
//! plus a 1x1 pointwise mix, cutting weights and multiply cost by the input
//! channel count at equal output geometry.

mod model;
pub(crate) mod train;

pub use model::{
    conv1d_depthwise, conv1d_standard, load_checkpoint, save_checkpoint, CnnConfig, CnnModel,
    FeatureMap, ShapeChain,
};
pub use train::{
    accuracy, gradient_check, mean_loss, small_config, train, GradCheckReport, TrainConfig,
    TrainReport,
};

#[derive(Debug, thiserror::Error)]
pub enum HarError {
    #[error("window has {got} samples, model expects {want}")]
    WindowLength { got: usize, want: usize },
    #[error("bad model geometry: {0}")]
    BadConfig(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set is missing class {0}")]
    MissingClass(ActivityLabel),
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("bad training parameter: {0}")]
    BadTrainConfig(String),
    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The six activity classes, in their fixed encoding order 0..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActivityLabel {
    Sitting = 0,
    Walking = 1,
    Standing = 2,
    Jogging = 3,
    Upstairs = 4,
    Downstairs = 5,
}

impl ActivityLabel {
    pub const ALL: [ActivityLabel; 6] = [
        ActivityLabel::Sitting,
        ActivityLabel::Walking,
        ActivityLabel::Standing,
        ActivityLabel::Jogging,
        ActivityLabel::Upstairs,
        ActivityLabel::Downstairs,
    ];

    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityLabel::Sitting => "Sitting",
            ActivityLabel::Walking => "Walking",
            ActivityLabel::Standing => "Standing",
            ActivityLabel::Jogging => "Jogging",
            ActivityLabel::Upstairs => "Upstairs",
            ActivityLabel::Downstairs => "Downstairs",
        }
    }
}

impl std::fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ActivityLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| format!("unknown activity label {s:?}"))
    }
}

/// Weight count of a standard convolution: every output channel carries a
/// full `k_w x k_h` kernel per input channel.
pub fn standard_conv_weights(c_in: u64, k_w: u64, k_h: u64, c_out: u64) -> u64 {
    c_in * k_w * k_h * c_out
}

/// Multiply count of a standard convolution over an `f_w x f_h` output map.
pub fn standard_conv_cost(c_in: u64, k_w: u64, k_h: u64, c_out: u64, f_w: u64, f_h: u64) -> u64 {
    standard_conv_weights(c_in, k_w, k_h, c_out) * f_w * f_h
}

/// Weight count of a depthwise convolution: one `k_w x k_h` kernel per
/// output channel, no cross-channel terms.
pub fn depthwise_conv_weights(k_w: u64, k_h: u64, c_out: u64) -> u64 {
    k_w * k_h * c_out
}

/// Multiply count of a depthwise convolution over an `f_w x f_h` output map.
pub fn depthwise_conv_cost(k_w: u64, k_h: u64, c_out: u64, f_w: u64, f_h: u64) -> u64 {
    depthwise_conv_weights(k_w, k_h, c_out) * f_w * f_h
}
