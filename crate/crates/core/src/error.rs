use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad lattice geometry, model parameters, or time-grid settings.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("mode index {index:?} outside truncation {sizes:?}")]
    Range { index: Vec<i64>, sizes: Vec<usize> },

    /// Two fields (or a field and a model) live on different lattices.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// NaN/Inf or a broken symmetry in field data.
    #[error("data error: {0}")]
    Data(String),

    #[error("numerical blow-up at step {step}: {detail}")]
    Blowup { step: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
