use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the operation's domain (range caps, gcd conditions, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation at a pole of a closed form.
    #[error("pole: {0}")]
    Pole(String),

    /// A quadrature or series did not reach the requested tolerance.
    #[error("convergence failure: {what} (achieved {achieved:.3e}, wanted {wanted:.3e})")]
    Convergence {
        what: String,
        achieved: f64,
        wanted: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn pole(msg: impl Into<String>) -> Self {
        Error::Pole(msg.into())
    }
}
