use thiserror::Error;

pub type Result<T, E = PsdfsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsdfsError {
    /// `a^k D(0)|n>` with `k > n` is the zero vector.
    #[error("null state: subtracting k={k} photons from |{n}> with alpha=0 annihilates it")]
    NullState { n: usize, k: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(
        "truncation at dim={dim} leaves tail mass {tail:.3e}; retry with dim >= {suggested_dim}"
    )]
    Truncation {
        dim: usize,
        tail: f64,
        suggested_dim: usize,
    },

    #[error("integration box half-width {half_width} leaves tail {tail:.3e}; use half-width >= {suggested}")]
    BoxTooSmall {
        half_width: f64,
        tail: f64,
        suggested: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl PsdfsError {
    /// Validation failures map to CLI exit code 2, everything else to 1.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            PsdfsError::NullState { .. } | PsdfsError::InvalidParams(_)
        )
    }
}
