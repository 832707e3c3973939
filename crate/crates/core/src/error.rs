use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid deck: {0}")]
    InvalidDeck(String),

    #[error("invalid arrangement: {0}")]
    InvalidArrangement(String),

    #[error("game over: no cards remain")]
    GameOver,

    #[error("{what} = {value} out of range {lo}..={hi}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        lo: usize,
        hi: usize,
    },

    #[error("deck too large for {op}: {detail}")]
    SizeGuard { op: &'static str, detail: String },

    #[error("profile budget exceeded: about {estimate} reachable profiles (n * max_mult = {cells}, limit {limit})")]
    Budget {
        estimate: u128,
        cells: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
