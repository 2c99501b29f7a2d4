use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus evaluated at negative input {0}")]
    NegativeInput(f64),
    #[error("invalid modulus parameters: {0}")]
    InvalidParams(String),
    #[error("horizon {got} is below the minimum {min}")]
    InvalidHorizon { got: u64, min: u64 },
    #[error("epsilon grid rejected: {0}")]
    GridTooCoarse(String),
    #[error("lacunary terms are not strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("sequence is not lacunary: {0}")]
    NotLacunary(String),
    #[error("bad lacunary parameters: {0}")]
    BadParams(String),
    #[error("modulus looks theta-compatible, no witness blocks: {0}")]
    CompatibleModulus(String),
    #[error("witness {k}: block inequality h(1-eps)-1 > 0 cannot be met: {detail}")]
    InequalityViolated { k: usize, detail: String },
    #[error("block ratios are bounded, no gap selection: {0}")]
    BoundedRatios(String),
    #[error("block ratios stay away from 1: {0}")]
    RatiosAwayFromOne(String),
    #[error("unknown law `{0}`")]
    UnknownLaw(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("catalog: {0}")]
    Catalog(String),
}
