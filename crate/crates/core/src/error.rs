use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Lévy measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} outside the covered range 1..={covered}")]
    IndexOutOfRange { index: usize, covered: usize },

    #[error("Hermite function index {0} outside the supported range 1..={max}", max = crate::basis::MAX_HERMITE_INDEX)]
    HermiteIndex(usize),

    #[error("polynomial p_{requested} requested but the measure only supports {available}")]
    PolynomialIndex { requested: usize, available: usize },

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("mark set contains 0")]
    MarkSetContainsZero,

    #[error("iterated integrals of order {0} are not supported (maximum 3)")]
    UnsupportedOrder(usize),

    #[error("multi-index uses position {position} -> (i, j) = ({i}, {j}) but only {j_nu} polynomials exist")]
    IncompatibleMultiIndex {
        position: usize,
        i: usize,
        j: usize,
        j_nu: usize,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("Mittag-Leffler series did not converge for alpha={alpha}, beta={beta}, z={z} within {k_max} terms")]
    NonConvergence {
        alpha: f64,
        beta: f64,
        z: f64,
        k_max: usize,
    },

    #[error("{0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
