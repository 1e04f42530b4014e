use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),
    #[error("ball radius {radius} exceeds the half-period {half_period}")]
    RadiusTooLarge { radius: f64, half_period: f64 },
    #[error("matrix is not trace-free (|tr M| = {0:e})")]
    NotTraceFree(f64),
    #[error("gauge transform is not in SU(2) at site {site} (deviation {deviation:e})")]
    NotUnitary { site: usize, deviation: f64 },
    #[error("form degree {0} is out of range for this operator")]
    Degree(usize),
    #[error("fields live on different lattices")]
    LatticeMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
