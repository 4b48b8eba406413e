use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid regime: need fewer files than users (N={files}, K={users})")]
    InvalidRegime { files: usize, users: usize },

    #[error("cache size {memory} outside [0, {files}]")]
    MemoryOutOfRange { memory: String, files: usize },

    #[error("file length must be at least one bit")]
    EmptyFile,

    #[error("cache level t = KM/N = {level} is not an integer")]
    FractionalLevel { level: String },

    #[error("file length {file_bits} is not divisible by the {subfiles} subfiles of the centralized placement")]
    GranularityMismatch { file_bits: u64, subfiles: u128 },

    #[error("{users} users exceed the bit-level simulation cap of {max}")]
    TooManyUsers { users: usize, max: usize },

    #[error("invalid demand vector: {0}")]
    InvalidDemand(String),

    #[error("coefficient matrix is rank deficient (rank {rank}, need {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("linear system is inconsistent")]
    Inconsistent,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("input is empty")]
    EmptyInput,

    #[error("f(N,K) = {f} is negative; the threshold has no real value")]
    NegativeDiscriminant { f: i128 },

    #[error("the bound program is infeasible for M = {memory}")]
    Infeasible { memory: String },

    #[error("optimality certification failed at M = {memory}: achievable {achievable}, bound {bound}")]
    CertificationFailed { memory: String, achievable: String, bound: String },

    #[error("decoding failed for user {user}: {reason}")]
    DecodeFailed { user: usize, reason: String },

    #[error("invalid instance descriptor: {0}")]
    Descriptor(String),

    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),
}
