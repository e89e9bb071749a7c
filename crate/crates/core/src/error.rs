use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: {what} has size {size}, cap is {cap}")]
    Capacity { what: &'static str, size: usize, cap: usize },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty conditional: {0}")]
    Conditioning(String),
    #[error("operation requires d = 2, got d = {0}")]
    UnsupportedDimension(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
