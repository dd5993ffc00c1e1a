use alloc::string::String;

/// Contract violations raised by the simulation and game routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what}: expected length {expected}, got {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("accuracy table for n = {actual} given where n = {expected} is required")]
    TableSize { expected: usize, actual: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_probability(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value })
    }
}
