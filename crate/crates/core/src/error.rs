//! Error types shared by all simulator modules.

/// Simulator error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the domain an operation is defined on.
    #[error("{op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("{op}: numerical failure: {msg}")]
    Numeric { op: &'static str, msg: String },

    /// A configuration value violates a model invariant.
    #[error("invalid config: {field}: {msg}")]
    Config { field: String, msg: String },

    /// A loss-channel model failed while assembling a budget.
    #[error("channel {channel}: {source}")]
    Channel {
        channel: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub fn numeric(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Numeric { op, msg: msg.into() }
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { field: field.into(), msg: msg.into() }
    }

    pub fn channel(channel: &'static str, source: Error) -> Self {
        Error::Channel { channel, source: Box::new(source) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
