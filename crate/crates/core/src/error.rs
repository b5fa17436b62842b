use std::fmt;

use thiserror::Error;

use crate::point::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    /// Evaluation hit a pole of a singular differential; the caller has to
    /// switch to the chart at infinity for that coordinate.
    #[error("point {point} is a pole of {form} (preimage {preimage})")]
    Pole {
        form: String,
        preimage: Point,
        point: Point,
    },

    #[error("chart error: {0}")]
    Chart(String),

    #[error("degenerate shift: {0}")]
    DegenerateShift(String),

    #[error(
        "lattice radius {radius:.2} exceeds the cap {cap}; achievable tail bound {achievable:e}"
    )]
    Precision {
        radius: f64,
        cap: u32,
        achievable: f64,
    },

    #[error("contour quadrature did not converge: {0}")]
    Accuracy(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("size error: {0}")]
    Size(String),
}

/// Machine-readable error family, used by the CLI for exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCategory {
    Parse,
    Validation,
    DegenerateShift,
    Precision,
    Geometry,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Parse { .. } => ErrorCategory::Parse,
            Error::Validation(_) | Error::Size(_) => ErrorCategory::Validation,
            Error::Pole { .. } | Error::Chart(_) | Error::DegenerateShift(_) => {
                ErrorCategory::DegenerateShift
            }
            Error::Precision { .. } | Error::Accuracy(_) => ErrorCategory::Precision,
            Error::Geometry(_) => ErrorCategory::Geometry,
        }
    }

    pub(crate) fn parse(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Parse => "parse",
            ErrorCategory::Validation => "validation",
            ErrorCategory::DegenerateShift => "degenerate-shift",
            ErrorCategory::Precision => "precision",
            ErrorCategory::Geometry => "geometry",
        }
    }

    /// Process exit status for this category.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Parse => 2,
            ErrorCategory::Validation => 3,
            ErrorCategory::DegenerateShift => 4,
            ErrorCategory::Precision => 5,
            ErrorCategory::Geometry => 6,
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
