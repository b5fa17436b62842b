//! Structured-text (JSON) encodings shared by the document formats.
//!
//! Complex scalars are `[re, im]` arrays; points of the Riemann sphere are
//! either such an array or the string `"inf"`; matrices are row-major
//! arrays of rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::C64;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct WireComplex(pub [f64; 2]);

impl From<C64> for WireComplex {
    fn from(z: C64) -> Self {
        WireComplex([z.re, z.im])
    }
}

impl From<WireComplex> for C64 {
    fn from(w: WireComplex) -> Self {
        C64::new(w.0[0], w.0[1])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum WirePoint {
    Finite([f64; 2]),
    Symbol(String),
}

impl WirePoint {
    pub fn to_point(&self, field: &str) -> Result<Point> {
        match self {
            WirePoint::Finite([re, im]) => {
                if re.is_finite() && im.is_finite() {
                    Ok(Point::finite(*re, *im))
                } else {
                    Err(Error::parse(field, "non-finite coordinate"))
                }
            }
            WirePoint::Symbol(s) if s == "inf" => Ok(Point::Infinity),
            WirePoint::Symbol(s) => Err(Error::parse(
                field,
                format!("expected [re, im] or \"inf\", found \"{s}\""),
            )),
        }
    }
}

impl From<Point> for WirePoint {
    fn from(p: Point) -> Self {
        match p {
            Point::Finite(z) => WirePoint::Finite([z.re, z.im]),
            Point::Infinity => WirePoint::Symbol("inf".to_string()),
        }
    }
}

pub type WireMatrix = Vec<Vec<WireComplex>>;

/// Row-major complex matrix with the expected shape.
pub fn matrix_from_wire(
    field: &str,
    rows: &WireMatrix,
    nrows: usize,
    ncols: usize,
) -> Result<nalgebra::DMatrix<C64>> {
    if rows.len() != nrows {
        return Err(Error::parse(
            field,
            format!("expected {nrows} rows, found {}", rows.len()),
        ));
    }
    let mut m = nalgebra::DMatrix::zeros(nrows, ncols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::parse(
                field,
                format!("row {r}: expected {ncols} entries, found {}", row.len()),
            ));
        }
        for (c, w) in row.iter().enumerate() {
            m[(r, c)] = C64::from(*w);
        }
    }
    Ok(m)
}

pub fn matrix_to_wire(m: &nalgebra::DMatrix<C64>) -> WireMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)].into()).collect())
        .collect()
}
