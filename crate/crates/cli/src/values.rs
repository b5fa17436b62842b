//! Parsing of command-line values: complex numbers, points and lists.

use gjtheta::{Error, Point, Result, C64};

fn number(field: &str, tok: &str) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        field: field.into(),
        message: format!("`{tok}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            field: field.into(),
            message: format!("`{tok}` is not finite"),
        });
    }
    Ok(v)
}

/// `re` or `re,im`.
pub fn complex(field: &str, text: &str) -> Result<C64> {
    match text.split_once(',') {
        Some((re, im)) => Ok(C64::new(number(field, re)?, number(field, im)?)),
        None => Ok(C64::new(number(field, text)?, 0.0)),
    }
}

/// A complex number or `inf`.
pub fn point(field: &str, text: &str) -> Result<Point> {
    if text.trim().eq_ignore_ascii_case("inf") {
        Ok(Point::Infinity)
    } else {
        complex(field, text).map(Point::Finite)
    }
}

fn items(text: &str) -> impl Iterator<Item = &str> {
    text.split(';').map(str::trim).filter(|s| !s.is_empty())
}

/// Semicolon-separated complex numbers.
pub fn complex_list(field: &str, text: &str) -> Result<Vec<C64>> {
    items(text).map(|t| complex(field, t)).collect()
}

/// Semicolon-separated points.
pub fn point_list(field: &str, text: &str) -> Result<Vec<Point>> {
    items(text).map(|t| point(field, t)).collect()
}
