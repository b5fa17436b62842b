//! Singular differentials and Abel-map primitives on the projective line.
//!
//! Infinite preimages and base points are handled by the limits of the
//! closed forms. In `exp xi` every point occurs once in the numerator and
//! once in the denominator, so a difference involving infinity is simply
//! dropped.

use crate::chart::AbelPoint;
use crate::curve::{CurveSpec, FormIndex, FormKind};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::C64;

fn require_rational(curve: &CurveSpec) -> Result<()> {
    if curve.base_genus != 0 {
        return Err(Error::Validation(format!(
            "operation needs a rational desingularization, base_genus is {}",
            curve.base_genus
        )));
    }
    Ok(())
}

fn diff(a: Point, b: Point) -> C64 {
    match (a, b) {
        (Point::Finite(x), Point::Finite(y)) => x - y,
        _ => C64::new(1.0, 0.0),
    }
}

fn form_name(kind: FormKind) -> String {
    match kind {
        FormKind::SimplePair { i, j } => format!("simple pair ({i},{j})"),
        FormKind::HigherOrder { i, j, h } => format!("higher-order form ({i},{j},{h})"),
    }
}

/// `exp xi` on the sphere: `0` at `p_{i,j}`, infinity at `p_{i,0}`.
pub fn exp_xi_point(curve: &CurveSpec, i: usize, j: usize, p: Point) -> Point {
    let p1 = curve.preimage(i, 0);
    let pj = curve.preimage(i, j);
    let p0 = curve.base_point;
    if p == p1 {
        return Point::Infinity;
    }
    if p == pj {
        return Point::Finite(C64::new(0.0, 0.0));
    }
    Point::Finite(diff(p, pj) * diff(p0, p1) / (diff(p, p1) * diff(p0, pj)))
}

/// Coefficients `(alpha, beta, gamma, delta)` with
/// `exp xi = (alpha t + beta) / (gamma t + delta)` in the affine coordinate.
pub fn exp_xi_mobius(curve: &CurveSpec, i: usize, j: usize) -> [C64; 4] {
    let p1 = curve.preimage(i, 0);
    let pj = curve.preimage(i, j);
    let p0 = curve.base_point;
    let k = diff(p0, p1) / diff(p0, pj);
    let one = C64::new(1.0, 0.0);
    let (alpha, beta) = match pj {
        Point::Finite(q) => (k, -k * q),
        Point::Infinity => (C64::new(0.0, 0.0), k),
    };
    let (gamma, delta) = match p1 {
        Point::Finite(q) => (one, -q),
        Point::Infinity => (C64::new(0.0, 0.0), one),
    };
    [alpha, beta, gamma, delta]
}

/// `exp` of the integral of the simple-pair form `(i, j)` from the base point.
pub fn exp_xi(curve: &CurveSpec, i: usize, j: usize, p: Point) -> Result<C64> {
    require_rational(curve)?;
    match exp_xi_point(curve, i, j, p) {
        Point::Finite(v) => Ok(v),
        Point::Infinity => Err(Error::Pole {
            form: form_name(FormKind::SimplePair { i, j }),
            preimage: curve.preimage(i, 0),
            point: p,
        }),
    }
}

/// `zeta` on the sphere: infinite exactly at the pole `p_{i,j}`.
pub fn zeta_point(curve: &CurveSpec, i: usize, j: usize, h: usize, p: Point) -> Point {
    let q = curve.preimage(i, j);
    let n = curve.pole_order(i, j, h) as i32;
    let p0 = curve.base_point;
    if p == q {
        return Point::Infinity;
    }
    match q {
        Point::Finite(q) => {
            let term = |x: Point| match x {
                Point::Infinity => C64::new(0.0, 0.0),
                Point::Finite(x) => (x - q).powi(-n),
            };
            Point::Finite((term(p0) - term(p)) / n as f64)
        }
        // The form is -t^{n-1} dt in the affine coordinate.
        Point::Infinity => {
            let (Point::Finite(p0), Point::Finite(p)) = (p0, p) else {
                unreachable!("base point and p differ from the infinite preimage")
            };
            Point::Finite((p0.powi(n) - p.powi(n)) / n as f64)
        }
    }
}

/// Integral of the higher-order form `(i, j, h)` from the base point.
pub fn zeta(curve: &CurveSpec, i: usize, j: usize, h: usize, p: Point) -> Result<C64> {
    require_rational(curve)?;
    match zeta_point(curve, i, j, h, p) {
        Point::Finite(v) => Ok(v),
        Point::Infinity => Err(Error::Pole {
            form: form_name(FormKind::HigherOrder { i, j, h }),
            preimage: curve.preimage(i, j),
            point: p,
        }),
    }
}

/// Coefficient of `dt` of the form `idx` at the finite point `t`.
pub fn form_value(curve: &CurveSpec, idx: &FormIndex, t: C64) -> Result<C64> {
    let tp = Point::Finite(t);
    let pole = |preimage: Point| Error::Pole {
        form: form_name(idx.kind),
        preimage,
        point: tp,
    };
    match idx.kind {
        FormKind::SimplePair { i, j } => {
            let mut v = C64::new(0.0, 0.0);
            for (pre, sign) in [(curve.preimage(i, j), 1.0), (curve.preimage(i, 0), -1.0)] {
                if let Point::Finite(q) = pre {
                    if q == t {
                        return Err(pole(pre));
                    }
                    v += sign / (t - q);
                }
            }
            Ok(v)
        }
        FormKind::HigherOrder { i, j, h } => {
            let n = curve.pole_order(i, j, h) as i32;
            match curve.preimage(i, j) {
                Point::Finite(q) if q == t => Err(pole(Point::Finite(q))),
                Point::Finite(q) => Ok((t - q).powi(-1 - n)),
                Point::Infinity => Ok(-t.powi(n - 1)),
            }
        }
    }
}

/// All `exp xi` and `zeta` coordinates at `p`, as points of the sphere.
pub fn abel_values_p1(curve: &CurveSpec, p: Point) -> (Vec<Point>, Vec<Point>) {
    let xs = curve
        .simple_pairs()
        .iter()
        .map(|f| match f.kind {
            FormKind::SimplePair { i, j } => exp_xi_point(curve, i, j, p),
            FormKind::HigherOrder { .. } => unreachable!(),
        })
        .collect();
    let zs = curve
        .higher_orders()
        .iter()
        .map(|f| match f.kind {
            FormKind::HigherOrder { i, j, h } => zeta_point(curve, i, j, h, p),
            FormKind::SimplePair { .. } => unreachable!(),
        })
        .collect();
    (xs, zs)
}

/// Abel map of a point of the projective line, in its natural chart.
pub fn abel_map_p1(curve: &CurveSpec, p: Point) -> Result<AbelPoint> {
    require_rational(curve)?;
    let (xs, zs) = abel_values_p1(curve, p);
    Ok(AbelPoint::from_values(&xs, &zs, Vec::new()))
}
