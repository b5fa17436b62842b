//! Rational desingularization: the pulled-back section is a rational
//! function of the affine coordinate, so its zeros come from a polynomial
//! and every functional is a residue of an explicit factor.

use std::f64::consts::PI;

use serde::Serialize;

use super::{
    AbelSum, Family, ShiftFunctionals, Summand, Zero, ZeroSet, CLUSTER_TOL, COLLISION_TOL,
};
use crate::contour::{contour_residue, integrate_segment, log_weighted_residue};
use crate::curve::{CurveSpec, FormIndex, FormKind};
use crate::error::{Error, Result};
use crate::gen_theta::ShiftParams;
use crate::point::Point;
use crate::poly::{cluster, roots, Poly};
use crate::rational::{exp_xi_mobius, exp_xi_point, form_value, zeta_point};
use crate::C64;

const DEGREE_TOL: f64 = 1e-12;
const NODES: usize = 256;
const MAX_SHRINKS: usize = 10;

fn require_rational(curve: &CurveSpec, shift: &ShiftParams) -> Result<()> {
    if curve.base_genus != 0 {
        return Err(Error::Validation(
            "rational harness needs base_genus = 0".into(),
        ));
    }
    shift.check_dimensions(curve.simple_pairs().len(), curve.higher_orders().len(), 0)
}

fn all_forms(curve: &CurveSpec) -> Vec<FormIndex> {
    curve
        .simple_pairs()
        .into_iter()
        .chain(curve.higher_orders())
        .collect()
}

/// Numerator of the `U0` factor of `f` after clearing its denominator.
fn factor_numerator(curve: &CurveSpec, f: &FormIndex, shift: &ShiftParams) -> Poly {
    match f.kind {
        FormKind::SimplePair { i, j } => {
            let [alpha, beta, gamma, delta] = exp_xi_mobius(curve, i, j);
            let ainv = 1.0 / shift.a[f.flat_index];
            Poly::linear(ainv * beta - delta, ainv * alpha - gamma)
        }
        FormKind::HigherOrder { i, j, h } => {
            let b = shift.b[f.flat_index];
            let n = curve.pole_order(i, j, h) as usize;
            let inv_n = C64::new(1.0 / n as f64, 0.0);
            match curve.preimage(i, j) {
                Point::Finite(q) => {
                    let c = match curve.base_point {
                        Point::Finite(p0) => (p0 - q).powi(-(n as i32)) * inv_n,
                        Point::Infinity => C64::new(0.0, 0.0),
                    };
                    Poly::binomial_power(q, n)
                        .scale(c - b)
                        .add(&Poly::constant(-inv_n))
                }
                Point::Infinity => {
                    let Point::Finite(p0) = curve.base_point else {
                        unreachable!("base point differs from every preimage")
                    };
                    let mut coefs = vec![C64::new(0.0, 0.0); n + 1];
                    coefs[0] = p0.powi(n as i32) * inv_n - b;
                    coefs[n] = -inv_n;
                    Poly(coefs)
                }
            }
        }
    }
}

/// The pulled-back section with all denominators cleared; its formal
/// degree is the section degree.
pub fn section_polynomial(curve: &CurveSpec, shift: &ShiftParams) -> Result<Poly> {
    require_rational(curve, shift)?;
    Ok(all_forms(curve)
        .iter()
        .fold(Poly::constant(C64::new(1.0, 0.0)), |acc, f| {
            acc.mul(&factor_numerator(curve, f, shift))
        }))
}

fn special_points(curve: &CurveSpec) -> Vec<(Point, String)> {
    let mut out = vec![(curve.base_point, "the base point".to_string())];
    for (i, sp) in curve.singular_points.iter().enumerate() {
        for (j, p) in sp.preimages.iter().enumerate() {
            out.push((*p, format!("preimage ({i},{j})")));
        }
    }
    out
}

/// Zeros of the translated section on the projective line. A drop of the
/// polynomial degree puts the missing zeros at infinity.
pub fn find_zeros_rational(curve: &CurveSpec, shift: &ShiftParams) -> Result<ZeroSet> {
    let poly = section_polynomial(curve, shift)?;
    let formal = poly.0.len() - 1;
    let degree = poly.effective_degree(DEGREE_TOL);
    let mut zeros: Vec<Zero> = cluster(&roots(&poly.truncated(degree)), CLUSTER_TOL)
        .into_iter()
        .map(|(z, multiplicity)| Zero {
            point: Point::Finite(z),
            multiplicity,
        })
        .collect();
    if degree < formal {
        zeros.push(Zero {
            point: Point::Infinity,
            multiplicity: formal - degree,
        });
    }
    for zero in &zeros {
        for (p, name) in special_points(curve) {
            if zero.point.chordal_distance(&p) < COLLISION_TOL {
                return Err(Error::DegenerateShift(format!(
                    "zero {} of the section coincides with {name}",
                    zero.point
                )));
            }
        }
    }
    Ok(ZeroSet::new(zeros, curve))
}

/// Chart for factor `f` near `site`: the chart at infinity for a simple
/// pair when `|exp xi| > 1`, and for a higher-order form unless `zeta`
/// vanishes there.
fn factor_chart(curve: &CurveSpec, f: &FormIndex, site: Point) -> bool {
    match f.kind {
        FormKind::SimplePair { i, j } => match exp_xi_point(curve, i, j, site) {
            Point::Infinity => true,
            Point::Finite(v) => v.norm() > 1.0,
        },
        FormKind::HigherOrder { i, j, h } => match zeta_point(curve, i, j, h, site) {
            Point::Infinity => true,
            Point::Finite(v) => v.norm() > 1e-14,
        },
    }
}

/// The factor of `f` in its `U0` or `U1` trivialisation at the finite point `t`.
fn factor_value(
    curve: &CurveSpec,
    f: &FormIndex,
    shift: &ShiftParams,
    at_inf: bool,
    t: C64,
) -> C64 {
    let nan = C64::new(f64::NAN, f64::NAN);
    let p = Point::Finite(t);
    match f.kind {
        FormKind::SimplePair { i, j } => {
            let ainv = 1.0 / shift.a[f.flat_index];
            match (exp_xi_point(curve, i, j, p), at_inf) {
                (Point::Finite(e), false) => ainv * e - 1.0,
                (Point::Finite(e), true) => ainv - 1.0 / e,
                (Point::Infinity, false) => nan,
                (Point::Infinity, true) => ainv,
            }
        }
        FormKind::HigherOrder { i, j, h } => {
            let b = shift.b[f.flat_index];
            match (zeta_point(curve, i, j, h, p), at_inf) {
                (Point::Finite(v), false) => v - b,
                (Point::Finite(v), true) => 1.0 - b / v,
                (Point::Infinity, false) => nan,
                (Point::Infinity, true) => C64::new(1.0, 0.0),
            }
        }
    }
}

/// Poles of the form `f` on the sphere.
fn form_poles(curve: &CurveSpec, f: &FormIndex) -> Vec<Point> {
    match f.kind {
        FormKind::SimplePair { i, j } => vec![curve.preimage(i, j), curve.preimage(i, 0)],
        FormKind::HigherOrder { i, j, .. } => vec![curve.preimage(i, j)],
    }
}

/// Local coordinate `s` at `site`: `t - site`, or `1/t` at infinity.
fn local(site: Point, p: Point) -> Option<C64> {
    match (site, p) {
        (Point::Finite(c), Point::Finite(t)) => Some(t - c),
        (Point::Infinity, Point::Finite(t)) => Some(1.0 / t),
        (Point::Finite(_), Point::Infinity) => None,
        (Point::Infinity, Point::Infinity) => Some(C64::new(0.0, 0.0)),
    }
}

fn from_local(site: Point, s: C64) -> (C64, C64) {
    match site {
        Point::Finite(c) => (c + s, C64::new(1.0, 0.0)),
        Point::Infinity => (1.0 / s, -1.0 / (s * s)),
    }
}

fn initial_radius(curve: &CurveSpec, site: Point) -> f64 {
    let mut others: Vec<Point> = curve.all_preimages();
    others.push(curve.base_point);
    let min = others
        .iter()
        .filter(|p| p.chordal_distance(&site) > 0.0)
        .filter_map(|p| local(site, *p))
        .map(|s| s.norm())
        .fold(f64::INFINITY, f64::min);
    if min.is_finite() {
        0.25 * min
    } else {
        0.25
    }
}

/// Residue at `site` of `log F_k * omega_slot` with `F_k` in the chart of
/// `factor_chart`, shrinking the circle while `F_k` winds around zero.
fn summand_at(
    curve: &CurveSpec,
    shift: &ShiftParams,
    factor: &FormIndex,
    slot: &FormIndex,
    site: Point,
) -> Result<C64> {
    let at_inf = factor_chart(curve, factor, site);
    let mut radius = initial_radius(curve, site);
    for _ in 0..MAX_SHRINKS {
        let mut f = |s: C64| -> Result<C64> {
            let (t, _) = from_local(site, s);
            Ok(factor_value(curve, factor, shift, at_inf, t))
        };
        let mut g = |s: C64| -> Result<C64> {
            let (t, dt) = from_local(site, s);
            Ok(form_value(curve, slot, t)? * dt)
        };
        if let Some(v) = log_weighted_residue(&mut f, &mut g, C64::new(0.0, 0.0), radius, NODES)? {
            return Ok(v);
        }
        radius *= 0.5;
    }
    Err(Error::DegenerateShift(format!(
        "the log argument of factor {} winds around zero on every circle at {site}",
        factor.flat_index
    )))
}

fn family(factor: &FormIndex, slot: &FormIndex) -> Family {
    match (factor.kind, slot.kind) {
        (FormKind::SimplePair { .. }, FormKind::SimplePair { .. }) => Family::M,
        (FormKind::HigherOrder { .. }, FormKind::SimplePair { .. }) => Family::N,
        (FormKind::SimplePair { .. }, FormKind::HigherOrder { .. }) => Family::P,
        (FormKind::HigherOrder { .. }, FormKind::HigherOrder { .. }) => Family::Q,
    }
}

/// One residue summand: factor `factor` paired with the form of `slot`,
/// summed over the poles of that form.
pub fn summand(
    curve: &CurveSpec,
    shift: &ShiftParams,
    factor: &FormIndex,
    slot: &FormIndex,
) -> Result<Summand> {
    let mut value = C64::new(0.0, 0.0);
    for site in form_poles(curve, slot) {
        value += summand_at(curve, shift, factor, slot, site)?;
    }
    Ok(Summand {
        family: family(factor, slot),
        factor: factor.flat_index,
        slot: slot.flat_index,
        value,
    })
}

/// All `M`, `N`, `P`, `Q` summands and their per-slot totals.
pub fn shift_functionals(curve: &CurveSpec, shift: &ShiftParams) -> Result<ShiftFunctionals> {
    require_rational(curve, shift)?;
    let forms = all_forms(curve);
    let pairs = curve.simple_pairs();
    let highs = curve.higher_orders();
    let mut xi = vec![C64::new(0.0, 0.0); pairs.len()];
    let mut zeta = vec![C64::new(0.0, 0.0); highs.len()];
    let mut summands = Vec::new();
    for slot in pairs.iter().chain(&highs) {
        for factor in &forms {
            let s = summand(curve, shift, factor, slot)?;
            match slot.kind {
                FormKind::SimplePair { .. } => xi[slot.flat_index] += s.value,
                FormKind::HigherOrder { .. } => zeta[slot.flat_index] += s.value,
            }
            summands.push(s);
        }
    }
    Ok(ShiftFunctionals {
        xi,
        zeta,
        lambda_part: Vec::new(),
        summands,
    })
}

/// `sum mult * (log exp xi, zeta)` over the zeros, principal logarithms.
pub fn abel_sum(curve: &CurveSpec, zeros: &ZeroSet) -> Result<AbelSum> {
    let pairs = curve.simple_pairs();
    let highs = curve.higher_orders();
    let mut xi = vec![C64::new(0.0, 0.0); pairs.len()];
    let mut zeta = vec![C64::new(0.0, 0.0); highs.len()];
    for zero in &zeros.zeros {
        let mult = zero.multiplicity as f64;
        for f in &pairs {
            let FormKind::SimplePair { i, j } = f.kind else {
                unreachable!()
            };
            match exp_xi_point(curve, i, j, zero.point) {
                Point::Finite(e) if e.norm() > 0.0 => xi[f.flat_index] += mult * e.ln(),
                _ => {
                    return Err(Error::DegenerateShift(format!(
                        "zero {} is a pole of xi",
                        zero.point
                    )))
                }
            }
        }
        for f in &highs {
            let FormKind::HigherOrder { i, j, h } = f.kind else {
                unreachable!()
            };
            match zeta_point(curve, i, j, h, zero.point) {
                Point::Finite(v) => zeta[f.flat_index] += mult * v,
                Point::Infinity => {
                    return Err(Error::DegenerateShift(format!(
                        "zero {} is a pole of zeta",
                        zero.point
                    )))
                }
            }
        }
    }
    Ok(AbelSum {
        xi,
        zeta,
        z: Vec::new(),
    })
}

/// Residuals of the cut-open contour identity, one per Abel slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourCheck {
    pub xi: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl ContourCheck {
    pub fn max_residual(&self) -> f64 {
        self.xi
            .iter()
            .chain(&self.zeta)
            .copied()
            .fold(0.0, f64::max)
    }
}

/// `f'/f` of the `U0` section at the finite point `t`, from the forms:
/// `sum a^{-1} E omega / (a^{-1} E - 1) + sum omega / (zeta - b)`.
fn dlog_section(curve: &CurveSpec, shift: &ShiftParams, t: C64) -> Result<C64> {
    let p = Point::Finite(t);
    let mut v = C64::new(0.0, 0.0);
    for f in all_forms(curve) {
        let w = form_value(curve, &f, t)?;
        match f.kind {
            FormKind::SimplePair { i, j } => {
                let Point::Finite(e) = exp_xi_point(curve, i, j, p) else {
                    return Err(Error::Accuracy(format!(
                        "contour passes through a pole at {t}"
                    )));
                };
                let ae = e / shift.a[f.flat_index];
                v += ae * w / (ae - 1.0);
            }
            FormKind::HigherOrder { i, j, h } => {
                let Point::Finite(z) = zeta_point(curve, i, j, h, p) else {
                    return Err(Error::Accuracy(format!(
                        "contour passes through a pole at {t}"
                    )));
                };
                v += w / (z - shift.b[f.flat_index]);
            }
        }
    }
    Ok(v)
}

fn min_separation(points: &[C64], k: usize) -> f64 {
    points
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != k)
        .map(|(_, p)| (p - points[k]).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Zeta slot: the residues of `zeta * f'/f` at the finite zeros and
/// preimages minus the integral over a circle enclosing all of them.
fn zeta_slot_residual(
    curve: &CurveSpec,
    shift: &ShiftParams,
    slot: &FormIndex,
    singular: &[C64],
) -> Result<f64> {
    let FormKind::HigherOrder { i, j, h } = slot.kind else {
        unreachable!()
    };
    let integrand = |t: C64| -> Result<C64> {
        let Point::Finite(z) = zeta_point(curve, i, j, h, Point::Finite(t)) else {
            return Err(Error::Accuracy(format!(
                "contour passes through a pole at {t}"
            )));
        };
        Ok(z * dlog_section(curve, shift, t)?)
    };
    let mut total = C64::new(0.0, 0.0);
    for (k, &x) in singular.iter().enumerate() {
        let sep = min_separation(singular, k);
        let r = if sep.is_finite() {
            0.25 * sep
        } else {
            0.25 * x.norm().max(1.0)
        };
        total += contour_residue(integrand, x, r, NODES)?;
    }
    let big = 2.0 * singular.iter().map(|x| x.norm()).fold(0.0, f64::max) + 1.0;
    total -= contour_residue(integrand, C64::new(0.0, 0.0), big, NODES)?;
    Ok(total.norm())
}

const PANELS: usize = 64;
const ORDER: usize = 16;

/// Simple-pair slot, in the plane `w = exp xi`: the big and small circles
/// around `0`, the two banks of the cut along the ray at angle `theta`, and
/// the residues of `log w * d log f` at the images of the remaining
/// singular points must cancel.
fn xi_slot_residual(
    curve: &CurveSpec,
    shift: &ShiftParams,
    slot: &FormIndex,
    singular: &[Point],
) -> Result<f64> {
    let FormKind::SimplePair { i, j } = slot.kind else {
        unreachable!()
    };
    let [alpha, beta, gamma, delta] = exp_xi_mobius(curve, i, j);
    let det = alpha * delta - beta * gamma;
    let g = |w: C64| -> Result<C64> {
        let den = alpha - gamma * w;
        let t = (delta * w - beta) / den;
        Ok(dlog_section(curve, shift, t)? * det / (den * den))
    };
    let (p1, pj) = (curve.preimage(i, 0), curve.preimage(i, j));
    let images: Vec<C64> = singular
        .iter()
        .filter(|p| p.chordal_distance(&p1) > 0.0 && p.chordal_distance(&pj) > 0.0)
        .filter_map(|p| exp_xi_point(curve, i, j, *p).as_finite())
        .collect();
    let theta = (0..64)
        .map(|k| 2.0 * PI * (k as f64 + 0.5) / 64.0)
        .max_by(|a, b| ray_clearance(&images, *a).total_cmp(&ray_clearance(&images, *b)))
        .unwrap();
    let (r_small, r_big) = if images.is_empty() {
        (0.5, 2.0)
    } else {
        (
            0.5 * images
                .iter()
                .map(|w| w.norm())
                .fold(f64::INFINITY, f64::min),
            2.0 * images.iter().map(|w| w.norm()).fold(0.0, f64::max),
        )
    };
    let ray = C64::from_polar(1.0, theta);

    // circle integrals (1/2 pi i) of log_theta(w) g(w) dw over the full turn
    let circle = |r: f64| -> Result<C64> {
        let v = integrate_segment(
            |phi| {
                let w = C64::from_polar(r, phi);
                let log_w = C64::new(r.ln(), phi);
                Ok(log_w * g(w)? * C64::new(0.0, 1.0) * w)
            },
            theta,
            theta + 2.0 * PI,
            PANELS,
            ORDER,
        )?;
        Ok(v / C64::new(0.0, 2.0 * PI))
    };
    // jump of log across the cut is 2 pi i, so the banks give the plain integral
    let banks = integrate_segment(
        |s| {
            let t = s.exp();
            Ok(g(ray * t)? * ray * t)
        },
        r_small.ln(),
        r_big.ln(),
        PANELS,
        ORDER,
    )?;
    let mut residues = C64::new(0.0, 0.0);
    for (k, &w) in images.iter().enumerate() {
        let rho = 0.25
            * min_separation(&images, k)
                .min(ray_distance(w, theta))
                .min(w.norm() - r_small)
                .min(r_big - w.norm());
        let log_theta = |w: C64| {
            let mut arg = w.arg();
            while arg <= theta {
                arg += 2.0 * PI;
            }
            while arg > theta + 2.0 * PI {
                arg -= 2.0 * PI;
            }
            C64::new(w.norm().ln(), arg)
        };
        residues += contour_residue(|v| Ok(log_theta(v) * g(v)?), w, rho, NODES)?;
    }
    Ok((circle(r_big)? - circle(r_small)? - banks - residues).norm())
}

fn ray_distance(w: C64, theta: f64) -> f64 {
    let along = w.re * theta.cos() + w.im * theta.sin();
    if along <= 0.0 {
        w.norm()
    } else {
        (w.im * theta.cos() - w.re * theta.sin()).abs()
    }
}

fn ray_clearance(images: &[C64], theta: f64) -> f64 {
    images
        .iter()
        .map(|w| ray_distance(*w, theta) / w.norm())
        .fold(f64::INFINITY, f64::min)
}

/// Cross-check of zeros and functionals by direct contour integration of
/// `(xi, zeta) d log f` around the cut-open sphere.
pub fn contour_bookkeeping(
    curve: &CurveSpec,
    shift: &ShiftParams,
    zeros: &ZeroSet,
) -> Result<ContourCheck> {
    require_rational(curve, shift)?;
    let mut singular: Vec<Point> = zeros.zeros.iter().map(|z| z.point).collect();
    singular.extend(curve.all_preimages());
    let finite: Vec<C64> = singular.iter().filter_map(|p| p.as_finite()).collect();
    let xi = curve
        .simple_pairs()
        .iter()
        .map(|f| xi_slot_residual(curve, shift, f, &singular))
        .collect::<Result<_>>()?;
    let zeta = curve
        .higher_orders()
        .iter()
        .map(|f| zeta_slot_residual(curve, shift, f, &finite))
        .collect::<Result<_>>()?;
    Ok(ContourCheck { xi, zeta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::SingularPoint;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn nodal() -> CurveSpec {
        CurveSpec::new(
            0,
            Point::finite(1.0, 0.0),
            None,
            vec![SingularPoint::node(vec![
                Point::Infinity,
                Point::finite(0.0, 0.0),
            ])],
        )
        .unwrap()
    }

    fn x5y2() -> CurveSpec {
        CurveSpec::new(
            0,
            Point::Infinity,
            None,
            vec![SingularPoint::cusp(Point::finite(0.0, 0.0), vec![1, 3])],
        )
        .unwrap()
    }

    #[test]
    fn mobius_matches_exp_xi() {
        let cv = CurveSpec::new(
            0,
            Point::finite(0.3, 0.1),
            None,
            vec![SingularPoint::node(vec![
                Point::finite(1.0, 1.0),
                Point::finite(-2.0, 0.5),
            ])],
        )
        .unwrap();
        let [a, b, g, d] = exp_xi_mobius(&cv, 0, 1);
        let t = c(0.7, -0.4);
        let e = exp_xi_point(&cv, 0, 1, Point::Finite(t))
            .as_finite()
            .unwrap();
        assert!((e - (a * t + b) / (g * t + d)).norm() < 1e-14);
    }

    #[test]
    fn nodal_zero_and_functional() {
        let a = c(0.8, 0.6);
        let shift = ShiftParams::new(vec![a], vec![], vec![]).unwrap();
        let zs = find_zeros_rational(&nodal(), &shift).unwrap();
        assert_eq!(zs.total_count, 1);
        assert!((zs.zeros[0].point.as_finite().unwrap() - a).norm() < 1e-13);
        let f = shift_functionals(&nodal(), &shift).unwrap();
        let mut d = f.xi[0] - (c(0.0, PI) + a.ln());
        d.im -= (d.im / (2.0 * PI)).round() * 2.0 * PI;
        assert!(d.norm() < 1e-10, "{}", f.xi[0]);
    }

    #[test]
    fn x5y2_zeros_match_closed_form() {
        let (b0, b1) = (c(0.4, -0.2), c(-0.3, 0.5));
        let shift = ShiftParams::new(vec![], vec![b0, b1], vec![]).unwrap();
        let zs = find_zeros_rational(&x5y2(), &shift).unwrap();
        assert_eq!(zs.total_count, 4);
        assert_eq!(zs.theorem_count, 2);
        let mut want = vec![-1.0 / b0];
        let r = (-1.0 / (3.0 * b1)).powf(1.0 / 3.0);
        for k in 0..3 {
            want.push(r * C64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0));
        }
        for w in want {
            assert!(zs
                .zeros
                .iter()
                .any(|z| (z.point.as_finite().unwrap() - w).norm() < 1e-10));
        }
    }

    #[test]
    fn zero_shift_is_degenerate() {
        let shift = ShiftParams::identity(0, 2, 0);
        assert!(matches!(
            find_zeros_rational(&x5y2(), &shift),
            Err(Error::DegenerateShift(_))
        ));
    }

    #[test]
    fn contour_identity_holds() {
        let shift = ShiftParams::new(vec![], vec![c(0.4, -0.2), c(-0.3, 0.5)], vec![]).unwrap();
        let zs = find_zeros_rational(&x5y2(), &shift).unwrap();
        let chk = contour_bookkeeping(&x5y2(), &shift, &zs).unwrap();
        assert!(chk.max_residual() < 1e-8, "{chk:?}");
        let shift = ShiftParams::new(vec![c(-0.7, 1.2)], vec![], vec![]).unwrap();
        let zs = find_zeros_rational(&nodal(), &shift).unwrap();
        let chk = contour_bookkeeping(&nodal(), &shift, &zs).unwrap();
        assert!(chk.max_residual() < 1e-8, "{chk:?}");
    }
}
