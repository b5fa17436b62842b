//! Genus-one desingularization: zeros by the argument principle on a grid
//! over a fundamental parallelogram, functionals from the section itself.

use std::f64::consts::PI;

use super::{AbelSum, ShiftFunctionals, Zero, ZeroSet, COLLISION_TOL};
use crate::chart::{AbelPoint, ChartIndex};
use crate::contour::log_weighted_residue;
use crate::curve::{genus_accounting, FormKind};
use crate::error::{Error, Result};
use crate::gen_theta::{gen_theta_general, ShiftParams};
use crate::periods::{PeriodData, TorusCurve};
use crate::point::Point;
use crate::theta::{riemann_theta, theta_d, theta_derivatives_genus1, MultiIndexSet};
use crate::C64;

const GRID: usize = 16;
const MAX_RETRIES: usize = 5;
const ARG_STEP: f64 = 0.4;
const MAX_EDGE_DEPTH: usize = 40;
const MAX_CELL_DEPTH: usize = 24;
const NEWTON_H: f64 = 1e-6;
const NODES: usize = 256;
const JITTER: [(f64, f64); MAX_RETRIES] = [
    (0.0137, 0.0091),
    (0.0311, 0.0213),
    (0.0073, 0.0419),
    (0.0449, 0.0057),
    (0.0251, 0.0337),
];

fn require_torus(tc: &TorusCurve, pd: &PeriodData, shift: &ShiftParams) -> Result<()> {
    let (m, n) = (
        tc.curve.simple_pairs().len(),
        tc.curve.higher_orders().len(),
    );
    pd.check_dimensions(1, m, n)?;
    shift.check_dimensions(m, n, 1)
}

/// Distance on the torus `C / (Z + tau Z)`.
pub fn torus_distance(a: C64, b: C64, tau: C64) -> f64 {
    let mut d = a - b;
    d -= (d.im / tau.im).round() * tau;
    d -= d.re.round();
    let mut best = d.norm();
    for s in [-1.0, 0.0, 1.0] {
        for t in [-1.0, 0.0, 1.0] {
            best = best.min((d + s + t * tau).norm());
        }
    }
    best
}

fn theta1(tc: &TorusCurve, u: C64) -> Result<C64> {
    Ok(tc.theta1_derivatives(u, 0)?[0])
}

/// The pulled-back section times `prod theta_1(u - p_{i,0}) prod theta_1(u - q)^n`,
/// which cancels every pole and leaves an entire quasi-periodic function
/// with exactly the zeros of the section. Evaluated in the natural chart
/// of `u` and multiplied back by the chart coordinates.
pub fn entire_section(
    tc: &TorusCurve,
    pd: &PeriodData,
    shift: &ShiftParams,
    u: C64,
) -> Result<C64> {
    let ap = tc.abel_map(u)?;
    let mut v = gen_theta_general(&ap, pd, shift, &ap.chart, tc.policy())?.value;
    let p0 = tc.base_point();
    for f in tc.curve.simple_pairs() {
        let FormKind::SimplePair { i, j } = f.kind else {
            unreachable!()
        };
        let (p1, pj) = (tc.preimage(i, 0), tc.preimage(i, j));
        v *= if ap.chart.xi_at_infinity.contains(f.flat_index) {
            theta1(tc, u - pj)? * theta1(tc, p0 - p1)? / theta1(tc, p0 - pj)?
        } else {
            theta1(tc, u - p1)?
        };
    }
    for f in tc.curve.higher_orders() {
        let FormKind::HigherOrder { i, j, h } = f.kind else {
            unreachable!()
        };
        let n = tc.curve.pole_order(i, j, h) as i32;
        let t = theta1(tc, u - tc.preimage(i, j))?.powi(n);
        v *= if ap.chart.zeta_at_infinity.contains(f.flat_index) {
            match ap.zeta_value(f.flat_index) {
                Point::Finite(z) => z * t,
                Point::Infinity => C64::new(f64::NAN, f64::NAN),
            }
        } else {
            t
        };
    }
    Ok(v)
}

/// Outcome of a grid pass that can be fixed by moving the grid.
enum Pass<T> {
    Done(T),
    Retry,
}

struct ArgTracker<'a> {
    f: &'a dyn Fn(C64) -> Result<C64>,
    tiny: f64,
}

impl ArgTracker<'_> {
    fn eval(&self, u: C64) -> Result<Option<C64>> {
        let v = (self.f)(u)?;
        if !v.re.is_finite() || !v.im.is_finite() || v.norm() <= self.tiny {
            return Ok(None);
        }
        Ok(Some(v))
    }

    /// Change of `arg f` along the segment, bisecting until each step is
    /// small. `None` means the segment passes through (or too close to) a zero.
    fn change(&self, a: C64, fa: C64, b: C64, fb: C64, depth: usize) -> Result<Option<f64>> {
        let r = fb / fa;
        let ratio = r.norm();
        if r.arg().abs() <= ARG_STEP && (0.5..=2.0).contains(&ratio) {
            return Ok(Some(r.arg()));
        }
        if depth >= MAX_EDGE_DEPTH {
            return Ok(None);
        }
        let mid = 0.5 * (a + b);
        let Some(fm) = self.eval(mid)? else {
            return Ok(None);
        };
        let Some(left) = self.change(a, fa, mid, fm, depth + 1)? else {
            return Ok(None);
        };
        let Some(right) = self.change(mid, fm, b, fb, depth + 1)? else {
            return Ok(None);
        };
        Ok(Some(left + right))
    }

    fn segment(&self, a: C64, b: C64) -> Result<Option<f64>> {
        let (Some(fa), Some(fb)) = (self.eval(a)?, self.eval(b)?) else {
            return Ok(None);
        };
        self.change(a, fa, b, fb, 0)
    }

    /// Winding number around the parallelogram `c, c + e1, c + e1 + e2, c + e2`.
    fn winding(&self, c: C64, e1: C64, e2: C64) -> Result<Option<i64>> {
        let corners = [c, c + e1, c + e1 + e2, c + e2, c];
        let mut total = 0.0;
        for w in corners.windows(2) {
            let Some(d) = self.segment(w[0], w[1])? else {
                return Ok(None);
            };
            total += d;
        }
        rounded_winding(total)
    }
}

fn rounded_winding(total: f64) -> Result<Option<i64>> {
    let k = total / (2.0 * PI);
    if (k - k.round()).abs() > 0.1 {
        return Ok(None);
    }
    Ok(Some(k.round() as i64))
}

fn newton(f: &dyn Fn(C64) -> Result<C64>, mut u: C64) -> Result<Option<C64>> {
    for _ in 0..80 {
        let v = f(u)?;
        if v == C64::new(0.0, 0.0) {
            return Ok(Some(u));
        }
        let d = (f(u + NEWTON_H)? - f(u - NEWTON_H)?) / (2.0 * NEWTON_H);
        let step = v / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Ok(None);
        }
        u -= step;
        if step.norm() < 1e-15 * (1.0 + u.norm()) {
            return Ok(Some(u));
        }
    }
    Ok(Some(u))
}

/// Lattice coordinates of `u - c` in the basis `e1, e2`.
fn cell_coords(u: C64, c: C64, e1: C64, e2: C64) -> (f64, f64) {
    let d = u - c;
    let det = e1.re * e2.im - e1.im * e2.re;
    (
        (d.re * e2.im - d.im * e2.re) / det,
        (e1.re * d.im - e1.im * d.re) / det,
    )
}

fn locate(
    tr: &ArgTracker,
    c: C64,
    e1: C64,
    e2: C64,
    winding: i64,
    depth: usize,
    out: &mut Vec<Zero>,
) -> Result<Pass<()>> {
    if winding == 0 {
        return Ok(Pass::Done(()));
    }
    if winding < 0 {
        return Ok(Pass::Retry);
    }
    let center = c + 0.5 * (e1 + e2);
    if winding == 1 || depth >= MAX_CELL_DEPTH {
        if let Some(u) = newton(tr.f, center)? {
            let (s, t) = cell_coords(u, c, e1, e2);
            if (-0.01..=1.01).contains(&s) && (-0.01..=1.01).contains(&t) {
                out.push(Zero {
                    point: Point::Finite(u),
                    multiplicity: winding as usize,
                });
                return Ok(Pass::Done(()));
            }
        }
        if depth >= MAX_CELL_DEPTH {
            return Ok(Pass::Retry);
        }
    }
    let (h1, h2) = (0.5 * e1, 0.5 * e2);
    let mut total = 0;
    let mut subs = Vec::with_capacity(4);
    for (a, b) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        let sc = c + a * h1 + b * h2;
        let Some(w) = tr.winding(sc, h1, h2)? else {
            return Ok(Pass::Retry);
        };
        total += w;
        subs.push((sc, w));
    }
    if total != winding {
        return Ok(Pass::Retry);
    }
    for (sc, w) in subs {
        if let Pass::Retry = locate(tr, sc, h1, h2, w, depth + 1, out)? {
            return Ok(Pass::Retry);
        }
    }
    Ok(Pass::Done(()))
}

fn grid_pass(tr: &ArgTracker, origin: C64, tau: C64) -> Result<Pass<Vec<Zero>>> {
    let (e1, e2) = (C64::new(1.0 / GRID as f64, 0.0), tau / GRID as f64);
    let node = |a: usize, b: usize| origin + a as f64 * e1 + b as f64 * e2;
    let mut values = vec![C64::new(0.0, 0.0); (GRID + 1) * (GRID + 1)];
    for b in 0..=GRID {
        for a in 0..=GRID {
            let Some(v) = tr.eval(node(a, b))? else {
                return Ok(Pass::Retry);
            };
            values[b * (GRID + 1) + a] = v;
        }
    }
    let val = |a: usize, b: usize| values[b * (GRID + 1) + a];
    let mut horizontal = vec![0.0; GRID * (GRID + 1)];
    let mut vertical = vec![0.0; (GRID + 1) * GRID];
    for b in 0..=GRID {
        for a in 0..GRID {
            let Some(d) = tr.change(node(a, b), val(a, b), node(a + 1, b), val(a + 1, b), 0)?
            else {
                return Ok(Pass::Retry);
            };
            horizontal[b * GRID + a] = d;
        }
    }
    for b in 0..GRID {
        for a in 0..=GRID {
            let Some(d) = tr.change(node(a, b), val(a, b), node(a, b + 1), val(a, b + 1), 0)?
            else {
                return Ok(Pass::Retry);
            };
            vertical[b * (GRID + 1) + a] = d;
        }
    }
    let mut zeros = Vec::new();
    for b in 0..GRID {
        for a in 0..GRID {
            let total = horizontal[b * GRID + a] + vertical[b * (GRID + 1) + a + 1]
                - horizontal[(b + 1) * GRID + a]
                - vertical[b * (GRID + 1) + a];
            let Some(w) = rounded_winding(total)? else {
                return Ok(Pass::Retry);
            };
            if let Pass::Retry = locate(tr, node(a, b), e1, e2, w, 0, &mut zeros)? {
                return Ok(Pass::Retry);
            }
        }
    }
    Ok(Pass::Done(zeros))
}

/// Zeros of the translated section on one fundamental parallelogram,
/// located by winding numbers on a 16x16 grid (quadtree refinement where a
/// cell holds several) and polished by Newton's method.
pub fn find_zeros_torus(tc: &TorusCurve, pd: &PeriodData, shift: &ShiftParams) -> Result<ZeroSet> {
    require_torus(tc, pd, shift)?;
    let expected = genus_accounting(&tc.curve).section_degree;
    let f = |u: C64| entire_section(tc, pd, shift, u);
    let tau = tc.tau;
    let probe: Vec<f64> = (0..8)
        .map(|k| f(C64::new(0.37 + 0.11 * k as f64, 0.0) + 0.53 * tau).map(|v| v.norm()))
        .collect::<Result<_>>()?;
    let scale = probe.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateShift(
            "the translated section vanishes identically".into(),
        ));
    }
    let tr = ArgTracker {
        f: &f,
        tiny: 1e-13 * scale,
    };
    let mut last = String::from("every grid placement hit a zero on a cell boundary");
    for (s, t) in JITTER {
        let origin = C64::new(-s, 0.0) - t * tau;
        match grid_pass(&tr, origin, tau)? {
            Pass::Retry => continue,
            Pass::Done(zeros) => {
                let count: usize = zeros.iter().map(|z| z.multiplicity).sum();
                if count != expected {
                    last = format!("found {count} zeros, expected {expected}");
                    continue;
                }
                check_collisions(tc, &zeros)?;
                return Ok(ZeroSet::new(zeros, &tc.curve));
            }
        }
    }
    Err(Error::Geometry(format!(
        "{last} after {MAX_RETRIES} placements"
    )))
}

fn check_collisions(tc: &TorusCurve, zeros: &[Zero]) -> Result<()> {
    let mut special = vec![(tc.base_point(), "the base point".to_string())];
    for (i, sp) in tc.curve.singular_points.iter().enumerate() {
        for j in 0..sp.preimages.len() {
            special.push((tc.preimage(i, j), format!("preimage ({i},{j})")));
        }
    }
    for z in zeros {
        let u = z.point.as_finite().expect("torus zeros are finite");
        for (p, name) in &special {
            if torus_distance(u, *p, tc.tau) < COLLISION_TOL {
                return Err(Error::DegenerateShift(format!(
                    "zero {u} coincides with {name}"
                )));
            }
        }
    }
    Ok(())
}

/// `sum mult * (log exp xi, zeta, z)` over the zeros.
pub fn abel_sum(tc: &TorusCurve, zeros: &ZeroSet) -> Result<AbelSum> {
    let (m, n) = (
        tc.curve.simple_pairs().len(),
        tc.curve.higher_orders().len(),
    );
    let mut xi = vec![C64::new(0.0, 0.0); m];
    let mut zeta = vec![C64::new(0.0, 0.0); n];
    let mut z = vec![C64::new(0.0, 0.0)];
    for zero in &zeros.zeros {
        let u = zero.point.as_finite().expect("torus zeros are finite");
        let mult = zero.multiplicity as f64;
        let ap = tc.abel_map(u)?;
        for (j, x) in xi.iter_mut().enumerate() {
            match ap.exp_xi_value(j) {
                Point::Finite(e) if e.norm() > 0.0 => *x += mult * e.ln(),
                _ => return Err(Error::DegenerateShift(format!("zero {u} is a pole of xi"))),
            }
        }
        for (i, v) in zeta.iter_mut().enumerate() {
            match ap.zeta_value(i) {
                Point::Finite(s) => *v += mult * s,
                Point::Infinity => {
                    return Err(Error::DegenerateShift(format!(
                        "zero {u} is a pole of zeta"
                    )))
                }
            }
        }
        z[0] += mult * ap.z[0];
    }
    Ok(AbelSum { xi, zeta, z })
}

/// Abel point at `u` and the chart used for functionals there: the natural
/// chart for the `exp xi` coordinates, `U1` for every `zeta` that does not vanish.
fn functional_chart(tc: &TorusCurve, u: C64) -> Result<(AbelPoint, ChartIndex)> {
    let ap = tc.abel_map(u)?;
    let mut chart = ap.chart;
    chart.zeta_at_infinity = MultiIndexSet::empty(ap.zeta.len());
    for i in 0..ap.zeta.len() {
        let vanishes = matches!(ap.zeta_value(i), Point::Finite(v) if v.norm() <= 1e-14);
        if !vanishes {
            chart.zeta_at_infinity.insert(i);
        }
    }
    Ok((ap, chart))
}

fn section_in(
    tc: &TorusCurve,
    pd: &PeriodData,
    shift: &ShiftParams,
    ap: &AbelPoint,
    chart: &ChartIndex,
) -> Result<C64> {
    Ok(gen_theta_general(ap, pd, shift, chart, tc.policy())?.value)
}

fn nonzero_log(v: C64, what: &str) -> Result<C64> {
    if v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::DegenerateShift(format!(
            "the section vanishes at {what}"
        )));
    }
    Ok(v.ln())
}

/// Functionals of the torus section: `log s(p_j) - log s(p_1)` for simple
/// pairs, `Res_q log s * omega` for higher-order forms, and `lambda`.
pub fn shift_functionals(
    tc: &TorusCurve,
    pd: &PeriodData,
    shift: &ShiftParams,
) -> Result<ShiftFunctionals> {
    require_torus(tc, pd, shift)?;
    let mut xi = Vec::new();
    for f in tc.curve.simple_pairs() {
        let FormKind::SimplePair { i, j } = f.kind else {
            unreachable!()
        };
        let (apj, chj) = functional_chart(tc, tc.preimage(i, j))?;
        let (ap1, ch1) = functional_chart(tc, tc.preimage(i, 0))?;
        xi.push(
            nonzero_log(
                section_in(tc, pd, shift, &apj, &chj)?,
                "a simple-pair preimage",
            )? - nonzero_log(
                section_in(tc, pd, shift, &ap1, &ch1)?,
                "a simple-pair preimage",
            )?,
        );
    }
    let mut zeta = Vec::new();
    let lattice_min = [C64::new(1.0, 0.0), tc.tau, tc.tau + 1.0, tc.tau - 1.0]
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min);
    for f in tc.curve.higher_orders() {
        let FormKind::HigherOrder { i, j, .. } = f.kind else {
            unreachable!()
        };
        let q = tc.preimage(i, j);
        let (_, chart) = functional_chart(tc, q)?;
        let mut radius = tc
            .curve
            .all_preimages()
            .iter()
            .filter_map(|p| p.as_finite())
            .map(|p| torus_distance(p, q, tc.tau))
            .filter(|d| *d > 0.0)
            .fold(lattice_min, f64::min)
            * 0.25;
        let mut value = None;
        for _ in 0..10 {
            let mut s = |u: C64| -> Result<C64> {
                let ap = tc.abel_map(u)?;
                section_in(tc, pd, shift, &ap, &chart)
            };
            let mut w = |u: C64| tc.form_value(&f, u);
            value = log_weighted_residue(&mut s, &mut w, q, radius, NODES)?;
            if value.is_some() {
                break;
            }
            radius *= 0.5;
        }
        zeta.push(value.ok_or_else(|| {
            Error::DegenerateShift(format!(
                "the section winds around zero on every circle at {q}"
            ))
        })?);
    }
    Ok(ShiftFunctionals {
        xi,
        zeta,
        lambda_part: shift.lambda.clone(),
        summands: Vec::new(),
    })
}

/// Closed-form right-hand sides `(xi, zeta, z)` of the Abel sum up to the
/// Riemann constant, where they are known: a single node
/// (`log a + log theta(z(p_2) - lambda) - log theta(z(p_1) + nu - lambda)`, `lambda`),
/// a single cusp of order one (`b + C(lambda)`, `lambda`) and the smooth
/// case (`lambda`).
pub fn explicit_rhs(
    tc: &TorusCurve,
    pd: &PeriodData,
    shift: &ShiftParams,
) -> Result<Option<Vec<C64>>> {
    require_torus(tc, pd, shift)?;
    let (m, n) = (pd.m(), pd.n());
    let lambda = shift.lambda[0];
    let p0 = tc.base_point();
    let pol = tc.policy();
    let theta = |w: C64| riemann_theta(&[w], &pd.z, pol);
    match (m, n) {
        (0, 0) => Ok(Some(vec![lambda])),
        (1, 0) => {
            let FormKind::SimplePair { i, j } = tc.curve.simple_pairs()[0].kind else {
                unreachable!()
            };
            let (p1, p2) = (tc.preimage(i, 0), tc.preimage(i, j));
            let num = theta(p2 - p0 - lambda)?;
            let den = theta(p1 - p0 + pd.nu[(0, 0)] - lambda)?;
            Ok(Some(vec![
                shift.a[0].ln() + nonzero_log(num, "z(p2) - lambda")?
                    - nonzero_log(den, "z(p1) + nu - lambda")?,
                lambda,
            ]))
        }
        (0, 1) => {
            let FormKind::HigherOrder { i, j, h } = tc.curve.higher_orders()[0].kind else {
                unreachable!()
            };
            if tc.curve.pole_order(i, j, h) != 1 {
                return Ok(None);
            }
            let w = tc.preimage(i, j) - p0 - lambda;
            let d = theta_derivatives_genus1(w, &pd.z, 1, pol)?;
            let dd = theta_d(&MultiIndexSet::full(1), &[w], &pd.z, &pd.w_rows(), pol)?;
            let c = (-d[1] + dd) / d[0];
            Ok(Some(vec![shift.b[0] + c, lambda]))
        }
        _ => Ok(None),
    }
}
