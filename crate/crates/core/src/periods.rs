//! Period data `(Z, Y, W, nu)` and the genus-one construction of the
//! singular primitives from the odd Jacobi theta function.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chart::AbelPoint;
use crate::curve::{CurveSpec, FormIndex, FormKind};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::theta::{theta_derivatives_genus1, RiemannMatrix, TruncationPolicy};
use crate::wire::{matrix_from_wire, matrix_to_wire, WireMatrix};
use crate::{C64, TWO_PI_I};

/// Representative of `z` modulo `Z + tau Z` with both lattice coordinates in `[0, 1)`.
pub fn reduce_to_fundamental_domain(z: C64, tau: C64) -> C64 {
    let t = z.im / tau.im;
    let s = z.re - t * tau.re;
    let frac = |v: f64| {
        let f = v - v.floor();
        if f >= 1.0 - 1e-14 {
            0.0
        } else {
            f
        }
    };
    frac(s) + frac(t) * tau
}

/// A curve whose desingularization is the torus `C / (Z + tau Z)`.
#[derive(Debug, Clone)]
pub struct TorusCurve {
    pub tau: C64,
    /// The curve with every point reduced to the fundamental domain.
    pub curve: CurveSpec,
    rm: RiemannMatrix,
    pol: TruncationPolicy,
}

fn finite(p: Point) -> C64 {
    p.as_finite().expect("torus points are finite")
}

impl TorusCurve {
    pub fn new(curve: &CurveSpec) -> Result<Self> {
        let tau = match (curve.base_genus, curve.tau) {
            (1, Some(t)) => t,
            _ => {
                return Err(Error::Validation(
                    "a torus curve needs base_genus = 1 and tau".into(),
                ))
            }
        };
        let mut reduced = curve.clone();
        let red = |p: Point| Point::Finite(reduce_to_fundamental_domain(finite(p), tau));
        reduced.base_point = red(reduced.base_point);
        for sp in &mut reduced.singular_points {
            for p in &mut sp.preimages {
                *p = red(*p);
            }
        }
        reduced.validate()?;
        Ok(TorusCurve {
            tau,
            curve: reduced,
            rm: RiemannMatrix::from_tau(tau)?,
            pol: TruncationPolicy::default(),
        })
    }

    pub fn with_policy(mut self, pol: TruncationPolicy) -> Self {
        self.pol = pol;
        self
    }

    pub fn riemann_matrix(&self) -> &RiemannMatrix {
        &self.rm
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.pol
    }

    pub fn base_point(&self) -> C64 {
        finite(self.curve.base_point)
    }

    pub fn preimage(&self, i: usize, j: usize) -> C64 {
        finite(self.curve.preimage(i, j))
    }

    /// `theta_1^{(k)}(u)` for `k = 0..=order`.
    pub fn theta1_derivatives(&self, u: C64, order: usize) -> Result<Vec<C64>> {
        theta1_derivatives(u, &self.rm, order, &self.pol)
    }

    /// `d^k/du^k (theta_1'/theta_1)(u)` for `k = 0..=order`.
    pub fn log_derivatives(&self, u: C64, order: usize) -> Result<Vec<C64>> {
        let f = self.theta1_derivatives(u, order + 1)?;
        log_derivatives_from(&f, order)
    }

    fn near_lattice(&self, u: C64) -> bool {
        let r = reduce_to_fundamental_domain(u, self.tau);
        [
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            self.tau,
            self.tau + 1.0,
        ]
        .iter()
        .any(|c| (r - c).norm() < 1e-12)
    }

    fn pole(&self, idx: &FormIndex, preimage: C64, u: C64) -> Error {
        Error::Pole {
            form: format!("{:?}", idx.kind),
            preimage: Point::Finite(preimage),
            point: Point::Finite(u),
        }
    }

    /// Primitive normalized to vanish at the base point: `exp xi` for simple
    /// pairs (single valued), `zeta` for higher-order forms.
    pub fn primitive(&self, idx: &FormIndex, u: C64) -> Result<C64> {
        let p0 = self.base_point();
        match idx.kind {
            FormKind::SimplePair { i, j } => {
                let (p1, pj) = (self.preimage(i, 0), self.preimage(i, j));
                if self.near_lattice(u - p1) {
                    return Err(self.pole(idx, p1, u));
                }
                let t = |w: C64| -> Result<C64> { Ok(self.theta1_derivatives(w, 0)?[0]) };
                Ok(t(u - pj)? * t(p0 - p1)? / (t(u - p1)? * t(p0 - pj)?))
            }
            FormKind::HigherOrder { i, j, h } => {
                let q = self.preimage(i, j);
                if self.near_lattice(u - q) {
                    return Err(self.pole(idx, q, u));
                }
                let n = self.curve.pole_order(i, j, h) as usize;
                let coef = higher_order_coefficient(n);
                let at = |w: C64| -> Result<C64> { Ok(self.log_derivatives(w, n - 1)?[n - 1]) };
                Ok(coef * (at(u - q)? - at(p0 - q)?))
            }
        }
    }

    /// Coefficient of `du` of the singular form at `u`.
    pub fn form_value(&self, idx: &FormIndex, u: C64) -> Result<C64> {
        match idx.kind {
            FormKind::SimplePair { i, j } => {
                let (p1, pj) = (self.preimage(i, 0), self.preimage(i, j));
                for q in [p1, pj] {
                    if self.near_lattice(u - q) {
                        return Err(self.pole(idx, q, u));
                    }
                }
                Ok(self.log_derivatives(u - pj, 0)?[0] - self.log_derivatives(u - p1, 0)?[0])
            }
            FormKind::HigherOrder { i, j, h } => {
                let q = self.preimage(i, j);
                if self.near_lattice(u - q) {
                    return Err(self.pole(idx, q, u));
                }
                let n = self.curve.pole_order(i, j, h) as usize;
                Ok(higher_order_coefficient(n) * self.log_derivatives(u - q, n)?[n])
            }
        }
    }

    /// Abel map at the parameter `u`, with `z = u - p0` along the straight path.
    pub fn abel_map(&self, u: C64) -> Result<AbelPoint> {
        let p0 = self.base_point();
        let mut xs = Vec::new();
        for f in self.curve.simple_pairs() {
            let FormKind::SimplePair { i, .. } = f.kind else {
                unreachable!()
            };
            xs.push(if self.near_lattice(u - self.preimage(i, 0)) {
                Point::Infinity
            } else {
                Point::Finite(self.primitive(&f, u)?)
            });
        }
        let mut zs = Vec::new();
        for f in self.curve.higher_orders() {
            let FormKind::HigherOrder { i, j, .. } = f.kind else {
                unreachable!()
            };
            zs.push(if self.near_lattice(u - self.preimage(i, j)) {
                Point::Infinity
            } else {
                Point::Finite(self.primitive(&f, u)?)
            });
        }
        Ok(AbelPoint::from_values(&xs, &zs, vec![u - p0]))
    }
}

/// `(-1)^n / n!`: the form `coef * L^{(n)}(u - q) du` has polar part `(u-q)^{-1-n} du`.
fn higher_order_coefficient(n: usize) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    if n % 2 == 0 {
        1.0 / fact
    } else {
        -1.0 / fact
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64)
}

/// Odd theta `theta_1(u) = exp(pi i tau/4 + pi i (u + 1/2)) theta(u + 1/2 + tau/2 | tau)`
/// and its derivatives up to `order`, by the Leibniz rule.
pub fn theta1_derivatives(
    u: C64,
    rm: &RiemannMatrix,
    order: usize,
    pol: &TruncationPolicy,
) -> Result<Vec<C64>> {
    let tau = rm.matrix()[(0, 0)];
    let i = C64::new(0.0, 1.0);
    let w = u + 0.5 + tau * 0.5;
    let e = (PI * i * tau / 4.0 + PI * i * (u + 0.5)).exp();
    let t = theta_derivatives_genus1(w, rm, order, pol)?;
    let pi_i = PI * i;
    Ok((0..=order)
        .map(|k| {
            e * (0..=k)
                .map(|m| binomial(k, m) * pi_i.powi((k - m) as i32) * t[m])
                .sum::<C64>()
        })
        .collect())
}

/// Derivatives of `f'/f` up to `order` from derivatives of `f` up to `order + 1`.
fn log_derivatives_from(f: &[C64], order: usize) -> Result<Vec<C64>> {
    if f[0].norm() == 0.0 {
        return Err(Error::DegenerateShift("log-derivative at a zero".into()));
    }
    let mut l: Vec<C64> = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut acc = f[k + 1];
        for m in 0..k {
            acc -= binomial(k, m) * l[m] * f[k - m];
        }
        l.push(acc / f[0]);
    }
    Ok(l)
}

/// Period matrix blocks: `Z` (g x g), `Y` and `nu` (g x M), `W` (g x N).
#[derive(Debug, Clone)]
pub struct PeriodData {
    pub z: RiemannMatrix,
    pub y: DMatrix<C64>,
    pub w: DMatrix<C64>,
    pub nu: DMatrix<C64>,
}

/// Outcome of [`validate_periods`].
#[derive(Debug, Clone, Serialize)]
pub struct PeriodReport {
    pub genus: usize,
    pub m: usize,
    pub n: usize,
    pub reciprocity_residual: f64,
    pub min_im_eigenvalue: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodDocument {
    #[serde(rename = "Z")]
    z: WireMatrix,
    #[serde(rename = "Y", default)]
    y: WireMatrix,
    #[serde(rename = "W", default)]
    w: WireMatrix,
    #[serde(default)]
    nu: WireMatrix,
}

fn width(field: &str, rows: &WireMatrix, g: usize) -> Result<usize> {
    if rows.is_empty() {
        return Ok(0);
    }
    if rows.len() != g {
        return Err(Error::parse(
            field,
            format!("expected {g} rows, found {}", rows.len()),
        ));
    }
    Ok(rows[0].len())
}

fn wire_or_empty(field: &str, rows: &WireMatrix, g: usize) -> Result<DMatrix<C64>> {
    let cols = width(field, rows, g)?;
    if rows.is_empty() {
        return Ok(DMatrix::zeros(g, 0));
    }
    matrix_from_wire(field, rows, g, cols)
}

const RECIPROCITY_TOL: f64 = 1e-10;

impl PeriodData {
    /// Validated constructor.
    pub fn new(
        z: DMatrix<C64>,
        y: DMatrix<C64>,
        w: DMatrix<C64>,
        nu: DMatrix<C64>,
    ) -> Result<Self> {
        let pd = PeriodData {
            z: RiemannMatrix::new(z)?,
            y,
            w,
            nu,
        };
        validate_periods(&pd)?;
        Ok(pd)
    }

    /// Classical period data with no singular directions.
    pub fn smooth(z: RiemannMatrix) -> Self {
        let g = z.genus();
        PeriodData {
            z,
            y: DMatrix::zeros(g, 0),
            w: DMatrix::zeros(g, 0),
            nu: DMatrix::zeros(g, 0),
        }
    }

    pub fn genus(&self) -> usize {
        self.z.genus()
    }

    pub fn m(&self) -> usize {
        self.y.ncols()
    }

    pub fn n(&self) -> usize {
        self.w.ncols()
    }

    /// `W` with one row per higher-order form, as the derivative operators use it.
    pub fn w_rows(&self) -> DMatrix<C64> {
        self.w.transpose()
    }

    pub fn nu_column(&self, j: usize) -> Vec<C64> {
        self.nu.column(j).iter().copied().collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: PeriodDocument = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = ["\"Z\"", "\"Y\"", "\"W\"", "\"nu\""]
                .iter()
                .find(|f| msg.contains(&f[1..f.len() - 1]))
                .map(|f| f.trim_matches('"').to_string())
                .unwrap_or_else(|| "document".into());
            Error::parse(field, msg)
        })?;
        let g = doc.z.len();
        let z = matrix_from_wire("Z", &doc.z, g, g)?;
        let y = wire_or_empty("Y", &doc.y, g)?;
        let w = wire_or_empty("W", &doc.w, g)?;
        let nu = wire_or_empty("nu", &doc.nu, g)?;
        if nu.ncols() != y.ncols() {
            return Err(Error::parse(
                "nu",
                format!("{} columns but Y has {}", nu.ncols(), y.ncols()),
            ));
        }
        PeriodData::new(z, y, w, nu)
    }

    pub fn to_document(&self) -> String {
        let doc = PeriodDocument {
            z: matrix_to_wire(self.z.matrix()),
            y: matrix_to_wire(&self.y),
            w: matrix_to_wire(&self.w),
            nu: matrix_to_wire(&self.nu),
        };
        serde_json::to_string_pretty(&doc).expect("period document serializes")
    }

    /// Checks that the blocks fit a curve with the given accounting.
    pub fn check_dimensions(&self, g: usize, m: usize, n: usize) -> Result<()> {
        if (self.genus(), self.m(), self.n()) != (g, m, n) {
            return Err(Error::Validation(format!(
                "period data has (g, M, N) = ({}, {}, {}), curve needs ({g}, {m}, {n})",
                self.genus(),
                self.m(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Checks the Riemann-matrix conditions and the reciprocity `Y = 2 pi i nu`.
pub fn validate_periods(pd: &PeriodData) -> Result<PeriodReport> {
    let g = pd.genus();
    RiemannMatrix::new(pd.z.matrix().clone())?;
    for (name, mat) in [("Y", &pd.y), ("W", &pd.w), ("nu", &pd.nu)] {
        if mat.nrows() != g {
            return Err(Error::Validation(format!(
                "{name} has {} rows, genus is {g}",
                mat.nrows()
            )));
        }
    }
    if pd.y.ncols() != pd.nu.ncols() {
        return Err(Error::Validation(format!(
            "Y has {} columns but nu has {}",
            pd.y.ncols(),
            pd.nu.ncols()
        )));
    }
    let mut worst = 0.0f64;
    for c in 0..pd.y.ncols() {
        let res = (0..g)
            .map(|r| (pd.y[(r, c)] - TWO_PI_I * pd.nu[(r, c)]).norm())
            .fold(0.0, f64::max);
        if res > RECIPROCITY_TOL {
            return Err(Error::Validation(format!(
                "reciprocity Y = 2 pi i nu fails in column {c}: residual {res:e}"
            )));
        }
        worst = worst.max(res);
    }
    Ok(PeriodReport {
        genus: g,
        m: pd.m(),
        n: pd.n(),
        reciprocity_residual: worst,
        min_im_eigenvalue: pd.z.smallest_im_eigenvalue(),
    })
}

/// Period data of a torus curve: `Z = [tau]`, `nu_j = p_j - p_1`,
/// `Y = 2 pi i nu`, `W = 2 pi i` for pole order 1 and `0` otherwise.
pub fn build_period_data(tc: &TorusCurve) -> PeriodData {
    let pairs = tc.curve.simple_pairs();
    let highs = tc.curve.higher_orders();
    let nu = DMatrix::from_iterator(
        1,
        pairs.len(),
        pairs.iter().map(|f| match f.kind {
            FormKind::SimplePair { i, j } => tc.preimage(i, j) - tc.preimage(i, 0),
            FormKind::HigherOrder { .. } => unreachable!(),
        }),
    );
    let w = DMatrix::from_iterator(
        1,
        highs.len(),
        highs.iter().map(|f| match f.kind {
            FormKind::HigherOrder { i, j, h } if tc.curve.pole_order(i, j, h) == 1 => TWO_PI_I,
            _ => C64::new(0.0, 0.0),
        }),
    );
    PeriodData {
        z: tc.rm.clone(),
        y: nu.map(|v| TWO_PI_I * v),
        w,
        nu,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::SingularPoint;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn torus(points: Vec<Point>, orders: Option<Vec<u32>>) -> TorusCurve {
        let sp = match orders {
            None => SingularPoint::node(points),
            Some(o) => SingularPoint::cusp(points[0], o),
        };
        let cv = CurveSpec::new(1, Point::finite(0.5, 0.4), Some(c(0.1, 1.1)), vec![sp]).unwrap();
        TorusCurve::new(&cv).unwrap()
    }

    #[test]
    fn fundamental_domain() {
        let tau = c(0.3, 1.2);
        let z = c(2.7, -0.5);
        let r = reduce_to_fundamental_domain(z, tau);
        let t = r.im / tau.im;
        let s = r.re - t * tau.re;
        assert!((0.0..1.0).contains(&s) && (0.0..1.0).contains(&t));
        let d = z - r;
        let k = (d.im / tau.im).round();
        assert!(((d - k * tau).re - (d - k * tau).re.round()).abs() < 1e-12);
    }

    #[test]
    fn theta1_is_odd_and_quasi_periodic() {
        let rm = RiemannMatrix::from_tau(c(0.1, 1.1)).unwrap();
        let pol = TruncationPolicy::default();
        let u = c(0.23, 0.17);
        let t = |v: C64| theta1_derivatives(v, &rm, 0, &pol).unwrap()[0];
        assert!((t(-u) + t(u)).norm() < 1e-12 * t(u).norm());
        assert!((t(u + 1.0) + t(u)).norm() < 1e-12 * t(u).norm());
        let tau = c(0.1, 1.1);
        let i = c(0.0, 1.0);
        let want = -(-PI * i * tau - 2.0 * PI * i * u).exp() * t(u);
        assert!((t(u + tau) - want).norm() < 1e-11 * want.norm());
        assert!(t(c(0.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn cusp_b_period_is_two_pi_i() {
        let tc = torus(vec![Point::finite(0.2, 0.3)], Some(vec![1, 2]));
        let highs = tc.curve.higher_orders();
        let u = c(0.6, 0.9);
        let d1 = tc.primitive(&highs[0], u + tc.tau).unwrap() - tc.primitive(&highs[0], u).unwrap();
        assert!((d1 - TWO_PI_I).norm() < 1e-9, "{d1}");
        let a1 = tc.primitive(&highs[0], u + 1.0).unwrap() - tc.primitive(&highs[0], u).unwrap();
        assert!(a1.norm() < 1e-10);
        let d2 = tc.primitive(&highs[1], u + tc.tau).unwrap() - tc.primitive(&highs[1], u).unwrap();
        assert!(d2.norm() < 1e-8, "{d2}");
        let pd = build_period_data(&tc);
        assert_eq!(pd.w[(0, 0)], TWO_PI_I);
        assert_eq!(pd.w[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn node_monodromy_matches_y() {
        let tc = torus(vec![Point::finite(0.2, 0.3), Point::finite(0.7, 0.6)], None);
        let pd = build_period_data(&tc);
        let f = tc.curve.simple_pairs()[0];
        let u = c(0.45, 0.1);
        let ratio = tc.primitive(&f, u + tc.tau).unwrap() / tc.primitive(&f, u).unwrap();
        assert!((ratio - pd.y[(0, 0)].exp()).norm() < 1e-9 * ratio.norm());
        let ratio = tc.primitive(&f, u + 1.0).unwrap() / tc.primitive(&f, u).unwrap();
        assert!((ratio - 1.0).norm() < 1e-10);
        assert!((tc.primitive(&f, tc.base_point()).unwrap() - 1.0).norm() < 1e-13);
        assert!(validate_periods(&pd).unwrap().reciprocity_residual < 1e-12);
    }

    #[test]
    fn perturbed_y_is_rejected() {
        let tc = torus(vec![Point::finite(0.2, 0.3), Point::finite(0.7, 0.6)], None);
        let mut pd = build_period_data(&tc);
        pd.y[(0, 0)] += 1e-3;
        match validate_periods(&pd) {
            Err(Error::Validation(msg)) => assert!(msg.contains("column 0"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn document_roundtrip() {
        let tc = torus(vec![Point::finite(0.2, 0.3), Point::finite(0.7, 0.6)], None);
        let pd = build_period_data(&tc);
        let back = PeriodData::parse(&pd.to_document()).unwrap();
        assert_eq!(back.y, pd.y);
        assert_eq!(back.z.matrix(), pd.z.matrix());
        assert_eq!(back.n(), 0);
    }
}
