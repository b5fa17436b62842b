//! Generalized theta sections and their translates.
//!
//! The general section is
//!
//! ```text
//! sum_{J, I} prod_{j in J} a_j^{-1} exp(xi_j) prod_{i in I} (zeta_i - b_i) D_{I^c} theta(z - lambda + sum_{j in J} nu_j)
//! ```
//!
//! evaluated in a chart: a coordinate in `U1` is represented by the
//! reciprocal of its value and the whole section is divided by it.

use serde::Serialize;

use crate::chart::{transition_factor, AbelPoint, ChartIndex};
use crate::curve::CurveSpec;
use crate::error::{Error, Result};
use crate::periods::PeriodData;
use crate::theta::{
    periodicity_factor, theta_d, theta_d_all_subsets, MultiIndexSet, TruncationPolicy,
};
use crate::C64;

/// Largest `M + N` accepted by the general evaluator.
pub const MAX_DIRECTIONS: usize = 16;

/// Translation `(a, b, lambda)` of the generalized Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftParams {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub lambda: Vec<C64>,
}

impl ShiftParams {
    pub fn new(a: Vec<C64>, b: Vec<C64>, lambda: Vec<C64>) -> Result<Self> {
        if let Some(k) = a
            .iter()
            .position(|v| v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Validation(format!(
                "shift a[{k}] must be a nonzero finite number"
            )));
        }
        Ok(ShiftParams { a, b, lambda })
    }

    pub fn identity(m: usize, n: usize, g: usize) -> Self {
        ShiftParams {
            a: vec![C64::new(1.0, 0.0); m],
            b: vec![C64::new(0.0, 0.0); n],
            lambda: vec![C64::new(0.0, 0.0); g],
        }
    }

    pub fn check_dimensions(&self, m: usize, n: usize, g: usize) -> Result<()> {
        if (self.a.len(), self.b.len(), self.lambda.len()) != (m, n, g) {
            return Err(Error::Validation(format!(
                "shift has (|a|, |b|, |lambda|) = ({}, {}, {}), expected ({m}, {n}, {g})",
                self.a.len(),
                self.b.len(),
                self.lambda.len()
            )));
        }
        Ok(())
    }
}

/// A section value together with the chart it is trivialised in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaValue {
    pub value: C64,
    pub chart: ChartIndex,
}

impl ThetaValue {
    /// The same section value expressed in another chart at `ap`.
    pub fn to_chart(&self, ap: &AbelPoint, target: ChartIndex) -> Result<ThetaValue> {
        Ok(ThetaValue {
            value: self.value * transition_factor(&self.chart, &target, ap)?,
            chart: target,
        })
    }
}

/// Per-coordinate factors `(member, non-member)` of the subset sum, in the
/// coordinate's chart.
fn xi_factors(rep: C64, a: C64, at_inf: bool) -> (C64, C64) {
    let ainv = 1.0 / a;
    if at_inf {
        (ainv, rep)
    } else {
        (ainv * rep, C64::new(1.0, 0.0))
    }
}

fn zeta_factors(rep: C64, b: C64, at_inf: bool) -> (C64, C64) {
    if at_inf {
        (1.0 - b * rep, rep)
    } else {
        (rep - b, C64::new(1.0, 0.0))
    }
}

/// Translated product section of a rational curve,
/// `prod (a^{-1} exp xi - 1) prod (zeta - b)` in the requested chart.
pub fn gen_theta_rational(
    curve: &CurveSpec,
    ap: &AbelPoint,
    shift: &ShiftParams,
    chart: &ChartIndex,
) -> Result<ThetaValue> {
    if curve.base_genus != 0 {
        return Err(Error::Validation(
            "product section needs base_genus = 0".into(),
        ));
    }
    let m = ap.exp_xi.len();
    let n = ap.zeta.len();
    shift.check_dimensions(m, n, 0)?;
    let ap = ap.to_chart(*chart)?;
    let mut value = C64::new(1.0, 0.0);
    for j in 0..m {
        let ainv = 1.0 / shift.a[j];
        value *= if chart.xi_at_infinity.contains(j) {
            ainv - ap.exp_xi[j]
        } else {
            ainv * ap.exp_xi[j] - 1.0
        };
    }
    for i in 0..n {
        value *= if chart.zeta_at_infinity.contains(i) {
            1.0 - shift.b[i] * ap.zeta[i]
        } else {
            ap.zeta[i] - shift.b[i]
        };
    }
    Ok(ThetaValue {
        value,
        chart: *chart,
    })
}

fn shifted(z: &[C64], lambda: &[C64]) -> Vec<C64> {
    z.iter().zip(lambda).map(|(a, b)| a - b).collect()
}

/// Node section `a^{-1} exp(xi) theta(z - lambda + nu) + theta(z - lambda)`,
/// taking the additive coordinate `xi`.
pub fn gen_theta_node(
    xi: C64,
    z: &[C64],
    pd: &PeriodData,
    shift: &ShiftParams,
    pol: &TruncationPolicy,
) -> Result<C64> {
    pd.check_dimensions(z.len(), 1, 0)?;
    shift.check_dimensions(1, 0, z.len())?;
    let w = shifted(z, &shift.lambda);
    let wn: Vec<C64> = w.iter().zip(pd.nu_column(0)).map(|(a, b)| a + b).collect();
    let empty = MultiIndexSet::empty(0);
    let rows = pd.w_rows();
    let t = theta_d(&empty, &w, &pd.z, &rows, pol)?;
    let tn = theta_d(&empty, &wn, &pd.z, &rows, pol)?;
    Ok(xi.exp() / shift.a[0] * tn + t)
}

/// Cusp section `D theta(z - lambda) + theta(z - lambda) (zeta - b)`.
pub fn gen_theta_cusp(
    zeta: C64,
    z: &[C64],
    pd: &PeriodData,
    shift: &ShiftParams,
    pol: &TruncationPolicy,
) -> Result<C64> {
    pd.check_dimensions(z.len(), 0, 1)?;
    shift.check_dimensions(0, 1, z.len())?;
    let w = shifted(z, &shift.lambda);
    let d = theta_d_all_subsets(&w, &pd.z, &pd.w_rows(), pol)?;
    Ok(d[1] + d[0] * (zeta - shift.b[0]))
}

/// Subset sum given the `2^N` derivative values at every theta argument.
fn subset_sum(
    ap: &AbelPoint,
    shift: &ShiftParams,
    mut derivs: impl FnMut(&MultiIndexSet) -> Result<Vec<C64>>,
) -> Result<C64> {
    let m = ap.exp_xi.len();
    let n = ap.zeta.len();
    if m + n > MAX_DIRECTIONS {
        return Err(Error::Size(format!(
            "M + N = {} exceeds the cap of {MAX_DIRECTIONS} subset directions",
            m + n
        )));
    }
    let xf: Vec<(C64, C64)> = (0..m)
        .map(|j| {
            xi_factors(
                ap.exp_xi[j],
                shift.a[j],
                ap.chart.xi_at_infinity.contains(j),
            )
        })
        .collect();
    let zf: Vec<(C64, C64)> = (0..n)
        .map(|i| {
            zeta_factors(
                ap.zeta[i],
                shift.b[i],
                ap.chart.zeta_at_infinity.contains(i),
            )
        })
        .collect();

    // coefficient of D_{I^c} for every I, shared by all J
    let count = 1usize << n;
    let full = count - 1;
    let mut zeta_coef = vec![C64::new(0.0, 0.0); count];
    for (mask, coef) in zeta_coef.iter_mut().enumerate() {
        *coef = (0..n)
            .map(|i| if mask >> i & 1 == 1 { zf[i].0 } else { zf[i].1 })
            .product();
    }

    let mut total = C64::new(0.0, 0.0);
    for j_set in MultiIndexSet::full(m).subsets() {
        let xi_coef: C64 = (0..m)
            .map(|j| if j_set.contains(j) { xf[j].0 } else { xf[j].1 })
            .product();
        if xi_coef == C64::new(0.0, 0.0) {
            continue;
        }
        let d = derivs(&j_set)?;
        let inner: C64 = (0..count)
            .map(|mask| zeta_coef[mask] * d[full ^ mask])
            .sum();
        total += xi_coef * inner;
    }
    Ok(total)
}

/// General section in the requested chart.
pub fn gen_theta_general(
    ap: &AbelPoint,
    pd: &PeriodData,
    shift: &ShiftParams,
    chart: &ChartIndex,
    pol: &TruncationPolicy,
) -> Result<ThetaValue> {
    let g = pd.genus();
    pd.check_dimensions(ap.z.len(), ap.exp_xi.len(), ap.zeta.len())?;
    shift.check_dimensions(pd.m(), pd.n(), g)?;
    let ap = ap.to_chart(*chart)?;
    let base = shifted(&ap.z, &shift.lambda);
    let rows = pd.w_rows();
    let value = subset_sum(&ap, shift, |j_set| {
        let mut arg = base.clone();
        for j in j_set.iter() {
            for (x, v) in arg.iter_mut().zip(pd.nu.column(j).iter()) {
                *x += v;
            }
        }
        theta_d_all_subsets(&arg, &pd.z, &rows, pol)
    })?;
    Ok(ThetaValue {
        value,
        chart: *chart,
    })
}

/// The general subset sum with `theta = 1` and every `D` vanishing, the
/// formal genus-zero limit.
pub fn gen_theta_general_genus0(
    ap: &AbelPoint,
    shift: &ShiftParams,
    chart: &ChartIndex,
) -> Result<ThetaValue> {
    shift.check_dimensions(ap.exp_xi.len(), ap.zeta.len(), 0)?;
    let ap = ap.to_chart(*chart)?;
    let count = 1usize << ap.zeta.len();
    let value = subset_sum(&ap, shift, |_| {
        let mut d = vec![C64::new(0.0, 0.0); count];
        d[0] = C64::new(1.0, 0.0);
        Ok(d)
    })?;
    Ok(ThetaValue {
        value,
        chart: *chart,
    })
}

fn relative_residual(lhs: C64, rhs: C64) -> f64 {
    (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1.0)
}

/// Residual of the quasi-periodicity of the general section (in `U0`) under
/// `(exp xi, zeta, z) -> (exp xi * exp(Y_alpha), zeta + W_alpha, z + Z_alpha)`.
pub fn check_section_periodicity(
    exp_xi: &[C64],
    zeta: &[C64],
    z: &[C64],
    pd: &PeriodData,
    shift: &ShiftParams,
    alpha: usize,
    pol: &TruncationPolicy,
) -> Result<f64> {
    let chart = ChartIndex::finite(exp_xi.len(), zeta.len());
    let ap = AbelPoint {
        exp_xi: exp_xi.to_vec(),
        zeta: zeta.to_vec(),
        z: z.to_vec(),
        chart,
    };
    let moved = AbelPoint {
        exp_xi: exp_xi
            .iter()
            .enumerate()
            .map(|(j, e)| e * pd.y[(alpha, j)].exp())
            .collect(),
        zeta: zeta
            .iter()
            .enumerate()
            .map(|(i, v)| v + pd.w[(alpha, i)])
            .collect(),
        z: z.iter()
            .zip(pd.z.column(alpha))
            .map(|(a, b)| a + b)
            .collect(),
        chart,
    };
    let lhs = gen_theta_general(&moved, pd, shift, &chart, pol)?.value;
    let r = periodicity_factor(&shifted(z, &shift.lambda), &pd.z, alpha);
    let rhs = gen_theta_general(&ap, pd, shift, &chart, pol)?.value * r;
    Ok(relative_residual(lhs, rhs))
}

/// Residual of `theta(xi + Y_alpha, z + Z_alpha) = theta(xi, z) R_alpha` for the node section.
pub fn check_node_b_shift(
    xi: C64,
    z: &[C64],
    pd: &PeriodData,
    shift: &ShiftParams,
    alpha: usize,
    pol: &TruncationPolicy,
) -> Result<f64> {
    let moved: Vec<C64> = z
        .iter()
        .zip(pd.z.column(alpha))
        .map(|(a, b)| a + b)
        .collect();
    let lhs = gen_theta_node(xi + pd.y[(alpha, 0)], &moved, pd, shift, pol)?;
    let r = periodicity_factor(&shifted(z, &shift.lambda), &pd.z, alpha);
    let rhs = gen_theta_node(xi, z, pd, shift, pol)? * r;
    Ok(relative_residual(lhs, rhs))
}

/// Residual of `theta(zeta + W_alpha, z + Z_alpha) = theta(zeta, z) R_alpha` for the cusp section.
pub fn check_cusp_b_shift(
    zeta: C64,
    z: &[C64],
    pd: &PeriodData,
    shift: &ShiftParams,
    alpha: usize,
    pol: &TruncationPolicy,
) -> Result<f64> {
    let moved: Vec<C64> = z
        .iter()
        .zip(pd.z.column(alpha))
        .map(|(a, b)| a + b)
        .collect();
    let lhs = gen_theta_cusp(zeta + pd.w[(alpha, 0)], &moved, pd, shift, pol)?;
    let r = periodicity_factor(&shifted(z, &shift.lambda), &pd.z, alpha);
    let rhs = gen_theta_cusp(zeta, z, pd, shift, pol)? * r;
    Ok(relative_residual(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::SingularPoint;
    use crate::periods::{build_period_data, TorusCurve};
    use crate::point::Point;
    use crate::rational::abel_map_p1;
    use crate::theta::RiemannMatrix;
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn node_pd() -> PeriodData {
        let cv = CurveSpec::new(
            1,
            Point::finite(0.5, 0.5),
            Some(c(0.2, 1.1)),
            vec![SingularPoint::node(vec![
                Point::finite(0.1, 0.2),
                Point::finite(0.7, 0.4),
            ])],
        )
        .unwrap();
        build_period_data(&TorusCurve::new(&cv).unwrap())
    }

    fn cusp_pd() -> PeriodData {
        PeriodData::new(
            DMatrix::from_element(1, 1, c(0.2, 1.1)),
            DMatrix::zeros(1, 0),
            DMatrix::from_element(1, 1, c(0.3, -0.8)),
            DMatrix::zeros(1, 0),
        )
        .unwrap()
    }

    #[test]
    fn x5y2_all_infinity_chart() {
        let cv = CurveSpec::new(
            0,
            Point::Infinity,
            None,
            vec![SingularPoint::cusp(Point::finite(0.0, 0.0), vec![1, 3])],
        )
        .unwrap();
        let (b1, b2) = (c(0.3, -0.2), c(-0.5, 0.1));
        let shift = ShiftParams::new(vec![], vec![b2, b1], vec![]).unwrap();
        let z = c(0.11, 0.05);
        let ap = abel_map_p1(&cv, Point::Finite(z)).unwrap();
        let v = gen_theta_rational(&cv, &ap, &shift, &ChartIndex::all_infinite(0, 2)).unwrap();
        let want = 1.0 + b2 * z + 3.0 * b1 * z.powi(3) + 3.0 * b1 * b2 * z.powi(4);
        assert!((v.value - want).norm() < 1e-14);
    }

    #[test]
    fn nodal_chart_values() {
        let cv = CurveSpec::new(
            0,
            Point::finite(1.0, 0.0),
            None,
            vec![SingularPoint::node(vec![
                Point::Infinity,
                Point::finite(0.0, 0.0),
            ])],
        )
        .unwrap();
        let a = c(3.0, 0.0);
        let shift = ShiftParams::new(vec![a], vec![], vec![]).unwrap();
        let at = |p: Point, chart: ChartIndex| {
            let ap = abel_map_p1(&cv, p).unwrap();
            gen_theta_rational(&cv, &ap, &shift, &chart).unwrap().value
        };
        assert_eq!(
            at(Point::finite(2.0, 0.0), ChartIndex::finite(1, 0)),
            c(2.0 / 3.0 - 1.0, 0.0)
        );
        assert_eq!(
            at(Point::finite(0.0, 0.0), ChartIndex::finite(1, 0)),
            c(-1.0, 0.0)
        );
        assert_eq!(
            at(Point::Infinity, ChartIndex::all_infinite(1, 0)),
            c(1.0 / 3.0, 0.0)
        );
        let ap = abel_map_p1(&cv, Point::Infinity).unwrap();
        assert!(matches!(
            gen_theta_rational(&cv, &ap, &shift, &ChartIndex::finite(1, 0)),
            Err(Error::Chart(_))
        ));
    }

    #[test]
    fn chart_transition_matches_direct_evaluation() {
        let pd = node_pd();
        let shift = ShiftParams::new(vec![c(0.8, 0.3)], vec![], vec![c(0.05, 0.02)]).unwrap();
        let ap = AbelPoint {
            exp_xi: vec![c(0.4, -1.3)],
            zeta: vec![],
            z: vec![c(0.3, 0.2)],
            chart: ChartIndex::finite(1, 0),
        };
        let v0 = gen_theta_general(&ap, &pd, &shift, &ChartIndex::finite(1, 0), &pol()).unwrap();
        let v1 =
            gen_theta_general(&ap, &pd, &shift, &ChartIndex::all_infinite(1, 0), &pol()).unwrap();
        let moved = v0.to_chart(&ap, v1.chart).unwrap();
        assert!((moved.value - v1.value).norm() < 1e-12 * v1.value.norm());
    }

    #[test]
    fn general_matches_node_and_cusp() {
        let pd = node_pd();
        let shift = ShiftParams::new(vec![c(1.2, -0.4)], vec![], vec![c(0.1, -0.05)]).unwrap();
        let xi = c(0.3, 0.9);
        let z = [c(0.4, 0.15)];
        let node = gen_theta_node(xi, &z, &pd, &shift, &pol()).unwrap();
        let ap = AbelPoint {
            exp_xi: vec![xi.exp()],
            zeta: vec![],
            z: z.to_vec(),
            chart: ChartIndex::finite(1, 0),
        };
        let gen = gen_theta_general(&ap, &pd, &shift, &ap.chart, &pol())
            .unwrap()
            .value;
        assert!((gen - node).norm() < 1e-12 * node.norm());

        let pd = cusp_pd();
        let shift = ShiftParams::new(vec![], vec![c(0.2, 0.7)], vec![c(-0.1, 0.05)]).unwrap();
        let zeta = c(-0.6, 0.25);
        let cusp = gen_theta_cusp(zeta, &z, &pd, &shift, &pol()).unwrap();
        let ap = AbelPoint {
            exp_xi: vec![],
            zeta: vec![zeta],
            z: z.to_vec(),
            chart: ChartIndex::finite(0, 1),
        };
        let gen = gen_theta_general(&ap, &pd, &shift, &ap.chart, &pol())
            .unwrap()
            .value;
        assert!((gen - cusp).norm() < 1e-12 * cusp.norm());
    }

    #[test]
    fn smooth_case_is_plain_theta() {
        let rm = RiemannMatrix::from_tau(c(0.0, 1.3)).unwrap();
        let pd = PeriodData::smooth(rm.clone());
        let shift = ShiftParams::new(vec![], vec![], vec![c(0.1, 0.0)]).unwrap();
        let ap = AbelPoint {
            exp_xi: vec![],
            zeta: vec![],
            z: vec![c(0.35, 0.1)],
            chart: ChartIndex::finite(0, 0),
        };
        let v = gen_theta_general(&ap, &pd, &shift, &ap.chart, &pol())
            .unwrap()
            .value;
        let t = crate::theta::riemann_theta(&[c(0.25, 0.1)], &rm, &pol()).unwrap();
        assert!((v - t).norm() < 1e-14);
    }

    #[test]
    fn quasi_periodicity_of_sections() {
        let pd = node_pd();
        let shift = ShiftParams::new(vec![c(0.7, 0.2)], vec![], vec![c(0.05, 0.1)]).unwrap();
        let z = [c(0.3, -0.1)];
        assert!(check_node_b_shift(c(0.2, 0.4), &z, &pd, &shift, 0, &pol()).unwrap() < 1e-10);
        assert!(
            check_section_periodicity(&[c(0.5, 0.5)], &[], &z, &pd, &shift, 0, &pol()).unwrap()
                < 1e-10
        );
        let pd = cusp_pd();
        let shift = ShiftParams::new(vec![], vec![c(0.4, 0.0)], vec![c(0.0, 0.1)]).unwrap();
        assert!(check_cusp_b_shift(c(0.1, 0.3), &z, &pd, &shift, 0, &pol()).unwrap() < 1e-10);
    }

    #[test]
    fn genus0_limit_is_product_with_sign_convention() {
        let cv = CurveSpec::new(
            0,
            Point::finite(0.3, 0.1),
            None,
            vec![
                SingularPoint::node(vec![Point::finite(1.0, 0.0), Point::finite(-1.0, 0.5)]),
                SingularPoint::cusp(Point::finite(0.0, 2.0), vec![2]),
            ],
        )
        .unwrap();
        let a = c(0.6, 0.9);
        let b = c(0.2, -0.3);
        let ap = abel_map_p1(&cv, Point::finite(0.8, -0.4)).unwrap();
        let chart = ap.chart;
        let general = gen_theta_general_genus0(
            &ap,
            &ShiftParams::new(vec![a], vec![b], vec![]).unwrap(),
            &chart,
        )
        .unwrap()
        .value;
        let product = gen_theta_rational(
            &cv,
            &ap,
            &ShiftParams::new(vec![-a], vec![b], vec![]).unwrap(),
            &chart,
        )
        .unwrap()
        .value;
        assert!((general + product).norm() < 1e-12 * product.norm());
    }

    #[test]
    fn size_cap() {
        let ap = AbelPoint {
            exp_xi: vec![c(0.5, 0.0); 17],
            zeta: vec![],
            z: vec![],
            chart: ChartIndex::finite(17, 0),
        };
        let shift = ShiftParams::identity(17, 0, 0);
        assert!(matches!(
            gen_theta_general_genus0(&ap, &shift, &ap.chart),
            Err(Error::Size(_))
        ));
    }
}
