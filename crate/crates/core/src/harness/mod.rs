//! Zeros of translated theta sections, the residue shift functionals and
//! the generalized Abel theorem check.
//!
//! For every shift the harness computes
//! `D = sum_rho Abel(q_rho) - functionals(shift)` over the zeros `q_rho` of
//! the pulled-back section. `D` is the (generalized) Riemann constant and
//! must not depend on the shift; the report records the largest pairwise
//! deviation after reducing by the period lattice.

pub mod rational;
pub mod shifts;
pub mod torus;

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{genus_accounting, CurveSpec};
use crate::error::{Error, Result};
use crate::gen_theta::ShiftParams;
use crate::periods::{build_period_data, PeriodData, TorusCurve};
use crate::point::Point;
use crate::theta::TruncationPolicy;
use crate::C64;

pub use rational::{contour_bookkeeping, find_zeros_rational, ContourCheck};
pub use shifts::random_shifts;
pub use torus::find_zeros_torus;

/// Separation below which computed roots are merged into one zero.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Distance below which a zero counts as sitting on a preimage or the base point.
pub const COLLISION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Zero {
    pub point: Point,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSet {
    pub zeros: Vec<Zero>,
    /// Sum of multiplicities.
    pub total_count: usize,
    /// `g~ + M + sum n`, the degree of the pulled-back section.
    pub expected_count: usize,
    /// `g~ + M + N`, the number of zeros in the theorem's sum.
    pub theorem_count: usize,
}

impl ZeroSet {
    fn new(zeros: Vec<Zero>, curve: &CurveSpec) -> Self {
        let report = genus_accounting(curve);
        ZeroSet {
            total_count: zeros.iter().map(|z| z.multiplicity).sum(),
            zeros,
            expected_count: report.section_degree,
            theorem_count: report.g_arith,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// simple-pair factor, simple-pair slot
    M,
    /// higher-order factor, simple-pair slot
    N,
    /// simple-pair factor, higher-order slot
    P,
    /// higher-order factor, higher-order slot
    Q,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summand {
    pub family: Family,
    /// Flat index of the shift coordinate the summand depends on.
    pub factor: usize,
    /// Flat index of the Abel coordinate it contributes to.
    pub slot: usize,
    pub value: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftFunctionals {
    pub xi: Vec<C64>,
    pub zeta: Vec<C64>,
    pub lambda_part: Vec<C64>,
    /// Individual residue terms; empty when the section does not factor.
    pub summands: Vec<Summand>,
}

impl ShiftFunctionals {
    fn flat(&self) -> Vec<C64> {
        self.xi
            .iter()
            .chain(&self.zeta)
            .chain(&self.lambda_part)
            .copied()
            .collect()
    }
}

/// `sum_rho mult * (xi, zeta, z)(q_rho)` with principal-branch `xi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbelSum {
    pub xi: Vec<C64>,
    pub zeta: Vec<C64>,
    pub z: Vec<C64>,
}

impl AbelSum {
    fn flat(&self) -> Vec<C64> {
        self.xi
            .iter()
            .chain(&self.zeta)
            .chain(&self.z)
            .copied()
            .collect()
    }
}

/// Generalized Riemann constant: `exp` of `D` in the simple-pair slots,
/// `D` itself in the others.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiemannConstant {
    pub kappa: Vec<C64>,
}

impl RiemannConstant {
    fn from_d(d: &[C64], m: usize) -> Self {
        RiemannConstant {
            kappa: d
                .iter()
                .enumerate()
                .map(|(k, v)| if k < m { v.exp() } else { *v })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftReport {
    pub shift: ShiftParams,
    pub zeros: ZeroSet,
    pub abel_sum: AbelSum,
    pub functionals: ShiftFunctionals,
    /// Abel sum minus functionals, laid out as `(xi, zeta, z)`.
    pub d: Vec<C64>,
    /// Abel sum minus the closed-form right-hand sides (torus node, cusp and
    /// smooth cases only).
    pub d_explicit: Option<Vec<C64>>,
    /// Largest contour bookkeeping residual (rational curves only).
    pub contour_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub m: usize,
    pub n: usize,
    pub genus: usize,
    pub shifts: Vec<ShiftReport>,
    pub kappa: RiemannConstant,
    /// Largest lattice-reduced pairwise deviation of `d`.
    pub max_deviation: f64,
    pub max_deviation_explicit: Option<f64>,
    pub max_contour_residual: Option<f64>,
}

/// The lattice the Abel coordinates are defined modulo, as far as the
/// harness needs it.
#[derive(Debug, Clone)]
pub struct Lattice {
    m: usize,
    n: usize,
    /// `(tau, Y row, W row)` for a genus-one base.
    torus: Option<(C64, Vec<C64>, Vec<C64>)>,
}

impl Lattice {
    pub fn rational(m: usize, n: usize) -> Self {
        Lattice { m, n, torus: None }
    }

    pub fn genus_one(pd: &PeriodData) -> Self {
        Lattice {
            m: pd.m(),
            n: pd.n(),
            torus: Some((
                pd.z.matrix()[(0, 0)],
                pd.y.row(0).iter().copied().collect(),
                pd.w.row(0).iter().copied().collect(),
            )),
        }
    }

    /// `a - b` reduced by the lattice: integer B-period translates fixed by
    /// the `z` slot, then integer A-periods, then `2 pi i` in the `xi` slots.
    pub fn reduced_difference(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let mut d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let (m, n) = (self.m, self.n);
        if let Some((tau, y, w)) = &self.torus {
            let z = m + n;
            let k = (d[z].im / tau.im).round();
            for j in 0..m {
                d[j] -= k * y[j];
            }
            for i in 0..n {
                d[m + i] -= k * w[i];
            }
            d[z] -= k * tau;
            let shift = d[z].re.round();
            d[z] -= shift;
        }
        for v in d.iter_mut().take(m) {
            v.im -= (v.im / (2.0 * PI)).round() * 2.0 * PI;
        }
        d
    }

    pub fn distance(&self, a: &[C64], b: &[C64]) -> f64 {
        self.reduced_difference(a, b)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Largest pairwise distance in a family of vectors.
    pub fn max_pairwise(&self, ds: &[&[C64]]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, a) in ds.iter().enumerate() {
            for b in &ds[k + 1..] {
                worst = worst.max(self.distance(a, b));
            }
        }
        worst
    }
}

enum Setting {
    Rational,
    Torus(TorusCurve, PeriodData),
}

fn setting(curve: &CurveSpec, pd: Option<&PeriodData>, pol: &TruncationPolicy) -> Result<Setting> {
    match curve.base_genus {
        0 => Ok(Setting::Rational),
        1 => {
            let tc = TorusCurve::new(curve)?.with_policy(*pol);
            let pd = match pd {
                Some(pd) => pd.clone(),
                None => build_period_data(&tc),
            };
            pd.check_dimensions(
                1,
                tc.curve.simple_pairs().len(),
                tc.curve.higher_orders().len(),
            )?;
            Ok(Setting::Torus(tc, pd))
        }
        g => Err(Error::Validation(format!(
            "zero finding is implemented for base genus 0 and 1, not {g}"
        ))),
    }
}

/// Zeros of the translated section, dispatching on the base genus.
pub fn find_zeros(
    curve: &CurveSpec,
    pd: Option<&PeriodData>,
    shift: &ShiftParams,
    pol: &TruncationPolicy,
) -> Result<ZeroSet> {
    match setting(curve, pd, pol)? {
        Setting::Rational => find_zeros_rational(curve, shift),
        Setting::Torus(tc, pd) => find_zeros_torus(&tc, &pd, shift),
    }
}

/// Shift functionals, dispatching on the base genus.
pub fn shift_functionals(
    curve: &CurveSpec,
    pd: Option<&PeriodData>,
    shift: &ShiftParams,
    pol: &TruncationPolicy,
) -> Result<ShiftFunctionals> {
    match setting(curve, pd, pol)? {
        Setting::Rational => rational::shift_functionals(curve, shift),
        Setting::Torus(tc, pd) => torus::shift_functionals(&tc, &pd, shift),
    }
}

fn subtract(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn verify_one(setting: &Setting, curve: &CurveSpec, shift: &ShiftParams) -> Result<ShiftReport> {
    match setting {
        Setting::Rational => {
            let zeros = find_zeros_rational(curve, shift)?;
            let functionals = rational::shift_functionals(curve, shift)?;
            let abel_sum = rational::abel_sum(curve, &zeros)?;
            let check = contour_bookkeeping(curve, shift, &zeros)?;
            Ok(ShiftReport {
                d: subtract(&abel_sum.flat(), &functionals.flat()),
                shift: shift.clone(),
                zeros,
                abel_sum,
                functionals,
                d_explicit: None,
                contour_residual: Some(check.max_residual()),
            })
        }
        Setting::Torus(tc, pd) => {
            let zeros = find_zeros_torus(tc, pd, shift)?;
            let functionals = torus::shift_functionals(tc, pd, shift)?;
            let abel_sum = torus::abel_sum(tc, &zeros)?;
            let explicit = torus::explicit_rhs(tc, pd, shift)?;
            let flat = abel_sum.flat();
            Ok(ShiftReport {
                d: subtract(&flat, &functionals.flat()),
                d_explicit: explicit.map(|rhs| subtract(&flat, &rhs)),
                shift: shift.clone(),
                zeros,
                abel_sum,
                functionals,
                contour_residual: None,
            })
        }
    }
}

/// Runs the Abel-theorem check over `shifts` (at least two), in parallel
/// across shifts with results in input order.
pub fn verify_abel_theorem(
    curve: &CurveSpec,
    pd: Option<&PeriodData>,
    shifts: &[ShiftParams],
    pol: &TruncationPolicy,
) -> Result<VerificationReport> {
    if shifts.len() < 2 {
        return Err(Error::Validation(
            "the invariance check needs at least two shifts".into(),
        ));
    }
    let setting = setting(curve, pd, pol)?;
    let reports: Vec<ShiftReport> = shifts
        .par_iter()
        .map(|s| verify_one(&setting, curve, s))
        .collect::<Result<_>>()?;
    let report = genus_accounting(curve);
    let (m, n) = (report.m, report.n);
    let lattice = match &setting {
        Setting::Rational => Lattice::rational(m, n),
        Setting::Torus(_, pd) => Lattice::genus_one(pd),
    };
    let ds: Vec<&[C64]> = reports.iter().map(|r| r.d.as_slice()).collect();
    let explicit: Option<Vec<&[C64]>> = reports.iter().map(|r| r.d_explicit.as_deref()).collect();
    let contour = reports
        .iter()
        .map(|r| r.contour_residual)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    Ok(VerificationReport {
        m,
        n,
        genus: curve.base_genus as usize,
        kappa: RiemannConstant::from_d(&reports[0].d, m),
        max_deviation: lattice.max_pairwise(&ds),
        max_deviation_explicit: explicit.map(|e| lattice.max_pairwise(&e)),
        max_contour_residual: contour,
        shifts: reports,
    })
}

impl VerificationReport {
    fn lattice(&self, pd: Option<&PeriodData>) -> Lattice {
        match pd {
            Some(pd) if self.genus == 1 => Lattice::genus_one(pd),
            _ => Lattice::rational(self.m, self.n),
        }
    }

    /// One row per shift: the real and imaginary parts of every `D` entry,
    /// then the row's reduced distance to the first row.
    pub fn to_csv(&self, pd: Option<&PeriodData>) -> String {
        let lattice = self.lattice(pd);
        let mut out = String::from("shift");
        let names: Vec<String> = (0..self.m)
            .map(|j| format!("xi{j}"))
            .chain((0..self.n).map(|i| format!("zeta{i}")))
            .chain((0..self.genus).map(|a| format!("z{a}")))
            .collect();
        for name in &names {
            let _ = write!(out, ",re_d_{name},im_d_{name}");
        }
        out.push_str(",deviation\n");
        let first = &self.shifts[0].d;
        for (k, r) in self.shifts.iter().enumerate() {
            let _ = write!(out, "{k}");
            for v in &r.d {
                let _ = write!(out, ",{:.16e},{:.16e}", v.re, v.im);
            }
            let _ = writeln!(out, ",{:.16e}", lattice.distance(&r.d, first));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_removes_lattice_translates() {
        let lattice = Lattice {
            m: 1,
            n: 1,
            torus: Some((
                C64::new(0.2, 1.1),
                vec![C64::new(0.0, 2.0 * PI) * C64::new(0.3, 0.4)],
                vec![C64::new(0.0, 2.0 * PI)],
            )),
        };
        let a = vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.5), C64::new(0.25, 0.1)];
        let (tau, y, w) = lattice.torus.clone().unwrap();
        let b = vec![
            a[0] + 2.0 * y[0] + C64::new(0.0, 6.0 * PI),
            a[1] + 2.0 * w[0],
            a[2] + 2.0 * tau - 3.0,
        ];
        assert!(lattice.distance(&a, &b) < 1e-13);
        assert!(lattice.distance(&a, &[a[0], a[1] + 0.01, a[2]]) > 0.009);
    }
}
