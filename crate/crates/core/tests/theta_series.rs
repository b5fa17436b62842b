mod common;

use common::*;
use gjtheta::periods::{theta1_derivatives, PeriodData};
use gjtheta::theta::{riemann_theta, theta_d, theta_derivatives_genus1};
use gjtheta::*;
use nalgebra::DMatrix;

fn genus2() -> PeriodData {
    PeriodData::parse(&fixture_text("genus2_periods.json")).unwrap()
}

#[test]
fn genus2_theta_matches_box_sum() {
    let pd = genus2();
    let pol = TruncationPolicy::default();
    let rows = pd.w_rows();
    for z in [
        [c(0.1, 0.2), c(-0.3, 0.05)],
        [c(0.45, -0.4), c(0.2, 0.6)],
        [c(0.0, 0.0), c(0.5, 0.5)],
    ] {
        let want = theta_box(&z, pd.z.matrix(), &[], 12);
        let got = riemann_theta(&z, &pd.z, &pol).unwrap();
        assert!(
            (got - want).norm() < 1e-12 * want.norm().max(1.0),
            "{got} vs {want}"
        );
        for set in MultiIndexSet::full(1).subsets() {
            let dirs: Vec<Vec<C64>> = set
                .iter()
                .map(|i| rows.row(i).iter().copied().collect())
                .collect();
            let want = theta_box(&z, pd.z.matrix(), &dirs, 12);
            let got = theta_d(&set, &z, &pd.z, &rows, &pol).unwrap();
            assert!(
                (got - want).norm() < 1e-11 * want.norm().max(1.0),
                "{got} vs {want}"
            );
        }
    }
}

#[test]
fn derivative_operator_is_directional_derivative() {
    // D = sum_mu W_mu / (2 pi i) d/dz_mu
    let pd = genus2();
    let pol = TruncationPolicy::default();
    let rows = pd.w_rows();
    let z = [c(0.2, -0.1), c(0.35, 0.15)];
    let w: Vec<C64> = rows.row(0).iter().copied().collect();
    let dir: Vec<C64> = w
        .iter()
        .map(|v| v / c(0.0, 2.0 * std::f64::consts::PI))
        .collect();
    let along = |h: C64| {
        let p: Vec<C64> = z.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
        riemann_theta(&p, &pd.z, &pol).unwrap()
    };
    let fd = derivative(along, c(0.0, 0.0), 1e-3);
    let got = theta_d(&MultiIndexSet::full(1), &z, &pd.z, &rows, &pol).unwrap();
    assert!(
        (got - fd).norm() < 1e-8 * got.norm().max(1.0),
        "{got} vs {fd}"
    );
}

#[test]
fn genus1_derivatives_match_finite_differences() {
    let rm = RiemannMatrix::from_tau(c(0.15, 1.1)).unwrap();
    let pol = TruncationPolicy::default();
    let w = c(0.31, -0.22);
    let d = theta_derivatives_genus1(w, &rm, 2, &pol).unwrap();
    let (rm, pol) = (&rm, &pol);
    let f = |k: usize| move |x: C64| theta_derivatives_genus1(x, rm, 2, pol).unwrap()[k];
    assert!((derivative(f(0), w, 1e-3) - d[1]).norm() < 1e-8 * d[1].norm());
    assert!((derivative(f(1), w, 1e-3) - d[2]).norm() < 1e-8 * d[2].norm());
    let zm = DMatrix::from_element(1, 1, c(0.15, 1.1));
    assert!((theta_box(&[w], &zm, &[], 20) - d[0]).norm() < 1e-13);
}

#[test]
fn theta1_has_simple_zeros_on_the_lattice() {
    let rm = RiemannMatrix::from_tau(c(-0.2, 0.9)).unwrap();
    let pol = TruncationPolicy::default();
    for u in [c(0.0, 0.0), c(1.0, 0.0), c(-0.2, 0.9), c(0.8, 0.9)] {
        let d = theta1_derivatives(u, &rm, 1, &pol).unwrap();
        assert!(d[0].norm() < 1e-12, "{u}: {}", d[0]);
        assert!(d[1].norm() > 1e-3);
    }
}
