mod common;

use common::*;
use gjtheta::curve::FormKind;
use gjtheta::harness::rational::shift_functionals;
use gjtheta::harness::torus::abel_sum;
use gjtheta::harness::{find_zeros, random_shifts, verify_abel_theorem, Family};
use gjtheta::rational::exp_xi_point;
use gjtheta::*;

fn factor_value(e: Point, a: C64) -> C64 {
    match e {
        Point::Finite(v) if v.norm() <= 1.0 => v / a - 1.0,
        Point::Finite(v) => 1.0 / a - 1.0 / v,
        Point::Infinity => 1.0 / a,
    }
}

#[test]
fn simple_pair_summand_is_endpoint_log_difference() {
    for name in ["nodal_cubic", "mixed_rational"] {
        let curve = fixture_curve(name);
        let r = genus_accounting(&curve);
        let pairs = curve.simple_pairs();
        for shift in random_shifts(r.m, r.n, 0, 5, 21) {
            let f = shift_functionals(&curve, &shift).unwrap();
            for s in f.summands.iter().filter(|s| s.family == Family::M) {
                let FormKind::SimplePair { i: fi, j: fj } = pairs[s.factor].kind else {
                    unreachable!()
                };
                let FormKind::SimplePair { i: si, j: sj } = pairs[s.slot].kind else {
                    unreachable!()
                };
                let a = shift.a[s.factor];
                let at = |p: Point| factor_value(exp_xi_point(&curve, fi, fj, p), a).ln();
                let want = at(curve.preimage(si, sj)) - at(curve.preimage(si, 0));
                let err = mod_two_pi_i(s.value - want).norm();
                assert!(
                    err < 1e-10,
                    "{name}: factor {} slot {}: {} vs {}",
                    s.factor,
                    s.slot,
                    s.value,
                    want
                );
            }
        }
    }
}

#[test]
fn summands_depend_on_their_own_coordinate_only() {
    let curve = fixture_curve("mixed_rational");
    let r = genus_accounting(&curve);
    let base = random_shifts(r.m, r.n, 0, 1, 3).remove(0);
    let before = shift_functionals(&curve, &base).unwrap();
    for k in 0..r.m + r.n {
        let mut moved = base.clone();
        if k < r.m {
            moved.a[k] *= c(1.1, 0.2);
        } else {
            moved.b[k - r.m] += c(0.1, -0.05);
        }
        let after = shift_functionals(&curve, &moved).unwrap();
        for (x, y) in before.summands.iter().zip(&after.summands) {
            let own = match x.family {
                Family::M | Family::P => x.factor < r.m && x.factor == k,
                Family::N | Family::Q => k >= r.m && x.factor == k - r.m,
            };
            if !own {
                assert!(
                    (x.value - y.value).norm() < 1e-12,
                    "coordinate {k} moved {x:?}"
                );
            }
        }
    }
}

#[test]
fn residue_of_theta1_log_derivative_is_one() {
    let curve = fixture_curve("torus_node");
    let tc = TorusCurve::new(&curve).unwrap();
    let p = c(0.35, 0.45);
    let r = gjtheta::contour::contour_residue(
        |t| {
            let d = tc.theta1_derivatives(t - p, 1)?;
            Ok(d[1] / d[0])
        },
        p,
        0.2,
        32,
    )
    .unwrap();
    assert!((r - c(1.0, 0.0)).norm() < 1e-10, "{r}");
}

#[test]
fn cusp_zeta_sum_tracks_b() {
    let curve = fixture_curve("torus_cusp");
    let tc = TorusCurve::new(&curve).unwrap();
    let pd = gjtheta::periods::build_period_data(&tc);
    let lambda = vec![c(0.07, -0.04)];
    let values: Vec<C64> = (0..10)
        .map(|k| {
            let b = C64::from_polar(0.2 + 0.07 * k as f64, 0.9 * k as f64);
            let shift = ShiftParams::new(vec![], vec![b], lambda.clone()).unwrap();
            let zs = find_zeros(&curve, Some(&pd), &shift, &TruncationPolicy::default()).unwrap();
            abel_sum(&tc, &zs).unwrap().zeta[0] - b
        })
        .collect();
    let mean: C64 = values.iter().sum::<C64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / values.len() as f64;
    assert!(var < 1e-7, "variance {var}");
}

#[test]
fn csv_is_reproducible() {
    for name in ["cuspidal_cubic", "torus_smooth"] {
        let curve = fixture_curve(name);
        let r = genus_accounting(&curve);
        let run = || {
            let shifts = random_shifts(r.m, r.n, r.g_tilde as usize, 4, 17);
            verify_abel_theorem(&curve, None, &shifts, &TruncationPolicy::default())
                .unwrap()
                .to_csv(None)
        };
        assert_eq!(run(), run());
    }
}
