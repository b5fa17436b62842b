//! Oracles shared by the integration tests. Nothing here calls into the
//! algorithms under test except for loading fixtures.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use gjtheta::{parse_curve_spec, CurveSpec, C64};
use nalgebra::{DMatrix, SymmetricEigen};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixture_curve(name: &str) -> CurveSpec {
    parse_curve_spec(&fixture_text(&format!("{name}.json"))).unwrap()
}

pub const RATIONAL_FIXTURES: [&str; 5] = [
    "nodal_cubic",
    "cuspidal_cubic",
    "cusp_order3",
    "x5_y2",
    "mixed_rational",
];
pub const TORUS_FIXTURES: [&str; 3] = ["torus_node", "torus_cusp", "torus_smooth"];

/// Gauss-Legendre rule from the eigen-decomposition of the Jacobi matrix.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Integral of `f(u) du` along the straight segment `a -> b`.
pub fn segment_integral(f: impl Fn(C64) -> C64, a: C64, b: C64, panels: usize) -> C64 {
    let (x, w) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut sum = c(0.0, 0.0);
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            sum += f(lo + h * (0.5 * (xi + 1.0))) * (0.5 * wi);
        }
    }
    sum * h
}

/// Brute-force Riemann theta `sum exp(pi i n.Z.n + 2 pi i n.z)` over the
/// box `|n_k| <= bound`, optionally weighted by `prod (2 pi i n.v)` for each
/// direction `v`.
pub fn theta_box(z: &[C64], zm: &DMatrix<C64>, directions: &[Vec<C64>], bound: i64) -> C64 {
    let g = z.len();
    let mut n = vec![-bound; g];
    let mut sum = c(0.0, 0.0);
    loop {
        let nf: Vec<f64> = n.iter().map(|&v| v as f64).collect();
        let mut quad = c(0.0, 0.0);
        for a in 0..g {
            for b in 0..g {
                quad += zm[(a, b)] * nf[a] * nf[b];
            }
        }
        let lin: C64 = (0..g).map(|a| z[a] * nf[a]).sum();
        let mut term = (c(0.0, PI) * quad + c(0.0, 2.0 * PI) * lin).exp();
        for v in directions {
            let dot: C64 = (0..g).map(|a| v[a] * nf[a]).sum();
            term *= dot;
        }
        sum += term;
        let mut k = 0;
        loop {
            if k == g {
                return sum;
            }
            n[k] += 1;
            if n[k] <= bound {
                break;
            }
            n[k] = -bound;
            k += 1;
        }
    }
}

/// Central five-point derivative.
pub fn derivative(f: impl Fn(C64) -> C64, z: C64, h: f64) -> C64 {
    (-f(z + 2.0 * h) + 8.0 * f(z + h) - 8.0 * f(z - h) + f(z - 2.0 * h)) / (12.0 * h)
}

/// Coefficients `c_0..c_{n-1}` of a polynomial of degree `< n` from its
/// values at `r * exp(2 pi i k / n)`.
pub fn interpolate_on_circle(values: &[C64], r: f64) -> Vec<C64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let s: C64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
                .sum();
            s / (n as f64 * r.powi(k as i32))
        })
        .collect()
}

/// Taylor coefficients of `log p(z)` up to `z^order`, for `p(0) = 1`, by
/// the recurrence `k L_k = k p_k - sum_{j<k} j L_j p_{k-j}`.
pub fn log_series(p: &[C64], order: usize) -> Vec<C64> {
    let get = |k: usize| p.get(k).copied().unwrap_or_default();
    let mut l = vec![c(0.0, 0.0); order + 1];
    for k in 1..=order {
        let mut acc = get(k) * k as f64;
        for j in 1..k {
            acc -= l[j] * j as f64 * get(k - j);
        }
        l[k] = acc / k as f64;
    }
    l
}

/// Reduces the imaginary part into `(-pi, pi]`.
pub fn mod_two_pi_i(v: C64) -> C64 {
    c(v.re, v.im - (v.im / (2.0 * PI)).round() * 2.0 * PI)
}

pub fn report(criterion: usize, title: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion} [{}] {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}
