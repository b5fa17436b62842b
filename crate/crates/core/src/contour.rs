//! Trapezoid-rule contour integrals on circles.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::C64;

const DOUBLING_TOL: f64 = 1e-9;
const MAX_NODES: usize = 1 << 14;

fn circle_node(center: C64, radius: f64, k: usize, nodes: usize) -> (C64, C64) {
    let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
    (center + radius * e, radius * e)
}

fn trapezoid(
    f: &mut dyn FnMut(C64) -> Result<C64>,
    center: C64,
    radius: f64,
    nodes: usize,
) -> Result<(C64, f64)> {
    let mut sum = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for k in 0..nodes {
        let (t, dt) = circle_node(center, radius, k, nodes);
        let v = f(t)? * dt;
        scale += v.norm();
        sum += v;
    }
    Ok((sum / nodes as f64, scale / nodes as f64))
}

/// `(1/2 pi i)` times the integral of `f` over the circle, doubling the node
/// count until two successive rules agree to `1e-9` relative to the size
/// of the integrand.
pub fn contour_residue(
    mut f: impl FnMut(C64) -> Result<C64>,
    center: C64,
    radius: f64,
    nodes: usize,
) -> Result<C64> {
    let mut n = nodes.max(4);
    let (mut prev, _) = trapezoid(&mut f, center, radius, n)?;
    loop {
        n *= 2;
        let (cur, scale) = trapezoid(&mut f, center, radius, n)?;
        if (cur - prev).norm() <= DOUBLING_TOL * cur.norm().max(scale) {
            return Ok(cur);
        }
        if n >= MAX_NODES {
            return Err(Error::Accuracy(format!(
                "residue at {center} (radius {radius:e}) still changes by {:e} at {n} nodes",
                (cur - prev).norm()
            )));
        }
        prev = cur;
    }
}

/// Values of `log f` on the circle, continued along the nodes from the
/// principal value at the first node. `None` if `f` winds around zero
/// (or vanishes) on the circle, which means `log f` has no analytic branch
/// inside.
pub fn unwrapped_log_on_circle(
    f: &mut dyn FnMut(C64) -> Result<C64>,
    center: C64,
    radius: f64,
    nodes: usize,
) -> Result<Option<Vec<C64>>> {
    let mut out = Vec::with_capacity(nodes);
    let mut prev_arg = 0.0;
    let mut first = None;
    for k in 0..=nodes {
        let (t, _) = circle_node(center, radius, k % nodes, nodes);
        let v = f(t)?;
        if v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite() {
            return Ok(None);
        }
        let arg = v.arg();
        let unwrapped = if k == 0 {
            arg
        } else {
            let mut d = arg - prev_arg;
            d -= (d / (2.0 * PI)).round() * 2.0 * PI;
            if d.abs() > 0.5 * PI {
                // too coarse to follow the argument reliably
                return Ok(None);
            }
            prev_arg + d
        };
        prev_arg = unwrapped;
        if k == nodes {
            first = Some(unwrapped);
        } else {
            out.push(C64::new(v.norm().ln(), unwrapped));
        }
    }
    let winding = (first.unwrap() - out[0].im) / (2.0 * PI);
    if winding.abs() > 0.25 {
        return Ok(None);
    }
    Ok(Some(out))
}

/// `(1/2 pi i)` times the integral of `log f(t) g(t) dt` over the circle,
/// using the branch of `log f` that is analytic in the disk. Returns `None`
/// when `f` has a zero inside the disk.
pub fn log_weighted_residue(
    f: &mut dyn FnMut(C64) -> Result<C64>,
    g: &mut dyn FnMut(C64) -> Result<C64>,
    center: C64,
    radius: f64,
    nodes: usize,
) -> Result<Option<C64>> {
    let mut n = nodes.max(8);
    let mut prev: Option<C64> = None;
    loop {
        let Some(logs) = unwrapped_log_on_circle(f, center, radius, n)? else {
            return Ok(None);
        };
        let mut sum = C64::new(0.0, 0.0);
        let mut scale = 0.0;
        for (k, l) in logs.iter().enumerate() {
            let (t, dt) = circle_node(center, radius, k, n);
            let v = l * g(t)? * dt;
            scale += v.norm();
            sum += v;
        }
        let cur = sum / n as f64;
        let scale = scale / n as f64;
        if let Some(p) = prev {
            if (cur - p).norm() <= DOUBLING_TOL * cur.norm().max(scale) {
                return Ok(Some(cur));
            }
        }
        if n >= MAX_NODES {
            return Err(Error::Accuracy(format!(
                "log-weighted residue at {center} did not converge by {n} nodes"
            )));
        }
        prev = Some(cur);
        n *= 2;
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule for `f` on `[a, b]`.
pub fn integrate_segment(
    mut f: impl FnMut(f64) -> Result<C64>,
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
) -> Result<C64> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut sum = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            sum += f(lo + 0.5 * h * (xi + 1.0))? * (0.5 * h * wi);
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let v = integrate_segment(|x| Ok(C64::new(x.powi(9) + x.powi(4), 0.0)), 0.0, 2.0, 1, 5)
            .unwrap();
        assert!((v.re - (102.4 + 6.4)).abs() < 1e-11);
    }

    #[test]
    fn defining_residue() {
        let r = contour_residue(|t| Ok(1.0 / t), c(0.0, 0.0), 1.0, 32).unwrap();
        assert!((r - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn taylor_coefficient() {
        let r = contour_residue(|t| Ok(t.exp() / t.powi(3)), c(0.0, 0.0), 1.0, 32).unwrap();
        assert!((r - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn log_coefficient_and_winding() {
        // coefficient of t^2 in log(1 + t/2) is -1/8
        let mut f = |t: C64| Ok(1.0 + t / 2.0);
        let mut g = |t: C64| Ok(t.powi(-3));
        let r = log_weighted_residue(&mut f, &mut g, c(0.0, 0.0), 0.5, 64)
            .unwrap()
            .unwrap();
        assert!((r + c(0.125, 0.0)).norm() < 1e-13);
        let mut h = |t: C64| Ok(t - 0.1);
        assert!(log_weighted_residue(&mut h, &mut g, c(0.0, 0.0), 0.5, 64)
            .unwrap()
            .is_none());
    }
}
