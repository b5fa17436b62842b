//! Riemann theta series with certified truncation.
//!
//! The series `sum_n exp(pi i n.Z.n + 2 pi i n.z)` is summed over the lattice
//! points inside an ellipsoid centred at `-Im(Z)^-1 Im(z)`. Writing
//! `c = Y^-1 y` with `Y = Im Z`, every term factors as
//! `exp(pi y.Y^-1.y) * exp(-pi (n+c).Y.(n+c)) * phase`, so the sum is
//! accumulated with the bounded factor only and the exponential growth is
//! kept separately as a log scale. Real parts of `z` are reduced modulo 1
//! first, which is exact.
//!
//! Derivative operators never use numerical differentiation: the operator
//! `D_i = sum_mu W_{i,mu}/(2 pi i) d/dz_mu` multiplies each term by
//! `W_i . n`, so `D_I` multiplies by the product of those linear forms.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Target bound on the neglected tail of the normalized sum.
    pub epsilon: f64,
    /// Cap on the lattice radius, in lattice coordinates.
    pub max_radius: u32,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            epsilon: 1e-12,
            max_radius: 64,
        }
    }
}

impl TruncationPolicy {
    pub fn with_epsilon(epsilon: f64) -> Self {
        TruncationPolicy {
            epsilon,
            ..Default::default()
        }
    }
}

/// Symmetric complex matrix with positive-definite imaginary part.
#[derive(Debug, Clone)]
pub struct RiemannMatrix {
    z: DMatrix<C64>,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
    im_inv: DMatrix<f64>,
    /// Upper-triangular `T` with `Im Z = T^T T`.
    chol_upper: DMatrix<f64>,
    lambda_min: f64,
    radius_cache: Arc<Mutex<HashMap<Vec<u64>, (f64, f64)>>>,
}

impl RiemannMatrix {
    pub fn new(z: DMatrix<C64>) -> Result<Self> {
        let g = z.nrows();
        if g == 0 || z.ncols() != g {
            return Err(Error::Validation(format!(
                "Riemann matrix must be square and non-empty, got {}x{}",
                z.nrows(),
                z.ncols()
            )));
        }
        let scale = z.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for r in 0..g {
            for c in r + 1..g {
                let asym = (z[(r, c)] - z[(c, r)]).norm();
                if asym > 1e-12 * scale {
                    return Err(Error::Validation(format!(
                        "Riemann matrix is not symmetric: |Z[{r},{c}] - Z[{c},{r}]| = {asym:e}"
                    )));
                }
            }
        }
        // Symmetrize exactly so that the real and imaginary parts are symmetric.
        let z = (&z + z.transpose()).map(|v| v * 0.5);
        let re = z.map(|v| v.re);
        let im = z.map(|v| v.im);
        let lambda_min = im.clone().symmetric_eigenvalues().min();
        if !(lambda_min > 1e-12 * scale) {
            return Err(Error::Validation(format!(
                "imaginary part of the Riemann matrix is not positive definite (smallest eigenvalue {lambda_min:e})"
            )));
        }
        let chol = im
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Validation("Cholesky factorization of Im Z failed".into()))?;
        let chol_upper = chol.l().transpose();
        let im_inv = chol.inverse();
        Ok(RiemannMatrix {
            z,
            re,
            im,
            im_inv,
            chol_upper,
            lambda_min,
            radius_cache: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    /// Genus-one matrix `[tau]`.
    pub fn from_tau(tau: C64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, tau))
    }

    pub fn genus(&self) -> usize {
        self.z.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.z
    }

    pub fn smallest_im_eigenvalue(&self) -> f64 {
        self.lambda_min
    }

    /// The `alpha`-th B-period vector `Z e_alpha`.
    pub fn column(&self, alpha: usize) -> Vec<C64> {
        self.z.column(alpha).iter().copied().collect()
    }
}

/// A subset of `{0, .., size-1}`, stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndexSet {
    bits: u32,
    size: u8,
}

impl MultiIndexSet {
    pub const MAX_SIZE: usize = 31;

    pub fn empty(size: usize) -> Self {
        assert!(size <= Self::MAX_SIZE, "index set universe too large");
        MultiIndexSet {
            bits: 0,
            size: size as u8,
        }
    }

    pub fn full(size: usize) -> Self {
        Self::from_bits(size, (1u32 << size) - 1)
    }

    pub fn from_bits(size: usize, bits: u32) -> Self {
        assert!(size <= Self::MAX_SIZE, "index set universe too large");
        assert!(bits >> size == 0, "bits outside the universe");
        MultiIndexSet {
            bits,
            size: size as u8,
        }
    }

    pub fn from_indices(size: usize, indices: &[usize]) -> Self {
        let mut s = Self::empty(size);
        for &i in indices {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.size as usize, "index {i} outside universe");
        self.bits |= 1 << i;
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.size as usize && self.bits & (1 << i) != 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn universe(&self) -> usize {
        self.size as usize
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    /// `I^c`, relative to the whole universe.
    pub fn complement(&self) -> Self {
        Self::from_bits(self.universe(), !self.bits & ((1u32 << self.size) - 1))
    }

    /// `self \ other`; with `other` a subset `J` of `I = self` this is `J_I^c`.
    pub fn minus(&self, other: &Self) -> Self {
        Self::from_bits(self.universe(), self.bits & !other.bits)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_bits(self.universe(), self.bits | other.bits)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// Elements in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe()).filter(move |&i| self.contains(i))
    }

    /// All subsets of `self`, starting with the empty set.
    pub fn subsets(&self) -> impl Iterator<Item = Self> + '_ {
        let mut next = Some(0u32);
        let full = self.bits;
        let size = self.universe();
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(Self::from_bits(size, cur))
        })
    }
}

/// One evaluation of a (possibly differentiated) theta series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaEval {
    /// Sum of the normalized terms.
    pub sum: C64,
    /// The full value is `exp(log_scale) * sum`.
    pub log_scale: f64,
    /// Radius of the summation ellipsoid in scaled coordinates.
    pub radius: f64,
    /// Bound on the neglected part of `sum`.
    pub tail_bound: f64,
}

impl ThetaEval {
    pub fn value(&self) -> C64 {
        self.sum * self.log_scale.exp()
    }
}

/// Prepared evaluation point: reduced real part and ellipsoid centre.
struct Centered {
    x: Vec<f64>,
    c: Vec<f64>,
    log_scale: f64,
}

fn center(z: &[C64], rm: &RiemannMatrix) -> Result<Centered> {
    let g = rm.genus();
    if z.len() != g {
        return Err(Error::Validation(format!(
            "theta argument has {} entries, genus is {g}",
            z.len()
        )));
    }
    if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Validation("non-finite theta argument".into()));
    }
    let x = z.iter().map(|v| v.re - v.re.round()).collect();
    let y = DVector::from_iterator(g, z.iter().map(|v| v.im));
    let c = &rm.im_inv * &y;
    let log_scale = PI * y.dot(&c);
    Ok(Centered {
        x,
        c: c.iter().copied().collect(),
        log_scale,
    })
}

/// Polynomial weight `prod_k (offset_k + norm_k * |n|)` carried by the terms.
#[derive(Debug, Clone, Default)]
struct Weight {
    factors: Vec<(f64, f64)>,
}

impl Weight {
    fn single_product(rows: &[&[C64]]) -> Self {
        Weight {
            factors: rows.iter().map(|r| (0.0, vec_norm(r))).collect(),
        }
    }

    /// Dominates every sub-product of the given rows.
    fn all_subsets(rows: &[Vec<C64>]) -> Self {
        Weight {
            factors: rows.iter().map(|r| (1.0, vec_norm(r))).collect(),
        }
    }
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn quantize_up(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        ((v.log2() * 32.0).ceil() / 32.0).exp2()
    }
}

/// Tail of `sum exp(-|w|^2) P(|n|)` over shifted lattice points with
/// `|w| >= radius`, bounded by the disjoint-ball comparison with the radial
/// integral.
struct TailBound {
    g: f64,
    rho: f64,
    alpha: f64,
    beta: f64,
    factors: Vec<(f64, f64)>,
}

impl TailBound {
    fn poly(&self, s: f64) -> f64 {
        let n = self.alpha * s + self.beta;
        self.factors.iter().map(|&(o, w)| o + w * n).product()
    }

    /// Point beyond which `P(r) exp(-r^2)` is decreasing.
    fn monotone_from(&self) -> f64 {
        let slope = |r: f64| -> f64 {
            let n = self.alpha * r + self.beta;
            self.factors
                .iter()
                .map(|&(o, w)| {
                    let d = o + w * n;
                    if w == 0.0 {
                        0.0
                    } else if d > 0.0 {
                        w * self.alpha / d
                    } else {
                        f64::INFINITY
                    }
                })
                .sum::<f64>()
                - 2.0 * r
        };
        if slope(0.0) <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while slope(hi) > 0.0 && hi < 1e6 {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn bound(&self, radius: f64) -> f64 {
        let a = (radius - self.rho).max(0.0);
        let integrand =
            |s: f64| (s + 0.5 * self.rho).powf(self.g - 1.0) * self.poly(s) * (-s * s).exp();
        // Composite Simpson on unit panels until the remaining mass is negligible.
        let mut total = 0.0;
        let mut lo = a;
        loop {
            let steps = 64;
            let h = 1.0 / steps as f64;
            let mut acc = integrand(lo) + integrand(lo + 1.0);
            for k in 1..steps {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * integrand(lo + k as f64 * h);
            }
            let panel = acc * h / 3.0;
            total += panel;
            lo += 1.0;
            if panel <= total * 1e-18 || lo > a + 40.0 {
                break;
            }
        }
        self.g * (2.0 / self.rho).powf(self.g) * total
    }
}

fn truncation_radius(
    rm: &RiemannMatrix,
    pol: &TruncationPolicy,
    c: &[f64],
    weight: &Weight,
) -> Result<(f64, f64)> {
    let beta = quantize_up((c.iter().map(|v| v * v).sum::<f64>().sqrt() * 4.0).ceil() / 4.0);
    let mut factors: Vec<(f64, f64)> = weight
        .factors
        .iter()
        .map(|&(o, w)| (o, quantize_up(w)))
        .collect();
    factors.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut key = vec![pol.epsilon.to_bits(), pol.max_radius as u64, beta.to_bits()];
    key.extend(
        factors
            .iter()
            .flat_map(|&(o, w)| [o.to_bits(), w.to_bits()]),
    );

    let rho = (PI * rm.lambda_min).sqrt();
    let cap = pol.max_radius as f64 * rho;
    let tb = TailBound {
        g: rm.genus() as f64,
        rho,
        alpha: 1.0 / rho,
        beta,
        factors,
    };

    if let Some(&hit) = rm.radius_cache.lock().unwrap().get(&key) {
        return Ok(hit);
    }

    let mut radius = (tb.monotone_from() + rho).max(rho);
    let mut bound = tb.bound(radius);
    while bound >= pol.epsilon {
        radius += 0.125;
        if radius > cap {
            return Err(Error::Precision {
                radius: radius / rho,
                cap: pol.max_radius,
                achievable: tb.bound(cap),
            });
        }
        bound = tb.bound(radius);
    }
    rm.radius_cache.lock().unwrap().insert(key, (radius, bound));
    Ok((radius, bound))
}

/// Visits every lattice point `n` with `pi |T (n + c)|^2 <= radius^2`, in a
/// fixed order, passing the normalized term.
fn for_each_term(
    rm: &RiemannMatrix,
    pt: &Centered,
    radius: f64,
    mut visit: impl FnMut(&[i64], C64),
) {
    let g = rm.genus();
    let t = &rm.chol_upper;
    let budget = radius * radius / PI;
    let mut n = vec![0i64; g];

    // Recursive enumeration from the last coordinate down.
    fn rec(
        level: usize,
        partial: f64,
        n: &mut Vec<i64>,
        t: &DMatrix<f64>,
        pt: &Centered,
        rm: &RiemannMatrix,
        budget: f64,
        visit: &mut dyn FnMut(&[i64], C64),
    ) {
        let g = n.len();
        let mut tail = 0.0;
        for j in level + 1..g {
            tail += t[(level, j)] * (n[j] as f64 + pt.c[j]);
        }
        let d = t[(level, level)];
        let rem = budget - partial;
        if rem < 0.0 {
            return;
        }
        let centre = -pt.c[level] - tail / d;
        let half = rem.sqrt() / d;
        let lo = (centre - half).ceil() as i64;
        let hi = (centre + half).floor() as i64;
        for k in lo..=hi {
            n[level] = k;
            let v = d * (k as f64 + pt.c[level]) + tail;
            let p = partial + v * v;
            if p > budget {
                continue;
            }
            if level == 0 {
                visit(n, term(n, pt, rm));
            } else {
                rec(level - 1, p, n, t, pt, rm, budget, visit);
            }
        }
    }
    rec(g - 1, 0.0, &mut n, t, pt, rm, budget, &mut visit);
}

fn term(n: &[i64], pt: &Centered, rm: &RiemannMatrix) -> C64 {
    let g = n.len();
    let mut quad_re = 0.0;
    let mut quad_im = 0.0;
    for a in 0..g {
        let na = n[a] as f64;
        let va = na + pt.c[a];
        for b in 0..g {
            quad_re += na * rm.re[(a, b)] * n[b] as f64;
            quad_im += va * rm.im[(a, b)] * (n[b] as f64 + pt.c[b]);
        }
    }
    let lin: f64 = n.iter().zip(&pt.x).map(|(&k, x)| k as f64 * x).sum();
    let phase = PI * (quad_re + 2.0 * lin);
    let modulus = (-PI * quad_im).exp();
    C64::from_polar(modulus, phase)
}

fn dot_n(row: &[C64], n: &[i64]) -> C64 {
    row.iter().zip(n).map(|(w, &k)| w * k as f64).sum()
}

/// Theta series with each term multiplied by `prod_k (rows_k . n)`.
pub fn theta_with_factors(
    z: &[C64],
    rm: &RiemannMatrix,
    rows: &[&[C64]],
    pol: &TruncationPolicy,
) -> Result<ThetaEval> {
    for r in rows {
        if r.len() != rm.genus() {
            return Err(Error::Validation(format!(
                "derivative row has {} entries, genus is {}",
                r.len(),
                rm.genus()
            )));
        }
    }
    let pt = center(z, rm)?;
    let (radius, tail_bound) = truncation_radius(rm, pol, &pt.c, &Weight::single_product(rows))?;
    Ok(sum_at_radius(rm, &pt, rows, radius, tail_bound))
}

fn sum_at_radius(
    rm: &RiemannMatrix,
    pt: &Centered,
    rows: &[&[C64]],
    radius: f64,
    tail_bound: f64,
) -> ThetaEval {
    let mut sum = C64::new(0.0, 0.0);
    for_each_term(rm, pt, radius, |n, t| {
        let f: C64 = rows.iter().map(|r| dot_n(r, n)).product();
        sum += t * f;
    });
    ThetaEval {
        sum,
        log_scale: pt.log_scale,
        radius,
        tail_bound,
    }
}

/// Same series summed over an explicitly chosen scaled radius, with no
/// truncation control. Intended for truncation audits.
pub fn theta_at_radius(
    z: &[C64],
    rm: &RiemannMatrix,
    rows: &[&[C64]],
    radius: f64,
) -> Result<ThetaEval> {
    let pt = center(z, rm)?;
    Ok(sum_at_radius(rm, &pt, rows, radius, f64::NAN))
}

pub fn riemann_theta_eval(
    z: &[C64],
    rm: &RiemannMatrix,
    pol: &TruncationPolicy,
) -> Result<ThetaEval> {
    theta_with_factors(z, rm, &[], pol)
}

pub fn riemann_theta(z: &[C64], rm: &RiemannMatrix, pol: &TruncationPolicy) -> Result<C64> {
    Ok(riemann_theta_eval(z, rm, pol)?.value())
}

/// Partial derivatives of theta: `d/dz_{mu_1} ... d/dz_{mu_k} theta(z)`.
pub fn theta_partial(
    z: &[C64],
    rm: &RiemannMatrix,
    directions: &[usize],
    pol: &TruncationPolicy,
) -> Result<C64> {
    let g = rm.genus();
    let rows: Vec<Vec<C64>> = directions
        .iter()
        .map(|&mu| {
            let mut r = vec![C64::new(0.0, 0.0); g];
            r[mu] = crate::TWO_PI_I;
            r
        })
        .collect();
    let refs: Vec<&[C64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(theta_with_factors(z, rm, &refs, pol)?.value())
}

fn w_row(w_rows: &DMatrix<C64>, i: usize) -> Vec<C64> {
    w_rows.row(i).iter().copied().collect()
}

/// `D_I theta(z)` with `D_i = sum_mu W_{i,mu}/(2 pi i) d/dz_mu`; `w_rows` is
/// `N x g` with one row per higher-order form.
pub fn theta_d(
    set: &MultiIndexSet,
    z: &[C64],
    rm: &RiemannMatrix,
    w_rows: &DMatrix<C64>,
    pol: &TruncationPolicy,
) -> Result<C64> {
    if w_rows.nrows() < set.universe() || w_rows.ncols() != rm.genus() {
        return Err(Error::Validation(format!(
            "W has shape {}x{}, need {}x{}",
            w_rows.nrows(),
            w_rows.ncols(),
            set.universe(),
            rm.genus()
        )));
    }
    let rows: Vec<Vec<C64>> = set.iter().map(|i| w_row(w_rows, i)).collect();
    let refs: Vec<&[C64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(theta_with_factors(z, rm, &refs, pol)?.value())
}

/// `D_K theta(z)` for every subset `K` of the rows of `w_rows`, indexed by
/// the bit mask of `K`, from a single pass over the lattice.
pub fn theta_d_all_subsets(
    z: &[C64],
    rm: &RiemannMatrix,
    w_rows: &DMatrix<C64>,
    pol: &TruncationPolicy,
) -> Result<Vec<C64>> {
    let n_rows = w_rows.nrows();
    if n_rows > 16 {
        return Err(Error::Size(format!(
            "{n_rows} derivative rows exceed the cap of 16"
        )));
    }
    if n_rows > 0 && w_rows.ncols() != rm.genus() {
        return Err(Error::Validation(format!(
            "W has {} columns, genus is {}",
            w_rows.ncols(),
            rm.genus()
        )));
    }
    let rows: Vec<Vec<C64>> = (0..n_rows).map(|i| w_row(w_rows, i)).collect();
    let pt = center(z, rm)?;
    let (radius, _) = truncation_radius(rm, pol, &pt.c, &Weight::all_subsets(&rows))?;
    let count = 1usize << n_rows;
    let mut sums = vec![C64::new(0.0, 0.0); count];
    let mut prods = vec![C64::new(0.0, 0.0); count];
    let mut lin = vec![C64::new(0.0, 0.0); n_rows];
    for_each_term(rm, &pt, radius, |n, t| {
        for (l, r) in lin.iter_mut().zip(&rows) {
            *l = dot_n(r, n);
        }
        prods[0] = t;
        for mask in 1..count {
            let low = mask.trailing_zeros() as usize;
            prods[mask] = prods[mask & (mask - 1)] * lin[low];
        }
        for (s, p) in sums.iter_mut().zip(&prods) {
            *s += p;
        }
    });
    let scale = pt.log_scale.exp();
    Ok(sums.into_iter().map(|s| s * scale).collect())
}

/// Genus one: `theta^{(m)}(w)` for `m = 0..=order` from one lattice pass.
pub fn theta_derivatives_genus1(
    w: C64,
    rm: &RiemannMatrix,
    order: usize,
    pol: &TruncationPolicy,
) -> Result<Vec<C64>> {
    if rm.genus() != 1 {
        return Err(Error::Validation(
            "genus-one evaluation on a higher-genus matrix".into(),
        ));
    }
    let pt = center(&[w], rm)?;
    let rows = vec![vec![crate::TWO_PI_I]; order];
    let (radius, _) = truncation_radius(rm, pol, &pt.c, &Weight::all_subsets(&rows))?;
    let mut sums = vec![C64::new(0.0, 0.0); order + 1];
    for_each_term(rm, &pt, radius, |n, t| {
        let f = crate::TWO_PI_I * n[0] as f64;
        let mut p = t;
        for s in sums.iter_mut() {
            *s += p;
            p *= f;
        }
    });
    let scale = pt.log_scale.exp();
    Ok(sums.into_iter().map(|s| s * scale).collect())
}

/// Automorphy factor `R_alpha = exp(-2 pi i z_alpha - pi i Z_{alpha,alpha})`.
pub fn periodicity_factor(z: &[C64], rm: &RiemannMatrix, alpha: usize) -> C64 {
    let i = C64::new(0.0, 1.0);
    (-2.0 * PI * i * z[alpha] - PI * i * rm.matrix()[(alpha, alpha)]).exp()
}

fn residual(lhs: C64, rhs: C64) -> f64 {
    (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1.0)
}

fn shifted_by_column(z: &[C64], rm: &RiemannMatrix, alpha: usize) -> Vec<C64> {
    z.iter().zip(rm.column(alpha)).map(|(a, b)| a + b).collect()
}

/// `sum_{J subset S} (-1)^{|S \ J|} W_{S \ J, alpha} D_J theta(z)`.
fn periodicity_rhs_sum(
    set: &MultiIndexSet,
    alpha: usize,
    z: &[C64],
    rm: &RiemannMatrix,
    w_rows: &DMatrix<C64>,
    pol: &TruncationPolicy,
) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for j in set.subsets() {
        let rest = set.minus(&j);
        let sign = if rest.len() % 2 == 0 { 1.0 } else { -1.0 };
        let w: C64 = rest.iter().map(|k| w_rows[(k, alpha)]).product();
        acc += sign * w * theta_d(&j, z, rm, w_rows, pol)?;
    }
    Ok(acc)
}

/// Residual of `D_I theta(z + Z_alpha) = [sum_J (-1)^{|J^c_I|} W_{J^c_I,alpha} D_J theta(z)] R_alpha`.
pub fn check_derivative_periodicity(
    set: &MultiIndexSet,
    alpha: usize,
    z: &[C64],
    rm: &RiemannMatrix,
    w_rows: &DMatrix<C64>,
    pol: &TruncationPolicy,
) -> Result<f64> {
    let lhs = theta_d(set, &shifted_by_column(z, rm, alpha), rm, w_rows, pol)?;
    let rhs =
        periodicity_rhs_sum(set, alpha, z, rm, w_rows, pol)? * periodicity_factor(z, rm, alpha);
    Ok(residual(lhs, rhs))
}

/// Residual of the quasi-periodicity of the coefficient `F_I = D_{I^c} theta`.
pub fn check_coefficient_periodicity(
    set: &MultiIndexSet,
    alpha: usize,
    z: &[C64],
    rm: &RiemannMatrix,
    w_rows: &DMatrix<C64>,
    pol: &TruncationPolicy,
) -> Result<f64> {
    let comp = set.complement();
    let f_i = |arg: &[C64]| theta_d(&comp, arg, rm, w_rows, pol);
    let lhs = f_i(&shifted_by_column(z, rm, alpha))?;
    let rhs =
        periodicity_rhs_sum(&comp, alpha, z, rm, w_rows, pol)? * periodicity_factor(z, rm, alpha);
    Ok(residual(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vanishing_direction_gives_zero() {
        let rm = RiemannMatrix::from_tau(c(0.1, 1.2)).unwrap();
        let w = DMatrix::from_element(1, 1, c(0.0, 0.0));
        let v = theta_d(
            &MultiIndexSet::full(1),
            &[c(0.2, 0.1)],
            &rm,
            &w,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert_eq!(v, c(0.0, 0.0));
    }

    #[test]
    fn half_period_value_matches_direct_sum() {
        let rm = RiemannMatrix::from_tau(c(0.0, 1.0)).unwrap();
        let got = riemann_theta(&[c(0.5, 0.0)], &rm, &TruncationPolicy::default()).unwrap();
        let oracle: f64 = (-20i64..=20)
            .map(|n| (-PI * (n * n) as f64).exp() * if n % 2 == 0 { 1.0 } else { -1.0 })
            .sum();
        assert!((got - oracle).norm() < 1e-12, "{got} vs {oracle}");
        assert!((oracle - 0.913_579_138_156_116_8).abs() < 1e-15);
    }

    #[test]
    fn odd_theta_null_vanishes() {
        let rm = RiemannMatrix::from_tau(c(0.0, 1.0)).unwrap();
        let v = riemann_theta(&[c(0.5, 0.5)], &rm, &TruncationPolicy::default()).unwrap();
        assert!(v.norm() < 1e-12, "{v}");
    }

    #[test]
    fn periodicity_factor_examples() {
        let rm = RiemannMatrix::from_tau(c(0.0, 1.0)).unwrap();
        let r = periodicity_factor(&[c(0.0, 0.0)], &rm, 0);
        assert!((r - c(PI.exp(), 0.0)).norm() < 1e-12 * PI.exp());
        let r = periodicity_factor(&[c(0.5, 0.0)], &rm, 0);
        assert!((r + c(PI.exp(), 0.0)).norm() < 1e-12 * PI.exp());
    }

    #[test]
    fn empty_derivative_set_is_plain_theta() {
        let rm = RiemannMatrix::from_tau(c(0.1, 0.9)).unwrap();
        let w = DMatrix::from_element(1, 1, c(0.4, -1.0));
        let z = [c(0.3, 0.2)];
        let pol = TruncationPolicy::default();
        let a = theta_d(&MultiIndexSet::empty(1), &z, &rm, &w, &pol).unwrap();
        let b = riemann_theta(&z, &rm, &pol).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn odd_summand_derivative_vanishes_at_origin() {
        let rm = RiemannMatrix::from_tau(c(0.0, 1.0)).unwrap();
        let w = DMatrix::from_element(1, 1, crate::TWO_PI_I);
        let v = theta_d(
            &MultiIndexSet::full(1),
            &[c(0.0, 0.0)],
            &rm,
            &w,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn empty_set_periodicity() {
        let rm = RiemannMatrix::from_tau(c(0.2, 1.3)).unwrap();
        let w = DMatrix::from_element(1, 1, c(0.7, 0.1));
        let r = check_derivative_periodicity(
            &MultiIndexSet::empty(1),
            0,
            &[c(0.1, -0.2)],
            &rm,
            &w,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn subsets_enumerate_power_set() {
        let s = MultiIndexSet::from_indices(5, &[0, 2, 3]);
        let subs: Vec<u32> = s.subsets().map(|t| t.bits()).collect();
        assert_eq!(subs.len(), 8);
        assert_eq!(subs[0], 0);
        assert!(subs.iter().all(|b| b & !s.bits() == 0));
        let mut sorted = subs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
        assert_eq!(s.complement().len() + s.len(), 5);
        let j = MultiIndexSet::from_indices(5, &[2]);
        assert_eq!(s.minus(&j), MultiIndexSet::from_indices(5, &[0, 3]));
        assert_eq!(MultiIndexSet::empty(0).subsets().count(), 1);
    }

    #[test]
    fn rejects_bad_matrices() {
        let asym =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.1, 0.0), c(0.2, 0.0), c(0.0, 1.0)]);
        assert!(matches!(
            RiemannMatrix::new(asym),
            Err(Error::Validation(_))
        ));
        let indefinite =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 2.0), c(0.0, 2.0), c(0.0, 1.0)]);
        assert!(matches!(
            RiemannMatrix::new(indefinite),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn tiny_epsilon_with_small_cap_is_a_precision_error() {
        let rm = RiemannMatrix::from_tau(c(0.0, 0.05)).unwrap();
        let pol = TruncationPolicy {
            epsilon: 1e-14,
            max_radius: 2,
        };
        match riemann_theta(&[c(0.1, 0.0)], &rm, &pol) {
            Err(Error::Precision { achievable, .. }) => assert!(achievable > 1e-14),
            other => panic!("unexpected {other:?}"),
        }
    }
}
