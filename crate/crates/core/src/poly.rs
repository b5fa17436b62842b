//! Dense complex polynomials (coefficients in increasing degree) and their roots.

use nalgebra::DMatrix;

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn constant(c: C64) -> Self {
        Poly(vec![c])
    }

    /// `c0 + c1 z`.
    pub fn linear(c0: C64, c1: C64) -> Self {
        Poly(vec![c0, c1])
    }

    /// `(z - q)^n`.
    pub fn binomial_power(q: C64, n: usize) -> Self {
        let mut p = Poly::constant(C64::new(1.0, 0.0));
        for _ in 0..n {
            p = p.mul(&Poly::linear(-q, C64::new(1.0, 0.0)));
        }
        p
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![C64::new(0.0, 0.0); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn scale(&self, c: C64) -> Poly {
        Poly(self.0.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let get = |p: &Poly, k: usize| p.0.get(k).copied().unwrap_or_default();
        Poly((0..n).map(|k| get(self, k) + get(other, k)).collect())
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.0
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for c in self.0.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Degree after dropping leading coefficients below `rel_tol * norm`.
    pub fn effective_degree(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.norm();
        self.0.iter().rposition(|c| c.norm() > cut).unwrap_or(0)
    }

    pub fn truncated(&self, degree: usize) -> Poly {
        Poly(self.0[..=degree].to_vec())
    }
}

/// Roots of a polynomial of exact degree `deg(p)`: eigenvalues of the
/// companion matrix, then Aberth steps that are kept only when they reduce
/// the residual.
pub fn roots(p: &Poly) -> Vec<C64> {
    let n = p.0.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = p.0[n];
    let mut companion = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        companion[(0, k)] = -p.0[n - 1 - k] / lead;
        if k + 1 < n {
            companion[(k + 1, k)] = C64::new(1.0, 0.0);
        }
    }
    let mut z: Vec<C64> = match companion.clone().schur().eigenvalues() {
        Some(ev) => ev.iter().copied().collect(),
        None => initial_circle(p),
    };
    aberth_polish(p, &mut z, 3);
    z
}

fn initial_circle(p: &Poly) -> Vec<C64> {
    let n = p.0.len() - 1;
    let lead = p.0[n].norm();
    let r = 1.0 + p.0[..n].iter().map(|c| c.norm() / lead).fold(0.0, f64::max);
    (0..n)
        .map(|k| C64::from_polar(r, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect()
}

/// Aberth-Ehrlich iterations (simultaneous Newton with repulsion).
pub fn aberth_polish(p: &Poly, z: &mut [C64], steps: usize) {
    for _ in 0..steps {
        for k in 0..z.len() {
            let (v, dv) = p.eval_with_derivative(z[k]);
            if v == C64::new(0.0, 0.0) || dv == C64::new(0.0, 0.0) {
                continue;
            }
            let ratio = v / dv;
            let repulsion: C64 = (0..z.len())
                .filter(|&j| j != k && z[j] != z[k])
                .map(|j| 1.0 / (z[k] - z[j]))
                .sum();
            let step = ratio / (1.0 - ratio * repulsion);
            let cand = z[k] - step;
            if cand.re.is_finite() && cand.im.is_finite() && p.eval(cand).norm() < v.norm() {
                z[k] = cand;
            }
        }
    }
}

/// Groups roots closer than `tol * max(1, |z|)` and returns the cluster
/// means with multiplicities.
pub fn cluster(roots: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize, C64)> = Vec::new();
    for &r in roots {
        match out
            .iter_mut()
            .find(|(m, _, _)| (*m - r).norm() <= tol * m.norm().max(1.0))
        {
            Some((mean, count, sum)) => {
                *sum += r;
                *count += 1;
                *mean = *sum / *count as f64;
            }
            None => out.push((r, 1, r)),
        }
    }
    out.into_iter().map(|(m, c, _)| (m, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn roots_of_product_form() {
        let want = [c(1.0, 2.0), c(-0.5, 0.1), c(3.0, -1.0), c(0.0, 0.7)];
        let p = want.iter().fold(Poly::constant(c(2.0, 1.0)), |acc, r| {
            acc.mul(&Poly::linear(-r, c(1.0, 0.0)))
        });
        let got = roots(&p);
        for w in want {
            let best = got
                .iter()
                .map(|g| (g - w).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-12, "{w}: {best}");
        }
    }

    #[test]
    fn double_root_clusters() {
        let p = Poly::binomial_power(c(0.5, -0.5), 2).mul(&Poly::linear(c(2.0, 0.0), c(1.0, 0.0)));
        let cl = cluster(&roots(&p), 1e-6);
        assert_eq!(cl.len(), 2);
        let dbl = cl.iter().find(|(_, m)| *m == 2).unwrap();
        assert!((dbl.0 - c(0.5, -0.5)).norm() < 1e-7);
    }

    #[test]
    fn effective_degree_drops_tiny_leading_terms() {
        let p = Poly(vec![c(1.0, 0.0), c(2.0, 0.0), c(1e-17, 0.0)]);
        assert_eq!(p.effective_degree(1e-12), 1);
    }

    #[test]
    fn horner_derivative() {
        let p = Poly(vec![c(1.0, 0.0), c(0.0, 1.0), c(3.0, 0.0)]);
        let (v, d) = p.eval_with_derivative(c(0.5, 0.5));
        let z = c(0.5, 0.5);
        assert!((v - (1.0 + c(0.0, 1.0) * z + 3.0 * z * z)).norm() < 1e-15);
        assert!((d - (c(0.0, 1.0) + 6.0 * z)).norm() < 1e-15);
    }
}
