//! Seeded random shifts.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen_theta::ShiftParams;
use crate::C64;

/// Radius of the disk the `lambda` components are drawn from.
pub const LAMBDA_RADIUS: f64 = 0.3;

fn in_disk(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.gen::<f64>().sqrt();
    C64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
}

/// `count` shifts with `log a` uniform in the unit disk, `b` uniform in the
/// unit disk and `lambda` uniform in the disk of radius 0.3. The seed fully
/// determines the result.
pub fn random_shifts(m: usize, n: usize, g: usize, count: usize, seed: u64) -> Vec<ShiftParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| ShiftParams {
            a: (0..m).map(|_| in_disk(&mut rng, 1.0).exp()).collect(),
            b: (0..n).map(|_| in_disk(&mut rng, 1.0)).collect(),
            lambda: (0..g).map(|_| in_disk(&mut rng, LAMBDA_RADIUS)).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_in_range() {
        let a = random_shifts(2, 1, 1, 20, 7);
        let b = random_shifts(2, 1, 1, 20, 7);
        assert_eq!(a, b);
        assert_ne!(a, random_shifts(2, 1, 1, 20, 8));
        for s in &a {
            assert!(s.a.iter().all(|v| v.ln().norm() <= 1.0 + 1e-12));
            assert!(s.b.iter().all(|v| v.norm() <= 1.0));
            assert!(s.lambda.iter().all(|v| v.norm() <= LAMBDA_RADIUS));
        }
    }
}
