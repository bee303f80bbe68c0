//! Seeded Haar sampling on SU(2), U(2), SO(2) and SO(3).

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{embed_u2_to_k, GroupMatrix, GroupTag, U2Param};

pub type ChaChaRng = ChaCha8Rng;

/// Identifier of the generator, recorded in every report that consumes randomness.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64";

pub fn rng_from_seed(seed: u64) -> ChaChaRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point on the unit 3-sphere.
fn unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return q.map(|x| x / norm);
        }
    }
}

/// Haar-distributed element of SU(2).
pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> U2Param {
    let [a, b, c, d] = unit_quaternion(rng);
    U2Param::su2(a, b, c, d)
}

/// Haar-distributed element of U(2): an SU(2) element times an independent uniform phase.
pub fn random_u2<R: Rng + ?Sized>(rng: &mut R) -> U2Param {
    let u = random_su2(rng);
    let phase = Complex64::from_polar(1.0, rng.random::<f64>() * TAU);
    U2Param { entries: u.entries.map(|row| row.map(|z| z * phase)) }
}

pub fn random_so2_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU
}

/// Haar-random element of K = U(2) embedded in Sp(2,R).
pub fn random_k_with<R: Rng + ?Sized>(rng: &mut R) -> GroupMatrix {
    embed_u2_to_k(&random_u2(rng)).expect("sampled matrix is unitary")
}

pub fn random_k(seed: u64) -> GroupMatrix {
    random_k_with(&mut rng_from_seed(seed))
}

/// Haar-random rotation, pushed forward from a uniform unit quaternion.
pub fn random_so3_with<R: Rng + ?Sized>(rng: &mut R) -> GroupMatrix {
    let [w, x, y, z] = unit_quaternion(rng);
    let entries = vec![
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    ];
    GroupMatrix::new(3, GroupTag::SO3, entries).expect("finite entries")
}

pub fn random_so3(seed: u64) -> GroupMatrix {
    random_so3_with(&mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_zero_is_reproducible_and_symplectic() {
        let a = random_k(0);
        let b = random_k(0);
        assert_eq!(a, b);
        assert!(a.membership_residual() <= 1e-12);
        assert!((a.det() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn distinct_seeds_give_distinct_samples() {
        assert_ne!(random_k(1), random_k(2));
        assert_ne!(random_so3(1), random_so3(2));
    }

    #[test]
    fn so3_samples_are_rotations() {
        for seed in 0..100 {
            let g = random_so3(seed);
            assert!(g.membership_residual() <= 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn su2_samples_have_unit_determinant() {
        let mut rng = rng_from_seed(5);
        for _ in 0..100 {
            let u = random_su2(&mut rng);
            u.check_su2(1e-12).unwrap();
            let k = super::super::embed_su2(&u).unwrap();
            assert!(k.membership_residual() <= 1e-12);
        }
    }
}
