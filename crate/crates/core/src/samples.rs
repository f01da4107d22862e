//! Ready-made systems: the worked two-measure example, the reference
//! eight-atom system and seeded random discrete systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;

use crate::error::Result;
use crate::interval::Interval;
use crate::measures::Measure;
use crate::nikishin::NikishinSystem;
use crate::scalar::Cx;

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

/// `sigma_1 = (delta_0 + delta_1)/2` on `[0,1]`, `sigma_2 = delta_3` on `[2,4]`.
pub fn worked_system() -> NikishinSystem<Rational> {
    let s1 = Measure::from_rational_atoms(&[(q(0, 1), q(1, 2)), (q(1, 1), q(1, 2))], Some(Interval::from_i64(0, 1).unwrap()), 0).unwrap();
    let s2 = Measure::from_rational_atoms(&[(q(3, 1), q(1, 1))], Some(Interval::from_i64(2, 4).unwrap()), 0).unwrap();
    NikishinSystem::build(vec![s1, s2]).unwrap()
}

/// Eight atoms on each of `[0,1]` and `[2,3]`; the second generator has
/// geometrically decaying weights.
pub fn reference_system() -> NikishinSystem<Rational> {
    let s1: Vec<(Rational, Rational)> = (0..8).map(|i| (q(i, 7), q(1 + i % 3, 8))).collect();
    let s2: Vec<(Rational, Rational)> = (0..8).map(|i| (q(2, 1) + q(i, 7), q(1, 8i64.pow(i as u32)))).collect();
    NikishinSystem::build(vec![
        Measure::from_rational_atoms(&s1, Some(Interval::from_i64(0, 1).unwrap()), 0).unwrap(),
        Measure::from_rational_atoms(&s2, Some(Interval::from_i64(2, 3).unwrap()), 0).unwrap(),
    ])
    .unwrap()
}

/// Random discrete system: generator `j` lives on `[3(j-1), 3(j-1)+2]` with
/// `atoms` distinct points on the `1/32` lattice and weights in `{1/8, ..., 2}`.
pub fn random_system(rng: &mut ChaCha8Rng, m: usize, atoms: std::ops::RangeInclusive<usize>) -> NikishinSystem<Rational> {
    let gens = (0..m)
        .map(|j| {
            let lo = 3 * j as i64;
            let count = rng.random_range(atoms.clone());
            let mut ks: Vec<i64> = Vec::new();
            while ks.len() < count {
                let k = rng.random_range(1..64);
                if !ks.contains(&k) {
                    ks.push(k);
                }
            }
            ks.sort_unstable();
            let pts: Vec<(Rational, Rational)> = ks.iter().map(|&k| (q(lo * 32 + k, 32), q(rng.random_range(1..=16), 8))).collect();
            Measure::from_rational_atoms(&pts, Some(Interval::from_i64(lo, lo + 2).unwrap()), 0).unwrap()
        })
        .collect();
    NikishinSystem::build(gens).unwrap()
}

/// `count` random systems with `m` in `{2,3,4}` and 8-12 atoms per generator.
pub fn random_sweep(seed: u64, count: usize) -> Vec<NikishinSystem<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.random_range(2..=4);
            random_system(&mut rng, m, 8..=12)
        })
        .collect()
}

/// Random complex rationals with `|re| <= 20`, `1/4 <= |im| <= 20`.
pub fn random_points(seed: u64, count: usize) -> Vec<Cx<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let re = q(rng.random_range(-80..=80), 4);
            let im = q(rng.random_range(1..=80), 4) * if rng.random_bool(0.5) { 1 } else { -1 };
            Cx::new(re, im)
        })
        .collect()
}

/// Same system in the float backend.
pub fn to_float(sys: &NikishinSystem<Rational>, prec: u32) -> Result<NikishinSystem<rug::Float>> {
    NikishinSystem::build(sys.generators().iter().map(|g| g.convert(prec)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_is_deterministic_and_valid() {
        let a = random_sweep(7, 3);
        let b = random_sweep(7, 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.m(), y.m());
            assert_eq!(x.intervals(), y.intervals());
            assert!((2..=4).contains(&x.m()));
            assert!(x.min_atom_count().unwrap() >= 8);
        }
        assert!(random_points(1, 20).iter().all(|z| z.im != 0));
    }

    #[test]
    fn reference_masses() {
        let sys = reference_system();
        assert_eq!(sys.generator(2).total_mass().unwrap(), (0..8).map(|i| q(1, 8i64.pow(i))).sum::<Rational>());
    }
}
