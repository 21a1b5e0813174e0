use super::DomainBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    r
}

/// `count` quasi-random points in the box: a Halton sequence with a random
/// shift drawn from `seed`. Points stay a thousandth of the width away from
/// the faces, where charts are often singular.
pub fn sample_points(domain: &DomainBox, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = domain.dim();
    assert!(n <= PRIMES.len(), "sampling supports up to {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    (0..count)
        .map(|i| {
            (0..n)
                .map(|d| {
                    let t = (radical_inverse(i as u64 + 1, PRIMES[d]) + shift[d]).fract();
                    let t = 1e-3 + t * (1.0 - 2e-3);
                    domain.lower[d] + t * (domain.upper[d] - domain.lower[d])
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_inside_and_reproducible() {
        let b = DomainBox::new(vec![0.0, -1.0, 5.0], vec![1.0, 1.0, 6.0]).unwrap();
        let a = sample_points(&b, 50, 7);
        let c = sample_points(&b, 50, 7);
        assert_eq!(a, c);
        assert!(a.iter().all(|p| b.contains(p)));
        assert_ne!(a, sample_points(&b, 50, 8));
    }
}
