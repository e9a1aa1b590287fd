use rand::Rng;

use super::Tensor;

/// `[fan_in, fan_out]` matrix drawn from U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..limit))
        .collect();
    Tensor::new(vec![fan_in, fan_out], data).expect("glorot shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_bounds_and_determinism() {
        let a = glorot_uniform(10, 6, &mut ChaCha8Rng::seed_from_u64(2));
        let b = glorot_uniform(10, 6, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(a, b);
        let limit = (6.0f64 / 16.0).sqrt();
        assert!(a.data().iter().all(|v| v.abs() < limit));
    }
}
