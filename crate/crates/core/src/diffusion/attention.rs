use nalgebra::DMatrix;

use crate::{Error, Result};

/// Row-wise `softmax(QKᵀ/√d)`.
pub fn attention_weights(q: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = q.ncols();
    if d == 0 {
        return Err(Error::invalid("attention needs a positive feature dimension"));
    }
    if k.ncols() != d {
        return Err(Error::DimensionMismatch(format!("queries have d={d}, keys have d={}", k.ncols())));
    }
    if q.nrows() == 0 || k.nrows() == 0 {
        return Err(Error::invalid("attention needs at least one query and one key"));
    }
    let mut logits = q * k.transpose() / (d as f64).sqrt();
    for mut row in logits.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    Ok(logits)
}

/// Attention with queries from the main branch and keys/values from a
/// reference branch: `softmax(QKᵀ/√d)V`, shape `l1 × d_v` for any key length.
pub fn kv_injection_attention(q: &DMatrix<f64>, k: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if v.nrows() != k.nrows() {
        return Err(Error::DimensionMismatch(format!("{} keys but {} values", k.nrows(), v.nrows())));
    }
    Ok(attention_weights(q, k)? * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-3.0..3.0))
    }

    #[test]
    fn derived_two_key_example() {
        let q = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let k = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let v = DMatrix::identity(2, 2);
        let out = kv_injection_attention(&q, &k, &v).unwrap();
        let s2 = 2.0f64.sqrt();
        let expected = s2.exp() / (s2.exp() + 1.0);
        assert!((out[(0, 0)] - expected).abs() < 1e-12);
        assert!((out[(0, 0)] - 0.8044).abs() < 5e-4 && (out[(0, 1)] - 0.1956).abs() < 5e-4);
    }

    #[test]
    fn single_key_and_uniform_logits() {
        let mut rng = rng_from_seed(1);
        let q = random(&mut rng, 3, 4);
        let v = random(&mut rng, 1, 4);
        let out = kv_injection_attention(&q, &random(&mut rng, 1, 4), &v).unwrap();
        for r in 0..3 {
            assert!((out.row(r) - v.row(0)).amax() < 1e-12);
        }
        let q = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let k = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 0.0, -2.0, 0.0, 5.0]);
        let v = random(&mut rng, 3, 2);
        let out = kv_injection_attention(&q, &k, &v).unwrap();
        let mean = v.row_mean();
        assert!((out.row(0) - mean).amax() < 1e-12);
    }

    #[test]
    fn shape_is_independent_of_key_length_and_rows_sum_to_one() {
        let mut rng = rng_from_seed(2);
        let q = random(&mut rng, 5, 8);
        for l2 in [1, 16, 256] {
            let k = random(&mut rng, l2, 8);
            let v = random(&mut rng, l2, 8);
            assert_eq!(kv_injection_attention(&q, &k, &v).unwrap().shape(), (5, 8));
            let w = attention_weights(&q, &k).unwrap();
            for row in w.row_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn errors() {
        let z = DMatrix::<f64>::zeros(2, 0);
        assert!(kv_injection_attention(&z, &z, &z).is_err());
        let a = DMatrix::<f64>::zeros(2, 3);
        let b = DMatrix::<f64>::zeros(2, 4);
        assert!(kv_injection_attention(&a, &b, &b).is_err());
        assert!(kv_injection_attention(&a, &a, &DMatrix::zeros(3, 3)).is_err());
    }
}
