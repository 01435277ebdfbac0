use crate::{Error, Result};

/// Decodes `2·p − 1` and renormalizes.
pub fn decode_normal(pixel: [f32; 3]) -> Result<[f64; 3]> {
    let v = pixel.map(|p| 2.0 * p as f64 - 1.0);
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if len < 1e-6 {
        return Err(Error::invalid("normal pixel decodes to a zero-length vector"));
    }
    Ok(v.map(|c| c / len))
}

/// Encodes a unit vector as `(v + 1) / 2`.
pub fn encode_normal(v: [f64; 3]) -> Result<[f32; 3]> {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if (len - 1.0).abs() > 1e-3 {
        return Err(Error::invalid(format!("normal vector has length {len}, expected 1")));
    }
    Ok(v.map(|c| ((c + 1.0) * 0.5).clamp(0.0, 1.0) as f32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn axis_decodes() {
        assert!(close(decode_normal([0.5, 0.5, 1.0]).unwrap(), [0.0, 0.0, 1.0], 1e-12));
        assert!(close(decode_normal([1.0, 0.5, 0.5]).unwrap(), [1.0, 0.0, 0.0], 1e-12));
    }

    #[test]
    fn off_axis_decode_renormalizes() {
        // 2p - 1 = (0.5, 0, 0.866) up to the rounding of 0.933
        let v = decode_normal([0.75, 0.5, 0.933]).unwrap();
        let raw = [0.5f64, 0.0, 2.0 * 0.933f32 as f64 - 1.0];
        let len = (raw[0] * raw[0] + raw[2] * raw[2]).sqrt();
        assert!(close(v, [0.5 / len, 0.0, raw[2] / len], 1e-12));
        assert!(close(v, [0.5, 0.0, 0.866], 1e-3));
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert!(decode_normal([0.5, 0.5, 0.5]).is_err());
        assert!(encode_normal([0.0, 0.0, 0.5]).is_err());
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(x in 0.0f32..=1.0, y in 0.0f32..=1.0, z in 0.55f32..=1.0) {
            let v = decode_normal([x, y, z]).unwrap();
            let p = encode_normal(v).unwrap();
            let back = decode_normal(p).unwrap();
            prop_assert!(close(back, v, 1e-3));
            prop_assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-12);
        }
    }
}
